use std::net::Ipv4Addr;

use thiserror::Error;

use super::direction::DirectionState;
use super::key::FlowKey;
use crate::packet::{PacketRecord, PROTO_ICMP, PROTO_UDP, TCP_FIN};
use crate::proto::{classify_l7, parse_dns, parse_ftp_return};
use crate::record::FlowRecord;

const DNS_PORT: u16 = 53;
const FTP_CONTROL_PORT: u16 = 21;

/// Upper bounds (inclusive) of the IP size buckets.
pub const SIZE_BUCKET_BOUNDS: [u16; 5] = [128, 256, 512, 1024, 1514];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FinalizeError {
    #[error("accumulator holds no packets")]
    EmptyAccumulator,
}

/// In-progress state of one flow.
#[derive(Debug, Clone)]
pub struct FlowAccumulator {
    pub key: FlowKey,
    pub client_ip: Ipv4Addr,
    pub client_port: u16,
    pub server_ip: Ipv4Addr,
    pub server_port: u16,
    /// client → server
    pub fwd: DirectionState,
    /// server → client
    pub rev: DirectionState,
    pub flow_start_micros: u64,
    pub flow_end_micros: u64,
    pub min_ttl: u8,
    pub max_ttl: u8,
    pub longest_pkt: u16,
    pub shortest_pkt: u16,
    pub size_buckets: [u64; 5],
    pub icmp_type: Option<(u8, u8)>,
    pub dns_query: Option<(u16, u16)>,
    pub dns_ttl_answer: Option<u32>,
    pub ftp_code: Option<u16>,
    /// Both sides have sent FIN; the next teardown segment closes the flow.
    pub closing: bool,
}

impl FlowAccumulator {
    /// Empty accumulator whose client is the source of `first`.
    pub fn new(first: &PacketRecord) -> Self {
        FlowAccumulator {
            key: FlowKey::from_packet(first),
            client_ip: first.src_ip,
            client_port: first.src_port,
            server_ip: first.dst_ip,
            server_port: first.dst_port,
            fwd: DirectionState::default(),
            rev: DirectionState::default(),
            flow_start_micros: first.ts_micros,
            flow_end_micros: first.ts_micros,
            min_ttl: u8::MAX,
            max_ttl: 0,
            longest_pkt: 0,
            shortest_pkt: u16::MAX,
            size_buckets: [0; 5],
            icmp_type: None,
            dns_query: None,
            dns_ttl_answer: None,
            ftp_code: None,
            closing: false,
        }
    }

    pub fn packets(&self) -> u64 {
        self.fwd.pkts + self.rev.pkts
    }

    pub fn is_from_client(&self, pkt: &PacketRecord) -> bool {
        pkt.src_ip == self.client_ip && pkt.src_port == self.client_port
    }

    /// Fold one packet of this flow into the accumulator.
    pub fn update(&mut self, pkt: &PacketRecord) {
        if self.is_from_client(pkt) {
            self.fwd.record(pkt);
        } else {
            self.rev.record(pkt);
        }
        self.flow_start_micros = self.flow_start_micros.min(pkt.ts_micros);
        self.flow_end_micros = self.flow_end_micros.max(pkt.ts_micros);
        self.min_ttl = self.min_ttl.min(pkt.ttl);
        self.max_ttl = self.max_ttl.max(pkt.ttl);
        self.longest_pkt = self.longest_pkt.max(pkt.ip_total_len);
        self.shortest_pkt = self.shortest_pkt.min(pkt.ip_total_len);
        if let Some(b) = SIZE_BUCKET_BOUNDS.iter().position(|&hi| pkt.ip_total_len <= hi) {
            self.size_buckets[b] += 1;
        }
        if pkt.protocol == PROTO_ICMP && self.icmp_type.is_none() {
            self.icmp_type = Some((pkt.icmp_type, pkt.icmp_code));
        }
        self.enrich(pkt);
    }

    fn enrich(&mut self, pkt: &PacketRecord) {
        if pkt.payload_prefix.is_empty() {
            return;
        }
        if pkt.protocol == PROTO_UDP && (pkt.src_port == DNS_PORT || pkt.dst_port == DNS_PORT) {
            // Truncated or malformed messages leave the fields untouched.
            if let Ok(info) = parse_dns(&pkt.payload_prefix) {
                if self.dns_query.is_none() {
                    self.dns_query = Some((info.query_id, info.query_type));
                }
                if self.dns_ttl_answer.is_none() {
                    self.dns_ttl_answer = info.ttl_first_a;
                }
            }
        } else if pkt.is_tcp() && pkt.src_port == FTP_CONTROL_PORT {
            if let Some(code) = parse_ftp_return(&pkt.payload_prefix) {
                self.ftp_code = Some(code);
            }
        }
    }

    pub fn both_fins_seen(&self) -> bool {
        self.fwd.tcp_flags_cum & TCP_FIN != 0 && self.rev.tcp_flags_cum & TCP_FIN != 0
    }

    /// Build the exported record.
    pub fn finalize(&self) -> Result<FlowRecord, FinalizeError> {
        if self.packets() == 0 {
            return Err(FinalizeError::EmptyAccumulator);
        }
        let start_ms = self.flow_start_micros / 1000;
        let end_ms = self.flow_end_micros / 1000;
        let (dur_in, dur_out) = (self.fwd.duration_ms(), self.rev.duration_ms());
        let iat_fwd = self.fwd.iat_summary();
        let iat_rev = self.rev.iat_summary();
        let (icmp_t, icmp_c) = self.icmp_type.unwrap_or((0, 0));
        let (dns_id, dns_type) = self.dns_query.unwrap_or((0, 0));

        Ok(FlowRecord {
            ipv4_src_addr: self.client_ip,
            ipv4_dst_addr: self.server_ip,
            l4_src_port: self.client_port,
            l4_dst_port: self.server_port,
            protocol: self.key.protocol,
            l7_proto: classify_l7(&self.key, self.key.protocol).code,
            in_bytes: self.fwd.bytes,
            out_bytes: self.rev.bytes,
            in_pkts: self.fwd.pkts,
            out_pkts: self.rev.pkts,
            flow_duration_milliseconds: end_ms - start_ms,
            tcp_flags: self.fwd.tcp_flags_cum | self.rev.tcp_flags_cum,
            client_tcp_flags: self.fwd.tcp_flags_cum,
            server_tcp_flags: self.rev.tcp_flags_cum,
            duration_in: dur_in,
            duration_out: dur_out,
            min_ttl: self.min_ttl,
            max_ttl: self.max_ttl,
            longest_flow_pkt: self.longest_pkt,
            shortest_flow_pkt: self.shortest_pkt,
            min_ip_pkt_len: self.shortest_pkt,
            max_ip_pkt_len: self.longest_pkt,
            src_to_dst_second_bytes: per_second(self.fwd.bytes, dur_in),
            dst_to_src_second_bytes: per_second(self.rev.bytes, dur_out),
            retransmitted_in_bytes: self.fwd.retrans_bytes,
            retransmitted_in_pkts: self.fwd.retrans_pkts,
            retransmitted_out_bytes: self.rev.retrans_bytes,
            retransmitted_out_pkts: self.rev.retrans_pkts,
            src_to_dst_avg_throughput: per_second(self.fwd.bytes * 8, dur_in),
            dst_to_src_avg_throughput: per_second(self.rev.bytes * 8, dur_out),
            num_pkts_up_to_128_bytes: self.size_buckets[0],
            num_pkts_128_to_256_bytes: self.size_buckets[1],
            num_pkts_256_to_512_bytes: self.size_buckets[2],
            num_pkts_512_to_1024_bytes: self.size_buckets[3],
            num_pkts_1024_to_1514_bytes: self.size_buckets[4],
            tcp_win_max_in: self.fwd.max_window,
            tcp_win_max_out: self.rev.max_window,
            icmp_type: u16::from(icmp_t) * 256 + u16::from(icmp_c),
            icmp_ipv4_type: icmp_t,
            dns_query_id: dns_id,
            dns_query_type: dns_type,
            dns_ttl_answer: self.dns_ttl_answer.unwrap_or(0),
            ftp_command_ret_code: self.ftp_code.unwrap_or(0),
            flow_start_milliseconds: start_ms,
            flow_end_milliseconds: end_ms,
            src_to_dst_iat_min: iat_fwd.min,
            src_to_dst_iat_max: iat_fwd.max,
            src_to_dst_iat_avg: iat_fwd.avg,
            src_to_dst_iat_stddev: iat_fwd.stddev,
            dst_to_src_iat_min: iat_rev.min,
            dst_to_src_iat_max: iat_rev.max,
            dst_to_src_iat_avg: iat_rev.avg,
            dst_to_src_iat_stddev: iat_rev.stddev,
            label: None,
        })
    }
}

/// `amount` per second over `duration_ms`, with durations under one second
/// counted as one second. Truncates toward zero.
fn per_second(amount: u64, duration_ms: u64) -> u64 {
    if duration_ms < 1000 {
        amount
    } else {
        (u128::from(amount) * 1000 / u128::from(duration_ms)) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{PROTO_TCP, PROTO_UDP};

    fn pkt(ts_ms: u64, size: u16) -> PacketRecord {
        PacketRecord {
            ts_micros: ts_ms * 1000,
            src_ip: Ipv4Addr::new(10, 0, 0, 1),
            dst_ip: Ipv4Addr::new(10, 0, 0, 2),
            src_port: 4000,
            dst_port: 9999,
            protocol: PROTO_UDP,
            ip_total_len: size,
            ttl: 64,
            tcp_flags: 0,
            tcp_seq: 0,
            tcp_window: 0,
            payload_len: size.saturating_sub(28),
            payload_prefix: Vec::new(),
            icmp_type: 0,
            icmp_code: 0,
        }
    }

    fn accumulate(pkts: &[PacketRecord]) -> FlowAccumulator {
        let mut acc = FlowAccumulator::new(&pkts[0]);
        for p in pkts {
            acc.update(p);
        }
        acc
    }

    #[test]
    fn icmp_type_encoding() {
        let mut p = pkt(0, 84);
        p.protocol = PROTO_ICMP;
        p.src_port = 0;
        p.dst_port = 0;
        p.icmp_type = 8;
        let rec = accumulate(&[p]).finalize().unwrap();
        assert_eq!(rec.icmp_type, 2048);
        assert_eq!(rec.icmp_ipv4_type, 8);
    }

    #[test]
    fn duration_from_truncated_ms() {
        let rec = accumulate(&[pkt(1_600_000_000_000, 60), pkt(1_600_000_002_500, 60)]).finalize().unwrap();
        assert_eq!(rec.flow_duration_milliseconds, 2500);
        assert_eq!(rec.duration_in, 2500);
        assert_eq!(rec.duration_out, 0);
    }

    #[test]
    fn size_buckets_and_extremes() {
        let rec = accumulate(&[pkt(0, 60), pkt(1, 200), pkt(2, 1500)]).finalize().unwrap();
        assert_eq!(
            [
                rec.num_pkts_up_to_128_bytes,
                rec.num_pkts_128_to_256_bytes,
                rec.num_pkts_256_to_512_bytes,
                rec.num_pkts_512_to_1024_bytes,
                rec.num_pkts_1024_to_1514_bytes,
            ],
            [1, 1, 0, 0, 1]
        );
        assert_eq!(rec.shortest_flow_pkt, 60);
        assert_eq!(rec.longest_flow_pkt, 1500);
        assert_eq!(rec.min_ip_pkt_len, 60);
        assert_eq!(rec.max_ip_pkt_len, 1500);
    }

    #[test]
    fn jumbo_packets_fall_in_no_bucket() {
        let acc = accumulate(&[pkt(0, 9000), pkt(1, 100)]);
        assert_eq!(acc.size_buckets.iter().sum::<u64>(), 1);
    }

    #[test]
    fn per_second_rates() {
        // 1,000,000 bytes over 2.0 s
        assert_eq!(per_second(1_000_000, 2000), 500_000);
        assert_eq!(per_second(8_000_000, 2000), 4_000_000);
        assert_eq!(per_second(1234, 0), 1234);
        assert_eq!(per_second(1234, 999), 1234);
    }

    #[test]
    fn direction_follows_first_packet() {
        let a = pkt(0, 100);
        let mut b = pkt(5, 300);
        std::mem::swap(&mut b.src_ip, &mut b.dst_ip);
        std::mem::swap(&mut b.src_port, &mut b.dst_port);
        let rec = accumulate(&[a, b]).finalize().unwrap();
        assert_eq!(rec.ipv4_src_addr, Ipv4Addr::new(10, 0, 0, 1));
        assert_eq!((rec.in_bytes, rec.out_bytes), (100, 300));
        assert_eq!((rec.in_pkts, rec.out_pkts), (1, 1));
    }

    #[test]
    fn ftp_keeps_last_code() {
        let mut a = pkt(0, 80);
        a.protocol = PROTO_TCP;
        a.src_port = 21;
        a.dst_port = 40000;
        a.payload_prefix = b"220 ready\r\n".to_vec();
        let mut b = a.clone();
        b.payload_prefix = b"331 password\r\n".to_vec();
        let mut c = a.clone();
        c.src_port = 40000;
        c.dst_port = 21;
        std::mem::swap(&mut c.src_ip, &mut c.dst_ip);
        c.payload_prefix = b"230 fake from client\r\n".to_vec();
        let rec = accumulate(&[a, b, c]).finalize().unwrap();
        assert_eq!(rec.ftp_command_ret_code, 331);
        assert_eq!(rec.l7_proto, 1);
    }

    #[test]
    fn enrichment_defaults_to_zero() {
        let rec = accumulate(&[pkt(0, 100)]).finalize().unwrap();
        assert_eq!(
            (rec.dns_query_id, rec.dns_query_type, rec.dns_ttl_answer, rec.ftp_command_ret_code, rec.l7_proto),
            (0, 0, 0, 0, 0)
        );
    }
}
