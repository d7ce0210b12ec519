//! Brute-force reference implementations.
//!
//! Flows are regrouped from the raw schedule by keeping every packet of
//! every open group in a list; features are then computed from those lists
//! with plain loops (full gap vectors, two-pass variance, 64-bit unwrapped
//! TCP sequence numbers). Labels are chosen by scanning every event.

use std::net::Ipv4Addr;

use flowlens_core::dataset::GroundTruthEvent;
use flowlens_core::flow::{FlowCache, MeterConfig};
use flowlens_core::packet::{PacketRecord, PROTO_ICMP, PROTO_TCP, PROTO_UDP};
use flowlens_core::proto::{classify_l7, parse_dns, parse_ftp_return};
use flowlens_core::record::{FlowRecord, Label, FLOW_COLUMNS};
use flowlens_core::FlowKey;

const FIN: u8 = 0x01;
const SYN: u8 = 0x02;
const RST: u8 = 0x04;

type Side = (Ipv4Addr, u16);

/// Unordered identity of a conversation.
fn conversation(p: &PacketRecord) -> (Side, Side, u8) {
    let a = (p.src_ip, p.src_port);
    let b = (p.dst_ip, p.dst_port);
    if a <= b {
        (a, b, p.protocol)
    } else {
        (b, a, p.protocol)
    }
}

struct Group {
    id: (Side, Side, u8),
    packets: Vec<PacketRecord>,
    closing: bool,
}

impl Group {
    fn client(&self) -> Side {
        (self.packets[0].src_ip, self.packets[0].src_port)
    }

    fn export_at(&self, cfg: &MeterConfig) -> u64 {
        let first = self.packets.iter().map(|p| p.ts_micros).min().unwrap();
        let last = self.packets.iter().map(|p| p.ts_micros).max().unwrap();
        (first + cfg.active_timeout_ms * 1000).min(last + cfg.idle_timeout_ms * 1000)
    }

    fn fin_both_ways(&self) -> bool {
        let client = self.client();
        let tcp_fin = |p: &&PacketRecord| p.protocol == PROTO_TCP && p.tcp_flags & FIN != 0;
        let c = self.packets.iter().filter(tcp_fin).any(|p| (p.src_ip, p.src_port) == client);
        let s = self.packets.iter().filter(tcp_fin).any(|p| (p.src_ip, p.src_port) != client);
        c && s
    }
}

/// Group a schedule into flows with the same export rules as the meter and
/// compute every feature naively.
pub fn oracle_flows(packets: &[PacketRecord], cfg: &MeterConfig) -> Vec<FlowRecord> {
    let mut open: Vec<Group> = Vec::new();
    let mut done: Vec<Vec<PacketRecord>> = Vec::new();

    for p in packets {
        // timeouts
        let mut i = 0;
        while i < open.len() {
            if open[i].export_at(cfg) <= p.ts_micros {
                done.push(open.remove(i).packets);
            } else {
                i += 1;
            }
        }

        let id = conversation(p);
        let pos = open.iter().position(|g| g.id == id);
        if let Some(i) = pos {
            if open[i].closing {
                let teardown = p.protocol == PROTO_TCP && p.tcp_flags & SYN == 0 && p.payload_len == 0;
                let mut g = open.remove(i);
                if teardown {
                    g.packets.push(p.clone());
                    done.push(g.packets);
                    continue;
                }
                done.push(g.packets);
            }
        }
        let i = match open.iter().position(|g| g.id == id) {
            Some(i) => i,
            None => {
                open.push(Group { id, packets: Vec::new(), closing: false });
                open.len() - 1
            }
        };
        open[i].packets.push(p.clone());

        if cfg.tcp_early_export && p.protocol == PROTO_TCP {
            if p.tcp_flags & RST != 0 {
                done.push(open.remove(i).packets);
            } else if p.tcp_flags & FIN != 0 && open[i].fin_both_ways() {
                open[i].closing = true;
            }
        }
    }
    done.extend(open.into_iter().map(|g| g.packets));
    done.iter().map(|g| features(g)).collect()
}

/// Population statistics of a gap list (ms), rounded to whole ms.
fn gap_stats(gaps_us: &[u64]) -> (u64, u64, u64, u64) {
    if gaps_us.is_empty() {
        return (0, 0, 0, 0);
    }
    let ms: Vec<f64> = gaps_us.iter().map(|&g| g as f64 / 1000.0).collect();
    let n = ms.len() as f64;
    let mean = ms.iter().sum::<f64>() / n;
    let var = ms.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
    let min = ms.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min.round() as u64, max.round() as u64, mean.round() as u64, var.sqrt().round() as u64)
}

/// Pick the 64-bit value congruent to `v` mod 2^32 nearest to `near`.
fn unwrap_seq(v: u32, near: i64) -> i64 {
    let base = near & !0xffff_ffff;
    [base - (1 << 32), base, base + (1 << 32)]
        .into_iter()
        .map(|b| b + i64::from(v))
        .min_by_key(|c| (c - near).abs())
        .unwrap()
}

struct DirFeatures {
    pkts: u64,
    bytes: u64,
    duration_ms: u64,
    iat: (u64, u64, u64, u64),
    flags: u8,
    max_window: u16,
    retrans_pkts: u64,
    retrans_bytes: u64,
}

fn direction(pkts: &[&PacketRecord]) -> DirFeatures {
    let mut d = DirFeatures {
        pkts: pkts.len() as u64,
        bytes: pkts.iter().map(|p| u64::from(p.ip_total_len)).sum(),
        duration_ms: 0,
        iat: (0, 0, 0, 0),
        flags: 0,
        max_window: 0,
        retrans_pkts: 0,
        retrans_bytes: 0,
    };
    if pkts.is_empty() {
        return d;
    }
    let first_ms = pkts.iter().map(|p| p.ts_micros / 1000).min().unwrap();
    let last_ms = pkts.iter().map(|p| p.ts_micros / 1000).max().unwrap();
    d.duration_ms = last_ms - first_ms;
    let gaps: Vec<u64> = pkts.windows(2).map(|w| w[1].ts_micros.saturating_sub(w[0].ts_micros)).collect();
    d.iat = gap_stats(&gaps);

    let mut horizon: Option<i64> = None;
    for p in pkts.iter().filter(|p| p.protocol == PROTO_TCP) {
        d.flags |= p.tcp_flags;
        d.max_window = d.max_window.max(p.tcp_window);
        if p.payload_len == 0 {
            continue;
        }
        let start = unwrap_seq(p.tcp_seq, horizon.unwrap_or(i64::from(p.tcp_seq)));
        let end = start + i64::from(p.payload_len);
        match horizon {
            Some(h) if end <= h => {
                d.retrans_pkts += 1;
                d.retrans_bytes += u64::from(p.ip_total_len);
            }
            _ => horizon = Some(end),
        }
    }
    d
}

fn rate(amount: u64, duration_ms: u64) -> u64 {
    if duration_ms >= 1000 {
        (amount as u128 * 1000 / duration_ms as u128) as u64
    } else {
        amount
    }
}

fn features(pkts: &[PacketRecord]) -> FlowRecord {
    let first = &pkts[0];
    let client = (first.src_ip, first.src_port);
    let fwd: Vec<&PacketRecord> = pkts.iter().filter(|p| (p.src_ip, p.src_port) == client).collect();
    let rev: Vec<&PacketRecord> = pkts.iter().filter(|p| (p.src_ip, p.src_port) != client).collect();
    let (f, r) = (direction(&fwd), direction(&rev));

    let start_ms = pkts.iter().map(|p| p.ts_micros).min().unwrap() / 1000;
    let end_ms = pkts.iter().map(|p| p.ts_micros).max().unwrap() / 1000;
    let longest = pkts.iter().map(|p| p.ip_total_len).max().unwrap();
    let shortest = pkts.iter().map(|p| p.ip_total_len).min().unwrap();
    let bucket = |lo: u16, hi: u16| pkts.iter().filter(|p| p.ip_total_len > lo && p.ip_total_len <= hi).count() as u64;

    let (icmp_t, icmp_c) = if first.protocol == PROTO_ICMP { (first.icmp_type, first.icmp_code) } else { (0, 0) };

    let mut dns_id = None;
    let mut dns_ttl = None;
    let mut ftp = 0;
    for p in pkts.iter().filter(|p| !p.payload_prefix.is_empty()) {
        if p.protocol == PROTO_UDP && (p.src_port == 53 || p.dst_port == 53) {
            if let Ok(info) = parse_dns(&p.payload_prefix) {
                dns_id.get_or_insert((info.query_id, info.query_type));
                if dns_ttl.is_none() {
                    dns_ttl = info.ttl_first_a;
                }
            }
        } else if p.protocol == PROTO_TCP && p.src_port == 21 {
            if let Some(code) = parse_ftp_return(&p.payload_prefix) {
                ftp = code;
            }
        }
    }
    let (dns_id, dns_type) = dns_id.unwrap_or((0, 0));
    let key = FlowKey::new(first.src_ip, first.src_port, first.dst_ip, first.dst_port, first.protocol);

    FlowRecord {
        ipv4_src_addr: first.src_ip,
        ipv4_dst_addr: first.dst_ip,
        l4_src_port: first.src_port,
        l4_dst_port: first.dst_port,
        protocol: first.protocol,
        l7_proto: classify_l7(&key, first.protocol).code,
        in_bytes: f.bytes,
        out_bytes: r.bytes,
        in_pkts: f.pkts,
        out_pkts: r.pkts,
        flow_duration_milliseconds: end_ms - start_ms,
        tcp_flags: f.flags | r.flags,
        client_tcp_flags: f.flags,
        server_tcp_flags: r.flags,
        duration_in: f.duration_ms,
        duration_out: r.duration_ms,
        min_ttl: pkts.iter().map(|p| p.ttl).min().unwrap(),
        max_ttl: pkts.iter().map(|p| p.ttl).max().unwrap(),
        longest_flow_pkt: longest,
        shortest_flow_pkt: shortest,
        min_ip_pkt_len: shortest,
        max_ip_pkt_len: longest,
        src_to_dst_second_bytes: rate(f.bytes, f.duration_ms),
        dst_to_src_second_bytes: rate(r.bytes, r.duration_ms),
        retransmitted_in_bytes: f.retrans_bytes,
        retransmitted_in_pkts: f.retrans_pkts,
        retransmitted_out_bytes: r.retrans_bytes,
        retransmitted_out_pkts: r.retrans_pkts,
        src_to_dst_avg_throughput: rate(f.bytes * 8, f.duration_ms),
        dst_to_src_avg_throughput: rate(r.bytes * 8, r.duration_ms),
        num_pkts_up_to_128_bytes: bucket(0, 128),
        num_pkts_128_to_256_bytes: bucket(128, 256),
        num_pkts_256_to_512_bytes: bucket(256, 512),
        num_pkts_512_to_1024_bytes: bucket(512, 1024),
        num_pkts_1024_to_1514_bytes: bucket(1024, 1514),
        tcp_win_max_in: f.max_window,
        tcp_win_max_out: r.max_window,
        icmp_type: u16::from(icmp_t) << 8 | u16::from(icmp_c),
        icmp_ipv4_type: icmp_t,
        dns_query_id: dns_id,
        dns_query_type: dns_type,
        dns_ttl_answer: dns_ttl.unwrap_or(0),
        ftp_command_ret_code: ftp,
        flow_start_milliseconds: start_ms,
        flow_end_milliseconds: end_ms,
        src_to_dst_iat_min: f.iat.0,
        src_to_dst_iat_max: f.iat.1,
        src_to_dst_iat_avg: f.iat.2,
        src_to_dst_iat_stddev: f.iat.3,
        dst_to_src_iat_min: r.iat.0,
        dst_to_src_iat_max: r.iat.1,
        dst_to_src_iat_avg: r.iat.2,
        dst_to_src_iat_stddev: r.iat.3,
        label: None,
    }
}

/// Run the real flow meter over a schedule and flush it.
pub fn meter_flows(packets: &[PacketRecord], cfg: &MeterConfig) -> Vec<FlowRecord> {
    let mut cache = FlowCache::new(*cfg);
    let mut out = Vec::new();
    for p in packets {
        out.extend(cache.observe(p));
    }
    out.extend(cache.flush());
    out
}

fn canonical(mut v: Vec<FlowRecord>) -> Vec<FlowRecord> {
    v.sort_by_cached_key(|r| (r.sort_key(), r.values()));
    v
}

/// Compare two record sets irrespective of emission order. All columns must
/// match exactly except the IAT columns, which may differ by 1 ms of rounding.
pub fn diff_records(actual: &[FlowRecord], expected: &[FlowRecord]) -> Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!("{} records, expected {}", actual.len(), expected.len()));
    }
    let a = canonical(actual.to_vec());
    let e = canonical(expected.to_vec());
    for (i, (ra, re)) in a.iter().zip(&e).enumerate() {
        for ((col, va), ve) in FLOW_COLUMNS.iter().zip(ra.values()).zip(re.values()) {
            if va == ve {
                continue;
            }
            let iat_tolerant = col.contains("_IAT_")
                && matches!((va.parse::<i64>(), ve.parse::<i64>()), (Ok(x), Ok(y)) if (x - y).abs() <= 1);
            if !iat_tolerant {
                return Err(format!("record {i}: {col} = {va}, expected {ve}"));
            }
        }
    }
    Ok(())
}

fn ports_agree(event_port: u16, flow_port: u16) -> bool {
    event_port == 0 || event_port == flow_port
}

/// Label each flow by scanning all events: tuple match in either
/// orientation, closed-interval overlap, then largest overlap, earliest
/// start and smallest name.
pub fn oracle_labels(flows: &[FlowRecord], events: &[GroundTruthEvent]) -> Vec<Label> {
    flows
        .iter()
        .map(|f| {
            let mut best: Option<(&GroundTruthEvent, u64)> = None;
            for e in events {
                if e.protocol != 0 && e.protocol != f.protocol {
                    continue;
                }
                let same = e.src_ip == f.ipv4_src_addr
                    && e.dst_ip == f.ipv4_dst_addr
                    && ports_agree(e.src_port, f.l4_src_port)
                    && ports_agree(e.dst_port, f.l4_dst_port);
                let flipped = e.src_ip == f.ipv4_dst_addr
                    && e.dst_ip == f.ipv4_src_addr
                    && ports_agree(e.src_port, f.l4_dst_port)
                    && ports_agree(e.dst_port, f.l4_src_port);
                if !same && !flipped {
                    continue;
                }
                let lo = e.start_ms.max(f.flow_start_milliseconds);
                let hi = e.end_ms.min(f.flow_end_milliseconds);
                if lo > hi {
                    continue;
                }
                let ov = hi - lo;
                let wins = match best {
                    None => true,
                    Some((b, bo)) => {
                        ov > bo
                            || (ov == bo && e.start_ms < b.start_ms)
                            || (ov == bo && e.start_ms == b.start_ms && e.attack < b.attack)
                    }
                };
                if wins {
                    best = Some((e, ov));
                }
            }
            best.map_or_else(Label::benign, |(e, _)| Label::class(e.attack.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::{ip, udp, BASE_TS_MICROS};

    #[test]
    fn three_packet_iat() {
        let pk: Vec<_> = [0u64, 10, 30]
            .iter()
            .map(|ms| udp(BASE_TS_MICROS + ms * 1000, (ip(10, 0, 0, 1), 5000), (ip(10, 0, 0, 2), 6000), 10, None))
            .collect();
        let r = &oracle_flows(&pk, &MeterConfig::default())[0];
        assert_eq!(
            (r.src_to_dst_iat_min, r.src_to_dst_iat_max, r.src_to_dst_iat_avg, r.src_to_dst_iat_stddev),
            (10, 20, 15, 5)
        );
    }

    #[test]
    fn single_packet_zeroes() {
        let pk = [udp(BASE_TS_MICROS, (ip(10, 0, 0, 1), 5000), (ip(10, 0, 0, 2), 6000), 10, None)];
        let r = &oracle_flows(&pk, &MeterConfig::default())[0];
        assert_eq!(r.flow_duration_milliseconds, 0);
        assert_eq!(r.src_to_dst_iat_max + r.src_to_dst_iat_stddev + r.dst_to_src_iat_avg, 0);
    }

    #[test]
    fn unwrap_near_boundary() {
        assert_eq!(unwrap_seq(5, 0xffff_fff0), (1 << 32) + 5);
        assert_eq!(unwrap_seq(0xffff_fff0, (1 << 32) + 5), 0xffff_fff0);
    }

    #[test]
    fn split_on_timeouts() {
        let pk: Vec<_> = (0..600u64)
            .map(|s| udp(BASE_TS_MICROS + s * 1_000_000, (ip(10, 0, 0, 1), 5000), (ip(10, 0, 0, 2), 6000), 10, None))
            .collect();
        assert_eq!(oracle_flows(&pk, &MeterConfig::default()).len(), 5);
    }
}
