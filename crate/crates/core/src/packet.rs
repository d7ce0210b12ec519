//! Ethernet / IPv4 / transport header decoding.

use std::net::Ipv4Addr;

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_VLAN: u16 = 0x8100;

pub const PROTO_ICMP: u8 = 1;
pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

pub const TCP_FIN: u8 = 0x01;
pub const TCP_SYN: u8 = 0x02;
pub const TCP_RST: u8 = 0x04;
pub const TCP_PSH: u8 = 0x08;
pub const TCP_ACK: u8 = 0x10;

/// Maximum number of payload bytes retained per packet.
pub const PAYLOAD_PREFIX_CAP: usize = 512;

const ETH_HEADER_LEN: usize = 14;
const VLAN_TAG_LEN: usize = 4;

/// One decoded IPv4 packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    /// Capture timestamp, microseconds since the Unix epoch.
    pub ts_micros: u64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    /// 0 unless TCP or UDP.
    pub src_port: u16,
    /// 0 unless TCP or UDP.
    pub dst_port: u16,
    pub protocol: u8,
    /// IPv4 total length field.
    pub ip_total_len: u16,
    pub ttl: u8,
    pub tcp_flags: u8,
    pub tcp_seq: u32,
    pub tcp_window: u16,
    /// Transport payload length as declared by the headers.
    pub payload_len: u16,
    /// Up to [`PAYLOAD_PREFIX_CAP`] captured payload bytes.
    pub payload_prefix: Vec<u8>,
    pub icmp_type: u8,
    pub icmp_code: u8,
}

impl PacketRecord {
    pub fn is_tcp(&self) -> bool {
        self.protocol == PROTO_TCP
    }

    pub fn has_flag(&self, flag: u8) -> bool {
        self.is_tcp() && self.tcp_flags & flag != 0
    }
}

/// Why a frame did not produce a [`PacketRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    NotIpv4,
    Truncated,
    MalformedIp,
    NonInitialFragment,
}

fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

fn be32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decode one Ethernet frame. A single 802.1Q tag is removed before the
/// EtherType is dispatched.
pub fn decode_ethernet(frame: &[u8], ts_micros: u64) -> Result<PacketRecord, SkipReason> {
    if frame.len() < ETH_HEADER_LEN {
        return Err(SkipReason::Truncated);
    }
    let mut ethertype = be16(frame, 12);
    let mut offset = ETH_HEADER_LEN;
    if ethertype == ETHERTYPE_VLAN {
        if frame.len() < ETH_HEADER_LEN + VLAN_TAG_LEN {
            return Err(SkipReason::Truncated);
        }
        ethertype = be16(frame, 16);
        offset += VLAN_TAG_LEN;
    }
    if ethertype != ETHERTYPE_IPV4 {
        return Err(SkipReason::NotIpv4);
    }
    decode_ipv4(&frame[offset..], ts_micros)
}

/// Decode an IPv4 datagram (options honored through IHL).
pub fn decode_ipv4(ip: &[u8], ts_micros: u64) -> Result<PacketRecord, SkipReason> {
    if ip.len() < 20 {
        return Err(SkipReason::Truncated);
    }
    if ip[0] >> 4 != 4 {
        return Err(SkipReason::MalformedIp);
    }
    let ihl = usize::from(ip[0] & 0x0f) * 4;
    if ihl < 20 {
        return Err(SkipReason::MalformedIp);
    }
    if ip.len() < ihl {
        return Err(SkipReason::Truncated);
    }
    let total_len = be16(ip, 2);
    if usize::from(total_len) < ihl {
        return Err(SkipReason::MalformedIp);
    }
    let frag_offset = be16(ip, 6) & 0x1fff;
    if frag_offset != 0 {
        return Err(SkipReason::NonInitialFragment);
    }

    let protocol = ip[9];
    let mut rec = PacketRecord {
        ts_micros,
        src_ip: Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]),
        dst_ip: Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]),
        src_port: 0,
        dst_port: 0,
        protocol,
        ip_total_len: total_len,
        ttl: ip[8],
        tcp_flags: 0,
        tcp_seq: 0,
        tcp_window: 0,
        payload_len: 0,
        payload_prefix: Vec::new(),
        icmp_type: 0,
        icmp_code: 0,
    };

    // Bytes actually present after the IP header, bounded by the declared length.
    let l4_declared = usize::from(total_len) - ihl;
    let l4 = &ip[ihl..ip.len().min(ihl + l4_declared)];

    let header_len = match protocol {
        PROTO_TCP => {
            if l4.len() < 20 {
                return Err(SkipReason::Truncated);
            }
            let data_offset = usize::from(l4[12] >> 4) * 4;
            if data_offset < 20 || data_offset > l4_declared {
                return Err(SkipReason::MalformedIp);
            }
            if l4.len() < data_offset {
                return Err(SkipReason::Truncated);
            }
            rec.src_port = be16(l4, 0);
            rec.dst_port = be16(l4, 2);
            rec.tcp_seq = be32(l4, 4);
            rec.tcp_flags = l4[13];
            rec.tcp_window = be16(l4, 14);
            data_offset
        }
        PROTO_UDP => {
            if l4.len() < 8 {
                return Err(SkipReason::Truncated);
            }
            rec.src_port = be16(l4, 0);
            rec.dst_port = be16(l4, 2);
            8
        }
        PROTO_ICMP => {
            if l4.len() < 4 {
                return Err(SkipReason::Truncated);
            }
            rec.icmp_type = l4[0];
            rec.icmp_code = l4[1];
            8.min(l4_declared)
        }
        _ => 0,
    };

    rec.payload_len = (l4_declared.saturating_sub(header_len)) as u16;
    if l4.len() > header_len {
        let end = l4.len().min(header_len + PAYLOAD_PREFIX_CAP);
        rec.payload_prefix = l4[header_len..end].to_vec();
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tcp_syn_frame() -> Vec<u8> {
        let mut f = vec![0u8; 54];
        f[12] = 0x08;
        f[13] = 0x00;
        let ip = &mut f[14..34];
        ip[0] = 0x45;
        ip[2..4].copy_from_slice(&40u16.to_be_bytes());
        ip[8] = 64;
        ip[9] = PROTO_TCP;
        ip[12..16].copy_from_slice(&[10, 0, 0, 1]);
        ip[16..20].copy_from_slice(&[10, 0, 0, 2]);
        let tcp = &mut f[34..54];
        tcp[0..2].copy_from_slice(&1234u16.to_be_bytes());
        tcp[2..4].copy_from_slice(&80u16.to_be_bytes());
        tcp[12] = 0x50;
        tcp[13] = TCP_SYN;
        tcp[14..16].copy_from_slice(&65535u16.to_be_bytes());
        f
    }

    #[test]
    fn decodes_tcp_syn() {
        let rec = decode_ethernet(&tcp_syn_frame(), 1_600_000_000_000_000).unwrap();
        assert_eq!(rec.ts_micros, 1_600_000_000_000_000);
        assert_eq!(rec.protocol, PROTO_TCP);
        assert_eq!(rec.src_ip, Ipv4Addr::new(10, 0, 0, 1));
        assert_eq!(rec.dst_ip, Ipv4Addr::new(10, 0, 0, 2));
        assert_eq!((rec.src_port, rec.dst_port), (1234, 80));
        assert_eq!(rec.tcp_flags, TCP_SYN);
        assert_eq!(rec.tcp_seq, 0);
        assert_eq!(rec.tcp_window, 65535);
        assert_eq!(rec.ttl, 64);
        assert_eq!(rec.ip_total_len, 40);
        assert_eq!(rec.payload_len, 0);
    }

    #[test]
    fn arp_is_skipped() {
        let mut f = tcp_syn_frame();
        f[12] = 0x08;
        f[13] = 0x06;
        assert_eq!(decode_ethernet(&f, 0), Err(SkipReason::NotIpv4));
    }

    #[test]
    fn vlan_tag_removed_once() {
        let plain = tcp_syn_frame();
        let mut tagged = plain[..12].to_vec();
        tagged.extend_from_slice(&[0x81, 0x00, 0x00, 0x07]);
        tagged.extend_from_slice(&plain[12..]);
        let rec = decode_ethernet(&tagged, 5).unwrap();
        assert_eq!(rec.dst_port, 80);

        let mut double = plain[..12].to_vec();
        double.extend_from_slice(&[0x81, 0x00, 0x00, 0x07, 0x81, 0x00, 0x00, 0x08]);
        double.extend_from_slice(&plain[12..]);
        assert_eq!(decode_ethernet(&double, 5), Err(SkipReason::NotIpv4));
    }

    #[test]
    fn ip_options_shift_transport_header() {
        let plain = tcp_syn_frame();
        let mut f = plain[..34].to_vec();
        f[14] = 0x46;
        f[16..18].copy_from_slice(&44u16.to_be_bytes());
        f.extend_from_slice(&[1, 1, 1, 0]);
        f.extend_from_slice(&plain[34..]);
        let rec = decode_ethernet(&f, 0).unwrap();
        assert_eq!((rec.src_port, rec.dst_port), (1234, 80));
        assert_eq!(rec.ip_total_len, 44);
        assert_eq!(rec.payload_len, 0);
    }

    #[test]
    fn later_fragments_skipped() {
        let mut f = tcp_syn_frame();
        f[14 + 6..14 + 8].copy_from_slice(&0x0010u16.to_be_bytes());
        assert_eq!(decode_ethernet(&f, 0), Err(SkipReason::NonInitialFragment));
    }

    #[test]
    fn short_frames_skipped() {
        let f = tcp_syn_frame();
        assert_eq!(decode_ethernet(&f[..40], 0), Err(SkipReason::Truncated));
        assert_eq!(decode_ethernet(&f[..10], 0), Err(SkipReason::Truncated));
    }
}
