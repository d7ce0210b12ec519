//! Classic pcap writer for fixture schedules.

use flowlens_core::packet::{PacketRecord, PROTO_ICMP, PROTO_TCP, PROTO_UDP};

const SNAPLEN: u32 = 65_535;

/// Ethernet frame for a packet. Only the headers and the retained payload
/// prefix are emitted; the IPv4 total length keeps the declared size.
pub fn encode_frame(p: &PacketRecord) -> Vec<u8> {
    let mut f = Vec::with_capacity(64 + p.payload_prefix.len());
    f.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]);
    f.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]);
    f.extend_from_slice(&0x0800u16.to_be_bytes());

    let ip_start = f.len();
    f.push(0x45);
    f.push(0);
    f.extend_from_slice(&p.ip_total_len.to_be_bytes());
    f.extend_from_slice(&[0, 0, 0x40, 0]); // id, DF
    f.push(p.ttl);
    f.push(p.protocol);
    f.extend_from_slice(&[0, 0]);
    f.extend_from_slice(&p.src_ip.octets());
    f.extend_from_slice(&p.dst_ip.octets());
    let csum = ipv4_checksum(&f[ip_start..]);
    f[ip_start + 10..ip_start + 12].copy_from_slice(&csum.to_be_bytes());

    match p.protocol {
        PROTO_TCP => {
            f.extend_from_slice(&p.src_port.to_be_bytes());
            f.extend_from_slice(&p.dst_port.to_be_bytes());
            f.extend_from_slice(&p.tcp_seq.to_be_bytes());
            f.extend_from_slice(&0u32.to_be_bytes());
            f.push(5 << 4);
            f.push(p.tcp_flags);
            f.extend_from_slice(&p.tcp_window.to_be_bytes());
            f.extend_from_slice(&[0, 0, 0, 0]);
        }
        PROTO_UDP => {
            f.extend_from_slice(&p.src_port.to_be_bytes());
            f.extend_from_slice(&p.dst_port.to_be_bytes());
            f.extend_from_slice(&(p.payload_len.wrapping_add(8)).to_be_bytes());
            f.extend_from_slice(&[0, 0]);
        }
        PROTO_ICMP => {
            f.push(p.icmp_type);
            f.push(p.icmp_code);
            f.extend_from_slice(&[0, 0, 0, 0, 0, 0]);
        }
        _ => {}
    }
    f.extend_from_slice(&p.payload_prefix);
    f
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header.chunks(2).map(|c| u32::from(u16::from_be_bytes([c[0], c[1]]))).sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

fn write(packets: &[PacketRecord], nanos: bool) -> Vec<u8> {
    let magic: u32 = if nanos { 0xa1b2_3c4d } else { 0xa1b2_c3d4 };
    let mut out = Vec::with_capacity(24 + packets.len() * 80);
    out.extend_from_slice(&magic.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&SNAPLEN.to_le_bytes());
    out.extend_from_slice(&1u32.to_le_bytes());
    for p in packets {
        let frame = encode_frame(p);
        let sec = (p.ts_micros / 1_000_000) as u32;
        let sub = (p.ts_micros % 1_000_000) as u32;
        let sub = if nanos { sub * 1000 } else { sub };
        let orig = 14 + u32::from(p.ip_total_len);
        out.extend_from_slice(&sec.to_le_bytes());
        out.extend_from_slice(&sub.to_le_bytes());
        out.extend_from_slice(&(frame.len() as u32).to_le_bytes());
        out.extend_from_slice(&orig.max(frame.len() as u32).to_le_bytes());
        out.extend_from_slice(&frame);
    }
    out
}

/// Microsecond-resolution little-endian pcap of a packet schedule.
pub fn write_fixture_pcap(packets: &[PacketRecord]) -> Vec<u8> {
    write(packets, false)
}

/// Nanosecond-resolution variant.
pub fn write_fixture_pcap_ns(packets: &[PacketRecord]) -> Vec<u8> {
    write(packets, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::{ip, tcp, udp, BASE_TS_MICROS};
    use flowlens_core::pcap::CaptureReader;

    #[test]
    fn empty_schedule_is_header_only() {
        assert_eq!(write_fixture_pcap(&[]).len(), 24);
        let bytes = write_fixture_pcap(&[]);
        let mut r = CaptureReader::new(&bytes[..]).unwrap();
        assert!(r.next().is_none());
    }

    #[test]
    fn one_packet_round_trips() {
        let p = tcp(BASE_TS_MICROS + 17, (ip(10, 0, 0, 1), 1234), (ip(10, 0, 0, 2), 80), 0x18, 99, 512, 700, None);
        for bytes in [write_fixture_pcap(std::slice::from_ref(&p)), write_fixture_pcap_ns(std::slice::from_ref(&p))] {
            let got: Vec<_> = CaptureReader::new(&bytes[..]).unwrap().collect::<Result<_, _>>().unwrap();
            assert_eq!(got, vec![p.clone()]);
        }
        let u = udp(BASE_TS_MICROS, (ip(1, 1, 1, 1), 5), (ip(2, 2, 2, 2), 6), 0, None);
        let bytes = write_fixture_pcap(std::slice::from_ref(&u));
        let got: Vec<_> = CaptureReader::new(&bytes[..]).unwrap().collect::<Result<_, _>>().unwrap();
        assert_eq!(got, vec![u]);
    }

    #[test]
    fn checksum_verifies() {
        let p = udp(BASE_TS_MICROS, (ip(10, 0, 0, 1), 5), (ip(10, 0, 0, 2), 6), 10, None);
        let f = encode_frame(&p);
        assert_eq!(ipv4_checksum(&f[14..34]), 0);
    }
}
