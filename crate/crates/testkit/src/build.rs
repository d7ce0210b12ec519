//! Packet and payload builders. Every packet is normalized so that it
//! survives an encode/decode round trip unchanged.

use std::net::Ipv4Addr;

use flowlens_core::packet::{PacketRecord, PAYLOAD_PREFIX_CAP, PROTO_ICMP, PROTO_TCP, PROTO_UDP};

/// 2020-09-13T12:26:40Z in microseconds.
pub const BASE_TS_MICROS: u64 = 1_600_000_000_000_000;

pub type Endpoint = (Ipv4Addr, u16);

pub fn ip(a: u8, b: u8, c: u8, d: u8) -> Ipv4Addr {
    Ipv4Addr::new(a, b, c, d)
}

/// Deterministic filler bytes for a payload of `len` bytes, capped at the
/// retained prefix length.
pub fn filler(len: usize, salt: u8) -> Vec<u8> {
    (0..len.min(PAYLOAD_PREFIX_CAP)).map(|i| (i as u8).wrapping_mul(31).wrapping_add(salt)).collect()
}

fn blank(ts_micros: u64, src: Ipv4Addr, dst: Ipv4Addr, protocol: u8) -> PacketRecord {
    PacketRecord {
        ts_micros,
        src_ip: src,
        dst_ip: dst,
        src_port: 0,
        dst_port: 0,
        protocol,
        ip_total_len: 20,
        ttl: 64,
        tcp_flags: 0,
        tcp_seq: 0,
        tcp_window: 0,
        payload_len: 0,
        payload_prefix: Vec::new(),
        icmp_type: 0,
        icmp_code: 0,
    }
}

/// TCP segment with `payload_len` bytes of data, of which `prefix` is the
/// captured part (generated when `None`).
#[allow(clippy::too_many_arguments)]
pub fn tcp(
    ts_micros: u64,
    from: Endpoint,
    to: Endpoint,
    flags: u8,
    seq: u32,
    window: u16,
    payload_len: u16,
    prefix: Option<Vec<u8>>,
) -> PacketRecord {
    let mut p = blank(ts_micros, from.0, to.0, PROTO_TCP);
    p.src_port = from.1;
    p.dst_port = to.1;
    p.tcp_flags = flags;
    p.tcp_seq = seq;
    p.tcp_window = window;
    p.payload_len = payload_len;
    p.ip_total_len = 40 + payload_len;
    p.payload_prefix = clip(prefix.unwrap_or_else(|| filler(payload_len.into(), flags)), payload_len);
    p
}

/// UDP datagram carrying `payload` (or generated filler of `payload_len`).
pub fn udp(ts_micros: u64, from: Endpoint, to: Endpoint, payload_len: u16, payload: Option<Vec<u8>>) -> PacketRecord {
    let mut p = blank(ts_micros, from.0, to.0, PROTO_UDP);
    p.src_port = from.1;
    p.dst_port = to.1;
    p.payload_len = payload_len;
    p.ip_total_len = 28 + payload_len;
    p.payload_prefix = clip(payload.unwrap_or_else(|| filler(payload_len.into(), 7)), payload_len);
    p
}

/// UDP datagram whose payload length is that of `payload`.
pub fn udp_msg(ts_micros: u64, from: Endpoint, to: Endpoint, payload: Vec<u8>) -> PacketRecord {
    let len = payload.len() as u16;
    udp(ts_micros, from, to, len, Some(payload))
}

pub fn icmp(ts_micros: u64, src: Ipv4Addr, dst: Ipv4Addr, icmp_type: u8, code: u8, payload_len: u16) -> PacketRecord {
    let mut p = blank(ts_micros, src, dst, PROTO_ICMP);
    p.icmp_type = icmp_type;
    p.icmp_code = code;
    p.payload_len = payload_len;
    p.ip_total_len = 28 + payload_len;
    p.payload_prefix = filler(payload_len.into(), 3);
    p
}

fn clip(mut prefix: Vec<u8>, payload_len: u16) -> Vec<u8> {
    prefix.truncate(usize::from(payload_len).min(PAYLOAD_PREFIX_CAP));
    prefix
}

fn put_name(out: &mut Vec<u8>, name: &str) {
    for label in name.split('.').filter(|l| !l.is_empty()) {
        out.push(label.len() as u8);
        out.extend_from_slice(label.as_bytes());
    }
    out.push(0);
}

fn dns_header(id: u16, flags: u16, qd: u16, an: u16) -> Vec<u8> {
    let mut h = Vec::with_capacity(12);
    for v in [id, flags, qd, an, 0, 0] {
        h.extend_from_slice(&v.to_be_bytes());
    }
    h
}

/// Standard query for `name` with the given type.
pub fn dns_query(id: u16, qtype: u16, name: &str) -> Vec<u8> {
    let mut m = dns_header(id, 0x0100, 1, 0);
    put_name(&mut m, name);
    m.extend_from_slice(&qtype.to_be_bytes());
    m.extend_from_slice(&1u16.to_be_bytes());
    m
}

/// Response echoing the question, with an optional CNAME record followed
/// by one A record carrying `ttl`.
pub fn dns_response(id: u16, qtype: u16, name: &str, cname_first: bool, ttl: u32) -> Vec<u8> {
    let answers = if cname_first { 2 } else { 1 };
    let mut m = dns_header(id, 0x8180, 1, answers);
    put_name(&mut m, name);
    m.extend_from_slice(&qtype.to_be_bytes());
    m.extend_from_slice(&1u16.to_be_bytes());
    if cname_first {
        m.extend_from_slice(&[0xc0, 0x0c]);
        m.extend_from_slice(&5u16.to_be_bytes());
        m.extend_from_slice(&1u16.to_be_bytes());
        m.extend_from_slice(&(ttl + 100).to_be_bytes());
        let mut target = Vec::new();
        put_name(&mut target, "edge.example.net");
        m.extend_from_slice(&(target.len() as u16).to_be_bytes());
        m.extend_from_slice(&target);
    }
    m.extend_from_slice(&[0xc0, 0x0c]);
    m.extend_from_slice(&1u16.to_be_bytes());
    m.extend_from_slice(&1u16.to_be_bytes());
    m.extend_from_slice(&ttl.to_be_bytes());
    m.extend_from_slice(&4u16.to_be_bytes());
    m.extend_from_slice(&[93, 184, 216, 34]);
    m
}
