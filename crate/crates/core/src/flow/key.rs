use std::net::Ipv4Addr;

use crate::packet::PacketRecord;

/// Direction-independent 5-tuple. The endpoint with the numerically smaller
/// address (then smaller port) is stored as `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    pub ip_a: Ipv4Addr,
    pub ip_b: Ipv4Addr,
    pub port_a: u16,
    pub port_b: u16,
    pub protocol: u8,
}

impl FlowKey {
    pub fn new(ip1: Ipv4Addr, port1: u16, ip2: Ipv4Addr, port2: u16, protocol: u8) -> Self {
        if (ip1, port1) <= (ip2, port2) {
            FlowKey { ip_a: ip1, ip_b: ip2, port_a: port1, port_b: port2, protocol }
        } else {
            FlowKey { ip_a: ip2, ip_b: ip1, port_a: port2, port_b: port1, protocol }
        }
    }

    pub fn from_packet(pkt: &PacketRecord) -> Self {
        FlowKey::new(pkt.src_ip, pkt.src_port, pkt.dst_ip, pkt.dst_port, pkt.protocol)
    }
}
