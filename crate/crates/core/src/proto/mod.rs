//! Application-layer enrichment: port-based L7 classification plus the DNS
//! and FTP fields carried by flow records.

mod dns;

pub use dns::{parse_dns, DnsInfo, DnsParseError};

use crate::flow::FlowKey;
use crate::packet::{PROTO_ICMP, PROTO_TCP, PROTO_UDP};

/// Numeric application protocol. Code 0 means unknown.
///
/// These codes are this crate's own enumeration (see [`L7_TABLE`]) and are
/// not nDPI protocol identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct L7Tag {
    pub code: u16,
    pub name: &'static str,
}

pub const L7_UNKNOWN: L7Tag = L7Tag { code: 0, name: "Unknown" };
pub const L7_ICMP: L7Tag = L7Tag { code: 20, name: "ICMP" };

/// Well-known port → protocol table, sorted by port.
pub const L7_TABLE: &[(u16, L7Tag)] = &[
    (20, L7Tag { code: 21, name: "FTP_DATA" }),
    (21, L7Tag { code: 1, name: "FTP" }),
    (22, L7Tag { code: 2, name: "SSH" }),
    (23, L7Tag { code: 3, name: "Telnet" }),
    (25, L7Tag { code: 4, name: "SMTP" }),
    (53, L7Tag { code: 5, name: "DNS" }),
    (67, L7Tag { code: 6, name: "DHCP" }),
    (68, L7Tag { code: 6, name: "DHCP" }),
    (80, L7Tag { code: 7, name: "HTTP" }),
    (110, L7Tag { code: 8, name: "POP3" }),
    (123, L7Tag { code: 9, name: "NTP" }),
    (137, L7Tag { code: 10, name: "NetBIOS" }),
    (138, L7Tag { code: 10, name: "NetBIOS" }),
    (139, L7Tag { code: 10, name: "NetBIOS" }),
    (143, L7Tag { code: 11, name: "IMAP" }),
    (161, L7Tag { code: 12, name: "SNMP" }),
    (162, L7Tag { code: 12, name: "SNMP" }),
    (389, L7Tag { code: 13, name: "LDAP" }),
    (443, L7Tag { code: 14, name: "TLS" }),
    (445, L7Tag { code: 15, name: "SMB" }),
    (514, L7Tag { code: 16, name: "Syslog" }),
    (993, L7Tag { code: 22, name: "IMAPS" }),
    (995, L7Tag { code: 23, name: "POP3S" }),
    (1883, L7Tag { code: 17, name: "MQTT" }),
    (3306, L7Tag { code: 18, name: "MySQL" }),
    (3389, L7Tag { code: 19, name: "RDP" }),
    (5353, L7Tag { code: 24, name: "MDNS" }),
    (8080, L7Tag { code: 7, name: "HTTP" }),
];

fn lookup_port(port: u16) -> Option<L7Tag> {
    L7_TABLE.binary_search_by_key(&port, |(p, _)| *p).ok().map(|i| L7_TABLE[i].1)
}

/// Classify by the lower of the two ports that appears in [`L7_TABLE`].
pub fn classify_l7(key: &FlowKey, protocol: u8) -> L7Tag {
    match protocol {
        PROTO_ICMP => L7_ICMP,
        PROTO_TCP | PROTO_UDP => {
            let (lo, hi) = if key.port_a <= key.port_b { (key.port_a, key.port_b) } else { (key.port_b, key.port_a) };
            lookup_port(lo).or_else(|| lookup_port(hi)).unwrap_or(L7_UNKNOWN)
        }
        _ => L7_UNKNOWN,
    }
}

/// Reply code of an FTP server line: three ASCII digits then space or hyphen.
pub fn parse_ftp_return(payload: &[u8]) -> Option<u16> {
    match payload {
        [a, b, c, sep, ..]
            if a.is_ascii_digit() && b.is_ascii_digit() && c.is_ascii_digit() && matches!(sep, b' ' | b'-') =>
        {
            Some(u16::from(a - b'0') * 100 + u16::from(b - b'0') * 10 + u16::from(c - b'0'))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::Ipv4Addr;

    fn key(pa: u16, pb: u16, proto: u8) -> FlowKey {
        FlowKey::new(Ipv4Addr::new(10, 0, 0, 1), pa, Ipv4Addr::new(10, 0, 0, 2), pb, proto)
    }

    #[test]
    fn table_sorted() {
        assert!(L7_TABLE.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn well_known_ports() {
        assert_eq!(classify_l7(&key(33000, 53, PROTO_UDP), PROTO_UDP).name, "DNS");
        assert_eq!(classify_l7(&key(50000, 80, PROTO_TCP), PROTO_TCP).name, "HTTP");
        assert_eq!(classify_l7(&key(50000, 60000, PROTO_TCP), PROTO_TCP).code, 0);
        assert_eq!(classify_l7(&key(0, 0, PROTO_ICMP), PROTO_ICMP), L7_ICMP);
        assert_eq!(classify_l7(&key(0, 0, 47), 47), L7_UNKNOWN);
    }

    #[test]
    fn lower_listed_port_wins() {
        // 443 and 8080 both listed; the lower one decides.
        assert_eq!(classify_l7(&key(8080, 443, PROTO_TCP), PROTO_TCP).name, "TLS");
        // 5353 listed, 49152 not.
        assert_eq!(classify_l7(&key(49152, 5353, PROTO_UDP), PROTO_UDP).name, "MDNS");
    }

    #[test]
    fn ftp_reply_codes() {
        assert_eq!(parse_ftp_return(b"220 Service ready\r\n"), Some(220));
        assert_eq!(parse_ftp_return(b"USER anonymous\r\n"), None);
        assert_eq!(parse_ftp_return(b"331-Password required\r\n"), Some(331));
        assert_eq!(parse_ftp_return(b"22 short"), None);
        assert_eq!(parse_ftp_return(b"2201 too long"), None);
        assert_eq!(parse_ftp_return(b""), None);
    }
}
