//! The finalized flow record and its column schema.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

pub const BENIGN: &str = "Benign";

/// Binary and multi-class label attached to a flow.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    attack: String,
}

impl Label {
    pub fn benign() -> Self {
        Label { attack: BENIGN.to_string() }
    }

    /// A class label; the name "Benign" yields a benign label.
    pub fn class(attack: impl Into<String>) -> Self {
        Label { attack: attack.into() }
    }

    pub fn is_malicious(&self) -> bool {
        self.attack != BENIGN
    }

    /// 0 for benign, 1 for malicious.
    pub fn binary(&self) -> u8 {
        u8::from(self.is_malicious())
    }

    pub fn attack(&self) -> &str {
        &self.attack
    }
}

macro_rules! flow_record {
    ($( $field:ident : $ty:ty => $col:literal ),* $(,)?) => {
        /// One bidirectional flow, oriented client (`IPV4_SRC_ADDR`) to server.
        ///
        /// `IN_*` counters describe the client→server direction and `OUT_*`
        /// the reverse. Timestamps are Unix milliseconds.
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct FlowRecord {
            $( pub $field: $ty, )*
            pub label: Option<Label>,
        }

        /// Column names in schema order.
        pub const FLOW_COLUMNS: [&str; FLOW_COLUMN_COUNT] = [ $( $col ),* ];

        impl FlowRecord {
            /// All-zero record between 0.0.0.0 endpoints.
            pub fn zeroed() -> Self {
                FlowRecord {
                    $( $field: zero_of::<$ty>(), )*
                    label: None,
                }
            }

            /// Render the 53 schema values in column order.
            pub fn values(&self) -> Vec<String> {
                vec![ $( self.$field.to_string() ),* ]
            }

            /// Parse from a lookup returning the raw text of a column index.
            pub(crate) fn parse_columns<'a>(
                get: impl Fn(usize) -> &'a str,
            ) -> Result<Self, (usize, String)> {
                let mut idx = 0usize;
                $(
                    let raw = get(idx);
                    let $field: $ty = raw
                        .trim()
                        .parse()
                        .map_err(|_| (idx, raw.to_string()))?;
                    idx += 1;
                )*
                let _ = idx;
                Ok(FlowRecord { $( $field, )* label: None })
            }
        }
    };
}

pub const FLOW_COLUMN_COUNT: usize = 53;
pub const LABEL_COLUMN: &str = "Label";
pub const ATTACK_COLUMN: &str = "Attack";

trait Zero {
    fn zero() -> Self;
}
macro_rules! impl_zero {
    ($($t:ty),*) => { $( impl Zero for $t { fn zero() -> Self { 0 } } )* };
}
impl_zero!(u8, u16, u32, u64);
impl Zero for Ipv4Addr {
    fn zero() -> Self {
        Ipv4Addr::UNSPECIFIED
    }
}
fn zero_of<T: Zero>() -> T {
    T::zero()
}

flow_record! {
    ipv4_src_addr: Ipv4Addr => "IPV4_SRC_ADDR",
    ipv4_dst_addr: Ipv4Addr => "IPV4_DST_ADDR",
    l4_src_port: u16 => "L4_SRC_PORT",
    l4_dst_port: u16 => "L4_DST_PORT",
    protocol: u8 => "PROTOCOL",
    l7_proto: u16 => "L7_PROTO",
    in_bytes: u64 => "IN_BYTES",
    out_bytes: u64 => "OUT_BYTES",
    in_pkts: u64 => "IN_PKTS",
    out_pkts: u64 => "OUT_PKTS",
    flow_duration_milliseconds: u64 => "FLOW_DURATION_MILLISECONDS",
    tcp_flags: u8 => "TCP_FLAGS",
    client_tcp_flags: u8 => "CLIENT_TCP_FLAGS",
    server_tcp_flags: u8 => "SERVER_TCP_FLAGS",
    duration_in: u64 => "DURATION_IN",
    duration_out: u64 => "DURATION_OUT",
    min_ttl: u8 => "MIN_TTL",
    max_ttl: u8 => "MAX_TTL",
    longest_flow_pkt: u16 => "LONGEST_FLOW_PKT",
    shortest_flow_pkt: u16 => "SHORTEST_FLOW_PKT",
    min_ip_pkt_len: u16 => "MIN_IP_PKT_LEN",
    max_ip_pkt_len: u16 => "MAX_IP_PKT_LEN",
    src_to_dst_second_bytes: u64 => "SRC_TO_DST_SECOND_BYTES",
    dst_to_src_second_bytes: u64 => "DST_TO_SRC_SECOND_BYTES",
    retransmitted_in_bytes: u64 => "RETRANSMITTED_IN_BYTES",
    retransmitted_in_pkts: u64 => "RETRANSMITTED_IN_PKTS",
    retransmitted_out_bytes: u64 => "RETRANSMITTED_OUT_BYTES",
    retransmitted_out_pkts: u64 => "RETRANSMITTED_OUT_PKTS",
    src_to_dst_avg_throughput: u64 => "SRC_TO_DST_AVG_THROUGHPUT",
    dst_to_src_avg_throughput: u64 => "DST_TO_SRC_AVG_THROUGHPUT",
    num_pkts_up_to_128_bytes: u64 => "NUM_PKTS_UP_TO_128_BYTES",
    num_pkts_128_to_256_bytes: u64 => "NUM_PKTS_128_TO_256_BYTES",
    num_pkts_256_to_512_bytes: u64 => "NUM_PKTS_256_TO_512_BYTES",
    num_pkts_512_to_1024_bytes: u64 => "NUM_PKTS_512_TO_1024_BYTES",
    num_pkts_1024_to_1514_bytes: u64 => "NUM_PKTS_1024_TO_1514_BYTES",
    tcp_win_max_in: u16 => "TCP_WIN_MAX_IN",
    tcp_win_max_out: u16 => "TCP_WIN_MAX_OUT",
    icmp_type: u16 => "ICMP_TYPE",
    icmp_ipv4_type: u8 => "ICMP_IPV4_TYPE",
    dns_query_id: u16 => "DNS_QUERY_ID",
    dns_query_type: u16 => "DNS_QUERY_TYPE",
    dns_ttl_answer: u32 => "DNS_TTL_ANSWER",
    ftp_command_ret_code: u16 => "FTP_COMMAND_RET_CODE",
    flow_start_milliseconds: u64 => "FLOW_START_MILLISECONDS",
    flow_end_milliseconds: u64 => "FLOW_END_MILLISECONDS",
    src_to_dst_iat_min: u64 => "SRC_TO_DST_IAT_MIN",
    src_to_dst_iat_max: u64 => "SRC_TO_DST_IAT_MAX",
    src_to_dst_iat_avg: u64 => "SRC_TO_DST_IAT_AVG",
    src_to_dst_iat_stddev: u64 => "SRC_TO_DST_IAT_STDDEV",
    dst_to_src_iat_min: u64 => "DST_TO_SRC_IAT_MIN",
    dst_to_src_iat_max: u64 => "DST_TO_SRC_IAT_MAX",
    dst_to_src_iat_avg: u64 => "DST_TO_SRC_IAT_AVG",
    dst_to_src_iat_stddev: u64 => "DST_TO_SRC_IAT_STDDEV",
}

impl FlowRecord {
    /// Attack class, or "Unlabeled" when no label is attached.
    pub fn class_name(&self) -> &str {
        self.label.as_ref().map_or("Unlabeled", Label::attack)
    }

    /// Ordering used for every emitted record list: flow start, then the
    /// identity fields, then flow end.
    pub fn sort_key(&self) -> (u64, Ipv4Addr, Ipv4Addr, u16, u16, u8, u64) {
        (
            self.flow_start_milliseconds,
            self.ipv4_src_addr,
            self.ipv4_dst_addr,
            self.l4_src_port,
            self.l4_dst_port,
            self.protocol,
            self.flow_end_milliseconds,
        )
    }
}

/// Sort by [`FlowRecord::sort_key`], stable for equal keys.
pub fn sort_records(records: &mut [FlowRecord]) {
    records.sort_by_key(FlowRecord::sort_key);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IatDirection {
    SrcToDst,
    DstToSrc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IatStat {
    Min,
    Max,
    Avg,
    Stddev,
}

impl FlowRecord {
    pub fn iat(&self, direction: IatDirection, stat: IatStat) -> u64 {
        use IatDirection::*;
        use IatStat::*;
        match (direction, stat) {
            (SrcToDst, Min) => self.src_to_dst_iat_min,
            (SrcToDst, Max) => self.src_to_dst_iat_max,
            (SrcToDst, Avg) => self.src_to_dst_iat_avg,
            (SrcToDst, Stddev) => self.src_to_dst_iat_stddev,
            (DstToSrc, Min) => self.dst_to_src_iat_min,
            (DstToSrc, Max) => self.dst_to_src_iat_max,
            (DstToSrc, Avg) => self.dst_to_src_iat_avg,
            (DstToSrc, Stddev) => self.dst_to_src_iat_stddev,
        }
    }
}

impl fmt::Display for IatDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IatDirection::SrcToDst => "src_to_dst",
            IatDirection::DstToSrc => "dst_to_src",
        })
    }
}

impl FromStr for IatDirection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "src_to_dst" => Ok(IatDirection::SrcToDst),
            "dst_to_src" => Ok(IatDirection::DstToSrc),
            other => Err(format!("unknown IAT direction '{other}'")),
        }
    }
}

impl fmt::Display for IatStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IatStat::Min => "min",
            IatStat::Max => "max",
            IatStat::Avg => "avg",
            IatStat::Stddev => "stddev",
        })
    }
}

impl FromStr for IatStat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(IatStat::Min),
            "max" => Ok(IatStat::Max),
            "avg" => Ok(IatStat::Avg),
            "stddev" => Ok(IatStat::Stddev),
            other => Err(format!("unknown IAT statistic '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_width_and_order() {
        assert_eq!(FLOW_COLUMNS.len(), 53);
        assert_eq!(FLOW_COLUMNS[0], "IPV4_SRC_ADDR");
        assert_eq!(FLOW_COLUMNS[42], "FTP_COMMAND_RET_CODE");
        assert_eq!(FLOW_COLUMNS[43], "FLOW_START_MILLISECONDS");
        assert_eq!(FLOW_COLUMNS[52], "DST_TO_SRC_IAT_STDDEV");
        assert_eq!(FlowRecord::zeroed().values().len(), 53);
    }

    #[test]
    fn benign_label_is_zero() {
        assert_eq!(Label::benign().binary(), 0);
        assert_eq!(Label::class("Benign").binary(), 0);
        assert_eq!(Label::class("DoS").binary(), 1);
    }
}
