//! Random flow records for property tests.

use std::net::Ipv4Addr;

use flowlens_core::record::{FlowRecord, Label};
use rand::Rng;

/// Class names used for random labels.
pub const CLASSES: [&str; 6] = ["Benign", "DoS", "DDoS", "Reconnaissance", "Port Scan", "Brute Force"];

/// A record with every column drawn uniformly from its type's range and,
/// when `labeled`, a random class label.
pub fn random_record<R: Rng>(rng: &mut R, labeled: bool) -> FlowRecord {
    FlowRecord {
        ipv4_src_addr: Ipv4Addr::from(rng.gen::<u32>()),
        ipv4_dst_addr: Ipv4Addr::from(rng.gen::<u32>()),
        l4_src_port: rng.gen(),
        l4_dst_port: rng.gen(),
        protocol: rng.gen(),
        l7_proto: rng.gen(),
        in_bytes: rng.gen(),
        out_bytes: rng.gen(),
        in_pkts: rng.gen(),
        out_pkts: rng.gen(),
        flow_duration_milliseconds: rng.gen(),
        tcp_flags: rng.gen(),
        client_tcp_flags: rng.gen(),
        server_tcp_flags: rng.gen(),
        duration_in: rng.gen(),
        duration_out: rng.gen(),
        min_ttl: rng.gen(),
        max_ttl: rng.gen(),
        longest_flow_pkt: rng.gen(),
        shortest_flow_pkt: rng.gen(),
        min_ip_pkt_len: rng.gen(),
        max_ip_pkt_len: rng.gen(),
        src_to_dst_second_bytes: rng.gen(),
        dst_to_src_second_bytes: rng.gen(),
        retransmitted_in_bytes: rng.gen(),
        retransmitted_in_pkts: rng.gen(),
        retransmitted_out_bytes: rng.gen(),
        retransmitted_out_pkts: rng.gen(),
        src_to_dst_avg_throughput: rng.gen(),
        dst_to_src_avg_throughput: rng.gen(),
        num_pkts_up_to_128_bytes: rng.gen(),
        num_pkts_128_to_256_bytes: rng.gen(),
        num_pkts_256_to_512_bytes: rng.gen(),
        num_pkts_512_to_1024_bytes: rng.gen(),
        num_pkts_1024_to_1514_bytes: rng.gen(),
        tcp_win_max_in: rng.gen(),
        tcp_win_max_out: rng.gen(),
        icmp_type: rng.gen(),
        icmp_ipv4_type: rng.gen(),
        dns_query_id: rng.gen(),
        dns_query_type: rng.gen(),
        dns_ttl_answer: rng.gen(),
        ftp_command_ret_code: rng.gen(),
        flow_start_milliseconds: rng.gen(),
        flow_end_milliseconds: rng.gen(),
        src_to_dst_iat_min: rng.gen(),
        src_to_dst_iat_max: rng.gen(),
        src_to_dst_iat_avg: rng.gen(),
        src_to_dst_iat_stddev: rng.gen(),
        dst_to_src_iat_min: rng.gen(),
        dst_to_src_iat_max: rng.gen(),
        dst_to_src_iat_avg: rng.gen(),
        dst_to_src_iat_stddev: rng.gen(),
        label: labeled.then(|| Label::class(CLASSES[rng.gen_range(0..CLASSES.len())])),
    }
}
