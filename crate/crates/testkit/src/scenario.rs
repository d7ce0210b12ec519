//! Seeded packet schedules.

use std::collections::HashSet;

use flowlens_core::dataset::GroundTruthEvent;
use flowlens_core::flow::MeterConfig;
use flowlens_core::packet::{PacketRecord, PROTO_TCP, PROTO_UDP, TCP_ACK, TCP_FIN, TCP_PSH, TCP_RST, TCP_SYN};
use flowlens_core::record::FlowRecord;
use flowlens_core::FlowKey;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::build::{dns_query, dns_response, icmp, ip, tcp, udp, udp_msg, Endpoint, BASE_TS_MICROS};
use crate::oracle::oracle_flows;
use crate::pcapgen::write_fixture_pcap;

pub const BENCH_SEED: u64 = 0x5eed_f10e;
pub const BENCH_PACKETS: usize = 100_000;
pub const BENCH_TUPLES: usize = 1_000;

#[derive(Debug, Clone)]
pub struct SyntheticScenario {
    pub name: String,
    /// Packets in capture order.
    pub packets: Vec<PacketRecord>,
    pub events: Vec<GroundTruthEvent>,
    pub config: MeterConfig,
}

impl SyntheticScenario {
    fn new(name: &str, mut packets: Vec<PacketRecord>) -> Self {
        packets.sort_by_key(|p| p.ts_micros);
        SyntheticScenario { name: name.to_string(), packets, events: Vec::new(), config: MeterConfig::default() }
    }

    /// The oracle's flow grouping of the schedule.
    pub fn expected_flows(&self) -> Vec<FlowRecord> {
        oracle_flows(&self.packets, &self.config)
    }

    pub fn pcap_bytes(&self) -> Vec<u8> {
        write_fixture_pcap(&self.packets)
    }

    /// Distinct canonical 5-tuples in the schedule.
    pub fn tuple_count(&self) -> usize {
        self.packets.iter().map(FlowKey::from_packet).collect::<HashSet<_>>().len()
    }
}

fn ms(v: u64) -> u64 {
    v * 1000
}

fn secs(v: u64) -> u64 {
    v * 1_000_000
}

/// Random gap in microseconds within `[lo_ms, hi_ms]`.
fn gap(rng: &mut ChaCha8Rng, lo_ms: u64, hi_ms: u64) -> u64 {
    rng.gen_range(ms(lo_ms)..=ms(hi_ms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Close {
    Fin,
    Rst,
    Open,
}

#[derive(Debug, Clone)]
struct TcpOpts {
    exchanges: usize,
    client_len: (u16, u16),
    server_len: (u16, u16),
    /// Server segments per client request.
    server_burst: usize,
    gap_ms: (u64, u64),
    retrans: f64,
    close: Close,
    isn: Option<(u32, u32)>,
}

impl Default for TcpOpts {
    fn default() -> Self {
        TcpOpts {
            exchanges: 4,
            client_len: (40, 400),
            server_len: (200, 1460),
            server_burst: 2,
            gap_ms: (1, 200),
            retrans: 0.0,
            close: Close::Fin,
            isn: None,
        }
    }
}

/// Handshake, request/response exchanges and teardown. Returns the time of
/// the last packet.
fn tcp_session(
    out: &mut Vec<PacketRecord>,
    rng: &mut ChaCha8Rng,
    start: u64,
    client: Endpoint,
    server: Endpoint,
    o: &TcpOpts,
) -> u64 {
    let (mut cs, mut ss) = o.isn.unwrap_or_else(|| (rng.gen(), rng.gen()));
    let (cw, sw) = (rng.gen_range(1024..=65535u16), rng.gen_range(1024..=65535u16));
    let mut t = start;
    let mut push = |t: u64, p: PacketRecord, ttl: u8| {
        let mut p = p;
        p.ts_micros = t;
        p.ttl = ttl;
        out.push(p);
    };
    push(t, tcp(t, client, server, TCP_SYN, cs, cw, 0, None), 64);
    cs = cs.wrapping_add(1);
    t += gap(rng, 0, 5);
    push(t, tcp(t, server, client, TCP_SYN | TCP_ACK, ss, sw, 0, None), 128);
    ss = ss.wrapping_add(1);
    t += gap(rng, 0, 5);
    push(t, tcp(t, client, server, TCP_ACK, cs, cw, 0, None), 64);

    for _ in 0..o.exchanges {
        t += gap(rng, o.gap_ms.0, o.gap_ms.1);
        let len = rng.gen_range(o.client_len.0..=o.client_len.1);
        push(t, tcp(t, client, server, TCP_PSH | TCP_ACK, cs, cw, len, None), 64);
        if rng.gen_bool(o.retrans) {
            t += gap(rng, 1, 50);
            push(t, tcp(t, client, server, TCP_PSH | TCP_ACK, cs, cw, len, None), 64);
        }
        cs = cs.wrapping_add(u32::from(len));
        for _ in 0..o.server_burst {
            t += gap(rng, 0, 20);
            let len = rng.gen_range(o.server_len.0..=o.server_len.1);
            push(t, tcp(t, server, client, TCP_ACK, ss, sw, len, None), 128);
            if rng.gen_bool(o.retrans) {
                t += gap(rng, 1, 50);
                push(t, tcp(t, server, client, TCP_ACK, ss, sw, len, None), 127);
            }
            ss = ss.wrapping_add(u32::from(len));
        }
        t += gap(rng, 0, 5);
        push(t, tcp(t, client, server, TCP_ACK, cs, cw, 0, None), 64);
    }

    match o.close {
        Close::Fin => {
            t += gap(rng, 1, 50);
            push(t, tcp(t, client, server, TCP_FIN | TCP_ACK, cs, cw, 0, None), 64);
            t += gap(rng, 0, 10);
            push(t, tcp(t, server, client, TCP_FIN | TCP_ACK, ss, sw, 0, None), 128);
            t += gap(rng, 0, 10);
            push(t, tcp(t, client, server, TCP_ACK, cs.wrapping_add(1), cw, 0, None), 64);
        }
        Close::Rst => {
            t += gap(rng, 1, 50);
            push(t, tcp(t, client, server, TCP_RST, cs, 0, 0, None), 64);
        }
        Close::Open => {}
    }
    t
}

/// `rounds` request/response rounds where the client sends `ratio` datagrams
/// per reply.
#[allow(clippy::too_many_arguments)]
fn udp_exchange(
    out: &mut Vec<PacketRecord>,
    rng: &mut ChaCha8Rng,
    start: u64,
    client: Endpoint,
    server: Endpoint,
    rounds: usize,
    ratio: usize,
    gap_ms: (u64, u64),
) -> u64 {
    let mut t = start;
    for _ in 0..rounds {
        for _ in 0..ratio {
            let len = rng.gen_range(8..=300);
            out.push(udp(t, client, server, len, None));
            t += gap(rng, gap_ms.0, gap_ms.1);
        }
        let len = rng.gen_range(8..=1400);
        out.push(udp(t, server, client, len, None));
        t += gap(rng, gap_ms.0, gap_ms.1);
    }
    t
}

fn dns_lookup(
    out: &mut Vec<PacketRecord>,
    rng: &mut ChaCha8Rng,
    start: u64,
    client: Endpoint,
    resolver: Endpoint,
) -> u64 {
    let id = rng.gen();
    let name = ["example.com", "updates.vendor.org", "cdn.example.net"][rng.gen_range(0..3)];
    out.push(udp_msg(start, client, resolver, dns_query(id, 1, name)));
    let t = start + gap(rng, 1, 40);
    let ttl = rng.gen_range(30..=86_400);
    out.push(udp_msg(t, resolver, client, dns_response(id, 1, name, rng.gen_bool(0.5), ttl)));
    t
}

fn icmp_echo(
    out: &mut Vec<PacketRecord>,
    rng: &mut ChaCha8Rng,
    start: u64,
    a: std::net::Ipv4Addr,
    b: std::net::Ipv4Addr,
    count: usize,
) -> u64 {
    let mut t = start;
    for _ in 0..count {
        out.push(icmp(t, a, b, 8, 0, 56));
        let rtt = gap(rng, 0, 30);
        out.push(icmp(t + rtt, b, a, 0, 0, 56));
        t += gap(rng, 900, 1100);
    }
    t
}

fn base() -> u64 {
    BASE_TS_MICROS
}

fn ep(a: u8, b: u8, c: u8, d: u8, port: u16) -> Endpoint {
    (ip(a, b, c, d), port)
}

/// A random blend of sessions: TCP with retransmissions and mixed closes,
/// UDP with asymmetric ratios, DNS, ICMP, and occasional long pauses that
/// cross the idle timeout.
pub fn random_schedule(seed: u64, sessions: usize) -> Vec<PacketRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for s in 0..sessions {
        let start = base() + gap(&mut rng, 0, 240_000);
        let client = ep(10, 1, (s / 200) as u8, (s % 200 + 1) as u8, rng.gen_range(1024..=65535));
        let server_ip = ip(192, 168, 0, rng.gen_range(1..=8));
        match rng.gen_range(0..6) {
            0 | 1 => {
                let port = [80, 443, 22, 8080, 3389][rng.gen_range(0..5)];
                let opts = TcpOpts {
                    exchanges: rng.gen_range(1..=8),
                    server_burst: rng.gen_range(0..=4),
                    retrans: [0.0, 0.1, 0.3][rng.gen_range(0..3)],
                    close: [Close::Fin, Close::Rst, Close::Open][rng.gen_range(0..3)],
                    gap_ms: if rng.gen_bool(0.15) { (20_000, 45_000) } else { (1, 400) },
                    ..TcpOpts::default()
                };
                tcp_session(&mut out, &mut rng, start, client, (server_ip, port), &opts);
            }
            2 => {
                let rounds = rng.gen_range(1..=10);
                let ratio = rng.gen_range(1..=6);
                let gaps = if rng.gen_bool(0.2) { (5_000, 40_000) } else { (1, 500) };
                let server = (server_ip, 5000 + rng.gen_range(0..4));
                udp_exchange(&mut out, &mut rng, start, client, server, rounds, ratio, gaps);
            }
            3 => {
                dns_lookup(&mut out, &mut rng, start, client, (server_ip, 53));
            }
            4 => {
                let n = rng.gen_range(1..=6);
                icmp_echo(&mut out, &mut rng, start, client.0, server_ip, n);
            }
            _ => {
                let opts = TcpOpts { exchanges: rng.gen_range(0..=3), server_burst: 1, ..TcpOpts::default() };
                tcp_session(&mut out, &mut rng, start, client, (server_ip, 21), &opts);
            }
        }
    }
    out.sort_by_key(|p| p.ts_micros);
    out
}

/// Fixed scenario set used by the oracle-equivalence checks. Every schedule
/// has at most 1000 packets.
pub fn scenarios() -> Vec<SyntheticScenario> {
    let mut v = Vec::new();
    let c = ep(10, 0, 0, 1, 40_000);
    let s = ep(10, 0, 0, 2, 80);
    let t0 = base();

    v.push(SyntheticScenario::new(
        "iat_three_packets",
        [0, 10, 30].iter().map(|&m| udp(t0 + ms(m), c, ep(10, 0, 0, 2, 9999), 40, None)).collect(),
    ));
    v.push(SyntheticScenario::new("single_packet", vec![udp(t0, c, ep(10, 0, 0, 2, 9999), 40, None)]));
    v.push(SyntheticScenario::new(
        "constant_gap",
        (0..20).map(|i| udp(t0 + ms(250 * i), c, ep(10, 0, 0, 2, 9999), 100, None)).collect(),
    ));

    v.push(SyntheticScenario::new("tcp_handshake_fin", {
        let seq = 1000;
        vec![
            tcp(t0, c, s, TCP_SYN, seq, 65535, 0, None),
            tcp(t0 + ms(1), s, c, TCP_SYN | TCP_ACK, 5000, 29200, 0, None),
            tcp(t0 + ms(2), c, s, TCP_ACK, seq + 1, 65535, 0, None),
            tcp(t0 + ms(50), c, s, TCP_FIN | TCP_ACK, seq + 1, 65535, 0, None),
            tcp(t0 + ms(51), s, c, TCP_FIN | TCP_ACK, 5001, 29200, 0, None),
            tcp(t0 + ms(52), c, s, TCP_ACK, seq + 2, 65535, 0, None),
        ]
    }));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pk = Vec::new();
    tcp_session(&mut pk, &mut rng, t0, c, s, &TcpOpts { close: Close::Rst, ..TcpOpts::default() });
    v.push(SyntheticScenario::new("tcp_reset", pk));

    let mut pk = Vec::new();
    tcp_session(&mut pk, &mut rng, t0, c, s, &TcpOpts { exchanges: 30, retrans: 0.3, ..TcpOpts::default() });
    v.push(SyntheticScenario::new("tcp_retransmissions", pk));

    let mut pk = Vec::new();
    let opts =
        TcpOpts { exchanges: 20, retrans: 0.2, isn: Some((u32::MAX - 3000, u32::MAX - 100)), ..TcpOpts::default() };
    tcp_session(&mut pk, &mut rng, t0, c, s, &opts);
    v.push(SyntheticScenario::new("tcp_sequence_wraparound", pk));

    let mut pk = Vec::new();
    let opts = TcpOpts { exchanges: 10, server_burst: 8, client_len: (1, 60), ..TcpOpts::default() };
    tcp_session(&mut pk, &mut rng, t0, c, s, &opts);
    v.push(SyntheticScenario::new("tcp_download_asymmetric", pk));

    let mut pk = Vec::new();
    udp_exchange(&mut pk, &mut rng, t0, c, ep(10, 0, 0, 2, 5060), 40, 5, (1, 100));
    v.push(SyntheticScenario::new("udp_asymmetric", pk));

    let mut pk = Vec::new();
    icmp_echo(&mut pk, &mut rng, t0, c.0, s.0, 10);
    pk.push(icmp(t0 + secs(3), ip(10, 0, 0, 9), c.0, 3, 3, 36));
    v.push(SyntheticScenario::new("icmp_echo_and_unreachable", pk));

    let mut pk = Vec::new();
    let resolver = ep(10, 0, 0, 53, 53);
    for i in 0..6u16 {
        dns_lookup(&mut pk, &mut rng, t0 + secs(u64::from(i)), ep(10, 0, 0, 1, 50_000 + i), resolver);
    }
    v.push(SyntheticScenario::new("dns_lookups", pk));

    let mut pk = vec![
        udp_msg(t0, ep(10, 0, 0, 1, 40_001), resolver, vec![0x12, 0x34, 0x01]),
        udp_msg(t0 + ms(3), resolver, ep(10, 0, 0, 1, 40_001), dns_response(0x99, 28, "x.example", false, 77)),
    ];
    let mut broken = dns_response(0x42, 1, "y.example", true, 60);
    broken.truncate(broken.len() - 6);
    pk.push(udp_msg(t0, ep(10, 0, 0, 1, 40_002), resolver, broken));
    v.push(SyntheticScenario::new("dns_malformed_then_valid", pk));

    let ftp = ep(10, 0, 0, 21, 21);
    let fc = ep(10, 0, 0, 1, 41_000);
    let mut pk = vec![
        tcp(t0, fc, ftp, TCP_SYN, 7, 64240, 0, None),
        tcp(t0 + ms(1), ftp, fc, TCP_SYN | TCP_ACK, 70, 64240, 0, None),
        tcp(t0 + ms(2), fc, ftp, TCP_ACK, 8, 64240, 0, None),
    ];
    let replies: [&[u8]; 3] = [b"220 ProFTPD ready\r\n", b"331 Password required\r\n", b"230 User logged in\r\n"];
    let mut sseq = 71u32;
    for (i, r) in replies.iter().enumerate() {
        let t = t0 + ms(10 + 20 * i as u64);
        pk.push(tcp(t, ftp, fc, TCP_PSH | TCP_ACK, sseq, 64240, r.len() as u16, Some(r.to_vec())));
        sseq += r.len() as u32;
        pk.push(tcp(
            t + ms(5),
            fc,
            ftp,
            TCP_PSH | TCP_ACK,
            8 + 10 * i as u32,
            64240,
            10,
            Some(b"USER anon\n".to_vec()),
        ));
    }
    v.push(SyntheticScenario::new("ftp_control_replies", pk));

    v.push(SyntheticScenario::new(
        "idle_timeout_split",
        [0, 1, 2, 40, 41, 90, 200].iter().map(|&sec| udp(t0 + secs(sec), c, ep(10, 0, 0, 2, 7777), 60, None)).collect(),
    ));
    v.push(SyntheticScenario::new(
        "active_timeout_stream",
        (0..600).map(|sec| udp(t0 + secs(sec), c, ep(10, 0, 0, 2, 7777), 60, None)).collect(),
    ));

    let mut pk = vec![
        tcp(t0, c, s, TCP_SYN, 1, 1000, 0, None),
        tcp(t0 + ms(1), s, c, TCP_SYN | TCP_ACK, 1, 1000, 0, None),
        tcp(t0 + ms(2), c, s, TCP_FIN | TCP_ACK, 2, 1000, 0, None),
        tcp(t0 + ms(3), s, c, TCP_FIN | TCP_ACK, 2, 1000, 0, None),
    ];
    pk.push(tcp(t0 + ms(10), c, s, TCP_SYN, 100, 1000, 0, None));
    pk.push(tcp(t0 + ms(11), s, c, TCP_SYN | TCP_ACK, 900, 1000, 0, None));
    v.push(SyntheticScenario::new("syn_after_close", pk));

    v.push(SyntheticScenario::new(
        "data_after_both_fins",
        vec![
            tcp(t0, c, s, TCP_SYN, 1, 1000, 0, None),
            tcp(t0 + ms(5), c, s, TCP_FIN | TCP_ACK, 2, 1000, 0, None),
            tcp(t0 + ms(6), s, c, TCP_FIN | TCP_ACK, 2, 1000, 0, None),
            tcp(t0 + ms(7), c, s, TCP_PSH | TCP_ACK, 3, 1000, 100, None),
            tcp(t0 + ms(8), s, c, TCP_ACK, 3, 1000, 0, None),
        ],
    ));

    v.push(SyntheticScenario::new(
        "size_bucket_edges",
        [100u16, 101, 228, 229, 484, 996, 1486, 1487, 8972]
            .iter()
            .enumerate()
            .map(|(i, &len)| udp(t0 + ms(i as u64), c, ep(10, 0, 0, 2, 7000), len, None))
            .collect(),
    ));

    let mut pk: Vec<_> = (0..12).map(|i| udp(t0 + ms(10 * i), c, ep(10, 0, 0, 2, 7001), 30, None)).collect();
    pk.swap(3, 4);
    pk.swap(8, 10);
    let mut sc = SyntheticScenario::new("out_of_order_arrivals", Vec::new());
    sc.packets = pk;
    v.push(sc);

    let mut sc = SyntheticScenario::new("early_export_disabled", {
        let mut pk = Vec::new();
        tcp_session(&mut pk, &mut rng, t0, c, s, &TcpOpts::default());
        tcp_session(&mut pk, &mut rng, t0 + secs(1), c, s, &TcpOpts { close: Close::Rst, ..TcpOpts::default() });
        pk
    });
    sc.config.tcp_early_export = false;
    v.push(sc);

    let mut sc = SyntheticScenario::new("short_timeouts", random_schedule(77, 60));
    sc.config.active_timeout_ms = 5_000;
    sc.config.idle_timeout_ms = 2_000;
    v.push(sc);

    for seed in 1..=8u64 {
        let pk = random_schedule(seed * 1009, 40 + 5 * seed as usize);
        let pk = if pk.len() > 1000 { pk[..1000].to_vec() } else { pk };
        v.push(SyntheticScenario::new(&format!("random_mix_{seed}"), pk));
    }
    v
}

/// Benchmark fixture: 100 000 packets over 1000 tuples spanning about ten
/// minutes. Benign TCP/UDP traffic runs throughout; a SYN/RST flood against
/// one server pulses with an 8 s period between 100 s and 500 s, and a UDP
/// flood from 100 sources runs between 250 s and 450 s. Ground truth covers
/// both attacks plus an overlapping interval on the flood pair.
pub fn benchmark_scenario() -> SyntheticScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(BENCH_SEED);
    let t0 = base();
    let base_ms = t0 / 1000;
    let dos_pairs = 15_000usize;
    let ddos_pkts = 20_000usize;
    let benign_tuples = BENCH_TUPLES - 200;
    let benign_pkts = BENCH_PACKETS - 2 * dos_pairs - ddos_pkts;
    let mut pk: Vec<PacketRecord> = Vec::with_capacity(BENCH_PACKETS);

    for i in 0..benign_tuples {
        let n = benign_pkts / benign_tuples + usize::from(i < benign_pkts % benign_tuples);
        let client = ep(10, 0, (i / 250) as u8, (i % 250 + 1) as u8, 30_000 + i as u16);
        let (port, proto) =
            [(80, PROTO_TCP), (443, PROTO_TCP), (22, PROTO_TCP), (53, PROTO_UDP), (123, PROTO_UDP)][i % 5];
        let server = ep(192, 168, 1, 100 + (i % 50) as u8, port);
        let mut t = t0 + gap(&mut rng, 0, 240_000);
        let (mut cs, mut ss): (u32, u32) = (rng.gen(), rng.gen());
        for k in 0..n {
            let from_client = k == 0 || rng.gen_bool(0.55);
            let (a, b) = if from_client { (client, server) } else { (server, client) };
            let p = if proto == PROTO_TCP {
                let flags = if k == 0 { TCP_SYN } else { TCP_ACK | TCP_PSH };
                let len = if k == 0 { 0 } else { rng.gen_range(0..=1460) };
                let seq = if from_client { &mut cs } else { &mut ss };
                let mut at = *seq;
                if len > 0 && rng.gen_bool(0.02) {
                    at = at.wrapping_sub(u32::from(len));
                } else {
                    *seq = seq.wrapping_add(u32::from(len));
                }
                tcp(t, a, b, flags, at, 32_768, len, None)
            } else if port == 53 {
                let id = (k / 2) as u16;
                if from_client {
                    udp_msg(t, a, b, dns_query(id, 1, "bench.example"))
                } else {
                    udp_msg(t, a, b, dns_response(id, 1, "bench.example", false, 300))
                }
            } else {
                udp(t, a, b, 48, None)
            };
            pk.push(p);
            t += if rng.gen_bool(0.03) { gap(&mut rng, 31_000, 40_000) } else { gap(&mut rng, 10, 5_000) };
        }
    }

    // SYN/RST flood in 4 s bursts every 8 s.
    let attacker = ip(172, 16, 0, 1);
    let victim = ep(192, 168, 1, 10, 80);
    let mut starts: Vec<u64> = (0..dos_pairs)
        .map(|_| {
            let cycle = rng.gen_range(0..50u64);
            t0 + secs(100 + cycle * 8) + rng.gen_range(0..secs(4))
        })
        .collect();
    starts.sort_unstable();
    for (j, &t) in starts.iter().enumerate() {
        let a = (attacker, 40_000 + (j % 100) as u16);
        pk.push(tcp(t, a, victim, TCP_SYN, rng.gen(), 1024, 0, None));
        pk.push(tcp(t + rng.gen_range(100..2000), victim, a, TCP_RST | TCP_ACK, 0, 0, 0, None));
    }

    let ddos_victim = ep(192, 168, 1, 20, 123);
    for j in 0..ddos_pkts {
        let src = ep(172, 16, 1, (j % 100 + 1) as u8, 50_000 + (j % 100) as u16);
        let t = t0 + secs(250) + rng.gen_range(0..secs(200));
        pk.push(udp(t, src, ddos_victim, 468, None));
    }

    let mut sc = SyntheticScenario::new("benchmark", pk);
    let event = |src, dst, dport, proto, s: u64, e: u64, attack: &str| GroundTruthEvent {
        src_ip: src,
        dst_ip: dst,
        src_port: 0,
        dst_port: dport,
        protocol: proto,
        start_ms: base_ms + s * 1000,
        end_ms: base_ms + e * 1000,
        attack: attack.to_string(),
    };
    sc.events.push(event(attacker, victim.0, 0, PROTO_TCP, 100, 500, "DoS"));
    sc.events.push(event(attacker, victim.0, 0, 0, 300, 340, "DDoS"));
    for j in 0..100u8 {
        sc.events.push(event(ip(172, 16, 1, j + 1), ddos_victim.0, 123, PROTO_UDP, 250, 450, "DDoS"));
    }
    sc.events.push(event(ip(10, 0, 0, 5), ip(192, 168, 1, 104), 0, 0, 0, 600, "Reconnaissance"));
    sc
}
