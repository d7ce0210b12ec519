//! Invariants over random schedules, records and labelings.

use std::collections::HashMap;
use std::net::Ipv4Addr;

use flowlens_core::analytics::{
    flow_length_histogram, flows_per_interval, iat_histogram, numeric_series, unique_count_series, CategoricalField,
    NumericFeature,
};
use flowlens_core::dataset::{read_flows, write_flows, GroundTruthEvent};
use flowlens_core::flow::MeterConfig;
use flowlens_core::label::label_flows;
use flowlens_core::pcap::CaptureReader;
use flowlens_core::proto::parse_dns;
use flowlens_core::record::{IatDirection, IatStat};
use flowlens_core::FlowRecord;
use flowlens_testkit::{meter_flows, oracle_labels, random_record, random_schedule, write_fixture_pcap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labeled_fixture(seed: u64) -> (Vec<FlowRecord>, Vec<GroundTruthEvent>) {
    let packets = random_schedule(seed, 25);
    let flows = meter_flows(&packets, &MeterConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let mut events = Vec::new();
    for f in &flows {
        if !rng.gen_bool(0.4) {
            continue;
        }
        let pad = rng.gen_range(0..5_000);
        let (a, b) =
            if rng.gen_bool(0.5) { (f.ipv4_src_addr, f.ipv4_dst_addr) } else { (f.ipv4_dst_addr, f.ipv4_src_addr) };
        events.push(GroundTruthEvent {
            src_ip: a,
            dst_ip: b,
            src_port: 0,
            dst_port: 0,
            protocol: if rng.gen_bool(0.5) { 0 } else { f.protocol },
            start_ms: f.flow_start_milliseconds.saturating_sub(pad),
            end_ms: f.flow_start_milliseconds + rng.gen_range(0..10_000),
            attack: ["DoS", "DDoS", "Scan"][rng.gen_range(0..3)].to_string(),
        });
    }
    (label_flows(&flows, &events), events)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pcap_round_trip(seed in any::<u64>(), sessions in 0usize..20) {
        let packets = random_schedule(seed, sessions);
        let bytes = write_fixture_pcap(&packets);
        let decoded: Vec<_> = CaptureReader::new(&bytes[..]).unwrap().collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(decoded, packets);
    }

    #[test]
    fn packet_and_byte_conservation(seed in any::<u64>(), sessions in 1usize..30, idle in 1_000u64..40_000) {
        let packets = random_schedule(seed, sessions);
        let cfg = MeterConfig { idle_timeout_ms: idle, ..MeterConfig::default() };
        let flows = meter_flows(&packets, &cfg);
        let pk: u64 = flows.iter().map(|f| f.in_pkts + f.out_pkts).sum();
        let by: u64 = flows.iter().map(|f| f.in_bytes + f.out_bytes).sum();
        prop_assert_eq!(pk, packets.len() as u64);
        prop_assert_eq!(by, packets.iter().map(|p| u64::from(p.ip_total_len)).sum::<u64>());
        for f in &flows {
            let buckets = f.num_pkts_up_to_128_bytes + f.num_pkts_128_to_256_bytes + f.num_pkts_256_to_512_bytes
                + f.num_pkts_512_to_1024_bytes + f.num_pkts_1024_to_1514_bytes;
            prop_assert!(buckets <= f.in_pkts + f.out_pkts);
            prop_assert!(f.retransmitted_in_pkts <= f.in_pkts && f.retransmitted_out_pkts <= f.out_pkts);
        }
    }

    #[test]
    fn direction_and_timing_consistency(seed in any::<u64>(), sessions in 1usize..30) {
        let packets = random_schedule(seed, sessions);
        for f in meter_flows(&packets, &MeterConfig::default()) {
            prop_assert!(f.in_pkts >= 1, "the client always sent the first packet");
            prop_assert!(f.flow_start_milliseconds <= f.flow_end_milliseconds);
            prop_assert_eq!(f.flow_duration_milliseconds, f.flow_end_milliseconds - f.flow_start_milliseconds);
            prop_assert!(f.duration_in <= f.flow_duration_milliseconds);
            prop_assert!(f.duration_out <= f.flow_duration_milliseconds);
            prop_assert!(f.min_ttl <= f.max_ttl);
            prop_assert!(f.shortest_flow_pkt <= f.longest_flow_pkt);
            prop_assert_eq!(f.tcp_flags, f.client_tcp_flags | f.server_tcp_flags);
            for d in [IatDirection::SrcToDst, IatDirection::DstToSrc] {
                let (mn, avg, mx) = (f.iat(d, IatStat::Min), f.iat(d, IatStat::Avg), f.iat(d, IatStat::Max));
                prop_assert!(mn <= avg && avg <= mx, "{} {} {}", mn, avg, mx);
                prop_assert!(f.iat(d, IatStat::Stddev) <= mx - mn + 1);
            }
        }
    }

    #[test]
    fn labeling_matches_oracle_and_is_idempotent(seed in any::<u64>()) {
        let (labeled, events) = labeled_fixture(seed);
        let expect = oracle_labels(&labeled, &events);
        for (f, l) in labeled.iter().zip(&expect) {
            prop_assert_eq!(f.label.as_ref(), Some(l));
        }
        prop_assert_eq!(label_flows(&labeled, &events), labeled);
    }

    #[test]
    fn labeling_ignores_event_orientation(seed in any::<u64>()) {
        let (labeled, events) = labeled_fixture(seed);
        let flipped: Vec<_> = events
            .iter()
            .map(|e| GroundTruthEvent { src_ip: e.dst_ip, dst_ip: e.src_ip, src_port: e.dst_port, dst_port: e.src_port, ..e.clone() })
            .collect();
        prop_assert_eq!(label_flows(&labeled, &flipped), labeled);
    }

    #[test]
    fn adding_events_never_unlabels(seed in any::<u64>()) {
        let (labeled, mut events) = labeled_fixture(seed);
        events.push(GroundTruthEvent {
            src_ip: Ipv4Addr::new(203, 0, 113, 1),
            dst_ip: Ipv4Addr::new(203, 0, 113, 2),
            src_port: 0,
            dst_port: 0,
            protocol: 0,
            start_ms: 0,
            end_ms: u64::MAX,
            attack: "Other".into(),
        });
        let more = label_flows(&labeled, &events);
        for (a, b) in labeled.iter().zip(&more) {
            if a.label.as_ref().unwrap().is_malicious() {
                prop_assert!(b.label.as_ref().unwrap().is_malicious());
            }
        }
    }

    #[test]
    fn analytics_conserve_mass(seed in any::<u64>(), bins in 1usize..80, interval in 1_000u64..300_000) {
        let (flows, _) = labeled_fixture(seed);
        prop_assume!(!flows.is_empty());
        let mut per_class: HashMap<&str, u64> = HashMap::new();
        for f in &flows {
            *per_class.entry(f.class_name()).or_default() += 1;
        }
        let h = flow_length_histogram(&flows, bins).unwrap();
        prop_assert_eq!(h.total(), flows.len() as u64);
        for (class, counts) in &h.counts {
            prop_assert_eq!(counts.iter().sum::<u64>(), per_class[class.as_str()]);
        }
        let h = iat_histogram(&flows, IatDirection::SrcToDst, IatStat::Avg, bins).unwrap();
        prop_assert_eq!(h.total(), flows.len() as u64);

        let s = flows_per_interval(&flows, interval).unwrap();
        prop_assert_eq!(s.total().iter().sum::<u64>(), flows.len() as u64);
        for (class, v) in &s.values {
            prop_assert_eq!(v.iter().sum::<u64>(), per_class[class.as_str()]);
        }
        let s = numeric_series(&flows, NumericFeature::InBytes, interval, true).unwrap();
        prop_assert_eq!(s.total().iter().sum::<u64>(), flows.iter().map(|f| f.in_bytes).sum::<u64>());
        let u = unique_count_series(&flows, CategoricalField::DstIp, interval).unwrap();
        prop_assert_eq!(u.len(), s.len());
        for (i, &n) in u.values["All"].iter().enumerate() {
            prop_assert!(n <= s.total()[i].max(1) && n <= flows.len() as u64);
        }
    }

    #[test]
    fn dns_parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..600)) {
        let _ = parse_dns(&bytes);
    }
}

#[test]
fn write_read_identity_over_random_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for labeled in [true, false] {
        let records: Vec<FlowRecord> = (0..1000).map(|_| random_record(&mut rng, labeled)).collect();
        let mut buf = Vec::new();
        write_flows(&records, &mut buf, labeled).unwrap();
        assert_eq!(read_flows(&buf[..]).unwrap(), records);
    }
}
