//! Flow meter against the brute-force oracle, directly and through pcap.

use flowlens_core::flow::MeterConfig;
use flowlens_core::pcap::CaptureReader;
use flowlens_testkit::{diff_records, meter_flows, oracle_flows, random_schedule, scenarios};
use proptest::prelude::*;

#[test]
fn every_scenario_matches_oracle() {
    for sc in scenarios() {
        let got = meter_flows(&sc.packets, &sc.config);
        if let Err(e) = diff_records(&got, &sc.expected_flows()) {
            panic!("{}: {e}", sc.name);
        }
    }
}

#[test]
fn pcap_path_matches_direct_path() {
    for sc in scenarios() {
        let bytes = sc.pcap_bytes();
        let decoded: Vec<_> = CaptureReader::new(&bytes[..]).unwrap().collect::<Result<_, _>>().unwrap();
        assert_eq!(decoded, sc.packets, "{}", sc.name);
    }
}

#[test]
fn iat_example_values() {
    let sc = scenarios().into_iter().find(|s| s.name == "iat_three_packets").unwrap();
    let r = &meter_flows(&sc.packets, &sc.config)[0];
    assert_eq!(
        (r.src_to_dst_iat_min, r.src_to_dst_iat_max, r.src_to_dst_iat_avg, r.src_to_dst_iat_stddev),
        (10, 20, 15, 5)
    );
}

#[test]
fn ten_minute_stream_gives_five_records() {
    let sc = scenarios().into_iter().find(|s| s.name == "active_timeout_stream").unwrap();
    let flows = meter_flows(&sc.packets, &sc.config);
    assert_eq!(flows.len(), 5);
    assert!(flows.iter().all(|f| f.flow_duration_milliseconds < 120_000));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_schedules_match_oracle(
        seed in any::<u64>(),
        sessions in 1usize..30,
        active in 2_000u64..200_000,
        idle in 1_000u64..60_000,
        early in any::<bool>(),
    ) {
        let packets = random_schedule(seed, sessions);
        let cfg = MeterConfig { active_timeout_ms: active, idle_timeout_ms: idle, tcp_early_export: early };
        let got = meter_flows(&packets, &cfg);
        prop_assert!(diff_records(&got, &oracle_flows(&packets, &cfg)).is_ok(),
            "{:?}", diff_records(&got, &oracle_flows(&packets, &cfg)));
    }
}
