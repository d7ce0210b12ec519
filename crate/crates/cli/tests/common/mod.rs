#![allow(dead_code)]

use std::collections::BTreeSet;
use std::net::Ipv4Addr;
use std::path::PathBuf;

use flowlens_core::dataset::{write_ground_truth, GroundTruthEvent};
use flowlens_core::packet::PacketRecord;
use flowlens_testkit::{random_schedule, write_fixture_pcap};

pub const FIXTURE_SEED: u64 = 2024;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn fixture_packets() -> Vec<PacketRecord> {
    let mut pk = random_schedule(FIXTURE_SEED, 30);
    pk.sort_by_key(|p| p.ts_micros);
    pk
}

pub fn fixture_pcap() -> Vec<u8> {
    write_fixture_pcap(&fixture_packets())
}

/// One "DoS" event per client talking to 192.168.0.4, spanning the capture.
pub fn fixture_events() -> Vec<GroundTruthEvent> {
    let pk = fixture_packets();
    let start_ms = pk[0].ts_micros / 1000;
    let end_ms = pk.last().unwrap().ts_micros / 1000 + 1;
    let target = Ipv4Addr::new(192, 168, 0, 4);
    let clients: BTreeSet<Ipv4Addr> = pk.iter().filter(|p| p.dst_ip == target).map(|p| p.src_ip).collect();
    clients
        .into_iter()
        .map(|c| GroundTruthEvent {
            src_ip: c,
            dst_ip: target,
            src_port: 0,
            dst_port: 0,
            protocol: 0,
            start_ms,
            end_ms,
            attack: "DoS".to_string(),
        })
        .collect()
}

pub fn fixture_gt() -> Vec<u8> {
    let mut out = Vec::new();
    write_ground_truth(&fixture_events(), &mut out).unwrap();
    out
}
