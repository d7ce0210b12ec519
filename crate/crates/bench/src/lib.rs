//! Shared inputs for the criterion benches.

use flowlens_core::dataset::GroundTruthEvent;
use flowlens_core::packet::PacketRecord;
use flowlens_core::tfr::Signal;
use flowlens_testkit::benchmark_scenario;

/// The seeded benchmark schedule, its pcap encoding and ground truth.
pub struct BenchInput {
    pub packets: Vec<PacketRecord>,
    pub pcap: Vec<u8>,
    pub events: Vec<GroundTruthEvent>,
}

pub fn bench_input() -> BenchInput {
    let sc = benchmark_scenario();
    let pcap = sc.pcap_bytes();
    BenchInput { packets: sc.packets, pcap, events: sc.events }
}

/// Pulse train with a period of `period` samples plus a slow ramp.
pub fn pulse_signal(len: usize, period: usize) -> Signal {
    let samples = (0..len).map(|i| if i % period < period / 2 { 40.0 } else { 2.0 } + i as f64 * 1e-3).collect();
    Signal { t0_ms: 0, sample_period_ms: 1000, samples }
}
