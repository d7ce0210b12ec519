//! Synthetic fixtures and brute-force oracles for the flowlens test suites.
//!
//! Nothing in [`oracle`] reuses the flow meter's accumulators: flows are
//! regrouped from materialized packet lists and every statistic is computed
//! from scratch.

pub mod build;
pub mod oracle;
pub mod pcapgen;
pub mod records;
pub mod scenario;

pub use oracle::{diff_records, meter_flows, oracle_flows, oracle_labels};
pub use pcapgen::{encode_frame, write_fixture_pcap, write_fixture_pcap_ns};
pub use records::random_record;
pub use scenario::{benchmark_scenario, random_schedule, scenarios, SyntheticScenario, BENCH_SEED, BENCH_TUPLES};
