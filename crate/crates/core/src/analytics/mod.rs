//! Temporal analyses over flow records: flow-length and IAT distributions,
//! per-interval flow counts, feature sums and distinct-value counts.
//!
//! Outputs are grouped by class name ([`FlowRecord::class_name`]) and kept in
//! `BTreeMap`s so that iteration, CSV export and rendering are deterministic.

mod chart;
mod histogram;
mod series;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use chart::{render_chart, ChartKind, ChartOptions, Chartable, DEFAULT_PALETTE, LOG_FLOOR};
pub use histogram::{flow_length_histogram, histogram_by, iat_histogram, Histogram, DEFAULT_BINS};
pub use series::{
    flows_per_interval, numeric_series, unique_count_series, SeriesMetric, TimeSeries, ALL_CLASSES, DEFAULT_INTERVAL_MS,
};

use crate::record::FlowRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("no flows to analyze")]
    EmptyInput,
    #[error("bin count must be at least 1")]
    BadBins,
    #[error("interval must be at least 1 ms")]
    BadInterval,
}

/// Volume features aggregated per interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NumericFeature {
    InBytes,
    OutBytes,
    InPkts,
    OutPkts,
}

impl NumericFeature {
    pub const ALL: [NumericFeature; 4] =
        [NumericFeature::InBytes, NumericFeature::OutBytes, NumericFeature::InPkts, NumericFeature::OutPkts];

    pub fn value(self, r: &FlowRecord) -> u64 {
        match self {
            NumericFeature::InBytes => r.in_bytes,
            NumericFeature::OutBytes => r.out_bytes,
            NumericFeature::InPkts => r.in_pkts,
            NumericFeature::OutPkts => r.out_pkts,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            NumericFeature::InBytes => "IN_BYTES",
            NumericFeature::OutBytes => "OUT_BYTES",
            NumericFeature::InPkts => "IN_PKTS",
            NumericFeature::OutPkts => "OUT_PKTS",
        }
    }
}

impl fmt::Display for NumericFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for NumericFeature {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NumericFeature::ALL
            .into_iter()
            .find(|f| f.column().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown numeric feature '{s}' (IN_BYTES, OUT_BYTES, IN_PKTS, OUT_PKTS)"))
    }
}

/// Endpoint fields counted by distinct value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CategoricalField {
    SrcIp,
    DstIp,
    SrcPort,
    DstPort,
}

impl CategoricalField {
    pub const ALL: [CategoricalField; 4] =
        [CategoricalField::SrcIp, CategoricalField::DstIp, CategoricalField::SrcPort, CategoricalField::DstPort];

    /// The field as an integer key (addresses as their u32 value).
    pub fn key(self, r: &FlowRecord) -> u32 {
        match self {
            CategoricalField::SrcIp => u32::from(r.ipv4_src_addr),
            CategoricalField::DstIp => u32::from(r.ipv4_dst_addr),
            CategoricalField::SrcPort => u32::from(r.l4_src_port),
            CategoricalField::DstPort => u32::from(r.l4_dst_port),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CategoricalField::SrcIp => "src_ip",
            CategoricalField::DstIp => "dst_ip",
            CategoricalField::SrcPort => "src_port",
            CategoricalField::DstPort => "dst_port",
        }
    }
}

impl fmt::Display for CategoricalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CategoricalField {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CategoricalField::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown field '{s}' (src_ip, dst_ip, src_port, dst_port)"))
    }
}
