use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::AnalyticsError;
use crate::record::{FlowRecord, IatDirection, IatStat};

pub const DEFAULT_BINS: usize = 50;

/// Per-class counts over uniform bins spanning the data range.
///
/// Bins are left-closed `[edge_i, edge_i+1)` except the last, which is
/// closed on both sides. When every value is equal the histogram collapses
/// to a single bin `[v, v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bin_count: usize,
    pub edges: Vec<f64>,
    pub counts: BTreeMap<String, Vec<u64>>,
    /// What was binned, used for axis titles and CSV headers.
    pub quantity: String,
}

impl Histogram {
    /// Bin index for a value inside `[lo, hi]`.
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        if !v.is_finite() || v < self.lo || v > self.hi {
            return None;
        }
        if self.bin_count == 1 || self.hi == self.lo {
            return Some(0);
        }
        let idx = ((v - self.lo) / (self.hi - self.lo) * self.bin_count as f64).floor() as usize;
        Some(idx.min(self.bin_count - 1))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().flatten().sum()
    }

    /// Element-wise sum over classes.
    pub fn all_classes(&self) -> Vec<u64> {
        let mut out = vec![0; self.bin_count];
        for v in self.counts.values() {
            for (o, c) in out.iter_mut().zip(v) {
                *o += c;
            }
        }
        out
    }

    /// `#`-separated table: bin bounds then one column per class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo#bin_hi");
        for class in self.counts.keys() {
            s.push('#');
            s.push_str(class);
        }
        s.push('\n');
        for b in 0..self.bin_count {
            let _ = write!(s, "{}#{}", fmt_edge(self.edges[b]), fmt_edge(self.edges[b + 1]));
            for v in self.counts.values() {
                let _ = write!(s, "#{}", v[b]);
            }
            s.push('\n');
        }
        s
    }
}

fn fmt_edge(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

/// Histogram of an arbitrary per-flow value, grouped by class.
pub fn histogram_by(
    flows: &[FlowRecord],
    bins: usize,
    quantity: &str,
    value: impl Fn(&FlowRecord) -> f64,
) -> Result<Histogram, AnalyticsError> {
    if bins == 0 {
        return Err(AnalyticsError::BadBins);
    }
    let values: Vec<(f64, &str)> =
        flows.iter().map(|f| (value(f), f.class_name())).filter(|(v, _)| v.is_finite()).collect();
    if values.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let bin_count = if lo == hi { 1 } else { bins };
    let edges: Vec<f64> = if lo == hi {
        vec![lo, hi]
    } else {
        let width = (hi - lo) / bin_count as f64;
        (0..=bin_count).map(|i| if i == bin_count { hi } else { lo + width * i as f64 }).collect()
    };
    let mut h = Histogram { lo, hi, bin_count, edges, counts: BTreeMap::new(), quantity: quantity.to_string() };
    for (v, class) in values {
        let b = h.bin_of(v).expect("value lies within the data range");
        h.counts.entry(class.to_string()).or_insert_with(|| vec![0; bin_count])[b] += 1;
    }
    Ok(h)
}

/// Distribution of FLOW_DURATION_MILLISECONDS.
pub fn flow_length_histogram(flows: &[FlowRecord], bins: usize) -> Result<Histogram, AnalyticsError> {
    histogram_by(flows, bins, "FLOW_DURATION_MILLISECONDS", |f| f.flow_duration_milliseconds as f64)
}

/// Distribution of one IAT statistic in one direction.
pub fn iat_histogram(
    flows: &[FlowRecord],
    direction: IatDirection,
    stat: IatStat,
    bins: usize,
) -> Result<Histogram, AnalyticsError> {
    let quantity = format!("{}_IAT_{}", direction.to_string().to_uppercase(), stat.to_string().to_uppercase());
    histogram_by(flows, bins, &quantity, |f| f.iat(direction, stat) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Label;

    fn flow(duration: u64, class: &str) -> FlowRecord {
        let mut r = FlowRecord::zeroed();
        r.flow_duration_milliseconds = duration;
        r.label = Some(Label::class(class));
        r
    }

    #[test]
    fn two_bins_split_range() {
        let h = flow_length_histogram(&[flow(0, "Benign"), flow(100, "Benign")], 2).unwrap();
        assert_eq!(h.edges, vec![0.0, 50.0, 100.0]);
        assert_eq!(h.counts["Benign"], vec![1, 1]);
    }

    #[test]
    fn degenerate_range_single_bin() {
        let flows: Vec<_> = (0..7).map(|_| flow(42, "DoS")).collect();
        let h = flow_length_histogram(&flows, 50).unwrap();
        assert_eq!(h.bin_count, 1);
        assert_eq!(h.edges, vec![42.0, 42.0]);
        assert_eq!(h.counts["DoS"], vec![7]);
    }

    #[test]
    fn per_class_vectors() {
        let flows = vec![flow(1, "A"), flow(5, "B"), flow(9, "A"), flow(3, "B"), flow(3, "B")];
        let h = flow_length_histogram(&flows, 50).unwrap();
        assert_eq!(h.counts["A"].iter().sum::<u64>(), 2);
        assert_eq!(h.counts["B"].iter().sum::<u64>(), 3);
        assert_eq!(h.edges.len(), 51);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(h.all_classes().iter().sum::<u64>(), 5);
    }

    #[test]
    fn iat_average_bins() {
        let mut flows = Vec::new();
        for v in [10, 10, 20] {
            let mut f = flow(0, "Benign");
            f.src_to_dst_iat_avg = v;
            f.dst_to_src_iat_avg = 99;
            flows.push(f);
        }
        let h = iat_histogram(&flows, IatDirection::SrcToDst, IatStat::Avg, 2).unwrap();
        assert_eq!(h.counts["Benign"], vec![2, 1]);
        assert_eq!(h.quantity, "SRC_TO_DST_IAT_AVG");
        let h = iat_histogram(&flows, IatDirection::DstToSrc, IatStat::Avg, 2).unwrap();
        assert_eq!(h.bin_count, 1);
        let h = iat_histogram(&flows, IatDirection::SrcToDst, IatStat::Stddev, 50).unwrap();
        assert_eq!(h.bin_count, 1);
    }

    #[test]
    fn errors() {
        assert_eq!(flow_length_histogram(&[], 50), Err(AnalyticsError::EmptyInput));
        assert_eq!(flow_length_histogram(&[flow(1, "A")], 0), Err(AnalyticsError::BadBins));
    }

    #[test]
    fn csv_layout() {
        let h = flow_length_histogram(&[flow(0, "B"), flow(100, "A")], 2).unwrap();
        assert_eq!(h.to_csv(), "bin_lo#bin_hi#A#B\n0#50#0#1\n50#100#1#0\n");
    }
}
