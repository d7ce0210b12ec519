use super::TfrError;
use crate::analytics::NumericFeature;
use crate::record::FlowRecord;

pub const DEFAULT_SAMPLE_PERIOD_MS: u64 = 1000;

/// What each sample measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalMetric {
    /// Flows starting in the sample bin.
    #[default]
    FlowCount,
    /// Sum of a volume feature over flows starting in the bin.
    FeatureSum(NumericFeature),
}

/// Uniformly sampled traffic signal with no gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub t0_ms: u64,
    pub sample_period_ms: u64,
    pub samples: Vec<f64>,
}

impl Signal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sub-signal `[offset, offset + len)` with its origin shifted to match.
    pub fn slice(&self, offset: usize, len: usize) -> Signal {
        Signal {
            t0_ms: self.t0_ms + offset as u64 * self.sample_period_ms,
            sample_period_ms: self.sample_period_ms,
            samples: self.samples[offset..offset + len].to_vec(),
        }
    }
}

/// Sample one class's flows. The origin is the class's earliest flow start
/// and the signal runs to the bin holding its latest start.
///
/// # Panics
/// If `sample_period_ms` is zero.
pub fn build_signal(
    flows: &[FlowRecord],
    class: &str,
    sample_period_ms: u64,
    metric: SignalMetric,
) -> Result<Signal, TfrError> {
    assert!(sample_period_ms > 0, "sample period must be positive");
    let members: Vec<&FlowRecord> = flows.iter().filter(|f| f.class_name() == class).collect();
    let t0 = members
        .iter()
        .map(|f| f.flow_start_milliseconds)
        .min()
        .ok_or_else(|| TfrError::NoSuchClass(class.to_string()))?;
    let last = members.iter().map(|f| f.flow_start_milliseconds).max().unwrap_or(t0);
    let mut samples = vec![0.0; ((last - t0) / sample_period_ms + 1) as usize];
    for f in members {
        let i = ((f.flow_start_milliseconds - t0) / sample_period_ms) as usize;
        samples[i] += match metric {
            SignalMetric::FlowCount => 1.0,
            SignalMetric::FeatureSum(feat) => feat.value(f) as f64,
        };
    }
    Ok(Signal { t0_ms: t0, sample_period_ms, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Label;

    fn flow(start_ms: u64, class: &str) -> FlowRecord {
        let mut r = FlowRecord::zeroed();
        r.flow_start_milliseconds = start_ms;
        r.flow_end_milliseconds = start_ms;
        r.in_bytes = 10;
        r.label = Some(Label::class(class));
        r
    }

    #[test]
    fn counts_per_second() {
        let base = 1_600_000_000_000;
        let flows = [flow(base, "DoS"), flow(base + 400, "DoS"), flow(base + 2000, "DoS"), flow(base + 700, "Benign")];
        let s = build_signal(&flows, "DoS", 1000, SignalMetric::FlowCount).unwrap();
        assert_eq!(s.samples, vec![2.0, 0.0, 1.0]);
        assert_eq!(s.t0_ms, base);
        let s = build_signal(&flows, "DoS", 1000, SignalMetric::FeatureSum(NumericFeature::InBytes)).unwrap();
        assert_eq!(s.samples, vec![20.0, 0.0, 10.0]);
    }

    #[test]
    fn missing_class() {
        assert_eq!(
            build_signal(&[flow(0, "DoS")], "Scan", 1000, SignalMetric::FlowCount),
            Err(TfrError::NoSuchClass("Scan".into()))
        );
    }

    #[test]
    fn slice_moves_origin() {
        let s = Signal { t0_ms: 100, sample_period_ms: 10, samples: vec![1.0, 2.0, 3.0, 4.0] };
        let t = s.slice(1, 2);
        assert_eq!((t.t0_ms, t.samples), (110, vec![2.0, 3.0]));
    }
}
