use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use super::{AnalyticsError, CategoricalField, NumericFeature};
use crate::record::FlowRecord;

pub const DEFAULT_INTERVAL_MS: u64 = 60_000;

/// Key used for the single aggregate vector of class-independent series.
pub const ALL_CLASSES: &str = "All";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMetric {
    FlowCount,
    SumFeature(NumericFeature),
    UniqueCount(CategoricalField),
}

/// Values per fixed-width interval. Each flow falls into the interval that
/// contains its FLOW_START_MILLISECONDS; intervals without flows hold zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSeries {
    /// Start of interval 0, a multiple of `interval_ms`.
    pub t0_ms: u64,
    pub interval_ms: u64,
    pub values: BTreeMap<String, Vec<u64>>,
    pub metric: SeriesMetric,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element-wise sum over classes.
    pub fn total(&self) -> Vec<u64> {
        let mut out = vec![0; self.len()];
        for v in self.values.values() {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
        out
    }

    pub fn quantity(&self) -> String {
        match self.metric {
            SeriesMetric::FlowCount => "flows".to_string(),
            SeriesMetric::SumFeature(f) => f.column().to_string(),
            SeriesMetric::UniqueCount(f) => format!("unique {}", f.name()),
        }
    }

    /// `#`-separated table: interval start (Unix ms) then one column per class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("interval_start_ms");
        for class in self.values.keys() {
            s.push('#');
            s.push_str(class);
        }
        s.push('\n');
        for i in 0..self.len() {
            let _ = write!(s, "{}", self.t0_ms + i as u64 * self.interval_ms);
            for v in self.values.values() {
                let _ = write!(s, "#{}", v[i]);
            }
            s.push('\n');
        }
        s
    }
}

/// Aligned origin and vector length covering every flow start.
fn layout(flows: &[FlowRecord], interval_ms: u64) -> Result<(u64, usize), AnalyticsError> {
    if interval_ms == 0 {
        return Err(AnalyticsError::BadInterval);
    }
    let min = flows.iter().map(|f| f.flow_start_milliseconds).min().ok_or(AnalyticsError::EmptyInput)?;
    let max = flows.iter().map(|f| f.flow_start_milliseconds).max().unwrap_or(min);
    let t0 = min - min % interval_ms;
    Ok((t0, ((max - t0) / interval_ms + 1) as usize))
}

fn slot(f: &FlowRecord, t0: u64, interval_ms: u64) -> usize {
    ((f.flow_start_milliseconds - t0) / interval_ms) as usize
}

fn summed_series(
    flows: &[FlowRecord],
    interval_ms: u64,
    by_class: bool,
    metric: SeriesMetric,
    value: impl Fn(&FlowRecord) -> u64,
) -> Result<TimeSeries, AnalyticsError> {
    let (t0, len) = layout(flows, interval_ms)?;
    let mut values: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for f in flows {
        let class = if by_class { f.class_name() } else { ALL_CLASSES };
        let v = match values.get_mut(class) {
            Some(v) => v,
            None => values.entry(class.to_string()).or_insert_with(|| vec![0; len]),
        };
        v[slot(f, t0, interval_ms)] += value(f);
    }
    Ok(TimeSeries { t0_ms: t0, interval_ms, values, metric })
}

/// Flow count per interval, one vector per class.
pub fn flows_per_interval(flows: &[FlowRecord], interval_ms: u64) -> Result<TimeSeries, AnalyticsError> {
    summed_series(flows, interval_ms, true, SeriesMetric::FlowCount, |_| 1)
}

/// Sum of a volume feature per interval; a single "All" vector unless
/// `by_class` is set.
pub fn numeric_series(
    flows: &[FlowRecord],
    feature: NumericFeature,
    interval_ms: u64,
    by_class: bool,
) -> Result<TimeSeries, AnalyticsError> {
    summed_series(flows, interval_ms, by_class, SeriesMetric::SumFeature(feature), |f| feature.value(f))
}

/// Number of distinct values of an endpoint field per interval.
pub fn unique_count_series(
    flows: &[FlowRecord],
    field: CategoricalField,
    interval_ms: u64,
) -> Result<TimeSeries, AnalyticsError> {
    let (t0, len) = layout(flows, interval_ms)?;
    let mut seen: Vec<HashSet<u32>> = vec![HashSet::new(); len];
    for f in flows {
        seen[slot(f, t0, interval_ms)].insert(field.key(f));
    }
    let counts = seen.iter().map(|s| s.len() as u64).collect();
    Ok(TimeSeries {
        t0_ms: t0,
        interval_ms,
        values: BTreeMap::from([(ALL_CLASSES.to_string(), counts)]),
        metric: SeriesMetric::UniqueCount(field),
    })
}
