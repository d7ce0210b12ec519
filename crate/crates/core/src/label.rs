//! Ground-truth labeling and class composition summaries.
//!
//! A flow matches an event when the 5-tuples agree in either orientation
//! (zero ports/protocol in the event match anything) and the closed intervals
//! `[FLOW_START, FLOW_END]` and `[start_ms, end_ms]` share at least one
//! millisecond. Among several matching events the one with the largest
//! temporal overlap wins, then the earlier `start_ms`, then the
//! lexicographically smaller attack name.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::net::Ipv4Addr;

use crate::dataset::GroundTruthEvent;
use crate::record::{FlowRecord, Label, BENIGN};

/// Shared milliseconds of two closed intervals, or `None` when disjoint.
pub fn interval_overlap(a: (u64, u64), b: (u64, u64)) -> Option<u64> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo <= hi).then(|| hi - lo)
}

fn wildcard_eq<T: PartialEq + Default>(event: T, flow: T) -> bool {
    event == T::default() || event == flow
}

/// Tuple match in either orientation.
pub fn tuple_matches(flow: &FlowRecord, ev: &GroundTruthEvent) -> bool {
    if !wildcard_eq(ev.protocol, flow.protocol) {
        return false;
    }
    let forward = ev.src_ip == flow.ipv4_src_addr
        && ev.dst_ip == flow.ipv4_dst_addr
        && wildcard_eq(ev.src_port, flow.l4_src_port)
        && wildcard_eq(ev.dst_port, flow.l4_dst_port);
    let reverse = ev.src_ip == flow.ipv4_dst_addr
        && ev.dst_ip == flow.ipv4_src_addr
        && wildcard_eq(ev.src_port, flow.l4_dst_port)
        && wildcard_eq(ev.dst_port, flow.l4_src_port);
    forward || reverse
}

/// Is candidate `a` (with overlap `oa`) preferred over `b` (overlap `ob`)?
fn better(a: &GroundTruthEvent, oa: u64, b: &GroundTruthEvent, ob: u64) -> bool {
    oa.cmp(&ob).then_with(|| b.start_ms.cmp(&a.start_ms)).then_with(|| b.attack.cmp(&a.attack)) == Ordering::Greater
}

fn ip_pair(x: Ipv4Addr, y: Ipv4Addr) -> (Ipv4Addr, Ipv4Addr) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Events bucketed by unordered address pair, each bucket sorted by start
/// with a running maximum of end times for early termination.
pub struct EventIndex<'a> {
    buckets: HashMap<(Ipv4Addr, Ipv4Addr), Bucket<'a>>,
}

struct Bucket<'a> {
    events: Vec<&'a GroundTruthEvent>,
    max_end_prefix: Vec<u64>,
}

impl<'a> EventIndex<'a> {
    pub fn new(events: &'a [GroundTruthEvent]) -> Self {
        let mut grouped: HashMap<_, Vec<&GroundTruthEvent>> = HashMap::new();
        for e in events {
            grouped.entry(ip_pair(e.src_ip, e.dst_ip)).or_default().push(e);
        }
        let buckets = grouped
            .into_iter()
            .map(|(k, mut events)| {
                events.sort_by_key(|e| e.start_ms);
                let mut running = 0;
                let max_end_prefix = events
                    .iter()
                    .map(|e| {
                        running = running.max(e.end_ms);
                        running
                    })
                    .collect();
                (k, Bucket { events, max_end_prefix })
            })
            .collect();
        EventIndex { buckets }
    }

    /// Best matching event for a flow, if any.
    pub fn best_match(&self, flow: &FlowRecord) -> Option<&'a GroundTruthEvent> {
        let bucket = self.buckets.get(&ip_pair(flow.ipv4_src_addr, flow.ipv4_dst_addr))?;
        let span = (flow.flow_start_milliseconds, flow.flow_end_milliseconds);
        // Events starting after the flow ends cannot overlap.
        let upper = bucket.events.partition_point(|e| e.start_ms <= span.1);
        let mut best: Option<(&GroundTruthEvent, u64)> = None;
        for i in (0..upper).rev() {
            if bucket.max_end_prefix[i] < span.0 {
                break;
            }
            let ev = bucket.events[i];
            let Some(overlap) = interval_overlap(span, (ev.start_ms, ev.end_ms)) else {
                continue;
            };
            if !tuple_matches(flow, ev) {
                continue;
            }
            match best {
                Some((b, ob)) if !better(ev, overlap, b, ob) => {}
                _ => best = Some((ev, overlap)),
            }
        }
        best.map(|(e, _)| e)
    }
}

/// Label every flow; existing labels are replaced.
pub fn label_flows(flows: &[FlowRecord], events: &[GroundTruthEvent]) -> Vec<FlowRecord> {
    let index = EventIndex::new(events);
    flows
        .iter()
        .map(|f| {
            let mut out = f.clone();
            out.label = Some(match index.best_match(f) {
                Some(ev) => Label::class(ev.attack.clone()),
                None => Label::benign(),
            });
            out
        })
        .collect()
}

/// Class composition of a labeled flow set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSummary {
    /// Flow count per class, including "Benign".
    pub per_class: BTreeMap<String, u64>,
    pub benign: u64,
    pub malicious: u64,
    pub total: u64,
}

impl LabelSummary {
    pub fn malicious_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.malicious as f64 / self.total as f64
        }
    }

    /// Percentage with two decimals, e.g. "25.00%".
    pub fn malicious_percent(&self) -> String {
        format!("{:.2}%", self.malicious_fraction() * 100.0)
    }

    pub fn benign_percent(&self) -> String {
        if self.total == 0 {
            return "0.00%".to_string();
        }
        format!("{:.2}%", self.benign as f64 / self.total as f64 * 100.0)
    }
}

/// Count classes. Unlabeled flows are counted as benign.
pub fn summarize(flows: &[FlowRecord]) -> LabelSummary {
    let mut s = LabelSummary::default();
    for f in flows {
        let attack = f.label.as_ref().map_or(BENIGN, Label::attack);
        *s.per_class.entry(attack.to_string()).or_default() += 1;
        if attack == BENIGN {
            s.benign += 1;
        } else {
            s.malicious += 1;
        }
        s.total += 1;
    }
    s
}

impl fmt::Display for LabelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Malicious Flows#Benign Flows#Total Flows")?;
        writeln!(
            f,
            "{}({})#{}({})#{}",
            self.malicious,
            self.malicious_percent(),
            self.benign,
            self.benign_percent(),
            self.total
        )?;
        writeln!(f)?;
        writeln!(f, "Attack Type#Flows")?;
        if let Some(n) = self.per_class.get(BENIGN) {
            writeln!(f, "{BENIGN}#{n}")?;
        }
        for (class, n) in self.per_class.iter().filter(|(c, _)| c.as_str() != BENIGN) {
            writeln!(f, "{class}#{n}")?;
        }
        writeln!(f, "Total#{}", self.total)
    }
}
