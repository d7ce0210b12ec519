use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap};

use super::accumulator::FlowAccumulator;
use super::key::FlowKey;
use super::MeterConfig;
use crate::packet::{PacketRecord, TCP_FIN, TCP_RST, TCP_SYN};
use crate::record::FlowRecord;

struct Slot {
    acc: FlowAccumulator,
    deadline: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub packets_observed: u64,
    pub flows_exported: u64,
    /// Largest number of simultaneously resident flows.
    pub peak_resident: usize,
}

/// Resident flow table with timeout-driven export.
///
/// Expiry is tracked in a deadline index, so each packet costs
/// `O(log live_flows)` regardless of how many flows are resident.
pub struct FlowCache {
    config: MeterConfig,
    table: HashMap<FlowKey, Slot>,
    deadlines: BTreeSet<(u64, FlowKey)>,
    stats: CacheStats,
}

impl FlowCache {
    pub fn new(config: MeterConfig) -> Self {
        FlowCache { config, table: HashMap::new(), deadlines: BTreeSet::new(), stats: CacheStats::default() }
    }

    pub fn config(&self) -> &MeterConfig {
        &self.config
    }

    pub fn resident(&self) -> usize {
        self.table.len()
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    pub fn get(&self, key: &FlowKey) -> Option<&FlowAccumulator> {
        self.table.get(key).map(|s| &s.acc)
    }

    fn remove(&mut self, key: &FlowKey) -> Option<FlowRecord> {
        let slot = self.table.remove(key)?;
        self.deadlines.remove(&(slot.deadline, *key));
        self.stats.flows_exported += 1;
        Some(slot.acc.finalize().expect("resident flows hold at least one packet"))
    }

    /// Export every flow whose deadline is at or before `now_micros`.
    pub fn expire(&mut self, now_micros: u64, out: &mut Vec<FlowRecord>) {
        while let Some(&(deadline, key)) = self.deadlines.first() {
            if deadline > now_micros {
                break;
            }
            out.extend(self.remove(&key));
        }
    }

    /// Account one packet. Returns the flows exported by this call: expired
    /// flows first, then any flow this packet terminated.
    pub fn observe(&mut self, pkt: &PacketRecord) -> Vec<FlowRecord> {
        let mut out = Vec::new();
        self.stats.packets_observed += 1;
        self.expire(pkt.ts_micros, &mut out);

        let key = FlowKey::from_packet(pkt);
        if let Some(slot) = self.table.get(&key) {
            if slot.acc.closing {
                if is_teardown_segment(pkt) {
                    self.update_slot(&key, pkt);
                    out.extend(self.remove(&key));
                    return out;
                }
                out.extend(self.remove(&key));
            }
        }

        if let Entry::Vacant(e) = self.table.entry(key) {
            e.insert(Slot { acc: FlowAccumulator::new(pkt), deadline: 0 });
            self.stats.peak_resident = self.stats.peak_resident.max(self.table.len());
        }
        self.update_slot(&key, pkt);

        if self.config.tcp_early_export && pkt.is_tcp() {
            if pkt.tcp_flags & TCP_RST != 0 {
                out.extend(self.remove(&key));
            } else if pkt.tcp_flags & TCP_FIN != 0 {
                let slot = self.table.get_mut(&key).expect("slot just updated");
                if slot.acc.both_fins_seen() {
                    slot.acc.closing = true;
                }
            }
        }
        out
    }

    fn update_slot(&mut self, key: &FlowKey, pkt: &PacketRecord) {
        let slot = self.table.get_mut(key).expect("slot exists");
        let old = slot.deadline;
        slot.acc.update(pkt);
        let deadline = deadline_of(&self.config, &slot.acc);
        slot.deadline = deadline;
        if old != deadline {
            self.deadlines.remove(&(old, *key));
        }
        self.deadlines.insert((deadline, *key));
    }

    /// Export every resident flow, ordered by flow start.
    pub fn flush(&mut self) -> Vec<FlowRecord> {
        let mut keys: Vec<(u64, FlowKey)> = self.table.iter().map(|(k, s)| (s.acc.flow_start_micros, *k)).collect();
        keys.sort();
        keys.into_iter().filter_map(|(_, k)| self.remove(&k)).collect()
    }
}

/// Earliest timestamp at which the flow must be exported.
fn deadline_of(config: &MeterConfig, acc: &FlowAccumulator) -> u64 {
    let active = acc.flow_start_micros.saturating_add(config.active_timeout_ms * 1000);
    let last = acc.fwd.last_seen_micros.max(acc.rev.last_seen_micros);
    let idle = last.saturating_add(config.idle_timeout_ms * 1000);
    active.min(idle)
}

/// A segment that completes a FIN handshake: TCP without SYN and without data.
fn is_teardown_segment(pkt: &PacketRecord) -> bool {
    pkt.is_tcp() && pkt.tcp_flags & TCP_SYN == 0 && pkt.payload_len == 0
}
