//! Bidirectional flow metering.
//!
//! Packets are grouped by canonical 5-tuple into [`FlowAccumulator`]s held in
//! a [`FlowCache`]. A flow is exported when it reaches the active timeout
//! (measured from its first packet), the idle timeout (measured from its
//! newest packet), on TCP teardown, or when the cache is flushed.

mod accumulator;
mod cache;
mod direction;
mod key;

pub use accumulator::{FinalizeError, FlowAccumulator};
pub use cache::{CacheStats, FlowCache};
pub use direction::{serial_le, DirectionState, IatSummary};
pub use key::FlowKey;

pub const DEFAULT_ACTIVE_TIMEOUT_MS: u64 = 120_000;
pub const DEFAULT_IDLE_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeterConfig {
    pub active_timeout_ms: u64,
    pub idle_timeout_ms: u64,
    /// Export TCP flows on RST or once both sides have sent FIN.
    pub tcp_early_export: bool,
}

impl Default for MeterConfig {
    fn default() -> Self {
        MeterConfig {
            active_timeout_ms: DEFAULT_ACTIVE_TIMEOUT_MS,
            idle_timeout_ms: DEFAULT_IDLE_TIMEOUT_MS,
            tcp_early_export: true,
        }
    }
}
