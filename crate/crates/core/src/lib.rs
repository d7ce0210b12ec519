//! Convert classic pcap captures into bidirectional flow records carrying
//! flow timing and inter-packet arrival time statistics, label them against
//! ground-truth attack intervals, and run temporal analyses over the result
//! (distributions, per-minute series, spectrograms).
//!
//! The pipeline is:
//!
//! ```text
//! pcap ──► CaptureReader ──► FlowCache ──► FlowRecord ──► write_flows
//!                                              │
//!                        GroundTruthEvent ──► label_flows ──► analytics / tfr
//! ```

pub mod analytics;
pub mod dataset;
pub mod flow;
pub mod label;
pub mod packet;
pub mod pcap;
pub mod proto;
pub mod record;
pub mod tfr;

pub use analytics::{AnalyticsError, Histogram, TimeSeries};
pub use dataset::{read_flows, read_ground_truth, write_flows, DatasetError, GroundTruthEvent};
pub use flow::{FlowCache, FlowKey, MeterConfig};
pub use label::{label_flows, summarize, LabelSummary};
pub use packet::PacketRecord;
pub use pcap::{open_capture, CaptureReader, IngestError, Next};
pub use record::{FlowRecord, Label, FLOW_COLUMNS};
pub use tfr::{Signal, SpectrogramMatrix, TfrError};
