//! Time-frequency analysis of per-class traffic signals.
//!
//! A class's flows are turned into a uniformly sampled [`Signal`] (flow
//! starts per sample bin by default), optionally cut down to its most
//! recurrent segment, and transformed with a short-time Fourier transform
//! into a [`SpectrogramMatrix`] that can be exported as CSV or SVG.

mod fft;
mod render;
mod segment;
mod signal;
mod stft;

use thiserror::Error;

pub use fft::{fft_in_place, Complex};
pub use render::render_spectrogram;
pub use segment::{extract_recurrent_segment, normalized_cross_correlation, RecurrentSegment, NCC_THRESHOLD};
pub use signal::{build_signal, Signal, SignalMetric, DEFAULT_SAMPLE_PERIOD_MS};
pub use stft::{dominant_bin, stft, SpectrogramMatrix, WindowFn, DB_EPSILON, DEFAULT_WINDOW_LEN};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TfrError {
    #[error("no flows of class '{0}'")]
    NoSuchClass(String),
    #[error("signal has {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("invalid window: {0}")]
    BadWindow(String),
}
