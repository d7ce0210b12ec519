use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::fft::{fft_in_place, Complex};
use super::{Signal, TfrError};

pub const DEFAULT_WINDOW_LEN: usize = 64;
/// Added to magnitudes before taking decibels.
pub const DB_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowFn {
    /// Periodic Hann, `0.5 - 0.5·cos(2πn/N)`.
    #[default]
    Hann,
    Rectangular,
}

impl WindowFn {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowFn::Rectangular => vec![1.0; n],
            WindowFn::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }
}

impl fmt::Display for WindowFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowFn::Hann => "hann",
            WindowFn::Rectangular => "rectangular",
        })
    }
}

impl FromStr for WindowFn {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(WindowFn::Hann),
            "rectangular" | "rect" => Ok(WindowFn::Rectangular),
            _ => Err(format!("unknown window function '{s}' (hann, rectangular)")),
        }
    }
}

/// One-sided STFT magnitudes, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramMatrix {
    pub window_len: usize,
    pub hop: usize,
    pub window_fn: WindowFn,
    pub frames: usize,
    /// `frames × (window_len / 2 + 1)`.
    pub magnitudes: Vec<Vec<f64>>,
    /// `20·log10(magnitude + DB_EPSILON)`, same shape.
    pub db: Vec<Vec<f64>>,
    pub sample_period_ms: u64,
    pub t0_ms: u64,
}

impl SpectrogramMatrix {
    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    /// Start of a frame in seconds from the signal origin.
    pub fn frame_time_s(&self, frame: usize) -> f64 {
        (frame * self.hop) as f64 * self.sample_period_ms as f64 / 1000.0
    }

    /// Frequency of a bin in cycles per second.
    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * 1000.0 / (self.window_len as f64 * self.sample_period_ms as f64)
    }

    /// `#`-separated magnitudes, one row per frame.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frame#time_s");
        for b in 0..self.bins() {
            let _ = write!(s, "#bin{b}");
        }
        s.push('\n');
        for (i, row) in self.magnitudes.iter().enumerate() {
            let _ = write!(s, "{i}#{:.6}", self.frame_time_s(i));
            for m in row {
                let _ = write!(s, "#{m:.6}");
            }
            s.push('\n');
        }
        s
    }
}

pub fn frame_count(len: usize, window_len: usize, hop: usize) -> usize {
    (len - window_len) / hop + 1
}

/// Short-time Fourier transform of a signal.
pub fn stft(sig: &Signal, window_len: usize, hop: usize, window_fn: WindowFn) -> Result<SpectrogramMatrix, TfrError> {
    if window_len < 2 || !window_len.is_power_of_two() {
        return Err(TfrError::BadWindow(format!("length {window_len} is not a power of two >= 2")));
    }
    if hop == 0 || hop > window_len {
        return Err(TfrError::BadWindow(format!("hop {hop} outside 1..={window_len}")));
    }
    if sig.len() < window_len {
        return Err(TfrError::SignalTooShort { len: sig.len(), needed: window_len });
    }
    let coeffs = window_fn.coefficients(window_len);
    let frames = frame_count(sig.len(), window_len, hop);
    let mut buf = vec![Complex::default(); window_len];
    let mut magnitudes = Vec::with_capacity(frames);
    for f in 0..frames {
        let slice = &sig.samples[f * hop..f * hop + window_len];
        for ((b, x), w) in buf.iter_mut().zip(slice).zip(&coeffs) {
            *b = Complex::new(x * w, 0.0);
        }
        fft_in_place(&mut buf);
        magnitudes.push(buf[..=window_len / 2].iter().map(|c| c.norm()).collect::<Vec<f64>>());
    }
    let db = magnitudes.iter().map(|row| row.iter().map(|m| 20.0 * (m + DB_EPSILON).log10()).collect()).collect();
    Ok(SpectrogramMatrix {
        window_len,
        hop,
        window_fn,
        frames,
        magnitudes,
        db,
        sample_period_ms: sig.sample_period_ms,
        t0_ms: sig.t0_ms,
    })
}

/// Non-DC bin with the largest magnitude summed over frames (lowest bin on ties).
pub fn dominant_bin(m: &SpectrogramMatrix) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for b in 1..m.bins() {
        let energy: f64 = m.magnitudes.iter().map(|row| row[b]).sum();
        if best.is_none_or(|(_, e)| energy > e) {
            best = Some((b, energy));
        }
    }
    best.map(|(b, _)| b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(samples: Vec<f64>) -> Signal {
        Signal { t0_ms: 0, sample_period_ms: 1000, samples }
    }

    #[test]
    fn constant_signal_is_dc() {
        let m = stft(&sig(vec![1.0; 8]), 8, 8, WindowFn::Rectangular).unwrap();
        assert_eq!(m.frames, 1);
        assert!((m.magnitudes[0][0] - 8.0).abs() < 1e-12);
        assert!(m.magnitudes[0][1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_tone() {
        let x = (0..8).map(|n| (2.0 * PI * 2.0 * n as f64 / 8.0).cos()).collect();
        let m = stft(&sig(x), 8, 8, WindowFn::Rectangular).unwrap();
        for (b, v) in m.magnitudes[0].iter().enumerate() {
            let want = if b == 2 { 4.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-9, "bin {b}: {v}");
        }
        assert_eq!(dominant_bin(&m), Some(2));
    }

    #[test]
    fn frame_count_and_shape() {
        let m = stft(&sig(vec![0.5; 100]), 16, 5, WindowFn::Hann).unwrap();
        assert_eq!(m.frames, (100 - 16) / 5 + 1);
        assert_eq!(m.magnitudes.len(), m.frames);
        assert!(m.magnitudes.iter().all(|r| r.len() == 9));
        assert_eq!(m.db.len(), m.frames);
    }

    #[test]
    fn zero_signal_floor() {
        let m = stft(&sig(vec![0.0; 64]), 64, 32, WindowFn::Hann).unwrap();
        assert!(m.magnitudes.iter().flatten().all(|&v| v == 0.0));
        assert!(m.db.iter().flatten().all(|&v| (v + 240.0).abs() < 1e-9));
    }

    #[test]
    fn hann_is_periodic() {
        let w = WindowFn::Hann.coefficients(4);
        let want = [0.0, 0.5, 1.0, 0.5];
        assert!(w.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn parameter_errors() {
        let s = sig(vec![1.0; 16]);
        assert!(matches!(stft(&s, 12, 4, WindowFn::Hann), Err(TfrError::BadWindow(_))));
        assert!(matches!(stft(&s, 1, 1, WindowFn::Hann), Err(TfrError::BadWindow(_))));
        assert!(matches!(stft(&s, 8, 0, WindowFn::Hann), Err(TfrError::BadWindow(_))));
        assert!(matches!(stft(&s, 8, 9, WindowFn::Hann), Err(TfrError::BadWindow(_))));
        assert_eq!(stft(&s, 32, 16, WindowFn::Hann), Err(TfrError::SignalTooShort { len: 16, needed: 32 }));
    }

    #[test]
    fn csv_layout() {
        let m = stft(&sig(vec![1.0; 4]), 4, 4, WindowFn::Rectangular).unwrap();
        assert_eq!(m.to_csv(), "frame#time_s#bin0#bin1#bin2\n0#0.000000#4.000000#0.000000#0.000000\n");
    }

    #[test]
    fn axis_units() {
        let m =
            stft(&Signal { t0_ms: 0, sample_period_ms: 500, samples: vec![0.0; 16] }, 8, 4, WindowFn::Hann).unwrap();
        assert_eq!(m.frame_time_s(1), 2.0);
        assert_eq!(m.bin_hz(4), 1.0);
    }
}
