use super::{Signal, TfrError};

/// Correlation above which two candidate segments count as repeats.
pub const NCC_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentSegment {
    /// Sample offset of the segment in the source signal.
    pub offset: usize,
    /// Number of other candidates correlating above the threshold.
    pub score: usize,
    pub segment: Signal,
}

/// Pearson correlation of two equal-length slices; 0 when either is flat.
pub fn normalized_cross_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        num += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= f64::EPSILON * n || vb <= f64::EPSILON * n {
        return 0.0;
    }
    num / (va * vb).sqrt()
}

/// Pick the segment that recurs most often. Candidates start every
/// `max(seg_len / 4, 1)` samples; ties go to the earliest offset.
pub fn extract_recurrent_segment(sig: &Signal, seg_len: usize) -> Result<RecurrentSegment, TfrError> {
    if seg_len == 0 || sig.len() < 2 * seg_len {
        return Err(TfrError::SignalTooShort { len: sig.len(), needed: 2 * seg_len.max(1) });
    }
    let stride = (seg_len / 4).max(1);
    let offsets: Vec<usize> = (0..=sig.len() - seg_len).step_by(stride).collect();
    let window = |o: usize| &sig.samples[o..o + seg_len];
    let mut scores = vec![0usize; offsets.len()];
    for i in 0..offsets.len() {
        for j in i + 1..offsets.len() {
            if normalized_cross_correlation(window(offsets[i]), window(offsets[j])) > NCC_THRESHOLD {
                scores[i] += 1;
                scores[j] += 1;
            }
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(RecurrentSegment { offset: offsets[best], score: scores[best], segment: sig.slice(offsets[best], seg_len) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(samples: Vec<f64>) -> Signal {
        Signal { t0_ms: 0, sample_period_ms: 1000, samples }
    }

    #[test]
    fn periodic_signal_repeats() {
        let period = [0.0, 5.0, 1.0, 0.0, 9.0, 2.0, 0.0, 3.0];
        let x: Vec<f64> = period.iter().cycle().take(64).copied().collect();
        let r = extract_recurrent_segment(&sig(x.clone()), 8).unwrap();
        assert_eq!(r.offset % 8, 0);
        for later in (r.offset + 8..=56).step_by(8) {
            let c = normalized_cross_correlation(&r.segment.samples, &x[later..later + 8]);
            assert!((c - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_signal_takes_first() {
        let r = extract_recurrent_segment(&sig(vec![3.0; 40]), 8).unwrap();
        assert_eq!((r.offset, r.score), (0, 0));
    }

    #[test]
    fn too_short() {
        assert!(matches!(extract_recurrent_segment(&sig(vec![1.0; 15]), 8), Err(TfrError::SignalTooShort { .. })));
    }

    #[test]
    fn ncc_bounds() {
        assert!((normalized_cross_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((normalized_cross_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(normalized_cross_correlation(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }
}
