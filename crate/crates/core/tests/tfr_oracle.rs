//! STFT against a direct O(N^2) DFT.

use std::f64::consts::PI;

use flowlens_core::tfr::{extract_recurrent_segment, normalized_cross_correlation, stft, Signal, WindowFn};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let ang = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re.hypot(im)
        })
        .collect()
}

fn rel_close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(1e-300)
}

fn signal(samples: Vec<f64>) -> Signal {
    Signal { t0_ms: 0, sample_period_ms: 1000, samples }
}

#[test]
fn matches_naive_dft_on_random_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x: Vec<f64> = (0..256).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let m = stft(&signal(x.clone()), 256, 256, WindowFn::Rectangular).unwrap();
        let want = naive_dft_magnitudes(&x);
        let scale = want.iter().cloned().fold(0.0, f64::max);
        for (a, b) in m.magnitudes[0].iter().zip(&want) {
            assert!(rel_close(*a, *b, scale), "{a} vs {b}");
        }
    }
}

#[test]
fn hann_frames_match_windowed_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..5.0)).collect();
    let m = stft(&signal(x.clone()), 64, 16, WindowFn::Hann).unwrap();
    for f in 0..m.frames {
        let frame: Vec<f64> =
            (0..64).map(|i| x[f * 16 + i] * (0.5 - 0.5 * (2.0 * PI * i as f64 / 64.0).cos())).collect();
        let want = naive_dft_magnitudes(&frame);
        let scale = want.iter().cloned().fold(0.0, f64::max);
        for (a, b) in m.magnitudes[f].iter().zip(&want) {
            assert!(rel_close(*a, *b, scale));
        }
    }
}

#[test]
fn periodic_signal_segment_repeats() {
    let period = [0.0, 4.0, 4.0, 1.0, 0.0, 0.0, 7.0, 2.0];
    let x: Vec<f64> = period.iter().cycle().take(80).copied().collect();
    let r = extract_recurrent_segment(&signal(x.clone()), 8).unwrap();
    for start in (r.offset..=72).step_by(8) {
        assert!((normalized_cross_correlation(&r.segment.samples, &x[start..start + 8]) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn noise_segment_scores_match_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<f64> = (0..256).map(|_| rng.gen_range(0.0..1.0)).collect();
    let seg = 32;
    let r = extract_recurrent_segment(&signal(x.clone()), seg).unwrap();
    let offsets: Vec<usize> = (0..=x.len() - seg).step_by(seg / 4).collect();
    let score = |o: usize| {
        offsets
            .iter()
            .filter(|&&p| p != o && normalized_cross_correlation(&x[o..o + seg], &x[p..p + seg]) > 0.9)
            .count()
    };
    let best = offsets.iter().map(|&o| score(o)).max().unwrap();
    let first = *offsets.iter().find(|&&o| score(o) == best).unwrap();
    assert_eq!((r.offset, r.score), (first, best));
}

proptest! {
    #[test]
    fn linearity(seed in any::<u64>(), a in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ax: Vec<f64> = x.iter().map(|v| v * a).collect();
        let m1 = stft(&signal(x), 32, 8, WindowFn::Hann).unwrap();
        let m2 = stft(&signal(ax), 32, 8, WindowFn::Hann).unwrap();
        for (r1, r2) in m1.magnitudes.iter().zip(&m2.magnitudes) {
            let scale = r2.iter().cloned().fold(0.0, f64::max);
            for (u, v) in r1.iter().zip(r2) {
                prop_assert!(rel_close(u * a, *v, scale));
            }
        }
    }

    #[test]
    fn parseval_per_frame(seed in any::<u64>(), log_n in 1u32..9, hop_frac in 1usize..=4) {
        let n = 1usize << log_n;
        let hop = (n * hop_frac / 4).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = n + rng.gen_range(0..3 * n);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let m = stft(&signal(x.clone()), n, hop, WindowFn::Rectangular).unwrap();
        prop_assert_eq!(m.frames, (len - n) / hop + 1);
        for f in 0..m.frames {
            let time: f64 = x[f * hop..f * hop + n].iter().map(|v| v * v).sum();
            // two-sided spectrum from the one-sided half
            let mags = &m.magnitudes[f];
            let mut freq = mags[0].powi(2) + mags[n / 2].powi(2);
            for v in &mags[1..n / 2] {
                freq += 2.0 * v.powi(2);
            }
            if n == 2 {
                freq = mags[0].powi(2) + mags[1].powi(2);
            }
            prop_assert!(rel_close(time, freq / n as f64, time));
        }
    }

    #[test]
    fn magnitudes_non_negative_and_zero_for_zero(len in 64usize..300) {
        let m = stft(&signal(vec![0.0; len]), 64, 32, WindowFn::Hann).unwrap();
        prop_assert!(m.magnitudes.iter().flatten().all(|&v| v == 0.0));
    }
}
