//! FFT helpers shared by the feature extractors and the extension synthesis.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    // the planner keeps its own cache of plans
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let direction = if inverse {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    PLANNER.with(|cell| cell.borrow_mut().plan_fft(len, direction))
}

/// Non-negative frequency half of the DFT of `x` zero-padded to `fft_len`
/// (`fft_len / 2 + 1` bins).
pub fn rfft(x: &[f64], fft_len: usize) -> Vec<Complex64> {
    assert!(x.len() <= fft_len, "frame longer than fft");
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(fft_len, Complex64::new(0.0, 0.0));
    plan(fft_len, false).process(&mut buf);
    buf.truncate(fft_len / 2 + 1);
    buf
}

/// Inverse of [`rfft`] for an even `fft_len`; returns `fft_len` real samples.
pub fn irfft(half: &[Complex64], fft_len: usize) -> Vec<f64> {
    assert_eq!(half.len(), fft_len / 2 + 1);
    let mut buf = Vec::with_capacity(fft_len);
    buf.extend_from_slice(half);
    for k in (1..fft_len - half.len() + 1).rev() {
        buf.push(half[k].conj());
    }
    plan(fft_len, true).process(&mut buf);
    let scale = 1.0 / fft_len as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

pub fn power_spectrum(x: &[f64], fft_len: usize) -> Vec<f64> {
    rfft(x, fft_len).iter().map(|c| c.norm_sqr()).collect()
}

pub fn magnitude_spectrum(x: &[f64], fft_len: usize) -> Vec<f64> {
    rfft(x, fft_len).iter().map(|c| c.norm()).collect()
}

/// Frequency of bin `k` for an FFT of `fft_len` points.
pub fn bin_hz(k: usize, fft_len: usize, fs: f64) -> f64 {
    k as f64 * fs / fft_len as f64
}

/// Magnitude of the DFT of `x` evaluated at an arbitrary frequency.
pub fn dft_magnitude_at(x: &[f64], freq_hz: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * freq_hz / fs;
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        let ph = w * n as f64;
        re += v * ph.cos();
        im -= v * ph.sin();
    }
    (re * re + im * im).sqrt()
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfft_round_trip() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let back = irfft(&rfft(&x, 64), 64);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let p = power_spectrum(&x, 128);
        let total = p[0] + p[64] + 2.0 * p[1..64].iter().sum::<f64>();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        assert!((total / 128.0 - energy).abs() < 1e-9);
    }
}
