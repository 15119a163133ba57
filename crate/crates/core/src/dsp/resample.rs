//! 2x rate conversion between 8 and 16 kHz with a linear-phase half-band FIR.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::audio::AudioBuffer;
use crate::error::Result;

/// Taps on each side of the centre tap.
const HALF_LEN: usize = 32;
/// Kaiser beta for roughly 60 dB stopband attenuation.
const KAISER_BETA: f64 = 5.65;

/// Symmetric half-band low-pass (cutoff at a quarter of the sampling rate),
/// `2 * HALF_LEN + 1` taps, unit DC gain in each polyphase branch after
/// doubling.
pub fn halfband_taps() -> &'static [f64] {
    static TAPS: OnceLock<Vec<f64>> = OnceLock::new();
    TAPS.get_or_init(|| {
        let m = HALF_LEN as f64;
        let mut h: Vec<f64> = (0..=2 * HALF_LEN)
            .map(|i| {
                let n = i as f64 - m;
                let ideal = if n == 0.0 {
                    0.5
                } else {
                    (PI * n / 2.0).sin() / (PI * n)
                };
                let r = n / m;
                ideal * bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(KAISER_BETA)
            })
            .collect();
        // the odd-offset taps form one polyphase branch; normalize it to exactly 1/2
        let odd_sum: f64 = h
            .iter()
            .enumerate()
            .filter(|(i, _)| (i + HALF_LEN) % 2 == 1)
            .map(|(_, v)| v)
            .sum();
        for (i, v) in h.iter_mut().enumerate() {
            if (i + HALF_LEN) % 2 == 1 {
                *v *= 0.5 / odd_sum;
            } else if i != HALF_LEN {
                *v = 0.0;
            }
        }
        h
    })
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Centered convolution `y[m] = sum_k gain * h[k] * x[m + HALF_LEN - k]`, same length as `x`.
fn convolve_centered(x: &[f64], gain: f64) -> Vec<f64> {
    let h = halfband_taps();
    let n = x.len() as isize;
    (0..n)
        .map(|m| {
            let mut acc = 0.0;
            for (k, &hk) in h.iter().enumerate() {
                if hk == 0.0 {
                    continue;
                }
                let idx = m + HALF_LEN as isize - k as isize;
                if (0..n).contains(&idx) {
                    acc += hk * x[idx as usize];
                }
            }
            gain * acc
        })
        .collect()
}

/// `y[2n] = x[n]`, `y[2n + 1] = 0`. No anti-imaging filter: the spectral image is kept.
pub fn zero_insert_2x(buffer: &AudioBuffer) -> Result<AudioBuffer> {
    buffer.require_rate(8000)?;
    Ok(AudioBuffer::from_parts(zero_insert(buffer.samples()), 16000))
}

pub(crate) fn zero_insert(x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; 2 * x.len()];
    for (i, &s) in x.iter().enumerate() {
        y[2 * i] = s;
    }
    y
}

/// 8 kHz to 16 kHz; output length is exactly twice the input length.
pub fn upsample_2x(buffer: &AudioBuffer) -> Result<AudioBuffer> {
    buffer.require_rate(8000)?;
    Ok(AudioBuffer::from_parts(upsample(buffer.samples()), 16000))
}

pub(crate) fn upsample(x: &[f64]) -> Vec<f64> {
    convolve_centered(&zero_insert(x), 2.0)
}

/// 16 kHz to 8 kHz; output length is `floor(n / 2)`.
pub fn downsample_2x(buffer: &AudioBuffer) -> Result<AudioBuffer> {
    buffer.require_rate(16000)?;
    Ok(AudioBuffer::from_parts(downsample(buffer.samples()), 8000))
}

pub(crate) fn downsample(x: &[f64]) -> Vec<f64> {
    let h = halfband_taps();
    let n = x.len() as isize;
    (0..x.len() / 2)
        .map(|i| {
            let m = 2 * i as isize;
            let mut acc = 0.0;
            for (k, &hk) in h.iter().enumerate() {
                if hk == 0.0 {
                    continue;
                }
                let idx = m + HALF_LEN as isize - k as isize;
                if (0..n).contains(&idx) {
                    acc += hk * x[idx as usize];
                }
            }
            acc
        })
        .collect()
}
