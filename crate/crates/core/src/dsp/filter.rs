//! Cascaded-biquad IIR filters and the POTS band limiter.
//!
//! The band limiter is a Butterworth high-pass (order 4) and low-pass
//! (order 10 at 16 kHz, 8 at 8 kHz) cascade run forward and backward, so the
//! net response is the squared magnitude with zero phase. Each section's
//! cutoff is placed so a single pass is 1.5 dB down at the band edge, which
//! puts the zero-phase response at -3 dB there.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const POTS_LOW_HZ: f64 = 300.0;
pub const POTS_HIGH_HZ: f64 = 3400.0;

/// Single-pass attenuation at each band edge, in dB.
const EDGE_DB_PER_PASS: f64 = 1.5;

/// Direct-form II transposed second-order section, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z2;
        let den = 1.0 + self.a[0] * z_inv + self.a[1] * z2;
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn new(sections: Vec<Biquad>) -> Self {
        Self { sections }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Butterworth low-pass with a -3 dB point at `cutoff_hz`; `order` must be even.
    pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Self {
        Self::butterworth(order, cutoff_hz, fs, false)
    }

    /// Butterworth high-pass with a -3 dB point at `cutoff_hz`; `order` must be even.
    pub fn butterworth_highpass(order: usize, cutoff_hz: f64, fs: f64) -> Self {
        Self::butterworth(order, cutoff_hz, fs, true)
    }

    fn butterworth(order: usize, cutoff_hz: f64, fs: f64, highpass: bool) -> Self {
        assert!(order >= 2 && order % 2 == 0, "order must be even");
        assert!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0);
        let k = (PI * cutoff_hz / fs).tan();
        let sections = (1..=order / 2)
            .map(|i| {
                let q = 2.0 * (PI * (2 * i - 1) as f64 / (2 * order) as f64).sin();
                let norm = 1.0 / (1.0 + q * k + k * k);
                let a = [2.0 * (k * k - 1.0) * norm, (1.0 - q * k + k * k) * norm];
                let b = if highpass {
                    [norm, -2.0 * norm, norm]
                } else {
                    let b0 = k * k * norm;
                    [b0, 2.0 * b0, b0]
                };
                Biquad { b, a }
            })
            .collect();
        Self { sections }
    }

    pub fn cascade(mut self, other: SosFilter) -> Self {
        self.sections.extend(other.sections);
        self
    }

    /// Complex response of one forward pass at `freq_hz`.
    pub fn response(&self, freq_hz: f64, fs: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / fs);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
        }
        y
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding at both ends.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let pad = pad.min(x.len() - 1);
        let mut ext = Vec::with_capacity(x.len() + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        let last = x[x.len() - 1];
        ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));

        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y.drain(..pad);
        y.truncate(x.len());
        y
    }
}

/// Designed POTS band limiter for one sampling rate.
#[derive(Debug, Clone)]
pub struct PotsBand {
    filter: SosFilter,
    fs: f64,
}

impl PotsBand {
    pub fn for_rate(sample_rate_hz: u32) -> Result<Self> {
        let lp_order = match sample_rate_hz {
            8000 => 8,
            16000 => 10,
            r => return Err(Error::UnsupportedRate(r, "8000 or 16000")),
        };
        let fs = f64::from(sample_rate_hz);
        let hp_order = 4;
        let hp = SosFilter::butterworth_highpass(hp_order, edge_cutoff(POTS_LOW_HZ, fs, hp_order, true), fs);
        let lp = SosFilter::butterworth_lowpass(lp_order, edge_cutoff(POTS_HIGH_HZ, fs, lp_order, false), fs);
        Ok(Self {
            filter: hp.cascade(lp),
            fs,
        })
    }

    pub fn sos(&self) -> &SosFilter {
        &self.filter
    }

    /// Net zero-phase power gain in dB at `freq_hz`.
    pub fn gain_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.filter.response(freq_hz, self.fs).norm_sqr().log10()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        // 20 ms of padding covers the high-pass settling time
        self.filter.filtfilt(x, (self.fs / 50.0) as usize)
    }
}

/// Analog-prewarped cutoff that puts a single pass `EDGE_DB_PER_PASS` down at `edge_hz`.
fn edge_cutoff(edge_hz: f64, fs: f64, order: usize, highpass: bool) -> f64 {
    let ratio = (10f64.powf(EDGE_DB_PER_PASS / 10.0) - 1.0).powf(1.0 / (2 * order) as f64);
    let k_edge = (PI * edge_hz / fs).tan();
    let k_cut = if highpass { k_edge * ratio } else { k_edge / ratio };
    k_cut.atan() * fs / PI
}

/// Band-limits a buffer to the [300, 3400] Hz telephone band, zero-phase.
pub fn potsband_filter(buffer: &AudioBuffer) -> Result<AudioBuffer> {
    let band = PotsBand::for_rate(buffer.sample_rate_hz())?;
    Ok(buffer.with_samples(band.apply(buffer.samples())))
}
