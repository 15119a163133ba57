//! Mel-frequency cepstrum: magnitude spectrum, triangular mel filterbank,
//! log, cosine transform.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectrum;

/// Filter outputs below this fraction of the frame's largest output are floored.
const LOG_FLOOR_REL: f64 = 1e-5;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Default filter count `floor(3 ln fs)`: 26 at 8 kHz, 29 at 16 kHz.
pub fn default_filter_count(fs: u32) -> usize {
    (3.0 * f64::from(fs).ln()).floor() as usize
}

/// Triangular mel filters with unity peak. Each filter's output is the
/// weighted mean of the magnitude spectrum under it, so a flat spectrum
/// gives equal outputs in every band.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    filters: Vec<(usize, Vec<f64>)>,
    fft_len: usize,
}

impl MelFilterbank {
    pub fn new(fs: u32, fft_len: usize, n_filters: usize, f_lo: f64, f_hi: f64) -> Result<Self> {
        let fs_f = f64::from(fs);
        if n_filters == 0 || !(0.0..f_hi).contains(&f_lo) || f_hi > fs_f / 2.0 {
            return Err(Error::InvalidParameter(format!(
                "mel filterbank of {n_filters} filters over [{f_lo}, {f_hi}] Hz at {fs} Hz"
            )));
        }
        let (m_lo, m_hi) = (hz_to_mel(f_lo), hz_to_mel(f_hi));
        let step = (m_hi - m_lo) / (n_filters + 1) as f64;
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(m_lo + step * i as f64))
            .collect();
        let n_bins = fft_len / 2 + 1;
        let bin_hz = fs_f / fft_len as f64;
        let filters = (0..n_filters)
            .map(|j| {
                let (lo, mid, hi) = (edges[j], edges[j + 1], edges[j + 2]);
                let first = ((lo / bin_hz).floor() as usize).min(n_bins - 1);
                let last = ((hi / bin_hz).ceil() as usize).min(n_bins - 1);
                let mut w: Vec<f64> = (first..=last)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        }
                    })
                    .collect();
                let mut start = first;
                if w.iter().all(|&v| v == 0.0) {
                    // narrower than a bin: interpolate the spectrum at the centre
                    let pos = mid / bin_hz;
                    start = (pos.floor() as usize).min(n_bins - 2);
                    let frac = pos - start as f64;
                    w = vec![1.0 - frac, frac];
                }
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= total);
                (start, w)
            })
            .collect();
        Ok(Self { filters, fft_len })
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn apply(&self, magnitude: &[f64]) -> Vec<f64> {
        debug_assert_eq!(magnitude.len(), self.fft_len / 2 + 1);
        self.filters
            .iter()
            .map(|(start, w)| w.iter().zip(&magnitude[*start..]).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Orthonormal DCT-II coefficients `1..=n_ceps` of `x` (coefficient 0 dropped).
pub(crate) fn dct_ii_skip0(x: &[f64], n_ceps: usize) -> Vec<f64> {
    let m = x.len() as f64;
    let scale = (2.0 / m).sqrt();
    (1..=n_ceps)
        .map(|k| {
            scale
                * x.iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / m).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Reusable mel-cepstrum analyser for one frame geometry.
#[derive(Debug, Clone)]
pub struct MelCepstrum {
    bank: MelFilterbank,
    fft_len: usize,
    n_ceps: usize,
}

impl MelCepstrum {
    pub fn new(
        fs: u32,
        n_ceps: usize,
        n_filters: usize,
        fft_len: usize,
        band: Option<(f64, f64)>,
    ) -> Result<Self> {
        if n_ceps == 0 || n_ceps >= n_filters {
            return Err(Error::InvalidParameter(format!(
                "{n_ceps} cepstra need more than {n_ceps} mel filters (have {n_filters})"
            )));
        }
        let (lo, hi) = band.unwrap_or((0.0, f64::from(fs) / 2.0));
        Ok(Self {
            bank: MelFilterbank::new(fs, fft_len, n_filters, lo, hi)?,
            fft_len,
            n_ceps,
        })
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn compute(&self, frame: &[f64]) -> Result<Vec<f64>> {
        if frame.len() > self.fft_len {
            return Err(Error::InvalidParameter(format!(
                "fft length {} is smaller than the {}-sample frame",
                self.fft_len,
                frame.len()
            )));
        }
        let mag = spectrum::magnitude_spectrum(frame, self.fft_len);
        let energies = self.bank.apply(&mag);
        let peak = energies.iter().cloned().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Ok(vec![0.0; self.n_ceps]);
        }
        let floor = peak * LOG_FLOOR_REL;
        let logs: Vec<f64> = energies.iter().map(|&e| e.max(floor).ln()).collect();
        Ok(dct_ii_skip0(&logs, self.n_ceps))
    }
}

/// Mel cepstrum `c_1..c_P` of one frame with a full-band filterbank.
pub fn melcepst(frame: &[f64], fs: u32, n_ceps: usize, n_filters: usize, fft_len: usize) -> Result<Vec<f64>> {
    MelCepstrum::new(fs, n_ceps, n_filters, fft_len, None)?.compute(frame)
}
