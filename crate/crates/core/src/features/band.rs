//! Narrowband/high-band energy split and the high-band spectral envelope.

use crate::dsp::{POTS_HIGH_HZ, POTS_LOW_HZ};
use crate::error::{Error, Result};
use crate::features::mel::dct_ii_skip0;
use crate::spectrum;

pub const RATIO_FLOOR_DB: f64 = -80.0;
pub const RATIO_CEIL_DB: f64 = 40.0;

/// Upper edge of the high band.
pub const HIGH_BAND_TOP_HZ: f64 = 8000.0;

/// Sums of `|X(k)|^2` over the narrow band [300, 3400) Hz and the high band [3400, 8000] Hz.
pub fn band_energies(power: &[f64], fft_len: usize, fs: f64) -> (f64, f64) {
    let mut narrow = 0.0;
    let mut high = 0.0;
    for (k, &p) in power.iter().enumerate() {
        let f = spectrum::bin_hz(k, fft_len, fs);
        if (POTS_LOW_HZ..POTS_HIGH_HZ).contains(&f) {
            narrow += p;
        } else if (POTS_HIGH_HZ..=HIGH_BAND_TOP_HZ).contains(&f) {
            high += p;
        }
    }
    (narrow, high)
}

pub fn ratio_db(narrow: f64, high: f64) -> f64 {
    if !(narrow > 0.0) {
        return if high > 0.0 { RATIO_CEIL_DB } else { RATIO_FLOOR_DB };
    }
    if !(high > 0.0) {
        return RATIO_FLOOR_DB;
    }
    (10.0 * (high / narrow).log10()).clamp(RATIO_FLOOR_DB, RATIO_CEIL_DB)
}

/// `10 log10(E_high / E_narrow)` of a 16 kHz frame, clamped to [-80, 40] dB.
/// The frame is analysed as given; callers apply any window.
pub fn band_energy_ratio(frame: &[f64], fs: u32) -> Result<f64> {
    if fs != 16000 {
        return Err(Error::UnsupportedRate(fs, "16000"));
    }
    let fft_len = spectrum::next_pow2(frame.len());
    let power = spectrum::power_spectrum(frame, fft_len);
    let (narrow, high) = band_energies(&power, fft_len, f64::from(fs));
    Ok(ratio_db(narrow, high))
}

/// Shape-only description of the high-band spectrum: log power in equal-width
/// sub-bands over [3400, 8000] Hz, reduced to cosine coefficients `1..=n_ceps`.
/// The level (coefficient 0) is carried separately by the energy ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HighBandEnvelope {
    pub subbands: usize,
    pub n_ceps: usize,
}

impl Default for HighBandEnvelope {
    fn default() -> Self {
        Self {
            subbands: 16,
            n_ceps: 8,
        }
    }
}

impl HighBandEnvelope {
    fn subband_of(&self, f: f64) -> Option<usize> {
        if !(POTS_HIGH_HZ..=HIGH_BAND_TOP_HZ).contains(&f) {
            return None;
        }
        let width = (HIGH_BAND_TOP_HZ - POTS_HIGH_HZ) / self.subbands as f64;
        Some((((f - POTS_HIGH_HZ) / width) as usize).min(self.subbands - 1))
    }

    fn centre(&self, j: usize) -> f64 {
        let width = (HIGH_BAND_TOP_HZ - POTS_HIGH_HZ) / self.subbands as f64;
        POTS_HIGH_HZ + width * (j as f64 + 0.5)
    }

    pub fn analyse(&self, power: &[f64], fft_len: usize, fs: f64) -> Vec<f64> {
        let mut sums = vec![0.0; self.subbands];
        let mut counts = vec![0usize; self.subbands];
        for (k, &p) in power.iter().enumerate() {
            if let Some(j) = self.subband_of(spectrum::bin_hz(k, fft_len, fs)) {
                sums[j] += p;
                counts[j] += 1;
            }
        }
        let means: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        let peak = means.iter().cloned().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return vec![0.0; self.n_ceps];
        }
        let floor = peak * 1e-10;
        let logs: Vec<f64> = means.iter().map(|m| m.max(floor).ln()).collect();
        dct_ii_skip0(&logs, self.n_ceps)
    }

    /// Log-power shape per sub-band implied by `ceps` (zero mean across sub-bands).
    pub fn log_shape(&self, ceps: &[f64]) -> Vec<f64> {
        let m = self.subbands as f64;
        let scale = (2.0 / m).sqrt();
        (0..self.subbands)
            .map(|j| {
                ceps.iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let k = (i + 1) as f64;
                        scale * c * (std::f64::consts::PI * k * (j as f64 + 0.5) / m).cos()
                    })
                    .sum()
            })
            .collect()
    }

    /// Amplitude gain per FFT bin (zero outside the high band), linear
    /// interpolation of the log shape between sub-band centres.
    pub fn gain_curve(&self, ceps: &[f64], fft_len: usize, fs: f64) -> Vec<f64> {
        let shape = self.log_shape(ceps);
        let first_c = self.centre(0);
        let last_c = self.centre(self.subbands - 1);
        let width = (HIGH_BAND_TOP_HZ - POTS_HIGH_HZ) / self.subbands as f64;
        (0..=fft_len / 2)
            .map(|k| {
                let f = spectrum::bin_hz(k, fft_len, fs);
                if !(POTS_HIGH_HZ..=HIGH_BAND_TOP_HZ).contains(&f) {
                    return 0.0;
                }
                let log_p = if f <= first_c {
                    shape[0]
                } else if f >= last_c {
                    shape[self.subbands - 1]
                } else {
                    let pos = (f - first_c) / width;
                    let j = (pos.floor() as usize).min(self.subbands - 2);
                    let t = pos - j as f64;
                    shape[j] * (1.0 - t) + shape[j + 1] * t
                };
                (0.5 * log_p).exp()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{potsband_filter, window, WindowKind};
    use crate::AudioBuffer;
    use std::f64::consts::PI;

    fn tone(freqs: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                freqs
                    .iter()
                    .map(|f| (2.0 * PI * f * i as f64 / 16000.0).sin())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn equal_sines_give_zero_db() {
        let w = window(WindowKind::Hann, 512);
        let x: Vec<f64> = tone(&[1000.0, 5000.0], 512)
            .iter()
            .zip(&w)
            .map(|(a, b)| a * b)
            .collect();
        assert!(band_energy_ratio(&x, 16000).unwrap().abs() <= 0.5);
        // off-bin frequencies too
        let x: Vec<f64> = tone(&[1010.0, 5033.0], 512)
            .iter()
            .zip(&w)
            .map(|(a, b)| a * b)
            .collect();
        assert!(band_energy_ratio(&x, 16000).unwrap().abs() <= 0.5);
    }

    #[test]
    fn clamps_and_floor() {
        let x = tone(&[5000.0], 512);
        assert_eq!(band_energy_ratio(&x, 16000).unwrap(), RATIO_CEIL_DB);
        assert_eq!(band_energy_ratio(&[0.0; 512], 16000).unwrap(), RATIO_FLOOR_DB);
        assert!(band_energy_ratio(&[0.0; 256], 8000).is_err());
    }

    #[test]
    fn narrowband_signal_is_far_below() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        // white noise keeps the [3400, 3700] Hz filter skirt well above -30 dB,
        // so the source is band-limited below 2.5 kHz first, as speech mostly is
        let noise: Vec<f64> = (0..16000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lp = crate::dsp::SosFilter::butterworth_lowpass(10, 2500.0, 16000.0);
        let source = AudioBuffer::new(lp.filter(&noise), 16000).unwrap();
        let nb = potsband_filter(&source).unwrap();
        let w = window(WindowKind::Hann, 512);
        for start in (2000..14000).step_by(1500) {
            let frame: Vec<f64> = nb.samples()[start..start + 512]
                .iter()
                .zip(&w)
                .map(|(a, b)| a * b)
                .collect();
            let r = band_energy_ratio(&frame, 16000).unwrap();
            assert!(r <= -30.0, "{r}");
        }
    }

    #[test]
    fn envelope_round_trip_of_smooth_shape() {
        let env = HighBandEnvelope::default();
        let fft_len = 512;
        let target = [0.7, -0.3, 0.2, 0.0, 0.1, -0.05, 0.0, 0.02];
        let gains = env.gain_curve(&target, fft_len, 16000.0);
        let power: Vec<f64> = gains.iter().map(|g| g * g).collect();
        let back = env.analyse(&power, fft_len, 16000.0);
        for (a, b) in target.iter().zip(&back) {
            assert!((a - b).abs() < 0.15, "{a} vs {b}");
        }
    }

    #[test]
    fn flat_high_band_has_zero_shape() {
        let env = HighBandEnvelope::default();
        let power = vec![2.5; 257];
        for c in env.analyse(&power, 512, 16000.0) {
            assert!(c.abs() < 1e-12);
        }
    }
}
