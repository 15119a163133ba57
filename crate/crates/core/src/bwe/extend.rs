use nalgebra::DVector;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::{BweModel, FrameAnalyzer};
use crate::audio::AudioBuffer;
use crate::density::conditional::quantile_level;
use crate::dsp::{self, window, WindowKind, POTS_HIGH_HZ};
use crate::error::Result;
use crate::features::{
    autocorr_lpc, band_energies, band_energy_ratio, lpc_from_autocorrelation, RATIO_CEIL_DB, RATIO_FLOOR_DB,
};
use crate::spectrum;

/// Per-frame record of an extension run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTrace {
    /// First 16 kHz sample of the frame in the output (may be negative for the first frame).
    pub start: isize,
    /// Target high/narrow energy ratio from the quantile estimator, in dB.
    pub estimate_db: f64,
    /// Ratio of the frame's Hann-windowed narrowband part plus its own high-band synthesis.
    pub achieved_db: f64,
    /// Ratio of the narrowband part alone; synthesis only adds energy, so
    /// targets below this are out of reach.
    pub base_db: f64,
    /// False for frames with no narrowband energy (nothing synthesized).
    pub active: bool,
}

pub fn bwe_extend(narrowband: &AudioBuffer, model: &BweModel) -> Result<AudioBuffer> {
    bwe_extend_traced(narrowband, model).map(|(out, _)| out)
}

struct FrameWork<'a> {
    model: &'a BweModel,
    analyzer: FrameAnalyzer,
    q: f64,
    sqrt_hann: Vec<f64>,
    hamming8: Vec<f64>,
}

struct FrameOut {
    high_band: Vec<f64>,
    trace: FrameTrace,
}

/// Extends 8 kHz speech to 16 kHz; also returns one trace entry per frame.
pub fn bwe_extend_traced(
    narrowband: &AudioBuffer,
    model: &BweModel,
) -> Result<(AudioBuffer, Vec<FrameTrace>)> {
    narrowband.require_rate(8000)?;
    let cfg = model.features();
    let n = narrowband.len();
    if n == 0 {
        return Ok((AudioBuffer::from_parts(Vec::new(), 16000), Vec::new()));
    }
    let (len8, hop8) = (cfg.nb_frame_len(), cfg.hop() / 2);
    // pad by one hop on the left and enough on the right that every sample sits under two frames
    let frames = (n - 1) / hop8 + 2;
    let padded_len = (frames - 1) * hop8 + len8;
    let mut x8 = vec![0.0; padded_len];
    x8[hop8..hop8 + n].copy_from_slice(narrowband.samples());
    let base16 = dsp::upsample(&x8);

    let work = FrameWork {
        model,
        analyzer: FrameAnalyzer::new(cfg)?,
        q: quantile_level(cfg.over_penalty, cfg.under_penalty)?,
        sqrt_hann: window(WindowKind::SqrtHann, cfg.frame_len),
        hamming8: window(WindowKind::Hamming, len8),
    };
    let outs: Vec<FrameOut> = (0..frames)
        .into_par_iter()
        .map(|k| work.frame(&x8, &base16, k))
        .collect::<Result<_>>()?;

    let mut high = vec![0.0; base16.len()];
    let mut traces = Vec::with_capacity(frames);
    for (k, out) in outs.into_iter().enumerate() {
        let s = 2 * k * hop8;
        for (h, v) in high[s..s + cfg.frame_len].iter_mut().zip(&out.high_band) {
            *h += v;
        }
        traces.push(out.trace);
    }
    let mut y = dsp::upsample(narrowband.samples());
    for (o, h) in y.iter_mut().zip(&high[2 * hop8..]) {
        *o += h;
    }
    Ok((AudioBuffer::new(y, 16000)?, traces))
}

impl FrameWork<'_> {
    fn frame(&self, x8: &[f64], base16: &[f64], k: usize) -> Result<FrameOut> {
        let cfg = self.model.features();
        let (len8, hop8, len16) = (cfg.nb_frame_len(), cfg.hop() / 2, cfg.frame_len);
        let s8 = k * hop8;
        let frame8 = &x8[s8..s8 + len8];
        let base = self.analyzer.hann_window(&base16[2 * s8..2 * s8 + len16]);
        let start = 2 * s8 as isize - 2 * hop8 as isize;
        let base_db = band_energy_ratio(&base, 16000)?;
        let silent = FrameOut {
            high_band: vec![0.0; len16],
            trace: FrameTrace {
                start,
                estimate_db: RATIO_FLOOR_DB,
                achieved_db: base_db,
                base_db,
                active: false,
            },
        };
        if frame8.iter().all(|v| *v == 0.0) {
            return Ok(silent);
        }

        let nb = self.analyzer.narrowband(frame8)?;
        let x = DVector::from_vec(nb.to_vec());
        let estimate = self
            .model
            .ratio_estimator
            .posterior(&x)?
            .quantile(self.q)?
            .clamp(RATIO_FLOOR_DB, RATIO_CEIL_DB);
        let mut xe = nb.to_vec();
        xe.push(estimate);
        let envelope = self.model.envelope_estimator.mmse(&DVector::from_vec(xe))?;

        let Some(shape) = self.excitation(x8, s8, frame8, envelope.as_slice()) else {
            return Ok(silent);
        };
        let gain = solve_gain(&base, &shape, estimate);
        let high_band: Vec<f64> = shape.iter().map(|v| v * gain).collect();
        let composite: Vec<f64> = base.iter().zip(&high_band).map(|(a, b)| a + b).collect();
        Ok(FrameOut {
            high_band,
            trace: FrameTrace {
                start,
                estimate_db: estimate,
                achieved_db: band_energy_ratio(&composite, 16000)?,
                base_db,
                active: true,
            },
        })
    }

    /// Unit-energy high-band signal for one frame, already synthesis-windowed.
    fn excitation(&self, x8: &[f64], s8: usize, frame8: &[f64], envelope: &[f64]) -> Option<Vec<f64>> {
        let cfg = self.model.features();
        let len16 = cfg.frame_len;
        let p = cfg.lpc_order;
        let windowed: Vec<f64> = frame8.iter().zip(&self.hamming8).map(|(a, b)| a * b).collect();
        let lpc = autocorr_lpc(&windowed, p).ok()?;
        // residual with real history so the frame start carries no filter transient
        let mut seg = vec![0.0; p];
        for (i, v) in seg.iter_mut().enumerate() {
            if let Some(j) = (s8 + i).checked_sub(p) {
                *v = x8[j];
            }
        }
        seg.extend_from_slice(frame8);
        let residual = if lpc.degenerate {
            frame8.to_vec()
        } else {
            lpc.residual(&seg)[p..].to_vec()
        };

        let folded = dsp::zero_insert(&residual);
        let analysed: Vec<f64> = folded.iter().zip(&self.sqrt_hann).map(|(a, b)| a * b).collect();
        let mut spec = spectrum::rfft(&analysed, len16);
        for (k, c) in spec.iter_mut().enumerate() {
            if spectrum::bin_hz(k, len16, 16000.0) < POTS_HIGH_HZ {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        let power: Vec<Complex64> = spec.iter().map(|c| Complex64::new(c.norm_sqr(), 0.0)).collect();
        let r = spectrum::irfft(&power, len16);
        if !(r[0] > 0.0) {
            return None;
        }
        let flat = lpc_from_autocorrelation(&r[..=cfg.flatten_order], cfg.flatten_order);
        let gains = cfg.envelope.gain_curve(envelope, len16, 16000.0);
        for (k, c) in spec.iter_mut().enumerate() {
            let w = 2.0 * std::f64::consts::PI * k as f64 / len16 as f64;
            *c *= flat.inverse_filter_magnitude(w) * gains[k];
        }
        let energy: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        if !(energy > 0.0) || !energy.is_finite() {
            return None;
        }
        let scale = 1.0 / energy.sqrt();
        spec.iter_mut().for_each(|c| *c *= scale);
        let shaped = spectrum::irfft(&spec, len16);
        Some(shaped.iter().zip(&self.sqrt_hann).map(|(a, b)| a * b).collect())
    }
}

/// Smallest `g >= 0` with `ratio(base + g * shape) = target_db`, where the
/// ratio uses the same band split as `band_energy_ratio`. Returns 0 when the
/// base already reaches the target or no such `g` exists.
fn solve_gain(base: &[f64], shape: &[f64], target_db: f64) -> f64 {
    let n = base.len().next_power_of_two();
    let b = spectrum::rfft(base, n);
    let h = spectrum::rfft(shape, n);
    let bb: Vec<f64> = b.iter().map(|c| c.norm_sqr()).collect();
    let hh: Vec<f64> = h.iter().map(|c| c.norm_sqr()).collect();
    let bh: Vec<f64> = b.iter().zip(&h).map(|(x, y)| (x * y.conj()).re).collect();
    let (bn, bh_hi) = band_energies(&bb, n, 16000.0);
    let (hn, hh_hi) = band_energies(&hh, n, 16000.0);
    let (cn, ch) = band_energies(&bh, n, 16000.0);
    let r = 10f64.powf(target_db / 10.0);
    // (Hh - r Hn) g^2 + 2 (Ch - r Cn) g + (Bh - r Bn) = 0
    let a = hh_hi - r * hn;
    let bq = 2.0 * (ch - r * cn);
    let c = bh_hi - r * bn;
    if !(c < 0.0) {
        return 0.0;
    }
    let disc = bq * bq - 4.0 * a * c;
    if disc < 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let roots = if a.abs() < 1e-300 {
        if bq > 0.0 {
            [-c / bq, f64::NAN]
        } else {
            return 0.0;
        }
    } else {
        // stable pair: q = -(b + sign(b) sqrt(disc)) / 2
        let qv = -0.5 * (bq + bq.signum() * sq);
        [qv / a, if qv != 0.0 { c / qv } else { f64::NAN }]
    };
    roots
        .into_iter()
        .filter(|g| g.is_finite() && *g >= 0.0)
        .reduce(f64::min)
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn ratio(x: &[f64]) -> f64 {
        band_energy_ratio(x, 16000).unwrap()
    }

    #[test]
    fn gain_hits_target_when_reachable() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let hann = window(WindowKind::Hann, 512);
        let low: Vec<f64> = (0..512)
            .map(|i| (2.0 * std::f64::consts::PI * 700.0 * i as f64 / 16000.0).sin() * hann[i])
            .collect();
        // broadband shape that also leaks into the narrow band, so the cross terms matter
        let shape: Vec<f64> = (0..512).map(|i| rng.gen_range(-1.0..1.0) * hann[i]).collect();
        for target in [-40.0, -20.0, -5.0, 0.0] {
            let g = solve_gain(&low, &shape, target);
            assert!(g > 0.0);
            let mixed: Vec<f64> = low.iter().zip(&shape).map(|(a, b)| a + g * b).collect();
            assert!((ratio(&mixed) - target).abs() < 1e-8, "target {target}");
        }
    }

    #[test]
    fn unreachable_target_gives_zero() {
        let hann = window(WindowKind::Hann, 512);
        let x: Vec<f64> = (0..512)
            .map(|i| (2.0 * std::f64::consts::PI * 5000.0 * i as f64 / 16000.0).sin() * hann[i])
            .collect();
        let shape = x.clone();
        assert_eq!(solve_gain(&x, &shape, -10.0), 0.0);
        assert_eq!(solve_gain(&vec![0.0; 512], &shape, -10.0), 0.0);
    }
}
