//! Autocorrelation LPC (Levinson-Durbin) and the LPC-to-cepstrum recursion.

/// All-pole model with predictor convention `A(z) = 1 - sum_k a_k z^-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    pub coefficients: Vec<f64>,
    pub reflection: Vec<f64>,
    /// Residual (prediction error) energy.
    pub gain: f64,
    /// Set when the frame had no energy and the model is all zeros.
    pub degenerate: bool,
}

impl LpcModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coefficients: vec![0.0; order],
            reflection: vec![0.0; order],
            gain: 0.0,
            degenerate: true,
        }
    }

    /// Prediction-error filter `e[n] = x[n] - sum_k a_k x[n - k]`, zero history.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let a = &self.coefficients;
        (0..x.len())
            .map(|n| {
                let pred: f64 = a
                    .iter()
                    .enumerate()
                    .take_while(|(k, _)| *k < n)
                    .map(|(k, ak)| ak * x[n - k - 1])
                    .sum();
                x[n] - pred
            })
            .collect()
    }

    /// `|A(e^{jw})|` at normalized angular frequency `w`.
    pub fn inverse_filter_magnitude(&self, w: f64) -> f64 {
        let (mut re, mut im) = (1.0, 0.0);
        for (k, ak) in self.coefficients.iter().enumerate() {
            let ph = w * (k + 1) as f64;
            re -= ak * ph.cos();
            im += ak * ph.sin();
        }
        (re * re + im * im).sqrt()
    }
}

/// Biased autocorrelation `r[k] = sum_n x[n] x[n + k]` for `k = 0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| {
            if k >= x.len() {
                0.0
            } else {
                x.iter().zip(&x[k..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Levinson-Durbin solution of the normal equations for autocorrelation `r`.
pub fn lpc_from_autocorrelation(r: &[f64], order: usize) -> LpcModel {
    assert!(r.len() > order, "need r[0..=order]");
    let r0 = r[0];
    if !(r0 > 0.0) {
        return LpcModel::zero(order);
    }
    let mut a = vec![0.0; order];
    let mut reflection = vec![0.0; order];
    let mut err = r0;
    let mut tmp = vec![0.0; order];
    for i in 0..order {
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            // numerically singular: the remaining coefficients stay zero
            break;
        }
        tmp[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = tmp[j] - k * tmp[i - 1 - j];
        }
        a[i] = k;
        reflection[i] = k;
        err *= 1.0 - k * k;
        if err <= r0 * 1e-15 {
            break;
        }
    }
    LpcModel {
        coefficients: a,
        reflection,
        gain: err,
        degenerate: false,
    }
}

/// LPC of order `order` by the autocorrelation method. All-zero frames give the zero model.
pub fn autocorr_lpc(frame: &[f64], order: usize) -> crate::Result<LpcModel> {
    if frame.len() <= order {
        return Err(crate::Error::TooShort(format!(
            "frame of {} samples for LPC order {order}",
            frame.len()
        )));
    }
    Ok(lpc_from_autocorrelation(&autocorrelation(frame, order), order))
}

/// Cepstrum `c_1..c_n` of the all-pole model `1 / A(z)` (gain term excluded).
pub fn lpc_to_lpcc(model: &LpcModel, n_ceps: usize) -> Vec<f64> {
    let a = &model.coefficients;
    let p = a.len();
    let mut c = vec![0.0; n_ceps + 1];
    for n in 1..=n_ceps {
        let mut acc = if n <= p { a[n - 1] } else { 0.0 };
        for k in n.saturating_sub(p).max(1)..n {
            acc += (k as f64 / n as f64) * c[k] * a[n - k - 1];
        }
        c[n] = acc;
    }
    c.remove(0);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    /// Step-up recursion from reflection coefficients to predictor coefficients.
    fn step_up(k: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = Vec::new();
        for &ki in k {
            let prev = a.clone();
            a.push(ki);
            for j in 0..prev.len() {
                a[j] = prev[j] - ki * prev[prev.len() - 1 - j];
            }
        }
        a
    }

    /// Cepstrum from the inverse DFT of log|1/A| on a dense grid.
    fn spectral_cepstrum(a: &[f64], n_ceps: usize, grid: usize) -> Vec<f64> {
        let model = LpcModel {
            coefficients: a.to_vec(),
            reflection: vec![],
            gain: 1.0,
            degenerate: false,
        };
        let logmag: Vec<f64> = (0..grid)
            .map(|i| {
                -model
                    .inverse_filter_magnitude(2.0 * PI * i as f64 / grid as f64)
                    .ln()
            })
            .collect();
        (1..=n_ceps)
            .map(|n| {
                2.0 / grid as f64
                    * logmag
                        .iter()
                        .enumerate()
                        .map(|(i, l)| l * (2.0 * PI * (i * n) as f64 / grid as f64).cos())
                        .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn zero_frame_and_order_zero() {
        let m = autocorr_lpc(&[0.0; 64], 10).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.coefficients, vec![0.0; 10]);
        assert_eq!(m.gain, 0.0);

        let frame: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let m0 = autocorr_lpc(&frame, 0).unwrap();
        assert!(m0.coefficients.is_empty());
        let r0: f64 = frame.iter().map(|v| v * v).sum();
        assert!((m0.gain - r0).abs() < 1e-12);

        assert!(autocorr_lpc(&frame[..5], 5).is_err());
    }

    #[test]
    fn ar1_from_known_autocorrelation() {
        let r: Vec<f64> = (0..=8).map(|k| 0.9f64.powi(k)).collect();
        let m = lpc_from_autocorrelation(&r, 8);
        assert!((m.coefficients[0] - 0.9).abs() < 1e-8);
        for &a in &m.coefficients[1..] {
            assert!(a.abs() < 1e-8);
        }
        assert!((m.gain - 0.19).abs() < 1e-12);
    }

    #[test]
    fn reflection_coefficients_inside_unit_circle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let frame: Vec<f64> = (0..240).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = autocorr_lpc(&frame, 16).unwrap();
            assert!(m.reflection.iter().all(|k| k.abs() < 1.0));
        }
    }

    #[test]
    fn zero_model_has_zero_cepstrum() {
        assert_eq!(lpc_to_lpcc(&LpcModel::zero(6), 12), vec![0.0; 12]);
    }

    #[test]
    fn one_pole_power_series() {
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let m = LpcModel {
                coefficients: vec![alpha],
                reflection: vec![alpha],
                gain: 1.0,
                degenerate: false,
            };
            let c = lpc_to_lpcc(&m, 20);
            for (i, &cn) in c.iter().enumerate() {
                let n = (i + 1) as i32;
                assert!((cn - alpha.powi(n) / f64::from(n)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_pole_matches_spectral_oracle() {
        let a = step_up(&[0.6, -0.5]);
        let m = LpcModel {
            coefficients: a.clone(),
            reflection: vec![],
            gain: 1.0,
            degenerate: false,
        };
        let c = lpc_to_lpcc(&m, 30);
        let oracle = spectral_cepstrum(&a, 30, 4096);
        for (x, y) in c.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    /// Predictor coefficients of `prod (1 - p_i z^-1)` for conjugate pole pairs
    /// (plus one real pole for odd orders) with radius at most `max_radius`.
    pub(crate) fn random_stable_predictor(p: usize, max_radius: f64, rng: &mut impl Rng) -> Vec<f64> {
        // polynomial in z^-1, constant term first
        let mut poly = vec![1.0];
        let mul = |poly: &Vec<f64>, f: &[f64]| {
            let mut out = vec![0.0; poly.len() + f.len() - 1];
            for (i, a) in poly.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            out
        };
        for _ in 0..p / 2 {
            let r = rng.gen_range(0.1..max_radius);
            let theta = rng.gen_range(0.05..PI - 0.05);
            poly = mul(&poly, &[1.0, -2.0 * r * theta.cos(), r * r]);
        }
        if p % 2 == 1 {
            poly = mul(&poly, &[1.0, -rng.gen_range(-max_radius..max_radius)]);
        }
        poly[1..].iter().map(|c| -c).collect()
    }

    #[test]
    fn random_stable_models_match_spectral_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let p = rng.gen_range(1..=20);
            let a = random_stable_predictor(p, 0.95, &mut rng);
            let m = LpcModel {
                coefficients: a.clone(),
                reflection: vec![],
                gain: 1.0,
                degenerate: false,
            };
            let c = lpc_to_lpcc(&m, 24);
            let oracle = spectral_cepstrum(&a, 24, 4096);
            for (x, y) in c.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-6, "p={p}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn residual_of_ar1_process() {
        // x[n] = 0.5 x[n-1] + e[n] with e = impulse at 0
        let x: Vec<f64> = (0..10).map(|n| 0.5f64.powi(n)).collect();
        let m = LpcModel {
            coefficients: vec![0.5],
            reflection: vec![0.5],
            gain: 1.0,
            degenerate: false,
        };
        let e = m.residual(&x);
        assert_eq!(e[0], 1.0);
        for &v in &e[1..] {
            assert!(v.abs() < 1e-15);
        }
    }
}
