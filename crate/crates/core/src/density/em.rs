//! EM training of a full-covariance mixture.
//!
//! Initialization is k-means++ seeding from a seeded ChaCha stream followed by
//! a hard assignment. The M-step clips covariance eigenvalues at `cov_floor`,
//! which is the exact constrained maximizer, so the log-likelihood stays
//! monotone.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gmm::{floor_covariance, log_sum_exp, Gmm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop when the relative log-likelihood gain drops below this.
    pub tol: f64,
    pub seed: u64,
    /// Absolute eigenvalue floor; `None` uses 1e-6 times the mean per-dimension variance.
    pub cov_floor: Option<f64>,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            seed: 0x5eed,
            cov_floor: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: Gmm,
    /// Total data log-likelihood before each M-step, in iteration order.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
}

pub fn em_fit(data: &DMatrix<f64>, components: usize, config: &EmConfig) -> Result<EmFit> {
    let (t, d) = data.shape();
    if components == 0 || d == 0 {
        return Err(Error::InvalidParameter(
            "need at least one component and one dimension".into(),
        ));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if t < 10 * d || t < components {
        return Err(Error::InsufficientData(format!(
            "{t} rows for {d} dimensions and {components} components (need at least {})",
            (10 * d).max(components)
        )));
    }

    let mean = column_mean(data);
    let global_cov = scatter(data, &mean, None) / t as f64;
    let mean_var = global_cov.diagonal().mean();
    let floor = config.cov_floor.unwrap_or(1e-6 * mean_var).max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = initial_model(data, components, &global_cov, floor, &mut rng)?;

    let mut trace = Vec::with_capacity(config.max_iter);
    let mut converged = false;
    for _ in 0..config.max_iter {
        let (ll, resp) = e_step(&model, data);
        if let Some(&prev) = trace.last() {
            if ll - prev <= config.tol * f64::abs(ll) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        model = m_step(data, &resp, &model, floor)?;
    }
    Ok(EmFit {
        model,
        log_likelihood: trace,
        converged,
    })
}

fn column_mean(data: &DMatrix<f64>) -> DVector<f64> {
    data.row_mean().transpose()
}

/// `sum_t w_t (x_t - mu)(x_t - mu)^T`, unnormalized.
fn scatter(data: &DMatrix<f64>, mu: &DVector<f64>, weights: Option<&[f64]>) -> DMatrix<f64> {
    let mut centred = data.clone();
    for mut row in centred.row_iter_mut() {
        row -= mu.transpose();
    }
    match weights {
        None => centred.transpose() * &centred,
        Some(w) => {
            let mut weighted = centred.clone();
            for (mut row, &wt) in weighted.row_iter_mut().zip(w) {
                row *= wt;
            }
            weighted.transpose() * centred
        }
    }
}

fn initial_model(
    data: &DMatrix<f64>,
    k: usize,
    global_cov: &DMatrix<f64>,
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Gmm> {
    let t = data.nrows();
    let rows: Vec<DVector<f64>> = data.row_iter().map(|r| r.transpose()).collect();
    let mut centres = vec![rows[rng.gen_range(0..t)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|x| (x - &centres[0]).norm_squared()).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut idx = t - 1;
            for (i, &v) in d2.iter().enumerate() {
                if u < v {
                    idx = i;
                    break;
                }
                u -= v;
            }
            idx
        } else {
            rng.gen_range(0..t)
        };
        let c = rows[pick].clone();
        for (dist, x) in d2.iter_mut().zip(&rows) {
            *dist = dist.min((x - &c).norm_squared());
        }
        centres.push(c);
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, x) in rows.iter().enumerate() {
        let best = (0..k)
            .min_by(|&a, &b| {
                (x - &centres[a])
                    .norm_squared()
                    .total_cmp(&(x - &centres[b]).norm_squared())
            })
            .unwrap();
        members[best].push(i);
    }

    let d = data.ncols();
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covs = Vec::with_capacity(k);
    for (j, idx) in members.iter().enumerate() {
        // every component starts with some mass so none is dead on arrival
        weights.push((idx.len() as f64).max(1.0));
        if idx.len() > d {
            let sub = DMatrix::from_fn(idx.len(), d, |r, c| data[(idx[r], c)]);
            let mu = column_mean(&sub);
            let cov = scatter(&sub, &mu, None) / idx.len() as f64;
            means.push(mu);
            covs.push(floor_covariance(&cov, floor));
        } else {
            means.push(centres[j].clone());
            covs.push(floor_covariance(global_cov, floor));
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Gmm::new(weights, means, covs)
}

/// Total log-likelihood and the T x M responsibility matrix.
fn e_step(model: &Gmm, data: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let mut logd = model.log_density_matrix(data);
    let mut ll = 0.0;
    for mut row in logd.row_iter_mut() {
        let vals: Vec<f64> = row.iter().copied().collect();
        let lse = log_sum_exp(&vals);
        ll += lse;
        for v in row.iter_mut() {
            *v = (*v - lse).exp();
        }
    }
    (ll, logd)
}

fn m_step(data: &DMatrix<f64>, resp: &DMatrix<f64>, prev: &Gmm, floor: f64) -> Result<Gmm> {
    use rayon::prelude::*;
    let t = data.nrows() as f64;
    let k = resp.ncols();
    let parts: Vec<(f64, DVector<f64>, DMatrix<f64>)> = (0..k)
        .into_par_iter()
        .map(|m| {
            let r: Vec<f64> = resp.column(m).iter().copied().collect();
            let nk: f64 = r.iter().sum();
            if nk < 1e-10 {
                // collapsed component: keep its parameters, its weight goes to ~0
                return (nk, prev.means()[m].clone(), prev.covariances()[m].clone());
            }
            let mut mu = DVector::zeros(data.ncols());
            for (row, &w) in data.row_iter().zip(&r) {
                mu += row.transpose() * w;
            }
            mu /= nk;
            let cov = scatter(data, &mu, Some(&r)) / nk;
            (nk, mu, floor_covariance(&cov, floor))
        })
        .collect();
    let mut weights: Vec<f64> = parts.iter().map(|p| p.0 / t).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let (means, covs) = parts.into_iter().map(|(_, mu, c)| (mu, c)).unzip();
    Gmm::new(weights, means, covs)
}
