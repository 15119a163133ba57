//! Estimation of one block of a joint mixture given the other block.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::function::erf::erfc;

use super::gmm::{log_sum_exp, Gmm};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Partition of the joint dimensions into an observed block `x` and a target
/// block `y`. Indices keep the given order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSplit {
    x_dims: Vec<usize>,
    y_dims: Vec<usize>,
}

impl BlockSplit {
    pub fn new(x_dims: Vec<usize>, y_dims: Vec<usize>, dim: usize) -> Result<Self> {
        if x_dims.is_empty() || y_dims.is_empty() {
            return Err(Error::InvalidParameter("both blocks must be nonempty".into()));
        }
        let mut seen = vec![false; dim];
        for &i in x_dims.iter().chain(&y_dims) {
            if i >= dim || seen[i] {
                return Err(Error::InvalidParameter(format!(
                    "dimension {i} is out of range or listed twice"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter(
                "blocks do not cover every dimension".into(),
            ));
        }
        Ok(Self { x_dims, y_dims })
    }

    /// `x = 0..x_len`, `y = x_len..dim`.
    pub fn leading(x_len: usize, dim: usize) -> Result<Self> {
        Self::new((0..x_len).collect(), (x_len..dim).collect(), dim)
    }

    pub fn x_dims(&self) -> &[usize] {
        &self.x_dims
    }

    pub fn y_dims(&self) -> &[usize] {
        &self.y_dims
    }

    pub fn dim(&self) -> usize {
        self.x_dims.len() + self.y_dims.len()
    }
}

#[derive(Debug, Clone)]
struct Component {
    log_weight: f64,
    mu_x: DVector<f64>,
    mu_y: DVector<f64>,
    chol_xx: Cholesky<f64, Dyn>,
    log_norm_x: f64,
    /// `Σyx Σxx⁻¹`
    gain: DMatrix<f64>,
    /// `Σyy − Σyx Σxx⁻¹ Σxy`
    cond_cov: DMatrix<f64>,
}

/// A mixture prepared for repeated conditioning on the same split.
#[derive(Debug, Clone)]
pub struct ConditionalGmm {
    split: BlockSplit,
    components: Vec<Component>,
}

fn sub_matrix(c: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, k| c[(rows[r], cols[k])])
}

fn sub_vector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

impl ConditionalGmm {
    pub fn new(model: &Gmm, split: BlockSplit) -> Result<Self> {
        if split.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: split.dim(),
            });
        }
        let (xs, ys) = (split.x_dims(), split.y_dims());
        let mut components = Vec::with_capacity(model.components());
        for m in 0..model.components() {
            let c = &model.covariances()[m];
            let mu = &model.means()[m];
            let sxx = sub_matrix(c, xs, xs);
            let syx = sub_matrix(c, ys, xs);
            let syy = sub_matrix(c, ys, ys);
            let chol_xx = Cholesky::new(sxx)
                .ok_or_else(|| Error::Singular(format!("observed block of component {m}")))?;
            // gain^T = Σxx⁻¹ Σxy
            let gain = chol_xx.solve(&syx.transpose()).transpose();
            let mut cond_cov = &syy - &gain * syx.transpose();
            cond_cov = (&cond_cov + cond_cov.transpose()) * 0.5;
            let log_det = 2.0 * chol_xx.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            components.push(Component {
                log_weight: model.weights()[m].ln(),
                mu_x: sub_vector(mu, xs),
                mu_y: sub_vector(mu, ys),
                chol_xx,
                log_norm_x: -0.5 * (xs.len() as f64 * LN_2PI + log_det),
                gain,
                cond_cov,
            });
        }
        Ok(Self { split, components })
    }

    pub fn split(&self) -> &BlockSplit {
        &self.split
    }

    fn check_x(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.split.x_dims().len() {
            return Err(Error::DimensionMismatch {
                expected: self.split.x_dims().len(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Posterior component probabilities given the observed block.
    pub fn responsibilities(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let logs: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let d = x - &c.mu_x;
                let z = c.chol_xx.l_dirty().solve_lower_triangular(&d).unwrap_or(d);
                c.log_weight + c.log_norm_x - 0.5 * z.norm_squared()
            })
            .collect();
        let lse = log_sum_exp(&logs);
        Ok(logs.iter().map(|l| (l - lse).exp()).collect())
    }

    fn component_mean(&self, m: usize, x: &DVector<f64>) -> DVector<f64> {
        let c = &self.components[m];
        &c.mu_y + &c.gain * (x - &c.mu_x)
    }

    /// Conditional mean `E[y | x]`.
    pub fn mmse(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let h = self.responsibilities(x)?;
        let mut y = DVector::zeros(self.split.y_dims().len());
        for (m, &hm) in h.iter().enumerate() {
            if hm > 0.0 {
                y += self.component_mean(m, x) * hm;
            }
        }
        Ok(y)
    }

    /// The scalar posterior `p(y | x)` as a 1-D mixture. Requires a one-element target block.
    pub fn posterior(&self, x: &DVector<f64>) -> Result<Posterior1d> {
        if self.split.y_dims().len() != 1 {
            return Err(Error::InvalidParameter("posterior needs a scalar target".into()));
        }
        let h = self.responsibilities(x)?;
        let mut weights = Vec::new();
        let mut means = Vec::new();
        let mut sds = Vec::new();
        for (m, &hm) in h.iter().enumerate() {
            if hm > 0.0 {
                weights.push(hm);
                means.push(self.component_mean(m, x)[0]);
                sds.push(self.components[m].cond_cov[(0, 0)].max(f64::MIN_POSITIVE).sqrt());
            }
        }
        Posterior1d::new(weights, means, sds)
    }
}

/// A univariate Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior1d {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl Posterior1d {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != std_devs.len() {
            return Err(Error::BadModel("posterior component counts disagree".into()));
        }
        if std_devs.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::BadModel("posterior spread must be positive".into()));
        }
        Ok(Self {
            weights,
            means,
            std_devs,
        })
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.std_devs)
            .map(|((w, m), s)| {
                let z = (y - m) / s;
                w * (-0.5 * z * z - 0.5 * LN_2PI).exp() / s
            })
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.std_devs)
            .map(|((w, m), s)| w * 0.5 * erfc(-(y - m) / (s * std::f64::consts::SQRT_2)))
            .sum()
    }

    /// Inverse CDF by bisection, to an absolute tolerance of 1e-10.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile level {q} not in (0, 1)"
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (m, s) in self.means.iter().zip(&self.std_devs) {
            lo = lo.min(m - 40.0 * s);
            hi = hi.max(m + 40.0 * s);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-10 * mid.abs().max(1.0) {
                break;
            }
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub fn conditional_mmse(model: &Gmm, split: &BlockSplit, x: &DVector<f64>) -> Result<DVector<f64>> {
    ConditionalGmm::new(model, split.clone())?.mmse(x)
}

/// Minimizer of `E[a·max(ê−e, 0) + b·max(e−ê, 0) | x]`, which is the
/// `b/(a+b)` quantile of the posterior. `a` penalizes over-estimates.
pub fn conditional_quantile_estimate(
    model: &Gmm,
    split: &BlockSplit,
    x: &DVector<f64>,
    over_penalty: f64,
    under_penalty: f64,
) -> Result<f64> {
    let q = quantile_level(over_penalty, under_penalty)?;
    ConditionalGmm::new(model, split.clone())?
        .posterior(x)?
        .quantile(q)
}

pub(crate) fn quantile_level(over_penalty: f64, under_penalty: f64) -> Result<f64> {
    if !(over_penalty > 0.0 && under_penalty > 0.0) || !over_penalty.is_finite() || !under_penalty.is_finite()
    {
        return Err(Error::InvalidParameter(
            "penalties must be positive and finite".into(),
        ));
    }
    Ok(under_penalty / (over_penalty + under_penalty))
}
