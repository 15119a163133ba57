use std::io::Write;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GMM1";
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gaussian mixture with full covariances. Immutable once built; the
/// Cholesky factors used for evaluation are cached.
#[derive(Debug, Clone)]
pub struct Gmm {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
    chol: Vec<Cholesky<f64, Dyn>>,
    log_norm: Vec<f64>,
}

impl PartialEq for Gmm {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.means == other.means && self.covariances == other.covariances
    }
}

impl Gmm {
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = weights.len();
        if m == 0 || means.len() != m || covariances.len() != m {
            return Err(Error::BadModel("component counts disagree".into()));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(Error::BadModel("zero-dimensional model".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::BadModel("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadModel(format!("weights sum to {total}")));
        }
        let mut chol = Vec::with_capacity(m);
        let mut log_norm = Vec::with_capacity(m);
        let mut covs = Vec::with_capacity(m);
        for (mu, c) in means.iter().zip(covariances) {
            if mu.len() != d || c.nrows() != d || c.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: mu.len().max(c.nrows()),
                });
            }
            if mu.iter().chain(c.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let scale = c.amax().max(f64::MIN_POSITIVE);
            if (&c - c.transpose()).amax() > 1e-12 * scale {
                return Err(Error::BadModel("covariance is not symmetric".into()));
            }
            let c = (&c + c.transpose()) * 0.5;
            let ch = Cholesky::new(c.clone())
                .ok_or_else(|| Error::Singular("covariance is not positive definite".into()))?;
            let log_det = 2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            log_norm.push(-0.5 * (d as f64 * LN_2PI + log_det));
            chol.push(ch);
            covs.push(c);
        }
        Ok(Self {
            weights,
            means,
            covariances: covs,
            chol,
            log_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    /// `log w_m + log N(x; mu_m, Sigma_m)` for every component.
    pub fn component_log_densities(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..self.components())
            .map(|m| {
                if self.weights[m] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let diff = x - &self.means[m];
                let z = self.chol[m]
                    .l_dirty()
                    .solve_lower_triangular(&diff)
                    .expect("cholesky factor has a positive diagonal");
                self.weights[m].ln() + self.log_norm[m] - 0.5 * z.norm_squared()
            })
            .collect()
    }

    pub fn logpdf(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(log_sum_exp(&self.component_log_densities(x)))
    }

    /// Rows of `data` (T x D) scored against every component: a T x M matrix
    /// of `log w_m + log N(x_t; m)`.
    pub(crate) fn log_density_matrix(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        use rayon::prelude::*;
        let t = data.nrows();
        let xt = data.transpose();
        let cols: Vec<Vec<f64>> = (0..self.components())
            .into_par_iter()
            .map(|m| {
                if self.weights[m] == 0.0 {
                    return vec![f64::NEG_INFINITY; t];
                }
                let mut centred = xt.clone();
                for mut col in centred.column_iter_mut() {
                    col -= &self.means[m];
                }
                let z = self.chol[m]
                    .l_dirty()
                    .solve_lower_triangular(&centred)
                    .expect("cholesky factor has a positive diagonal");
                let base = self.weights[m].ln() + self.log_norm[m];
                z.column_iter().map(|c| base - 0.5 * c.norm_squared()).collect()
            })
            .collect();
        DMatrix::from_fn(t, self.components(), |i, m| cols[m][i])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dim();
        let m = self.components();
        let mut out = Vec::with_capacity(4 + 16 + 8 * (m + m * d + m * d * d) + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&(m as u64).to_le_bytes());
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for mu in &self.means {
            for v in mu.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for c in &self.covariances {
            for i in 0..d {
                for j in 0..d {
                    out.extend_from_slice(&c[(i, j)].to_le_bytes());
                }
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    /// Parses a `GMM1` payload; returns the model and the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::BadModel("missing GMM1 magic".into()));
        }
        let d = r.u64()? as usize;
        let m = r.u64()? as usize;
        if d == 0 || m == 0 || d > 4096 || m > 65536 {
            return Err(Error::BadModel(format!("implausible dimensions D={d} M={m}")));
        }
        let weights = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let means = (0..m)
            .map(|_| {
                Ok(DVector::from_vec(
                    (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let covs = (0..m)
            .map(|_| {
                let vals = (0..d * d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
                Ok(DMatrix::from_row_slice(d, d, &vals))
            })
            .collect::<Result<Vec<_>>>()?;
        let body_len = r.pos;
        let digest = r.take(32)?;
        if Sha256::digest(&bytes[..body_len]).as_slice() != digest {
            return Err(Error::BadModel("GMM1 checksum mismatch".into()));
        }
        Ok((Self::new(weights, means, covs)?, r.pos))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let (gmm, used) = Self::from_bytes(&bytes)?;
        if used != bytes.len() {
            return Err(Error::BadModel("trailing bytes after GMM1 payload".into()));
        }
        Ok(gmm)
    }
}

/// `log sum_m w_m N(x; mu_m, Sigma_m)`.
pub fn gmm_logpdf(model: &Gmm, x: &DVector<f64>) -> Result<f64> {
    model.logpdf(x)
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Symmetric matrix with every eigenvalue raised to at least `floor`.
pub fn floor_covariance(c: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (c + c.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::BadModel("truncated model file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    pub(crate) fn random_spd(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.3
    }

    fn random_model(d: usize, m: usize, rng: &mut impl Rng) -> Gmm {
        let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        Gmm::new(
            raw.iter().map(|w| w / s).collect(),
            (0..m)
                .map(|_| DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0)))
                .collect(),
            (0..m).map(|_| random_spd(d, rng)).collect(),
        )
        .unwrap()
    }

    /// Direct evaluation of the mixture density without logs or factorizations.
    fn naive_pdf(model: &Gmm, x: &DVector<f64>) -> f64 {
        let d = model.dim() as f64;
        (0..model.components())
            .map(|m| {
                let c = &model.covariances()[m];
                let inv = c.clone().try_inverse().unwrap();
                let diff = x - &model.means()[m];
                let q = (diff.transpose() * inv * &diff)[(0, 0)];
                model.weights()[m] * (-0.5 * q).exp() / ((2.0 * PI).powf(d) * c.determinant()).sqrt()
            })
            .sum()
    }

    #[test]
    fn standard_normal_at_zero() {
        let g = Gmm::new(
            vec![1.0],
            vec![DVector::from_element(1, 0.0)],
            vec![DMatrix::identity(1, 1)],
        )
        .unwrap();
        let v = gmm_logpdf(&g, &DVector::from_element(1, 0.0)).unwrap();
        assert!((v + 0.918_938_533_204_672_7).abs() < 1e-14);
        assert!(gmm_logpdf(&g, &DVector::from_element(2, 0.0)).is_err());
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let d = rng.gen_range(1..5);
            let m = rng.gen_range(1..4);
            let g = random_model(d, m, &mut rng);
            let x = DVector::from_fn(d, |_, _| rng.gen_range(-1.5..1.5));
            let a = g.logpdf(&x).unwrap();
            let b = naive_pdf(&g, &x).ln();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn translation_equivariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let g = random_model(3, 3, &mut rng);
        let v = DVector::from_vec(vec![0.5, -1.25, 2.0]);
        let shifted = Gmm::new(
            g.weights().to_vec(),
            g.means().iter().map(|m| m + &v).collect(),
            g.covariances().to_vec(),
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.1, 0.2, -0.3]);
        let a = g.logpdf(&x).unwrap();
        let b = shifted.logpdf(&(&x + &v)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_agrees_with_pointwise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let g = random_model(4, 5, &mut rng);
        let data = DMatrix::from_fn(30, 4, |_, _| rng.gen_range(-3.0..3.0));
        let mat = g.log_density_matrix(&data);
        for t in 0..30 {
            let x = data.row(t).transpose();
            let per = g.component_log_densities(&x);
            for m in 0..5 {
                assert!((mat[(t, m)] - per[m]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn serialization_round_trip_and_checksum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let g = random_model(3, 4, &mut rng);
        let bytes = g.to_bytes();
        assert_eq!(&bytes[..4], b"GMM1");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 4);
        assert_eq!(bytes.len(), 20 + 8 * (4 + 12 + 36) + 32);
        let (back, used) = Gmm::from_bytes(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, g);

        let mut corrupt = bytes.clone();
        corrupt[30] ^= 1;
        assert!(Gmm::from_bytes(&corrupt).is_err());
        assert!(Gmm::from_bytes(&bytes[..40]).is_err());
    }

    #[test]
    fn rejects_invalid_models() {
        let mu = vec![DVector::from_element(2, 0.0)];
        assert!(Gmm::new(vec![0.5], mu.clone(), vec![DMatrix::identity(2, 2)]).is_err());
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Gmm::new(vec![1.0], mu.clone(), vec![not_pd]).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(Gmm::new(vec![1.0], mu, vec![asym]).is_err());
    }

    #[test]
    fn flooring_lifts_small_eigenvalues() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = floor_covariance(&c, 1e-3);
        let eig = f.clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() >= 1e-3 - 1e-12);
        assert!((eig.eigenvalues.max() - 2.0).abs() < 1e-12);
        assert!(Cholesky::new(f).is_some());
    }
}
