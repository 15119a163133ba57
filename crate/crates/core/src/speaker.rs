//! Covariance-matrix speaker models scored with the arithmetic-harmonic
//! sphericity measure.

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;

use crate::density::ByteReader;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

const MAGIC: &[u8; 4] = b"SPKM";
const FORMAT_VERSION: u32 = 1;
const CONDITION_LIMIT: f64 = 1e10;
const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerModel {
    speaker_id: String,
    covariance: DMatrix<f64>,
    frame_count: usize,
}

impl SpeakerModel {
    pub fn new(speaker_id: impl Into<String>, covariance: DMatrix<f64>, frame_count: usize) -> Result<Self> {
        let p = covariance.nrows();
        if p == 0 || covariance.ncols() != p {
            return Err(Error::BadModel("covariance must be square and nonempty".into()));
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(Error::BadModel("covariance is not symmetric".into()));
        }
        if Cholesky::new(covariance.clone()).is_none() {
            return Err(Error::Singular("speaker covariance".into()));
        }
        Ok(Self {
            speaker_id: speaker_id.into(),
            covariance,
            frame_count,
        })
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    /// Distinct entries of a symmetric P x P matrix.
    pub fn free_parameters(&self) -> usize {
        let p = self.dim();
        (p * p + p) / 2
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = self.dim();
        let id = self.speaker_id.as_bytes();
        let mut out = Vec::with_capacity(28 + id.len() + 8 * self.free_parameters());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&(p as u32).to_le_bytes());
        out.extend_from_slice(&(self.frame_count as u64).to_le_bytes());
        for r in 0..p {
            for c in r..p {
                out.extend_from_slice(&self.covariance[(r, c)].to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = ByteReader::new(bytes);
        if rd.take(4)? != MAGIC {
            return Err(Error::BadModel("not a speaker model file".into()));
        }
        let version = rd.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::BadModel(format!(
                "unsupported speaker model version {version}"
            )));
        }
        let id_len = rd.u32()? as usize;
        let id = std::str::from_utf8(rd.take(id_len)?)
            .map_err(|_| Error::BadModel("speaker id is not UTF-8".into()))?
            .to_string();
        let p = rd.u32()? as usize;
        let frame_count = rd.u64()? as usize;
        if p == 0 || p > 4096 {
            return Err(Error::BadModel(format!("implausible dimension {p}")));
        }
        let mut c = DMatrix::zeros(p, p);
        for r in 0..p {
            for k in r..p {
                let v = rd.f64()?;
                c[(r, k)] = v;
                c[(k, r)] = v;
            }
        }
        if !rd.remaining().is_empty() {
            return Err(Error::BadModel("trailing bytes after speaker model".into()));
        }
        Self::new(id, c, frame_count)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Sample covariance about the mean (divisor T-1), ridge-regularized when
/// badly conditioned.
pub fn covariance_estimate(features: &FeatureMatrix) -> Result<DMatrix<f64>> {
    let (t, p) = features.vectors.shape();
    if t <= p {
        return Err(Error::InsufficientData(format!(
            "{t} frames cannot support a {p}-dimensional covariance"
        )));
    }
    let mean = features.vectors.row_mean();
    let mut centred = features.vectors.clone();
    for mut row in centred.row_iter_mut() {
        row -= &mean;
    }
    let mut c = centred.transpose() * &centred / (t as f64 - 1.0);
    c = (&c + c.transpose()) * 0.5;
    let trace = c.trace();
    if !(trace > 0.0) {
        return Ok(DMatrix::identity(p, p));
    }
    let eig = c.clone().symmetric_eigen();
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if lo <= 0.0 || hi / lo > CONDITION_LIMIT {
        c += DMatrix::identity(p, p) * (RIDGE * trace / p as f64);
    }
    Ok(c)
}

pub fn enroll(features: &FeatureMatrix, speaker_id: &str) -> Result<SpeakerModel> {
    let c = covariance_estimate(features)?;
    SpeakerModel::new(speaker_id, c, features.frames())
}

fn trace_of_solve(chol: &Cholesky<f64, Dyn>, a: &DMatrix<f64>) -> f64 {
    // tr(B⁻¹ A) = tr(A B⁻¹)
    chol.solve(a).trace()
}

/// `ln(tr(A B⁻¹) · tr(B A⁻¹)) − 2 ln P`; zero exactly when A ∝ B.
pub fn sphericity(c_test: &DMatrix<f64>, c_model: &DMatrix<f64>) -> Result<f64> {
    let p = c_test.nrows();
    if c_model.nrows() != p || c_test.ncols() != p || c_model.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: c_model.nrows(),
        });
    }
    let ca = Cholesky::new(c_test.clone()).ok_or_else(|| Error::Singular("test covariance".into()))?;
    let cb = Cholesky::new(c_model.clone()).ok_or_else(|| Error::Singular("model covariance".into()))?;
    Ok(sphericity_factored(c_test, &ca, c_model, &cb))
}

fn sphericity_factored(
    a: &DMatrix<f64>,
    chol_a: &Cholesky<f64, Dyn>,
    b: &DMatrix<f64>,
    chol_b: &Cholesky<f64, Dyn>,
) -> f64 {
    let p = a.nrows() as f64;
    let t1 = trace_of_solve(chol_b, a);
    let t2 = trace_of_solve(chol_a, b);
    // ln(t1/p) + ln(t2/p) keeps the identity case exact
    (t1 / p).ln() + (t2 / p).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub speaker_id: String,
    pub distance: f64,
}

/// Scores the test utterance against every model; best (smallest) first,
/// ties by speaker id.
pub fn identify(test: &FeatureMatrix, models: &[SpeakerModel]) -> Result<Vec<Score>> {
    if models.is_empty() {
        return Err(Error::InvalidParameter(
            "no speaker models to compare against".into(),
        ));
    }
    let c_test = covariance_estimate(test)?;
    let chol_test = Cholesky::new(c_test.clone()).ok_or_else(|| Error::Singular("test covariance".into()))?;
    let mut scores: Vec<Score> = models
        .par_iter()
        .map(|m| {
            if m.dim() != c_test.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: m.dim(),
                    got: c_test.nrows(),
                });
            }
            let chol_m = Cholesky::new(m.covariance.clone())
                .ok_or_else(|| Error::Singular(format!("model {}", m.speaker_id)))?;
            Ok(Score {
                speaker_id: m.speaker_id.clone(),
                distance: sphericity_factored(&c_test, &chol_test, &m.covariance, &chol_m),
            })
        })
        .collect::<Result<_>>()?;
    scores.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.speaker_id.cmp(&b.speaker_id))
    });
    Ok(scores)
}
