use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{autocorr_lpc, default_filter_count, lpc_to_lpcc, MelCepstrum};
use crate::audio::AudioBuffer;
use crate::dsp::{self, Overlap, WindowKind};
use crate::error::{Error, Result};
use crate::spectrum::next_pow2;

pub const PREEMPHASIS: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parameterization {
    Lpcc,
    Melcepst,
}

impl fmt::Display for Parameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lpcc => "lpcc",
            Self::Melcepst => "melcepst",
        })
    }
}

impl FromStr for Parameterization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lpcc" => Ok(Self::Lpcc),
            "melcepst" => Ok(Self::Melcepst),
            other => Err(Error::InvalidParameter(format!(
                "unknown parameterization '{other}'"
            ))),
        }
    }
}

/// Analysis frame geometry: Hamming frames of `frame_ms` with 2/3 overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_ms: f64,
    /// FFT size for the mel cepstrum; `None` picks the next power of two.
    pub fft_len: Option<usize>,
}

impl FrameConfig {
    pub fn new(frame_ms: f64) -> Self {
        Self {
            frame_ms,
            fft_len: None,
        }
    }

    pub fn frame_len(&self, fs: u32) -> Result<usize> {
        dsp::frame::frame_len_for(fs, self.frame_ms)
    }

    pub fn fft_len_for(&self, fs: u32) -> Result<usize> {
        let frame_len = self.frame_len(fs)?;
        Ok(self.fft_len.unwrap_or_else(|| next_pow2(frame_len)))
    }
}

/// `T x P` matrix of per-frame feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub vectors: DMatrix<f64>,
    pub label: Parameterization,
}

impl FeatureMatrix {
    pub fn new(vectors: DMatrix<f64>, label: Parameterization) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(Error::InsufficientData("empty feature matrix".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { vectors, label })
    }

    pub fn from_rows(rows: &[Vec<f64>], label: Parameterization) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidParameter("ragged feature rows".into()));
        }
        Self::new(
            DMatrix::from_row_iterator(rows.len(), p, rows.iter().flatten().copied()),
            label,
        )
    }

    pub fn frames(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// First `p` columns.
    pub fn truncated(&self, p: usize) -> Result<Self> {
        if p == 0 || p > self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p,
            });
        }
        Ok(Self {
            vectors: self.vectors.columns(0, p).into_owned(),
            label: self.label,
        })
    }

    /// Stacks several matrices of the same width.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InsufficientData("no feature matrices".into()))?;
        let p = first.dim();
        let mut rows = 0;
        for m in parts {
            if m.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: m.dim(),
                });
            }
            rows += m.frames();
        }
        let mut out = DMatrix::zeros(rows, p);
        let mut at = 0;
        for m in parts {
            out.rows_mut(at, m.frames()).copy_from(&m.vectors);
            at += m.frames();
        }
        Ok(Self {
            vectors: out,
            label: first.label,
        })
    }
}

/// Pre-emphasis, Hamming framing with 2/3 overlap, then LPCC (LPC order = P)
/// or mel cepstrum per frame.
pub fn extract_features(
    buffer: &AudioBuffer,
    parameterization: Parameterization,
    p: usize,
    config: &FrameConfig,
) -> Result<FeatureMatrix> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "feature dimension must be positive".into(),
        ));
    }
    buffer.require_pipeline_rate()?;
    let fs = buffer.sample_rate_hz();
    let emphasized = dsp::preemphasize(buffer, PREEMPHASIS)?;
    let frames = dsp::frame_signal(
        &emphasized,
        config.frame_ms,
        Overlap::TWO_THIRDS,
        WindowKind::Hamming,
    )?;
    let frame_refs: Vec<&[f64]> = frames.iter().collect();
    let rows: Vec<Vec<f64>> = match parameterization {
        Parameterization::Lpcc => frame_refs
            .par_iter()
            .map(|f| autocorr_lpc(f, p).map(|m| lpc_to_lpcc(&m, p)))
            .collect::<Result<_>>()?,
        Parameterization::Melcepst => {
            let fft_len = config.fft_len_for(fs)?;
            let mel = MelCepstrum::new(fs, p, default_filter_count(fs), fft_len, None)?;
            frame_refs
                .par_iter()
                .map(|f| mel.compute(f))
                .collect::<Result<_>>()?
        }
    };
    FeatureMatrix::from_rows(&rows, parameterization)
}

/// CSV dump: a comment line naming the parameterization and P, a column
/// header, then one row per frame.
pub fn write_feature_csv(features: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!(
        "# parameterization={} P={}\n",
        features.label,
        features.dim()
    ));
    let header: Vec<String> = (1..=features.dim()).map(|i| format!("c{i}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in features.vectors.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
