use log::{debug, info};
use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{BweFeatureConfig, BweModel, FrameAnalyzer};
use crate::audio::AudioBuffer;
use crate::density::{em_fit, EmConfig};
use crate::dsp::{self, frame_start_count};
use crate::error::{Error, Result};

pub const MIN_TRAINING_SECS: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BweTrainConfig {
    pub mixtures: usize,
    pub em: EmConfig,
    pub features: BweFeatureConfig,
    pub min_secs: f64,
}

impl Default for BweTrainConfig {
    fn default() -> Self {
        Self {
            mixtures: 32,
            em: EmConfig::default(),
            features: BweFeatureConfig::default(),
            min_secs: MIN_TRAINING_SECS,
        }
    }
}

/// Joint feature rows of one wideband utterance, loud frames only.
fn joint_rows(analyzer: &FrameAnalyzer, cfg: &BweFeatureConfig, orig: &AudioBuffer) -> Result<Vec<Vec<f64>>> {
    let nb = dsp::downsample_2x(&dsp::potsband_filter(orig)?)?;
    let (x8, x16) = (nb.samples(), orig.samples());
    let (len8, hop8) = (cfg.nb_frame_len(), cfg.hop() / 2);
    if x8.len() < len8 {
        return Ok(Vec::new());
    }
    let count = frame_start_count(x8.len(), len8, hop8);
    let energy = |i: usize| -> f64 {
        let s = 2 * i * hop8;
        x16[s..s + cfg.frame_len].iter().map(|v| v * v).sum()
    };
    let energies: Vec<f64> = (0..count).map(energy).collect();
    let peak = energies.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Ok(Vec::new());
    }
    let gate = peak * 10f64.powf(-cfg.activity_floor_db / 10.0);
    let mut rows = Vec::new();
    for (i, &e) in energies.iter().enumerate() {
        if e < gate {
            continue;
        }
        let s8 = i * hop8;
        let nbf = analyzer.narrowband(&x8[s8..s8 + len8])?;
        let hbf = analyzer.high_band(&x16[2 * s8..2 * s8 + cfg.frame_len]);
        let mut row = nbf.to_vec();
        row.extend_from_slice(&hbf.envelope_cepstra);
        row.push(hbf.energy_ratio_db);
        rows.push(row);
    }
    Ok(rows)
}

/// Fits the joint model on wideband (16 kHz) speech.
pub fn bwe_train(corpus: &[AudioBuffer], config: &BweTrainConfig) -> Result<BweModel> {
    let cfg = &config.features;
    cfg.validate()?;
    for b in corpus {
        b.require_rate(16000)?;
    }
    let total: f64 = corpus.iter().map(AudioBuffer::duration_secs).sum();
    if total < config.min_secs {
        return Err(Error::InsufficientData(format!(
            "{total:.1} s of training audio, need at least {:.0} s",
            config.min_secs
        )));
    }
    let analyzer = FrameAnalyzer::new(cfg)?;
    let per_buffer: Vec<Vec<Vec<f64>>> = corpus
        .par_iter()
        .map(|b| joint_rows(&analyzer, cfg, b))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = per_buffer.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("training corpus is silent".into()));
    }
    let d = cfg.joint_dim();
    let data = DMatrix::from_row_iterator(rows.len(), d, rows.iter().flatten().copied());
    info!(
        "training {}-component model on {} frames ({total:.1} s of audio)",
        config.mixtures,
        rows.len()
    );
    let fit = em_fit(&data, config.mixtures, &config.em)?;
    debug!(
        "EM stopped after {} iterations (converged: {})",
        fit.log_likelihood.len(),
        fit.converged
    );
    BweModel::new(fit.model, *cfg)
}
