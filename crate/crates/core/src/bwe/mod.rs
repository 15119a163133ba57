//! Bandwidth extension of narrowband telephone speech with a joint mixture
//! model of narrowband features and high-band envelope/energy.
//!
//! Joint vector layout: 15 narrowband mel cepstra, degree of voicing,
//! high-band envelope cepstra, high/narrow energy ratio in dB.

mod extend;
mod model;
mod train;
mod variants;

pub use extend::{bwe_extend, bwe_extend_traced, FrameTrace};
pub use model::{BweFeatureConfig, BweModel};
pub use train::{bwe_train, BweTrainConfig, MIN_TRAINING_SECS};
pub use variants::{make_variants, Variant};

/// Narrowband model input for one 8 kHz frame of `frame_len / 2` samples.
pub fn narrowband_feature(config: &BweFeatureConfig, frame: &[f64]) -> Result<NbFeature> {
    if frame.len() != config.nb_frame_len() {
        return Err(crate::Error::DimensionMismatch {
            expected: config.nb_frame_len(),
            got: frame.len(),
        });
    }
    FrameAnalyzer::new(config)?.narrowband(frame)
}

use crate::dsp::{window, WindowKind, POTS_HIGH_HZ, POTS_LOW_HZ};
use crate::error::Result;
use crate::features::{band_energies, ratio_db, voicing_degree, HbFeature, MelCepstrum, NbFeature, NB_CEPS};
use crate::spectrum;

/// Per-frame analysis shared by training and extension.
#[derive(Debug, Clone)]
pub(crate) struct FrameAnalyzer {
    config: BweFeatureConfig,
    mel: MelCepstrum,
    hamming: Vec<f64>,
    hann: Vec<f64>,
}

impl FrameAnalyzer {
    pub(crate) fn new(config: &BweFeatureConfig) -> Result<Self> {
        let nb_len = config.nb_frame_len();
        Ok(Self {
            config: *config,
            mel: MelCepstrum::new(
                8000,
                NB_CEPS,
                config.nb_filters,
                nb_len,
                Some((POTS_LOW_HZ, POTS_HIGH_HZ)),
            )?,
            hamming: window(WindowKind::Hamming, nb_len),
            hann: window(WindowKind::Hann, config.frame_len),
        })
    }

    /// `frame` is one 8 kHz frame of `frame_len / 2` samples.
    pub(crate) fn narrowband(&self, frame: &[f64]) -> Result<NbFeature> {
        let windowed: Vec<f64> = frame.iter().zip(&self.hamming).map(|(a, b)| a * b).collect();
        let ceps = self.mel.compute(&windowed)?;
        let mut cepstra = [0.0; NB_CEPS];
        cepstra.copy_from_slice(&ceps);
        Ok(NbFeature {
            cepstra,
            voicing: voicing_degree(frame, 8000),
        })
    }

    /// `frame` is one 16 kHz frame of `frame_len` samples.
    pub(crate) fn high_band(&self, frame: &[f64]) -> HbFeature {
        let n = self.config.frame_len;
        let windowed = self.hann_window(frame);
        let power = spectrum::power_spectrum(&windowed, n);
        let (narrow, high) = band_energies(&power, n, 16000.0);
        HbFeature::new(
            self.config.envelope.analyse(&power, n, 16000.0),
            ratio_db(narrow, high),
        )
    }

    pub(crate) fn hann_window(&self, frame: &[f64]) -> Vec<f64> {
        frame.iter().zip(&self.hann).map(|(a, b)| a * b).collect()
    }
}
