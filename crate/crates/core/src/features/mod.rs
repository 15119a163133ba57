//! Per-frame parameterizations: LPC/LPCC, mel cepstrum, voicing and the
//! band energy split, plus whole-utterance feature extraction.

mod band;
mod extract;
mod lpc;
mod mel;
mod voicing;

pub use band::{
    band_energies, band_energy_ratio, ratio_db, HighBandEnvelope, HIGH_BAND_TOP_HZ, RATIO_CEIL_DB,
    RATIO_FLOOR_DB,
};
pub use extract::{
    extract_features, write_feature_csv, FeatureMatrix, FrameConfig, Parameterization, PREEMPHASIS,
};
pub use lpc::{autocorr_lpc, autocorrelation, lpc_from_autocorrelation, lpc_to_lpcc, LpcModel};
pub use mel::{default_filter_count, hz_to_mel, mel_to_hz, melcepst, MelCepstrum, MelFilterbank};
pub use voicing::voicing_degree;

/// Number of narrowband cepstra in the extension model's input vector.
pub const NB_CEPS: usize = 15;

/// Narrowband input of the extension model: 15 cepstra and the degree of voicing.
#[derive(Debug, Clone, PartialEq)]
pub struct NbFeature {
    pub cepstra: [f64; NB_CEPS],
    pub voicing: f64,
}

impl NbFeature {
    pub const DIM: usize = NB_CEPS + 1;

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.cepstra.to_vec();
        v.push(self.voicing);
        v
    }
}

/// High-band target: envelope shape cepstra and the high/narrow log-energy ratio in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct HbFeature {
    pub envelope_cepstra: Vec<f64>,
    pub energy_ratio_db: f64,
}

impl HbFeature {
    pub fn new(envelope_cepstra: Vec<f64>, energy_ratio_db: f64) -> Self {
        Self {
            envelope_cepstra,
            energy_ratio_db: energy_ratio_db.clamp(RATIO_FLOOR_DB, RATIO_CEIL_DB),
        }
    }
}
