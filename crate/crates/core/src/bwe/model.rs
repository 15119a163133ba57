use std::io::Write;
use std::path::Path;

use crate::density::{BlockSplit, ByteReader, ConditionalGmm, Gmm};
use crate::error::{Error, Result};
use crate::features::{HighBandEnvelope, NbFeature};

const MAGIC: &[u8; 4] = b"BWEM";
const FORMAT_VERSION: u32 = 1;

/// Frame geometry and estimator settings stored with a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BweFeatureConfig {
    /// Frame length at 16 kHz; the 8 kHz frame is half of it and the hop is half a frame.
    pub frame_len: usize,
    pub nb_filters: usize,
    pub envelope: HighBandEnvelope,
    /// LPC order of the residual used as excitation.
    pub lpc_order: usize,
    /// LPC order of the envelope removed from the folded excitation.
    pub flatten_order: usize,
    /// Cost of over-estimating the energy ratio, relative to `under_penalty`.
    pub over_penalty: f64,
    pub under_penalty: f64,
    /// Training frames this far below the loudest frame of their utterance are skipped.
    pub activity_floor_db: f64,
}

impl Default for BweFeatureConfig {
    fn default() -> Self {
        Self {
            frame_len: 512,
            nb_filters: 20,
            envelope: HighBandEnvelope::default(),
            lpc_order: 10,
            flatten_order: 4,
            over_penalty: 3.0,
            under_penalty: 1.0,
            activity_floor_db: 50.0,
        }
    }
}

impl BweFeatureConfig {
    pub fn nb_frame_len(&self) -> usize {
        self.frame_len / 2
    }

    pub fn hop(&self) -> usize {
        self.frame_len / 2
    }

    pub fn joint_dim(&self) -> usize {
        NbFeature::DIM + self.envelope.n_ceps + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.frame_len < 64 || self.frame_len % 4 != 0 || !self.frame_len.is_power_of_two() {
            return bad("frame length must be a power of two of at least 64");
        }
        if self.nb_filters <= crate::features::NB_CEPS {
            return bad("need more mel filters than narrowband cepstra");
        }
        if self.envelope.subbands < 2
            || self.envelope.n_ceps == 0
            || self.envelope.n_ceps >= self.envelope.subbands
        {
            return bad("envelope needs 2+ sub-bands and fewer cepstra than sub-bands");
        }
        if self.lpc_order == 0 || self.flatten_order == 0 {
            return bad("LPC orders must be positive");
        }
        if !(self.over_penalty > 0.0 && self.under_penalty > 0.0) {
            return bad("penalties must be positive");
        }
        if !(self.activity_floor_db > 0.0) {
            return bad("activity floor must be positive");
        }
        Ok(())
    }

    fn write(&self, out: &mut Vec<u8>) {
        for v in [
            self.frame_len,
            self.nb_filters,
            self.envelope.subbands,
            self.envelope.n_ceps,
            self.lpc_order,
            self.flatten_order,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in [self.over_penalty, self.under_penalty, self.activity_floor_db] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn read(rd: &mut ByteReader<'_>) -> Result<Self> {
        let mut u = || rd.u32().map(|v| v as usize);
        let (frame_len, nb_filters, subbands, n_ceps, lpc_order, flatten_order) =
            (u()?, u()?, u()?, u()?, u()?, u()?);
        let cfg = Self {
            frame_len,
            nb_filters,
            envelope: HighBandEnvelope { subbands, n_ceps },
            lpc_order,
            flatten_order,
            over_penalty: rd.f64()?,
            under_penalty: rd.f64()?,
            activity_floor_db: rd.f64()?,
        };
        cfg.validate()
            .map_err(|e| Error::BadModel(format!("feature config: {e}")))?;
        Ok(cfg)
    }
}

/// Trained extension model: the joint mixture plus the conditional
/// estimators derived from it.
#[derive(Debug, Clone)]
pub struct BweModel {
    joint: Gmm,
    features: BweFeatureConfig,
    split: BlockSplit,
    pub(crate) ratio_estimator: ConditionalGmm,
    pub(crate) envelope_estimator: ConditionalGmm,
}

impl PartialEq for BweModel {
    fn eq(&self, other: &Self) -> bool {
        self.joint == other.joint && self.features == other.features
    }
}

impl BweModel {
    pub fn new(joint: Gmm, features: BweFeatureConfig) -> Result<Self> {
        features.validate()?;
        let d = features.joint_dim();
        if joint.dim() != d {
            return Err(Error::BadModel(format!(
                "mixture has {} dimensions but the feature config implies {d}",
                joint.dim()
            )));
        }
        let nb = NbFeature::DIM;
        let ratio_dim = d - 1;
        let split = BlockSplit::leading(nb, d)?;
        // the envelope block is marginalized out for the ratio estimate
        let mut ratio_dims: Vec<usize> = (0..nb).collect();
        ratio_dims.push(ratio_dim);
        let ratio_estimator =
            ConditionalGmm::new(&marginal(&joint, &ratio_dims)?, BlockSplit::leading(nb, nb + 1)?)?;
        let mut env_x: Vec<usize> = (0..nb).collect();
        env_x.push(ratio_dim);
        let envelope_estimator =
            ConditionalGmm::new(&joint, BlockSplit::new(env_x, (nb..ratio_dim).collect(), d)?)?;
        Ok(Self {
            joint,
            features,
            split,
            ratio_estimator,
            envelope_estimator,
        })
    }

    pub fn joint(&self) -> &Gmm {
        &self.joint
    }

    pub fn features(&self) -> &BweFeatureConfig {
        &self.features
    }

    /// Narrowband block versus the high-band block (envelope and energy ratio).
    pub fn split(&self) -> &BlockSplit {
        &self.split
    }

    /// Posterior mean of the energy ratio (dB) given a narrowband feature vector.
    pub fn ratio_posterior_mean(&self, nb: &NbFeature) -> Result<f64> {
        let x = nalgebra::DVector::from_vec(nb.to_vec());
        Ok(self.ratio_estimator.posterior(&x)?.mean())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        self.features.write(&mut out);
        out.extend_from_slice(&self.joint.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = ByteReader::new(bytes);
        if rd.take(4)? != MAGIC {
            return Err(Error::BadModel("not an extension model file".into()));
        }
        let version = rd.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::BadModel(format!(
                "unsupported extension model version {version}"
            )));
        }
        let features = BweFeatureConfig::read(&mut rd)?;
        let (joint, used) = Gmm::from_bytes(rd.remaining())?;
        if used != rd.remaining().len() {
            return Err(Error::BadModel("trailing bytes after mixture payload".into()));
        }
        Self::new(joint, features)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Marginal mixture over the listed dimensions, in the listed order.
fn marginal(model: &Gmm, dims: &[usize]) -> Result<Gmm> {
    let means = model
        .means()
        .iter()
        .map(|m| nalgebra::DVector::from_iterator(dims.len(), dims.iter().map(|&i| m[i])))
        .collect();
    let covs = model
        .covariances()
        .iter()
        .map(|c| nalgebra::DMatrix::from_fn(dims.len(), dims.len(), |r, k| c[(dims[r], dims[k])]))
        .collect();
    Gmm::new(model.weights().to_vec(), means, covs)
}
