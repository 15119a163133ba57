//! Bandwidth extension of telephone speech and covariance-matrix speaker
//! identification, with the signal processing, feature extraction, mixture
//! modelling and experiment harness they share.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod bwe;
pub mod density;
pub mod dsp;
pub mod error;
pub mod experiments;
pub mod features;
pub mod speaker;
pub mod spectrum;
pub mod synth;

pub use audio::AudioBuffer;
pub use bwe::{BweModel, Variant};
pub use density::Gmm;
pub use error::{Error, Result};
pub use features::{FeatureMatrix, FrameConfig, Parameterization};
pub use speaker::SpeakerModel;
