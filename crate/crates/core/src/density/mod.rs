//! Full-covariance Gaussian mixtures: EM training, density evaluation, and
//! conditional estimation (MMSE mean and asymmetric-cost quantile) of one
//! block of variables given the other.

pub(crate) mod conditional;
mod em;
pub(crate) mod gmm;

pub use conditional::{
    conditional_mmse, conditional_quantile_estimate, BlockSplit, ConditionalGmm, Posterior1d,
};
pub use em::{em_fit, EmConfig, EmFit};
pub(crate) use gmm::ByteReader;
pub use gmm::{floor_covariance, gmm_logpdf, Gmm};
