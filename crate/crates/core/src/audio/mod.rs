//! Audio buffers, WAV file I/O and the G.711 A-law codec used to simulate
//! an ISDN channel.

pub mod alaw;
mod wav;

pub use wav::{read_alaw_raw, read_wav, wav_info, write_alaw_raw, write_wav, ChannelSelect, WriteReport};

use crate::error::{Error, Result};

/// Mono signal with its sampling rate. Samples are nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate_hz,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Rejects anything other than the 8 and 16 kHz rates the pipeline supports.
    pub fn require_pipeline_rate(&self) -> Result<()> {
        match self.sample_rate_hz {
            8000 | 16000 => Ok(()),
            r => Err(Error::UnsupportedRate(r, "8000 or 16000")),
        }
    }

    pub fn require_rate(&self, rate: u32) -> Result<()> {
        if self.sample_rate_hz == rate {
            Ok(())
        } else if rate == 8000 {
            Err(Error::UnsupportedRate(self.sample_rate_hz, "8000"))
        } else if rate == 16000 {
            Err(Error::UnsupportedRate(self.sample_rate_hz, "16000"))
        } else {
            Err(Error::UnsupportedRate(self.sample_rate_hz, "a different rate"))
        }
    }

    /// Builds a buffer with the same rate. Used by processing stages whose
    /// output is finite by construction.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub(crate) fn from_parts(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate_hz,
        }
    }
}
