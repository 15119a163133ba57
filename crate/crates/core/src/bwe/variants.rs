use std::fmt;
use std::str::FromStr;

use super::{bwe_extend, BweModel};
use crate::audio::{alaw, AudioBuffer};
use crate::dsp;
use crate::error::{Error, Result};

/// Database conditions derived from one wideband recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Wideband original at 16 kHz.
    Orig,
    /// Telephone band, kept at 16 kHz.
    Nb,
    /// Telephone band extended back to 16 kHz.
    Bwe,
    /// 8 kHz A-law channel.
    Isdn,
    /// A-law channel, telephone band, extended to 16 kHz.
    IsdnBwe,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Self::Orig, Self::Nb, Self::Bwe, Self::Isdn, Self::IsdnBwe];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Orig => "orig",
            Self::Nb => "nb",
            Self::Bwe => "bwe",
            Self::Isdn => "isdn",
            Self::IsdnBwe => "isdn_bwe",
        }
    }

    pub fn needs_model(&self) -> bool {
        matches!(self, Self::Bwe | Self::IsdnBwe)
    }

    pub fn output_rate(&self) -> u32 {
        match self {
            Self::Isdn => 8000,
            _ => 16000,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant '{s}'")))
    }
}

fn isdn(buffer: &AudioBuffer) -> Result<AudioBuffer> {
    let eight = match buffer.sample_rate_hz() {
        8000 => buffer.clone(),
        16000 => dsp::downsample_2x(buffer)?,
        other => return Err(Error::UnsupportedRate(other, "8000 or 16000")),
    };
    Ok(eight.with_samples(alaw::round_trip(eight.samples())))
}

/// Builds one database condition from a recording. `model` is required for
/// the extended variants.
pub fn make_variants(
    buffer: &AudioBuffer,
    variant: Variant,
    model: Option<&BweModel>,
) -> Result<AudioBuffer> {
    let need_model = || {
        model.ok_or_else(|| Error::InvalidParameter(format!("variant '{variant}' needs an extension model")))
    };
    match variant {
        Variant::Orig => Ok(buffer.clone()),
        Variant::Nb => {
            buffer.require_rate(16000)?;
            dsp::potsband_filter(buffer)
        }
        Variant::Bwe => {
            buffer.require_rate(16000)?;
            let m = need_model()?;
            bwe_extend(&dsp::downsample_2x(&dsp::potsband_filter(buffer)?)?, m)
        }
        Variant::Isdn => isdn(buffer),
        Variant::IsdnBwe => {
            let m = need_model()?;
            bwe_extend(&dsp::potsband_filter(&isdn(buffer)?)?, m)
        }
    }
}
