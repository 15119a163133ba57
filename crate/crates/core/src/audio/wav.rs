use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use super::{alaw, AudioBuffer};
use crate::error::{Error, Result};

/// Which channel of a stereo file becomes the mono buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelSelect {
    #[default]
    Left,
    Right,
    Mix,
}

impl std::str::FromStr for ChannelSelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            "mix" => Ok(Self::Mix),
            other => Err(Error::InvalidParameter(format!("unknown channel '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteReport {
    pub frames: usize,
    pub clipped: usize,
}

/// Reads a 16-bit PCM WAV file, mono or stereo.
pub fn read_wav(path: impl AsRef<Path>, channel_select: ChannelSelect) -> Result<AudioBuffer> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::UnsupportedEncoding("floating-point samples".into()));
    }
    if spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "{}-bit samples (only 16-bit PCM is supported)",
            spec.bits_per_sample
        )));
    }
    let channels = usize::from(spec.channels);
    if !(1..=2).contains(&channels) {
        return Err(Error::UnsupportedEncoding(format!("{channels} channels")));
    }
    let raw = reader
        .samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| map_hound(path, e))?;
    if raw.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let samples = if channels == 1 {
        raw.iter().map(|&s| alaw::from_linear16(s)).collect()
    } else {
        raw.chunks_exact(2)
            .map(|lr| match channel_select {
                ChannelSelect::Left => alaw::from_linear16(lr[0]),
                ChannelSelect::Right => alaw::from_linear16(lr[1]),
                ChannelSelect::Mix => 0.5 * (alaw::from_linear16(lr[0]) + alaw::from_linear16(lr[1])),
            })
            .collect()
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Sampling rate and duration in seconds from the header alone.
pub fn wav_info(path: impl AsRef<Path>) -> Result<(u32, f64)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    Ok((
        spec.sample_rate,
        f64::from(reader.duration()) / f64::from(spec.sample_rate),
    ))
}

/// Writes a mono 16-bit PCM WAV file. Samples outside [-1, 1] are clipped and counted.
pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<WriteReport> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    let mut clipped = 0;
    for &s in buffer.samples() {
        if !(-1.0..=1.0).contains(&s) {
            clipped += 1;
        }
        writer
            .write_sample(alaw::to_linear16(s.clamp(-1.0, 1.0)))
            .map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))?;
    if clipped > 0 {
        warn!("{}: clipped {clipped} samples", path.display());
    }
    Ok(WriteReport {
        frames: buffer.len(),
        clipped,
    })
}

/// Writes a headerless A-law octet stream. The buffer must be at 8 kHz.
pub fn write_alaw_raw(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    buffer.require_rate(8000)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let bytes: Vec<u8> = buffer
        .samples()
        .iter()
        .map(|&s| alaw::encode(alaw::to_linear16(s)))
        .collect();
    out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a headerless A-law octet stream as an 8 kHz buffer.
pub fn read_alaw_raw(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let samples = bytes
        .iter()
        .map(|&c| alaw::from_linear16(alaw::decode(c)))
        .collect();
    AudioBuffer::new(samples, 8000)
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::FormatError(msg) => Error::MalformedHeader(msg.to_string()),
        hound::Error::Unsupported => Error::UnsupportedEncoding("unsupported wav format".into()),
        other => Error::MalformedHeader(other.to_string()),
    }
}
