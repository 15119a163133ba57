use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{CorpusManifest, SpeakerEntry, MANIFEST_FILE};
use crate::audio::write_wav;
use crate::error::{Error, Result};
use crate::synth::{SyntheticSpeaker, SYNTH_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticCorpusSpec {
    pub speakers: usize,
    pub train_secs: f64,
    pub test_files: usize,
    pub test_secs: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            speakers: 10,
            train_secs: 60.0,
            test_files: 5,
            test_secs: 2.0,
            seed: 1,
        }
    }
}

fn speaker_seed(seed: u64, index: usize, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (stream << 48) ^ index as u64
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `<dir>/spkNN/train.wav`, `<dir>/spkNN/test_K.wav` and
/// `<dir>/manifest.toml` for a synthetic closed-set corpus.
pub fn write_synthetic_corpus(dir: &Path, spec: &SyntheticCorpusSpec) -> Result<CorpusManifest> {
    if spec.speakers < 2 || spec.test_files == 0 {
        return Err(Error::InvalidParameter(
            "need two or more speakers and at least one test file".into(),
        ));
    }
    let entries: Vec<SpeakerEntry> = (0..spec.speakers)
        .into_par_iter()
        .map(|k| {
            let id = format!("spk{k:02}");
            let sub = dir.join(&id);
            ensure_dir(&sub)?;
            let mut voice = SyntheticSpeaker::new(speaker_seed(spec.seed, k, 1));
            let train = PathBuf::from(&id).join("train.wav");
            write_wav(&voice.utterance(spec.train_secs), dir.join(&train))?;
            let mut test = Vec::with_capacity(spec.test_files);
            for t in 0..spec.test_files {
                let rel = PathBuf::from(&id).join(format!("test_{t}.wav"));
                write_wav(&voice.utterance(spec.test_secs), dir.join(&rel))?;
                test.push(rel);
            }
            Ok(SpeakerEntry {
                id,
                train: vec![train],
                test,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = CorpusManifest {
        source_rate: SYNTH_RATE_HZ,
        speakers: entries,
    };
    manifest.validate()?;
    manifest.save(dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Wideband training material for the extension model, from voices disjoint
/// from those of `write_synthetic_corpus` with the same seed.
pub fn write_synthetic_bwe_corpus(
    dir: &Path,
    speakers: usize,
    secs_each: f64,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    (0..speakers)
        .into_par_iter()
        .map(|k| {
            let path = dir.join(format!("voice{k:02}.wav"));
            write_wav(
                &SyntheticSpeaker::new(speaker_seed(seed, k, 2)).utterance(secs_each),
                &path,
            )?;
            Ok(path)
        })
        .collect()
}
