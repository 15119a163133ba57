use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;

use super::CorpusManifest;
use crate::audio::{read_wav, AudioBuffer, ChannelSelect};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureMatrix, FrameConfig, Parameterization};
use crate::speaker::{enroll, identify, Score};

/// One database condition: a label and a manifest whose paths resolve under `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantCorpus {
    pub label: String,
    pub manifest: CorpusManifest,
    pub root: PathBuf,
}

impl VariantCorpus {
    pub fn load(label: impl Into<String>, manifest_path: impl AsRef<Path>) -> Result<Self> {
        let (manifest, root) = CorpusManifest::load(manifest_path)?;
        Ok(Self {
            label: label.into(),
            manifest,
            root,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameterization: Parameterization,
    pub p_list: Vec<usize>,
    pub frames: Vec<FrameConfig>,
}

/// Identity of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellKey {
    pub variant: String,
    pub parameterization: Parameterization,
    pub p: usize,
    pub frame_ms: f64,
    pub fft_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub cell: CellKey,
    /// Top-1 identification rate in percent.
    pub rate: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvalidCell {
    pub cell: CellKey,
    pub reason: String,
}

/// One identification decision, kept for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub cell: CellKey,
    pub utterance: PathBuf,
    pub true_id: String,
    pub decided_id: String,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub results: Vec<ExperimentResult>,
    pub invalid: Vec<InvalidCell>,
    pub trials: Vec<Trial>,
}

/// `100 * (#top-1 correct) / N`.
pub fn identification_rate(decisions: &[(String, Vec<Score>)]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::InsufficientData("no identification decisions".into()));
    }
    let correct = decisions
        .iter()
        .filter(|(truth, ranked)| ranked.first().is_some_and(|s| &s.speaker_id == truth))
        .count();
    Ok(rate_from_counts(correct, decisions.len()))
}

pub fn rate_from_counts(correct: usize, total: usize) -> f64 {
    100.0 * correct as f64 / total as f64
}

struct LoadedSpeaker {
    id: String,
    train: Vec<AudioBuffer>,
    test: Vec<(PathBuf, AudioBuffer)>,
}

fn load_corpus(corpus: &VariantCorpus) -> Result<Vec<LoadedSpeaker>> {
    corpus
        .manifest
        .speakers
        .par_iter()
        .map(|s| {
            let read = |rel: &PathBuf| read_wav(corpus.root.join(rel), ChannelSelect::Left);
            Ok(LoadedSpeaker {
                id: s.id.clone(),
                train: s.train.iter().map(read).collect::<Result<_>>()?,
                test: s
                    .test
                    .iter()
                    .map(|rel| Ok((rel.clone(), read(rel)?)))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

fn features_of(
    buffers: &[AudioBuffer],
    param: Parameterization,
    p: usize,
    frame: &FrameConfig,
) -> Result<FeatureMatrix> {
    let parts: Vec<FeatureMatrix> = buffers
        .iter()
        .map(|b| extract_features(b, param, p, frame))
        .collect::<Result<_>>()?;
    FeatureMatrix::concat(&parts)
}

fn run_cell(
    speakers: &[LoadedSpeaker],
    cell: &CellKey,
    frame: &FrameConfig,
) -> Result<(ExperimentResult, Vec<Trial>)> {
    let models = speakers
        .iter()
        .map(|s| {
            enroll(
                &features_of(&s.train, cell.parameterization, cell.p, frame)?,
                &s.id,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trials = Vec::new();
    let mut decisions = Vec::new();
    for s in speakers {
        for (path, audio) in &s.test {
            let f = extract_features(audio, cell.parameterization, cell.p, frame)?;
            let ranked = identify(&f, &models)?;
            trials.push(Trial {
                cell: cell.clone(),
                utterance: path.clone(),
                true_id: s.id.clone(),
                decided_id: ranked[0].speaker_id.clone(),
                distance: ranked[0].distance,
            });
            decisions.push((s.id.clone(), ranked));
        }
    }
    let rate = identification_rate(&decisions)?;
    Ok((
        ExperimentResult {
            cell: cell.clone(),
            rate,
            trials: decisions.len(),
        },
        trials,
    ))
}

/// Enrolls every speaker and identifies every test utterance for each
/// (variant, frame, P) cell. Cells whose features or models cannot be
/// built are reported as invalid; I/O failures abort. Output order follows
/// the corpus list, then the frame list, then the P list.
pub fn run_sweep(corpora: &[VariantCorpus], config: &SweepConfig) -> Result<SweepOutcome> {
    if config.p_list.contains(&0) {
        return Err(Error::InvalidParameter(
            "feature dimensions must be positive".into(),
        ));
    }
    let loaded: Vec<Vec<LoadedSpeaker>> = corpora.iter().map(load_corpus).collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (ci, corpus) in corpora.iter().enumerate() {
        let rate = corpus.manifest.source_rate;
        for frame in &config.frames {
            let fft_len = frame.fft_len_for(rate)?;
            for &p in &config.p_list {
                cells.push((
                    ci,
                    *frame,
                    CellKey {
                        variant: corpus.label.clone(),
                        parameterization: config.parameterization,
                        p,
                        frame_ms: frame.frame_ms,
                        fft_len,
                    },
                ));
            }
        }
    }
    info!("running {} sweep cells", cells.len());
    let outcomes: Vec<Result<(ExperimentResult, Vec<Trial>)>> = cells
        .par_iter()
        .map(|(ci, frame, key)| {
            let started = std::time::Instant::now();
            let out = run_cell(&loaded[*ci], key, frame);
            debug!(
                "{} P={} {} ms: {:.2?}",
                key.variant,
                key.p,
                key.frame_ms,
                started.elapsed()
            );
            out
        })
        .collect();

    let mut outcome = SweepOutcome::default();
    for ((_, _, key), res) in cells.into_iter().zip(outcomes) {
        match res {
            Ok((r, t)) => {
                outcome.results.push(r);
                outcome.trials.extend(t);
            }
            Err(e @ (Error::Io { .. } | Error::MissingFile(_))) => return Err(e),
            Err(e) => outcome.invalid.push(InvalidCell {
                cell: key,
                reason: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}
