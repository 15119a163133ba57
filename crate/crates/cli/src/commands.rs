use std::path::{Path, PathBuf};

use log::{info, warn};
use spkbwe::audio::{read_alaw_raw, read_wav, write_alaw_raw, write_wav, ChannelSelect};
use spkbwe::bwe::{self, bwe_train as train_model, make_variants, BweTrainConfig};
use spkbwe::density::EmConfig;
use spkbwe::experiments::{
    build_database_variants, emit_report, run_sweep, variant_root, write_synthetic_bwe_corpus,
    write_synthetic_corpus, CorpusManifest, SweepConfig, SyntheticCorpusSpec, VariantCorpus, MANIFEST_FILE,
};
use spkbwe::{AudioBuffer, BweModel, Error, FrameConfig};

use crate::args::{ExperimentArgs, ExtendArgs, FilterArgs, SynthCorpusArgs, TrainArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult = Result<(), CliError>;

fn is_alaw(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("al"))
}

fn read_audio(path: &Path, channel: ChannelSelect) -> Result<AudioBuffer, Error> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    if is_alaw(path) {
        read_alaw_raw(path)
    } else {
        read_wav(path, channel)
    }
}

fn write_audio(buffer: &AudioBuffer, path: &Path) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    if is_alaw(path) {
        return write_alaw_raw(buffer, path);
    }
    let report = write_wav(buffer, path)?;
    if report.clipped > 0 {
        warn!(
            "{}: {} of {} samples clipped",
            path.display(),
            report.clipped,
            report.frames
        );
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<BweModel, Error> {
    let model = BweModel::load(path)?;
    info!(
        "loaded extension model {} ({} components)",
        path.display(),
        model.joint().components()
    );
    Ok(model)
}

pub fn filter(a: &FilterArgs) -> CliResult {
    if a.variant.needs_model() && a.model.is_none() {
        return Err(CliError::Usage(format!("variant '{}' needs --model", a.variant)));
    }
    let input = read_audio(&a.input, a.channel)?;
    let model = a.model.as_deref().map(load_model).transpose()?;
    let out = make_variants(&input, a.variant, model.as_ref())?;
    write_audio(&out, &a.output)?;
    info!("{} -> {} ({})", a.input.display(), a.output.display(), a.variant);
    Ok(())
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
        let p = entry.path();
        if entry.file_type().is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            files.push(p.to_path_buf());
        }
    }
    Ok(files)
}

fn train_config(mixtures: usize, seed: u64, max_iter: usize) -> BweTrainConfig {
    BweTrainConfig {
        mixtures,
        em: EmConfig {
            seed,
            max_iter,
            ..EmConfig::default()
        },
        ..BweTrainConfig::default()
    }
}

fn fit(corpus: &[AudioBuffer], cfg: &BweTrainConfig) -> Result<BweModel, Error> {
    let secs: f64 = corpus.iter().map(AudioBuffer::duration_secs).sum();
    info!(
        "training {}-component extension model on {:.1} s of speech",
        cfg.mixtures, secs
    );
    train_model(corpus, cfg)
}

pub fn bwe_train(a: &TrainArgs) -> CliResult {
    let files = wav_files(&a.corpus_dir)?;
    if files.is_empty() {
        return Err(Error::InsufficientData(format!("no WAV files under {}", a.corpus_dir.display())).into());
    }
    let corpus = files
        .iter()
        .map(|f| read_wav(f, a.channel))
        .collect::<Result<Vec<_>, _>>()?;
    let model = fit(&corpus, &train_config(a.mixtures, a.seed, a.max_iter))?;
    model.save(&a.model_out)?;
    info!("wrote {}", a.model_out.display());
    Ok(())
}

pub fn bwe_extend(a: &ExtendArgs) -> CliResult {
    let input = read_audio(&a.input, a.channel)?;
    let model = load_model(&a.model)?;
    let out = bwe::bwe_extend(&input, &model)?;
    write_audio(&out, &a.output)?;
    Ok(())
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

pub fn experiment(a: &ExperimentArgs) -> CliResult {
    if a.variants.is_empty() || a.p_list.0.is_empty() || a.frame_ms.is_empty() {
        return Err(CliError::Usage("empty variant, P or frame list".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {:?} workers: {e}", a.jobs)))?;
    pool.install(|| run_experiment(a))
}

fn run_experiment(a: &ExperimentArgs) -> CliResult {
    let (manifest, root) = CorpusManifest::load(manifest_path(&a.manifest))?;
    let work = a
        .work_dir
        .clone()
        .unwrap_or_else(|| a.report_dir.join("variants"));

    let model = if a.variants.iter().any(|v| v.needs_model()) {
        Some(match &a.bwe_model {
            Some(p) => load_model(p)?,
            None => {
                let corpus = manifest
                    .speakers
                    .iter()
                    .flat_map(|s| &s.train)
                    .map(|f| read_audio(&root.join(f), ChannelSelect::Left))
                    .collect::<Result<Vec<_>, _>>()?;
                let model = fit(
                    &corpus,
                    &train_config(a.mixtures, a.seed, EmConfig::default().max_iter),
                )?;
                std::fs::create_dir_all(&work).map_err(|e| Error::Io {
                    path: work.clone(),
                    source: e,
                })?;
                model.save(work.join("bwe_model.bwem"))?;
                model
            }
        })
    } else {
        None
    };

    let built = build_database_variants(&manifest, &root, &work, &a.variants, model.as_ref())?;
    info!(
        "variant databases: {} written, {} up to date",
        built.written, built.skipped
    );
    let corpora = a
        .variants
        .iter()
        .map(|&v| VariantCorpus::load(v.label(), variant_root(&work, v).join(MANIFEST_FILE)))
        .collect::<Result<Vec<_>, _>>()?;

    let config = SweepConfig {
        parameterization: a.param,
        p_list: a.p_list.0.clone(),
        frames: a.frame_ms.iter().map(|&ms| FrameConfig::new(ms)).collect(),
    };
    let outcome = run_sweep(&corpora, &config)?;
    for bad in &outcome.invalid {
        warn!(
            "{} P={} {} ms: {}",
            bad.cell.variant, bad.cell.p, bad.cell.frame_ms, bad.reason
        );
    }
    let written = emit_report(&outcome, &a.report_dir, &a.param.to_string(), &a.format)?;
    for p in written {
        info!("wrote {}", p.display());
    }
    Ok(())
}

pub fn synth_corpus(a: &SynthCorpusArgs) -> CliResult {
    for (name, v) in [
        ("train-secs", a.train_secs),
        ("test-secs", a.test_secs),
        ("bwe-secs", a.bwe_secs),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Usage(format!("--{name} must be positive")));
        }
    }
    let spec = SyntheticCorpusSpec {
        speakers: a.speakers,
        train_secs: a.train_secs,
        test_files: a.test_files,
        test_secs: a.test_secs,
        seed: a.seed,
    };
    let manifest = write_synthetic_corpus(&a.out_dir, &spec)?;
    info!(
        "wrote {} speakers, {} test files to {}",
        manifest.speakers.len(),
        manifest.test_count(),
        a.out_dir.display()
    );
    if let Some(dir) = &a.bwe_dir {
        let files = write_synthetic_bwe_corpus(dir, a.bwe_voices, a.bwe_secs, a.seed)?;
        info!(
            "wrote {} extension training files to {}",
            files.len(),
            dir.display()
        );
    }
    Ok(())
}
