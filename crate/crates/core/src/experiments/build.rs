use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::CorpusManifest;
use crate::audio::{read_wav, write_wav, ChannelSelect};
use crate::bwe::{make_variants, BweModel, Variant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub written: usize,
    pub skipped: usize,
}

/// Directory holding one variant's tree under `out_dir`.
pub fn variant_root(out_dir: &Path, variant: Variant) -> PathBuf {
    out_dir.join(variant.label())
}

fn stamp_path(target: &Path) -> PathBuf {
    let mut name = target.file_name().unwrap_or_default().to_os_string();
    name.push(".sha256");
    target.with_file_name(name)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `<out_dir>/<variant>/<relative path>` for every manifest file and
/// variant. Outputs whose stamp matches the current input, variant and model
/// are left untouched.
pub fn build_database_variants(
    manifest: &CorpusManifest,
    root: &Path,
    out_dir: &Path,
    variants: &[Variant],
    model: Option<&BweModel>,
) -> Result<BuildReport> {
    if variants.iter().any(Variant::needs_model) && model.is_none() {
        return Err(Error::InvalidParameter(
            "extended variants need an extension model".into(),
        ));
    }
    if manifest.source_rate != 16000
        && variants
            .iter()
            .any(|v| !matches!(v, Variant::Isdn | Variant::Orig))
    {
        return Err(Error::UnsupportedRate(manifest.source_rate, "16000"));
    }
    let model_digest = model
        .map(|m| Sha256::digest(m.to_bytes()).to_vec())
        .unwrap_or_default();
    let files: Vec<&PathBuf> = manifest.all_files().collect();
    let jobs: Vec<(Variant, &PathBuf)> = variants
        .iter()
        .flat_map(|&v| files.iter().map(move |&f| (v, f)))
        .collect();
    let outcomes: Vec<bool> = jobs
        .par_iter()
        .map(|&(variant, rel)| {
            let src = root.join(rel);
            if !src.exists() {
                return Err(Error::MissingFile(src));
            }
            let bytes = std::fs::read(&src).map_err(|e| Error::io(&src, e))?;
            let mut h = Sha256::new();
            h.update(&bytes);
            h.update(variant.label().as_bytes());
            if variant.needs_model() {
                h.update(&model_digest);
            }
            let stamp = hex(&h.finalize());
            let target = variant_root(out_dir, variant).join(rel);
            let stamp_file = stamp_path(&target);
            if target.exists() && std::fs::read_to_string(&stamp_file).ok().as_deref() == Some(stamp.as_str())
            {
                return Ok(false);
            }
            let audio = read_wav(&src, ChannelSelect::Left)?;
            if audio.sample_rate_hz() != manifest.source_rate {
                return Err(Error::UnsupportedRate(
                    audio.sample_rate_hz(),
                    "the manifest source rate",
                ));
            }
            let out = make_variants(&audio, variant, model)?;
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let report = write_wav(&out, &target)?;
            if report.clipped > 0 {
                log::warn!("{}: {} samples clipped", target.display(), report.clipped);
            }
            std::fs::write(&stamp_file, &stamp).map_err(|e| Error::io(&stamp_file, e))?;
            Ok(true)
        })
        .collect::<Result<_>>()?;

    for &v in variants {
        let dir = variant_root(out_dir, v);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut m = manifest.clone();
        m.source_rate = v.output_rate();
        if v == Variant::Orig {
            m.source_rate = manifest.source_rate;
        }
        m.save(dir.join(super::MANIFEST_FILE))?;
    }
    let written = outcomes.iter().filter(|w| **w).count();
    let report = BuildReport {
        written,
        skipped: outcomes.len() - written,
    };
    info!(
        "variants built: {} written, {} up to date",
        report.written, report.skipped
    );
    Ok(report)
}
