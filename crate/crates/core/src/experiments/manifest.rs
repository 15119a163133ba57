use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::wav_info;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Corpus description: speakers with their training and test files, paths
/// relative to the corpus root (the directory holding the manifest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub source_rate: u32,
    pub speakers: Vec<SpeakerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerEntry {
    pub id: String,
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
}

/// Expected session lengths, checked with a relative tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationLimits {
    pub train_total_secs: f64,
    pub test_utterance_secs: f64,
    pub tolerance: f64,
}

impl Default for DurationLimits {
    fn default() -> Self {
        Self {
            train_total_secs: 60.0,
            test_utterance_secs: 2.0,
            tolerance: 0.2,
        }
    }
}

impl DurationLimits {
    fn check(&self, what: &str, got: f64, want: f64) -> Result<()> {
        if (got - want).abs() > self.tolerance * want {
            return Err(Error::Manifest(format!(
                "{what} lasts {got:.2} s, expected {want:.1} s ± {:.0}%",
                self.tolerance * 100.0
            )));
        }
        Ok(())
    }
}

impl CorpusManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields always serialize")
    }

    /// Reads a manifest file; returns it with the corpus root.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text)?, root))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    /// Structural checks that need no audio.
    pub fn validate(&self) -> Result<()> {
        if self.source_rate != 8000 && self.source_rate != 16000 {
            return Err(Error::Manifest(format!(
                "source rate {} Hz is not 8000 or 16000",
                self.source_rate
            )));
        }
        if self.speakers.len() < 2 {
            return Err(Error::Manifest(
                "closed-set identification needs at least two speakers".into(),
            ));
        }
        let mut ids = HashSet::new();
        let mut train = HashSet::new();
        let mut test = HashSet::new();
        for s in &self.speakers {
            if s.id.is_empty() || !ids.insert(s.id.as_str()) {
                return Err(Error::Manifest(format!(
                    "empty or duplicate speaker id '{}'",
                    s.id
                )));
            }
            if s.train.is_empty() || s.test.is_empty() {
                return Err(Error::Manifest(format!(
                    "speaker '{}' lacks training or test files",
                    s.id
                )));
            }
            for f in &s.train {
                if !train.insert(f) {
                    return Err(Error::Manifest(format!(
                        "{} is listed twice for training",
                        f.display()
                    )));
                }
            }
            for f in &s.test {
                if !test.insert(f) {
                    return Err(Error::Manifest(format!(
                        "{} is listed twice for testing",
                        f.display()
                    )));
                }
            }
        }
        if let Some(f) = train.intersection(&test).next() {
            return Err(Error::Manifest(format!(
                "{} is used for both training and testing",
                f.display()
            )));
        }
        Ok(())
    }

    /// Checks every file exists at the source rate and session lengths are within limits.
    pub fn validate_audio(&self, root: &Path, limits: &DurationLimits) -> Result<()> {
        for s in &self.speakers {
            let mut total = 0.0;
            for f in &s.train {
                total += self.file_secs(root, f)?;
            }
            limits.check(
                &format!("training set of '{}'", s.id),
                total,
                limits.train_total_secs,
            )?;
            for f in &s.test {
                let secs = self.file_secs(root, f)?;
                limits.check(
                    &format!("test file {}", f.display()),
                    secs,
                    limits.test_utterance_secs,
                )?;
            }
        }
        Ok(())
    }

    fn file_secs(&self, root: &Path, rel: &Path) -> Result<f64> {
        let (rate, secs) = wav_info(root.join(rel))?;
        if rate != self.source_rate {
            return Err(Error::UnsupportedRate(rate, "the manifest source rate"));
        }
        Ok(secs)
    }

    pub fn all_files(&self) -> impl Iterator<Item = &PathBuf> {
        self.speakers.iter().flat_map(|s| s.train.iter().chain(&s.test))
    }

    pub fn test_count(&self) -> usize {
        self.speakers.iter().map(|s| s.test.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
source_rate = 16000

[[speakers]]
id = "a"
train = ["a/train.wav"]
test = ["a/t0.wav", "a/t1.wav"]

[[speakers]]
id = "b"
train = ["b/train.wav"]
test = ["b/t0.wav"]
"#;

    #[test]
    fn parses_and_round_trips() {
        let m = CorpusManifest::parse(TEXT).unwrap();
        assert_eq!(m.speakers.len(), 2);
        assert_eq!(m.test_count(), 3);
        assert_eq!(m.all_files().count(), 5);
        assert_eq!(CorpusManifest::parse(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn structural_errors() {
        let one = TEXT
            .split("[[speakers]]")
            .take(2)
            .collect::<Vec<_>>()
            .join("[[speakers]]");
        assert!(matches!(CorpusManifest::parse(&one), Err(Error::Manifest(_))));
        let shared = TEXT.replace("b/t0.wav", "a/train.wav");
        assert!(matches!(CorpusManifest::parse(&shared), Err(Error::Manifest(_))));
        let dup = TEXT.replace("id = \"b\"", "id = \"a\"");
        assert!(matches!(CorpusManifest::parse(&dup), Err(Error::Manifest(_))));
        let rate = TEXT.replace("16000", "44100");
        assert!(matches!(CorpusManifest::parse(&rate), Err(Error::Manifest(_))));
        assert!(matches!(
            CorpusManifest::parse("speakers = 3"),
            Err(Error::Manifest(_))
        ));
    }

    #[test]
    fn duration_limits() {
        let l = DurationLimits::default();
        assert!(l.check("x", 59.0, 60.0).is_ok());
        assert!(l.check("x", 72.0, 60.0).is_ok());
        assert!(l.check("x", 73.0, 60.0).is_err());
        assert!(l.check("x", 1.5, 2.0).is_err());
    }
}
