use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use sha2::{Digest, Sha256};
use spkbwe::audio::{read_wav, write_wav, ChannelSelect};
use spkbwe::synth::SyntheticSpeaker;
use spkbwe::AudioBuffer;

fn spkbwe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spkbwe"))
        .args(args)
        .env_remove("SPKBWE_CORPUS_ROOT")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn corpus(&self) -> PathBuf {
        self.dir.path().join("corpus")
    }
    fn voices(&self) -> PathBuf {
        self.dir.path().join("voices")
    }
    fn model(&self) -> PathBuf {
        self.dir.path().join("model.bwem")
    }
}

/// Small corpus, extension voices and a trained model, built through the CLI.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        let o = spkbwe(&[
            "synth-corpus",
            s(&f.corpus()),
            "--speakers",
            "4",
            "--train-secs",
            "20",
            "--test-files",
            "2",
            "--bwe-dir",
            s(&f.voices()),
            "--bwe-voices",
            "5",
            "--bwe-secs",
            "13",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = spkbwe(&[
            "bwe",
            "train",
            s(&f.voices()),
            s(&f.model()),
            "--mixtures",
            "4",
            "--max-iter",
            "20",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        f
    })
}

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

#[test]
fn version_is_machine_readable() {
    let o = spkbwe(&["--version"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap().trim(),
        format!("spkbwe {}", env!("CARGO_PKG_VERSION"))
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&spkbwe(&[])), 2);
    assert_eq!(
        code(&spkbwe(&["filter", "a.wav", "b.wav", "--variant", "pots"])),
        2
    );
    assert_eq!(
        code(&spkbwe(&[
            "filter",
            "a.wav",
            "b.wav",
            "--variant",
            "nb",
            "--bogus"
        ])),
        2
    );
    assert_eq!(
        code(&spkbwe(&[
            "experiment",
            "m.toml",
            "--param",
            "lpcc",
            "--p-list",
            "0,4",
            "--report-dir",
            "r"
        ])),
        2
    );
    assert_eq!(
        code(&spkbwe(&[
            "experiment",
            "m.toml",
            "--param",
            "plp",
            "--p-list",
            "4",
            "--report-dir",
            "r"
        ])),
        2
    );
    // a model-based variant without a model is a usage problem, not a runtime one
    assert_eq!(
        code(&spkbwe(&["filter", "a.wav", "b.wav", "--variant", "bwe"])),
        2
    );
}

#[test]
fn filter_runs_and_reports_missing_input() {
    let f = fixture();
    let out = f.dir.path().join("filtered");
    let src = f.corpus().join("spk00").join("test_0.wav");
    let nb = out.join("nb.wav");
    let o = spkbwe(&["filter", s(&src), s(&nb), "--variant", "nb"]);
    assert_eq!(code(&o), 0);
    let orig = read_wav(&src, ChannelSelect::Left).unwrap();
    let filtered = read_wav(&nb, ChannelSelect::Left).unwrap();
    assert_eq!((filtered.sample_rate_hz(), filtered.len()), (16000, orig.len()));

    let isdn = out.join("isdn.al");
    assert_eq!(
        code(&spkbwe(&["filter", s(&src), s(&isdn), "--variant", "isdn"])),
        0
    );
    assert_eq!(std::fs::metadata(&isdn).unwrap().len() as usize, orig.len() / 2);
    let back = out.join("isdn_bwe.wav");
    let o = spkbwe(&[
        "filter",
        s(&isdn),
        s(&back),
        "--variant",
        "isdn_bwe",
        "--model",
        s(&f.model()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_wav(&back, ChannelSelect::Left).unwrap().len(), orig.len());

    let o = spkbwe(&["filter", "/does/not/exist.wav", s(&nb), "--variant", "nb"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing file"));
}

#[test]
fn training_is_seeded_and_needs_a_minute() {
    let f = fixture();
    let again = f.dir.path().join("again.bwem");
    let o = spkbwe(&[
        "bwe",
        "train",
        s(&f.voices()),
        s(&again),
        "--mixtures",
        "4",
        "--max-iter",
        "20",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(digest(&again), digest(&f.model()));

    let other = f.dir.path().join("other.bwem");
    let o = spkbwe(&[
        "bwe",
        "train",
        s(&f.voices()),
        s(&other),
        "--mixtures",
        "4",
        "--max-iter",
        "20",
        "--seed",
        "9",
    ]);
    assert_eq!(code(&o), 0);
    assert_ne!(digest(&other), digest(&f.model()));

    let short = f.dir.path().join("short");
    std::fs::create_dir_all(&short).unwrap();
    write_wav(&SyntheticSpeaker::new(3).utterance(20.0), short.join("a.wav")).unwrap();
    let o = spkbwe(&[
        "bwe",
        "train",
        s(&short),
        s(&short.join("m.bwem")),
        "--mixtures",
        "2",
    ]);
    assert_eq!(code(&o), 1);
    assert!(!short.join("m.bwem").exists());
}

#[test]
fn corpus_root_comes_from_the_environment() {
    let f = fixture();
    let report = f.dir.path().join("env_report");
    let o = Command::new(env!("CARGO_BIN_EXE_spkbwe"))
        .args([
            "experiment",
            "--param",
            "lpcc",
            "--p-list",
            "6",
            "--variants",
            "orig",
        ])
        .args(["--report-dir", s(&report)])
        .env("SPKBWE_CORPUS_ROOT", f.corpus())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(report.join("lpcc.csv").exists());
}

#[test]
fn extend_contracts() {
    let f = fixture();
    let dir = f.dir.path().join("extend");
    std::fs::create_dir_all(&dir).unwrap();

    let silent = dir.join("silent.wav");
    write_wav(&AudioBuffer::silence(12_345, 8000), &silent).unwrap();
    let out = dir.join("silent_out.wav");
    assert_eq!(
        code(&spkbwe(&["bwe", "extend", s(&silent), s(&f.model()), s(&out)])),
        0
    );
    let y = read_wav(&out, ChannelSelect::Left).unwrap();
    assert_eq!((y.sample_rate_hz(), y.len()), (16000, 24_690));
    assert!(y.samples().iter().all(|v| *v == 0.0));

    let wide = f.corpus().join("spk01").join("test_1.wav");
    let o = spkbwe(&["bwe", "extend", s(&wide), s(&f.model()), s(&dir.join("x.wav"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sample rate"));

    let nb8 = dir.join("nb8.al");
    assert_eq!(
        code(&spkbwe(&["filter", s(&wide), s(&nb8), "--variant", "isdn"])),
        0
    );
    let ext = dir.join("ext.wav");
    assert_eq!(
        code(&spkbwe(&["bwe", "extend", s(&nb8), s(&f.model()), s(&ext)])),
        0
    );
    let input = read_wav(&wide, ChannelSelect::Left).unwrap();
    assert_eq!(
        read_wav(&ext, ChannelSelect::Left).unwrap().duration_secs(),
        input.duration_secs()
    );
}

#[test]
fn experiment_writes_reports_and_flags_invalid_cells() {
    let f = fixture();
    let report = f.dir.path().join("report");
    let o = spkbwe(&[
        "experiment",
        s(&f.corpus().join("manifest.toml")),
        "--param",
        "lpcc",
        "--p-list",
        "4-6,250",
        "--frame-ms",
        "30",
        "--variants",
        "orig,nb,bwe",
        "--bwe-model",
        s(&f.model()),
        "--report-dir",
        s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "lpcc.csv",
        "lpcc_table.txt",
        "lpcc.dat",
        "lpcc.gp",
        "lpcc_audit.csv",
    ] {
        assert!(report.join(name).exists(), "{name}");
    }
    let csv = std::fs::read_to_string(report.join("lpcc.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 3 * 4);
    let invalid: Vec<&&str> = lines.iter().filter(|l| l.ends_with(",invalid,0")).collect();
    assert_eq!(invalid.len(), 3);
    assert!(invalid.iter().all(|l| l.contains(",250,")));
    assert!(report.join("variants").join("bwe").join("manifest.toml").exists());

    let o = spkbwe(&[
        "experiment",
        s(&f.dir.path().join("no_such_manifest.toml")),
        "--param",
        "lpcc",
        "--p-list",
        "4",
        "--report-dir",
        s(&report),
    ]);
    assert_eq!(code(&o), 1);
}
