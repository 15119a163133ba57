use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spkbwe::bwe::{
    bwe_extend, bwe_extend_traced, bwe_train, make_variants, BweFeatureConfig, BweModel, BweTrainConfig,
    Variant,
};
use spkbwe::density::EmConfig;
use spkbwe::dsp;
use spkbwe::spectrum;
use spkbwe::synth::SyntheticSpeaker;
use spkbwe::{AudioBuffer, Error};

fn train_config(mixtures: usize) -> BweTrainConfig {
    BweTrainConfig {
        mixtures,
        em: EmConfig {
            max_iter: 40,
            ..EmConfig::default()
        },
        ..BweTrainConfig::default()
    }
}

fn speech_corpus(seed: u64) -> Vec<AudioBuffer> {
    (0..5)
        .map(|s| SyntheticSpeaker::new(seed + s).utterance(12.5))
        .collect()
}

fn model() -> &'static BweModel {
    static MODEL: OnceLock<BweModel> = OnceLock::new();
    MODEL.get_or_init(|| bwe_train(&speech_corpus(500), &train_config(8)).unwrap())
}

fn telephone(x: &AudioBuffer) -> AudioBuffer {
    dsp::downsample_2x(&dsp::potsband_filter(x).unwrap()).unwrap()
}

fn band_power(x: &[f64], lo: f64, hi: f64) -> f64 {
    let n = x.len().next_power_of_two();
    spectrum::power_spectrum(x, n)
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = spectrum::bin_hz(*k, n, 16000.0);
            f >= lo && f < hi
        })
        .map(|(_, p)| p)
        .sum()
}

#[test]
fn model_dimension_and_file_round_trip() {
    let m = model();
    assert_eq!(m.joint().dim(), 25);
    assert_eq!(m.split().x_dims().len(), 16);
    assert_eq!(m.split().y_dims().len(), 9);
    let bytes = m.to_bytes();
    assert_eq!(&bytes[..4], b"BWEM");
    let back = BweModel::from_bytes(&bytes).unwrap();
    assert_eq!(&back, m);
    assert_eq!(back.features(), &BweFeatureConfig::default());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bwem");
    m.save(&path).unwrap();
    assert_eq!(BweModel::load(&path).unwrap().to_bytes(), bytes);

    let mut corrupt = bytes.clone();
    let last = corrupt.len() - 40;
    corrupt[last] ^= 1;
    assert!(BweModel::from_bytes(&corrupt).is_err());
    assert!(BweModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(matches!(
        BweModel::load(dir.path().join("absent.bwem")),
        Err(Error::MissingFile(_))
    ));
}

#[test]
fn config_mismatch_is_rejected() {
    let mut cfg = BweFeatureConfig::default();
    cfg.envelope.n_ceps = 6;
    assert!(matches!(
        BweModel::new(model().joint().clone(), cfg),
        Err(Error::BadModel(_))
    ));
}

#[test]
fn training_is_deterministic() {
    let corpus = speech_corpus(900);
    let a = bwe_train(&corpus, &train_config(4)).unwrap();
    let b = bwe_train(&corpus, &train_config(4)).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn training_preconditions() {
    let short: Vec<AudioBuffer> = (0..3).map(|s| SyntheticSpeaker::new(s).utterance(10.0)).collect();
    assert!(matches!(
        bwe_train(&short, &train_config(4)),
        Err(Error::InsufficientData(_))
    ));
    let silent = vec![AudioBuffer::silence(16000 * 61, 16000)];
    assert!(matches!(
        bwe_train(&silent, &train_config(4)),
        Err(Error::InsufficientData(_))
    ));
    let narrow = vec![AudioBuffer::silence(8000 * 61, 8000)];
    assert!(matches!(
        bwe_train(&narrow, &train_config(4)),
        Err(Error::UnsupportedRate(8000, _))
    ));
}

#[test]
fn white_noise_ratio_matches_band_widths() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut noise = |secs: f64| {
        let n = (secs * 16000.0) as usize;
        AudioBuffer::new((0..n).map(|_| rng.gen_range(-0.3..0.3)).collect(), 16000).unwrap()
    };
    let corpus = vec![noise(61.0)];
    let m = bwe_train(&corpus, &train_config(4)).unwrap();

    // Hann-windowed white noise has the same expected power in every bin,
    // so the expected ratio is the ratio of bin counts in the two bands.
    let (mut narrow_bins, mut high_bins) = (0usize, 0usize);
    for k in 0..=256 {
        let f = k as f64 * 16000.0 / 512.0;
        if (300.0..3400.0).contains(&f) {
            narrow_bins += 1;
        } else if (3400.0..=8000.0).contains(&f) {
            high_bins += 1;
        }
    }
    let analytic = 10.0 * (high_bins as f64 / narrow_bins as f64).log10();

    let test = telephone(&noise(2.0));
    let analyzer_frames: Vec<&[f64]> = test.samples().chunks_exact(256).collect();
    let mut sum = 0.0;
    for f in &analyzer_frames {
        let nb = spkbwe::bwe::narrowband_feature(m.features(), f).unwrap();
        sum += m.ratio_posterior_mean(&nb).unwrap();
    }
    let mean = sum / analyzer_frames.len() as f64;
    assert!(
        (mean - analytic).abs() < 2.0,
        "posterior mean {mean:.2} dB vs {analytic:.2} dB"
    );
}

#[test]
fn silence_stays_silent() {
    let x = AudioBuffer::silence(8000, 8000);
    let y = bwe_extend(&x, model()).unwrap();
    assert_eq!(y.sample_rate_hz(), 16000);
    assert_eq!(y.len(), 16000);
    assert!(y.samples().iter().all(|v| *v == 0.0));
}

#[test]
fn extension_contracts() {
    let orig = SyntheticSpeaker::new(77).utterance(4.0);
    let nb = telephone(&orig);
    let (y, trace) = bwe_extend_traced(&nb, model()).unwrap();
    assert_eq!(y.len(), 2 * nb.len());
    assert_eq!(bwe_extend(&nb, model()).unwrap(), y);

    let up = dsp::upsample_2x(&nb).unwrap();
    let mut fc = 400.0f64;
    let half = 2f64.powf(1.0 / 6.0);
    while fc * half <= 3000.0 {
        let a = band_power(y.samples(), fc / half, fc * half);
        let b = band_power(up.samples(), fc / half, fc * half);
        assert!((10.0 * (a / b).log10()).abs() < 1.0, "band at {fc:.0} Hz");
        fc *= half * half;
    }
    assert!(y.rms() <= 2.0 * nb.rms());
    assert!(band_power(y.samples(), 4000.0, 8000.0) > 10.0 * band_power(up.samples(), 4000.0, 8000.0));

    let active: Vec<_> = trace.iter().filter(|t| t.active).collect();
    assert!(active.len() > trace.len() / 2);
    for t in active {
        let hit = (t.achieved_db - t.estimate_db).abs() < 1e-6;
        let unreachable = t.base_db >= t.estimate_db && t.achieved_db == t.base_db;
        assert!(hit || unreachable, "{t:?}");
    }
}

#[test]
fn extension_rejects_wideband_input() {
    let x = AudioBuffer::silence(1600, 16000);
    assert!(matches!(
        bwe_extend(&x, model()),
        Err(Error::UnsupportedRate(16000, _))
    ));
}

#[test]
fn variants() {
    let orig = SyntheticSpeaker::new(31).utterance(2.0);
    assert_eq!(make_variants(&orig, Variant::Orig, None).unwrap(), orig);

    let probe = AudioBuffer::new(
        (0..32000)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 5000.0 * i as f64 / 16000.0).sin())
            .collect(),
        16000,
    )
    .unwrap();
    let nb = make_variants(&probe, Variant::Nb, None).unwrap();
    assert_eq!(nb.sample_rate_hz(), 16000);
    let mid = 8000..24000;
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let atten = 20.0 * (rms(&nb.samples()[mid.clone()]) / rms(&probe.samples()[mid])).log10();
    assert!(atten <= -30.0, "{atten:.1} dB");

    let speech_nb = make_variants(&orig, Variant::Nb, None).unwrap();
    let outside =
        band_power(speech_nb.samples(), 4000.0, 8000.0) + band_power(speech_nb.samples(), 0.0, 100.0);
    let outside_orig = band_power(orig.samples(), 4000.0, 8000.0) + band_power(orig.samples(), 0.0, 100.0);
    assert!(10.0 * (outside / outside_orig).log10() <= -30.0);

    let bwe = make_variants(&orig, Variant::Bwe, Some(model())).unwrap();
    assert_eq!(bwe.sample_rate_hz(), 16000);
    assert_eq!(bwe.len(), orig.len());
    let isdn = make_variants(&orig, Variant::Isdn, None).unwrap();
    assert_eq!(isdn.sample_rate_hz(), 8000);
    let isdn_bwe = make_variants(&orig, Variant::IsdnBwe, Some(model())).unwrap();
    assert_eq!(isdn_bwe.sample_rate_hz(), 16000);
    assert!(make_variants(&orig, Variant::Bwe, None).is_err());
    let eight = AudioBuffer::silence(800, 8000);
    assert!(matches!(
        make_variants(&eight, Variant::Nb, None),
        Err(Error::UnsupportedRate(8000, _))
    ));

    for v in Variant::ALL {
        assert_eq!(v.label().parse::<Variant>().unwrap(), v);
    }
    assert!("wideband".parse::<Variant>().is_err());
}
