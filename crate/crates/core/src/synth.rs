//! Source-filter speech synthesizer for self-contained corpora.
//!
//! Each voice has its own pitch range, vocal-tract length, glottal tilt,
//! formant bandwidths, high-frequency resonances and fricative colouring.
//! Utterances are random phone strings (vowels, fricatives, pauses) rendered
//! through a cascade of second-order resonators at 16 kHz.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::audio::AudioBuffer;

pub const SYNTH_RATE_HZ: u32 = 16000;

/// Reference vowel formants F1..F3 in Hz for an average adult tract.
const VOWELS: [[f64; 3]; 8] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [660.0, 1720.0, 2410.0],
    [570.0, 840.0, 2410.0],
    [440.0, 1020.0, 2240.0],
    [490.0, 1350.0, 1690.0],
];

#[derive(Debug, Clone, PartialEq)]
pub struct VoiceProfile {
    pub f0_hz: f64,
    /// Relative pitch excursion per phone.
    pub f0_spread: f64,
    /// Formant frequency multiplier (short tract > 1).
    pub tract_scale: f64,
    /// Glottal source one-pole low-pass coefficient.
    pub tilt: f64,
    pub bandwidth_scale: f64,
    /// Fixed higher resonances above the vowel formants: (Hz, bandwidth Hz).
    pub upper_formants: [(f64, f64); 3],
    /// Fricative noise resonances: (Hz, bandwidth Hz, linear gain).
    pub fricatives: [(f64, f64, f64); 2],
    pub aspiration: f64,
}

impl VoiceProfile {
    pub fn random(rng: &mut impl Rng) -> Self {
        let female = rng.gen_bool(0.5);
        let f0_hz = if female {
            rng.gen_range(170.0..250.0)
        } else {
            rng.gen_range(90.0..145.0)
        };
        let tract_scale = if female {
            rng.gen_range(1.05..1.2)
        } else {
            rng.gen_range(0.88..1.03)
        };
        let f4 = rng.gen_range(3300.0..4000.0) * tract_scale;
        let f5 = rng.gen_range(4300.0..5200.0) * tract_scale;
        let f6 = rng.gen_range(5600.0..7200.0);
        Self {
            f0_hz,
            f0_spread: rng.gen_range(0.05..0.15),
            tract_scale,
            tilt: rng.gen_range(0.6..0.9),
            bandwidth_scale: rng.gen_range(0.7..1.5),
            upper_formants: [
                (f4, rng.gen_range(150.0..350.0)),
                (f5.min(7000.0), rng.gen_range(200.0..500.0)),
                (f6, rng.gen_range(300.0..800.0)),
            ],
            fricatives: [
                (
                    rng.gen_range(2500.0..3800.0),
                    rng.gen_range(400.0..900.0),
                    rng.gen_range(0.1..0.3),
                ),
                (
                    rng.gen_range(4500.0..7000.0),
                    rng.gen_range(600.0..1500.0),
                    rng.gen_range(0.2..0.5),
                ),
            ],
            aspiration: rng.gen_range(0.01..0.06),
        }
    }
}

/// Two-pole resonator with unity gain at DC.
#[derive(Debug, Clone, Copy)]
struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let mut r = Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            y1: 0.0,
            y2: 0.0,
        };
        r.tune(freq, bw, fs);
        r
    }

    fn tune(&mut self, freq: f64, bw: f64, fs: f64) {
        let freq = freq.min(0.48 * fs);
        let radius = (-std::f64::consts::PI * bw / fs).exp();
        self.b = 2.0 * radius * (2.0 * std::f64::consts::PI * freq / fs).cos();
        self.c = -radius * radius;
        self.a = 1.0 - self.b - self.c;
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

#[derive(Debug, Clone, Copy)]
enum Phone {
    Vowel(usize),
    Fricative(usize),
    Pause,
}

/// Renders `duration_s` seconds of babble in the given voice, normalized to
/// an RMS of 0.1.
pub fn synthesize(profile: &VoiceProfile, duration_s: f64, rng: &mut impl Rng) -> AudioBuffer {
    let fs = f64::from(SYNTH_RATE_HZ);
    let n = (duration_s * fs).round() as usize;
    let mut out = Vec::with_capacity(n);

    let mut tract: Vec<Resonator> = (0..6).map(|_| Resonator::new(1000.0, 100.0, fs)).collect();
    let mut fric: Vec<Resonator> = profile
        .fricatives
        .iter()
        .map(|&(f, bw, _)| Resonator::new(f, bw, fs))
        .collect();
    let mut phase = 0.0f64;
    let mut glottal_lp = 0.0;
    let mut prev_sample = 0.0;
    let pitch_jitter = Normal::new(0.0, 0.01).unwrap();

    while out.len() < n {
        let phone = match rng.gen_range(0..10) {
            0..=5 => Phone::Vowel(rng.gen_range(0..VOWELS.len())),
            6..=8 => Phone::Fricative(rng.gen_range(0..2)),
            _ => Phone::Pause,
        };
        let len = match phone {
            Phone::Vowel(_) => rng.gen_range(0.08..0.22),
            Phone::Fricative(_) => rng.gen_range(0.06..0.14),
            Phone::Pause => rng.gen_range(0.04..0.15),
        };
        let len = ((len * fs) as usize).min(n - out.len()).max(1);
        let f0 = profile.f0_hz * (1.0 + profile.f0_spread * rng.gen_range(-1.0..1.0));
        let f0_end = f0 * (1.0 + 0.5 * profile.f0_spread * rng.gen_range(-1.0..1.0));
        let level: f64 = rng.gen_range(0.5..1.0);

        if let Phone::Vowel(v) = phone {
            for (k, r) in tract.iter_mut().enumerate().take(3) {
                let f = VOWELS[v][k] * profile.tract_scale * (1.0 + 0.04 * rng.gen_range(-1.0..1.0));
                let bw = (50.0 + 0.06 * f) * profile.bandwidth_scale;
                r.tune(f, bw, fs);
            }
            for (r, &(f, bw)) in tract[3..].iter_mut().zip(&profile.upper_formants) {
                r.tune(f, bw, fs);
            }
        }
        let ramp = (0.01 * fs) as usize;
        for i in 0..len {
            let env = {
                let up = (i as f64 / ramp as f64).min(1.0);
                let down = ((len - i) as f64 / ramp as f64).min(1.0);
                level * up.min(down)
            };
            let noise: f64 = StandardNormal.sample(rng);
            let s = match phone {
                Phone::Vowel(_) => {
                    let t = i as f64 / len as f64;
                    let f_inst = (f0 + (f0_end - f0) * t) * (1.0 + pitch_jitter.sample(rng));
                    phase += f_inst / fs;
                    let mut pulse = 0.0;
                    if phase >= 1.0 {
                        phase -= 1.0;
                        pulse = 1.0;
                    }
                    glottal_lp = profile.tilt * glottal_lp + (1.0 - profile.tilt) * pulse;
                    let source = glottal_lp + profile.aspiration * noise;
                    let mut y = source;
                    for r in tract.iter_mut() {
                        y = r.tick(y);
                    }
                    // radiation: first difference
                    let rad = y - prev_sample;
                    prev_sample = y;
                    rad * 40.0
                }
                Phone::Fricative(which) => {
                    let (_, _, g) = profile.fricatives[which];
                    let other = 1 - which;
                    let main = fric[which].tick(noise);
                    let side = fric[other].tick(noise);
                    // resonator outputs are DC-normalized, so difference them toward band-pass
                    let y = main - fric[which].y2 + 0.3 * (side - fric[other].y2);
                    y * g * 0.5
                }
                Phone::Pause => 0.0,
            };
            out.push(env * s + 1e-4 * noise);
        }
    }
    out.truncate(n);
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v *= 0.1 / rms);
    }
    AudioBuffer::from_parts(out, SYNTH_RATE_HZ)
}

/// Voice and utterances for a deterministic stream.
#[derive(Debug, Clone)]
pub struct SyntheticSpeaker {
    pub profile: VoiceProfile,
    rng: ChaCha8Rng,
}

impl SyntheticSpeaker {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = VoiceProfile::random(&mut rng);
        Self { profile, rng }
    }

    pub fn utterance(&mut self, duration_s: f64) -> AudioBuffer {
        synthesize(&self.profile, duration_s, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::band_energy_ratio;
    use crate::spectrum;

    #[test]
    fn deterministic_and_normalized() {
        let a = SyntheticSpeaker::new(3).utterance(1.0);
        let b = SyntheticSpeaker::new(3).utterance(1.0);
        assert_eq!(a, b);
        assert_eq!(a.len(), 16000);
        assert!((a.rms() - 0.1).abs() < 1e-9);
        assert_ne!(a, SyntheticSpeaker::new(4).utterance(1.0));
    }

    #[test]
    fn wideband_with_speech_like_tilt() {
        let x = SyntheticSpeaker::new(11).utterance(3.0);
        let ratio = band_energy_ratio(x.samples(), 16000).unwrap();
        assert!(ratio < 0.0 && ratio > -40.0, "ratio {ratio}");
        let p = spectrum::power_spectrum(x.samples(), 65536);
        let band = |lo: f64, hi: f64| -> f64 {
            p.iter()
                .enumerate()
                .filter(|(k, _)| {
                    let f = spectrum::bin_hz(*k, 65536, 16000.0);
                    f >= lo && f < hi
                })
                .map(|(_, v)| v)
                .sum()
        };
        assert!(band(0.0, 300.0) < band(300.0, 1000.0));
        assert!(band(4000.0, 8000.0) > 1e-4 * band(300.0, 3400.0));
    }
}
