use super::window::{window, WindowKind};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// First-order pre-emphasis `y[n] = x[n] - alpha * x[n - 1]` with `x[-1] = 0`.
pub fn preemphasize(buffer: &AudioBuffer, alpha: f64) -> Result<AudioBuffer> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "pre-emphasis coefficient {alpha} outside [0, 1)"
        )));
    }
    let x = buffer.samples();
    let mut y = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for &s in x {
        y.push(s - alpha * prev);
        prev = s;
    }
    Ok(buffer.with_samples(y))
}

/// Fraction of a frame shared with its successor, as `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlap {
    pub num: u32,
    pub den: u32,
}

impl Overlap {
    pub const TWO_THIRDS: Overlap = Overlap { num: 2, den: 3 };
    pub const HALF: Overlap = Overlap { num: 1, den: 2 };
    pub const NONE: Overlap = Overlap { num: 0, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num >= den {
            return Err(Error::InvalidParameter(format!(
                "overlap {num}/{den} not in [0, 1)"
            )));
        }
        Ok(Self { num, den })
    }

    /// Hop for a frame of `frame_len` samples; the hop must be a whole number of samples.
    pub fn hop(&self, frame_len: usize) -> Result<usize> {
        let keep = (self.den - self.num) as usize;
        let den = self.den as usize;
        if (frame_len * keep) % den != 0 {
            return Err(Error::InvalidParameter(format!(
                "frame of {frame_len} samples with overlap {}/{} gives a fractional hop",
                self.num, self.den
            )));
        }
        Ok(frame_len * keep / den)
    }
}

/// Windowed, overlapping frames of one signal.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    data: Vec<f64>,
    frame_len: usize,
    pub hop: usize,
    pub window: WindowKind,
    pub sample_rate_hz: u32,
}

impl FrameSequence {
    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn frame_count(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.frame_len)
    }
}

/// Number of frames `floor((n - frame_len) / hop) + 1`, or zero for a short signal.
pub fn frame_start_count(n: usize, frame_len: usize, hop: usize) -> usize {
    if n < frame_len || hop == 0 {
        0
    } else {
        (n - frame_len) / hop + 1
    }
}

/// Frame length in samples for a duration, which must be a whole number of samples.
pub(crate) fn frame_len_for(sample_rate_hz: u32, frame_ms: f64) -> Result<usize> {
    let exact = f64::from(sample_rate_hz) * frame_ms / 1000.0;
    let len = exact.round();
    if !(frame_ms > 0.0) || (exact - len).abs() > 1e-9 || len < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "{frame_ms} ms is not a whole number of samples at {sample_rate_hz} Hz"
        )));
    }
    Ok(len as usize)
}

pub fn frame_signal(
    buffer: &AudioBuffer,
    frame_ms: f64,
    overlap: Overlap,
    window_kind: WindowKind,
) -> Result<FrameSequence> {
    let frame_len = frame_len_for(buffer.sample_rate_hz(), frame_ms)?;
    let hop = overlap.hop(frame_len)?;
    frame_samples(buffer, frame_len, hop, window_kind)
}

pub(crate) fn frame_samples(
    buffer: &AudioBuffer,
    frame_len: usize,
    hop: usize,
    window_kind: WindowKind,
) -> Result<FrameSequence> {
    let x = buffer.samples();
    if x.len() < frame_len {
        return Err(Error::TooShort(format!(
            "{} samples is shorter than one {frame_len}-sample frame",
            x.len()
        )));
    }
    let count = frame_start_count(x.len(), frame_len, hop);
    let w = window(window_kind, frame_len);
    let mut data = Vec::with_capacity(count * frame_len);
    for t in 0..count {
        let start = t * hop;
        data.extend(x[start..start + frame_len].iter().zip(&w).map(|(s, w)| s * w));
    }
    Ok(FrameSequence {
        data,
        frame_len,
        hop,
        window: window_kind,
        sample_rate_hz: buffer.sample_rate_hz(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buf(x: Vec<f64>, fs: u32) -> AudioBuffer {
        AudioBuffer::new(x, fs).unwrap()
    }

    #[test]
    fn preemphasis_examples() {
        let x = buf(vec![0.3, -0.2, 0.9, 0.1], 8000);
        assert_eq!(preemphasize(&x, 0.0).unwrap(), x);

        let mut imp = vec![0.0; 5];
        imp[0] = 1.0;
        let y = preemphasize(&buf(imp, 8000), 0.95).unwrap();
        assert_eq!(y.samples(), &[1.0, -0.95, 0.0, 0.0, 0.0]);

        let y = preemphasize(&buf(vec![1.0; 50], 8000), 0.95).unwrap();
        assert!((y.samples()[49] - 0.05).abs() < 1e-12);

        assert!(preemphasize(&x, 1.0).is_err());
        assert!(preemphasize(&x, -0.1).is_err());
    }

    #[test]
    fn paper_frame_sizes() {
        let b8 = AudioBuffer::silence(8000, 8000);
        let f = frame_signal(&b8, 30.0, Overlap::TWO_THIRDS, WindowKind::Hamming).unwrap();
        assert_eq!((f.frame_len(), f.hop), (240, 80));

        let b16 = AudioBuffer::silence(16000, 16000);
        let f30 = frame_signal(&b16, 30.0, Overlap::TWO_THIRDS, WindowKind::Hamming).unwrap();
        assert_eq!((f30.frame_len(), f30.hop), (480, 160));

        let f15 = frame_signal(&b16, 15.0, Overlap::TWO_THIRDS, WindowKind::Hamming).unwrap();
        assert_eq!(f15.frame_len(), 240);
        let ratio = f15.frame_count() as f64 / f30.frame_count() as f64;
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn too_short_and_fractional() {
        let b = AudioBuffer::silence(100, 8000);
        assert!(matches!(
            frame_signal(&b, 30.0, Overlap::TWO_THIRDS, WindowKind::Hamming),
            Err(Error::TooShort(_))
        ));
        let b = AudioBuffer::silence(1000, 8000);
        // 32 ms = 256 samples, 256 / 3 is not whole
        assert!(frame_signal(&b, 32.0, Overlap::TWO_THIRDS, WindowKind::Hamming).is_err());
        assert!(frame_signal(&b, 0.1, Overlap::HALF, WindowKind::Hamming).is_err());
    }

    #[test]
    fn frames_are_windowed_copies() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = buf(x.clone(), 8000);
        let f = frame_signal(&b, 30.0, Overlap::TWO_THIRDS, WindowKind::Hamming).unwrap();
        let w = window(WindowKind::Hamming, 240);
        let fr = f.frame(3);
        for n in 0..240 {
            assert_eq!(fr[n], x[240 + n] * w[n]);
        }
    }

    proptest! {
        #[test]
        fn frame_count_formula(n in 480usize..20000, ms_idx in 0usize..3, ov_idx in 0usize..3, wide in any::<bool>()) {
            let fs = if wide { 16000 } else { 8000 };
            let ms = [15.0, 30.0, 60.0][ms_idx];
            let overlap = [Overlap::TWO_THIRDS, Overlap::HALF, Overlap::NONE][ov_idx];
            let b = AudioBuffer::silence(n, fs);
            let len = fs as usize * ms as usize / 1000;
            match frame_signal(&b, ms, overlap, WindowKind::Rectangular) {
                Ok(f) => {
                    let hop = len * (overlap.den - overlap.num) as usize / overlap.den as usize;
                    prop_assert_eq!(f.hop, hop);
                    prop_assert_eq!(f.frame_count(), (n - len) / hop + 1);
                }
                Err(_) => prop_assert!(n < len),
            }
        }
    }
}
