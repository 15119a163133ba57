use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Rectangular,
    /// Symmetric Hamming, `0.54 - 0.46 cos(2 pi n / (L - 1))`.
    Hamming,
    /// Periodic Hann; sums to one at 50% overlap.
    Hann,
    /// Square root of the periodic Hann window, for analysis/synthesis pairs.
    SqrtHann,
}

pub fn window(kind: WindowKind, len: usize) -> Vec<f64> {
    match kind {
        WindowKind::Rectangular => vec![1.0; len],
        WindowKind::Hamming => {
            if len == 1 {
                return vec![1.0];
            }
            let denom = (len - 1) as f64;
            (0..len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
                .collect()
        }
        WindowKind::Hann => (0..len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
            .collect(),
        WindowKind::SqrtHann => window(WindowKind::Hann, len).into_iter().map(f64::sqrt).collect(),
    }
}
