/// Shortest and longest pitch lags searched, in seconds (400 Hz down to 62.5 Hz).
const MIN_LAG_S: f64 = 0.0025;
const MAX_LAG_S: f64 = 0.016;

/// Degree of voicing: the peak normalized autocorrelation over pitch lags,
/// clamped to [0, 1]. All-zero frames give 0.
pub fn voicing_degree(frame: &[f64], fs: u32) -> f64 {
    let fs = f64::from(fs);
    let min_lag = (MIN_LAG_S * fs).ceil() as usize;
    let max_lag = ((MAX_LAG_S * fs).floor() as usize).min(frame.len().saturating_sub(2));
    let mut best = 0.0f64;
    for lag in min_lag..=max_lag {
        let (head, tail) = (&frame[..frame.len() - lag], &frame[lag..]);
        let mut xy = 0.0;
        let mut xx = 0.0;
        let mut yy = 0.0;
        for (a, b) in head.iter().zip(tail) {
            xy += a * b;
            xx += a * a;
            yy += b * b;
        }
        let denom = (xx * yy).sqrt();
        if denom > 0.0 {
            best = best.max(xy / denom);
        }
    }
    best.clamp(0.0, 1.0)
}
