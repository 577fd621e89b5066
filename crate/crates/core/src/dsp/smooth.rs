use crate::error::{Error, Result};

/// Centered moving average over an odd window `window`. Near the edges the
/// window shrinks to the samples that exist.
pub fn moving_average(signal: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "moving-average window must be odd and >= 1, got {window}"
        )));
    }
    if window > signal.len() {
        return Err(Error::InvalidArgument(format!(
            "moving-average window {window} exceeds signal length {}",
            signal.len()
        )));
    }
    let half = window / 2;
    let n = signal.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            signal[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}
