//! 1D kernels shared by the forward and backward passes.

use crate::error::{Error, Result};

/// Sliding dot product without padding:
/// `out[n] = sum_m a[n + m] * b[m]`, length `len(a) - len(b) + 1`.
pub fn conv1d_valid(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if b.is_empty() || b.len() > a.len() {
        return Err(Error::Shape(format!(
            "valid convolution needs 1 <= kernel ({}) <= input ({})",
            b.len(),
            a.len()
        )));
    }
    let mut out = vec![0.0; a.len() - b.len() + 1];
    conv1d_valid_acc(a, b, &mut out);
    Ok(out)
}

/// Accumulates `conv1d_valid(a, b)` into `out`. Lengths must already agree.
pub(crate) fn conv1d_valid_acc(a: &[f64], b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len() + b.len(), a.len() + 1);
    for (n, o) in out.iter_mut().enumerate() {
        *o += a[n..n + b.len()].iter().zip(b).map(|(x, w)| x * w).sum::<f64>();
    }
}

/// Sliding dot product over `a` zero-padded by `len(b) - 1` on both sides;
/// length `len(a) + len(b) - 1`.
pub fn conv1d_full(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Shape("full convolution of an empty vector".into()));
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    conv1d_full_acc(a, b, &mut out);
    Ok(out)
}

/// Accumulates `conv1d_full(a, b)` into `out`.
pub(crate) fn conv1d_full_acc(a: &[f64], b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len() + 1, a.len() + b.len());
    let pad = b.len() - 1;
    for (j, o) in out.iter_mut().enumerate() {
        // a index = j + m - pad must lie in [0, len(a))
        let m_lo = pad.saturating_sub(j);
        let m_hi = (a.len() + pad - j).min(b.len());
        let mut acc = 0.0;
        for m in m_lo..m_hi {
            acc += a[j + m - pad] * b[m];
        }
        *o += acc;
    }
}

pub fn reverse(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

/// Non-overlapping mean pooling by `ss`; a trailing partial block is averaged
/// over its own length.
pub fn subsample(y: &[f64], ss: usize) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::Shape("subsample of an empty vector".into()));
    }
    if ss == 0 {
        return Err(Error::Shape("subsampling factor must be >= 1".into()));
    }
    Ok(y.chunks(ss).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect())
}

/// Adjoint of [`subsample`]: each pooled value is spread over its block and
/// divided by the block's actual length. `len` is the unpooled length.
pub fn upsample(pooled: &[f64], ss: usize, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (block, &d) in out.chunks_mut(ss).zip(pooled) {
        let share = d / block.len() as f64;
        block.iter_mut().for_each(|v| *v = share);
    }
    out
}
