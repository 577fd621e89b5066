use crate::error::{Error, Result};

/// Min/max of a whole recording, used to map it onto [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub min: f64,
    pub max: f64,
    pub source: String,
}

/// Output of [`normalize`]: the mapped samples and how many fell outside [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub samples: Vec<f64>,
    pub out_of_range: usize,
}

pub fn compute_stats(signal: &[f64], source: impl Into<String>) -> Result<NormalizationStats> {
    if signal.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples for normalization stats, got {}",
            signal.len()
        )));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (i, &v) in signal.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        min = min.min(v);
        max = max.max(v);
    }
    if max <= min {
        return Err(Error::ConstantSignal(min));
    }
    Ok(NormalizationStats {
        min,
        max,
        source: source.into(),
    })
}

/// `x -> 2 (x - min) / (max - min) - 1`. Samples outside the stats range are
/// extrapolated linearly and counted.
pub fn normalize(signal: &[f64], stats: &NormalizationStats) -> Normalized {
    let span = stats.max - stats.min;
    let mut out_of_range = 0;
    let samples = signal
        .iter()
        .map(|&x| {
            if x < stats.min || x > stats.max {
                out_of_range += 1;
            }
            2.0 * (x - stats.min) / span - 1.0
        })
        .collect();
    Normalized { samples, out_of_range }
}

pub fn denormalize(signal: &[f64], stats: &NormalizationStats) -> Vec<f64> {
    let span = stats.max - stats.min;
    signal.iter().map(|&y| (y + 1.0) * 0.5 * span + stats.min).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        let s = compute_stats(&[0.0, 5.0, 10.0], "t").unwrap();
        assert_eq!((s.min, s.max), (0.0, 10.0));
        let n = normalize(&[0.0, 5.0, 10.0], &s);
        assert_eq!(n.samples, vec![-1.0, 0.0, 1.0]);
        assert_eq!(n.out_of_range, 0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(compute_stats(&[-3.0, -3.0], "t"), Err(Error::ConstantSignal(_))));
        assert!(compute_stats(&[1.0], "t").is_err());
        assert!(matches!(compute_stats(&[1.0, f64::NAN], "t"), Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn out_of_range_counted() {
        let s = compute_stats(&[0.0, 10.0], "t").unwrap();
        let n = normalize(&[-5.0, 20.0, 3.0], &s);
        assert_eq!(n.samples, vec![-2.0, 3.0, -0.4]);
        assert_eq!(n.out_of_range, 2);
    }

    proptest! {
        #[test]
        fn stats_match_linear_scan(v in proptest::collection::vec(-1e3f64..1e3, 1000)) {
            let s = compute_stats(&v, "p").unwrap();
            let mut lo = v[0];
            let mut hi = v[0];
            for &x in &v {
                lo = lo.min(x);
                hi = hi.max(x);
            }
            prop_assert_eq!((s.min, s.max), (lo, hi));
            let n = normalize(&v, &s);
            prop_assert!(n.samples.iter().all(|&y| (-1.0..=1.0).contains(&y)));
            prop_assert_eq!(n.out_of_range, 0);
        }

        #[test]
        fn inverse_round_trip(v in proptest::collection::vec(-1.0f64..1.0, 2..200)) {
            prop_assume!(v.iter().any(|&x| x != v[0]));
            let s = compute_stats(&v, "p").unwrap();
            let back = denormalize(&normalize(&v, &s).samples, &s);
            for (a, b) in v.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn shift_invariance(v in proptest::collection::vec(-10.0f64..10.0, 2..100), c in -100.0f64..100.0) {
            prop_assume!(v.iter().any(|&x| x != v[0]));
            let s = compute_stats(&v, "p").unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let ss = compute_stats(&shifted, "p").unwrap();
            let a = normalize(&v, &s).samples;
            let b = normalize(&shifted, &ss).samples;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
