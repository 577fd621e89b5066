use super::{apply_filter, compute_stats, design_chebyshev2, moving_average, normalize, FilterDesign};
use crate::dataset::SubjectRecord;
use crate::error::{Error, Result};

pub const DEFAULT_MA_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOptions {
    /// Run moving average and Chebyshev II after normalization.
    pub filtered: bool,
    pub ma_window: usize,
    pub design: FilterDesign,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            filtered: true,
            ma_window: DEFAULT_MA_WINDOW,
            design: FilterDesign::default(),
        }
    }
}

/// Normalize to [-1, 1] with whole-recording stats, then (when `filtered`)
/// moving average, then the band-pass cascade.
pub fn preprocess_pipeline(record: &SubjectRecord, options: &PreprocessOptions) -> Result<SubjectRecord> {
    let stats = compute_stats(&record.ppg, format!("S{}", record.subject_id))?;
    let mut signal = normalize(&record.ppg, &stats).samples;
    if options.filtered {
        if options.design.sample_rate_hz != f64::from(record.ppg_rate_hz) {
            return Err(Error::InvalidDesign(format!(
                "filter designed for {} Hz but subject {} is sampled at {} Hz",
                options.design.sample_rate_hz, record.subject_id, record.ppg_rate_hz
            )));
        }
        signal = moving_average(&signal, options.ma_window)?;
        let cascade = design_chebyshev2(&options.design)?;
        signal = apply_filter(&cascade, &signal)?;
    }
    Ok(record.with_ppg(signal))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> SubjectRecord {
        let ppg: Vec<f64> = (0..640)
            .map(|n| {
                let t = n as f64 / 64.0;
                50.0 + 20.0 * (2.0 * std::f64::consts::PI * 1.2 * t).sin() + 3.0 * (n % 7) as f64
            })
            .collect();
        SubjectRecord::new(2, ppg, vec![1; 7000], 64, 700).unwrap()
    }

    #[test]
    fn unfiltered_is_plain_normalization() {
        let r = record();
        let opts = PreprocessOptions { filtered: false, ..Default::default() };
        let out = preprocess_pipeline(&r, &opts).unwrap();
        let stats = compute_stats(&r.ppg, "x").unwrap();
        assert_eq!(out.ppg, normalize(&r.ppg, &stats).samples);
        assert_eq!(out.labels, r.labels);
    }

    #[test]
    fn constant_signal_fails() {
        let r = SubjectRecord::new(2, vec![1.0; 64], vec![1; 700], 64, 700).unwrap();
        assert!(matches!(
            preprocess_pipeline(&r, &PreprocessOptions::default()),
            Err(Error::ConstantSignal(_))
        ));
    }

    #[test]
    fn stages_compose_in_order() {
        let r = record();
        let opts = PreprocessOptions::default();
        let out = preprocess_pipeline(&r, &opts).unwrap();
        let stats = compute_stats(&r.ppg, "x").unwrap();
        let manual = apply_filter(
            &design_chebyshev2(&opts.design).unwrap(),
            &moving_average(&normalize(&r.ppg, &stats).samples, opts.ma_window).unwrap(),
        )
        .unwrap();
        assert_eq!(out.ppg, manual);
        assert_eq!(out.ppg.len(), r.ppg.len());
    }

    #[test]
    fn rate_mismatch_rejected() {
        let r = record();
        let mut opts = PreprocessOptions::default();
        opts.design.sample_rate_hz = 128.0;
        assert!(preprocess_pipeline(&r, &opts).is_err());
    }
}
