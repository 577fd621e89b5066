use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_PPG_RATE_HZ: u32 = 64;
pub const DEFAULT_LABEL_RATE_HZ: u32 = 700;

/// Largest raw label value in the condition vocabulary
/// (0 transient, 1 baseline, 2 stress, 3 amusement, 4 meditation).
pub const MAX_RAW_LABEL: u8 = 4;

/// One subject's wrist PPG stream and condition label stream at native rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: u32,
    pub ppg: Vec<f64>,
    pub labels: Vec<u8>,
    pub ppg_rate_hz: u32,
    pub label_rate_hz: u32,
}

impl SubjectRecord {
    /// Builds a record and checks its invariants.
    pub fn new(
        subject_id: u32,
        ppg: Vec<f64>,
        labels: Vec<u8>,
        ppg_rate_hz: u32,
        label_rate_hz: u32,
    ) -> Result<Self> {
        let record = SubjectRecord {
            subject_id,
            ppg,
            labels,
            ppg_rate_hz,
            label_rate_hz,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if !valid_subject_id(self.subject_id) {
            return Err(Error::InvalidSubject(self.subject_id));
        }
        if self.ppg_rate_hz == 0 || self.label_rate_hz == 0 {
            return Err(Error::RateMismatch("rates must be positive".into()));
        }
        if let Some(pos) = self.labels.iter().position(|&l| l > MAX_RAW_LABEL) {
            return Err(Error::LabelOutOfRange {
                line: pos + 1,
                value: i64::from(self.labels[pos]),
            });
        }
        let ppg_secs = self.ppg.len() as f64 / f64::from(self.ppg_rate_hz);
        let label_secs = self.labels.len() as f64 / f64::from(self.label_rate_hz);
        if (ppg_secs - label_secs).abs() > 1.0 {
            return Err(Error::RateMismatch(format!(
                "ppg covers {ppg_secs:.3} s at {} Hz but labels cover {label_secs:.3} s at {} Hz",
                self.ppg_rate_hz, self.label_rate_hz
            )));
        }
        Ok(())
    }

    pub fn duration_secs(&self) -> f64 {
        self.ppg.len() as f64 / f64::from(self.ppg_rate_hz)
    }

    /// Raw label governing PPG sample `n`: `labels[floor(n * label_rate / ppg_rate)]`,
    /// clamped to the last label when the mapped index runs past the label stream.
    ///
    /// # Panics
    /// If the label stream is empty.
    pub fn label_at_ppg_index(&self, n: usize) -> u8 {
        let idx = (n as u64 * u64::from(self.label_rate_hz) / u64::from(self.ppg_rate_hz)) as usize;
        let idx = idx.min(self.labels.len() - 1);
        self.labels[idx]
    }

    /// Label stream decimated onto PPG sample positions.
    pub fn aligned_labels(&self) -> Vec<u8> {
        if self.labels.is_empty() {
            return Vec::new();
        }
        (0..self.ppg.len()).map(|n| self.label_at_ppg_index(n)).collect()
    }

    /// Number of PPG samples carrying each raw label value, indexed by raw label.
    pub fn class_sample_counts(&self) -> [usize; 5] {
        let mut counts = [0usize; 5];
        for l in self.aligned_labels() {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn with_ppg(&self, ppg: Vec<f64>) -> SubjectRecord {
        SubjectRecord {
            ppg,
            ..self.clone()
        }
    }
}

/// Subject ids 1 and 12 are excluded from the corpus (sensor malfunction).
pub fn valid_subject_id(id: u32) -> bool {
    (2..=17).contains(&id) && id != 12
}

/// Loads `ppg.csv`, `labels.csv` and `meta.txt` from a subject directory.
pub fn load_subject(dir: impl AsRef<Path>) -> Result<SubjectRecord> {
    let dir = dir.as_ref();
    let meta = read_file(&dir.join("meta.txt"))?;
    let meta = Meta::parse(&meta)?;

    let ppg_text = read_file(&dir.join("ppg.csv"))?;
    let mut ppg = Vec::new();
    for (i, line) in ppg_text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| parse_err("ppg.csv", i + 1, t))?;
        if !v.is_finite() {
            return Err(parse_err("ppg.csv", i + 1, t));
        }
        ppg.push(v);
    }

    let label_text = read_file(&dir.join("labels.csv"))?;
    let mut labels = Vec::new();
    for (i, line) in label_text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: i64 = t.parse().map_err(|_| parse_err("labels.csv", i + 1, t))?;
        if !(0..=i64::from(MAX_RAW_LABEL)).contains(&v) {
            return Err(Error::LabelOutOfRange { line: i + 1, value: v });
        }
        labels.push(v as u8);
    }

    SubjectRecord::new(meta.subject, ppg, labels, meta.ppg_rate_hz, meta.label_rate_hz)
}

/// Writes a record in the portable subject-directory layout.
pub fn write_subject(dir: impl AsRef<Path>, record: &SubjectRecord) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut ppg = String::with_capacity(record.ppg.len() * 20);
    for v in &record.ppg {
        ppg.push_str(&format!("{v}\n"));
    }
    let mut labels = String::with_capacity(record.labels.len() * 2);
    for l in &record.labels {
        labels.push_str(&format!("{l}\n"));
    }
    let meta = format!(
        "subject={}\nppg_rate_hz={}\nlabel_rate_hz={}\n",
        record.subject_id, record.ppg_rate_hz, record.label_rate_hz
    );
    write_file(&dir.join("ppg.csv"), &ppg)?;
    write_file(&dir.join("labels.csv"), &labels)?;
    write_file(&dir.join("meta.txt"), &meta)
}

struct Meta {
    subject: u32,
    ppg_rate_hz: u32,
    label_rate_hz: u32,
}

impl Meta {
    fn parse(text: &str) -> Result<Meta> {
        let mut subject = None;
        let mut ppg_rate = None;
        let mut label_rate = None;
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) = t.split_once('=').ok_or_else(|| parse_err("meta.txt", i + 1, t))?;
            let value: u32 = value
                .trim()
                .parse()
                .map_err(|_| parse_err("meta.txt", i + 1, t))?;
            match key.trim() {
                "subject" => subject = Some(value),
                "ppg_rate_hz" => ppg_rate = Some(value),
                "label_rate_hz" => label_rate = Some(value),
                _ => {}
            }
        }
        let missing = |k: &str| Error::Parse {
            file: "meta.txt".into(),
            line: 0,
            text: format!("missing key {k}"),
        };
        Ok(Meta {
            subject: subject.ok_or_else(|| missing("subject"))?,
            ppg_rate_hz: ppg_rate.ok_or_else(|| missing("ppg_rate_hz"))?,
            label_rate_hz: label_rate.ok_or_else(|| missing("label_rate_hz"))?,
        })
    }
}

fn parse_err(file: &str, line: usize, text: &str) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        text: text.to_string(),
    }
}

fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_second(subject: u32) -> SubjectRecord {
        SubjectRecord::new(subject, vec![0.0; 64], vec![1; 700], 64, 700).unwrap()
    }

    #[test]
    fn loads_minimal_directory() {
        let dir = tempfile::tempdir().unwrap();
        let rec = one_second(2);
        write_subject(dir.path(), &rec).unwrap();
        let back = load_subject(dir.path()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.duration_secs(), 1.0);
    }

    #[test]
    fn label_out_of_range_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        write_subject(dir.path(), &one_second(2)).unwrap();
        let mut labels = "1\n".repeat(699);
        labels.push_str("7\n");
        fs::write(dir.path().join("labels.csv"), labels).unwrap();
        let err = load_subject(dir.path()).unwrap_err();
        assert_eq!(err.to_string(), "label out of range at line 700: 7");
    }

    #[test]
    fn non_numeric_ppg_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        write_subject(dir.path(), &one_second(3)).unwrap();
        fs::write(dir.path().join("ppg.csv"), "0.5\n1.5\nabc\n").unwrap();
        match load_subject(dir.path()).unwrap_err() {
            Error::Parse { file, line, .. } => {
                assert_eq!(file, "ppg.csv");
                assert_eq!(line, 3);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_file_and_rate_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_subject(dir.path(), &one_second(3)).unwrap();
        fs::remove_file(dir.path().join("labels.csv")).unwrap();
        assert!(matches!(load_subject(dir.path()), Err(Error::MissingFile(_))));

        write_subject(dir.path(), &one_second(3)).unwrap();
        fs::write(dir.path().join("meta.txt"), "subject=3\nppg_rate_hz=16\nlabel_rate_hz=700\n").unwrap();
        assert!(matches!(load_subject(dir.path()), Err(Error::RateMismatch(_))));
    }

    #[test]
    fn discarded_subjects_rejected() {
        for id in [0, 1, 12, 18] {
            assert!(matches!(
                SubjectRecord::new(id, vec![0.0; 64], vec![1; 700], 64, 700),
                Err(Error::InvalidSubject(_))
            ));
        }
    }

    #[test]
    fn label_alignment_examples() {
        let labels: Vec<u8> = (0..1400).map(|i| (i % 5) as u8).collect();
        let rec = SubjectRecord::new(2, vec![0.0; 128], labels.clone(), 64, 700).unwrap();
        assert_eq!(rec.label_at_ppg_index(0), labels[0]);
        assert_eq!(rec.label_at_ppg_index(64), labels[700]);
        assert_eq!(rec.label_at_ppg_index(10), labels[109]);
    }

    #[test]
    fn label_alignment_clamps_to_last() {
        // 2 s of ppg against 1.5 s of labels
        let mut labels = vec![1u8; 1049];
        labels.push(3);
        let rec = SubjectRecord::new(2, vec![0.0; 128], labels, 64, 700).unwrap();
        assert_eq!(rec.label_at_ppg_index(127), 3);
    }

    proptest! {
        #[test]
        fn alignment_matches_per_sample_resampler(
            labels in proptest::collection::vec(0u8..5, 700..3000),
        ) {
            let n_ppg = labels.len() * 64 / 700;
            let rec = SubjectRecord::new(5, vec![0.0; n_ppg], labels.clone(), 64, 700).unwrap();
            // brute force: walk label time stamps and pick the last label at or before each ppg instant
            let mut j = 0usize;
            for n in 0..n_ppg {
                while j + 1 < labels.len() && (j + 1) * 64 <= n * 700 {
                    j += 1;
                }
                prop_assert_eq!(rec.label_at_ppg_index(n), labels[j]);
            }
        }
    }
}
