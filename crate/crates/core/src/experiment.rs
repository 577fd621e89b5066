//! One end-to-end configuration: load subjects, condition, frame, split,
//! initialise, train and evaluate.

use std::path::{Path, PathBuf};

use crate::cnn::{Network, NetworkConfig};
use crate::dataset::{
    cut_frames, load_subject, pool_subjects, split_40_60, ClassMap, ClassMode, FrameSet, Split, SubjectRecord,
};
use crate::dsp::{preprocess_pipeline, PreprocessOptions};
use crate::error::{Error, Result};
use crate::train::{train, TrainConfig, TrainReport};

/// All subjects retained in the corpus.
pub const ALL_SUBJECTS: [u32; 15] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 14, 15, 16, 17];

/// Every knob of a run. Keys accepted by [`ExperimentConfig::set`] follow the
/// grid column names (`n_cnn`, `n_mlp`, `frame`, `filter`, `ss`, `stride`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub classes: ClassMode,
    pub n_cnn: usize,
    pub n_mlp: usize,
    pub frame: usize,
    pub filter: usize,
    pub ss: usize,
    pub stride: usize,
    pub subjects: Vec<u32>,
    /// Seeds both the parameter initialisation and the epoch shuffles.
    pub seed: u64,
    pub preprocess: PreprocessOptions,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            classes: ClassMode::TwoClass,
            n_cnn: 3,
            n_mlp: 3,
            frame: 64,
            filter: 16,
            ss: 2,
            stride: 4,
            subjects: vec![2],
            seed: 0,
            preprocess: PreprocessOptions::default(),
            train: TrainConfig::default(),
        }
    }
}

pub const CONFIG_KEYS: [&str; 20] = [
    "classes", "n_cnn", "n_mlp", "frame", "filter", "ss", "stride", "subjects", "seed", "filtered",
    "ma_window", "order", "band", "atten_db", "fs", "max_iter", "min_error", "lr", "momentum", "balance",
];

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = || Error::InvalidArgument(format!("bad value for {key}: {value:?}"));
        fn num<T: std::str::FromStr>(v: &str, bad: impl Fn() -> Error) -> Result<T> {
            v.parse().map_err(|_| bad())
        }
        match key {
            "classes" => self.classes = value.parse()?,
            "n_cnn" => self.n_cnn = num(value, bad)?,
            "n_mlp" => self.n_mlp = num(value, bad)?,
            "frame" => self.frame = num(value, bad)?,
            "filter" => self.filter = num(value, bad)?,
            "ss" => self.ss = num(value, bad)?,
            "stride" => self.stride = num(value, bad)?,
            "subjects" => self.subjects = parse_subjects(value)?,
            "seed" => self.seed = num(value, bad)?,
            "filtered" => self.preprocess.filtered = parse_bool(value).ok_or_else(bad)?,
            "ma_window" => self.preprocess.ma_window = num(value, bad)?,
            "order" | "band" | "atten_db" | "fs" => self
                .preprocess
                .design
                .set(key, value)
                .map_err(|_| bad())?,
            "max_iter" => self.train.max_iterations = num(value, bad)?,
            "min_error" => self.train.min_train_error = num(value, bad)?,
            "lr" => self.train.learning_rate = num(value, bad)?,
            "momentum" => self.train.momentum = num(value, bad)?,
            "balance" => self.train.balance_classes = parse_bool(value).ok_or_else(bad)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {key:?} (known: {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got {assignment:?}")))?;
        self.set(k.trim(), v)
    }

    /// Every key with its resolved value, in [`CONFIG_KEYS`] order. Feeding
    /// the pairs back through [`set`](Self::set) reproduces the config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let d = &self.preprocess.design;
        let subjects: Vec<String> = self.subjects.iter().map(u32::to_string).collect();
        let values = [
            self.classes.to_string(),
            self.n_cnn.to_string(),
            self.n_mlp.to_string(),
            self.frame.to_string(),
            self.filter.to_string(),
            self.ss.to_string(),
            self.stride.to_string(),
            subjects.join(","),
            self.seed.to_string(),
            self.preprocess.filtered.to_string(),
            self.preprocess.ma_window.to_string(),
            d.order.to_string(),
            format!("{:?},{:?}", d.passband_hz.0, d.passband_hz.1),
            format!("{:?}", d.stopband_atten_db),
            format!("{:?}", d.sample_rate_hz),
            self.train.max_iterations.to_string(),
            format!("{:?}", self.train.min_train_error),
            format!("{:?}", self.train.learning_rate),
            format!("{:?}", self.train.momentum),
            self.train.balance_classes.to_string(),
        ];
        CONFIG_KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn class_map(&self) -> ClassMap {
        ClassMap::new(self.classes)
    }

    pub fn network_config(&self) -> Result<NetworkConfig> {
        NetworkConfig::adaptive(
            self.n_cnn,
            self.n_mlp,
            self.frame,
            self.filter,
            self.ss,
            self.classes.n_classes(),
            self.seed,
        )
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            shuffle_seed: self.seed,
            ..self.train.clone()
        }
    }

    /// Checks everything that does not need data.
    pub fn validate(&self) -> Result<()> {
        if self.subjects.is_empty() {
            return Err(Error::InvalidArgument("subject list is empty".into()));
        }
        self.network_config()?;
        self.train_config().validate()?;
        if self.preprocess.filtered {
            self.preprocess.design.validate()?;
            if self.preprocess.ma_window == 0 {
                return Err(Error::InvalidArgument("ma_window must be >= 1".into()));
            }
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be >= 1".into()));
        }
        Ok(())
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

/// `all`, or a comma list of ids and inclusive `a-b` ranges. Excluded ids
/// inside a range are skipped; named explicitly they are an error.
pub fn parse_subjects(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    if s == "all" {
        return Ok(ALL_SUBJECTS.to_vec());
    }
    let bad = |t: &str| Error::InvalidArgument(format!("bad subject {t:?}"));
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = tok.split_once('-') {
            let a: u32 = a.trim().parse().map_err(|_| bad(tok))?;
            let b: u32 = b.trim().parse().map_err(|_| bad(tok))?;
            out.extend((a..=b).filter(|id| ALL_SUBJECTS.contains(id)));
        } else {
            let id: u32 = tok.parse().map_err(|_| bad(tok))?;
            if !ALL_SUBJECTS.contains(&id) {
                return Err(Error::InvalidSubject(id));
            }
            out.push(id);
        }
    }
    for (i, id) in out.iter().enumerate() {
        if out[..i].contains(id) {
            return Err(Error::DuplicateSubject(*id));
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("subject list is empty".into()));
    }
    Ok(out)
}

/// `root/S<id>`, falling back to the zero-padded `root/S0<id>`.
pub fn subject_dir(root: &Path, id: u32) -> PathBuf {
    let plain = root.join(format!("S{id}"));
    if plain.is_dir() {
        return plain;
    }
    let padded = root.join(format!("S{id:02}"));
    if padded.is_dir() {
        padded
    } else {
        plain
    }
}

pub fn load_subjects(root: &Path, ids: &[u32]) -> Result<Vec<SubjectRecord>> {
    ids.iter()
        .map(|&id| {
            let rec = load_subject(subject_dir(root, id))?;
            if rec.subject_id != id {
                return Err(Error::InvalidArgument(format!(
                    "directory for subject {id} holds subject {}",
                    rec.subject_id
                )));
            }
            Ok(rec)
        })
        .collect()
}

/// Conditions every record and cuts frames; more than one subject is pooled.
pub fn build_frames(records: &[SubjectRecord], cfg: &ExperimentConfig) -> Result<FrameSet> {
    let conditioned = records
        .iter()
        .map(|r| preprocess_pipeline(r, &cfg.preprocess))
        .collect::<Result<Vec<_>>>()?;
    match conditioned.as_slice() {
        [] => Err(Error::InvalidArgument("no subjects".into())),
        [one] => cut_frames(one, cfg.class_map(), cfg.frame, cfg.stride),
        many => pool_subjects(many, cfg.class_map(), cfg.frame, cfg.stride),
    }
}

pub fn build_split(records: &[SubjectRecord], cfg: &ExperimentConfig) -> Result<Split> {
    let frames = build_frames(records, cfg)?;
    frames.ensure_all_classes()?;
    split_40_60(&frames)
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub network: Network,
    pub report: TrainReport,
    pub n_train: usize,
    pub n_test: usize,
}

impl ExperimentOutcome {
    /// Model text with the resolved config echoed as metadata.
    pub fn model_text(&self, cfg: &ExperimentConfig) -> String {
        self.network.to_model_text(&cfg.to_pairs())
    }
}

/// Runs the whole pipeline on already loaded records.
pub fn run_on_records(records: &[SubjectRecord], cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let split = build_split(records, cfg)?;
    let mut network = Network::init(&cfg.network_config()?)?;
    let report = train(&mut network, &split, &cfg.train_config())?;
    Ok(ExperimentOutcome {
        network,
        report,
        n_train: split.train.len(),
        n_test: split.test.len(),
    })
}

pub fn run_experiment(data_root: &Path, cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let records = load_subjects(data_root, &cfg.subjects)?;
    run_on_records(&records, cfg)
}
