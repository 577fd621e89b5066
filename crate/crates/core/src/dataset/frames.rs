use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ClassMap, SubjectRecord};
use crate::error::{Error, Result};

/// A fixed-length PPG window carrying a single task class.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<f64>,
    pub class: usize,
    pub subject_id: u32,
    /// Offset of the first sample in the subject's PPG stream.
    pub start_index: usize,
}

impl Frame {
    pub fn end_index(&self) -> usize {
        self.start_index + self.samples.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub frames: Vec<Frame>,
    pub class_map: ClassMap,
    pub frame_size: usize,
    pub hop: usize,
    /// Set when some input signal was shorter than one frame.
    pub signal_too_short: bool,
}

impl FrameSet {
    pub fn empty(class_map: ClassMap, frame_size: usize, hop: usize) -> Self {
        FrameSet {
            frames: Vec::new(),
            class_map,
            frame_size,
            hop,
            signal_too_short: false,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_map.n_classes()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for f in &self.frames {
            counts[f.class] += 1;
        }
        counts
    }

    /// Fails with the first class that has no frame.
    pub fn ensure_all_classes(&self) -> Result<()> {
        match self.class_counts().iter().position(|&c| c == 0) {
            Some(class) => Err(Error::EmptyClass {
                class: self.class_map.class_name(class).to_string(),
            }),
            None => Ok(()),
        }
    }

    pub fn with_frames(&self, frames: Vec<Frame>) -> FrameSet {
        FrameSet {
            frames,
            ..self.clone_empty()
        }
    }

    fn clone_empty(&self) -> FrameSet {
        FrameSet {
            frames: Vec::new(),
            class_map: self.class_map,
            frame_size: self.frame_size,
            hop: self.hop,
            signal_too_short: self.signal_too_short,
        }
    }

    /// Randomly drops frames so every class keeps the minority count.
    /// Surviving frames keep their relative order.
    pub fn undersample(&self, seed: u64) -> FrameSet {
        let counts = self.class_counts();
        let Some(&minority) = counts.iter().filter(|&&c| c > 0).min() else {
            return self.clone();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = vec![false; self.frames.len()];
        for class in 0..self.n_classes() {
            let members: Vec<usize> = self
                .frames
                .iter()
                .enumerate()
                .filter(|(_, f)| f.class == class)
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                continue;
            }
            for j in sample(&mut rng, members.len(), minority) {
                keep[members[j]] = true;
            }
        }
        let frames = self
            .frames
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(f, _)| f.clone())
            .collect();
        self.with_frames(frames)
    }

    /// Line-based text rendering; identical sets render to identical bytes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "frameset classes={} frame={} hop={} count={}",
            self.n_classes(),
            self.frame_size,
            self.hop,
            self.frames.len()
        );
        for f in &self.frames {
            let _ = write!(out, "{} {} {}", f.subject_id, f.start_index, f.class);
            for v in &f.samples {
                let _ = write!(out, " {v:e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Slides a `frame_size` window with step `hop` over the PPG stream and keeps
/// windows whose aligned raw labels are all identical and map to a task class.
pub fn cut_frames(
    record: &SubjectRecord,
    class_map: ClassMap,
    frame_size: usize,
    hop: usize,
) -> Result<FrameSet> {
    if frame_size < 2 {
        return Err(Error::InvalidArgument(format!("frame size must be >= 2, got {frame_size}")));
    }
    if hop < 1 {
        return Err(Error::InvalidArgument("hop must be >= 1".into()));
    }
    let mut set = FrameSet::empty(class_map, frame_size, hop);
    let n = record.ppg.len();
    if frame_size > n {
        set.signal_too_short = true;
        return Ok(set);
    }
    let labels = record.aligned_labels();
    // run_end[i]: first index after i whose label differs from labels[i]
    let mut run_end = vec![n; n];
    for i in (0..n.saturating_sub(1)).rev() {
        run_end[i] = if labels[i + 1] == labels[i] { run_end[i + 1] } else { i + 1 };
    }
    let mut start = 0;
    while start + frame_size <= n {
        if run_end[start] >= start + frame_size {
            if let Some(class) = class_map.map(labels[start]) {
                set.frames.push(Frame {
                    samples: record.ppg[start..start + frame_size].to_vec(),
                    class,
                    subject_id: record.subject_id,
                    start_index: start,
                });
            }
        }
        start += hop;
    }
    Ok(set)
}

/// Frames every subject and concatenates them class by class, subjects in
/// input order and time order within a subject.
pub fn pool_subjects(
    records: &[SubjectRecord],
    class_map: ClassMap,
    frame_size: usize,
    hop: usize,
) -> Result<FrameSet> {
    if records.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pooling needs at least 2 subjects, got {}",
            records.len()
        )));
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.subject_id) {
            return Err(Error::DuplicateSubject(r.subject_id));
        }
    }
    let per_subject = records
        .iter()
        .map(|r| cut_frames(r, class_map, frame_size, hop))
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = FrameSet::empty(class_map, frame_size, hop);
    pooled.signal_too_short = per_subject.iter().any(|s| s.signal_too_short);
    for class in 0..class_map.n_classes() {
        for set in &per_subject {
            pooled
                .frames
                .extend(set.frames.iter().filter(|f| f.class == class).cloned());
        }
    }
    Ok(pooled)
}
