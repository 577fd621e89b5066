use std::collections::BTreeMap;

use super::{Frame, FrameSet};
use crate::error::{Error, Result};

/// Training share of each (subject, class) sample span, as a fraction.
pub const TRAIN_FRACTION_NUM: usize = 2;
pub const TRAIN_FRACTION_DEN: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: FrameSet,
    pub test: FrameSet,
}

/// Chronological 40/60 split, computed independently for every
/// (subject, class) pair.
///
/// The covered samples of a pair (the union of its frame ranges) are walked in
/// time order and the boundary is placed where 40% of them lie behind it.
/// Frames ending at or before the boundary train, frames starting at or after
/// it test, and frames straddling it are dropped.
pub fn split_40_60(frames: &FrameSet) -> Result<Split> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty frame set".into()));
    }
    let mut groups: BTreeMap<(u32, usize), Vec<&Frame>> = BTreeMap::new();
    for f in &frames.frames {
        groups.entry((f.subject_id, f.class)).or_default().push(f);
    }
    let boundaries: BTreeMap<(u32, usize), usize> = groups
        .into_iter()
        .map(|(key, members)| (key, boundary(&members)))
        .collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for f in &frames.frames {
        let b = boundaries[&(f.subject_id, f.class)];
        if f.end_index() <= b {
            train.push(f.clone());
        } else if f.start_index >= b {
            test.push(f.clone());
        }
    }
    let split = Split {
        train: frames.with_frames(train),
        test: frames.with_frames(test),
    };

    let train_counts = split.train.class_counts();
    let test_counts = split.test.class_counts();
    let present = frames.class_counts();
    for class in 0..frames.n_classes() {
        if present[class] == 0 {
            continue;
        }
        let name = frames.class_map.class_name(class).to_string();
        if test_counts[class] == 0 {
            return Err(Error::EmptySplitSide { class: name, side: "test" });
        }
        if train_counts[class] == 0 {
            return Err(Error::EmptySplitSide { class: name, side: "train" });
        }
    }
    Ok(split)
}

fn boundary(members: &[&Frame]) -> usize {
    let mut spans: Vec<(usize, usize)> = members.iter().map(|f| (f.start_index, f.end_index())).collect();
    spans.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    for (a, b) in spans {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let total: usize = merged.iter().map(|(a, b)| b - a).sum();
    let target = total * TRAIN_FRACTION_NUM / TRAIN_FRACTION_DEN;
    let mut covered = 0;
    for (a, b) in &merged {
        if covered + (b - a) >= target {
            return a + (target - covered);
        }
        covered += b - a;
    }
    merged.last().map_or(0, |m| m.1)
}
