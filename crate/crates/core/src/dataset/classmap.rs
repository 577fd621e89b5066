use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Names of the raw condition labels, indexed by raw value.
pub const RAW_LABEL_NAMES: [&str; 5] = ["transient", "baseline", "stress", "amusement", "meditation"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassMode {
    TwoClass,
    ThreeClass,
    FiveClass,
}

impl ClassMode {
    pub fn n_classes(self) -> usize {
        match self {
            ClassMode::TwoClass => 2,
            ClassMode::ThreeClass => 3,
            ClassMode::FiveClass => 5,
        }
    }

    pub fn from_n_classes(n: usize) -> Option<ClassMode> {
        match n {
            2 => Some(ClassMode::TwoClass),
            3 => Some(ClassMode::ThreeClass),
            5 => Some(ClassMode::FiveClass),
            _ => None,
        }
    }
}

impl fmt::Display for ClassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.n_classes())
    }
}

impl FromStr for ClassMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .parse::<usize>()
            .ok()
            .and_then(ClassMode::from_n_classes)
            .ok_or_else(|| Error::InvalidArgument(format!("class count must be 2, 3 or 5, got {s:?}")))
    }
}

/// Maps raw condition labels onto task classes.
///
/// * five classes: baseline, stress, amusement, meditation, transient
/// * three classes: baseline, stress, amusement (transient and meditation excluded)
/// * two classes: non-stress (baseline, amusement, meditation), stress (transient excluded)
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassMap {
    mode: ClassMode,
}

impl ClassMap {
    pub fn new(mode: ClassMode) -> Self {
        ClassMap { mode }
    }

    pub fn mode(&self) -> ClassMode {
        self.mode
    }

    pub fn n_classes(&self) -> usize {
        self.mode.n_classes()
    }

    /// Task class for a raw label, or `None` when the label is excluded.
    pub fn map(&self, raw: u8) -> Option<usize> {
        match (self.mode, raw) {
            (ClassMode::FiveClass, 1) => Some(0),
            (ClassMode::FiveClass, 2) => Some(1),
            (ClassMode::FiveClass, 3) => Some(2),
            (ClassMode::FiveClass, 4) => Some(3),
            (ClassMode::FiveClass, 0) => Some(4),
            (ClassMode::ThreeClass, 1) => Some(0),
            (ClassMode::ThreeClass, 2) => Some(1),
            (ClassMode::ThreeClass, 3) => Some(2),
            (ClassMode::TwoClass, 1 | 3 | 4) => Some(0),
            (ClassMode::TwoClass, 2) => Some(1),
            _ => None,
        }
    }

    pub fn class_name(&self, class: usize) -> &'static str {
        match (self.mode, class) {
            (ClassMode::TwoClass, 0) => "non-stress",
            (ClassMode::TwoClass, 1) => "stress",
            (ClassMode::ThreeClass, 0) | (ClassMode::FiveClass, 0) => "baseline",
            (ClassMode::ThreeClass, 1) | (ClassMode::FiveClass, 1) => "stress",
            (ClassMode::ThreeClass, 2) | (ClassMode::FiveClass, 2) => "amusement",
            (ClassMode::FiveClass, 3) => "meditation",
            (ClassMode::FiveClass, 4) => "transient",
            _ => "?",
        }
    }
}
