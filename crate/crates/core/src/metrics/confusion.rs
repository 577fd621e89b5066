use std::fmt::Write as _;

use crate::dataset::ClassMap;
use crate::error::{Error, Result};

/// Counts indexed `[truth][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_pairs(n_classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut cm = ConfusionMatrix::new(n_classes);
        for (t, p) in pairs {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        for index in [truth, predicted] {
            if index >= self.n_classes {
                return Err(Error::ClassOutOfRange {
                    index,
                    n_classes: self.n_classes,
                });
            }
        }
        self.counts[truth * self.n_classes + predicted] += 1;
        Ok(())
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    /// `trace / total`; zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.n_classes).map(|r| r.iter().sum()).collect()
    }

    /// `n:c00,c01,...` in row-major order.
    pub fn to_compact(&self) -> String {
        let cells: Vec<String> = self.counts.iter().map(u64::to_string).collect();
        format!("{}:{}", self.n_classes, cells.join(","))
    }

    pub fn from_compact(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad confusion matrix {s:?}"));
        let (n, cells) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        let counts = if cells.is_empty() {
            Vec::new()
        } else {
            cells
                .split(',')
                .map(|c| c.parse::<u64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        if counts.len() != n * n {
            return Err(bad());
        }
        Ok(ConfusionMatrix { n_classes: n, counts })
    }

    /// Aligned table with class names; rows are true classes.
    pub fn render(&self, class_map: &ClassMap) -> String {
        let names: Vec<&str> = (0..self.n_classes).map(|c| class_map.class_name(c)).collect();
        let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        let _ = write!(out, "{:>width$}", "true\\pred");
        for n in &names {
            let _ = write!(out, " {n:>width$}");
        }
        out.push('\n');
        for (t, n) in names.iter().enumerate() {
            let _ = write!(out, "{n:>width$}");
            for p in 0..self.n_classes {
                let _ = write!(out, " {:>width$}", self.get(t, p));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "accuracy {:.4} ({}/{})", self.accuracy(), self.trace(), self.total());
        out
    }
}
