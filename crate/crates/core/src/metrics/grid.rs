use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::cnn::NetworkConfig;
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, ExperimentConfig};

/// Kernel length tried first when a row leaves `filter` blank.
const DEFAULT_FILTER: usize = 32;
/// Used instead when [`DEFAULT_FILTER`] does not fit the row's geometry.
const FALLBACK_FILTER: usize = 16;

/// One grid line before it is run.
#[derive(Debug, Clone, PartialEq)]
pub struct RowTemplate {
    pub description: String,
    pub config: ExperimentConfig,
    /// Set when `filter` was not given and had to be assumed.
    pub filter_note: Option<String>,
    /// Published accuracies to print alongside, if supplied.
    pub reference: Option<(f64, f64)>,
}

/// Outcome of one grid line.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub description: String,
    pub n_classes: usize,
    pub n_cnn: usize,
    pub n_mlp: usize,
    pub frame: usize,
    pub filter: usize,
    pub ss: usize,
    pub stride: usize,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub template: RowTemplate,
    pub outcome: std::result::Result<(ExperimentRow, usize), String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GridReport {
    pub results: Vec<GridResult>,
}

/// Parses a rows file: one row per line, `key=value` pairs separated by `;`.
/// `name` sets the description, `ref=train,test` attaches reference
/// accuracies (in percent); every other key goes to
/// [`ExperimentConfig::set`]. Blank lines and `#` comments are skipped.
pub fn parse_rows(text: &str) -> Result<Vec<RowTemplate>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ctx = |e: Error| Error::InvalidArgument(format!("rows line {}: {e}", i + 1));
        let mut config = ExperimentConfig::default();
        let mut description = format!("row {}", rows.len() + 1);
        let mut reference = None;
        let mut filter_given = false;
        for part in line.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| ctx(Error::InvalidArgument(format!("expected key=value, got {part:?}"))))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "name" => description = v.to_string(),
                "ref" => {
                    let parsed = v
                        .split_once(',')
                        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
                    reference = Some(parsed.ok_or_else(|| {
                        ctx(Error::InvalidArgument(format!("ref needs train,test percentages, got {v:?}")))
                    })?);
                }
                _ => {
                    filter_given |= k == "filter";
                    config.set(k, v).map_err(ctx)?;
                }
            }
        }
        let filter_note = if filter_given {
            None
        } else {
            config.filter = DEFAULT_FILTER;
            if fits(&config) {
                Some(format!("f={DEFAULT_FILTER} assumed"))
            } else {
                config.filter = FALLBACK_FILTER;
                Some(format!("f={DEFAULT_FILTER} infeasible, f={FALLBACK_FILTER} assumed"))
            }
        };
        rows.push(RowTemplate {
            description,
            config,
            filter_note,
            reference,
        });
    }
    Ok(rows)
}

fn fits(cfg: &ExperimentConfig) -> bool {
    cfg.network_config()
        .and_then(|nc: NetworkConfig| nc.shape_trace(cfg.frame))
        .is_ok()
}

/// Trains and evaluates every row in parallel. A failing row is recorded and
/// the rest continue.
pub fn run_grid(data_root: &Path, rows: &[RowTemplate]) -> GridReport {
    let results = rows
        .par_iter()
        .map(|template| {
            let start = Instant::now();
            let outcome = run_experiment(data_root, &template.config)
                .map(|o| {
                    let c = &template.config;
                    let row = ExperimentRow {
                        description: template.description.clone(),
                        n_classes: c.classes.n_classes(),
                        n_cnn: c.n_cnn,
                        n_mlp: c.n_mlp,
                        frame: c.frame,
                        filter: c.filter,
                        ss: c.ss,
                        stride: c.stride,
                        train_acc: o.report.train_accuracy(),
                        test_acc: o.report.test_accuracy(),
                    };
                    (row, o.report.epochs.len())
                })
                .map_err(|e| e.to_string());
            GridResult {
                template: template.clone(),
                outcome,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    GridReport { results }
}

const HEADER: [&str; 15] = [
    "#", "description", "classes", "N", "M", "F", "f", "SS", "st", "train", "test", "ref_train", "ref_test", "epochs",
    "seconds",
];

impl GridReport {
    pub fn n_failed(&self) -> usize {
        self.results.iter().filter(|r| r.outcome.is_err()).count()
    }

    fn cells(&self) -> Vec<(Vec<String>, Option<String>)> {
        let pct = |x: f64| format!("{:.1}", 100.0 * x);
        self.results
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let c = &r.template.config;
                let (train, test, epochs, err) = match &r.outcome {
                    Ok((row, epochs)) => (pct(row.train_acc), pct(row.test_acc), epochs.to_string(), None),
                    Err(e) => ("-".into(), "-".into(), "-".into(), Some(e.clone())),
                };
                let (rt, rs) = match r.template.reference {
                    Some((a, b)) => (format!("{a:.1}"), format!("{b:.1}")),
                    None => ("-".into(), "-".into()),
                };
                let mut notes: Vec<String> = r.template.filter_note.iter().cloned().collect();
                if let Some(e) = err {
                    notes.push(format!("FAILED: {e}"));
                }
                let cells = vec![
                    (i + 1).to_string(),
                    r.template.description.clone(),
                    c.classes.to_string(),
                    c.n_cnn.to_string(),
                    c.n_mlp.to_string(),
                    c.frame.to_string(),
                    c.filter.to_string(),
                    c.ss.to_string(),
                    c.stride.to_string(),
                    train,
                    test,
                    rt,
                    rs,
                    epochs,
                    format!("{:.1}", r.seconds),
                ];
                (cells, (!notes.is_empty()).then(|| notes.join("; ")))
            })
            .collect()
    }

    /// Column-aligned table; row notes (assumed filter sizes, failures)
    /// follow the table.
    pub fn to_table(&self) -> String {
        let rows = self.cells();
        let mut widths: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
        for (cells, _) in &rows {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (j, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if j > 0 {
                    s.push_str("  ");
                }
                if j == 1 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "{c:>w$}");
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&HEADER.map(String::from));
        for (cells, _) in &rows {
            out.push_str(&line(cells));
        }
        for (cells, note) in &rows {
            if let Some(n) = note {
                let _ = writeln!(out, "row {}: {n}", cells[0]);
            }
        }
        out
    }

    /// Tab separated, header first, notes in the last column.
    pub fn to_tsv(&self) -> String {
        let mut out = HEADER.join("\t") + "\tnotes\n";
        for (cells, note) in self.cells() {
            let note = note.unwrap_or_default().replace(['\t', '\n'], " ");
            out.push_str(&cells.join("\t"));
            out.push('\t');
            out.push_str(&note);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{write_subject, ClassMode};
    use crate::experiment::tests::synthetic_subject;

    #[test]
    fn parses_rows_and_assumes_filter() {
        let text = "# comment\n\
            name=a; classes=2; n_cnn=2; n_mlp=3; frame=128; filter=32; ss=2; stride=4; filtered=false; subjects=2; ref=95.7,94.6\n\
            \n\
            name=b; classes=3; n_cnn=3; n_mlp=2; frame=64; ss=2; stride=4\n\
            name=c; classes=5; n_cnn=2; n_mlp=2; frame=64\n";
        let rows = parse_rows(text).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].config.frame, 128);
        assert!(!rows[0].config.preprocess.filtered);
        assert_eq!(rows[0].reference, Some((95.7, 94.6)));
        assert_eq!(rows[0].filter_note, None);
        assert_eq!(rows[1].config.classes, ClassMode::ThreeClass);
        assert_eq!(rows[1].config.filter, 16);
        assert!(rows[1].filter_note.as_deref().unwrap().contains("infeasible"));
        assert_eq!(rows[2].config.filter, 32);
        assert_eq!(rows[2].filter_note.as_deref(), Some("f=32 assumed"));
    }

    #[test]
    fn bad_rows_name_the_line() {
        let err = parse_rows("frame=64\nbogus=1\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
        assert!(parse_rows("ref=1\n").is_err());
    }

    #[test]
    fn empty_grid_is_empty_table() {
        let report = run_grid(Path::new("/nonexistent"), &[]);
        assert_eq!(report.n_failed(), 0);
        assert_eq!(report.to_table().lines().count(), 1);
        assert_eq!(report.to_tsv().lines().count(), 1);
    }

    #[test]
    fn failures_recorded_and_grid_continues() {
        let dir = tempfile::tempdir().unwrap();
        write_subject(dir.path().join("S2"), &synthetic_subject(2, 400)).unwrap();
        let rows = parse_rows(
            "name=ok; subjects=2; stride=16; max_iter=5; balance=true\n\
             name=missing; subjects=3; max_iter=5\n",
        )
        .unwrap();
        let a = run_grid(dir.path(), &rows);
        assert_eq!(a.n_failed(), 1);
        assert!(a.results[0].outcome.is_ok());
        let table = a.to_table();
        assert!(table.contains("row 2: f=32 infeasible, f=16 assumed; FAILED"), "{table}");
        assert_eq!(a.to_tsv().lines().count(), 3);
        // accuracies are reproducible; only the timing column may differ
        let b = run_grid(dir.path(), &rows);
        assert_eq!(a.results[0].outcome, b.results[0].outcome);
    }
}
