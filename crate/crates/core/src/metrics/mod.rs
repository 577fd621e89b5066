//! Frame-level evaluation and configuration-grid reports.

mod confusion;
mod evaluate;
mod grid;

pub use confusion::ConfusionMatrix;
pub use evaluate::{evaluate, evaluate_with_loss};
pub use grid::{parse_rows, run_grid, ExperimentRow, GridReport, GridResult, RowTemplate};
