use rayon::prelude::*;

use super::ConfusionMatrix;
use crate::cnn::Network;
use crate::dataset::FrameSet;
use crate::error::{Error, Result};
use crate::train::one_hot_target;

/// Per-frame argmax prediction tallied against the true class.
pub fn evaluate(network: &Network, frames: &FrameSet) -> Result<ConfusionMatrix> {
    evaluate_with_loss(network, frames).map(|(cm, _)| cm)
}

/// Confusion matrix plus the mean squared error per output against the
/// `+1/-1` targets. Frames are scored in parallel; the reduction runs in
/// frame order so results do not depend on scheduling.
pub fn evaluate_with_loss(network: &Network, frames: &FrameSet) -> Result<(ConfusionMatrix, f64)> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("no frames to evaluate".into()));
    }
    let n_classes = network.n_classes();
    let scored: Vec<Result<(usize, usize, f64)>> = frames
        .frames
        .par_iter()
        .map_init(
            || network.workspace(),
            |ws, frame| {
                if frame.class >= n_classes {
                    return Err(Error::ClassOutOfRange {
                        index: frame.class,
                        n_classes,
                    });
                }
                let predicted = network.predict(&frame.samples, ws)?;
                let target = one_hot_target(frame.class, n_classes);
                let sq: f64 = ws.scores().iter().zip(&target).map(|(y, t)| (y - t) * (y - t)).sum();
                Ok((frame.class, predicted, sq / n_classes as f64))
            },
        )
        .collect();
    let mut cm = ConfusionMatrix::new(n_classes);
    let mut total = 0.0;
    for r in scored {
        let (truth, pred, sq) = r?;
        cm.record(truth, pred)?;
        total += sq;
    }
    Ok((cm, total / frames.len() as f64))
}
