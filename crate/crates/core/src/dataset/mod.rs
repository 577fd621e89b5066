//! Subject ingestion, label/PPG alignment, framing and train/test splitting.

mod classmap;
mod frames;
mod record;
mod split;

pub use classmap::{ClassMap, ClassMode, RAW_LABEL_NAMES};
pub use frames::{cut_frames, pool_subjects, Frame, FrameSet};
pub use record::{load_subject, write_subject, SubjectRecord, DEFAULT_LABEL_RATE_HZ, DEFAULT_PPG_RATE_HZ};
pub use split::{split_40_60, Split, TRAIN_FRACTION_DEN, TRAIN_FRACTION_NUM};
