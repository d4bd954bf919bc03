//! Detector evaluation: rank metrics, the detector registry, report
//! assembly, and the validation sweep.

mod detector;
mod metrics;
mod report;
mod sweep;

pub use detector::{Detector, DetectorParams, DetectorSpec, HyperParams, NetDetector, Preset, DETECTOR_NAMES};
pub use metrics::{auroc, fpr_at_tpr, threshold_at_tpr, tpr_at};
pub use report::{evaluate_detector, evaluate_suite, EvalReport, EvalRow, GroupAverage, ScoreVectors, CSV_HEADER, TPR_TARGET};
pub use sweep::{sweep, SweepGrid, SweepResult, SweepRow};
