//! Retrieval metrics, silhouette scoring and cross-validation drivers.

mod cv;
mod metrics;

pub use cv::{assign_folds, cv_beta, cv_delta, BetaCvSetup, CvResult};
pub use metrics::{precision_recall_f1, silhouette, PairSet, RetrievalScores};
