//! Distribution-guided multiple-instance learning on instance feature vectors.
//!
//! Bags (e.g. one slide's worth of patch embeddings) carry a binary label; a
//! positive bag is one that contains at least one positive instance. Training
//! never sees instance labels. The pipeline models the negative-instance
//! feature distribution with per-cluster Gaussians (K-means over negative-bag
//! instances, then mean/covariance per cluster) and scores every instance by
//! its minimum squared Mahalanobis distance to those clusters. Top-scoring
//! instances from positive bags and bottom-scoring instances from negative
//! bags become pseudo-labeled extremes that supervise a linear projection
//! head; remapping all features through that head and repeating the loop
//! refines the feature space until the extreme sets stop changing.
//!
//! The crate ships the data model and DGMF/CSV file formats, a synthetic
//! bag generator with a Bayes-score oracle, the clustering/scoring/refinement
//! pipeline, evaluation metrics (ROC AUC, FROC, accuracy), and a persisted
//! model bundle consumed by the `dgmil` CLI.

pub mod bundle;
pub mod clustering;
pub mod data;
pub mod distribution;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod refinement;
pub mod synthetic;

pub use bundle::ModelBundle;
pub use data::{Bag, BagLabel, BagTable, Dataset, DatasetSplit, InstanceLabel, InstanceSet};
pub use error::{Error, Result};
pub use linalg::Mat;

use serde::{Deserialize, Serialize};

/// Execution mode for the instance-parallel inner loops.
///
/// `Reproducible` keeps every reduction sequential so repeat runs are
/// byte-identical. `Fast` parallelizes the per-instance loops (scoring,
/// assignment, remapping), whose results are independent per instance; the
/// contract only guarantees agreement with `Reproducible` to 1e-6 relative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Reproducible,
    Fast,
}

impl Default for ExecMode {
    fn default() -> Self {
        ExecMode::Reproducible
    }
}

impl std::str::FromStr for ExecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reproducible" => Ok(ExecMode::Reproducible),
            "fast" => Ok(ExecMode::Fast),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected `reproducible` or `fast`)"
            ))),
        }
    }
}

impl std::fmt::Display for ExecMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExecMode::Reproducible => write!(f, "reproducible"),
            ExecMode::Fast => write!(f, "fast"),
        }
    }
}
