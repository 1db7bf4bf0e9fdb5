//! Persisted model bundle: everything evaluation needs, serialized as JSON.
//!
//! Floats survive the round trip exactly (shortest-round-trip formatting) and
//! field order is fixed, so identical training runs produce byte-identical
//! bundle files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::BagTable;
use crate::distribution::ClusterModel;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::choose_threshold;
use crate::refinement::{AffineMap, RefineConfig, RefinementState, RoundRecord};

/// One line of the per-round training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLogEntry {
    pub round: usize,
    pub pos_selected: usize,
    pub neg_selected: usize,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub train_instance_auc: Option<f64>,
    pub train_bag_auc: Option<f64>,
    pub kmeans_seed: u64,
    pub train_seed: u64,
}

impl RoundLogEntry {
    pub fn from_record(record: &RoundRecord) -> Self {
        RoundLogEntry {
            round: record.round,
            pos_selected: record.selection.pos_indices.len(),
            neg_selected: record.selection.neg_indices.len(),
            epochs_run: record.loss_curve.len(),
            final_loss: *record.loss_curve.last().unwrap_or(&f64::NAN),
            train_instance_auc: record.train_instance_auc,
            train_bag_auc: record.train_bag_auc,
            kmeans_seed: record.kmeans_seed,
            train_seed: record.train_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub artifact_version: String,
    pub config: RefineConfig,
    /// Per-round projection heads in application order; empty means the
    /// identity map (no refinement rounds ran).
    pub projections: Vec<AffineMap>,
    /// Cluster model fitted in the final feature space.
    pub cluster_model: ClusterModel,
    /// (lo, hi) score-normalization anchors from the training split.
    pub anchors: (f64, f64),
    /// Bag-classification threshold chosen on training bag scores.
    pub threshold: f64,
    pub converged: bool,
    pub rounds_run: usize,
    pub train_instance_auc: Option<f64>,
    pub train_bag_auc: Option<f64>,
}

impl ModelBundle {
    /// Package a finished refinement state. The threshold comes from Youden's
    /// J on the final training bag scores, so evaluation needs no training
    /// data.
    pub fn from_state(state: &RefinementState, bags: &BagTable, config: &RefineConfig) -> Result<Self> {
        let bag_labels: Vec<bool> = bags.bags.iter().map(|b| b.label.is_positive()).collect();
        let threshold = choose_threshold(&state.final_scores.bag_scores, &bag_labels)?;
        Ok(ModelBundle {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            projections: state.projections(),
            cluster_model: state.final_model.clone(),
            anchors: state.final_scores.anchors,
            threshold,
            converged: state.converged,
            rounds_run: state.rounds.len(),
            train_instance_auc: state.final_instance_auc,
            train_bag_auc: state.final_bag_auc,
        })
    }

    /// Feature dimension the bundle expects.
    pub fn dim(&self) -> usize {
        self.cluster_model.dim
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("bundle serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_json_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            detail: format!("not a model bundle: {e}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::ClusterStats;
    use crate::linalg::Mat;
    use crate::refinement::TrainHyper;
    use crate::ExecMode;

    fn toy_bundle() -> ModelBundle {
        let cov = Mat::identity(2);
        let chol = Mat::identity(2);
        ModelBundle {
            artifact_version: "0.1.0".into(),
            config: RefineConfig {
                clusters: 1,
                ratio: 0.1,
                max_rounds: 0,
                train: TrainHyper::default(),
                seed: 3,
                mode: ExecMode::Reproducible,
            },
            projections: vec![],
            cluster_model: ClusterModel {
                dim: 2,
                clusters: vec![ClusterStats {
                    mean: vec![0.5, -0.25],
                    cov,
                    chol,
                    member_count: 4,
                    eps: 1e-12,
                }],
            },
            anchors: (0.0, 1.0),
            threshold: 0.5,
            converged: false,
            rounds_run: 0,
            train_instance_auc: None,
            train_bag_auc: Some(1.0),
        }
    }

    #[test]
    fn bundle_round_trips_through_json() {
        let bundle = toy_bundle();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        bundle.save(&path).unwrap();
        let back = ModelBundle::load(&path).unwrap();
        assert_eq!(back, bundle);
    }

    #[test]
    fn serialization_is_deterministic() {
        let bundle = toy_bundle();
        assert_eq!(bundle.to_json_bytes(), bundle.to_json_bytes());
    }

    #[test]
    fn loading_garbage_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.json");
        fs::write(&path, b"{\"nope\": 1}").unwrap();
        assert!(matches!(ModelBundle::load(&path), Err(Error::Format { .. })));
    }
}
