//! Cluster-conditioned feature-distribution modeling and the positive score.
//!
//! After K-means partitions the negative-bag instances, each cluster gets a
//! Gaussian fit (member mean, population covariance plus a scale-aware ridge).
//! An instance's positive score is its minimum squared Mahalanobis distance
//! over the clusters: the farther an instance sits from every negative
//! phenotype, the more positive it looks. Bag scores are plain means of the
//! member instance scores, which keeps the whole pipeline permutation
//! invariant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::BagTable;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, mahalanobis_sq, Mat};
use crate::ExecMode;

/// Relative ridge added to each covariance: eps = max(1e-6·trace/d, 1e-12).
const EPS_REL: f64 = 1e-6;
const EPS_FLOOR: f64 = 1e-12;

/// Percentile anchors used to map raw scores onto [0, 1] for reporting.
pub const ANCHOR_LO_PCT: f64 = 1.0;
pub const ANCHOR_HI_PCT: f64 = 99.0;

/// Gaussian statistics of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub mean: Vec<f64>,
    /// Regularized population covariance Σ + εI.
    pub cov: Mat,
    /// Lower-triangular Cholesky factor of `cov`.
    pub chol: Mat,
    pub member_count: usize,
    /// Ridge actually applied to this cluster.
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub dim: usize,
    pub clusters: Vec<ClusterStats>,
}

impl ClusterModel {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }
}

/// Per-instance positive scores with mean-pooled bag scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub instance_scores: Vec<f64>,
    /// One entry per bag, in bag-table order.
    pub bag_scores: Vec<f64>,
    /// (lo, hi) percentile anchors of the instance scores.
    pub anchors: (f64, f64),
}

/// Fit per-cluster mean and covariance from points and a K-means assignment.
///
/// The covariance divisor is the member count (population form), so a
/// single-member cluster fits cleanly: its covariance is just the ridge εI.
pub fn fit_cluster_model(points: &Mat, assignment: &[usize], m: usize) -> Result<ClusterModel> {
    let n = points.rows();
    let d = points.cols();
    if assignment.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: assignment.len(),
        });
    }
    if !points.is_finite() {
        return Err(Error::InvalidData("cluster fit input contains non-finite values".into()));
    }
    let mut counts = vec![0usize; m];
    for &a in assignment {
        if a >= m {
            return Err(Error::InvalidData(format!(
                "assignment references cluster {a} but the model has {m}"
            )));
        }
        counts[a] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Degenerate(format!("cluster {empty} has no members")));
    }

    let mut means = vec![vec![0.0f64; d]; m];
    for i in 0..n {
        let mean = &mut means[assignment[i]];
        let row = points.row(i);
        for j in 0..d {
            mean[j] += row[j];
        }
    }
    for (c, mean) in means.iter_mut().enumerate() {
        let inv = 1.0 / counts[c] as f64;
        for v in mean.iter_mut() {
            *v *= inv;
        }
    }

    let mut covs: Vec<Mat> = (0..m).map(|_| Mat::zeros(d, d)).collect();
    let mut centered = vec![0.0f64; d];
    for i in 0..n {
        let c = assignment[i];
        let mean = &means[c];
        let row = points.row(i);
        for j in 0..d {
            centered[j] = row[j] - mean[j];
        }
        let cov = &mut covs[c];
        for r in 0..d {
            let cr = centered[r];
            let dst = cov.row_mut(r);
            for s in 0..=r {
                dst[s] += cr * centered[s];
            }
        }
    }

    let mut clusters = Vec::with_capacity(m);
    for c in 0..m {
        let cov = &mut covs[c];
        let inv = 1.0 / counts[c] as f64;
        for r in 0..d {
            for s in 0..=r {
                let v = cov[(r, s)] * inv;
                cov[(r, s)] = v;
                cov[(s, r)] = v;
            }
        }
        let trace: f64 = (0..d).map(|j| cov[(j, j)]).sum();
        let mut eps = (EPS_REL * trace / d as f64).max(EPS_FLOOR);
        let chol = loop {
            let mut ridged = cov.clone();
            for j in 0..d {
                ridged[(j, j)] += eps;
            }
            match cholesky(&ridged) {
                Some(l) => {
                    *cov = ridged;
                    break l;
                }
                // A population covariance plus a positive ridge is PD in exact
                // arithmetic; escalate the ridge if rounding says otherwise.
                None => eps *= 10.0,
            }
        };
        clusters.push(ClusterStats {
            mean: std::mem::take(&mut means[c]),
            cov: std::mem::replace(cov, Mat::zeros(0, 0)),
            chol,
            member_count: counts[c],
            eps,
        });
    }

    Ok(ClusterModel { dim: d, clusters })
}

/// Minimum squared Mahalanobis distance from `z` to the model's clusters,
/// evaluated with triangular solves against the stored factorizations.
pub fn positive_score(model: &ClusterModel, z: &[f64]) -> Result<f64> {
    if z.len() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            got: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("query vector contains non-finite values".into()));
    }
    Ok(score_one(model, z))
}

fn score_one(model: &ClusterModel, z: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for cluster in &model.clusters {
        let d = mahalanobis_sq(&cluster.chol, &cluster.mean, z);
        if d < best {
            best = d;
        }
    }
    best
}

/// Score every instance and mean-pool per bag. Anchors are the 1st/99th
/// percentiles of the instance scores just computed.
pub fn score_dataset(
    model: &ClusterModel,
    features: &Mat,
    bags: &BagTable,
    mode: ExecMode,
) -> Result<ScoreSet> {
    if features.cols() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            got: features.cols(),
        });
    }
    let n = features.rows();
    let instance_scores: Vec<f64> = match mode {
        ExecMode::Reproducible => (0..n).map(|i| score_one(model, features.row(i))).collect(),
        ExecMode::Fast => (0..n)
            .into_par_iter()
            .map(|i| score_one(model, features.row(i)))
            .collect(),
    };

    let mut bag_scores = Vec::with_capacity(bags.len());
    for (b, bag) in bags.bags.iter().enumerate() {
        if bag.instances.is_empty() {
            return Err(Error::Degenerate(format!("bag {b} has no instances")));
        }
        let mut sum = 0.0;
        for &i in &bag.instances {
            sum += instance_scores[i];
        }
        bag_scores.push(sum / bag.instances.len() as f64);
    }

    let mut sorted = instance_scores.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let anchors = (
        percentile(&sorted, ANCHOR_LO_PCT),
        percentile(&sorted, ANCHOR_HI_PCT),
    );

    Ok(ScoreSet {
        instance_scores,
        bag_scores,
        anchors,
    })
}

/// Map scores through `(s - lo) / (hi - lo)`, clamped to [0, 1].
pub fn normalize_scores(scores: &[f64], anchors: (f64, f64)) -> Result<Vec<f64>> {
    let (lo, hi) = anchors;
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "degenerate score distribution: anchors lo={lo} hi={hi}"
        )));
    }
    let span = hi - lo;
    Ok(scores
        .iter()
        .map(|&s| ((s - lo) / span).clamp(0.0, 1.0))
        .collect())
}

/// Linear-interpolation percentile of an ascending-sorted slice.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = (pct / 100.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}
