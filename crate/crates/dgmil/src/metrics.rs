//! Evaluation metrics: ROC AUC (Mann-Whitney with midrank tie handling),
//! Youden-threshold accuracy, and an instance-level FROC.
//!
//! All ranking metrics run on raw scores; score normalization is a reporting
//! convenience and never feeds a metric (clamping at the anchors could
//! otherwise create artificial ties).

use serde::{Deserialize, Serialize};

use crate::bundle::ModelBundle;
use crate::data::{BagLabel, Dataset, InstanceLabel};
use crate::distribution::{normalize_scores, score_dataset};
use crate::error::{Error, Result};
use crate::refinement::apply_projections;
use crate::ExecMode;

/// Operating points (allowed false positives per bag) summarizing the FROC.
pub const FROC_OPERATING_POINTS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// ROC AUC via the Mann-Whitney statistic with midranks, equivalent to
/// (#concordant + 0.5·#tied) / (#pos·#neg) but O(n log n).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(
            "ROC AUC needs at least one positive and one negative label".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based midrank shared by the tie group [i, j].
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// ROC curve points as (false positive rate, true positive rate, threshold),
/// one per distinct score, sweeping the threshold from high to low.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64, f64)>> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(
            "ROC curve needs at least one positive and one negative label".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64, threshold));
    }
    Ok(points)
}

/// Threshold maximizing Youden's J (sensitivity + specificity − 1) over the
/// midpoints of consecutive distinct sorted scores; ties resolve to the
/// lowest threshold. A score set with a single distinct value has no
/// midpoints and returns that value.
pub fn choose_threshold(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(
            "threshold selection needs both classes".into(),
        ));
    }
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() == 1 {
        return Ok(distinct[0]);
    }
    let mut best_t = f64::NAN;
    let mut best_j = f64::NEG_INFINITY;
    for w in distinct.windows(2) {
        let t = (w[0] + w[1]) / 2.0;
        let j = youden_j(scores, labels, t, n_pos, n_neg);
        if j > best_j {
            best_j = j;
            best_t = t;
        }
    }
    Ok(best_t)
}

fn youden_j(scores: &[f64], labels: &[bool], threshold: f64, n_pos: usize, n_neg: usize) -> f64 {
    let mut tp = 0usize;
    let mut tn = 0usize;
    for (s, &l) in scores.iter().zip(labels) {
        if l && *s >= threshold {
            tp += 1;
        } else if !l && *s < threshold {
            tn += 1;
        }
    }
    tp as f64 / n_pos as f64 + tn as f64 / n_neg as f64 - 1.0
}

/// Fraction of bags classified correctly with "positive iff score ≥ t".
pub fn accuracy_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(s, &l)| (**s >= threshold) == l)
        .count();
    correct as f64 / scores.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrocCurve {
    /// (mean false positives per bag, sensitivity), threshold high → low.
    pub points: Vec<(f64, f64)>,
    /// Mean sensitivity interpolated at the six standard operating points.
    pub score: f64,
}

/// Instance-level free-response curve: sweep the score threshold from high to
/// low; at each distinct score record (false positives / number of bags,
/// detected positives / total positives). The summary score averages the
/// sensitivity at FP/bag ∈ {0.25, 0.5, 1, 2, 4, 8}, clamped to the curve's
/// endpoints.
pub fn froc(
    instance_scores: &[f64],
    instance_labels: &[bool],
    bag_count: usize,
) -> Result<FrocCurve> {
    if instance_scores.len() != instance_labels.len() {
        return Err(Error::Dimension {
            expected: instance_scores.len(),
            got: instance_labels.len(),
        });
    }
    if bag_count == 0 {
        return Err(Error::Degenerate("FROC needs at least one bag".into()));
    }
    let total_pos = instance_labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return Err(Error::Degenerate("FROC needs at least one positive instance".into()));
    }

    let mut order: Vec<usize> = (0..instance_scores.len()).collect();
    order.sort_by(|&a, &b| instance_scores[b].total_cmp(&instance_scores[a]));
    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = instance_scores[order[i]];
        while i < order.len() && instance_scores[order[i]] == threshold {
            if instance_labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / bag_count as f64, tp as f64 / total_pos as f64));
    }

    let score = froc_summary(&points);
    Ok(FrocCurve { points, score })
}

fn froc_summary(points: &[(f64, f64)]) -> f64 {
    // Collapse to distinct FP/bag values; sensitivity is non-decreasing along
    // the sweep, so the last entry at a given x is the one that counts.
    let mut distinct: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &(x, y) in points {
        match distinct.last_mut() {
            Some(last) if last.0 == x => last.1 = y,
            _ => distinct.push((x, y)),
        }
    }
    let interp = |x: f64| -> f64 {
        if x <= distinct[0].0 {
            return distinct[0].1;
        }
        if x >= distinct[distinct.len() - 1].0 {
            return distinct[distinct.len() - 1].1;
        }
        for w in distinct.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x <= x1 {
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        unreachable!("operating point inside curve range")
    };
    FROC_OPERATING_POINTS.iter().map(|&x| interp(x)).sum::<f64>()
        / FROC_OPERATING_POINTS.len() as f64
}

/// Where the bag-classification threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSource {
    /// Use the threshold stored in the model bundle (chosen on training bags).
    Bundle,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub bag_auc: f64,
    pub bag_accuracy: f64,
    /// Raw-score threshold used for accuracy.
    pub threshold: f64,
    /// Threshold mapped through the bundle's normalization anchors, when they
    /// span a positive range.
    pub threshold_normalized: Option<f64>,
    pub instance_auc: Option<f64>,
    pub froc_score: Option<f64>,
    pub froc_points: Option<Vec<(f64, f64)>>,
    pub n_bags: usize,
    pub n_instances: usize,
    /// Known-positive instance count; `None` when no instance labels exist.
    pub n_pos_instances: Option<usize>,
}

/// Evaluation products that are useful beyond the report itself (curves for
/// CSV output, raw scores for debugging).
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub instance_scores: Vec<f64>,
    pub bag_scores: Vec<f64>,
    pub roc_points: Vec<(f64, f64, f64)>,
    pub froc: Option<FrocCurve>,
}

/// Map a test split through the bundle's composed projections, score it with
/// the bundle's cluster model, and compute the full metric set. Instance-level
/// metrics are emitted only when ground-truth instance labels are present.
pub fn evaluate(
    bundle: &ModelBundle,
    test: &Dataset,
    threshold_source: ThresholdSource,
    mode: ExecMode,
) -> Result<Evaluation> {
    if test.instances.dim() != bundle.dim() {
        return Err(Error::Dimension {
            expected: bundle.dim(),
            got: test.instances.dim(),
        });
    }
    let features = apply_projections(&bundle.projections, &test.instances.features, mode)?;
    let scores = score_dataset(&bundle.cluster_model, &features, &test.bags, mode)?;

    let bag_labels: Vec<bool> = test.bags.bags.iter().map(|b| b.label.is_positive()).collect();
    let bag_auc = roc_auc(&scores.bag_scores, &bag_labels)?;
    let threshold = match threshold_source {
        ThresholdSource::Bundle => bundle.threshold,
        ThresholdSource::Fixed(t) => t,
    };
    let bag_accuracy = accuracy_at(&scores.bag_scores, &bag_labels, threshold);
    let threshold_normalized = normalize_scores(&[threshold], bundle.anchors)
        .ok()
        .map(|v| v[0]);
    let roc_points = roc_curve(&scores.bag_scores, &bag_labels)?;

    // Instance metrics over the known-label subset.
    let known: Vec<usize> = (0..test.instances.len())
        .filter(|&i| test.instances.labels[i] != InstanceLabel::Unknown)
        .collect();
    let mut instance_auc = None;
    let mut froc_curve = None;
    let mut n_pos_instances = None;
    if !known.is_empty() {
        let ks: Vec<f64> = known.iter().map(|&i| scores.instance_scores[i]).collect();
        let kl: Vec<bool> = known
            .iter()
            .map(|&i| test.instances.labels[i] == InstanceLabel::Positive)
            .collect();
        let pos = kl.iter().filter(|&&l| l).count();
        n_pos_instances = Some(pos);
        if pos > 0 && pos < kl.len() {
            instance_auc = Some(roc_auc(&ks, &kl)?);
            froc_curve = Some(froc(&ks, &kl, test.bags.len())?);
        }
    }

    let report = MetricsReport {
        bag_auc,
        bag_accuracy,
        threshold,
        threshold_normalized,
        instance_auc,
        froc_score: froc_curve.as_ref().map(|f| f.score),
        froc_points: froc_curve.as_ref().map(|f| f.points.clone()),
        n_bags: test.bags.len(),
        n_instances: test.instances.len(),
        n_pos_instances,
    };
    Ok(Evaluation {
        report,
        instance_scores: scores.instance_scores,
        bag_scores: scores.bag_scores,
        roc_points,
        froc: froc_curve,
    })
}

/// Instance AUC of a score set against known labels, when computable.
pub fn instance_auc_if_labeled(scores: &[f64], labels: &[InstanceLabel]) -> Option<f64> {
    let known: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] != InstanceLabel::Unknown)
        .collect();
    if known.is_empty() {
        return None;
    }
    let ks: Vec<f64> = known.iter().map(|&i| scores[i]).collect();
    let kl: Vec<bool> = known
        .iter()
        .map(|&i| labels[i] == InstanceLabel::Positive)
        .collect();
    roc_auc(&ks, &kl).ok()
}

/// Bag AUC helper for audit trails.
pub fn bag_auc(bag_scores: &[f64], labels: &[BagLabel]) -> Option<f64> {
    let bools: Vec<bool> = labels.iter().map(|l| l.is_positive()).collect();
    roc_auc(bag_scores, &bools).ok()
}
