//! Pseudo-label-driven iterative feature-space refinement.
//!
//! Each round: cluster the negative-bag instances in the current feature
//! space, fit per-cluster Gaussians, score everything, select extreme
//! instances (global top fraction of positive-bag instances as pseudo
//! positives, global bottom fraction of negative-bag instances as pseudo
//! negatives), train a one-layer linear projection head plus a one-layer
//! classification head on them with full-batch Adam, then remap all features
//! through the projection head. The outer loop stops when the extreme index
//! sets repeat or after `max_rounds`; a final cluster model is always fitted
//! in the finishing feature space so inference and the audit trail agree.
//!
//! The projection starts at the identity, so training perturbs the space
//! toward separating the pseudo classes instead of scrambling directions the
//! loss does not constrain.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::kmeans;
use crate::data::{validate_dataset, BagLabel, BagTable, InstanceSet};
use crate::distribution::{fit_cluster_model, score_dataset, ClusterModel, ScoreSet};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::metrics::{bag_auc, instance_auc_if_labeled};
use crate::ExecMode;

/// Pseudo-labeled extreme-instance selection for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeSelection {
    /// Highest-scoring instances from positive bags (pseudo label 1), sorted
    /// ascending by instance index.
    pub pos_indices: Vec<usize>,
    /// Lowest-scoring instances from negative bags (pseudo label 0), sorted
    /// ascending by instance index.
    pub neg_indices: Vec<usize>,
    pub ratio: f64,
}

/// An affine feature map `x ↦ W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

impl AffineMap {
    pub fn identity(d: usize) -> Self {
        AffineMap {
            weight: Mat::identity(d),
            bias: vec![0.0; d],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weight.matvec(x);
        for (yi, b) in y.iter_mut().zip(&self.bias) {
            *yi += b;
        }
        y
    }
}

/// Collapse `first` followed by `then` into a single affine map.
pub fn compose_affine(first: &AffineMap, then: &AffineMap) -> AffineMap {
    let weight = then.weight.matmul(&first.weight);
    let mut bias = then.weight.matvec(&first.bias);
    for (bi, b) in bias.iter_mut().zip(&then.bias) {
        *bi += b;
    }
    AffineMap { weight, bias }
}

/// Trained head parameters: the projection that remaps the space and the
/// classifier that scored the pseudo labels during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub projection: AffineMap,
    pub classifier: Vec<f64>,
    pub classifier_bias: f64,
}

/// Head-training hyperparameters: full-batch Adam, cosine learning-rate decay
/// to zero over `max_epochs`, early stop when the loss decrease stays under
/// `stop_threshold` for `stop_patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub stop_threshold: f64,
    pub stop_patience: usize,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            max_epochs: 200,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            stop_threshold: 1e-4,
            stop_patience: 10,
        }
    }
}

/// Select the global top `ratio` of positive-bag instances by score
/// (descending) and the global bottom `ratio` of negative-bag instances
/// (ascending). Ties break toward the lower instance index. Each side selects
/// max(1, floor(ratio · pool size)) instances.
pub fn select_extremes(
    scores: &ScoreSet,
    bags: &BagTable,
    ratio: f64,
) -> Result<ExtremeSelection> {
    if !(ratio > 0.0 && ratio <= 0.5) {
        return Err(Error::Config(format!(
            "extreme-instance ratio must be in (0, 0.5], got {ratio}"
        )));
    }
    let pos_pool = bags.instances_with_label(BagLabel::Positive);
    let neg_pool = bags.instances_with_label(BagLabel::Negative);
    if pos_pool.is_empty() || neg_pool.is_empty() {
        return Err(Error::Degenerate(
            "extreme selection needs at least one positive and one negative bag".into(),
        ));
    }
    let s = &scores.instance_scores;
    let take_pos = ((ratio * pos_pool.len() as f64).floor() as usize).max(1);
    let take_neg = ((ratio * neg_pool.len() as f64).floor() as usize).max(1);

    let mut pos_sorted = pos_pool;
    pos_sorted.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut pos_indices: Vec<usize> = pos_sorted[..take_pos].to_vec();
    pos_indices.sort_unstable();

    let mut neg_sorted = neg_pool;
    neg_sorted.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
    let mut neg_indices: Vec<usize> = neg_sorted[..take_neg].to_vec();
    neg_indices.sort_unstable();

    Ok(ExtremeSelection {
        pos_indices,
        neg_indices,
        ratio,
    })
}

// Flat parameter layout for training: [W row-major | b | v | c].
fn param_len(d: usize) -> usize {
    d * d + 2 * d + 1
}

fn init_params(d: usize, seed: u64) -> Vec<f64> {
    let mut params = vec![0.0; param_len(d)];
    for i in 0..d {
        params[i * d + i] = 1.0; // W starts at the identity
    }
    // A tiny seeded classifier breaks the exact-zero gradient of v = 0 on
    // pathologically symmetric data and makes the seed contract meaningful.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for j in 0..d {
        let g: f64 = rng.sample(StandardNormal);
        params[d * d + d + j] = 0.01 * g;
    }
    params
}

fn sigmoid(logit: f64) -> f64 {
    if logit >= 0.0 {
        1.0 / (1.0 + (-logit).exp())
    } else {
        let e = logit.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy of `sigmoid(v·(W z + b) + c)` over the samples,
/// plus its gradient in the flat layout.
fn bce_loss_grad(
    params: &[f64],
    d: usize,
    samples: &[(&[f64], f64)],
) -> (f64, Vec<f64>) {
    let (w, rest) = params.split_at(d * d);
    let (b, rest) = rest.split_at(d);
    let (v, c) = rest.split_at(d);
    let c = c[0];
    let n = samples.len() as f64;

    let mut loss = 0.0;
    let mut err_sum = 0.0;
    let mut grad_v = vec![0.0; d];
    let mut err_z = vec![0.0; d]; // Σ e_i z_i
    let mut u = vec![0.0; d];
    for &(z, y) in samples {
        for r in 0..d {
            let row = &w[r * d..(r + 1) * d];
            let mut s = b[r];
            for j in 0..d {
                s += row[j] * z[j];
            }
            u[r] = s;
        }
        let mut logit = c;
        for r in 0..d {
            logit += v[r] * u[r];
        }
        loss += logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p();
        let e = sigmoid(logit) - y;
        err_sum += e;
        for r in 0..d {
            grad_v[r] += e * u[r];
            err_z[r] += e * z[r];
        }
    }
    loss /= n;

    let mut grad = vec![0.0; params.len()];
    // dL/dW = v ⊗ (Σ e z)/n, dL/db = (Σ e)/n · v
    for r in 0..d {
        let vr = v[r];
        let dst = &mut grad[r * d..(r + 1) * d];
        for j in 0..d {
            dst[j] = vr * err_z[j] / n;
        }
    }
    for r in 0..d {
        grad[d * d + r] = err_sum / n * v[r];
    }
    for r in 0..d {
        grad[d * d + d + r] = grad_v[r] / n;
    }
    grad[d * d + 2 * d] = err_sum / n;
    (loss, grad)
}

/// Flat parameter vector layout used by head training: projection weights
/// (row-major d×d), projection bias (d), classifier (d), classifier bias (1).
/// Exposed so external checks (e.g. finite-difference oracles) can probe the
/// same loss surface the trainer descends.
pub fn training_loss_and_gradient(
    params: &[f64],
    features: &Mat,
    selection: &ExtremeSelection,
) -> (f64, Vec<f64>) {
    let d = features.cols();
    assert_eq!(params.len(), param_len(d), "flat parameter length");
    let samples: Vec<(&[f64], f64)> = selection
        .pos_indices
        .iter()
        .map(|&i| (features.row(i), 1.0))
        .chain(selection.neg_indices.iter().map(|&i| (features.row(i), 0.0)))
        .collect();
    bce_loss_grad(params, d, &samples)
}

/// Parameter vector the trainer starts from (identity projection, zero bias,
/// tiny seeded classifier).
pub fn initial_training_params(d: usize, seed: u64) -> Vec<f64> {
    init_params(d, seed)
}

/// Train the projection + classification heads on the pseudo-labeled extremes.
/// Returns the final parameters and the per-epoch loss curve.
pub fn train_heads(
    features: &Mat,
    selection: &ExtremeSelection,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(HeadParams, Vec<f64>)> {
    if selection.pos_indices.is_empty() || selection.neg_indices.is_empty() {
        return Err(Error::Degenerate(
            "head training needs pseudo labels on both sides".into(),
        ));
    }
    if hyper.max_epochs == 0 {
        return Err(Error::Config("max_epochs must be at least 1".into()));
    }
    let d = features.cols();
    let samples: Vec<(&[f64], f64)> = selection
        .pos_indices
        .iter()
        .map(|&i| (features.row(i), 1.0))
        .chain(selection.neg_indices.iter().map(|&i| (features.row(i), 0.0)))
        .collect();

    let mut params = init_params(d, seed);
    let mut adam_m = vec![0.0; params.len()];
    let mut adam_v = vec![0.0; params.len()];
    let mut curve = Vec::new();
    let mut streak = 0usize;
    for epoch in 0..hyper.max_epochs {
        let (loss, grad) = bce_loss_grad(&params, d, &samples);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        if let Some(&prev) = curve.last() {
            if prev - loss < hyper.stop_threshold {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        curve.push(loss);
        if streak >= hyper.stop_patience {
            break;
        }
        let lr = hyper.learning_rate
            * 0.5
            * (1.0 + (std::f64::consts::PI * epoch as f64 / hyper.max_epochs as f64).cos());
        let t = (epoch + 1) as i32;
        let bias1 = 1.0 - hyper.beta1.powi(t);
        let bias2 = 1.0 - hyper.beta2.powi(t);
        for k in 0..params.len() {
            let g = grad[k];
            adam_m[k] = hyper.beta1 * adam_m[k] + (1.0 - hyper.beta1) * g;
            adam_v[k] = hyper.beta2 * adam_v[k] + (1.0 - hyper.beta2) * g * g;
            let m_hat = adam_m[k] / bias1;
            let v_hat = adam_v[k] / bias2;
            params[k] -= lr * m_hat / (v_hat.sqrt() + hyper.adam_eps);
        }
    }

    let weight = Mat::from_vec(d, d, params[..d * d].to_vec());
    let bias = params[d * d..d * d + d].to_vec();
    let classifier = params[d * d + d..d * d + 2 * d].to_vec();
    let classifier_bias = params[d * d + 2 * d];
    Ok((
        HeadParams {
            projection: AffineMap { weight, bias },
            classifier,
            classifier_bias,
        },
        curve,
    ))
}

/// Remap every row through the projection (the classification head plays no
/// part here).
pub fn remap_features(features: &Mat, projection: &AffineMap, mode: ExecMode) -> Result<Mat> {
    let d = features.cols();
    if projection.weight.rows() != d || projection.weight.cols() != d || projection.bias.len() != d
    {
        return Err(Error::Dimension {
            expected: d,
            got: projection.weight.cols(),
        });
    }
    let n = features.rows();
    let rows: Vec<Vec<f64>> = match mode {
        ExecMode::Reproducible => (0..n).map(|i| projection.apply(features.row(i))).collect(),
        ExecMode::Fast => (0..n)
            .into_par_iter()
            .map(|i| projection.apply(features.row(i)))
            .collect(),
    };
    let mut data = Vec::with_capacity(n * d);
    for row in rows {
        data.extend_from_slice(&row);
    }
    Ok(Mat::from_vec(n, d, data))
}

/// Apply the stored per-round projections in round order.
pub fn apply_projections(
    projections: &[AffineMap],
    features: &Mat,
    mode: ExecMode,
) -> Result<Mat> {
    let mut current = features.clone();
    for p in projections {
        current = remap_features(&current, p, mode)?;
    }
    Ok(current)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub clusters: usize,
    pub ratio: f64,
    pub max_rounds: usize,
    pub train: TrainHyper,
    pub seed: u64,
    pub mode: ExecMode,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            clusters: 10,
            ratio: 0.10,
            max_rounds: 20,
            train: TrainHyper::default(),
            seed: 0,
            mode: ExecMode::Reproducible,
        }
    }
}

/// Audit record of one executed training round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    pub kmeans_seed: u64,
    pub train_seed: u64,
    pub selection: ExtremeSelection,
    pub heads: HeadParams,
    pub loss_curve: Vec<f64>,
    /// Train-split AUCs of the scores that drove this round's selection
    /// (present when ground-truth labels exist).
    pub train_instance_auc: Option<f64>,
    pub train_bag_auc: Option<f64>,
}

/// Result of the refinement loop, including the full per-round audit trail
/// and the cluster model fitted in the final feature space.
#[derive(Debug, Clone)]
pub struct RefinementState {
    pub rounds: Vec<RoundRecord>,
    pub final_model: ClusterModel,
    /// Train-split scores in the final feature space.
    pub final_scores: ScoreSet,
    /// Train features after all projections.
    pub final_features: Mat,
    pub final_instance_auc: Option<f64>,
    pub final_bag_auc: Option<f64>,
    /// True when the loop stopped because the extreme sets repeated.
    pub converged: bool,
    pub seed: u64,
}

impl RefinementState {
    pub fn projections(&self) -> Vec<AffineMap> {
        self.rounds.iter().map(|r| r.heads.projection.clone()).collect()
    }

    /// Map instances (e.g. a test split) into the final feature space.
    pub fn apply_to_test(&self, features: &Mat, mode: ExecMode) -> Result<Mat> {
        let projections = self.projections();
        apply_projections(&projections, features, mode)
    }
}

fn gather_rows(features: &Mat, indices: &[usize]) -> Mat {
    let d = features.cols();
    let mut data = Vec::with_capacity(indices.len() * d);
    for &i in indices {
        data.extend_from_slice(features.row(i));
    }
    Mat::from_vec(indices.len(), d, data)
}

/// Run the refinement loop on a training split.
pub fn refine(
    instances: &InstanceSet,
    bags: &BagTable,
    config: &RefineConfig,
) -> Result<RefinementState> {
    let report = validate_dataset(instances, bags);
    if let Some(first) = report.first() {
        return Err(Error::InvalidData(format!(
            "{first} ({} violation(s) total)",
            report.len()
        )));
    }
    if bags.positive_count() == 0 || bags.negative_count() == 0 {
        return Err(Error::Degenerate(
            "refinement needs at least one positive and one negative bag".into(),
        ));
    }
    if config.clusters == 0 {
        return Err(Error::Config("clusters must be at least 1".into()));
    }
    if !(config.ratio > 0.0 && config.ratio <= 0.5) {
        return Err(Error::Config(format!(
            "extreme-instance ratio must be in (0, 0.5], got {}",
            config.ratio
        )));
    }

    let neg_indices = bags.instances_with_label(BagLabel::Negative);
    let bag_labels = bags.labels();
    let mut features = instances.features.clone();
    let mut master = ChaCha12Rng::seed_from_u64(config.seed);
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut prev_selection: Option<ExtremeSelection> = None;

    for round in 1..=config.max_rounds + 1 {
        let kmeans_seed = master.next_u64();
        let train_seed = master.next_u64();

        // Fresh k-means++ each round: the remapped space can move clusters
        // arbitrarily, so warm-starting would entrench stale structure.
        let neg_mat = gather_rows(&features, &neg_indices);
        let km = kmeans(&neg_mat, config.clusters, kmeans_seed, config.mode)
            .map_err(|e| e.in_round(round))?;
        let model = fit_cluster_model(&neg_mat, &km.assignment, config.clusters)
            .map_err(|e| e.in_round(round))?;
        let scores = score_dataset(&model, &features, bags, config.mode)
            .map_err(|e| e.in_round(round))?;
        let inst_auc = instance_auc_if_labeled(&scores.instance_scores, &instances.labels);
        let b_auc = bag_auc(&scores.bag_scores, &bag_labels);

        let selection =
            select_extremes(&scores, bags, config.ratio).map_err(|e| e.in_round(round))?;
        let fixpoint = prev_selection.as_ref() == Some(&selection);
        if fixpoint || round > config.max_rounds {
            return Ok(RefinementState {
                rounds,
                final_model: model,
                final_scores: scores,
                final_features: features,
                final_instance_auc: inst_auc,
                final_bag_auc: b_auc,
                converged: fixpoint,
                seed: config.seed,
            });
        }

        let (heads, loss_curve) = train_heads(&features, &selection, &config.train, train_seed)
            .map_err(|e| e.in_round(round))?;
        features = remap_features(&features, &heads.projection, config.mode)
            .map_err(|e| e.in_round(round))?;
        rounds.push(RoundRecord {
            round,
            kmeans_seed,
            train_seed,
            selection: selection.clone(),
            heads,
            loss_curve,
            train_instance_auc: inst_auc,
            train_bag_auc: b_auc,
        });
        prev_selection = Some(selection);
    }
    unreachable!("loop always returns at the terminal round")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Bag;

    fn score_set(scores: Vec<f64>) -> ScoreSet {
        ScoreSet {
            instance_scores: scores,
            bag_scores: vec![],
            anchors: (0.0, 1.0),
        }
    }

    fn two_bags() -> BagTable {
        BagTable {
            bags: vec![
                Bag {
                    id: 0,
                    label: BagLabel::Positive,
                    instances: vec![0, 1],
                },
                Bag {
                    id: 1,
                    label: BagLabel::Negative,
                    instances: vec![2, 3],
                },
            ],
        }
    }

    #[test]
    fn half_ratio_selects_the_forced_extremes() {
        let scores = score_set(vec![9.0, 1.0, 0.0, 5.0]);
        let sel = select_extremes(&scores, &two_bags(), 0.5).unwrap();
        assert_eq!(sel.pos_indices, vec![0]);
        assert_eq!(sel.neg_indices, vec![2]);
    }

    #[test]
    fn tied_scores_select_the_lowest_index() {
        let bags = BagTable {
            bags: vec![
                Bag {
                    id: 0,
                    label: BagLabel::Positive,
                    instances: (0..10).collect(),
                },
                Bag {
                    id: 1,
                    label: BagLabel::Negative,
                    instances: (10..20).collect(),
                },
            ],
        };
        let scores = score_set(vec![3.0; 20]);
        let sel = select_extremes(&scores, &bags, 0.1).unwrap();
        assert_eq!(sel.pos_indices, vec![0]);
        assert_eq!(sel.neg_indices, vec![10]);
    }

    #[test]
    fn selection_rejects_bad_ratio_and_single_class_bags() {
        let scores = score_set(vec![0.0; 4]);
        assert!(select_extremes(&scores, &two_bags(), 0.0).is_err());
        assert!(select_extremes(&scores, &two_bags(), 0.6).is_err());
        let only_pos = BagTable {
            bags: vec![Bag {
                id: 0,
                label: BagLabel::Positive,
                instances: vec![0, 1, 2, 3],
            }],
        };
        assert!(select_extremes(&scores, &only_pos, 0.1).is_err());
    }

    fn toy_selection(n_pos: usize, n_neg: usize) -> ExtremeSelection {
        ExtremeSelection {
            pos_indices: (0..n_pos).collect(),
            neg_indices: (n_pos..n_pos + n_neg).collect(),
            ratio: 0.5,
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let d = 4;
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0).collect())
            .collect();
        let features = Mat::from_rows(&rows);
        let samples: Vec<(&[f64], f64)> = (0..5)
            .map(|i| (features.row(i), if i % 2 == 0 { 1.0 } else { 0.0 }))
            .collect();
        let mut params = init_params(d, 3);
        // Nudge all parameters off their init so no gradient is trivially zero.
        for (k, p) in params.iter_mut().enumerate() {
            *p += 0.05 * ((k % 7) as f64 - 3.0) / 3.0;
        }
        let (_, grad) = bce_loss_grad(&params, d, &samples);
        let h = 1e-5;
        for k in 0..params.len() {
            let mut plus = params.clone();
            plus[k] += h;
            let mut minus = params.clone();
            minus[k] -= h;
            let (lp, _) = bce_loss_grad(&plus, d, &samples);
            let (lm, _) = bce_loss_grad(&minus, d, &samples);
            let numeric = (lp - lm) / (2.0 * h);
            let denom = grad[k].abs().max(numeric.abs()).max(1e-8);
            assert!(
                (grad[k] - numeric).abs() / denom < 1e-4,
                "param {k}: analytic {} vs numeric {numeric}",
                grad[k]
            );
        }
    }

    #[test]
    fn separable_blobs_train_to_zero_error() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let d = 3;
        let mut rows = Vec::new();
        for i in 0..100 {
            let center = if i < 50 { 5.0 } else { -5.0 };
            rows.push(
                (0..d)
                    .map(|_| center + rng.sample::<f64, _>(StandardNormal) * 0.5)
                    .collect::<Vec<f64>>(),
            );
        }
        let features = Mat::from_rows(&rows);
        let selection = toy_selection(50, 50);
        let (heads, curve) =
            train_heads(&features, &selection, &TrainHyper::default(), 1).unwrap();
        let final_loss = *curve.last().unwrap();
        assert!(final_loss < 0.1, "final loss {final_loss}");
        let mut correct = 0;
        for (i, row) in rows.iter().enumerate() {
            let u = heads.projection.apply(row);
            let logit: f64 = heads
                .classifier
                .iter()
                .zip(&u)
                .map(|(v, ui)| v * ui)
                .sum::<f64>()
                + heads.classifier_bias;
            let predicted = logit > 0.0;
            if predicted == (i < 50) {
                correct += 1;
            }
        }
        assert_eq!(correct, 100);
    }

    #[test]
    fn two_point_problem_decreases_monotonically_until_stop() {
        let features = Mat::from_rows(&[vec![2.0, 0.0], vec![-2.0, 0.0]]);
        let selection = toy_selection(1, 1);
        let (_, curve) = train_heads(&features, &selection, &TrainHyper::default(), 9).unwrap();
        for w in curve.windows(2).skip(1) {
            assert!(w[1] <= w[0] + 1e-12, "loss rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn identity_projection_remaps_bitwise() {
        let features = Mat::from_rows(&[vec![1.5, 2.25, -3.125], vec![0.5, 4.0, 8.0]]);
        let out =
            remap_features(&features, &AffineMap::identity(3), ExecMode::Reproducible).unwrap();
        assert_eq!(out, features);
    }

    #[test]
    fn zero_weights_give_the_bias_everywhere() {
        let features = Mat::from_rows(&[vec![1.0, 2.0], vec![-3.0, 4.0]]);
        let map = AffineMap {
            weight: Mat::zeros(2, 2),
            bias: vec![7.0, -1.0],
        };
        let out = remap_features(&features, &map, ExecMode::Reproducible).unwrap();
        for i in 0..2 {
            assert_eq!(out.row(i), &[7.0, -1.0]);
        }
    }

    #[test]
    fn sequential_remaps_equal_the_composed_map() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let d = 4;
        let rand_map = |rng: &mut ChaCha12Rng| AffineMap {
            weight: Mat::from_rows(
                &(0..d)
                    .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                    .collect::<Vec<_>>(),
            ),
            bias: (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        };
        let h1 = rand_map(&mut rng);
        let h2 = rand_map(&mut rng);
        let features = Mat::from_rows(
            &(0..6)
                .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect::<Vec<_>>(),
        );
        let two_step = remap_features(
            &remap_features(&features, &h1, ExecMode::Reproducible).unwrap(),
            &h2,
            ExecMode::Reproducible,
        )
        .unwrap();
        let collapsed = remap_features(&features, &compose_affine(&h1, &h2), ExecMode::Reproducible)
            .unwrap();
        for i in 0..6 {
            for j in 0..d {
                assert!((two_step[(i, j)] - collapsed[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_projection_list_is_the_identity() {
        let features = Mat::from_rows(&[vec![1.0, 2.0]]);
        let out = apply_projections(&[], &features, ExecMode::Reproducible).unwrap();
        assert_eq!(out, features);
    }
}
