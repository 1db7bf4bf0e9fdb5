//! Synthetic MIL datasets with known instance labels.
//!
//! Negative instances come from a Gaussian mixture of `g` phenotype clusters
//! whose means sit on a sphere; positive instances come from per-phenotype
//! components displaced along one shared random direction by `separation`
//! average within-cluster standard deviations (with separation 0 the positive
//! and negative distributions coincide exactly). Optional "entangled" mode pushes
//! every feature through a fixed ill-conditioned linear map and appends pure
//! noise dimensions, producing data where cluster-conditioned scoring in the
//! raw space degrades and a learned linear remap can recover separability.
//!
//! Everything is a pure function of the config: the RNG is split into fixed
//! streams (mixture parameters, train draws, test draws, entangler, noise) so
//! toggling `entangle` or `distractor_dims` never changes the sampled labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{
    Bag, BagLabel, BagTable, Dataset, DatasetSplit, InstanceLabel, InstanceSet,
};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, mahalanobis_sq, Mat};

/// Sphere radius for phenotype means, in units of the average within-cluster
/// standard deviation.
const RADIUS_SIGMA: f64 = 8.0;
/// Covariance eigenvalues are log-uniform across this decade, which caps the
/// per-cluster condition number at 10.
const EIG_DECADE_LO: f64 = 0.31622776601683794;
const EIG_DECADE_HI: f64 = 3.1622776601683795;
/// Entangling map condition number is log-uniform in this range.
const ENTANGLE_COND_LO: f64 = 10.0;
const ENTANGLE_COND_HI: f64 = 100.0;
/// Distractor dimensions are N(0, (scale·σ_avg)²) noise. The scale sits well
/// above the within-cluster level so that appended distractors genuinely
/// drown the (entangled, hence contracted) signal geometry in Euclidean
/// clustering distance.
const NOISE_SCALE: f64 = 2.0;

// RNG stream ids per purpose.
const STREAM_PARAMS: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_ENTANGLE: u64 = 3;
const STREAM_TRAIN_NOISE: u64 = 4;
const STREAM_TEST_NOISE: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Signal feature dimension (before distractors).
    pub dim: usize,
    /// Number of negative phenotype clusters.
    pub phenotypes: usize,
    /// Bag counts per split (train and test each get this many).
    pub neg_bags: usize,
    pub pos_bags: usize,
    pub bag_size: usize,
    /// Fraction of positive instances in a positive bag.
    pub witness_rate: f64,
    /// Distance from each positive mean to its nearest phenotype mean, in
    /// average within-cluster standard deviations.
    pub separation: f64,
    pub entangle: bool,
    /// Pure-noise dimensions appended after the (possibly entangled) signal.
    pub distractor_dims: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            dim: 32,
            phenotypes: 10,
            neg_bags: 50,
            pos_bags: 50,
            bag_size: 200,
            witness_rate: 0.05,
            separation: 8.0,
            entangle: false,
            distractor_dims: 0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.phenotypes == 0 {
            return Err(Error::Config("phenotypes must be at least 1".into()));
        }
        if self.neg_bags == 0 || self.pos_bags == 0 {
            return Err(Error::Config(
                "neg_bags and pos_bags must both be at least 1".into(),
            ));
        }
        if self.bag_size == 0 {
            return Err(Error::Config("bag_size must be at least 1".into()));
        }
        if !(self.witness_rate > 0.0 && self.witness_rate <= 1.0) {
            return Err(Error::Config(format!(
                "witness_rate must be in (0, 1], got {}",
                self.witness_rate
            )));
        }
        if !(self.separation >= 0.0) {
            return Err(Error::Config(format!(
                "separation must be non-negative, got {}",
                self.separation
            )));
        }
        Ok(())
    }

    /// Emitted feature dimension: signal plus distractors.
    pub fn emitted_dim(&self) -> usize {
        self.dim + self.distractor_dims
    }

    /// Positive instances per positive bag: max(1, round(ρ·bag_size)).
    pub fn witnesses_per_bag(&self) -> usize {
        ((self.witness_rate * self.bag_size as f64).round() as usize).max(1)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One negative phenotype component and its displaced positive counterpart.
#[derive(Debug, Clone)]
pub struct Phenotype {
    pub mean: Vec<f64>,
    pub pos_mean: Vec<f64>,
    /// Cholesky factor of the component covariance (shared by both classes).
    pub chol: Mat,
    pub log_det: f64,
}

/// Fixed invertible map `A = U diag(s) Vᵀ` stored by its factors so the
/// inverse is exact.
#[derive(Debug, Clone)]
pub struct Entangler {
    u: Mat,
    v: Mat,
    singular_values: Vec<f64>,
}

impl Entangler {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut t = self.v.matvec_transpose(x);
        for (ti, s) in t.iter_mut().zip(&self.singular_values) {
            *ti *= s;
        }
        self.u.matvec(&t)
    }

    pub fn invert(&self, y: &[f64]) -> Vec<f64> {
        let mut t = self.u.matvec_transpose(y);
        for (ti, s) in t.iter_mut().zip(&self.singular_values) {
            *ti /= s;
        }
        self.v.matvec(&t)
    }

    pub fn condition_number(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &s in &self.singular_values {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        hi / lo
    }
}

/// The full generative model reconstructed from a config; this is the oracle
/// behind [`bayes_scores`] and the Monte-Carlo tests.
#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub dim: usize,
    pub phenotypes: Vec<Phenotype>,
    /// Mean over clusters of sqrt(trace(Σ)/d).
    pub sigma_avg: f64,
    /// Present only when the config asks for entangling.
    pub entangler: Option<Entangler>,
    pub noise_std: f64,
}

impl GeneratorParams {
    pub fn from_config(config: &SyntheticConfig) -> Self {
        let d = config.dim;
        let g = config.phenotypes;
        let mut rng = stream_rng(config.seed, STREAM_PARAMS);

        // Covariances first: Σ = Q Λ Qᵀ with Λ log-uniform in one decade.
        let mut chols = Vec::with_capacity(g);
        let mut log_dets = Vec::with_capacity(g);
        let mut sigma_sum = 0.0;
        for _ in 0..g {
            let q = random_rotation(d, &mut rng);
            let eig: Vec<f64> = (0..d)
                .map(|_| {
                    let t: f64 = rng.gen();
                    EIG_DECADE_LO * (EIG_DECADE_HI / EIG_DECADE_LO).powf(t)
                })
                .collect();
            let mut cov = Mat::zeros(d, d);
            for r in 0..d {
                for c in 0..=r {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += q[(r, k)] * eig[k] * q[(c, k)];
                    }
                    cov[(r, c)] = s;
                    cov[(c, r)] = s;
                }
            }
            let chol = cholesky(&cov).expect("rotated diagonal spectrum is SPD");
            let log_det: f64 = (0..d).map(|j| 2.0 * chol[(j, j)].ln()).sum();
            let trace: f64 = eig.iter().sum();
            sigma_sum += (trace / d as f64).sqrt();
            chols.push(chol);
            log_dets.push(log_det);
        }
        let sigma_avg = sigma_sum / g as f64;
        let radius = RADIUS_SIGMA * sigma_avg;

        // Phenotype means on the sphere. Every positive component is its
        // anchor phenotype displaced `separation` sigmas along one shared
        // random direction: the anchor stays the nearest negative mean, the
        // positive mixture is the negative mixture shifted (so separation 0
        // means identical densities), and the shift direction is coherent,
        // which a linear head can represent. The direction is drawn inside
        // the span of the phenotype means: whether the displacement stands
        // out then hinges on clustering actually separating the phenotypes,
        // which is the property the pipeline banks on.
        let means: Vec<Vec<f64>> = (0..g)
            .map(|_| {
                random_unit(d, &mut rng)
                    .into_iter()
                    .map(|x| x * radius)
                    .collect()
            })
            .collect();
        let shift_dir = span_direction(&means, &mut rng);
        let shift = config.separation * sigma_avg;
        let mut phenotypes = Vec::with_capacity(g);
        for k in 0..g {
            let pos_mean: Vec<f64> = means[k]
                .iter()
                .zip(&shift_dir)
                .map(|(&m, &u)| m + shift * u)
                .collect();
            phenotypes.push(Phenotype {
                mean: means[k].clone(),
                pos_mean,
                chol: chols[k].clone(),
                log_det: log_dets[k],
            });
        }

        let entangler = if config.entangle {
            let mut erng = stream_rng(config.seed, STREAM_ENTANGLE);
            Some(random_entangler(d, &mut erng))
        } else {
            None
        };

        GeneratorParams {
            dim: d,
            phenotypes,
            sigma_avg,
            entangler,
            noise_std: NOISE_SCALE * sigma_avg,
        }
    }

    fn sample(&self, positive: bool, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let g = self.phenotypes.len();
        let k = if g == 1 { 0 } else { rng.gen_range(0..g) };
        let ph = &self.phenotypes[k];
        let mean = if positive { &ph.pos_mean } else { &ph.mean };
        let noise: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut z = ph.chol.matvec(&noise);
        for (zi, m) in z.iter_mut().zip(mean) {
            *zi += m;
        }
        z
    }

    fn log_density(&self, x: &[f64], positive: bool) -> f64 {
        const LN_2PI: f64 = 1.8378770664093453;
        let g = self.phenotypes.len() as f64;
        let mut terms = Vec::with_capacity(self.phenotypes.len());
        for ph in &self.phenotypes {
            let mean = if positive { &ph.pos_mean } else { &ph.mean };
            let m = mahalanobis_sq(&ph.chol, mean, x);
            terms.push(-0.5 * (self.dim as f64 * LN_2PI + ph.log_det + m));
        }
        log_sum_exp(&terms) - g.ln()
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Random unit vector inside the span of the given vectors (falls back to a
/// fully random direction if the span degenerates numerically).
fn span_direction(vectors: &[Vec<f64>], rng: &mut ChaCha12Rng) -> Vec<f64> {
    let d = vectors[0].len();
    let raw = random_unit(d, rng);
    // Orthonormal basis of the span via modified Gram-Schmidt.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let dot: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= dot * bi;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for wi in w.iter_mut() {
                *wi /= norm;
            }
            basis.push(w);
        }
    }
    let mut proj = vec![0.0; d];
    for b in &basis {
        let dot: f64 = raw.iter().zip(b).map(|(a, c)| a * c).sum();
        for (pi, bi) in proj.iter_mut().zip(b) {
            *pi += dot * bi;
        }
    }
    let norm = proj.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-8 {
        proj.into_iter().map(|x| x / norm).collect()
    } else {
        raw
    }
}

fn random_unit(d: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Random rotation via modified Gram-Schmidt on a Gaussian matrix; columns of
/// the result are orthonormal.
fn random_rotation(d: usize, rng: &mut ChaCha12Rng) -> Mat {
    'resample: loop {
        let mut q = Mat::zeros(d, d);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            // Two orthogonalization passes keep the basis clean at d ~ 100s.
            for _ in 0..2 {
                for prev in &cols {
                    let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                    for (vi, p) in v.iter_mut().zip(prev) {
                        *vi -= dot * p;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-10 {
                continue 'resample;
            }
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            cols.push(v);
        }
        for (j, col) in cols.iter().enumerate() {
            for i in 0..d {
                q[(i, j)] = col[i];
            }
        }
        return q;
    }
}

fn random_entangler(d: usize, rng: &mut ChaCha12Rng) -> Entangler {
    let u = random_rotation(d, rng);
    let v = random_rotation(d, rng);
    let t: f64 = rng.gen();
    let cond = ENTANGLE_COND_LO * (ENTANGLE_COND_HI / ENTANGLE_COND_LO).powf(t);
    // Geometric spectrum from 1 down to 1/cond: the largest singular value is
    // 1, so half the directions end up contracted by more than √cond.
    let singular_values: Vec<f64> = (0..d)
        .map(|i| {
            if d == 1 {
                1.0
            } else {
                cond.powf(-(i as f64) / (d as f64 - 1.0))
            }
        })
        .collect();
    Entangler {
        u,
        v,
        singular_values,
    }
}

/// Generate a train/test split from the config. Identical config (including
/// seed) yields bitwise-identical output.
pub fn generate(config: &SyntheticConfig) -> Result<DatasetSplit> {
    config.validate()?;
    let params = GeneratorParams::from_config(config);
    let train = generate_split(config, &params, STREAM_TRAIN, STREAM_TRAIN_NOISE);
    let test = generate_split(config, &params, STREAM_TEST, STREAM_TEST_NOISE);
    Ok(DatasetSplit { train, test })
}

fn generate_split(
    config: &SyntheticConfig,
    params: &GeneratorParams,
    data_stream: u64,
    noise_stream: u64,
) -> Dataset {
    let mut rng = stream_rng(config.seed, data_stream);
    let n_bags = config.neg_bags + config.pos_bags;
    let n = n_bags * config.bag_size;
    let witnesses = config.witnesses_per_bag();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut bag_of = Vec::with_capacity(n);
    let mut bags = Vec::with_capacity(n_bags);
    for b in 0..n_bags {
        let positive_bag = b >= config.neg_bags;
        let label = if positive_bag {
            BagLabel::Positive
        } else {
            BagLabel::Negative
        };
        let mut members = Vec::with_capacity(config.bag_size);
        for j in 0..config.bag_size {
            let positive_instance = positive_bag && j < witnesses;
            rows.push(params.sample(positive_instance, &mut rng));
            labels.push(if positive_instance {
                InstanceLabel::Positive
            } else {
                InstanceLabel::Negative
            });
            members.push(rows.len() - 1);
            bag_of.push(b);
        }
        bags.push(Bag {
            id: b as u32,
            label,
            instances: members,
        });
    }

    if let Some(entangler) = &params.entangler {
        for row in rows.iter_mut() {
            *row = entangler.apply(row);
        }
    }
    if config.distractor_dims > 0 {
        let mut nrng = stream_rng(config.seed, noise_stream);
        for row in rows.iter_mut() {
            for _ in 0..config.distractor_dims {
                let v: f64 = nrng.sample(StandardNormal);
                row.push(v * params.noise_std);
            }
        }
    }
    // Features are f32 on disk; quantize now so writing and re-reading a
    // generated dataset is lossless.
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            *v = *v as f32 as f64;
        }
    }

    Dataset {
        instances: InstanceSet {
            features: Mat::from_rows(&rows),
            bag_of,
            labels,
        },
        bags: BagTable { bags },
    }
}

/// Log likelihood ratio `log p_pos(z) − log p_neg(z)` under the true
/// generative densities, undoing the entangling map and ignoring distractor
/// dimensions (their distribution is class-independent and cancels).
pub fn bayes_scores(config: &SyntheticConfig, instances: &InstanceSet) -> Result<Vec<f64>> {
    config.validate()?;
    if instances.dim() != config.emitted_dim() {
        return Err(Error::Dimension {
            expected: config.emitted_dim(),
            got: instances.dim(),
        });
    }
    let params = GeneratorParams::from_config(config);
    let mut out = Vec::with_capacity(instances.len());
    for i in 0..instances.len() {
        let row = instances.features.row(i);
        let signal = &row[..config.dim];
        let x = match &params.entangler {
            Some(e) => e.invert(signal),
            None => signal.to_vec(),
        };
        out.push(params.log_density(&x, true) - params.log_density(&x, false));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_dataset;
    use crate::metrics::roc_auc;

    fn small_config() -> SyntheticConfig {
        SyntheticConfig {
            dim: 6,
            phenotypes: 3,
            neg_bags: 4,
            pos_bags: 4,
            bag_size: 25,
            witness_rate: 0.2,
            separation: 6.0,
            entangle: false,
            distractor_dims: 0,
            seed: 99,
        }
    }

    #[test]
    fn generated_datasets_validate_cleanly() {
        let split = generate(&small_config()).unwrap();
        assert!(validate_dataset(&split.train.instances, &split.train.bags).is_empty());
        assert!(validate_dataset(&split.test.instances, &split.test.bags).is_empty());
        assert_eq!(split.train.instances.dim(), split.test.instances.dim());
    }

    #[test]
    fn witness_rate_one_fills_the_bag() {
        let config = SyntheticConfig {
            pos_bags: 1,
            neg_bags: 1,
            bag_size: 3,
            witness_rate: 1.0,
            ..small_config()
        };
        let split = generate(&config).unwrap();
        let pos_bag = &split.train.bags.bags[1];
        assert!(pos_bag.label.is_positive());
        for &i in &pos_bag.instances {
            assert_eq!(split.train.instances.labels[i], InstanceLabel::Positive);
        }
    }

    #[test]
    fn every_positive_bag_has_exactly_the_witness_count() {
        let config = small_config();
        let split = generate(&config).unwrap();
        let expect = config.witnesses_per_bag();
        assert_eq!(expect, 5); // 0.2 × 25
        for ds in [&split.train, &split.test] {
            for bag in &ds.bags.bags {
                let positives = bag
                    .instances
                    .iter()
                    .filter(|&&i| ds.instances.labels[i] == InstanceLabel::Positive)
                    .count();
                match bag.label {
                    BagLabel::Positive => assert_eq!(positives, expect),
                    BagLabel::Negative => assert_eq!(positives, 0),
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = small_config();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn entangling_changes_features_but_not_labels() {
        let plain_cfg = small_config();
        let entangled_cfg = SyntheticConfig {
            entangle: true,
            distractor_dims: 4,
            ..plain_cfg.clone()
        };
        let plain = generate(&plain_cfg).unwrap();
        let entangled = generate(&entangled_cfg).unwrap();
        assert_eq!(plain.train.instances.labels, entangled.train.instances.labels);
        assert_eq!(plain.test.instances.labels, entangled.test.instances.labels);
        assert_eq!(plain.train.bags, entangled.train.bags);
        assert_eq!(
            entangled.train.instances.dim(),
            plain.train.instances.dim() + 4
        );
        assert_ne!(
            plain.train.instances.features.row(0),
            &entangled.train.instances.features.row(0)[..plain_cfg.dim]
        );
    }

    #[test]
    fn entangler_condition_number_is_in_range_and_inverts() {
        let mut rng = stream_rng(7, STREAM_ENTANGLE);
        let e = random_entangler(12, &mut rng);
        let cond = e.condition_number();
        assert!((10.0..=100.0).contains(&cond), "cond {cond}");
        let x: Vec<f64> = (0..12).map(|i| (i as f64) / 3.0 - 1.5).collect();
        let back = e.invert(&e.apply(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_separation_bayes_auc_is_half() {
        // With Δ=0 the positive and negative densities coincide, so the
        // likelihood ratio carries no information. ≥10⁴ instances keeps the
        // Monte-Carlo error of the AUC estimate well under 0.02.
        let config = SyntheticConfig {
            dim: 8,
            phenotypes: 4,
            neg_bags: 25,
            pos_bags: 25,
            bag_size: 200,
            witness_rate: 0.5,
            separation: 0.0,
            entangle: false,
            distractor_dims: 0,
            seed: 5,
        };
        let split = generate(&config).unwrap();
        let inst = &split.train.instances;
        assert!(inst.len() >= 10_000);
        let scores = bayes_scores(&config, inst).unwrap();
        let labels: Vec<bool> = inst.labels.iter().map(|&l| l == InstanceLabel::Positive).collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        assert!((auc - 0.5).abs() < 0.02, "Bayes AUC {auc}");
    }

    #[test]
    fn single_phenotype_true_mahalanobis_separates_at_delta_eight() {
        let config = SyntheticConfig {
            dim: 8,
            phenotypes: 1,
            neg_bags: 25,
            pos_bags: 25,
            bag_size: 200,
            witness_rate: 0.5,
            separation: 8.0,
            entangle: false,
            distractor_dims: 0,
            seed: 11,
        };
        let split = generate(&config).unwrap();
        let inst = &split.train.instances;
        assert!(inst.len() >= 10_000);
        let params = GeneratorParams::from_config(&config);
        let ph = &params.phenotypes[0];
        let scores: Vec<f64> = (0..inst.len())
            .map(|i| mahalanobis_sq(&ph.chol, &ph.mean, inst.features.row(i)))
            .collect();
        let labels: Vec<bool> = inst.labels.iter().map(|&l| l == InstanceLabel::Positive).collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        assert!(auc > 0.999, "true-component Mahalanobis AUC {auc}");
    }

    #[test]
    fn bayes_scores_are_extreme_at_the_component_means() {
        let config = SyntheticConfig {
            separation: 8.0,
            ..small_config()
        };
        let params = GeneratorParams::from_config(&config);
        let neg_mean = params.phenotypes[0].mean.clone();
        let pos_mean = params.phenotypes[0].pos_mean.clone();
        let probe = InstanceSet {
            features: Mat::from_rows(&[neg_mean, pos_mean]),
            bag_of: vec![0, 0],
            labels: vec![InstanceLabel::Unknown; 2],
        };
        let scores = bayes_scores(&config, &probe).unwrap();
        assert!(scores[0] < -5.0, "score at negative mean: {}", scores[0]);
        assert!(scores[1] > 5.0, "score at positive mean: {}", scores[1]);
    }

    #[test]
    fn bayes_rejects_dimension_mismatch() {
        let config = small_config();
        let probe = InstanceSet {
            features: Mat::from_rows(&[vec![0.0; 3]]),
            bag_of: vec![0],
            labels: vec![InstanceLabel::Unknown],
        };
        assert!(matches!(
            bayes_scores(&config, &probe),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = small_config();
        c.witness_rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.separation = -1.0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.bag_size = 0;
        assert!(c.validate().is_err());
    }
}
