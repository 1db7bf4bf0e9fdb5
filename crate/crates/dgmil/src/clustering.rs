//! K-means over instance features (Lloyd's algorithm, k-means++ seeding).
//!
//! Determinism rules: the seeded RNG drives only the k-means++ draws;
//! nearest-centroid ties go to the lowest cluster index; the centroid-update
//! reduction runs in point order. In `Fast` mode the assignment step is
//! parallelized over points (each point's result is independent, so the
//! output does not change).

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Mat};
use crate::ExecMode;

const MAX_ITERS: usize = 100;
const SHIFT_TOL_REL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Mat,
    /// Nearest-centroid index for every input point.
    pub assignment: Vec<usize>,
    /// Sum of squared distances from points to their assigned centroids.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia recorded after every assignment pass; non-increasing.
    pub inertia_history: Vec<f64>,
}

impl KMeansResult {
    pub fn cluster_count(&self) -> usize {
        self.centroids.rows()
    }
}

/// Lloyd's algorithm from k-means++ seeding.
///
/// Terminates when the largest centroid shift drops below 1e-4 of the data
/// diameter (bounding-box diagonal) or after 100 iterations. Empty clusters
/// are reseeded with the point farthest from its assigned centroid, so every
/// returned cluster has at least one member.
pub fn kmeans(points: &Mat, m: usize, seed: u64, mode: ExecMode) -> Result<KMeansResult> {
    let n = points.rows();
    if m == 0 {
        return Err(Error::Config("cluster count must be at least 1".into()));
    }
    if n < m {
        return Err(Error::TooFewPoints { n, m });
    }
    if !points.is_finite() {
        return Err(Error::InvalidData("k-means input contains non-finite values".into()));
    }
    let distinct = distinct_rows(points);
    if distinct < m {
        return Err(Error::TooFewDistinct { distinct, m });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let init = plus_plus_init(points, m, &mut rng);
    Ok(lloyd(points, init, mode))
}

/// Lloyd's algorithm from caller-provided initial centroids. Used by tests
/// that need seeding-independent behavior and by anything that wants to
/// warm-start.
pub fn kmeans_with_centroids(points: &Mat, init: Mat, mode: ExecMode) -> Result<KMeansResult> {
    let n = points.rows();
    let m = init.rows();
    if m == 0 {
        return Err(Error::Config("cluster count must be at least 1".into()));
    }
    if n < m {
        return Err(Error::TooFewPoints { n, m });
    }
    if init.cols() != points.cols() {
        return Err(Error::Dimension {
            expected: points.cols(),
            got: init.cols(),
        });
    }
    if !points.is_finite() {
        return Err(Error::InvalidData("k-means input contains non-finite values".into()));
    }
    Ok(lloyd(points, init, mode))
}

fn distinct_rows(points: &Mat) -> usize {
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(points.rows());
    for i in 0..points.rows() {
        let key: Vec<u64> = points.row(i).iter().map(|v| v.to_bits()).collect();
        seen.insert(key);
    }
    seen.len()
}

fn plus_plus_init(points: &Mat, m: usize, rng: &mut ChaCha12Rng) -> Mat {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = Mat::zeros(m, d);
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));

    // d2[i] = squared distance from point i to its nearest chosen centroid.
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..m {
        let total: f64 = d2.iter().sum();
        // total > 0 is guaranteed while fewer centroids than distinct points
        // have been chosen.
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = None;
        let mut last_positive = 0;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last_positive = i;
            u -= w;
            if u <= 0.0 {
                chosen = Some(i);
                break;
            }
        }
        let chosen = chosen.unwrap_or(last_positive);
        centroids.row_mut(c).copy_from_slice(points.row(chosen));
        for i in 0..n {
            let dist = squared_distance(points.row(i), centroids.row(c));
            if dist < d2[i] {
                d2[i] = dist;
            }
        }
    }
    centroids
}

fn nearest_centroid(point: &[f64], centroids: &Mat) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.rows() {
        let d = squared_distance(point, centroids.row(c));
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn assign(points: &Mat, centroids: &Mat, mode: ExecMode) -> (Vec<usize>, Vec<f64>) {
    let n = points.rows();
    match mode {
        ExecMode::Reproducible => {
            let mut assignment = vec![0usize; n];
            let mut d2 = vec![0.0f64; n];
            for i in 0..n {
                let (c, d) = nearest_centroid(points.row(i), centroids);
                assignment[i] = c;
                d2[i] = d;
            }
            (assignment, d2)
        }
        ExecMode::Fast => {
            let pairs: Vec<(usize, f64)> = (0..n)
                .into_par_iter()
                .map(|i| nearest_centroid(points.row(i), centroids))
                .collect();
            pairs.into_iter().unzip()
        }
    }
}

fn bbox_diagonal(points: &Mat) -> f64 {
    let d = points.cols();
    let mut lo = points.row(0).to_vec();
    let mut hi = points.row(0).to_vec();
    for i in 1..points.rows() {
        let row = points.row(i);
        for j in 0..d {
            if row[j] < lo[j] {
                lo[j] = row[j];
            }
            if row[j] > hi[j] {
                hi[j] = row[j];
            }
        }
    }
    let mut s = 0.0;
    for j in 0..d {
        let e = hi[j] - lo[j];
        s += e * e;
    }
    s.sqrt()
}

fn lloyd(points: &Mat, mut centroids: Mat, mode: ExecMode) -> KMeansResult {
    let n = points.rows();
    let d = points.cols();
    let m = centroids.rows();
    let tol = SHIFT_TOL_REL * bbox_diagonal(points);
    let mut inertia_history = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..MAX_ITERS {
        iterations_run += 1;
        let (assignment, d2) = assign(points, &centroids, mode);
        inertia_history.push(d2.iter().sum());

        let mut sums = Mat::zeros(m, d);
        let mut counts = vec![0usize; m];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            let dst = sums.row_mut(c);
            let src = points.row(i);
            for j in 0..d {
                dst[j] += src[j];
            }
        }
        let mut new_centroids = centroids.clone();
        for c in 0..m {
            if counts[c] > 0 {
                let dst = new_centroids.row_mut(c);
                let src = sums.row(c);
                let inv = 1.0 / counts[c] as f64;
                for j in 0..d {
                    dst[j] = src[j] * inv;
                }
            }
        }

        // Reseed empty clusters with the farthest point whose cluster can
        // spare it (ties to the lowest point index). Stealing a point
        // decrements its old cluster, so counts are maintained as we go.
        let mut spare_d2 = d2.clone();
        for c in 0..m {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = -1.0;
            for i in 0..n {
                if counts[assignment[i]] <= 1 {
                    continue;
                }
                if spare_d2[i] > far_d {
                    far_d = spare_d2[i];
                    far = Some(i);
                }
            }
            let far = far.expect("n >= m guarantees a spare point");
            new_centroids.row_mut(c).copy_from_slice(points.row(far));
            counts[assignment[far]] -= 1;
            counts[c] = 1;
            spare_d2[far] = -1.0;
        }

        let mut max_shift: f64 = 0.0;
        for c in 0..m {
            let shift = squared_distance(centroids.row(c), new_centroids.row(c)).sqrt();
            if shift > max_shift {
                max_shift = shift;
            }
        }
        centroids = new_centroids;
        if max_shift <= tol {
            break;
        }
    }

    // Final assignment against the final centroids so the returned pairing is
    // self-consistent.
    let (assignment, d2) = assign(points, &centroids, mode);
    let inertia: f64 = d2.iter().sum();
    inertia_history.push(inertia);

    KMeansResult {
        centroids,
        assignment,
        inertia,
        iterations_run,
        inertia_history,
    }
}
