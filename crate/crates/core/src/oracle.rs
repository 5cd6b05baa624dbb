//! Batch references and Monte-Carlo probes used to check the streaming
//! engines: offline Lloyd's, offline two-component EM, misclassification
//! rates, the population-Lloyd floor, and contraction / selection probes.
//!
//! Every probe is a pure function of its inputs and seed. Trials are split
//! into fixed-size chunks whose partial sums are combined in chunk order, so
//! results do not depend on the thread count.

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::Weighting;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lloyd::assign;
use crate::mixture::{MixtureModel, NoiseKind, SampleStream};

/// Default relative center-movement tolerance for the batch oracles.
pub const DEFAULT_TOL: f64 = 1e-9;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub final_centers: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared distances to the nearest final center.
    pub final_objective: f64,
    /// Objective against the centers in force at the start of each iteration.
    pub objective_history: Vec<f64>,
}

impl OracleReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn objective(points: &[Vec<f64>], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|x| linalg::sq_dist(x, &centers[assign(x, centers)]))
        .sum()
}

fn check_points(points: &[Vec<f64>], d: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            available: 0,
        });
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: p.len(),
        });
    }
    Ok(())
}

/// `max_i ‖a_i − b_i‖ / max(1, max_i ‖b_i‖)`
fn relative_movement(new: &[Vec<f64>], old: &[Vec<f64>]) -> f64 {
    let shift = new
        .iter()
        .zip(old)
        .map(|(a, b)| linalg::sq_dist(a, b).sqrt())
        .fold(0.0f64, f64::max);
    let scale = old.iter().map(|c| linalg::norm(c)).fold(1.0f64, f64::max);
    shift / scale
}

/// Classical batch Lloyd's iteration from `init` until the relative center
/// movement drops below `tol` or `max_iters` iterations have run.
///
/// A cluster that receives no points halts the run with
/// [`Error::EmptyCluster`]; it is never reseeded.
pub fn offline_lloyd(
    points: &[Vec<f64>],
    init: Vec<Vec<f64>>,
    max_iters: usize,
    tol: f64,
) -> Result<OracleReport> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
    }
    if init.len() < 2 {
        return Err(Error::InvalidArgument("need >= 2 centers".into()));
    }
    let d = init[0].len();
    if init.iter().any(|c| c.len() != d) {
        return Err(Error::InvalidArgument("centers differ in dimension".into()));
    }
    check_points(points, d)?;
    let k = init.len();
    let mut centers = init;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        let mut obj = 0.0;
        for x in points {
            let w = assign(x, &centers);
            obj += linalg::sq_dist(x, &centers[w]);
            linalg::axpy(1.0, x, &mut sums[w]);
            counts[w] += 1;
        }
        if let Some(prev) = history.last() {
            debug_assert!(obj <= prev * (1.0 + 1e-12) + 1e-12, "objective increased: {prev} -> {obj}");
        }
        history.push(obj);
        if let Some(cluster) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyCluster {
                cluster,
                iteration: iterations,
            });
        }
        let next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();
        let moved = relative_movement(&next, &centers);
        centers = next;
        if moved < tol || moved == 0.0 {
            converged = true;
            break;
        }
    }
    let final_objective = objective(points, &centers);
    Ok(OracleReport {
        final_centers: centers,
        iterations,
        converged,
        final_objective,
        objective_history: history,
    })
}

/// Batch EM for the symmetric pair: `ν ← (1/n)·Σ (2wᵢ − 1)xᵢ`.
/// The report's centers are `[ν, −ν]`.
pub fn offline_em2(
    points: &[Vec<f64>],
    init_nu: Vec<f64>,
    sigma: f64,
    weighting: Weighting,
    max_iters: usize,
    tol: f64,
) -> Result<OracleReport> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
    }
    let d = init_nu.len();
    if d == 0 {
        return Err(Error::InvalidArgument("nu must have dimension >= 1".into()));
    }
    check_points(points, d)?;
    let n = points.len() as f64;
    let pair = |nu: &[f64]| vec![nu.to_vec(), nu.iter().map(|v| -v).collect::<Vec<_>>()];
    let mut nu = init_nu;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        history.push(objective(points, &pair(&nu)));
        let mut acc = vec![0.0; d];
        for x in points {
            let w = weighting.weight(x, &nu, sigma)?;
            linalg::axpy(2.0 * w - 1.0, x, &mut acc);
        }
        let next: Vec<f64> = acc.into_iter().map(|v| v / n).collect();
        let moved = relative_movement(&[next.clone()], &[nu.clone()]);
        nu = next;
        if moved < tol || moved == 0.0 {
            converged = true;
            break;
        }
    }
    let centers = pair(&nu);
    Ok(OracleReport {
        final_objective: objective(points, &centers),
        final_centers: centers,
        iterations,
        converged,
        objective_history: history,
    })
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
}

fn key_of(seed: u64) -> [u8; 32] {
    ChaCha8Rng::seed_from_u64(seed).get_seed()
}

fn chunk_rng(key: [u8; 32], chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(chunk);
    rng
}

fn chunk_ranges(trials: usize) -> Vec<(u64, u64)> {
    let n = trials as u64;
    (0..n.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n)))
        .collect()
}

/// Runs `f` over chunks of `trials` in parallel and returns the partial
/// results in chunk order.
fn par_chunks<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64, u64) -> T + Sync,
{
    chunk_ranges(trials)
        .into_par_iter()
        .enumerate()
        .map(|(c, (lo, hi))| f(c, lo, hi))
        .collect()
}

fn check_centers(model: &MixtureModel, centers: &[Vec<f64>]) -> Result<()> {
    if centers.len() != model.k() {
        return Err(Error::DimensionMismatch {
            expected: model.k(),
            actual: centers.len(),
        });
    }
    if let Some(c) = centers.iter().find(|c| c.len() != model.d()) {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            actual: c.len(),
        });
    }
    Ok(())
}

/// Fraction of samples drawn from component `j` that lie at least as close to
/// `centers[i]` as to `centers[j]`, with its binomial standard error.
pub fn mc_misclassification(
    model: &MixtureModel,
    centers: &[Vec<f64>],
    i: usize,
    j: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_centers(model, centers)?;
    if i == j {
        return Err(Error::InvalidArgument("i and j must differ".into()));
    }
    if i >= model.k() || j >= model.k() {
        return Err(Error::InvalidArgument(format!("component index out of range for k={}", model.k())));
    }
    if trials < 10_000 {
        return Err(Error::InvalidArgument(format!("need >= 10000 trials, got {trials}")));
    }
    let key = key_of(seed);
    let (mu, sigma, d) = (&model.means()[j], model.sigma(), model.d());
    let counts = par_chunks(trials, |c, lo, hi| {
        let mut rng = chunk_rng(key, c as u64);
        let mut x = vec![0.0; d];
        let mut hits = 0u64;
        for _ in lo..hi {
            for (v, m) in x.iter_mut().zip(mu) {
                let z: f64 = rng.sample(StandardNormal);
                *v = m + sigma * z;
            }
            if linalg::sq_dist(&x, &centers[i]) <= linalg::sq_dist(&x, &centers[j]) {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.iter().sum();
    let p = hits as f64 / trials as f64;
    Ok(McEstimate {
        value: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Fixed point of population Lloyd's started at the true means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorEstimate {
    /// `‖ν̄ᵢ − μᵢ‖²` per component.
    pub per_center: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl FloorEstimate {
    pub fn max(&self) -> f64 {
        self.per_center.iter().copied().fold(0.0, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.per_center.iter().sum()
    }
}

pub const FLOOR_MAX_ITERS: usize = 100;

/// Damped (step ½) population Lloyd's iteration from the true means.
///
/// The population expectation is replaced by a fixed design: `trials`
/// noise vectors in antithetic pairs `(z, −z)`, shared by every component
/// and reused at every iteration. Reusing the design makes the iteration
/// deterministic so convergence is well defined, and the antithetic pairs
/// make the noise average exactly zero, so a model with no misassigned mass
/// returns a floor of zero rather than Monte-Carlo noise.
pub fn mc_floor(model: &MixtureModel, trials: usize, seed: u64) -> Result<FloorEstimate> {
    let (k, d, sigma) = (model.k(), model.d(), model.sigma());
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("need >= 2 trials".into()));
    }
    let pairs = trials / 2;
    let key = key_of(seed);
    let half: Vec<Vec<Vec<f64>>> = par_chunks(pairs, |c, lo, hi| {
        let mut rng = chunk_rng(key, c as u64);
        (lo..hi)
            .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect()
    });
    let noise: Vec<Vec<f64>> = half
        .into_iter()
        .flatten()
        .flat_map(|z: Vec<f64>| {
            let neg = z.iter().map(|v| -v).collect();
            [z, neg]
        })
        .collect();
    let means = model.means();
    let weights = model.weights();
    let scale = means.iter().map(|m| linalg::norm(m)).fold(sigma.max(1e-300), f64::max);
    let mut centers = means.to_vec();
    for iteration in 1..=FLOOR_MAX_ITERS {
        // per chunk: (weighted sums, weighted masses) per center
        let partial = par_chunks(noise.len(), |_, lo, hi| {
            let mut sums = vec![vec![0.0; d]; k];
            let mut mass = vec![0.0; k];
            let mut x = vec![0.0; d];
            for z in &noise[lo as usize..hi as usize] {
                for (j, mu) in means.iter().enumerate() {
                    if weights[j] == 0.0 {
                        continue;
                    }
                    for ((v, m), zi) in x.iter_mut().zip(mu).zip(z) {
                        *v = m + sigma * zi;
                    }
                    let w = assign(&x, &centers);
                    linalg::axpy(weights[j], &x, &mut sums[w]);
                    mass[w] += weights[j];
                }
            }
            (sums, mass)
        });
        let mut sums = vec![vec![0.0; d]; k];
        let mut mass = vec![0.0; k];
        for (s, m) in partial {
            for i in 0..k {
                linalg::axpy(1.0, &s[i], &mut sums[i]);
                mass[i] += m[i];
            }
        }
        let mut shift = 0.0f64;
        for i in 0..k {
            if mass[i] == 0.0 {
                return Err(Error::EmptyCluster {
                    cluster: i,
                    iteration,
                });
            }
            let target: Vec<f64> = sums[i].iter().map(|v| v / mass[i]).collect();
            for (c, t) in centers[i].iter_mut().zip(&target) {
                let next = 0.5 * *c + 0.5 * t;
                shift = shift.max((next - *c).abs());
                *c = next;
            }
        }
        if shift <= 1e-13 * scale {
            let per_center = centers
                .iter()
                .zip(means)
                .map(|(c, m)| linalg::sq_dist(c, m))
                .collect();
            return Ok(FloorEstimate {
                per_center,
                centers,
                iterations: iteration,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: FLOOR_MAX_ITERS,
    })
}

/// Expected error after one streaming hard update, with the centers held
/// fixed before the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStepReport {
    /// `‖νᵢ − μᵢ‖²` before the step.
    pub before: Vec<f64>,
    /// Monte-Carlo mean of `‖νᵢ' − μᵢ‖²` after one step.
    pub after: Vec<f64>,
    pub after_se: Vec<f64>,
}

/// One-step error probe for the hard update. `centers[i]` is compared with
/// `model.means()[i]`.
pub fn mc_one_step_error(
    model: &MixtureModel,
    centers: &[Vec<f64>],
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<OneStepReport> {
    check_centers(model, centers)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be in (0, 1], got {eta}")));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("need >= 2 trials".into()));
    }
    let k = model.k();
    let means = model.means();
    let before: Vec<f64> = centers.iter().zip(means).map(|(c, m)| linalg::sq_dist(c, m)).collect();
    let stream = SampleStream::unbounded(model, NoiseKind::Gaussian, seed);
    let partial = par_chunks(trials, |_, lo, hi| {
        let mut s1 = vec![0.0; k];
        let mut s2 = vec![0.0; k];
        for idx in lo..hi {
            let x = stream.sample_at(idx).point;
            let w = assign(&x, centers);
            for i in 0..k {
                let e = if i == w {
                    centers[i]
                        .iter()
                        .zip(&x)
                        .zip(&means[i])
                        .map(|((c, xi), m)| (c + eta * (xi - c) - m).powi(2))
                        .sum()
                } else {
                    before[i]
                };
                s1[i] += e;
                s2[i] += e * e;
            }
        }
        (s1, s2)
    });
    let mut s1 = vec![0.0; k];
    let mut s2 = vec![0.0; k];
    for (a, b) in partial {
        for i in 0..k {
            s1[i] += a[i];
            s2[i] += b[i];
        }
    }
    let n = trials as f64;
    let after: Vec<f64> = s1.iter().map(|s| s / n).collect();
    let after_se = (0..k)
        .map(|i| {
            let var = (s2[i] / n - after[i] * after[i]).max(0.0) * n / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(OneStepReport {
        before,
        after,
        after_se,
    })
}

/// Fraction of mixture samples won by each center.
pub fn mc_selection_frequency(
    model: &MixtureModel,
    centers: &[Vec<f64>],
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_centers(model, centers)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("need >= 1 trial".into()));
    }
    let k = model.k();
    let stream = SampleStream::unbounded(model, NoiseKind::Gaussian, seed);
    let partial = par_chunks(trials, |_, lo, hi| {
        let mut wins = vec![0u64; k];
        for idx in lo..hi {
            wins[assign(&stream.sample_at(idx).point, centers)] += 1;
        }
        wins
    });
    let mut wins = vec![0u64; k];
    for p in partial {
        for i in 0..k {
            wins[i] += p[i];
        }
    }
    Ok(wins.into_iter().map(|w| w as f64 / trials as f64).collect())
}

/// Contraction coefficient of the population EM map at `nu`:
/// with `ŷ = E[(2w − 1)x]` and `Δ = ν − μ`, `γ̂ = ⟨ŷ − μ, Δ⟩ / (2‖Δ‖²)`,
/// estimated as a per-sample mean so that its standard error is available.
/// `model` must be a symmetric pair; `μ = model.means()[0]`.
pub fn mc_gamma(
    model: &MixtureModel,
    nu: &[f64],
    weighting: Weighting,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !model.is_symmetric_pair() {
        return Err(Error::InvalidModel("contraction probe needs a symmetric pair".into()));
    }
    if nu.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            actual: nu.len(),
        });
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("need >= 2 trials".into()));
    }
    let mu = &model.means()[0];
    let delta = linalg::sub(nu, mu);
    let dd = linalg::dot(&delta, &delta);
    if dd == 0.0 {
        return Err(Error::InvalidArgument("nu equals the true mean; gamma is undefined".into()));
    }
    let sigma = model.sigma();
    let stream = SampleStream::unbounded(model, NoiseKind::Gaussian, seed);
    let partial = par_chunks(trials, |_, lo, hi| {
        let (mut s1, mut s2) = (0.0, 0.0);
        for idx in lo..hi {
            let x = stream.sample_at(idx).point;
            let w = weighting.weight(&x, nu, sigma)?;
            let c = 2.0 * w - 1.0;
            let g: f64 = x
                .iter()
                .zip(mu)
                .zip(&delta)
                .map(|((xi, m), dl)| (c * xi - m) * dl)
                .sum::<f64>()
                / (2.0 * dd);
            s1 += g;
            s2 += g * g;
        }
        Ok::<_, Error>((s1, s2))
    });
    let (mut s1, mut s2) = (0.0, 0.0);
    for p in partial {
        let (a, b) = p?;
        s1 += a;
        s2 += b;
    }
    let n = trials as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{make_model, Placement};

    #[test]
    fn lloyd_fixed_point_in_one_iteration() {
        let init = vec![vec![0.0, 1.0], vec![5.0, 5.0]];
        let points = vec![init[0].clone(), init[0].clone(), init[1].clone(), init[1].clone()];
        let r = offline_lloyd(&points, init.clone(), 10, DEFAULT_TOL).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(r.final_objective, 0.0);
        assert_eq!(r.final_centers, init);
    }

    #[test]
    fn lloyd_four_points() {
        let points: Vec<Vec<f64>> = [0.0, 1.0, 9.0, 10.0].iter().map(|&v| vec![v]).collect();
        let r = offline_lloyd(&points, vec![vec![0.4], vec![9.4]], 50, DEFAULT_TOL).unwrap();
        assert!(r.converged);
        assert_eq!(r.final_centers, vec![vec![0.5], vec![9.5]]);
        assert_eq!(r.final_objective, 1.0);
    }

    #[test]
    fn lloyd_empty_cluster_is_reported() {
        let points = vec![vec![0.0], vec![1.0]];
        let e = offline_lloyd(&points, vec![vec![0.0], vec![100.0]], 5, DEFAULT_TOL).unwrap_err();
        assert_eq!(e, Error::EmptyCluster { cluster: 1, iteration: 1 });
    }

    #[test]
    fn lloyd_objective_non_increasing() {
        let model = make_model(3, 4, 3.0, 1.0, Placement::SimplexScaled, 0).unwrap();
        let pts: Vec<Vec<f64>> = SampleStream::range(&model, NoiseKind::Gaussian, 5, 0, 3000)
            .map(|s| s.point)
            .collect();
        let init = vec![pts[0].clone(), pts[1].clone(), pts[2].clone()];
        let r = offline_lloyd(&pts, init, 200, DEFAULT_TOL).unwrap();
        for w in r.objective_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", w);
        }
        assert!(r.final_objective <= *r.objective_history.last().unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn em_preserves_axis_for_symmetric_data() {
        // S ∪ −S with S symmetric under reflection of the second coordinate
        let s = [[2.0, 0.5], [2.0, -0.5], [1.5, 0.7], [1.5, -0.7]];
        let points: Vec<Vec<f64>> = s
            .iter()
            .flat_map(|p| [vec![p[0], p[1]], vec![-p[0], -p[1]]])
            .collect();
        let r = offline_em2(&points, vec![1.0, 0.0], 1.0, Weighting::Posterior, 100, DEFAULT_TOL).unwrap();
        assert!(r.final_centers[0][1].abs() < 1e-15);
        assert!(r.final_centers[0][0] > 0.0);
    }

    #[test]
    fn em_saturated_step_is_sign_corrected_mean() {
        let points = vec![vec![3.0, 1.0], vec![-5.0, 1.0], vec![4.0, -2.0]];
        let sigma = 1e-3;
        let r = offline_em2(&points, vec![1.0, 0.0], sigma, Weighting::Posterior, 1, DEFAULT_TOL).unwrap();
        // ⟨x,ν⟩/σ² ≥ 3·10⁶ for every point
        let expect = [(3.0 + 5.0 + 4.0) / 3.0, (1.0 - 1.0 - 2.0) / 3.0];
        assert_eq!(r.final_centers[0], expect.to_vec());
    }

    #[test]
    fn misclassification_rejects_bad_input() {
        let model = make_model(2, 1, 4.0, 1.0, Placement::SimplexScaled, 0).unwrap();
        let c = model.means().to_vec();
        assert!(mc_misclassification(&model, &c, 0, 0, 10_000, 1).is_err());
        assert!(mc_misclassification(&model, &c, 0, 1, 9_999, 1).is_err());
    }

    #[test]
    fn misclassification_bound_with_perturbed_centers() {
        let model = make_model(2, 10, 8.0, 1.0, Placement::RandomRotated, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let centers: Vec<Vec<f64>> = model
            .means()
            .iter()
            .map(|m| {
                let u: Vec<f64> = (0..10).map(|_| rng.sample(StandardNormal)).collect();
                let n = linalg::norm(&u);
                m.iter().zip(&u).map(|(a, b)| a + b / n / 8.0).collect()
            })
            .collect();
        let est = mc_misclassification(&model, &centers, 0, 1, 100_000, 4).unwrap();
        assert!(est.value <= 3.0 * (-8.0f64).exp(), "{est:?}");
    }

    #[test]
    fn floor_vanishes_at_large_separation() {
        let model = make_model(2, 2, 12.0, 1.0, Placement::SimplexScaled, 0).unwrap();
        let f = mc_floor(&model, 20_000, 1).unwrap();
        assert!(f.max() <= 1e-8, "{f:?}");
    }

    #[test]
    fn floor_decreases_with_separation() {
        let floors: Vec<f64> = [3.0, 4.0, 5.0, 6.0]
            .iter()
            .map(|&c| {
                let model = make_model(2, 2, c, 1.0, Placement::SimplexScaled, 0).unwrap();
                mc_floor(&model, 100_000, 7).unwrap().max()
            })
            .collect();
        assert!(floors[0] > 0.0);
        for w in floors.windows(2) {
            assert!(w[1] < w[0], "{floors:?}");
        }
    }

    #[test]
    fn probes_are_thread_count_independent() {
        let model = make_model(2, 3, 4.0, 1.0, Placement::SimplexScaled, 0).unwrap();
        let nu: Vec<f64> = model.means()[0].iter().map(|v| v * 1.1).collect();
        let a = mc_gamma(&model, &nu, Weighting::Posterior, 20_000, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_gamma(&model, &nu, Weighting::Posterior, 20_000, 5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn one_step_contracts_and_selection_is_balanced() {
        let model = make_model(2, 10, 8.0, 1.0, Placement::RandomRotated, 2).unwrap();
        // each center displaced by Cσ/20 = 0.4 along a fixed direction
        let centers: Vec<Vec<f64>> = model
            .means()
            .iter()
            .map(|m| {
                let mut c = m.clone();
                c[3] += 0.4;
                c
            })
            .collect();
        let eta = crate::lloyd::eta_hard(2, 200_000).unwrap();
        let r = mc_one_step_error(&model, &centers, eta, 100_000, 8).unwrap();
        for i in 0..2 {
            assert!(r.after[i] < r.before[i], "{r:?}");
        }
        let freq = mc_selection_frequency(&model, &centers, 100_000, 8).unwrap();
        assert!(freq.iter().all(|f| *f >= 0.25), "{freq:?}");
    }
}
