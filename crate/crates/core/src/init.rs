//! Seeding: block power-method PCA over the first part of the stream, then
//! threshold-graph clustering of a small retained sample in the projected
//! space, lifted back through the basis.
//!
//! The power method never materializes the d × d second-moment matrix. Within
//! a block it accumulates `W = Σ x (xᵀU)`, which equals `S·U` for
//! `S = Σ x xᵀ`, so memory stays at O(d·k).

use petgraph::unionfind::UnionFind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ColMatrix};

/// `max(8, ceil(d·ln d))`.
pub fn default_block_size(d: usize) -> usize {
    let b = (d as f64 * (d as f64).ln()).ceil();
    (b.max(0.0) as usize).max(8)
}

/// `max(50, ceil(10·k·ln k))`.
pub fn default_retained_count(k: usize) -> usize {
    let m = (10.0 * k as f64 * (k as f64).ln()).ceil();
    (m.max(0.0) as usize).max(50)
}

/// Orthonormal d × k basis maintained by the block power method.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    u: ColMatrix,
    blocks_consumed: usize,
}

impl ProjectionBasis {
    pub fn u(&self) -> &ColMatrix {
        &self.u
    }

    pub fn blocks_consumed(&self) -> usize {
        self.blocks_consumed
    }

    pub fn d(&self) -> usize {
        self.u.nrows()
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    /// `Uᵀx`
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.u.t_mul_vec(x)
    }

    /// `U y`
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        self.u.mul_vec(y)
    }

    /// `‖(I − UUᵀ)x‖`
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        linalg::norm(&self.u.residual(x))
    }
}

/// Incremental block power method.
#[derive(Debug, Clone)]
pub struct StreamingPca {
    basis: ColMatrix,
    acc: ColMatrix,
    block_size: usize,
    in_block: usize,
    blocks: usize,
}

impl StreamingPca {
    /// Starts from a seeded Gaussian d × k matrix, orthonormalized.
    pub fn new(d: usize, k: usize, block_size: usize, seed: u64) -> Result<Self> {
        if k == 0 || d < k {
            return Err(Error::InvalidArgument(format!(
                "basis needs 1 <= k <= d, got d = {d}, k = {k}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let cols = (0..k)
                .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            let m = ColMatrix::from_columns(cols)?;
            if let Ok(u) = linalg::qr_orthonormalize(&m) {
                return Self::with_basis(u, block_size);
            }
        }
    }

    /// Starts from a caller-provided orthonormal basis.
    pub fn with_basis(basis: ColMatrix, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidArgument("block size must be >= 1".into()));
        }
        if basis.orthonormality_defect() > 1e-10 {
            return Err(Error::InvalidArgument("initial basis is not orthonormal".into()));
        }
        let acc = ColMatrix::zeros(basis.nrows(), basis.ncols());
        Ok(Self {
            basis,
            acc,
            block_size,
            in_block: 0,
            blocks: 0,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn blocks_consumed(&self) -> usize {
        self.blocks
    }

    pub fn basis(&self) -> &ColMatrix {
        &self.basis
    }

    /// Accumulates one sample; closes the block with `U ← QR(S·U)` when full.
    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.basis.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.nrows(),
                actual: x.len(),
            });
        }
        for j in 0..self.basis.ncols() {
            let c = linalg::dot(self.basis.col(j), x);
            linalg::axpy(c, x, self.acc.col_mut(j));
        }
        self.in_block += 1;
        if self.in_block == self.block_size {
            // A block whose data spans fewer than k directions leaves some
            // columns of S·U at zero; those are completed rather than rejected.
            self.basis = linalg::qr_orthonormalize_completing(&self.acc).map_err(|_| {
                Error::DegenerateInput(format!("block {} has S·U = 0", self.blocks))
            })?;
            self.acc.fill_zero();
            self.in_block = 0;
            self.blocks += 1;
        }
        Ok(())
    }

    /// Returns the basis; samples of a trailing partial block are discarded.
    pub fn finish(self) -> ProjectionBasis {
        ProjectionBasis {
            u: self.basis,
            blocks_consumed: self.blocks,
        }
    }
}

/// Runs the block power method over exactly `num_samples` stream items.
pub fn streaming_pca<I>(
    stream: &mut I,
    d: usize,
    k: usize,
    block_size: usize,
    num_samples: usize,
    seed: u64,
) -> Result<ProjectionBasis>
where
    I: Iterator<Item = Vec<f64>>,
{
    let pca = StreamingPca::new(d, k, block_size, seed)?;
    drive_pca(stream, pca, num_samples)
}

fn drive_pca<I>(stream: &mut I, mut pca: StreamingPca, num_samples: usize) -> Result<ProjectionBasis>
where
    I: Iterator<Item = Vec<f64>>,
{
    if num_samples < pca.block_size() {
        return Err(Error::InsufficientData {
            needed: pca.block_size(),
            available: num_samples,
        });
    }
    for consumed in 0..num_samples {
        let x = stream.next().ok_or(Error::StreamExhausted {
            consumed,
            requested: num_samples,
        })?;
        pca.push(&x)?;
    }
    Ok(pca.finish())
}

/// Partitions points into `k` groups from the connected components of a
/// threshold graph.
///
/// Edge `(a, b)` is present iff `‖pₐ − p_b‖² ≤ θ`. The threshold sits at the
/// largest multiplicative gap between consecutive single-linkage merge
/// heights (the sorted minimum-spanning-tree edge weights over squared
/// distances), among the cuts that leave between `k` and `m/2` components.
/// Components smaller than `max(2, ⌈m/4k⌉)` are treated as outliers: the cut
/// succeeds iff exactly `k` components reach that size, and outlying points
/// join the group with the nearest mean. Labels are numbered by first
/// appearance.
pub fn nn_graph_cluster(points: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    let m = points.len();
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    if m < 2 * k {
        return Err(Error::InsufficientData {
            needed: 2 * k,
            available: m,
        });
    }
    let dist = pairwise_sq_distances(points);
    let mut heights = mst_edge_weights(&dist, m);
    heights.sort_by(f64::total_cmp);

    // keeping heights[..=j] leaves m - 1 - j components
    let lo = (m - 1).saturating_sub(m / 2).min(m - 1 - k);
    let hi = m - 1 - k;
    let mut best: Option<(f64, usize)> = None;
    for j in lo..=hi {
        let (a, b) = (heights[j], heights[j + 1]);
        let ratio = if b <= a {
            1.0
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            b / a
        };
        if ratio > 1.0 && best.is_none_or(|(r, _)| ratio >= r) {
            best = Some((ratio, j));
        }
    }
    let (_, j) = best.ok_or_else(|| {
        Error::InitFailure("no distance gap: cannot form k >= 2 components".into())
    })?;
    let (a, b) = (heights[j], heights[j + 1]);
    let theta = if a > 0.0 { (a * b).sqrt() } else { b / 2.0 };

    let mut uf = UnionFind::<usize>::new(m);
    for i in 0..m {
        for jj in (i + 1)..m {
            if dist[i * m + jj] <= theta {
                uf.union(i, jj);
            }
        }
    }
    let roots: Vec<usize> = (0..m).map(|i| uf.find(i)).collect();
    let mut size_of = std::collections::HashMap::new();
    for &r in &roots {
        *size_of.entry(r).or_insert(0usize) += 1;
    }
    let min_size = m.div_ceil(4 * k).max(2);
    let mut root_label = std::collections::HashMap::new();
    for &r in &roots {
        if size_of[&r] >= min_size && !root_label.contains_key(&r) {
            root_label.insert(r, root_label.len());
        }
    }
    let found = root_label.len();
    if found != k {
        return Err(Error::InitFailure(format!(
            "threshold graph has {found} components of >= {min_size} points ({} in all), expected {k}",
            size_of.len()
        )));
    }
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, r) in points.iter().zip(&roots) {
        if let Some(&l) = root_label.get(r) {
            linalg::axpy(1.0, p, &mut sums[l]);
            counts[l] += 1;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| s.into_iter().map(|v| v / c as f64).collect())
        .collect();
    let labels = points
        .iter()
        .zip(&roots)
        .map(|(p, r)| match root_label.get(r) {
            Some(&l) => l,
            None => crate::lloyd::assign(p, &means),
        })
        .collect();
    Ok(labels)
}

fn pairwise_sq_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let m = points.len();
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let v = linalg::sq_dist(&points[i], &points[j]);
            dist[i * m + j] = v;
            dist[j * m + i] = v;
        }
    }
    dist
}

/// Dense Prim's algorithm; returns the m − 1 tree edge weights.
fn mst_edge_weights(dist: &[f64], m: usize) -> Vec<f64> {
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut weights = Vec::with_capacity(m.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        for v in 0..m {
            if !in_tree[v] {
                best[v] = best[v].min(dist[current * m + v]);
            }
        }
        let (next, w) = (0..m)
            .filter(|&v| !in_tree[v])
            .map(|v| (v, best[v]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("vertices remain");
        in_tree[next] = true;
        weights.push(w);
        current = next;
    }
    weights
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitConfig {
    /// Power-method block size; defaults to [`default_block_size`].
    pub block_size: Option<usize>,
    /// Points kept for clustering; defaults to [`default_retained_count`].
    pub retained_count: Option<usize>,
    /// Extra clustering attempts, each on the next `retained_count` samples.
    pub max_init_retries: usize,
    /// Seed of the random starting basis.
    pub basis_seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            block_size: None,
            retained_count: None,
            max_init_retries: 3,
            basis_seed: 0,
        }
    }
}

/// Initial centers and bookkeeping from [`init_alg`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitResult {
    /// Row-major: one center per row.
    pub centers: Vec<Vec<f64>>,
    pub cluster_sizes: Vec<usize>,
    pub samples_consumed: usize,
    pub retained_count: usize,
    pub attempts: usize,
    /// Noise-scale estimate from the retained points' residuals outside the
    /// basis; `None` when `d <= k`.
    pub sigma_estimate: Option<f64>,
}

impl InitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Full seeding procedure over `n0` stream samples.
///
/// The first `n0 − m` samples feed the power method, the last `m` are
/// projected and clustered. On clustering failure the next `m` samples are
/// tried, up to `config.max_init_retries` times.
pub fn init_alg<I>(
    stream: &mut I,
    d: usize,
    k: usize,
    n0: usize,
    config: &InitConfig,
) -> Result<(InitResult, ProjectionBasis)>
where
    I: Iterator<Item = Vec<f64>>,
{
    let block = config.block_size.unwrap_or_else(|| default_block_size(d));
    let pca = StreamingPca::new(d, k, block, config.basis_seed)?;
    init_alg_from(stream, pca, n0, config)
}

/// [`init_alg`] with an explicit starting power-method state.
pub fn init_alg_from<I>(
    stream: &mut I,
    pca: StreamingPca,
    n0: usize,
    config: &InitConfig,
) -> Result<(InitResult, ProjectionBasis)>
where
    I: Iterator<Item = Vec<f64>>,
{
    let k = pca.basis().ncols();
    let m = config.retained_count.unwrap_or_else(|| default_retained_count(k));
    let block = pca.block_size();
    if n0 < m + block {
        return Err(Error::InsufficientData {
            needed: m + block,
            available: n0,
        });
    }
    let basis = drive_pca(stream, pca, n0 - m)?;
    let mut consumed = n0 - m;
    let mut attempts = 0;
    let mut last_err = None;
    while attempts <= config.max_init_retries {
        attempts += 1;
        let mut retained = Vec::with_capacity(m);
        for _ in 0..m {
            let x = stream.next().ok_or(Error::StreamExhausted {
                consumed,
                requested: consumed + m,
            })?;
            consumed += 1;
            retained.push(x);
        }
        let projected: Vec<Vec<f64>> = retained.iter().map(|x| basis.project(x)).collect();
        match nn_graph_cluster(&projected, k) {
            Ok(labels) => {
                let mut sums = vec![vec![0.0; k]; k];
                let mut sizes = vec![0usize; k];
                for (p, &l) in projected.iter().zip(&labels) {
                    linalg::axpy(1.0, p, &mut sums[l]);
                    sizes[l] += 1;
                }
                let centers = sums
                    .iter()
                    .zip(&sizes)
                    .map(|(s, &n)| {
                        let mean: Vec<f64> = s.iter().map(|v| v / n as f64).collect();
                        basis.lift(&mean)
                    })
                    .collect();
                let sigma_estimate = estimate_sigma(&retained, &basis);
                let result = InitResult {
                    centers,
                    cluster_sizes: sizes,
                    samples_consumed: consumed,
                    retained_count: m,
                    attempts,
                    sigma_estimate,
                };
                return Ok((result, basis));
            }
            Err(e @ Error::InitFailure(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::InitFailure("no attempt made".into())))
}

/// `σ̂² = median ‖(I − UUᵀ)x‖² / (d − k)` over at most 200 points, divided by
/// the Wilson-Hilferty median factor `(1 − 2/(9ν))³` of a `χ²_ν/ν` variable
/// with `ν = d − k`, so that pure Gaussian residuals give an unbiased median.
pub fn estimate_sigma(points: &[Vec<f64>], basis: &ProjectionBasis) -> Option<f64> {
    let (d, k) = (basis.d(), basis.k());
    if d <= k || points.is_empty() {
        return None;
    }
    let nu = (d - k) as f64;
    let mut r: Vec<f64> = points
        .iter()
        .take(200)
        .map(|x| {
            let n = basis.residual_norm(x);
            n * n / nu
        })
        .collect();
    r.sort_by(f64::total_cmp);
    let mid = r.len() / 2;
    let median = if r.len() % 2 == 1 {
        r[mid]
    } else {
        0.5 * (r[mid - 1] + r[mid])
    };
    let wh = (1.0 - 2.0 / (9.0 * nu)).powi(3);
    Some((median / wh).sqrt())
}
