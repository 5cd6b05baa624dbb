//! Seeded synthetic data from spherical Gaussian mixtures `Σ wᵢ N(μᵢ, σ²I)`,
//! plus two sub-Gaussian noise variants with matched per-coordinate variance.
//!
//! Sample `i` of a stream with seed `s` is a pure function of `(model, s, i)`:
//! the generator keys a ChaCha8 stream from `s` and selects ChaCha stream
//! number `i` for that sample, so any index range can be generated
//! independently (and on any thread). Normal variates use the ziggurat sampler
//! of `rand_distr::StandardNormal`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ColMatrix};
use crate::numfmt::fmt_f64;

/// Ground-truth parameters of a spherical mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    k: usize,
    d: usize,
    means: Vec<Vec<f64>>,
    sigma: f64,
    weights: Vec<f64>,
}

impl MixtureModel {
    pub fn new(means: Vec<Vec<f64>>, sigma: f64, weights: Vec<f64>) -> Result<Self> {
        let k = means.len();
        if k == 0 {
            return Err(Error::InvalidModel("no components".into()));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(Error::InvalidModel("dimension must be >= 1".into()));
        }
        if means.iter().any(|m| m.len() != d) {
            return Err(Error::InvalidModel("means differ in dimension".into()));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite mean".into()));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidModel(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if weights.len() != k {
            return Err(Error::InvalidModel("one weight per component required".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidModel("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            k,
            d,
            means,
            sigma,
            weights,
        })
    }

    /// Equal weights `1/k`.
    pub fn balanced(means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let k = means.len().max(1);
        Self::new(means, sigma, vec![1.0 / k as f64; k])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `C_ij = ‖μᵢ − μⱼ‖ / σ` (infinite when σ = 0 and the means differ).
    pub fn pairwise_separation(&self, i: usize, j: usize) -> f64 {
        let dist = linalg::sq_dist(&self.means[i], &self.means[j]).sqrt();
        if self.sigma == 0.0 {
            if dist == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            dist / self.sigma
        }
    }

    /// `C = min over i ≠ j of C_ij`. Infinite for a single component.
    pub fn separation(&self) -> f64 {
        let mut c = f64::INFINITY;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                c = c.min(self.pairwise_separation(i, j));
            }
        }
        c
    }

    /// Applies a row-major orthogonal matrix to every mean.
    pub fn rotated(&self, r: &[Vec<f64>]) -> Result<Self> {
        if r.len() != self.d || r.iter().any(|row| row.len() != self.d) {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: r.len(),
            });
        }
        let means = self
            .means
            .iter()
            .map(|m| r.iter().map(|row| linalg::dot(row, m)).collect())
            .collect();
        Self::new(means, self.sigma, self.weights.clone())
    }

    /// True when the model is the symmetric pair `{μ, −μ}` with equal weights.
    pub fn is_symmetric_pair(&self) -> bool {
        self.k == 2
            && (self.weights[0] - 0.5).abs() <= 1e-12
            && self.means[0]
                .iter()
                .zip(&self.means[1])
                .all(|(a, b)| (a + b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Regular simplex with edge `Cσ`, centered at the origin. Needs `d >= k - 1`.
    SimplexScaled,
    /// The simplex placement followed by a seeded Haar-random rotation.
    RandomRotated,
    /// `(Cσ/√2)·eᵢ` for `k >= 3` (needs `d >= k`); `±(Cσ/2)·e₀` for `k = 2`.
    AxisAligned,
}

impl Placement {
    fn name(self) -> &'static str {
        match self {
            Placement::SimplexScaled => "simplex-scaled",
            Placement::RandomRotated => "random-rotated",
            Placement::AxisAligned => "axis-aligned",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplex-scaled" | "simplex" => Ok(Placement::SimplexScaled),
            "random-rotated" | "rotated" => Ok(Placement::RandomRotated),
            "axis-aligned" | "axis" => Ok(Placement::AxisAligned),
            other => Err(Error::InvalidArgument(format!("unknown placement '{other}'"))),
        }
    }
}

/// Builds a balanced model whose minimum separation is `c_target`.
///
/// Every placement puts all pairs at exactly `c_target·σ` apart, so the
/// minimizing pair attains the target. With `sigma = 0` the geometry is laid
/// out at unit scale instead.
pub fn make_model(
    k: usize,
    d: usize,
    c_target: f64,
    sigma: f64,
    placement: Placement,
    seed: u64,
) -> Result<MixtureModel> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    if d < 1 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    if !(c_target > 0.0) || !c_target.is_finite() {
        return Err(Error::InvalidArgument(format!("C must be > 0, got {c_target}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
    }
    let scale = c_target * if sigma > 0.0 { sigma } else { 1.0 };
    let means = match placement {
        Placement::SimplexScaled | Placement::RandomRotated => {
            if d + 1 < k {
                return Err(Error::DimensionTooSmall {
                    placement: placement.name(),
                    required: k - 1,
                    d,
                });
            }
            let base = simplex_vertices(k, d, scale);
            if placement == Placement::RandomRotated {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r = random_orthogonal(d, &mut rng);
                base.iter()
                    .map(|m| r.iter().map(|row| linalg::dot(row, m)).collect())
                    .collect()
            } else {
                base
            }
        }
        Placement::AxisAligned => {
            if k == 2 {
                let mut a = vec![0.0; d];
                a[0] = -scale / 2.0;
                let b = a.iter().map(|v| -v).collect();
                vec![a, b]
            } else {
                if d < k {
                    return Err(Error::DimensionTooSmall {
                        placement: placement.name(),
                        required: k,
                        d,
                    });
                }
                let a = scale / std::f64::consts::SQRT_2;
                (0..k)
                    .map(|i| {
                        let mut m = vec![0.0; d];
                        m[i] = a;
                        m
                    })
                    .collect()
            }
        }
    };
    MixtureModel::balanced(means, sigma)
}

/// Vertices of a regular simplex with the given edge length, embedded in the
/// first `k - 1` coordinates. Uses columns of the Helmert contrast matrix,
/// which are pairwise `√2` apart and sum to zero.
fn simplex_vertices(k: usize, d: usize, edge: f64) -> Vec<Vec<f64>> {
    let a = edge / std::f64::consts::SQRT_2;
    let mut verts = vec![vec![0.0; d]; k];
    // Helmert row r (1-based, r = 1..k-1): entries 1/sqrt(r(r+1)) for the
    // first r columns, -r/sqrt(r(r+1)) at column r, zero after.
    for r in 1..k {
        let h = 1.0 / ((r * (r + 1)) as f64).sqrt();
        for (i, v) in verts.iter_mut().enumerate() {
            let entry = match i.cmp(&r) {
                std::cmp::Ordering::Less => h,
                std::cmp::Ordering::Equal => -(r as f64) * h,
                std::cmp::Ordering::Greater => 0.0,
            };
            v[r - 1] = a * entry;
        }
    }
    // Canonical sign: k = 2 yields {-edge/2, +edge/2} on e0.
    if k == 2 {
        verts.swap(0, 1);
    }
    verts
}

/// Haar-distributed orthogonal matrix (row-major) from the QR of a Gaussian
/// matrix with the `diag(R) >= 0` convention.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    loop {
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let m = ColMatrix::from_columns(cols).expect("square");
        if let Ok(q) = linalg::qr_orthonormalize(&m) {
            return (0..d).map(|i| (0..d).map(|j| q.get(i, j)).collect()).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Gaussian,
    /// Uniform on the ball of radius `σ√(d+2)` (per-coordinate variance σ²).
    UniformBall,
    /// Independent `±σ` coordinates.
    RademacherScaled,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "uniform-ball" => Ok(NoiseKind::UniformBall),
            "rademacher-scaled" => Ok(NoiseKind::RademacherScaled),
            other => Err(Error::InvalidArgument(format!("unknown noise kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub point: Vec<f64>,
    pub label: usize,
}

/// Pull-based stream of labeled samples.
#[derive(Debug, Clone)]
pub struct SampleStream {
    model: MixtureModel,
    noise: NoiseKind,
    key: [u8; 32],
    seed: u64,
    next_index: u64,
    end: Option<u64>,
}

impl SampleStream {
    /// Endless stream starting at sample index 0.
    pub fn unbounded(model: &MixtureModel, noise: NoiseKind, seed: u64) -> Self {
        Self {
            model: model.clone(),
            noise,
            key: ChaCha8Rng::seed_from_u64(seed).get_seed(),
            seed,
            next_index: 0,
            end: None,
        }
    }

    /// Samples `[start, end)` of the stream with this seed.
    pub fn range(model: &MixtureModel, noise: NoiseKind, seed: u64, start: u64, end: u64) -> Self {
        let mut s = Self::unbounded(model, noise, seed);
        s.next_index = start;
        s.end = Some(end);
        s
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the next sample to be produced.
    pub fn position(&self) -> u64 {
        self.next_index
    }

    /// Generates sample `index` without advancing the stream.
    pub fn sample_at(&self, index: u64) -> LabeledSample {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        let label = pick_label(self.model.weights(), rng.random::<f64>());
        let mut point = self.model.means[label].clone();
        let sigma = self.model.sigma;
        let d = self.model.d;
        match self.noise {
            NoiseKind::Gaussian => {
                for v in point.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += sigma * z;
                }
            }
            NoiseKind::UniformBall => {
                let mut z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = linalg::norm(&z);
                let u: f64 = rng.random();
                let radius = sigma * ((d + 2) as f64).sqrt() * u.powf(1.0 / d as f64);
                if n > 0.0 {
                    z.iter_mut().for_each(|v| *v *= radius / n);
                }
                linalg::axpy(1.0, &z, &mut point);
            }
            NoiseKind::RademacherScaled => {
                for v in point.iter_mut() {
                    *v += if rng.random::<bool>() { sigma } else { -sigma };
                }
            }
        }
        LabeledSample { point, label }
    }

    /// Label-stripping adapter: the view algorithms are allowed to consume.
    pub fn points(self) -> Points<Self> {
        Points { inner: self }
    }
}

fn pick_label(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack above the last cumulative weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

impl Iterator for SampleStream {
    type Item = LabeledSample;

    fn next(&mut self) -> Option<LabeledSample> {
        if self.end.is_some_and(|e| self.next_index >= e) {
            return None;
        }
        let s = self.sample_at(self.next_index);
        self.next_index += 1;
        Some(s)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self.end {
            Some(e) => {
                let n = e.saturating_sub(self.next_index) as usize;
                (n, Some(n))
            }
            None => (usize::MAX, None),
        }
    }
}

/// `n` Gaussian samples from `model`.
pub fn sample_stream(model: &MixtureModel, n: usize, seed: u64) -> Result<SampleStream> {
    sample_subgaussian_stream(model, n, NoiseKind::Gaussian, seed)
}

pub fn sample_subgaussian_stream(
    model: &MixtureModel,
    n: usize,
    noise: NoiseKind,
    seed: u64,
) -> Result<SampleStream> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    Ok(SampleStream::range(model, noise, seed, 0, n as u64))
}

/// Drops labels from a labeled stream.
#[derive(Debug, Clone)]
pub struct Points<I> {
    inner: I,
}

impl<I> Points<I> {
    pub fn get_ref(&self) -> &I {
        &self.inner
    }
}

impl<I: Iterator<Item = LabeledSample>> Iterator for Points<I> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        self.inner.next().map(|s| s.point)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

/// Header of the stream dump format: `# d=<d> k=<k> sigma=<σ> seed=<seed>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub d: usize,
    pub k: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// Writes samples as comma-separated coordinates, optionally followed by a
/// label column.
pub fn write_dump<W: Write, I: IntoIterator<Item = LabeledSample>>(
    mut out: W,
    header: DumpHeader,
    samples: I,
    with_labels: bool,
) -> Result<usize> {
    writeln!(
        out,
        "# d={} k={} sigma={} seed={}",
        header.d,
        header.k,
        fmt_f64(header.sigma),
        header.seed
    )?;
    let mut n = 0;
    let mut line = String::new();
    for s in samples {
        line.clear();
        for (i, v) in s.point.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_f64(*v));
        }
        if with_labels {
            line.push(',');
            line.push_str(&s.label.to_string());
        }
        writeln!(out, "{line}")?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

/// Reads a dump. Rows with `d + 1` columns carry a label; rows with `d`
/// columns come back with label `usize::MAX`.
pub fn read_dump<R: BufRead>(input: R) -> Result<(DumpHeader, Vec<LabeledSample>)> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dump".into()))??;
    let header = parse_header(&first)?;
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
        };
        let (coords, label) = if fields.len() == header.d + 1 {
            let label = fields[header.d]
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("line {}: label: {e}", lineno + 2)))?;
            (&fields[..header.d], label)
        } else if fields.len() == header.d {
            (&fields[..], usize::MAX)
        } else {
            return Err(Error::Parse(format!(
                "line {}: expected {} or {} columns, got {}",
                lineno + 2,
                header.d,
                header.d + 1,
                fields.len()
            )));
        };
        let point = coords.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
        samples.push(LabeledSample { point, label });
    }
    Ok((header, samples))
}

fn parse_header(line: &str) -> Result<DumpHeader> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("missing '#' header".into()))?;
    let mut d = None;
    let mut k = None;
    let mut sigma = None;
    let mut seed = None;
    for tok in body.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token '{tok}'")))?;
        let bad = |e: &dyn fmt::Display| Error::Parse(format!("header {key}: {e}"));
        match key {
            "d" => d = Some(val.parse::<usize>().map_err(|e| bad(&e))?),
            "k" => k = Some(val.parse::<usize>().map_err(|e| bad(&e))?),
            "sigma" => sigma = Some(val.parse::<f64>().map_err(|e| bad(&e))?),
            "seed" => seed = Some(val.parse::<u64>().map_err(|e| bad(&e))?),
            _ => {}
        }
    }
    match (d, k, sigma, seed) {
        (Some(d), Some(k), Some(sigma), Some(seed)) => Ok(DumpHeader { d, k, sigma, seed }),
        _ => Err(Error::Parse(format!("incomplete header '{line}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_one_dimensional_pair() {
        let m = make_model(2, 1, 4.0, 1.0, Placement::AxisAligned, 0).unwrap();
        assert_eq!(m.means(), &[vec![-2.0], vec![2.0]]);
        assert_eq!(m.separation(), 4.0);
        assert!(m.is_symmetric_pair());
    }

    #[test]
    fn axis_aligned_three_components() {
        let m = make_model(3, 3, 6.0, 2.0, Placement::AxisAligned, 0).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let dist = linalg::sq_dist(&m.means()[i], &m.means()[j]).sqrt();
                assert!((dist - 12.0).abs() < 1e-12);
            }
        }
        assert!((m.separation() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_needs_room() {
        let err = make_model(4, 2, 5.0, 1.0, Placement::SimplexScaled, 0).unwrap_err();
        assert!(matches!(err, Error::DimensionTooSmall { required: 3, d: 2, .. }));
        let err = make_model(4, 3, 5.0, 1.0, Placement::AxisAligned, 0).unwrap_err();
        assert!(matches!(err, Error::DimensionTooSmall { required: 4, .. }));
    }

    #[test]
    fn simplex_is_regular_and_centered() {
        for k in 2..7 {
            let m = make_model(k, k - 1, 3.5, 0.5, Placement::SimplexScaled, 0).unwrap();
            for i in 0..k {
                for j in (i + 1)..k {
                    assert!((m.pairwise_separation(i, j) - 3.5).abs() < 1e-12);
                }
            }
            let mut centroid = vec![0.0; k - 1];
            for mu in m.means() {
                linalg::axpy(1.0, mu, &mut centroid);
            }
            assert!(linalg::norm(&centroid) < 1e-12);
        }
    }

    #[test]
    fn rotated_placement_keeps_separation() {
        let m = make_model(4, 9, 7.0, 1.5, Placement::RandomRotated, 3).unwrap();
        assert!((m.separation() - 7.0).abs() < 1e-10);
        let again = make_model(4, 9, 7.0, 1.5, Placement::RandomRotated, 3).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn model_validation() {
        assert!(MixtureModel::new(vec![vec![0.0], vec![1.0]], 1.0, vec![0.5, 0.6]).is_err());
        assert!(MixtureModel::new(vec![vec![0.0], vec![1.0, 2.0]], 1.0, vec![0.5, 0.5]).is_err());
        assert!(MixtureModel::new(vec![vec![0.0], vec![1.0]], -1.0, vec![0.5, 0.5]).is_err());
        assert!(MixtureModel::new(vec![vec![0.0], vec![1.0]], 1.0, vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn zero_noise_points_are_means() {
        let m = MixtureModel::balanced(vec![vec![1.0, 2.0], vec![-3.0, 0.5]], 0.0).unwrap();
        for s in sample_stream(&m, 200, 9).unwrap() {
            assert_eq!(s.point, m.means()[s.label]);
        }
    }

    #[test]
    fn rademacher_support() {
        let m = MixtureModel::balanced(vec![vec![0.0; 4], vec![10.0; 4]], 2.0).unwrap();
        for s in sample_subgaussian_stream(&m, 500, NoiseKind::RademacherScaled, 1).unwrap() {
            for (x, mu) in s.point.iter().zip(&m.means()[s.label]) {
                assert!((x - mu).abs() == 2.0);
            }
        }
    }

    #[test]
    fn gaussian_kind_matches_default_stream() {
        let m = make_model(3, 4, 5.0, 1.0, Placement::SimplexScaled, 0).unwrap();
        let a: Vec<_> = sample_stream(&m, 100, 5).unwrap().collect();
        let b: Vec<_> = sample_subgaussian_stream(&m, 100, NoiseKind::Gaussian, 5)
            .unwrap()
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn ranges_partition_the_stream() {
        let m = make_model(2, 3, 4.0, 1.0, Placement::SimplexScaled, 0).unwrap();
        let whole: Vec<_> = sample_stream(&m, 50, 77).unwrap().collect();
        let mut parts: Vec<_> = SampleStream::range(&m, NoiseKind::Gaussian, 77, 0, 20).collect();
        parts.extend(SampleStream::range(&m, NoiseKind::Gaussian, 77, 20, 50));
        assert_eq!(whole, parts);
    }

    #[test]
    fn dump_round_trip() {
        let m = make_model(2, 3, 4.0, 1.0, Placement::SimplexScaled, 0).unwrap();
        let samples: Vec<_> = sample_stream(&m, 25, 3).unwrap().collect();
        let header = DumpHeader {
            d: 3,
            k: 2,
            sigma: 1.0,
            seed: 3,
        };
        let mut buf = Vec::new();
        write_dump(&mut buf, header, samples.clone(), true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# d=3 k=2 sigma="));
        let (h, back) = read_dump(&buf[..]).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, samples);

        let mut unlabeled = Vec::new();
        write_dump(&mut unlabeled, header, samples.clone(), false).unwrap();
        let (_, back) = read_dump(&unlabeled[..]).unwrap();
        assert_eq!(back[0].point, samples[0].point);
        assert_eq!(back[0].label, usize::MAX);
    }

    #[test]
    fn empty_stream_rejected() {
        let m = make_model(2, 1, 4.0, 1.0, Placement::AxisAligned, 0).unwrap();
        assert!(sample_stream(&m, 0, 0).is_err());
        assert!("cauchy".parse::<NoiseKind>().is_err());
    }
}
