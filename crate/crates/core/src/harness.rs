//! Configured experiments: single runs, parameter sweeps, paired hard/soft
//! comparisons, seeding checks and floor probes.
//!
//! Every random quantity of a run derives from `RunConfig::seed` through a
//! fixed tag (model orientation, stream, power-method start, perturbation),
//! so `(config, seed)` determines all outputs. Sweep repeat `r` uses seed
//! `base_seed + r` at every swept value, which pairs the cells of different
//! values on common streams.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::em::{eta_soft, run_soft, SymmetricPairEstimate, Weighting};
use crate::error::{Error, Result};
use crate::init::{default_block_size, default_retained_count, init_alg, InitConfig};
use crate::linalg;
use crate::lloyd::{eta_hard, run, CenterEstimates};
use crate::metrics::{errors_under, fit_rate, matched_error, mean_and_se, ErrorTrace, RateFit, Tracker};
use crate::mixture::{make_model, read_dump, write_dump, DumpHeader, MixtureModel, NoiseKind, Placement, SampleStream};
use crate::numfmt::{fmt_f64, to_json};
use crate::oracle::{mc_floor, offline_lloyd, FloorEstimate, DEFAULT_TOL};

const TAG_MODEL: u64 = 1;
const TAG_STREAM: u64 = 2;
const TAG_BASIS: u64 = 3;
const TAG_PERTURB: u64 = 4;

/// Deterministic per-purpose seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    Hard,
    Soft,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Hard => "hard",
            Algorithm::Soft => "soft",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Algorithm::Hard),
            "soft" => Ok(Algorithm::Soft),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// How the streaming engine is started.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitMode {
    /// Power-method seeding on the first `N0` samples.
    #[default]
    InitAlg,
    TrueMeans,
    /// `μᵢ + δ·σ·uᵢ` with `uᵢ` uniform on the unit sphere.
    Perturbed(f64),
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitMode::InitAlg => f.write_str("initalg"),
            InitMode::TrueMeans => f.write_str("true-means"),
            InitMode::Perturbed(delta) => write!(f, "perturbed:{delta}"),
        }
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "initalg" => Ok(InitMode::InitAlg),
            "true-means" => Ok(InitMode::TrueMeans),
            _ => {
                let delta = s
                    .strip_prefix("perturbed:")
                    .or_else(|| s.strip_prefix("perturbed(").and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(|| Error::Config(format!("unknown init mode '{s}'")))?;
                let delta: f64 = delta
                    .parse()
                    .map_err(|_| Error::Config(format!("bad perturbation size in '{s}'")))?;
                Ok(InitMode::Perturbed(delta))
            }
        }
    }
}

impl Serialize for InitMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InitMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One experiment. The JSON form uses these flat keys; command-line flags
/// of the same names override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub d: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Initialization budget; defaults to ten power-method blocks plus the
    /// retained points. Ignored by the shortcut init modes.
    #[serde(rename = "N0")]
    pub n0: Option<usize>,
    pub seed: u64,
    pub init: InitMode,
    pub placement: Placement,
    pub noise: NoiseKind,
    pub weighting: Weighting,
    pub block_size: Option<usize>,
    pub retained_count: Option<usize>,
    pub trace_stride: Option<u64>,
    pub max_init_retries: usize,
    /// Soft updates only: use the seeding phase's noise estimate instead of
    /// `sigma` in the weight.
    pub estimate_sigma: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Hard,
            k: 2,
            d: 10,
            c: 8.0,
            sigma: 1.0,
            n: 100_000,
            n0: None,
            seed: 0,
            init: InitMode::InitAlg,
            placement: Placement::RandomRotated,
            noise: NoiseKind::Gaussian,
            weighting: Weighting::Posterior,
            block_size: None,
            retained_count: None,
            trace_stride: None,
            max_init_retries: 3,
            estimate_sigma: false,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn block_size(&self) -> usize {
        self.block_size.unwrap_or_else(|| default_block_size(self.d))
    }

    pub fn retained_count(&self) -> usize {
        self.retained_count.unwrap_or_else(|| default_retained_count(self.k))
    }

    /// Configured or default `N0`.
    pub fn n0(&self) -> usize {
        self.n0.unwrap_or_else(|| 10 * self.block_size() + self.retained_count())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k < 2 {
            return bad(format!("k must be >= 2, got {}", self.k));
        }
        if self.d < 1 {
            return bad("d must be >= 1".into());
        }
        if self.algorithm == Algorithm::Soft && self.k != 2 {
            return bad("soft requires k=2".into());
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return bad(format!("C must be > 0, got {}", self.c));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if self.n < 1 {
            return bad("N must be >= 1".into());
        }
        if self.n0 == Some(0) {
            return bad("N0 must be >= 1".into());
        }
        if let InitMode::Perturbed(delta) = self.init {
            if !(delta >= 0.0) || !delta.is_finite() {
                return bad(format!("perturbation must be >= 0, got {delta}"));
            }
        }
        if self.block_size == Some(0) || self.retained_count == Some(0) || self.trace_stride == Some(0) {
            return bad("block_size, retained_count and trace_stride must be >= 1".into());
        }
        if self.init == InitMode::InitAlg {
            let need = self.block_size() + self.retained_count();
            if self.n0() < need {
                return bad(format!("N0 = {} is below B + m = {need}", self.n0()));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<MixtureModel> {
        make_model(
            self.k,
            self.d,
            self.c,
            self.sigma,
            self.placement,
            derive_seed(self.seed, TAG_MODEL),
        )
    }

    pub fn stream_seed(&self) -> u64 {
        derive_seed(self.seed, TAG_STREAM)
    }

    pub fn learning_rate(&self) -> Result<f64> {
        match self.algorithm {
            Algorithm::Hard => eta_hard(self.k, self.n),
            Algorithm::Soft => eta_soft(self.n),
        }
    }
}

/// `μᵢ + δ·σ·uᵢ`, `uᵢ` uniform on the sphere.
pub fn perturbed_means(model: &MixtureModel, delta: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = delta * model.sigma();
    model
        .means()
        .iter()
        .map(|m| {
            let u: Vec<f64> = (0..model.d()).map(|_| rng.sample(StandardNormal)).collect();
            let n = linalg::norm(&u);
            m.iter().zip(&u).map(|(a, b)| a + scale * b / n).collect()
        })
        .collect()
}

/// Starting centers and the samples spent finding them.
#[derive(Debug, Clone, PartialEq)]
pub struct Seeding {
    pub centers: Vec<Vec<f64>>,
    pub samples_consumed: usize,
    pub attempts: usize,
    pub sigma_estimate: Option<f64>,
}

/// Resolves the configured init mode against `stream`.
pub fn seed_centers<I>(cfg: &RunConfig, model: &MixtureModel, stream: &mut I) -> Result<Seeding>
where
    I: Iterator<Item = Vec<f64>>,
{
    match cfg.init {
        InitMode::TrueMeans => Ok(Seeding {
            centers: model.means().to_vec(),
            samples_consumed: 0,
            attempts: 0,
            sigma_estimate: None,
        }),
        InitMode::Perturbed(delta) => Ok(Seeding {
            centers: perturbed_means(model, delta, derive_seed(cfg.seed, TAG_PERTURB)),
            samples_consumed: 0,
            attempts: 0,
            sigma_estimate: None,
        }),
        InitMode::InitAlg => {
            let init_cfg = InitConfig {
                block_size: Some(cfg.block_size()),
                retained_count: Some(cfg.retained_count()),
                max_init_retries: cfg.max_init_retries,
                basis_seed: derive_seed(cfg.seed, TAG_BASIS),
            };
            let (res, _) = init_alg(stream, cfg.d, cfg.k, cfg.n0(), &init_cfg)?;
            Ok(Seeding {
                centers: res.centers,
                samples_consumed: res.samples_consumed,
                attempts: res.attempts,
                sigma_estimate: res.sigma_estimate,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub k: usize,
    pub d: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub init: InitMode,
    pub eta: f64,
    /// Sigma used in the soft weight (soft runs only).
    pub weight_sigma: Option<f64>,
    /// Permutation-matched total squared error of the final centers.
    pub final_error: f64,
    /// Per true component, under the matching frozen at t = 0.
    pub final_errors: Vec<f64>,
    /// Whether every center stayed within Cσ/10 of its mean at every step.
    pub it_flag: bool,
    pub init_error: f64,
    pub init_samples: usize,
    pub init_attempts: usize,
    pub samples_consumed: usize,
    pub final_centers: Vec<Vec<f64>>,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub trace: Option<ErrorTrace>,
}

/// Seeds, streams and reports one configured run. With `record_trace` the
/// per-step errors are kept every `trace_stride` steps.
pub fn execute(cfg: &RunConfig, record_trace: bool) -> Result<RunOutcome> {
    execute_on(cfg, record_trace, |_| {})
}

/// [`execute`] that also hands each streamed (post-seeding) point to `tap`.
pub fn execute_on<F>(cfg: &RunConfig, record_trace: bool, mut tap: F) -> Result<RunOutcome>
where
    F: FnMut(&[f64]),
{
    let started = Instant::now();
    cfg.validate()?;
    let model = cfg.model()?;
    let eta = cfg.learning_rate().map_err(|e| match e {
        Error::NTooSmall { eta, n } => Error::Config(format!("N = {n} gives learning rate {eta} >= 1")),
        other => other,
    })?;
    let mut stream = SampleStream::unbounded(&model, cfg.noise, cfg.stream_seed()).points();
    let seeding = seed_centers(cfg, &model, &mut stream)?;
    let init_samples = stream.get_ref().position() as usize;
    debug_assert_eq!(init_samples, seeding.samples_consumed);
    let truth = model.means().to_vec();
    let (init_error, _) = matched_error(&seeding.centers, &truth)?;
    let stride = cfg.trace_stride.unwrap_or_else(|| Tracker::default_stride(cfg.n));
    let mut tracker = Tracker::new(truth.clone(), cfg.c, cfg.sigma, stride, record_trace);
    let mut feed = stream.by_ref().inspect(|x| tap(x));
    let (final_centers, weight_sigma) = match cfg.algorithm {
        Algorithm::Hard => {
            let est = CenterEstimates::new(seeding.centers, eta)?;
            let est = run(&mut feed, est, cfg.n, &mut tracker)?;
            (est.centers, None)
        }
        Algorithm::Soft => {
            let sigma_w = if cfg.estimate_sigma {
                seeding.sigma_estimate.unwrap_or(cfg.sigma)
            } else {
                cfg.sigma
            };
            let nu = seeding.centers[0].clone();
            let est = SymmetricPairEstimate::new(nu, sigma_w, eta, cfg.weighting)?;
            let est = run_soft(&mut feed, est, cfg.n, &mut tracker)?;
            (est.centers(), Some(sigma_w))
        }
    };
    drop(feed);
    let samples_consumed = stream.get_ref().position() as usize;
    if samples_consumed != init_samples + cfg.n {
        return Err(Error::InvalidArgument(format!(
            "accounting: consumed {samples_consumed} samples, expected {} + {}",
            init_samples, cfg.n
        )));
    }
    let (final_error, _) = matched_error(&final_centers, &truth)?;
    let it_flag = tracker.it_holds();
    let final_errors = match tracker.perm() {
        Some(p) => errors_under(&final_centers, &truth, p),
        None => Vec::new(),
    };
    let trace = record_trace.then(|| tracker.into_trace());
    Ok(RunOutcome {
        summary: RunSummary {
            algorithm: cfg.algorithm,
            k: cfg.k,
            d: cfg.d,
            c: cfg.c,
            sigma: cfg.sigma,
            n: cfg.n,
            seed: cfg.seed,
            init: cfg.init,
            eta,
            weight_sigma,
            final_error,
            final_errors,
            it_flag,
            init_error,
            init_samples,
            init_attempts: seeding.attempts,
            samples_consumed,
            final_centers,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
        trace,
    })
}

/// Writes `trace.csv` (when present) and `summary.json` into `dir`.
pub fn write_run_artifacts(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(trace) = &outcome.trace {
        let f = fs::File::create(dir.join("trace.csv"))?;
        trace.write_csv(std::io::BufWriter::new(f))?;
    }
    fs::write(dir.join("summary.json"), to_json(&outcome.summary)? + "\n")?;
    Ok(())
}

/// Single run with artifacts written to `cfg.out_dir` when set.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let outcome = execute(cfg, true)?;
    if let Some(dir) = &cfg.out_dir {
        write_run_artifacts(dir, &outcome)?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "N")]
    N,
    #[serde(rename = "C")]
    C,
    #[serde(rename = "d")]
    D,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::N => "N",
            SweepAxis::C => "C",
            SweepAxis::D => "d",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" => Ok(SweepAxis::N),
            "C" | "c" => Ok(SweepAxis::C),
            "d" | "D" => Ok(SweepAxis::D),
            other => Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

impl SweepAxis {
    fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        let as_count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{self} must be a positive integer, got {v}")))
            }
        };
        match self {
            SweepAxis::N => cfg.n = as_count(value)?,
            SweepAxis::C => cfg.c = value,
            SweepAxis::D => cfg.d = as_count(value)?,
        }
        Ok(cfg)
    }
}

/// One `(value, repeat)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub value: f64,
    pub repeat: usize,
    pub seed: u64,
    pub outcome: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub mean_error: f64,
    pub std_error: f64,
    /// Mean over the runs whose proximity flag held to the end.
    pub conditional_mean_error: Option<f64>,
    pub it_fraction: f64,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub cells: Vec<SweepCell>,
    pub points: Vec<SweepPoint>,
    /// Power-law fit of mean error against `N` (N sweeps only, when the
    /// sweep meets the fit's preconditions).
    pub fit: Option<RateFit>,
}

/// Thread pool bounded by `STREAMIX_THREADS` when set.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("STREAMIX_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("STREAMIX_THREADS must be an integer, got '{v}'")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs `repeats` seeds at each value of `axis`. Failing cells are recorded,
/// not propagated.
pub fn cmd_sweep(base: &RunConfig, axis: SweepAxis, values: &[f64], repeats: usize) -> Result<SweepReport> {
    if values.len() < 2 {
        return Err(Error::Config(format!("sweep needs >= 2 values, got {}", values.len())));
    }
    if repeats < 1 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let configs = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..repeats).map(move |r| (v, r)))
        .collect();
    let pool = worker_pool()?;
    let cells: Vec<SweepCell> = pool.install(|| {
        jobs.par_iter()
            .map(|&(vi, r)| {
                let mut cfg = configs[vi].clone();
                cfg.seed = base.seed.wrapping_add(r as u64);
                cfg.out_dir = None;
                SweepCell {
                    value: values[vi],
                    repeat: r,
                    seed: cfg.seed,
                    outcome: execute(&cfg, false).map(|o| o.summary).map_err(|e| e.to_string()),
                }
            })
            .collect()
    });
    let points: Vec<SweepPoint> = values
        .iter()
        .enumerate()
        .map(|(vi, &value)| {
            let mine = &cells[vi * repeats..(vi + 1) * repeats];
            let ok: Vec<&RunSummary> = mine.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
            let errs: Vec<f64> = ok.iter().map(|s| s.final_error).collect();
            let cond: Vec<f64> = ok.iter().filter(|s| s.it_flag).map(|s| s.final_error).collect();
            let (mean, se) = mean_and_se(&errs);
            SweepPoint {
                value,
                mean_error: mean,
                std_error: se,
                conditional_mean_error: (!cond.is_empty()).then(|| mean_and_se(&cond).0),
                it_fraction: if ok.is_empty() { 0.0 } else { cond.len() as f64 / ok.len() as f64 },
                succeeded: ok.len(),
                failed: mine.len() - ok.len(),
            }
        })
        .collect();
    let fit = if axis == SweepAxis::N {
        let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.value, p.mean_error)).collect();
        fit_rate(&pts).ok()
    } else {
        None
    };
    Ok(SweepReport {
        axis,
        cells,
        points,
        fit,
    })
}

/// Header of the sweep CSV.
pub const SWEEP_HEADER: &str = "kind,value,repeat,seed,final_error,std_error,it_flag,conditional_error,status";

/// One parsed sweep CSV row. Summary rows leave `repeat`/`seed` empty and
/// report the fraction of runs whose flag held in `it_flag`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: String,
    pub value: f64,
    pub repeat: Option<usize>,
    pub seed: Option<u64>,
    pub final_error: Option<f64>,
    pub std_error: Option<f64>,
    pub it_flag: Option<f64>,
    pub conditional_error: Option<f64>,
    pub status: String,
}

fn opt_num(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(fmt_f64).unwrap_or_default()
}

impl SweepReport {
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for c in &self.cells {
            rows.push(match &c.outcome {
                Ok(s) => SweepRow {
                    kind: "cell".into(),
                    value: c.value,
                    repeat: Some(c.repeat),
                    seed: Some(c.seed),
                    final_error: Some(s.final_error),
                    std_error: None,
                    it_flag: Some(if s.it_flag { 1.0 } else { 0.0 }),
                    conditional_error: None,
                    status: "ok".into(),
                },
                Err(msg) => SweepRow {
                    kind: "cell".into(),
                    value: c.value,
                    repeat: Some(c.repeat),
                    seed: Some(c.seed),
                    final_error: None,
                    std_error: None,
                    it_flag: None,
                    conditional_error: None,
                    status: format!("failed: {}", msg.replace([',', '\n'], ";")),
                },
            });
        }
        for p in &self.points {
            rows.push(SweepRow {
                kind: "summary".into(),
                value: p.value,
                repeat: None,
                seed: None,
                final_error: Some(p.mean_error).filter(|v| v.is_finite()),
                std_error: Some(p.std_error).filter(|v| v.is_finite()),
                it_flag: Some(p.it_fraction),
                conditional_error: p.conditional_mean_error,
                status: if p.failed == 0 {
                    "ok".into()
                } else {
                    format!("failed {} of {}", p.failed, p.failed + p.succeeded)
                },
            });
        }
        rows
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SWEEP_HEADER}")?;
        for r in self.rows() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.kind,
                fmt_f64(r.value),
                r.repeat.map(|v| v.to_string()).unwrap_or_default(),
                r.seed.map(|v| v.to_string()).unwrap_or_default(),
                opt_num(r.final_error),
                opt_num(r.std_error),
                opt_num(r.it_flag),
                opt_num(r.conditional_error),
                r.status
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn read_sweep_csv<R: std::io::BufRead>(input: R) -> Result<Vec<SweepRow>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty sweep file".into()))??;
    if header != SWEEP_HEADER {
        return Err(Error::Parse(format!("bad sweep header '{header}'")));
    }
    fn num<T: FromStr>(s: &str, line: usize) -> Result<Option<T>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("sweep line {line}: bad number '{s}'")))
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let n = i + 2;
        let f: Vec<&str> = line.splitn(9, ',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("sweep line {n}: column count")));
        }
        rows.push(SweepRow {
            kind: f[0].to_string(),
            value: num(f[1], n)?.ok_or_else(|| Error::Parse(format!("sweep line {n}: missing value")))?,
            repeat: num(f[2], n)?,
            seed: num(f[3], n)?,
            final_error: num(f[4], n)?,
            std_error: num(f[5], n)?,
            it_flag: num(f[6], n)?,
            conditional_error: num(f[7], n)?,
            status: f[8].to_string(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparePair {
    pub seed: u64,
    pub hard_error: f64,
    pub soft_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub pairs: Vec<ComparePair>,
    pub soft_wins: usize,
    pub hard_wins: usize,
    pub ties: usize,
    /// Two-sided sign-test p-value over the non-tied pairs.
    pub sign_test_p: f64,
}

/// Two-sided exact sign test: `P(|B − n/2| ≥ |wins − n/2|)`, `B ~ Bin(n, ½)`.
pub fn sign_test(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let lo = wins.min(losses);
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0f64;
    let mut tail = 0.0;
    for i in 0..=lo {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_choose + ln_half_n).exp();
    }
    (2.0 * tail).min(1.0)
}

/// Hard and soft updates on identical streams for `repeats` seeds
/// (`seed, seed + 1, …`). Both use the configured init mode.
pub fn cmd_compare(base: &RunConfig, repeats: usize) -> Result<CompareReport> {
    if base.k != 2 {
        return Err(Error::Config(format!("compare requires k=2, got k={}", base.k)));
    }
    if repeats < 1 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let pool = worker_pool()?;
    let pairs = pool.install(|| {
        (0..repeats)
            .into_par_iter()
            .map(|r| {
                let mut cfg = base.clone();
                cfg.seed = base.seed.wrapping_add(r as u64);
                cfg.out_dir = None;
                cfg.algorithm = Algorithm::Hard;
                let hard = execute(&cfg, false)?.summary.final_error;
                cfg.algorithm = Algorithm::Soft;
                let soft = execute(&cfg, false)?.summary.final_error;
                Ok(ComparePair {
                    seed: cfg.seed,
                    hard_error: hard,
                    soft_error: soft,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let soft_wins = pairs.iter().filter(|p| p.soft_error < p.hard_error).count();
    let hard_wins = pairs.iter().filter(|p| p.hard_error < p.soft_error).count();
    Ok(CompareReport {
        ties: pairs.len() - soft_wins - hard_wins,
        sign_test_p: sign_test(soft_wins, hard_wins),
        pairs,
        soft_wins,
        hard_wins,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitCheck {
    pub seed: u64,
    /// `max_i ‖νᵢ⁰ − μᵢ‖` under the best matching.
    pub max_distance: f64,
    /// `Cσ/20`
    pub threshold: f64,
    pub pass: bool,
    pub attempts: usize,
    pub samples_consumed: usize,
}

/// Runs only the configured seeding and compares it with `Cσ/20`.
pub fn cmd_initcheck(cfg: &RunConfig) -> Result<InitCheck> {
    cfg.validate()?;
    let model = cfg.model()?;
    let mut stream = SampleStream::unbounded(&model, cfg.noise, cfg.stream_seed()).points();
    let seeding = seed_centers(cfg, &model, &mut stream)?;
    let (_, perm) = matched_error(&seeding.centers, model.means())?;
    let max_distance = errors_under(&seeding.centers, model.means(), &perm)
        .into_iter()
        .fold(0.0f64, f64::max)
        .sqrt();
    let threshold = cfg.c * cfg.sigma / 20.0;
    Ok(InitCheck {
        seed: cfg.seed,
        max_distance,
        threshold,
        pass: max_distance <= threshold,
        attempts: seeding.attempts,
        samples_consumed: stream.get_ref().position() as usize,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorReport {
    #[serde(rename = "C")]
    pub c: f64,
    pub k: usize,
    pub d: usize,
    pub sigma: f64,
    pub trials: usize,
    pub estimate: FloorEstimate,
    /// `exp(−C²/8)·(C² + k)·σ²`
    pub reference: f64,
}

/// Population-Lloyd floor of the configured model.
pub fn cmd_floor(cfg: &RunConfig, trials: usize) -> Result<FloorReport> {
    cfg.validate()?;
    let model = cfg.model()?;
    let estimate = mc_floor(&model, trials, cfg.seed)?;
    let c = cfg.c;
    Ok(FloorReport {
        c,
        k: cfg.k,
        d: cfg.d,
        sigma: cfg.sigma,
        trials,
        estimate,
        reference: (-c * c / 8.0).exp() * (c * c + cfg.k as f64) * cfg.sigma * cfg.sigma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePair {
    pub streaming_error: f64,
    pub offline_error: f64,
    pub offline_iterations: usize,
    pub offline_converged: bool,
}

/// Runs the configured streaming experiment while buffering its streamed
/// points to `buffer` in the dump format, then runs offline Lloyd's from the
/// true means on the buffered points. The streaming engine never reads the
/// buffer.
pub fn cmd_oracle_pair(cfg: &RunConfig, buffer: &Path) -> Result<OraclePair> {
    let mut seen = Vec::with_capacity(cfg.n);
    let outcome = execute_on(cfg, false, |x| seen.push(x.to_vec()))?;
    let header = DumpHeader {
        d: cfg.d,
        k: cfg.k,
        sigma: cfg.sigma,
        seed: cfg.seed,
    };
    let samples = seen.into_iter().map(|point| crate::mixture::LabeledSample {
        point,
        label: usize::MAX,
    });
    write_dump(
        std::io::BufWriter::new(fs::File::create(buffer)?),
        header,
        samples,
        false,
    )?;
    let (_, buffered) = read_dump(std::io::BufReader::new(fs::File::open(buffer)?))?;
    let points: Vec<Vec<f64>> = buffered.into_iter().map(|s| s.point).collect();
    let model = cfg.model()?;
    let report = offline_lloyd(&points, model.means().to_vec(), 1000, DEFAULT_TOL)?;
    let (offline_error, _) = matched_error(&report.final_centers, model.means())?;
    Ok(OraclePair {
        streaming_error: outcome.summary.final_error,
        offline_error,
        offline_iterations: report.iterations,
        offline_converged: report.converged,
    })
}
