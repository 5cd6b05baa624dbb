//! Error accounting: permutation-matched center error, the running proximity
//! condition, per-step traces, power-law rate fits, and the bias / variance /
//! floor decomposition across paired runs.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lloyd::StepObserver;
use crate::numfmt::fmt_f64;

/// Largest k solved by exhaustive permutation search; above it the
/// Hungarian algorithm is used.
pub const EXHAUSTIVE_MAX_K: usize = 8;

/// `min over π of Σᵢ ‖ν_{π(i)} − μᵢ‖²`.
///
/// Returns the minimum and `π`, where `π[i]` is the estimate matched to
/// truth `i`.
pub fn matched_error(estimates: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    let k = truth.len();
    if estimates.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: estimates.len(),
        });
    }
    if k == 0 {
        return Ok((0.0, Vec::new()));
    }
    // cost[i][j] = ‖ν_j − μ_i‖²
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|mu| estimates.iter().map(|nu| linalg::sq_dist(nu, mu)).collect())
        .collect();
    let perm = if k <= EXHAUSTIVE_MAX_K {
        exhaustive_assignment(&cost)
    } else {
        hungarian(&cost)
    };
    let total = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok((total, perm))
}

/// Error of a fixed matching `perm` (truth `i` ↔ estimate `perm[i]`), per truth.
pub fn errors_under(estimates: &[Vec<f64>], truth: &[Vec<f64>], perm: &[usize]) -> Vec<f64> {
    truth
        .iter()
        .zip(perm)
        .map(|(mu, &j)| linalg::sq_dist(&estimates[j], mu))
        .collect()
}

fn exhaustive_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    // Heap's algorithm
    let mut c = vec![0usize; k];
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
    best_cost = best_cost.min(eval(&perm));
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = eval(&perm);
            if v < best_cost {
                best_cost = v;
                best.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// O(n³) Hungarian algorithm with row/column potentials on a square cost
/// matrix. Returns `assignment[row] = column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based arrays; column 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// The running proximity condition: every estimate has stayed within `Cσ/10`
/// of its true mean at every check so far. The estimate-to-truth matching is
/// frozen at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ItMonitor {
    threshold_sq: f64,
    perm: Vec<usize>,
    holds: bool,
}

impl ItMonitor {
    pub fn new(initial: &[Vec<f64>], truth: &[Vec<f64>], c: f64, sigma: f64) -> Result<Self> {
        let (_, perm) = matched_error(initial, truth)?;
        let radius = c * sigma / 10.0;
        let mut m = Self {
            threshold_sq: radius * radius,
            perm,
            holds: true,
        };
        m.update(initial, truth);
        Ok(m)
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn holds(&self) -> bool {
        self.holds
    }

    /// Checks the current estimates; returns the cumulative flag.
    pub fn update(&mut self, estimates: &[Vec<f64>], truth: &[Vec<f64>]) -> bool {
        if self.holds {
            let worst = errors_under(estimates, truth, &self.perm)
                .into_iter()
                .fold(0.0f64, f64::max);
            self.holds = worst <= self.threshold_sq;
        }
        self.holds
    }

    fn update_with_max(&mut self, vmax: f64) -> bool {
        if self.holds {
            self.holds = vmax <= self.threshold_sq;
        }
        self.holds
    }
}

/// One-shot form of the monitor for a single snapshot.
pub fn it_monitor(estimates: &[Vec<f64>], truth: &[Vec<f64>], c: f64, sigma: f64) -> Result<bool> {
    Ok(ItMonitor::new(estimates, truth, c, sigma)?.holds())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    /// Squared error per true component (under the frozen matching).
    pub errors: Vec<f64>,
    pub vmax: f64,
    pub it_flag: bool,
    pub winner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTrace {
    pub k: usize,
    pub records: Vec<TraceRecord>,
}

impl ErrorTrace {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            records: Vec::new(),
        }
    }

    pub fn header(k: usize) -> String {
        let mut h = String::from("t");
        for i in 0..k {
            h.push_str(&format!(",e2_{i}"));
        }
        h.push_str(",vmax,it_flag,winner");
        h
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::header(self.k))?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            line.push_str(&r.t.to_string());
            for e in &r.errors {
                line.push(',');
                line.push_str(&fmt_f64(*e));
            }
            line.push(',');
            line.push_str(&fmt_f64(r.vmax));
            line.push_str(if r.it_flag { ",1," } else { ",0," });
            if let Some(w) = r.winner {
                line.push_str(&w.to_string());
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty trace".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[0] != "t" {
            return Err(Error::Parse(format!("bad trace header '{header}'")));
        }
        let k = cols.len() - 4;
        if header != Self::header(k) {
            return Err(Error::Parse(format!("bad trace header '{header}'")));
        }
        let mut trace = Self::new(k);
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| Error::Parse(format!("trace line {}: {what}", n + 2));
            if f.len() != k + 4 {
                return Err(bad("column count"));
            }
            let t = f[0].parse().map_err(|_| bad("t"))?;
            let errors = f[1..=k]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| bad("error value")))
                .collect::<Result<Vec<_>>>()?;
            let vmax = f[k + 1].parse().map_err(|_| bad("vmax"))?;
            let it_flag = match f[k + 2] {
                "1" => true,
                "0" => false,
                _ => return Err(bad("it_flag")),
            };
            let winner = if f[k + 3].is_empty() {
                None
            } else {
                Some(f[k + 3].parse().map_err(|_| bad("winner"))?)
            };
            trace.records.push(TraceRecord {
                t,
                errors,
                vmax,
                it_flag,
                winner,
            });
        }
        Ok(trace)
    }
}

/// Ground-truth observer for the streaming engines. Checks the proximity
/// condition at every step and records a trace row every `stride` steps.
#[derive(Debug, Clone)]
pub struct Tracker {
    truth: Vec<Vec<f64>>,
    c: f64,
    sigma: f64,
    stride: u64,
    record: bool,
    monitor: Option<ItMonitor>,
    last: Option<TraceRecord>,
    trace: ErrorTrace,
}

impl Tracker {
    pub fn new(truth: Vec<Vec<f64>>, c: f64, sigma: f64, stride: u64, record: bool) -> Self {
        let k = truth.len();
        Self {
            truth,
            c,
            sigma,
            stride: stride.max(1),
            record,
            monitor: None,
            last: None,
            trace: ErrorTrace::new(k),
        }
    }

    /// `1` for N ≤ 10⁶, else `ceil(N/10⁶)`.
    pub fn default_stride(n: usize) -> u64 {
        (n as u64).div_ceil(1_000_000).max(1)
    }

    pub fn it_holds(&self) -> bool {
        self.monitor.as_ref().is_some_and(ItMonitor::holds)
    }

    pub fn perm(&self) -> Option<&[usize]> {
        self.monitor.as_ref().map(ItMonitor::perm)
    }

    /// The most recent observation, recorded or not.
    pub fn last(&self) -> Option<&TraceRecord> {
        self.last.as_ref()
    }

    /// Finished trace; the final observation is appended if the stride skipped it.
    pub fn into_trace(mut self) -> ErrorTrace {
        if self.record {
            if let Some(last) = self.last.take() {
                if self.trace.records.last().map(|r| r.t) != Some(last.t) {
                    self.trace.records.push(last);
                }
            }
        }
        self.trace
    }
}

impl StepObserver for Tracker {
    fn observe(&mut self, t: u64, centers: &[Vec<f64>], winner: Option<usize>) {
        if self.monitor.is_none() {
            self.monitor = ItMonitor::new(centers, &self.truth, self.c, self.sigma).ok();
        }
        let Some(monitor) = self.monitor.as_mut() else {
            return;
        };
        let errors = errors_under(centers, &self.truth, monitor.perm());
        let vmax = errors.iter().copied().fold(0.0f64, f64::max);
        let it_flag = monitor.update_with_max(vmax);
        let rec = TraceRecord {
            t,
            errors,
            vmax,
            it_flag,
            winner,
        };
        if self.record && t % self.stride == 0 {
            self.trace.records.push(rec.clone());
        }
        self.last = Some(rec);
    }
}

/// Fitted `ln(error) = intercept + exponent·ln(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on `(ln N, ln error)`.
pub fn fit_rate(sweep: &[(f64, f64)]) -> Result<RateFit> {
    if sweep.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs >= 4 points, got {}",
            sweep.len()
        )));
    }
    if let Some((n, e)) = sweep.iter().find(|(n, e)| !(*e > 0.0) || !(*n > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs positive N and error, got ({n}, {e})"
        )));
    }
    let lo = sweep.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = sweep.iter().map(|p| p.0).fold(0.0f64, f64::max);
    if hi < 8.0 * lo {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs N spanning >= 8x, got {lo}..{hi}"
        )));
    }
    let pts: Vec<(f64, f64)> = sweep.iter().map(|(n, e)| (n.ln(), e.ln())).collect();
    let line = least_squares(&pts);
    Ok(RateFit {
        exponent: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
    })
}

#[derive(Debug, Clone, Copy)]
struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    intercept_se: f64,
}

fn least_squares(pts: &[(f64, f64)]) -> Line {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let intercept_se = if pts.len() > 2 && sxx > 0.0 {
        let s2 = sse / (n - 2.0);
        (s2 * (1.0 / n + mx * mx / sxx)).sqrt()
    } else {
        f64::INFINITY
    };
    Line {
        slope,
        intercept,
        r_squared,
        intercept_se,
    }
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Final errors of repeated runs at one stream length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGroup {
    pub n: usize,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Intercept of `error ≈ floor + slope·ln(N)/N` over the true-mean-init runs.
    pub floor: f64,
    pub floor_se: f64,
    /// `(N, mean error at true-mean init − floor)`
    pub variance: Vec<(usize, f64)>,
    /// `(N, mean perturbed-init error − mean true-init error)` at matched N
    pub bias: Vec<(usize, f64)>,
}

/// Splits errors into floor, variance and bias proxies.
///
/// `true_init` holds runs started at the true means for at least two distinct
/// stream lengths; `perturbed_init` holds runs on the same streams started
/// away from them (may be empty).
pub fn decompose(true_init: &[RunGroup], perturbed_init: &[RunGroup]) -> Result<Decomposition> {
    let mut lengths: Vec<usize> = true_init.iter().filter(|g| !g.errors.is_empty()).map(|g| g.n).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 2 {
        return Err(Error::InvalidArgument(
            "decomposition needs true-init runs at >= 2 distinct N".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = true_init
        .iter()
        .flat_map(|g| {
            let x = (g.n as f64).ln() / g.n as f64;
            g.errors.iter().map(move |e| (x, *e))
        })
        .collect();
    let line = least_squares(&pts);
    let floor = line.intercept;
    let mean_at = |groups: &[RunGroup], n: usize| -> Option<f64> {
        let all: Vec<f64> = groups
            .iter()
            .filter(|g| g.n == n)
            .flat_map(|g| g.errors.iter().copied())
            .collect();
        (!all.is_empty()).then(|| mean_and_se(&all).0)
    };
    let variance = lengths
        .iter()
        .filter_map(|&n| mean_at(true_init, n).map(|m| (n, m - floor)))
        .collect();
    let mut bias = Vec::new();
    for &n in &lengths {
        if let (Some(p), Some(t)) = (mean_at(perturbed_init, n), mean_at(true_init, n)) {
            bias.push((n, p - t));
        }
    }
    Ok(Decomposition {
        floor,
        floor_se: line.intercept_se,
        variance,
        bias,
    })
}
