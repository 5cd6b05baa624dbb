//! Streaming soft-update EM for the balanced symmetric pair
//! `½N(μ, σ²I) + ½N(−μ, σ²I)`: `ν ← (1 − η)ν + η(2w − 1)x`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lloyd::StepObserver;

/// `η = 3·ln(N)/N`.
pub fn eta_soft(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let eta = 3.0 * (n as f64).ln() / n as f64;
    if eta >= 1.0 {
        return Err(Error::NTooSmall { eta, n });
    }
    if eta <= 0.0 {
        // N = 1 gives ln 1 = 0
        return Err(Error::InvalidArgument(format!("learning rate {eta} is not positive")));
    }
    Ok(eta)
}

/// `1 / (1 + e^{−a})`, computed so that `w(a) + w(−a) == 1` exactly.
fn logistic(a: f64) -> f64 {
    if a.is_nan() {
        return 0.5;
    }
    let p = 1.0 / (1.0 + (-a.abs()).exp());
    if a >= 0.0 {
        p
    } else {
        // exact for p in [0.5, 1]
        1.0 - p
    }
}

/// Responsibility of `+ν` for `x`:
///
/// `w = e^{−‖x−ν‖²/σ²} / (e^{−‖x−ν‖²/σ²} + e^{−‖x+ν‖²/σ²}) = 1/(1 + e^{−4⟨x,ν⟩/σ²})`.
///
/// `σ = 0` is the hard limit: `w ∈ {0, ½, 1}` by the sign of `⟨x,ν⟩`.
pub fn soft_weight(x: &[f64], nu: &[f64], sigma: f64) -> Result<f64> {
    weight_with_scale(x, nu, sigma, 4.0)
}

fn weight_with_scale(x: &[f64], nu: &[f64], sigma: f64, scale: f64) -> Result<f64> {
    if x.len() != nu.len() {
        return Err(Error::DimensionMismatch {
            expected: nu.len(),
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x"));
    }
    if nu.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nu"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let ip = linalg::dot(x, nu);
    Ok(weight_from_inner(ip, sigma, scale))
}

#[inline]
fn weight_from_inner(ip: f64, sigma: f64, scale: f64) -> f64 {
    if sigma == 0.0 {
        return if ip > 0.0 {
            1.0
        } else if ip < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    logistic(scale * ip / (sigma * sigma))
}

/// Which responsibility the engine uses.
///
/// `Literal` is [`soft_weight`] as written, `1/(1 + e^{−4⟨x,ν⟩/σ²})`.
/// `Posterior` is the exact Bayes posterior of the symmetric pair,
/// `1/(1 + e^{−2⟨x,ν⟩/σ²})` (the literal form at `√2·σ`). Only the posterior
/// has `μ` as the fixed point of the population update; the literal form
/// settles at a biased point for small separations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Posterior,
    Literal,
}

impl Weighting {
    fn scale(self) -> f64 {
        match self {
            Weighting::Posterior => 2.0,
            Weighting::Literal => 4.0,
        }
    }

    pub fn weight(self, x: &[f64], nu: &[f64], sigma: f64) -> Result<f64> {
        weight_with_scale(x, nu, sigma, self.scale())
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Posterior => "posterior",
            Weighting::Literal => "literal",
        })
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "posterior" => Ok(Weighting::Posterior),
            "literal" => Ok(Weighting::Literal),
            other => Err(Error::InvalidArgument(format!("unknown weighting '{other}'"))),
        }
    }
}

/// `{+ν, −ν}` estimate of `{μ, −μ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPairEstimate {
    pub t: u64,
    pub eta: f64,
    pub sigma: f64,
    pub weighting: Weighting,
    pub nu: Vec<f64>,
}

impl SymmetricPairEstimate {
    pub fn new(nu: Vec<f64>, sigma: f64, eta: f64, weighting: Weighting) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::InvalidArgument("nu must have dimension >= 1".into()));
        }
        if nu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("nu"));
        }
        if nu.iter().all(|v| *v == 0.0) {
            // ν = 0 is an exact fixed point of the dynamics
            return Err(Error::InvalidArgument("zero initialization is a fixed point".into()));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidArgument(format!("learning rate must be in (0, 1), got {eta}")));
        }
        Ok(Self {
            t: 0,
            eta,
            sigma,
            weighting,
            nu,
        })
    }

    /// One soft update in place; returns the weight used.
    pub fn step(&mut self, x: &[f64]) -> f64 {
        let ip = linalg::dot(x, &self.nu);
        let w = weight_from_inner(ip, self.sigma, self.weighting.scale());
        let coef = 2.0 * w - 1.0;
        let eta = self.eta;
        for (v, xi) in self.nu.iter_mut().zip(x) {
            *v += eta * (coef * xi - *v);
        }
        self.t += 1;
        w
    }

    /// `[ν, −ν]`
    pub fn centers(&self) -> Vec<Vec<f64>> {
        vec![self.nu.clone(), self.nu.iter().map(|v| -v).collect()]
    }

    pub fn to_checkpoint(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_checkpoint(json: &str) -> Result<Self> {
        let est: Self = serde_json::from_str(json)?;
        let t = est.t;
        let mut checked = Self::new(est.nu, est.sigma, est.eta, est.weighting)?;
        checked.t = t;
        Ok(checked)
    }
}

/// Pure form of one update.
pub fn soft_step(est: &SymmetricPairEstimate, x: &[f64], eta: f64) -> Result<SymmetricPairEstimate> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be in (0, 1), got {eta}")));
    }
    if x.len() != est.nu.len() {
        return Err(Error::DimensionMismatch {
            expected: est.nu.len(),
            actual: x.len(),
        });
    }
    let mut next = est.clone();
    next.eta = eta;
    next.step(x);
    Ok(next)
}

/// Single pass of `n` soft updates. The observer sees centers `[ν, −ν]`;
/// the reported "winner" is 0 when `w ≥ ½` and 1 otherwise.
pub fn run_soft<I, O>(
    stream: &mut I,
    mut est: SymmetricPairEstimate,
    n: usize,
    mut observer: O,
) -> Result<SymmetricPairEstimate>
where
    I: Iterator<Item = Vec<f64>>,
    O: StepObserver,
{
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    observer.observe(est.t, &est.centers(), None);
    for consumed in 0..n {
        let x = stream.next().ok_or(Error::StreamExhausted {
            consumed,
            requested: n,
        })?;
        if x.len() != est.nu.len() {
            return Err(Error::DimensionMismatch {
                expected: est.nu.len(),
                actual: x.len(),
            });
        }
        let w = est.step(&x);
        observer.observe(est.t, &est.centers(), Some(if w >= 0.5 { 0 } else { 1 }));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_values() {
        assert!((eta_soft(3000).unwrap() - 0.008006).abs() < 5e-7);
        assert!((eta_soft(21).unwrap() - 0.434932).abs() < 5e-7);
        assert!(matches!(eta_soft(3), Err(Error::NTooSmall { .. })));
        assert!(eta_soft(1).is_err());
    }

    #[test]
    fn weight_values() {
        assert_eq!(soft_weight(&[0.0, 1.0], &[1.0, 0.0], 1.0).unwrap(), 0.5);
        let w = soft_weight(&[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((w - 0.982014).abs() < 5e-7, "{w}");
        let w = soft_weight(&[1e3, 0.0], &[1e3, 0.0], 1.0).unwrap();
        assert_eq!(w, 1.0);
        let w = soft_weight(&[-1e3, 0.0], &[1e3, 0.0], 1.0).unwrap();
        assert_eq!(w, 0.0);
        // posterior form equals the literal form at sqrt(2) sigma
        let x = [0.3, -1.2];
        let nu = [0.8, 0.4];
        let a = Weighting::Posterior.weight(&x, &nu, 1.3).unwrap();
        let b = soft_weight(&x, &nu, 1.3 * std::f64::consts::SQRT_2).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn weight_rejects_non_finite() {
        assert!(soft_weight(&[f64::NAN], &[1.0], 1.0).is_err());
        assert!(soft_weight(&[1.0], &[f64::INFINITY], 1.0).is_err());
        assert!(soft_weight(&[1.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn zero_sigma_is_hard_limit() {
        assert_eq!(soft_weight(&[2.0], &[1.0], 0.0).unwrap(), 1.0);
        assert_eq!(soft_weight(&[-2.0], &[1.0], 0.0).unwrap(), 0.0);
        assert_eq!(soft_weight(&[0.0], &[1.0], 0.0).unwrap(), 0.5);
    }

    #[test]
    fn orthogonal_point_only_shrinks() {
        let est = SymmetricPairEstimate::new(vec![1.0, 0.0], 1.0, 0.2, Weighting::Literal).unwrap();
        let next = soft_step(&est, &[0.0, 5.0], 0.2).unwrap();
        assert_eq!(next.nu, vec![0.8, 0.0]);
    }

    #[test]
    fn saturated_step() {
        // <x, nu>/sigma^2 = 1000 saturates w to 1
        let est = SymmetricPairEstimate::new(vec![1.0, 0.0], 0.003f64.sqrt(), 0.1, Weighting::Literal)
            .unwrap();
        let next = soft_step(&est, &[3.0, 0.0], 0.1).unwrap();
        assert!((next.nu[0] - 1.2).abs() < 1e-15);
        assert_eq!(next.nu[1], 0.0);
    }

    #[test]
    fn zero_init_rejected() {
        assert!(SymmetricPairEstimate::new(vec![0.0, 0.0], 1.0, 0.1, Weighting::Posterior).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut est = SymmetricPairEstimate::new(vec![0.7, -0.1], 1.0, 0.05, Weighting::Posterior).unwrap();
        est.step(&[1.0, 0.3]);
        let back = SymmetricPairEstimate::from_checkpoint(&est.to_checkpoint().unwrap()).unwrap();
        assert_eq!(back, est);
    }
}
