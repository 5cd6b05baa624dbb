//! Streaming hard-assignment k-means: each sample moves only its nearest
//! center, `ν ← (1 − η)ν + ηx`.
//!
//! The engine consumes points and a learning rate and nothing else. Ground
//! truth, when available, is seen only by a [`StepObserver`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// `η = 3k·ln(3N)/N`.
pub fn eta_hard(k: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let eta = 3.0 * k as f64 * (3.0 * n as f64).ln() / n as f64;
    if eta >= 1.0 {
        return Err(Error::NTooSmall { eta, n });
    }
    Ok(eta)
}

/// Index of the nearest center; ties go to the lowest index.
pub fn assign(x: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = linalg::sq_dist(x, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Current iterates `ν₁ᵗ … ν_kᵗ`. Serializes as the checkpoint format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterEstimates {
    pub t: u64,
    pub eta: f64,
    /// Row-major: one center per row.
    pub centers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub winner: usize,
    pub moved_delta: f64,
    pub point_norm: f64,
}

impl CenterEstimates {
    pub fn new(centers: Vec<Vec<f64>>, eta: f64) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::InvalidArgument("need at least 2 centers".into()));
        }
        let d = centers[0].len();
        if d == 0 || centers.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidArgument("centers must share a dimension >= 1".into()));
        }
        check_eta(eta)?;
        Ok(Self { t: 0, eta, centers })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn d(&self) -> usize {
        self.centers[0].len()
    }

    /// One streaming update in place.
    pub fn step(&mut self, x: &[f64]) -> StepRecord {
        let winner = assign(x, &self.centers);
        let eta = self.eta;
        let c = &mut self.centers[winner];
        let mut moved = 0.0;
        for (ci, xi) in c.iter_mut().zip(x) {
            // increment form keeps x == ν a bit-exact fixed point; η = 1 copies x
            let next = if eta == 1.0 { *xi } else { *ci + eta * (xi - *ci) };
            moved += (next - *ci) * (next - *ci);
            *ci = next;
        }
        self.t += 1;
        StepRecord {
            t: self.t,
            winner,
            moved_delta: moved.sqrt(),
            point_norm: linalg::norm(x),
        }
    }

    pub fn to_checkpoint(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_checkpoint(json: &str) -> Result<Self> {
        let est: Self = serde_json::from_str(json)?;
        let t = est.t;
        let mut checked = Self::new(est.centers, est.eta)?;
        checked.t = t;
        Ok(checked)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    // η = 1 is admitted so the update can be checked against "move the winner to x".
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be in (0, 1], got {eta}")));
    }
    Ok(())
}

/// Pure form of one update: returns the new estimates and the step record.
pub fn step(est: &CenterEstimates, x: &[f64], eta: f64) -> Result<(CenterEstimates, StepRecord)> {
    check_eta(eta)?;
    if x.len() != est.d() {
        return Err(Error::DimensionMismatch {
            expected: est.d(),
            actual: x.len(),
        });
    }
    let mut next = est.clone();
    next.eta = eta;
    let rec = next.step(x);
    Ok((next, rec))
}

/// Sees the state after every step (and once at `t = 0`).
pub trait StepObserver {
    fn observe(&mut self, t: u64, centers: &[Vec<f64>], winner: Option<usize>);
}

impl StepObserver for () {
    fn observe(&mut self, _: u64, _: &[Vec<f64>], _: Option<usize>) {}
}

impl<O: StepObserver + ?Sized> StepObserver for &mut O {
    fn observe(&mut self, t: u64, centers: &[Vec<f64>], winner: Option<usize>) {
        (**self).observe(t, centers, winner)
    }
}

/// Applies `n` streaming updates, pulling one point per step.
pub fn run<I, O>(stream: &mut I, mut est: CenterEstimates, n: usize, mut observer: O) -> Result<CenterEstimates>
where
    I: Iterator<Item = Vec<f64>>,
    O: StepObserver,
{
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    observer.observe(est.t, &est.centers, None);
    for consumed in 0..n {
        let x = stream.next().ok_or(Error::StreamExhausted {
            consumed,
            requested: n,
        })?;
        if x.len() != est.d() {
            return Err(Error::DimensionMismatch {
                expected: est.d(),
                actual: x.len(),
            });
        }
        let rec = est.step(&x);
        observer.observe(est.t, &est.centers, Some(rec.winner));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_values() {
        let e = eta_hard(2, 3000).unwrap();
        assert!((e - 0.018210).abs() < 5e-7, "{e}");
        let e = eta_hard(3, 3000).unwrap();
        assert!((e - 0.027315).abs() < 5e-7, "{e}");
        assert!(matches!(eta_hard(10, 30), Err(Error::NTooSmall { .. })));
    }

    #[test]
    fn assign_basics() {
        let c = vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 7.0]];
        assert_eq!(assign(&[0.0, 7.0], &c), 2);
        assert_eq!(assign(&[2.0, 0.0], &c), 0);
    }

    #[test]
    fn convex_update() {
        let est = CenterEstimates::new(vec![vec![0.0, 0.0], vec![10.0, 10.0]], 0.5).unwrap();
        let (next, rec) = step(&est, &[1.0, 1.0], 0.5).unwrap();
        assert_eq!(next.centers[0], vec![0.5, 0.5]);
        assert_eq!(next.centers[1], est.centers[1]);
        assert_eq!(rec.winner, 0);

        let est = CenterEstimates::new(vec![vec![2.0, 0.0], vec![50.0, 50.0]], 0.1).unwrap();
        let (next, rec) = step(&est, &[0.0, 4.0], 0.1).unwrap();
        assert!((next.centers[0][0] - 1.8).abs() < 1e-15);
        assert!((next.centers[0][1] - 0.4).abs() < 1e-15);
        let expected = 0.1 * (4.0f64 + 16.0).sqrt();
        assert!((rec.moved_delta - expected).abs() < 1e-12);
    }

    #[test]
    fn fixed_point() {
        let est = CenterEstimates::new(vec![vec![1.0, -2.0], vec![3.0, 3.0]], 0.3).unwrap();
        let (next, rec) = step(&est, &[1.0, -2.0], 0.3).unwrap();
        assert_eq!(next.centers, est.centers);
        assert_eq!(rec.moved_delta, 0.0);
    }

    #[test]
    fn invalid_eta_rejected() {
        assert!(CenterEstimates::new(vec![vec![0.0], vec![1.0]], 0.0).is_err());
        assert!(CenterEstimates::new(vec![vec![0.0], vec![1.0]], 1.5).is_err());
        assert!(CenterEstimates::new(vec![vec![0.0]], 0.5).is_err());
    }

    #[test]
    fn stream_exhaustion() {
        let est = CenterEstimates::new(vec![vec![0.0], vec![1.0]], 0.5).unwrap();
        let mut s = vec![vec![0.2], vec![0.9]].into_iter();
        assert_eq!(
            run(&mut s, est, 3, ()),
            Err(Error::StreamExhausted {
                consumed: 2,
                requested: 3
            })
        );
    }

    #[test]
    fn checkpoint_resume_is_bit_exact() {
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i as f64 * 1.3).cos()])
            .collect();
        let init = CenterEstimates::new(vec![vec![-1.0, 0.0], vec![1.0, 0.0]], 0.07).unwrap();
        let straight = run(&mut pts.clone().into_iter(), init.clone(), 40, ()).unwrap();

        let mut s = pts.into_iter();
        let half = run(&mut s, init, 17, ()).unwrap();
        let json = half.to_checkpoint().unwrap();
        let resumed = CenterEstimates::from_checkpoint(&json).unwrap();
        let done = run(&mut s, resumed, 23, ()).unwrap();
        assert_eq!(done, straight);
    }
}
