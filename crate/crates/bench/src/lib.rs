//! Shared fixtures for the criterion benches.

use streamix::{make_model, MixtureModel, NoiseKind, Placement, SampleStream};

/// Balanced simplex mixture at separation `c` with unit noise.
pub fn model(k: usize, d: usize, c: f64) -> MixtureModel {
    make_model(k, d, c, 1.0, Placement::RandomRotated, 1).expect("valid bench model")
}

/// First `n` points of the seed-0 stream of `model`.
pub fn points(model: &MixtureModel, n: usize) -> Vec<Vec<f64>> {
    SampleStream::range(model, NoiseKind::Gaussian, 0, 0, n as u64)
        .map(|s| s.point)
        .collect()
}
