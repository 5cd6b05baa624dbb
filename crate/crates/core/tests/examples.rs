//! End-to-end scenarios on seeded mixtures, each checked against an
//! independent oracle or a frozen pilot value.

use streamix::harness::{cmd_compare, cmd_oracle_pair, cmd_sweep, execute, Algorithm, InitMode, RunConfig, SweepAxis};
use streamix::harness::SweepPoint;
use streamix::metrics::{decompose, RunGroup};
use streamix::oracle::{offline_em2, offline_lloyd, DEFAULT_TOL};
use streamix::{eta_hard, make_model, matched_error, NoiseKind, Placement, SampleStream, Weighting};

fn pair(algorithm: Algorithm, c: f64) -> RunConfig {
    RunConfig {
        algorithm,
        k: 2,
        d: 10,
        c,
        sigma: 1.0,
        n: 200_000,
        init: InitMode::Perturbed(c / 20.0),
        ..RunConfig::default()
    }
}

fn groups(base: &RunConfig, ns: &[f64], repeats: usize) -> Vec<RunGroup> {
    let sweep = cmd_sweep(base, SweepAxis::N, ns, repeats).unwrap();
    ns.iter()
        .map(|&n| RunGroup {
            n: n as usize,
            errors: sweep
                .cells
                .iter()
                .filter(|c| c.value == n)
                .map(|c| c.outcome.as_ref().unwrap().final_error)
                .collect(),
        })
        .collect()
}

#[test]
fn streaming_tracks_the_offline_fixed_point() {
    // stationary spread of a constant-rate running mean: η·d·σ² in total for k = 2
    let eta = eta_hard(2, 200_000).unwrap();
    let band = 2.0 * eta * 10.0;
    for seed in 0..5 {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { seed, ..pair(Algorithm::Hard, 8.0) };
        let p = cmd_oracle_pair(&cfg, &dir.path().join("points.txt")).unwrap();
        assert!(p.offline_converged);
        assert!(
            p.streaming_error <= 4.0 * p.offline_error + band,
            "seed {seed}: {} vs offline {} (band {band})",
            p.streaming_error,
            p.offline_error
        );
    }
}

#[test]
fn soft_error_shrinks_without_a_floor() {
    let mut base = pair(Algorithm::Soft, 8.0);
    let sweep = cmd_sweep(&base, SweepAxis::N, &[2e5, 8e5], 20).unwrap();
    let [short, long]: [&SweepPoint; 2] = [&sweep.points[0], &sweep.points[1]];
    let n = 2e5f64;
    assert!(short.mean_error <= 8.0 * 10.0 * n.ln() / n, "{}", short.mean_error);
    let ratio = short.mean_error / long.mean_error;
    assert!((2.5..=6.0).contains(&ratio), "{ratio}");

    // soft floor proxy is zero within noise
    base.init = InitMode::Perturbed(0.4);
    let d = decompose(&groups(&base, &[1e5, 2e5, 4e5, 8e5], 20), &[]).unwrap();
    assert!(d.floor.abs() <= 3.0 * d.floor_se, "{} ± {}", d.floor, d.floor_se);
}

#[test]
fn hard_floor_grows_as_separation_shrinks() {
    let ns = [1e5, 2e5, 4e5, 8e5];
    let at = |c: f64| {
        let base = RunConfig { init: InitMode::TrueMeans, ..pair(Algorithm::Hard, c) };
        decompose(&groups(&base, &ns, 10), &[]).unwrap().floor
    };
    let (f3, f8) = (at(3.0), at(8.0));
    assert!(f3 > f8, "{f3} vs {f8}");
}

#[test]
fn soft_beats_hard_at_small_separation() {
    let r = cmd_compare(&pair(Algorithm::Hard, 3.0), 20).unwrap();
    assert!(r.soft_wins >= 16, "{} of 20", r.soft_wins);
    assert!(r.sign_test_p < 0.01);
}

#[test]
fn hard_to_soft_ratio_follows_the_step_sizes_when_separation_is_large() {
    let r = cmd_compare(&pair(Algorithm::Hard, 12.0), 20).unwrap();
    let mean = |f: fn(&streamix::harness::ComparePair) -> f64| r.pairs.iter().map(f).sum::<f64>() / 20.0;
    let ratio = mean(|p| p.hard_error) / mean(|p| p.soft_error);
    // both errors are pure variance, proportional to the learning rate
    let n = 2e5f64;
    let expected = 2.0 * (3.0 * n).ln() / n.ln();
    assert!((ratio / expected - 1.0).abs() <= 0.25, "{ratio} vs {expected}");
}

#[test]
fn separation_sweep_decreases() {
    let base = RunConfig {
        n: 1_000_000,
        init: InitMode::TrueMeans,
        ..pair(Algorithm::Hard, 3.0)
    };
    let sweep = cmd_sweep(&base, SweepAxis::C, &[3.0, 4.0, 5.0, 6.0, 8.0], 10).unwrap();
    let errors: Vec<f64> = sweep.points.iter().map(|p| p.mean_error).collect();
    assert!(errors.windows(2).all(|w| w[0] > w[1]), "{errors:?}");
}

fn buffered(c: f64, d: usize, n: u64, seed: u64) -> (streamix::MixtureModel, Vec<Vec<f64>>) {
    let model = make_model(2, d, c, 1.0, Placement::AxisAligned, 0).unwrap();
    let points = SampleStream::range(&model, NoiseKind::Gaussian, seed, 0, n)
        .map(|s| s.point)
        .collect();
    (model, points)
}

fn offline_floor(c: f64) -> f64 {
    let (model, points) = buffered(c, 10, 100_000, 1);
    let r = offline_lloyd(&points, model.means().to_vec(), 500, DEFAULT_TOL).unwrap();
    assert!(r.converged);
    let (_, perm) = matched_error(&r.final_centers, model.means()).unwrap();
    model
        .means()
        .iter()
        .enumerate()
        .map(|(i, m)| streamix::linalg::sq_dist(&r.final_centers[perm[i]], m))
        .fold(0.0, f64::max)
}

#[test]
fn offline_lloyd_floor_exceeds_the_population_floor_oracle() {
    let model = make_model(2, 10, 4.0, 1.0, Placement::AxisAligned, 0).unwrap();
    let population = streamix::mc_floor(&model, 200_000, 2).unwrap().max();
    let worst = offline_floor(4.0);
    assert!(population > 0.0);
    assert!(worst >= population, "{worst} vs {population}");
}

#[test]
fn offline_lloyd_floor_reaches_ten_sampling_variances() {
    let worst = offline_floor(4.0);
    assert!(worst >= 10.0 * 10.0 / 1e5, "{worst}");
}

#[test]
fn offline_em_has_no_floor_where_lloyd_does() {
    for seed in 0..10 {
        let (model, points) = buffered(6.0, 5, 100_000, seed);
        let init = model.means().to_vec();
        let lloyd = offline_lloyd(&points, init.clone(), 500, DEFAULT_TOL).unwrap();
        let em = offline_em2(&points, init[0].clone(), 1.0, Weighting::Posterior, 500, DEFAULT_TOL).unwrap();
        let (el, _) = matched_error(&lloyd.final_centers, model.means()).unwrap();
        let (ee, _) = matched_error(&em.final_centers, model.means()).unwrap();
        assert!(ee < el, "seed {seed}: em {ee} vs lloyd {el}");
    }
}

#[test]
fn proximity_holds_from_a_close_start() {
    let held = (0..20)
        .filter(|&seed| execute(&RunConfig { seed, ..pair(Algorithm::Hard, 8.0) }, false).unwrap().summary.it_flag)
        .count();
    assert!(held >= 19, "{held}");
}
