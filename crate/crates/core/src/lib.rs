//! Single-pass clustering of spherical Gaussian mixtures.
//!
//! * [`mixture`]: seeded synthetic streams with ground truth.
//! * [`init`]: block power-method PCA seeding followed by threshold-graph
//!   clustering in the projected space.
//! * [`lloyd`]: streaming hard-assignment updates.
//! * [`em`]: streaming soft updates for the symmetric two-component case.
//! * [`oracle`]: batch references and Monte-Carlo probes.
//! * [`metrics`]: matched errors, traces, rate fits.
//! * [`harness`]: configured runs, sweeps and paired comparisons.

pub mod em;
pub mod error;
pub mod harness;
pub mod init;
pub mod linalg;
pub mod lloyd;
pub mod metrics;
pub mod mixture;
pub mod numfmt;
pub mod oracle;

pub use em::{eta_soft, run_soft, soft_step, soft_weight, SymmetricPairEstimate, Weighting};
pub use error::{Error, Result};
pub use init::{init_alg, nn_graph_cluster, streaming_pca, InitConfig, InitResult, ProjectionBasis, StreamingPca};
pub use linalg::{qr_orthonormalize, ColMatrix};
pub use lloyd::{assign, eta_hard, run, step, CenterEstimates, StepObserver, StepRecord};
pub use metrics::{decompose, fit_rate, matched_error, it_monitor, ErrorTrace, ItMonitor, RateFit, Tracker};
pub use mixture::{
    make_model, sample_stream, sample_subgaussian_stream, LabeledSample, MixtureModel, NoiseKind, Placement,
    SampleStream,
};
pub use oracle::{mc_floor, mc_misclassification, offline_em2, offline_lloyd, OracleReport};
