//! Gibbs samplers for sparse and fused Bayesian linear regression.
//!
//! Four models share one chain runner:
//!
//! * Bayesian lasso (`blasso`)
//! * Bayesian fused lasso (`bfl`)
//! * fused lasso with a horseshoe prior on successive differences (`bfh`)
//! * all-pairs fusion with a horseshoe prior on every difference (`bhh`),
//!   whose global scale is chosen by WAIC
//!
//! Around them sit posterior summaries, WAIC, leave-one-out
//! cross-validation, a synthetic benchmark and the `hsfuse` command line.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below name the usual double-precision instantiations.
//!
//! ```no_run
//! use horseshoe_fusion::{run_chain, standardize, summarize, DatasetF64, ModelKind, RngStream, SamplerConfigF64};
//!
//! let ds = DatasetF64::load_csv("soil.csv")?;
//! let std = standardize(&ds)?;
//! let cfg = SamplerConfigF64 { iterations: 10_000, burn_in: 5_000, ..Default::default() };
//! let draws = run_chain(ModelKind::FusedHorseshoe, std.data(), &cfg, &mut RngStream::new(7))?;
//! let est = summarize(&draws, 0.95)?;
//! println!("{:?}", est.point);
//! # Ok::<(), horseshoe_fusion::Error>(())
//! ```

pub mod cli;
pub mod data;
pub mod distributions;
pub mod error;
pub mod geweke;
pub mod inference;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod simulation;

pub use data::{standardize, Dataset, RegressionData, StandardizedDataset};
pub use distributions::{gaussian_loglik_point, ScalarDist};
pub use error::{Error, Result};
pub use inference::{
    compute_waic, loocv, loocv_with, parse_grid, select_tuning, summarize, Estimate, LoocvResult, ModelScore,
    PosteriorDraws, TuningResult,
};
pub use linalg::{
    build_fused_precision, build_horses_precision, sample_beta_conditional, GaussianConditional, Matrix,
    PrecisionMatrix,
};
pub use models::{
    baseline_step, bfh_step, bhh_step, run_chain, Baseline, BaselineChainState, FusedChainState, HorsesChainState,
    ModelKind, SamplerConfig,
};
pub use rng::RngStream;
pub use scalar::Scalar;
pub use simulation::{generate_case, mse, mse_diff, pse, run_benchmark, CaseSpec, MetricsReport, ScoreScale};

pub type DatasetF64 = Dataset<f64>;
pub type RegressionDataF64 = RegressionData<f64>;
pub type StandardizedDatasetF64 = StandardizedDataset<f64>;
pub type MatrixF64 = Matrix<f64>;
pub type PrecisionMatrixF64 = PrecisionMatrix<f64>;
pub type SamplerConfigF64 = SamplerConfig<f64>;
pub type FusedChainStateF64 = FusedChainState<f64>;
pub type HorsesChainStateF64 = HorsesChainState<f64>;
pub type BaselineChainStateF64 = BaselineChainState<f64>;
pub type PosteriorDrawsF64 = PosteriorDraws<f64>;
pub type EstimateF64 = Estimate<f64>;
pub type ModelScoreF64 = ModelScore<f64>;
pub type CaseSpecF64 = CaseSpec<f64>;
pub type MetricsReportF64 = MetricsReport<f64>;
