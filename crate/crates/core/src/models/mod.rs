//! Gibbs transition kernels and the chain runner.
//!
//! Four kernels share one layout: a state type holding every latent, a pure
//! `*_step` function performing one systematic scan, and column names used by
//! [`run_chain`] to record draws.
//!
//! * [`ModelKind::BayesianLasso`]: Laplace prior on each coefficient.
//! * [`ModelKind::FusedLasso`]: Laplace priors on coefficients and successive
//!   differences, with gamma hyperpriors on both rates.
//! * [`ModelKind::FusedHorseshoe`]: Laplace prior on coefficients, horseshoe
//!   prior on successive differences.
//! * [`ModelKind::HorsesHorseshoe`]: Laplace prior on coefficients, horseshoe
//!   prior on every pairwise difference, global scale held fixed.
//!
//! Every chain starts from β = 0, σ² = 1 and all scales/auxiliaries at 1.

mod baseline;
mod fused;
mod horses;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use baseline::{baseline_step, Baseline, BaselineChainState};
pub use fused::{bfh_step, FusedChainState};
pub use horses::{bhh_step, HorsesChainState};

use crate::data::RegressionData;
use crate::distributions::{gamma, inv_gamma, inv_gaussian};
use crate::error::{Error, Result};
use crate::inference::PosteriorDraws;
use crate::rng::RngStream;
use crate::scalar::{floored, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    BayesianLasso,
    FusedLasso,
    FusedHorseshoe,
    HorsesHorseshoe,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::BayesianLasso,
        ModelKind::FusedLasso,
        ModelKind::FusedHorseshoe,
        ModelKind::HorsesHorseshoe,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::BayesianLasso => "blasso",
            ModelKind::FusedLasso => "bfl",
            ModelKind::FusedHorseshoe => "bfh",
            ModelKind::HorsesHorseshoe => "bhh",
        }
    }

    /// Whether the model carries a tuning parameter chosen outside the chain.
    pub fn is_tuned(self) -> bool {
        self == ModelKind::HorsesHorseshoe
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected blasso, bfl, bfh or bhh)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig<T> {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    /// σ² ~ IG(ν₀/2, η₀/2).
    pub nu0: T,
    pub eta0: T,
    /// Gamma(shape, rate) hyperprior on the coefficient Laplace rate.
    pub r1: T,
    pub delta1: T,
    /// Gamma hyperprior on the fusion Laplace rate (fused lasso only).
    pub r2: T,
    pub delta2: T,
    /// Global fusion scale for the all-pairs model.
    pub tilde_tau2_fixed: Option<T>,
}

impl<T: Scalar> Default for SamplerConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 5000,
            burn_in: 2000,
            thinning: 1,
            seed: 0,
            nu0: T::one(),
            eta0: T::one(),
            r1: T::one(),
            delta1: T::lit(10.0),
            r2: T::one(),
            delta2: T::lit(10.0),
            tilde_tau2_fixed: None,
        }
    }
}

impl<T: Scalar> SamplerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be positive".into()));
        }
        let pos = [
            ("nu0", self.nu0),
            ("eta0", self.eta0),
            ("r1", self.r1),
            ("delta1", self.delta1),
            ("r2", self.r2),
            ("delta2", self.delta2),
        ];
        for (name, v) in pos.into_iter().chain(self.tilde_tau2_fixed.map(|v| ("tilde_tau2", v))) {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thinning
    }

    pub fn require_tilde_tau2(&self) -> Result<T> {
        self.tilde_tau2_fixed
            .ok_or_else(|| Error::Config("the all-pairs horseshoe model needs a fixed tilde_tau2".into()))
    }
}

/// A Gibbs state that the chain runner can record.
pub trait ChainState<T: Scalar>: Clone {
    fn beta(&self) -> &[T];
    fn sigma2(&self) -> T;
    /// Scale latents in the order given by `latent_names`.
    fn push_latents(&self, out: &mut Vec<T>);
    fn latent_names(&self) -> Vec<String>;
    fn all_positive(&self) -> bool;
}

pub(crate) fn all_pos<T: Scalar>(xs: &[T]) -> bool {
    xs.iter().all(|&v| v > T::zero() && v.is_finite())
}

/// Reciprocal kept strictly positive.
#[inline]
pub(crate) fn recip_pos<T: Scalar>(x: T) -> T {
    (T::one() / x).max(T::min_positive_value())
}

/// σ² ~ IG(n₁/2, s₁/2).
#[inline]
pub(crate) fn draw_sigma2<T: Scalar>(n1: T, s1: T, rng: &mut RngStream) -> T {
    let half = T::lit(0.5);
    inv_gamma(n1 * half, s1 * half, rng).max(T::min_positive_value())
}

/// Local Laplace scales: `1/τ_j² ~ IGauss(√(σ² λ²/β_j²), λ²)` for each
/// entry of `values` (coefficients or differences).
pub(crate) fn draw_laplace_scales<T: Scalar>(
    values: impl Iterator<Item = T>,
    sigma2: T,
    rate_sq: T,
    out: &mut [T],
    rng: &mut RngStream,
) {
    let lam = floored(rate_sq);
    for (slot, v) in out.iter_mut().zip(values) {
        let v2 = floored(v * v);
        let mean = (sigma2 * lam / v2).sqrt();
        *slot = recip_pos(inv_gaussian(mean, lam, rng));
    }
}

/// Laplace rate hyperparameter: `Ga(count + r, Σ scales / 2 + δ)`.
pub(crate) fn draw_rate_sq<T: Scalar>(scales: &[T], r: T, delta: T, rng: &mut RngStream) -> T {
    let count = T::lit(scales.len() as f64);
    let rate = scales.iter().copied().sum::<T>() * T::lit(0.5) + delta;
    gamma(count + r, rate, rng).max(T::min_positive_value())
}

/// Horseshoe local scale for one difference `d`:
/// `λ² ~ IG(1, d²/(2σ²τ̃²) + 1/ν)`.
#[inline]
pub(crate) fn draw_horseshoe_local<T: Scalar>(d: T, sigma2: T, tilde_tau2: T, nu: T, rng: &mut RngStream) -> T {
    let two = T::lit(2.0);
    inv_gamma(
        T::one(),
        d * d / (two * floored(sigma2 * tilde_tau2)) + T::one() / floored(nu),
        rng,
    )
    .max(T::min_positive_value())
}

/// Half-Cauchy auxiliary given its scale: `IG(1, 1/scale + 1)`.
#[inline]
pub(crate) fn draw_auxiliary<T: Scalar>(scale: T, rng: &mut RngStream) -> T {
    inv_gamma(T::one(), T::one() / floored(scale) + T::one(), rng).max(T::min_positive_value())
}

pub(crate) fn check_data<T: Scalar>(data: &RegressionData<T>, p: usize) -> Result<()> {
    if data.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "state has p = {p}, data has p = {}",
            data.p()
        )));
    }
    Ok(())
}

fn record<T: Scalar, S: ChainState<T>>(state: &S, out: &mut Vec<T>) {
    out.extend_from_slice(state.beta());
    out.push(state.sigma2());
    state.push_latents(out);
}

/// Runs `step` for `cfg.iterations` sweeps from `init` and keeps every
/// `cfg.thinning`-th post-burn-in state.
pub fn run_kernel<T, S, F>(
    model: ModelKind,
    init: S,
    data: &RegressionData<T>,
    cfg: &SamplerConfig<T>,
    rng: &mut RngStream,
    mut step: F,
) -> Result<PosteriorDraws<T>>
where
    T: Scalar,
    S: ChainState<T>,
    F: FnMut(&S, &RegressionData<T>, &SamplerConfig<T>, &mut RngStream) -> Result<S>,
{
    cfg.validate()?;
    let start = Instant::now();
    let p = init.beta().len();
    let mut columns: Vec<String> = (1..=p).map(|j| format!("beta_{j}")).collect();
    columns.push("sigma2".into());
    columns.extend(init.latent_names());
    let width = columns.len();
    let mut values = Vec::with_capacity(cfg.retained() * width);
    let mut state = init;
    for it in 0..cfg.iterations {
        state = step(&state, data, cfg, rng).map_err(|e| e.at_iteration(it))?;
        debug_assert!(state.all_positive(), "non-positive latent after sweep {it}");
        if it >= cfg.burn_in && (it - cfg.burn_in + 1) % cfg.thinning == 0 {
            record(&state, &mut values);
        }
    }
    Ok(PosteriorDraws::new(
        model,
        p,
        columns,
        values,
        cfg.clone(),
        start.elapsed().as_secs_f64(),
    ))
}

/// Runs one chain of `model` from the default initialization.
pub fn run_chain<T: Scalar>(
    model: ModelKind,
    data: &RegressionData<T>,
    cfg: &SamplerConfig<T>,
    rng: &mut RngStream,
) -> Result<PosteriorDraws<T>> {
    cfg.validate()?;
    let p = data.p();
    match model {
        ModelKind::BayesianLasso => run_kernel(
            model,
            BaselineChainState::init(Baseline::Lasso, p),
            data,
            cfg,
            rng,
            baseline_step,
        ),
        ModelKind::FusedLasso => run_kernel(
            model,
            BaselineChainState::init(Baseline::FusedLasso, p),
            data,
            cfg,
            rng,
            baseline_step,
        ),
        ModelKind::FusedHorseshoe => run_kernel(model, FusedChainState::init(p), data, cfg, rng, bfh_step),
        ModelKind::HorsesHorseshoe => {
            let tt = cfg.require_tilde_tau2()?;
            run_kernel(model, HorsesChainState::init(p, tt), data, cfg, rng, bhh_step)
        }
    }
}
