//! Joint-distribution ("getting it right") checks for the Gibbs kernels.
//!
//! Two samplers target the same joint law of parameters and data:
//!
//! * marginal-conditional: parameters from their prior, exactly;
//! * successive-conditional: alternate one kernel sweep given `y` with a
//!   fresh `y ~ N(Xβ, σ²I)` given the parameters.
//!
//! Moments of test functions must agree. The successive-conditional sweeps
//! are split over independent chains, each started from an exact joint draw,
//! so every sweep is stationary and the standard error comes from the spread
//! of the per-chain means. Under heavy-tailed priors one long chain can have
//! autocorrelation times in the thousands, which batch means cannot resolve.
//! With `chains = 1` a single chain and batch means are used instead.
//!
//! The fused kernels are derived from a joint in which every Gaussian factor
//! carries its own normalizing constant, so the coefficient prior is a
//! product of unnormalized kernels rather than `N(0, σ²B)`. Exact forward
//! draws come from integrating out the Laplace mixing scales, rescaling
//! `b = β/σ` and rejection sampling: `σ²` separates as
//! `IG((ν₀ + p − 1)/2, η₀/2)`, the coefficient rate picks up `(p − 1)/2`
//! extra shape, `b₁` is Laplace, the differences follow their own prior,
//! and a proposal is kept with probability `exp(−λ Σ_{j≥2} |b_j|)`.
//! Mixing scales are then drawn from their conditionals given `β`.
//!
//! Raw moments of σ² and of the scale latents are infinite under the default
//! hyperpriors, so the test functions are logs of the scales and `asinh β₁`.

use crate::data::RegressionData;
use crate::distributions::{gamma, inv_gamma, inv_gaussian, laplace};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::models::{
    baseline_step, bfh_step, bhh_step, Baseline, BaselineChainState, FusedChainState, HorsesChainState,
    SamplerConfig,
};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GewekeKernel {
    BayesianLasso,
    FusedLasso,
    FusedHorseshoe,
    /// All-pairs kernel at p = 2 with the given global scale; the only
    /// dimension with an exact forward sampler.
    HorsesPair { tilde_tau2: f64 },
}

impl GewekeKernel {
    pub fn name(self) -> &'static str {
        match self {
            GewekeKernel::BayesianLasso => "blasso",
            GewekeKernel::FusedLasso => "bfl",
            GewekeKernel::FusedHorseshoe => "bfh",
            GewekeKernel::HorsesPair { .. } => "bhh",
        }
    }

    /// Names of the four test functions, in the order reported.
    pub fn test_function_names(self) -> [&'static str; 4] {
        match self {
            GewekeKernel::BayesianLasso => ["asinh(beta_1)", "log(sigma2)", "log(tau2_1)", "log(lambda1_sq)"],
            GewekeKernel::FusedLasso => ["asinh(beta_1)", "log(sigma2)", "log(tau2_1)", "log(fusion_tau2_2)"],
            GewekeKernel::FusedHorseshoe | GewekeKernel::HorsesPair { .. } => {
                ["asinh(beta_1)", "log(sigma2)", "log(tau2_1)", "log(lambda2_2)"]
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct GewekeSettings {
    pub n: usize,
    pub p: usize,
    /// Successive-conditional sweeps in total, across all chains.
    pub sweeps: usize,
    /// Independent successive-conditional chains sharing `sweeps`.
    pub chains: usize,
    /// Batches for the standard error when `chains == 1`.
    pub batches: usize,
    pub forward_draws: usize,
    pub seed: u64,
    pub cfg: SamplerConfig<f64>,
}

impl Default for GewekeSettings {
    fn default() -> Self {
        Self {
            n: 20,
            p: 5,
            sweeps: 10_000,
            chains: 500,
            batches: 50,
            forward_draws: 100_000,
            seed: 20_240_601,
            cfg: SamplerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentCheck {
    pub function: String,
    /// 1 for the mean of g, 2 for the mean of g².
    pub order: u32,
    pub forward_mean: f64,
    pub forward_se: f64,
    pub chain_mean: f64,
    pub chain_se: f64,
}

impl MomentCheck {
    pub fn z(&self) -> f64 {
        (self.forward_mean - self.chain_mean) / (self.forward_se.powi(2) + self.chain_se.powi(2)).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct GewekeReport {
    pub kernel: GewekeKernel,
    pub checks: Vec<MomentCheck>,
    /// Acceptance rate of the forward rejection sampler.
    pub forward_acceptance: f64,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z().abs()).fold(0.0, f64::max)
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.checks.iter().all(|c| c.z().abs() < threshold)
    }
}

/// Parameters of one joint draw, in the form every kernel state needs.
#[derive(Clone, Debug)]
struct ForwardDraw {
    beta: Vec<f64>,
    sigma2: f64,
    tau2: Vec<f64>,
    rate1_sq: f64,
    /// Fused lasso: difference scales. Horseshoe: local scales.
    diff_scales: Vec<f64>,
    nu: Vec<f64>,
    rate2_sq: f64,
    tilde_tau2: f64,
    xi: f64,
}

fn sigma2_marginal(cfg: &SamplerConfig<f64>, extra: usize, rng: &mut RngStream) -> f64 {
    inv_gamma((cfg.nu0 + extra as f64) / 2.0, cfg.eta0 / 2.0, rng)
}

fn laplace_scales(beta_over_sigma: &[f64], rate: f64, rng: &mut RngStream) -> Vec<f64> {
    beta_over_sigma
        .iter()
        .map(|&b| 1.0 / inv_gaussian(rate / b.abs().max(1e-300), rate * rate, rng))
        .collect()
}

/// Returns the draw and the number of proposals it took.
fn forward_draw(kernel: GewekeKernel, p: usize, cfg: &SamplerConfig<f64>, rng: &mut RngStream) -> (ForwardDraw, usize) {
    match kernel {
        GewekeKernel::BayesianLasso => {
            let sigma2 = sigma2_marginal(cfg, 0, rng);
            let rate1_sq = gamma(cfg.r1, cfg.delta1, rng);
            let tau2: Vec<f64> = (0..p).map(|_| 2.0 / rate1_sq * gamma(1.0, 1.0, rng)).collect();
            let beta = tau2.iter().map(|&t| (sigma2 * t).sqrt() * rng.std_normal::<f64>()).collect();
            let d = ForwardDraw {
                beta,
                sigma2,
                tau2,
                rate1_sq,
                diff_scales: Vec::new(),
                nu: Vec::new(),
                rate2_sq: 1.0,
                tilde_tau2: 1.0,
                xi: 1.0,
            };
            (d, 1)
        }
        GewekeKernel::FusedLasso => {
            let sigma2 = sigma2_marginal(cfg, p - 1, rng);
            let mut tries = 0;
            let (b, r1, r2) = loop {
                tries += 1;
                let r1 = gamma(cfg.r1 + (p - 1) as f64 / 2.0, cfg.delta1, rng);
                let r2 = gamma(cfg.r2, cfg.delta2, rng);
                let (l1, l2) = (r1.sqrt(), r2.sqrt());
                let mut b = vec![laplace(1.0 / l1, rng)];
                for j in 1..p {
                    let next = b[j - 1] + laplace(1.0 / l2, rng);
                    b.push(next);
                }
                let pen: f64 = b[1..].iter().map(|v| v.abs()).sum();
                if rng.uniform::<f64>() < (-l1 * pen).exp() {
                    break (b, r1, r2);
                }
            };
            let diffs: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
            let tau2 = laplace_scales(&b, r1.sqrt(), rng);
            let fusion = laplace_scales(&diffs, r2.sqrt(), rng);
            let s = sigma2.sqrt();
            let d = ForwardDraw {
                beta: b.iter().map(|v| v * s).collect(),
                sigma2,
                tau2,
                rate1_sq: r1,
                diff_scales: fusion,
                nu: Vec::new(),
                rate2_sq: r2,
                tilde_tau2: 1.0,
                xi: 1.0,
            };
            (d, tries)
        }
        GewekeKernel::FusedHorseshoe | GewekeKernel::HorsesPair { .. } => {
            let fixed = match kernel {
                GewekeKernel::HorsesPair { tilde_tau2 } => Some(tilde_tau2),
                _ => None,
            };
            let sigma2 = sigma2_marginal(cfg, p - 1, rng);
            let mut tries = 0;
            let (b, r1, lam, nu, tt, xi) = loop {
                tries += 1;
                let r1 = gamma(cfg.r1 + (p - 1) as f64 / 2.0, cfg.delta1, rng);
                let l1 = r1.sqrt();
                let (tt, xi) = match fixed {
                    Some(t) => (t, 1.0),
                    None => {
                        let xi = inv_gamma(0.5, 1.0, rng);
                        (inv_gamma(0.5, 1.0 / xi, rng), xi)
                    }
                };
                let mut b = vec![laplace(1.0 / l1, rng)];
                let mut lam = Vec::with_capacity(p - 1);
                let mut nu = Vec::with_capacity(p - 1);
                for j in 1..p {
                    let v = inv_gamma(0.5, 1.0, rng);
                    let l = inv_gamma(0.5, 1.0 / v, rng);
                    let next = b[j - 1] + (l * tt).sqrt() * rng.std_normal::<f64>();
                    b.push(next);
                    lam.push(l);
                    nu.push(v);
                }
                let pen: f64 = b[1..].iter().map(|v| v.abs()).sum();
                if rng.uniform::<f64>() < (-l1 * pen).exp() {
                    break (b, r1, lam, nu, tt, xi);
                }
            };
            let tau2 = laplace_scales(&b, r1.sqrt(), rng);
            let s = sigma2.sqrt();
            let d = ForwardDraw {
                beta: b.iter().map(|v| v * s).collect(),
                sigma2,
                tau2,
                rate1_sq: r1,
                diff_scales: lam,
                nu,
                rate2_sq: 1.0,
                tilde_tau2: tt,
                xi,
            };
            (d, tries)
        }
    }
}

fn test_functions(kernel: GewekeKernel, d: &ForwardDraw) -> [f64; 4] {
    let last = match kernel {
        GewekeKernel::BayesianLasso => d.rate1_sq,
        _ => d.diff_scales[0],
    };
    [d.beta[0].asinh(), d.sigma2.ln(), d.tau2[0].ln(), last.ln()]
}

/// A kernel state the successive-conditional sampler can drive.
enum ChainAny {
    Baseline(BaselineChainState<f64>),
    Fused(FusedChainState<f64>),
    Horses(HorsesChainState<f64>),
}

impl ChainAny {
    fn from_draw(kernel: GewekeKernel, d: &ForwardDraw) -> Self {
        match kernel {
            GewekeKernel::BayesianLasso | GewekeKernel::FusedLasso => {
                let variant = if kernel == GewekeKernel::BayesianLasso {
                    Baseline::Lasso
                } else {
                    Baseline::FusedLasso
                };
                ChainAny::Baseline(BaselineChainState {
                    variant,
                    beta: d.beta.clone(),
                    sigma2: d.sigma2,
                    tau2: d.tau2.clone(),
                    fusion_tau2: d.diff_scales.clone(),
                    lambda1_sq: d.rate1_sq,
                    lambda2_sq: d.rate2_sq,
                })
            }
            GewekeKernel::FusedHorseshoe => ChainAny::Fused(FusedChainState {
                beta: d.beta.clone(),
                sigma2: d.sigma2,
                tau2: d.tau2.clone(),
                tilde_lambda1_sq: d.rate1_sq,
                tilde_tau2: d.tilde_tau2,
                lambda2: d.diff_scales.clone(),
                nu: d.nu.clone(),
                xi: d.xi,
            }),
            GewekeKernel::HorsesPair { .. } => ChainAny::Horses(HorsesChainState {
                beta: d.beta.clone(),
                sigma2: d.sigma2,
                tau2: d.tau2.clone(),
                tilde_lambda1_sq: d.rate1_sq,
                lambda2_pairs: d.diff_scales.clone(),
                nu_pairs: d.nu.clone(),
                tilde_tau2: d.tilde_tau2,
            }),
        }
    }

    fn step(&mut self, data: &RegressionData<f64>, cfg: &SamplerConfig<f64>, rng: &mut RngStream) -> Result<()> {
        match self {
            ChainAny::Baseline(s) => *s = baseline_step(s, data, cfg, rng)?,
            ChainAny::Fused(s) => *s = bfh_step(s, data, cfg, rng)?,
            ChainAny::Horses(s) => *s = bhh_step(s, data, cfg, rng)?,
        }
        Ok(())
    }

    fn beta_sigma2(&self) -> (&[f64], f64) {
        match self {
            ChainAny::Baseline(s) => (&s.beta, s.sigma2),
            ChainAny::Fused(s) => (&s.beta, s.sigma2),
            ChainAny::Horses(s) => (&s.beta, s.sigma2),
        }
    }

    fn test_functions(&self) -> [f64; 4] {
        match self {
            ChainAny::Baseline(s) => {
                let last = if s.variant == Baseline::Lasso {
                    s.lambda1_sq
                } else {
                    s.fusion_tau2[0]
                };
                [s.beta[0].asinh(), s.sigma2.ln(), s.tau2[0].ln(), last.ln()]
            }
            ChainAny::Fused(s) => [s.beta[0].asinh(), s.sigma2.ln(), s.tau2[0].ln(), s.lambda2[0].ln()],
            ChainAny::Horses(s) => [
                s.beta[0].asinh(),
                s.sigma2.ln(),
                s.tau2[0].ln(),
                s.lambda2_pairs[0].ln(),
            ],
        }
    }
}

fn draw_response(x: &Matrix<f64>, beta: &[f64], sigma2: f64, rng: &mut RngStream) -> Vec<f64> {
    let s = sigma2.sqrt();
    x.mul_vec(beta).into_iter().map(|m| m + s * rng.std_normal::<f64>()).collect()
}

fn mean_se_iid(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let m = xs[..batches * len].iter().sum::<f64>() / (batches * len) as f64;
    let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (m, (v / batches as f64).sqrt())
}

/// Runs both simulators and compares first and second moments of the four
/// test functions.
pub fn geweke_test(kernel: GewekeKernel, settings: &GewekeSettings) -> Result<GewekeReport> {
    let p = match kernel {
        GewekeKernel::HorsesPair { .. } => 2,
        _ => settings.p,
    };
    let mut cfg = settings.cfg.clone();
    if let GewekeKernel::HorsesPair { tilde_tau2 } = kernel {
        cfg.tilde_tau2_fixed = Some(tilde_tau2);
    }
    let n = settings.n;
    let mut xrng = RngStream::derive(settings.seed, &[1]);
    let x = Matrix::from_row_major(n, p, (0..n * p).map(|_| xrng.std_normal::<f64>()).collect())?;

    let mut frng = RngStream::derive(settings.seed, &[2]);
    let mut forward: Vec<[f64; 4]> = Vec::with_capacity(settings.forward_draws);
    let mut proposals = 0;
    for _ in 0..settings.forward_draws {
        let (d, tries) = forward_draw(kernel, p, &cfg, &mut frng);
        proposals += tries;
        forward.push(test_functions(kernel, &d));
    }

    let chains = settings.chains.max(1);
    let per_chain = settings.sweeps / chains;
    // chain_series[c][t] holds the test functions of chain c after sweep t
    let mut chain_series: Vec<Vec<[f64; 4]>> = Vec::with_capacity(chains);
    for c in 0..chains {
        let mut crng = RngStream::derive(settings.seed, &[3, c as u64]);
        let (start, _) = forward_draw(kernel, p, &cfg, &mut crng);
        let mut state = ChainAny::from_draw(kernel, &start);
        let y = draw_response(&x, &start.beta, start.sigma2, &mut crng);
        let mut data = RegressionData::new(x.clone(), y)?;
        let mut series = Vec::with_capacity(per_chain);
        for it in 0..per_chain {
            state.step(&data, &cfg, &mut crng).map_err(|e| e.at_iteration(it))?;
            let (beta, sigma2) = state.beta_sigma2();
            let y = draw_response(&x, beta, sigma2, &mut crng);
            data = data.with_response(y)?;
            series.push(state.test_functions());
        }
        chain_series.push(series);
    }

    let names = kernel.test_function_names();
    let mut checks = Vec::with_capacity(8);
    for (k, name) in names.iter().enumerate() {
        for order in [1u32, 2] {
            let g = |v: &[f64; 4]| v[k].powi(order as i32);
            let f: Vec<f64> = forward.iter().map(g).collect();
            let (fm, fse) = mean_se_iid(&f);
            let (cm, cse) = if chains == 1 {
                let c: Vec<f64> = chain_series[0].iter().map(g).collect();
                batch_means(&c, settings.batches)
            } else {
                let means: Vec<f64> = chain_series
                    .iter()
                    .map(|s| s.iter().map(g).sum::<f64>() / s.len() as f64)
                    .collect();
                mean_se_iid(&means)
            };
            checks.push(MomentCheck {
                function: name.to_string(),
                order,
                forward_mean: fm,
                forward_se: fse,
                chain_mean: cm,
                chain_se: cse,
            });
        }
    }
    Ok(GewekeReport {
        kernel,
        checks,
        forward_acceptance: settings.forward_draws as f64 / proposals as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_means_of_constant_series() {
        let (m, se) = batch_means(&[2.0; 100], 10);
        assert_eq!((m, se), (2.0, 0.0));
    }

    #[test]
    fn forward_draw_dimensions() {
        let cfg = SamplerConfig::default();
        let mut rng = RngStream::new(3);
        let (d, _) = forward_draw(GewekeKernel::FusedHorseshoe, 5, &cfg, &mut rng);
        assert_eq!((d.beta.len(), d.tau2.len(), d.diff_scales.len(), d.nu.len()), (5, 5, 4, 4));
        let (d, _) = forward_draw(GewekeKernel::FusedLasso, 5, &cfg, &mut rng);
        assert_eq!(d.diff_scales.len(), 4);
    }
}
