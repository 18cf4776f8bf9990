//! Bayesian lasso and Bayesian fused lasso, the two comparison samplers.
//!
//! Conditionals follow from the normal/exponential scale-mixture hierarchies
//! with `σ² ~ IG(ν₀/2, η₀/2)`, `λ₁² ~ Ga(r₁, δ₁)` and, for the fused variant,
//! `λ₂² ~ Ga(r₂, δ₂)`:
//!
//! ```text
//! β      | ·  ~ N(A⁻¹Xᵀy, σ²A⁻¹),  A = XᵀX + B⁻¹
//! σ²     | ·  ~ IG((n + m + ν₀)/2, (‖y − Xβ‖² + βᵀB⁻¹β + η₀)/2)
//! 1/τ_j² | ·  ~ IGauss(√(σ²λ₁²/β_j²), λ₁²)
//! 1/ω_j² | ·  ~ IGauss(√(σ²λ₂²/(β_j − β_{j−1})²), λ₂²)      (fused)
//! λ₁²    | ·  ~ Ga(p + r₁, Σ τ_j²/2 + δ₁)
//! λ₂²    | ·  ~ Ga(p − 1 + r₂, Σ ω_j²/2 + δ₂)                 (fused)
//! ```
//!
//! `B⁻¹ = diag(1/τ²)` and `m = p` for the lasso; for the fused lasso `B⁻¹`
//! is the tridiagonal fused precision with difference variances ω_j² and
//! `m = 2p − 1`.

use crate::data::RegressionData;
use crate::error::{Error, Result};
use crate::linalg::{build_fused_precision, sample_beta_conditional, PrecisionMatrix};
use crate::rng::RngStream;
use crate::scalar::{floored, Scalar};

use super::{all_pos, check_data, draw_laplace_scales, draw_rate_sq, draw_sigma2, ChainState, SamplerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Lasso,
    FusedLasso,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineChainState<T> {
    pub variant: Baseline,
    pub beta: Vec<T>,
    pub sigma2: T,
    pub tau2: Vec<T>,
    /// Difference variances ω_j² (`fusion_tau2[i]` for `β_{i+1} − β_i`);
    /// empty for the lasso.
    pub fusion_tau2: Vec<T>,
    pub lambda1_sq: T,
    /// Unused by the lasso.
    pub lambda2_sq: T,
}

impl<T: Scalar> BaselineChainState<T> {
    pub fn init(variant: Baseline, p: usize) -> Self {
        let m = match variant {
            Baseline::Lasso => 0,
            Baseline::FusedLasso => p.saturating_sub(1),
        };
        Self {
            variant,
            beta: vec![T::zero(); p],
            sigma2: T::one(),
            tau2: vec![T::one(); p],
            fusion_tau2: vec![T::one(); m],
            lambda1_sq: T::one(),
            lambda2_sq: T::one(),
        }
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn precision(&self) -> Result<PrecisionMatrix<T>> {
        match self.variant {
            Baseline::Lasso => Ok(PrecisionMatrix::Tridiagonal {
                diag: self.tau2.iter().map(|&t| T::one() / floored(t)).collect(),
                off: vec![T::zero(); self.p().saturating_sub(1)],
            }),
            Baseline::FusedLasso => build_fused_precision(&self.tau2, &self.fusion_tau2, T::one()),
        }
    }

    pub fn sigma2_shape_n1(&self, n: usize, nu0: T) -> T {
        let p = self.p();
        let m = match self.variant {
            Baseline::Lasso => p,
            Baseline::FusedLasso => 2 * p - 1,
        };
        T::lit((n + m) as f64) + nu0
    }
}

impl<T: Scalar> ChainState<T> for BaselineChainState<T> {
    fn beta(&self) -> &[T] {
        &self.beta
    }

    fn sigma2(&self) -> T {
        self.sigma2
    }

    fn push_latents(&self, out: &mut Vec<T>) {
        out.extend_from_slice(&self.tau2);
        out.extend_from_slice(&self.fusion_tau2);
        out.push(self.lambda1_sq);
        if self.variant == Baseline::FusedLasso {
            out.push(self.lambda2_sq);
        }
    }

    fn latent_names(&self) -> Vec<String> {
        let p = self.p();
        let mut v: Vec<String> = (1..=p).map(|j| format!("tau2_{j}")).collect();
        v.extend((0..self.fusion_tau2.len()).map(|i| format!("fusion_tau2_{}", i + 2)));
        v.push("lambda1_sq".into());
        if self.variant == Baseline::FusedLasso {
            v.push("lambda2_sq".into());
        }
        v
    }

    fn all_positive(&self) -> bool {
        all_pos(&self.tau2) && all_pos(&self.fusion_tau2) && all_pos(&[self.sigma2, self.lambda1_sq, self.lambda2_sq])
    }
}

/// One systematic scan: β → σ² → τ² → (ω²) → λ₁² → (λ₂²).
pub fn baseline_step<T: Scalar>(
    state: &BaselineChainState<T>,
    data: &RegressionData<T>,
    cfg: &SamplerConfig<T>,
    rng: &mut RngStream,
) -> Result<BaselineChainState<T>> {
    let p = state.p();
    check_data(data, p)?;
    if state.variant == Baseline::FusedLasso && state.fusion_tau2.len() + 1 != p {
        return Err(Error::DimensionMismatch("fusion scales do not match p".into()));
    }
    let mut s = state.clone();

    let binv = s.precision()?;
    s.beta = sample_beta_conditional(data.xtx(), data.xty(), &binv, s.sigma2, rng)?;

    let n1 = s.sigma2_shape_n1(data.n(), cfg.nu0);
    let s1 = data.residual_ss(&s.beta) + binv.quad_form(&s.beta) + cfg.eta0;
    s.sigma2 = draw_sigma2(n1, s1, rng);

    draw_laplace_scales(s.beta.iter().copied(), s.sigma2, s.lambda1_sq, &mut s.tau2, rng);
    if s.variant == Baseline::FusedLasso {
        let diffs = s.beta.windows(2).map(|w| w[1] - w[0]);
        draw_laplace_scales(diffs, s.sigma2, s.lambda2_sq, &mut s.fusion_tau2, rng);
    }
    s.lambda1_sq = draw_rate_sq(&s.tau2, cfg.r1, cfg.delta1, rng);
    if s.variant == Baseline::FusedLasso {
        s.lambda2_sq = draw_rate_sq(&s.fusion_tau2, cfg.r2, cfg.delta2, rng);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_by_variant() {
        let l = BaselineChainState::<f64>::init(Baseline::Lasso, 5);
        let f = BaselineChainState::<f64>::init(Baseline::FusedLasso, 5);
        assert_eq!(l.sigma2_shape_n1(20, 1.0), 26.0);
        assert_eq!(f.sigma2_shape_n1(20, 1.0), 30.0);
        assert_eq!(l.latent_names().len(), 6);
        assert_eq!(f.latent_names().len(), 11);
    }

    #[test]
    fn lasso_precision_is_diagonal() {
        let mut s = BaselineChainState::<f64>::init(Baseline::Lasso, 3);
        s.tau2 = vec![0.5, 2.0, 4.0];
        let b = s.precision().unwrap().to_dense();
        assert_eq!(b.as_slice(), &[2.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.25]);
    }
}
