//! Fused lasso with a horseshoe prior on successive differences.

use crate::data::RegressionData;
use crate::distributions::inv_gamma;
use crate::error::Result;
use crate::linalg::{build_fused_precision, sample_beta_conditional};
use crate::rng::RngStream;
use crate::scalar::{floored, Scalar};

use super::{
    all_pos, check_data, draw_auxiliary, draw_horseshoe_local, draw_laplace_scales, draw_rate_sq, draw_sigma2, ChainState,
    SamplerConfig,
};

#[derive(Clone, Debug, PartialEq)]
pub struct FusedChainState<T> {
    pub beta: Vec<T>,
    pub sigma2: T,
    /// Local Laplace mixing scales τ_j², one per coefficient.
    pub tau2: Vec<T>,
    /// Laplace rate λ̃₁².
    pub tilde_lambda1_sq: T,
    /// Global horseshoe scale τ̃².
    pub tilde_tau2: T,
    /// Local horseshoe scales λ_j², `lambda2[i]` for the difference `β_{i+1} − β_i`.
    pub lambda2: Vec<T>,
    pub nu: Vec<T>,
    pub xi: T,
}

impl<T: Scalar> FusedChainState<T> {
    pub fn init(p: usize) -> Self {
        let m = p.saturating_sub(1);
        Self {
            beta: vec![T::zero(); p],
            sigma2: T::one(),
            tau2: vec![T::one(); p],
            tilde_lambda1_sq: T::one(),
            tilde_tau2: T::one(),
            lambda2: vec![T::one(); m],
            nu: vec![T::one(); m],
            xi: T::one(),
        }
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Shape numerator `n₁ = n + 2p − 1 + ν₀` of the σ² conditional.
    pub fn sigma2_shape_n1(n: usize, p: usize, nu0: T) -> T {
        T::lit((n + 2 * p) as f64 - 1.0) + nu0
    }
}

impl<T: Scalar> ChainState<T> for FusedChainState<T> {
    fn beta(&self) -> &[T] {
        &self.beta
    }

    fn sigma2(&self) -> T {
        self.sigma2
    }

    fn push_latents(&self, out: &mut Vec<T>) {
        out.extend_from_slice(&self.tau2);
        out.push(self.tilde_lambda1_sq);
        out.push(self.tilde_tau2);
        out.extend_from_slice(&self.lambda2);
        out.extend_from_slice(&self.nu);
        out.push(self.xi);
    }

    fn latent_names(&self) -> Vec<String> {
        let p = self.p();
        let mut v: Vec<String> = (1..=p).map(|j| format!("tau2_{j}")).collect();
        v.push("tilde_lambda1_sq".into());
        v.push("tilde_tau2".into());
        v.extend((2..=p).map(|j| format!("lambda2_{j}")));
        v.extend((2..=p).map(|j| format!("nu_{j}")));
        v.push("xi".into());
        v
    }

    fn all_positive(&self) -> bool {
        all_pos(&self.tau2)
            && all_pos(&self.lambda2)
            && all_pos(&self.nu)
            && all_pos(&[self.sigma2, self.tilde_lambda1_sq, self.tilde_tau2, self.xi])
    }
}

/// One systematic scan: β → σ² → τ² → λ̃₁² → τ̃² → λ² → ν → ξ.
pub fn bfh_step<T: Scalar>(
    state: &FusedChainState<T>,
    data: &RegressionData<T>,
    cfg: &SamplerConfig<T>,
    rng: &mut RngStream,
) -> Result<FusedChainState<T>> {
    let p = state.p();
    check_data(data, p)?;
    let mut s = state.clone();
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let binv = build_fused_precision(&s.tau2, &s.lambda2, s.tilde_tau2)?;
    s.beta = sample_beta_conditional(data.xtx(), data.xty(), &binv, s.sigma2, rng)?;

    let n1 = FusedChainState::sigma2_shape_n1(data.n(), p, cfg.nu0);
    let s1 = data.residual_ss(&s.beta) + binv.quad_form(&s.beta) + cfg.eta0;
    s.sigma2 = draw_sigma2(n1, s1, rng);

    draw_laplace_scales(s.beta.iter().copied(), s.sigma2, s.tilde_lambda1_sq, &mut s.tau2, rng);
    s.tilde_lambda1_sq = draw_rate_sq(&s.tau2, cfg.r1, cfg.delta1, rng);

    let diffs: Vec<T> = s.beta.windows(2).map(|w| w[1] - w[0]).collect();
    let weighted: T = diffs
        .iter()
        .zip(&s.lambda2)
        .map(|(&d, &l)| d * d / floored(l))
        .sum();
    s.tilde_tau2 = inv_gamma(
        T::lit(p as f64) * half,
        weighted / (two * s.sigma2) + T::one() / floored(s.xi),
        rng,
    )
    .max(T::min_positive_value());

    for (j, &d) in diffs.iter().enumerate() {
        s.lambda2[j] = draw_horseshoe_local(d, s.sigma2, s.tilde_tau2, s.nu[j], rng);
    }
    for (nu, &l) in s.nu.iter_mut().zip(&s.lambda2) {
        *nu = draw_auxiliary(l, rng);
    }
    s.xi = draw_auxiliary(s.tilde_tau2, rng);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn sigma2_shape_arithmetic() {
        let n1 = FusedChainState::<f64>::sigma2_shape_n1(50, 20, 1.0);
        assert_eq!(n1 / 2.0, 45.0);
    }

    #[test]
    fn step_keeps_dimensions_and_positivity() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.5],
            vec![0.0, 1.0, -0.5],
            vec![-1.0, 0.5, 0.0],
            vec![0.0, -1.5, 0.0],
        ])
        .unwrap();
        let data = RegressionData::new(x, vec![1.0, -1.0, 0.5, 0.2]).unwrap();
        let cfg = SamplerConfig::default();
        let mut rng = RngStream::new(1);
        let mut s = FusedChainState::init(3);
        for _ in 0..200 {
            s = bfh_step(&s, &data, &cfg, &mut rng).unwrap();
            assert!(s.all_positive());
            assert_eq!((s.tau2.len(), s.lambda2.len(), s.nu.len()), (3, 2, 2));
        }
        assert_eq!(s.latent_names().len(), {
            let mut v = Vec::new();
            s.push_latents(&mut v);
            v.len()
        });
    }
}
