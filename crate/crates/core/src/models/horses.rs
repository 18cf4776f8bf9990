//! All-pairs fusion (HORSES) with a horseshoe prior on every pairwise
//! difference. The global scale τ̃² is a tuning parameter and is not sampled.

use crate::data::RegressionData;
use crate::error::{Error, Result};
use crate::linalg::{build_horses_precision, pair_count, pairs, sample_beta_conditional};
use crate::rng::RngStream;
use crate::scalar::Scalar;

use super::{
    all_pos, check_data, draw_auxiliary, draw_horseshoe_local, draw_laplace_scales, draw_rate_sq, draw_sigma2,
    ChainState, SamplerConfig,
};

#[derive(Clone, Debug, PartialEq)]
pub struct HorsesChainState<T> {
    pub beta: Vec<T>,
    pub sigma2: T,
    pub tau2: Vec<T>,
    pub tilde_lambda1_sq: T,
    /// λ²_{j,k} for j > k, indexed by [`crate::linalg::pair_index`].
    pub lambda2_pairs: Vec<T>,
    pub nu_pairs: Vec<T>,
    /// Fixed for the life of the chain.
    pub tilde_tau2: T,
}

impl<T: Scalar> HorsesChainState<T> {
    pub fn init(p: usize, tilde_tau2: T) -> Self {
        let m = pair_count(p);
        Self {
            beta: vec![T::zero(); p],
            sigma2: T::one(),
            tau2: vec![T::one(); p],
            tilde_lambda1_sq: T::one(),
            lambda2_pairs: vec![T::one(); m],
            nu_pairs: vec![T::one(); m],
            tilde_tau2,
        }
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// `n₁ = n + p(p+1)/2 + ν₀`.
    pub fn sigma2_shape_n1(n: usize, p: usize, nu0: T) -> T {
        T::lit((n + p * (p + 1) / 2) as f64) + nu0
    }
}

impl<T: Scalar> ChainState<T> for HorsesChainState<T> {
    fn beta(&self) -> &[T] {
        &self.beta
    }

    fn sigma2(&self) -> T {
        self.sigma2
    }

    fn push_latents(&self, out: &mut Vec<T>) {
        out.extend_from_slice(&self.tau2);
        out.push(self.tilde_lambda1_sq);
        out.extend_from_slice(&self.lambda2_pairs);
        out.extend_from_slice(&self.nu_pairs);
    }

    fn latent_names(&self) -> Vec<String> {
        let p = self.p();
        let mut v: Vec<String> = (1..=p).map(|j| format!("tau2_{j}")).collect();
        v.push("tilde_lambda1_sq".into());
        v.extend(pairs(p).map(|(j, k)| format!("lambda2_{}_{}", j + 1, k + 1)));
        v.extend(pairs(p).map(|(j, k)| format!("nu_{}_{}", j + 1, k + 1)));
        v
    }

    fn all_positive(&self) -> bool {
        all_pos(&self.tau2)
            && all_pos(&self.lambda2_pairs)
            && all_pos(&self.nu_pairs)
            && all_pos(&[self.sigma2, self.tilde_lambda1_sq, self.tilde_tau2])
    }
}

/// One systematic scan: β → σ² → τ² → λ̃₁² → λ²_{j,k} → ν_{j,k}.
///
/// The global scale comes from `cfg.tilde_tau2_fixed`, which overrides the
/// value carried in the state.
pub fn bhh_step<T: Scalar>(
    state: &HorsesChainState<T>,
    data: &RegressionData<T>,
    cfg: &SamplerConfig<T>,
    rng: &mut RngStream,
) -> Result<HorsesChainState<T>> {
    let tilde_tau2 = cfg.require_tilde_tau2()?;
    let p = state.p();
    check_data(data, p)?;
    if state.lambda2_pairs.len() != pair_count(p) || state.nu_pairs.len() != pair_count(p) {
        return Err(Error::DimensionMismatch("pair latents do not match p".into()));
    }
    let mut s = state.clone();
    s.tilde_tau2 = tilde_tau2;

    let binv = build_horses_precision(&s.tau2, &s.lambda2_pairs, tilde_tau2)?;
    s.beta = sample_beta_conditional(data.xtx(), data.xty(), &binv, s.sigma2, rng)?;

    let n1 = HorsesChainState::sigma2_shape_n1(data.n(), p, cfg.nu0);
    let s1 = data.residual_ss(&s.beta) + binv.quad_form(&s.beta) + cfg.eta0;
    s.sigma2 = draw_sigma2(n1, s1, rng);

    draw_laplace_scales(s.beta.iter().copied(), s.sigma2, s.tilde_lambda1_sq, &mut s.tau2, rng);
    s.tilde_lambda1_sq = draw_rate_sq(&s.tau2, cfg.r1, cfg.delta1, rng);

    for (idx, (j, k)) in pairs(p).enumerate() {
        let d = s.beta[j] - s.beta[k];
        s.lambda2_pairs[idx] = draw_horseshoe_local(d, s.sigma2, tilde_tau2, s.nu_pairs[idx], rng);
    }
    for (nu, &l) in s.nu_pairs.iter_mut().zip(&s.lambda2_pairs) {
        *nu = draw_auxiliary(l, rng);
    }
    Ok(s)
}
