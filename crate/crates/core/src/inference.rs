//! Posterior summaries, WAIC, tuning-grid selection and leave-one-out
//! cross-validation.

use std::path::Path;

use rand::RngCore;
use rayon::prelude::*;

use crate::data::{fmt_num, standardize, write_csv_atomic, Dataset, RegressionData};
use crate::distributions::loglik_from_residual;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::models::{run_chain, ModelKind, SamplerConfig};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Retained draws of one chain, one row per draw.
///
/// Column layout: `beta_1..beta_p`, `sigma2`, then the model's latents.
#[derive(Clone, Debug)]
pub struct PosteriorDraws<T> {
    pub model: ModelKind,
    pub p: usize,
    pub columns: Vec<String>,
    values: Vec<T>,
    pub config: SamplerConfig<T>,
    pub wall_secs: f64,
}

impl<T: Scalar> PosteriorDraws<T> {
    /// `values` is row-major with `columns.len()` entries per draw.
    pub fn new(
        model: ModelKind,
        p: usize,
        columns: Vec<String>,
        values: Vec<T>,
        config: SamplerConfig<T>,
        wall_secs: f64,
    ) -> Self {
        assert!(columns.len() > p, "columns must hold beta and sigma2");
        assert_eq!(values.len() % columns.len(), 0, "ragged draw matrix");
        Self {
            model,
            p,
            columns,
            values,
            config,
            wall_secs,
        }
    }

    /// Builds draws holding only β and σ²; handy for scoring external samples.
    pub fn from_beta_sigma2(model: ModelKind, betas: &[Vec<T>], sigma2: &[T]) -> Result<Self> {
        if betas.len() != sigma2.len() || betas.is_empty() {
            return Err(Error::DimensionMismatch("need one sigma2 per beta draw".into()));
        }
        let p = betas[0].len();
        let mut values = Vec::with_capacity(betas.len() * (p + 1));
        for (b, &s) in betas.iter().zip(sigma2) {
            if b.len() != p {
                return Err(Error::DimensionMismatch("beta draws differ in length".into()));
            }
            values.extend_from_slice(b);
            values.push(s);
        }
        let mut columns: Vec<String> = (1..=p).map(|j| format!("beta_{j}")).collect();
        columns.push("sigma2".into());
        Ok(Self::new(model, p, columns, values, SamplerConfig::default(), 0.0))
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Number of retained draws.
    pub fn len(&self) -> usize {
        self.values.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, s: usize) -> &[T] {
        let w = self.width();
        &self.values[s * w..(s + 1) * w]
    }

    pub fn beta(&self, s: usize) -> &[T] {
        &self.row(s)[..self.p]
    }

    pub fn sigma2(&self, s: usize) -> T {
        self.row(s)[self.p]
    }

    pub fn column(&self, name: &str) -> Option<Vec<T>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some((0..self.len()).map(|s| self.row(s)[j]).collect())
    }

    pub fn column_at(&self, j: usize) -> Vec<T> {
        (0..self.len()).map(|s| self.row(s)[j]).collect()
    }

    pub fn posterior_mean_beta(&self) -> Vec<T> {
        let s = self.len();
        let mut m = vec![T::zero(); self.p];
        for i in 0..s {
            for (acc, &b) in m.iter_mut().zip(self.beta(i)) {
                *acc += b;
            }
        }
        let sf = T::lit(s as f64);
        m.iter_mut().for_each(|v| *v /= sf);
        m
    }

    /// Wide CSV, one row per draw.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = (0..self.len()).map(|s| self.row(s).iter().map(|&v| fmt_num(v)).collect::<Vec<_>>());
        write_csv_atomic(path, &self.columns, rows)
    }
}

/// Per-coefficient posterior summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate<T> {
    /// Posterior mean.
    pub point: Vec<T>,
    pub median: Vec<T>,
    pub ci_lower: Vec<T>,
    pub ci_upper: Vec<T>,
    pub level: T,
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    let h = q * T::lit((n - 1) as f64);
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(n - 1);
    if i + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Mean, median and equal-tailed credible interval of each β_j.
pub fn summarize<T: Scalar>(draws: &PosteriorDraws<T>, level: T) -> Result<Estimate<T>> {
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::Config(format!("credible level must lie in (0, 1), got {level}")));
    }
    let s = draws.len();
    if s < 2 {
        return Err(Error::InsufficientDraws { needed: 2, got: s });
    }
    let tail = (T::one() - level) * T::lit(0.5);
    let mut est = Estimate {
        point: Vec::with_capacity(draws.p),
        median: Vec::with_capacity(draws.p),
        ci_lower: Vec::with_capacity(draws.p),
        ci_upper: Vec::with_capacity(draws.p),
        level,
    };
    for j in 0..draws.p {
        let mut col = draws.column_at(j);
        // Summation order fixed by sorting first so the mean is permutation-invariant.
        col.sort_by(|a, b| a.partial_cmp(b).expect("NaN in draws"));
        let mean = col.iter().copied().sum::<T>() / T::lit(s as f64);
        est.point.push(mean);
        est.median.push(quantile_sorted(&col, T::lit(0.5)));
        est.ci_lower.push(quantile_sorted(&col, tail));
        est.ci_upper.push(quantile_sorted(&col, T::one() - tail));
    }
    Ok(est)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelScore<T> {
    pub waic: T,
    pub lppd: T,
    pub p_waic: T,
    /// Per-observation `−2(lppd_i − p_waic_i)`.
    pub pointwise: Vec<T>,
}

fn log_mean_exp<T: Scalar>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let s: T = xs.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln() - T::lit(xs.len() as f64).ln()
}

fn sample_variance<T: Scalar>(xs: &[T]) -> T {
    let n = T::lit(xs.len() as f64);
    let mean = xs.iter().copied().sum::<T>() / n;
    xs.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one())
}

/// WAIC from a matrix of pointwise log-likelihoods, one row per observation
/// and one column per draw.
pub fn waic_from_loglik<T: Scalar>(loglik: &Matrix<T>) -> Result<ModelScore<T>> {
    let s = loglik.cols();
    if s < 2 {
        return Err(Error::InsufficientDraws { needed: 2, got: s });
    }
    let mut lppd = T::zero();
    let mut p_waic = T::zero();
    let mut pointwise = Vec::with_capacity(loglik.rows());
    for i in 0..loglik.rows() {
        let row = loglik.row(i);
        let l = log_mean_exp(row);
        let v = sample_variance(row);
        lppd += l;
        p_waic += v;
        pointwise.push(-T::lit(2.0) * (l - v));
    }
    Ok(ModelScore {
        waic: -T::lit(2.0) * (lppd - p_waic),
        lppd,
        p_waic,
        pointwise,
    })
}

/// Pointwise Gaussian log-likelihood matrix (observations × draws).
pub fn pointwise_loglik<T: Scalar>(draws: &PosteriorDraws<T>, data: &RegressionData<T>) -> Result<Matrix<T>> {
    if draws.p != data.p() {
        return Err(Error::DimensionMismatch(format!("draws have p = {}, data p = {}", draws.p, data.p())));
    }
    let (n, s) = (data.n(), draws.len());
    let mut out = Matrix::zeros(n, s);
    for d in 0..s {
        let beta = draws.beta(d);
        let sigma2 = draws.sigma2(d);
        if !(sigma2 > T::zero()) {
            return Err(Error::domain("sigma2", sigma2.to_f64_lossy()));
        }
        for i in 0..n {
            out[(i, d)] = loglik_from_residual(data.y()[i] - dot(data.x().row(i), beta), sigma2);
        }
    }
    Ok(out)
}

/// `waic = −2(lppd − p_waic)` with the log-sum-exp inner mean and the
/// `S − 1` variance divisor.
pub fn compute_waic<T: Scalar>(draws: &PosteriorDraws<T>, data: &RegressionData<T>) -> Result<ModelScore<T>> {
    if draws.len() < 2 {
        return Err(Error::InsufficientDraws {
            needed: 2,
            got: draws.len(),
        });
    }
    waic_from_loglik(&pointwise_loglik(draws, data)?)
}

/// Default grid for the all-pairs global scale: five log-spaced values on
/// `[10⁴, 10⁶]`.
pub fn default_bhh_grid<T: Scalar>() -> Vec<T> {
    log_grid(T::lit(1e4), T::lit(1e6), 5)
}

fn log_grid<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut v: Vec<T> = (0..n)
        .map(|k| (la + (lb - la) * T::lit(k as f64) / T::lit((n - 1) as f64)).exp())
        .collect();
    v[0] = a;
    v[n - 1] = b;
    v
}

fn lin_grid<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a];
    }
    let mut v: Vec<T> = (0..n)
        .map(|k| a + (b - a) * T::lit(k as f64) / T::lit((n - 1) as f64))
        .collect();
    v[n - 1] = b;
    v
}

/// Parses `a:b:Nlog`, `a:b:Nlin` or a comma-separated list of positive values.
pub fn parse_grid<T: Scalar>(spec: &str) -> Result<Vec<T>> {
    let bad = || Error::Config(format!("cannot parse grid `{spec}`"));
    let num = |s: &str| -> Result<T> {
        let v: f64 = s.trim().parse().map_err(|_| bad())?;
        Ok(T::lit(v))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, n] => {
            let n = n.trim();
            let (count, kind) = n.split_at(n.find(|c: char| !c.is_ascii_digit()).unwrap_or(n.len()));
            let count: usize = count.parse().map_err(|_| bad())?;
            if count == 0 {
                return Err(bad());
            }
            let (a, b) = (num(a)?, num(b)?);
            match kind {
                "log" | "" => {
                    if !(a > T::zero() && b > T::zero()) {
                        return Err(bad());
                    }
                    log_grid(a, b, count)
                }
                "lin" => lin_grid(a, b, count),
                _ => return Err(bad()),
            }
        }
        [_] => spec.split(',').map(num).collect::<Result<Vec<T>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() || grid.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::Config(format!("grid `{spec}` must hold positive finite values")));
    }
    Ok(grid)
}

#[derive(Clone, Debug)]
pub struct TuningResult<T> {
    pub best: T,
    pub best_index: usize,
    /// `(grid value, score)` in grid order.
    pub scores: Vec<(T, ModelScore<T>)>,
    /// Draws of the chain run at the selected value.
    pub draws: PosteriorDraws<T>,
}

/// Fits one chain per grid value and keeps the value with the smallest WAIC.
///
/// All grid values share one random stream (common random numbers), so
/// equal grid values give equal scores. Ties go to the smaller value, then to
/// the earlier index.
pub fn select_tuning<T: Scalar>(
    grid: &[T],
    model: ModelKind,
    data: &RegressionData<T>,
    cfg: &SamplerConfig<T>,
    rng: &mut RngStream,
) -> Result<TuningResult<T>> {
    if grid.is_empty() {
        return Err(Error::Config("tuning grid is empty".into()));
    }
    if !model.is_tuned() {
        return Err(Error::Config(format!("model {model} has no tuning parameter")));
    }
    let base = rng.next_u64();
    let fits: Vec<(PosteriorDraws<T>, ModelScore<T>)> = grid
        .par_iter()
        .map(|&g| {
            let cfg_g = SamplerConfig {
                tilde_tau2_fixed: Some(g),
                ..cfg.clone()
            };
            let mut r = RngStream::new(base);
            let draws = run_chain(model, data, &cfg_g, &mut r)?;
            let score = compute_waic(&draws, data)?;
            Ok((draws, score))
        })
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, (_, sc)) in fits.iter().enumerate().skip(1) {
        let cur = &fits[best_index].1;
        let better = sc.waic < cur.waic || (sc.waic == cur.waic && grid[i] < grid[best_index]);
        if better {
            best_index = i;
        }
    }
    let scores = grid.iter().copied().zip(fits.iter().map(|(_, s)| s.clone())).collect();
    let draws = fits.into_iter().nth(best_index).map(|(d, _)| d).expect("non-empty");
    Ok(TuningResult {
        best: grid[best_index],
        best_index,
        scores,
        draws,
    })
}

/// Fits `model` once; tuned models either use the fixed value in `cfg` or
/// select from `grid`. Returns the draws and the tuning value used.
pub fn fit_model<T: Scalar>(
    model: ModelKind,
    data: &RegressionData<T>,
    grid: Option<&[T]>,
    cfg: &SamplerConfig<T>,
    rng: &mut RngStream,
) -> Result<(PosteriorDraws<T>, Option<T>)> {
    match (model.is_tuned(), grid) {
        (true, Some(g)) => {
            let t = select_tuning(g, model, data, cfg, rng)?;
            Ok((t.draws, Some(t.best)))
        }
        (true, None) => {
            let tt = cfg.require_tilde_tau2()?;
            Ok((run_chain(model, data, cfg, rng)?, Some(tt)))
        }
        (false, _) => Ok((run_chain(model, data, cfg, rng)?, None)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoocvResult<T> {
    pub cv_mean: T,
    /// Sample standard deviation across folds (divisor n − 1).
    pub cv_sd: T,
    pub fold_errors: Vec<T>,
    pub predictions: Vec<T>,
}

/// Leave-one-out driver around an arbitrary predictor.
///
/// `predict(train, x_test, test_index, rng)` returns the prediction of the
/// held-out response on its original scale. Fold `i` gets the stream derived
/// from `(seed, i)`, so results do not depend on scheduling.
pub fn loocv_with<T, F>(dataset: &Dataset<T>, seed: u64, predict: F) -> Result<LoocvResult<T>>
where
    T: Scalar,
    F: Fn(&Dataset<T>, &[T], usize, &mut RngStream) -> Result<T> + Sync,
{
    let n = dataset.n();
    if n < 2 {
        return Err(Error::Config(format!("leave-one-out needs n >= 2, got {n}")));
    }
    let preds: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&r| r != i).collect();
            let train = dataset.select_rows(&keep)?;
            let mut rng = RngStream::derive(seed, &[i as u64]);
            predict(&train, dataset.x.row(i), i, &mut rng)
        })
        .collect::<Result<_>>()?;
    let fold_errors: Vec<T> = preds
        .iter()
        .zip(&dataset.y)
        .map(|(&p, &y)| (y - p) * (y - p))
        .collect();
    let nf = T::lit(n as f64);
    let cv_mean = fold_errors.iter().copied().sum::<T>() / nf;
    let cv_sd = sample_variance(&fold_errors).sqrt();
    Ok(LoocvResult {
        cv_mean,
        cv_sd,
        fold_errors,
        predictions: preds,
    })
}

/// Leave-one-out squared prediction error of `model`. Each fold standardizes
/// its training rows, selects the tuning value on them when `grid` is given,
/// and predicts with the posterior-mean coefficients.
pub fn loocv<T: Scalar>(
    model: ModelKind,
    dataset: &Dataset<T>,
    grid: Option<&[T]>,
    cfg: &SamplerConfig<T>,
    seed: u64,
) -> Result<LoocvResult<T>> {
    cfg.validate()?;
    if model.is_tuned() && grid.is_none() {
        cfg.require_tilde_tau2()?;
    }
    if !model.is_tuned() && grid.is_some() {
        return Err(Error::Config(format!("model {model} has no tuning parameter")));
    }
    loocv_with(dataset, seed, |train, x_test, _, rng| {
        let std = standardize(train)?;
        let (draws, _) = fit_model(model, std.data(), grid, cfg, rng)?;
        Ok(std.predict(&draws.posterior_mean_beta(), x_test))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws_from(betas: &[Vec<f64>], s2: &[f64]) -> PosteriorDraws<f64> {
        PosteriorDraws::from_beta_sigma2(ModelKind::FusedHorseshoe, betas, s2).unwrap()
    }

    #[test]
    fn degenerate_draws_summary() {
        let v = vec![0.5, -1.0];
        let d = draws_from(&[v.clone(), v.clone(), v.clone()], &[1.0; 3]);
        let e = summarize(&d, 0.95).unwrap();
        assert_eq!(e.point, v);
        assert_eq!(e.median, v);
        assert_eq!(e.ci_lower, v);
        assert_eq!(e.ci_upper, v);
    }

    #[test]
    fn mean_of_one_two_three() {
        let d = draws_from(&[vec![1.0], vec![2.0], vec![3.0]], &[1.0; 3]);
        let e = summarize(&d, 0.5).unwrap();
        assert_eq!(e.point, vec![2.0]);
        assert_eq!(e.median, vec![2.0]);
        assert_eq!(e.ci_lower, vec![1.5]);
        assert_eq!(e.ci_upper, vec![2.5]);
    }

    #[test]
    fn too_few_draws() {
        let d = draws_from(&[vec![1.0]], &[1.0]);
        assert!(matches!(summarize(&d, 0.95), Err(Error::InsufficientDraws { .. })));
        let data = RegressionData::new(Matrix::identity(1), vec![1.0]).unwrap();
        assert!(matches!(compute_waic(&d, &data), Err(Error::InsufficientDraws { .. })));
    }

    #[test]
    fn grid_parsing() {
        let g: Vec<f64> = parse_grid("1e4:1e6:5log").unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 1e4);
        assert_eq!(g[4], 1e6);
        assert!((g[2] - 1e5).abs() < 1e-6);
        assert_eq!(parse_grid::<f64>("1:3:3lin").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid::<f64>("2, 4").unwrap(), vec![2.0, 4.0]);
        assert!(parse_grid::<f64>("a:b").is_err());
        assert!(parse_grid::<f64>("-1").is_err());
        assert_eq!(default_bhh_grid::<f64>(), g);
    }

    #[test]
    fn log_mean_exp_survives_large_negative_values() {
        let l = log_mean_exp(&[-1.0e4, -1.0e4 - 1.0]);
        let want = -1.0e4 + ((1.0 + (-1.0f64).exp()) / 2.0).ln();
        assert!((l - want).abs() < 1e-9);
    }

    #[test]
    fn select_tuning_rejects_untuned_and_empty() {
        let data = RegressionData::new(Matrix::identity(2), vec![1.0, 2.0]).unwrap();
        let cfg = SamplerConfig::default();
        let mut rng = RngStream::new(0);
        assert!(select_tuning(&[], ModelKind::HorsesHorseshoe, &data, &cfg, &mut rng).is_err());
        assert!(select_tuning(&[1.0], ModelKind::FusedHorseshoe, &data, &cfg, &mut rng).is_err());
    }
}
