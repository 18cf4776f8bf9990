//! Shared oracles and acceptance checks for the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::time::Instant;

use horseshoe_fusion::distributions::{inv_gamma, laplace};
use horseshoe_fusion::geweke::{geweke_test, GewekeKernel, GewekeSettings};
use horseshoe_fusion::inference::{loocv, waic_from_loglik};
use horseshoe_fusion::linalg::{pair_count, pair_index, pairs};
use horseshoe_fusion::simulation::nonzero_diff_pairs;
use horseshoe_fusion::{
    build_fused_precision, build_horses_precision, cli, compute_waic, gaussian_loglik_point, mse, mse_diff, pse,
    run_benchmark, run_chain, standardize, CaseSpec, Dataset, Matrix, ModelKind, PosteriorDraws, RngStream,
    SamplerConfig, ScoreScale,
};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// ---------- oracles ----------

/// Direct penalty sum for the fused prior exponent.
pub fn fused_penalty(beta: &[f64], tau2: &[f64], lambda2: &[f64], tt: f64) -> f64 {
    let a: f64 = beta.iter().zip(tau2).map(|(b, t)| b * b / t).sum();
    let b: f64 = (1..beta.len())
        .map(|j| (beta[j] - beta[j - 1]).powi(2) / (lambda2[j - 1] * tt))
        .sum();
    a + b
}

/// Direct penalty sum for the all-pairs prior exponent.
pub fn horses_penalty(beta: &[f64], tau2: &[f64], lambda2_pairs: &[f64], tt: f64) -> f64 {
    let a: f64 = beta.iter().zip(tau2).map(|(b, t)| b * b / t).sum();
    let mut b = 0.0;
    for j in 0..beta.len() {
        for k in 0..j {
            b += (beta[j] - beta[k]).powi(2) / lambda2_pairs[pair_index(j, k)];
        }
    }
    a + b / tt
}

/// ∫ N(β; 0, σ²s) (λ²/2) e^{−λ² s/2} ds over s ∈ (0, ∞) by double-exponential
/// quadrature after s = u/(1 − u), against the closed-form Laplace density.
pub fn laplace_mixture(beta: f64, sigma2: f64, lambda: f64) -> (f64, f64) {
    let l2 = lambda * lambda;
    let f = |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let s = u / (1.0 - u);
        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
        let v = sigma2 * s;
        let normal = (-beta * beta / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        normal * 0.5 * l2 * (-0.5 * l2 * s).exp() * jac
    };
    let closed = lambda / (2.0 * sigma2.sqrt()) * (-lambda * beta.abs() / sigma2.sqrt()).exp();
    let q = quadrature::integrate(f, 0.0, 1.0, 1e-14 * closed.max(1e-300)).integral;
    (q, closed)
}

/// Kolmogorov–Smirnov distance between draws built from the inverse-gamma
/// hierarchy `x² | a ~ IG(1/2, 1/a)`, `a ~ IG(1/2, 1/A²)` and the half-Cauchy
/// CDF `(2/π) atan(x/A)`.
pub fn half_cauchy_ks(scale: f64, n: usize, seed: u64) -> f64 {
    let mut rng = RngStream::new(seed);
    let mut xs: Vec<f64> = (0..n)
        .map(|_| {
            let a = inv_gamma(0.5, 1.0 / (scale * scale), &mut rng);
            inv_gamma(0.5, 1.0 / a, &mut rng).sqrt()
        })
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 2.0 / std::f64::consts::PI * (x / scale).atan();
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// 20 rows, 15 correlated predictors: the shape of a small field dataset.
pub fn soil_shaped(seed: u64) -> Dataset<f64> {
    let (n, p) = (20, 15);
    let mut rng = RngStream::new(seed);
    let mut x = Matrix::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    let beta: Vec<f64> = (0..p).map(|j| if j < 4 { 0.8 } else if j < 8 { -0.4 } else { 0.0 }).collect();
    for i in 0..n {
        let common: f64 = rng.std_normal();
        for j in 0..p {
            x[(i, j)] = 0.6 * common + 0.8 * rng.std_normal::<f64>() + 3.0;
        }
        let m: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
        y.push(m + 0.3 * rng.std_normal::<f64>());
    }
    let names = (1..=p).map(|j| format!("s{j}")).collect();
    Dataset::new(y, x, names, "synthetic soil-shaped").unwrap()
}

// ---------- acceptance checks ----------

pub fn ac1_geweke(kernel: GewekeKernel) -> Outcome {
    let t = Instant::now();
    let rep = geweke_test(kernel, &GewekeSettings::default()).expect("geweke run");
    let secs = t.elapsed().as_secs_f64();
    let worst = rep
        .checks
        .iter()
        .max_by(|a, b| a.z().abs().partial_cmp(&b.z().abs()).unwrap())
        .unwrap();
    Outcome::new(
        rep.passes(3.0) && secs < 120.0,
        format!(
            "max |z| = {:.2} ({} order {}), forward acceptance {:.2}, {secs:.1}s",
            rep.max_abs_z(),
            worst.function,
            worst.order,
            rep.forward_acceptance
        ),
    )
}

pub fn ac2_mixtures() -> Outcome {
    let mut rng = RngStream::new(606);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let beta = laplace(1.0, &mut rng);
        let sigma2 = 0.1 + 3.0 * rng.uniform::<f64>();
        let lambda = 0.2 + 4.0 * rng.uniform::<f64>();
        let (q, c) = laplace_mixture(beta, sigma2, lambda);
        worst = worst.max(rel_err(q, c));
    }
    let n = 100_000;
    let crit = ks_critical_1pct(n);
    let ks: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .enumerate()
        .map(|(i, &a)| half_cauchy_ks(a, n, 900 + i as u64))
        .collect();
    let ks_ok = ks.iter().all(|&d| d < crit);
    Outcome::new(
        worst < 1e-6 && ks_ok,
        format!(
            "mixture max rel err {worst:.2e}; KS D = {:.5}/{:.5}/{:.5} vs {crit:.5}",
            ks[0], ks[1], ks[2]
        ),
    )
}

pub fn ac3_precision_identity() -> Outcome {
    let mut rng = RngStream::new(303);
    let mut worst_f: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    let pos = |rng: &mut RngStream| (rng.uniform::<f64>() * 8.0 - 4.0).exp();
    for inst in 0..200 {
        let p = 2 + inst % 29;
        let beta: Vec<f64> = (0..p).map(|_| 3.0 * rng.std_normal::<f64>()).collect();
        let tau2: Vec<f64> = (0..p).map(|_| pos(&mut rng)).collect();
        let tt = pos(&mut rng);
        let lam: Vec<f64> = (0..p - 1).map(|_| pos(&mut rng)).collect();
        let b = build_fused_precision(&tau2, &lam, tt).unwrap();
        worst_f = worst_f.max(rel_err(b.quad_form(&beta), fused_penalty(&beta, &tau2, &lam, tt)));
        let lp: Vec<f64> = (0..pair_count(p)).map(|_| pos(&mut rng)).collect();
        let h = build_horses_precision(&tau2, &lp, tt).unwrap();
        worst_h = worst_h.max(rel_err(h.quad_form(&beta), horses_penalty(&beta, &tau2, &lp, tt)));
    }
    Outcome::new(
        worst_f < 1e-10 && worst_h < 1e-10,
        format!("max rel err fused {worst_f:.2e}, all-pairs {worst_h:.2e} over 200 instances each"),
    )
}

fn benchmark_pair(spec: CaseSpec<f64>, seed: u64) -> (f64, f64, usize, f64) {
    let t = Instant::now();
    let cfg = SamplerConfig::default();
    let methods = [ModelKind::FusedLasso, ModelKind::FusedHorseshoe];
    let rep = run_benchmark(std::slice::from_ref(&spec), &methods, &cfg, None, ScoreScale::Standardized, seed).expect("benchmark");
    let bfl = rep.row(&spec.label(), ModelKind::FusedLasso).unwrap();
    let bfh = rep.row(&spec.label(), ModelKind::FusedHorseshoe).unwrap();
    (bfh.mse, bfl.mse, rep.failures.len(), t.elapsed().as_secs_f64())
}

pub fn ac4_case2_ordering() -> Outcome {
    let spec = CaseSpec::new(2, 1, 0.5, 50, None, 20).unwrap();
    let (bfh, bfl, failed, secs) = benchmark_pair(spec, 2024);
    Outcome::new(
        bfh < bfl && (0.07..=0.28).contains(&bfh) && secs < 900.0,
        format!("MSE bfh {bfh:.4} vs bfl {bfl:.4}, {failed} failed replicates, {secs:.1}s"),
    )
}

pub fn ac5_case4_ordering() -> Outcome {
    let spec = CaseSpec::new(4, 1, 1.5, 50, None, 10).unwrap();
    let (bfh, bfl, failed, secs) = benchmark_pair(spec, 2024);
    Outcome::new(
        bfh < 0.5 * bfl && secs < 1200.0,
        format!("MSE bfh {bfh:.4} vs half of bfl {:.4}, {failed} failed replicates, {secs:.1}s", 0.5 * bfl),
    )
}

pub fn ac6_diff_machinery() -> Outcome {
    let spec = CaseSpec::<f64>::new(1, 1, 0.5, 50, None, 1).unwrap();
    let truth = spec.beta_star();
    let pairs_ok = nonzero_diff_pairs(&truth) == vec![(5, 6), (10, 11), (15, 16)];
    let hats = vec![truth.clone(); 3];
    let m = mse(&hats, &truth).unwrap();
    let d = mse_diff(&hats, &truth).unwrap();
    let s = pse(&hats, &truth, &spec.covariance()).unwrap();
    let zeros = m == (0.0, 0.0) && d == (0.0, 0.0) && s == (0.0, 0.0);
    Outcome::new(
        pairs_ok && zeros,
        format!("pairs {:?}; perfect-estimate metrics {m:?} {d:?} {s:?}", nonzero_diff_pairs(&truth)),
    )
}

pub fn ac7_waic() -> Outcome {
    // invariant on a real fit
    let ds = soil_shaped(77);
    let std = standardize(&ds).unwrap();
    let cfg = SamplerConfig {
        iterations: 600,
        burn_in: 100,
        ..Default::default()
    };
    let draws = run_chain(ModelKind::FusedHorseshoe, std.data(), &cfg, &mut RngStream::new(1)).unwrap();
    let s = compute_waic(&draws, std.data()).unwrap();
    let invariant = s.waic == -2.0 * (s.lppd - s.p_waic);

    // degenerate posterior: every draw the same point
    let beta = draws.beta(0).to_vec();
    let sig = draws.sigma2(0);
    let same = PosteriorDraws::from_beta_sigma2(ModelKind::FusedHorseshoe, &vec![beta.clone(); 4], &[sig; 4]).unwrap();
    let d = compute_waic(&same, std.data()).unwrap();
    let direct: f64 = (0..std.n())
        .map(|i| gaussian_loglik_point(std.data().y()[i], std.data().x().row(i), &beta, sig).unwrap())
        .sum();
    let degenerate = d.p_waic == 0.0 && rel_err(d.waic, -2.0 * direct) < 1e-12;

    // two draws, one point, by hand
    let (l1, l2) = (-1.3_f64, -0.4_f64);
    let m = Matrix::from_rows(&[vec![l1, l2]]).unwrap();
    let h = waic_from_loglik(&m).unwrap();
    let lppd = ((l1.exp() + l2.exp()) / 2.0).ln();
    let mean = (l1 + l2) / 2.0;
    let var = (l1 - mean).powi(2) + (l2 - mean).powi(2);
    let hand = (h.lppd - lppd).abs() < 1e-12 && (h.p_waic - var).abs() < 1e-12;
    Outcome::new(
        invariant && degenerate && hand,
        format!(
            "invariant {invariant}; degenerate p_waic {:.1e}; hand lppd err {:.1e}, p_waic err {:.1e}",
            d.p_waic,
            (h.lppd - lppd).abs(),
            (h.p_waic - var).abs()
        ),
    )
}

pub fn ac8_loocv() -> Outcome {
    let t = Instant::now();
    let ds = soil_shaped(808);
    let cfg = SamplerConfig {
        iterations: 10_000,
        burn_in: 5000,
        ..Default::default()
    };
    let grid = horseshoe_fusion::inference::default_bhh_grid::<f64>();
    let res = loocv(ModelKind::HorsesHorseshoe, &ds, Some(&grid), &cfg, 8).expect("loocv");
    let direct = res.fold_errors.iter().sum::<f64>() / res.fold_errors.len() as f64;
    let ok = res.fold_errors.len() == 20 && (res.cv_mean - direct).abs() < 1e-12 && res.cv_mean.is_finite();
    Outcome::new(
        ok,
        format!(
            "{} folds, cv_mean {:.4e} (direct {:.4e}), cv_sd {:.4e}, {:.1}s",
            res.fold_errors.len(),
            res.cv_mean,
            direct,
            res.cv_sd,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn run_cli(args: &[&str]) -> i32 {
    let mut argv = vec!["hsfuse".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    cli::run(&argv)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

/// Runs every subcommand twice with one seed and compares the CSV outputs.
pub fn ac9_cli_reproducible() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("soil.csv");
    soil_shaped(9).write_csv(&input).unwrap();
    let input = input.to_str().unwrap().to_string();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        (
            "fit",
            vec!["fit", "--model", "bfh", "--input", &input, "--iters", "400", "--burnin", "100", "--draws", "--waic"],
        ),
        (
            "tune",
            vec!["tune", "--model", "bhh", "--input", &input, "--grid", "1e4:1e6:3log", "--iters", "300", "--burnin", "100"],
        ),
        (
            "loocv",
            vec!["loocv", "--model", "blasso", "--input", &input, "--iters", "200", "--burnin", "50"],
        ),
        (
            "simulate",
            vec!["simulate", "--case", "2", "--reps", "2", "--methods", "bfl,bfh", "--iters", "200", "--burnin", "50"],
        ),
    ];
    let mut details = Vec::new();
    let mut all = true;
    for (name, args) in commands {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let dir = root.path().join(format!("{name}{run}"));
            let dir_s = dir.to_str().unwrap().to_string();
            let mut a = args.clone();
            a.extend(["--seed", "11", "--out-dir", &dir_s]);
            let code = run_cli(&a);
            if code != 0 {
                all = false;
                details.push(format!("{name}: exit {code}"));
            }
            outputs.push(csv_files(&dir));
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
        all &= same;
        details.push(format!("{name} {} csv {}", outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    Outcome::new(all, details.join(", "))
}

pub fn pairs_brute_force(beta: &[f64]) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for j in 1..beta.len() {
        if beta[j] != beta[j - 1] {
            v.push((j, j + 1));
        }
    }
    v
}

pub fn pair_list(p: usize) -> Vec<(usize, usize)> {
    pairs(p).collect()
}
