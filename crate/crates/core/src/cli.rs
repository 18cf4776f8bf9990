//! The `hsfuse` command line.
//!
//! ```text
//! hsfuse [--config FILE] fit      --model bfh --input data.csv [--draws] [--waic]
//! hsfuse [--config FILE] tune     --model bhh --input data.csv --grid 1e4:1e6:5log
//! hsfuse [--config FILE] loocv    --model bhh --input data.csv --grid 1e4:1e6:5log
//! hsfuse [--config FILE] simulate --case 2 --sigma 0.5 --beta 1 --n 50 --reps 20 --methods bfl,bfh
//! ```
//!
//! A config file holds `key=value` lines using the long flag names of the
//! subcommand (`#` starts a comment). File values are applied first, so
//! flags on the command line win. Every run writes `manifest.txt` in the
//! same format, which can be fed back through `--config`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::data::{fmt_num, standardize, write_csv_atomic, write_text_atomic, Dataset};
use crate::error::{Error, Result};
use crate::inference::{compute_waic, loocv, parse_grid, select_tuning, summarize, PosteriorDraws, TuningResult};
use crate::models::{run_chain, ModelKind, SamplerConfig};
use crate::rng::RngStream;
use crate::simulation::{run_benchmark, CaseSpec, ScoreScale};

/// Environment variable supplying the seed when `--seed` is absent.
pub const SEED_ENV: &str = "HSFUSE_SEED";

#[derive(Parser, Debug)]
#[command(name = "hsfuse", version, about = "Gibbs samplers for sparse and fused Bayesian regression")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one model to a CSV dataset and summarize the posterior.
    Fit(FitArgs),
    /// Choose the all-pairs global scale by WAIC over a grid.
    Tune(TuneArgs),
    /// Leave-one-out squared prediction error.
    Loocv(LoocvArgs),
    /// Run the synthetic benchmark for one case.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
struct SamplerArgs {
    /// Total Gibbs sweeps.
    #[arg(long = "iters")]
    iters: Option<usize>,
    /// Sweeps discarded before recording.
    #[arg(long = "burnin")]
    burnin: Option<usize>,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    /// Random seed (default: $HSFUSE_SEED, else 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    nu0: f64,
    #[arg(long, default_value_t = 1.0)]
    eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    r1: f64,
    #[arg(long, default_value_t = 10.0)]
    delta1: f64,
    #[arg(long, default_value_t = 1.0)]
    r2: f64,
    #[arg(long, default_value_t = 10.0)]
    delta2: f64,
    /// Fixed global fusion scale for bhh.
    #[arg(long = "tilde-tau2")]
    tilde_tau2: Option<f64>,
    /// Output directory.
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

impl SamplerArgs {
    fn seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
                Err(_) => Ok(0),
            },
        }
    }

    fn config(&self, default_iters: usize, default_burnin: usize) -> Result<SamplerConfig<f64>> {
        let cfg = SamplerConfig {
            iterations: self.iters.unwrap_or(default_iters),
            burn_in: self.burnin.unwrap_or(default_burnin),
            thinning: self.thin,
            seed: self.seed()?,
            nu0: self.nu0,
            eta0: self.eta0,
            r1: self.r1,
            delta1: self.delta1,
            r2: self.r2,
            delta2: self.delta2,
            tilde_tau2_fixed: self.tilde_tau2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn echo(&self, cfg: &SamplerConfig<f64>, out: &mut Vec<(String, String)>) {
        let kv = [
            ("iters", cfg.iterations.to_string()),
            ("burnin", cfg.burn_in.to_string()),
            ("thin", cfg.thinning.to_string()),
            ("seed", cfg.seed.to_string()),
            ("nu0", cfg.nu0.to_string()),
            ("eta0", cfg.eta0.to_string()),
            ("r1", cfg.r1.to_string()),
            ("delta1", cfg.delta1.to_string()),
            ("r2", cfg.r2.to_string()),
            ("delta2", cfg.delta2.to_string()),
            ("out-dir", self.out_dir.display().to_string()),
        ];
        out.extend(kv.into_iter().map(|(k, v)| (k.to_string(), v)));
        if let Some(t) = cfg.tilde_tau2_fixed {
            out.push(("tilde-tau2".into(), t.to_string()));
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    input: PathBuf,
    /// Tuning grid for bhh (`a:b:Nlog`, `a:b:Nlin` or a comma list).
    #[arg(long)]
    grid: Option<String>,
    /// Also write every retained draw to draws.csv.
    #[arg(long)]
    draws: bool,
    /// Also write waic.csv.
    #[arg(long)]
    waic: bool,
    /// Credible level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long, default_value = "bhh")]
    model: ModelKind,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "1e4:1e6:5log")]
    grid: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args, Debug)]
struct LoocvArgs {
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    input: PathBuf,
    /// Tuning grid for bhh; omit to use --tilde-tau2.
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Case 1..4.
    #[arg(long)]
    case: u8,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// True coefficient vector (1 or 2) for cases 1 and 2.
    #[arg(long, default_value_t = 1)]
    beta: u8,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Dimension (cases 3/4 only; default 50).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Comma-separated model ids.
    #[arg(long, default_value = "bfl,bfh")]
    methods: String,
    /// Tuning grid for bhh when --tilde-tau2 is absent.
    #[arg(long)]
    grid: Option<String>,
    /// Score estimates on the original column scale instead of the
    /// standardized one.
    #[arg(long)]
    original_scale: bool,
    #[command(flatten)]
    sampler: SamplerArgs,
}

/// Pulls `--config FILE` out of `argv` and splices the file's settings in
/// right after the subcommand name.
fn expand_config(argv: &[String]) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut file = None;
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it.next().ok_or_else(|| Error::Config("--config needs a file".into()))?;
            file = Some(path.clone());
        } else if let Some(path) = a.strip_prefix("--config=") {
            file = Some(path.to_string());
        } else {
            rest.push(a.clone());
        }
    }
    let Some(file) = file else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&file).map_err(|e| Error::Config(format!("cannot read config `{file}`: {e}")))?;
    let mut injected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{file}:{}: expected key=value", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        match v {
            "true" => injected.push(format!("--{k}")),
            "false" => {}
            _ => injected.push(format!("--{k}={v}")),
        }
    }
    // position of the subcommand: the first argument after the program name
    // that is not a flag
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(rest.len());
    let mut out = rest[..at.min(rest.len())].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[at.min(rest.len())..]);
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_numerical() => 4,
        Error::AtIteration { source, .. } => exit_code(source),
        Error::Config(_) | Error::InsufficientDraws { .. } => 2,
        Error::Data(_) | Error::DegenerateColumn(_) | Error::Io(_) | Error::Csv(_) | Error::DimensionMismatch(_) => 3,
        Error::ParameterDomain { .. } | Error::NumericalSingularity { .. } => 4,
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    let start = Instant::now();
    let (out_dir, name, mut echo, notes) = match cmd {
        Command::Fit(a) => {
            let (echo, notes) = fit(&a)?;
            (a.sampler.out_dir, "fit", echo, notes)
        }
        Command::Tune(a) => {
            let (echo, notes) = tune(&a)?;
            (a.sampler.out_dir, "tune", echo, notes)
        }
        Command::Loocv(a) => {
            let (echo, notes) = run_loocv(&a)?;
            (a.sampler.out_dir, "loocv", echo, notes)
        }
        Command::Simulate(a) => {
            let (echo, notes) = simulate(&a)?;
            (a.sampler.out_dir, "simulate", echo, notes)
        }
    };
    echo.sort_by(|a, b| a.0.cmp(&b.0));
    let mut m = String::new();
    let _ = writeln!(m, "# hsfuse {} {name}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "# replay: hsfuse --config manifest.txt {name}");
    let _ = writeln!(m, "# wall_secs: {:.3}", start.elapsed().as_secs_f64());
    for n in notes {
        let _ = writeln!(m, "# {n}");
    }
    for (k, v) in echo {
        let _ = writeln!(m, "{k}={v}");
    }
    write_text_atomic(&out_dir.join("manifest.txt"), &m)
}

type Echo = (Vec<(String, String)>, Vec<String>);

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_summary(path: &Path, names: &[String], draws: &PosteriorDraws<f64>, level: f64) -> Result<()> {
    let est = summarize(draws, level)?;
    let header: Vec<String> = ["coefficient", "point", "median", "ci_lower", "ci_upper"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = (0..draws.p).map(|j| {
        vec![
            names[j].clone(),
            fmt_num(est.point[j]),
            fmt_num(est.median[j]),
            fmt_num(est.ci_lower[j]),
            fmt_num(est.ci_upper[j]),
        ]
    });
    write_csv_atomic(path, &header, rows)
}

fn write_tuning(path: &Path, t: &TuningResult<f64>) -> Result<()> {
    let header: Vec<String> = ["tilde_tau2", "waic", "lppd", "p_waic", "selected"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = t.scores.iter().enumerate().map(|(i, (g, s))| {
        vec![
            fmt_num(*g),
            fmt_num(s.waic),
            fmt_num(s.lppd),
            fmt_num(s.p_waic),
            (i == t.best_index).to_string(),
        ]
    });
    write_csv_atomic(path, &header, rows)
}

fn load_standardized(input: &Path) -> Result<(Dataset<f64>, crate::data::StandardizedDataset<f64>)> {
    let ds = Dataset::load_csv(input)?;
    let std = standardize(&ds)?;
    Ok((ds, std))
}

fn fit(a: &FitArgs) -> Result<Echo> {
    let cfg = a.sampler.config(5000, 2000)?;
    prepare_out(&a.sampler.out_dir)?;
    let (_, std) = load_standardized(&a.input)?;
    let mut rng = RngStream::new(cfg.seed);
    let mut notes = Vec::new();
    let draws = match (&a.grid, a.model.is_tuned()) {
        (Some(_), false) => return Err(Error::Config(format!("model {} takes no --grid", a.model))),
        (Some(g), true) => {
            let grid = parse_grid::<f64>(g)?;
            let t = select_tuning(&grid, a.model, std.data(), &cfg, &mut rng)?;
            write_tuning(&a.sampler.out_dir.join("tuning.csv"), &t)?;
            notes.push(format!("selected tilde_tau2: {}", t.best));
            t.draws
        }
        (None, _) => run_chain(a.model, std.data(), &cfg, &mut rng)?,
    };
    let out = &a.sampler.out_dir;
    write_summary(&out.join("summary.csv"), &std.column_names, &draws, a.level)?;
    if a.draws {
        draws.write_csv(&out.join("draws.csv"))?;
    }
    if a.waic {
        let s = compute_waic(&draws, std.data())?;
        let header: Vec<String> = ["waic", "lppd", "p_waic"].iter().map(|s| s.to_string()).collect();
        write_csv_atomic(
            &out.join("waic.csv"),
            &header,
            [vec![fmt_num(s.waic), fmt_num(s.lppd), fmt_num(s.p_waic)]],
        )?;
    }
    let mut echo = vec![
        ("model".to_string(), a.model.id().to_string()),
        ("input".to_string(), a.input.display().to_string()),
        ("level".to_string(), a.level.to_string()),
        ("draws".to_string(), a.draws.to_string()),
        ("waic".to_string(), a.waic.to_string()),
    ];
    if let Some(g) = &a.grid {
        echo.push(("grid".into(), g.clone()));
    }
    a.sampler.echo(&cfg, &mut echo);
    notes.push(format!("chain wall_secs: {:.3}", draws.wall_secs));
    Ok((echo, notes))
}

fn tune(a: &TuneArgs) -> Result<Echo> {
    let cfg = a.sampler.config(5000, 2000)?;
    prepare_out(&a.sampler.out_dir)?;
    let (_, std) = load_standardized(&a.input)?;
    let grid = parse_grid::<f64>(&a.grid)?;
    let mut rng = RngStream::new(cfg.seed);
    let t = select_tuning(&grid, a.model, std.data(), &cfg, &mut rng)?;
    let out = &a.sampler.out_dir;
    write_tuning(&out.join("tuning.csv"), &t)?;
    write_summary(&out.join("summary.csv"), &std.column_names, &t.draws, a.level)?;
    let mut echo = vec![
        ("model".to_string(), a.model.id().to_string()),
        ("input".to_string(), a.input.display().to_string()),
        ("grid".to_string(), a.grid.clone()),
        ("level".to_string(), a.level.to_string()),
    ];
    a.sampler.echo(&cfg, &mut echo);
    println!("selected tilde_tau2 = {}", t.best);
    Ok((echo, vec![format!("selected tilde_tau2: {}", t.best)]))
}

fn run_loocv(a: &LoocvArgs) -> Result<Echo> {
    let cfg = a.sampler.config(10_000, 5000)?;
    prepare_out(&a.sampler.out_dir)?;
    let ds = Dataset::load_csv(&a.input)?;
    let grid = a.grid.as_deref().map(parse_grid::<f64>).transpose()?;
    let res = loocv(a.model, &ds, grid.as_deref(), &cfg, cfg.seed)?;
    let out = &a.sampler.out_dir;
    let header: Vec<String> = ["fold", "y", "prediction", "squared_error"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = (0..ds.n()).map(|i| {
        vec![
            (i + 1).to_string(),
            fmt_num(ds.y[i]),
            fmt_num(res.predictions[i]),
            fmt_num(res.fold_errors[i]),
        ]
    });
    write_csv_atomic(&out.join("loocv.csv"), &header, rows)?;
    let header: Vec<String> = ["folds", "cv_mean", "cv_sd"].iter().map(|s| s.to_string()).collect();
    write_csv_atomic(
        &out.join("loocv_summary.csv"),
        &header,
        [vec![ds.n().to_string(), fmt_num(res.cv_mean), fmt_num(res.cv_sd)]],
    )?;
    let mut echo = vec![
        ("model".to_string(), a.model.id().to_string()),
        ("input".to_string(), a.input.display().to_string()),
    ];
    if let Some(g) = &a.grid {
        echo.push(("grid".into(), g.clone()));
    }
    a.sampler.echo(&cfg, &mut echo);
    println!("cv_mean = {:.6e}, cv_sd = {:.6e}", res.cv_mean, res.cv_sd);
    Ok((echo, vec![format!("cv_mean: {}", res.cv_mean)]))
}

fn simulate(a: &SimulateArgs) -> Result<Echo> {
    let cfg = a.sampler.config(5000, 2000)?;
    prepare_out(&a.sampler.out_dir)?;
    let spec = CaseSpec::new(a.case, a.beta, a.sigma, a.n, a.p, a.reps)?;
    let methods: Vec<ModelKind> = a
        .methods
        .split(',')
        .map(|m| m.parse())
        .collect::<Result<_>>()?;
    let grid = a.grid.as_deref().map(parse_grid::<f64>).transpose()?;
    let scale = if a.original_scale { ScoreScale::Original } else { ScoreScale::Standardized };
    let report = run_benchmark(std::slice::from_ref(&spec), &methods, &cfg, grid.as_deref(), scale, cfg.seed)?;
    report.write_csv(&a.sampler.out_dir.join("metrics.csv"))?;
    for r in &report.rows {
        println!(
            "{} {}: mse {:.4} ({:.4}), mse_diff {:.4}, pse {:.4}",
            r.case_label, r.method, r.mse, r.mse_sd, r.mse_diff, r.pse
        );
    }
    let mut echo = vec![
        ("case".to_string(), a.case.to_string()),
        ("sigma".to_string(), a.sigma.to_string()),
        ("beta".to_string(), a.beta.to_string()),
        ("n".to_string(), a.n.to_string()),
        ("p".to_string(), spec.p.to_string()),
        ("reps".to_string(), a.reps.to_string()),
        ("methods".to_string(), a.methods.clone()),
        ("original-scale".to_string(), a.original_scale.to_string()),
    ];
    if let Some(g) = &a.grid {
        echo.push(("grid".into(), g.clone()));
    }
    a.sampler.echo(&cfg, &mut echo);
    let notes = report
        .failures
        .iter()
        .map(|f| format!("failed: {} {} replicate {}: {}", f.case_label, f.method, f.replicate, f.message))
        .collect();
    Ok((echo, notes))
}
