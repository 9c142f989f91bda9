use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compound_levy::dataset::{preprocess_losses, read_observations, write_jumps};
use compound_levy::inference::{
    fit_threshold_model, loglik_report, CopulaVariant, FamilyTag, FitOptions, FitResult, MarginalFamily,
    ObservationSet,
};
use compound_levy::levy_copula::AlphaClaytonParams;
use compound_levy::numerics::ecdf;
use compound_levy::process_model::{CompoundModel, GammaDirecting, GammaScore, Margin, MomentModel};
use compound_levy::simulation::{compound_path, JumpKind, SeedSpec, TruncationSpec};
use compound_levy::Error;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "clevy", version, about = "Compound subordinator vectors and alpha-Clayton Levy copulas")]
struct Cli {
    /// Suppress informational output on standard output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the stable/Gamma compound vector by its truncated series.
    Simulate(SimulateArgs),
    /// Evaluate the alpha-Clayton Levy copula at a point or on a grid.
    Copula(CopulaArgs),
    /// Moment curves over a time grid.
    Moments(MomentsArgs),
    /// Turn raw building/contents loss records into classified jumps.
    PreprocessDanish(PreprocessArgs),
    /// Fit a model to an observation file.
    Fit(FitArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long)]
    a1: f64,
    #[arg(long)]
    b1: f64,
    #[arg(long)]
    a2: f64,
    #[arg(long)]
    b2: f64,
}

impl ModelArgs {
    fn model(&self) -> Result<CompoundModel, CliError> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(CliError::usage(format!("--sigma must lie in (0, 1), got {}", self.sigma)));
        }
        for (name, v) in [("--k", self.k), ("--a1", self.a1), ("--b1", self.b1), ("--a2", self.a2), ("--b2", self.b2)] {
            positive(name, v)?;
        }
        CompoundModel::from_params(self.sigma, self.k, self.a1, self.b1, self.a2, self.b2).map_err(CliError::usage)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Smallest directing jump retained.
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    seed: u64,
    /// Output CSV with columns time,w1,w2.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CopulaArgs {
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    a1: f64,
    #[arg(long)]
    a2: f64,
    #[arg(long, requires = "s2", conflicts_with = "grid")]
    s1: Option<f64>,
    #[arg(long, requires = "s1")]
    s2: Option<f64>,
    /// Log-spaced grid `lo:hi:n` used on both axes.
    #[arg(long, requires = "out")]
    grid: Option<String>,
    /// Output CSV for --grid, with columns s1,s2,c,d1,d2,dens.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MomentKind {
    /// Fractional moments of the stable/Gamma model.
    Fractional,
    /// Mean, variance, covariance and correlation under a Gamma directing measure.
    Gamma,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long, value_enum, default_value = "fractional")]
    kind: MomentKind,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long)]
    a1: f64,
    #[arg(long)]
    b1: f64,
    #[arg(long)]
    a2: f64,
    #[arg(long)]
    b2: f64,
    /// Fractional order, in (0, sigma).
    #[arg(long)]
    p: Option<f64>,
    /// Directing intensity scale for --kind gamma.
    #[arg(long)]
    a: Option<f64>,
    /// Directing exponential rate for --kind gamma.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// CSV with date, building loss and contents loss (millions).
    #[arg(long)]
    input: PathBuf,
    /// Output CSV with columns time,w1,w2,kind.
    #[arg(long)]
    out: PathBuf,
    /// Rescale times onto [0, horizon] instead of years since the first record.
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Full,
    Symmetric,
    Clayton,
    Threshold,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Observation CSV with columns time,w1,w2[,kind].
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: FitModel,
    /// FitResult JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Directory for x,ecdf,fitted CSVs.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Observation window length; defaults to the last jump time.
    #[arg(long)]
    horizon: Option<f64>,
    /// Threshold model: first-coordinate threshold.
    #[arg(long, default_value_t = 1e-6)]
    eps1: f64,
    /// Threshold model: second-coordinate threshold.
    #[arg(long, default_value_t = 1e-5)]
    eps2: f64,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(e: impl ToString) -> Self {
        CliError::Usage(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidRecord { .. } | Error::Empty(_) | Error::Precondition(_) | Error::Csv(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_input(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("input file {} does not exist", p.display())))
    }
}

fn check_output(p: &Path) -> Result<(), CliError> {
    let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!("output directory {} does not exist", parent.display())))
    }
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

struct Out {
    quiet: bool,
}

impl Out {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn simulate(a: &SimulateArgs, out: &Out) -> Result<(), CliError> {
    let model = a.model.model()?;
    positive("--tau", a.tau)?;
    positive("--horizon", a.horizon)?;
    check_output(&a.out)?;
    let trunc = TruncationSpec::new(a.tau)?;
    let path = compound_path(&model, a.horizon, &trunc, SeedSpec::new(a.seed))?;
    let mut buf = Vec::new();
    write_jumps(&mut buf, path.jumps(), false)?;
    write_atomic(&a.out, &buf)?;
    let (y1, y2) = path.totals();
    out.info(format!("jumps={}", path.len()));
    out.info(format!("sum_w1={y1}"));
    out.info(format!("sum_w2={y2}"));
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::usage(format!("--grid expects lo:hi:n with 0 < lo < hi and n >= 2, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 2) {
        return Err(bad());
    }
    let (l, h) = (lo.ln(), hi.ln());
    Ok((0..n).map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp()).collect())
}

fn copula(a: &CopulaArgs, out: &Out) -> Result<(), CliError> {
    positive("--sigma", a.sigma)?;
    positive("--a1", a.a1)?;
    positive("--a2", a.a2)?;
    let cop = AlphaClaytonParams::new(a.sigma, a.a1, a.a2).map_err(CliError::usage)?;
    if let Some(spec) = &a.grid {
        let path = a.out.as_ref().ok_or_else(|| CliError::usage("--grid requires --out"))?;
        check_output(path)?;
        let grid = parse_grid(spec)?;
        let mut buf = Vec::new();
        writeln!(buf, "s1,s2,c,d1,d2,dens")?;
        for &s1 in &grid {
            for &s2 in &grid {
                writeln!(
                    buf,
                    "{s1},{s2},{},{},{},{}",
                    cop.value(s1, s2)?,
                    cop.d1(s1, s2)?,
                    cop.d2(s1, s2)?,
                    cop.density(s1, s2)?
                )?;
            }
        }
        write_atomic(path, &buf)?;
        out.info(format!("points={}", grid.len() * grid.len()));
        return Ok(());
    }
    let (Some(s1), Some(s2)) = (a.s1, a.s2) else {
        return Err(CliError::usage("give either --s1 and --s2, or --grid"));
    };
    for (name, v) in [("--s1", s1), ("--s2", s2)] {
        if v.is_nan() || v < 0.0 {
            return Err(CliError::usage(format!("{name} must be >= 0 (inf allowed), got {v}")));
        }
    }
    println!("c={}", cop.value(s1, s2).map_err(CliError::usage)?);
    if s1 > 0.0 && s2 > 0.0 && s1.is_finite() && s2.is_finite() {
        println!("d1={}", cop.d1(s1, s2)?);
        println!("d2={}", cop.d2(s1, s2)?);
        println!("dens={}", cop.density(s1, s2)?);
    }
    Ok(())
}

fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect()
}

fn moments(a: &MomentsArgs, out: &Out) -> Result<(), CliError> {
    positive("--t-max", a.t_max)?;
    if a.points < 2 {
        return Err(CliError::usage("--points must be at least 2"));
    }
    if let Some(p) = &a.out {
        check_output(p)?;
    }
    let ts = time_grid(a.t_max, a.points);
    let value = match a.kind {
        MomentKind::Fractional => {
            let sigma = a.sigma.ok_or_else(|| CliError::usage("--sigma is required for fractional moments"))?;
            let model = ModelArgs {
                sigma,
                k: a.k,
                a1: a.a1,
                b1: a.b1,
                a2: a.a2,
                b2: a.b2,
            }
            .model()?;
            let p = a.p.ok_or_else(|| CliError::usage("--p is required for fractional moments"))?;
            if !(p > 0.0 && p < sigma) {
                return Err(CliError::usage(format!("--p must satisfy 0 < p < sigma = {sigma}, got {p}")));
            }
            let curve = |m: Margin| -> Result<Vec<f64>, CliError> {
                ts.iter()
                    .map(|&t| if t == 0.0 { Ok(0.0) } else { Ok(model.fractional_moment_stable(m, t, p)?) })
                    .collect()
            };
            json!({ "kind": "fractional", "p": p, "t": ts, "dim1": curve(Margin::First)?, "dim2": curve(Margin::Second)? })
        }
        MomentKind::Gamma => {
            let intensity = a.a.ok_or_else(|| CliError::usage("--a is required for gamma moments"))?;
            let rate = a.b.ok_or_else(|| CliError::usage("--b is required for gamma moments"))?;
            let d = GammaDirecting::new(intensity, rate).map_err(CliError::usage)?;
            let s1 = GammaScore::new(a.a1, a.b1).map_err(CliError::usage)?;
            let s2 = GammaScore::new(a.a2, a.b2).map_err(CliError::usage)?;
            let mm = MomentModel::new(d, [s1, s2]);
            let curve = |f: &dyn Fn(f64) -> compound_levy::Result<f64>| -> Result<Vec<f64>, CliError> {
                ts.iter().map(|&t| if t == 0.0 { Ok(0.0) } else { Ok(f(t)?) }).collect()
            };
            json!({
                "kind": "gamma",
                "t": ts,
                "mean1": curve(&|t| mm.mean(Margin::First, t))?,
                "mean2": curve(&|t| mm.mean(Margin::Second, t))?,
                "var1": curve(&|t| mm.variance(Margin::First, t))?,
                "var2": curve(&|t| mm.variance(Margin::Second, t))?,
                "cov": curve(&|t| mm.covariance(t))?,
                "corr": mm.correlation(),
            })
        }
    };
    let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Runtime(e.to_string()))?;
    match &a.out {
        Some(p) => {
            write_atomic(p, text.as_bytes())?;
            out.info(format!("wrote {}", p.display()));
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn preprocess(a: &PreprocessArgs, out: &Out) -> Result<(), CliError> {
    check_input(&a.input)?;
    check_output(&a.out)?;
    if let Some(h) = a.horizon {
        positive("--horizon", h)?;
    }
    let pre = preprocess_losses(File::open(&a.input)?, a.horizon)?;
    let mut buf = Vec::new();
    write_jumps(&mut buf, pre.observations.jumps(), true)?;
    write_atomic(&a.out, &buf)?;
    let (n1, n2, np) = pre.observations.counts();
    out.info(format!("retained={}", pre.observations.len()));
    out.info(format!("perp1={n1} perp2={n2} par={np}"));
    out.info(format!("horizon={}", pre.observations.horizon()));
    Ok(())
}

/// Writes an `x,ecdf,fitted` CSV comparing `data` with `fitted_cdf`.
fn write_cdf_csv(path: &Path, data: &[f64], fitted_cdf: impl Fn(f64) -> f64) -> Result<(), CliError> {
    if data.is_empty() {
        return Ok(());
    }
    let e = ecdf(data)?;
    let mut w = BufWriter::new(Vec::new());
    writeln!(w, "x,ecdf,fitted")?;
    for &x in e.sorted() {
        writeln!(w, "{x},{},{}", e.eval(x), fitted_cdf(x))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    write_atomic(path, &bytes)
}

fn copula_plots(
    dir: &Path,
    obs: &ObservationSet,
    marginals: &[MarginalFamily; 2],
    rates: [f64; 2],
    cop: &AlphaClaytonParams,
) -> Result<(), CliError> {
    let [f1, f2] = *marginals;
    let [l1, l2] = rates;
    write_cdf_csv(&dir.join("marginal1.csv"), &obs.first_sizes(), |x| f1.cdf(x))?;
    write_cdf_csv(&dir.join("marginal2.csv"), &obs.second_sizes(), |x| f2.cdf(x))?;
    let joint = cop.value(l1, l2)?;
    // single-coordinate jumps: tail mass U_j(w) minus its joint part
    let perp1 = |x: f64| {
        let u = l1 * f1.survival(x);
        1.0 - (u - cop.value(u, l2).unwrap_or(f64::NAN)) / (l1 - joint)
    };
    let perp2 = |x: f64| {
        let u = l2 * f2.survival(x);
        1.0 - (u - cop.value(l1, u).unwrap_or(f64::NAN)) / (l2 - joint)
    };
    write_cdf_csv(&dir.join("perp1.csv"), &obs.only_first(), perp1)?;
    write_cdf_csv(&dir.join("perp2.csv"), &obs.only_second(), perp2)?;
    let par = obs.parallel();
    let par1: Vec<f64> = par.iter().map(|p| p.0).collect();
    let par2: Vec<f64> = par.iter().map(|p| p.1).collect();
    write_cdf_csv(&dir.join("par1.csv"), &par1, |x| {
        1.0 - cop.value(l1 * f1.survival(x), l2).unwrap_or(f64::NAN) / joint
    })?;
    write_cdf_csv(&dir.join("par2.csv"), &par2, |x| {
        1.0 - cop.value(l1, l2 * f2.survival(x)).unwrap_or(f64::NAN) / joint
    })?;
    Ok(())
}

fn threshold_plots(dir: &Path, obs: &ObservationSet, model: &CompoundModel, eps: (f64, f64)) -> Result<(), CliError> {
    let total = model.bivariate_tail(eps.0, eps.1)?;
    let w1: Vec<f64> = obs.jumps().iter().map(|j| j.w1).collect();
    let w2: Vec<f64> = obs.jumps().iter().map(|j| j.w2).collect();
    write_cdf_csv(&dir.join("par1.csv"), &w1, |x| {
        1.0 - model.bivariate_tail(x, eps.1).unwrap_or(f64::NAN) / total
    })?;
    write_cdf_csv(&dir.join("par2.csv"), &w2, |x| {
        1.0 - model.bivariate_tail(eps.0, x).unwrap_or(f64::NAN) / total
    })?;
    Ok(())
}

fn fit(a: &FitArgs, out: &Out) -> Result<(), CliError> {
    check_input(&a.input)?;
    check_output(&a.out)?;
    if let Some(h) = a.horizon {
        positive("--horizon", h)?;
    }
    if let Some(d) = &a.plot_dir {
        if !d.is_dir() {
            return Err(CliError::usage(format!("plot directory {} does not exist", d.display())));
        }
    }
    let opts = FitOptions {
        restarts: a.restarts,
        ..FitOptions::default()
    };
    let obs = read_observations(&a.input, a.horizon)?;
    let result: FitResult = match a.model {
        FitModel::Threshold => {
            positive("--eps1", a.eps1)?;
            positive("--eps2", a.eps2)?;
            // only jumps where both coordinates exceed the thresholds are observed
            let kept = obs
                .jumps()
                .iter()
                .filter(|j| j.w1 > a.eps1 && j.w2 > a.eps2)
                .map(|j| compound_levy::simulation::Jump {
                    kind: JumpKind::Parallel,
                    ..*j
                })
                .collect();
            let obs = ObservationSet::new(obs.horizon(), kept)?;
            let tf = fit_threshold_model(&obs, a.eps1, a.eps2, &opts)?;
            out.info(format!("observations={}", obs.len()));
            if let Some(d) = &a.plot_dir {
                threshold_plots(d, &obs, &tf.model, (a.eps1, a.eps2))?;
            }
            tf.fit
        }
        m => {
            let variant = match m {
                FitModel::Full => CopulaVariant::Full,
                FitModel::Symmetric => CopulaVariant::Symmetric,
                _ => CopulaVariant::Clayton,
            };
            let report = loglik_report(&obs, [FamilyTag::Gamma; 2], &opts)?;
            out.info(report.table().trim_end());
            let (cop, fit) = report.fit.get(variant).expect("all variants are fitted");
            if let Some(d) = &a.plot_dir {
                copula_plots(d, &obs, &report.fit.marginals, report.fit.rates, cop)?;
            }
            fit.clone()
        }
    };
    let text = serde_json::to_string_pretty(&result).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_atomic(&a.out, text.as_bytes())?;
    out.info(format!("loglik={}", result.loglik));
    out.info(format!("converged={}", result.converged));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = Out { quiet: cli.quiet };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, &out),
        Command::Copula(a) => copula(a, &out),
        Command::Moments(a) => moments(a, &out),
        Command::PreprocessDanish(a) => preprocess(a, &out),
        Command::Fit(a) => fit(a, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
