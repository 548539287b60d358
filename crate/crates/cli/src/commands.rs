use std::fs;
use std::fmt::Write as _;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use phasefit::entropy::{
    ellipsoid_entropy, full_holder_entropy, holder_sub_entropy, multivariate_entropy, poly_sub_entropy,
    ClassKind, EntropyBoundReport, MultivariateSubclass, RadiusProfile, SmoothnessClassSpec,
};
use phasefit::krr::{self, lambda_rule, KrrModel};
use phasefit::regime::{classify, classify_analytic, multivariate_threshold, MultivariateThreshold, RegimeReport};
use phasefit::sim::{self, fmt_float, slope_fit, ExperimentConfig, RunMetadata, SlopeFit};

use crate::failure::{usage, CliResult, Context};

const THREADS_ENV: &str = "PHASEFIT_THREADS";

#[derive(Parser)]
#[command(name = "phasefit", version, about = "Regime-aware Sobolev kernel ridge regression and entropy bounds")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify (n, sigma, gamma) into the small-n or large-n regime
    Regime(RegimeArgs),
    /// Evaluate log covering/packing bounds over a grid of deltas
    Entropy(EntropyArgs),
    /// Fit kernel ridge regression to an x,y CSV file
    Fit(FitArgs),
    /// Run a Monte Carlo sweep from a JSON config
    Sweep(SweepArgs),
    /// Fit log MISE against log n from a sweep CSV
    Slope(SlopeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    HolderFull,
    PolySub,
    HolderSub,
    Sobolev,
    Ellipsoid,
}

impl From<ClassArg> for ClassKind {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::HolderFull => ClassKind::HolderFull,
            ClassArg::PolySub => ClassKind::PolySub,
            ClassArg::HolderSub => ClassKind::HolderSub,
            ClassArg::Sobolev => ClassKind::Sobolev,
            ClassArg::Ellipsoid => ClassKind::Ellipsoid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Constant,
    Factorial,
    FactorialMinusOne,
}

#[derive(Args)]
struct ProfileArgs {
    /// Radius profile R_k
    #[arg(long, value_enum, default_value = "constant")]
    profile: ProfileArg,
    /// Profile scale C
    #[arg(long, default_value_t = 1.0)]
    c_bar: f64,
    /// Explicit radii R_0..R_{gamma+1}, overriding --profile
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
}

impl ProfileArgs {
    fn profile(&self) -> RadiusProfile {
        match (&self.radii, self.profile) {
            (Some(r), _) => RadiusProfile::Explicit(r.clone()),
            (None, ProfileArg::Constant) => RadiusProfile::Constant(self.c_bar),
            (None, ProfileArg::Factorial) => RadiusProfile::Factorial(self.c_bar),
            (None, ProfileArg::FactorialMinusOne) => RadiusProfile::FactorialMinusOne(self.c_bar),
        }
    }
}

#[derive(Args)]
struct RegimeArgs {
    /// Sample size
    #[arg(long)]
    n: u64,
    /// Noise standard deviation
    #[arg(long, allow_negative_numbers = true)]
    sigma: f64,
    /// Smoothness index gamma of the class
    #[arg(long, required_unless_present = "analytic", conflicts_with = "analytic")]
    gamma: Option<usize>,
    /// Infinitely smooth class
    #[arg(long)]
    analytic: bool,
    #[arg(long, value_enum, default_value = "sobolev")]
    class: ClassArg,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Input dimension for the multivariate threshold
    #[arg(long)]
    d: Option<u64>,
    /// Print the report as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct RegimeOutput {
    #[serde(flatten)]
    report: RegimeReport,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    multivariate: Option<MultivariateThreshold>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubclassArg {
    HolderSub,
    PolySub,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long, value_enum)]
    class: ClassArg,
    /// Smoothness index gamma of the class
    #[arg(long)]
    gamma: usize,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Resolutions, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    delta: Vec<f64>,
    /// Eigenvalue decay constant c for ellipsoids
    #[arg(long)]
    eigen_decay: Option<f64>,
    /// Input dimension; values above 1 use the multivariate bounds
    #[arg(long, default_value_t = 1)]
    d: u64,
    /// Subclass for the multivariate bounds
    #[arg(long, value_enum, default_value = "holder-sub")]
    subclass: SubclassArg,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("penalty").required(true).args(["lambda", "c_bar"]))]
struct FitArgs {
    /// CSV with columns x,y
    #[arg(long)]
    data: PathBuf,
    /// Kernel order k (fits with K_{k+1})
    #[arg(long)]
    order: usize,
    /// Ridge parameter
    #[arg(long)]
    lambda: Option<f64>,
    /// Fit under the norm constraint pi' K pi <= c_bar^2
    #[arg(long)]
    c_bar: Option<f64>,
    /// Points to predict at, comma separated
    #[arg(long, value_delimiter = ',')]
    predict: Vec<f64>,
    /// Print the model as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Deserialize)]
struct DataRow {
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    #[serde(flatten)]
    model: &'a KrrModel,
    predictions: Vec<Prediction>,
}

#[derive(Serialize)]
struct Prediction {
    x: f64,
    y: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Result CSV path
    #[arg(long)]
    out: PathBuf,
    /// Run metadata path; defaults to the CSV path with a .meta.json extension
    #[arg(long)]
    metadata: Option<PathBuf>,
}

#[derive(Args)]
struct SlopeArgs {
    /// Sweep result CSV
    #[arg(long)]
    csv: PathBuf,
    /// Keep rows with this degree token, e.g. gamma_star or fixed(0)
    #[arg(long)]
    token: Option<String>,
    /// Keep rows with this kernel order
    #[arg(long)]
    degree: Option<usize>,
    /// Smallest n to keep
    #[arg(long)]
    min_n: Option<u64>,
    /// Largest n to keep
    #[arg(long)]
    max_n: Option<u64>,
    /// Confidence level of the slope interval
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Print the fit as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Deserialize)]
struct SweepCsvRow {
    n: u64,
    degree_token: String,
    degree_used: usize,
    mise_mean: f64,
}

#[derive(Serialize)]
struct SlopeOutput {
    #[serde(flatten)]
    fit: SlopeFit,
    level: f64,
    ci_lower: f64,
    ci_upper: f64,
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Regime(a) => cmd_regime(a),
        Command::Entropy(a) => cmd_entropy(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Slope(a) => cmd_slope(a),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().usage(THREADS_ENV)?;
    if threads == 0 {
        return usage(format!("{THREADS_ENV} must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .compute("thread pool")
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).compute("json")?;
    emit(&(text + "\n"))
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) -> CliResult<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e).compute("stdout"),
        _ => Ok(()),
    }
}

fn cmd_regime(a: RegimeArgs) -> CliResult<()> {
    if !(a.sigma > 0.0 && a.sigma.is_finite()) {
        return usage(format!("--sigma must be positive, got {}", a.sigma));
    }
    let sigma_sq = a.sigma * a.sigma;
    let report = match a.gamma {
        Some(gamma) if !a.analytic => classify(a.n, sigma_sq, gamma, a.class.into(), &a.profile.profile())?,
        _ => classify_analytic(a.n, sigma_sq)?,
    };
    let lambda = lambda_rule(&report, a.sigma, a.profile.c_bar)?;
    let multivariate = match (a.d, a.gamma) {
        (Some(d), Some(gamma)) => Some(multivariate_threshold(a.n, sigma_sq, gamma, d)?),
        (Some(_), None) => return usage("--d needs --gamma"),
        _ => None,
    };
    let out = RegimeOutput {
        report,
        lambda,
        multivariate,
    };
    if a.json {
        return print_json(&out);
    }
    let r = &out.report;
    let mut text = String::new();
    let _ = writeln!(text, "regime: {}", r.regime);
    let _ = writeln!(text, "n: {}", r.n);
    let _ = writeln!(text, "sigma_sq: {}", r.sigma_sq);
    let _ = writeln!(text, "gamma: {}", r.gamma);
    let _ = match r.gamma_star {
        Some(g) => writeln!(text, "gamma_star: {g}"),
        None => writeln!(text, "gamma_star: -"),
    };
    let _ = writeln!(text, "recommended_degree: {}", r.recommended_degree);
    let _ = writeln!(text, "predicted_rate: {}", r.predicted_rate);
    let _ = writeln!(text, "rate_formula: {}", r.rate_formula);
    let _ = writeln!(text, "lambda: {}", out.lambda);
    if let Some(m) = &out.multivariate {
        let _ = writeln!(text, "multivariate_small_n: {}", m.small_n);
        let _ = writeln!(text, "multivariate_log_threshold: {}", m.log_threshold);
    }
    emit(&text)
}

fn entropy_report(a: &EntropyArgs, spec: &SmoothnessClassSpec, delta: f64) -> phasefit::Result<EntropyBoundReport> {
    if a.d > 1 {
        let sub = match a.subclass {
            SubclassArg::HolderSub => MultivariateSubclass::HolderSub,
            SubclassArg::PolySub => MultivariateSubclass::PolySub,
        };
        return multivariate_entropy(spec, a.d, delta, sub);
    }
    match spec.kind() {
        ClassKind::PolySub => poly_sub_entropy(spec, delta),
        ClassKind::HolderSub => holder_sub_entropy(spec, delta),
        ClassKind::HolderFull => full_holder_entropy(spec, delta),
        ClassKind::Sobolev | ClassKind::Ellipsoid => ellipsoid_entropy(spec, delta),
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn cmd_entropy(a: EntropyArgs) -> CliResult<()> {
    if a.d == 0 {
        return usage("--d must be at least 1");
    }
    let mut spec = SmoothnessClassSpec::from_profile(a.class.into(), a.gamma, &a.profile.profile())?;
    if let Some(c) = a.eigen_decay {
        spec = spec.with_eigen_decay(c)?;
    }
    let mut out = String::from("delta,lower_log,upper_log,branch\n");
    for &delta in &a.delta {
        let r = entropy_report(&a, &spec, delta)?;
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(r.delta),
            opt_float(r.lower_log),
            opt_float(r.upper_log),
            r.branch
        ));
    }
    emit(&out)
}

fn read_data(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).usage(&format!("reading {}", path.display()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in reader.deserialize::<DataRow>() {
        let row = row.usage(&format!("parsing {}", path.display()))?;
        xs.push(row.x);
        ys.push(row.y);
    }
    Ok((xs, ys))
}

fn cmd_fit(a: FitArgs) -> CliResult<()> {
    let (xs, ys) = read_data(&a.data)?;
    let model = match (a.lambda, a.c_bar) {
        (Some(lambda), _) => krr::fit(a.order, &xs, &ys, lambda)?,
        (None, Some(c_bar)) => krr::fit_constrained(a.order, &xs, &ys, c_bar)?,
        (None, None) => return usage("one of --lambda or --c-bar is required"),
    };
    let predictions = a
        .predict
        .iter()
        .map(|&x| Ok(Prediction { x, y: model.predict(x)? }))
        .collect::<phasefit::Result<Vec<_>>>()?;
    if a.json {
        return print_json(&FitOutput {
            model: &model,
            predictions,
        });
    }
    let mut out = String::new();
    let _ = writeln!(out, "order_k: {}", model.order_k);
    let _ = writeln!(out, "n: {}", model.n());
    let _ = writeln!(out, "lambda: {}", model.lambda);
    let _ = writeln!(out, "rkhs_norm: {}", model.rkhs_norm);
    let _ = writeln!(out, "jitter: {}", model.jitter);
    let _ = writeln!(out, "residual: {}", model.residual);
    for p in predictions {
        let _ = writeln!(out, "predict({}) = {}", p.x, p.y);
    }
    emit(&out)
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).usage(&format!("reading {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        crate::failure::Failure::Usage(anyhow::anyhow!(
            "{}: invalid config at `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })?;
    config.validate().usage(&format!("{}", path.display()))?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    let mut f = fs::File::create(path).compute(&format!("creating {}", path.display()))?;
    f.write_all(contents.as_bytes())
        .compute(&format!("writing {}", path.display()))
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let config = load_config(&a.config)?;
    let output = sim::sweep(&config)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    write_file(&a.out, &sim::rows_to_csv(&output.rows))?;
    let meta_path = a.metadata.unwrap_or_else(|| a.out.with_extension("meta.json"));
    let meta = serde_json::to_string_pretty(&RunMetadata::new(&config, &output)).compute("metadata")?;
    write_file(&meta_path, &(meta + "\n"))?;
    emit(&format!(
        "wrote {} rows to {} and metadata to {}\n",
        output.rows.len(),
        a.out.display(),
        meta_path.display()
    ))
}

fn cmd_slope(a: SlopeArgs) -> CliResult<()> {
    if !(a.level > 0.0 && a.level < 1.0) {
        return usage(format!("--level must lie in (0, 1), got {}", a.level));
    }
    let mut reader = csv::Reader::from_path(&a.csv).usage(&format!("reading {}", a.csv.display()))?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<SweepCsvRow>() {
        let row = row.usage(&format!("parsing {}", a.csv.display()))?;
        let keep = a.token.as_ref().is_none_or(|t| *t == row.degree_token)
            && a.degree.is_none_or(|d| d == row.degree_used)
            && a.min_n.is_none_or(|m| row.n >= m)
            && a.max_n.is_none_or(|m| row.n <= m);
        if keep {
            rows.push(row);
        }
    }
    let mut ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return usage("selected rows repeat a sample size; narrow them with --token or --degree");
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mise_mean).collect();
    let fit = slope_fit(&x, &y)?;
    let df = (fit.points - 2) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .compute("t distribution")?
        .inverse_cdf(0.5 + a.level / 2.0);
    let out = SlopeOutput {
        fit,
        level: a.level,
        ci_lower: fit.slope - t * fit.slope_stderr,
        ci_upper: fit.slope + t * fit.slope_stderr,
    };
    if a.json {
        return print_json(&out);
    }
    let mut text = String::new();
    let _ = writeln!(text, "slope: {}", out.fit.slope);
    let _ = writeln!(text, "intercept: {}", out.fit.intercept);
    let _ = writeln!(text, "r_squared: {}", out.fit.r_squared);
    let _ = writeln!(text, "ci_{}: [{}, {}]", a.level, out.ci_lower, out.ci_upper);
    let _ = writeln!(text, "points: {}", out.fit.points);
    emit(&text)
}
