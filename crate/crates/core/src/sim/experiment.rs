//! Seeded data generation, Monte Carlo MISE estimation and sweeps.

use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functions::{Certificate, TestFunction, Truth};
use super::metrics::{ise_on, smse, QuadratureGrid};
use crate::entropy::{ClassKind, RadiusProfile};
use crate::error::{Error, Result};
use crate::krr::{self, lambda_large_n, lambda_rule};
use crate::regime::{classify, heuristic_degree};

pub const PRNG_ID: &str = "rand_chacha::ChaCha8Rng seeded by u64, normals via rand_distr::StandardNormal";
pub const SEED_MIXER: &str = "splitmix64(seed ^ splitmix64(n ^ splitmix64(degree ^ splitmix64(replication))))";
/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.1;
pub const CSV_HEADER: &str =
    "n,sigma,gamma_true,degree_token,degree_used,lambda,mise_mean,mise_stderr,smse_mean,replications,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeToken {
    /// Order γ*, with the regime's λ.
    GammaStar,
    /// Order γ of the truth's class.
    GammaMax,
    /// Order `heuristic_degree(n) − 1`.
    Heuristic,
    Fixed(usize),
}

impl fmt::Display for DegreeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeToken::GammaStar => f.write_str("gamma_star"),
            DegreeToken::GammaMax => f.write_str("gamma_max"),
            DegreeToken::Heuristic => f.write_str("heuristic"),
            DegreeToken::Fixed(k) => write!(f, "fixed({k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    #[default]
    Uniform01,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_grid: Vec<u64>,
    pub sigma: f64,
    pub truth: TestFunction,
    pub degrees: Vec<DegreeToken>,
    #[serde(default = "default_multiplier")]
    pub lambda_multiplier: f64,
    pub replications: usize,
    #[serde(default = "default_quad_points")]
    pub quadrature_points: usize,
    pub seed: u64,
    #[serde(default)]
    pub density: Density,
}

fn default_multiplier() -> f64 {
    1.0
}

fn default_quad_points() -> usize {
    256
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid.contains(&0) {
            return bad("n_grid entries must be at least 1".into());
        }
        if self.degrees.is_empty() {
            return bad("degrees is empty".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and non-negative, got {}", self.sigma));
        }
        if !(self.lambda_multiplier > 0.0 && self.lambda_multiplier.is_finite()) {
            return bad(format!(
                "lambda_multiplier must be positive, got {}",
                self.lambda_multiplier
            ));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        QuadratureGrid::new(self.quadrature_points)?;
        Ok(())
    }
}

/// `xs ~ Uniform[0,1)` i.i.d., then `ys = f(xs) + σ ε`.
pub fn gen_data<F: Fn(f64) -> f64>(truth: F, n: usize, sigma: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let ys = xs
        .iter()
        .map(|&x| {
            let eps: f64 = rng.sample(StandardNormal);
            truth(x) + sigma * eps
        })
        .collect();
    (xs, ys)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication r of cell (n, degree); independent of run order.
pub fn derive_seed(seed: u64, n: u64, degree: usize, replication: u64) -> u64 {
    let cell = splitmix64(n ^ splitmix64(degree as u64 ^ splitmix64(replication)));
    splitmix64(seed ^ cell)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiseResult {
    pub n: u64,
    pub degree_used: usize,
    pub lambda: f64,
    pub mise_mean: f64,
    pub mise_stderr: f64,
    /// False with a single replication, where the stderr is reported as 0.
    pub stderr_defined: bool,
    pub smse_mean: f64,
    /// Successful replications.
    pub replications: usize,
    pub failures: usize,
    pub seed: u64,
}

pub fn mise_mc(config: &ExperimentConfig, n: u64, degree: usize, lambda: f64) -> Result<MiseResult> {
    config.validate()?;
    let truth = config.truth.build()?;
    let grid = QuadratureGrid::new(config.quadrature_points)?;
    mise_mc_with(config, &truth, &grid, n, degree, lambda)
}

fn mise_mc_with(
    config: &ExperimentConfig,
    truth: &Truth,
    grid: &QuadratureGrid,
    n: u64,
    degree: usize,
    lambda: f64,
) -> Result<MiseResult> {
    let outcomes: Vec<Result<(f64, f64)>> = (1..=config.replications as u64)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(config.seed, n, degree, r);
            let (xs, ys) = gen_data(|x| truth.eval(x), n as usize, config.sigma, seed);
            let model = krr::fit(degree, &xs, &ys, lambda)?;
            let f_hat = |x: f64| model.predict_unchecked(x);
            let ise = ise_on(grid, f_hat, |x| truth.eval(x));
            let smse = smse(f_hat, |x| truth.eval(x), &xs)?;
            Ok((ise, smse))
        })
        .collect();
    let total = outcomes.len();
    let ok: Vec<(f64, f64)> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let failures = total - ok.len();
    if ok.is_empty() || failures as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::TooManyFailures { failed: failures, total });
    }
    let m = ok.len() as f64;
    let mise_mean = ok.iter().map(|o| o.0).sum::<f64>() / m;
    let smse_mean = ok.iter().map(|o| o.1).sum::<f64>() / m;
    let (mise_stderr, stderr_defined) = if ok.len() > 1 {
        let var = ok.iter().map(|o| (o.0 - mise_mean).powi(2)).sum::<f64>() / (m - 1.0);
        ((var / m).sqrt(), true)
    } else {
        (0.0, false)
    };
    Ok(MiseResult {
        n,
        degree_used: degree,
        lambda,
        mise_mean,
        mise_stderr,
        stderr_defined,
        smse_mean,
        replications: ok.len(),
        failures,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub gamma_true: usize,
    pub degree_token: DegreeToken,
    #[serde(flatten)]
    pub result: MiseResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
    pub certificate: Certificate,
}

/// Kernel order and λ for a token at sample size n.
///
/// γ* and its λ come from the regime of the truth's class; the other tokens
/// use the large-n rule at their own order. With σ = 0 the signal-to-noise
/// ratio is infinite, which is the large-n side of every threshold.
pub fn resolve_degree(token: DegreeToken, n: u64, sigma: f64, gamma: usize, radius: f64) -> Result<(usize, f64)> {
    match token {
        DegreeToken::GammaStar if sigma > 0.0 => {
            let report = classify(n, sigma * sigma, gamma, ClassKind::Sobolev, &RadiusProfile::Constant(radius))?;
            let order = report.gamma_star.unwrap_or(gamma);
            Ok((order, lambda_rule(&report, sigma, radius)?))
        }
        DegreeToken::GammaStar | DegreeToken::GammaMax => Ok((gamma, lambda_large_n(n, gamma))),
        DegreeToken::Heuristic => {
            let order = heuristic_degree(n) - 1;
            Ok((order, lambda_large_n(n, order)))
        }
        DegreeToken::Fixed(k) => Ok((k, lambda_large_n(n, k))),
    }
}

pub fn sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let truth = config.truth.build()?;
    let grid = QuadratureGrid::new(config.quadrature_points)?;
    let gamma = truth.gamma();
    let mut rows = Vec::with_capacity(config.n_grid.len() * config.degrees.len());
    let mut warnings = Vec::new();
    for &n in &config.n_grid {
        for &token in &config.degrees {
            let (degree, lambda) = resolve_degree(token, n, config.sigma, gamma, config.truth.radius())?;
            let lambda = lambda * config.lambda_multiplier;
            if n < degree as u64 + 1 {
                warnings.push(format!(
                    "n = {n} is below degree + 1 = {} for token {token}",
                    degree + 1
                ));
            }
            let result = mise_mc_with(config, &truth, &grid, n, degree, lambda)?;
            if result.failures > 0 {
                warnings.push(format!(
                    "{} of {} replications failed at n = {n}, token {token}",
                    result.failures, config.replications
                ));
            }
            rows.push(SweepRow {
                sigma: config.sigma,
                gamma_true: gamma,
                degree_token: token,
                result,
            });
        }
    }
    Ok(SweepOutput {
        rows,
        warnings,
        certificate: truth.certificate().clone(),
    })
}

/// Floats in scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.result;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            fmt_float(row.sigma),
            row.gamma_true,
            row.degree_token,
            r.degree_used,
            fmt_float(r.lambda),
            fmt_float(r.mise_mean),
            fmt_float(r.mise_stderr),
            fmt_float(r.smse_mean),
            r.replications,
            r.seed
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool_version: &'static str,
    pub prng: &'static str,
    pub seed_mixer: &'static str,
    pub config: ExperimentConfig,
    pub certificate: Certificate,
    pub constants: RunConstants,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConstants {
    pub lambda_rule_constant: f64,
    pub jitter_scale: f64,
    pub residual_tolerance: f64,
    pub max_failure_rate: f64,
    pub quadrature: String,
}

impl RunMetadata {
    pub fn new(config: &ExperimentConfig, output: &SweepOutput) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            prng: PRNG_ID,
            seed_mixer: SEED_MIXER,
            config: config.clone(),
            certificate: output.certificate.clone(),
            constants: RunConstants {
                lambda_rule_constant: 1.0,
                jitter_scale: krr::JITTER_SCALE,
                residual_tolerance: krr::RESIDUAL_TOL,
                max_failure_rate: MAX_FAILURE_RATE,
                quadrature: format!(
                    "composite Gauss-Legendre, {} nodes per panel",
                    super::metrics::NODES_PER_PANEL
                ),
            },
            warnings: output.warnings.clone(),
        }
    }
}
