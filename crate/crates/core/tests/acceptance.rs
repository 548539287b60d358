//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasefit::complexity::{critical_radius, kernel_complexity};
use phasefit::entropy::{
    build_packing_set, b2_feasibility, legendre_coeffs, legendre_eval, poly_cover_upper, Branch, ClassKind,
    ProductCover, RadiusProfile, SmoothnessClassSpec,
};
use phasefit::kernels::{kernel_matrix, symmetric_eigenvalues, SobolevKernel};
use phasefit::krr::{fit, fit_constrained, LAMBDA_MIN};
use phasefit::poly::Polynomial;
use phasefit::quadrature::GaussLegendre;
use phasefit::regime::{classify, gamma_star, Regime, Threshold};
use phasefit::sim::{
    kl_pair, rows_to_csv, slope_fit, sweep, DegreeToken, Density, ExperimentConfig, SweepOutput, TestFunction,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "gamma* oracle equivalence", budget: secs(1), run: gamma_star_oracle },
        Criterion { id: 2, name: "regime consistency", budget: secs(1), run: regime_consistency },
        Criterion { id: 3, name: "kernel correctness", budget: secs(10), run: kernel_correctness },
        Criterion { id: 4, name: "krr interpolation and monotonicity", budget: secs(10), run: krr_behaviour },
        Criterion { id: 5, name: "legendre suite", budget: secs(5), run: legendre_suite },
        Criterion { id: 6, name: "constructive sets", budget: secs(30), run: constructive_sets },
        Criterion { id: 7, name: "critical radius", budget: secs(5), run: critical_radius_suite },
        Criterion { id: 8, name: "large-n rate slope", budget: secs(300), run: large_n_slope },
        Criterion { id: 9, name: "small-n degree comparison", budget: secs(600), run: small_n_comparison },
        Criterion { id: 10, name: "kl diagnostic", budget: secs(1), run: kl_diagnostic },
        Criterion { id: 11, name: "determinism", budget: secs(60), run: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("over budget; {detail}")),
            other => other,
        };
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {:>2} {status} [{}] {:.2}s of {}s: {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
        if outcome.is_err() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];

/// Integer-rounded log grid over [1, 1e8] plus every n up to 10^4.
fn n_grid() -> Vec<u64> {
    let mut ns: Vec<u64> = (1..=10_000).collect();
    ns.extend((0..=320).map(|j| 10f64.powf(j as f64 / 40.0).round() as u64));
    ns.sort_unstable();
    ns.dedup();
    ns
}

/// `(k+1)^{2k+3}` exactly.
fn standard_threshold(k: u32) -> u128 {
    (k as u128 + 1).pow(2 * k + 3)
}

/// Smallest k with `n/σ² ≤ (k+1)^{2k+3}`, in integers: σ² is a power of four
/// here, so compare `4n ≤ 4σ² (k+1)^{2k+3}`.
fn oracle_standard(n: u64, sigma: f64) -> usize {
    let four_var = (4.0 * sigma * sigma) as u128;
    (0u32..)
        .find(|&k| 4 * n as u128 <= four_var * standard_threshold(k))
        .unwrap() as usize
}

/// Smallest k with `n/σ² ≤ ((k+1) log(k∨2))^{2k+3}`, by direct powers.
fn oracle_log_weighted(n: u64, sigma: f64) -> usize {
    let snr = n as f64 / (sigma * sigma);
    (0usize..)
        .find(|&k| snr <= ((k + 1) as f64 * (k.max(2) as f64).ln()).powi(2 * k as i32 + 3))
        .unwrap()
}

fn gamma_star_oracle() -> Outcome {
    let mut ns = n_grid();
    // exact ties n/σ² = (k+1)^{2k+3} and their neighbours
    for k in 0..6 {
        let t = standard_threshold(k);
        for scale in [1u128, 4] {
            for q in [t * scale, t.div_ceil(4)] {
                for n in [q.saturating_sub(1), q, q + 1] {
                    if (1..=100_000_000).contains(&n) {
                        ns.push(n as u64);
                    }
                }
            }
        }
    }
    let mut checked = 0;
    for &n in &ns {
        for sigma in SIGMAS {
            let var = sigma * sigma;
            let got = gamma_star(n, var, None, Threshold::Standard).map_err(|e| e.to_string())?;
            let want = oracle_standard(n, sigma);
            ensure!(got == want, "standard: n={n} sigma={sigma}: got {got}, oracle {want}");
            let got = gamma_star(n, var, None, Threshold::LogWeighted).map_err(|e| e.to_string())?;
            let want = oracle_log_weighted(n, sigma);
            ensure!(got == want, "log-weighted: n={n} sigma={sigma}: got {got}, oracle {want}");
            checked += 2;
        }
    }
    Ok(format!("{checked} (n, sigma, threshold) points match"))
}

fn regime_consistency() -> Outcome {
    let mut checked = 0;
    let mut large = 0;
    for n in n_grid() {
        for sigma in SIGMAS {
            let var = sigma * sigma;
            let uncapped = gamma_star(n, var, None, Threshold::Standard).map_err(|e| e.to_string())?;
            for gamma in 0..=10usize {
                let r = classify(n, var, gamma, ClassKind::Sobolev, &RadiusProfile::Constant(1.0))
                    .map_err(|e| e.to_string())?;
                let small = r.regime == Regime::SmallN;
                ensure!(
                    small == (uncapped <= gamma),
                    "n={n} sigma={sigma} gamma={gamma}: regime {} but uncapped gamma*={uncapped}",
                    r.regime
                );
                if !small {
                    let g = gamma as f64;
                    let lhs = var * (g + 1.0) / n as f64;
                    let rhs = (var / n as f64).powf((2.0 * g + 2.0) / (2.0 * g + 3.0));
                    ensure!(lhs < rhs, "n={n} sigma={sigma} gamma={gamma}: {lhs} >= {rhs}");
                    large += 1;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} grid points, {large} large-n strict inequalities"))
}

/// Closed forms of `K_{k+1}` for k = 0, 1, 2 with the integral expanded by hand.
fn kernel_closed_form(k: usize, x: f64, y: f64) -> f64 {
    let m = x.min(y);
    let (s, p) = (x + y, x * y);
    match k {
        0 => 1.0 + m,
        1 => 1.0 + p + p * m - s * m * m / 2.0 + m.powi(3) / 3.0,
        2 => {
            let integral = p * p * m - p * s * m * m + (s * s + 2.0 * p) * m.powi(3) / 3.0 - s * m.powi(4) / 2.0
                + m.powi(5) / 5.0;
            1.0 + p + p * p / 4.0 + integral / 4.0
        }
        _ => unreachable!(),
    }
}

fn kernel_correctness() -> Outcome {
    let k2 = SobolevKernel::new(1).eval(1.0, 1.0).map_err(|e| e.to_string())?;
    ensure!((k2 - 7.0 / 3.0).abs() <= 1e-12, "K_2(1,1) = {k2}");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for k in 0..=2 {
        let kernel = SobolevKernel::new(k);
        let mut points: Vec<(f64, f64)> = vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.3, 0.7), (0.7, 0.3)];
        points.extend((0..500).map(|_| (rng.random::<f64>(), rng.random::<f64>())));
        for (x, y) in points {
            let got = kernel.eval(x, y).map_err(|e| e.to_string())?;
            let err = (got - kernel_closed_form(k, x, y)).abs();
            ensure!(err <= 1e-12, "order {k} at ({x}, {y}): error {err:e}");
            worst = worst.max(err);
        }
    }
    let mut min_eig = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(2..=200usize);
        let k = rng.random_range(0..=5usize);
        let xs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let km = kernel_matrix(&SobolevKernel::new(k), &xs).map_err(|e| e.to_string())?;
        let eigs = symmetric_eigenvalues(km.entries()).map_err(|e| e.to_string())?;
        let low = eigs.iter().copied().fold(f64::INFINITY, f64::min);
        ensure!(low >= -1e-9, "n={n} order {k}: min eigenvalue {low:e}");
        min_eig = min_eig.min(low);
    }
    Ok(format!("closed-form error <= {worst:.1e}; min eigenvalue over 50 matrices {min_eig:.1e}"))
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    // one uniform point per cell [i/n, (i+1)/n)
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random::<f64>()) / n as f64).collect();
    let ys = xs.iter().map(|x| (6.0 * x).sin() + rng.random_range(-0.3..0.3)).collect();
    (xs, ys)
}

fn training_smse(model: &phasefit::krr::KrrModel, xs: &[f64], ys: &[f64]) -> Result<f64, String> {
    let fitted = model.predict_many(xs).map_err(|e| e.to_string())?;
    Ok(fitted.iter().zip(ys).map(|(f, y)| (f - y).powi(2)).sum::<f64>() / xs.len() as f64)
}

fn krr_behaviour() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // interpolation error is at most (λ/μ_min)|y|; nonsingular means μ_min ≥ 1e-4
    let mut designs = 0;
    for k in 0..=5usize {
        for n in 2..=40 {
            let (xs, ys) = random_problem(&mut rng, n);
            let km = kernel_matrix(&SobolevKernel::new(k), &xs).map_err(|e| e.to_string())?;
            if km.eigenvalues().map_err(|e| e.to_string())?[n - 1] < 1e-4 {
                continue;
            }
            let m = fit(k, &xs, &ys, 1e-10).map_err(|e| e.to_string())?;
            for (x, y) in xs.iter().zip(&ys) {
                let f = m.predict(*x).map_err(|e| e.to_string())?;
                ensure!((f - y).abs() <= 1e-6, "order {k} n={n}: f({x}) = {f}, y = {y}");
            }
            designs += 1;
        }
    }
    ensure!(designs >= 20, "only {designs} nonsingular designs");

    let mut paths = 0;
    for k in 0..=5usize {
        for n in [20, 60, 120] {
            let (xs, ys) = random_problem(&mut rng, n);
            let (mut prev_norm, mut prev_smse) = (f64::INFINITY, 0.0);
            for e in -16..=8 {
                let lambda = 10f64.powf(e as f64 / 2.0);
                let m = fit(k, &xs, &ys, lambda).map_err(|e| e.to_string())?;
                let smse = training_smse(&m, &xs, &ys)?;
                ensure!(
                    m.rkhs_norm <= prev_norm * (1.0 + 1e-9),
                    "order {k} n={n} lambda={lambda:e}: norm rose to {}",
                    m.rkhs_norm
                );
                ensure!(
                    smse >= prev_smse * (1.0 - 1e-9) - 1e-15,
                    "order {k} n={n} lambda={lambda:e}: smse fell to {smse}"
                );
                prev_norm = m.rkhs_norm;
                prev_smse = smse;
            }
            paths += 1;
        }
    }

    let mut constrained = 0;
    for k in 0..=4usize {
        for n in [10, 40, 100] {
            let (xs, ys) = random_problem(&mut rng, n);
            let free = fit(k, &xs, &ys, LAMBDA_MIN).map_err(|e| e.to_string())?;
            for share in [0.5, 0.1, 0.01] {
                let c_bar = (share * free.rkhs_norm).sqrt();
                let m = fit_constrained(k, &xs, &ys, c_bar).map_err(|e| e.to_string())?;
                let target = c_bar * c_bar;
                ensure!(
                    (m.rkhs_norm - target).abs() <= 1e-6 * target,
                    "order {k} n={n}: norm {} vs target {target}",
                    m.rkhs_norm
                );
                constrained += 1;
            }
        }
    }
    Ok(format!(
        "{designs} interpolating designs, {paths} monotone lambda paths, {constrained} active constraints"
    ))
}

/// `P_j(x)` by the three-term recurrence.
fn legendre_p(j: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if j == 0 {
        return prev;
    }
    for m in 1..j {
        let next = ((2 * m + 1) as f64 * x * cur - m as f64 * prev) / (m + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

fn legendre_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rule = GaussLegendre::new(12);
    let (mut worst_proj, mut worst_sup): (f64, f64) = (0.0, 0.0);
    for trial in 0..400 {
        let gamma = trial % 9;
        let coeffs: Vec<f64> = (0..=gamma).map(|_| rng.random_range(-3.0..3.0)).collect();
        let eval = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let mut fact = 1.0;
        let taylor: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect();
        let theta = legendre_coeffs(&taylor);
        ensure!(theta.len() == gamma + 1, "length {} for gamma {gamma}", theta.len());
        for (j, t) in theta.iter().enumerate() {
            let proj = (2 * j + 1) as f64 / 2.0 * rule.integrate(-1.0, 1.0, |x| eval(x) * legendre_p(j, x));
            let err = (t - proj).abs();
            ensure!(err <= 1e-8, "gamma {gamma} coefficient {j}: {t} vs projection {proj}");
            worst_proj = worst_proj.max(err);
        }
        for i in 0..=400 {
            let x = -1.0 + i as f64 / 200.0;
            let err = (legendre_eval(&theta, x) - eval(x)).abs();
            ensure!(err <= 1e-10, "gamma {gamma}: reconstruction error {err:e} at {x}");
            worst_sup = worst_sup.max(err);
        }
    }
    Ok(format!(
        "400 polynomials: projection error {worst_proj:.1e}, sup error {worst_sup:.1e}"
    ))
}

fn constructive_sets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut summary = Vec::new();
    for (label, profile) in [("constant", RadiusProfile::Constant(1.0)), ("factorial", RadiusProfile::Factorial(1.0))] {
        for gamma in 0..=6usize {
            let spec =
                SmoothnessClassSpec::from_profile(ClassKind::PolySub, gamma, &profile).map_err(|e| e.to_string())?;
            let needed = 1u64 << (gamma + 1);
            let delta = (1..40)
                .map(|j| 0.5f64.powi(j))
                .find(|&d| {
                    b2_feasibility(&spec, d).is_ok_and(|f| f.feasible && f.m0 >= needed && f.m0 <= 20_000)
                })
                .ok_or_else(|| format!("{label} gamma={gamma}: no feasible delta"))?;
            let packing = build_packing_set(&spec, delta, 1.0).map_err(|e| format!("{label} gamma={gamma}: {e}"))?;
            ensure!(
                packing.members.len() == packing.m0 && packing.m0 as u64 >= needed,
                "{label} gamma={gamma}: {} members, M_0 = {}",
                packing.members.len(),
                packing.m0
            );
            ensure!(packing.min_distance > delta, "{label} gamma={gamma}: separation {}", packing.min_distance);

            let (bound, branch) = poly_cover_upper(&spec, delta).map_err(|e| e.to_string())?;
            ensure!(branch == Branch::CoverGrid, "{label} gamma={gamma}: branch {branch} at delta {delta}");
            let cover = ProductCover::new(&spec, delta).map_err(|e| e.to_string())?;
            let slack = (gamma as f64 + 1.0) * 2f64.ln();
            ensure!(
                cover.log_size() <= bound + slack,
                "{label} gamma={gamma}: log size {} above {bound} + {slack}",
                cover.log_size()
            );
            let halves = spec.coefficient_bounds();
            for _ in 0..1000 {
                let theta: Vec<f64> = halves.iter().map(|h| rng.random_range(-h..=*h)).collect();
                let (point, l1) = cover.nearest(&theta).map_err(|e| e.to_string())?;
                ensure!(l1 <= delta * (1.0 + 1e-12), "{label} gamma={gamma}: l1 distance {l1} > {delta}");
                let diff = Polynomial::new(theta.iter().zip(&point).map(|(a, b)| a - b).collect());
                let sup = (0..=200)
                    .map(|i| diff.eval(-1.0 + i as f64 / 100.0).abs())
                    .fold(0.0, f64::max);
                ensure!(sup <= delta * (1.0 + 1e-12), "{label} gamma={gamma}: sup distance {sup} > {delta}");
            }
            summary.push(format!("{label}/{gamma}:M0={}", packing.m0));
        }
    }
    Ok(summary.join(" "))
}

fn critical_radius_suite() -> Outcome {
    for (c0, want) in [(0.5, 2f64.sqrt()), (2.0, 0.5)] {
        let r = critical_radius(&[1.0], c0).map_err(|e| e.to_string())?.radius;
        ensure!((r - want).abs() <= 1e-9, "c0={c0}: r = {r}, want {want}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut spectra = 0;
    for _ in 0..30 {
        let n = rng.random_range(2..=200usize);
        let k = rng.random_range(0..=5usize);
        let xs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let km = kernel_matrix(&SobolevKernel::new(k), &xs).map_err(|e| e.to_string())?;
        let eigs = km.eigenvalues().map_err(|e| e.to_string())?;
        for c0 in [0.05, 0.5, 1.0, 5.0, 50.0] {
            let r = critical_radius(eigs, c0).map_err(|e| e.to_string())?.radius;
            let residual = kernel_complexity(r, eigs).map_err(|e| e.to_string())? - c0 * r * r;
            ensure!(residual.abs() <= 1e-10, "n={n} order {k} c0={c0}: residual {residual:e}");
            worst = worst.max(residual.abs());
        }
        let mut prev = f64::INFINITY;
        for j in -60..=20 {
            let r = 10f64.powf(j as f64 / 10.0);
            let ratio = kernel_complexity(r, eigs).map_err(|e| e.to_string())? / r;
            ensure!(ratio <= prev * (1.0 + 1e-12), "n={n} order {k}: ratio rose at r={r}");
            prev = ratio;
        }
        spectra += 1;
    }
    Ok(format!("closed forms recovered; {spectra} spectra, max residual {worst:.1e}"))
}

fn config(truth: TestFunction, n_grid: Vec<u64>, sigma: f64, degrees: Vec<DegreeToken>, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_grid,
        sigma,
        truth,
        degrees,
        lambda_multiplier: 1.0,
        replications: reps,
        quadrature_points: 256,
        seed: 20240917,
        density: Density::Uniform01,
    }
}

fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput, String> {
    sweep(config).map_err(|e| e.to_string())
}

fn large_n_slope() -> Outcome {
    let ns: Vec<u64> = (7..=13).map(|p| 1u64 << p).collect();
    let cfg = config(
        TestFunction::Bump { gamma: 0, radius: 1.0 },
        ns,
        0.3,
        vec![DegreeToken::GammaStar],
        200,
    );
    let out = run_sweep(&cfg)?;
    ensure!(out.certificate.passed(), "truth not certified");
    ensure!(out.rows.iter().all(|r| r.result.degree_used == 0), "order is not 0");
    let x: Vec<f64> = out.rows.iter().map(|r| r.result.n as f64).collect();
    let y: Vec<f64> = out.rows.iter().map(|r| r.result.mise_mean).collect();
    let fit = slope_fit(&x, &y).map_err(|e| e.to_string())?;
    ensure!(
        (-0.80..=-0.53).contains(&fit.slope),
        "slope {:.4} outside [-0.80, -0.53]",
        fit.slope
    );
    Ok(format!("slope {:.4} (r^2 {:.4}), theory -0.6667", fit.slope, fit.r_squared))
}

fn small_n_comparison() -> Outcome {
    let cfg = config(
        TestFunction::PolyStar { gamma: 4, c_bar: 1.0 },
        vec![32, 64, 100],
        1.0,
        vec![DegreeToken::GammaStar, DegreeToken::GammaMax],
        500,
    );
    let out = run_sweep(&cfg)?;
    ensure!(out.certificate.passed(), "truth not certified");
    let csv = rows_to_csv(&out.rows);
    ensure!(
        csv.contains(",gamma_star,") && csv.contains(",gamma_max,"),
        "sweep output lacks a token column"
    );
    let mut wins = 0;
    let mut detail = Vec::new();
    for n in [32u64, 64, 100] {
        let pick = |token: DegreeToken| {
            out.rows
                .iter()
                .find(|r| r.result.n == n && r.degree_token == token)
                .map(|r| (r.result.degree_used, r.result.mise_mean))
                .ok_or_else(|| format!("missing row n={n} token {token}"))
        };
        let (star_order, star) = pick(DegreeToken::GammaStar)?;
        let (max_order, max) = pick(DegreeToken::GammaMax)?;
        if star <= max {
            wins += 1;
        }
        detail.push(format!("n={n}: order {star_order} {star:.4} vs order {max_order} {max:.4}"));
    }
    ensure!(wins >= 2, "gamma* wins {wins} of 3; {}", detail.join("; "));
    Ok(format!("gamma* wins {wins} of 3; {}", detail.join("; ")))
}

/// `∫_0^1 d(x)² dx = Σ_{i,j} d_i d_j / (i+j+1)`.
fn exact_ise(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let d: Vec<f64> = (0..len)
        .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
        .collect();
    let mut total = 0.0;
    for (i, di) in d.iter().enumerate() {
        for (j, dj) in d.iter().enumerate() {
            total += di * dj / (i + j + 1) as f64;
        }
    }
    total
}

fn kl_diagnostic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let a: Vec<f64> = (0..rng.random_range(1..=7)).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..rng.random_range(1..=7)).map(|_| rng.random_range(-2.0..2.0)).collect();
        let n = rng.random_range(1..=100_000u64);
        let sigma = rng.random_range(0.1..3.0);
        let (pa, pb) = (Polynomial::new(a.clone()), Polynomial::new(b.clone()));
        let got = kl_pair(|x| pa.eval(x), |x| pb.eval(x), n, sigma, 256).map_err(|e| e.to_string())?;
        let want = n as f64 / (2.0 * sigma * sigma) * exact_ise(&a, &b);
        let rel = (got - want).abs() / want.abs().max(1.0);
        ensure!(rel <= 1e-8, "n={n} sigma={sigma}: {got} vs {want}");
        worst = worst.max(rel);
    }
    Ok(format!("500 polynomial pairs, max relative error {worst:.1e}"))
}

fn determinism() -> Outcome {
    let cfgs = [
        config(
            TestFunction::Bump { gamma: 1, radius: 1.0 },
            vec![16, 64, 256],
            0.5,
            vec![DegreeToken::GammaStar, DegreeToken::Heuristic, DegreeToken::Fixed(2)],
            40,
        ),
        config(
            TestFunction::EllipsoidMember { gamma: 2, radius: 1.0, terms: 6, sign_seed: 3 },
            vec![20, 80],
            1.0,
            vec![DegreeToken::GammaMax, DegreeToken::Fixed(0)],
            40,
        ),
    ];
    let mut bytes = 0;
    for cfg in &cfgs {
        let first = rows_to_csv(&run_sweep(cfg)?.rows);
        let again = rows_to_csv(&run_sweep(cfg)?.rows);
        ensure!(first == again, "rerun differs for {}", cfg.truth.label());
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            let pooled = rows_to_csv(&pool.install(|| run_sweep(cfg))?.rows);
            ensure!(first == pooled, "{threads}-thread run differs for {}", cfg.truth.label());
        }
        bytes += first.len();
    }
    Ok(format!("{} configs byte-identical across reruns and 1/4 threads ({bytes} bytes)", cfgs.len()))
}
