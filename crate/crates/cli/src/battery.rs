//! `hisd verify`: the property battery over every module.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use hisd_core::dynamics::{self, BetaPolicy, SaddleRunConfig};
use hisd_core::eigensolve::{eigensol, eigenframe_error, EigenSolverConfig, LobpcgState};
use hisd_core::landscape::{dimer_error_ratio, make_benchmark, BenchmarkSpec, EnergyLandscape, DEGENERACY_TOL};
use hisd_core::linalg::{mgs_orth, projector_distance_routes, sym_eig, DenseMatrix, OrthoFrame};
use hisd_core::theory::{lemma_bound_suite, LemmaSuite};
use hisd_core::theory::{rate_exact, rate_index1_approx, rate_indexk_approx};

/// Accepted interval for the dimer error ratio at `(l, l/2)`.
pub const DIMER_RATIO_RANGE: (f64, f64) = (3.5, 4.5);

/// Dimer half-length used by the order check.
pub const DIMER_CHECK_LENGTH: f64 = 1e-2;

/// Sampled points per benchmark in the dimer check.
pub const DIMER_POINTS: usize = 5;

pub const CONSISTENCY_SAMPLES: usize = 100;

/// Every check, in execution order.
pub const CHECKS: &[&str] = &[
    "linalg.sym_eig",
    "linalg.mgs",
    "linalg.projector_distance",
    "landscape.stationarity",
    "landscape.inertia",
    "landscape.dimer",
    "eigensolve.orthonormality",
    "eigensolve.convergence",
    "dynamics.quadratic",
    "theory.contraction-sequence",
    "theory.q-norm",
    "theory.projector-identity",
    "theory.d-bound",
    "theory.block-bounds",
    "theory.assembled-q",
    "theory.consistency",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub trials: usize,
    pub results: Vec<CheckResult>,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.results.iter().filter(|r| !r.passed).collect()
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let _ = writeln!(out, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        }
        out
    }

    /// `{"failures": [...]}` with the failing checks.
    pub fn failures_json(&self) -> String {
        #[derive(Serialize)]
        struct Failures<'a> {
            seed: u64,
            trials: usize,
            failures: Vec<&'a CheckResult>,
        }
        serde_json::to_string(&Failures {
            seed: self.seed,
            trials: self.trials,
            failures: self.failures(),
        })
        .expect("plain data serializes")
    }
}

/// Resolves `--only`: an exact check name or a prefix such as `theory` or `theory.d-bound`.
pub fn select(only: Option<&str>) -> Result<Vec<&'static str>, String> {
    match only {
        None => Ok(CHECKS.to_vec()),
        Some(name) => {
            let picked: Vec<&'static str> = CHECKS
                .iter()
                .copied()
                .filter(|c| *c == name || c.starts_with(&format!("{name}.")) || c.strip_prefix("theory.") == Some(name))
                .collect();
            if picked.is_empty() {
                Err(format!("unknown check '{name}'; known: {}", CHECKS.join(", ")))
            } else {
                Ok(picked)
            }
        }
    }
}

/// Runs the selected checks. `fault` negates the bound of one lemma suite.
pub fn run_battery(seed: u64, trials: usize, checks: &[&str], fault: Option<LemmaSuite>) -> BatteryReport {
    let results = checks
        .par_iter()
        .enumerate()
        .map(|(i, &name)| {
            let stream_seed = seed ^ ((i as u64 + 1) << 40);
            let outcome = run_check(name, seed, stream_seed, trials, fault);
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult {
                name: name.to_string(),
                passed,
                detail,
            }
        })
        .collect();
    BatteryReport { seed, trials, results }
}

type CheckOutcome = Result<String, String>;

fn run_check(name: &str, seed: u64, stream: u64, trials: usize, fault: Option<LemmaSuite>) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    match name {
        "linalg.sym_eig" => check_sym_eig(&mut rng, trials),
        "linalg.mgs" => check_mgs(&mut rng, trials),
        "linalg.projector_distance" => check_projector(&mut rng, trials),
        "landscape.stationarity" => check_stationarity(),
        "landscape.inertia" => check_inertia(),
        "landscape.dimer" => check_dimer(&mut rng),
        "eigensolve.orthonormality" => check_eigen_orthonormality(&mut rng, trials),
        "eigensolve.convergence" => check_eigen_convergence(),
        "dynamics.quadratic" => check_quadratic(),
        "theory.consistency" => check_consistency(&mut rng),
        other => {
            let suite = other
                .strip_prefix("theory.")
                .and_then(LemmaSuite::from_name)
                .ok_or_else(|| format!("unknown check {other}"))?;
            let report = lemma_bound_suite(seed, trials, &[suite], fault);
            let s = &report.suites[0];
            if report.passed() {
                Ok(format!("{} trials, worst margin {:e}", s.outcomes.len(), s.worst_margin()))
            } else {
                Err(report.summary().trim_end().to_string())
            }
        }
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DenseMatrix<f64> {
    let a = DenseMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    a.symmetrized()
}

fn random_frame(rng: &mut ChaCha8Rng, d: usize, k: usize) -> OrthoFrame<f64> {
    let m = DenseMatrix::from_fn(d, k, |_, _| rng.gen_range(-1.0..1.0));
    mgs_orth(&m).expect("random columns are independent")
}

fn check_sym_eig(rng: &mut ChaCha8Rng, trials: usize) -> CheckOutcome {
    let mut worst = 0.0f64;
    for t in 0..trials.min(200) {
        let d = rng.gen_range(1..=12);
        let a = random_symmetric(rng, d);
        let sp = sym_eig(&a).map_err(|e| format!("trial {t}: {e}"))?;
        let residual = sp.reconstruct().sub(&a).map_err(|e| e.to_string())?.max_abs();
        let defect = sp.vectors.orthonormality_defect();
        worst = worst.max(residual).max(defect);
        if residual > 1e-10 || defect > 1e-10 || sp.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(format!("trial {t}, d = {d}: residual {residual:e}, defect {defect:e}"));
        }
    }
    Ok(format!("worst residual {worst:e}"))
}

fn check_mgs(rng: &mut ChaCha8Rng, trials: usize) -> CheckOutcome {
    let mut worst = 0.0f64;
    for t in 0..trials {
        let d = rng.gen_range(2..=30);
        let k = rng.gen_range(1..=d);
        let f = random_frame(rng, d, k);
        let defect = f.orthonormality_defect();
        worst = worst.max(defect);
        if defect > 1e-12 {
            return Err(format!("trial {t}, {d}×{k}: defect {defect:e}"));
        }
    }
    Ok(format!("worst defect {worst:e}"))
}

/// Both routes of the projector distance must agree.
fn check_projector(rng: &mut ChaCha8Rng, trials: usize) -> CheckOutcome {
    let mut worst = 0.0f64;
    for t in 0..trials.min(200) {
        let d = rng.gen_range(2..=12);
        let k = rng.gen_range(1..d);
        let v = random_frame(rng, d, k);
        let w = random_frame(rng, d, k);
        let routes = projector_distance_routes(&v, &w).map_err(|e| e.to_string())?;
        let gap = (routes.direct - routes.via_complement).abs();
        worst = worst.max(gap);
        if gap > 1e-10 || routes.direct > 1.0 + 1e-12 {
            return Err(format!(
                "trial {t}: direct {:e}, via complement {:e}",
                routes.direct, routes.via_complement
            ));
        }
    }
    Ok(format!("worst route gap {worst:e}"))
}

/// The three benchmark saddles, with their claimed Morse indices.
pub fn benchmark_saddles() -> Vec<(BenchmarkSpec<f64>, usize)> {
    vec![
        (BenchmarkSpec::powell_case(1), 2),
        (BenchmarkSpec::biggs_standard(), 4),
        (BenchmarkSpec::rosenbrock(400, 20), 5),
    ]
}

fn check_stationarity() -> CheckOutcome {
    let mut parts = Vec::new();
    for (spec, _) in benchmark_saddles() {
        let b = make_benchmark(spec).map_err(|e| e.to_string())?;
        let xs = b.stationary_point().ok_or("benchmark without x*")?;
        let g = b.gradient(&xs).norm();
        if !(g <= 1e-10) {
            return Err(format!("{}: ‖∇E(x*)‖ = {g:e}", b.name()));
        }
        parts.push(format!("{} {g:e}", b.name()));
    }
    Ok(parts.join(", "))
}

fn check_inertia() -> CheckOutcome {
    let mut parts = Vec::new();
    for (spec, expected) in benchmark_saddles() {
        let b = make_benchmark(spec).map_err(|e| e.to_string())?;
        let xs = b.stationary_point().ok_or("benchmark without x*")?;
        let sp = sym_eig(&b.hessian(&xs)).map_err(|e| e.to_string())?;
        let gap = sp.closest_to_zero().abs();
        if sp.negative_count() != expected || gap < DEGENERACY_TOL {
            return Err(format!(
                "{}: index {} (expected {expected}), closest eigenvalue to zero {gap:e}",
                b.name(),
                sp.negative_count()
            ));
        }
        parts.push(format!("{} index {}", b.name(), expected));
    }
    Ok(parts.join(", "))
}

/// Dimer error ratios at `(l, l/2)` at random points near the Powell and Biggs saddles.
pub fn dimer_ratios(rng: &mut ChaCha8Rng) -> Result<Vec<(String, f64)>, String> {
    let mut out = Vec::new();
    for spec in [BenchmarkSpec::powell_case(1), BenchmarkSpec::biggs_standard()] {
        let b = make_benchmark(spec).map_err(|e| e.to_string())?;
        let xs = b.stationary_point().ok_or("benchmark without x*")?;
        for _ in 0..DIMER_POINTS {
            let x: Vec<f64> = xs.iter().map(|c| c + rng.gen_range(-0.5..0.5)).collect();
            let raw: Vec<f64> = (0..b.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            let v: Vec<f64> = raw.iter().map(|r| r / n).collect();
            let ratio = dimer_error_ratio(&b, &x, &v, DIMER_CHECK_LENGTH).map_err(|e| e.to_string())?;
            out.push((b.name().to_string(), ratio));
        }
    }
    Ok(out)
}

fn check_dimer(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let ratios = dimer_ratios(rng)?;
    let (lo, hi) = DIMER_RATIO_RANGE;
    if let Some((name, r)) = ratios.iter().find(|(_, r)| !(lo..=hi).contains(r)) {
        return Err(format!("{name}: ratio {r} outside [{lo}, {hi}]"));
    }
    let min = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(format!("{} ratios in [{min:.4}, {max:.4}]", ratios.len()))
}

fn quadratic(h: DenseMatrix<f64>) -> Result<hisd_core::Benchmark, String> {
    make_benchmark(BenchmarkSpec::Quadratic { matrix: h }).map_err(|e| e.to_string())
}

/// SIRQIT and LOBPCG steps keep the frame orthonormal.
fn check_eigen_orthonormality(rng: &mut ChaCha8Rng, trials: usize) -> CheckOutcome {
    let mut worst = 0.0f64;
    for t in 0..trials.min(100) {
        let d = rng.gen_range(3..=10);
        let k = rng.gen_range(1..d.min(4));
        let q = quadratic(random_symmetric(rng, d))?;
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let frame = random_frame(rng, d, k);
        for cfg in [
            EigenSolverConfig::sirqit(3).with_gamma(0.1),
            EigenSolverConfig::lobpcg(2),
        ] {
            let out = eigensol(&q, &x, &frame, LobpcgState::empty(), &cfg).map_err(|e| format!("trial {t}: {e}"))?;
            let defect = out.frame.orthonormality_defect();
            worst = worst.max(defect);
            if defect > 1e-10 {
                return Err(format!("trial {t}, {}: defect {defect:e}", cfg.method.as_str()));
            }
        }
    }
    Ok(format!("worst defect {worst:e}"))
}

/// Repeated eigensolver calls at a fixed point converge to the exact frame.
fn check_eigen_convergence() -> CheckOutcome {
    let h = DenseMatrix::diagonal(&[-3.0, -1.5, 0.5, 1.0, 2.0, 4.0]);
    let q = quadratic(h)?;
    let x = [0.1; 6];
    let start = mgs_orth(&DenseMatrix::from_fn(6, 2, |i, j| 1.0 / (1.0 + (i + 2 * j) as f64))).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (cfg, calls) in [
        (EigenSolverConfig::sirqit(10).with_gamma(0.1), 100),
        (EigenSolverConfig::lobpcg(1), 30),
    ] {
        let mut frame = start.clone();
        let mut state = LobpcgState::empty();
        for _ in 0..calls {
            let out = eigensol(&q, &x, &frame, state, &cfg).map_err(|e| e.to_string())?;
            frame = out.frame;
            state = out.state;
        }
        let err = eigenframe_error(&q, &x, &frame).map_err(|e| e.to_string())?;
        if err > 1e-8 {
            return Err(format!("{}: subspace error {err:e}", cfg.method.as_str()));
        }
        parts.push(format!("{} {err:e}", cfg.method.as_str()));
    }
    Ok(parts.join(", "))
}

/// On `½xᵀdiag(−1, 2)x` with `β = 2/(L+μ)` every step contracts by exactly 1/3.
fn check_quadratic() -> CheckOutcome {
    let q = quadratic(DenseMatrix::diagonal(&[-1.0, 2.0]))?;
    let mut cfg = SaddleRunConfig::new(1, BetaPolicy::TheoryExact, EigenSolverConfig::exact());
    cfg.max_iterations = 30;
    cfg.grad_tol = 0.0;
    let x0 = [1.0, 1.0];
    let v0 = OrthoFrame::coordinate(2, 1);
    let trace = dynamics::run(&q, &cfg, &x0, &v0, Some(&[0.0, 0.0])).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for r in trace.records.iter().filter_map(|r| r.contraction) {
        worst = worst.max((r - 1.0 / 3.0).abs() * 3.0);
    }
    if trace.records.len() != 31 || worst > 1e-12 {
        return Err(format!("{} records, worst relative ratio error {worst:e}", trace.records.len()));
    }
    Ok(format!("30 steps, worst relative ratio error {worst:e}"))
}

/// Rates of both approximate regimes at `α = 0` equal the exact rate.
fn check_consistency(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    for t in 0..CONSISTENCY_SAMPLES {
        let mu: f64 = rng.gen_range(0.01..10.0);
        let l = mu * rng.gen_range(1.0..100.0);
        let m: f64 = rng.gen_range(0.0..10.0);
        let exact = rate_exact(mu, l, m).map_err(|e| e.to_string())?.rate;
        let r1 = rate_index1_approx(mu, l, m, 0.0).map_err(|e| e.to_string())?.rate;
        let rk = rate_indexk_approx(mu, l, m, 0.0).map_err(|e| e.to_string())?.rate;
        let gap = (r1 - exact).abs().max((rk - exact).abs());
        worst = worst.max(gap);
        if gap > 1e-15 {
            return Err(format!("sample {t}: μ = {mu}, L = {l}, M = {m}: gap {gap:e}"));
        }
    }
    Ok(format!("{CONSISTENCY_SAMPLES} samples, worst gap {worst:e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_by_prefix_and_lemma_name() {
        assert_eq!(select(None).unwrap().len(), CHECKS.len());
        assert_eq!(select(Some("linalg")).unwrap().len(), 3);
        assert_eq!(select(Some("d-bound")).unwrap(), vec!["theory.d-bound"]);
        assert_eq!(select(Some("theory.consistency")).unwrap(), vec!["theory.consistency"]);
        assert!(select(Some("nope")).is_err());
    }

    #[test]
    fn fault_is_reported_in_json() {
        let report = run_battery(1, 20, &["theory.d-bound"], Some(LemmaSuite::DBound));
        assert!(!report.passed());
        let json: serde_json::Value = serde_json::from_str(&report.failures_json()).unwrap();
        assert_eq!(json["failures"][0]["name"], "theory.d-bound");
    }

    #[test]
    fn cheap_checks_pass() {
        let report = run_battery(0, 20, &select(Some("linalg")).unwrap(), None);
        assert!(report.passed(), "{}", report.text());
        let report = run_battery(0, 20, &["dynamics.quadratic", "theory.consistency", "landscape.dimer"], None);
        assert!(report.passed(), "{}", report.text());
    }
}
