//! Single configured runs: solve, summarize, write artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hisd_core::dynamics::{self, BetaPolicy, DynamicsError, Termination};
use hisd_core::eigensolve::exact_k_smallest;
use hisd_core::landscape::{make_benchmark, EnergyLandscape};
use hisd_core::theory::{self, Regime, SpectrumStats, TheoryError};
use hisd_core::{Frame, IterationTrace, RateBundle};

use crate::config::{spec_dim, ExperimentConfig};
use crate::CliError;

/// Largest dimension for which the Lipschitz estimate runs by default.
pub const M_ESTIMATE_MAX_DIM: usize = 30;

/// Default number of sampled pairs for the Lipschitz estimate.
pub const M_ESTIMATE_SAMPLES: usize = 50;

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub seed: u64,
    pub trace: IterationTrace,
    /// `(rate, R²)` of the tail fit, when enough records exist.
    pub fit: Option<(f64, f64)>,
    pub summary: String,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.trace.termination().converged()
    }

    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.trace.first_below(tol)
    }
}

fn dynamics_error(e: DynamicsError) -> CliError {
    match e {
        DynamicsError::InvalidConfig(_)
        | DynamicsError::Theory(TheoryError::Inadmissible { .. })
        | DynamicsError::Theory(TheoryError::InvalidConstants(_)) => CliError::config(e.to_string()),
        other => CliError::numerical(other.to_string()),
    }
}

/// The expensive run inputs that depend only on the landscape, `x₀`, `k`,
/// the initial-frame noise and the seed: `V₀` and the spectrum at the
/// reference point. Runs that agree on these can share one `Prepared`.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub v0: Frame,
    pub stats: Result<SpectrumStats<f64>, String>,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self, CliError> {
        let spec = cfg.benchmark_spec().map_err(CliError::config)?;
        let landscape = make_benchmark(spec).map_err(|e| CliError::config(e.to_string()))?;
        let x0 = &cfg.run.x0;
        let (exact, _) = exact_k_smallest(&landscape.hessian(x0), cfg.run.k)
            .map_err(|e| dynamics_error(DynamicsError::from(e)))?;
        let v0 = dynamics::perturb_frame(&exact, cfg.init.noise, seed).map_err(dynamics_error)?;
        let x_ref = landscape.stationary_point().map_or_else(|| x0.clone(), |v| v.into_inner());
        let stats = theory::spectrum_stats(&landscape.hessian(&x_ref)).map_err(|e| e.to_string());
        Ok(Self { v0, stats })
    }

    /// Whether a `Prepared` built for `a` with `seed_a` serves `b` with `seed_b`.
    pub fn shareable(a: &ExperimentConfig, seed_a: u64, b: &ExperimentConfig, seed_b: u64) -> bool {
        seed_a == seed_b
            && a.benchmark == b.benchmark
            && a.run.x0 == b.run.x0
            && a.run.k == b.run.k
            && a.init.noise == b.init.noise
    }
}

/// Runs `cfg` once with `seed` seeding the initial frame.
pub fn execute(cfg: &ExperimentConfig, name: &str, seed: u64) -> Result<RunOutcome, CliError> {
    execute_prepared(cfg, name, seed, &Prepared::new(cfg, seed)?)
}

pub fn execute_prepared(cfg: &ExperimentConfig, name: &str, seed: u64, prep: &Prepared) -> Result<RunOutcome, CliError> {
    let spec = cfg.benchmark_spec().map_err(CliError::config)?;
    let dim = spec_dim(&spec);
    let landscape = make_benchmark(spec).map_err(|e| CliError::config(e.to_string()))?;
    let run_cfg = cfg.run_config();
    let x0 = &cfg.run.x0;
    let x_star = landscape.stationary_point();
    let xs = x_star.as_ref().map(|v| v.as_slice());
    let v0 = &prep.v0;

    let trace = dynamics::run(&landscape, &run_cfg, x0, v0, xs).map_err(dynamics_error)?;
    let fit = dynamics::empirical_rate(&trace, cfg.run.tail_fraction).ok();

    let mut s = String::new();
    let _ = writeln!(s, "name = {name}");
    let _ = writeln!(s, "landscape = {}", landscape.name());
    let _ = writeln!(s, "dim = {dim}");
    let _ = writeln!(s, "v0_seed = {seed}");
    let _ = writeln!(s, "v0_noise = {:e}", cfg.init.noise);
    for (k, v) in &trace.metadata.settings {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "termination = {}", trace.termination());
    let _ = writeln!(s, "iterations = {}", trace.iterations());
    let _ = writeln!(s, "final_grad_norm = {:e}", trace.records.last().map_or(f64::NAN, |r| r.grad_norm));
    if let Some(r) = trace.records.last().and_then(|r| r.r_n) {
        let _ = writeln!(s, "final_r_n = {r:e}");
    }
    if let Some(tol) = cfg.run.r_tol {
        let _ = writeln!(s, "iterations_to_r_tol = {}", opt(trace.first_below(tol)));
    }
    match fit {
        Some((rate, r2)) => {
            let _ = writeln!(s, "empirical_rate = {rate:.12}");
            let _ = writeln!(s, "empirical_r2 = {r2:.12}");
        }
        None => {
            let _ = writeln!(s, "empirical_rate = unavailable");
        }
    }
    let _ = writeln!(s, "tail_fraction = {}", cfg.run.tail_fraction);
    if run_cfg.diagnostics {
        let worst = trace.records.iter().filter_map(|r| r.alpha_n).fold(0.0, f64::max);
        let _ = writeln!(s, "max_alpha_n = {worst:e}");
    }
    theory_lines(&mut s, cfg, &landscape, &trace, xs, seed, &prep.stats)?;

    Ok(RunOutcome {
        name: name.to_string(),
        seed,
        trace,
        fit,
        summary: s,
    })
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |n| n.to_string())
}

/// Spectrum at the reference point, the Lipschitz estimate and the rate bundle.
fn theory_lines<L: EnergyLandscape<f64>>(
    s: &mut String,
    cfg: &ExperimentConfig,
    landscape: &L,
    trace: &IterationTrace,
    x_star: Option<&[f64]>,
    seed: u64,
    stats: &Result<SpectrumStats<f64>, String>,
) -> Result<(), CliError> {
    let x_ref = x_star.unwrap_or(&cfg.run.x0);
    let _ = writeln!(s, "spectrum_point = {}", if x_star.is_some() { "x_star" } else { "x0" });
    let stats = match stats {
        Ok(st) => st,
        Err(e) => {
            let _ = writeln!(s, "spectrum = {e}");
            return Ok(());
        }
    };
    let _ = writeln!(s, "mu = {:.12}", stats.mu);
    let _ = writeln!(s, "L = {:.12}", stats.l);
    let _ = writeln!(s, "kappa = {:.6}", stats.kappa);
    let _ = writeln!(s, "morse_index = {}", stats.index);
    let beta = trace.records.first().map_or(f64::NAN, |r| r.beta);
    let factor = (1.0 - beta * stats.l).abs().max((1.0 - beta * stats.mu).abs());
    let _ = writeln!(s, "linear_factor_at_beta = {factor:.12}");

    let r0 = x_star.map(|xs| {
        xs.iter()
            .zip(&cfg.run.x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    });
    let samples = cfg.theory.m_samples.unwrap_or(if landscape.dim() <= M_ESTIMATE_MAX_DIM {
        M_ESTIMATE_SAMPLES
    } else {
        0
    });
    let radius = cfg.theory.m_radius.or(r0).filter(|r| *r > 0.0);
    let mut m = 0.0;
    match (samples, radius) {
        (n, Some(radius)) if n >= 2 => {
            m = theory::estimate_m(landscape, x_ref, radius, n, seed)
                .map_err(|e| CliError::config(e.to_string()))?;
            let _ = writeln!(s, "m_lower_bound = {m:.12}");
            let _ = writeln!(s, "m_radius = {radius:e}");
            let _ = writeln!(s, "m_samples = {n}");
            // the assumption's neighborhood radius is not computable; report whether the
            // trajectory stayed inside the ball the constants were sampled on
            if x_star.is_some() {
                let inside = trace.records.iter().all(|r| r.r_n.is_none_or(|v| v <= radius));
                let _ = writeln!(s, "trajectory_in_sampled_ball = {inside}");
            }
        }
        _ => {
            let _ = writeln!(s, "m_lower_bound = not estimated");
        }
    }

    let (regime, alpha) = match cfg.beta_policy().map_err(CliError::config)? {
        BetaPolicy::TheoryIndex1 { alpha } => (Regime::Index1Approx, alpha),
        BetaPolicy::TheoryIndexK { alpha } => (Regime::IndexKApprox, alpha),
        _ => (Regime::Exact, 0.0),
    };
    let bundle: RateBundle = theory::rate_bundle(regime, stats.mu, stats.l, m, alpha)
        .map_err(|e| CliError::config(e.to_string()))?;
    let _ = writeln!(s, "regime = {}", bundle.regime.as_str());
    let _ = writeln!(s, "alpha = {}", bundle.alpha);
    let _ = writeln!(s, "theory_beta = {:e}", bundle.beta);
    let _ = writeln!(s, "q = {:.12}", bundle.q);
    let _ = writeln!(s, "c = {:e}", bundle.c);
    let _ = writeln!(s, "eta = {:.12}", bundle.eta);
    let _ = writeln!(s, "predicted_rate = {:.12}", bundle.rate);
    let _ = writeln!(s, "r_hat = {:e}", bundle.r_hat);
    let _ = writeln!(s, "r_hat_note = optimistic (computed from a sampled lower bound on M)");
    if let Some(r0) = r0 {
        let _ = writeln!(s, "r0 = {r0:e}");
        let _ = writeln!(s, "r0_below_r_hat = {}", r0 < bundle.r_hat);
    }
    Ok(())
}

/// Artifact paths of one run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub plot: PathBuf,
    pub summary: PathBuf,
    pub meta: PathBuf,
}

impl Artifacts {
    pub fn new(outdir: &Path, name: &str) -> Self {
        Self {
            csv: outdir.join(format!("{name}.csv")),
            plot: outdir.join(format!("{name}.plot.dat")),
            summary: outdir.join(format!("{name}.summary.txt")),
            meta: outdir.join(format!("{name}.meta.txt")),
        }
    }
}

pub fn write_artifacts(outdir: &Path, outcome: &RunOutcome) -> Result<Artifacts, CliError> {
    std::fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    let a = Artifacts::new(outdir, &outcome.name);
    let write = |p: &Path, text: &str| std::fs::write(p, text).map_err(|e| CliError::io(p, e));
    write(&a.csv, &outcome.trace.to_csv())?;
    write(&a.plot, &outcome.trace.plot_data())?;
    write(&a.summary, &outcome.summary)?;
    write(&a.meta, &outcome.trace.metadata_text())?;
    Ok(a)
}

/// `hisd run`: executes every repeat, writes artifacts, and maps divergence to exit 3.
pub fn cmd_run(cfg: &ExperimentConfig, outdir: &Path) -> Result<Vec<RunOutcome>, CliError> {
    let mut outcomes = Vec::with_capacity(cfg.repeat);
    for rep in 0..cfg.repeat {
        let name = if cfg.repeat == 1 {
            cfg.name().to_string()
        } else {
            format!("{}_rep{rep}", cfg.name())
        };
        let outcome = execute(cfg, &name, cfg.seed.wrapping_add(rep as u64))?;
        let artifacts = write_artifacts(outdir, &outcome)?;
        if outcome.trace.termination() == Termination::Diverged {
            return Err(CliError::numerical(format!(
                "run '{name}' diverged after {} iterations; trace written to {}",
                outcome.trace.iterations(),
                artifacts.csv.display()
            )));
        }
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
