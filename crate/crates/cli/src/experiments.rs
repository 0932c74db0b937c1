//! The condition-number table and the three figure experiments.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use hisd_core::landscape::{make_benchmark, BenchmarkSpec, EnergyLandscape};
use hisd_core::theory::spectrum_stats;

use crate::config::{self, ExperimentConfig};
use crate::runner::{self, Prepared, RunOutcome};
use crate::CliError;

/// Shipped experiment configs, embedded so the binary is self-contained.
pub const SHIPPED: &[(&str, &str)] = &[
    ("quadratic", include_str!("../configs/quadratic.toml")),
    ("powell_case1", include_str!("../configs/powell_case1.toml")),
    ("powell_case2", include_str!("../configs/powell_case2.toml")),
    ("powell_case3", include_str!("../configs/powell_case3.toml")),
    ("biggs_sirqit1", include_str!("../configs/biggs_sirqit1.toml")),
    ("biggs_sirqit5", include_str!("../configs/biggs_sirqit5.toml")),
    ("biggs_lobpcg1", include_str!("../configs/biggs_lobpcg1.toml")),
    ("biggs_lobpcg5", include_str!("../configs/biggs_lobpcg5.toml")),
    ("rosenbrock_sirqit1", include_str!("../configs/rosenbrock_sirqit1.toml")),
    ("rosenbrock_sirqit5", include_str!("../configs/rosenbrock_sirqit5.toml")),
    ("rosenbrock_lobpcg1", include_str!("../configs/rosenbrock_lobpcg1.toml")),
    ("rosenbrock_lobpcg5", include_str!("../configs/rosenbrock_lobpcg5.toml")),
];

/// Distance tolerance at which figure curves are compared.
pub const COMPARISON_TOL: f64 = 1e-6;

/// Published condition numbers of the three Powell cases.
pub const TABLE1_KAPPA: [f64; 3] = [11.56, 26.35, 46.38];

/// Two printed decimals.
pub const TABLE1_TOL: f64 = 0.01;

pub fn shipped(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::config(format!("no shipped config named '{name}'")))?;
    Ok(config::parse(text, &format!("configs/{name}.toml"))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub case: usize,
    pub s: [f64; 4],
    pub kappa: f64,
    pub expected: f64,
    pub index: usize,
}

impl Table1Row {
    pub fn passed(&self) -> bool {
        (self.kappa - self.expected).abs() <= TABLE1_TOL
    }
}

/// Condition numbers of `∇²P₃(x*)` for the three Powell cases.
pub fn table1() -> Result<Vec<Table1Row>, CliError> {
    (1..=3)
        .map(|case| {
            let spec = BenchmarkSpec::<f64>::powell_case(case);
            let s = match &spec {
                BenchmarkSpec::Powell { s, .. } => [s[0], s[1], s[2], s[3]],
                _ => unreachable!(),
            };
            let landscape = make_benchmark(spec).map_err(|e| CliError::numerical(e.to_string()))?;
            let x_star = landscape.stationary_point().expect("Powell has a known stationary point");
            let stats = spectrum_stats(&landscape.hessian(&x_star)).map_err(|e| CliError::numerical(e.to_string()))?;
            Ok(Table1Row {
                case,
                s,
                kappa: stats.kappa,
                expected: TABLE1_KAPPA[case - 1],
                index: stats.index,
            })
        })
        .collect()
}

pub fn table1_text(rows: &[Table1Row]) -> String {
    let mut out = String::from("case s1 s2 s3 s4 kappa expected index status\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {:.4} {:.2} {} {}",
            r.case,
            r.s[0],
            r.s[1],
            r.s[2],
            r.s[3],
            r.kappa,
            r.expected,
            r.index,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    out
}

/// Curves of each figure, in plotting order.
pub fn figure_curves(which: u8) -> Result<&'static [&'static str], CliError> {
    match which {
        1 => Ok(&["powell_case1", "powell_case2", "powell_case3"]),
        2 => Ok(&["biggs_sirqit1", "biggs_sirqit5", "biggs_lobpcg1", "biggs_lobpcg5"]),
        3 => Ok(&[
            "rosenbrock_sirqit1",
            "rosenbrock_sirqit5",
            "rosenbrock_lobpcg1",
            "rosenbrock_lobpcg5",
        ]),
        _ => Err(CliError::config(format!("figures are 1, 2 and 3, got {which}"))),
    }
}

#[derive(Debug, Clone)]
pub struct FigureReport {
    pub figure: u8,
    pub curves: Vec<RunOutcome>,
    /// Named qualitative checks and whether they hold.
    pub checks: Vec<(String, bool)>,
    pub summary: String,
}

impl FigureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn curve(&self, name: &str) -> Option<&RunOutcome> {
        self.curves.iter().find(|c| c.name == name)
    }
}

/// Runs every curve of figure `which` concurrently. `seed` replaces the configured seeds.
pub fn run_figure(which: u8, seed: Option<u64>) -> Result<FigureReport, CliError> {
    let names = figure_curves(which)?;
    let configs: Vec<ExperimentConfig> = names
        .iter()
        .map(|n| {
            let mut c = shipped(n)?;
            if let Some(s) = seed {
                c.seed = s;
            }
            Ok(c)
        })
        .collect::<Result<_, CliError>>()?;
    // curves usually differ only in the eigensolver, so V₀ and the spectrum are shared
    let mut prepared: Vec<(usize, Prepared)> = Vec::new();
    let mut slot = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        match prepared
            .iter()
            .position(|(j, _)| Prepared::shareable(&configs[*j], configs[*j].seed, c, c.seed))
        {
            Some(p) => slot.push(p),
            None => {
                slot.push(prepared.len());
                prepared.push((i, Prepared::new(c, c.seed)?));
            }
        }
    }
    let curves: Vec<RunOutcome> = configs
        .par_iter()
        .zip(&slot)
        .map(|(c, &p)| runner::execute_prepared(c, c.name(), c.seed, &prepared[p].1))
        .collect::<Result<_, CliError>>()?;

    let its: Vec<Option<usize>> = curves.iter().map(|c| c.iterations_to(COMPARISON_TOL)).collect();
    let mut checks = Vec::new();
    for c in &curves {
        checks.push((format!("{} converged", c.name), c.converged()));
    }
    let lt = |a: Option<usize>, b: Option<usize>| matches!((a, b), (Some(a), Some(b)) if a < b);
    let le = |a: Option<usize>, b: Option<usize>| matches!((a, b), (Some(a), Some(b)) if a <= b);
    if which == 1 {
        checks.push((
            "iterations to 1e-6 increase with kappa".into(),
            lt(its[0], its[1]) && lt(its[1], its[2]),
        ));
        let rates: Vec<Option<f64>> = curves.iter().map(|c| c.fit.map(|f| f.0)).collect();
        let increasing = matches!(
            (rates[0], rates[1], rates[2]),
            (Some(a), Some(b), Some(c)) if a < b && b < c
        );
        checks.push(("empirical rates increase with kappa".into(), increasing));
    } else {
        let (s1, s5, l1, l5) = (its[0], its[1], its[2], its[3]);
        checks.push(("sirqit1 last".into(), lt(s5, s1) && lt(l1, s1) && lt(l5, s1)));
        if which == 2 {
            checks.push(("sirqit5 >= lobpcg1".into(), le(l1, s5)));
        }
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "figure = {which}");
    let _ = writeln!(summary, "comparison_tol = {COMPARISON_TOL:e}");
    for (c, it) in curves.iter().zip(&its) {
        let (rate, r2) = c.fit.map_or(("unavailable".to_string(), "unavailable".to_string()), |(a, b)| {
            (format!("{a:.12}"), format!("{b:.6}"))
        });
        let _ = writeln!(
            summary,
            "curve {} seed={} termination={} iterations={} iterations_to_tol={} empirical_rate={} r2={} last_increase={}",
            c.name,
            c.seed,
            c.trace.termination(),
            c.trace.iterations(),
            it.map_or_else(|| "none".to_string(), |n| n.to_string()),
            rate,
            r2,
            last_increase(c).map_or_else(|| "none".to_string(), |n| n.to_string()),
        );
    }
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let _ = writeln!(
                summary,
                "crossings {} {} = {}",
                curves[i].name,
                curves[j].name,
                crossings(&curves[i], &curves[j])
            );
        }
    }
    for (name, ok) in &checks {
        let _ = writeln!(summary, "check {} = {}", name.replace(' ', "_"), if *ok { "PASS" } else { "FAIL" });
    }
    Ok(FigureReport {
        figure: which,
        curves,
        checks,
        summary,
    })
}

/// Last `n` with `rₙ > rₙ₋₁`; `None` for a monotone curve.
pub fn last_increase(c: &RunOutcome) -> Option<usize> {
    let d = c.trace.distances();
    d.windows(2).filter(|w| w[1].1 > w[0].1).map(|w| w[1].0).next_back()
}

/// Number of sign changes of `r_a − r_b` over the common iteration range.
pub fn crossings(a: &RunOutcome, b: &RunOutcome) -> usize {
    let da = a.trace.distances();
    let db = b.trace.distances();
    let mut count = 0;
    let mut prev = 0.0f64;
    for ((_, ra), (_, rb)) in da.iter().zip(&db) {
        let diff = ra - rb;
        if diff != 0.0 {
            if prev != 0.0 && diff.signum() != prev.signum() {
                count += 1;
            }
            prev = diff;
        }
    }
    count
}

/// Writes per-curve artifacts and `figure<N>_summary.txt`.
pub fn write_figure(report: &FigureReport, outdir: &Path) -> Result<(), CliError> {
    for c in &report.curves {
        runner::write_artifacts(outdir, c)?;
    }
    let path = outdir.join(format!("figure{}_summary.txt", report.figure));
    std::fs::write(&path, &report.summary).map_err(|e| CliError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_shipped_config_parses() {
        for (name, _) in SHIPPED {
            let cfg = shipped(name).unwrap();
            assert_eq!(cfg.name(), *name);
        }
    }

    #[test]
    fn table1_matches_published_values() {
        let rows = table1().unwrap();
        assert!(rows.iter().all(Table1Row::passed), "{}", table1_text(&rows));
        assert_eq!(rows[0].index, 2);
    }

    #[test]
    fn unknown_figure_is_a_config_error() {
        assert_eq!(figure_curves(4).unwrap_err().code, crate::EXIT_CONFIG);
    }
}
