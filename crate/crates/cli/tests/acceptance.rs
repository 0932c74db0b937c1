//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Criteria run sequentially so each runtime budget is measured without
//! interference from the others.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hisd_cli::battery::{self, dimer_ratios, DIMER_RATIO_RANGE};
use hisd_cli::experiments::{self, FigureReport, COMPARISON_TOL};
use hisd_cli::runner::{self, RunOutcome};
use hisd_core::landscape::{make_benchmark, EnergyLandscape, DEGENERACY_TOL};
use hisd_core::linalg::sym_eig;
use hisd_core::theory::spectrum_stats;

/// Tail fraction of the log-distance fit.
const FIT_TAIL: f64 = 0.5;
const MIN_R2: f64 = 0.99;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let v = f();
    let elapsed = start.elapsed();
    let within = budget.is_none_or(|b| elapsed < b);
    let limit = budget.map_or_else(String::new, |b| format!(" (budget {:.0} s)", b.as_secs_f64()));
    verdict(
        v.passed && within,
        format!("{}; runtime {:.2} s{limit}", v.detail, elapsed.as_secs_f64()),
    )
}

fn criterion_table() -> Verdict {
    match experiments::table1() {
        Ok(rows) => {
            let parts: Vec<String> = rows
                .iter()
                .map(|r| format!("κ = {:.4} vs {:.2}", r.kappa, r.expected))
                .collect();
            verdict(rows.iter().all(|r| r.passed()), parts.join(", "))
        }
        Err(e) => verdict(false, e.message),
    }
}

fn criterion_inertia() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (spec, expected) in battery::benchmark_saddles() {
        let b = make_benchmark(spec).expect("valid benchmark");
        let xs = b.stationary_point().expect("known saddle");
        let sp = sym_eig(&b.hessian(&xs)).expect("symmetric Hessian");
        let index = sp.negative_count();
        let gap = sp.closest_to_zero().abs();
        ok &= index == expected && gap >= DEGENERACY_TOL;
        parts.push(format!("{} index {index} (want {expected}), min |λ| {gap:.3e}", b.name()));
    }
    verdict(ok, parts.join(", "))
}

fn criterion_stationarity() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (spec, _) in battery::benchmark_saddles() {
        let b = make_benchmark(spec).expect("valid benchmark");
        let xs = b.stationary_point().expect("known saddle");
        let g = b.gradient(&xs).norm();
        ok &= g <= 1e-10;
        parts.push(format!("{} ‖∇E(x*)‖ = {g:.3e}", b.name()));
    }
    verdict(ok, parts.join(", "))
}

fn iterations(report: &FigureReport, name: &str) -> Option<usize> {
    report.curve(name).and_then(|c| c.iterations_to(COMPARISON_TOL))
}

fn fmt_its(v: Option<usize>) -> String {
    v.map_or_else(|| "never".to_string(), |n| n.to_string())
}

fn criterion_example1(report: &FigureReport) -> Verdict {
    let its: Vec<Option<usize>> = (1..=3).map(|c| iterations(report, &format!("powell_case{c}"))).collect();
    let rates: Vec<Option<f64>> = (1..=3)
        .map(|c| report.curve(&format!("powell_case{c}")).and_then(|o| o.fit.map(|f| f.0)))
        .collect();
    let its_ok = matches!((its[0], its[1], its[2]), (Some(a), Some(b), Some(c)) if a < b && b < c);
    let rates_ok = matches!((rates[0], rates[1], rates[2]), (Some(a), Some(b), Some(c)) if a < b && b < c);
    verdict(
        its_ok && rates_ok,
        format!(
            "iterations to 1e-6: {} < {} < {}; rates {:?}",
            fmt_its(its[0]),
            fmt_its(its[1]),
            fmt_its(its[2]),
            rates.iter().map(|r| r.map(|v| (v * 1e6).round() / 1e6)).collect::<Vec<_>>()
        ),
    )
}

fn criterion_example2(report: &FigureReport) -> Verdict {
    let s1 = iterations(report, "biggs_sirqit1");
    let s5 = iterations(report, "biggs_sirqit5");
    let l1 = iterations(report, "biggs_lobpcg1");
    let l5 = iterations(report, "biggs_lobpcg5");
    let ok = matches!((s1, s5, l1, l5), (Some(s1), Some(s5), Some(l1), Some(l5)) if s1 > s5 && s5 >= l1 && s1 > l5);
    verdict(
        ok,
        format!(
            "SIRQIT(1) {} > SIRQIT(5) {} >= LOBPCG(1) {}, SIRQIT(1) > LOBPCG(5) {}",
            fmt_its(s1),
            fmt_its(s5),
            fmt_its(l1),
            fmt_its(l5)
        ),
    )
}

fn criterion_quadratic(outcome: &Result<RunOutcome, String>) -> Verdict {
    let o = match outcome {
        Ok(o) => o,
        Err(e) => return verdict(false, e.clone()),
    };
    let d = o.trace.distances();
    let r0 = d[0].1;
    let mut worst = 0.0f64;
    for &(n, r) in d.iter().take(31) {
        let want = r0 * 3f64.powi(-(n as i32));
        worst = worst.max((r - want).abs() / want);
    }
    let steps = d.len().saturating_sub(1);
    let cfg = experiments::shipped("quadratic").expect("shipped config");
    let spec = cfg.benchmark_spec().expect("valid spec");
    let b = make_benchmark(spec).expect("valid benchmark");
    let stats = spectrum_stats(&b.hessian(&[0.0, 0.0])).expect("non-degenerate");
    let bound = (stats.l - stats.mu) / (stats.l + stats.mu);
    let rate = o.fit.map(|f| f.0);
    let ok = steps >= 30
        && worst <= 1e-12
        && rate.is_some_and(|r| (r - 1.0 / 3.0).abs() <= 1e-6)
        && bound == 1.0 / 3.0;
    verdict(
        ok,
        format!(
            "{steps} steps, worst relative error {worst:.3e}, empirical rate {:?}, (L−μ)/(L+μ) = {bound}",
            rate
        ),
    )
}

fn criterion_lemmas() -> Verdict {
    let checks: Vec<&str> = battery::CHECKS
        .iter()
        .copied()
        .filter(|c| c.starts_with("theory.") && *c != "theory.consistency")
        .collect();
    let report = battery::run_battery(0, 500, &checks, None);
    let detail = report
        .results
        .iter()
        .map(|r| format!("{} {}", r.name, if r.passed { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join(", ");
    if report.passed() {
        verdict(true, format!("500 trials each: {detail}"))
    } else {
        verdict(false, format!("{detail}\n{}", report.text()))
    }
}

fn criterion_consistency() -> Verdict {
    let report = battery::run_battery(0, 1, &["theory.consistency"], None);
    let r = &report.results[0];
    verdict(r.passed, r.detail.clone())
}

fn criterion_dimer() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    match dimer_ratios(&mut rng) {
        Ok(ratios) => {
            let (lo, hi) = DIMER_RATIO_RANGE;
            let ok = ratios.len() == 10 && ratios.iter().all(|(_, r)| (lo..=hi).contains(r));
            let list: Vec<String> = ratios.iter().map(|(n, r)| format!("{n} {r:.4}")).collect();
            verdict(ok, list.join(", "))
        }
        Err(e) => verdict(false, e),
    }
}

fn criterion_fit_quality(runs: &[&RunOutcome]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for o in runs {
        if !o.converged() {
            parts.push(format!("{} not converged (skipped)", o.name));
            continue;
        }
        match hisd_core::empirical_rate(&o.trace, FIT_TAIL) {
            Ok((_, r2)) => {
                ok &= r2 >= MIN_R2;
                parts.push(format!("{} R² = {r2:.5}", o.name));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", o.name));
            }
        }
    }
    verdict(ok, parts.join(", "))
}

fn report_line(number: usize, name: &str, v: &Verdict) {
    println!(
        "{} criterion {number} ({name}): {}",
        if v.passed { "PASS" } else { "FAIL" },
        v.detail
    );
}

fn main() -> ExitCode {
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let secs = |s: u64| Some(Duration::from_secs(s));

    verdicts.push((1, "condition-number table", timed(secs(1), criterion_table)));
    verdicts.push((2, "Morse indices", timed(secs(30), criterion_inertia)));
    verdicts.push((3, "stationarity", timed(None, criterion_stationarity)));

    let mut fig1 = None;
    let v4 = timed(secs(10), || match experiments::run_figure(1, None) {
        Ok(r) => {
            let v = criterion_example1(&r);
            fig1 = Some(r);
            v
        }
        Err(e) => verdict(false, e.message),
    });
    verdicts.push((4, "Powell ordering", v4));

    let mut fig2 = None;
    let v5 = timed(secs(60), || match experiments::run_figure(2, None) {
        Ok(r) => {
            let v = criterion_example2(&r);
            fig2 = Some(r);
            v
        }
        Err(e) => verdict(false, e.message),
    });
    verdicts.push((5, "Biggs ordering", v5));

    let quadratic = experiments::shipped("quadratic")
        .and_then(|c| runner::execute(&c, "quadratic", c.seed))
        .map_err(|e| e.message);
    verdicts.push((6, "quadratic tightness", timed(None, || criterion_quadratic(&quadratic))));
    verdicts.push((7, "bound battery", timed(secs(60), criterion_lemmas)));
    verdicts.push((8, "consistency at α = 0", timed(None, criterion_consistency)));
    verdicts.push((9, "dimer order", timed(None, criterion_dimer)));

    let fig3 = experiments::run_figure(3, None);
    let v10 = {
        let mut runs: Vec<&RunOutcome> = Vec::new();
        for r in [fig1.as_ref(), fig2.as_ref()].into_iter().flatten() {
            runs.extend(r.curves.iter());
        }
        if let Ok(r) = &fig3 {
            runs.extend(r.curves.iter());
        }
        if let Ok(q) = &quadratic {
            runs.push(q);
        }
        let mut v = criterion_fit_quality(&runs);
        if fig1.is_none() || fig2.is_none() || fig3.is_err() || quadratic.is_err() {
            v.passed = false;
            v.detail.push_str("; some experiments failed to run");
        }
        v
    };
    verdicts.push((10, "log-linear fit quality", v10));

    for (n, name, v) in &verdicts {
        report_line(*n, name, v);
    }
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.2.passed).map(|v| v.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", verdicts.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
