//! Randomized checks of the matrix inequalities behind the rate theorems.
//!
//! Each suite builds the objects of one inequality from seeded random
//! admissible inputs and compares the two sides. Trials are independent:
//! trial `t` of suite `s` draws from its own ChaCha stream, so results do
//! not depend on thread scheduling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{contraction_bound_seq, indexk_q_bound, is_admissible, Regime};
use crate::linalg::{mgs_orth, operator_norm, DenseMatrix, OrthoFrame};

/// Absolute slack granted to every inequality.
pub const LEMMA_SLACK: f64 = 1e-10;

const MAX_DIM: usize = 30;
const SEQUENCE_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LemmaSuite {
    /// Contraction sequence bound vs. a brute-force recursion.
    Contraction,
    /// `‖I − βΣzᵢuᵢuᵢᵀ‖ ≤ max(|1−βL|, |1−βμ|)`.
    QNorm,
    /// `‖W₁W₁ᵀ − Z₁Z₁ᵀ‖ = ‖W₁ᵀZ₂‖ = ‖Z₁ᵀW₂‖`.
    ProjectorIdentity,
    /// `‖D‖ ≤ L‖C₋₁‖² + 2L|c₁|‖C₋₁‖`.
    DBound,
    /// `(1−α)I ⪯ C_kC_kᵀ ⪯ I` and `‖C₋ₖ‖ ≤ α`.
    BlockBounds,
    /// Assembled `‖Q‖` of an approximate index-`k` step vs. its closed-form bound.
    AssembledQ,
}

impl LemmaSuite {
    pub const ALL: [LemmaSuite; 6] = [
        LemmaSuite::Contraction,
        LemmaSuite::QNorm,
        LemmaSuite::ProjectorIdentity,
        LemmaSuite::DBound,
        LemmaSuite::BlockBounds,
        LemmaSuite::AssembledQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaSuite::Contraction => "contraction-sequence",
            LemmaSuite::QNorm => "q-norm",
            LemmaSuite::ProjectorIdentity => "projector-identity",
            LemmaSuite::DBound => "d-bound",
            LemmaSuite::BlockBounds => "block-bounds",
            LemmaSuite::AssembledQ => "assembled-q",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    fn stream(self) -> u64 {
        Self::ALL.iter().position(|s| *s == self).expect("listed") as u64
    }
}

impl std::fmt::Display for LemmaSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One trial: `margin = bound − value`; negative beyond the slack is a violation.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub dim: usize,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
    /// Serialized inputs, filled only on violation.
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: LemmaSuite,
    pub outcomes: Vec<TrialOutcome>,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed).count()
    }

    pub fn worst_margin(&self) -> f64 {
        self.outcomes.iter().map(|o| o.margin).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<SuiteReport>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.violations() == 0)
    }

    pub fn failing(&self) -> Vec<LemmaSuite> {
        self.suites.iter().filter(|s| s.violations() > 0).map(|s| s.suite).collect()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let status = if s.violations() == 0 { "PASS" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{status} {} trials={} violations={} worst_margin={:.3e}",
                s.suite,
                s.outcomes.len(),
                s.violations(),
                s.worst_margin()
            );
            for o in s.outcomes.iter().filter(|o| !o.passed).take(3) {
                let _ = writeln!(out, "  counterexample: {}", o.counterexample.as_deref().unwrap_or(""));
            }
        }
        out
    }

    /// `suite,trial,dim,value,bound,margin,passed`
    pub fn margins_csv(&self) -> String {
        let mut out = String::from("suite,trial,dim,value,bound,margin,passed\n");
        for s in &self.suites {
            for o in &s.outcomes {
                let _ = writeln!(
                    out,
                    "{},{},{},{:e},{:e},{:e},{}",
                    s.suite, o.trial, o.dim, o.value, o.bound, o.margin, o.passed
                );
            }
        }
        out
    }
}

/// Runs `trials` random trials of each suite in `suites` (all when empty).
///
/// `fault` negates the bound of the named suite; the harness must then
/// report that suite as failing.
pub fn lemma_bound_suite(
    seed: u64,
    trials: usize,
    suites: &[LemmaSuite],
    fault: Option<LemmaSuite>,
) -> LemmaReport {
    let selected: Vec<LemmaSuite> = if suites.is_empty() {
        LemmaSuite::ALL.to_vec()
    } else {
        suites.to_vec()
    };
    let reports = selected
        .iter()
        .map(|&suite| {
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(suite.stream() * (1 << 32) + t as u64);
                    let mut o = run_trial(suite, &mut rng, fault == Some(suite));
                    o.trial = t;
                    if let Some(c) = o.counterexample.as_mut() {
                        *c = format!("{suite} seed={seed} trial={t} {c}");
                    }
                    o
                })
                .collect();
            SuiteReport { suite, outcomes }
        })
        .collect();
    LemmaReport {
        seed,
        trials,
        suites: reports,
    }
}

fn outcome(dim: usize, value: f64, bound: f64, context: impl FnOnce() -> String) -> TrialOutcome {
    let margin = bound - value;
    let passed = margin >= -LEMMA_SLACK && value.is_finite() && bound.is_finite();
    TrialOutcome {
        trial: 0,
        dim,
        value,
        bound,
        margin,
        passed,
        counterexample: (!passed).then(|| format!("d={dim} value={value:e} bound={bound:e} {}", context())),
    }
}

fn run_trial(suite: LemmaSuite, rng: &mut ChaCha8Rng, fault: bool) -> TrialOutcome {
    let sign = if fault { -1.0 } else { 1.0 };
    match suite {
        LemmaSuite::Contraction => contraction_trial(rng, sign),
        LemmaSuite::QNorm => q_norm_trial(rng, sign),
        LemmaSuite::ProjectorIdentity => projector_identity_trial(rng, sign),
        LemmaSuite::DBound => d_bound_trial(rng, sign),
        LemmaSuite::BlockBounds => block_trial(rng, sign),
        LemmaSuite::AssembledQ => assembled_q_trial(rng, sign),
    }
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> OrthoFrame<f64> {
    loop {
        let g = DenseMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        if let Ok(q) = mgs_orth(&g) {
            return q;
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = crate::linalg::norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn curvature(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let mu = rng.gen_range(0.1..2.0);
    let kappa = rng.gen_range(1.0..10.0);
    (mu, mu * kappa)
}

/// `rₙ₊₁ = rₙ(1 − q + c rₙ)·ρₙ` with `ρₙ ∈ [0.5, 1]`; tracks the largest
/// excess over the bound sequence and checks strict decrease.
fn contraction_trial(rng: &mut ChaCha8Rng, sign: f64) -> TrialOutcome {
    let q: f64 = rng.gen_range(0.01..1.0);
    let c: f64 = rng.gen_range(0.01..10.0);
    let r0 = rng.gen_range(0.0..0.999) * q / c;
    let slack_factor: f64 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.5..1.0) };
    let bounds = contraction_bound_seq(q, c, r0, SEQUENCE_STEPS).expect("admissible by construction");
    let mut r = r0;
    let mut worst = f64::INFINITY;
    let mut worst_pair = (0.0, 0.0);
    for b in bounds {
        let next = r * (1.0 - q + c * r) * slack_factor;
        let b = sign * b;
        // monotonicity folded in: rₙ₊₁ must also not exceed rₙ
        let cap = b.min(if r > 0.0 { r } else { b });
        if cap - next < worst {
            worst = cap - next;
            worst_pair = (next, cap);
        }
        r = next;
    }
    outcome(1, worst_pair.0, worst_pair.1, || {
        format!("q={q:e} c={c:e} r0={r0:e} rho={slack_factor:e}")
    })
}

fn q_norm_trial(rng: &mut ChaCha8Rng, sign: f64) -> TrialOutcome {
    let d = rng.gen_range(1..=MAX_DIM);
    let (mu, l) = curvature(rng);
    let beta = if rng.gen_bool(0.5) {
        2.0 / (l + mu)
    } else {
        rng.gen_range(0.01..3.0) / l
    };
    let u = random_orthogonal(rng, d);
    let z: Vec<f64> = (0..d)
        .map(|i| match i {
            0 => mu,
            1 => l,
            _ => rng.gen_range(mu..=l),
        })
        .collect();
    let mut q = DenseMatrix::identity(d);
    for (i, zi) in z.iter().enumerate() {
        let ui = u.column(i);
        q.add_outer(-beta * zi, &ui, &ui);
    }
    let value = operator_norm(&q.symmetrized()).expect("finite");
    let bound = sign * (1.0 - beta * l).abs().max((1.0 - beta * mu).abs());
    outcome(d, value, bound, || format!("mu={mu:e} L={l:e} beta={beta:e} z={z:?}"))
}

fn projector_identity_trial(rng: &mut ChaCha8Rng, sign: f64) -> TrialOutcome {
    let d = rng.gen_range(2..=MAX_DIM);
    let k = rng.gen_range(1..d);
    let w = random_orthogonal(rng, d);
    let z = if rng.gen_bool(0.3) {
        let eps = rng.gen_range(0.0..0.2);
        near_frame(rng, &w, eps)
    } else {
        random_orthogonal(rng, d)
    };
    let (w1, w2) = (w.leading(k), w.trailing(k));
    let (z1, z2) = (z.leading(k), z.trailing(k));
    let direct = operator_norm(&w1.projector().sub(&z1.projector()).expect("shape")).expect("finite");
    let cross_a = operator_norm(&w1.as_matrix().transpose().matmul(z2.as_matrix()).expect("shape")).expect("finite");
    let cross_b = operator_norm(&z1.as_matrix().transpose().matmul(w2.as_matrix()).expect("shape")).expect("finite");
    let spread = (direct - cross_a).abs().max((direct - cross_b).abs()).max((cross_a - cross_b).abs());
    // fault: demand a negative spread
    outcome(d, spread, (sign - 1.0) / 2.0, || {
        format!("k={k} direct={direct:e} w1tz2={cross_a:e} z1tw2={cross_b:e}")
    })
}

/// An orthogonal matrix close to `w`: `w` times a random rotation of size `eps`.
fn near_frame(rng: &mut ChaCha8Rng, w: &OrthoFrame<f64>, eps: f64) -> OrthoFrame<f64> {
    let d = w.dim();
    let g = DenseMatrix::from_fn(d, d, |i, j| {
        let e: f64 = rng.sample(StandardNormal);
        let diag = if i == j { 1.0 } else { 0.0 };
        diag + eps * e
    });
    let r = mgs_orth(&g).unwrap_or_else(|_| OrthoFrame::coordinate(d, d));
    w.rotated(r.as_matrix()).expect("square")
}

fn d_bound_trial(rng: &mut ChaCha8Rng, sign: f64) -> TrialOutcome {
    let d = rng.gen_range(1..=MAX_DIM);
    let l: f64 = rng.gen_range(0.1..20.0);
    let v = random_orthogonal(rng, d);
    let c = if rng.gen_bool(0.1) {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        e
    } else if rng.gen_bool(0.5) {
        // mostly aligned with v₁, the regime of interest
        let mut c = random_unit(rng, d);
        let tilt = rng.gen_range(0.0..0.3);
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = if i == 0 { 1.0 } else { tilt * *ci };
        }
        let n = crate::linalg::norm(&c);
        c.into_iter().map(|x| x / n).collect()
    } else {
        random_unit(rng, d)
    };
    let lambda: Vec<f64> = (0..d).map(|_| rng.gen_range(-l..=l)).collect();
    let mut dmat = DenseMatrix::zeros(d, d);
    for i in 0..d {
        let vi = v.column(i);
        for j in 0..d {
            if i == 0 && j == 0 {
                continue;
            }
            dmat.add_outer(lambda[j] * c[i] * c[j], &vi, &v.column(j));
        }
    }
    let value = operator_norm(&dmat).expect("finite");
    let tail = c[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    let bound = sign * (l * tail * tail + 2.0 * l * c[0].abs() * tail);
    outcome(d, value, bound, || format!("L={l:e} c={c:?} lambda={lambda:?}"))
}

/// Frame at prescribed principal angles `θᵢ` from the first `k` columns of `v`:
/// `V̂ = (V_k cos Θ + V'_k sin Θ) R` with a random `k × k` rotation `R`.
fn frame_at_angles(rng: &mut ChaCha8Rng, v: &OrthoFrame<f64>, k: usize, angles: &[f64]) -> OrthoFrame<f64> {
    let d = v.dim();
    let mut cols = Vec::with_capacity(k);
    for (i, theta) in angles.iter().enumerate() {
        let a = v.column(i);
        let b = v.column(k + i);
        cols.push((0..d).map(|r| theta.cos() * a[r] + theta.sin() * b[r]).collect::<Vec<_>>());
    }
    let base = OrthoFrame::from_orthonormal(DenseMatrix::from_columns(&cols)).expect("orthonormal by construction");
    base.rotated(random_orthogonal(rng, k).as_matrix()).expect("k × k rotation")
}

fn block_setup(rng: &mut ChaCha8Rng) -> (usize, usize, OrthoFrame<f64>, OrthoFrame<f64>, f64) {
    let d = rng.gen_range(2..=MAX_DIM);
    let k = rng.gen_range(1..=d / 2);
    let v = random_orthogonal(rng, d);
    let max_angle = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2 * 0.999);
    let angles: Vec<f64> = (0..k)
        .map(|i| if i == 0 { max_angle } else { rng.gen_range(0.0..=max_angle) })
        .collect();
    let alpha = max_angle.sin();
    let vhat = frame_at_angles(rng, &v, k, &angles);
    (d, k, v, vhat, alpha)
}

fn block_trial(rng: &mut ChaCha8Rng, sign: f64) -> TrialOutcome {
    let (d, k, v, vhat, alpha) = block_setup(rng);
    let ck = v.leading(k).as_matrix().transpose().matmul(vhat.as_matrix()).expect("shape");
    let cmk = v.trailing(k).as_matrix().transpose().matmul(vhat.as_matrix()).expect("shape");
    let eig = crate::linalg::sym_eig(&ck.matmul(&ck.transpose()).expect("shape").symmetrized()).expect("finite");
    let lo = eig.values[0];
    let hi = *eig.values.last().expect("k ≥ 1");
    let tail = operator_norm(&cmk).expect("finite");
    // three inequalities folded into the tightest margin
    let margins = [lo - (1.0 - alpha), 1.0 - hi, alpha - tail];
    let (idx, _) = margins
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        .expect("nonempty");
    let (value, bound) = match idx {
        0 => (1.0 - alpha, lo),
        1 => (hi, 1.0),
        _ => (tail, alpha),
    };
    outcome(d, value, sign * bound, || {
        format!("k={k} alpha={alpha:e} min_eig={lo:e} max_eig={hi:e} tail={tail:e}")
    })
}

fn assembled_q_trial(rng: &mut ChaCha8Rng, sign: f64) -> TrialOutcome {
    let d = rng.gen_range(2..=MAX_DIM);
    let k = rng.gen_range(1..=d / 2);
    let (mu, l) = curvature(rng);
    let kappa = l / mu;
    let sup = super::sup_admissible_alpha(Regime::IndexKApprox, kappa);
    let alpha = rng.gen_range(0.0..sup);
    debug_assert!(is_admissible(Regime::IndexKApprox, kappa, alpha));
    let v = random_orthogonal(rng, d);
    let lambda: Vec<f64> = (0..d)
        .map(|i| {
            let mag = match i {
                0 => l,
                _ if i == d - 1 => mu,
                _ => rng.gen_range(mu..=l),
            };
            if i < k {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let mut h = DenseMatrix::zeros(d, d);
    for (i, li) in lambda.iter().enumerate() {
        let vi = v.column(i);
        h.add_outer(*li, &vi, &vi);
    }
    let max_angle = alpha.asin();
    let angles: Vec<f64> = (0..k)
        .map(|i| if i == 0 { max_angle } else { rng.gen_range(0.0..=max_angle) })
        .collect();
    let vhat = frame_at_angles(rng, &v, k, &angles);
    let beta = 2.0 / (l * (1.0 - alpha * alpha) + mu * (1.0 - alpha));
    let mut a = DenseMatrix::identity(d);
    for i in 0..k {
        let c = vhat.column(i);
        a.add_outer(-2.0, &c, &c);
    }
    let q = DenseMatrix::identity(d).sub(&a.matmul(&h).expect("shape").scaled(beta)).expect("shape");
    let value = operator_norm(&q).expect("finite");
    let bound = sign * indexk_q_bound(kappa, alpha);
    outcome(d, value, bound, || {
        format!("k={k} mu={mu:e} L={l:e} alpha={alpha:e} lambda={lambda:?}")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_batch() {
        let report = lemma_bound_suite(7, 60, &[], None);
        assert!(report.passed(), "{}", report.summary());
        assert_eq!(report.suites.len(), 6);
    }

    #[test]
    fn fault_injection_is_detected() {
        let report = lemma_bound_suite(7, 20, &[LemmaSuite::DBound], Some(LemmaSuite::DBound));
        assert_eq!(report.failing(), vec![LemmaSuite::DBound]);
        assert!(report.summary().contains("counterexample: d-bound seed=7"));
    }

    #[test]
    fn only_filter_runs_one_suite() {
        let report = lemma_bound_suite(1, 5, &[LemmaSuite::ProjectorIdentity], None);
        assert_eq!(report.suites.len(), 1);
        assert_eq!(report.suites[0].suite.name(), "projector-identity");
        assert_eq!(LemmaSuite::from_name("projector-identity"), Some(LemmaSuite::ProjectorIdentity));
        assert_eq!(LemmaSuite::from_name("nope"), None);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = lemma_bound_suite(11, 10, &[LemmaSuite::AssembledQ], None);
        let b = lemma_bound_suite(11, 10, &[LemmaSuite::AssembledQ], None);
        assert_eq!(a.margins_csv(), b.margins_csv());
    }

    #[test]
    fn q_norm_tight_at_optimal_step() {
        // β = 2/(L+μ) gives the bound (L−μ)/(L+μ), attained at z ∈ {μ, L}
        let (mu, l) = (1.0f64, 4.0f64);
        let beta = 2.0 / (l + mu);
        let q = DenseMatrix::diagonal(&[1.0 - beta * mu, 1.0 - beta * l]);
        assert!((operator_norm(&q).unwrap() - (l - mu) / (l + mu)).abs() < 1e-15);
    }

    #[test]
    fn d_vanishes_for_aligned_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = random_orthogonal(&mut rng, 4);
        let mut dmat = DenseMatrix::zeros(4, 4);
        let c = [1.0, 0.0, 0.0, 0.0];
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) != (0, 0) {
                    dmat.add_outer(3.0 * c[i] * c[j], &v.column(i), &v.column(j));
                }
            }
        }
        assert_eq!(operator_norm(&dmat).unwrap(), 0.0);
    }
}
