//! Closed-form convergence constants and bounds, admissibility of the
//! eigenvector accuracy `α`, and estimators for the local constants
//! `μ`, `L`, `κ`, `M` of a landscape.
//!
//! All rates are per-step contraction factors `1/(1 + q)`: with
//! `r₀ < r̂ = q/c` the distance obeys `rₙ ≤ rateⁿ · r̂r₀/(r̂ − r₀)`.

mod lemmas;

pub use lemmas::{
    lemma_bound_suite, LemmaReport, LemmaSuite, SuiteReport, TrialOutcome, LEMMA_SLACK,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::landscape::EnergyLandscape;
use crate::linalg::{operator_norm, sym_eig, DenseMatrix, DenseVector, LinalgError};
use crate::scalar::Real;

/// Eigenvalues closer to zero than this make a critical point degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Width of the final bracket when bisecting for the supremum admissible `α`.
pub const ALPHA_BISECTION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    Exact,
    Index1Approx,
    IndexKApprox,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Exact => "exact",
            Regime::Index1Approx => "index1-approx",
            Regime::IndexKApprox => "indexk-approx",
        }
    }

    /// The admissibility condition on `α`, in words.
    pub fn inequality(self) -> &'static str {
        match self {
            Regime::Exact => "α = 0",
            Regime::Index1Approx => "0 ≤ α < 1/2 and 1 − 2α > 2κ(α + 2√α)",
            Regime::IndexKApprox => "0 ≤ α < 1 and 1 − α > κα(α + 5)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error(
        "α = {alpha} violates {} at κ = {kappa}; supremum admissible α = {sup_alpha:.12}",
        regime.inequality()
    )]
    Inadmissible {
        regime: Regime,
        alpha: f64,
        kappa: f64,
        sup_alpha: f64,
    },
    #[error("r₀ = {r0} is not below q/c = {limit}")]
    OutsideBasin { r0: f64, limit: f64 },
    #[error("eigenvalue {eigenvalue:e} lies within {threshold:e} of zero; critical point is degenerate")]
    Degenerate { eigenvalue: f64, threshold: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Constants of one convergence regime.
#[derive(Clone, Debug, PartialEq)]
pub struct RateBundle<T> {
    pub regime: Regime,
    pub mu: T,
    pub l: T,
    pub kappa: T,
    /// Hessian Lipschitz constant, usually a sampled lower bound.
    pub m: T,
    pub alpha: T,
    pub beta: T,
    pub q: T,
    pub c: T,
    pub eta: T,
    /// Guaranteed basin radius; infinite when `M = 0`.
    pub r_hat: T,
    /// Per-step contraction factor of the asymptotic estimate.
    pub rate: T,
}

fn check_constants<T: Real>(mu: T, l: T, m: T) -> Result<(), TheoryError> {
    if !(mu > T::zero() && mu.is_finite() && l.is_finite() && mu <= l) {
        return Err(TheoryError::InvalidConstants(format!(
            "need 0 < μ ≤ L, got μ = {mu}, L = {l}"
        )));
    }
    if !(m >= T::zero() && m.is_finite()) {
        return Err(TheoryError::InvalidConstants(format!("need M ≥ 0, got {m}")));
    }
    Ok(())
}

fn basin<T: Real>(mu: T, eta: T, m: T) -> T {
    if m > T::zero() {
        T::lit(2.0) * mu * eta / m
    } else {
        T::infinity()
    }
}

/// Exact eigenvectors: `β = 2/(L+μ)`, rate `1 − 2/(κ+3)`, `r̂ = 2μ/M`.
pub fn rate_exact<T: Real>(mu: T, l: T, m: T) -> Result<RateBundle<T>, TheoryError> {
    check_constants(mu, l, m)?;
    let two = T::lit(2.0);
    let kappa = l / mu;
    Ok(RateBundle {
        regime: Regime::Exact,
        mu,
        l,
        kappa,
        m,
        alpha: T::zero(),
        beta: two / (l + mu),
        q: two * mu / (l + mu),
        c: m / (l + mu),
        eta: T::one(),
        r_hat: basin(mu, T::one(), m),
        rate: T::one() - two / (kappa + T::lit(3.0)),
    })
}

/// `η = 1 − 2α − 2κ(α + 2√α)`.
pub fn index1_eta<T: Real>(kappa: T, alpha: T) -> T {
    let two = T::lit(2.0);
    T::one() - two * alpha - two * kappa * (alpha + two * alpha.sqrt())
}

/// `η = 1 − α − κα(α + 5)`.
pub fn indexk_eta<T: Real>(kappa: T, alpha: T) -> T {
    T::one() - alpha - kappa * alpha * (alpha + T::lit(5.0))
}

pub fn is_admissible<T: Real>(regime: Regime, kappa: T, alpha: T) -> bool {
    if !(alpha >= T::zero()) {
        return false;
    }
    match regime {
        Regime::Exact => alpha == T::zero(),
        Regime::Index1Approx => alpha < T::lit(0.5) && index1_eta(kappa, alpha) > T::zero(),
        Regime::IndexKApprox => alpha < T::one() && indexk_eta(kappa, alpha) > T::zero(),
    }
}

/// Supremum of the admissible `α` for the regime, by bisection.
///
/// Both conditions are monotone in `α`, so the admissible set is `[0, α_sup)`.
pub fn sup_admissible_alpha<T: Real>(regime: Regime, kappa: T) -> T {
    let (mut lo, mut hi) = match regime {
        Regime::Exact => return T::zero(),
        Regime::Index1Approx => (T::zero(), T::lit(0.5)),
        Regime::IndexKApprox => (T::zero(), T::one()),
    };
    let tol = T::tol(ALPHA_BISECTION_TOL);
    while hi - lo > tol {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if is_admissible(regime, kappa, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn gate<T: Real>(regime: Regime, mu: T, l: T, alpha: T) -> Result<(), TheoryError> {
    let kappa = l / mu;
    if is_admissible(regime, kappa, alpha) {
        return Ok(());
    }
    Err(TheoryError::Inadmissible {
        regime,
        alpha: alpha.as_f64(),
        kappa: kappa.as_f64(),
        sup_alpha: sup_admissible_alpha(regime, kappa).as_f64(),
    })
}

/// Approximate eigenvector of an index-1 saddle with `|v₁ᵀv̂₁|² ≥ 1 − α`.
pub fn rate_index1_approx<T: Real>(mu: T, l: T, m: T, alpha: T) -> Result<RateBundle<T>, TheoryError> {
    check_constants(mu, l, m)?;
    gate(Regime::Index1Approx, mu, l, alpha)?;
    let two = T::lit(2.0);
    let kappa = l / mu;
    let eta = index1_eta(kappa, alpha);
    let shifted = T::one() - two * alpha;
    let denom = kappa + shifted;
    Ok(RateBundle {
        regime: Regime::Index1Approx,
        mu,
        l,
        kappa,
        m,
        alpha,
        beta: two / (l + shifted * mu),
        q: two * eta / denom,
        c: (m / mu) / denom,
        eta,
        r_hat: basin(mu, eta, m),
        rate: T::one() - two * eta / (kappa + T::one() - two * alpha + two * eta),
    })
}

/// Approximate index-`k` frame with projector distance at most `α`.
pub fn rate_indexk_approx<T: Real>(mu: T, l: T, m: T, alpha: T) -> Result<RateBundle<T>, TheoryError> {
    check_constants(mu, l, m)?;
    gate(Regime::IndexKApprox, mu, l, alpha)?;
    let two = T::lit(2.0);
    let kappa = l / mu;
    let eta = indexk_eta(kappa, alpha);
    let one_minus = T::one() - alpha;
    let squeeze = T::one() - alpha * alpha;
    let denom = kappa * squeeze + one_minus;
    Ok(RateBundle {
        regime: Regime::IndexKApprox,
        mu,
        l,
        kappa,
        m,
        alpha,
        beta: two / (l * squeeze + mu * one_minus),
        q: (two * one_minus - two * kappa * alpha * (alpha + T::lit(5.0))) / denom,
        c: (m / mu) / denom,
        eta,
        r_hat: basin(mu, eta, m),
        rate: T::one() - two * eta / (kappa * squeeze + T::one() - alpha + two * eta),
    })
}

/// Bundle for the regime, dispatching on `regime`.
pub fn rate_bundle<T: Real>(regime: Regime, mu: T, l: T, m: T, alpha: T) -> Result<RateBundle<T>, TheoryError> {
    match regime {
        Regime::Exact => rate_exact(mu, l, m),
        Regime::Index1Approx => rate_index1_approx(mu, l, m, alpha),
        Regime::IndexKApprox => rate_indexk_approx(mu, l, m, alpha),
    }
}

/// Upper bound on `‖Q‖₂` for an index-`k` frame with projector error `α`:
/// `[κ(1−α²) − (1−α) + 2κα(α+5)] / [κ(1−α²) + (1−α)]`.
pub fn indexk_q_bound<T: Real>(kappa: T, alpha: T) -> T {
    let squeeze = T::one() - alpha * alpha;
    let one_minus = T::one() - alpha;
    (kappa * squeeze - one_minus + T::lit(2.0) * kappa * alpha * (alpha + T::lit(5.0)))
        / (kappa * squeeze + one_minus)
}

/// Bounds on `r₁, …, r_N` for any series with `rₙ₊₁ ≤ rₙ(1 − q + c rₙ)`:
/// `rₙ₊₁ ≤ (1/(1+q))ⁿ⁺¹ · q r₀/(q − c r₀)`.
pub fn contraction_bound_seq<T: Real>(q: T, c: T, r0: T, n: usize) -> Result<Vec<T>, TheoryError> {
    if !(q > T::zero() && q <= T::one()) || !(c >= T::zero()) || !(r0 >= T::zero()) {
        return Err(TheoryError::InvalidConstants(format!(
            "need q ∈ (0, 1], c ≥ 0, r₀ ≥ 0; got q = {q}, c = {c}, r₀ = {r0}"
        )));
    }
    if c * r0 >= q {
        return Err(TheoryError::OutsideBasin {
            r0: r0.as_f64(),
            limit: (q / c).as_f64(),
        });
    }
    let shrink = T::one() / (T::one() + q);
    let mut factor = q * r0 / (q - c * r0);
    Ok((0..n)
        .map(|_| {
            factor = factor * shrink;
            factor
        })
        .collect())
}

/// `α = 1 − (v₁ᵀv̂₁)²` for unit vectors: the accuracy measure of the index-1 theory.
pub fn cosine_alpha<T: Real>(exact: &[T], approx: &[T]) -> T {
    let c = crate::linalg::dot(exact, approx);
    (T::one() - c * c).max(T::zero()).min(T::one())
}

/// Local curvature summary of a non-degenerate Hessian.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumStats<T> {
    /// `min |λᵢ|`, also the spectral gap to zero.
    pub mu: T,
    /// `max |λᵢ|`.
    pub l: T,
    pub kappa: T,
    /// Number of negative eigenvalues.
    pub index: usize,
    pub eigenvalues: Vec<T>,
}

pub fn spectrum_stats<T: Real>(h: &DenseMatrix<T>) -> Result<SpectrumStats<T>, TheoryError> {
    let spectrum = sym_eig(h)?;
    let closest = spectrum.closest_to_zero();
    if closest.abs() < T::lit(DEGENERACY_THRESHOLD) {
        return Err(TheoryError::Degenerate {
            eigenvalue: closest.as_f64(),
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let mu = closest.abs();
    let l = spectrum.max_abs();
    Ok(SpectrumStats {
        mu,
        l,
        kappa: l / mu,
        index: spectrum.negative_count(),
        eigenvalues: spectrum.values,
    })
}

/// `(min μ̂, max L̂)` over the Hessians at `points`.
pub fn curvature_bounds<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    points: &[DenseVector<T>],
) -> Result<(T, T), TheoryError> {
    let mut mu = T::infinity();
    let mut l = T::zero();
    for p in points {
        let s = spectrum_stats(&landscape.hessian(p))?;
        mu = mu.min(s.mu);
        l = l.max(s.l);
    }
    if points.is_empty() {
        return Err(TheoryError::InvalidConstants("no sample points".into()));
    }
    Ok((mu, l))
}

/// Local search steps applied to each sampled pair in [`estimate_m`].
pub const M_REFINE_STEPS: usize = 20;

/// Pair separation in [`estimate_m`], relative to the ball radius.
pub const M_PAIR_SEPARATION: f64 = 1e-3;

/// Sampled lower bound on the Hessian Lipschitz constant in a ball:
/// `max ‖∇²E(x) − ∇²E(y)‖₂ / ‖x − y‖₂` over the evaluated pairs.
///
/// Each of the `samples` pairs starts at a uniform point `x` of the ball with
/// a random direction `u`, `y = x − εu`, and is then improved by a short
/// (1+1) evolution-strategy climb over `(x, u)`. Sample `i` draws from its
/// own random stream, so a larger `samples` evaluates a superset of pairs
/// and never lowers the estimate.
pub fn estimate_m<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    center: &[T],
    radius: T,
    samples: usize,
    seed: u64,
) -> Result<T, TheoryError> {
    if !(radius > T::zero()) || samples < 2 {
        return Err(TheoryError::InvalidConstants(format!(
            "need radius > 0 and samples ≥ 2, got radius = {radius}, samples = {samples}"
        )));
    }
    let r = radius.as_f64();
    let c: Vec<f64> = center.iter().map(|v| v.as_f64()).collect();
    let ratio = |x: &[f64], u: &[f64]| -> Result<f64, TheoryError> {
        let y = pair_partner(&c, x, u, r);
        let gap = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if gap == 0.0 {
            return Ok(0.0);
        }
        let xt: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
        let yt: Vec<T> = y.iter().map(|&v| T::lit(v)).collect();
        let diff = landscape.hessian(&xt).sub(&landscape.hessian(&yt))?;
        Ok(operator_norm(&diff.symmetrized())?.as_f64() / gap)
    };
    let mut best = 0.0f64;
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut x = sample_ball(&mut rng, &c, r);
        let mut u = gaussian(&mut rng, c.len(), 1.0);
        let mut value = ratio(&x, &u)?;
        let mut sigma = 0.25;
        for _ in 0..M_REFINE_STEPS {
            let step = gaussian(&mut rng, c.len(), sigma * r);
            let mut x2: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            clip_to_ball(&mut x2, &c, r);
            let turn = gaussian(&mut rng, c.len(), sigma);
            let u2: Vec<f64> = u.iter().zip(&turn).map(|(a, b)| a + b).collect();
            let v2 = ratio(&x2, &u2)?;
            if v2 > value {
                value = v2;
                x = x2;
                u = u2;
                sigma *= 1.5;
            } else {
                sigma *= 0.85;
            }
        }
        best = best.max(value);
    }
    Ok(T::lit(best))
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            scale * e
        })
        .collect()
}

fn sample_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let d = center.len();
    let dir = gaussian(rng, d, 1.0);
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let u: f64 = Uniform::new(0.0, 1.0).sample(rng);
    let scale = radius * u.powf(1.0 / d as f64) / norm;
    center.iter().zip(&dir).map(|(c, v)| c + v * scale).collect()
}

fn clip_to_ball(x: &mut [f64], center: &[f64], radius: f64) {
    let dist = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if dist > radius {
        for (xi, ci) in x.iter_mut().zip(center) {
            *xi = ci + (*xi - ci) * radius / dist;
        }
    }
}

/// `y = x − ε u/‖u‖`, pulled back into the ball.
fn pair_partner(center: &[f64], x: &[f64], u: &[f64], radius: f64) -> Vec<f64> {
    let n = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let eps = M_PAIR_SEPARATION * radius;
    let mut y: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - eps * b / n).collect();
    clip_to_ball(&mut y, center, radius);
    y
}
