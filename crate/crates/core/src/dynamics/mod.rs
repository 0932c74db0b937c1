//! The saddle search driver: reflected-gradient position updates coupled
//! to an eigenvector solver, with stopping rules, trace capture and the
//! one-step linearization used for diagnostics.
//!
//! One iteration, in order:
//!
//! ```text
//! x⁽ⁿ⁺¹⁾ = x⁽ⁿ⁾ − β (I − 2 V̂ⁿV̂ⁿᵀ) ∇E(x⁽ⁿ⁾)
//! V̂ⁿ⁺¹  = EigenSol(V̂ⁿ, ∇²E(x⁽ⁿ⁺¹⁾))
//! ```

mod trace;

pub use trace::{
    empirical_rate, IterationRecord, IterationTrace, RunMetadata, Termination, CSV_HEADER,
    RATIO_FLOOR,
};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::eigensolve::{
    eigenframe_error, eigensol, exact_k_smallest, EigenError, EigenSolverConfig, LobpcgState,
};
use crate::landscape::{EnergyLandscape, LandscapeError};
use crate::linalg::{mgs_orth, operator_norm, DenseMatrix, DenseVector, LinalgError, OrthoFrame};
use crate::quadrature::gauss_legendre_unit;
use crate::scalar::Real;
use crate::theory::{rate_bundle, spectrum_stats, RateBundle, Regime, TheoryError};

/// Runs stop once `‖x⁽ⁿ⁾ − x⁽⁰⁾‖` exceeds this multiple of `1 + ‖x⁽⁰⁾‖`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Default stopping tolerance on `‖∇E‖₂`.
pub const DEFAULT_GRAD_TOL: f64 = 1e-10;

/// Default Gaussian perturbation of the initial frame (per column, in norm).
pub const DEFAULT_FRAME_NOISE: f64 = 0.1;

/// Nodes of the Gauss–Legendre rule for the Hessian path integral.
pub const PATH_QUADRATURE_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("non-finite gradient at iteration {n}, x = {x:?}")]
    NonFinite { n: usize, x: Vec<f64> },
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("stationary point x* is required")]
    MissingStationaryPoint,
    #[error("rate fit needs at least {need} records with r_n > 0, have {have}")]
    TooFewRecords { have: usize, need: usize },
}

/// How the position step `β` is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum BetaPolicy<T> {
    Constant(T),
    /// `2/(L+μ)`.
    TheoryExact,
    /// `2/(L+(1−2α)μ)`, admissible `α` required.
    TheoryIndex1 { alpha: T },
    /// `2/(L(1−α²)+μ(1−α))`, admissible `α` required.
    TheoryIndexK { alpha: T },
}

impl<T: Real> BetaPolicy<T> {
    pub fn name(&self) -> &'static str {
        match self {
            BetaPolicy::Constant(_) => "constant",
            BetaPolicy::TheoryExact => "theory-exact",
            BetaPolicy::TheoryIndex1 { .. } => "theory-index1",
            BetaPolicy::TheoryIndexK { .. } => "theory-indexk",
        }
    }

    fn regime(&self) -> Option<(Regime, T)> {
        match self {
            BetaPolicy::Constant(_) => None,
            BetaPolicy::TheoryExact => Some((Regime::Exact, T::zero())),
            BetaPolicy::TheoryIndex1 { alpha } => Some((Regime::Index1Approx, *alpha)),
            BetaPolicy::TheoryIndexK { alpha } => Some((Regime::IndexKApprox, *alpha)),
        }
    }

    /// Resolves `β`, using the spectrum of `∇²E(x_ref)` for the theory policies.
    ///
    /// The bundle carries `M = 0`; callers that know a Lipschitz estimate
    /// rebuild it with [`rate_bundle`].
    pub fn resolve<L: EnergyLandscape<T> + ?Sized>(
        &self,
        landscape: &L,
        x_ref: &[T],
    ) -> Result<(T, Option<RateBundle<T>>), DynamicsError> {
        let beta_and_bundle = match self.regime() {
            None => match self {
                BetaPolicy::Constant(b) => (*b, None),
                _ => unreachable!("non-constant policies have a regime"),
            },
            Some((regime, alpha)) => {
                let stats = spectrum_stats(&landscape.hessian(x_ref))?;
                let bundle = rate_bundle(regime, stats.mu, stats.l, T::zero(), alpha)?;
                (bundle.beta, Some(bundle))
            }
        };
        if !(beta_and_bundle.0 > T::zero()) || !beta_and_bundle.0.is_finite() {
            return Err(DynamicsError::InvalidConfig(format!(
                "step size must be positive, got {}",
                beta_and_bundle.0
            )));
        }
        Ok(beta_and_bundle)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaddleRunConfig<T> {
    /// Index of the sought saddle: the number of reflected directions.
    pub k: usize,
    pub beta: BetaPolicy<T>,
    pub eigen: EigenSolverConfig<T>,
    pub max_iterations: usize,
    /// Stop when `‖∇E(x⁽ⁿ⁾)‖₂` falls below this.
    pub grad_tol: T,
    /// Stop when `rₙ` falls below this (needs `x*`).
    pub r_tol: Option<T>,
    /// Record `αₙ` (needs the Hessian every step).
    pub diagnostics: bool,
    /// Store every iterate in the trace.
    pub keep_positions: bool,
}

impl<T: Real> SaddleRunConfig<T> {
    pub fn new(k: usize, beta: BetaPolicy<T>, eigen: EigenSolverConfig<T>) -> Self {
        Self {
            k,
            beta,
            eigen,
            max_iterations: 100_000,
            grad_tol: T::lit(DEFAULT_GRAD_TOL),
            r_tol: None,
            diagnostics: false,
            keep_positions: false,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), DynamicsError> {
        if self.k == 0 || self.k > dim {
            return Err(DynamicsError::InvalidConfig(format!(
                "index k must lie in 1..={dim}, got {}",
                self.k
            )));
        }
        if !(self.grad_tol >= T::zero()) {
            return Err(DynamicsError::InvalidConfig("gradient tolerance must be non-negative (0 disables it)".into()));
        }
        if let Some(r) = self.r_tol {
            if !(r > T::zero()) {
                return Err(DynamicsError::InvalidConfig("distance tolerance must be positive".into()));
            }
        }
        if let BetaPolicy::Constant(b) = self.beta {
            if !(b > T::zero()) || !b.is_finite() {
                return Err(DynamicsError::InvalidConfig(format!("step size must be positive, got {b}")));
            }
        }
        self.eigen.validate()?;
        Ok(())
    }
}

/// `x − β (I − 2V̂V̂ᵀ) ∇E(x)`, without forming the `d × d` reflector.
pub fn position_step<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    frame: &OrthoFrame<T>,
    beta: T,
) -> Result<DenseVector<T>, DynamicsError> {
    let g = landscape.gradient(x);
    if !g.is_finite() {
        return Err(DynamicsError::NonFinite {
            n: 0,
            x: x.iter().map(|v| v.as_f64()).collect(),
        });
    }
    Ok(step_with_gradient(x, frame, beta, &g))
}

fn step_with_gradient<T: Real>(x: &[T], frame: &OrthoFrame<T>, beta: T, g: &[T]) -> DenseVector<T> {
    let mut next = DenseVector::from_slice(x);
    next.axpy(-beta, &frame.reflect(g));
    next
}

/// Exact eigenframe of `∇²E(x₀)` plus Gaussian noise of norm about `noise`
/// per column, re-orthonormalized. `noise = 0` returns the exact frame.
pub fn perturbed_eigenframe<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x0: &[T],
    k: usize,
    noise: f64,
    seed: u64,
) -> Result<OrthoFrame<T>, DynamicsError> {
    let (exact, _) = exact_k_smallest(&landscape.hessian(x0), k)?;
    perturb_frame(&exact, noise, seed)
}

/// Adds Gaussian noise with per-entry deviation `noise/√d` to every column of
/// `frame` and re-orthonormalizes.
pub fn perturb_frame<T: Real>(frame: &OrthoFrame<T>, noise: f64, seed: u64) -> Result<OrthoFrame<T>, DynamicsError> {
    if noise == 0.0 {
        return Ok(frame.clone());
    }
    let d = frame.dim();
    let k = frame.width();
    let sigma = noise / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = frame.as_matrix().clone();
    for i in 0..d {
        for j in 0..k {
            let e: f64 = StandardNormal.sample(&mut rng);
            m[(i, j)] = m[(i, j)] + T::lit(sigma * e);
        }
    }
    Ok(mgs_orth(&m)?)
}

/// Runs the iteration from `(x₀, V₀)` until a stopping rule fires.
///
/// The eigensolver is always evaluated at the freshly updated position.
pub fn run<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    config: &SaddleRunConfig<T>,
    x0: &[T],
    v0: &OrthoFrame<T>,
    x_star: Option<&[T]>,
) -> Result<IterationTrace<T>, DynamicsError> {
    let started = Instant::now();
    let d = landscape.dim();
    config.validate(d)?;
    if x0.len() != d || !x0.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::InvalidConfig(format!(
            "x₀ must be a finite vector of length {d}"
        )));
    }
    if v0.width() != config.k || v0.dim() != d {
        return Err(DynamicsError::InvalidConfig(format!(
            "V₀ must be {d} × {}, got {} × {}",
            config.k,
            v0.dim(),
            v0.width()
        )));
    }
    if let Some(xs) = x_star {
        if xs.len() != d {
            return Err(DynamicsError::InvalidConfig("x* has the wrong length".into()));
        }
    }

    let x_ref = x_star.unwrap_or(x0);
    let (beta, _) = config.beta.resolve(landscape, x_ref)?;
    let mut eigen = config.eigen.clone();
    eigen.gamma = Some(eigen.gamma.unwrap_or(beta));
    eigen.diagnostics = config.diagnostics;

    let x0v = DenseVector::from_slice(x0);
    let guard = T::lit(DIVERGENCE_FACTOR) * (T::one() + x0v.norm());
    let floor = T::lit(RATIO_FLOOR);

    let mut x = x0v.clone();
    let mut frame = v0.clone();
    let mut state = LobpcgState::empty();
    let mut alpha = if config.diagnostics {
        Some(eigenframe_error(landscape, x0, v0)?)
    } else {
        None
    };
    let mut frame_point = 0usize;
    let mut records: Vec<IterationRecord<T>> = Vec::new();
    let mut n = 0usize;
    let termination = loop {
        let g = landscape.gradient(&x);
        if !g.is_finite() {
            return Err(DynamicsError::NonFinite {
                n,
                x: x.iter().map(|v| v.as_f64()).collect(),
            });
        }
        let grad_norm = g.norm();
        let r_n = x_star.map(|xs| x.distance(xs));
        if let (Some(prev), Some(r)) = (records.last_mut(), r_n) {
            if let Some(r_prev) = prev.r_n {
                if r_prev >= floor {
                    prev.contraction = Some(r / r_prev);
                }
            }
        }
        records.push(IterationRecord {
            n,
            x: config.keep_positions.then(|| x.clone()),
            grad_norm,
            r_n,
            alpha_n: alpha,
            contraction: None,
            beta,
            frame_point,
        });

        if grad_norm < config.grad_tol {
            break Termination::GradientTolerance;
        }
        if let (Some(tol), Some(r)) = (config.r_tol, r_n) {
            if r < tol {
                break Termination::DistanceTolerance;
            }
        }
        if x.distance(&x0v) > guard {
            break Termination::Diverged;
        }
        if n >= config.max_iterations {
            break Termination::MaxIterations;
        }

        let next = step_with_gradient(&x, &frame, beta, &g);
        if !next.is_finite() {
            break Termination::Diverged;
        }
        let out = eigensol(landscape, &next, &frame, state, &eigen)?;
        frame = out.frame;
        state = out.state;
        alpha = out.alpha;
        x = next;
        n += 1;
        frame_point = n;
    };

    let mut settings = vec![
        ("k".to_string(), config.k.to_string()),
        ("beta_policy".to_string(), config.beta.name().to_string()),
        ("beta".to_string(), format!("{beta:e}")),
        ("eigensolver".to_string(), eigen.method.as_str().to_string()),
        ("sub_iterations".to_string(), eigen.sub_iterations.to_string()),
        ("gamma".to_string(), format!("{:e}", eigen.gamma.unwrap_or(beta))),
        ("dimer_length".to_string(), format!("{:e}", eigen.dimer_length)),
        ("dimer".to_string(), eigen.use_dimer.to_string()),
        ("max_iterations".to_string(), config.max_iterations.to_string()),
        ("grad_tol".to_string(), format!("{:e}", config.grad_tol)),
    ];
    if let Some(r) = config.r_tol {
        settings.push(("r_tol".to_string(), format!("{r:e}")));
    }
    Ok(IterationTrace {
        records,
        final_x: x,
        metadata: RunMetadata {
            landscape: landscape.name().to_string(),
            settings,
            wall_time_secs: started.elapsed().as_secs_f64(),
            termination,
        },
    })
}

/// The linearization `x⁽ⁿ⁺¹⁾ − x* = (Q + B)(x⁽ⁿ⁾ − x*)` of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDecomposition<T> {
    /// `I − βA∇²E(x⁽ⁿ⁾)` with `A = I − 2V̂V̂ᵀ`.
    pub q: DenseMatrix<T>,
    /// `T − Q`, where `T = I − βA∫₀¹∇²E(x* + t(x⁽ⁿ⁾ − x*))dt`.
    pub b: DenseMatrix<T>,
    pub r_n: T,
    pub q_norm: T,
    pub b_norm: T,
    /// `max_t ‖∇²E(x⁽ⁿ⁾) − ∇²E(x* + te)‖ / ((1 − t) rₙ)` over the quadrature nodes.
    pub m_hat: T,
    /// `‖x⁽ⁿ⁺¹⁾ − x* − (Q + B)(x⁽ⁿ⁾ − x*)‖₂`.
    pub identity_residual: T,
    /// `½ β M̂ rₙ`.
    pub b_bound: T,
}

impl<T: Real> StepDecomposition<T> {
    /// Residual within `1e-8 rₙ` and `‖B‖ ≤ ½βM̂rₙ + 1e-8`.
    pub fn holds(&self) -> bool {
        let tol = T::tol(1e-8);
        self.identity_residual <= tol * self.r_n && self.b_norm <= self.b_bound + tol
    }
}

pub fn single_step_decomposition<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    frame: &OrthoFrame<T>,
    beta: T,
    x_star: Option<&[T]>,
) -> Result<StepDecomposition<T>, DynamicsError> {
    let xs = x_star.ok_or(DynamicsError::MissingStationaryPoint)?;
    let d = x.len();
    let e = DenseVector::from_slice(x).sub(xs);
    let r_n = e.norm();
    let reflector = DenseMatrix::identity(d).sub(&frame.projector().scaled(T::lit(2.0)))?;
    let h_n = landscape.hessian(x);

    let mut avg = DenseMatrix::zeros(d, d);
    let mut m_hat = T::zero();
    for (t, w) in gauss_legendre_unit::<T>(PATH_QUADRATURE_NODES) {
        let p: Vec<T> = xs.iter().zip(e.iter()).map(|(&s, &ei)| s + t * ei).collect();
        let h_t = landscape.hessian(&p);
        if r_n > T::zero() {
            let gap = operator_norm(&h_n.sub(&h_t)?.symmetrized())?;
            m_hat = m_hat.max(gap / ((T::one() - t) * r_n));
        }
        avg.add_scaled(w, &h_t);
    }
    let q = DenseMatrix::identity(d).sub(&reflector.matmul(&h_n)?.scaled(beta))?;
    let t_mat = DenseMatrix::identity(d).sub(&reflector.matmul(&avg)?.scaled(beta))?;
    let b = t_mat.sub(&q)?;

    let next = position_step(landscape, x, frame, beta)?;
    let predicted = q.add(&b)?.matvec(&e);
    let identity_residual = next.sub(xs).distance(&predicted);
    Ok(StepDecomposition {
        q_norm: operator_norm(&q)?,
        b_norm: operator_norm(&b)?,
        q,
        b,
        r_n,
        m_hat,
        identity_residual,
        b_bound: T::lit(0.5) * beta * m_hat * r_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{make_benchmark, Benchmark, BenchmarkSpec};

    fn quad(values: &[f64]) -> Benchmark<f64> {
        make_benchmark(BenchmarkSpec::Quadratic {
            matrix: DenseMatrix::diagonal(values),
        })
        .unwrap()
    }

    #[test]
    fn single_step_arithmetic() {
        let q = quad(&[-1.0, 1.0]);
        let v = OrthoFrame::coordinate(2, 1);
        let x = position_step(&q, &[1.0, 1.0], &v, 2.0 / 3.0).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-15 && (x[1] - 1.0 / 3.0).abs() < 1e-15);
        let still = position_step(&q, &[0.0, 0.0], &v, 0.5).unwrap();
        assert_eq!(still.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn full_reflection_is_ascent() {
        let q = quad(&[-1.0, 2.0, 3.0]);
        let x = [0.4, -0.2, 0.7];
        let v = OrthoFrame::coordinate(3, 3);
        let step = position_step(&q, &x, &v, 0.1).unwrap();
        let g = q.gradient(&x);
        for i in 0..3 {
            assert!((step[i] - (x[i] + 0.1 * g[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_run_contracts_by_a_third() {
        let q = quad(&[-1.0, 2.0]);
        let mut cfg = SaddleRunConfig::new(1, BetaPolicy::Constant(2.0 / 3.0), EigenSolverConfig::exact());
        cfg.max_iterations = 30;
        cfg.grad_tol = 1e-300;
        let v0 = OrthoFrame::coordinate(2, 1);
        let trace = run(&q, &cfg, &[1.0, 1.0], &v0, Some(&[0.0, 0.0])).unwrap();
        assert_eq!(trace.termination(), Termination::MaxIterations);
        assert_eq!(trace.records.len(), 31);
        for r in &trace.records {
            let expected = 2f64.sqrt() * 3f64.powi(-(r.n as i32));
            assert!((r.r_n.unwrap() - expected).abs() <= 1e-12 * expected);
            assert_eq!(r.frame_point, r.n);
        }
        let (rate, r2) = empirical_rate(&trace, 0.5).unwrap();
        assert!((rate - 1.0 / 3.0).abs() < 1e-6 && r2 > 0.999_999);
    }

    #[test]
    fn start_at_saddle_stops_immediately() {
        let q = quad(&[-1.0, 2.0]);
        let cfg = SaddleRunConfig::new(1, BetaPolicy::Constant(0.1), EigenSolverConfig::exact());
        let trace = run(&q, &cfg, &[0.0, 0.0], &OrthoFrame::coordinate(2, 1), Some(&[0.0, 0.0])).unwrap();
        assert_eq!(trace.termination(), Termination::GradientTolerance);
        assert_eq!(trace.iterations(), 0);
    }

    #[test]
    fn oversized_step_diverges() {
        let q = quad(&[-1.0, 2.0]);
        let mut cfg = SaddleRunConfig::new(1, BetaPolicy::Constant(5.0), EigenSolverConfig::exact());
        cfg.max_iterations = 10_000;
        let trace = run(&q, &cfg, &[1.0, 1.0], &OrthoFrame::coordinate(2, 1), None).unwrap();
        assert_eq!(trace.termination(), Termination::Diverged);
    }

    #[test]
    fn theory_beta_resolution() {
        let q = quad(&[-1.0, 2.0]);
        let (beta, bundle) = BetaPolicy::TheoryExact.resolve(&q, &[0.0, 0.0]).unwrap();
        assert!((beta - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bundle.unwrap().regime, Regime::Exact);
        let err = BetaPolicy::TheoryIndex1 { alpha: 0.3 }.resolve(&q, &[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("1 − 2α > 2κ(α + 2√α)"));
    }

    #[test]
    fn decomposition_on_quadratic() {
        let q = quad(&[-1.0, 2.0]);
        let v = OrthoFrame::coordinate(2, 1);
        let dec = single_step_decomposition(&q, &[0.3, -0.5], &v, 2.0 / 3.0, Some(&[0.0, 0.0])).unwrap();
        assert!(dec.b.max_abs() < 1e-12);
        assert!((dec.q[(0, 0)] - 1.0 / 3.0).abs() < 1e-15 && (dec.q[(1, 1)] + 1.0 / 3.0).abs() < 1e-15);
        assert!((dec.q_norm - 1.0 / 3.0).abs() < 1e-15);
        assert!(dec.holds());
        assert!(matches!(
            single_step_decomposition(&q, &[0.3, -0.5], &v, 0.5, None),
            Err(DynamicsError::MissingStationaryPoint)
        ));
    }

    #[test]
    fn decomposition_near_powell_saddle() {
        let p = make_benchmark(BenchmarkSpec::powell_case(1)).unwrap();
        let xs = [0.0; 4];
        let stats = spectrum_stats(&p.hessian(&xs)).unwrap();
        let x = [0.01, -0.02, 0.015, 0.005];
        let v = perturbed_eigenframe(&p, &x, 2, 0.0, 0).unwrap();
        let beta = 2.0 / (stats.l + stats.mu);
        let dec = single_step_decomposition(&p, &x, &v, beta, Some(&xs)).unwrap();
        assert!(dec.holds(), "{dec:?}");
        assert!(dec.q_norm <= (stats.l - stats.mu) / (stats.l + stats.mu) + 0.05);
    }

    #[test]
    fn powell_case1_converges() {
        let p = make_benchmark(BenchmarkSpec::powell_case(1)).unwrap();
        let x0 = [-0.15, 0.2, 0.0, -0.2];
        let mut cfg = SaddleRunConfig::new(2, BetaPolicy::Constant(0.009), EigenSolverConfig::exact());
        cfg.max_iterations = 10_000;
        cfg.r_tol = Some(1e-6);
        let v0 = perturbed_eigenframe(&p, &x0, 2, 0.0, 0).unwrap();
        let trace = run(&p, &cfg, &x0, &v0, Some(&[0.0; 4])).unwrap();
        assert_eq!(trace.termination(), Termination::DistanceTolerance);
        assert!(trace.iterations() < 10_000);
    }

    #[test]
    fn perturbed_frame_is_seeded() {
        let p = make_benchmark(BenchmarkSpec::powell_case(1)).unwrap();
        let x0 = [-0.15, 0.2, 0.0, -0.2];
        let a = perturbed_eigenframe(&p, &x0, 2, 0.1, 5).unwrap();
        let b = perturbed_eigenframe(&p, &x0, 2, 0.1, 5).unwrap();
        let c = perturbed_eigenframe(&p, &x0, 2, 0.1, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn csv_layout() {
        let q = quad(&[-1.0, 2.0]);
        let mut cfg = SaddleRunConfig::new(1, BetaPolicy::Constant(2.0 / 3.0), EigenSolverConfig::exact());
        cfg.max_iterations = 3;
        let trace = run(&q, &cfg, &[1.0, 1.0], &OrthoFrame::coordinate(2, 1), None).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 6);
        assert!(first.contains(",,,,"), "{first}");
        assert_eq!(csv.lines().count(), 5);
    }
}
