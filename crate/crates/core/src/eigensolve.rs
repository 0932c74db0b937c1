//! The eigenvector step of the saddle dynamics: refresh the frame of
//! approximate eigenvectors for the `k` smallest Hessian eigenvalues.
//!
//! Three solvers are available, each warm-started from the previous frame:
//!
//! * exact dense decomposition of `∇²E(x)`;
//! * SIRQIT, an explicit Euler step of the direction dynamics
//!   `vᵢ ← vᵢ − γ (I − vᵢvᵢᵀ − 2 Σ_{j<i} vⱼvⱼᵀ) H vᵢ` followed by MGS;
//! * LOBPCG without preconditioner, Rayleigh–Ritz over `span{V, W, P}`.
//!
//! Hessian-vector products use either the dimer central difference or the
//! landscape's Hessian matrix.

use crate::landscape::{dimer_unchecked, EnergyLandscape, LandscapeError, DEFAULT_DIMER_LENGTH};
use crate::linalg::{
    mgs_orth, mgs_orth_dropping, subspace_gap, sym_eig, DenseMatrix, DenseVector, LinalgError,
    OrthoFrame,
};
use crate::scalar::Real;

/// Columns whose residual after projection drops below this fraction of
/// their norm are removed from the LOBPCG trial basis.
pub const LOBPCG_DROP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigenError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error("orthonormalization collapsed in sub-iteration {sub_iteration}: {source}")]
    RankCollapse {
        sub_iteration: usize,
        #[source]
        source: LinalgError,
    },
    #[error("LOBPCG trial basis kept {kept} independent columns, need {needed}")]
    TooFewDirections { kept: usize, needed: usize },
    #[error("invalid eigensolver config: {0}")]
    InvalidConfig(String),
    #[error("frame width {width} invalid for index {k} in dimension {dim}")]
    BadWidth { k: usize, width: usize, dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EigenMethod {
    Exact,
    Sirqit,
    Lobpcg,
}

impl EigenMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EigenMethod::Exact => "exact",
            EigenMethod::Sirqit => "sirqit",
            EigenMethod::Lobpcg => "lobpcg",
        }
    }
}

impl std::str::FromStr for EigenMethod {
    type Err = EigenError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "sirqit" => Ok(Self::Sirqit),
            "lobpcg" => Ok(Self::Lobpcg),
            other => Err(EigenError::InvalidConfig(format!(
                "unknown eigensolver method '{other}' (expected exact, sirqit or lobpcg)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenSolverConfig<T> {
    pub method: EigenMethod,
    /// Sweeps of the chosen solver per position step.
    pub sub_iterations: usize,
    /// SIRQIT step `γ`. `None` means "use the position step β of the run".
    pub gamma: Option<T>,
    /// Dimer half-length `l`.
    pub dimer_length: T,
    /// Dimer Hessian-vector products instead of the Hessian matrix.
    pub use_dimer: bool,
    /// Report the projector distance to the exact eigenframe after each call.
    pub diagnostics: bool,
}

impl<T: Real> Default for EigenSolverConfig<T> {
    fn default() -> Self {
        Self {
            method: EigenMethod::Sirqit,
            sub_iterations: 1,
            gamma: None,
            dimer_length: T::lit(DEFAULT_DIMER_LENGTH),
            use_dimer: true,
            diagnostics: false,
        }
    }
}

impl<T: Real> EigenSolverConfig<T> {
    pub fn exact() -> Self {
        Self {
            method: EigenMethod::Exact,
            ..Self::default()
        }
    }

    pub fn sirqit(sub_iterations: usize) -> Self {
        Self {
            method: EigenMethod::Sirqit,
            sub_iterations,
            ..Self::default()
        }
    }

    pub fn lobpcg(sub_iterations: usize) -> Self {
        Self {
            method: EigenMethod::Lobpcg,
            sub_iterations,
            ..Self::default()
        }
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn validate(&self) -> Result<(), EigenError> {
        if self.sub_iterations == 0 {
            return Err(EigenError::InvalidConfig("sub_iterations must be ≥ 1".into()));
        }
        if !(self.dimer_length > T::zero()) || !self.dimer_length.is_finite() {
            return Err(EigenError::InvalidConfig(format!(
                "dimer length must be positive, got {}",
                self.dimer_length
            )));
        }
        if let Some(g) = self.gamma {
            if !(g >= T::zero()) || !g.is_finite() {
                return Err(EigenError::InvalidConfig(format!("gamma must be ≥ 0, got {g}")));
            }
        }
        Ok(())
    }
}

/// LOBPCG history carried between calls: the previous update direction block.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LobpcgState<T> {
    pub previous_direction: Option<DenseMatrix<T>>,
    /// Ritz values from the most recent Rayleigh–Ritz projection.
    pub ritz_values: Vec<T>,
}

impl<T: Real> LobpcgState<T> {
    pub fn empty() -> Self {
        Self {
            previous_direction: None,
            ritz_values: Vec::new(),
        }
    }
}

/// Hessian-vector product at a fixed point.
enum HessianAction<'a, T: Real, L: ?Sized> {
    Dimer { landscape: &'a L, x: &'a [T], l: T },
    Matrix(DenseMatrix<T>),
}

impl<'a, T: Real, L: EnergyLandscape<T> + ?Sized> HessianAction<'a, T, L> {
    fn new(landscape: &'a L, x: &'a [T], cfg: &EigenSolverConfig<T>) -> Self {
        if cfg.use_dimer {
            Self::Dimer {
                landscape,
                x,
                l: cfg.dimer_length,
            }
        } else {
            Self::Matrix(landscape.hessian(x))
        }
    }

    /// `H v` for arbitrary `v`; the dimer is applied to `v/‖v‖` and rescaled.
    fn apply(&self, v: &[T]) -> DenseVector<T> {
        match self {
            Self::Matrix(h) => h.matvec(v),
            Self::Dimer { landscape, x, l } => {
                let n = crate::linalg::norm(v);
                if n == T::zero() {
                    return DenseVector::zeros(v.len());
                }
                let unit: Vec<T> = v.iter().map(|&c| c / n).collect();
                dimer_unchecked(*landscape, x, &unit, *l).scaled(n)
            }
        }
    }
}

/// Frame and eigenvalues of the `k` smallest eigenvalues of symmetric `h`.
pub fn exact_k_smallest<T: Real>(
    h: &DenseMatrix<T>,
    k: usize,
) -> Result<(OrthoFrame<T>, Vec<T>), EigenError> {
    if k == 0 || k > h.nrows() {
        return Err(EigenError::BadWidth {
            k,
            width: k,
            dim: h.nrows(),
        });
    }
    Ok(sym_eig(h)?.lowest(k))
}

/// SIRQIT sweeps: `vᵢ ← vᵢ − γ (I − vᵢvᵢᵀ − 2 Σ_{j<i} vⱼvⱼᵀ) H vᵢ`, then MGS.
///
/// Hessian-vector products are re-evaluated every sweep. `cfg.gamma` must
/// be resolved.
pub fn sirqit_step<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    frame: &OrthoFrame<T>,
    cfg: &EigenSolverConfig<T>,
) -> Result<OrthoFrame<T>, EigenError> {
    cfg.validate()?;
    let gamma = cfg
        .gamma
        .ok_or_else(|| EigenError::InvalidConfig("SIRQIT step gamma not resolved".into()))?;
    let action = HessianAction::new(landscape, x, cfg);
    let two = T::lit(2.0);
    let mut current = frame.clone();
    for sweep in 0..cfg.sub_iterations {
        let k = current.width();
        let vs: Vec<Vec<T>> = (0..k).map(|i| current.column(i)).collect();
        let mut updated = Vec::with_capacity(k);
        for (i, v) in vs.iter().enumerate() {
            let hv = action.apply(v);
            let mut direction = hv.clone();
            direction.axpy(-crate::linalg::dot(v, &hv), v);
            for u in &vs[..i] {
                direction.axpy(-two * crate::linalg::dot(u, &hv), u);
            }
            let mut next = DenseVector::from_slice(v);
            next.axpy(-gamma, &direction);
            updated.push(next.into_inner());
        }
        current = mgs_orth(&DenseMatrix::from_columns(&updated)).map_err(|source| {
            EigenError::RankCollapse {
                sub_iteration: sweep,
                source,
            }
        })?;
    }
    Ok(current)
}

/// LOBPCG sweeps without preconditioner.
///
/// Each sweep performs Rayleigh–Ritz over `span{V, W, P}` with residual
/// block `W = HV − V(VᵀHV)` and previous direction `P`, keeps the `k`
/// lowest Ritz vectors and stores `P = V_new − V(VᵀV_new)`.
pub fn lobpcg_step<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    frame: &OrthoFrame<T>,
    state: LobpcgState<T>,
    cfg: &EigenSolverConfig<T>,
) -> Result<(OrthoFrame<T>, LobpcgState<T>), EigenError> {
    cfg.validate()?;
    let action = HessianAction::new(landscape, x, cfg);
    let drop_tol = T::lit(LOBPCG_DROP_TOL);
    let k = frame.width();
    let d = frame.dim();
    let mut current = frame.clone();
    let mut state = state;
    for _ in 0..cfg.sub_iterations {
        let hv: Vec<DenseVector<T>> = (0..k).map(|i| action.apply(&current.column(i))).collect();

        let mut candidates: Vec<Vec<T>> = (0..k).map(|i| current.column(i)).collect();
        for hvi in &hv {
            let c = current.coords(hvi);
            let w = hvi.sub(&current.combine(&c));
            // converged columns contribute nothing but noise
            if w.norm() > drop_tol * hvi.norm() {
                candidates.push(w.into_inner());
            }
        }
        if let Some(p) = &state.previous_direction {
            if p.nrows() == d {
                for col in p.columns() {
                    if crate::linalg::norm(&col) > drop_tol {
                        candidates.push(col);
                    }
                }
            }
        }
        let (basis, kept) = mgs_orth_dropping(&DenseMatrix::from_columns(&candidates), drop_tol);
        let basis = basis.ok_or(EigenError::TooFewDirections { kept: 0, needed: k })?;
        if basis.width() < k {
            return Err(EigenError::TooFewDirections {
                kept: basis.width(),
                needed: k,
            });
        }

        let m = basis.width();
        // the leading basis columns are V itself, whose products are known
        let hq: Vec<DenseVector<T>> = (0..m)
            .map(|j| match kept.get(j) {
                Some(&src) if src == j && j < k => hv[j].clone(),
                _ => action.apply(&basis.column(j)),
            })
            .collect();
        let mut projected = DenseMatrix::zeros(m, m);
        for i in 0..m {
            let qi = basis.column(i);
            for j in 0..m {
                projected[(i, j)] = crate::linalg::dot(&qi, &hq[j]);
            }
        }
        let ritz = sym_eig(&projected.symmetrized())?;
        let (coeffs, values) = ritz.lowest(k);
        let next = basis
            .as_matrix()
            .matmul(coeffs.as_matrix())
            .map_err(EigenError::from)?;
        let next = mgs_orth(&next).map_err(|source| EigenError::RankCollapse {
            sub_iteration: 0,
            source,
        })?;

        let overlap = current.as_matrix().transpose().matmul(next.as_matrix())?;
        let direction = next.as_matrix().sub(&current.as_matrix().matmul(&overlap)?)?;
        state = LobpcgState {
            previous_direction: Some(direction),
            ritz_values: values,
        };
        current = next;
    }
    Ok((current, state))
}

/// Result of one eigenvector step.
#[derive(Clone, Debug)]
pub struct EigenSolOutput<T> {
    pub frame: OrthoFrame<T>,
    pub state: LobpcgState<T>,
    /// Projector distance to the exact eigenframe at `x` (diagnostics only).
    pub alpha: Option<T>,
}

/// Dispatches to the configured solver, warm-started from `warm`.
pub fn eigensol<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    warm: &OrthoFrame<T>,
    state: LobpcgState<T>,
    cfg: &EigenSolverConfig<T>,
) -> Result<EigenSolOutput<T>, EigenError> {
    cfg.validate()?;
    let k = warm.width();
    if warm.dim() != landscape.dim() {
        return Err(EigenError::BadWidth {
            k,
            width: warm.width(),
            dim: landscape.dim(),
        });
    }
    match cfg.method {
        EigenMethod::Exact => {
            let (frame, _) = exact_k_smallest(&landscape.hessian(x), k)?;
            Ok(EigenSolOutput {
                frame,
                state,
                alpha: cfg.diagnostics.then(T::zero),
            })
        }
        EigenMethod::Sirqit => {
            let frame = sirqit_step(landscape, x, warm, cfg)?;
            let alpha = diagnose(landscape, x, &frame, cfg)?;
            Ok(EigenSolOutput { frame, state, alpha })
        }
        EigenMethod::Lobpcg => {
            let (frame, state) = lobpcg_step(landscape, x, warm, state, cfg)?;
            let alpha = diagnose(landscape, x, &frame, cfg)?;
            Ok(EigenSolOutput { frame, state, alpha })
        }
    }
}

fn diagnose<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    frame: &OrthoFrame<T>,
    cfg: &EigenSolverConfig<T>,
) -> Result<Option<T>, EigenError> {
    if !cfg.diagnostics {
        return Ok(None);
    }
    Ok(Some(eigenframe_error(landscape, x, frame)?))
}

/// Projector distance between `frame` and the exact eigenframe of its width at `x`.
pub fn eigenframe_error<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    frame: &OrthoFrame<T>,
) -> Result<T, EigenError> {
    let (exact, _) = exact_k_smallest(&landscape.hessian(x), frame.width())?;
    Ok(subspace_gap(&exact, frame)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{make_benchmark, Benchmark, BenchmarkSpec};
    use crate::linalg::projector_distance;

    fn diag_quadratic(values: &[f64]) -> Benchmark<f64> {
        make_benchmark(BenchmarkSpec::Quadratic {
            matrix: DenseMatrix::diagonal(values),
        })
        .unwrap()
    }

    fn perturbed_start() -> OrthoFrame<f64> {
        mgs_orth(&DenseMatrix::from_rows_f64(&[&[1.0, 0.0], &[0.0, 1.0], &[0.1, 0.1]])).unwrap()
    }

    #[test]
    fn exact_k_smallest_diagonal() {
        let (frame, values) = exact_k_smallest(&DenseMatrix::diagonal(&[-2.0, -1.0, 3.0]), 2).unwrap();
        assert_eq!(values, vec![-2.0, -1.0]);
        let target = OrthoFrame::coordinate(3, 2);
        assert!(projector_distance(&frame, &target).unwrap() < 1e-14);
        let (full, _) = exact_k_smallest(&DenseMatrix::diagonal(&[-2.0, -1.0, 3.0]), 3).unwrap();
        assert!(full.orthonormality_defect() < 1e-15);
        assert!(exact_k_smallest(&DenseMatrix::<f64>::identity(2), 3).is_err());
    }

    #[test]
    fn sirqit_fixed_point() {
        let q = diag_quadratic(&[-2.0, -1.0, 3.0]);
        let v = OrthoFrame::coordinate(3, 2);
        for use_dimer in [false, true] {
            let cfg = EigenSolverConfig {
                use_dimer,
                ..EigenSolverConfig::sirqit(3).with_gamma(0.1)
            };
            let out = sirqit_step(&q, &[0.2, 0.1, -0.3], &v, &cfg).unwrap();
            assert!(projector_distance(&out, &v).unwrap() < 1e-10);
        }
    }

    #[test]
    fn sirqit_zero_step_keeps_subspace() {
        let q = diag_quadratic(&[-2.0, -1.0, 3.0]);
        let v0 = perturbed_start();
        let out = sirqit_step(&q, &[0.0; 3], &v0, &EigenSolverConfig::sirqit(1).with_gamma(0.0)).unwrap();
        assert!(projector_distance(&out, &v0).unwrap() < 1e-14);
    }

    #[test]
    fn sirqit_converges_to_lowest_subspace() {
        let q = diag_quadratic(&[-2.0, -1.0, 3.0]);
        let out = sirqit_step(&q, &[0.0; 3], &perturbed_start(), &EigenSolverConfig::sirqit(50).with_gamma(0.1)).unwrap();
        let target = OrthoFrame::coordinate(3, 2);
        assert!(projector_distance(&out, &target).unwrap() <= 1e-4);
    }

    #[test]
    fn sirqit_requires_gamma() {
        let q = diag_quadratic(&[-2.0, -1.0, 3.0]);
        assert!(matches!(
            sirqit_step(&q, &[0.0; 3], &perturbed_start(), &EigenSolverConfig::sirqit(1)),
            Err(EigenError::InvalidConfig(_))
        ));
    }

    #[test]
    fn lobpcg_fixed_point() {
        let q = diag_quadratic(&[-2.0, -1.0, 3.0]);
        let v = OrthoFrame::coordinate(3, 2);
        let (out, _) = lobpcg_step(&q, &[0.0; 3], &v, LobpcgState::empty(), &EigenSolverConfig::lobpcg(1)).unwrap();
        assert!(projector_distance(&out, &v).unwrap() < 1e-10);
    }

    #[test]
    fn lobpcg_converges_faster_than_sirqit() {
        let q = diag_quadratic(&[-2.0, -1.0, 3.0]);
        let target = OrthoFrame::coordinate(3, 2);
        let (out, _) = lobpcg_step(&q, &[0.0; 3], &perturbed_start(), LobpcgState::empty(), &EigenSolverConfig::lobpcg(10)).unwrap();
        let lob = projector_distance(&out, &target).unwrap();
        assert!(lob <= 1e-8, "{lob}");
        let s = sirqit_step(&q, &[0.0; 3], &perturbed_start(), &EigenSolverConfig::sirqit(10).with_gamma(0.1)).unwrap();
        assert!(lob < projector_distance(&s, &target).unwrap());
    }

    #[test]
    fn lobpcg_ritz_values_do_not_exceed_input_ritz_values() {
        let a = DenseMatrix::from_rows_f64(&[
            &[4.0, 1.0, 0.5, 0.0],
            &[1.0, -3.0, 0.2, 0.1],
            &[0.5, 0.2, 1.0, -0.7],
            &[0.0, 0.1, -0.7, 2.0],
        ]);
        let q = make_benchmark(BenchmarkSpec::Quadratic { matrix: a.clone() }).unwrap();
        let v = mgs_orth(&DenseMatrix::from_rows_f64(&[&[1.0, 0.2], &[0.3, 1.0], &[0.0, 0.4], &[0.5, 0.0]])).unwrap();
        let cfg = EigenSolverConfig {
            use_dimer: false,
            ..EigenSolverConfig::lobpcg(1)
        };
        let (_, state) = lobpcg_step(&q, &[0.0; 4], &v, LobpcgState::empty(), &cfg).unwrap();
        let small = v.as_matrix().transpose().matmul(&a).unwrap().matmul(v.as_matrix()).unwrap();
        let before = sym_eig(&small.symmetrized()).unwrap().values;
        for (after, before) in state.ritz_values.iter().zip(&before) {
            assert!(*after <= before + 1e-12);
        }
        let min_diag = small.diag().into_iter().fold(f64::INFINITY, f64::min);
        assert!(state.ritz_values[0] <= min_diag + 1e-12);
    }

    #[test]
    fn eigensol_dispatch_and_alpha() {
        let q = diag_quadratic(&[-2.0, -1.0, 3.0]);
        let mut cfg = EigenSolverConfig::exact();
        cfg.diagnostics = true;
        let out = eigensol(&q, &[0.0; 3], &perturbed_start(), LobpcgState::empty(), &cfg).unwrap();
        assert_eq!(out.alpha, Some(0.0));
        let mut cfg = EigenSolverConfig::sirqit(1).with_gamma(0.1);
        cfg.diagnostics = true;
        let out = eigensol(&q, &[0.0; 3], &perturbed_start(), LobpcgState::empty(), &cfg).unwrap();
        let alpha = out.alpha.unwrap();
        assert!(alpha > 0.0 && alpha < 0.2);
        assert!(out.frame.orthonormality_defect() < 1e-12);
    }
}
