//! Energy landscapes: the trait the solvers consume, the benchmark
//! functions, and derivative utilities (dimer Hessian-vector products,
//! finite-difference checks).

mod benchmarks;

pub use benchmarks::{
    make_benchmark, Benchmark, BenchmarkSpec, BIGGS_SADDLE, DEGENERACY_TOL,
};

use crate::linalg::{DenseMatrix, DenseVector};
use crate::scalar::Real;

/// Central-difference step for Hessians of landscapes without an analytic form.
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-5;

/// Default dimer half-length `l`.
pub const DEFAULT_DIMER_LENGTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LandscapeError {
    #[error("invalid benchmark: {0}")]
    InvalidSpec(String),
    #[error("dimer length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("dimer direction must have unit norm, got {0}")]
    NonUnitDirection(f64),
    #[error("dimension mismatch: landscape has d = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Smooth energy `E: ℝᵈ → ℝ` with gradient and Hessian access.
///
/// Implementations must be pure: the same input always produces the same
/// output, and concurrent calls from several threads are allowed.
pub trait EnergyLandscape<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn value(&self, x: &[T]) -> T;

    fn gradient(&self, x: &[T]) -> DenseVector<T>;

    /// `∇²E(x)`. Defaults to symmetrized central differences of the gradient.
    fn hessian(&self, x: &[T]) -> DenseMatrix<T> {
        hessian_fd(self, x, T::lit(DEFAULT_HESSIAN_STEP))
    }

    fn has_analytic_hessian(&self) -> bool {
        false
    }

    /// Known stationary point `x*`, if any.
    fn stationary_point(&self) -> Option<DenseVector<T>> {
        None
    }

    /// Morse index at `x*`, if known.
    fn morse_index(&self) -> Option<usize> {
        None
    }
}

/// Dimer approximation of `∇²E(x) v`:
/// `[∇E(x + l v) − ∇E(x − l v)] / (2 l)`.
pub fn dimer_hvp<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    v: &[T],
    l: T,
) -> Result<DenseVector<T>, LandscapeError> {
    check_dim(landscape, x)?;
    check_dim(landscape, v)?;
    if !(l > T::zero()) {
        return Err(LandscapeError::NonPositiveLength(l.as_f64()));
    }
    let vn = crate::linalg::norm(v);
    if (vn - T::one()).abs() > T::tol(1e-8) {
        return Err(LandscapeError::NonUnitDirection(vn.as_f64()));
    }
    Ok(dimer_unchecked(landscape, x, v, l))
}

pub(crate) fn dimer_unchecked<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    v: &[T],
    l: T,
) -> DenseVector<T> {
    let plus: Vec<T> = x.iter().zip(v).map(|(&a, &b)| a + l * b).collect();
    let minus: Vec<T> = x.iter().zip(v).map(|(&a, &b)| a - l * b).collect();
    let gp = landscape.gradient(&plus);
    let gm = landscape.gradient(&minus);
    gp.sub(&gm).scaled(T::one() / (l + l))
}

/// `‖dimer(l) − Hv‖₂ / ‖dimer(l/2) − Hv‖₂` against the landscape's Hessian.
///
/// The dimer is a central difference, so the ratio tends to 4 while the
/// truncation error dominates rounding.
pub fn dimer_error_ratio<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    v: &[T],
    l: T,
) -> Result<T, LandscapeError> {
    let exact = landscape.hessian(x).matvec(v);
    let coarse = dimer_hvp(landscape, x, v, l)?.distance(&exact);
    let fine = dimer_hvp(landscape, x, v, l / T::lit(2.0))?.distance(&exact);
    Ok(coarse / fine)
}

/// `max_i |FD_i(E) − ∇E(x)_i| / (1 + |∇E(x)_i|)` with central differences of step `h`.
pub fn gradient_check<T: Real, L: EnergyLandscape<T> + ?Sized>(landscape: &L, x: &[T], h: T) -> T {
    let g = landscape.gradient(x);
    let mut probe = x.to_vec();
    let mut worst = T::zero();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let ep = landscape.value(&probe);
        probe[i] = x[i] - h;
        let em = landscape.value(&probe);
        probe[i] = x[i];
        let fd = (ep - em) / (h + h);
        worst = worst.max((fd - g[i]).abs() / (T::one() + g[i].abs()));
    }
    worst
}

/// Central differences of the gradient, symmetrized as `(H + Hᵀ)/2`.
pub fn hessian_fd<T: Real, L: EnergyLandscape<T> + ?Sized>(
    landscape: &L,
    x: &[T],
    h: T,
) -> DenseMatrix<T> {
    let d = x.len();
    let mut columns = Vec::with_capacity(d);
    let mut probe = x.to_vec();
    for i in 0..d {
        probe[i] = x[i] + h;
        let gp = landscape.gradient(&probe);
        probe[i] = x[i] - h;
        let gm = landscape.gradient(&probe);
        probe[i] = x[i];
        columns.push(gp.sub(&gm).scaled(T::one() / (h + h)).into_inner());
    }
    DenseMatrix::from_columns(&columns).symmetrized()
}

fn check_dim<T: Real, L: EnergyLandscape<T> + ?Sized>(landscape: &L, x: &[T]) -> Result<(), LandscapeError> {
    if x.len() != landscape.dim() {
        return Err(LandscapeError::DimensionMismatch {
            expected: landscape.dim(),
            got: x.len(),
        });
    }
    Ok(())
}
