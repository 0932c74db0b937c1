use std::sync::OnceLock;

use super::{EnergyLandscape, LandscapeError};
use crate::linalg::{dot, sym_eig, DenseMatrix, DenseVector};
use crate::scalar::Real;

/// Eigenvalues with `|λ| < DEGENERACY_TOL` make a Morse index undefined.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Stationary point of the Biggs EXP6 benchmark.
pub const BIGGS_SADDLE: [f64; 6] = [1.0, 10.0, 1.0, 5.0, 4.0, 3.0];

/// Benchmark description: which function, its coefficients `s` and how
/// many leading coordinates get the negative `arctan²` modification.
///
/// The modified energy is `F(x) − Σ_{i≤m} sᵢ atan²(xᵢ−x*ᵢ) + Σ_{i>m} sᵢ atan²(xᵢ−x*ᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub enum BenchmarkSpec<T> {
    /// `½ xᵀ A x`, stationary at the origin.
    Quadratic { matrix: DenseMatrix<T> },
    /// Modified Powell singular function in 4 dimensions.
    Powell { s: Vec<T>, modified: usize },
    /// Modified Biggs EXP6 function in 6 dimensions.
    Biggs { s: Vec<T>, modified: usize },
    /// Modified Rosenbrock function in `s.len()` dimensions.
    Rosenbrock { s: Vec<T>, modified: usize },
}

impl<T: Real> BenchmarkSpec<T> {
    /// Powell with `s = (s1, s2, s3, s4)` and three modified coordinates.
    pub fn powell(s: [f64; 4]) -> Self {
        Self::Powell {
            s: s.iter().map(|&v| T::lit(v)).collect(),
            modified: 3,
        }
    }

    /// The three coefficient sets whose Hessian condition numbers are 11.56, 26.35 and 46.38.
    pub fn powell_case(case: usize) -> Self {
        match case {
            1 => Self::powell([10.0, 12.0, 12.0, 1.0]),
            2 => Self::powell([10.0, 6.0, 6.0, 1.0]),
            3 => Self::powell([10.0, 4.0, 4.0, 1.0]),
            _ => panic!("Powell cases are 1, 2, 3"),
        }
    }

    /// Biggs with `s = (4, 8, 16, 8, 4, 2)` and four modified coordinates (index-4 saddle).
    pub fn biggs_standard() -> Self {
        Self::Biggs {
            s: [4.0, 8.0, 16.0, 8.0, 4.0, 2.0].iter().map(|&v| T::lit(v)).collect(),
            modified: 4,
        }
    }

    /// Rosenbrock in `dim` dimensions, first `modified` coordinates with
    /// `s = 200`, the rest with `s = 1`. `(400, 20)` gives an index-5 saddle.
    pub fn rosenbrock(dim: usize, modified: usize) -> Self {
        Self::Rosenbrock {
            s: (0..dim)
                .map(|i| if i < modified { T::lit(200.0) } else { T::one() })
                .collect(),
            modified,
        }
    }
}

#[derive(Clone, Debug)]
enum Family<T> {
    Quadratic(DenseMatrix<T>),
    Powell,
    Biggs,
    Rosenbrock,
}

/// A benchmark landscape built by [`make_benchmark`].
#[derive(Debug)]
pub struct Benchmark<T> {
    family: Family<T>,
    name: String,
    dim: usize,
    /// `±sᵢ`, negative on modified coordinates.
    signed_s: Vec<T>,
    center: Vec<T>,
    morse: OnceLock<Option<usize>>,
}

/// Validates `spec` and builds the landscape.
pub fn make_benchmark<T: Real>(spec: BenchmarkSpec<T>) -> Result<Benchmark<T>, LandscapeError> {
    let invalid = |msg: String| Err(LandscapeError::InvalidSpec(msg));
    let signed = |s: &[T], modified: usize| -> Vec<T> {
        s.iter()
            .enumerate()
            .map(|(i, &v)| if i < modified { -v } else { v })
            .collect()
    };
    let (family, name, signed_s, center) = match spec {
        BenchmarkSpec::Quadratic { matrix } => {
            if !matrix.is_square() || matrix.nrows() == 0 {
                return invalid(format!("quadratic matrix must be square, got {:?}", matrix.shape()));
            }
            if !matrix.is_symmetric() || !matrix.is_finite() {
                return invalid("quadratic matrix must be finite and symmetric".into());
            }
            let d = matrix.nrows();
            (
                Family::Quadratic(matrix.symmetrized()),
                "quadratic".to_string(),
                vec![T::zero(); d],
                vec![T::zero(); d],
            )
        }
        BenchmarkSpec::Powell { s, modified } => {
            if s.len() != 4 || modified > 4 {
                return invalid(format!("powell needs 4 coefficients and modified ≤ 4, got {} and {modified}", s.len()));
            }
            (Family::Powell, format!("powell_m{modified}"), signed(&s, modified), vec![T::zero(); 4])
        }
        BenchmarkSpec::Biggs { s, modified } => {
            if s.len() != 6 || modified > 6 {
                return invalid(format!("biggs needs 6 coefficients and modified ≤ 6, got {} and {modified}", s.len()));
            }
            (
                Family::Biggs,
                format!("biggs_m{modified}"),
                signed(&s, modified),
                BIGGS_SADDLE.iter().map(|&v| T::lit(v)).collect(),
            )
        }
        BenchmarkSpec::Rosenbrock { s, modified } => {
            if s.len() < 2 || modified > s.len() {
                return invalid(format!("rosenbrock needs d ≥ 2 and modified ≤ d, got {} and {modified}", s.len()));
            }
            let d = s.len();
            (
                Family::Rosenbrock,
                format!("rosenbrock_d{d}_m{modified}"),
                signed(&s, modified),
                vec![T::one(); d],
            )
        }
    };
    if signed_s.iter().any(|v| !v.is_finite()) {
        return invalid("coefficients must be finite".into());
    }
    Ok(Benchmark {
        dim: center.len(),
        family,
        name,
        signed_s,
        center,
        morse: OnceLock::new(),
    })
}

impl<T: Real> Benchmark<T> {
    fn arctan_value(&self, x: &[T]) -> T {
        self.signed_s
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(&s, (&xi, &ci))| {
                let a = (xi - ci).atan();
                s * a * a
            })
            .sum()
    }

    fn add_arctan_gradient(&self, x: &[T], g: &mut [T]) {
        let two = T::lit(2.0);
        for i in 0..x.len() {
            let u = x[i] - self.center[i];
            g[i] = g[i] + self.signed_s[i] * two * u.atan() / (T::one() + u * u);
        }
    }

    fn add_arctan_hessian(&self, x: &[T], h: &mut DenseMatrix<T>) {
        let two = T::lit(2.0);
        for i in 0..x.len() {
            let u = x[i] - self.center[i];
            let q = T::one() + u * u;
            h[(i, i)] = h[(i, i)] + self.signed_s[i] * (two - two * two * u * u.atan()) / (q * q);
        }
    }

    /// Signed coefficients: `−sᵢ` on modified coordinates, `+sᵢ` elsewhere.
    pub fn signed_coefficients(&self) -> &[T] {
        &self.signed_s
    }
}

fn biggs_times<T: Real>() -> [T; 6] {
    std::array::from_fn(|i| T::lit((i + 1) as f64 / 10.0))
}

/// `yᵢ = e^{−tᵢ} − 5 e^{−10tᵢ} + 3 e^{−4tᵢ}`, so every residual vanishes at the saddle.
fn biggs_data<T: Real>(t: T) -> T {
    (-t).exp() - T::lit(5.0) * (-T::lit(10.0) * t).exp() + T::lit(3.0) * (-T::lit(4.0) * t).exp()
}

/// Residual `rᵢ(x)` and its gradient with respect to `x`.
fn biggs_residual<T: Real>(x: &[T], t: T) -> (T, [T; 6]) {
    let e1 = (-t * x[0]).exp();
    let e2 = (-t * x[1]).exp();
    let e5 = (-t * x[4]).exp();
    let r = x[2] * e1 - x[3] * e2 + x[5] * e5 - biggs_data(t);
    let dr = [-t * x[2] * e1, t * x[3] * e2, e1, -e2, -t * x[5] * e5, e5];
    (r, dr)
}

fn powell_value<T: Real>(x: &[T]) -> T {
    let a = x[0] + T::lit(10.0) * x[1];
    let b = x[2] - x[3];
    let c = x[1] - T::lit(2.0) * x[2];
    let e = x[0] - x[3];
    a * a + T::lit(5.0) * b * b + c.powi(4) + T::lit(10.0) * e.powi(4)
}

fn powell_gradient<T: Real>(x: &[T]) -> Vec<T> {
    let a = x[0] + T::lit(10.0) * x[1];
    let b = x[2] - x[3];
    let c3 = (x[1] - T::lit(2.0) * x[2]).powi(3);
    let e3 = (x[0] - x[3]).powi(3);
    let two = T::lit(2.0);
    vec![
        two * a + T::lit(40.0) * e3,
        T::lit(20.0) * a + T::lit(4.0) * c3,
        T::lit(10.0) * b - T::lit(8.0) * c3,
        -T::lit(10.0) * b - T::lit(40.0) * e3,
    ]
}

fn powell_hessian<T: Real>(x: &[T]) -> DenseMatrix<T> {
    let c2 = T::lit(12.0) * (x[1] - T::lit(2.0) * x[2]).powi(2);
    let e2 = T::lit(120.0) * (x[0] - x[3]).powi(2);
    let mut h = DenseMatrix::zeros(4, 4);
    let mut add = |i: usize, j: usize, v: T| {
        h[(i, j)] = h[(i, j)] + v;
        if i != j {
            h[(j, i)] = h[(j, i)] + v;
        }
    };
    // (x1 + 10 x2)²
    add(0, 0, T::lit(2.0));
    add(0, 1, T::lit(20.0));
    add(1, 1, T::lit(200.0));
    // 5 (x3 − x4)²
    add(2, 2, T::lit(10.0));
    add(2, 3, T::lit(-10.0));
    add(3, 3, T::lit(10.0));
    // (x2 − 2 x3)⁴
    add(1, 1, c2);
    add(1, 2, -T::lit(2.0) * c2);
    add(2, 2, T::lit(4.0) * c2);
    // 10 (x1 − x4)⁴
    add(0, 0, e2);
    add(0, 3, -e2);
    add(3, 3, e2);
    h
}

fn rosenbrock_value<T: Real>(x: &[T]) -> T {
    x.windows(2)
        .map(|w| {
            let a = w[1] - w[0] * w[0];
            let b = T::one() - w[0];
            T::lit(100.0) * a * a + b * b
        })
        .sum()
}

fn rosenbrock_gradient<T: Real>(x: &[T]) -> Vec<T> {
    let mut g = vec![T::zero(); x.len()];
    for i in 0..x.len() - 1 {
        let a = x[i + 1] - x[i] * x[i];
        g[i] = g[i] - T::lit(400.0) * x[i] * a - T::lit(2.0) * (T::one() - x[i]);
        g[i + 1] = g[i + 1] + T::lit(200.0) * a;
    }
    g
}

impl<T: Real> EnergyLandscape<T> for Benchmark<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        let base = match &self.family {
            Family::Quadratic(a) => T::lit(0.5) * dot(x, &a.matvec(x)),
            Family::Powell => powell_value(x),
            Family::Biggs => biggs_times::<T>()
                .iter()
                .map(|&t| {
                    let (r, _) = biggs_residual(x, t);
                    r * r
                })
                .sum(),
            Family::Rosenbrock => rosenbrock_value(x),
        };
        base + self.arctan_value(x)
    }

    fn gradient(&self, x: &[T]) -> DenseVector<T> {
        debug_assert_eq!(x.len(), self.dim);
        let mut g = match &self.family {
            Family::Quadratic(a) => a.matvec(x).into_inner(),
            Family::Powell => powell_gradient(x),
            Family::Biggs => {
                let mut g = vec![T::zero(); 6];
                for t in biggs_times::<T>() {
                    let (r, dr) = biggs_residual(x, t);
                    for (gi, dri) in g.iter_mut().zip(dr) {
                        *gi = *gi + T::lit(2.0) * r * dri;
                    }
                }
                g
            }
            Family::Rosenbrock => rosenbrock_gradient(x),
        };
        self.add_arctan_gradient(x, &mut g);
        g.into()
    }

    fn hessian(&self, x: &[T]) -> DenseMatrix<T> {
        match &self.family {
            Family::Quadratic(a) => a.clone(),
            Family::Powell => {
                let mut h = powell_hessian(x);
                self.add_arctan_hessian(x, &mut h);
                h
            }
            Family::Biggs | Family::Rosenbrock => {
                super::hessian_fd(self, x, T::lit(super::DEFAULT_HESSIAN_STEP))
            }
        }
    }

    fn has_analytic_hessian(&self) -> bool {
        matches!(self.family, Family::Quadratic(_) | Family::Powell)
    }

    fn stationary_point(&self) -> Option<DenseVector<T>> {
        Some(DenseVector::from_slice(&self.center))
    }

    /// Negative-eigenvalue count of `∇²E(x*)`; `None` if the Hessian has an
    /// eigenvalue within [`DEGENERACY_TOL`] of zero.
    fn morse_index(&self) -> Option<usize> {
        *self.morse.get_or_init(|| {
            let spectrum = sym_eig(&self.hessian(&self.center)).ok()?;
            if spectrum.closest_to_zero().abs() < T::lit(DEGENERACY_TOL) {
                return None;
            }
            Some(spectrum.negative_count())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{dimer_hvp, gradient_check, hessian_fd};
    use super::*;
    use crate::linalg::norm;

    fn build(spec: BenchmarkSpec<f64>) -> Benchmark<f64> {
        make_benchmark(spec).unwrap()
    }

    #[test]
    fn powell_hessian_at_saddle() {
        let p = build(BenchmarkSpec::powell_case(1));
        let h = p.hessian(&[0.0; 4]);
        let expected = DenseMatrix::from_rows_f64(&[
            &[-18.0, 20.0, 0.0, 0.0],
            &[20.0, 176.0, 0.0, 0.0],
            &[0.0, 0.0, -14.0, -10.0],
            &[0.0, 0.0, -10.0, 12.0],
        ]);
        assert_eq!(h, expected);
        let fd = hessian_fd(&p, &[0.0; 4], 1e-5);
        for (a, b) in fd.as_slice().iter().zip(expected.as_slice()) {
            assert!((a - b).abs() < 1e-5);
        }
        assert_eq!(p.morse_index(), Some(2));
    }

    #[test]
    fn powell_gradient_matches_fd() {
        let p = build(BenchmarkSpec::powell_case(1));
        assert!(gradient_check(&p, &[-0.15, 0.2, 0.0, -0.2], 1e-6) <= 1e-6);
    }

    #[test]
    fn powell_analytic_hessian_matches_fd_off_center() {
        let p = build(BenchmarkSpec::powell_case(2));
        let x = [0.3, -0.2, 0.1, 0.25];
        let fd = hessian_fd(&p, &x, 1e-5);
        let an = p.hessian(&x);
        for (a, b) in fd.as_slice().iter().zip(an.as_slice()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn biggs_is_stationary_index_four() {
        let b = build(BenchmarkSpec::biggs_standard());
        let g = b.gradient(&BIGGS_SADDLE);
        assert!(norm(&g) <= 1e-10, "‖∇B(x*)‖ = {}", norm(&g));
        assert_eq!(b.morse_index(), Some(4));
        assert!(gradient_check(&b, &[0.0, 9.0, 1.0, 5.0, 4.0, 3.0], 1e-6) <= 1e-6);
    }

    #[test]
    fn biggs_dimer_is_second_order() {
        let b = build(BenchmarkSpec::biggs_standard());
        let x = [0.0, 9.0, 1.0, 5.0, 4.0, 3.0];
        let raw = [0.3, -0.5, 0.2, 0.7, -0.1, 0.4];
        let n = norm(&raw);
        let v: Vec<f64> = raw.iter().map(|r| r / n).collect();
        let oracle = hessian_fd(&b, &x, 1e-6).matvec(&v);
        let err = |l: f64| norm(&dimer_hvp(&b, &x, &v, l).unwrap().sub(&oracle));
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn plain_rosenbrock_hessian_diagonal() {
        let r = build(BenchmarkSpec::Rosenbrock {
            s: vec![0.0; 6],
            modified: 0,
        });
        let h = r.hessian(&[1.0; 6]);
        let diag = h.diag();
        for (got, want) in diag.iter().zip([802.0, 1002.0, 1002.0, 1002.0, 1002.0, 200.0]) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn rosenbrock_400_is_index_five() {
        let r = build(BenchmarkSpec::rosenbrock(400, 20));
        assert!(norm(&r.gradient(&[1.0; 400])) <= 1e-10);
        assert_eq!(r.morse_index(), Some(5));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(make_benchmark(BenchmarkSpec::<f64>::Powell {
            s: vec![1.0; 3],
            modified: 3
        })
        .is_err());
        assert!(make_benchmark(BenchmarkSpec::<f64>::Biggs {
            s: vec![1.0; 6],
            modified: 7
        })
        .is_err());
        assert!(make_benchmark(BenchmarkSpec::Quadratic {
            matrix: DenseMatrix::<f64>::from_rows_f64(&[&[1.0, 2.0], &[0.0, 1.0]])
        })
        .is_err());
    }

    #[test]
    fn single_precision_landscape() {
        let p = make_benchmark(BenchmarkSpec::<f32>::powell_case(1)).unwrap();
        let g = p.gradient(&[0.0; 4]);
        assert!(g.iter().all(|v| *v == 0.0));
        assert_eq!(p.morse_index(), Some(2));
    }
}
