use super::frame::OrthoFrame;
use super::matrix::DenseMatrix;
use super::LinalgError;
use crate::scalar::Real;

/// Maximum number of full cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 100;

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum<T> {
    pub values: Vec<T>,
    pub vectors: OrthoFrame<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvectors and eigenvalues of the `k` smallest eigenvalues.
    pub fn lowest(&self, k: usize) -> (OrthoFrame<T>, Vec<T>) {
        assert!(k >= 1 && k <= self.dim(), "k out of range");
        (self.vectors.leading(k), self.values[..k].to_vec())
    }

    /// Number of strictly negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        self.values.iter().filter(|v| **v < T::zero()).count()
    }

    /// Eigenvalue of smallest magnitude.
    pub fn closest_to_zero(&self) -> T {
        self.values
            .iter()
            .copied()
            .min_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("finite eigenvalues"))
            .unwrap_or_else(T::zero)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `V diag(λ) Vᵀ`
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let d = self.dim();
        let mut out = DenseMatrix::zeros(d, d);
        for (i, &lambda) in self.values.iter().enumerate() {
            let v = self.vectors.column(i);
            out.add_outer(lambda, &v, &v);
        }
        out
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-14 * ‖A‖_F`. Eigenvalues are sorted ascending; ties keep their
/// diagonal order.
pub fn sym_eig<T: Real>(a: &DenseMatrix<T>) -> Result<Spectrum<T>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSymmetric {
            defect: f64::INFINITY,
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { op: "sym_eig" });
    }
    if !a.is_symmetric() {
        return Err(LinalgError::NotSymmetric {
            defect: a.symmetry_defect().as_f64(),
        });
    }
    let n = a.nrows();
    let mut m = a.symmetrized();
    // rows of `vt` are the eigenvectors, so rotations touch contiguous memory
    let mut vt = DenseMatrix::identity(n);
    let threshold = T::tol(1e-14) * a.frobenius_norm();

    let mut converged = false;
    let mut off = off_diagonal_norm(&m);
    for sweep in 0..MAX_SWEEPS {
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // after a few sweeps, entries below the diagonal's resolution are noise
                let g = T::lit(100.0) * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[(p, q)] = T::zero();
                    m[(q, p)] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (apq + apq);
                let t = if theta.abs() > T::max_value().sqrt() {
                    T::one() / (theta + theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                rotate_symmetric(&mut m, p, q, c, s);
                m[(p, p)] = app - t * apq;
                m[(q, q)] = aqq + t * apq;
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        off = off_diagonal_norm(&m);
    }
    if !converged && off > threshold {
        return Err(LinalgError::NotConverged {
            sweeps: MAX_SWEEPS,
            residual: off.as_f64(),
        });
    }

    let diag = m.diag();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps original index order on ties
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| vt[(order[c], r)]);
    Ok(Spectrum {
        values,
        vectors: OrthoFrame::from_matrix_unchecked(vectors),
    })
}

/// `A ← JᵀAJ` off the `(p, q)` block for the plane rotation in coordinates `(p, q)`;
/// the caller sets the 2 × 2 block.
fn rotate_symmetric<T: Real>(m: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    let n = m.nrows();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let a = row_p[k];
        let b = row_q[k];
        row_p[k] = c * a - s * b;
        row_q[k] = s * a + c * b;
    }
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let (a, b) = (data[p * n + k], data[q * n + k]);
        data[k * n + p] = a;
        data[k * n + q] = b;
    }
}

/// Rows `p < q` of `v` rotated: `(v_p, v_q) ← (c v_p − s v_q, s v_p + c v_q)`.
fn rotate_rows<T: Real>(v: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    let n = v.ncols();
    let (head, tail) = v.as_mut_slice().split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for (a, b) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

fn off_diagonal_norm<T: Real>(m: &DenseMatrix<T>) -> T {
    let n = m.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Spectral norm `‖A‖₂ = sqrt(λ_max(AᵀA))`; for symmetric `A`, `max |λᵢ|`.
pub fn operator_norm<T: Real>(a: &DenseMatrix<T>) -> Result<T, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { op: "operator_norm" });
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(T::zero());
    }
    if a.is_square() && a.is_symmetric() {
        return Ok(sym_eig(a)?.max_abs());
    }
    // work with the smaller Gram matrix
    let gram = if a.ncols() <= a.nrows() {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let top = sym_eig(&gram)?.values.last().copied().unwrap_or_else(T::zero);
    Ok(top.max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    fn residual(a: &M, s: &Spectrum<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..s.dim() {
            let v = s.vectors.column(i);
            let av = a.matvec(&v);
            let r: f64 = av
                .iter()
                .zip(&v)
                .map(|(x, y)| (x - s.values[i] * y).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    #[test]
    fn diagonal_matrix_sorts_and_permutes() {
        let a = M::diagonal(&[3.0, 1.0, 2.0]);
        let s = sym_eig(&a).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
        let expected_cols = [1usize, 2, 0];
        for (c, &e) in expected_cols.iter().enumerate() {
            let col = s.vectors.column(c);
            for (r, x) in col.iter().enumerate() {
                assert_eq!(x.abs(), if r == e { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn two_by_two_powell_block() {
        // det = 2·200 − 20² = 0, trace 202: the block is singular
        let a = M::from_rows_f64(&[&[2.0, 20.0], &[20.0, 200.0]]);
        let s = sym_eig(&a).unwrap();
        assert!(s.values[0].abs() < 1e-12);
        assert!((s.values[1] - 202.0).abs() < 1e-12);
    }

    #[test]
    fn modified_powell_hessian_blocks() {
        let a = M::from_rows_f64(&[
            &[-18.0, 20.0, 0.0, 0.0],
            &[20.0, 176.0, 0.0, 0.0],
            &[0.0, 0.0, -14.0, -10.0],
            &[0.0, 0.0, -10.0, 12.0],
        ]);
        let s = sym_eig(&a).unwrap();
        // roots of λ² − 158λ − 3568 and λ² + 2λ − 268
        let r1 = 79.0 - (79.0f64 * 79.0 + 3568.0).sqrt();
        let r2 = -1.0 - 269.0f64.sqrt();
        let r3 = -1.0 + 269.0f64.sqrt();
        let r4 = 79.0 + (79.0f64 * 79.0 + 3568.0).sqrt();
        for (got, want) in s.values.iter().zip([r1, r2, r3, r4]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((s.values[0] + 20.04).abs() < 5e-3);
        assert!((s.values[1] + 17.40).abs() < 5e-3);
        assert!((s.values[2] - 15.40).abs() < 5e-3);
        assert!((s.values[3] - 178.04).abs() < 5e-3);
        assert!(residual(&a, &s) <= 1e-10 * s.max_abs());
    }

    #[test]
    fn rejects_nonsymmetric() {
        let a = M::from_rows_f64(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(sym_eig(&a), Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn repeated_eigenvalues_give_orthonormal_basis() {
        let a = M::from_rows_f64(&[&[2.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 5.0]]);
        let s = sym_eig(&a).unwrap();
        assert_eq!(s.values, vec![2.0, 2.0, 5.0]);
        assert!(s.vectors.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let a = DenseMatrix::<f32>::from_rows_f64(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let s = sym_eig(&a).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-5);
        assert!((s.values[1] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn operator_norm_basic() {
        assert_eq!(operator_norm(&M::identity(3)).unwrap(), 1.0);
        assert_eq!(operator_norm(&M::diagonal(&[-5.0, 2.0])).unwrap(), 5.0);
        let a = M::from_rows_f64(&[&[0.0, 3.0], &[0.0, 0.0]]);
        assert!((operator_norm(&a).unwrap() - 3.0).abs() < 1e-14);
        let wide = M::from_rows_f64(&[&[3.0, 4.0]]);
        assert!((operator_norm(&wide).unwrap() - 5.0).abs() < 1e-14);
    }
}
