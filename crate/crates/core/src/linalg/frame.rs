use super::eig::{operator_norm, sym_eig};
use super::matrix::DenseMatrix;
use super::vector::{dot, norm, DenseVector};
use super::LinalgError;
use crate::scalar::Real;

/// Column-orthonormal `d × k` matrix: the direction block `V̂` of the dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoFrame<T> {
    columns: DenseMatrix<T>,
}

impl<T: Real> OrthoFrame<T> {
    /// Wraps `m` after checking `mᵀm = I` to `1e-12` per entry.
    pub fn from_orthonormal(m: DenseMatrix<T>) -> Result<Self, LinalgError> {
        if m.ncols() == 0 || m.ncols() > m.nrows() {
            return Err(LinalgError::BadFrameWidth {
                dim: m.nrows(),
                width: m.ncols(),
            });
        }
        let frame = Self { columns: m };
        let defect = frame.orthonormality_defect();
        if defect > T::tol(1e-12) {
            return Err(LinalgError::NotOrthonormal {
                defect: defect.as_f64(),
            });
        }
        Ok(frame)
    }

    pub(crate) fn from_matrix_unchecked(m: DenseMatrix<T>) -> Self {
        Self { columns: m }
    }

    /// The first `k` columns of the `d × d` identity.
    pub fn coordinate(dim: usize, k: usize) -> Self {
        Self::from_matrix_unchecked(DenseMatrix::identity(dim).column_block(0, k))
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn width(&self) -> usize {
        self.columns.ncols()
    }

    pub fn as_matrix(&self) -> &DenseMatrix<T> {
        &self.columns
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.columns
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        self.columns.column(i)
    }

    /// First `k` columns.
    pub fn leading(&self, k: usize) -> Self {
        Self::from_matrix_unchecked(self.columns.column_block(0, k))
    }

    /// Columns `k..width`.
    pub fn trailing(&self, k: usize) -> Self {
        Self::from_matrix_unchecked(self.columns.column_block(k, self.width()))
    }

    /// `max |VᵀV − I|` entrywise.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.columns.gram();
        let mut worst = T::zero();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Coordinates `Vᵀx`.
    pub fn coords(&self, x: &[T]) -> DenseVector<T> {
        self.columns.tr_matvec(x)
    }

    /// `V c`
    pub fn combine(&self, c: &[T]) -> DenseVector<T> {
        self.columns.matvec(c)
    }

    /// Reflected vector `(I − 2VVᵀ)g`, without forming the `d × d` matrix.
    pub fn reflect(&self, g: &[T]) -> DenseVector<T> {
        let c = self.coords(g);
        let mut out = DenseVector::from_slice(g);
        out.axpy(-(T::one() + T::one()), &self.combine(&c));
        out
    }

    /// Orthogonal projector `VVᵀ`.
    pub fn projector(&self) -> DenseMatrix<T> {
        self.columns.matmul(&self.columns.transpose()).expect("conformable")
    }

    /// `VQ`, another basis of the same subspace when `Q` is orthogonal.
    pub fn rotated(&self, q: &DenseMatrix<T>) -> Result<Self, LinalgError> {
        Ok(Self::from_matrix_unchecked(self.columns.matmul(q)?))
    }

    /// Orthonormal basis of the orthogonal complement, `d × (d − k)`.
    /// `None` when the frame already spans the whole space.
    pub fn complement(&self) -> Option<Self> {
        let d = self.dim();
        if self.width() == d {
            return None;
        }
        let candidates = self.columns.hstack(&DenseMatrix::identity(d));
        let (basis, _) = mgs_orth_dropping(&candidates, T::tol(1e-8));
        let basis = basis?;
        debug_assert_eq!(basis.width(), d);
        Some(basis.trailing(self.width()))
    }

    /// Completes the frame to a `d × d` orthogonal basis `[V, V⊥]`.
    pub fn completed(&self) -> Self {
        match self.complement() {
            Some(c) => Self::from_matrix_unchecked(self.columns.hstack(c.as_matrix())),
            None => self.clone(),
        }
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
///
/// Column `i` of the output lies in the span of the first `i + 1` input
/// columns. Fails on the first column whose residual falls below
/// `1e-10` times the largest input column norm.
pub fn mgs_orth<T: Real>(columns: &DenseMatrix<T>) -> Result<OrthoFrame<T>, LinalgError> {
    let (d, k) = columns.shape();
    if k == 0 || k > d {
        return Err(LinalgError::BadFrameWidth { dim: d, width: k });
    }
    if !columns.is_finite() {
        return Err(LinalgError::NonFinite { op: "mgs_orth" });
    }
    let cols = columns.columns();
    let scale = cols.iter().map(|c| norm(c)).fold(T::zero(), T::max);
    let threshold = T::tol(1e-10) * scale;
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(k);
    for (i, col) in cols.into_iter().enumerate() {
        let w = orthogonalize(col, &basis);
        let n = norm(&w);
        if n <= threshold || scale == T::zero() {
            return Err(LinalgError::RankDeficient { column: i });
        }
        basis.push(w.into_iter().map(|v| v / n).collect());
    }
    Ok(OrthoFrame::from_matrix_unchecked(DenseMatrix::from_columns(&basis)))
}

/// MGS that drops near-dependent columns instead of failing.
///
/// A column is dropped when its residual after projection is at most
/// `tol` times its own input norm. Returns the frame (if any column
/// survives) and the indices of the kept input columns.
pub fn mgs_orth_dropping<T: Real>(
    columns: &DenseMatrix<T>,
    tol: T,
) -> (Option<OrthoFrame<T>>, Vec<usize>) {
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut kept = Vec::new();
    for (i, col) in columns.columns().into_iter().enumerate() {
        if basis.len() == columns.nrows() {
            break;
        }
        let n0 = norm(&col);
        if n0 == T::zero() || !n0.is_finite() {
            continue;
        }
        let w = orthogonalize(col, &basis);
        let n = norm(&w);
        if n <= tol * n0 {
            continue;
        }
        basis.push(w.into_iter().map(|v| v / n).collect());
        kept.push(i);
    }
    if basis.is_empty() {
        return (None, kept);
    }
    (
        Some(OrthoFrame::from_matrix_unchecked(DenseMatrix::from_columns(&basis))),
        kept,
    )
}

fn orthogonalize<T: Real>(mut w: Vec<T>, basis: &[Vec<T>]) -> Vec<T> {
    for _pass in 0..2 {
        for q in basis {
            let c = dot(q, &w);
            for (wi, &qi) in w.iter_mut().zip(q) {
                *wi = *wi - c * qi;
            }
        }
    }
    w
}

fn check_same_shape<T: Real>(v: &OrthoFrame<T>, w: &OrthoFrame<T>) -> Result<(), LinalgError> {
    if v.dim() != w.dim() || v.width() != w.width() {
        return Err(LinalgError::ShapeMismatch {
            op: "projector_distance",
            left: v.as_matrix().shape(),
            right: w.as_matrix().shape(),
        });
    }
    Ok(())
}

/// Both routes of the projector distance between two `k`-dimensional subspaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorDistance<T> {
    /// `‖VVᵀ − WWᵀ‖₂`
    pub direct: T,
    /// `‖Wᵀ V⊥‖₂` with `V⊥` completing `V` to an orthogonal basis.
    pub via_complement: T,
}

/// `‖VVᵀ − WWᵀ‖₂ ∈ [0, 1]`.
///
/// Computed directly and through the complement identity
/// `‖VVᵀ − WWᵀ‖₂ = ‖WᵀV⊥‖₂`; fails if the routes disagree by more than
/// `1e-10`.
pub fn projector_distance<T: Real>(v: &OrthoFrame<T>, w: &OrthoFrame<T>) -> Result<T, LinalgError> {
    let both = projector_distance_routes(v, w)?;
    let gap = (both.direct - both.via_complement).abs();
    if gap > T::tol(1e-10) {
        return Err(LinalgError::IdentityMismatch {
            direct: both.direct.as_f64(),
            identity: both.via_complement.as_f64(),
        });
    }
    Ok(both.direct.min(T::one()))
}

pub fn projector_distance_routes<T: Real>(
    v: &OrthoFrame<T>,
    w: &OrthoFrame<T>,
) -> Result<ProjectorDistance<T>, LinalgError> {
    check_same_shape(v, w)?;
    let diff = v.projector().sub(&w.projector())?;
    let direct = operator_norm(&diff)?;
    let via_complement = match v.complement() {
        None => T::zero(),
        Some(c) => operator_norm(&w.as_matrix().transpose().matmul(c.as_matrix())?)?,
    };
    Ok(ProjectorDistance {
        direct,
        via_complement,
    })
}

/// Projector distance via `‖(I − VVᵀ)W‖₂`, costing `O(d k²)`.
///
/// Equal to [`projector_distance`] for frames of equal width; used inside
/// iteration loops where the `d × d` route is too expensive.
pub fn subspace_gap<T: Real>(v: &OrthoFrame<T>, w: &OrthoFrame<T>) -> Result<T, LinalgError> {
    check_same_shape(v, w)?;
    let k = w.width();
    let mut residual = DenseMatrix::zeros(w.dim(), k);
    for j in 0..k {
        let col = w.column(j);
        let c = v.coords(&col);
        let proj = v.combine(&c);
        let r: Vec<T> = col.iter().zip(proj.iter()).map(|(&a, &b)| a - b).collect();
        residual.set_column(j, &r);
    }
    let top = sym_eig(&residual.gram())?
        .values
        .last()
        .copied()
        .unwrap_or_else(T::zero);
    Ok(top.max(T::zero()).sqrt().min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn triangular_structure_forces_output() {
        let a = M::from_rows_f64(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let q = mgs_orth(&a).unwrap();
        assert_eq!(q.as_matrix(), &M::identity(2));
    }

    #[test]
    fn orthonormal_input_is_fixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = M::from_rows_f64(&[&[s, -s], &[s, s], &[0.0, 0.0]]);
        let q = mgs_orth(&a).unwrap();
        for (x, y) in q.as_matrix().as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficiency_names_column() {
        let a = M::from_rows_f64(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        match mgs_orth(&a) {
            Err(LinalgError::RankDeficient { column }) => assert_eq!(column, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn dropping_variant_skips_dependent_columns() {
        let a = M::from_rows_f64(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        let (frame, kept) = mgs_orth_dropping(&a, 1e-10);
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(frame.unwrap().width(), 2);
    }

    #[test]
    fn projector_distance_of_rotated_line() {
        let theta = std::f64::consts::FRAC_PI_6;
        let v = OrthoFrame::coordinate(2, 1);
        let w = OrthoFrame::from_orthonormal(M::from_rows_f64(&[&[theta.cos()], &[theta.sin()]])).unwrap();
        assert!((projector_distance(&v, &w).unwrap() - 0.5).abs() < 1e-14);
        assert!((subspace_gap(&v, &w).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(projector_distance(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_lines_are_at_distance_one() {
        let v = OrthoFrame::<f64>::coordinate(2, 1);
        let w = OrthoFrame::from_orthonormal(M::from_rows_f64(&[&[0.0], &[1.0]])).unwrap();
        assert!((projector_distance(&v, &w).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let v = OrthoFrame::<f64>::coordinate(3, 1);
        let w = OrthoFrame::<f64>::coordinate(3, 2);
        assert!(projector_distance(&v, &w).is_err());
    }

    #[test]
    fn reflection_negates_frame_components() {
        let v = OrthoFrame::<f64>::coordinate(3, 1);
        let r = v.reflect(&[1.0, 2.0, 3.0]);
        assert_eq!(r.as_slice(), &[-1.0, 2.0, 3.0]);
    }

    #[test]
    fn complement_completes_basis() {
        let a = M::from_rows_f64(&[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let v = mgs_orth(&a).unwrap();
        let full = v.completed();
        assert_eq!(full.width(), 4);
        assert!(full.orthonormality_defect() < 1e-13);
    }
}
