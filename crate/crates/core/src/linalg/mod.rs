//! Dense linear algebra: symmetric eigendecomposition, spectral norm,
//! modified Gram-Schmidt and subspace distances.

mod eig;
mod frame;
mod matrix;
mod vector;

pub use eig::{operator_norm, sym_eig, Spectrum, MAX_SWEEPS};
pub use frame::{
    mgs_orth, mgs_orth_dropping, projector_distance, projector_distance_routes, subspace_gap,
    OrthoFrame, ProjectorDistance,
};
pub use matrix::DenseMatrix;
pub use vector::{dot, norm, DenseVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric (max |A_ij - A_ji| = {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("non-finite entries passed to {op}")]
    NonFinite { op: &'static str },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("column {column} is numerically dependent on the preceding columns")]
    RankDeficient { column: usize },
    #[error("frame width {width} invalid for dimension {dim}")]
    BadFrameWidth { dim: usize, width: usize },
    #[error("columns are not orthonormal (max |VᵀV - I| = {defect:e})")]
    NotOrthonormal { defect: f64 },
    #[error("projector distance routes disagree: direct {direct:e} vs complement {identity:e}")]
    IdentityMismatch { direct: f64, identity: f64 },
}
