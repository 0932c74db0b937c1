//! Discrete high-index saddle dynamics.
//!
//! The crate locates index-`k` saddle points of smooth energies by the
//! reflected-gradient iteration
//!
//! ```text
//! x ← x − β (I − 2 V̂V̂ᵀ) ∇E(x)
//! V̂ ← EigenSol(V̂, ∇²E(x))
//! ```
//!
//! with exact, SIRQIT or LOBPCG eigensolvers, and evaluates the local
//! linear convergence-rate bounds that govern it.
//!
//! All numerical code is generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix the scalar to `f64`, which is what the experiment harness uses.

pub mod dynamics;
pub mod eigensolve;
pub mod landscape;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod theory;

pub use scalar::Real;

pub type Vector = linalg::DenseVector<f64>;
pub type Matrix = linalg::DenseMatrix<f64>;
pub type Frame = linalg::OrthoFrame<f64>;
pub type Spectrum = linalg::Spectrum<f64>;
pub type Benchmark = landscape::Benchmark<f64>;
pub type BenchmarkSpec = landscape::BenchmarkSpec<f64>;
pub type EigenSolverConfig = eigensolve::EigenSolverConfig<f64>;
pub type LobpcgState = eigensolve::LobpcgState<f64>;
pub type SaddleRunConfig = dynamics::SaddleRunConfig<f64>;
pub type IterationTrace = dynamics::IterationTrace<f64>;
pub type IterationRecord = dynamics::IterationRecord<f64>;
pub type RateBundle = theory::RateBundle<f64>;

pub use dynamics::{empirical_rate, perturb_frame, perturbed_eigenframe, position_step, run, single_step_decomposition, BetaPolicy, Termination};
pub use eigensolve::{eigensol, EigenMethod};
pub use landscape::{dimer_error_ratio, dimer_hvp, make_benchmark, EnergyLandscape};
