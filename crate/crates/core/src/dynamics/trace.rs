use std::fmt::Write as _;

use crate::linalg::DenseVector;
use crate::scalar::Real;

use super::DynamicsError;

/// Contraction ratios are not recorded once `rₙ` drops below this.
pub const RATIO_FLOOR: f64 = 1e-14;

/// Header of the trace CSV.
pub const CSV_HEADER: &str = "n,grad_norm,r_n,alpha_n,contraction,beta";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    GradientTolerance,
    DistanceTolerance,
    MaxIterations,
    Diverged,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient_tolerance",
            Termination::DistanceTolerance => "distance_tolerance",
            Termination::MaxIterations => "max_iterations",
            Termination::Diverged => "diverged",
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, Termination::GradientTolerance | Termination::DistanceTolerance)
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub n: usize,
    /// `x⁽ⁿ⁾`, kept only when the run asks for positions.
    pub x: Option<DenseVector<T>>,
    pub grad_norm: T,
    /// `‖x⁽ⁿ⁾ − x*‖₂` when `x*` is known.
    pub r_n: Option<T>,
    /// Projector distance of the frame used at step `n` to the exact one at `x⁽ⁿ⁾`.
    pub alpha_n: Option<T>,
    /// `rₙ₊₁ / rₙ`.
    pub contraction: Option<T>,
    pub beta: T,
    /// Index of the iterate at which the frame used in this step was computed.
    pub frame_point: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetadata {
    pub landscape: String,
    /// Resolved settings, in insertion order.
    pub settings: Vec<(String, String)>,
    pub wall_time_secs: f64,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub final_x: DenseVector<T>,
    pub metadata: RunMetadata,
}

impl<T: Real> IterationTrace<T> {
    pub fn termination(&self) -> Termination {
        self.metadata.termination
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.n)
    }

    /// First `n` with `rₙ < tol`.
    pub fn first_below(&self, tol: T) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.r_n.is_some_and(|v| v < tol))
            .map(|r| r.n)
    }

    pub fn distances(&self) -> Vec<(usize, T)> {
        self.records
            .iter()
            .filter_map(|r| r.r_n.map(|v| (r.n, v)))
            .collect()
    }

    /// Trace as CSV; absent values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:e},{},{},{},{:e}",
                r.n,
                r.grad_norm,
                cell(r.r_n),
                cell(r.alpha_n),
                cell(r.contraction),
                r.beta
            );
        }
        out
    }

    /// `n log10_r_n` lines for records with `rₙ > 0`.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("# n log10_r_n\n");
        for (n, r) in self.distances() {
            if r > T::zero() {
                let _ = writeln!(out, "{n} {:e}", r.log10());
            }
        }
        out
    }

    /// `key = value` lines: metadata followed by the resolved settings.
    pub fn metadata_text(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        let _ = writeln!(out, "landscape = {}", m.landscape);
        let _ = writeln!(out, "termination = {}", m.termination);
        let _ = writeln!(out, "iterations = {}", self.iterations());
        let _ = writeln!(out, "wall_time_secs = {:.3}", m.wall_time_secs);
        for (k, v) in &m.settings {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn cell<T: Real>(v: Option<T>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Least-squares fit of `ln rₙ` against `n` over the final `tail_fraction`
/// of the records with `rₙ > 0`. Returns `(exp(slope), R²)`.
///
/// Records after the first `rₙ = 0` are ignored.
pub fn empirical_rate<T: Real>(trace: &IterationTrace<T>, tail_fraction: f64) -> Result<(T, T), DynamicsError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(DynamicsError::InvalidConfig(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let usable: Vec<(f64, f64)> = trace
        .distances()
        .into_iter()
        .take_while(|(_, r)| *r > T::zero())
        .map(|(n, r)| (n as f64, r.as_f64().ln()))
        .collect();
    let take = ((usable.len() as f64) * tail_fraction).floor() as usize;
    if take < 10 {
        return Err(DynamicsError::TooFewRecords {
            have: take,
            need: 10,
        });
    }
    let tail = &usable[usable.len() - take..];
    let (slope, r2) = linear_fit(tail);
    Ok((T::lit(slope.exp()), T::lit(r2)))
}

/// Slope and `R²` of the least-squares line through `points`.
pub(crate) fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, r2)
}
