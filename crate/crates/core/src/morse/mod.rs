//! Gradient-flow trajectories of polynomial Morse functions on ℝᴺ.
//!
//! Flow convention: `u̇ = ∇Φ(u)`, so trajectories climb from lower to higher
//! critical values. Connecting orbits are solved as boundary value problems
//! (Hermite–Simpson collocation with projected boundary rows and a phase
//! condition), enumerated by shooting, broken, preglued and corrected.

mod banded;
mod collocation;
mod gluing;
mod poly;
mod shooting;

pub use banded::{BandedLu, BandedMatrix};
pub use collocation::{solve_trajectory, solve_trajectory_on, SolveOptions};

pub use gluing::{
    correct_pregluing, preglue_broken, shifted_distance, CorrectedCurve, CorrectionOptions, PregluedCurve,
};
pub use poly::{Polynomial, Term};
pub use shooting::{counting_function, enumerate_trajectories_index1, CountingData, Enumeration, ShootingOptions};


use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::splicing::SplicingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error("degenerate critical point near {location:?}: smallest |eigenvalue| {eigenvalue:e}")]
    DegenerateCriticalPoint { location: Vec<f64>, eigenvalue: f64 },
    #[error("critical values of {a} and {b} coincide but their indices differ")]
    TotalOrderViolation { a: String, b: String },
    #[error("unknown critical point {0}")]
    UnknownCriticalPoint(String),
    #[error("need Φ(a) < Φ(b), got {a} ≥ {b}")]
    Ordering { a: f64, b: f64 },
    #[error("index difference {difference} gives {rows} equations for {unknowns} unknowns")]
    IndexMismatch { difference: i64, rows: usize, unknowns: usize },
    #[error("no trajectory found: {0}")]
    NoTrajectoryFound(String),
    #[error("correction failed; residual history {history:?}")]
    CorrectionFailure { history: Vec<f64> },
    #[error("components do not meet: {0}")]
    InterfaceMismatch(String),
    #[error("unknown built-in problem {0}")]
    UnknownProblem(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Splicing(#[from] SplicingError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub label: String,
    pub location: Vec<f64>,
    pub value: f64,
    pub index: usize,
    /// Hessian eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Matching unit eigenvectors as columns.
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
}

impl CriticalPoint {
    /// Columns spanning the eigenspace with negative (`true`) or positive
    /// (`false`) eigenvalues.
    pub fn eigenspace(&self, negative: bool) -> DMatrix<f64> {
        let cols: Vec<usize> =
            (0..self.eigenvalues.len()).filter(|&k| (self.eigenvalues[k] < 0.0) == negative).collect();
        self.eigenvectors.select_columns(&cols)
    }

    pub fn gap(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
    }
}

/// Newton stopping threshold on `|∇Φ|`.
pub const CRITICAL_TOL: f64 = 1e-12;
/// Relative threshold for a vanishing Hessian eigenvalue.
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseProblem {
    pub name: String,
    pub phi: Polynomial,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub critical_points: Vec<CriticalPoint>,
}

fn newton_root(phi: &Polynomial, start: &[f64]) -> Option<Vec<f64>> {
    let mut x = DVector::from_column_slice(start);
    for _ in 0..100 {
        let g = phi.gradient(x.as_slice());
        if g.amax() == 0.0 {
            break;
        }
        let h = phi.hessian(x.as_slice());
        let step = h.lu().solve(&g)?;
        x -= &step;
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if step.amax() <= 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    (phi.gradient(x.as_slice()).amax() <= CRITICAL_TOL).then(|| x.as_slice().to_vec())
}

/// Newton search for zeros of `∇Φ` from a `seeds^N` grid on the box.
pub fn find_critical_points(
    phi: &Polynomial,
    lo: &[f64],
    hi: &[f64],
    seeds_per_axis: usize,
) -> Result<Vec<CriticalPoint>, MorseError> {
    let n = phi.dim;
    if lo.len() != n || hi.len() != n || seeds_per_axis < 1 {
        return Err(MorseError::Invalid("box does not match the dimension".into()));
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    let total = seeds_per_axis.pow(n as u32);
    for k in 0..total {
        let mut rem = k;
        let seed: Vec<f64> = (0..n)
            .map(|i| {
                let j = rem % seeds_per_axis;
                rem /= seeds_per_axis;
                let frac = if seeds_per_axis == 1 { 0.5 } else { j as f64 / (seeds_per_axis - 1) as f64 };
                lo[i] + frac * (hi[i] - lo[i])
            })
            .collect();
        if let Some(x) = newton_root(phi, &seed) {
            let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= a - 1e-9 && *v <= b + 1e-9);
            let dup = found.iter().any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8));
            if inside && !dup {
                found.push(x);
            }
        }
    }
    let mut points = Vec::new();
    for x in found {
        let h = phi.hessian(&x);
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = eig.eigenvectors.select_columns(&order);
        let scale = eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let smallest = eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if smallest < DEGENERACY_TOL * scale {
            return Err(MorseError::DegenerateCriticalPoint { location: x, eigenvalue: smallest });
        }
        let index = eigenvalues.iter().filter(|v| **v < 0.0).count();
        // snap round-off zeros for stable labels and output
        let location: Vec<f64> = x.iter().map(|v| if v.abs() < 1e-14 { 0.0 } else { *v }).collect();
        points.push(CriticalPoint {
            label: String::new(),
            value: phi.value(&location),
            location,
            index,
            eigenvalues,
            eigenvectors,
        });
    }
    points.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)).then_with(|| {
            a.location
                .iter()
                .zip(&b.location)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    for (k, p) in points.iter_mut().enumerate() {
        p.label = format!("c{k}");
    }
    for w in points.windows(2) {
        let tie = (w[0].value - w[1].value).abs() <= 1e-10 * (1.0 + w[0].value.abs());
        if tie && w[0].index != w[1].index {
            return Err(MorseError::TotalOrderViolation { a: w[0].label.clone(), b: w[1].label.clone() });
        }
    }
    Ok(points)
}

impl MorseProblem {
    pub fn new(
        name: impl Into<String>,
        phi: Polynomial,
        box_lo: Vec<f64>,
        box_hi: Vec<f64>,
        seeds_per_axis: usize,
    ) -> Result<Self, MorseError> {
        let critical_points = find_critical_points(&phi, &box_lo, &box_hi, seeds_per_axis)?;
        Ok(Self { name: name.into(), phi, box_lo, box_hi, critical_points })
    }

    /// Built-in problems: `quadratic`, `cubic`, `double-well`, `chain`,
    /// `degenerate`.
    pub fn builtin(name: &str) -> Result<Self, MorseError> {
        match name {
            "quadratic" => Self::new(name, Polynomial::from_pairs(1, &[(0.5, &[2])]), vec![-2.0], vec![2.0], 9),
            "cubic" => Self::cubic(),
            "double-well" => Self::double_well(),
            "chain" => Self::chain(0.1),
            "degenerate" => Self::new(name, Polynomial::from_pairs(1, &[(1.0, &[3])]), vec![-1.0], vec![1.0], 5),
            other => Err(MorseError::UnknownProblem(other.to_string())),
        }
    }

    /// `Φ(x) = x − x³/3`; its connecting orbit is `tanh`.
    pub fn cubic() -> Result<Self, MorseError> {
        Self::new("cubic", Polynomial::from_pairs(1, &[(1.0, &[1]), (-1.0 / 3.0, &[3])]), vec![-2.0], vec![2.0], 9)
    }

    /// `Φ(x,y) = (x²−1)²/4 + y²/2`.
    pub fn double_well() -> Result<Self, MorseError> {
        Self::new(
            "double-well",
            Polynomial::from_pairs(2, &[(0.25, &[4, 0]), (-0.5, &[2, 0]), (0.25, &[0, 0]), (0.5, &[0, 2])]),
            vec![-2.0, -2.0],
            vec![2.0, 2.0],
            9,
        )
    }

    /// `Φ(x,y) = ε[(x − x³/3) + 2(y − y³/3)]`: minimum, two saddles with
    /// distinct values, maximum; orbits are decoupled `tanh` curves.
    pub fn chain(eps: f64) -> Result<Self, MorseError> {
        Self::new(
            "chain",
            Polynomial::from_pairs(2, &[(1.0, &[1, 0]), (-1.0 / 3.0, &[3, 0]), (2.0, &[0, 1]), (-2.0 / 3.0, &[0, 3])])
                .scaled(eps),
            vec![-2.0, -2.0],
            vec![2.0, 2.0],
            9,
        )
    }

    pub fn dim(&self) -> usize {
        self.phi.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.phi.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        self.phi.gradient(x)
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.phi.hessian(x)
    }

    pub fn critical(&self, label: &str) -> Result<&CriticalPoint, MorseError> {
        self.critical_points
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| MorseError::UnknownCriticalPoint(label.to_string()))
    }

    /// Pairs `(a, b)` with `Φ(a) < Φ(b)`.
    pub fn ordered_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for a in &self.critical_points {
            for b in &self.critical_points {
                if a.value < b.value && !ties(a.value, b.value) {
                    out.push((a.label.clone(), b.label.clone()));
                }
            }
        }
        out
    }

    /// Largest |Hessian eigenvalue| over the critical points.
    pub fn stiffness(&self) -> f64 {
        self.critical_points
            .iter()
            .flat_map(|c| c.eigenvalues.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + a.abs())
}

/// A solved (or sampled) curve `s ↦ u(s)` on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: String,
    pub end: String,
    pub dim: usize,
    pub mesh: Vec<f64>,
    /// Node values, row-major `(node, component)`.
    pub values: Vec<f64>,
    /// `u̇` at the nodes.
    pub slopes: Vec<f64>,
    pub phase_value: f64,
    /// Largest collocation defect per unit length.
    pub residual: f64,
    pub newton_steps: usize,
}

impl Trajectory {
    /// Curve from samples, slopes by second-order differences.
    pub fn from_samples(
        start: impl Into<String>,
        end: impl Into<String>,
        dim: usize,
        mesh: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, MorseError> {
        let n = mesh.len();
        if n < 3 || values.len() != n * dim || mesh.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MorseError::Invalid("need ≥ 3 increasing nodes and matching values".into()));
        }
        let mut slopes = vec![0.0; n * dim];
        for i in 0..n {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            for c in 0..dim {
                slopes[i * dim + c] = (values[b * dim + c] - values[a * dim + c]) / (mesh[b] - mesh[a]);
            }
        }
        Ok(Self {
            start: start.into(),
            end: end.into(),
            dim,
            mesh,
            values,
            slopes,
            phase_value: f64::NAN,
            residual: f64::NAN,
            newton_steps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn slope(&self, i: usize) -> &[f64] {
        &self.slopes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.node(0)
    }

    pub fn last(&self) -> &[f64] {
        self.node(self.len() - 1)
    }

    /// Cubic Hermite sample; clamps to the end values outside the mesh.
    pub fn sample(&self, s: f64) -> Vec<f64> {
        let n = self.len();
        if s <= self.mesh[0] {
            return self.first().to_vec();
        }
        if s >= self.mesh[n - 1] {
            return self.last().to_vec();
        }
        let i = match self.mesh.binary_search_by(|m| m.total_cmp(&s)) {
            Ok(i) => return self.node(i).to_vec(),
            Err(i) => i - 1,
        };
        let h = self.mesh[i + 1] - self.mesh[i];
        let t = (s - self.mesh[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        (0..self.dim)
            .map(|c| {
                h00 * self.node(i)[c] + h10 * h * self.slope(i)[c] + h01 * self.node(i + 1)[c] + h11 * h * self.slope(i + 1)[c]
            })
            .collect()
    }

    /// Derivative of the Hermite interpolant; zero outside the mesh.
    pub fn sample_slope(&self, s: f64) -> Vec<f64> {
        let n = self.len();
        if s < self.mesh[0] || s > self.mesh[n - 1] {
            return vec![0.0; self.dim];
        }
        let i = match self.mesh.binary_search_by(|m| m.total_cmp(&s)) {
            Ok(i) => return self.slope(i).to_vec(),
            Err(i) => i - 1,
        };
        let h = self.mesh[i + 1] - self.mesh[i];
        let t = (s - self.mesh[i]) / h;
        let (d00, d10, d01, d11) =
            (6.0 * t * t - 6.0 * t, 3.0 * t * t - 4.0 * t + 1.0, -6.0 * t * t + 6.0 * t, 3.0 * t * t - 2.0 * t);
        (0..self.dim)
            .map(|c| {
                (d00 * self.node(i)[c] + d01 * self.node(i + 1)[c]) / h + d10 * self.slope(i)[c] + d11 * self.slope(i + 1)[c]
            })
            .collect()
    }

    /// Mesh shifted by `τ`: the curve `s ↦ u(s − τ)`.
    pub fn shifted(&self, tau: f64) -> Trajectory {
        let mut t = self.clone();
        for m in &mut t.mesh {
            *m += tau;
        }
        t
    }

    /// `Φ(u(s_{i+1})) ≥ Φ(u(s_i)) − tol` at all nodes.
    pub fn energy_monotone(&self, problem: &MorseProblem, tol: f64) -> bool {
        (1..self.len()).all(|i| problem.value(self.node(i)) >= problem.value(self.node(i - 1)) - tol)
    }

    /// CSV with header `s,u1,…,uN`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s");
        for c in 0..self.dim {
            out.push_str(&format!(",u{}", c + 1));
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!("{:.12e}", self.mesh[i]));
            for v in self.node(i) {
                out.push_str(&format!(",{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Index of the node at `s` (within `1e-9`).
    pub fn node_at(&self, s: f64) -> Option<usize> {
        self.mesh.iter().position(|m| (m - s).abs() <= 1e-9)
    }
}

/// Consecutive trajectories `a₀ → a₁ → … → a_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrokenTrajectory {
    pub components: Vec<Trajectory>,
}

/// `((a₀,a₁),…,(a_{k−1},a_k); (a₀,a_k))` with `d = k − 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Spectrum {
    pub pairs: Vec<(String, String)>,
    pub target: (String, String),
    pub degeneracy: usize,
}

impl BrokenTrajectory {
    pub fn new(components: Vec<Trajectory>) -> Result<Self, MorseError> {
        if components.is_empty() {
            return Err(MorseError::Invalid("a broken trajectory needs a component".into()));
        }
        for w in components.windows(2) {
            if w[0].end != w[1].start {
                return Err(MorseError::InterfaceMismatch(format!("{} ends at {}, next starts at {}", w[0].start, w[0].end, w[1].start)));
            }
        }
        Ok(Self { components })
    }

    pub fn degeneracy(&self) -> usize {
        self.components.len() - 1
    }

    pub fn spectrum(&self) -> Spectrum {
        spectrum(self)
    }
}

pub fn spectrum(x: &BrokenTrajectory) -> Spectrum {
    let pairs: Vec<(String, String)> = x.components.iter().map(|t| (t.start.clone(), t.end.clone())).collect();
    let target = (pairs[0].0.clone(), pairs[pairs.len() - 1].1.clone());
    Spectrum { degeneracy: pairs.len() - 1, pairs, target }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_has_one_minimum() {
        let p = MorseProblem::builtin("quadratic").unwrap();
        assert_eq!(p.critical_points.len(), 1);
        assert_eq!(p.critical_points[0].index, 0);
        assert_eq!(p.critical_points[0].location, vec![0.0]);
    }

    #[test]
    fn double_well_critical_points() {
        let p = MorseProblem::double_well().unwrap();
        let got: Vec<(Vec<f64>, usize)> =
            p.critical_points.iter().map(|c| (c.location.clone(), c.index)).collect();
        assert_eq!(got, vec![(vec![-1.0, 0.0], 0), (vec![1.0, 0.0], 0), (vec![0.0, 0.0], 1)]);
    }

    #[test]
    fn cube_is_degenerate() {
        assert!(matches!(MorseProblem::builtin("degenerate"), Err(MorseError::DegenerateCriticalPoint { .. })));
    }

    #[test]
    fn chain_values_are_distinct() {
        let p = MorseProblem::chain(0.1).unwrap();
        let idx: Vec<usize> = p.critical_points.iter().map(|c| c.index).collect();
        assert_eq!(idx, vec![0, 1, 1, 2]);
        assert_eq!(p.ordered_pairs().len(), 6);
    }

    #[test]
    fn spectrum_of_broken_pair() {
        let mk = |a: &str, b: &str| {
            Trajectory::from_samples(a, b, 1, vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0]).unwrap()
        };
        let x = BrokenTrajectory::new(vec![mk("a", "b"), mk("b", "c")]).unwrap();
        let s = x.spectrum();
        assert_eq!(s.degeneracy, 1);
        assert_eq!(s.target, ("a".to_string(), "c".to_string()));
        assert!(BrokenTrajectory::new(vec![mk("a", "b"), mk("c", "d")]).is_err());
    }
}
