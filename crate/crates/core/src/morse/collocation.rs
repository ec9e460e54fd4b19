//! Hermite–Simpson collocation for `u̇ = ∇Φ(u)` with projected boundary rows
//! and level-set constraints, solved by damped Newton on a banded Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::banded::BandedMatrix;
use super::{MorseError, MorseProblem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Half length `L` of the truncated line.
    pub half_length: f64,
    pub step: f64,
    pub tol: f64,
    pub max_newton: usize,
}

impl SolveOptions {
    /// `L` with `e^{−gap·L} < 1e-12` and a step resolving the stiffest
    /// Hessian eigenvalue.
    pub fn for_pair(problem: &MorseProblem, a: &str, b: &str) -> Result<Self, MorseError> {
        let gap = problem.critical(a)?.gap().min(problem.critical(b)?.gap());
        let half_length = (1e12f64.ln() / gap).ceil();
        let step = (0.2 / problem.stiffness().max(1e-12)).min(0.1);
        Ok(Self { half_length, step, tol: 1e-12, max_newton: 50 })
    }

    pub fn uniform_mesh(&self) -> Vec<f64> {
        let half = (self.half_length / self.step).round() as i64;
        (-half..=half).map(|k| k as f64 * self.step).collect()
    }
}

/// Collocation system on a fixed mesh.
pub(crate) struct System<'a> {
    pub problem: &'a MorseProblem,
    pub mesh: &'a [f64],
    /// Rows `P (u(s_0) − left_point) = 0`.
    pub left_rows: DMatrix<f64>,
    pub left_point: Vec<f64>,
    pub right_rows: DMatrix<f64>,
    pub right_point: Vec<f64>,
    /// `Φ(u(s_node)) = value`.
    pub levels: Vec<(usize, f64)>,
}

/// Row layout: left rows, then for each node `i` its level rows followed by
/// the interval `(i, i+1)` rows, then right rows.
struct Layout {
    level_rows_before: Vec<Vec<(usize, f64)>>,
}

impl<'a> System<'a> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn equations(&self) -> usize {
        let n = self.dim();
        self.left_rows.nrows() + (self.mesh.len() - 1) * n + self.levels.len() + self.right_rows.nrows()
    }

    pub fn unknowns(&self) -> usize {
        self.mesh.len() * self.dim()
    }

    fn layout(&self) -> Layout {
        let mut level_rows_before = vec![Vec::new(); self.mesh.len()];
        for &(node, value) in &self.levels {
            level_rows_before[node].push((node, value));
        }
        Layout { level_rows_before }
    }

    fn interval(&self, x: &[f64], i: usize) -> (DVector<f64>, Option<(DMatrix<f64>, DMatrix<f64>)>, f64) {
        self.interval_impl(x, i, false)
    }

    fn interval_impl(
        &self,
        x: &[f64],
        i: usize,
        with_jac: bool,
    ) -> (DVector<f64>, Option<(DMatrix<f64>, DMatrix<f64>)>, f64) {
        let n = self.dim();
        let h = self.mesh[i + 1] - self.mesh[i];
        let ui = DVector::from_column_slice(&x[i * n..(i + 1) * n]);
        let uj = DVector::from_column_slice(&x[(i + 1) * n..(i + 2) * n]);
        let fi = self.problem.gradient(ui.as_slice());
        let fj = self.problem.gradient(uj.as_slice());
        let um = (&ui + &uj) * 0.5 + (&fi - &fj) * (h / 8.0);
        let fm = self.problem.gradient(um.as_slice());
        let defect = (&uj - &ui - (&fi + &fm * 4.0 + &fj) * (h / 6.0)) / h;
        if !with_jac {
            return (defect, None, h);
        }
        let id = DMatrix::<f64>::identity(n, n);
        let ji = self.problem.hessian(ui.as_slice());
        let jj = self.problem.hessian(uj.as_slice());
        let jm = self.problem.hessian(um.as_slice());
        let dm_di = &id * 0.5 + &ji * (h / 8.0);
        let dm_dj = &id * 0.5 - &jj * (h / 8.0);
        let a = (-&id - (&ji + &jm * &dm_di * 4.0) * (h / 6.0)) / h;
        let b = (&id - (&jj + &jm * &dm_dj * 4.0) * (h / 6.0)) / h;
        (defect, Some((a, b)), h)
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let layout = self.layout();
        let mut out = Vec::with_capacity(self.equations());
        let u0 = &x[..n];
        for r in 0..self.left_rows.nrows() {
            out.push((0..n).map(|c| self.left_rows[(r, c)] * (u0[c] - self.left_point[c])).sum());
        }
        let m = self.mesh.len();
        for i in 0..m {
            for &(node, value) in &layout.level_rows_before[i] {
                out.push(self.problem.value(&x[node * n..(node + 1) * n]) - value);
            }
            if i + 1 < m {
                let (d, _, _) = self.interval(x, i);
                out.extend(d.iter());
            }
        }
        let ul = &x[(m - 1) * n..];
        for r in 0..self.right_rows.nrows() {
            out.push((0..n).map(|c| self.right_rows[(r, c)] * (ul[c] - self.right_point[c])).sum());
        }
        out
    }

    pub fn jacobian(&self, x: &[f64]) -> BandedMatrix {
        let n = self.dim();
        let layout = self.layout();
        let mut entries = Vec::new();
        let mut row = 0;
        for r in 0..self.left_rows.nrows() {
            for c in 0..n {
                entries.push((row, c, self.left_rows[(r, c)]));
            }
            row += 1;
        }
        let m = self.mesh.len();
        for i in 0..m {
            for &(node, _) in &layout.level_rows_before[i] {
                let g = self.problem.gradient(&x[node * n..(node + 1) * n]);
                for c in 0..n {
                    entries.push((row, node * n + c, g[c]));
                }
                row += 1;
            }
            if i + 1 < m {
                let (_, jac, _) = self.interval_impl(x, i, true);
                let (a, b) = jac.expect("requested");
                for r in 0..n {
                    for c in 0..n {
                        entries.push((row + r, i * n + c, a[(r, c)]));
                        entries.push((row + r, (i + 1) * n + c, b[(r, c)]));
                    }
                }
                row += n;
            }
        }
        for r in 0..self.right_rows.nrows() {
            for c in 0..n {
                entries.push((row, (m - 1) * n + c, self.right_rows[(r, c)]));
            }
            row += 1;
        }
        BandedMatrix::from_triplets(self.unknowns(), &entries)
    }

    /// Damped Newton. Returns the solution, the step count and the residual
    /// history; `max_change` bounds the sup distance from the start.
    pub fn newton(
        &self,
        x0: Vec<f64>,
        tol: f64,
        max_iter: usize,
        max_change: Option<f64>,
    ) -> Result<(Vec<f64>, usize, Vec<f64>), Vec<f64>> {
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut x = x0.clone();
        let mut f = self.residual(&x);
        let mut history = vec![norm(&f)];
        let mut steps = 0;
        while history[history.len() - 1] > tol {
            if steps >= max_iter {
                return Err(history);
            }
            let Some(lu) = self.jacobian(&x).lu() else {
                return Err(history);
            };
            let dx = lu.solve(&f);
            if !dx.iter().all(|v| v.is_finite()) {
                return Err(history);
            }
            let current = history[history.len() - 1];
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - lambda * d).collect();
                let ft = self.residual(&trial);
                let nt = norm(&ft);
                if nt.is_finite() && (nt < current || nt <= tol) {
                    x = trial;
                    f = ft;
                    history.push(nt);
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            steps += 1;
            if !accepted {
                return Err(history);
            }
            if let Some(limit) = max_change {
                let moved = x.iter().zip(&x0).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
                if moved > limit {
                    return Err(history);
                }
            }
        }
        Ok((x, steps, history))
    }
}

/// Rows `Pᵀ` of the eigenvectors with negative (`true`) or positive
/// eigenvalues at a critical point.
pub(crate) fn projector_rows(problem: &MorseProblem, label: &str, negative: bool) -> Result<DMatrix<f64>, MorseError> {
    Ok(problem.critical(label)?.eigenspace(negative).transpose())
}

/// Connecting orbit `a → b` on the uniform mesh of `opts`, starting from a
/// smoothed step unless a guess is given.
pub fn solve_trajectory(
    problem: &MorseProblem,
    a: &str,
    b: &str,
    initial_guess: Option<&Trajectory>,
    opts: &SolveOptions,
) -> Result<Trajectory, MorseError> {
    if let Some(g) = initial_guess {
        return solve_trajectory_on(problem, a, b, g, opts);
    }
    let ca = problem.critical(a)?;
    let cb = problem.critical(b)?;
    let mesh = opts.uniform_mesh();
    let n = problem.dim();
    let kappa = 0.5 * ca.gap().min(cb.gap());
    let mut values = Vec::with_capacity(mesh.len() * n);
    for &s in &mesh {
        let w = 0.5 * (1.0 + (kappa * s).tanh());
        for c in 0..n {
            values.push(ca.location[c] + w * (cb.location[c] - ca.location[c]));
        }
    }
    let guess = Trajectory::from_samples(a, b, n, mesh, values)?;
    solve_trajectory_on(problem, a, b, &guess, opts)
}

/// Connecting orbit on the mesh of `guess`, which must contain `s = 0`.
pub fn solve_trajectory_on(
    problem: &MorseProblem,
    a: &str,
    b: &str,
    guess: &Trajectory,
    opts: &SolveOptions,
) -> Result<Trajectory, MorseError> {
    let ca = problem.critical(a)?;
    let cb = problem.critical(b)?;
    if !(ca.value < cb.value) || super::ties(ca.value, cb.value) {
        return Err(MorseError::Ordering { a: ca.value, b: cb.value });
    }
    let n = problem.dim();
    if guess.dim != n {
        return Err(MorseError::Invalid("guess dimension".into()));
    }
    let zero = guess
        .node_at(0.0)
        .ok_or_else(|| MorseError::Invalid("the mesh must contain s = 0".into()))?;
    let mid = 0.5 * (ca.value + cb.value);
    let sys = System {
        problem,
        mesh: &guess.mesh,
        left_rows: projector_rows(problem, a, true)?,
        left_point: ca.location.clone(),
        right_rows: projector_rows(problem, b, false)?,
        right_point: cb.location.clone(),
        levels: vec![(zero, mid)],
    };
    if sys.equations() != sys.unknowns() {
        return Err(MorseError::IndexMismatch {
            difference: cb.index as i64 - ca.index as i64,
            rows: sys.equations(),
            unknowns: sys.unknowns(),
        });
    }
    let (x, steps, history) = sys
        .newton(guess.values.clone(), opts.tol, opts.max_newton, None)
        .map_err(|h| MorseError::NoTrajectoryFound(format!("Newton stalled at residual {:e}", h[h.len() - 1])))?;
    Ok(finish_trajectory(problem, a, b, guess.mesh.clone(), x, mid, history[history.len() - 1], steps))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_trajectory(
    problem: &MorseProblem,
    a: &str,
    b: &str,
    mesh: Vec<f64>,
    values: Vec<f64>,
    phase_value: f64,
    residual: f64,
    newton_steps: usize,
) -> Trajectory {
    let n = problem.dim();
    let slopes: Vec<f64> = values.chunks(n).flat_map(|u| problem.gradient(u).iter().cloned().collect::<Vec<_>>()).collect();
    Trajectory {
        start: a.to_string(),
        end: b.to_string(),
        dim: n,
        mesh,
        values,
        slopes,
        phase_value,
        residual,
        newton_steps,
    }
}
