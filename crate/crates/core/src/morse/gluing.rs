//! Pregluing of a broken pair and its Newton correction.

use serde::Serialize;

use super::collocation::{finish_trajectory, projector_rows, System};
use super::{BrokenTrajectory, MorseError, MorseProblem, Trajectory};
use crate::splicing::{beta, beta_derivative, total_gluing_determinant, GluingProfile, SplicingError};

/// `⊕_R(u₁, u₂)` on a merged mesh, recentred so that `Φ(w(0))` is the
/// midpoint of the end values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PregluedCurve {
    pub curve: Trajectory,
    pub gluing_length: f64,
    /// The recentring shift: curve coordinate `s` is gluing coordinate `s + shift`.
    pub shift: f64,
    /// `sup |ẇ − ∇Φ(w)|` over the nodes.
    pub residual: f64,
    /// Nodes carrying `u₁(0)` and `u₂(0)`.
    pub anchors: Option<(usize, usize)>,
    /// `Φ(u₁(0))`, `Φ(u₂(0))`.
    pub anchor_levels: (f64, f64),
}

/// Interior points filling `(g0, g1)` with steps growing geometrically from
/// `h0` on both sides, capped at `h_max`.
fn graded_fill(g0: f64, g1: f64, h0: f64, h_max: f64) -> Vec<f64> {
    let mut left = vec![];
    let mut right = vec![];
    let (mut a, mut b) = (g0, g1);
    let mut h = h0;
    while b - a > 2.0 * h {
        a += h;
        b -= h;
        left.push(a);
        right.push(b);
        h = (h * 1.25).min(h_max);
    }
    if b - a > 1.5 * h {
        left.push(0.5 * (a + b));
    }
    right.reverse();
    left.extend(right);
    left
}

/// Glues the two components of `x` at `R = φ(r)`.
pub fn preglue_broken(
    problem: &MorseProblem,
    x: &BrokenTrajectory,
    r: f64,
    profile: &GluingProfile,
) -> Result<PregluedCurve, MorseError> {
    if x.components.len() != 2 {
        return Err(MorseError::Invalid("pregluing needs exactly two components".into()));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(SplicingError::Domain(r).into());
    }
    let (u1, u2) = (&x.components[0], &x.components[1]);
    if u1.end != u2.start {
        return Err(MorseError::InterfaceMismatch(format!("{} vs {}", u1.end, u2.start)));
    }
    let gap_value = {
        let e1 = u1.last();
        let s2 = u2.first();
        e1.iter().zip(s2).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
    };
    if gap_value > 1e-3 {
        return Err(MorseError::InterfaceMismatch(format!("end values differ by {gap_value:e}")));
    }
    let length = profile.length(r)?;
    let half = length / 2.0;
    let h1 = u1.mesh[1] - u1.mesh[0];
    let h2 = u2.mesh[1] - u2.mesh[0];
    let mut mesh: Vec<f64> = u1.mesh.iter().cloned().filter(|&s| s <= half).collect();
    let left_end = mesh[mesh.len() - 1];
    let right: Vec<f64> = u2.mesh.iter().map(|s| s + length).filter(|&s| s > half).collect();
    let right_start = right[0];
    if right_start - left_end > 2.0 * h1.max(h2) {
        let h_max = (right_start - left_end) / 8.0;
        mesh.extend(graded_fill(left_end, right_start, h1.max(h2), h_max));
    }
    let mut right = right;
    if right[0] - mesh[mesh.len() - 1] < 0.25 * h1.min(h2) && right.len() > 1 {
        right.remove(0);
    }
    mesh.extend(right);
    let n = problem.dim();
    let mut values = Vec::with_capacity(mesh.len() * n);
    let mut slopes = Vec::with_capacity(mesh.len() * n);
    let mut residual = 0.0f64;
    for &s in &mesh {
        let b = beta(s - half);
        let db = beta_derivative(s - half);
        let p = u1.sample(s);
        let q = u2.sample(s - length);
        let dp = u1.sample_slope(s);
        let dq = u2.sample_slope(s - length);
        let w: Vec<f64> = (0..n).map(|c| b * p[c] + (1.0 - b) * q[c]).collect();
        let dw: Vec<f64> = (0..n).map(|c| db * (p[c] - q[c]) + b * dp[c] + (1.0 - b) * dq[c]).collect();
        let g = problem.gradient(&w);
        residual = residual.max((0..n).fold(0.0f64, |m, c| m.max((dw[c] - g[c]).abs())));
        values.extend(w);
        slopes.extend(dw);
    }
    let ca = problem.critical(&u1.start)?;
    let cc = problem.critical(&u2.end)?;
    let mid = 0.5 * (ca.value + cc.value);
    let phis: Vec<f64> = values.chunks(n).map(|w| problem.value(w)).collect();
    let shift = match phis.windows(2).position(|w| w[0] <= mid && w[1] >= mid) {
        Some(i) => {
            let f = (mid - phis[i]) / (phis[i + 1] - phis[i]).max(1e-300);
            mesh[i] + f * (mesh[i + 1] - mesh[i])
        }
        None => 0.0,
    };
    let anchor_l = mesh.iter().position(|&s| s.abs() < 1e-9);
    let anchor_r = mesh.iter().position(|&s| (s - length).abs() < 1e-9 * (1.0 + length));
    let anchors = match (anchor_l, anchor_r) {
        (Some(l), Some(r)) if l != r => Some((l, r)),
        _ => None,
    };
    let anchor_levels = (
        u1.node_at(0.0).map(|i| problem.value(u1.node(i))).unwrap_or(f64::NAN),
        u2.node_at(0.0).map(|i| problem.value(u2.node(i))).unwrap_or(f64::NAN),
    );
    let mesh: Vec<f64> = mesh.iter().map(|s| s - shift).collect();
    let curve = Trajectory {
        start: u1.start.clone(),
        end: u2.end.clone(),
        dim: n,
        mesh,
        values,
        slopes,
        phase_value: mid,
        residual,
        newton_steps: 0,
    };
    Ok(PregluedCurve { curve, gluing_length: length, shift, residual, anchors, anchor_levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Largest allowed sup-distance between the corrected and preglued curves.
    pub basin: f64,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_newton: 30, basin: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedCurve {
    pub trajectory: Trajectory,
    pub gluing_length: f64,
    pub shift: f64,
    pub anchors: (usize, usize),
    pub history: Vec<f64>,
    /// `sup|h|`, `sup|k|` of the correction written as `⊕_R(h,k)` with
    /// `⊖_R(h,k) = 0`.
    pub slice_parts: (f64, f64),
}

/// Newton correction of a preglued curve to a true trajectory `a → c`, with
/// the two anchor nodes pinned to the levels of `u₁(0)` and `u₂(0)`.
pub fn correct_pregluing(
    problem: &MorseProblem,
    preglued: &PregluedCurve,
    opts: &CorrectionOptions,
) -> Result<CorrectedCurve, MorseError> {
    let (al, ar) = preglued
        .anchors
        .ok_or_else(|| MorseError::Invalid("gluing length too short for anchored correction".into()))?;
    let curve = &preglued.curve;
    let ca = problem.critical(&curve.start)?;
    let cc = problem.critical(&curve.end)?;
    let sys = System {
        problem,
        mesh: &curve.mesh,
        left_rows: projector_rows(problem, &curve.start, true)?,
        left_point: ca.location.clone(),
        right_rows: projector_rows(problem, &curve.end, false)?,
        right_point: cc.location.clone(),
        levels: vec![(al, preglued.anchor_levels.0), (ar, preglued.anchor_levels.1)],
    };
    if sys.equations() != sys.unknowns() {
        return Err(MorseError::IndexMismatch {
            difference: cc.index as i64 - ca.index as i64,
            rows: sys.equations(),
            unknowns: sys.unknowns(),
        });
    }
    let (x, steps, history) = sys
        .newton(curve.values.clone(), opts.tol, opts.max_newton, Some(opts.basin))
        .map_err(|history| MorseError::CorrectionFailure { history })?;
    let n = problem.dim();
    let half = preglued.gluing_length / 2.0;
    let (mut hs, mut ks) = (0.0f64, 0.0f64);
    for (i, s) in curve.mesh.iter().enumerate() {
        let b = beta(s + preglued.shift - half);
        let d = total_gluing_determinant(b);
        for c in 0..n {
            let eta = x[i * n + c] - curve.values[i * n + c];
            hs = hs.max((b * eta / d).abs());
            ks = ks.max(((1.0 - b) * eta / d).abs());
        }
    }
    let residual = history[history.len() - 1];
    let trajectory = finish_trajectory(
        problem,
        &curve.start,
        &curve.end,
        curve.mesh.clone(),
        x,
        curve.phase_value,
        residual,
        steps,
    );
    Ok(CorrectedCurve {
        trajectory,
        gluing_length: preglued.gluing_length,
        shift: preglued.shift,
        anchors: (al, ar),
        history,
        slice_parts: (hs, ks),
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `max_i min_τ sup_{|s| ≤ R/2} |w(s + o_i + τ) − u_i(s)|`, where `o_i` is
/// the position of component `i`'s origin in the corrected curve.
pub fn shifted_distance(corrected: &CorrectedCurve, x: &BrokenTrajectory) -> f64 {
    let w = &corrected.trajectory;
    let half = corrected.gluing_length / 2.0;
    let origins = [w.mesh[corrected.anchors.0], w.mesh[corrected.anchors.1]];
    let mut worst = 0.0f64;
    for (u, &o) in x.components.iter().zip(&origins) {
        let nodes: Vec<usize> = (0..u.len()).filter(|&i| u.mesh[i].abs() <= half).collect();
        let sup = |tau: f64| -> f64 {
            nodes.iter().fold(0.0f64, |m, &i| {
                let s = u.mesh[i];
                let ws = w.sample(s + o + tau);
                m.max(ws.iter().zip(u.node(i)).fold(0.0f64, |a, (p, q)| a.max((p - q).abs())))
            })
        };
        let (_, best) = golden_min(sup, -1.0, 1.0, 60);
        worst = worst.max(best.min(sup(0.0)));
    }
    worst
}
