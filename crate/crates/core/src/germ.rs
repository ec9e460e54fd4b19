//! Contraction germs `f(v,u) = u − B(v,u)`, their Banach-iteration solver,
//! Morse fillers and filled sections.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::scspace::{GridFunction, ScError, ScaleSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("germ does not vanish at the origin: |B(0,0)| = {0:e}")]
    NotAnchored(f64),
    #[error("not a contraction at level {level}: observed ratio {ratio}")]
    NotAContraction { level: usize, ratio: f64 },
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("parameter outside the level-{level} trust radius {radius}")]
    OutsideTrustRegion { level: usize, radius: f64 },
    #[error("level {level} not available (max {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("degenerate critical point: smallest |eigenvalue| {0:e}")]
    DegenerateCriticalPoint(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Space(#[from] ScError),
}

/// A family of norms indexed by level.
pub trait ScaleNorm: Send + Sync {
    fn levels(&self) -> usize;
    fn norm(&self, x: &[f64], level: usize) -> f64;
}

/// `‖x‖_m = (Σ (1+i)^{2m} x_i²)^{1/2}` on ℝⁿ.
#[derive(Debug, Clone, Copy)]
pub struct SequenceScale {
    pub levels: usize,
}

impl ScaleNorm for SequenceScale {
    fn levels(&self) -> usize {
        self.levels
    }
    fn norm(&self, x: &[f64], level: usize) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| ((1 + i) as f64).powi(level as i32) * v)
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    }
}

/// Level norms of a discretized scale space.
#[derive(Debug, Clone)]
pub struct GridScale(pub Arc<ScaleSpace>);

impl ScaleNorm for GridScale {
    fn levels(&self) -> usize {
        self.0.levels_available()
    }
    fn norm(&self, x: &[f64], level: usize) -> f64 {
        GridFunction::new(self.0.clone(), x.to_vec(), level)
            .and_then(|g| g.norm(level))
            .unwrap_or(f64::NAN)
    }
}

type GermMap = Arc<dyn Fn(&[f64], &[f64], usize) -> Vec<f64> + Send + Sync>;

/// `B(v, u, level)` with declared level-wise contraction constants.
#[derive(Clone)]
pub struct ContractionGerm {
    pub name: String,
    pub param_dim: usize,
    pub state_dim: usize,
    map: GermMap,
    pub thetas: Vec<f64>,
    /// Sup-norm radius of admissible parameters, per level.
    pub trust_radii: Vec<f64>,
    norm: Arc<dyn ScaleNorm>,
}

impl fmt::Debug for ContractionGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContractionGerm")
            .field("name", &self.name)
            .field("param_dim", &self.param_dim)
            .field("state_dim", &self.state_dim)
            .field("thetas", &self.thetas)
            .field("trust_radii", &self.trust_radii)
            .finish()
    }
}

/// Samples drawn per level by the construction-time contraction check.
pub const CONTRACTION_SAMPLES: usize = 200;

/// Trust radii `r0 · (1/2)^m`.
pub fn default_trust_radii(r0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|m| r0 * 0.5f64.powi(m as i32)).collect()
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

impl ContractionGerm {
    /// Builds a germ after checking `B(0,0) = 0` and sampling the contraction
    /// inequality at every level.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        param_dim: usize,
        state_dim: usize,
        map: impl Fn(&[f64], &[f64], usize) -> Vec<f64> + Send + Sync + 'static,
        thetas: Vec<f64>,
        trust_radii: Vec<f64>,
        norm: Arc<dyn ScaleNorm>,
        seed: u64,
    ) -> Result<Self, GermError> {
        if thetas.len() != trust_radii.len() || thetas.len() > norm.levels() || thetas.is_empty() {
            return Err(GermError::Dimension("one contraction factor and radius per level".into()));
        }
        if thetas.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(GermError::NotAContraction {
                level: thetas.iter().position(|t| !(*t > 0.0 && *t < 1.0)).unwrap_or(0),
                ratio: thetas.iter().cloned().fold(0.0, f64::max),
            });
        }
        let germ = Self {
            name: name.into(),
            param_dim,
            state_dim,
            map: Arc::new(map),
            thetas,
            trust_radii,
            norm,
        };
        let origin = germ.apply(&vec![0.0; param_dim], &vec![0.0; state_dim], 0);
        if origin.len() != state_dim {
            return Err(GermError::Dimension("B returns the wrong length".into()));
        }
        let at_origin = germ.norm.norm(&origin, 0);
        if at_origin > 1e-14 {
            return Err(GermError::NotAnchored(at_origin));
        }
        germ.sample_contraction(seed)?;
        Ok(germ)
    }

    fn sample_contraction(&self, seed: u64) -> Result<(), GermError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (m, (&theta, &radius)) in self.thetas.iter().zip(&self.trust_radii).enumerate() {
            let u_radius = radius / (1.0 - theta);
            for _ in 0..CONTRACTION_SAMPLES {
                let v: Vec<f64> = (0..self.param_dim).map(|_| rng.gen_range(-radius..=radius)).collect();
                let u: Vec<f64> = (0..self.state_dim).map(|_| rng.gen_range(-u_radius..=u_radius)).collect();
                let w: Vec<f64> = (0..self.state_dim).map(|_| rng.gen_range(-u_radius..=u_radius)).collect();
                let bu = self.apply(&v, &u, m);
                let bw = self.apply(&v, &w, m);
                let num = self.norm.norm(&diff(&bu, &bw), m);
                let den = self.norm.norm(&diff(&u, &w), m);
                if den > 0.0 && num > theta * den * (1.0 + 1e-12) {
                    return Err(GermError::NotAContraction { level: m, ratio: num / den });
                }
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.thetas.len()
    }

    pub fn apply(&self, v: &[f64], u: &[f64], level: usize) -> Vec<f64> {
        (self.map)(v, u, level)
    }

    /// `f(v, u) = u − B(v, u)`.
    pub fn section(&self, v: &[f64], u: &[f64], level: usize) -> Vec<f64> {
        diff(u, &self.apply(v, u, level))
    }

    pub fn norm(&self, x: &[f64], level: usize) -> f64 {
        self.norm.norm(x, level)
    }

    /// `B(v,u) = u/2 + v` on ℝⁿ; `δ(v) = 2v`.
    pub fn linear(dim: usize, levels: usize) -> Self {
        Self::new(
            "linear",
            dim,
            dim,
            |v, u, _| u.iter().zip(v).map(|(a, b)| 0.5 * a + b).collect(),
            vec![0.5; levels],
            default_trust_radii(2.0, levels),
            Arc::new(SequenceScale { levels }),
            0,
        )
        .expect("linear germ is a contraction")
    }

    /// `B(v,u) = v + a·sin(u)` componentwise.
    pub fn sine(dim: usize, levels: usize, amplitude: f64) -> Result<Self, GermError> {
        Self::new(
            "sine",
            dim,
            dim,
            move |v, u, _| u.iter().zip(v).map(|(a, b)| b + amplitude * a.sin()).collect(),
            vec![amplitude.abs().max(1e-3); levels],
            default_trust_radii(2.0, levels),
            Arc::new(SequenceScale { levels }),
            1,
        )
    }

    /// Looks up a named built-in germ.
    pub fn builtin(name: &str, dim: usize, levels: usize) -> Option<Self> {
        match name {
            "linear" => Some(Self::linear(dim, levels)),
            "sine" | "sin" => Self::sine(dim, levels, 0.3).ok(),
            _ => None,
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogEntry {
    pub iteration: usize,
    pub level: usize,
    pub residual: f64,
}

/// Fixed point of the germ at one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionPoint {
    pub parameter: Vec<f64>,
    pub value: Vec<f64>,
    pub level: usize,
    pub log: Vec<LogEntry>,
    /// Largest step-to-step residual ratio above round-off.
    pub observed_rate: f64,
    /// The loop stopped at the round-off floor rather than at `tol`.
    pub roundoff_limited: bool,
}

impl SolutionPoint {
    pub fn log_csv(&self) -> String {
        log_csv(&self.log)
    }
}

pub fn log_csv(log: &[LogEntry]) -> String {
    let mut out = String::from("iteration,level,residual\n");
    for e in log {
        out.push_str(&format!("{},{},{:.17e}\n", e.iteration, e.level, e.residual));
    }
    out
}

/// Window of consecutive expanding steps that aborts the iteration.
const EXPANSION_WINDOW: usize = 3;

/// Banach iteration `u ← B(v,u)` from `u = 0` until `‖u − B(v,u)‖_m ≤ tol`.
///
/// With `tol = 0` the loop runs to the floating-point fixed point, stopping
/// when the residual stalls at round-off.
pub fn solve_germ(
    germ: &ContractionGerm,
    v: &[f64],
    level: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SolutionPoint, GermError> {
    if level >= germ.levels() {
        return Err(GermError::LevelOutOfRange { level, max: germ.levels() - 1 });
    }
    if v.len() != germ.param_dim {
        return Err(GermError::Dimension(format!("parameter has length {}", v.len())));
    }
    let radius = germ.trust_radii[level];
    if sup(v) > radius {
        return Err(GermError::OutsideTrustRegion { level, radius });
    }
    let mut u = vec![0.0; germ.state_dim];
    let mut log = Vec::new();
    let mut prev: Option<f64> = None;
    let mut expanding = 0;
    let mut stalled = 0;
    let mut best = f64::INFINITY;
    let mut rate = 0.0f64;
    for it in 0..=max_iter {
        let next = germ.apply(v, &u, level);
        let residual = germ.norm(&diff(&u, &next), level);
        log.push(LogEntry { iteration: it, level, residual });
        if !residual.is_finite() {
            return Err(GermError::ConvergenceFailure { iterations: it, residual });
        }
        let scale = 1.0 + germ.norm(&u, level);
        let floor = 64.0 * f64::EPSILON * scale;
        if residual <= tol || residual == 0.0 {
            return Ok(finish(v, u, level, log, rate, false));
        }
        if let Some(p) = prev {
            if p > floor && residual > floor {
                let ratio = residual / p;
                rate = rate.max(ratio);
                if ratio >= 1.0 {
                    expanding += 1;
                    if expanding >= EXPANSION_WINDOW {
                        return Err(GermError::NotAContraction { level, ratio });
                    }
                } else {
                    expanding = 0;
                }
            }
        }
        if residual <= floor {
            if residual < best {
                best = residual;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= EXPANSION_WINDOW {
                    return Ok(finish(v, u, level, log, rate, true));
                }
            }
        }
        prev = Some(residual);
        if it == max_iter {
            return Err(GermError::ConvergenceFailure { iterations: it, residual });
        }
        u = next;
    }
    unreachable!("loop returns on its last iteration")
}

fn finish(
    v: &[f64],
    value: Vec<f64>,
    level: usize,
    log: Vec<LogEntry>,
    observed_rate: f64,
    roundoff_limited: bool,
) -> SolutionPoint {
    SolutionPoint { parameter: v.to_vec(), value, level, log, observed_rate, roundoff_limited }
}

/// `v ↦ δ(v)` at a fixed level, solved to round-off.
#[derive(Debug, Clone)]
pub struct SolutionGerm {
    pub germ: ContractionGerm,
    pub level: usize,
    pub max_iter: usize,
}

impl SolutionGerm {
    pub fn new(germ: ContractionGerm, level: usize) -> Self {
        Self { germ, level, max_iter: 10_000 }
    }

    pub fn eval(&self, v: &[f64]) -> Result<Vec<f64>, GermError> {
        Ok(solve_germ(&self.germ, v, self.level, 0.0, self.max_iter)?.value)
    }
}

/// Finite-difference derivative estimates along one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub level: usize,
    pub steps: Vec<f64>,
    /// Central first differences, one vector per step.
    pub first: Vec<Vec<f64>>,
    /// Central second differences (empty when order < 2).
    pub second: Vec<Vec<f64>>,
    /// `‖D(h_i) − D(h_{i+1})‖_m` for the first differences.
    pub first_increments: Vec<f64>,
    pub second_increments: Vec<f64>,
    /// `log2` of successive increment ratios (≈ 2 for centered differences).
    pub first_orders: Vec<f64>,
    pub second_orders: Vec<f64>,
    pub all_finite: bool,
    pub passed: bool,
}

/// Central-difference derivatives of `δ` at `v0` along `direction` for each
/// step in the sweep, with observed orders from successive increments.
pub fn germ_smoothness_diagnostic(
    solution: &SolutionGerm,
    v0: &[f64],
    direction: &[f64],
    order: usize,
    steps: &[f64],
) -> Result<SmoothnessReport, GermError> {
    let level = solution.level;
    let norm = |x: &[f64]| solution.germ.norm(x, level);
    let at = |t: f64| -> Result<Vec<f64>, GermError> {
        let v: Vec<f64> = v0.iter().zip(direction).map(|(a, d)| a + t * d).collect();
        solution.eval(&v)
    };
    let center = at(0.0)?;
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &h in steps {
        let plus = at(h)?;
        let minus = at(-h)?;
        first.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<_>>());
        if order >= 2 {
            second.push(
                plus.iter()
                    .zip(&minus)
                    .zip(&center)
                    .map(|((p, m), c)| (p - 2.0 * c + m) / (h * h))
                    .collect::<Vec<_>>(),
            );
        }
    }
    let increments = |d: &[Vec<f64>]| -> Vec<f64> { d.windows(2).map(|w| norm(&diff(&w[0], &w[1]))).collect() };
    let orders = |inc: &[f64], ratio_of_steps: &[f64]| -> Vec<f64> {
        inc.windows(2)
            .zip(ratio_of_steps.windows(2))
            .map(|(w, r)| (w[0] / w[1]).ln() / (r[0] / r[1]).ln())
            .collect()
    };
    let first_increments = increments(&first);
    let second_increments = increments(&second);
    let first_orders = orders(&first_increments, steps);
    let second_orders = orders(&second_increments, steps);
    let all_finite = first.iter().chain(&second).flatten().all(|v| v.is_finite());
    // stabilized: increments shrink, or are already at round-off
    let settles = |inc: &[f64], scale: f64, power: i32| -> bool {
        let h_min = steps.iter().cloned().fold(f64::INFINITY, f64::min);
        let noise = 1e3 * f64::EPSILON * scale / h_min.powi(power);
        inc.windows(2).all(|w| w[1] <= w[0] * 1.05 || w[1] <= noise)
    };
    let scale = 1.0 + norm(&center);
    let passed = all_finite
        && settles(&first_increments, scale, 1)
        && (order < 2 || settles(&second_increments, scale, 2));
    Ok(SmoothnessReport {
        level,
        steps: steps.to_vec(),
        first,
        second,
        first_increments,
        second_increments,
        first_orders,
        second_orders,
        all_finite,
        passed,
    })
}

// Fillers -------------------------------------------------------------------

/// The linear operator `h ↦ ḣ − H·h` on a line space.
#[derive(Debug, Clone)]
pub struct MorseFiller {
    pub hessian: DMatrix<f64>,
    pub space: Arc<ScaleSpace>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Relative threshold for a zero Hessian eigenvalue.
pub const DEGENERACY_TOL: f64 = 1e-8;

pub fn build_morse_filler(hessian: &DMatrix<f64>, space: Arc<ScaleSpace>) -> Result<MorseFiller, GermError> {
    let n = hessian.nrows();
    if hessian.ncols() != n || space.target_dim() != n || space.is_cylinder() {
        return Err(GermError::Dimension("Hessian must be square and match the line space".into()));
    }
    let sym = (hessian + hessian.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if smallest < DEGENERACY_TOL * scale {
        return Err(GermError::DegenerateCriticalPoint(smallest));
    }
    Ok(MorseFiller {
        hessian: sym,
        space,
        eigenvalues: eig.eigenvalues.iter().cloned().collect(),
        eigenvectors: eig.eigenvectors,
    })
}

impl MorseFiller {
    /// Pointwise `ḣ − H h` with centered differences (one-sided at the ends).
    pub fn apply(&self, h: &GridFunction) -> Result<GridFunction, GermError> {
        if !h.space().same_geometry(&self.space) || h.space().s_nodes() != self.space.s_nodes() {
            return Err(ScError::DomainMismatch("filler input on a different grid".into()).into());
        }
        let n = self.space.s_nodes();
        let d = self.space.target_dim();
        let step = self.space.s_step();
        let mut out = GridFunction::zeros(&self.space, h.declared_level().saturating_sub(1));
        for i in 0..n {
            let (a, b, w) = if i == 0 {
                (0, 1, step)
            } else if i == n - 1 {
                (n - 2, n - 1, step)
            } else {
                (i - 1, i + 1, 2.0 * step)
            };
            for c in 0..d {
                let deriv = (h.at(b, 0)[c] - h.at(a, 0)[c]) / w;
                let hv: f64 = (0..d).map(|k| self.hessian[(c, k)] * h.at(i, 0)[k]).sum();
                out.values_mut()[i * d + c] = deriv - hv;
            }
        }
        Ok(out)
    }

    /// Square boundary-value discretization: trapezoid rows on each interval
    /// plus projected boundary rows (negative-eigenspace part vanishes at the
    /// left end, positive part at the right end).
    pub fn bvp_matrix(&self) -> DMatrix<f64> {
        let n = self.space.s_nodes();
        let d = self.space.target_dim();
        let h = self.space.s_step();
        let mut a = DMatrix::<f64>::zeros(n * d, n * d);
        let id = DMatrix::<f64>::identity(d, d);
        let left = &id / h + &self.hessian * 0.5;
        let right = &id / h - &self.hessian * 0.5;
        for i in 0..n - 1 {
            for r in 0..d {
                for c in 0..d {
                    a[(i * d + r, i * d + c)] = -left[(r, c)];
                    a[(i * d + r, (i + 1) * d + c)] = right[(r, c)];
                }
            }
        }
        let mut row = (n - 1) * d;
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let node = if lam < 0.0 { 0 } else { n - 1 };
            for c in 0..d {
                a[(row, node * d + c)] = self.eigenvectors[(c, k)];
            }
            row += 1;
        }
        a
    }

    /// Smallest singular value of `W A W⁻¹` with `W = diag(e^{δ|s|})`.
    pub fn weighted_min_singular_value(&self, delta: f64) -> f64 {
        let a = self.bvp_matrix();
        let n = self.space.s_nodes();
        let d = self.space.target_dim();
        let w: Vec<f64> = (0..n * d).map(|k| (delta * self.space.s_at(k / d).abs()).exp()).collect();
        // row weights follow the interval midpoints for interior rows
        let h = self.space.s_step();
        let mut rw = vec![1.0; n * d];
        for (k, r) in rw.iter_mut().enumerate().take((n - 1) * d) {
            let mid = self.space.s_at(k / d) + 0.5 * h;
            *r = (delta * mid.abs()).exp();
        }
        let m = DMatrix::from_fn(n * d, n * d, |i, j| rw[i] * a[(i, j)] / w[j]);
        m.svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

type ParamMatrix = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type BaseMap = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// `F(v,u) = P_v f̄(v, P_v u) + (I − P_v) F_v (I − P_v) u`.
#[derive(Clone)]
pub struct FilledSection {
    pub dim: usize,
    projection: ParamMatrix,
    base: BaseMap,
    filler: ParamMatrix,
}

impl fmt::Debug for FilledSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilledSection").field("dim", &self.dim).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSetReport {
    pub samples: usize,
    pub filled_solutions: usize,
    pub base_solutions: usize,
    /// Indices where the two classifications disagree.
    pub violations: Vec<usize>,
}

impl FilledSection {
    pub fn new(
        dim: usize,
        projection: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        base: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        filler: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, projection: Arc::new(projection), base: Arc::new(base), filler: Arc::new(filler) }
    }

    fn split(&self, v: &[f64], u: &[f64]) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let p = (self.projection)(v);
        let u = DVector::from_column_slice(u);
        let core = &p * &u;
        let comp = &u - &core;
        (p, core, comp)
    }

    pub fn base_part(&self, v: &[f64], u: &[f64]) -> DVector<f64> {
        let (p, core, _) = self.split(v, u);
        let b = DVector::from_vec((self.base)(v, core.as_slice()));
        &p * b
    }

    pub fn filler_part(&self, v: &[f64], u: &[f64]) -> DVector<f64> {
        let (p, _, comp) = self.split(v, u);
        let q = DMatrix::<f64>::identity(self.dim, self.dim) - p;
        &q * ((self.filler)(v) * comp)
    }

    pub fn eval(&self, v: &[f64], u: &[f64]) -> DVector<f64> {
        self.base_part(v, u) + self.filler_part(v, u)
    }

    /// Smallest singular value of the filler restricted to `range(I − P_v)`.
    pub fn complement_min_singular_value(&self, v: &[f64]) -> f64 {
        let p = (self.projection)(v);
        let q = DMatrix::<f64>::identity(self.dim, self.dim) - p;
        let svd = q.clone().svd(true, false);
        let u = svd.u.expect("requested");
        let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cols: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-9 * top.max(1.0)).collect();
        if cols.is_empty() {
            return f64::INFINITY;
        }
        let basis = u.select_columns(&cols);
        let block = basis.transpose() * &q * (self.filler)(v) * &basis;
        block.svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Compares the zero set of the filled section with that of the base
/// section plus the complement condition.
pub fn filled_zero_set_check(filled: &FilledSection, samples: &[(Vec<f64>, Vec<f64>)], tol: f64) -> ZeroSetReport {
    let mut report =
        ZeroSetReport { samples: samples.len(), filled_solutions: 0, base_solutions: 0, violations: Vec::new() };
    for (k, (v, u)) in samples.iter().enumerate() {
        let filled_zero = filled.eval(v, u).amax() <= tol;
        let (_, _, comp) = filled.split(v, u);
        let base_zero = comp.amax() <= tol && filled.base_part(v, u).amax() <= tol;
        report.filled_solutions += filled_zero as usize;
        report.base_solutions += base_zero as usize;
        if filled_zero != base_zero {
            report.violations.push(k);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchoring_is_enforced() {
        let r = ContractionGerm::new(
            "shifted",
            1,
            1,
            |_, u, _| vec![0.5 * u[0] + 1.0],
            vec![0.5],
            vec![1.0],
            Arc::new(SequenceScale { levels: 1 }),
            0,
        );
        assert!(matches!(r, Err(GermError::NotAnchored(_))));
    }

    #[test]
    fn expansion_is_rejected_at_construction() {
        let r = ContractionGerm::new(
            "expanding",
            1,
            1,
            |v, u, _| vec![1.5 * u[0] + v[0]],
            vec![0.5],
            vec![1.0],
            Arc::new(SequenceScale { levels: 1 }),
            0,
        );
        assert!(matches!(r, Err(GermError::NotAContraction { .. })));
    }

    #[test]
    fn origin_solves_to_origin() {
        let g = ContractionGerm::sine(3, 2, 0.3).unwrap();
        let s = solve_germ(&g, &[0.0; 3], 1, 1e-14, 100).unwrap();
        assert!(s.value.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn trust_region_checked() {
        let g = ContractionGerm::linear(1, 3);
        assert!(matches!(
            solve_germ(&g, &[1.0], 2, 1e-12, 100),
            Err(GermError::OutsideTrustRegion { level: 2, .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let g = ContractionGerm::linear(1, 1);
        match solve_germ(&g, &[0.5], 0, 1e-300, 5) {
            Err(GermError::ConvergenceFailure { residual, .. }) => assert!(residual > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
