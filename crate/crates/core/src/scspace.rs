//! Discretized scale spaces.
//!
//! A [`ScaleSpace`] is a uniform grid on a truncated line `[-L, L]` or a
//! truncated cylinder `[-L, L] × S¹` (with `S¹ = ℝ/ℤ`) together with a
//! strictly increasing sequence of exponential weights. Level `m` carries the
//! discrete Sobolev norm of order `base_order + m` in which every derivative
//! term is weighted pointwise by `exp(δ_m |s|)`. Because each level contains
//! all terms of the previous one with a larger weight, the filtration is
//! monotone with constant 1.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp;

/// Default number of levels when a configuration does not list weights.
pub const DEFAULT_LEVELS: usize = 4;

/// Largest node count accepted by [`embedding_diagnostic`] (dense Gram matrices).
pub const MAX_DIAGNOSTIC_NODES: usize = 1500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("level {level} out of range (highest available level is {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("invalid level pair: lower {lower} must be below higher {higher}")]
    InvalidPair { lower: usize, higher: usize },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("evaluation produced non-finite values: {0}")]
    Evaluation(String),
    #[error("grid with {nodes} nodes exceeds the dense limit of {max}")]
    TooLarge { nodes: usize, max: usize },
}

/// Shape of the underlying domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    /// `[-half_length, half_length]` with grid spacing `step`.
    Line { half_length: f64, step: f64 },
    /// `[-half_length, half_length] × S¹`; the circle carries `round(1/step)`
    /// nodes (at least 4).
    Cylinder { half_length: f64, step: f64 },
}

impl DomainSpec {
    pub fn is_cylinder(&self) -> bool {
        matches!(self, DomainSpec::Cylinder { .. })
    }
}

/// Everything needed to build a [`ScaleSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub domain: DomainSpec,
    pub base_order: usize,
    pub weights: Vec<f64>,
    pub target_dim: usize,
    /// Upper bound on the weights (the spectral gap in the Morse
    /// configuration). Cylinders are always bounded by `2π`.
    #[serde(default)]
    pub weight_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSpace {
    domain: DomainSpec,
    s_start: f64,
    s_step: f64,
    s_nodes: usize,
    t_nodes: usize,
    base_order: usize,
    order_step: usize,
    weights: Vec<f64>,
    target_dim: usize,
    weight_bound: Option<f64>,
}

/// Builds a scale space, validating the weight sequence and the grid.
pub fn make_scale_space(spec: &SpaceSpec) -> Result<Arc<ScaleSpace>, ScError> {
    let (half_length, step) = match spec.domain {
        DomainSpec::Line { half_length, step } | DomainSpec::Cylinder { half_length, step } => {
            (half_length, step)
        }
    };
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(ScError::InvalidDomain(format!("half length {half_length} must be positive")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(ScError::InvalidDomain(format!("grid spacing {step} must be positive")));
    }
    if spec.target_dim == 0 {
        return Err(ScError::InvalidDomain("target dimension must be at least 1".into()));
    }
    let cells = (2.0 * half_length / step).round();
    if cells < 1.0 {
        return Err(ScError::InvalidDomain("grid has no cells".into()));
    }
    validate_weights(&spec.weights)?;
    let bound = match spec.domain {
        DomainSpec::Cylinder { .. } => {
            let b = 2.0 * std::f64::consts::PI;
            Some(spec.weight_bound.map_or(b, |w| w.min(b)))
        }
        DomainSpec::Line { .. } => spec.weight_bound,
    };
    if let Some(b) = bound {
        if let Some(&top) = spec.weights.last() {
            if top >= b {
                return Err(ScError::InvalidWeights(format!(
                    "weight {top} is not strictly below the bound {b}"
                )));
            }
        }
    }
    let t_nodes = match spec.domain {
        DomainSpec::Line { .. } => 1,
        DomainSpec::Cylinder { step, .. } => ((1.0 / step).round() as usize).max(4),
    };
    Ok(Arc::new(ScaleSpace {
        domain: spec.domain,
        s_start: -half_length,
        s_step: 2.0 * half_length / cells,
        s_nodes: cells as usize + 1,
        t_nodes,
        base_order: spec.base_order,
        order_step: 1,
        weights: spec.weights.clone(),
        target_dim: spec.target_dim,
        weight_bound: bound,
    }))
}

fn validate_weights(weights: &[f64]) -> Result<(), ScError> {
    if weights.is_empty() {
        return Err(ScError::InvalidWeights("at least one weight is required".into()));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(ScError::InvalidWeights("weights must be finite".into()));
    }
    if weights[0] < 0.0 {
        return Err(ScError::InvalidWeights(format!("δ_0 = {} is negative", weights[0])));
    }
    for (m, pair) in weights.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(ScError::InvalidWeights(format!(
                "weights not strictly increasing at level {}: {} <= {}",
                m + 1,
                pair[1],
                pair[0]
            )));
        }
    }
    Ok(())
}

impl ScaleSpace {
    /// A control space whose levels all carry the same order and weight.
    ///
    /// It violates the strict increase on purpose; its embeddings are
    /// isometries and serve as the flat reference for
    /// [`embedding_diagnostic`].
    pub fn degenerate_control(
        domain: DomainSpec,
        base_order: usize,
        weight: f64,
        levels: usize,
        target_dim: usize,
    ) -> Result<Arc<ScaleSpace>, ScError> {
        let mut space = make_scale_space(&SpaceSpec {
            domain,
            base_order,
            weights: vec![weight],
            target_dim,
            weight_bound: None,
        })?;
        let s = Arc::make_mut(&mut space);
        s.weights = vec![weight; levels.max(1)];
        s.order_step = 0;
        Ok(space)
    }

    /// Same weights and spacing on the s-range `[start, start + (nodes-1)·h]`.
    pub fn with_s_range(&self, start: f64, nodes: usize) -> Arc<ScaleSpace> {
        let mut s = self.clone();
        s.s_start = start;
        s.s_nodes = nodes.max(1);
        Arc::new(s)
    }

    /// Same grid and weights with a different target dimension.
    pub fn with_target_dim(&self, target_dim: usize) -> Arc<ScaleSpace> {
        let mut s = self.clone();
        s.target_dim = target_dim.max(1);
        Arc::new(s)
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }
    pub fn is_cylinder(&self) -> bool {
        self.domain.is_cylinder()
    }
    pub fn levels_available(&self) -> usize {
        self.weights.len()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn weight_bound(&self) -> Option<f64> {
        self.weight_bound
    }
    pub fn base_order(&self) -> usize {
        self.base_order
    }
    /// Number of derivatives controlled by the level-`m` norm.
    pub fn order(&self, m: usize) -> usize {
        self.base_order + m * self.order_step
    }
    pub fn target_dim(&self) -> usize {
        self.target_dim
    }
    pub fn s_nodes(&self) -> usize {
        self.s_nodes
    }
    pub fn t_nodes(&self) -> usize {
        self.t_nodes
    }
    pub fn s_step(&self) -> f64 {
        self.s_step
    }
    pub fn s_start(&self) -> f64 {
        self.s_start
    }
    pub fn s_end(&self) -> f64 {
        self.s_start + (self.s_nodes - 1) as f64 * self.s_step
    }
    pub fn t_step(&self) -> f64 {
        1.0 / self.t_nodes as f64
    }
    pub fn s_at(&self, i: usize) -> f64 {
        self.s_start + i as f64 * self.s_step
    }
    pub fn t_at(&self, j: usize) -> f64 {
        if self.is_cylinder() {
            j as f64 / self.t_nodes as f64
        } else {
            0.0
        }
    }
    /// Number of grid nodes (s-nodes times circle nodes).
    pub fn node_count(&self) -> usize {
        self.s_nodes * self.t_nodes
    }
    /// Length of the flat value array of a grid function.
    pub fn value_len(&self) -> usize {
        self.node_count() * self.target_dim
    }
    #[inline]
    pub fn index(&self, i: usize, j: usize, c: usize) -> usize {
        (i * self.t_nodes + j) * self.target_dim + c
    }

    /// Same grid geometry (spacing, circle, dimension), possibly different s-range.
    pub fn same_geometry(&self, other: &ScaleSpace) -> bool {
        self.t_nodes == other.t_nodes
            && self.target_dim == other.target_dim
            && (self.s_step - other.s_step).abs() <= 1e-12 * self.s_step
    }

    fn cell_area(&self) -> f64 {
        if self.is_cylinder() {
            self.s_step * self.t_step()
        } else {
            self.s_step
        }
    }
}

/// Values of a function on the nodes of a [`ScaleSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    space: Arc<ScaleSpace>,
    values: Vec<f64>,
    level: usize,
}

impl GridFunction {
    pub fn new(space: Arc<ScaleSpace>, values: Vec<f64>, level: usize) -> Result<Self, ScError> {
        if values.len() != space.value_len() {
            return Err(ScError::DomainMismatch(format!(
                "expected {} values, got {}",
                space.value_len(),
                values.len()
            )));
        }
        if level >= space.levels_available() {
            return Err(ScError::LevelOutOfRange { level, max: space.levels_available() - 1 });
        }
        Ok(Self { space, values, level })
    }

    pub fn zeros(space: &Arc<ScaleSpace>, level: usize) -> Self {
        Self {
            values: vec![0.0; space.value_len()],
            space: space.clone(),
            level: level.min(space.levels_available() - 1),
        }
    }

    /// Samples `f(s, t, out)` at every node; `t = 0` on line domains.
    pub fn from_fn(
        space: &Arc<ScaleSpace>,
        level: usize,
        mut f: impl FnMut(f64, f64, &mut [f64]),
    ) -> Self {
        let mut g = Self::zeros(space, level);
        let d = space.target_dim;
        for i in 0..space.s_nodes {
            for j in 0..space.t_nodes {
                let k = space.index(i, j, 0);
                f(space.s_at(i), space.t_at(j), &mut g.values[k..k + d]);
            }
        }
        g
    }

    pub fn space(&self) -> &Arc<ScaleSpace> {
        &self.space
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn declared_level(&self) -> usize {
        self.level
    }
    pub fn with_level(mut self, level: usize) -> Result<Self, ScError> {
        if level >= self.space.levels_available() {
            return Err(ScError::LevelOutOfRange { level, max: self.space.levels_available() - 1 });
        }
        self.level = level;
        Ok(self)
    }

    /// Vector value at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let k = self.space.index(i, j, 0);
        &self.values[k..k + self.space.target_dim]
    }

    fn check_compatible(&self, other: &GridFunction) -> Result<(), ScError> {
        if self.values.len() != other.values.len() || !self.space.same_geometry(&other.space) {
            return Err(ScError::DomainMismatch("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// `self + alpha·other`, keeping the lower of the two declared levels.
    pub fn axpy(&self, alpha: f64, other: &GridFunction) -> Result<GridFunction, ScError> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        Ok(GridFunction { space: self.space.clone(), values, level: self.level.min(other.level) })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction, ScError> {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        GridFunction {
            space: self.space.clone(),
            values: self.values.iter().map(|v| alpha * v).collect(),
            level: self.level,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Weighted Sobolev norm at level `m`; see [`level_norm`].
    pub fn norm(&self, m: usize) -> Result<f64, ScError> {
        level_norm(self, m)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

// Finite differences ---------------------------------------------------------

/// Second-order gradient along a uniform 1-D array (one-sided at the ends).
fn gradient(f: &[f64], h: f64, out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, 0.0);
    match n {
        0 | 1 => {}
        2 => {
            let d = (f[1] - f[0]) / h;
            out[0] = d;
            out[1] = d;
        }
        _ => {
            out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
            }
            out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        }
    }
}

/// Centered derivative of one period of samples.
fn periodic_gradient(f: &[f64], h: f64, out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, 0.0);
    if n < 3 {
        return;
    }
    for j in 0..n {
        out[j] = (f[(j + 1) % n] - f[(j + n - 1) % n]) / (2.0 * h);
    }
}

/// Calls `sink(node, weighted_derivative)` for every derivative term of the
/// level-`m` norm of one scalar component (`field[i·nt + j]`).
fn for_each_weighted_term(
    space: &ScaleSpace,
    field: &[f64],
    m: usize,
    mut sink: impl FnMut(f64),
) {
    let ns = space.s_nodes;
    let nt = space.t_nodes;
    let order = space.order(m);
    let delta = space.weights[m];
    let cell = space.cell_area();
    let root_w: Vec<f64> =
        (0..ns).map(|i| (cell.sqrt()) * (delta * space.s_at(i).abs()).exp()).collect();

    // t-derivatives of order 0..=order (only order 0 on lines)
    let t_orders = if space.is_cylinder() { order } else { 0 };
    let mut t_layer = field.to_vec();
    let mut row = Vec::with_capacity(nt);
    let mut drow = Vec::with_capacity(nt);
    let mut col = Vec::with_capacity(ns);
    let mut dcol = Vec::with_capacity(ns);
    for jt in 0..=t_orders {
        if jt > 0 {
            for i in 0..ns {
                row.clear();
                row.extend_from_slice(&t_layer[i * nt..(i + 1) * nt]);
                periodic_gradient(&row, space.t_step(), &mut drow);
                t_layer[i * nt..(i + 1) * nt].copy_from_slice(&drow);
            }
        }
        for j in 0..nt {
            col.clear();
            col.extend((0..ns).map(|i| t_layer[i * nt + j]));
            for is in 0..=(order - jt) {
                if is > 0 {
                    gradient(&col, space.s_step, &mut dcol);
                    std::mem::swap(&mut col, &mut dcol);
                }
                for i in 0..ns {
                    sink(root_w[i] * col[i]);
                }
            }
        }
    }
}

/// Discrete weighted Sobolev norm of `u` at level `m`.
pub fn level_norm(u: &GridFunction, m: usize) -> Result<f64, ScError> {
    if m > u.level {
        return Err(ScError::LevelOutOfRange { level: m, max: u.level });
    }
    let space = &u.space;
    let d = space.target_dim;
    let mut total = 0.0;
    let mut field = vec![0.0; space.node_count()];
    for c in 0..d {
        for (node, slot) in field.iter_mut().enumerate() {
            *slot = u.values[node * d + c];
        }
        for_each_weighted_term(space, &field, m, |v| total += v * v);
    }
    Ok(total.sqrt())
}

/// Level norms `0..=declared_level` as CSV rows `level,norm`.
pub fn norms_csv(u: &GridFunction) -> Result<String, ScError> {
    let mut out = String::from("level,norm\n");
    for m in 0..=u.level {
        out.push_str(&format!("{},{:.17e}\n", m, level_norm(u, m)?));
    }
    Ok(out)
}

// Compact embedding diagnostic ------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub m_lower: usize,
    pub m_higher: usize,
    /// Leading singular values of the inclusion, non-increasing.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    /// Set when `σ_k / σ_0 < threshold` for some `k` within the rank budget.
    pub compactness_consistent: bool,
}

impl EmbeddingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,singular_value\n");
        for (i, s) in self.singular_values.iter().enumerate() {
            out.push_str(&format!("{},{:.17e}\n", i, s));
        }
        out
    }

    /// Ratio of the last reported singular value to the first.
    pub fn decay_ratio(&self) -> Option<f64> {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&a), Some(&b)) if a > 0.0 => Some(b / a),
            _ => None,
        }
    }
}

/// Gram matrix `G` of the level-`m` norm on scalar grid functions:
/// `‖u‖_m² = uᵀ G u`.
fn gram_matrix(space: &ScaleSpace, m: usize) -> DMatrix<f64> {
    let n = space.node_count();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut basis = vec![0.0; n];
    for k in 0..n {
        basis[k] = 1.0;
        let mut col = Vec::new();
        for_each_weighted_term(space, &basis, m, |v| col.push(v));
        basis[k] = 0.0;
        columns.push(col);
    }
    let rows = columns.first().map_or(0, |c| c.len());
    let a = DMatrix::from_fn(rows, n, |r, c| columns[c][r]);
    a.transpose() * a
}

/// Singular values of the inclusion from the level-`m_higher` unit ball into
/// level `m_lower`, for scalar functions on the space's grid.
pub fn embedding_diagnostic(
    space: &ScaleSpace,
    m_lower: usize,
    m_higher: usize,
    rank_budget: usize,
    threshold: f64,
) -> Result<EmbeddingReport, ScError> {
    if m_lower >= m_higher {
        return Err(ScError::InvalidPair { lower: m_lower, higher: m_higher });
    }
    if m_higher >= space.levels_available() {
        return Err(ScError::LevelOutOfRange {
            level: m_higher,
            max: space.levels_available() - 1,
        });
    }
    let mut report = EmbeddingReport {
        m_lower,
        m_higher,
        singular_values: Vec::new(),
        threshold,
        compactness_consistent: false,
    };
    if rank_budget == 0 {
        return Ok(report);
    }
    let n = space.node_count();
    if n > MAX_DIAGNOSTIC_NODES {
        return Err(ScError::TooLarge { nodes: n, max: MAX_DIAGNOSTIC_NODES });
    }
    let g_low = gram_matrix(space, m_lower);
    let g_high = gram_matrix(space, m_higher);
    let chol = g_high
        .cholesky()
        .ok_or_else(|| ScError::Evaluation("level Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    // M = L⁻¹ G_low L⁻ᵀ
    let y = l
        .solve_lower_triangular(&g_low)
        .ok_or_else(|| ScError::Evaluation("triangular solve failed".into()))?;
    let m = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| ScError::Evaluation("triangular solve failed".into()))?;
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut sv: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv.truncate(rank_budget);
    let top = sv.first().copied().unwrap_or(0.0);
    report.compactness_consistent = top > 0.0 && sv.iter().any(|&s| s / top < threshold);
    report.singular_values = sv;
    Ok(report)
}

// Translation action ----------------------------------------------------------

/// `((c, ρ) * u)(s, t) = u(s + c, t + ρ)` on a cylinder, by piecewise cubic
/// interpolation; outside the window the end values are held constant.
pub fn translation_action(u: &GridFunction, c: f64, rho: f64) -> Result<GridFunction, ScError> {
    let space = u.space.clone();
    if !space.is_cylinder() {
        return Err(ScError::DomainMismatch("translation action needs a cylinder domain".into()));
    }
    let ns = space.s_nodes;
    let nt = space.t_nodes;
    let d = space.target_dim;
    let mut out = GridFunction::zeros(&space, u.level);
    let mut ring = vec![0.0; nt];
    let mut shifted_t = vec![0.0; ns * nt];
    let mut col = vec![0.0; ns];
    for comp in 0..d {
        for i in 0..ns {
            for j in 0..nt {
                ring[j] = u.values[space.index(i, j, comp)];
            }
            for j in 0..nt {
                shifted_t[i * nt + j] =
                    interp::sample_periodic(&ring, space.t_step(), space.t_at(j) + rho);
            }
        }
        for j in 0..nt {
            for i in 0..ns {
                col[i] = shifted_t[i * nt + j];
            }
            for i in 0..ns {
                out.values[space.index(i, j, comp)] =
                    interp::sample_clamped(&col, space.s_start, space.s_step, space.s_at(i) + c);
            }
        }
    }
    Ok(out)
}

// sc¹ diagnostics -------------------------------------------------------------

/// Finite-difference sweep of `‖f(u+th) − f(u) − t·Df(u)h‖₀ / ‖th‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sc1Report {
    pub steps: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Least-squares slope of `ln q` against `ln t`; `None` when every
    /// quotient sits at round-off.
    pub observed_order: Option<f64>,
    pub max_quotient: f64,
    /// `‖f(u)‖₀ / ‖h‖₁`, the scale against which round-off is judged.
    pub scale: f64,
}

impl Sc1Report {
    /// True when every quotient is below `rel_tol·(1 + scale)`.
    pub fn zero_remainder(&self, rel_tol: f64) -> bool {
        self.max_quotient <= rel_tol * (1.0 + self.scale)
    }
}

/// Step used for the central-difference estimate of `Df(u)h`.
pub const SC1_DERIVATIVE_STEP: f64 = 1e-5;

/// Default geometric step sweep.
pub fn default_steps() -> Vec<f64> {
    (0..8).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn order_from_sweep(steps: &[f64], quotients: &[f64], floor: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(quotients)
        .filter(|(_, &q)| q.is_finite() && q > floor)
        .map(|(&t, &q)| (t.ln(), q.ln()))
        .unzip();
    slope(&xs, &ys)
}

/// sc¹ check of a map between grid-function spaces at `u` in direction `h`.
pub fn sc1_check<F>(
    map: F,
    u: &GridFunction,
    h: &GridFunction,
    steps: &[f64],
) -> Result<Sc1Report, ScError>
where
    F: Fn(&GridFunction) -> Result<GridFunction, ScError>,
{
    if u.level < 1 {
        return Err(ScError::LevelOutOfRange { level: 1, max: u.level });
    }
    let h1 = level_norm(h, 1.min(h.level))?;
    if h1 == 0.0 {
        return Err(ScError::Evaluation("direction has zero level-1 norm".into()));
    }
    let eval = |x: &GridFunction| -> Result<GridFunction, ScError> {
        let y = map(x)?;
        if !y.is_finite() {
            return Err(ScError::Evaluation("map returned non-finite values".into()));
        }
        Ok(y.with_level(0)?)
    };
    let fu = eval(u)?;
    let eps = SC1_DERIVATIVE_STEP;
    let fp = eval(&u.axpy(eps, h)?)?;
    let fm = eval(&u.axpy(-eps, h)?)?;
    let dfh = fp.sub(&fm)?.scaled(0.5 / eps);
    let mut quotients = Vec::with_capacity(steps.len());
    for &t in steps {
        let ft = eval(&u.axpy(t, h)?)?;
        let rem = ft.sub(&fu)?.axpy(-t, &dfh)?;
        quotients.push(level_norm(&rem, 0)? / (t.abs() * h1));
    }
    let scale = level_norm(&fu, 0)? / h1;
    Ok(finish_report(steps, quotients, scale))
}

/// sc¹ check of a one-parameter family `c ↦ f(c)` at `c0`.
pub fn sc1_check_parameter<F>(map: F, c0: f64, steps: &[f64]) -> Result<Sc1Report, ScError>
where
    F: Fn(f64) -> Result<GridFunction, ScError>,
{
    let eval = |c: f64| -> Result<GridFunction, ScError> {
        let y = map(c)?;
        if !y.is_finite() {
            return Err(ScError::Evaluation(format!("non-finite values at c = {c}")));
        }
        Ok(y.with_level(0)?)
    };
    let f0 = eval(c0)?;
    let eps = SC1_DERIVATIVE_STEP;
    let dfh = eval(c0 + eps)?.sub(&eval(c0 - eps)?)?.scaled(0.5 / eps);
    let mut quotients = Vec::with_capacity(steps.len());
    for &t in steps {
        let rem = eval(c0 + t)?.sub(&f0)?.axpy(-t, &dfh)?;
        quotients.push(level_norm(&rem, 0)? / t.abs());
    }
    let scale = level_norm(&f0, 0)?;
    Ok(finish_report(steps, quotients, scale))
}

fn finish_report(steps: &[f64], quotients: Vec<f64>, scale: f64) -> Sc1Report {
    let max_quotient = quotients.iter().fold(0.0f64, |m, &q| m.max(q));
    // quotients at round-off carry no order information
    let floor = 1e-9 * (1.0 + scale);
    Sc1Report {
        steps: steps.to_vec(),
        observed_order: order_from_sweep(steps, &quotients, floor),
        quotients,
        max_quotient,
        scale,
    }
}
