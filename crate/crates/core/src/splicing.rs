//! Cut-off, gluing profiles, gluing / anti-gluing and the splicing projection.
//!
//! Two variants are supported:
//!
//! - **Morse line**: pairs `(h, k)` of vector fields on the same line grid,
//!   glued with `⊕_R(h,k)(s) = β(s−R/2)h(s) + (1−β(s−R/2))k(s−R)` and
//!   anti-glued with `⊖_R(h,k)(s) = −(1−β(s−R/2))h(s) + β(s−R/2)k(s−R)`.
//! - **GW cylinder**: pairs `(h⁺, h⁻)` on half cylinders `[0,L]×S¹` and
//!   `[−L,0]×S¹` sharing an asymptotic constant, glued over `Z_a` and
//!   anti-glued over `Σ_a` with the `av_R` correction.
//!
//! Glued outputs on the line live on the extended grid `[−L, L+R]`, so the
//! total gluing is an exact bijection on the discrete level when `R` is a
//! multiple of the grid spacing.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use serde::Serialize;
use thiserror::Error;

use crate::interp;
use crate::scspace::{GridFunction, ScError, ScaleSpace};

/// Upper limit on extended-grid sizes produced by gluing.
pub const MAX_GLUE_NODES: usize = 4_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplicingError {
    #[error("gluing parameter {0} outside its domain")]
    Domain(f64),
    #[error("interface mismatch: end values differ by {gap:e}")]
    InterfaceMismatch { gap: f64 },
    #[error("gluing parameter modulus {0} exceeds 1/2")]
    ParameterOutOfRange(f64),
    #[error("the cut-off transition is cut by the truncation window (R = {length})")]
    WindowTooShort { length: f64 },
    #[error("gluing length {length} needs {nodes} grid nodes")]
    GluingTooLong { length: f64, nodes: usize },
    #[error("operation needs the {expected} variant")]
    VariantMismatch { expected: &'static str },
    #[error(transparent)]
    Space(#[from] ScError),
}

// Cut-off -------------------------------------------------------------------

#[inline]
fn bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

#[inline]
fn bump_derivative(x: f64) -> f64 {
    if x > 0.0 {
        bump(x) / (x * x)
    } else {
        0.0
    }
}

/// Smooth cut-off `β(s) = ψ(1−s) / (ψ(1−s) + ψ(1+s))` with `ψ(x) = e^{−1/x}`.
///
/// `β = 1` on `s ≤ −1`, `β = 0` on `s ≥ 1`, strictly decreasing in between,
/// and `β(s) + β(−s) = 1` since both terms share the denominator.
pub fn beta(s: f64) -> f64 {
    let a = bump(1.0 - s);
    let b = bump(1.0 + s);
    a / (a + b)
}

/// Derivative of [`beta`].
pub fn beta_derivative(s: f64) -> f64 {
    if s <= -1.0 || s >= 1.0 {
        return 0.0;
    }
    let a = bump(1.0 - s);
    let b = bump(1.0 + s);
    let da = -bump_derivative(1.0 - s);
    let db = bump_derivative(1.0 + s);
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Determinant `β² + (1−β)²` of the pointwise total-gluing matrix.
pub fn total_gluing_determinant(b: f64) -> f64 {
    b * b + (1.0 - b) * (1.0 - b)
}

// Gluing profiles -----------------------------------------------------------

/// Diffeomorphism `(0,1] → [0,∞)` turning a gluing parameter into a length.
#[derive(Clone)]
pub enum GluingProfile {
    /// `φ(r) = e^{1/r} − e`
    Exponential,
    /// `φ(x) = −ln(x) / 2π`
    Logarithmic,
    Custom {
        name: String,
        forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for GluingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl GluingProfile {
    pub fn name(&self) -> &str {
        match self {
            GluingProfile::Exponential => "exponential",
            GluingProfile::Logarithmic => "logarithmic",
            GluingProfile::Custom { name, .. } => name,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "exponential" | "exp" => Some(GluingProfile::Exponential),
            "logarithmic" | "log" => Some(GluingProfile::Logarithmic),
            _ => None,
        }
    }

    /// Gluing length `R = φ(r)` for `r ∈ (0, 1]`.
    pub fn length(&self, r: f64) -> Result<f64, SplicingError> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(SplicingError::Domain(r));
        }
        Ok(match self {
            GluingProfile::Exponential => (1.0 / r).exp() - std::f64::consts::E,
            GluingProfile::Logarithmic => -r.ln() / (2.0 * std::f64::consts::PI),
            GluingProfile::Custom { forward, .. } => forward(r),
        })
    }

    /// Inverse `φ⁻¹(R)` for `R ≥ 0`.
    pub fn parameter(&self, length: f64) -> Result<f64, SplicingError> {
        if !(length >= 0.0) {
            return Err(SplicingError::Domain(length));
        }
        Ok(match self {
            GluingProfile::Exponential => 1.0 / (length + std::f64::consts::E).ln(),
            GluingProfile::Logarithmic => (-2.0 * std::f64::consts::PI * length).exp(),
            GluingProfile::Custom { inverse, .. } => inverse(length),
        })
    }
}

/// `profile_length` as a free function.
pub fn profile_length(profile: &GluingProfile, r: f64) -> Result<f64, SplicingError> {
    profile.length(r)
}

/// Gluing length including the `r = 0` end, where `R = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GluingLength {
    Finite(f64),
    Infinite,
}

impl GluingLength {
    pub fn from_parameter(profile: &GluingProfile, r: f64) -> Result<Self, SplicingError> {
        if r == 0.0 {
            Ok(GluingLength::Infinite)
        } else {
            Ok(GluingLength::Finite(profile.length(r)?))
        }
    }
}

/// How the shift `s ↦ s − R` meets the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Round `R` to the nearest grid multiple; total gluing is then exact.
    RoundToGrid,
    /// Keep `R` and interpolate shifted samples.
    Interpolate,
}

/// The shift actually applied, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ShiftMode {
    Aligned { nodes: usize, length: f64 },
    Interpolated { nodes: usize, length: f64 },
}

impl ShiftMode {
    pub fn nodes(&self) -> usize {
        match *self {
            ShiftMode::Aligned { nodes, .. } | ShiftMode::Interpolated { nodes, .. } => nodes,
        }
    }
    pub fn length(&self) -> f64 {
        match *self {
            ShiftMode::Aligned { length, .. } | ShiftMode::Interpolated { length, .. } => length,
        }
    }
    pub fn is_aligned(&self) -> bool {
        matches!(self, ShiftMode::Aligned { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    MorseLine,
    GwCylinder,
}

/// Cut-off, profile and grid bundled together.
#[derive(Debug, Clone)]
pub struct SplicingKernel {
    pub profile: GluingProfile,
    pub space: Arc<ScaleSpace>,
    pub variant: Variant,
    pub alignment: Alignment,
    /// Allowed gap between matched end values.
    pub interface_tol: f64,
}

/// A pair of grid functions: `(h, k)` on the line or `(h⁺, h⁻)` on the
/// cylinder halves.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub first: GridFunction,
    pub second: GridFunction,
}

impl FieldPair {
    pub fn new(first: GridFunction, second: GridFunction) -> Self {
        Self { first, second }
    }

    pub fn sub(&self, other: &FieldPair) -> Result<FieldPair, ScError> {
        Ok(FieldPair { first: self.first.sub(&other.first)?, second: self.second.sub(&other.second)? })
    }

    pub fn axpy(&self, alpha: f64, other: &FieldPair) -> Result<FieldPair, ScError> {
        Ok(FieldPair {
            first: self.first.axpy(alpha, &other.first)?,
            second: self.second.axpy(alpha, &other.second)?,
        })
    }

    /// `sqrt(‖first‖₀² + ‖second‖₀²)`.
    pub fn norm0(&self) -> Result<f64, ScError> {
        let a = self.first.norm(0)?;
        let b = self.second.norm(0)?;
        Ok(a.hypot(b))
    }

    pub fn sup_norm(&self) -> f64 {
        self.first.sup_norm().max(self.second.sup_norm())
    }

    /// Flat coordinates `[first.values, second.values]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.first.values().to_vec();
        v.extend_from_slice(self.second.values());
        v
    }

    /// Rebuilds a pair shaped like `self` from flat coordinates.
    pub fn like_from_slice(&self, data: &[f64]) -> FieldPair {
        let n = self.first.values().len();
        let mut a = self.first.clone();
        a.values_mut().copy_from_slice(&data[..n]);
        let mut b = self.second.clone();
        b.values_mut().copy_from_slice(&data[n..]);
        FieldPair { first: a, second: b }
    }
}

/// Gluing parameter: modulus `r ∈ [0,1)` and twist `ϑ` (cylinder only),
/// `a = r·e^{−2πiϑ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GluingParameter {
    pub modulus: f64,
    pub twist: f64,
}

impl GluingParameter {
    pub fn real(r: f64) -> Self {
        Self { modulus: r, twist: 0.0 }
    }

    pub fn from_complex(a: Complex<f64>) -> Self {
        let twist = if a.norm() == 0.0 { 0.0 } else { -a.arg() / (2.0 * std::f64::consts::PI) };
        Self { modulus: a.norm(), twist: twist.rem_euclid(1.0) }
    }
}

fn end_value(g: &GridFunction, first: bool) -> Vec<f64> {
    let space = g.space();
    let i = if first { 0 } else { space.s_nodes() - 1 };
    // circle average at the chosen end
    let d = space.target_dim();
    let nt = space.t_nodes();
    let mut out = vec![0.0; d];
    for j in 0..nt {
        for (c, o) in out.iter_mut().enumerate() {
            *o += g.at(i, j)[c] / nt as f64;
        }
    }
    out
}

impl SplicingKernel {
    pub fn new(profile: GluingProfile, space: Arc<ScaleSpace>, variant: Variant) -> Self {
        Self { profile, space, variant, alignment: Alignment::RoundToGrid, interface_tol: 1e-6 }
    }

    pub fn with_alignment(mut self, alignment: Alignment) -> Self {
        self.alignment = alignment;
        self
    }

    /// Shift plan for a finite gluing length.
    pub fn shift_mode(&self, length: f64) -> Result<ShiftMode, SplicingError> {
        if !(length >= 0.0) || !length.is_finite() {
            return Err(SplicingError::Domain(length));
        }
        let h = self.space.s_step();
        let raw = length / h;
        let nodes_f = match self.alignment {
            Alignment::RoundToGrid => raw.round(),
            Alignment::Interpolate => raw.ceil(),
        };
        if nodes_f + self.space.s_nodes() as f64 > MAX_GLUE_NODES as f64 {
            return Err(SplicingError::GluingTooLong { length, nodes: nodes_f as usize });
        }
        let nodes = nodes_f as usize;
        Ok(match self.alignment {
            Alignment::RoundToGrid => ShiftMode::Aligned { nodes, length: nodes as f64 * h },
            Alignment::Interpolate => {
                if (raw - raw.round()).abs() < 1e-9 {
                    ShiftMode::Aligned { nodes: raw.round() as usize, length }
                } else {
                    ShiftMode::Interpolated { nodes, length }
                }
            }
        })
    }

    fn require(&self, v: Variant) -> Result<(), SplicingError> {
        if self.variant != v {
            return Err(SplicingError::VariantMismatch {
                expected: match v {
                    Variant::MorseLine => "morse-line",
                    Variant::GwCylinder => "gw-cylinder",
                },
            });
        }
        Ok(())
    }

    fn check_line_pair(&self, u: &GridFunction, v: &GridFunction) -> Result<(), SplicingError> {
        self.require(Variant::MorseLine)?;
        for g in [u, v] {
            let s = g.space();
            if s.is_cylinder()
                || !s.same_geometry(&self.space)
                || s.s_nodes() != self.space.s_nodes()
            {
                return Err(ScError::DomainMismatch("pair must live on the kernel's line grid".into())
                    .into());
            }
        }
        let gap = end_value(u, false)
            .iter()
            .zip(end_value(v, true))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if gap > self.interface_tol {
            return Err(SplicingError::InterfaceMismatch { gap });
        }
        Ok(())
    }

    // Line variant ----------------------------------------------------------

    /// Values of `u` at extended node `p` and of `v` at `s_p − R`.
    fn line_samples<'a>(
        &self,
        u: &'a GridFunction,
        v: &'a GridFunction,
        mode: ShiftMode,
    ) -> impl Fn(usize, usize) -> (f64, f64) + 'a {
        let space = self.space.clone();
        let n = space.s_nodes();
        let d = space.target_dim();
        let h = space.s_step();
        let s0 = space.s_start();
        let shift_nodes = mode.nodes();
        let length = mode.length();
        let aligned = mode.is_aligned();
        move |p: usize, c: usize| {
            let uv = u.values()[p.min(n - 1) * d + c];
            let vv = if aligned {
                let j = p.saturating_sub(shift_nodes).min(n - 1);
                v.values()[j * d + c]
            } else {
                let col: Vec<f64> = (0..n).map(|i| v.values()[i * d + c]).collect();
                interp::sample_clamped(&col, s0, h, s0 + p as f64 * h - length)
            };
            (uv, vv)
        }
    }

    fn extended_space(&self, mode: ShiftMode) -> Arc<ScaleSpace> {
        self.space.with_s_range(self.space.s_start(), self.space.s_nodes() + mode.nodes())
    }

    fn line_combine(
        &self,
        u: &GridFunction,
        v: &GridFunction,
        length: f64,
        coeffs: impl Fn(f64) -> (f64, f64),
    ) -> Result<(GridFunction, ShiftMode), SplicingError> {
        let mode = self.shift_mode(length)?;
        let ext = self.extended_space(mode);
        let d = ext.target_dim();
        let r = mode.length();
        let mut out = GridFunction::zeros(&ext, u.declared_level().min(v.declared_level()));
        let n_ext = ext.s_nodes();
        let n = self.space.s_nodes();
        if mode.is_aligned() {
            let sample = self.line_samples(u, v, mode);
            for p in 0..n_ext {
                let (a, b) = coeffs(beta(ext.s_at(p) - r / 2.0));
                for c in 0..d {
                    let (x, y) = sample(p, c);
                    out.values_mut()[p * d + c] = a * x + b * y;
                }
            }
        } else {
            for c in 0..d {
                let col: Vec<f64> = (0..n).map(|i| v.values()[i * d + c]).collect();
                for p in 0..n_ext {
                    let s = ext.s_at(p);
                    let (a, b) = coeffs(beta(s - r / 2.0));
                    let x = u.values()[p.min(n - 1) * d + c];
                    let y = interp::sample_clamped(&col, self.space.s_start(), self.space.s_step(), s - r);
                    out.values_mut()[p * d + c] = a * x + b * y;
                }
            }
        }
        Ok((out, mode))
    }

    /// `⊕_R(u, v)` on the extended grid `[−L, L+R]`.
    pub fn glue_line(
        &self,
        u: &GridFunction,
        v: &GridFunction,
        length: f64,
    ) -> Result<GridFunction, SplicingError> {
        self.check_line_pair(u, v)?;
        Ok(self.line_combine(u, v, length, |b| (b, 1.0 - b))?.0)
    }

    /// `⊖_R(h, k)` on the extended grid `[−L, L+R]`.
    pub fn antiglue_line(
        &self,
        h: &GridFunction,
        k: &GridFunction,
        length: f64,
    ) -> Result<GridFunction, SplicingError> {
        self.check_line_pair(h, k)?;
        Ok(self.line_combine(h, k, length, |b| (-(1.0 - b), b))?.0)
    }

    /// `(⊕_R(h,k), ⊖_R(h,k))`.
    pub fn total_glue(
        &self,
        h: &GridFunction,
        k: &GridFunction,
        length: f64,
    ) -> Result<(GridFunction, GridFunction), SplicingError> {
        Ok((self.glue_line(h, k, length)?, self.antiglue_line(h, k, length)?))
    }

    /// Pointwise inverse of [`Self::total_glue`].
    pub fn total_unglue(
        &self,
        glued: &GridFunction,
        antiglued: &GridFunction,
        length: f64,
    ) -> Result<FieldPair, SplicingError> {
        self.require(Variant::MorseLine)?;
        let mode = self.shift_mode(length)?;
        let ext = self.extended_space(mode);
        for g in [glued, antiglued] {
            if g.space().s_nodes() != ext.s_nodes() || !g.space().same_geometry(&ext) {
                return Err(ScError::DomainMismatch("inputs must live on the extended glued grid".into())
                    .into());
            }
        }
        let n = self.space.s_nodes();
        let d = ext.target_dim();
        let r = mode.length();
        let level = glued.declared_level().min(antiglued.declared_level());
        let mut h = GridFunction::zeros(&self.space, level);
        let mut k = GridFunction::zeros(&self.space, level);
        let n_ext = ext.s_nodes();
        // k-values at the shifted positions s_p − R
        let mut kv = vec![0.0; n_ext * d];
        for p in 0..n_ext {
            let b = beta(ext.s_at(p) - r / 2.0);
            let det = total_gluing_determinant(b);
            for c in 0..d {
                let g = glued.values()[p * d + c];
                let a = antiglued.values()[p * d + c];
                let hv = (b * g - (1.0 - b) * a) / det;
                let kk = ((1.0 - b) * g + b * a) / det;
                if p < n {
                    h.values_mut()[p * d + c] = hv;
                }
                kv[p * d + c] = kk;
            }
        }
        match mode {
            ShiftMode::Aligned { nodes, .. } => {
                for j in 0..n {
                    for c in 0..d {
                        k.values_mut()[j * d + c] = kv[(j + nodes) * d + c];
                    }
                }
            }
            ShiftMode::Interpolated { .. } => {
                let start = ext.s_start() - r;
                for c in 0..d {
                    let col: Vec<f64> = (0..n_ext).map(|p| kv[p * d + c]).collect();
                    for j in 0..n {
                        k.values_mut()[j * d + c] =
                            interp::sample_clamped(&col, start, ext.s_step(), self.space.s_at(j));
                    }
                }
            }
        }
        Ok(FieldPair { first: h, second: k })
    }

    /// Fails when an unmatched node (partner outside the window) sits inside
    /// the cut-off transition, where the truncated kernels stop being
    /// complementary.
    pub fn check_window(&self, length: f64) -> Result<(), SplicingError> {
        let mode = self.shift_mode(length)?;
        let ext = self.extended_space(mode);
        let n = self.space.s_nodes();
        let shift = mode.nodes();
        let r = mode.length();
        for p in 0..ext.s_nodes() {
            let matched = p < n && p >= shift;
            if !matched {
                let b = beta(ext.s_at(p) - r / 2.0);
                if b != 0.0 && b != 1.0 {
                    return Err(SplicingError::WindowTooShort { length: r });
                }
            }
        }
        Ok(())
    }

    /// `π_r(e)`: projection onto `ker ⊖` along `ker ⊕`.
    pub fn splicing_projection(
        &self,
        param: GluingParameter,
        e: &FieldPair,
    ) -> Result<FieldPair, SplicingError> {
        let r = param.modulus;
        if !(0.0..1.0).contains(&r) {
            return Err(SplicingError::Domain(r));
        }
        match self.variant {
            Variant::MorseLine => {
                if r == 0.0 {
                    return Ok(e.clone());
                }
                let length = self.profile.length(r)?;
                let half = self.space.s_end().abs().max(self.space.s_start().abs());
                // cut-off transition entirely outside the window: π is the identity
                if length >= 2.0 * (half + 1.0) + self.space.s_step() {
                    self.check_line_pair(&e.first, &e.second)?;
                    return Ok(e.clone());
                }
                self.check_window(length)?;
                let glued = self.glue_line(&e.first, &e.second, length)?;
                let zero = GridFunction::zeros(glued.space(), glued.declared_level());
                self.total_unglue(&glued, &zero, length)
            }
            Variant::GwCylinder => {
                let a = param;
                let glued = self.glue_cylinder(e, a)?;
                match glued {
                    CylinderGlued::Nodal(pair) => Ok(pair),
                    CylinderGlued::Glued(g) => {
                        let sigma = self.sigma_space(self.profile.length(r)?)?;
                        let zero = GridFunction::zeros(&sigma, g.declared_level());
                        self.total_unglue_cylinder(&g, &zero, a, &e.first, &e.second)
                    }
                }
            }
        }
    }

    /// `‖π_r(e) − e‖₀ ≤ tol`.
    pub fn splicing_core_contains(
        &self,
        param: GluingParameter,
        e: &FieldPair,
        tol: f64,
    ) -> Result<bool, SplicingError> {
        let p = self.splicing_projection(param, e)?;
        Ok(p.sub(e)?.norm0()? <= tol)
    }

    /// Ranks of `π_r` and `I − π_r` on the discretized pair space, together
    /// with its dimension. Dense; meant for coarse grids. Basis vectors do
    /// not match at the interface, so the matching check is switched off.
    pub fn projection_ranks(
        &self,
        param: GluingParameter,
        template: &FieldPair,
    ) -> Result<(usize, usize, usize), SplicingError> {
        let mut free = self.clone();
        free.interface_tol = f64::INFINITY;
        let dim = template.to_vec().len();
        let mut p = DMatrix::<f64>::zeros(dim, dim);
        let mut basis = vec![0.0; dim];
        for col in 0..dim {
            basis[col] = 1.0;
            let e = template.like_from_slice(&basis);
            let img = free.splicing_projection(param, &e)?.to_vec();
            for (row, v) in img.iter().enumerate() {
                p[(row, col)] = *v;
            }
            basis[col] = 0.0;
        }
        let q = DMatrix::<f64>::identity(dim, dim) - &p;
        Ok((numerical_rank(&p), numerical_rank(&q), dim))
    }

    // Cylinder variant ------------------------------------------------------

    fn cylinder_length(&self, a: GluingParameter) -> Result<Option<f64>, SplicingError> {
        if !(a.modulus >= 0.0) || a.modulus > 0.5 {
            return Err(SplicingError::ParameterOutOfRange(a.modulus));
        }
        if a.modulus == 0.0 {
            return Ok(None);
        }
        Ok(Some(self.profile.length(a.modulus)?))
    }

    /// Grid of the finite cylinder `Z_a = [0, R] × S¹`.
    fn z_space(&self, length: f64) -> Result<(Arc<ScaleSpace>, ShiftMode), SplicingError> {
        let mode = self.shift_mode(length)?;
        Ok((self.space.with_s_range(0.0, mode.nodes() + 1), mode))
    }

    /// Grid covering the truncated `Σ_a`: `[min(0, R−L), max(L, R)] × S¹`.
    pub fn sigma_space(&self, length: f64) -> Result<Arc<ScaleSpace>, SplicingError> {
        let mode = self.shift_mode(length)?;
        let r = mode.length();
        let h = self.space.s_step();
        let half = self.space.s_end();
        let lo = (r - half).min(0.0);
        let hi = half.max(r);
        let nodes = ((hi - lo) / h).round() as usize + 1;
        Ok(self.space.with_s_range(lo, nodes))
    }

    fn check_cylinder_pair(&self, e: &FieldPair) -> Result<(), SplicingError> {
        self.require(Variant::GwCylinder)?;
        let (p, m) = (&e.first, &e.second);
        if !p.space().is_cylinder() || !m.space().is_cylinder() {
            return Err(ScError::DomainMismatch("cylinder pair expected".into()).into());
        }
        if p.space().s_start().abs() > 1e-12 || m.space().s_end().abs() > 1e-12 {
            return Err(ScError::DomainMismatch(
                "h⁺ must live on [0,L]×S¹ and h⁻ on [−L,0]×S¹".into(),
            )
            .into());
        }
        let gap = end_value(p, false)
            .iter()
            .zip(end_value(m, true))
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
        if gap > self.interface_tol {
            return Err(SplicingError::InterfaceMismatch { gap });
        }
        Ok(())
    }

    fn twist_shift(&self, twist: f64) -> f64 {
        match self.alignment {
            Alignment::RoundToGrid => {
                let dt = self.space.t_step();
                (twist / dt).round() * dt
            }
            Alignment::Interpolate => twist,
        }
    }

    /// Samples a half-cylinder function at `(s, t)`, clamping in `s`.
    fn sample_half(g: &GridFunction, s: f64, t: f64, c: usize) -> f64 {
        let space = g.space();
        let ns = space.s_nodes();
        let nt = space.t_nodes();
        let d = space.target_dim();
        let ring_at = |i: usize| -> f64 {
            let ring: Vec<f64> = (0..nt).map(|j| g.values()[(i * nt + j) * d + c]).collect();
            interp::sample_periodic(&ring, space.t_step(), t)
        };
        let u = (s - space.s_start()) / space.s_step();
        let nearest = u.round();
        if (u - nearest).abs() < 1e-9 || u <= 0.0 || u >= (ns - 1) as f64 {
            let i = nearest.clamp(0.0, (ns - 1) as f64) as usize;
            return ring_at(i);
        }
        let col: Vec<f64> = (0..ns).map(ring_at).collect();
        interp::sample_clamped(&col, space.s_start(), space.s_step(), s)
    }

    /// `av_R(h) = ½ ∫_{S¹} (h⁺(R/2, t) + h⁻(−R/2, t)) dt` (trapezoid rule).
    pub fn average(&self, e: &FieldPair, length: f64) -> Vec<f64> {
        let space = e.first.space();
        let nt = space.t_nodes();
        let d = space.target_dim();
        let mut out = vec![0.0; d];
        for (c, o) in out.iter_mut().enumerate() {
            for j in 0..nt {
                let t = space.t_at(j);
                *o += Self::sample_half(&e.first, length / 2.0, t, c)
                    + Self::sample_half(&e.second, -length / 2.0, t, c);
            }
            *o *= 0.5 / nt as f64;
        }
        out
    }

    /// `⊕_a(u⁺, u⁻)` on `Z_a`, or the nodal pair itself when `a = 0`.
    pub fn glue_cylinder(
        &self,
        e: &FieldPair,
        a: GluingParameter,
    ) -> Result<CylinderGlued, SplicingError> {
        self.check_cylinder_pair(e)?;
        let Some(length) = self.cylinder_length(a)? else {
            return Ok(CylinderGlued::Nodal(e.clone()));
        };
        let (z, mode) = self.z_space(length)?;
        let r = mode.length();
        let twist = self.twist_shift(a.twist);
        let d = z.target_dim();
        let level = e.first.declared_level().min(e.second.declared_level());
        let out = GridFunction::from_fn(&z, level, |s, t, o| {
            let b = beta(s - r / 2.0);
            for (c, slot) in o.iter_mut().enumerate().take(d) {
                let up = Self::sample_half(&e.first, s, t, c);
                let um = Self::sample_half(&e.second, s - r, t - twist, c);
                *slot = b * up + (1.0 - b) * um;
            }
        });
        Ok(CylinderGlued::Glued(out))
    }

    /// `⊖_a(h)` on the truncated `Σ_a`; `None` stands for `⊖_0 = 0` on the
    /// empty surface.
    pub fn antiglue_cylinder(
        &self,
        e: &FieldPair,
        a: GluingParameter,
    ) -> Result<Option<GridFunction>, SplicingError> {
        self.check_cylinder_pair(e)?;
        let Some(length) = self.cylinder_length(a)? else {
            return Ok(None);
        };
        let mode = self.shift_mode(length)?;
        let r = mode.length();
        let sigma = self.sigma_space(length)?;
        let twist = self.twist_shift(a.twist);
        let av = self.average(e, r);
        let level = e.first.declared_level().min(e.second.declared_level());
        let out = GridFunction::from_fn(&sigma, level, |s, t, o| {
            let b = beta(s - r / 2.0);
            for (c, slot) in o.iter_mut().enumerate() {
                let hp = Self::sample_half(&e.first, s, t, c);
                let hm = Self::sample_half(&e.second, s - r, t - twist, c);
                *slot = -(1.0 - b) * (hp - av[c]) + b * (hm - av[c]);
            }
        });
        Ok(Some(out))
    }

    /// Inverse of `(⊕_a, ⊖_a)` on the cylinder. `av_R` is recovered from the
    /// glued function on the middle circle; `shape_plus` / `shape_minus` fix
    /// the output grids.
    pub fn total_unglue_cylinder(
        &self,
        glued: &GridFunction,
        antiglued: &GridFunction,
        a: GluingParameter,
        shape_plus: &GridFunction,
        shape_minus: &GridFunction,
    ) -> Result<FieldPair, SplicingError> {
        self.require(Variant::GwCylinder)?;
        let Some(length) = self.cylinder_length(a)? else {
            return Ok(FieldPair::new(shape_plus.clone(), shape_minus.clone()));
        };
        let mode = self.shift_mode(length)?;
        if !mode.is_aligned() {
            return Err(ScError::DomainMismatch(
                "cylinder unglue needs a grid-aligned gluing length".into(),
            )
            .into());
        }
        let r = mode.length();
        if r < 2.0 {
            return Err(SplicingError::WindowTooShort { length: r });
        }
        let twist = self.twist_shift(a.twist);
        let z = glued.space();
        let sigma = antiglued.space();
        let nt = z.t_nodes();
        let d = z.target_dim();
        let dt = z.t_step();
        let twist_nodes = (twist / dt).round() as isize;
        if ((twist / dt) - twist_nodes as f64).abs() > 1e-9 {
            return Err(ScError::DomainMismatch("twist must be grid aligned for ungluing".into()).into());
        }
        // av from the middle circle s = R/2 where β = 1/2
        let mid = mode.nodes() / 2;
        let mut av = vec![0.0; d];
        if mode.nodes() % 2 == 0 {
            for (c, o) in av.iter_mut().enumerate() {
                *o = (0..nt).map(|j| glued.at(mid, j)[c]).sum::<f64>() / nt as f64;
            }
        } else {
            return Err(ScError::DomainMismatch("R/2 must be a grid node for ungluing".into()).into());
        }
        let mut hp = shape_plus.clone();
        let mut hm = shape_minus.clone();
        let sp = hp.space().clone();
        let sm = hm.space().clone();
        let h = z.s_step();
        // Z_a nodes: 2×2 solves
        for i in 0..z.s_nodes() {
            let s = z.s_at(i);
            let b = beta(s - r / 2.0);
            let det = total_gluing_determinant(b);
            for j in 0..nt {
                let jm = (j as isize - twist_nodes).rem_euclid(nt as isize) as usize;
                for c in 0..d {
                    let g = glued.at(i, j)[c];
                    // a = −(1−β)h⁺ + βh⁻ + (1−2β)av
                    let an = antiglued_at(antiglued, s, j, c) - (1.0 - 2.0 * b) * av[c];
                    let vp = (b * g - (1.0 - b) * an) / det;
                    let vm = ((1.0 - b) * g + b * an) / det;
                    if let Some(ip) = node_of(&sp, s, h) {
                        hp.values_mut()[sp.index(ip, j, c)] = vp;
                    }
                    if let Some(im) = node_of(&sm, s - r, h) {
                        hm.values_mut()[sm.index(im, jm, c)] = vm;
                    }
                }
            }
        }
        // outside Z_a only one side carries weight
        for i in 0..sigma.s_nodes() {
            let s = sigma.s_at(i);
            if s > r + 0.5 * h {
                if let Some(ip) = node_of(&sp, s, h) {
                    for j in 0..nt {
                        for c in 0..d {
                            hp.values_mut()[sp.index(ip, j, c)] = av[c] - antiglued.at(i, j)[c];
                        }
                    }
                }
            } else if s < -0.5 * h {
                if let Some(im) = node_of(&sm, s - r, h) {
                    for j in 0..nt {
                        let jm = (j as isize - twist_nodes).rem_euclid(nt as isize) as usize;
                        for c in 0..d {
                            hm.values_mut()[sm.index(im, jm, c)] = antiglued.at(i, j)[c] + av[c];
                        }
                    }
                }
            }
        }
        Ok(FieldPair::new(hp, hm))
    }

    /// Minimum over the glued grid of the pointwise determinant.
    pub fn min_determinant(&self, length: f64) -> Result<f64, SplicingError> {
        let mode = self.shift_mode(length)?;
        let r = mode.length();
        let ext = match self.variant {
            Variant::MorseLine => self.extended_space(mode),
            Variant::GwCylinder => self.z_space(length)?.0,
        };
        Ok((0..ext.s_nodes())
            .map(|p| total_gluing_determinant(beta(ext.s_at(p) - r / 2.0)))
            .fold(f64::INFINITY, f64::min))
    }

    /// Diagnostic CSV `s,beta,glued,antiglued,determinant` for a line pair
    /// (first component only).
    pub fn diagnostic_csv(
        &self,
        h: &GridFunction,
        k: &GridFunction,
        length: f64,
    ) -> Result<String, SplicingError> {
        let (g, a) = self.total_glue(h, k, length)?;
        let mode = self.shift_mode(length)?;
        let r = mode.length();
        let ext = g.space().clone();
        let d = ext.target_dim();
        let mut out = String::from("s,beta,glued,antiglued,determinant\n");
        for p in 0..ext.s_nodes() {
            let s = ext.s_at(p);
            let b = beta(s - r / 2.0);
            out.push_str(&format!(
                "{:.12e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                s,
                b,
                g.values()[p * d],
                a.values()[p * d],
                total_gluing_determinant(b)
            ));
        }
        Ok(out)
    }
}

fn antiglued_at(antiglued: &GridFunction, s: f64, j: usize, c: usize) -> f64 {
    let space = antiglued.space();
    match node_of(space, s, space.s_step()) {
        Some(i) => antiglued.at(i, j)[c],
        None => 0.0,
    }
}

fn node_of(space: &ScaleSpace, s: f64, h: f64) -> Option<usize> {
    let u = (s - space.s_start()) / h;
    let i = u.round();
    if (u - i).abs() > 1e-6 || i < 0.0 || i > (space.s_nodes() - 1) as f64 {
        None
    } else {
        Some(i as usize)
    }
}

/// Result of cylinder gluing.
#[derive(Debug, Clone, PartialEq)]
pub enum CylinderGlued {
    /// `a = 0`: the noded pair is returned unchanged.
    Nodal(FieldPair),
    Glued(GridFunction),
}

/// Rank from singular values with a relative cut-off.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0;
    }
    let tol = top * 1e-9 * (m.nrows().max(m.ncols()) as f64);
    sv.iter().filter(|&&s| s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scspace::{make_scale_space, DomainSpec, SpaceSpec};

    fn line_kernel(l: f64, h: f64) -> SplicingKernel {
        let space = make_scale_space(&SpaceSpec {
            domain: DomainSpec::Line { half_length: l, step: h },
            base_order: 0,
            weights: vec![0.0, 0.5],
            target_dim: 1,
            weight_bound: None,
        })
        .unwrap();
        SplicingKernel::new(GluingProfile::Exponential, space, Variant::MorseLine)
    }

    #[test]
    fn cutoff_values() {
        assert_eq!(beta(-2.0), 1.0);
        assert_eq!(beta(-1.0), 1.0);
        assert_eq!(beta(1.0), 0.0);
        assert_eq!(beta(0.0), 0.5);
        assert!((beta(0.3) + beta(-0.3) - 1.0).abs() < 1e-15);
        assert!(beta_derivative(0.2) < 0.0);
    }

    #[test]
    fn cutoff_derivative_matches_finite_difference() {
        for &s in &[-0.9, -0.4, 0.0, 0.35, 0.8] {
            let h = 1e-6;
            let fd = (beta(s + h) - beta(s - h)) / (2.0 * h);
            assert!((fd - beta_derivative(s)).abs() < 1e-6, "s = {s}");
        }
    }

    #[test]
    fn profile_endpoints() {
        let e = GluingProfile::Exponential;
        assert_eq!(e.length(1.0).unwrap(), 0.0);
        assert!((e.length(0.5).unwrap() - 4.670774270471604).abs() < 1e-12);
        assert_eq!(GluingProfile::Logarithmic.length(1.0).unwrap(), 0.0);
        assert!(matches!(e.length(0.0), Err(SplicingError::Domain(_))));
        assert!(matches!(e.length(1.5), Err(SplicingError::Domain(_))));
    }

    #[test]
    fn glue_constants_stays_constant() {
        let k = line_kernel(5.0, 0.1);
        let c = GridFunction::from_fn(&k.space, 1, |_, _, o| o[0] = 2.5);
        let g = k.glue_line(&c, &c, 3.3).unwrap();
        assert!(g.values().iter().all(|&v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn mismatched_interface_is_rejected() {
        let k = line_kernel(5.0, 0.1);
        let u = GridFunction::from_fn(&k.space, 1, |_, _, o| o[0] = 1.0);
        let v = GridFunction::from_fn(&k.space, 1, |_, _, o| o[0] = 0.0);
        assert!(matches!(k.glue_line(&u, &v, 2.0), Err(SplicingError::InterfaceMismatch { .. })));
    }

    #[test]
    fn antiglue_of_constants_vanishes_at_midpoint() {
        let k = line_kernel(5.0, 0.1);
        let c = GridFunction::from_fn(&k.space, 1, |_, _, o| o[0] = 1.0);
        let r = 4.0;
        let a = k.antiglue_line(&c, &c, r).unwrap();
        let ext = a.space();
        for p in 0..ext.s_nodes() {
            let want = 2.0 * beta(ext.s_at(p) - r / 2.0) - 1.0;
            assert!((a.values()[p] - want).abs() < 1e-14);
        }
        let mid = ((r / 2.0 - ext.s_start()) / ext.s_step()).round() as usize;
        assert!(a.values()[mid].abs() < 1e-15);
    }

    #[test]
    fn zero_plus_antiglued_is_in_kernel_of_glue() {
        let k = line_kernel(6.0, 0.25);
        let r = 4.0;
        let ext_len = k.shift_mode(r).unwrap().nodes() + k.space.s_nodes();
        let ext = k.space.with_s_range(k.space.s_start(), ext_len);
        let zero = GridFunction::zeros(&ext, 0);
        let w = GridFunction::from_fn(&ext, 0, |s, _, o| o[0] = (-(s - 2.0) * (s - 2.0)).exp());
        let pair = k.total_unglue(&zero, &w, r).unwrap();
        assert!(pair.sup_norm() > 1e-3);
        let g = k.glue_line(&pair.first, &pair.second, r).unwrap();
        assert!(g.sup_norm() < 1e-14);
    }
}
