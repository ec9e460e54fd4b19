//! Shooting enumeration of index-difference-one orbits and the counting
//! function `Q`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::collocation::{solve_trajectory_on, SolveOptions};
use super::{MorseError, MorseProblem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingOptions {
    /// Starts per one-dimensional sphere.
    pub sphere_mesh: usize,
    /// Distance of the starts from `a` along the unstable sphere.
    pub offset: f64,
    /// Integration stops at the level `Φ(b) − eta`.
    pub eta: f64,
    /// A stop within this distance of `b` counts as a hit.
    pub hit_tol: f64,
    pub seed: u64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { sphere_mesh: 64, offset: 1e-6, eta: 1e-8, hit_tol: 1e-2, seed: 0 }
    }
}

impl ShootingOptions {
    /// Doubles the sphere mesh.
    pub fn refined(mut self) -> Self {
        self.sphere_mesh *= 2;
        self
    }
}

/// Distinct orbits `a → b` found by shooting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumeration {
    pub a: String,
    pub b: String,
    pub trajectories: Vec<Trajectory>,
    pub count: usize,
    pub parity: u8,
    pub warnings: Vec<String>,
    /// False when a transversality warning was raised.
    pub reliable: bool,
}

struct Flow<'a> {
    problem: &'a MorseProblem,
    dt: f64,
    t_max: f64,
}

struct Shot {
    stop: Vec<f64>,
    path: Vec<(f64, Vec<f64>)>,
}

impl Flow<'_> {
    fn rk4(&self, x: &DVector<f64>, dt: f64) -> DVector<f64> {
        let g = |y: &DVector<f64>| self.problem.gradient(y.as_slice());
        let k1 = g(x);
        let k2 = g(&(x + &k1 * (dt / 2.0)));
        let k3 = g(&(x + &k2 * (dt / 2.0)));
        let k4 = g(&(x + &k3 * dt));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
    }

    /// Integrates until `Φ ≥ level`, landing on the level by bisecting the
    /// last step.
    fn to_level(&self, start: &[f64], level: f64) -> Option<Shot> {
        let mut x = DVector::from_column_slice(start);
        let mut t = 0.0;
        let mut path = vec![(0.0, start.to_vec())];
        while t < self.t_max {
            let next = self.rk4(&x, self.dt);
            if !next.iter().all(|v| v.is_finite()) || next.amax() > 1e8 {
                return None;
            }
            if self.problem.value(next.as_slice()) >= level {
                let (mut lo, mut hi) = (0.0, self.dt);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.problem.value(self.rk4(&x, mid).as_slice()) >= level {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let stop = self.rk4(&x, hi);
                path.push((t + hi, stop.as_slice().to_vec()));
                return Some(Shot { stop: stop.as_slice().to_vec(), path });
            }
            x = next;
            t += self.dt;
            path.push((t, x.as_slice().to_vec()));
        }
        None
    }
}

struct Shooter<'a> {
    flow: Flow<'a>,
    a: Vec<f64>,
    b: Vec<f64>,
    unstable_a: DMatrix<f64>,
    unstable_b: DMatrix<f64>,
    level: f64,
    opts: ShootingOptions,
}

impl Shooter<'_> {
    fn shoot(&self, omega: &DVector<f64>) -> Option<(Shot, DVector<f64>, f64)> {
        let dir = &self.unstable_a * omega / omega.norm();
        let start: Vec<f64> = self.a.iter().zip(dir.iter()).map(|(p, d)| p + self.opts.offset * d).collect();
        let shot = self.flow.to_level(&start, self.level)?;
        let diff = DVector::from_iterator(self.b.len(), shot.stop.iter().zip(&self.b).map(|(u, v)| u - v));
        let miss = self.unstable_b.transpose() * &diff;
        let dist = diff.norm();
        Some((shot, miss, dist))
    }
}

fn circle(theta: f64) -> DVector<f64> {
    DVector::from_vec(vec![theta.cos(), theta.sin()])
}

/// Multi-start shooting from the unstable sphere at `a`, followed by a
/// collocation polish of every hit and deduplication.
pub fn enumerate_trajectories_index1(
    problem: &MorseProblem,
    a: &str,
    b: &str,
    opts: &ShootingOptions,
    solve: &SolveOptions,
) -> Result<Enumeration, MorseError> {
    let ca = problem.critical(a)?;
    let cb = problem.critical(b)?;
    if cb.index != ca.index + 1 {
        return Err(MorseError::IndexMismatch {
            difference: cb.index as i64 - ca.index as i64,
            rows: 0,
            unknowns: 0,
        });
    }
    if !(ca.value < cb.value) {
        return Err(MorseError::Ordering { a: ca.value, b: cb.value });
    }
    let gap = ca.gap().min(cb.gap());
    let stiff = problem.stiffness().max(1e-12);
    let shooter = Shooter {
        flow: Flow { problem, dt: (0.1 / stiff).min(0.05), t_max: 100.0 / gap },
        a: ca.location.clone(),
        b: cb.location.clone(),
        unstable_a: ca.eigenspace(false),
        unstable_b: cb.eigenspace(false),
        level: cb.value - opts.eta,
        opts: *opts,
    };
    let k = shooter.unstable_a.ncols() - 1;
    let mut warnings = Vec::new();
    let mut hits: Vec<Shot> = Vec::new();
    match k {
        0 => {
            for sign in [1.0, -1.0] {
                if let Some((shot, _, dist)) = shooter.shoot(&DVector::from_element(1, sign)) {
                    if dist <= opts.hit_tol {
                        hits.push(shot);
                    }
                }
            }
        }
        1 => {
            let m = opts.sphere_mesh.max(4);
            let thetas: Vec<f64> = (0..m).map(|j| 2.0 * std::f64::consts::PI * j as f64 / m as f64).collect();
            let misses: Vec<Option<f64>> =
                thetas.iter().map(|&t| shooter.shoot(&circle(t)).map(|(_, miss, _)| miss[0])).collect();
            let mut roots = Vec::new();
            for j in 0..m {
                let Some(mj) = misses[j] else { continue };
                if mj == 0.0 {
                    roots.push(thetas[j]);
                    continue;
                }
                let jn = (j + 1) % m;
                let Some(mn) = misses[jn] else { continue };
                if mn != 0.0 && mj.signum() != mn.signum() {
                    let (mut lo, mut hi) = (thetas[j], if jn == 0 { 2.0 * std::f64::consts::PI } else { thetas[jn] });
                    let mut flo = mj;
                    let mut ok = true;
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        let Some((_, miss, _)) = shooter.shoot(&circle(mid)) else {
                            ok = false;
                            break;
                        };
                        if miss[0] == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if miss[0].signum() == flo.signum() {
                            lo = mid;
                            flo = miss[0];
                        } else {
                            hi = mid;
                        }
                        if hi - lo < 1e-15 {
                            break;
                        }
                    }
                    if ok {
                        roots.push(0.5 * (lo + hi));
                    }
                }
            }
            for theta in roots {
                let Some((shot, _, dist)) = shooter.shoot(&circle(theta)) else { continue };
                if dist > opts.hit_tol {
                    continue;
                }
                let h = 1e-6;
                let slope = match (shooter.shoot(&circle(theta + h)), shooter.shoot(&circle(theta - h))) {
                    (Some((_, p, _)), Some((_, q, _))) => (p[0] - q[0]) / (2.0 * h),
                    _ => f64::NAN,
                };
                if !(slope.abs() > 1e-10) {
                    warnings.push(format!("transversality: miss derivative {slope:e} at θ = {theta}"));
                }
                hits.push(shot);
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let starts = opts.sphere_mesh * k;
            for _ in 0..starts {
                let mut w = DVector::from_fn(k + 1, |_, _| rng.gen_range(-1.0..1.0));
                w /= w.norm();
                if let Some(shot) = sphere_newton(&shooter, w, k, &mut warnings) {
                    hits.push(shot);
                }
            }
        }
    }
    let mut trajectories: Vec<Trajectory> = Vec::new();
    let mid = 0.5 * (ca.value + cb.value);
    for shot in hits {
        let guess = guess_from_path(problem, a, b, &shot.path, mid, &ca.location, &cb.location, solve)?;
        match solve_trajectory_on(problem, a, b, &guess, solve) {
            Ok(t) => {
                let dup = trajectories.iter().any(|o| {
                    o.values.iter().zip(&t.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) < 1e-6
                });
                if !dup {
                    trajectories.push(t);
                }
            }
            Err(e) => warnings.push(format!("polish failed: {e}")),
        }
    }
    let count = trajectories.len();
    let reliable = !warnings.iter().any(|w| w.starts_with("transversality"));
    Ok(Enumeration {
        a: a.to_string(),
        b: b.to_string(),
        trajectories,
        count,
        parity: (count % 2) as u8,
        warnings,
        reliable,
    })
}

fn sphere_newton(shooter: &Shooter<'_>, mut w: DVector<f64>, k: usize, warnings: &mut Vec<String>) -> Option<Shot> {
    for _ in 0..40 {
        let (shot, miss, dist) = shooter.shoot(&w)?;
        if miss.amax() <= 1e-12 {
            return (dist <= shooter.opts.hit_tol).then_some(shot);
        }
        // tangent basis at w
        let proj = DMatrix::<f64>::identity(k + 1, k + 1) - &w * w.transpose();
        let svd = proj.svd(true, false);
        let u = svd.u?;
        let mut order: Vec<usize> = (0..k + 1).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let tangent = u.select_columns(&order[..k]);
        let h = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(miss.len(), k);
        for c in 0..k {
            let mut wp = &w + tangent.column(c) * h;
            wp /= wp.norm();
            let (_, mp, _) = shooter.shoot(&wp)?;
            jac.set_column(c, &((mp - &miss) / h));
        }
        let step = match jac.clone().lu().solve(&miss) {
            Some(s) => s,
            None => {
                warnings.push("transversality: singular shooting Jacobian".into());
                return None;
            }
        };
        w -= tangent * step;
        w /= w.norm();
    }
    None
}

/// Collocation guess from a shooting path: shifted so the phase level sits
/// at `s = 0`, held at `a` before and `b` after.
#[allow(clippy::too_many_arguments)]
fn guess_from_path(
    problem: &MorseProblem,
    a: &str,
    b: &str,
    path: &[(f64, Vec<f64>)],
    mid: f64,
    pa: &[f64],
    pb: &[f64],
    solve: &SolveOptions,
) -> Result<Trajectory, MorseError> {
    let vals: Vec<f64> = path.iter().map(|(_, x)| problem.value(x)).collect();
    let cross = vals
        .windows(2)
        .position(|w| w[0] <= mid && w[1] >= mid)
        .ok_or_else(|| MorseError::NoTrajectoryFound("shooting path never crosses the phase level".into()))?;
    let f = (mid - vals[cross]) / (vals[cross + 1] - vals[cross]).max(1e-300);
    let t_star = path[cross].0 + f * (path[cross + 1].0 - path[cross].0);
    let n = problem.dim();
    let mesh = solve.uniform_mesh();
    let mut values = Vec::with_capacity(mesh.len() * n);
    let t_end = path[path.len() - 1].0;
    for &s in &mesh {
        let t = s + t_star;
        let x: Vec<f64> = if t <= 0.0 {
            pa.to_vec()
        } else if t >= t_end {
            pb.to_vec()
        } else {
            let i = path.partition_point(|(ti, _)| *ti <= t) - 1;
            let (t0, x0) = &path[i];
            let (t1, x1) = &path[i + 1];
            let w = (t - t0) / (t1 - t0);
            x0.iter().zip(x1).map(|(p, q)| p + w * (q - p)).collect()
        };
        values.extend(x);
    }
    Trajectory::from_samples(a, b, n, mesh, values)
}

/// `Q` on ordered pairs: orbit parity for index difference one, else 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingData {
    pub labels: Vec<String>,
    pub values: BTreeMap<(String, String), u8>,
    /// Parity of `m(b) − m(a)`.
    pub gradings: BTreeMap<(String, String), u8>,
    pub enumerations: Vec<Enumeration>,
    pub warnings: Vec<String>,
}

impl CountingData {
    /// JSON object `{"(a,b)": value}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .values
            .iter()
            .map(|((a, b), v)| (format!("({a},{b})"), serde_json::Value::from(*v)))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn get(&self, a: &str, b: &str) -> u8 {
        self.values.get(&(a.to_string(), b.to_string())).copied().unwrap_or(0)
    }
}

pub fn counting_function(
    problem: &MorseProblem,
    opts: &ShootingOptions,
) -> Result<CountingData, MorseError> {
    let pairs = problem.ordered_pairs();
    let index_one: Vec<(String, String)> = pairs
        .iter()
        .filter(|(a, b)| {
            let ia = problem.critical(a).map(|c| c.index).unwrap_or(0);
            let ib = problem.critical(b).map(|c| c.index).unwrap_or(0);
            ib == ia + 1
        })
        .cloned()
        .collect();
    let enumerate = |(a, b): &(String, String)| -> Result<Enumeration, MorseError> {
        let solve = SolveOptions::for_pair(problem, a, b)?;
        enumerate_trajectories_index1(problem, a, b, opts, &solve)
    };
    let enumerations: Vec<Enumeration> = crate::par_map(&index_one, enumerate).into_iter().collect::<Result<_, _>>()?;
    let mut values = BTreeMap::new();
    let mut gradings = BTreeMap::new();
    let mut warnings = Vec::new();
    for (a, b) in &pairs {
        let ia = problem.critical(a)?.index as i64;
        let ib = problem.critical(b)?.index as i64;
        gradings.insert((a.clone(), b.clone()), ((ib - ia).rem_euclid(2)) as u8);
        values.insert((a.clone(), b.clone()), 0);
    }
    for e in &enumerations {
        values.insert((e.a.clone(), e.b.clone()), e.parity);
        warnings.extend(e.warnings.iter().map(|w| format!("({},{}): {w}", e.a, e.b)));
    }
    Ok(CountingData {
        labels: problem.critical_points.iter().map(|c| c.label.clone()).collect(),
        values,
        gradings,
        enumerations,
        warnings,
    })
}
