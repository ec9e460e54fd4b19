//! Piecewise cubic (Catmull-Rom) sampling on uniform grids.

/// Catmull-Rom segment between `p1` and `p2` at local coordinate `x ∈ [0, 1]`.
///
/// Written in differences against `p1` so that `x = 0` returns `p1` and
/// constant data are reproduced bit-for-bit.
#[inline]
pub(crate) fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, x: f64) -> f64 {
    let d0 = p0 - p1;
    let d2 = p2 - p1;
    let d3 = p3 - p1;
    let a = 0.5 * (d2 - d0);
    let b = d0 + 2.0 * d2 - 0.5 * d3;
    let c = -0.5 * d0 - 1.5 * d2 + 0.5 * d3;
    p1 + x * (a + x * (b + x * c))
}

/// Sample `values[i]` (node `i` at `start + i·step`) at position `pos`,
/// holding the end values constant outside the grid.
pub(crate) fn sample_clamped(values: &[f64], start: f64, step: f64, pos: f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return values[0];
    }
    let u = (pos - start) / step;
    if u <= 0.0 {
        return values[0];
    }
    let last = (n - 1) as f64;
    if u >= last {
        return values[n - 1];
    }
    let mut i = u.floor() as usize;
    let mut x = u - i as f64;
    // snap to a node when within round-off
    if x < 1e-12 {
        x = 0.0;
    } else if x > 1.0 - 1e-12 {
        i += 1;
        x = 0.0;
    }
    if x == 0.0 {
        return values[i];
    }
    let at = |k: isize| -> f64 { values[k.clamp(0, n as isize - 1) as usize] };
    let k = i as isize;
    catmull_rom(at(k - 1), at(k), at(k + 1), at(k + 2), x)
}

/// Periodic variant: `values` sample one period of length `values.len()·step`.
pub(crate) fn sample_periodic(values: &[f64], step: f64, pos: f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let period = n as f64;
    let mut u = (pos / step).rem_euclid(period);
    if u >= period {
        u -= period;
    }
    let mut i = u.floor() as usize % n;
    let mut x = u - u.floor();
    if x < 1e-12 {
        x = 0.0;
    } else if x > 1.0 - 1e-12 {
        i = (i + 1) % n;
        x = 0.0;
    }
    if x == 0.0 {
        return values[i];
    }
    let at = |k: isize| -> f64 { values[k.rem_euclid(n as isize) as usize] };
    let k = i as isize;
    catmull_rom(at(k - 1), at(k), at(k + 1), at(k + 2), x)
}
