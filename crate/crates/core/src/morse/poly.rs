//! Polynomial Morse functions with analytic gradient and Hessian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// `coeff · Π x_i^{powers[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<Term>,
}

fn pow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Term>) -> Self {
        Self { dim, terms }
    }

    /// Builds from `(coeff, powers)` pairs.
    pub fn from_pairs(dim: usize, pairs: &[(f64, &[u32])]) -> Self {
        let terms = pairs.iter().map(|(c, p)| Term { coeff: *c, powers: p.to_vec() }).collect();
        Self { dim, terms }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.coeff *= factor;
        }
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.powers.iter().zip(x).map(|(&k, &xi)| pow(xi, k)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for t in &self.terms {
            for i in 0..self.dim {
                let k = t.powers[i];
                if k == 0 {
                    continue;
                }
                let mut prod = t.coeff * k as f64 * pow(x[i], k - 1);
                for (j, (&kj, &xj)) in t.powers.iter().zip(x).enumerate() {
                    if j != i {
                        prod *= pow(xj, kj);
                    }
                }
                g[i] += prod;
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut h = DMatrix::zeros(n, n);
        for t in &self.terms {
            for i in 0..n {
                for j in i..n {
                    let mut p = t.powers.clone();
                    let mut c = t.coeff;
                    for &d in &[i, j] {
                        if p[d] == 0 {
                            c = 0.0;
                            break;
                        }
                        c *= p[d] as f64;
                        p[d] -= 1;
                    }
                    if c == 0.0 {
                        continue;
                    }
                    let v = c * p.iter().zip(x).map(|(&k, &xk)| pow(xk, k)).product::<f64>();
                    h[(i, j)] += v;
                    if i != j {
                        h[(j, i)] += v;
                    }
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        // (x²−1)²/4 + y²/2 + 0.3·x·y³
        let p = Polynomial::from_pairs(
            2,
            &[(0.25, &[4, 0]), (-0.5, &[2, 0]), (0.25, &[0, 0]), (0.5, &[0, 2]), (0.3, &[1, 3])],
        );
        let x = [0.7, -0.4];
        let e = 1e-6;
        let g = p.gradient(&x);
        let h = p.hessian(&x);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            assert!(((p.value(&xp) - p.value(&xm)) / (2.0 * e) - g[i]).abs() < 1e-8);
            let gd = (p.gradient(&xp) - p.gradient(&xm)) / (2.0 * e);
            for j in 0..2 {
                assert!((gd[j] - h[(j, i)]).abs() < 1e-7);
            }
        }
    }
}
