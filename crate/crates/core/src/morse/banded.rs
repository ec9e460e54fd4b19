//! Banded LU with partial pivoting, for the collocation Jacobians.

/// Square matrix stored by rows within `[i − kl, i + ku + kl]`; the extra
/// `kl` columns hold the fill-in created by row swaps.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in entries {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let mut m = Self::zeros(n, kl, ku);
        for &(i, j, v) in entries {
            *m.slot(i, j) += v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku + self.kl || j >= self.n {
            None
        } else {
            Some(i * self.width + (j + self.kl - i))
        }
    }

    #[inline]
    fn slot(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.offset(i, j).expect("entry outside the band");
        &mut self.data[k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).map_or(0.0, |k| self.data[k])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + self.kl + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place factorization; returns `None` for an exactly singular pivot.
    pub fn lu(mut self) -> Option<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            piv[k] = p;
            let end = (k + reach + 1).min(n);
            if p != k {
                for j in k..end {
                    let a = self.offset(k, j).unwrap();
                    let b = self.offset(p, j).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let l = self.get(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                *self.slot(i, k) = l;
                for j in k + 1..end {
                    let u = self.get(k, j);
                    if u != 0.0 {
                        *self.slot(i, j) -= l * u;
                    }
                }
            }
        }
        Some(BandedLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let kl = self.m.kl;
        let reach = self.m.ku + self.m.kl;
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk != 0.0 {
                for (i, xi) in x.iter_mut().enumerate().take((k + kl + 1).min(n)).skip(k + 1) {
                    *xi -= self.m.get(i, k) * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let end = (k + reach + 1).min(n);
            let mut acc = x[k];
            for (j, xj) in x.iter().enumerate().take(end).skip(k + 1) {
                acc -= self.m.get(k, j) * xj;
            }
            x[k] = acc / self.m.get(k, k);
        }
        x
    }

    /// Smallest |pivot| relative to the largest, a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in 0..self.m.n {
            let v = self.m.get(k, k).abs();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }
}
