//! Convolution algebra on a degeneration structure, `D_Q`, and homology
//! over `𝔽₂`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degen::{pair_label, pair_structure, DegenerationStructure};
use crate::f2::BitMatrix;
use crate::morse::{CountingData, MorseProblem};
pub use crate::sftsym::Parity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("counting functions live on different structures or rings")]
    StructureMismatch,
    #[error("{0} is not homogeneous")]
    Grading(String),
    #[error("not a differential: square is nonzero at {witness}")]
    NotADifferential { witness: String },
    #[error("complex must be verified before computing homology")]
    Unverified,
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ring {
    Z2,
    Z,
}

impl Ring {
    fn reduce(self, v: i64) -> i64 {
        match self {
            Ring::Z2 => v.rem_euclid(2),
            Ring::Z => v,
        }
    }
}

/// A map `S → Λ` with a parity on `S`; missing keys read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingFunction {
    pub structure: Arc<DegenerationStructure>,
    pub ring: Ring,
    pub grading: Arc<BTreeMap<String, Parity>>,
    values: BTreeMap<String, i64>,
}

impl CountingFunction {
    /// Labels missing from `grading` are even.
    pub fn new(
        structure: Arc<DegenerationStructure>,
        ring: Ring,
        grading: Arc<BTreeMap<String, Parity>>,
        values: impl IntoIterator<Item = (String, i64)>,
    ) -> Result<Self, AlgebraError> {
        let mut f = Self { structure, ring, grading, values: BTreeMap::new() };
        for (k, v) in values {
            if !f.structure.contains(&k) {
                return Err(AlgebraError::UnknownLabel(k));
            }
            f.add(&k, v);
        }
        Ok(f)
    }

    pub fn zero_like(&self) -> Self {
        Self { values: BTreeMap::new(), ..self.clone() }
    }

    pub fn indicator(&self, label: &str) -> Result<Self, AlgebraError> {
        Self::new(self.structure.clone(), self.ring, self.grading.clone(), [(label.to_string(), 1)])
    }

    fn add(&mut self, k: &str, v: i64) {
        let e = self.values.entry(k.to_string()).or_insert(0);
        *e = self.ring.reduce(*e + v);
        if *e == 0 {
            self.values.remove(k);
        }
    }

    pub fn get(&self, label: &str) -> i64 {
        self.values.get(label).copied().unwrap_or(0)
    }

    pub fn support(&self) -> impl Iterator<Item = (&String, &i64)> {
        self.values.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn parity_of(&self, label: &str) -> Parity {
        self.grading.get(label).copied().unwrap_or(Parity::Even)
    }

    /// `None` for the zero function.
    pub fn parity(&self) -> Result<Option<Parity>, AlgebraError> {
        let mut seen = None;
        for k in self.values.keys() {
            let p = self.parity_of(k);
            match seen {
                None => seen = Some(p),
                Some(q) if q != p => return Err(AlgebraError::Grading(k.clone())),
                _ => {}
            }
        }
        Ok(seen)
    }

    fn compatible(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.ring != other.ring || *self.structure != *other.structure || *self.grading != *other.grading {
            return Err(AlgebraError::StructureMismatch);
        }
        Ok(())
    }

    pub fn plus(&self, other: &Self, k: i64) -> Result<Self, AlgebraError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (l, v) in &other.values {
            out.add(l, k * v);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.values).expect("plain data")
    }
}

/// `(α∗β)(C) = Σ_{(A,B;C)∈R} α(A)β(B)`.
pub fn convolve(a: &CountingFunction, b: &CountingFunction) -> Result<CountingFunction, AlgebraError> {
    a.compatible(b)?;
    let mut out = a.zero_like();
    for r in &a.structure.relators {
        let v = a.get(&r.left) * b.get(&r.right);
        if v != 0 {
            out.add(&r.target, v);
        }
    }
    Ok(out)
}

fn commutator_sign(a: Option<Parity>, b: Option<Parity>) -> i64 {
    if a == Some(Parity::Odd) && b == Some(Parity::Odd) {
        1
    } else {
        -1
    }
}

/// `α∗β + β∗α` for two odd inputs, `α∗β − β∗α` otherwise.
pub fn graded_commutator(a: &CountingFunction, b: &CountingFunction) -> Result<CountingFunction, AlgebraError> {
    let s = commutator_sign(a.parity()?, b.parity()?);
    convolve(a, b)?.plus(&convolve(b, a)?, s)
}

/// Integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a != 0 {
                    for j in 0..other.cols {
                        out.data[i * other.cols + j] += a * other.get(k, j);
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn to_f2(&self) -> BitMatrix {
        BitMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).rem_euclid(2) == 1)
    }
}

/// The matrix of `λ ↦ [Q, λ]` in the indicator basis of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct DqOperator {
    pub labels: Vec<String>,
    pub parities: Vec<Parity>,
    pub matrix: IntMatrix,
}

impl DqOperator {
    pub fn squares_to_zero(&self, ring: Ring) -> bool {
        let sq = self.matrix.mul(&self.matrix);
        match ring {
            Ring::Z => sq.is_zero(),
            Ring::Z2 => sq.to_f2().is_zero(),
        }
    }

    /// Graded by parity: 0 even, 1 odd.
    pub fn complex(&self) -> Result<ChainComplexF2, AlgebraError> {
        let degrees = self.parities.iter().map(|p| if *p == Parity::Odd { 1 } else { 0 }).collect();
        ChainComplexF2::new(self.labels.clone(), degrees, self.matrix.to_f2()).verify()
    }
}

/// First `C` with `(Q∗Q)(C) ≠ 0`.
pub fn square_witness(q: &CountingFunction) -> Result<Option<String>, AlgebraError> {
    Ok(convolve(q, q)?.support().next().map(|(k, _)| k.clone()))
}

pub fn dq_operator(q: &CountingFunction) -> Result<DqOperator, AlgebraError> {
    if q.parity()? == Some(Parity::Even) {
        return Err(AlgebraError::Grading("Q must be odd".into()));
    }
    if let Some(witness) = square_witness(q)? {
        return Err(AlgebraError::NotADifferential { witness });
    }
    let labels = q.structure.labels.clone();
    let index: BTreeMap<&String, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let n = labels.len();
    let mut m = IntMatrix::zeros(n, n);
    for (j, x) in labels.iter().enumerate() {
        let e = q.indicator(x)?;
        let col = graded_commutator(q, &e)?;
        for (c, v) in col.support() {
            m.data[index[c] * n + j] = *v;
        }
    }
    let parities = labels.iter().map(|l| q.parity_of(l)).collect();
    Ok(DqOperator { labels, parities, matrix: m })
}

/// A graded complex over `𝔽₂` with a full square boundary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainComplexF2 {
    pub labels: Vec<String>,
    pub degrees: Vec<i64>,
    pub boundary: BitMatrix,
    verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Homology {
    /// Betti number per degree, including zeros for populated degrees.
    pub betti: BTreeMap<i64, usize>,
    pub total: usize,
}

impl Homology {
    /// Betti numbers for degrees `0..=top`.
    pub fn betti_vec(&self, top: i64) -> Vec<usize> {
        (0..=top).map(|k| self.betti.get(&k).copied().unwrap_or(0)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("degree,betti\n");
        for (k, b) in &self.betti {
            s.push_str(&format!("{k},{b}\n"));
        }
        s
    }
}

impl ChainComplexF2 {
    pub fn new(labels: Vec<String>, degrees: Vec<i64>, boundary: BitMatrix) -> Self {
        Self { labels, degrees, boundary, verified: false }
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    /// Checks `∂² = 0` and that each column lands in a single degree.
    pub fn verify(mut self) -> Result<Self, AlgebraError> {
        let n = self.labels.len();
        if self.degrees.len() != n || self.boundary.rows() != n || self.boundary.cols() != n {
            return Err(AlgebraError::Parse("boundary matrix does not match the basis".into()));
        }
        let sq = self.boundary.mul(&self.boundary);
        for j in 0..n {
            if (0..n).any(|i| sq.get(i, j)) {
                return Err(AlgebraError::NotADifferential { witness: self.labels[j].clone() });
            }
            let targets: std::collections::BTreeSet<i64> =
                (0..n).filter(|&i| self.boundary.get(i, j)).map(|i| self.degrees[i]).collect();
            if targets.len() > 1 {
                return Err(AlgebraError::Grading(self.labels[j].clone()));
            }
        }
        self.verified = true;
        Ok(self)
    }

    /// `dim ker − dim im` per degree via `𝔽₂` ranks.
    pub fn homology(&self) -> Result<Homology, AlgebraError> {
        if !self.verified {
            return Err(AlgebraError::Unverified);
        }
        let n = self.labels.len();
        let all: Vec<usize> = (0..n).collect();
        let mut degs: Vec<i64> = self.degrees.clone();
        degs.sort();
        degs.dedup();
        let mut betti = BTreeMap::new();
        for k in degs {
            let idx: Vec<usize> = (0..n).filter(|&i| self.degrees[i] == k).collect();
            let ker = idx.len() - self.boundary.select(&all, &idx).rank();
            let im = self.boundary.select(&idx, &all).rank();
            betti.insert(k, ker - im);
        }
        let total = betti.values().sum();
        Ok(Homology { betti, total })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<String> = (0..self.labels.len())
            .map(|i| (0..self.labels.len()).map(|j| if self.boundary.get(i, j) { '1' } else { '0' }).collect())
            .collect();
        serde_json::json!({
            "labels": self.labels,
            "degrees": self.degrees,
            "boundary": rows,
            "verified": self.verified,
        })
    }
}

pub fn homology_f2(c: &ChainComplexF2) -> Result<Homology, AlgebraError> {
    c.homology()
}

/// A counting function on file: `{"ring": "z2", "grading": {..}, "values": {..},
/// "points": [["a", 0], ..]}`. Only `values` is required; `points` (labels
/// with Morse indices) enables the representation complex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingFile {
    #[serde(default = "default_ring")]
    pub ring: Ring,
    #[serde(default)]
    pub grading: BTreeMap<String, Parity>,
    pub values: BTreeMap<String, i64>,
    #[serde(default)]
    pub points: Option<Vec<(String, i64)>>,
}

fn default_ring() -> Ring {
    Ring::Z2
}

impl CountingFile {
    pub fn from_json(text: &str) -> Result<Self, AlgebraError> {
        serde_json::from_str(text).map_err(|e| AlgebraError::Parse(e.to_string()))
    }

    pub fn function(&self, structure: Arc<DegenerationStructure>) -> Result<CountingFunction, AlgebraError> {
        for k in self.grading.keys() {
            if !structure.contains(k) {
                return Err(AlgebraError::UnknownLabel(k.clone()));
            }
        }
        CountingFunction::new(structure, self.ring, Arc::new(self.grading.clone()), self.values.clone())
    }
}

/// `(Qh)(a) = Σ_b Q(a,b) h(b)` on maps `Cr(Φ) → 𝔽₂`, graded by Morse index.
pub fn representation_complex(
    q: &CountingFunction,
    points: &[(String, i64)],
) -> Result<ChainComplexF2, AlgebraError> {
    let labels: Vec<String> = points.iter().map(|p| p.0.clone()).collect();
    let degrees: Vec<i64> = points.iter().map(|p| p.1).collect();
    let n = points.len();
    let mut m = BitMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = q.get(&pair_label(&labels[i], &labels[j])).rem_euclid(2);
            if v == 1 {
                if degrees[j] - degrees[i] != 1 {
                    return Err(AlgebraError::Grading(pair_label(&labels[i], &labels[j])));
                }
                m.set(i, j, true);
            }
        }
    }
    ChainComplexF2::new(labels, degrees, m).verify()
}

/// Counting data from the morse module, on the structure of its ordered
/// pairs; `(a,b)` is odd when `m(b) − m(a)` is.
pub fn from_morse(problem: &MorseProblem, data: &CountingData) -> Result<CountingFunction, AlgebraError> {
    let pairs = problem.ordered_pairs();
    let structure = Arc::new(pair_structure(&pairs));
    let mut grading = BTreeMap::new();
    for (a, b) in &pairs {
        let ia = problem.critical(a).map_err(|e| AlgebraError::Parse(e.to_string()))?.index as i64;
        let ib = problem.critical(b).map_err(|e| AlgebraError::Parse(e.to_string()))?.index as i64;
        let p = if (ib - ia).rem_euclid(2) == 1 { Parity::Odd } else { Parity::Even };
        grading.insert(pair_label(a, b), p);
    }
    let values = data.values.iter().map(|((a, b), v)| (pair_label(a, b), *v as i64));
    CountingFunction::new(structure, Ring::Z2, Arc::new(grading), values)
}

/// Critical labels with Morse indices.
pub fn morse_points(problem: &MorseProblem) -> Vec<(String, i64)> {
    problem.critical_points.iter().map(|c| (c.label.clone(), c.index as i64)).collect()
}

/// Hand-coded counting data on a manifold, with index and value per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDatum {
    pub name: String,
    /// `(label, index, value)`.
    pub points: Vec<(String, i64, f64)>,
    /// Number of index-1 trajectories for pairs `(a,b)`.
    pub counts: Vec<(String, String, i64)>,
}

impl ManifoldDatum {
    /// Two maxima, one saddle, one minimum; the two saddle–minimum
    /// trajectories cancel mod 2.
    pub fn sphere_four_points() -> Self {
        let p = |l: &str, i, v| (l.to_string(), i, v);
        let c = |a: &str, b: &str, n| (a.to_string(), b.to_string(), n);
        Self {
            name: "sphere-4".into(),
            points: vec![p("min", 0, 0.0), p("saddle", 1, 1.0), p("max1", 2, 2.0), p("max2", 2, 2.5)],
            counts: vec![c("min", "saddle", 2), c("saddle", "max1", 1), c("saddle", "max2", 1)],
        }
    }

    /// Height function on the sphere: one minimum and one maximum.
    pub fn sphere_height() -> Self {
        Self {
            name: "sphere-height".into(),
            points: vec![("min".into(), 0, -1.0), ("max".into(), 2, 1.0)],
            counts: vec![],
        }
    }

    pub fn counting_function(&self, ring: Ring) -> Result<CountingFunction, AlgebraError> {
        let mut pairs = vec![];
        let mut grading = BTreeMap::new();
        for a in &self.points {
            for b in &self.points {
                if a.2 < b.2 {
                    pairs.push((a.0.clone(), b.0.clone()));
                    let p = if (b.1 - a.1).rem_euclid(2) == 1 { Parity::Odd } else { Parity::Even };
                    grading.insert(pair_label(&a.0, &b.0), p);
                }
            }
        }
        let values = self.counts.iter().map(|(a, b, n)| (pair_label(a, b), *n));
        CountingFunction::new(Arc::new(pair_structure(&pairs)), ring, Arc::new(grading), values)
    }

    pub fn index_map(&self) -> Vec<(String, i64)> {
        self.points.iter().map(|p| (p.0.clone(), p.1)).collect()
    }
}

/// The abstract datum of the height function: `S = {∗}` even, `Q = 0`.
pub fn height_function_datum() -> CountingFunction {
    let s = Arc::new(DegenerationStructure::new(vec!["*".into()], vec![]));
    let grading = Arc::new([("*".to_string(), Parity::Even)].into_iter().collect());
    CountingFunction::new(s, Ring::Z2, grading, []).expect("static data")
}

/// `𝔽₂` Betti numbers of a simplicial complex given by its maximal
/// simplices (vertex lists).
pub fn simplicial_betti_f2(facets: &[Vec<usize>]) -> Vec<usize> {
    let mut faces: Vec<std::collections::BTreeSet<Vec<usize>>> = vec![];
    for f in facets {
        let mut f = f.clone();
        f.sort();
        let k = f.len();
        for mask in 1u32..(1 << k) {
            let s: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| f[i]).collect();
            let d = s.len() - 1;
            if faces.len() <= d {
                faces.resize(d + 1, Default::default());
            }
            faces[d].insert(s);
        }
    }
    let faces: Vec<Vec<Vec<usize>>> = faces.into_iter().map(|s| s.into_iter().collect()).collect();
    let rank_of = |d: usize| -> usize {
        // rank of ∂_d : C_d → C_{d−1}
        if d == 0 || d >= faces.len() {
            return 0;
        }
        let rows = &faces[d - 1];
        let m = BitMatrix::from_fn(rows.len(), faces[d].len(), |i, j| {
            let s = &faces[d][j];
            rows[i].len() + 1 == s.len() && rows[i].iter().all(|v| s.contains(v))
        });
        m.rank()
    };
    (0..faces.len()).map(|d| faces[d].len() - rank_of(d) - rank_of(d + 1)).collect()
}
