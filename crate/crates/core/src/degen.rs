//! Degeneration structures, operations and the Master Equation.
//!
//! Everything here is finite and symbolic. Elements are records of their
//! spectrum; numeric backing comes from the morse module when available.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegenError {
    #[error("critical values {a} and {b} are not totally ordered")]
    TotalOrderViolation { a: String, b: String },
    #[error("element of {found} used where {expected} is required")]
    Membership { expected: String, found: String },
    #[error("({0},{1};{2}) is not a relator")]
    NotARelator(String, String, String),
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("malformed structure: {0}")]
    Parse(String),
}

/// A relator `(A,B;C)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relator {
    pub left: String,
    pub right: String,
    pub target: String,
}

impl Relator {
    pub fn new(left: &str, right: &str, target: &str) -> Self {
        Self { left: left.into(), right: right.into(), target: target.into() }
    }
}

impl std::fmt::Display for Relator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{};{})", self.left, self.right, self.target)
    }
}

#[derive(Serialize, Deserialize)]
struct StructureJson {
    #[serde(rename = "S")]
    s: Vec<String>,
    #[serde(rename = "R")]
    r: Vec<[String; 3]>,
}

/// A finite set with relators.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegenerationStructure {
    pub labels: Vec<String>,
    pub relators: Vec<Relator>,
}

impl DegenerationStructure {
    /// Labels keep their order; relators are sorted and deduplicated.
    pub fn new(labels: Vec<String>, relators: Vec<Relator>) -> Self {
        let set: BTreeSet<Relator> = relators.into_iter().collect();
        Self { labels, relators: set.into_iter().collect() }
    }

    pub fn from_json(text: &str) -> Result<Self, DegenError> {
        let raw: StructureJson = serde_json::from_str(text).map_err(|e| DegenError::Parse(e.to_string()))?;
        Ok(Self::new(raw.s, raw.r.into_iter().map(|[a, b, c]| Relator { left: a, right: b, target: c }).collect()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let raw = StructureJson {
            s: self.labels.clone(),
            r: self.relators.iter().map(|r| [r.left.clone(), r.right.clone(), r.target.clone()]).collect(),
        };
        serde_json::to_value(raw).expect("plain data")
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn is_relator(&self, a: &str, b: &str, c: &str) -> bool {
        self.relators.iter().any(|r| r.left == a && r.right == b && r.target == c)
    }

    pub fn relators_into<'a>(&'a self, target: &'a str) -> impl Iterator<Item = &'a Relator> + 'a {
        self.relators.iter().filter(move |r| r.target == target)
    }

    pub fn is_decomposable(&self, label: &str) -> bool {
        self.relators_into(label).next().is_some()
    }

    /// Whether the tuple `parts` arises from `(z)` by degeneration.
    pub fn derives(&self, z: &str, parts: &[String]) -> bool {
        let mut memo = HashMap::new();
        derives_memo(self, z, parts, &mut memo)
    }
}

fn derives_memo(
    s: &DegenerationStructure,
    z: &str,
    parts: &[String],
    memo: &mut HashMap<(String, Vec<String>), bool>,
) -> bool {
    if parts.len() == 1 && parts[0] == z {
        return true;
    }
    if parts.len() < 2 {
        return false;
    }
    let key = (z.to_string(), parts.to_vec());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    // guard against cycles: mark as false while exploring
    memo.insert(key.clone(), false);
    let mut found = false;
    'outer: for r in s.relators_into(z) {
        for k in 1..parts.len() {
            if derives_memo(s, &r.left, &parts[..k], memo) && derives_memo(s, &r.right, &parts[k..], memo) {
                found = true;
                break 'outer;
            }
        }
    }
    memo.insert(key, found);
    found
}

/// One axiom's outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub pass: bool,
    pub witnesses: Vec<String>,
}

impl AxiomCheck {
    fn from(witnesses: Vec<String>) -> Self {
        Self { pass: witnesses.is_empty(), witnesses }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub well_formed: AxiomCheck,
    pub finiteness: AxiomCheck,
    pub associativity: AxiomCheck,
    pub minimality: AxiomCheck,
    /// `(A,B;C) ∈ R ⇒ A ≠ C, B ≠ C`.
    pub target_distinct: AxiomCheck,
    /// Relators `(A,A;Z)`; accepted but listed.
    pub diagonal: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.well_formed.pass
            && self.finiteness.pass
            && self.associativity.pass
            && self.minimality.pass
            && self.target_distinct.pass
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("plain data");
        v["passed"] = self.passed().into();
        v
    }
}

/// A cycle in the digraph `C → A`, `C → B`, if there is one.
fn find_cycle(s: &DegenerationStructure) -> Option<Vec<String>> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in &s.relators {
        adj.entry(&r.target).or_default().extend([r.left.as_str(), r.right.as_str()]);
    }
    // 0 = new, 1 = on stack, 2 = done
    let mut state: HashMap<&str, u8> = HashMap::new();
    fn dfs<'a>(
        v: &'a str,
        adj: &BTreeMap<&'a str, Vec<&'a str>>,
        state: &mut HashMap<&'a str, u8>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        state.insert(v, 1);
        stack.push(v);
        for &w in adj.get(v).map(|x| x.as_slice()).unwrap_or(&[]) {
            match state.get(w).copied().unwrap_or(0) {
                1 => {
                    let start = stack.iter().position(|&x| x == w).unwrap();
                    let mut cyc: Vec<String> = stack[start..].iter().map(|x| x.to_string()).collect();
                    cyc.push(w.to_string());
                    return Some(cyc);
                }
                0 => {
                    if let Some(c) = dfs(w, adj, state, stack) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        stack.pop();
        state.insert(v, 2);
        None
    }
    let nodes: Vec<&str> = adj.keys().copied().collect();
    for v in nodes {
        if state.get(v).copied().unwrap_or(0) == 0 {
            let mut stack = vec![];
            if let Some(c) = dfs(v, &adj, &mut state, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

/// A short degeneration sequence `(Z) → (X,Y) → (three)`, with the slot
/// split in the second step.
#[derive(Debug, Clone, PartialEq)]
struct ShortSequence {
    middle: [String; 2],
    split_slot: usize,
    end: [String; 3],
}

fn short_sequences(s: &DegenerationStructure, z: &str) -> Vec<ShortSequence> {
    let mut out = vec![];
    for r in s.relators_into(z) {
        for r2 in s.relators_into(&r.left) {
            out.push(ShortSequence {
                middle: [r.left.clone(), r.right.clone()],
                split_slot: 0,
                end: [r2.left.clone(), r2.right.clone(), r.right.clone()],
            });
        }
        for r2 in s.relators_into(&r.right) {
            out.push(ShortSequence {
                middle: [r.left.clone(), r.right.clone()],
                split_slot: 1,
                end: [r.left.clone(), r2.left.clone(), r2.right.clone()],
            });
        }
    }
    out
}

/// Checks the three axioms plus the finiteness consequence. Never fails;
/// violations become witnesses.
pub fn validate_structure(s: &DegenerationStructure) -> ValidationReport {
    let mut malformed = vec![];
    let mut seen = BTreeSet::new();
    for l in &s.labels {
        if !seen.insert(l) {
            malformed.push(format!("duplicate label {l}"));
        }
    }
    for r in &s.relators {
        for x in [&r.left, &r.right, &r.target] {
            if !seen.contains(x) {
                malformed.push(format!("{r}: {x} not in S"));
            }
        }
    }

    let finiteness = match find_cycle(s) {
        Some(c) => vec![format!("cycle {}", c.join(" -> "))],
        None => vec![],
    };

    let mut assoc = vec![];
    // skip when a cycle makes the enumeration meaningless
    if finiteness.is_empty() {
        for z in &s.labels {
            let mut by_end: BTreeMap<[String; 3], Vec<ShortSequence>> = BTreeMap::new();
            for q in short_sequences(s, z) {
                by_end.entry(q.end.clone()).or_default().push(q);
            }
            for (end, seqs) in by_end {
                let slots: BTreeSet<usize> = seqs.iter().map(|q| q.split_slot).collect();
                if seqs.len() != 2 || slots.len() != 2 {
                    let mids: Vec<String> = seqs.iter().map(|q| format!("({},{})", q.middle[0], q.middle[1])).collect();
                    assoc.push(format!(
                        "({z}) -> ({},{},{}): {} sequence(s) via {}",
                        end[0],
                        end[1],
                        end[2],
                        seqs.len(),
                        mids.join(" | ")
                    ));
                }
            }
        }
    }

    let mut minimal = vec![];
    for (i, r) in s.relators.iter().enumerate() {
        for r2 in &s.relators[i + 1..] {
            if r.target != r2.target || (r.left == r2.left && r.right == r2.right) {
                continue;
            }
            if r.left == r2.left && !s.is_decomposable(&r.left) {
                minimal.push(format!("{r} and {r2} share indecomposable left source {}", r.left));
            }
            if r.right == r2.right && !s.is_decomposable(&r.right) {
                minimal.push(format!("{r} and {r2} share indecomposable right source {}", r.right));
            }
        }
    }

    let distinct = s
        .relators
        .iter()
        .filter(|r| r.left == r.target || r.right == r.target)
        .map(|r| r.to_string())
        .collect();
    let diagonal = s.relators.iter().filter(|r| r.left == r.right).map(|r| r.to_string()).collect();

    ValidationReport {
        well_formed: AxiomCheck::from(malformed),
        finiteness: AxiomCheck::from(finiteness),
        associativity: AxiomCheck::from(assoc),
        minimality: AxiomCheck::from(minimal),
        target_distinct: AxiomCheck::from(distinct),
        diagonal,
    }
}

/// `z₀ = (Z), z₁, …, z_n`.
pub type DegenerationSequence = Vec<Vec<String>>;

/// All degeneration sequences from `(z)` to `target`. Assumes the structure
/// is finite (acyclic); unreachable targets give an empty list.
pub fn enumerate_sequences(s: &DegenerationStructure, z: &str, target: &[String]) -> Vec<DegenerationSequence> {
    let mut memo = HashMap::new();
    let mut out = vec![];
    let mut path = vec![vec![z.to_string()]];
    extend_sequences(s, target, &mut path, &mut memo, &mut out);
    out
}

/// Whether `tuple` coarsens `target`: each entry derives a contiguous block.
fn coarsens(
    s: &DegenerationStructure,
    tuple: &[String],
    target: &[String],
    memo: &mut HashMap<(String, Vec<String>), bool>,
) -> bool {
    if tuple.is_empty() {
        return target.is_empty();
    }
    let rest = tuple.len() - 1;
    (1..=target.len().saturating_sub(rest)).any(|k| {
        derives_memo(s, &tuple[0], &target[..k], memo) && coarsens(s, &tuple[1..], &target[k..], memo)
    })
}

fn extend_sequences(
    s: &DegenerationStructure,
    target: &[String],
    path: &mut Vec<Vec<String>>,
    memo: &mut HashMap<(String, Vec<String>), bool>,
    out: &mut Vec<DegenerationSequence>,
) {
    let last = path.last().unwrap().clone();
    if last.len() == target.len() {
        if last == target {
            out.push(path.clone());
        }
        return;
    }
    if !coarsens(s, &last, target, memo) {
        return;
    }
    for (i, c) in last.iter().enumerate() {
        for r in s.relators_into(c) {
            let mut next = last[..i].to_vec();
            next.push(r.left.clone());
            next.push(r.right.clone());
            next.extend_from_slice(&last[i + 1..]);
            path.push(next);
            extend_sequences(s, target, path, memo, out);
            path.pop();
        }
    }
}

/// The pair label `(a,b)` used by [`morse_structure`].
pub fn pair_label(a: &str, b: &str) -> String {
    format!("({a},{b})")
}

/// `S` = ordered pairs of critical points, `R` = all `((a,b),(b,c);(a,c))`.
pub fn morse_structure(points: &[(String, f64)]) -> Result<DegenerationStructure, DegenError> {
    let mut pts = points.to_vec();
    pts.sort_by(|x, y| x.1.total_cmp(&y.1));
    for w in pts.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(DegenError::TotalOrderViolation { a: w[0].0.clone(), b: w[1].0.clone() });
        }
    }
    let mut pairs = vec![];
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            pairs.push((pts[i].0.clone(), pts[j].0.clone()));
        }
    }
    Ok(pair_structure(&pairs))
}

/// Pair structure on an explicit list of pairs `(a,b)`; relators are the
/// composable triples inside the list.
pub fn pair_structure(pairs: &[(String, String)]) -> DegenerationStructure {
    let set: BTreeSet<&(String, String)> = pairs.iter().collect();
    let labels = pairs.iter().map(|(a, b)| pair_label(a, b)).collect();
    let mut relators = vec![];
    for (a, b) in pairs {
        for (b2, c) in pairs.iter().filter(|(x, _)| x == b) {
            if set.contains(&(a.clone(), c.clone())) {
                relators.push(Relator::new(&pair_label(a, b), &pair_label(b2, c), &pair_label(a, c)));
            }
        }
    }
    DegenerationStructure::new(labels, relators)
}

/// Morse structure on `p0 < p1 < … < p_{n−1}`.
pub fn morse_chain(n: usize) -> DegenerationStructure {
    let pts: Vec<(String, f64)> = (0..n).map(|i| (format!("p{i}"), i as f64)).collect();
    morse_structure(&pts).expect("distinct values")
}

/// A prime piece of an element: its component and an identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Piece {
    pub component: String,
    pub id: String,
}

/// A point of some component, recorded through its prime decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub component: String,
    pub pieces: Vec<Piece>,
}

impl Element {
    /// An element of degeneracy 0.
    pub fn prime(component: &str, id: &str) -> Self {
        Self { component: component.into(), pieces: vec![Piece { component: component.into(), id: id.into() }] }
    }

    pub fn degeneracy(&self) -> usize {
        self.pieces.len() - 1
    }

    /// The generalized relator `(A₀,…,A_d;Z)`.
    pub fn spectrum(&self) -> (Vec<String>, String) {
        (self.pieces.iter().map(|p| p.component.clone()).collect(), self.component.clone())
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ids: Vec<&str> = self.pieces.iter().map(|p| p.id.as_str()).collect();
        write!(f, "{}[{}]", self.component, ids.join("∘"))
    }
}

pub type ComposeFn = Arc<dyn Fn(&Relator, &Element, &Element) -> Element + Send + Sync>;

/// A structure together with `∘_{(A,B;C)}`.
#[derive(Clone)]
pub struct OperationTable {
    pub structure: DegenerationStructure,
    rule: ComposeFn,
}

impl std::fmt::Debug for OperationTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperationTable").field("structure", &self.structure).finish_non_exhaustive()
    }
}

impl OperationTable {
    /// `a ∘ b` concatenates prime pieces.
    pub fn concatenation(structure: DegenerationStructure) -> Self {
        Self::with_rule(
            structure,
            Arc::new(|r: &Relator, a: &Element, b: &Element| Element {
                component: r.target.clone(),
                pieces: a.pieces.iter().chain(&b.pieces).cloned().collect(),
            }),
        )
    }

    pub fn with_rule(structure: DegenerationStructure, rule: ComposeFn) -> Self {
        Self { structure, rule }
    }

    pub fn compose(&self, r: &Relator, a: &Element, b: &Element) -> Result<Element, DegenError> {
        if !self.structure.is_relator(&r.left, &r.right, &r.target) {
            return Err(DegenError::NotARelator(r.left.clone(), r.right.clone(), r.target.clone()));
        }
        if a.component != r.left {
            return Err(DegenError::Membership { expected: r.left.clone(), found: a.component.clone() });
        }
        if b.component != r.right {
            return Err(DegenError::Membership { expected: r.right.clone(), found: b.component.clone() });
        }
        Ok((self.rule)(r, a, b))
    }

    /// Composes along the unique relator `(a.component, b.component; ·)`.
    pub fn compose_any(&self, a: &Element, b: &Element) -> Result<Element, DegenError> {
        let r = self
            .structure
            .relators
            .iter()
            .find(|r| r.left == a.component && r.right == b.component)
            .ok_or_else(|| DegenError::NotARelator(a.component.clone(), b.component.clone(), "?".into()))?;
        self.compose(r, a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationReport {
    pub degeneracy: AxiomCheck,
    pub associativity: AxiomCheck,
    /// `a ∘_E b = a' ∘_E b'` with `d(a) = d(a')` forces `A = A'`.
    pub left_source: AxiomCheck,
    pub prime_decomposition: AxiomCheck,
}

impl OperationReport {
    pub fn passed(&self) -> bool {
        self.degeneracy.pass && self.associativity.pass && self.left_source.pass && self.prime_decomposition.pass
    }
}

/// Exhaustive scan of the operation axioms over `elements`.
pub fn check_operation_table(table: &OperationTable, elements: &[Element]) -> OperationReport {
    let s = &table.structure;
    let mut products: Vec<(Relator, usize, usize, Element)> = vec![];
    let mut degen = vec![];
    for r in &s.relators {
        for (i, a) in elements.iter().enumerate().filter(|(_, a)| a.component == r.left) {
            for (j, b) in elements.iter().enumerate().filter(|(_, b)| b.component == r.right) {
                let x = (table.rule)(r, a, b);
                if x.degeneracy() != a.degeneracy() + b.degeneracy() + 1 {
                    degen.push(format!("{a} ∘{r} {b} = {x}"));
                }
                products.push((r.clone(), i, j, x));
            }
        }
    }

    // (A,B,C) ← (A,E) ← (D) and (A,B,C) ← (F,C) ← (D)
    let mut assoc = vec![];
    for rd in &s.relators {
        for re in s.relators_into(&rd.right) {
            let Some(rf) = s.relators.iter().find(|f| f.target == rd.target && f.right == re.right && f.left != rd.left && s.is_relator(&rd.left, &re.left, &f.left)) else {
                continue;
            };
            let rab = Relator::new(&rd.left, &re.left, &rf.left);
            for a in elements.iter().filter(|x| x.component == rd.left) {
                for b in elements.iter().filter(|x| x.component == re.left) {
                    for c in elements.iter().filter(|x| x.component == re.right) {
                        let lhs = (table.rule)(rd, a, &(table.rule)(re, b, c));
                        let rhs = (table.rule)(rf, &(table.rule)(&rab, a, b), c);
                        if lhs != rhs {
                            assoc.push(format!("{a}, {b}, {c}: {lhs} ≠ {rhs}"));
                        }
                    }
                }
            }
        }
    }

    let mut left = vec![];
    for (p, (r, i, _, x)) in products.iter().enumerate() {
        for (r2, i2, _, x2) in &products[p + 1..] {
            if x == x2
                && r.target == r2.target
                && elements[*i].degeneracy() == elements[*i2].degeneracy()
                && elements[*i].component != elements[*i2].component
            {
                left.push(format!("{x} from {r} and {r2}"));
            }
        }
    }

    // maximal decompositions of each element, as multisets of primes
    let mut primes = vec![];
    let mut memo: HashMap<Element, BTreeSet<Vec<Element>>> = HashMap::new();
    for x in elements.iter().filter(|x| x.degeneracy() >= 1) {
        let set = decompositions(x, &products, elements, &mut memo);
        let multisets: BTreeSet<Vec<Element>> = set
            .into_iter()
            .map(|mut v| {
                v.sort();
                v
            })
            .collect();
        if multisets.len() > 1 {
            primes.push(format!("{x} has {} distinct prime decompositions", multisets.len()));
        }
    }

    OperationReport {
        degeneracy: AxiomCheck::from(degen),
        associativity: AxiomCheck::from(assoc),
        left_source: AxiomCheck::from(left),
        prime_decomposition: AxiomCheck::from(primes),
    }
}

fn decompositions(
    x: &Element,
    products: &[(Relator, usize, usize, Element)],
    elements: &[Element],
    memo: &mut HashMap<Element, BTreeSet<Vec<Element>>>,
) -> BTreeSet<Vec<Element>> {
    if let Some(v) = memo.get(x) {
        return v.clone();
    }
    let mut out = BTreeSet::new();
    for (_, i, j, y) in products {
        if y == x {
            let left = decompositions(&elements[*i], products, elements, memo);
            let right = decompositions(&elements[*j], products, elements, memo);
            for l in &left {
                for r in &right {
                    out.insert(l.iter().chain(r).cloned().collect());
                }
            }
        }
    }
    if out.is_empty() {
        out.insert(vec![x.clone()]);
    }
    memo.insert(x.clone(), out.clone());
    out
}

/// `d(x)` and the faces `[A,B;Z]` containing `x`, one per split position of
/// its spectrum.
pub fn degeneracy_and_faces(s: &DegenerationStructure, x: &Element) -> (usize, Vec<Relator>) {
    let (parts, z) = x.spectrum();
    let mut faces = BTreeSet::new();
    for k in 1..parts.len() {
        for r in s.relators_into(&z) {
            if s.derives(&r.left, &parts[..k]) && s.derives(&r.right, &parts[k..]) {
                faces.insert(r.clone());
            }
        }
    }
    (x.degeneracy(), faces.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterEquationReport {
    pub holds: bool,
    pub boundary: Vec<String>,
    pub products: Vec<String>,
    /// In `∂K` but not in `K∘K`.
    pub missing: Vec<String>,
    /// In `K∘K` but not in `∂K`.
    pub extra: Vec<String>,
}

/// All products of `primes` under the table, primes included.
///
/// Terminates because composition raises the degeneracy and the structure
/// is finite.
pub fn closure(table: &OperationTable, primes: &[Element]) -> Vec<Element> {
    let mut all = primes.to_vec();
    let mut frontier = primes.to_vec();
    while !frontier.is_empty() {
        let mut next = vec![];
        for a in &frontier {
            for b in primes {
                if let Ok(x) = table.compose_any(a, b) {
                    next.push(x);
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// Compares `∂K = {x ∈ K : d(x) ≥ 1}` with `K∘K`.
pub fn master_equation_check(table: &OperationTable, k: &[Element]) -> MasterEquationReport {
    let boundary: BTreeSet<&Element> = k.iter().filter(|x| x.degeneracy() >= 1).collect();
    let mut products = BTreeSet::new();
    for r in &table.structure.relators {
        for a in k.iter().filter(|a| a.component == r.left) {
            for b in k.iter().filter(|b| b.component == r.right) {
                products.insert((table.rule)(r, a, b));
            }
        }
    }
    let missing: Vec<String> = boundary.iter().filter(|x| !products.contains(**x)).map(|x| x.to_string()).collect();
    let extra: Vec<String> = products.iter().filter(|x| !boundary.contains(x)).map(|x| x.to_string()).collect();
    MasterEquationReport {
        holds: missing.is_empty() && extra.is_empty(),
        boundary: boundary.iter().map(|x| x.to_string()).collect(),
        products: products.iter().map(|x| x.to_string()).collect(),
        missing,
        extra,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn four_point_chain() {
        let s = morse_chain(4);
        assert_eq!((s.labels.len(), s.relators.len()), (6, 4));
        assert!(validate_structure(&s).passed());
        let seqs = enumerate_sequences(&s, "(p0,p3)", &t(&["(p0,p1)", "(p1,p2)", "(p2,p3)"]));
        assert_eq!(seqs.len(), 2);
    }

    #[test]
    fn self_relator_is_a_cycle() {
        let s = DegenerationStructure::new(t(&["A", "B"]), vec![Relator::new("A", "B", "A")]);
        let rep = validate_structure(&s);
        assert!(!rep.finiteness.pass);
        assert!(rep.finiteness.witnesses[0].contains("A -> A"));
        assert!(!rep.target_distinct.pass);
    }
}
