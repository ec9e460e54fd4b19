//! Graded `p`/`q`/`ℏ` symbol calculus.
//!
//! Letters `q_γ`, `p_γ` carry the parity of their orbit. Odd letters
//! anti-commute, everything else commutes, except `[p_γ, q_γ] = κ_γ ℏ`.
//! `ℏ` is even and central. Standard form puts all `q` before all `p`, each
//! part sorted by orbit label.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degen::{DegenerationStructure, Relator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("unknown orbit {0}")]
    UnknownOrbit(String),
    #[error("orbit {0} is troublesome with even covering number")]
    Troublesome(String),
    #[error("covering number of {0} must be positive")]
    Covering(String),
    #[error("{0} is not in standard form")]
    NotStandard(String),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub name: String,
    pub covering: u32,
    pub parity: Parity,
    #[serde(default)]
    pub troublesome: bool,
}

impl Orbit {
    pub fn new(name: &str, covering: u32, parity: Parity) -> Self {
        Self { name: name.into(), covering, parity, troublesome: false }
    }

    /// Excluded from the indexing set.
    pub fn excluded(&self) -> bool {
        self.troublesome && self.covering % 2 == 0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrbitTable {
    orbits: BTreeMap<String, Orbit>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    orbits: Vec<Orbit>,
}

impl OrbitTable {
    pub fn new(orbits: Vec<Orbit>) -> Result<Self, SymbolError> {
        let mut map = BTreeMap::new();
        for o in orbits {
            if o.covering == 0 {
                return Err(SymbolError::Covering(o.name));
            }
            map.insert(o.name.clone(), o);
        }
        Ok(Self { orbits: map })
    }

    pub fn from_json(text: &str) -> Result<Self, SymbolError> {
        let raw: TableJson = serde_json::from_str(text).map_err(|e| SymbolError::Parse(e.to_string()))?;
        Self::new(raw.orbits)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TableJson { orbits: self.orbits.values().cloned().collect() }).expect("plain data")
    }

    pub fn get(&self, name: &str) -> Result<&Orbit, SymbolError> {
        self.orbits.get(name).ok_or_else(|| SymbolError::UnknownOrbit(name.into()))
    }

    pub fn orbits(&self) -> impl Iterator<Item = &Orbit> {
        self.orbits.values()
    }

    fn odd(&self, name: &str) -> Result<bool, SymbolError> {
        Ok(self.get(name)?.parity == Parity::Odd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Q,
    P,
}

/// Ordered as in standard form: every `q` before every `p`, then by orbit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub kind: Kind,
    pub orbit: String,
}

impl Letter {
    pub fn q(orbit: &str) -> Self {
        Self { kind: Kind::Q, orbit: orbit.into() }
    }
    pub fn p(orbit: &str) -> Self {
        Self { kind: Kind::P, orbit: orbit.into() }
    }
}

/// `ℏ^hbar` times a product of letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    pub hbar: i32,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(hbar: i32, letters: Vec<Letter>) -> Self {
        Self { hbar, letters }
    }

    pub fn one() -> Self {
        Self::new(0, vec![])
    }

    /// Parses `ℏ^2 q_a^2 p_b`; `hbar` may replace `ℏ`, `1` is the empty word.
    pub fn parse(text: &str) -> Result<Self, SymbolError> {
        let mut w = Word::one();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (base, pow) = match tok.split_once('^') {
                Some((b, e)) => (b, e.parse::<i32>().map_err(|_| SymbolError::Parse(tok.into()))?),
                None => (tok, 1),
            };
            if base == "ℏ" || base == "hbar" {
                w.hbar += pow;
                continue;
            }
            let letter = match base.split_once('_') {
                Some(("q", o)) if !o.is_empty() => Letter::q(o),
                Some(("p", o)) if !o.is_empty() => Letter::p(o),
                _ => return Err(SymbolError::Parse(tok.into())),
            };
            if pow < 0 {
                return Err(SymbolError::Parse(tok.into()));
            }
            for _ in 0..pow {
                w.letters.push(letter.clone());
            }
        }
        Ok(w)
    }

    /// Letters plus twice the `ℏ` exponent; preserved by normalization.
    pub fn degree(&self) -> i32 {
        self.letters.len() as i32 + 2 * self.hbar
    }

    pub fn parity(&self, table: &OrbitTable) -> Result<Parity, SymbolError> {
        let mut odd = false;
        for l in &self.letters {
            odd ^= table.odd(&l.orbit)?;
        }
        Ok(if odd { Parity::Odd } else { Parity::Even })
    }

    pub fn is_standard(&self, table: &OrbitTable) -> Result<bool, SymbolError> {
        Ok(first_violation(table, &self.letters)?.is_none())
    }

    fn concat(&self, other: &Word) -> Word {
        Word::new(self.hbar + other.hbar, self.letters.iter().chain(&other.letters).cloned().collect())
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = vec![];
        match self.hbar {
            0 => {}
            1 => parts.push("ℏ".to_string()),
            h => parts.push(format!("ℏ^{h}")),
        }
        let mut i = 0;
        while i < self.letters.len() {
            let l = &self.letters[i];
            let mut j = i;
            while j < self.letters.len() && self.letters[j] == *l {
                j += 1;
            }
            let k = match l.kind {
                Kind::Q => 'q',
                Kind::P => 'p',
            };
            parts.push(if j - i == 1 { format!("{k}_{}", l.orbit) } else { format!("{k}_{}^{}", l.orbit, j - i) });
            i = j;
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Finite sum of standard words with nonzero integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormalSum {
    pub terms: BTreeMap<Word, i64>,
}

impl FormalSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, w: Word, c: i64) {
        if c == 0 {
            return;
        }
        match self.terms.entry(w) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add(&self, other: &FormalSum) -> FormalSum {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    pub fn scaled(&self, k: i64) -> FormalSum {
        let mut out = FormalSum::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * k);
        }
        out
    }

    pub fn coefficient(&self, w: &Word) -> i64 {
        self.terms.get(w).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> =
            self.terms.iter().map(|(w, c)| (w.to_string(), (*c).into())).collect();
        serde_json::Value::Object(map)
    }
}

impl From<Word> for FormalSum {
    fn from(w: Word) -> Self {
        let mut s = FormalSum::zero();
        s.add_term(w, 1);
        s
    }
}

impl std::fmt::Display for FormalSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // higher degree in letters first, as usually written
        let mut terms: Vec<(&Word, &i64)> = self.terms.iter().collect();
        terms.sort_by(|a, b| b.0.letters.len().cmp(&a.0.letters.len()).then(a.0.cmp(b.0)));
        for (i, (w, c)) in terms.into_iter().enumerate() {
            let sign = if *c < 0 { "-" } else { "+" };
            if i == 0 {
                if *c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.abs();
            let body = w.to_string();
            match (a, body.as_str()) {
                (1, _) => write!(f, "{body}")?,
                (_, "1") => write!(f, "{a}")?,
                _ => write!(f, "{a}{body}")?,
            }
        }
        Ok(())
    }
}

/// Which violating position the rewriter picks next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewriteOrder {
    Leftmost,
    Rightmost,
    Seeded(u64),
}

fn violations(table: &OrbitTable, letters: &[Letter]) -> Result<Vec<usize>, SymbolError> {
    let mut out = vec![];
    for l in letters {
        table.get(&l.orbit)?;
    }
    for i in 0..letters.len().saturating_sub(1) {
        let (x, y) = (&letters[i], &letters[i + 1]);
        if x > y || (x == y && table.odd(&x.orbit)?) {
            out.push(i);
        }
    }
    Ok(out)
}

fn first_violation(table: &OrbitTable, letters: &[Letter]) -> Result<Option<usize>, SymbolError> {
    Ok(violations(table, letters)?.first().copied())
}

/// One rewrite at position `i`: returns the replacement terms.
fn rewrite_at(table: &OrbitTable, w: &Word, i: usize) -> Result<Vec<(Word, i64)>, SymbolError> {
    let (x, y) = (&w.letters[i], &w.letters[i + 1]);
    let both_odd = table.odd(&x.orbit)? && table.odd(&y.orbit)?;
    if x == y {
        // an odd letter squares to zero
        return Ok(vec![]);
    }
    let sign = if both_odd { -1 } else { 1 };
    let mut swapped = w.letters.clone();
    swapped.swap(i, i + 1);
    let mut out = vec![(Word::new(w.hbar, swapped), sign)];
    if x.kind == Kind::P && y.kind == Kind::Q && x.orbit == y.orbit {
        let mut rest = w.letters.clone();
        rest.drain(i..i + 2);
        out.push((Word::new(w.hbar + 1, rest), table.get(&x.orbit)?.covering as i64));
    }
    Ok(out)
}

pub fn normalize(table: &OrbitTable, w: &Word) -> Result<FormalSum, SymbolError> {
    normalize_with(table, w, RewriteOrder::Leftmost)
}

/// Rewrites until every term is standard.
pub fn normalize_with(table: &OrbitTable, w: &Word, order: RewriteOrder) -> Result<FormalSum, SymbolError> {
    let mut rng = match order {
        RewriteOrder::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
        _ => None,
    };
    let mut out = FormalSum::zero();
    let mut work = vec![(w.clone(), 1i64)];
    while let Some((w, c)) = work.pop() {
        let v = violations(table, &w.letters)?;
        if v.is_empty() {
            out.add_term(w, c);
            continue;
        }
        let i = match order {
            RewriteOrder::Leftmost => v[0],
            RewriteOrder::Rightmost => v[v.len() - 1],
            RewriteOrder::Seeded(_) => v[rng.as_mut().unwrap().gen_range(0..v.len())],
        };
        for (w2, c2) in rewrite_at(table, &w, i)? {
            work.push((w2, c * c2));
        }
    }
    Ok(out)
}

pub fn normalize_sum(table: &OrbitTable, s: &FormalSum) -> Result<FormalSum, SymbolError> {
    let mut out = FormalSum::zero();
    for (w, c) in &s.terms {
        out = out.add(&normalize(table, w)?.scaled(*c));
    }
    Ok(out)
}

/// Bilinear concatenation followed by normalization.
pub fn multiply(table: &OrbitTable, a: &FormalSum, b: &FormalSum) -> Result<FormalSum, SymbolError> {
    let mut out = FormalSum::zero();
    for (x, cx) in &a.terms {
        for (y, cy) in &b.terms {
            out = out.add(&normalize(table, &x.concat(y))?.scaled(cx * cy));
        }
    }
    Ok(out)
}

/// `S` = the classes, `R` = `([σ],[τ];[β])` whenever `β` occurs in `σ·τ`.
pub fn induced_degeneration_structure(
    table: &OrbitTable,
    classes: &[Word],
) -> Result<DegenerationStructure, SymbolError> {
    for w in classes {
        for l in &w.letters {
            if table.get(&l.orbit)?.excluded() {
                return Err(SymbolError::Troublesome(l.orbit.clone()));
            }
        }
        if !w.is_standard(table)? {
            return Err(SymbolError::NotStandard(w.to_string()));
        }
    }
    let labels: Vec<String> = classes.iter().map(|w| w.to_string()).collect();
    let mut relators = vec![];
    for (i, x) in classes.iter().enumerate() {
        for (j, y) in classes.iter().enumerate() {
            let prod = normalize(table, &x.concat(y))?;
            for (k, z) in classes.iter().enumerate() {
                if prod.coefficient(z) != 0 {
                    relators.push(Relator::new(&labels[i], &labels[j], &labels[k]));
                }
            }
        }
    }
    Ok(DegenerationStructure::new(labels, relators))
}

/// Per orbit `q_γ`, `p_γ`, `q_γ p_γ`, plus `ℏ`.
pub fn basic_classes(table: &OrbitTable) -> Vec<Word> {
    let mut out = vec![];
    for o in table.orbits().filter(|o| !o.excluded()) {
        out.push(Word::new(0, vec![Letter::q(&o.name)]));
        out.push(Word::new(0, vec![Letter::p(&o.name)]));
        out.push(Word::new(0, vec![Letter::q(&o.name), Letter::p(&o.name)]));
    }
    if !out.is_empty() {
        out.push(Word::new(1, vec![]));
    }
    out
}

/// Every nonempty standard word with `1 ≤ degree ≤ cap`, `ℏ` exponent ≥ 0.
pub fn degree_capped_classes(table: &OrbitTable, cap: usize) -> Vec<Word> {
    let letters: Vec<Letter> = table
        .orbits()
        .filter(|o| !o.excluded())
        .flat_map(|o| [Letter::q(&o.name), Letter::p(&o.name)])
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = vec![];
    fn grow(
        table: &OrbitTable,
        letters: &[Letter],
        start: usize,
        cur: &mut Vec<Letter>,
        left: usize,
        out: &mut Vec<Vec<Letter>>,
    ) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for (k, l) in letters.iter().enumerate().skip(start) {
            let odd = table.odd(&l.orbit).unwrap_or(false);
            if odd && cur.last() == Some(l) {
                continue;
            }
            cur.push(l.clone());
            grow(table, letters, k, cur, left - 1, out);
            cur.pop();
        }
    }
    let mut seqs = vec![];
    grow(table, &letters, 0, &mut vec![], cap, &mut seqs);
    for s in seqs {
        let mut h = 0;
        while s.len() + 2 * h <= cap {
            if !(s.is_empty() && h == 0) {
                out.push(Word::new(h as i32, s.clone()));
            }
            h += 1;
        }
    }
    out.sort();
    out
}

/// A random raw word of at most `max_len` letters over the table's orbits.
pub fn random_word(table: &OrbitTable, max_len: usize, rng: &mut impl Rng) -> Word {
    let names: Vec<&String> = table.orbits.keys().collect();
    let len = rng.gen_range(0..=max_len);
    let letters = (0..len)
        .map(|_| {
            let o = names[rng.gen_range(0..names.len())];
            if rng.gen_bool(0.5) {
                Letter::q(o)
            } else {
                Letter::p(o)
            }
        })
        .collect();
    Word::new(rng.gen_range(0..2), letters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let w = Word::parse("hbar^2 q_a^2 p_b").unwrap();
        assert_eq!(w.letters.len(), 3);
        assert_eq!(w.to_string(), "ℏ^2 q_a^2 p_b");
        assert_eq!(Word::parse(&w.to_string()).unwrap(), w);
        assert!(Word::parse("x_a").is_err());
    }

    #[test]
    fn odd_square_vanishes() {
        let t = OrbitTable::new(vec![Orbit::new("a", 1, Parity::Odd)]).unwrap();
        assert!(normalize(&t, &Word::parse("q_a q_a").unwrap()).unwrap().is_zero());
    }
}
