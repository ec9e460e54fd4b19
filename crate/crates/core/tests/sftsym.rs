use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use rand::SeedableRng;
use scfred_core::degen::validate_structure;
use scfred_core::sftsym::*;

fn even(name: &str, k: u32) -> Orbit {
    Orbit::new(name, k, Parity::Even)
}

fn odd(name: &str, k: u32) -> Orbit {
    Orbit::new(name, k, Parity::Odd)
}

fn w(s: &str) -> Word {
    Word::parse(s).unwrap()
}

fn sum(terms: &[(&str, i64)]) -> FormalSum {
    let mut s = FormalSum::zero();
    for (t, c) in terms {
        s.add_term(w(t), *c);
    }
    s
}

/// Independent rewriter over (hbar, letters as (is_p, orbit)) that tries
/// every rewrite position and checks they all agree.
struct Oracle {
    kappa: HashMap<String, i64>,
    odd: HashMap<String, bool>,
    memo: HashMap<(i32, Vec<(bool, String)>), BTreeMap<(i32, Vec<(bool, String)>), i64>>,
}

type Raw = (i32, Vec<(bool, String)>);

impl Oracle {
    fn new(orbits: &[Orbit]) -> Self {
        Self {
            kappa: orbits.iter().map(|o| (o.name.clone(), o.covering as i64)).collect(),
            odd: orbits.iter().map(|o| (o.name.clone(), o.parity == Parity::Odd)).collect(),
            memo: HashMap::new(),
        }
    }

    fn out_of_order(&self, x: &(bool, String), y: &(bool, String)) -> bool {
        x > y || (x == y && self.odd[&x.1])
    }

    fn normal(&mut self, word: &Raw) -> BTreeMap<Raw, i64> {
        if let Some(r) = self.memo.get(word) {
            return r.clone();
        }
        let (h, l) = word;
        let positions: Vec<usize> = (0..l.len().saturating_sub(1)).filter(|&i| self.out_of_order(&l[i], &l[i + 1])).collect();
        let mut result: Option<BTreeMap<Raw, i64>> = None;
        if positions.is_empty() {
            result = Some([(word.clone(), 1)].into_iter().collect());
        }
        for i in positions {
            let mut acc: BTreeMap<Raw, i64> = BTreeMap::new();
            let (x, y) = (l[i].clone(), l[i + 1].clone());
            if x != y {
                let sign = if self.odd[&x.1] && self.odd[&y.1] { -1 } else { 1 };
                let mut sw = l.clone();
                sw.swap(i, i + 1);
                for (k, v) in self.normal(&(*h, sw)) {
                    *acc.entry(k).or_default() += sign * v;
                }
                if x.0 && !y.0 && x.1 == y.1 {
                    let mut rest = l.clone();
                    rest.drain(i..i + 2);
                    let kap = self.kappa[&x.1];
                    for (k, v) in self.normal(&(h + 1, rest)) {
                        *acc.entry(k).or_default() += kap * v;
                    }
                }
            }
            acc.retain(|_, v| *v != 0);
            match &result {
                None => result = Some(acc),
                Some(r) => assert_eq!(r, &acc, "rewrite orders disagree on {word:?}"),
            }
        }
        let r = result.unwrap();
        self.memo.insert(word.clone(), r.clone());
        r
    }

    fn normalize(&mut self, word: &Word) -> FormalSum {
        let raw = (word.hbar, word.letters.iter().map(|l| (l.kind == Kind::P, l.orbit.clone())).collect());
        let mut out = FormalSum::zero();
        for ((h, l), c) in self.normal(&raw) {
            let letters = l.into_iter().map(|(p, o)| if p { Letter::p(&o) } else { Letter::q(&o) }).collect();
            out.add_term(Word::new(h, letters), c);
        }
        out
    }
}

#[test]
fn standard_words_are_fixed() {
    let t = OrbitTable::new(vec![even("a", 1), odd("b", 2)]).unwrap();
    for s in ["1", "q_a p_a", "ℏ q_a^3 q_b p_a p_b", "hbar^-1 p_a"] {
        assert_eq!(normalize(&t, &w(s)).unwrap(), FormalSum::from(w(s)));
    }
}

#[test]
fn commutator_relation() {
    for k in 1..=3 {
        let t = OrbitTable::new(vec![even("g", k), odd("o", k)]).unwrap();
        assert_eq!(normalize(&t, &w("p_g q_g")).unwrap(), sum(&[("q_g p_g", 1), ("ℏ", k as i64)]));
        // odd letters anti-commute: p q + q p = κℏ
        assert_eq!(normalize(&t, &w("p_o q_o")).unwrap(), sum(&[("q_o p_o", -1), ("ℏ", k as i64)]));
    }
}

#[test]
fn two_orbit_expansion() {
    let t = OrbitTable::new(vec![even("g", 1), even("d", 1)]).unwrap();
    let want = sum(&[("q_d q_g p_d p_g", 1), ("ℏ q_d p_d", 1), ("ℏ q_g p_g", 1), ("ℏ^2", 1)]);
    let got = normalize(&t, &w("p_g q_g p_d q_d")).unwrap();
    assert_eq!(got, want);
    let mut oracle = Oracle::new(&[even("g", 1), even("d", 1)]);
    assert_eq!(oracle.normalize(&w("p_g q_g p_d q_d")), want);
}

#[test]
fn sign_law_for_distinct_orbits() {
    let t = OrbitTable::new(vec![even("a", 1), odd("b", 1), odd("c", 1)]).unwrap();
    let n = |s: &str| normalize(&t, &w(s)).unwrap();
    // mixed parity commutes
    assert_eq!(n("p_b q_a"), n("q_a p_b"));
    // two odd letters anti-commute
    assert_eq!(n("p_c q_b"), n("q_b p_c").scaled(-1));
    assert!(n("q_b q_c").add(&n("q_c q_b")).is_zero());
}

#[test]
fn unknown_orbit() {
    let t = OrbitTable::new(vec![even("a", 1)]).unwrap();
    assert_eq!(normalize(&t, &w("q_z")), Err(SymbolError::UnknownOrbit("z".into())));
    assert!(OrbitTable::new(vec![even("a", 0)]).is_err());
}

#[test]
fn multiplication_examples() {
    let t = OrbitTable::new(vec![even("g", 1)]).unwrap();
    let one = FormalSum::from(Word::one());
    let x = sum(&[("p_g q_g", 1), ("q_g", 3)]);
    assert_eq!(multiply(&t, &one, &normalize_sum(&t, &x).unwrap()).unwrap(), normalize_sum(&t, &x).unwrap());
    let q = FormalSum::from(w("q_g"));
    let p = FormalSum::from(w("p_g"));
    assert_eq!(multiply(&t, &q, &p).unwrap(), FormalSum::from(w("q_g p_g")));
    let lhs = multiply(&t, &multiply(&t, &p, &q).unwrap(), &q).unwrap();
    let rhs = multiply(&t, &p, &multiply(&t, &q, &q).unwrap()).unwrap();
    assert_eq!(lhs, rhs);
    assert_eq!(lhs, sum(&[("q_g^2 p_g", 1), ("ℏ q_g", 2)]));
}

#[test]
fn induced_structures() {
    for k in 1..=3 {
        let t = OrbitTable::new(vec![even("g", k)]).unwrap();
        let s = induced_degeneration_structure(&t, &basic_classes(&t)).unwrap();
        assert!(s.is_relator("p_g", "q_g", "ℏ"));
        assert!(s.is_relator("q_g", "p_g", "q_g p_g"));
        assert!(validate_structure(&s).passed());
    }
    let t = OrbitTable::new(vec![even("a", 2), odd("b", 1)]).unwrap();
    let s = induced_degeneration_structure(&t, &basic_classes(&t)).unwrap();
    assert!(validate_structure(&s).passed());

    let empty = induced_degeneration_structure(&t, &[]).unwrap();
    assert!(empty.labels.is_empty() && validate_structure(&empty).passed());

    let mut bad = even("t", 2);
    bad.troublesome = true;
    let t = OrbitTable::new(vec![bad]).unwrap();
    assert_eq!(induced_degeneration_structure(&t, &[w("q_t")]), Err(SymbolError::Troublesome("t".into())));
    let mut fine = odd("t", 3);
    fine.troublesome = true;
    let t = OrbitTable::new(vec![fine]).unwrap();
    assert!(induced_degeneration_structure(&t, &[w("q_t")]).is_ok());

    let t = OrbitTable::new(vec![even("g", 1)]).unwrap();
    assert!(matches!(
        induced_degeneration_structure(&t, &[w("p_g q_g")]),
        Err(SymbolError::NotStandard(_))
    ));
}

#[test]
fn degree_capped_sets_are_reported_not_hidden() {
    let t = OrbitTable::new(vec![even("g", 1)]).unwrap();
    let classes = degree_capped_classes(&t, 3);
    assert_eq!(classes.len(), 12);
    let rep = validate_structure(&induced_degeneration_structure(&t, &classes).unwrap());
    // finiteness follows from degree; minimality does not
    assert!(rep.finiteness.pass);
    assert!(!rep.minimality.pass && !rep.minimality.witnesses.is_empty());
}

#[test]
fn printing() {
    assert_eq!(sum(&[("q_g p_g", 1), ("ℏ", 2)]).to_string(), "q_g p_g + 2ℏ");
    assert_eq!(sum(&[("q_g", -1)]).to_string(), "-q_g");
    assert_eq!(FormalSum::zero().to_string(), "0");
}

fn orbit_table() -> impl Strategy<Value = Vec<Orbit>> {
    proptest::collection::vec((1u32..4, any::<bool>()), 1..=3).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (k, o))| Orbit::new(&["a", "b", "c"][i].to_string(), k, if o { Parity::Odd } else { Parity::Even }))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn confluent_and_idempotent(orbits in orbit_table(), seed in any::<u64>()) {
        let t = OrbitTable::new(orbits.clone()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let word = random_word(&t, 8, &mut rng);
        let left = normalize_with(&t, &word, RewriteOrder::Leftmost).unwrap();
        prop_assert_eq!(&left, &normalize_with(&t, &word, RewriteOrder::Rightmost).unwrap());
        prop_assert_eq!(&left, &normalize_with(&t, &word, RewriteOrder::Seeded(seed)).unwrap());
        prop_assert_eq!(&left, &Oracle::new(&orbits).normalize(&word));
        for (x, _) in &left.terms {
            prop_assert!(x.is_standard(&t).unwrap());
            prop_assert_eq!(x.degree(), word.degree());
            prop_assert_eq!(x.parity(&t).unwrap(), word.parity(&t).unwrap());
        }
        prop_assert_eq!(normalize_sum(&t, &left).unwrap(), left);
    }

    #[test]
    fn multiply_is_associative_and_distributive(orbits in orbit_table(), seed in any::<u64>()) {
        let t = OrbitTable::new(orbits).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut pick = || FormalSum::from(random_word(&t, 3, &mut rng));
        let (a, b, c, d) = (pick(), pick(), pick(), pick());
        let ab_c = multiply(&t, &multiply(&t, &a, &b).unwrap(), &c).unwrap();
        let a_bc = multiply(&t, &a, &multiply(&t, &b, &c).unwrap()).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        let lhs = multiply(&t, &a, &b.add(&d)).unwrap();
        let rhs = multiply(&t, &a, &b).unwrap().add(&multiply(&t, &a, &d).unwrap());
        prop_assert_eq!(lhs, rhs);
    }
}
