use proptest::prelude::*;
use scfred_core::degen::*;
use std::sync::Arc;

fn t(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Counts sequences by breadth-first expansion of every tuple, no pruning.
fn brute_force_count(s: &DegenerationStructure, z: &str, target: &[String]) -> usize {
    let mut layer = vec![vec![z.to_string()]];
    for _ in 1..target.len() {
        let mut next = vec![];
        for tuple in &layer {
            for i in 0..tuple.len() {
                for r in s.relators.iter().filter(|r| r.target == tuple[i]) {
                    let mut u = tuple.clone();
                    u.splice(i..=i, [r.left.clone(), r.right.clone()]);
                    next.push(u);
                }
            }
        }
        layer = next;
    }
    layer.iter().filter(|x| x.as_slice() == target).count()
}

fn chain_target(n: usize) -> Vec<String> {
    (0..n).map(|i| pair_label(&format!("p{i}"), &format!("p{}", i + 1))).collect()
}

#[test]
fn factorial_counts() {
    let mut fact = 1;
    for n in 1..=6 {
        fact *= n;
        let s = morse_chain(n + 2);
        let z = pair_label("p0", &format!("p{}", n + 1));
        let target = chain_target(n + 1);
        let seqs = enumerate_sequences(&s, &z, &target);
        assert_eq!(seqs.len(), fact, "n = {n}");
        assert_eq!(brute_force_count(&s, &z, &target), fact);
        for q in &seqs {
            assert_eq!(q.len(), n + 1);
            assert_eq!(q[n], target);
        }
    }
    let s = morse_chain(3);
    assert_eq!(enumerate_sequences(&s, "(p0,p2)", &t(&["(p0,p1)", "(p1,p2)"])).len(), 1);
    assert!(enumerate_sequences(&s, "(p0,p2)", &t(&["(p0,p1)", "(p0,p1)"])).is_empty());
}

#[test]
fn morse_structure_sizes() {
    for (n, s_len, r_len) in [(2, 1, 0), (3, 3, 1), (4, 6, 4), (5, 10, 10)] {
        let s = morse_chain(n);
        assert_eq!((s.labels.len(), s.relators.len()), (s_len, r_len));
    }
    for n in 1..=8 {
        let s = morse_chain(n);
        // (n choose 3) relators
        assert_eq!(s.relators.len(), n * n.saturating_sub(1) * n.saturating_sub(2) / 6);
        let rep = validate_structure(&s);
        assert!(rep.passed(), "{n}: {rep:?}");
        assert!(rep.diagonal.is_empty());
        assert!(s.relators.iter().all(|r| r.left != r.target && r.right != r.target));
    }
}

#[test]
fn duplicate_values_are_rejected() {
    let pts = vec![("a".to_string(), 0.0), ("b".to_string(), 1.0), ("c".to_string(), 1.0)];
    assert!(matches!(morse_structure(&pts), Err(DegenError::TotalOrderViolation { .. })));
}

#[test]
fn violation_fixtures_have_witnesses() {
    let cyc = DegenerationStructure::new(
        t(&["A", "B", "C"]),
        vec![Relator::new("A", "B", "C"), Relator::new("C", "B", "A")],
    );
    let rep = validate_structure(&cyc);
    assert!(!rep.finiteness.pass && !rep.finiteness.witnesses.is_empty());

    let minimal = DegenerationStructure::new(
        t(&["A", "B", "B2", "C"]),
        vec![Relator::new("A", "B", "C"), Relator::new("A", "B2", "C")],
    );
    let rep = validate_structure(&minimal);
    assert!(rep.finiteness.pass && !rep.minimality.pass);
    assert!(rep.minimality.witnesses[0].contains("left source A"));

    let lonely = DegenerationStructure::new(
        t(&["Z", "A", "B", "I", "E"]),
        vec![Relator::new("A", "B", "Z"), Relator::new("I", "E", "B")],
    );
    let rep = validate_structure(&lonely);
    assert!(!rep.associativity.pass);
    assert!(rep.associativity.witnesses[0].contains("(Z) -> (A,I,E): 1 sequence"));

    let unknown = DegenerationStructure::new(t(&["A"]), vec![Relator::new("A", "X", "Y")]);
    assert!(!validate_structure(&unknown).well_formed.pass);

    let diag = DegenerationStructure::new(t(&["A", "Z"]), vec![Relator::new("A", "A", "Z")]);
    let rep = validate_structure(&diag);
    assert!(rep.passed());
    assert_eq!(rep.diagonal, vec!["(A,A;Z)"]);
}

#[test]
fn json_round_trip() {
    let s = morse_chain(5);
    let text = s.to_json().to_string();
    assert_eq!(DegenerationStructure::from_json(&text).unwrap(), s);
    let empty = DegenerationStructure::from_json(r#"{"S":[],"R":[]}"#).unwrap();
    assert!(validate_structure(&empty).passed());
    assert!(DegenerationStructure::from_json(r#"{"S":[1]}"#).is_err());
}

fn prime(a: usize, b: usize, id: usize) -> Element {
    let c = pair_label(&format!("p{a}"), &format!("p{b}"));
    Element::prime(&c, &format!("{c}#{id}"))
}

#[test]
fn composition() {
    let table = OperationTable::concatenation(morse_chain(4));
    let (u, v, w) = (prime(0, 1, 0), prime(1, 2, 0), prime(2, 3, 0));
    let uv = table.compose_any(&u, &v).unwrap();
    assert_eq!(uv.degeneracy(), 1);
    assert_eq!(uv.component, "(p0,p2)");
    let left = table.compose_any(&uv, &w).unwrap();
    let right = table.compose_any(&u, &table.compose_any(&v, &w).unwrap()).unwrap();
    assert_eq!(left, right);
    assert_eq!(left.degeneracy(), 2);
    assert!(matches!(
        table.compose(&Relator::new("(p0,p1)", "(p1,p2)", "(p0,p2)"), &u, &w),
        Err(DegenError::Membership { .. })
    ));

    let elements = vec![u.clone(), v.clone(), w.clone(), prime(0, 2, 1), prime(1, 3, 1)];
    assert!(check_operation_table(&table, &elements).passed());

    // a rule that forgets a piece does not raise degeneracy
    let lossy = OperationTable::with_rule(
        morse_chain(4),
        Arc::new(|r: &Relator, a: &Element, _b: &Element| Element { component: r.target.clone(), pieces: a.pieces.clone() }),
    );
    assert!(!check_operation_table(&lossy, &elements).degeneracy.pass);

    // reversing the right factor keeps degeneracy but breaks associativity
    let twisted = OperationTable::with_rule(
        morse_chain(4),
        Arc::new(|r: &Relator, a: &Element, b: &Element| Element {
            component: r.target.clone(),
            pieces: a.pieces.iter().chain(b.pieces.iter().rev()).cloned().collect(),
        }),
    );
    let rep = check_operation_table(&twisted, &elements);
    assert!(rep.degeneracy.pass && !rep.associativity.pass);
}

#[test]
fn faces() {
    let s = morse_chain(5);
    let table = OperationTable::concatenation(s.clone());
    let u = prime(0, 1, 0);
    assert_eq!(degeneracy_and_faces(&s, &u), (0, vec![]));
    let mut x = u;
    for k in 1..4 {
        x = table.compose_any(&x, &prime(k, k + 1, 0)).unwrap();
        let (d, f) = degeneracy_and_faces(&s, &x);
        assert_eq!(d, k);
        assert_eq!(f.len(), k);
    }
    let (_, f) = degeneracy_and_faces(&s, &table.compose_any(&prime(0, 1, 0), &table.compose_any(&prime(1, 2, 0), &prime(2, 3, 0)).unwrap()).unwrap());
    assert_eq!(f, vec![Relator::new("(p0,p1)", "(p1,p3)", "(p0,p3)"), Relator::new("(p0,p2)", "(p2,p3)", "(p0,p3)")]);
}

/// All broken chains built from `primes` through consecutive points.
#[test]
fn master_equation_trivial_cases() {
    let table = OperationTable::concatenation(morse_chain(3));
    let rep = master_equation_check(&table, &[prime(0, 2, 0)]);
    assert!(rep.holds && rep.boundary.is_empty() && rep.products.is_empty());
    let rep = master_equation_check(&table, &[]);
    assert!(rep.holds);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn master_equation_is_sensitive(n in 3usize..6, counts in proptest::collection::vec(1usize..3, 5), drop in any::<prop::sample::Index>()) {
        let table = OperationTable::concatenation(morse_chain(n));
        let primes: Vec<Element> = (0..n - 1).flat_map(|i| (0..counts[i]).map(move |id| prime(i, i + 1, id))).collect();
        let k = closure(&table, &primes);
        prop_assert!(master_equation_check(&table, &k).holds);
        prop_assert!(check_operation_table(&table, &k).passed());
        let mut broken = k.clone();
        let removed = broken.remove(drop.index(k.len()));
        let rep = master_equation_check(&table, &broken);
        prop_assert!(!rep.holds);
        if removed.degeneracy() >= 1 {
            prop_assert!(rep.extra.contains(&removed.to_string()));
        } else {
            prop_assert!(!rep.missing.is_empty());
        }
    }

    #[test]
    fn composition_raises_degeneracy(n in 3usize..7, a in 0usize..5, b in 0usize..5) {
        let table = OperationTable::concatenation(morse_chain(n));
        let (a, b) = (a % (n - 1), b % (n - 1));
        let x = prime(a, a + 1, 0);
        let y = prime(b, b + 1, 0);
        match table.compose_any(&x, &y) {
            Ok(z) => {
                prop_assert_eq!(b, a + 1);
                prop_assert_eq!(z.degeneracy(), 1);
            }
            Err(_) => prop_assert_ne!(b, a + 1),
        }
    }
}
