use nmlogic::bits;
use nmlogic::consequence::literal_conjunctions;
use nmlogic::lang::{parse_formula, Formula, Language, ModelSet};
use nmlogic::revision::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lang(v: &[&str]) -> Language {
    Language::new(v.iter().copied()).unwrap()
}

fn hamming(v: &[&str]) -> Distance {
    Distance::hamming(lang(v)).unwrap()
}

fn random_distance(rng: &mut ChaCha8Rng, l: Language, distinct: bool) -> Distance {
    let n = 1usize << l.len();
    let mut used = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let v = loop {
                let v = rng.gen_range(1..=if distinct { 1000 } else { 3 });
                if !distinct || used.insert(v) {
                    break v;
                }
            };
            pairs.push((x, y, v, 1));
        }
    }
    Distance::from_table(l, &pairs).unwrap()
}

#[test]
fn bar_examples() {
    let l = lang(&["a", "b"]);
    let d = hamming(&["a", "b"]);
    let x = ModelSet::from_codes(l.clone(), [0b00]);
    let y = ModelSet::from_codes(l.clone(), [0b01, 0b11]);
    assert_eq!(bar(&x, &y, &d).unwrap().codes(), vec![0b01]);
    let both = ModelSet::from_codes(l.clone(), [0b00, 0b11]);
    assert_eq!(bar(&both, &y, &d).unwrap().codes(), vec![0b11]);
    let empty = ModelSet::from_codes(l.clone(), []);
    assert!(bar(&x, &empty, &d).unwrap().is_empty());
    let other = ModelSet::from_codes(lang(&["c"]), [0]);
    assert!(bar(&other, &y, &d).is_err());
}

#[test]
fn bar_subset_and_intersection_laws() {
    let d = hamming(&["a", "b", "c"]);
    let full = d.full();
    for x in bits::nonempty_submasks(full).step_by(7) {
        for y in bits::nonempty_submasks(full) {
            let b = d.bar(x, y);
            assert!(bits::is_subset(b, y) && b != 0);
            if x & y != 0 {
                assert_eq!(b, x & y);
            }
        }
    }
}

#[test]
fn revise_round_trips_and_edge_cases() {
    let l = lang(&["a", "b"]);
    let d = hamming(&["a", "b"]);
    let f = |s: &str| parse_formula(s, &l).unwrap();
    let t = ModelSet::from_codes(l.clone(), [0b00, 0b10]);
    let r = revise(&t, &f("a"), &d).unwrap();
    assert_eq!(r.models.codes(), vec![0b10]);
    let r = revise(&t, &Formula::True, &d).unwrap();
    assert_eq!(r.models, t);
    for lit in literal_conjunctions(&l) {
        if let Ok(r) = revise(&t, &lit, &d) {
            let back = nmlogic::lang::models_of(&r.generator, &l).unwrap();
            assert_eq!(back, r.models);
        }
    }
    assert!(matches!(revise(&ModelSet::from_codes(l.clone(), []), &f("a"), &d), Err(RevError::Empty(_))));
    let engine = RevisionEngine { distance: d.clone(), kb: t };
    assert_eq!(engine.revise(&f("b")).unwrap().generator.to_string(), "!a & b | a & b");
}

#[test]
fn ghd_for_sum_and_max() {
    let s = SplitDistance::sum(hamming(&["p", "q"]), hamming(&["r", "s"])).unwrap();
    assert!(check_ghd(&s).holds());
    let m = SplitDistance::max(hamming(&["p"]), hamming(&["q"])).unwrap();
    let rep = check_ghd(&m);
    assert!(!rep.ghd1.holds());
    let w = rep.ghd1.witness().unwrap();
    assert!(w.rendered.starts_with("GHD1"));
    // One-point-like blocks: a single variable against itself.
    let tiny = SplitDistance::sum(hamming(&["p"]), hamming(&["q"])).unwrap();
    assert!(check_ghd(&tiny).holds());
}

#[test]
fn ghd_for_sums_of_random_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for distinct in [true, false] {
        for _ in 0..6 {
            let d1 = random_distance(&mut rng, lang(&["p", "q"]), distinct);
            let d2 = random_distance(&mut rng, lang(&["r"]), distinct);
            let s = SplitDistance::sum(d1, d2).unwrap();
            assert!(check_ghd(&s).holds());
            assert!(verify_bar_factorization(&s).holds());
        }
    }
}

#[test]
fn bar_factorization() {
    let s = SplitDistance::sum(hamming(&["p"]), hamming(&["q"])).unwrap();
    assert!(verify_bar_factorization(&s).holds());
    let m = SplitDistance::max(hamming(&["p", "q"]), hamming(&["r"])).unwrap();
    let v = verify_bar_factorization(&m);
    let w = v.witness().expect("max breaks the factorization");
    assert_ne!(w.lhs, w.rhs);
    assert_eq!(bar_factorization_instance(&m, w.sets).unwrap(), w.clone());
    // Singletons on both sides.
    assert!(bar_factorization_instance(&m, [1, 2, 1, 1]).is_none());
}

#[test]
fn revision_split() {
    let (l1, l2) = (lang(&["p"]), lang(&["q"]));
    let s = SplitDistance::sum(Distance::hamming(l1.clone()).unwrap(), Distance::hamming(l2.clone()).unwrap()).unwrap();
    let lits1 = literal_conjunctions(&l1);
    let lits2 = literal_conjunctions(&l2);
    let mut n = 0;
    for a in &lits1 {
        for b in &lits1 {
            for c in &lits2 {
                for e in &lits2 {
                    assert!(check_revision_split(&s, a, c, b, e).unwrap().holds());
                    n += 1;
                }
            }
        }
    }
    assert_eq!(n, 256);
    assert!(check_revision_split(&s, &Formula::atom("q"), &Formula::True, &Formula::True, &Formula::True).is_err());
    let m = SplitDistance::max(Distance::hamming(lang(&["p", "q"])).unwrap(), Distance::hamming(lang(&["r"])).unwrap()).unwrap();
    let l = lang(&["p", "q"]);
    let r = lang(&["r"]);
    let mut found = false;
    for a in literal_conjunctions(&l) {
        for b in literal_conjunctions(&l) {
            for c in literal_conjunctions(&r) {
                for e in literal_conjunctions(&r) {
                    found |= !check_revision_split(&m, &a, &c, &b, &e).unwrap().holds();
                }
            }
        }
    }
    assert!(found);
}

#[test]
fn revision_interpolation() {
    let left = lang(&["p"]);
    let j = lang(&["q", "r"]);
    let s = SplitDistance::sum(Distance::hamming(left.clone()).unwrap(), Distance::hamming(j.clone()).unwrap()).unwrap();
    let jp = lang(&["q"]);
    let mut vacuous = 0;
    let mut live = 0;
    for phi in literal_conjunctions(&left) {
        for psi in literal_conjunctions(&left) {
            for phi2 in literal_conjunctions(&jp) {
                for psi2 in literal_conjunctions(&jp) {
                    for rho in literal_conjunctions(&j) {
                        let rep = check_revision_interpolation(&s, &jp, &phi, &phi2, &psi, &psi2, &rho);
                        let rep = match rep {
                            Err(RevError::Empty(_)) => {
                                assert!(phi == Formula::False || psi == Formula::False);
                                continue;
                            }
                            other => other.unwrap(),
                        };
                        assert!(rep.verdict.holds(), "{phi} {psi} {phi2} {psi2} {rho}");
                        if rep.vacuous {
                            vacuous += 1
                        } else {
                            live += 1
                        }
                    }
                }
            }
        }
    }
    assert!(vacuous > 0 && live > 0);
    let t = Formula::True;
    let rep = check_revision_interpolation(&s, &jp, &t, &t, &t, &t, &t).unwrap();
    assert!(!rep.vacuous && rep.verdict.holds());
    let r = Formula::atom("r");
    assert!(matches!(
        check_revision_interpolation(&s, &jp, &t, &r, &t, &t, &t),
        Err(RevError::Blocks(_))
    ));
    assert!(check_revision_interpolation(&s, &lang(&["p"]), &t, &t, &t, &t, &t).is_err());
}

#[test]
fn agm_postulates() {
    let d = hamming(&["a", "b"]);
    let pool: Vec<u64> = bits::submasks(d.full()).collect();
    assert!(check_agm_postulates(&d, &pool).holds());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = random_distance(&mut rng, lang(&["a", "b"]), false);
    let rep = check_agm_postulates(&r, &pool);
    assert!(rep.success.holds() && rep.vacuity.holds() && rep.consistency.holds());
}
