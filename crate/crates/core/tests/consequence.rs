use nmlogic::consequence::*;
use nmlogic::lang::{parse_formula, Language, ModelSet};
use nmlogic::mulsize::oracle::partial_orders;
use nmlogic::pref::{chain, Block, PreferenceRelation, ProductStructure};
use nmlogic::interp::fixture_mul_mu;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lang(vars: &[&str]) -> Language {
    Language::new(vars.iter().copied()).unwrap()
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
}

/// Ranked relation from a rank per point, lower rank preferred.
fn ranked(ranks: &[u8]) -> PreferenceRelation {
    PreferenceRelation::from_fn(names(ranks.len()), |a, b| ranks[a] < ranks[b]).unwrap()
}

fn random_order(rng: &mut ChaCha8Rng, n: usize) -> PreferenceRelation {
    let perm = {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            p.swap(i, rng.gen_range(0..=i));
        }
        p
    };
    let mut below = vec![0u64; n];
    for b in 0..n {
        for a in 0..b {
            if rng.gen_bool(0.3) {
                below[b] |= 1 << a | below[a];
            }
        }
    }
    PreferenceRelation::from_fn(names(n), |a, b| below[perm[b]] >> perm[a] & 1 == 1).unwrap()
}

fn single_edge() -> NmLogic {
    let l = lang(&["p", "q", "r"]);
    let r = PreferenceRelation::from_edges(names(8), [(0b000, 0b100)]).unwrap();
    NmLogic::new(l, r).unwrap()
}

#[test]
fn entailment_on_the_single_edge_structure() {
    let l = single_edge();
    let lg = l.language().unwrap().clone();
    let f = |s: &str| parse_formula(s, &lg).unwrap();
    assert!(nm_entails(&l, &f("!q & !r"), &f("!p & !q")).unwrap());
    assert!(!nm_entails(&l, &f("true"), &f("!p & !q")).unwrap());
    assert!(nm_entails(&l, &f("p"), &f("p")).unwrap());
    assert_eq!(l.mu(l.mask(&f("!q & !r")).unwrap()), 1);
    let other = parse_formula("s", &lang(&["s"])).unwrap();
    assert!(nm_entails(&l, &other, &f("p")).is_err());
}

#[test]
fn theory_generator_round_trips() {
    let l = lang(&["p", "q"]);
    for codes in 0u64..16 {
        let s = ModelSet::from_codes(l.clone(), (0..4).filter(|c| codes >> c & 1 == 1));
        let g = theory_of(&s).unwrap();
        assert_eq!(mask_of(&g, &l).unwrap(), codes);
    }
}

#[test]
fn basic_rules_hold_on_partial_orders() {
    use LogicalRuleId::*;
    let rules = [SC, REF, LLE, RW, CCL, And, Or, Cut, CM, Cum];
    let mut structures: Vec<(Language, PreferenceRelation)> = Vec::new();
    for r in partial_orders(2, false) {
        structures.push((lang(&["p"]), r));
    }
    for r in partial_orders(4, false) {
        structures.push((lang(&["p", "q"]), r));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        structures.push((lang(&["p", "q", "r"]), random_order(&mut rng, 8)));
    }
    for (lg, r) in structures {
        let l = NmLogic::new(lg.clone(), r).unwrap();
        let pool = if lg.len() == 3 {
            Pool::literal_conjunctions(&lg).unwrap()
        } else {
            Pool::default_for(&lg).unwrap()
        };
        for rule in rules {
            let v = check_logical_rule(&l, rule, &pool).unwrap();
            assert!(v.holds(), "{rule} on {:?}: {:?}", l.relation().edges(), v.witness());
        }
    }
}

#[test]
fn and_holds_and_ratm_depends_on_rank() {
    let lg = lang(&["p", "q"]);
    let pool = Pool::default_for(&lg).unwrap();
    let r = PreferenceRelation::from_fn(names(4), |a, b| (a as u32).count_ones() < (b as u32).count_ones()).unwrap();
    let l = NmLogic::new(lg.clone(), r).unwrap();
    assert!(check_logical_rule(&l, LogicalRuleId::And, &pool).unwrap().holds());
    assert!(check_logical_rule(&l, LogicalRuleId::RatM, &pool).unwrap().holds());

    // a ≺ b, c off to the side: smooth, not ranked.
    let r = PreferenceRelation::from_edges(names(3), [(0, 1)]).unwrap();
    let l = NmLogic::on_points(r);
    let pool = Pool::for_logic(&l).unwrap();
    let v = check_logical_rule(&l, LogicalRuleId::RatM, &pool).unwrap();
    let w = v.witness().expect("RatM fails");
    assert!(replay(&l, LogicalRuleId::RatM, w, &pool));
    assert_eq!(w.bindings.len(), 3);
}

#[test]
fn ranked_point_structures_pass_the_core_rules() {
    use LogicalRuleId::*;
    for ranks in [[0u8, 0, 0], [0, 1, 2], [0, 0, 1], [0, 1, 1], [1, 0, 1]] {
        let l = NmLogic::on_points(ranked(&ranks));
        let pool = Pool::for_logic(&l).unwrap();
        for rule in [And, Or, CM, Cut, Cum, RatM, RatMEq, LogEqPrime, DR, LogUnion, LogUnionPrime, PR, MuIn] {
            assert!(check_logical_rule(&l, rule, &pool).unwrap().holds(), "{rule} {ranks:?}");
        }
    }
}

#[test]
fn cp_tracks_empty_mu() {
    let l = NmLogic::on_points(chain(names(3)).unwrap());
    let pool = Pool::for_logic(&l).unwrap();
    assert!(check_logical_rule(&l, LogicalRuleId::CP, &pool).unwrap().holds());
    let cyc = PreferenceRelation::from_edges(names(3), [(0, 1), (1, 0)]).unwrap();
    let l = NmLogic::on_points(cyc);
    let v = check_logical_rule(&l, LogicalRuleId::CP, &pool).unwrap();
    let w = v.witness().expect("the 2-cycle has empty μ");
    assert_eq!(l.mu(w.masks[0]), 0);
    assert!(w.masks[0] != 0);
}

#[test]
fn and_n_and_cm_n_on_a_cycle() {
    // A 3-cycle: μ of the whole carrier is empty, so chains of consequences
    // reach the empty set.
    let r = PreferenceRelation::from_edges(names(3), [(0, 1), (1, 2), (2, 0)]).unwrap();
    let l = NmLogic::on_points(r);
    let pool = Pool::for_logic(&l).unwrap();
    for rule in [LogicalRuleId::And1, LogicalRuleId::AndN(3), LogicalRuleId::CM2, LogicalRuleId::CMn(3)] {
        let v = check_logical_rule(&l, rule, &pool).unwrap();
        let w = v.witness().unwrap_or_else(|| panic!("{rule} should fail"));
        assert!(replay(&l, rule, w, &pool), "{rule}");
    }
    let ok = NmLogic::on_points(ranked(&[0, 1, 1]));
    for rule in [LogicalRuleId::AndN(4), LogicalRuleId::CMn(4)] {
        assert!(check_logical_rule(&ok, rule, &pool).unwrap().holds());
    }
}

#[test]
fn scenario1_cases() {
    for ranks in [[0u8, 1, 2, 3], [0, 0, 1, 1], [1, 0, 0, 2]] {
        let l = NmLogic::on_points(ranked(&ranks));
        let pool = Pool::for_logic(&l).unwrap();
        for case in 1..=3 {
            assert!(check_scenario1_logical(&l, case, &pool).unwrap().holds());
        }
        assert!(check_logical_rule(&l, LogicalRuleId::Scenario1Milder, &pool).unwrap().holds());
    }
    // a ≺ b ≺ y without a ≺ y: case 3 breaks.
    let r = PreferenceRelation::from_edges(vec!["a".into(), "b".into(), "y".into()], [(0, 1), (1, 2)]).unwrap();
    let l = NmLogic::on_points(r);
    let pool = Pool::for_logic(&l).unwrap();
    let v = check_scenario1_logical(&l, 3, &pool).unwrap();
    assert!(replay(&l, LogicalRuleId::Scenario1(3), v.witness().unwrap(), &pool));
    // Case 2 holds for every relation.
    assert!(check_scenario1_logical(&l, 2, &pool).unwrap().holds());
    // Inconsistent α only meets premises vacuously.
    let falsum = pool.iter().position(|it| it.mask == 0).unwrap();
    assert_eq!(pool.label(falsum), "{}");
    assert!(check_scenario1_logical(&l, 4, &pool).is_err());
}

#[test]
fn witness_json_shape() {
    let r = PreferenceRelation::from_edges(names(3), [(0, 1)]).unwrap();
    let l = NmLogic::on_points(r);
    let pool = Pool::for_logic(&l).unwrap();
    let w = check_logical_rule(&l, LogicalRuleId::RatM, &pool).unwrap().into_witness().unwrap();
    let j = w.bindings_json();
    assert!(j.get("alpha").is_some() && j.get("beta'").is_some());
}

#[test]
fn rule_ids_parse() {
    assert_eq!("RatM=".parse::<LogicalRuleId>().unwrap(), LogicalRuleId::RatMEq);
    assert_eq!("ANDn(5)".parse::<LogicalRuleId>().unwrap(), LogicalRuleId::AndN(5));
    assert!("NoSuchRule".parse::<LogicalRuleId>().is_err());
}

fn two_blocks(r1: PreferenceRelation, r2: PreferenceRelation, rp: PreferenceRelation) -> ProductStructure {
    let b1 = Block::two_valued(&["p"]).unwrap();
    let b2 = Block::two_valued(&["q"]).unwrap();
    let mut rels = std::collections::BTreeMap::new();
    rels.insert(1, r1);
    rels.insert(2, r2);
    rels.insert(3, rp);
    ProductStructure::explicit(vec![b1, b2], rels).unwrap()
}

#[test]
fn two_language_laws() {
    let b1 = Block::two_valued(&["p", "q"]).unwrap();
    let b2 = Block::two_valued(&["r"]).unwrap();
    let d1 = nmlogic::pref::dominance(&b1).unwrap();
    let d2 = nmlogic::pref::dominance(&b2).unwrap();
    let set = ProductStructure::set_variant(vec![b1.clone(), b2.clone()], vec![d1.clone(), d2.clone()]).unwrap();
    for law in [TwoLangLaw::BigBig, TwoLangLaw::BigMedium, TwoLangLaw::MediumMedium] {
        assert!(check_two_language_law(&set, law).unwrap().holds(), "{law}");
    }
    let forget = ProductStructure::forget((b1.clone(), d1.clone()), (b2.clone(), d2.clone())).unwrap();
    assert!(check_two_language_law(&forget, TwoLangLaw::Forget).unwrap().holds());
    let forget = ProductStructure::forget((b2, d2), (b1, d1)).unwrap();
    assert!(check_two_language_law(&forget, TwoLangLaw::Forget).unwrap().holds());

    // Variant 2 of the three-variable fixture violates (μ*1) and b*b.
    let ps = fixture_mul_mu(2).unwrap();
    let v = check_two_language_law_split(&ps, 0b001, 0b110, TwoLangLaw::BigBig).unwrap();
    assert!(!v.holds());
    assert!(check_two_language_law_split(&ps, 0b011, 0b010, TwoLangLaw::BigBig).is_err());
}

#[test]
fn b_m_and_m_m_fail_without_mu_star_1() {
    // Empty factors, but !p q ≺ p q in the product: p q drops out of μ.
    let names2 = |p: &str| vec![format!("!{p}"), p.to_string()];
    let r1 = PreferenceRelation::empty(names2("p")).unwrap();
    let r2 = PreferenceRelation::empty(names2("q")).unwrap();
    let rp = PreferenceRelation::from_edges(names(4), [(1, 3)]).unwrap();
    let ps = two_blocks(r1, r2, rp);
    assert!(!check_two_language_law(&ps, TwoLangLaw::BigMedium).unwrap().holds());
    assert!(!check_two_language_law(&ps, TwoLangLaw::MediumMedium).unwrap().holds());
}
