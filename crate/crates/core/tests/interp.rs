use nmlogic::consequence::{literal_conjunctions, mask_of};
use nmlogic::interp::*;
use nmlogic::lang::{models_of, parse_formula, Language, Model, ModelSet, ValueFunction, ValueSet};
use nmlogic::mulsize::check_mu_star_1;
use nmlogic::pref::{dominance, Block, ProductStructure};

fn lang(vars: &[&str]) -> Language {
    Language::new(vars.iter().copied()).unwrap()
}

fn two_valued_problem(f: &str, g: &str) -> MonotonicProblem {
    let l = lang(&["a", "b", "c"]);
    let gamma = ModelSet::full(l.clone(), ValueSet::two_valued()).unwrap();
    let fv = ValueFunction::characteristic(gamma.clone(), &models_of(&parse_formula(f, &l).unwrap(), &l).unwrap()).unwrap();
    let gv = ValueFunction::characteristic(gamma, &models_of(&parse_formula(g, &l).unwrap(), &l).unwrap()).unwrap();
    MonotonicProblem::new(lang(&["a"]), lang(&["b"]), lang(&["c"]), fv, gv).unwrap()
}

#[test]
fn band_collapses_for_b_and_c_under_b() {
    let p = two_valued_problem("b & c", "b");
    let band = monotonic_band(&p).unwrap();
    assert_eq!(band.lower, band.upper);
    let on = Model(vec![1]);
    assert_eq!(band.lower.value(&on), Some(1));
    assert_eq!(band.lower.value(&Model(vec![0])), Some(0));
    assert!(is_interpolant_monotonic(&p, &band.lower).unwrap().holds());
}

#[test]
fn band_edges_and_perturbations() {
    let p = two_valued_problem("b & c", "a | b");
    let band = monotonic_band(&p).unwrap();
    assert!(is_interpolant_monotonic(&p, &band.lower).unwrap().holds());
    assert!(is_interpolant_monotonic(&p, &band.upper).unwrap().holds());
    // Lower is char(b): pushing b to 0 drops below it.
    let dom = band.domain().clone();
    let below = ValueFunction::from_fn(dom, ValueSet::two_valued(), |_| 0).unwrap();
    let v = is_interpolant_monotonic(&p, &below).unwrap();
    let m = v.witness().expect("fails");
    assert_eq!(m.values()[1], 1);
    assert!(!band.contains(&below).unwrap().holds());
}

#[test]
fn self_interpolation_and_bottom() {
    let l = lang(&["a", "b", "c"]);
    let three = ValueSet::three_valued();
    let gamma = ModelSet::full(l.clone(), three.clone()).unwrap();
    let h = ValueFunction::from_fn(gamma.clone(), three.clone(), |m| m.values()[1]).unwrap();
    let p = MonotonicProblem::new(lang(&["a"]), lang(&["b"]), lang(&["c"]), h.clone(), h.clone()).unwrap();
    let band = monotonic_band(&p).unwrap();
    assert_eq!(band.lower, band.upper);
    let zero = ValueFunction::from_fn(gamma.clone(), three.clone(), |_| 0).unwrap();
    let g = ValueFunction::from_fn(gamma, three, |m| m.values()[0].max(m.values()[1])).unwrap();
    let p = MonotonicProblem::new(lang(&["a"]), lang(&["b"]), lang(&["c"]), zero, g).unwrap();
    let band = monotonic_band(&p).unwrap();
    assert!(band.lower.iter().all(|(_, v)| v == 0));
    let upper: Vec<u8> = band.upper.iter().map(|(_, v)| v).collect();
    assert_eq!(upper, vec![0, 1, 2]);
}

#[test]
fn problem_validation_names_witnesses() {
    let l = lang(&["a", "b", "c"]);
    let gamma = ModelSet::full(l.clone(), ValueSet::two_valued()).unwrap();
    let ch = |s: &str| ValueFunction::characteristic(gamma.clone(), &models_of(&parse_formula(s, &l).unwrap(), &l).unwrap()).unwrap();
    let mk = |f: &str, g: &str| MonotonicProblem::new(lang(&["a"]), lang(&["b"]), lang(&["c"]), ch(f), ch(g));
    assert!(matches!(mk("a", "true"), Err(InterpError::FSensitive(_))));
    assert!(matches!(mk("b", "c | b"), Err(InterpError::GSensitive(_))));
    assert!(matches!(mk("b", "false"), Err(InterpError::NotBelow(_))));
    assert!(matches!(
        MonotonicProblem::new(lang(&["a"]), lang(&["b"]), lang(&["a"]), ch("b"), ch("b")),
        Err(InterpError::Partition(_))
    ));
    // Γ without its cut-and-paste closure.
    let thin = ModelSet::from_codes(l.clone(), [0b000, 0b111]);
    let f = ValueFunction::from_fn(thin.clone(), ValueSet::two_valued(), |_| 0).unwrap();
    let p = MonotonicProblem::new(lang(&["a"]), lang(&["b"]), lang(&["c"]), f.clone(), f).unwrap();
    assert!(matches!(monotonic_band(&p), Err(InterpError::NotRich(_))));
}

#[test]
fn definability() {
    let l = lang(&["p", "q", "r"]);
    let m = |s: &str| models_of(&parse_formula(s, &l).unwrap(), &l).unwrap();
    assert_eq!(definable_over(&m("!p & !q & !r"), &lang(&["q"])), None);
    assert_eq!(definable_over(&m("true"), &lang(&["q"])).unwrap().to_string(), "true");
    assert_eq!(definable_over(&m("q"), &lang(&["q"])).unwrap().to_string(), "q");
}

#[test]
fn mul_mu_fixture_verdicts() {
    let expect = [(1, true, false, false), (2, false, true, false), (3, true, false, true)];
    for (v, sub, sup, interp) in expect {
        let ps = fixture_mul_mu(v).unwrap();
        let r = check_mu_star_1(&ps).unwrap();
        assert_eq!((r.subset.holds(), r.superset.holds()), (sub, sup), "variant {v}");
        let p = mul_mu_partition(&ps).unwrap();
        let found = check_interpolation(&ps, &p, InterpolantForm::NmNm).unwrap();
        assert_eq!(found.holds(), interp, "variant {v}");
    }
}

#[test]
fn mul_mu_has_no_interpolant_over_q() {
    let ps = fixture_mul_mu(1).unwrap();
    let l = ps.language(ps.all_blocks());
    let m = |s: &str| mask_of(&parse_formula(s, &l).unwrap(), &l).unwrap();
    let (phi, psi) = (m("!q & !r"), m("!p & !q"));
    let r = ps.composed();
    assert_eq!(r.mu(phi), 0b1);
    assert!(r.mu(phi) & !psi == 0);
    for alpha in ["false", "true", "q", "!q"] {
        let a = m(alpha);
        let works = r.mu(phi) & !a == 0 && r.mu(a) & !psi == 0;
        assert!(!works, "{alpha}");
    }
    let p = mul_mu_partition(&ps).unwrap();
    assert_eq!(find_interpolant(&ps, &p, phi, psi, InterpolantForm::NmNm).unwrap(), None);
    assert!(matches!(nm_interpolant(&ps, &p, phi, psi), Err(InterpError::MuStar1(_))));
}

fn set_variant_three() -> ProductStructure {
    let blocks: Vec<Block> = ["p", "q", "r"].iter().map(|v| Block::two_valued(&[v]).unwrap()).collect();
    let rels = blocks.iter().map(|b| dominance(b).unwrap()).collect();
    ProductStructure::set_variant(blocks, rels).unwrap()
}

#[test]
fn nm_interpolant_on_set_variant() {
    let ps = set_variant_three();
    let p = mul_mu_partition(&ps).unwrap();
    let l = ps.language(ps.all_blocks());
    let lits = literal_conjunctions(&l);
    let r = ps.composed();
    let mut checked = 0;
    for f in &lits {
        let phi = mask_of(f, &l).unwrap();
        if !f.atoms().iter().all(|a| *a != "p") {
            continue;
        }
        for g in &lits {
            if !g.atoms().iter().all(|a| *a != "r") {
                continue;
            }
            let psi = mask_of(g, &l).unwrap();
            if r.mu(phi) & !psi != 0 {
                continue;
            }
            let t = nm_interpolant(&ps, &p, phi, psi).unwrap();
            assert!(t.verified(), "{f} / {g}");
            assert!(t.formula.is_some());
            checked += 1;
        }
    }
    assert!(checked > 10);
}

#[test]
fn self_interpolation_on_the_middle_block() {
    let ps = set_variant_three();
    let p = mul_mu_partition(&ps).unwrap();
    let l = ps.language(ps.all_blocks());
    let q = mask_of(&parse_formula("q", &l).unwrap(), &l).unwrap();
    let t = nm_interpolant(&ps, &p, q, q).unwrap();
    assert!(t.verified());
    assert_eq!(t.theta & ps.composed().mu(q), ps.composed().mu(q));
    assert_eq!(t.formula.as_deref(), Some("q"));
}

#[test]
fn nm_interpolant_refusals() {
    let ps = set_variant_three();
    let p = mul_mu_partition(&ps).unwrap();
    let l = ps.language(ps.all_blocks());
    let m = |s: &str| mask_of(&parse_formula(s, &l).unwrap(), &l).unwrap();
    assert!(matches!(nm_interpolant(&ps, &p, m("q"), m("!q")), Err(InterpError::NotEntailed)));
    assert!(matches!(nm_interpolant(&ps, &p, m("p"), m("p")), Err(InterpError::Invalid(_))));
    assert!(Partition::new(&ps, 0b001, 0, 0b110).is_err());
}

#[test]
fn empty_outer_blocks() {
    let ps = set_variant_three();
    let p = Partition::new(&ps, 0, 0b011, 0b100).unwrap();
    assert!(check_interpolation(&ps, &p, InterpolantForm::NmNm).unwrap().holds());
    let p = Partition::new(&ps, 0b001, 0b110, 0).unwrap();
    assert!(check_interpolation(&ps, &p, InterpolantForm::NmNm).unwrap().holds());
}

#[test]
fn classical_nm_form_on_gh_plus() {
    let ps = set_variant_three();
    assert!(nmlogic::pref::check_gh_plus(&ps).unwrap().holds());
    let p = mul_mu_partition(&ps).unwrap();
    assert!(check_interpolation(&ps, &p, InterpolantForm::ClassicalNm).unwrap().holds());
}
