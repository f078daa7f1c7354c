//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! wall time against the time limit.

use std::io::Write;
use std::time::{Duration, Instant};

use nmlogic::consequence::{
    check_logical_rule, literal_conjunctions, mask_of, replay, LogicalRuleId, NmLogic, Pool,
};
use nmlogic::interp::{
    check_interpolation, fixture_mul_mu, is_interpolant_monotonic, monotonic_band, mul_mu_partition,
    nm_interpolant, InterpolantForm, MonotonicProblem, Partition,
};
use nmlogic::lang::{parse_formula, Formula, Language, Model, ModelSet, ValueFunction, ValueSet};
use nmlogic::mulsize::check_mu_star_1;
use nmlogic::mulsize::oracle::{oracle_big_small_equivalence, oracle_gh_rep, partial_orders, OracleOptions};
use nmlogic::pref::{check_gh, Block, PreferenceRelation, ProductStructure};
use nmlogic::revision::{
    check_ghd, check_revision_interpolation, check_revision_split, verify_bar_factorization, Distance, RevError,
    SplitDistance,
};
use nmlogic::size::{RuleId, SizeSystem};

type Outcome = Result<String, String>;

fn run(id: u8, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let res = body();
    let took = start.elapsed();
    let (ok, detail) = match &res {
        Ok(d) if took <= limit => (true, d.clone()),
        Ok(d) => (false, format!("{d}; over the time limit")),
        Err(e) => (false, e.clone()),
    };
    let line = format!(
        "criterion {id} {}: {name}: {detail} [{:.2}s, limit {}s]\n",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit.as_secs()
    );
    // Written past the test harness capture so the line always shows.
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(ok, "{}", line.trim_end());
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
}

fn lang(vars: &[String]) -> Language {
    Language::new(vars.iter().cloned()).unwrap()
}

/// Every ranked relation on `n` points, one per rank function.
fn ranked_relations(n: usize) -> Vec<PreferenceRelation> {
    let total = n.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let ranks: Vec<usize> = (0..n)
                .map(|_| {
                    let r = code % n;
                    code /= n;
                    r
                })
                .collect();
            PreferenceRelation::from_fn(names(n), |a, b| ranks[a] < ranks[b]).unwrap()
        })
        .collect()
}

#[test]
fn criterion_1_single_edge_entailment_and_non_interpolants() {
    run(1, "single-edge entailment, μ(φ) and the four candidates", Duration::from_secs(1), || {
        let ps = fixture_mul_mu(1).map_err(|e| e.to_string())?;
        let l = NmLogic::from_product(&ps).map_err(|e| e.to_string())?;
        let lg = l.language().unwrap().clone();
        let m = |s: &str| mask_of(&parse_formula(s, &lg).unwrap(), &lg).unwrap();
        let (phi, psi) = (m("!q & !r"), m("!p & !q"));
        ensure(l.entails_masks(phi, psi), || "φ does not entail ψ".into())?;
        let mu = l.mu(phi);
        ensure(mu == m("!p & !q & !r"), || format!("μ(φ) = {}", l.render(mu)))?;
        for alpha in ["false", "true", "q", "!q"] {
            let a = m(alpha);
            ensure(!(l.entails_masks(phi, a) && l.entails_masks(a, psi)), || {
                format!("{alpha} interpolates")
            })?;
        }
        Ok(format!("φ |~ ψ, μ(φ) = {}, none of 4 candidates interpolates", l.render(mu)))
    });
}

#[test]
fn criterion_2_fixture_variants() {
    run(2, "fixture variants 1-3: (μ*1) inclusions and interpolation", Duration::from_secs(1), || {
        let expect = [(1, true, false, false), (2, false, true, false), (3, true, false, true)];
        for (v, sub, sup, interp) in expect {
            let ps = fixture_mul_mu(v).map_err(|e| e.to_string())?;
            let r = check_mu_star_1(&ps).map_err(|e| e.to_string())?;
            let p = mul_mu_partition(&ps).map_err(|e| e.to_string())?;
            let found = check_interpolation(&ps, &p, InterpolantForm::NmNm).map_err(|e| e.to_string())?;
            let got = (r.subset.holds(), r.superset.holds(), found.holds());
            ensure(got == (sub, sup, interp), || format!("variant {v}: got {got:?}"))?;
        }
        Ok("3/3 variants match".into())
    });
}

#[test]
fn criterion_3_gh_representation_oracle() {
    run(3, "GH vs (μ*1) oracle at bounds 2 and 3", Duration::from_secs(300), || {
        let mut parts = Vec::new();
        for bound in [2, 3] {
            let rep = oracle_gh_rep(OracleOptions::new(bound)).map_err(|e| e.to_string())?;
            ensure(rep.divergences == 0, || format!("bound {bound}: {} divergences", rep.divergences))?;
            parts.push(format!(
                "bound {bound}: 0 divergences / {} structures + {} searched pairs",
                rep.checked, rep.searched
            ));
        }
        Ok(parts.join("; "))
    });
}

#[test]
fn criterion_4_big_small_oracle() {
    run(4, "(μ*1) vs (s*s) oracle at bound 3", Duration::from_secs(300), || {
        let rep = oracle_big_small_equivalence(OracleOptions::new(3)).map_err(|e| e.to_string())?;
        ensure(rep.divergences == 0, || format!("{} divergences", rep.divergences))?;
        Ok(format!(
            "0 divergences / {} structures + {} searched pairs",
            rep.checked, rep.searched
        ))
    });
}

#[test]
fn criterion_5_nonmonotonic_interpolation() {
    run(5, "μ-projection interpolant on set-variant GH structures", Duration::from_secs(60), || {
        let blocks: Vec<Block> = ["p", "q", "r"].iter().map(|v| Block::two_valued(&[v]).unwrap()).collect();
        let edges = [vec![], vec![(0, 1)], vec![(1, 0)]];
        let (mut structures, mut cases) = (0, 0);
        for code in 0..27usize {
            let rels: Vec<PreferenceRelation> = (0..3)
                .map(|b| {
                    let e = edges[code / 3usize.pow(b as u32) % 3].clone();
                    PreferenceRelation::from_edges(blocks[b].labels().to_vec(), e).unwrap()
                })
                .collect();
            let ps = ProductStructure::set_variant(blocks.clone(), rels).map_err(|e| e.to_string())?;
            if !check_gh(&ps).map_err(|e| e.to_string())?.holds() {
                continue;
            }
            structures += 1;
            let full = ps.language(ps.all_blocks());
            let rel = ps.composed();
            let lits = literal_conjunctions(&full);
            // Blocks go to J, J′ or J″; J′ must be nonempty.
            for assign in 0..27usize {
                let mut masks = [0u64; 3];
                for b in 0..3 {
                    masks[assign / 3usize.pow(b) % 3] |= 1 << b;
                }
                let Ok(p) = Partition::new(&ps, masks[0], masks[1], masks[2]) else {
                    continue;
                };
                let left = ps.language(p.j1 | p.j2);
                let right = ps.language(p.j | p.j1);
                let over = |f: &Formula, l: &Language| f.atoms().iter().all(|a| l.contains(a));
                for f in lits.iter().filter(|f| over(f, &left)) {
                    let phi = mask_of(f, &full).unwrap();
                    for g in lits.iter().filter(|g| over(g, &right)) {
                        let psi = mask_of(g, &full).unwrap();
                        if rel.mu(phi) & !psi != 0 {
                            continue;
                        }
                        let t = nm_interpolant(&ps, &p, phi, psi).map_err(|e| format!("{f} / {g}: {e}"))?;
                        let ok = rel.mu(phi) & !t.theta == 0 && rel.mu(t.theta) & !psi == 0;
                        ensure(ok && t.verified(), || format!("{f} / {g}: Θ = {} fails", t.rendered))?;
                        cases += 1;
                    }
                }
            }
        }
        Ok(format!("{cases}/{cases} entailments interpolated over {structures} GH structures"))
    });
}

/// Index of a tuple of values read as base-`k` digits, first most significant.
fn digits(vals: &[u8], k: usize) -> usize {
    vals.iter().fold(0, |acc, &v| acc * k + v as usize)
}

struct Shape {
    k: usize,
    a: usize,
    b: usize,
    c: usize,
}

struct Instance {
    problem: MonotonicProblem,
    /// Per J′ slice: max of f and min of g over that slice.
    lo: Vec<u8>,
    hi: Vec<u8>,
}

fn values(k: usize) -> ValueSet {
    if k == 2 {
        ValueSet::two_valued()
    } else {
        ValueSet::three_valued()
    }
}

/// `f(y, x, z) = fz[x][z]`, `g(y, x, z) = gy[x][y]`.
fn instance(s: &Shape, fz: &[Vec<u8>], gy: &[Vec<u8>]) -> Instance {
    let vars = |p: &str, n: usize| -> Vec<String> { (0..n).map(|i| format!("{p}{i}")).collect() };
    let (y, x, z) = (vars("y", s.a), vars("x", s.b), vars("z", s.c));
    let all: Vec<String> = y.iter().chain(&x).chain(&z).cloned().collect();
    let gamma = ModelSet::full(lang(&all), values(s.k)).unwrap();
    let split = |m: &Model| {
        let v = m.values();
        (
            digits(&v[..s.a], s.k),
            digits(&v[s.a..s.a + s.b], s.k),
            digits(&v[s.a + s.b..], s.k),
        )
    };
    let f = ValueFunction::from_fn(gamma.clone(), values(s.k), |m| {
        let (_, xi, zi) = split(m);
        fz[xi][zi]
    })
    .unwrap();
    let g = ValueFunction::from_fn(gamma, values(s.k), |m| {
        let (yi, xi, _) = split(m);
        gy[xi][yi]
    })
    .unwrap();
    let problem = MonotonicProblem::new(lang(&y), lang(&x), lang(&z), f, g).unwrap();
    let lo = fz.iter().map(|r| *r.iter().max().unwrap()).collect();
    let hi = gy.iter().map(|r| *r.iter().min().unwrap()).collect();
    Instance { problem, lo, hi }
}

/// Checks the band against the slice extremes and every listed `h`
/// against the band. Returns the number of `h` tried.
fn check_instance(s: &Shape, inst: &Instance, all_h: bool) -> Result<usize, String> {
    let band = monotonic_band(&inst.problem).map_err(|e| e.to_string())?;
    let dom = band.domain().clone();
    let slice = |m: &Model| digits(m.values(), s.k);
    for (m, v) in band.lower.iter() {
        ensure(v == inst.lo[slice(m)], || "f⁺ differs from the slice maximum".into())?;
        ensure(v <= band.upper.value(m).unwrap(), || "f⁺ > g⁻".into())?;
    }
    for (m, v) in band.upper.iter() {
        ensure(v == inst.hi[slice(m)], || "g⁻ differs from the slice minimum".into())?;
    }
    let slices = inst.lo.len();
    let mut tables: Vec<Vec<u8>> = Vec::new();
    if all_h {
        for code in 0..s.k.pow(slices as u32) {
            tables.push((0..slices).map(|i| (code / s.k.pow(i as u32) % s.k) as u8).collect());
        }
    } else {
        tables.push(inst.lo.clone());
        tables.push(inst.hi.clone());
        for i in 0..slices {
            for v in 0..s.k as u8 {
                let mut t = inst.lo.clone();
                t[i] = v;
                tables.push(t);
            }
        }
    }
    for t in &tables {
        let h = ValueFunction::from_fn(dom.clone(), values(s.k), |m| t[slice(m)]).unwrap();
        let inside = (0..slices).all(|i| inst.lo[i] <= t[i] && t[i] <= inst.hi[i]);
        let accepted = is_interpolant_monotonic(&inst.problem, &h).map_err(|e| e.to_string())?.holds();
        ensure(accepted == inside, || format!("h = {t:?}: accepted {accepted}, in band {inside}"))?;
        ensure(band.contains(&h).unwrap().holds() == inside, || "band membership disagrees".into())?;
    }
    Ok(tables.len())
}

/// Slice functions over `n` points whose max (`top = false`: min) is `e`,
/// once with `e` placed at each point and once constant.
fn slice_family(n: usize, k: usize, top: bool) -> Vec<(u8, Vec<u8>)> {
    let mut out = Vec::new();
    for e in 0..k as u8 {
        out.push((e, vec![e; n]));
        for at in 0..n {
            let f: Vec<u8> = (0..n)
                .map(|i| {
                    if i == at {
                        e
                    } else if top {
                        (i as u8) % (e + 1)
                    } else {
                        e + (i as u8) % (k as u8 - e)
                    }
                })
                .collect();
            out.push((e, f));
        }
    }
    out
}

#[test]
fn criterion_6_monotonic_band() {
    run(6, "monotonic band is exactly the interpolant set", Duration::from_secs(120), || {
        let (mut problems, mut hs) = (0usize, 0usize);
        // Fully exhaustive on the smallest shape: every f, g, h.
        let s = Shape { k: 2, a: 1, b: 1, c: 1 };
        for fc in 0..16usize {
            for gc in 0..16usize {
                let fz: Vec<Vec<u8>> = (0..2).map(|x| (0..2).map(|z| (fc >> (2 * x + z) & 1) as u8).collect()).collect();
                let gy: Vec<Vec<u8>> = (0..2).map(|x| (0..2).map(|y| (gc >> (2 * x + y) & 1) as u8).collect()).collect();
                let below = (0..2).all(|x| fz[x].iter().max() <= gy[x].iter().min());
                if !below {
                    continue;
                }
                let inst = instance(&s, &fz, &gy);
                hs += check_instance(&s, &inst, true)?;
                problems += 1;
            }
        }
        // Every shape: each slice pattern appears on each J′ slice.
        for k in [2usize, 3] {
            for a in 0..=2 {
                for b in 1..=2 {
                    for c in 0..=2 {
                        let s = Shape { k, a, b, c };
                        let slices = k.pow(b as u32);
                        let ff = slice_family(k.pow(c as u32), k, true);
                        let gf = slice_family(k.pow(a as u32), k, false);
                        let pairs: Vec<(usize, usize)> = (0..ff.len())
                            .flat_map(|i| (0..gf.len()).map(move |j| (i, j)))
                            .filter(|&(i, j)| ff[i].0 <= gf[j].0)
                            .collect();
                        let all_h = k.pow(slices as u32) <= 81;
                        for r in 0..pairs.len() {
                            let pick = |x: usize| pairs[(r + x) % pairs.len()];
                            let fz: Vec<Vec<u8>> = (0..slices).map(|x| ff[pick(x).0].1.clone()).collect();
                            let gy: Vec<Vec<u8>> = (0..slices).map(|x| gf[pick(x).1].1.clone()).collect();
                            let inst = instance(&s, &fz, &gy);
                            hs += check_instance(&s, &inst, all_h)?;
                            problems += 1;
                        }
                    }
                }
            }
        }
        Ok(format!("{problems} problems, {hs} candidate h, band exact in all"))
    });
}

#[test]
fn criterion_7_revision() {
    run(7, "sum-Hamming GHD, bar factorization, split and interpolation", Duration::from_secs(120), || {
        let mut counts = [0usize; 4];
        for (a, b) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let l1 = lang(&(0..a).map(|i| format!("p{i}")).collect::<Vec<_>>());
            let l2 = lang(&(0..b).map(|i| format!("q{i}")).collect::<Vec<_>>());
            let d1 = Distance::hamming(l1.clone()).map_err(|e| e.to_string())?;
            let d2 = Distance::hamming(l2.clone()).map_err(|e| e.to_string())?;
            let s = SplitDistance::sum(d1, d2).map_err(|e| e.to_string())?;
            ensure(check_ghd(&s).holds(), || format!("{a}+{b}: GHD fails"))?;
            counts[0] += 1;
            ensure(verify_bar_factorization(&s).holds(), || format!("{a}+{b}: bar factorization fails"))?;
            counts[1] += 1;
            let (lits1, lits2) = (literal_conjunctions(&l1), literal_conjunctions(&l2));
            for phi in &lits1 {
                for psi in &lits1 {
                    for phi2 in &lits2 {
                        for psi2 in &lits2 {
                            let v = check_revision_split(&s, phi, phi2, psi, psi2).map_err(|e| e.to_string())?;
                            ensure(v.holds(), || format!("split fails: {phi} {phi2} {psi} {psi2}"))?;
                            counts[2] += 1;
                        }
                    }
                }
            }
            // J is the right block; J′ any nonempty part of it.
            let jvars = l2.vars().to_vec();
            for sub in 1..1usize << b {
                let jp = lang(&(0..b).filter(|i| sub >> i & 1 == 1).map(|i| jvars[i].clone()).collect::<Vec<_>>());
                let litsp = literal_conjunctions(&jp);
                for phi in &lits1 {
                    for psi in &lits1 {
                        for phi2 in &litsp {
                            for psi2 in &litsp {
                                for rho in &lits2 {
                                    match check_revision_interpolation(&s, &jp, phi, phi2, psi, psi2, rho) {
                                        Err(RevError::Empty(_)) if *phi == Formula::False || *psi == Formula::False => {}
                                        Err(e) => return Err(e.to_string()),
                                        Ok(rep) => {
                                            ensure(rep.verdict.holds(), || {
                                                format!("interpolation fails: {phi} {phi2} {psi} {psi2} {rho}")
                                            })?;
                                            counts[3] += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(format!(
            "0 violations: {} GHD, {} factorizations, {} splits, {} interpolation instances",
            counts[0], counts[1], counts[2], counts[3]
        ))
    });
}

/// First relation in the list failing `bad`, with its witness text.
fn search<T>(
    rels: impl IntoIterator<Item = PreferenceRelation>,
    mut bad: impl FnMut(&PreferenceRelation) -> Result<Option<T>, String>,
) -> Result<Option<(PreferenceRelation, T)>, String> {
    for r in rels {
        if let Some(w) = bad(&r)? {
            return Ok(Some((r, w)));
        }
    }
    Ok(None)
}

fn smooth_non_ranked(max: usize) -> impl Iterator<Item = PreferenceRelation> {
    (1..=max)
        .flat_map(|n| partial_orders(n, true))
        .filter(|r| r.is_smooth_all() && !r.is_ranked())
}

#[test]
fn criterion_8_rule_table() {
    run(8, "rule table on ranked and non-ranked structures", Duration::from_secs(300), || {
        use LogicalRuleId::*;
        let rels = ranked_relations(3);
        for r in &rels {
            ensure(r.is_ranked() && r.is_smooth_all(), || "generator produced a non-ranked order".into())?;
            let l = NmLogic::on_points(r.clone());
            let pool = Pool::for_logic(&l).map_err(|e| e.to_string())?;
            for rule in [And, Or, CM, Cut, Cum, RatM] {
                let v = check_logical_rule(&l, rule, &pool).map_err(|e| e.to_string())?;
                ensure(v.holds(), || format!("{rule} fails on {:?}", r.edges()))?;
            }
            let sys = SizeSystem::from_relation_all(r).map_err(|e| e.to_string())?;
            let size_rules = (1..=4).map(RuleId::MPlusOmega).chain((1..=3).map(RuleId::MPlusPlus));
            for rule in size_rules {
                let v = sys.check_rule(rule).map_err(|e| e.to_string())?;
                ensure(v.holds(), || format!("{rule} fails on {:?}", r.edges()))?;
            }
        }
        let ratm = search(smooth_non_ranked(4), |r| {
            let l = NmLogic::on_points(r.clone());
            let pool = Pool::for_logic(&l).map_err(|e| e.to_string())?;
            let v = check_logical_rule(&l, RatM, &pool).map_err(|e| e.to_string())?;
            Ok(v.into_witness().map(|w| (replay(&l, RatM, &w, &pool), w)))
        })?
        .ok_or("no RatM violator on ≤ 4 points")?;
        ensure(ratm.1 .0, || "RatM witness does not replay".into())?;
        let mpp = search(smooth_non_ranked(4), |r| {
            let sys = SizeSystem::from_relation_all(r).map_err(|e| e.to_string())?;
            let v = sys.check_rule(RuleId::MPlusPlus(3)).map_err(|e| e.to_string())?;
            Ok(v.into_witness().map(|w| (sys.replay(RuleId::MPlusPlus(3), &w), w)))
        })?
        .ok_or("no M++(3) violator on ≤ 4 points")?;
        ensure(mpp.1 .0, || "M++(3) witness does not replay".into())?;
        Ok(format!(
            "{} ranked structures pass; RatM violator {:?} on {} points; M++(3) violator {:?} on {} points; both replay",
            rels.len(),
            ratm.0.edges(),
            ratm.0.len(),
            mpp.0.edges(),
            mpp.0.len()
        ))
    });
}

#[test]
fn criterion_9_scenario_one() {
    run(9, "multiplication cases on principal-filter systems", Duration::from_secs(120), || {
        let mut systems = 0;
        for n in 1..=4 {
            for r in ranked_relations(n) {
                let sys = SizeSystem::from_relation_all(&r).map_err(|e| e.to_string())?;
                for case in 1..=3 {
                    let v = sys.check_rule(RuleId::Scenario1(case)).map_err(|e| e.to_string())?;
                    ensure(v.holds(), || format!("case {case} fails on {:?}", r.edges()))?;
                }
                systems += 1;
            }
        }
        let found = search((1..=4).flat_map(|n| partial_orders(n, true)).filter(|r| !r.is_ranked()), |r| {
            let sys = SizeSystem::from_relation_all(r).map_err(|e| e.to_string())?;
            let v = sys.check_rule(RuleId::Scenario1(4)).map_err(|e| e.to_string())?;
            Ok(v.into_witness().map(|w| (sys.replay(RuleId::Scenario1(4), &w), w)))
        })?
        .ok_or("no case-4 counterexample on ≤ 4 points")?;
        ensure(found.1 .0, || "case-4 witness does not replay".into())?;
        Ok(format!(
            "cases 1-3 hold on {systems} ranked systems; case 4 fails on {:?} ({}), replayed",
            found.0.edges(),
            found.1 .1.rendered
        ))
    });
}
