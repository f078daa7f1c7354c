use nmlogic::consequence::{check_logical_rule, literal_conjunctions, mask_of, replay, LogicalRuleId, NmLogic, Pool};
use nmlogic::interp::{check_interpolation, fixture_mul_mu, mul_mu_partition, InterpolantForm};
use nmlogic::lang::{parse_formula, Language};
use nmlogic::mulsize::check_mu_star_1;
use nmlogic::mulsize::oracle::partial_orders;
use nmlogic::pref::PreferenceRelation;
use nmlogic::revision::{check_ghd, check_revision_split, verify_bar_factorization, Distance, SplitDistance};
use nmlogic::size::{RuleId, SizeSystem};
use serde::Serialize;
use serde_json::json;

use crate::report::{CliError, Report};
use crate::FixtureName;

#[derive(Serialize)]
struct Claim {
    claim: String,
    confirmed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    detail: String,
}

fn claim(text: impl Into<String>, confirmed: bool) -> Claim {
    Claim { claim: text.into(), confirmed, detail: String::new() }
}

fn holds_word(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

fn mul_mu(variant: u8) -> Result<Vec<Claim>, CliError> {
    // Inclusions ⊆, ⊇ and interpolation as stated for each variant.
    let expect = match variant {
        1 => (true, false, false),
        2 => (false, true, false),
        _ => (true, false, true),
    };
    let ps = fixture_mul_mu(variant)?;
    let rep = check_mu_star_1(&ps)?;
    let p = mul_mu_partition(&ps)?;
    let interp = check_interpolation(&ps, &p, InterpolantForm::NmNm)?;
    let mut out = vec![
        claim(format!("(μ*1) ⊆ {}", holds_word(expect.0)), rep.subset.holds() == expect.0),
        claim(format!("(μ*1) ⊇ {}", holds_word(expect.1)), rep.superset.holds() == expect.1),
        claim(
            format!("interpolation over J = {{p}}, J′ = {{q}}, J″ = {{r}} {}", holds_word(expect.2)),
            interp.holds() == expect.2,
        ),
    ];
    if let Some(w) = interp.witness() {
        out.last_mut().expect("claim").detail = w.rendered.clone();
    }
    if variant == 1 {
        let l = NmLogic::from_product(&ps)?;
        let lang = l.language().expect("two-valued").clone();
        let m = |s: &str| -> Result<u64, CliError> { Ok(mask_of(&parse_formula(s, &lang)?, &lang)?) };
        let (phi, psi) = (m("!q & !r")?, m("!p & !q")?);
        out.push(claim("¬q ∧ ¬r |~ ¬p ∧ ¬q", l.entails_masks(phi, psi)));
        let mut c = claim("μ(¬q ∧ ¬r) = {¬p¬q¬r}", l.mu(phi) == m("!p & !q & !r")?);
        c.detail = l.render(l.mu(phi));
        out.push(c);
        for alpha in ["false", "true", "q", "!q"] {
            let a = m(alpha)?;
            let works = l.entails_masks(phi, a) && l.entails_masks(a, psi);
            out.push(claim(format!("{alpha} is not an interpolant"), !works));
        }
    }
    Ok(out)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
}

fn ranked_relations(n: usize) -> Result<Vec<PreferenceRelation>, CliError> {
    (0..n.pow(n as u32))
        .map(|code| {
            let ranks: Vec<usize> = (0..n).map(|i| code / n.pow(i as u32) % n).collect();
            Ok(PreferenceRelation::from_fn(names(n), |a, b| ranks[a] < ranks[b])?)
        })
        .collect()
}

fn ranked_suite() -> Result<Vec<Claim>, CliError> {
    use LogicalRuleId::*;
    let rels = ranked_relations(3)?;
    let mut out = Vec::new();
    for rule in [And, Or, CM, Cut, Cum, RatM] {
        let mut bad = None;
        for r in &rels {
            let l = NmLogic::on_points(r.clone());
            let pool = Pool::for_logic(&l)?;
            if let Some(w) = check_logical_rule(&l, rule, &pool)?.into_witness() {
                bad = Some(format!("{:?}: {:?}", r.edges(), w.bindings));
                break;
            }
        }
        let mut c = claim(format!("{rule} holds on all {} ranked 3-point structures", rels.len()), bad.is_none());
        c.detail = bad.unwrap_or_default();
        out.push(c);
    }
    let size_rules = (1..=4).map(RuleId::MPlusOmega).chain((1..=3).map(RuleId::MPlusPlus));
    for rule in size_rules {
        let mut bad = None;
        for r in &rels {
            if let Some(w) = SizeSystem::from_relation_all(r)?.check_rule(rule)?.into_witness() {
                bad = Some(format!("{:?}: {}", r.edges(), w.rendered));
                break;
            }
        }
        let mut c = claim(format!("{rule} holds on all {} ranked 3-point structures", rels.len()), bad.is_none());
        c.detail = bad.unwrap_or_default();
        out.push(c);
    }
    let non_ranked: Vec<PreferenceRelation> = (1..=4)
        .flat_map(|n| partial_orders(n, true))
        .filter(|r| r.is_smooth_all() && !r.is_ranked())
        .collect();
    let mut found = None;
    for r in &non_ranked {
        let l = NmLogic::on_points(r.clone());
        let pool = Pool::for_logic(&l)?;
        if let Some(w) = check_logical_rule(&l, RatM, &pool)?.into_witness() {
            found = Some((replay(&l, RatM, &w, &pool), format!("{:?}: {:?}", r.edges(), w.bindings)));
            break;
        }
    }
    let mut c = claim(
        "RatM fails on a smooth non-ranked structure of ≤ 4 points (replayed)",
        found.as_ref().is_some_and(|f| f.0),
    );
    c.detail = found.map(|f| f.1).unwrap_or_default();
    out.push(c);
    let mut found = None;
    for r in &non_ranked {
        let sys = SizeSystem::from_relation_all(r)?;
        if let Some(w) = sys.check_rule(RuleId::MPlusPlus(3))?.into_witness() {
            found = Some((sys.replay(RuleId::MPlusPlus(3), &w), format!("{:?}: {}", r.edges(), w.rendered)));
            break;
        }
    }
    let mut c = claim(
        "M++(3) fails on a smooth non-ranked structure of ≤ 4 points (replayed)",
        found.as_ref().is_some_and(|f| f.0),
    );
    c.detail = found.map(|f| f.1).unwrap_or_default();
    out.push(c);
    Ok(out)
}

fn ghd_suite() -> Result<Vec<Claim>, CliError> {
    let vars = |p: &str, n: usize| Language::new((0..n).map(|i| format!("{p}{i}")));
    let mut out = Vec::new();
    for (a, b) in [(1, 1), (1, 2), (2, 2)] {
        let (l1, l2) = (vars("p", a)?, vars("q", b)?);
        let s = SplitDistance::sum(Distance::hamming(l1.clone())?, Distance::hamming(l2.clone())?)?;
        out.push(claim(format!("sum-Hamming {a}+{b} is GHD"), check_ghd(&s).holds()));
        out.push(claim(
            format!("sum-Hamming {a}+{b} factorizes on all rectangles"),
            verify_bar_factorization(&s).holds(),
        ));
        let (lits1, lits2) = (literal_conjunctions(&l1), literal_conjunctions(&l2));
        let mut ok = true;
        for phi in &lits1 {
            for psi in &lits1 {
                for phi2 in &lits2 {
                    for psi2 in &lits2 {
                        ok &= check_revision_split(&s, phi, phi2, psi, psi2)?.holds();
                    }
                }
            }
        }
        out.push(claim(format!("sum-Hamming {a}+{b} revision splits on all literal conjunctions"), ok));
    }
    let m = SplitDistance::max(Distance::hamming(vars("p", 2)?)?, Distance::hamming(vars("q", 1)?)?)?;
    out.push(claim("max-Hamming 2+1 is not GHD", !check_ghd(&m).holds()));
    let v = verify_bar_factorization(&m);
    let mut c = claim("max-Hamming 2+1 breaks the factorization", !v.holds());
    c.detail = v.witness().map(|w| w.rendered.clone()).unwrap_or_default();
    out.push(c);
    Ok(out)
}

pub fn run(name: FixtureName) -> Result<Report, CliError> {
    let (label, claims) = match name {
        FixtureName::Mulmu1 => ("mulmu1", mul_mu(1)?),
        FixtureName::Mulmu2 => ("mulmu2", mul_mu(2)?),
        FixtureName::Mulmu3 => ("mulmu3", mul_mu(3)?),
        FixtureName::RankedSuite => ("ranked-suite", ranked_suite()?),
        FixtureName::GhdSuite => ("ghd-suite", ghd_suite()?),
    };
    let ok = claims.iter().all(|c| c.confirmed);
    let mut text = format!("fixture {label}\n");
    for c in &claims {
        text.push_str(&format!("[{}] {}", if c.confirmed { "confirmed" } else { "NOT confirmed" }, c.claim));
        if !c.detail.is_empty() {
            text.push_str(&format!(" ({})", c.detail));
        }
        text.push('\n');
    }
    let passed = claims.iter().filter(|c| c.confirmed).count();
    text.push_str(&format!("{passed}/{} claims confirmed\n", claims.len()));
    let json = json!({ "fixture": label, "claims": claims, "passed": ok });
    Ok(Report::doc(json, text, ok))
}
