use std::path::Path;

use nmlogic::consequence::{
    check_logical_rule, check_two_language_law_split, mask_of, theory_of, LogicalRuleId, NmLogic, Pool, TwoLangLaw,
};
use nmlogic::interp::{
    find_interpolant, is_interpolant_monotonic, monotonic_band, nm_interpolant, InterpError, InterpolantForm,
    MonotonicProblem, Partition,
};
use nmlogic::lang::{models_of, parse_formula, Language, Model, ModelSet, ValueFunction, ValueSet};
use nmlogic::mulsize::oracle::{run_oracle, OracleKind, OracleOptions};
use nmlogic::mulsize::{check_mu_star_1, ProductLaw, ProductSizes};
use nmlogic::pref::{check_gh_plus_split, check_gh_split, GhWitness, ProductStructure};
use nmlogic::revision::{check_ghd, revise as revise_kb, verify_bar_factorization, Distance, SplitDistance};
use nmlogic::size::{RuleId, SizeSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::load::{self, Structure};
use crate::report::{verdict_word, Body, CliError, Report};
use crate::{Global, OracleName};

const GH_SCHEMA: &str = "GH1: σ ⪯ τ, σ′ ⪯ τ′, one strict ⇒ σσ′ ≺ ττ′; GH2: σσ′ ≺ ττ′ ⇒ σ ≺ τ or σ′ ≺ τ′";
const GH_PLUS_SCHEMA: &str = "σσ′ ≺ ττ′ ⇔ σ ⪯ τ, σ′ ⪯ τ′, one strict";
const MU1_SCHEMA: &str = "μ(X × Y) = μ(X) × μ(Y)";

/// Verdict of a single rule, ready for either output mode.
struct Outcome {
    rule: String,
    schema: String,
    holds: bool,
    witness: Value,
    detail: String,
}

fn gh_text(w: &GhWitness) -> String {
    let [a, b, c, d] = &w.labels;
    format!("{}: ({a}, {b}) and ({c}, {d})", w.condition)
}

fn logical(l: &NmLogic, rule: LogicalRuleId) -> Result<Outcome, CliError> {
    let pool = Pool::for_logic(l)?;
    let v = check_logical_rule(l, rule, &pool)?;
    let (witness, detail) = match v.witness() {
        Some(w) => (
            w.bindings_json(),
            w.bindings.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", "),
        ),
        None => (Value::Null, String::new()),
    };
    Ok(Outcome { rule: rule.to_string(), schema: rule.schema(), holds: v.holds(), witness, detail })
}

fn size(sys: &SizeSystem, rule: RuleId) -> Result<Outcome, CliError> {
    let v = sys.check_rule(rule)?;
    let (witness, detail) = match v.witness() {
        Some(w) => {
            let map: serde_json::Map<String, Value> =
                w.sets.iter().map(|(k, s)| (k.clone(), Value::String(sys.render(*s)))).collect();
            (Value::Object(map), w.rendered.clone())
        }
        None => (Value::Null, String::new()),
    };
    Ok(Outcome { rule: rule.to_string(), schema: rule.schema(), holds: v.holds(), witness, detail })
}

fn first_split(ps: &ProductStructure, split: Option<&str>) -> Result<(u64, u64), CliError> {
    match split {
        Some(text) => {
            let m = load::parse_blocks(ps, text, 2)?;
            Ok((m[0], m[1]))
        }
        None => ps
            .available_splits()
            .first()
            .copied()
            .ok_or_else(|| CliError::usage("structure has no two-factor split")),
    }
}

fn product_rule(ps: &ProductStructure, rule: &str, split: Option<&str>) -> Result<Option<Outcome>, CliError> {
    let norm = rule.trim().replace('μ', "mu");
    let out = match norm.as_str() {
        "GH" => {
            let (l, r) = first_split(ps, split)?;
            let rep = check_gh_split(ps, l, r)?;
            let w = rep.gh1.witness().or(rep.gh2.witness());
            Outcome {
                rule: "GH".into(),
                schema: GH_SCHEMA.into(),
                holds: rep.holds(),
                witness: w.map_or(Value::Null, |w| serde_json::to_value(w).expect("serialisable")),
                detail: w.map(gh_text).unwrap_or_default(),
            }
        }
        "GH+" => {
            let (l, r) = first_split(ps, split)?;
            let v = check_gh_plus_split(ps, l, r)?;
            Outcome {
                rule: "GH+".into(),
                schema: GH_PLUS_SCHEMA.into(),
                holds: v.holds(),
                witness: v.witness().map_or(Value::Null, |w| serde_json::to_value(w).expect("serialisable")),
                detail: v.witness().map(gh_text).unwrap_or_default(),
            }
        }
        "mu*1" => {
            let rep = check_mu_star_1(ps)?;
            let w = rep.subset.witness().or(rep.superset.witness());
            Outcome {
                rule: "mu*1".into(),
                schema: MU1_SCHEMA.into(),
                holds: rep.holds(),
                witness: serde_json::to_value(&rep).expect("serialisable"),
                detail: w.map(|w| w.rendered.clone()).unwrap_or_default(),
            }
        }
        _ => {
            if let Ok(law) = norm.parse::<TwoLangLaw>() {
                let (l, r) = first_split(ps, split)?;
                let v = check_two_language_law_split(ps, l, r, law)?;
                let (witness, detail) = match v.witness() {
                    Some(w) => (
                        w.bindings_json(),
                        w.bindings.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", "),
                    ),
                    None => (Value::Null, String::new()),
                };
                Outcome { rule: law.to_string(), schema: law.schema().into(), holds: v.holds(), witness, detail }
            } else if let Ok(law) = norm.parse::<ProductLaw>() {
                let (l, r) = first_split(ps, split)?;
                let sizes = ProductSizes::from_structure(ps, l, r)?;
                let v = sizes.check_law(law)?;
                Outcome {
                    rule: law.to_string(),
                    schema: law.schema().into(),
                    holds: v.holds(),
                    witness: v.witness().map_or(Value::Null, |w| serde_json::to_value(w).expect("serialisable")),
                    detail: v.witness().map(|w| w.rendered.clone()).unwrap_or_default(),
                }
            } else {
                return Ok(None);
            }
        }
    };
    Ok(Some(out))
}

pub fn check(rule: &str, path: &Path, split: Option<&str>) -> Result<Report, CliError> {
    let s = load::structure(path)?;
    let out = match &s {
        Structure::Size(sys) => {
            let id: RuleId = rule.parse().map_err(|_| CliError::usage(format!("unknown size rule '{rule}'")))?;
            size(sys, id)?
        }
        _ => {
            let product = match &s {
                Structure::Product(ps) => product_rule(ps, rule, split)?,
                _ => None,
            };
            match product {
                Some(o) => o,
                None => {
                    if let Ok(id) = rule.parse::<LogicalRuleId>() {
                        logical(&s.logic()?, id)?
                    } else if let Ok(id) = rule.parse::<RuleId>() {
                        let sys = SizeSystem::from_relation_all(s.logic()?.relation())?;
                        size(&sys, id)?
                    } else {
                        return Err(CliError::usage(format!("unknown rule '{rule}'")));
                    }
                }
            }
        }
    };
    let json = json!({
        "rule": out.rule,
        "schema": out.schema,
        "structure": s.kind(),
        "holds": out.holds,
        "witness": out.witness,
    });
    let mut text = format!("rule: {}\nschema: {}\nverdict: {}\n", out.rule, out.schema, verdict_word(out.holds));
    if !out.holds {
        text.push_str(&format!("witness: {}\n", out.detail));
    }
    Ok(Report::doc(json, text, out.holds))
}

// ---------------------------------------------------------------------------

pub fn oracle(kind: OracleName, g: &Global, samples: usize) -> Result<Report, CliError> {
    let bound = g.bound.unwrap_or(2);
    let kind = match kind {
        OracleName::GhRep => OracleKind::GhRep,
        OracleName::BigSmall => OracleKind::BigSmall,
        OracleName::Ghd => return ghd_oracle(bound, g.seed, samples),
    };
    let rep = run_oracle(kind, OracleOptions::new(bound))?;
    let mut summary = rep.summary();
    summary["seed"] = json!(g.seed);
    let text_tail = format!(
        "{} divergences / {} structures ({} component pairs by complete search, {} skipped)",
        rep.divergences, rep.checked, rep.searched, rep.skipped
    );
    Ok(Report {
        body: Body::Stream { lines: rep.json_lines(), json_tail: summary, text_tail },
        ok: rep.divergences == 0,
    })
}

/// Largest factor language for the GHD sweep; factorization enumerates
/// all rectangles, which is 2^16 at two variables per side.
const GHD_MAX_BOUND: usize = 2;

fn random_table(rng: &mut ChaCha8Rng, lang: Language) -> Result<Distance, CliError> {
    let n = 1usize << lang.len();
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                pairs.push((x, y, rng.gen_range(1..=3), 1));
            }
        }
    }
    Ok(Distance::from_table(lang, &pairs)?)
}

fn ghd_oracle(bound: usize, seed: u64, samples: usize) -> Result<Report, CliError> {
    if bound == 0 || bound > GHD_MAX_BOUND {
        return Err(CliError::usage(format!("bound {bound} is outside 1..={GHD_MAX_BOUND} for ghd")));
    }
    let vars = |p: &str, n: usize| Language::new((0..n).map(|i| format!("{p}{i}")));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks: Vec<(Value, SplitDistance)> = Vec::new();
    for b in 1..=bound {
        for a in 1..=b {
            let (l1, l2) = (vars("p", a)?, vars("q", b)?);
            let (h1, h2) = (Distance::hamming(l1.clone())?, Distance::hamming(l2.clone())?);
            tasks.push((json!({"split": [a, b], "distance": "sum-hamming"}), SplitDistance::sum(h1.clone(), h2.clone())?));
            tasks.push((json!({"split": [a, b], "distance": "max-hamming"}), SplitDistance::max(h1, h2)?));
            for i in 0..samples {
                let d1 = random_table(&mut rng, l1.clone())?;
                let d2 = random_table(&mut rng, l2.clone())?;
                tasks.push((
                    json!({"split": [a, b], "distance": "sum-random-tied", "sample": i}),
                    SplitDistance::sum(d1, d2)?,
                ));
            }
        }
    }
    let records: Vec<Value> = tasks
        .par_iter()
        .map(|(structure, s)| {
            let ghd = check_ghd(s);
            let fact = verify_bar_factorization(s);
            json!({
                "structure": structure,
                "ghd1": ghd.ghd1.holds(),
                "ghd2": ghd.ghd2.holds(),
                "factorization": fact.holds(),
                "diverges": ghd.holds() && !fact.holds(),
            })
        })
        .collect();
    let divergences = records.iter().filter(|r| r["diverges"] == json!(true)).count();
    let not_ghd = records
        .iter()
        .filter(|r| r["ghd1"] == json!(false) || r["ghd2"] == json!(false))
        .count();
    let mut lines = String::new();
    for r in &records {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    let summary = json!({
        "oracle": "ghd",
        "bound": bound,
        "seed": seed,
        "checked": records.len(),
        "not_ghd": not_ghd,
        "divergences": divergences,
    });
    let text_tail = format!(
        "{divergences} divergences / {} distances ({not_ghd} not GHD)",
        records.len()
    );
    Ok(Report { body: Body::Stream { lines, json_tail: summary, text_tail }, ok: divergences == 0 })
}

// ---------------------------------------------------------------------------

fn generator(l: &NmLogic, mask: u64) -> Option<String> {
    let lang = l.language()?;
    let models = ModelSet::from_codes(lang.clone(), nmlogic::bits::ones(mask).map(|c| c as u64));
    theory_of(&models).ok().map(|f| f.to_string())
}

pub fn mu(path: &Path, set: Option<&str>, points: Option<&str>) -> Result<Report, CliError> {
    let l = load::structure(path)?.logic()?;
    let x = match (set, points) {
        (Some(f), _) => {
            let lang = l.language().ok_or_else(|| CliError::usage("--set needs a structure with 'vars'"))?;
            mask_of(&parse_formula(f, lang)?, lang)?
        }
        (None, Some(p)) => {
            let names: Vec<String> = (0..l.relation().len()).map(|i| l.point_name(i)).collect();
            p.split(',').map(str::trim).filter(|t| !t.is_empty()).try_fold(0u64, |acc, t| {
                let i = names
                    .iter()
                    .position(|n| n == t)
                    .or_else(|| l.relation().labels().iter().position(|n| n == t))
                    .ok_or_else(|| CliError::usage(format!("unknown point '{t}'")))?;
                Ok::<u64, CliError>(acc | 1 << i)
            })?
        }
        (None, None) => l.top(),
    };
    let m = l.mu(x);
    let formula = generator(&l, m);
    let json = json!({ "set": l.render(x), "mu": l.render(m), "formula": formula });
    let mut text = format!("set: {}\nmu: {}\n", l.render(x), l.render(m));
    if let Some(f) = &formula {
        text.push_str(&format!("formula: {f}\n"));
    }
    Ok(Report::doc(json, text, true))
}

// ---------------------------------------------------------------------------

/// `"formula"` (two-valued characteristic) or `[[[v, ...], value], ...]`.
fn value_function(v: &Value, domain: &ModelSet, what: &str) -> Result<ValueFunction, CliError> {
    match v {
        Value::String(text) => {
            if domain.value_set().len() != 2 {
                return Err(CliError::usage(format!("{what}: formulas need two values")));
            }
            let lang = domain.language();
            let s = models_of(&parse_formula(text, lang)?, lang)?;
            let s = s.intersection(domain)?;
            Ok(ValueFunction::characteristic(domain.clone(), &s)?)
        }
        Value::Array(rows) => {
            let mut table = std::collections::BTreeMap::new();
            for r in rows {
                let (m, val): (Vec<u8>, u8) = serde_json::from_value(r.clone())
                    .map_err(|e| CliError::usage(format!("{what}: rows are [[values...], value]: {e}")))?;
                table.insert(Model(m), val);
            }
            Ok(ValueFunction::new(domain.clone(), domain.value_set().clone(), table)?)
        }
        _ => Err(CliError::usage(format!("{what}: expected a formula or a table"))),
    }
}

fn monotonic(v: &Value) -> Result<Report, CliError> {
    let vars = load::str_list(v.get("vars").ok_or_else(|| CliError::usage("missing 'vars'"))?, "vars")?;
    let lang = Language::new(vars)?;
    let values = match v.get("values") {
        Some(x) => ValueSet::new(load::str_list(x, "values")?)?,
        None => ValueSet::two_valued(),
    };
    let gamma = match v.get("gamma") {
        Some(x) => {
            let models: Vec<Vec<u8>> =
                serde_json::from_value(x.clone()).map_err(|e| CliError::usage(format!("gamma: {e}")))?;
            ModelSet::new(lang.clone(), values, models.into_iter().map(Model))?
        }
        None => ModelSet::full(lang.clone(), values)?,
    };
    let blocks = v.get("blocks").ok_or_else(|| CliError::usage("missing 'blocks'"))?;
    let part = |k: &str| -> Result<Language, CliError> {
        Ok(Language::new(load::str_list(blocks.get(k).unwrap_or(&json!([])), k)?)?)
    };
    let (j, j1, j2) = (part("j")?, part("j1")?, part("j2")?);
    let f = value_function(v.get("f").ok_or_else(|| CliError::usage("missing 'f'"))?, &gamma, "f")?;
    let g = value_function(v.get("g").ok_or_else(|| CliError::usage("missing 'g'"))?, &gamma, "g")?;
    let p = MonotonicProblem::new(j, j1.clone(), j2, f, g)?;
    let band = monotonic_band(&p)?;
    let mut json = json!({ "band": band.to_json() });
    let mut text = String::from("band on Γ↾J′:\n");
    for row in band.to_json().as_array().expect("array") {
        let s = |k: &str| row[k].as_str().unwrap_or_default().to_string();
        text.push_str(&format!("  {}: {} .. {}\n", s("point"), s("lower"), s("upper")));
    }
    let mut ok = true;
    if let Some(h) = v.get("h") {
        let h = value_function(h, band.domain(), "h")?;
        let verdict = is_interpolant_monotonic(&p, &h)?;
        ok = verdict.holds();
        let at = verdict.witness().map(|m| m.render(p.gamma().language(), p.gamma().value_set()));
        json["h"] = json!({ "interpolant": ok, "witness": at });
        text.push_str(&format!("h: {}\n", if ok { "interpolant" } else { "not an interpolant" }));
        if let Some(at) = at {
            text.push_str(&format!("fails at: {at}\n"));
        }
    }
    Ok(Report::doc(json, text, ok))
}

fn nonmonotonic(v: &Value, file: &Path, search: bool) -> Result<Report, CliError> {
    let ps = load::product_from_value(&load::field(v, "structure", file)?, &load::dir_of(file))?;
    let blocks = v.get("blocks").ok_or_else(|| CliError::usage("missing 'blocks'"))?;
    let part = |k: &str| -> Result<u64, CliError> {
        load::blocks_of_vars(&ps, &load::str_list(blocks.get(k).unwrap_or(&json!([])), k)?)
    };
    let p = Partition::new(&ps, part("j")?, part("j1")?, part("j2")?)?;
    let full = ps.language(ps.all_blocks());
    let formula = |k: &str| -> Result<u64, CliError> {
        let text = v.get(k).and_then(Value::as_str).ok_or_else(|| CliError::usage(format!("missing '{k}'")))?;
        Ok(mask_of(&parse_formula(text, &full)?, &full)?)
    };
    let (phi, psi) = (formula("phi")?, formula("psi")?);
    let l = NmLogic::from_product(&ps)?;
    let mut json = json!({});
    let mut text = String::new();
    let mut ok = match nm_interpolant(&ps, &p, phi, psi) {
        Ok(t) => {
            text.push_str(&format!("theta: {}\n", t.rendered));
            if let Some(f) = &t.formula {
                text.push_str(&format!("formula: {f}\n"));
            }
            text.push_str(&format!(
                "phi |~ theta: {}\ntheta |~ psi: {}\n",
                t.phi_entails_theta, t.theta_entails_psi
            ));
            json["interpolant"] = serde_json::to_value(&t)?;
            t.verified()
        }
        Err(InterpError::MuStar1(w)) => {
            text.push_str(&format!("refused: (μ*1) fails: {w}\n"));
            json["refused"] = json!(format!("(μ*1) fails: {w}"));
            false
        }
        Err(e) => return Err(e.into()),
    };
    if search {
        let found = find_interpolant(&ps, &p, phi, psi, InterpolantForm::NmNm)?;
        let shown = found.map(|m| l.render(m));
        text.push_str(&format!("search: {}\n", shown.as_deref().unwrap_or("no interpolant over J′")));
        json["search"] = json!(shown);
        ok = found.is_some();
    }
    Ok(Report::doc(json, text, ok))
}

pub fn interpolate(path: &Path, search: bool) -> Result<Report, CliError> {
    let v = load::read_json(path)?;
    if v.get("f").is_some() {
        monotonic(&v)
    } else {
        nonmonotonic(&v, path, search)
    }
}

// ---------------------------------------------------------------------------

pub fn revise(kb: &Path, phi: &str, distance: &Path) -> Result<Report, CliError> {
    let kb = ModelSet::from_json(&load::read_json(kb)?)?;
    let mut dv = load::read_json(distance)?;
    if dv.get("vars").is_none() {
        dv["vars"] = json!(kb.language().vars());
    }
    let d = Distance::from_json(&dv)?;
    let kb = kb.reorder(d.language())?;
    let f = parse_formula(phi, d.language())?;
    let r = revise_kb(&kb, &f, &d)?;
    let json = json!({
        "models": r.models.to_json(),
        "generator": r.generator.to_string(),
    });
    let text = format!("models: {}\ngenerator: {}\n", r.models.render(), r.generator);
    Ok(Report::doc(json, text, true))
}

// ---------------------------------------------------------------------------

/// Identifiers in order of first appearance, keywords excluded.
fn atoms_in(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut cur = String::new();
    for ch in text.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            cur.push(ch);
            continue;
        }
        let starts_ok = cur.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        if starts_ok && cur != "true" && cur != "false" && !out.contains(&cur) {
            out.push(cur.clone());
        }
        cur.clear();
    }
    out
}

pub fn parse(formula: &str, vars: Option<&str>) -> Result<Report, CliError> {
    let vars: Vec<String> = match vars {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => atoms_in(formula),
    };
    let lang = Language::new(vars)?;
    let f = parse_formula(formula, &lang)?;
    let models = models_of(&f, &lang)?;
    let json = json!({
        "formula": f.to_string(),
        "vars": lang.vars(),
        "models": models.to_json(),
    });
    let text = format!("formula: {f}\nvars: {lang}\nmodels: {}\n", models.render());
    Ok(Report::doc(json, text, true))
}
