//! Preferential consequence `α |~ β :⟺ μ(M(α)) ⊆ M(β)` and checkers for the
//! logical rules, instantiated over a finite formula pool.
//!
//! Theories are finite, so every theory is equivalent to one formula and the
//! closure `T̄̄` is determined by the model set `μ(M(T))`. Rules stated on
//! theory closures are therefore checked as equalities of model sets.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{self, is_subset};
use crate::lang::{Formula, LangError, Language, Model, ModelSet};
use crate::pref::{Combinator, PrefError, PreferenceRelation, ProductStructure};
use crate::verdict::Verdict;

/// Languages with more variables have more than 64 models.
pub const MAX_VARS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Pref(#[from] PrefError),
    #[error("unknown rule '{0}'")]
    UnknownRule(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("blocks overlap")]
    Overlap,
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// A preferential structure over all two-valued models of a language. Point
/// `i` is the model with code `i` (first variable most significant).
#[derive(Clone, Debug)]
pub struct NmLogic {
    lang: Option<Language>,
    rel: PreferenceRelation,
}

impl NmLogic {
    pub fn new(lang: Language, rel: PreferenceRelation) -> Result<Self, ConsError> {
        if lang.len() > MAX_VARS {
            return Err(ConsError::Invalid(format!("at most {MAX_VARS} variables")));
        }
        if rel.len() != 1 << lang.len() {
            return Err(ConsError::Mismatch(format!(
                "relation has {} points, the language has {} models",
                rel.len(),
                1usize << lang.len()
            )));
        }
        Ok(NmLogic { lang: Some(lang), rel })
    }

    /// A structure on abstract points; rules are then checked on point sets
    /// (see `Pool::all_subsets`), every set being definable in the finite case.
    pub fn on_points(rel: PreferenceRelation) -> Self {
        NmLogic { lang: None, rel }
    }

    /// The composed relation of a product of two-valued blocks.
    pub fn from_product(ps: &ProductStructure) -> Result<Self, ConsError> {
        Self::from_sub_product(ps, ps.all_blocks())
    }

    pub fn from_sub_product(ps: &ProductStructure, mask: u64) -> Result<Self, ConsError> {
        for b in bits::ones(mask) {
            if ps.blocks()[b].value_set().len() != 2 {
                return Err(ConsError::Mismatch("formulas need two-valued blocks".into()));
            }
        }
        Self::new(ps.language(mask), ps.relation(mask)?.clone())
    }

    pub fn language(&self) -> Option<&Language> {
        self.lang.as_ref()
    }

    pub fn relation(&self) -> &PreferenceRelation {
        &self.rel
    }

    /// Mask of all models.
    pub fn top(&self) -> u64 {
        self.rel.full()
    }

    pub fn mask(&self, f: &Formula) -> Result<u64, ConsError> {
        let lang = self
            .lang
            .as_ref()
            .ok_or_else(|| ConsError::Mismatch("structure has no language".into()))?;
        mask_of(f, lang)
    }

    pub fn mu(&self, x: u64) -> u64 {
        self.rel.mu(x)
    }

    /// `μ(A) ⊆ B`.
    pub fn entails_masks(&self, a: u64, b: u64) -> bool {
        let by_mu = is_subset(self.mu(a), b);
        // Filter reading: A ∩ B is big in A, i.e. A − B misses μ(A).
        debug_assert_eq!(by_mu, (a & !b) & self.mu(a) == 0);
        by_mu
    }

    pub fn point_name(&self, i: usize) -> String {
        match &self.lang {
            Some(lang) => render_model(lang, i as u64),
            None => self.rel.label(i).to_string(),
        }
    }

    pub fn render(&self, mask: u64) -> String {
        let points: Vec<String> = bits::ones(mask).map(|i| self.point_name(i)).collect();
        format!("{{{}}}", points.join(", "))
    }
}

fn render_model(lang: &Language, code: u64) -> String {
    Model::from_code(code, lang.len()).render(lang, &crate::lang::ValueSet::two_valued())
}

/// Models of `f` as a mask over codes.
pub fn mask_of(f: &Formula, lang: &Language) -> Result<u64, ConsError> {
    if lang.len() > MAX_VARS {
        return Err(ConsError::Invalid(format!("at most {MAX_VARS} variables")));
    }
    let c = f.compile(lang)?;
    Ok((0..1u64 << lang.len())
        .filter(|&code| c.eval(code))
        .fold(0, |acc, code| acc | 1 << code))
}

pub fn nm_entails(l: &NmLogic, a: &Formula, b: &Formula) -> Result<bool, ConsError> {
    Ok(l.entails_masks(l.mask(a)?, l.mask(b)?))
}

/// Canonical generator of `Th(s)`: the full disjunctive normal form over the
/// language, `⊥` for no models and `⊤` for all of them.
pub fn theory_of(s: &ModelSet) -> Result<Formula, ConsError> {
    if s.value_set().len() != 2 {
        return Err(ConsError::Mismatch("theories need two-valued models".into()));
    }
    let lang = s.language();
    let total = 1u128 << lang.len();
    if s.is_empty() {
        return Ok(Formula::False);
    }
    if s.len() as u128 == total {
        return Ok(Formula::True);
    }
    Ok(Formula::disjunction(s.iter().map(|m| minterm(lang, m))))
}

fn minterm(lang: &Language, m: &Model) -> Formula {
    Formula::conjunction(lang.vars().iter().zip(m.values()).map(|(v, &x)| {
        let a = Formula::atom(v.clone());
        if x == 1 {
            a
        } else {
            Formula::not(a)
        }
    }))
}

// ---------------------------------------------------------------------------
// Pools

/// Pool entry: a formula (or a named point set) with its model mask.
#[derive(Clone, Debug)]
pub struct PoolItem {
    pub label: String,
    pub formula: Option<Formula>,
    pub mask: u64,
}

/// Formulas deduplicated by model set, first occurrence kept.
#[derive(Clone, Debug)]
pub struct Pool {
    carrier: usize,
    lang: Option<Language>,
    items: Vec<PoolItem>,
}

impl Pool {
    pub fn from_formulas(lang: &Language, formulas: impl IntoIterator<Item = Formula>) -> Result<Self, ConsError> {
        let mut seen = HashSet::new();
        let mut items = Vec::new();
        for f in formulas {
            let mask = mask_of(&f, lang)?;
            if seen.insert(mask) {
                items.push(PoolItem {
                    label: f.to_string(),
                    formula: Some(f),
                    mask,
                });
            }
        }
        Ok(Pool {
            carrier: 1 << lang.len(),
            lang: Some(lang.clone()),
            items,
        })
    }

    /// Every conjunction of literals, `⊤` included, plus `⊥`.
    pub fn literal_conjunctions(lang: &Language) -> Result<Self, ConsError> {
        Self::from_formulas(lang, literal_conjunctions(lang))
    }

    /// Literal conjunctions closed once under `¬`, `∧` and `∨`. Languages
    /// above three variables get the literal conjunctions only.
    pub fn default_for(lang: &Language) -> Result<Self, ConsError> {
        let base = literal_conjunctions(lang);
        if lang.len() > 3 {
            return Self::from_formulas(lang, base);
        }
        let mut all = base.clone();
        all.extend(base.iter().map(|f| Formula::not(f.clone())));
        for a in &base {
            for b in &base {
                all.push(Formula::and(a.clone(), b.clone()));
                all.push(Formula::or(a.clone(), b.clone()));
            }
        }
        Self::from_formulas(lang, all)
    }

    /// Every subset of an abstract carrier, named by its points.
    pub fn all_subsets(labels: &[String]) -> Result<Self, ConsError> {
        if labels.len() > 12 {
            return Err(ConsError::Invalid("set pools are limited to 12 points".into()));
        }
        let items = bits::submasks(bits::full(labels.len()))
            .map(|mask| PoolItem {
                label: bits::render(mask, labels),
                formula: None,
                mask,
            })
            .collect();
        Ok(Pool {
            carrier: labels.len(),
            lang: None,
            items,
        })
    }

    /// The default pool for a structure: formulas when it has a language,
    /// all point sets otherwise.
    pub fn for_logic(l: &NmLogic) -> Result<Self, ConsError> {
        match l.language() {
            Some(lang) => Self::default_for(lang),
            None => Self::all_subsets(l.relation().labels()),
        }
    }

    pub fn language(&self) -> Option<&Language> {
        self.lang.as_ref()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.items[i].label
    }

    pub fn masks(&self) -> Vec<u64> {
        self.items.iter().map(|it| it.mask).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PoolItem> {
        self.items.iter()
    }

    fn fits(&self, l: &NmLogic) -> Result<(), ConsError> {
        let same_lang = match (&self.lang, l.language()) {
            (Some(a), Some(b)) => a == b,
            (None, _) => true,
            (Some(_), None) => false,
        };
        if self.carrier != l.relation().len() || !same_lang {
            return Err(ConsError::Mismatch("pool and structure have different carriers".into()));
        }
        Ok(())
    }
}

pub fn literal_conjunctions(lang: &Language) -> Vec<Formula> {
    let n = lang.len();
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let mut lits = Vec::new();
        for v in lang.vars() {
            match c % 3 {
                1 => lits.push(Formula::atom(v.clone())),
                2 => lits.push(Formula::not(Formula::atom(v.clone()))),
                _ => {}
            }
            c /= 3;
        }
        out.push(Formula::conjunction(lits));
    }
    out.push(Formula::False);
    out
}

// ---------------------------------------------------------------------------
// Rules

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicalRuleId {
    SC,
    REF,
    LLE,
    RW,
    WOr,
    DisjOr,
    Or,
    CP,
    And1,
    AndN(usize),
    And,
    CCL,
    PR,
    Cut,
    WCM,
    CM2,
    CMn(usize),
    CM,
    ResM,
    Cum,
    SubsetSupset,
    RatM,
    RatMEq,
    LogEqPrime,
    DR,
    LogUnion,
    LogUnionPrime,
    MuIn,
    Scenario1(u8),
    Scenario1Milder,
}

impl LogicalRuleId {
    /// Every rule with fixed arity, `n = 3` for the indexed families.
    pub fn all() -> Vec<LogicalRuleId> {
        use LogicalRuleId::*;
        vec![
            SC, REF, LLE, RW, WOr, DisjOr, Or, CP, And1, AndN(3), And, CCL, PR, Cut, WCM, CM2, CMn(3), CM, ResM,
            Cum, SubsetSupset, RatM, RatMEq, LogEqPrime, DR, LogUnion, LogUnionPrime, MuIn, Scenario1(1),
            Scenario1(2), Scenario1(3), Scenario1Milder,
        ]
    }

    pub fn schema(&self) -> String {
        use LogicalRuleId::*;
        match self {
            SC => "α ⊢ β ⇒ α |~ β".into(),
            REF => "τ ∧ α |~ α".into(),
            LLE => "⊢ α ↔ α′, α |~ β ⇒ α′ |~ β".into(),
            RW => "α |~ β, ⊢ β → β′ ⇒ α |~ β′".into(),
            WOr => "α |~ β, α′ ⊢ β ⇒ α ∨ α′ |~ β".into(),
            DisjOr => "α ⊢ ¬α′, α |~ β, α′ |~ β ⇒ α ∨ α′ |~ β".into(),
            Or => "α |~ β, α′ |~ β ⇒ α ∨ α′ |~ β".into(),
            CP => "α |~ ⊥ ⇒ α ⊢ ⊥".into(),
            And1 => "α |~ β ⇒ α ̸|~ ¬β".into(),
            AndN(n) => format!("α |~ β1 … α |~ β{} ⇒ α ̸|~ ¬β1 ∨ … ∨ ¬β{}", n - 1, n - 1),
            And => "α |~ β, α |~ β′ ⇒ α |~ β ∧ β′".into(),
            CCL => "{β : α |~ β} is classically closed".into(),
            PR => "μ(α) ∩ M(α′) ⊆ μ(α ∧ α′)".into(),
            Cut => "α |~ β, α ∧ β |~ γ ⇒ α |~ γ".into(),
            WCM => "α |~ β, α′ ⊢ α, α ∧ β ⊢ α′ ⇒ α′ |~ β".into(),
            CM2 => "α |~ β, α |~ β′ ⇒ α ∧ β ⊬ ¬β′".into(),
            CMn(n) => format!("α |~ β1 … α |~ β{n} ⇒ α ∧ β1 ∧ … ∧ β{} ⊬ ¬β{n}", n - 1),
            CM => "α |~ β, α |~ β′ ⇒ α ∧ β |~ β′".into(),
            ResM => "τ |~ α, τ |~ β ⇒ τ ∧ α |~ β".into(),
            Cum => "α |~ β ⇒ (α |~ β′ ⇔ α ∧ β |~ β′)".into(),
            SubsetSupset => "α′ |~ α, α |~ α′ ⇒ μ(α) = μ(α′)".into(),
            RatM => "α |~ β, α ̸|~ ¬β′ ⇒ α ∧ β′ |~ β".into(),
            RatMEq => "α ⊢ α′, μ(α′) ∩ M(α) ≠ ∅ ⇒ μ(α) = μ(α′) ∩ M(α)".into(),
            LogEqPrime => "μ(α′) ∩ M(α) ≠ ∅ ⇒ μ(α ∧ α′) = μ(α′) ∩ M(α)".into(),
            DR => "α ∨ β |~ γ ⇒ α |~ γ or β |~ γ".into(),
            LogUnion => "μ(α′) ∩ M(α) ≠ ∅, μ(α′) ∩ μ(α) = ∅ ⇒ μ(α ∨ α′) ∩ M(α′) = ∅".into(),
            LogUnionPrime => "μ(α′) ∩ M(α) ≠ ∅, μ(α′) ∩ μ(α) = ∅ ⇒ μ(α ∨ α′) = μ(α)".into(),
            MuIn => "a ∈ M(α) − μ(α) ⇒ some b ∈ M(α) has a ∉ μ({a, b})".into(),
            Scenario1(1) => "α |~ β, α ∧ β |~ γ ⇒ α |~ γ".into(),
            Scenario1(2) => "α ̸|~ ¬β, α ∧ β |~ γ ⇒ α ̸|~ ¬(β ∧ γ)".into(),
            Scenario1(3) => "α |~ β, α ∧ β ̸|~ ¬γ ⇒ α ̸|~ ¬(β ∧ γ)".into(),
            Scenario1(_) => "undefined".into(),
            Scenario1Milder => "α |~ β, α ∧ β |~ γ ⇒ α ̸|~ ¬β ∨ ¬γ".into(),
        }
    }

    /// Names bound by the schema, in witness order.
    fn names(&self) -> Vec<String> {
        use LogicalRuleId::*;
        let v = |s: &[&str]| s.iter().map(|x| x.to_string()).collect();
        match self {
            CP => v(&["alpha"]),
            SC | LogUnion | LogUnionPrime | SubsetSupset | RatMEq | LogEqPrime | PR => v(&["alpha", "alpha'"]),
            REF => v(&["tau", "alpha"]),
            CCL => v(&["alpha", "gamma"]),
            MuIn => v(&["alpha", "a"]),
            LLE | WOr | DisjOr | Or => v(&["alpha", "alpha'", "beta"]),
            RW | And | CM | Cum | CM2 | And1 => v(&["alpha", "beta", "beta'"]),
            ResM => v(&["tau", "alpha", "beta"]),
            RatM => v(&["alpha", "beta", "beta'"]),
            WCM => v(&["alpha", "alpha'", "beta"]),
            DR => v(&["alpha", "beta", "gamma"]),
            Cut | Scenario1(_) | Scenario1Milder => v(&["alpha", "beta", "gamma"]),
            AndN(n) => std::iter::once("alpha".to_string())
                .chain((1..*n).map(|i| format!("beta{i}")))
                .collect(),
            CMn(n) => std::iter::once("alpha".to_string())
                .chain((1..=*n).map(|i| format!("beta{i}")))
                .collect(),
        }
    }

    fn validate(&self) -> Result<(), ConsError> {
        match self {
            LogicalRuleId::AndN(n) | LogicalRuleId::CMn(n) if *n < 2 => {
                Err(ConsError::UnknownRule(format!("{self} needs n ≥ 2")))
            }
            LogicalRuleId::Scenario1(c) if !(1..=3).contains(c) => {
                Err(ConsError::UnknownRule(format!("{self}: cases are 1 to 3")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for LogicalRuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LogicalRuleId::*;
        match self {
            AndN(n) => write!(f, "ANDn({n})"),
            CMn(n) => write!(f, "CMn({n})"),
            Scenario1(c) => write!(f, "Scenario1({c})"),
            other => f.write_str(match other {
                SC => "SC",
                REF => "REF",
                LLE => "LLE",
                RW => "RW",
                WOr => "wOR",
                DisjOr => "disjOR",
                Or => "OR",
                CP => "CP",
                And1 => "AND1",
                And => "AND",
                CCL => "CCL",
                PR => "PR",
                Cut => "CUT",
                WCM => "wCM",
                CM2 => "CM2",
                CM => "CM",
                ResM => "ResM",
                Cum => "CUM",
                SubsetSupset => "SubsetSupset",
                RatM => "RatM",
                RatMEq => "RatM=",
                LogEqPrime => "Log='",
                DR => "DR",
                LogUnion => "LogUnion",
                LogUnionPrime => "LogUnion'",
                MuIn => "MuIn",
                Scenario1Milder => "Scenario1Milder",
                AndN(_) | CMn(_) | Scenario1(_) => unreachable!(),
            }),
        }
    }
}

impl FromStr for LogicalRuleId {
    type Err = ConsError;

    fn from_str(s: &str) -> Result<Self, ConsError> {
        use LogicalRuleId::*;
        let t = s.trim().trim_start_matches('(').trim_end_matches(')').replace('′', "'");
        let indexed = |prefix: &str| -> Option<usize> {
            t.strip_prefix(prefix)?
                .trim_start_matches('(')
                .trim_end_matches(')')
                .parse()
                .ok()
        };
        let id = match t.as_str() {
            "SC" => SC,
            "REF" => REF,
            "LLE" => LLE,
            "RW" => RW,
            "wOR" => WOr,
            "disjOR" => DisjOr,
            "OR" => Or,
            "CP" => CP,
            "AND1" => And1,
            "AND" => And,
            "CCL" => CCL,
            "PR" => PR,
            "CUT" => Cut,
            "wCM" => WCM,
            "CM2" => CM2,
            "CM" => CM,
            "ResM" => ResM,
            "CUM" => Cum,
            "SubsetSupset" | "⊆⊇" => SubsetSupset,
            "RatM" => RatM,
            "RatM=" | "RatMeq" => RatMEq,
            "Log='" | "LogEqPrime" => LogEqPrime,
            "DR" => DR,
            "LogUnion" | "Log∪" => LogUnion,
            "LogUnion'" | "Log∪'" | "LogUnionPrime" => LogUnionPrime,
            "MuIn" | "μ∈" => MuIn,
            "Scenario1Milder" => Scenario1Milder,
            _ => {
                if let Some(n) = indexed("ANDn").or_else(|| indexed("AND_")) {
                    AndN(n)
                } else if let Some(n) = indexed("CMn").or_else(|| indexed("CM_")) {
                    CMn(n)
                } else if let Some(c) = indexed("Scenario1") {
                    Scenario1(c as u8)
                } else {
                    return Err(ConsError::UnknownRule(s.to_string()));
                }
            }
        };
        id.validate()?;
        Ok(id)
    }
}

/// Failing rule instance. `bindings` pair schema names with formulas (or a
/// model for `MuIn`'s point); `masks` allow replay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleWitness {
    pub rule: String,
    pub bindings: Vec<(String, String)>,
    #[serde(skip)]
    pub masks: Vec<u64>,
}

impl RuleWitness {
    /// `{"alpha": "...", "beta": "..."}`.
    pub fn bindings_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .bindings
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        serde_json::Value::Object(map)
    }
}

struct Ctx<'a> {
    l: &'a NmLogic,
    masks: Vec<u64>,
    mus: Vec<u64>,
}

impl<'a> Ctx<'a> {
    fn ent(&self, a: u64, b: u64) -> bool {
        self.l.entails_masks(a, b)
    }
}

/// Evaluates one instance; `true` means it violates the rule. Rules whose
/// conclusion is a ̸|~ or ⊬ take a consistent `α`, as `⊥` entails everything.
pub fn violates(l: &NmLogic, rule: LogicalRuleId, masks: &[u64], pool: &Pool) -> Result<bool, ConsError> {
    use LogicalRuleId::*;
    rule.validate()?;
    let want = rule.names().len();
    if masks.len() != want {
        return Err(ConsError::Invalid(format!("{rule} binds {want} sets")));
    }
    let top = l.top();
    let ent = |a: u64, b: u64| l.entails_masks(a, b);
    let nent = |a: u64, b: u64| !l.entails_masks(a, b);
    let mu = |a: u64| l.mu(a);
    let m = masks;
    let imp = |a: u64, b: u64| (top & !a) | b;
    Ok(match rule {
        SC => is_subset(m[0], m[1]) && !ent(m[0], m[1]),
        REF => !ent(m[0] & m[1], m[1]),
        LLE => m[0] == m[1] && ent(m[0], m[2]) && !ent(m[1], m[2]),
        RW => ent(m[0], m[1]) && is_subset(m[1], m[2]) && !ent(m[0], m[2]),
        WOr => ent(m[0], m[2]) && is_subset(m[1], m[2]) && !ent(m[0] | m[1], m[2]),
        DisjOr => m[0] & m[1] == 0 && ent(m[0], m[2]) && ent(m[1], m[2]) && !ent(m[0] | m[1], m[2]),
        Or => ent(m[0], m[2]) && ent(m[1], m[2]) && !ent(m[0] | m[1], m[2]),
        CP => m[0] != 0 && ent(m[0], 0),
        And1 => m[0] != 0 && ent(m[0], m[1]) && !nent(m[0], top & !m[1]),
        AndN(_) => {
            let (a, bs) = (m[0], &m[1..]);
            let neg_or = bs.iter().fold(0, |acc, &b| acc | (top & !b));
            a != 0 && bs.iter().all(|&b| ent(a, b)) && ent(a, neg_or)
        }
        And => ent(m[0], m[1]) && ent(m[0], m[2]) && !ent(m[0], m[1] & m[2]),
        CCL => {
            let a = m[0];
            let closure = pool
                .iter()
                .filter(|it| ent(a, it.mask))
                .fold(top, |acc, it| acc & it.mask);
            is_subset(closure, m[1]) && !ent(a, m[1])
        }
        PR => !is_subset(mu(m[0]) & m[1], mu(m[0] & m[1])),
        Cut | Scenario1(1) => ent(m[0], m[1]) && ent(m[0] & m[1], m[2]) && !ent(m[0], m[2]),
        WCM => ent(m[0], m[2]) && is_subset(m[1], m[0]) && is_subset(m[0] & m[2], m[1]) && !ent(m[1], m[2]),
        CM2 => m[0] != 0 && ent(m[0], m[1]) && ent(m[0], m[2]) && m[0] & m[1] & m[2] == 0,
        CMn(_) => {
            let bs = &m[1..];
            m[0] != 0 && bs.iter().all(|&b| ent(m[0], b)) && bs.iter().fold(m[0], |acc, &b| acc & b) == 0
        }
        CM | ResM => ent(m[0], m[1]) && ent(m[0], m[2]) && !ent(m[0] & m[1], m[2]),
        Cum => ent(m[0], m[1]) && ent(m[0], m[2]) != ent(m[0] & m[1], m[2]),
        SubsetSupset => is_subset(mu(m[1]), m[0]) && is_subset(mu(m[0]), m[1]) && mu(m[0]) != mu(m[1]),
        RatM => ent(m[0], m[1]) && nent(m[0], top & !m[2]) && !ent(m[0] & m[2], m[1]),
        RatMEq => is_subset(m[0], m[1]) && mu(m[1]) & m[0] != 0 && mu(m[0]) != mu(m[1]) & m[0],
        LogEqPrime => mu(m[1]) & m[0] != 0 && mu(m[0] & m[1]) != mu(m[1]) & m[0],
        DR => ent(m[0] | m[1], m[2]) && !ent(m[0], m[2]) && !ent(m[1], m[2]),
        LogUnion => mu(m[1]) & m[0] != 0 && mu(m[1]) & mu(m[0]) == 0 && mu(m[0] | m[1]) & m[1] != 0,
        LogUnionPrime => mu(m[1]) & m[0] != 0 && mu(m[1]) & mu(m[0]) == 0 && mu(m[0] | m[1]) != mu(m[0]),
        MuIn => {
            let (x, a) = (m[0], m[1]);
            a.count_ones() == 1
                && x & a != 0
                && mu(x) & a == 0
                && !bits::ones(x).any(|b| mu(a | 1 << b) & a == 0)
        }
        Scenario1(2) => nent(m[0], top & !m[1]) && ent(m[0] & m[1], m[2]) && !nent(m[0], top & !(m[1] & m[2])),
        Scenario1(3) => ent(m[0], m[1]) && nent(m[0] & m[1], top & !m[2]) && !nent(m[0], top & !(m[1] & m[2])),
        Scenario1(_) => unreachable!("validated"),
        Scenario1Milder => m[0] != 0 && ent(m[0], m[1]) && ent(m[0] & m[1], m[2]) && ent(m[0], imp(m[1], top & !m[2])),
    })
}

/// Instantiates the rule over the pool; the first violation in pool order
/// is returned.
pub fn check_logical_rule(l: &NmLogic, rule: LogicalRuleId, pool: &Pool) -> Result<Verdict<RuleWitness>, ConsError> {
    use LogicalRuleId::*;
    rule.validate()?;
    pool.fits(l)?;
    let ctx = Ctx {
        l,
        masks: pool.masks(),
        mus: pool.masks().iter().map(|&m| l.mu(m)).collect(),
    };
    let p = ctx.masks.len();
    let hit: Option<Vec<usize>> = match rule {
        AndN(n) => chain_search(&ctx, |i| ctx.mus[i], n - 1).map(|(a, mut bs)| {
            bs.insert(0, a);
            bs
        }),
        CMn(n) => chain_search(&ctx, |i| ctx.masks[i], n).map(|(a, mut bs)| {
            bs.insert(0, a);
            bs
        }),
        MuIn => {
            let found = (0..p).find_map(|i| {
                let x = ctx.masks[i];
                bits::ones(x)
                    .find(|&a| violates(l, rule, &[x, 1 << a], pool).unwrap_or(false))
                    .map(|a| vec![i, a])
            });
            if let Some(v) = found {
                let (x, a) = (ctx.masks[v[0]], v[1]);
                return Ok(Verdict::Fails(RuleWitness {
                    rule: rule.to_string(),
                    bindings: vec![
                        ("alpha".into(), pool.label(v[0]).to_string()),
                        ("a".into(), l.point_name(a)),
                    ],
                    masks: vec![x, 1 << a],
                }));
            }
            None
        }
        _ => {
            let k = rule.names().len();
            (0..p).into_par_iter().find_map_first(|first| {
                let mut idx = vec![0; k];
                idx[0] = first;
                loop {
                    let masks: Vec<u64> = idx.iter().map(|&i| ctx.masks[i]).collect();
                    if violates(l, rule, &masks, pool).expect("arity checked") {
                        return Some(idx);
                    }
                    // Odometer over positions 1..k.
                    let mut pos = k;
                    loop {
                        if pos == 1 {
                            return None;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < p {
                            break;
                        }
                        idx[pos] = 0;
                    }
                    if k == 1 {
                        return None;
                    }
                }
            })
        }
    };
    Ok(match hit {
        None => Verdict::Holds,
        Some(idx) => {
            let names = rule.names();
            Verdict::Fails(RuleWitness {
                rule: rule.to_string(),
                bindings: names
                    .into_iter()
                    .zip(&idx)
                    .map(|(n, &i)| (n, pool.label(i).to_string()))
                    .collect(),
                masks: idx.iter().map(|&i| ctx.masks[i]).collect(),
            })
        }
    })
}

/// For each `α`, chains of `steps` pool consequences of `α` starting from
/// `start(α)`, tracking only the running intersection. Returns the first
/// `α` whose intersection can reach `∅`, with one chain that does.
fn chain_search(ctx: &Ctx<'_>, start: impl Fn(usize) -> u64 + Sync, steps: usize) -> Option<(usize, Vec<usize>)> {
    let p = ctx.masks.len();
    (0..p).into_par_iter().find_map_first(|a| {
        let alpha = ctx.masks[a];
        if alpha == 0 {
            return None;
        }
        let cons: Vec<usize> = (0..p).filter(|&b| ctx.ent(alpha, ctx.masks[b])).collect();
        // state -> path reaching it
        let mut frontier: HashMap<u64, Vec<usize>> = HashMap::new();
        frontier.insert(start(a), Vec::new());
        for _ in 0..steps {
            let mut next: HashMap<u64, Vec<usize>> = HashMap::new();
            let mut keys: Vec<u64> = frontier.keys().copied().collect();
            keys.sort_unstable();
            for s in keys {
                for &b in &cons {
                    let t = s & ctx.masks[b];
                    next.entry(t).or_insert_with(|| {
                        let mut path = frontier[&s].clone();
                        path.push(b);
                        path
                    });
                }
            }
            frontier = next;
        }
        frontier.get(&0).map(|path| (a, path.clone()))
    })
}

/// Replays a witness against the structure.
pub fn replay(l: &NmLogic, rule: LogicalRuleId, w: &RuleWitness, pool: &Pool) -> bool {
    violates(l, rule, &w.masks, pool).unwrap_or(false)
}

pub fn check_scenario1_logical(l: &NmLogic, case: u8, pool: &Pool) -> Result<Verdict<RuleWitness>, ConsError> {
    check_logical_rule(l, LogicalRuleId::Scenario1(case), pool)
}

// ---------------------------------------------------------------------------
// Two-language laws

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoLangLaw {
    /// `α |~₁ β, α′ |~₂ β′ ⇒ α∧α′ |~ β∧β′`.
    BigBig,
    /// `α ̸|~₁ ¬β, α′ |~₂ β′ ⇒ α∧α′ ̸|~ ¬β∨¬β′`, and with the factors swapped.
    BigMedium,
    /// `α ̸|~₁ ¬β, α′ ̸|~₂ ¬β′ ⇒ α∧α′ ̸|~ ¬β∨¬β′`.
    MediumMedium,
    /// For consistent `α`, `α′`: `α∧α′ |~ β∧β′ ⇔ α |~ β and α′ ⊢ β′`,
    /// primes on the forgotten block.
    Forget,
}

impl TwoLangLaw {
    pub fn all() -> [TwoLangLaw; 4] {
        [TwoLangLaw::BigBig, TwoLangLaw::BigMedium, TwoLangLaw::MediumMedium, TwoLangLaw::Forget]
    }

    pub fn schema(&self) -> &'static str {
        match self {
            TwoLangLaw::BigBig => "α |~ β, α′ |~ β′ ⇒ α ∧ α′ |~ β ∧ β′",
            TwoLangLaw::BigMedium => "α ̸|~ ¬β, α′ |~ β′ ⇒ α ∧ α′ ̸|~ ¬β ∨ ¬β′",
            TwoLangLaw::MediumMedium => "α ̸|~ ¬β, α′ ̸|~ ¬β′ ⇒ α ∧ α′ ̸|~ ¬β ∨ ¬β′",
            TwoLangLaw::Forget => "α ∧ α′ |~ β ∧ β′ ⇔ α |~ β and α′ ⊢ β′",
        }
    }
}

impl fmt::Display for TwoLangLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwoLangLaw::BigBig => "b*b",
            TwoLangLaw::BigMedium => "b*m",
            TwoLangLaw::MediumMedium => "m*m",
            TwoLangLaw::Forget => "forget",
        })
    }
}

impl FromStr for TwoLangLaw {
    type Err = ConsError;

    fn from_str(s: &str) -> Result<Self, ConsError> {
        Ok(match s.trim() {
            "b*b" => TwoLangLaw::BigBig,
            "b*m" => TwoLangLaw::BigMedium,
            "m*m" => TwoLangLaw::MediumMedium,
            "forget" => TwoLangLaw::Forget,
            other => return Err(ConsError::UnknownRule(other.to_string())),
        })
    }
}

/// Literal conjunctions over a sub-product, as point masks.
fn sub_pool(ps: &ProductStructure, mask: u64) -> Result<Pool, ConsError> {
    for b in bits::ones(mask) {
        if ps.blocks()[b].value_set().len() != 2 {
            return Err(ConsError::Mismatch("formulas need two-valued blocks".into()));
        }
    }
    Pool::literal_conjunctions(&ps.language(mask))
}

/// The law on the first available split.
pub fn check_two_language_law(ps: &ProductStructure, law: TwoLangLaw) -> Result<Verdict<RuleWitness>, ConsError> {
    let (l, r) = *ps
        .available_splits()
        .first()
        .ok_or_else(|| ConsError::Invalid("structure has no two-factor split".into()))?;
    check_two_language_law_split(ps, l, r, law)
}

pub fn check_two_language_law_split(
    ps: &ProductStructure,
    left: u64,
    right: u64,
    law: TwoLangLaw,
) -> Result<Verdict<RuleWitness>, ConsError> {
    if left & right != 0 {
        return Err(ConsError::Overlap);
    }
    // Primed formulas live on `second`; for `forget` that is the minor block.
    let (first, second) = match (law, ps.combinator()) {
        (TwoLangLaw::Forget, Combinator::Forget { minor }) if *minor == left => (right, left),
        _ => (left, right),
    };
    let r1 = ps.relation(first)?;
    let r2 = ps.relation(second)?;
    let rp = ps.relation(left | right)?;
    let p1 = sub_pool(ps, first)?;
    let p2 = sub_pool(ps, second)?;
    let whole = rp.full();
    let rect = |a: u64, b: u64| {
        if first == left {
            ps.rectangle(left, right, a, b)
        } else {
            ps.rectangle(left, right, b, a)
        }
    };
    let ent = |r: &PreferenceRelation, a: u64, b: u64| is_subset(r.mu(a), b);
    let (m1, m2) = (p1.masks(), p2.masks());
    let (f1, f2) = (r1.full(), r2.full());
    let bad = |a: u64, b: u64, a2: u64, b2: u64| -> bool {
        let lhs = rect(a, a2);
        match law {
            TwoLangLaw::BigBig => ent(r1, a, b) && ent(r2, a2, b2) && !ent(rp, lhs, rect(b, b2)),
            TwoLangLaw::BigMedium => {
                let concl = !ent(rp, lhs, whole & !rect(b, b2));
                let one = a2 != 0 && !ent(r1, a, f1 & !b) && ent(r2, a2, b2);
                let two = a != 0 && ent(r1, a, b) && !ent(r2, a2, f2 & !b2);
                (one || two) && !concl
            }
            TwoLangLaw::MediumMedium => {
                !ent(r1, a, f1 & !b) && !ent(r2, a2, f2 & !b2) && ent(rp, lhs, whole & !rect(b, b2))
            }
            TwoLangLaw::Forget => {
                a != 0 && a2 != 0 && ent(rp, lhs, rect(b, b2)) != (ent(r1, a, b) && is_subset(a2, b2))
            }
        }
    };
    let hit = (0..m1.len()).into_par_iter().find_map_first(|i| {
        for j in 0..m1.len() {
            for k in 0..m2.len() {
                for q in 0..m2.len() {
                    if bad(m1[i], m1[j], m2[k], m2[q]) {
                        return Some([i, j, k, q]);
                    }
                }
            }
        }
        None
    });
    Ok(match hit {
        None => Verdict::Holds,
        Some([i, j, k, q]) => Verdict::Fails(RuleWitness {
            rule: law.to_string(),
            bindings: vec![
                ("alpha".into(), p1.label(i).to_string()),
                ("beta".into(), p1.label(j).to_string()),
                ("alpha'".into(), p2.label(k).to_string()),
                ("beta'".into(), p2.label(q).to_string()),
            ],
            masks: vec![m1[i], m1[j], m2[k], m2[q]],
        }),
    })
}
