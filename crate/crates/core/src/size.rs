//! Abstract size: small / medium / big subsets of base sets, and exhaustive
//! checkers for the additive size rules.
//!
//! A system lives on a universe of at most 64 labelled points. Base sets and
//! their subsets are `u64` masks. Smallness is primary; bigness is derived by
//! duality (`A` big in `X` iff `X − A` small in `X`).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bits::{self, is_subset, submasks};
use crate::pref::PreferenceRelation;
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SizeError {
    #[error("base set {0} is empty")]
    EmptyBase(String),
    #[error("subset {sub} is not inside base {base}")]
    NotInside { sub: String, base: String },
    #[error("μ({base}) is empty: every subset would be both small and big")]
    EmptyMu { base: String },
    #[error("{set} is both small and big in {base}")]
    Duality { set: String, base: String },
    #[error("domain is not closed: {needed} is required by {rule} but is not a base set")]
    DomainNotClosed { needed: String, rule: String },
    #[error("{0} is not a base set of the system")]
    UnknownBase(String),
    #[error("sets are not nested: {0}")]
    NotNested(String),
    #[error("unknown rule '{0}'")]
    UnknownRule(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Small,
    Medium,
    Big,
}

/// Additive size rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Opt,
    IM,
    EMI,
    EMF,
    IDisj,
    FDisj,
    MPlusDisj,
    I1,
    I2,
    In(usize),
    IOmega,
    MPlusOmega(u8),
    MPlusPlus(u8),
    Scenario1(u8),
    /// Chain of `n − 1` big steps is not small.
    NSmallNotAll(usize),
    ProjBig,
}

impl RuleId {
    pub fn all_fixed() -> Vec<RuleId> {
        use RuleId::*;
        vec![
            Opt,
            IM,
            EMI,
            EMF,
            IDisj,
            FDisj,
            MPlusDisj,
            I1,
            I2,
            In(3),
            IOmega,
            MPlusOmega(1),
            MPlusOmega(2),
            MPlusOmega(3),
            MPlusOmega(4),
            MPlusPlus(1),
            MPlusPlus(2),
            MPlusPlus(3),
            Scenario1(1),
            Scenario1(2),
            Scenario1(3),
            Scenario1(4),
            NSmallNotAll(3),
        ]
    }

    /// Schema text shown in reports.
    pub fn schema(&self) -> String {
        use RuleId::*;
        match self {
            Opt => "∅ ∈ I(X)".into(),
            IM => "A ⊆ B ∈ I(X) ⇒ A ∈ I(X)".into(),
            EMI => "X ⊆ Y ⇒ I(X) ⊆ I(Y)".into(),
            EMF => "X ⊆ Y ⇒ F(Y) ∩ P(X) ⊆ F(X)".into(),
            IDisj => "A ∈ I(X), B ∈ I(Y), X ∩ Y = ∅ ⇒ A ∪ B ∈ I(X ∪ Y)".into(),
            FDisj => "A ∈ F(X), B ∈ F(Y), X ∩ Y = ∅ ⇒ A ∪ B ∈ F(X ∪ Y)".into(),
            MPlusDisj => "A ∈ M+(X), B ∈ M+(Y), X ∩ Y = ∅ ⇒ A ∪ B ∈ M+(X ∪ Y)".into(),
            I1 => "X ∉ I(X)".into(),
            I2 => "A, B ∈ I(X) ⇒ A ∪ B ≠ X".into(),
            In(n) => format!("A1, …, A{n} ∈ I(X) ⇒ A1 ∪ … ∪ A{n} ≠ X"),
            IOmega => "A, B ∈ I(X) ⇒ A ∪ B ∈ I(X)".into(),
            MPlusOmega(1) => "A ∈ F(X), X ∈ M+(Y) ⇒ A ∈ M+(Y)".into(),
            MPlusOmega(2) => "A ∈ M+(X), X ∈ F(Y) ⇒ A ∈ M+(Y)".into(),
            MPlusOmega(3) => "A ∈ F(X), X ∈ F(Y) ⇒ A ∈ F(Y)".into(),
            MPlusOmega(4) => "A, B ∈ I(X) ⇒ A − B ∈ I(X − B)".into(),
            MPlusPlus(1) => "A ∈ I(X), B ∉ F(X) ⇒ A − B ∈ I(X − B)".into(),
            MPlusPlus(2) => "A ∈ F(X), B ∉ F(X) ⇒ A − B ∈ F(X − B)".into(),
            MPlusPlus(3) => "A ∈ M+(X), X ∈ M+(Y) ⇒ A ∈ M+(Y)".into(),
            Scenario1(1) => "X ∈ F(Y), A ∈ F(X) ⇒ A ∈ F(Y)".into(),
            Scenario1(2) => "X ∈ M+(Y), A ∈ F(X) ⇒ A ∈ M+(Y)".into(),
            Scenario1(3) => "X ∈ F(Y), A ∈ M+(X) ⇒ A ∈ M+(Y)".into(),
            Scenario1(4) => "X ∈ M+(Y), A ∈ M+(X) ⇒ A ∈ M+(Y)".into(),
            NSmallNotAll(n) => format!("X1 ∈ F(X2), …, X{} ∈ F(X{n}) ⇒ X1 ∈ M+(X{n})", n - 1),
            ProjBig => "Γ big in Σ1 × Σ2 ⇒ Γ↾Σ1 big in Σ1".into(),
            _ => "?".into(),
        }
    }

    fn validate(&self) -> Result<(), SizeError> {
        use RuleId::*;
        let ok = match self {
            In(n) => *n >= 1,
            MPlusOmega(k) => (1..=4).contains(k),
            MPlusPlus(k) => (1..=3).contains(k),
            Scenario1(k) => (1..=4).contains(k),
            NSmallNotAll(n) => *n >= 3,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(SizeError::UnknownRule(self.to_string()))
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use RuleId::*;
        match self {
            Opt => write!(f, "Opt"),
            IM => write!(f, "iM"),
            EMI => write!(f, "eMI"),
            EMF => write!(f, "eMF"),
            IDisj => write!(f, "Idisj"),
            FDisj => write!(f, "Fdisj"),
            MPlusDisj => write!(f, "M+disj"),
            I1 => write!(f, "I1"),
            I2 => write!(f, "I2"),
            In(n) => write!(f, "In({n})"),
            IOmega => write!(f, "Iomega"),
            MPlusOmega(k) => write!(f, "M+omega({k})"),
            MPlusPlus(k) => write!(f, "M++({k})"),
            Scenario1(k) => write!(f, "Scenario1({k})"),
            NSmallNotAll(n) => write!(f, "nSmallNotAll({n})"),
            ProjBig => write!(f, "ProjBig"),
        }
    }
}

fn parse_arg(s: &str, name: &str) -> Option<usize> {
    s.strip_prefix(name)?
        .strip_prefix('(')?
        .strip_suffix(')')?
        .trim()
        .parse()
        .ok()
}

impl FromStr for RuleId {
    type Err = SizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use RuleId::*;
        let s = s.trim();
        let id = match s {
            "Opt" => Opt,
            "iM" => IM,
            "eMI" => EMI,
            "eMF" => EMF,
            "Idisj" => IDisj,
            "Fdisj" => FDisj,
            "M+disj" => MPlusDisj,
            "I1" => I1,
            "I2" => I2,
            "Iomega" => IOmega,
            "ProjBig" | "pr(b)=b" => ProjBig,
            _ => {
                let small = |n: Option<usize>| n.and_then(|k| u8::try_from(k).ok());
                if let Some(n) = parse_arg(s, "In") {
                    In(n)
                } else if let Some(k) = small(parse_arg(s, "M+omega")) {
                    MPlusOmega(k)
                } else if let Some(k) = small(parse_arg(s, "M++")) {
                    MPlusPlus(k)
                } else if let Some(k) = small(parse_arg(s, "Scenario1")) {
                    Scenario1(k)
                } else if let Some(n) = parse_arg(s, "nSmallNotAll") {
                    NSmallNotAll(n)
                } else {
                    return Err(SizeError::UnknownRule(s.to_string()));
                }
            }
        };
        id.validate()?;
        Ok(id)
    }
}

#[derive(Clone, Debug)]
enum Classifier {
    /// Small subsets listed per base.
    Explicit(Vec<Vec<u64>>),
    /// `μ` per base: small iff disjoint from `μ`.
    Principal(Vec<u64>),
}

/// Failing rule instance. `sets` name the bound variables of the schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SizeWitness {
    pub rule: String,
    pub sets: Vec<(String, u64)>,
    pub rendered: String,
}

/// Classification of subsets of every base set in a domain.
#[derive(Clone, Debug)]
pub struct SizeSystem {
    labels: Vec<String>,
    bases: Vec<u64>,
    index: HashMap<u64, usize>,
    classifier: Classifier,
}

impl SizeSystem {
    fn base_index(labels: &[String], bases: &[u64]) -> Result<HashMap<u64, usize>, SizeError> {
        let full = bits::full(labels.len());
        let mut index = HashMap::new();
        for (i, &b) in bases.iter().enumerate() {
            if b == 0 {
                return Err(SizeError::EmptyBase(format!("#{i}")));
            }
            if b & !full != 0 {
                return Err(SizeError::Invalid(format!(
                    "base #{i} uses points outside the universe"
                )));
            }
            if index.insert(b, i).is_some() {
                return Err(SizeError::Invalid(format!(
                    "base {} listed twice",
                    bits::render(b, labels)
                )));
            }
        }
        Ok(index)
    }

    /// Small subsets given explicitly; validated for duality.
    pub fn explicit(
        labels: Vec<String>,
        bases: Vec<u64>,
        small: Vec<Vec<u64>>,
    ) -> Result<Self, SizeError> {
        if labels.len() > 64 {
            return Err(SizeError::Invalid("more than 64 points".into()));
        }
        if small.len() != bases.len() {
            return Err(SizeError::Invalid("one small-set list per base is required".into()));
        }
        let index = Self::base_index(&labels, &bases)?;
        let mut lists = Vec::with_capacity(small.len());
        for (&x, list) in bases.iter().zip(small) {
            let mut list = list;
            list.sort_unstable();
            list.dedup();
            for &a in &list {
                if !is_subset(a, x) {
                    return Err(SizeError::NotInside {
                        sub: bits::render(a, &labels),
                        base: bits::render(x, &labels),
                    });
                }
                if list.binary_search(&(x & !a)).is_ok() {
                    return Err(SizeError::Duality {
                        set: bits::render(a, &labels),
                        base: bits::render(x, &labels),
                    });
                }
            }
            lists.push(list);
        }
        Ok(SizeSystem {
            labels,
            bases,
            index,
            classifier: Classifier::Explicit(lists),
        })
    }

    /// Principal filters: big iff containing `μ(X)`.
    pub fn principal_filter_from_mu(
        labels: Vec<String>,
        table: Vec<(u64, u64)>,
    ) -> Result<Self, SizeError> {
        if labels.len() > 64 {
            return Err(SizeError::Invalid("more than 64 points".into()));
        }
        let bases: Vec<u64> = table.iter().map(|&(x, _)| x).collect();
        let index = Self::base_index(&labels, &bases)?;
        for &(x, m) in &table {
            if !is_subset(m, x) {
                return Err(SizeError::NotInside {
                    sub: format!("μ = {}", bits::render(m, &labels)),
                    base: bits::render(x, &labels),
                });
            }
            if m == 0 {
                return Err(SizeError::EmptyMu {
                    base: bits::render(x, &labels),
                });
            }
        }
        Ok(SizeSystem {
            labels,
            bases,
            index,
            classifier: Classifier::Principal(table.into_iter().map(|(_, m)| m).collect()),
        })
    }

    /// Principal filters of a relation over the given base sets.
    pub fn from_relation(r: &PreferenceRelation, bases: Vec<u64>) -> Result<Self, SizeError> {
        let table = bases.iter().map(|&x| (x, r.mu(x))).collect();
        Self::principal_filter_from_mu(r.labels().to_vec(), table)
    }

    /// Principal filters of a relation over every nonempty subset.
    pub fn from_relation_all(r: &PreferenceRelation) -> Result<Self, SizeError> {
        Self::from_relation(r, bits::nonempty_submasks(r.full()).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn render(&self, s: u64) -> String {
        bits::render(s, &self.labels)
    }

    pub fn is_base(&self, x: u64) -> bool {
        self.index.contains_key(&x)
    }

    /// `μ(X)` when the system is principal.
    pub fn mu(&self, x: u64) -> Option<u64> {
        match &self.classifier {
            Classifier::Principal(m) => self.index.get(&x).map(|&i| m[i]),
            Classifier::Explicit(_) => None,
        }
    }

    fn idx(&self, x: u64) -> Result<usize, SizeError> {
        self.index
            .get(&x)
            .copied()
            .ok_or_else(|| SizeError::UnknownBase(self.render(x)))
    }

    #[inline]
    fn small_at(&self, i: usize, a: u64) -> bool {
        match &self.classifier {
            Classifier::Explicit(lists) => lists[i].binary_search(&a).is_ok(),
            Classifier::Principal(m) => a & m[i] == 0,
        }
    }

    pub fn is_small(&self, a: u64, x: u64) -> Result<bool, SizeError> {
        let i = self.idx(x)?;
        if !is_subset(a, x) {
            return Err(SizeError::NotInside {
                sub: self.render(a),
                base: self.render(x),
            });
        }
        Ok(self.small_at(i, a))
    }

    pub fn is_big(&self, a: u64, x: u64) -> Result<bool, SizeError> {
        self.is_small(x & !a, x).and_then(|s| {
            if !is_subset(a, x) {
                Err(SizeError::NotInside {
                    sub: self.render(a),
                    base: self.render(x),
                })
            } else {
                Ok(s)
            }
        })
    }

    /// Not small.
    pub fn is_mplus(&self, a: u64, x: u64) -> Result<bool, SizeError> {
        Ok(!self.is_small(a, x)?)
    }

    pub fn classify(&self, a: u64, x: u64) -> Result<Size, SizeError> {
        Ok(if self.is_small(a, x)? {
            Size::Small
        } else if self.is_big(a, x)? {
            Size::Big
        } else {
            Size::Medium
        })
    }

    /// Intersection of all big subsets of `x`: `x` minus every small subset.
    pub fn core(&self, x: u64) -> Result<u64, SizeError> {
        let i = self.idx(x)?;
        Ok(match &self.classifier {
            Classifier::Explicit(lists) => x & !lists[i].iter().fold(0, |acc, &a| acc | a),
            Classifier::Principal(m) => m[i],
        })
    }

    /// Small subsets of a base, ascending.
    pub fn small_sets(&self, x: u64) -> Result<Vec<u64>, SizeError> {
        let i = self.idx(x)?;
        Ok(match &self.classifier {
            Classifier::Explicit(lists) => lists[i].clone(),
            Classifier::Principal(m) => submasks(x & !m[i]).collect(),
        })
    }

    fn need_base(&self, x: u64, rule: RuleId) -> Result<usize, SizeError> {
        self.index
            .get(&x)
            .copied()
            .ok_or_else(|| SizeError::DomainNotClosed {
                needed: self.render(x),
                rule: rule.to_string(),
            })
    }

    fn witness(&self, rule: RuleId, names: &[&str], sets: &[u64]) -> SizeWitness {
        let sets: Vec<(String, u64)> = names
            .iter()
            .zip(sets)
            .map(|(n, &s)| (n.to_string(), s))
            .collect();
        let rendered = sets
            .iter()
            .map(|(n, s)| format!("{n} = {}", self.render(*s)))
            .collect::<Vec<_>>()
            .join(", ");
        SizeWitness {
            rule: rule.to_string(),
            sets,
            rendered,
        }
    }

    /// Evaluates one instance of `rule`; `Ok(true)` means the instance
    /// violates the rule. Instances whose optional constructions fall outside
    /// the domain are reported as errors.
    pub fn violates(&self, rule: RuleId, sets: &[u64]) -> Result<bool, SizeError> {
        use RuleId::*;
        let want = |n: usize| -> Result<(), SizeError> {
            if sets.len() == n {
                Ok(())
            } else {
                Err(SizeError::Invalid(format!(
                    "{rule} takes {n} sets, got {}",
                    sets.len()
                )))
            }
        };
        let inside = |a: u64, x: u64| -> Result<(), SizeError> {
            if is_subset(a, x) {
                Ok(())
            } else {
                Err(SizeError::NotInside {
                    sub: self.render(a),
                    base: self.render(x),
                })
            }
        };
        let small = |a: u64, x: u64| self.is_small(a, x);
        let big = |a: u64, x: u64| self.is_big(a, x);
        let mplus = |a: u64, x: u64| self.is_mplus(a, x);
        rule.validate()?;
        Ok(match rule {
            Opt => {
                want(1)?;
                !small(0, sets[0])?
            }
            IM => {
                want(3)?;
                let (x, a, b) = (sets[0], sets[1], sets[2]);
                inside(a, b)?;
                small(b, x)? && !small(a, x)?
            }
            EMI | EMF => {
                want(3)?;
                let (x, y, a) = (sets[0], sets[1], sets[2]);
                inside(x, y)?;
                inside(a, x)?;
                if rule == EMI {
                    small(a, x)? && !small(a, y)?
                } else {
                    big(a, y)? && !big(a, x)?
                }
            }
            IDisj | FDisj | MPlusDisj => {
                want(4)?;
                let (x, y, a, b) = (sets[0], sets[1], sets[2], sets[3]);
                inside(a, x)?;
                inside(b, y)?;
                if x & y != 0 {
                    return Ok(false);
                }
                let test = |s: u64, base: u64| match rule {
                    IDisj => small(s, base),
                    FDisj => big(s, base),
                    _ => mplus(s, base),
                };
                if !(test(a, x)? && test(b, y)?) {
                    return Ok(false);
                }
                self.need_base(x | y, rule)?;
                !test(a | b, x | y)?
            }
            I1 => {
                want(1)?;
                small(sets[0], sets[0])?
            }
            I2 | In(_) => {
                let n = if let In(n) = rule { n } else { 2 };
                want(n + 1)?;
                let x = sets[0];
                let mut cover = 0;
                for &a in &sets[1..] {
                    if !small(a, x)? {
                        return Ok(false);
                    }
                    cover |= a;
                }
                cover == x
            }
            IOmega => {
                want(3)?;
                let (x, a, b) = (sets[0], sets[1], sets[2]);
                small(a, x)? && small(b, x)? && !small(a | b, x)?
            }
            MPlusOmega(4) | MPlusPlus(1) | MPlusPlus(2) => {
                want(3)?;
                let (x, a, b) = (sets[0], sets[1], sets[2]);
                inside(a, x)?;
                inside(b, x)?;
                let premise = match rule {
                    MPlusOmega(4) => small(a, x)? && small(b, x)?,
                    MPlusPlus(1) => small(a, x)? && !big(b, x)?,
                    _ => big(a, x)? && !big(b, x)?,
                };
                if !premise || x & !b == 0 {
                    return Ok(false);
                }
                let rest = x & !b;
                self.need_base(rest, rule)?;
                if rule == MPlusPlus(2) {
                    !big(a & !b, rest)?
                } else {
                    !small(a & !b, rest)?
                }
            }
            MPlusOmega(_) | MPlusPlus(_) | Scenario1(_) => {
                want(3)?;
                let (a, x, y) = (sets[0], sets[1], sets[2]);
                if !is_subset(a, x) || !is_subset(x, y) {
                    return Err(SizeError::NotNested(format!(
                        "{} ⊆ {} ⊆ {}",
                        self.render(a),
                        self.render(x),
                        self.render(y)
                    )));
                }
                let (premise, conclusion) = match rule {
                    MPlusOmega(1) | Scenario1(2) => (big(a, x)? && mplus(x, y)?, mplus(a, y)?),
                    MPlusOmega(2) | Scenario1(3) => (mplus(a, x)? && big(x, y)?, mplus(a, y)?),
                    MPlusOmega(3) | Scenario1(1) => (big(a, x)? && big(x, y)?, big(a, y)?),
                    _ => (mplus(a, x)? && mplus(x, y)?, mplus(a, y)?),
                };
                premise && !conclusion
            }
            NSmallNotAll(n) => {
                want(n)?;
                for w in sets.windows(2) {
                    if !big(w[0], w[1])? {
                        return Ok(false);
                    }
                }
                small(sets[0], sets[n - 1])?
            }
            ProjBig => return Err(project_big_error()),
        })
    }

    /// Re-evaluates a witness; true iff it is a genuine violation.
    pub fn replay(&self, rule: RuleId, w: &SizeWitness) -> bool {
        let sets: Vec<u64> = w.sets.iter().map(|&(_, s)| s).collect();
        matches!(self.violates(rule, &sets), Ok(true))
    }

    /// Exhaustively instantiates `rule` over the domain.
    pub fn check_rule(&self, rule: RuleId) -> Result<Verdict<SizeWitness>, SizeError> {
        use RuleId::*;
        rule.validate()?;
        let bases: Vec<u64> = {
            let mut b = self.bases.clone();
            b.sort_unstable();
            b
        };
        // Each closure enumerates one base's instances in canonical order.
        let per_base = |x: u64| -> Result<Option<SizeWitness>, SizeError> {
            match rule {
                Opt | I1 => {
                    Ok(self.violates(rule, &[x])?.then(|| self.witness(rule, &["X"], &[x])))
                }
                IM => {
                    for b in self.small_sets(x)? {
                        for a in submasks(b) {
                            if self.violates(rule, &[x, a, b])? {
                                return Ok(Some(self.witness(rule, &["X", "A", "B"], &[x, a, b])));
                            }
                        }
                    }
                    Ok(None)
                }
                EMI | EMF => {
                    for &y in &bases {
                        if !is_subset(x, y) {
                            continue;
                        }
                        for a in submasks(x) {
                            if self.violates(rule, &[x, y, a])? {
                                return Ok(Some(self.witness(rule, &["X", "Y", "A"], &[x, y, a])));
                            }
                        }
                    }
                    Ok(None)
                }
                IDisj | FDisj | MPlusDisj => {
                    for &y in &bases {
                        if x & y != 0 {
                            continue;
                        }
                        for a in submasks(x) {
                            for b in submasks(y) {
                                if self.violates(rule, &[x, y, a, b])? {
                                    return Ok(Some(self.witness(
                                        rule,
                                        &["X", "Y", "A", "B"],
                                        &[x, y, a, b],
                                    )));
                                }
                            }
                        }
                    }
                    Ok(None)
                }
                I2 | In(_) => {
                    let n = if let In(n) = rule { n } else { 2 };
                    Ok(self.find_cover(x, n)?.map(|sets| {
                        let mut all = vec![x];
                        all.extend(sets);
                        let names: Vec<String> = std::iter::once("X".to_string())
                            .chain((1..=n).map(|i| format!("A{i}")))
                            .collect();
                        let names: Vec<&str> = names.iter().map(String::as_str).collect();
                        self.witness(rule, &names, &all)
                    }))
                }
                IOmega => {
                    let small = self.small_sets(x)?;
                    for &a in &small {
                        for &b in &small {
                            if self.violates(rule, &[x, a, b])? {
                                return Ok(Some(self.witness(rule, &["X", "A", "B"], &[x, a, b])));
                            }
                        }
                    }
                    Ok(None)
                }
                MPlusOmega(4) | MPlusPlus(1) | MPlusPlus(2) => {
                    for a in submasks(x) {
                        for b in submasks(x) {
                            if self.violates(rule, &[x, a, b])? {
                                return Ok(Some(self.witness(rule, &["X", "A", "B"], &[x, a, b])));
                            }
                        }
                    }
                    Ok(None)
                }
                MPlusOmega(_) | MPlusPlus(_) | Scenario1(_) => {
                    // Here the enumerated base plays Y.
                    let y = x;
                    for &x in &bases {
                        if !is_subset(x, y) {
                            continue;
                        }
                        for a in submasks(x) {
                            if self.violates(rule, &[a, x, y])? {
                                return Ok(Some(self.witness(rule, &["A", "X", "Y"], &[a, x, y])));
                            }
                        }
                    }
                    Ok(None)
                }
                NSmallNotAll(n) => Ok(self.find_big_chain(x, n)?.map(|chain| {
                    let names: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
                    let names: Vec<&str> = names.iter().map(String::as_str).collect();
                    self.witness(rule, &names, &chain)
                })),
                ProjBig => Err(project_big_error()),
            }
        };
        let found: Result<Option<SizeWitness>, SizeError> = bases
            .par_iter()
            .map(|&x| per_base(x))
            .find_map_first(|r| match r {
                Ok(None) => None,
                other => Some(other),
            })
            .unwrap_or(Ok(None));
        Ok(found?.into())
    }

    /// `n` small subsets covering `x`, if any.
    fn find_cover(&self, x: u64, n: usize) -> Result<Option<Vec<u64>>, SizeError> {
        let small = self.small_sets(x)?;
        let maximal: Vec<u64> = small
            .iter()
            .copied()
            .filter(|&a| !small.iter().any(|&b| b != a && is_subset(a, b)))
            .collect();
        fn go(x: u64, n: usize, from: usize, acc: u64, sets: &[u64], picked: &mut Vec<u64>) -> bool {
            if acc == x {
                return true;
            }
            if picked.len() == n {
                return false;
            }
            for i in from..sets.len() {
                picked.push(sets[i]);
                if go(x, n, i, acc | sets[i], sets, picked) {
                    return true;
                }
                picked.pop();
            }
            false
        }
        let mut picked = Vec::new();
        if !go(x, n, 0, 0, &maximal, &mut picked) {
            return Ok(None);
        }
        // Pad with repeats so the instance has exactly n sets.
        while picked.len() < n {
            picked.push(*picked.last().unwrap_or(&0));
        }
        if picked.iter().all(|&a| a == 0) {
            // Only possible when x is covered by the empty set, i.e. never.
            return Ok(None);
        }
        Ok(Some(picked))
    }

    /// Chain `X1 ⊆ X2 ⊆ … ⊆ Xn = top` of big steps with `X1` small in `top`.
    fn find_big_chain(&self, top: u64, n: usize) -> Result<Option<Vec<u64>>, SizeError> {
        fn go(
            sys: &SizeSystem,
            chain: &mut Vec<u64>,
            n: usize,
            top: u64,
        ) -> Result<bool, SizeError> {
            let cur = *chain.last().expect("nonempty");
            if chain.len() == n - 1 {
                // Final step: X1 any subset, big in the current set.
                for a in submasks(cur) {
                    if sys.is_big(a, cur)? && sys.is_small(a, top)? {
                        chain.push(a);
                        return Ok(true);
                    }
                }
                return Ok(false);
            }
            for &x in &sys.bases {
                if is_subset(x, cur) && sys.is_big(x, cur)? {
                    chain.push(x);
                    if go(sys, chain, n, top)? {
                        return Ok(true);
                    }
                    chain.pop();
                }
            }
            Ok(false)
        }
        let mut chain = vec![top];
        if go(self, &mut chain, n, top)? {
            chain.reverse();
            Ok(Some(chain))
        } else {
            Ok(None)
        }
    }

    /// One nested triple of a multiplication case.
    pub fn check_scenario1(&self, case: u8, a: u64, x: u64, y: u64) -> Result<Verdict<SizeWitness>, SizeError> {
        let rule = RuleId::Scenario1(case);
        rule.validate()?;
        if !is_subset(a, x) || !is_subset(x, y) {
            return Err(SizeError::NotNested(format!(
                "{} ⊆ {} ⊆ {}",
                self.render(a),
                self.render(x),
                self.render(y)
            )));
        }
        self.idx(x)?;
        self.idx(y)?;
        Ok(if self.violates(rule, &[a, x, y])? {
            Verdict::Fails(self.witness(rule, &["A", "X", "Y"], &[a, x, y]))
        } else {
            Verdict::Holds
        })
    }

    /// `n` big steps `A ∈ F(X1), X1 ∈ F(X2), …` do not end small in `Xn`.
    pub fn check_milder(&self, n: usize, a: u64, chain: &[u64]) -> Result<Verdict<SizeWitness>, SizeError> {
        if n == 0 || chain.len() != n {
            return Err(SizeError::NotNested(format!(
                "expected a chain of {n} sets, got {}",
                chain.len()
            )));
        }
        let mut sets = vec![a];
        sets.extend_from_slice(chain);
        for w in sets.windows(2) {
            if !is_subset(w[0], w[1]) {
                return Err(SizeError::NotNested(format!(
                    "{} ⊄ {}",
                    self.render(w[0]),
                    self.render(w[1])
                )));
            }
        }
        for &x in chain {
            self.idx(x)?;
        }
        for w in sets.windows(2) {
            if !self.is_big(w[0], w[1])? {
                return Ok(Verdict::Holds);
            }
        }
        let top = chain[n - 1];
        Ok(if self.is_small(a, top)? {
            let names: Vec<String> = std::iter::once("A".to_string())
                .chain((1..=n).map(|i| format!("X{i}")))
                .collect();
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            Verdict::Fails(self.witness(RuleId::NSmallNotAll(n + 1), &names, &sets))
        } else {
            Verdict::Holds
        })
    }

    /// `{"points": [...], "bases": [mask, ...], "small": {"<base index>": [mask, ...]}}`
    /// or, for principal systems, `"mu": {"<base index>": mask}`.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "points": self.labels, "bases": self.bases });
        match &self.classifier {
            Classifier::Explicit(lists) => {
                let small: BTreeMap<String, &Vec<u64>> = lists
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (i.to_string(), l))
                    .collect();
                v["small"] = json!(small);
            }
            Classifier::Principal(m) => {
                let mu: BTreeMap<String, u64> =
                    m.iter().enumerate().map(|(i, &x)| (i.to_string(), x)).collect();
                v["mu"] = json!(mu);
            }
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self, SizeError> {
        let bases: Vec<u64> = v
            .get("bases")
            .map(|b| serde_json::from_value(b.clone()))
            .transpose()
            .map_err(|e| SizeError::Invalid(format!("bases: {e}")))?
            .ok_or_else(|| SizeError::Invalid("missing 'bases'".into()))?;
        let labels: Vec<String> = match v.get("points") {
            Some(p) => serde_json::from_value(p.clone())
                .map_err(|e| SizeError::Invalid(format!("points: {e}")))?,
            None => {
                let all = bases.iter().fold(0u64, |acc, b| acc | b);
                let n = 64 - all.leading_zeros() as usize;
                (0..n).map(|i| i.to_string()).collect()
            }
        };
        let per_base = |key: &str| -> Result<Option<BTreeMap<String, Value>>, SizeError> {
            v.get(key)
                .map(|m| serde_json::from_value(m.clone()))
                .transpose()
                .map_err(|e| SizeError::Invalid(format!("{key}: {e}")))
        };
        let lookup = |k: &str| -> Result<usize, SizeError> {
            k.parse::<usize>()
                .ok()
                .filter(|&i| i < bases.len())
                .ok_or_else(|| SizeError::Invalid(format!("unknown base id '{k}'")))
        };
        if let Some(mu) = per_base("mu")? {
            let mut table: Vec<(u64, Option<u64>)> = bases.iter().map(|&b| (b, None)).collect();
            for (k, m) in mu {
                let i = lookup(&k)?;
                table[i].1 = Some(
                    m.as_u64()
                        .ok_or_else(|| SizeError::Invalid("μ entries are masks".into()))?,
                );
            }
            let table = table
                .into_iter()
                .map(|(b, m)| {
                    m.map(|m| (b, m))
                        .ok_or_else(|| SizeError::Invalid(format!("no μ for base {b}")))
                })
                .collect::<Result<_, _>>()?;
            return Self::principal_filter_from_mu(labels, table);
        }
        let mut small = vec![Vec::new(); bases.len()];
        if let Some(map) = per_base("small")? {
            for (k, list) in map {
                let i = lookup(&k)?;
                small[i] = serde_json::from_value(list)
                    .map_err(|e| SizeError::Invalid(format!("small sets: {e}")))?;
            }
        }
        Self::explicit(labels, bases, small)
    }
}

fn project_big_error() -> SizeError {
    SizeError::Unsupported(
        "pr(b)=b relates a product to its factors; use mulsize::check_product_size_laws".into(),
    )
}
