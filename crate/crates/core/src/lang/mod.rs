//! Languages, models, model sets and value functions.

mod formula;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use formula::{parse_formula, Compiled, Formula};

/// Largest language `models_of` will enumerate.
pub const MAX_ENUM_VARS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("duplicate variable '{0}'")]
    DuplicateVariable(String),
    #[error("languages overlap on '{0}'")]
    Overlap(String),
    #[error("'{0}' is not a variable of the enclosing language")]
    NotSublanguage(String),
    #[error("unknown variable '{name}'{}", position.map(|p| format!(" at offset {p}")).unwrap_or_default())]
    UnknownVariable {
        name: String,
        position: Option<usize>,
    },
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("{vars} variables exceed the enumeration guard of {limit}")]
    TooLarge { vars: usize, limit: usize },
    #[error("language mismatch: {0}")]
    Mismatch(String),
    #[error("value {value} out of range for a value set of size {size}")]
    ValueOutOfRange { value: u8, size: usize },
    #[error("model has {got} values, language has {expected} variables")]
    Arity { got: usize, expected: usize },
    #[error("partial model has no extension in the domain")]
    NoExtension,
    #[error("{0}")]
    Invalid(String),
}

/// Ordered list of distinct variable names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct Language {
    vars: Vec<String>,
}

impl Language {
    pub fn new<S: Into<String>>(vars: impl IntoIterator<Item = S>) -> Result<Self, LangError> {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for v in &vars {
            if !seen.insert(v.as_str()) {
                return Err(LangError::DuplicateVariable(v.clone()));
            }
        }
        Ok(Language { vars })
    }

    pub fn empty() -> Self {
        Language { vars: Vec::new() }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Concatenation of two disjoint languages.
    pub fn disjoint_union(&self, other: &Language) -> Result<Language, LangError> {
        if let Some(v) = other.vars.iter().find(|v| self.contains(v)) {
            return Err(LangError::Overlap(v.clone()));
        }
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        Ok(Language { vars })
    }

    pub fn is_sublanguage(&self, of: &Language) -> bool {
        self.vars.iter().all(|v| of.contains(v))
    }

    /// Variables of `self` not in `other`, in `self`'s order.
    pub fn difference(&self, other: &Language) -> Language {
        Language {
            vars: self
                .vars
                .iter()
                .filter(|v| !other.contains(v))
                .cloned()
                .collect(),
        }
    }

    /// Positions of `sub`'s variables inside `self`.
    pub fn positions_of(&self, sub: &Language) -> Result<Vec<usize>, LangError> {
        sub.vars
            .iter()
            .map(|v| {
                self.position(v)
                    .ok_or_else(|| LangError::NotSublanguage(v.clone()))
            })
            .collect()
    }
}

impl<'de> Deserialize<'de> for Language {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let vars = Vec::<String>::deserialize(d)?;
        Language::new(vars).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.vars.join(","))
    }
}

/// Finite totally ordered value set; index order is the value order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ValueSet {
    labels: Vec<String>,
}

impl ValueSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, LangError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > u8::MAX as usize {
            return Err(LangError::Invalid(
                "a value set needs between 1 and 255 values".into(),
            ));
        }
        Ok(ValueSet { labels })
    }

    pub fn two_valued() -> Self {
        ValueSet {
            labels: vec!["0".into(), "1".into()],
        }
    }

    pub fn three_valued() -> Self {
        ValueSet {
            labels: vec!["0".into(), "1/2".into(), "1".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn top(&self) -> u8 {
        (self.labels.len() - 1) as u8
    }

    pub fn label(&self, v: u8) -> &str {
        &self.labels[v as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Total valuation: one value index per language variable, in language order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Model(pub Vec<u8>);

impl Model {
    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn project(&self, positions: &[usize]) -> Model {
        Model(positions.iter().map(|&i| self.0[i]).collect())
    }

    pub fn concat(&self, other: &Model) -> Model {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Model(v)
    }

    /// Packs a two-valued model, first variable most significant.
    pub fn code(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| acc << 1 | b as u64)
    }

    pub fn from_code(code: u64, n: usize) -> Model {
        Model((0..n).map(|i| (code >> (n - 1 - i) & 1) as u8).collect())
    }

    /// Literal rendering over `lang`, e.g. `!p q !r` for two-valued models.
    pub fn render(&self, lang: &Language, values: &ValueSet) -> String {
        if values.len() == 2 {
            let parts: Vec<String> = lang
                .vars()
                .iter()
                .zip(&self.0)
                .map(|(v, &b)| if b == 1 { v.clone() } else { format!("!{v}") })
                .collect();
            if parts.is_empty() {
                "()".into()
            } else {
                parts.join(" ")
            }
        } else {
            let parts: Vec<String> = lang
                .vars()
                .iter()
                .zip(&self.0)
                .map(|(v, &b)| format!("{v}={}", values.label(b)))
                .collect();
            format!("({})", parts.join(","))
        }
    }
}

/// Finite set of models over one language.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelSet {
    lang: Language,
    values: ValueSet,
    members: BTreeSet<Model>,
}

#[derive(Serialize, Deserialize)]
struct ModelSetJson {
    vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
    models: Vec<Vec<u8>>,
}

impl ModelSet {
    pub fn new(
        lang: Language,
        values: ValueSet,
        members: impl IntoIterator<Item = Model>,
    ) -> Result<Self, LangError> {
        let mut set = BTreeSet::new();
        for m in members {
            if m.0.len() != lang.len() {
                return Err(LangError::Arity {
                    got: m.0.len(),
                    expected: lang.len(),
                });
            }
            if let Some(&v) = m.0.iter().find(|&&v| v as usize >= values.len()) {
                return Err(LangError::ValueOutOfRange {
                    value: v,
                    size: values.len(),
                });
            }
            set.insert(m);
        }
        Ok(ModelSet {
            lang,
            values,
            members: set,
        })
    }

    pub fn empty(lang: Language, values: ValueSet) -> Self {
        ModelSet {
            lang,
            values,
            members: BTreeSet::new(),
        }
    }

    /// Every valuation of `lang` into `values`.
    pub fn full(lang: Language, values: ValueSet) -> Result<Self, LangError> {
        let n = lang.len();
        let k = values.len() as u64;
        let total = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if total > 1 << MAX_ENUM_VARS {
            return Err(LangError::TooLarge {
                vars: n,
                limit: MAX_ENUM_VARS,
            });
        }
        let mut members = BTreeSet::new();
        for mut idx in 0..total as u64 {
            let mut v = vec![0u8; n];
            for slot in v.iter_mut().rev() {
                *slot = (idx % k) as u8;
                idx /= k;
            }
            members.insert(Model(v));
        }
        Ok(ModelSet {
            lang,
            values,
            members,
        })
    }

    /// Two-valued model set from packed codes.
    pub fn from_codes(lang: Language, codes: impl IntoIterator<Item = u64>) -> Self {
        let n = lang.len();
        ModelSet {
            members: codes.into_iter().map(|c| Model::from_code(c, n)).collect(),
            lang,
            values: ValueSet::two_valued(),
        }
    }

    pub fn language(&self) -> &Language {
        &self.lang
    }

    pub fn value_set(&self) -> &ValueSet {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &Model) -> bool {
        self.members.contains(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Model> {
        self.members.iter()
    }

    pub fn codes(&self) -> Vec<u64> {
        self.members.iter().map(Model::code).collect()
    }

    fn same_shape(&self, other: &ModelSet) -> Result<(), LangError> {
        if self.lang != other.lang || self.values != other.values {
            return Err(LangError::Mismatch(format!(
                "{} versus {}",
                self.lang, other.lang
            )));
        }
        Ok(())
    }

    pub fn union(&self, other: &ModelSet) -> Result<ModelSet, LangError> {
        self.same_shape(other)?;
        Ok(self.with_members(self.members.union(&other.members).cloned().collect()))
    }

    pub fn intersection(&self, other: &ModelSet) -> Result<ModelSet, LangError> {
        self.same_shape(other)?;
        Ok(self.with_members(
            self.members
                .intersection(&other.members)
                .cloned()
                .collect(),
        ))
    }

    pub fn difference(&self, other: &ModelSet) -> Result<ModelSet, LangError> {
        self.same_shape(other)?;
        Ok(self.with_members(self.members.difference(&other.members).cloned().collect()))
    }

    pub fn is_subset(&self, other: &ModelSet) -> Result<bool, LangError> {
        self.same_shape(other)?;
        Ok(self.members.is_subset(&other.members))
    }

    fn with_members(&self, members: BTreeSet<Model>) -> ModelSet {
        ModelSet {
            lang: self.lang.clone(),
            values: self.values.clone(),
            members,
        }
    }

    /// `{m↾sub : m ∈ self}`; `sub` keeps its own variable order.
    pub fn restrict(&self, sub: &Language) -> Result<ModelSet, LangError> {
        let pos = self.lang.positions_of(sub)?;
        Ok(ModelSet {
            lang: sub.clone(),
            values: self.values.clone(),
            members: self.members.iter().map(|m| m.project(&pos)).collect(),
        })
    }

    /// All concatenations over the disjoint union of the two languages.
    pub fn product(&self, other: &ModelSet) -> Result<ModelSet, LangError> {
        if self.values != other.values {
            return Err(LangError::Mismatch("value sets differ".into()));
        }
        let lang = self.lang.disjoint_union(&other.lang)?;
        let mut members = BTreeSet::new();
        for a in &self.members {
            for b in &other.members {
                members.insert(a.concat(b));
            }
        }
        Ok(ModelSet {
            lang,
            values: self.values.clone(),
            members,
        })
    }

    /// Extends to `whole` by leaving the missing variables unconstrained.
    pub fn cylinder(&self, whole: &Language) -> Result<ModelSet, LangError> {
        if !self.lang.is_sublanguage(whole) {
            return Err(LangError::Mismatch(format!(
                "{} is not inside {}",
                self.lang, whole
            )));
        }
        let rest = whole.difference(&self.lang);
        let free = ModelSet::full(rest, self.values.clone())?;
        self.product(&free)?.reorder(whole)
    }

    /// Same set with the variables permuted into `target`'s order.
    pub fn reorder(&self, target: &Language) -> Result<ModelSet, LangError> {
        if target.len() != self.lang.len() || !target.is_sublanguage(&self.lang) {
            return Err(LangError::Mismatch(format!(
                "{} is not a permutation of {}",
                target, self.lang
            )));
        }
        self.restrict(target)
    }

    /// Closed under cut-and-paste along every split of the language.
    pub fn is_rich(&self) -> bool {
        let n = self.lang.len();
        if n >= 64 {
            return false;
        }
        for a in &self.members {
            for b in &self.members {
                for split in 0..(1u64 << n) {
                    let pasted = Model(
                        (0..n)
                            .map(|i| if split >> i & 1 == 1 { a.0[i] } else { b.0[i] })
                            .collect(),
                    );
                    if !self.members.contains(&pasted) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn to_json(&self) -> serde_json::Value {
        let values = if self.values == ValueSet::two_valued() {
            None
        } else {
            Some(self.values.labels.clone())
        };
        serde_json::to_value(ModelSetJson {
            vars: self.lang.vars.clone(),
            values,
            models: self.members.iter().map(|m| m.0.clone()).collect(),
        })
        .expect("model sets serialise")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<ModelSet, LangError> {
        let raw: ModelSetJson = serde_json::from_value(value.clone())
            .map_err(|e| LangError::Invalid(format!("model set: {e}")))?;
        let values = match raw.values {
            Some(labels) => ValueSet::new(labels)?,
            None => ValueSet::two_valued(),
        };
        ModelSet::new(
            Language::new(raw.vars)?,
            values,
            raw.models.into_iter().map(Model),
        )
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .members
            .iter()
            .map(|m| m.render(&self.lang, &self.values))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// `M(f)` over `lang`, two-valued.
pub fn models_of(f: &Formula, lang: &Language) -> Result<ModelSet, LangError> {
    if lang.len() > MAX_ENUM_VARS {
        return Err(LangError::TooLarge {
            vars: lang.len(),
            limit: MAX_ENUM_VARS,
        });
    }
    let c = f.compile(lang)?;
    let codes = (0..1u64 << lang.len()).filter(|&code| c.eval(code));
    Ok(ModelSet::from_codes(lang.clone(), codes))
}

/// Total map from a model set into a value set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueFunction {
    domain: ModelSet,
    codomain: ValueSet,
    values: BTreeMap<Model, u8>,
}

impl ValueFunction {
    pub fn new(
        domain: ModelSet,
        codomain: ValueSet,
        values: BTreeMap<Model, u8>,
    ) -> Result<Self, LangError> {
        for m in domain.iter() {
            match values.get(m) {
                None => {
                    return Err(LangError::Invalid(format!(
                        "value function undefined on {}",
                        m.render(domain.language(), domain.value_set())
                    )))
                }
                Some(&v) if v as usize >= codomain.len() => {
                    return Err(LangError::ValueOutOfRange {
                        value: v,
                        size: codomain.len(),
                    })
                }
                _ => {}
            }
        }
        if values.len() != domain.len() {
            return Err(LangError::Invalid(
                "value function defined outside its domain".into(),
            ));
        }
        Ok(ValueFunction {
            domain,
            codomain,
            values,
        })
    }

    pub fn from_fn(
        domain: ModelSet,
        codomain: ValueSet,
        f: impl Fn(&Model) -> u8,
    ) -> Result<Self, LangError> {
        let values = domain.iter().map(|m| (m.clone(), f(m))).collect();
        ValueFunction::new(domain, codomain, values)
    }

    /// Characteristic function of `set` inside `domain`, two-valued codomain.
    pub fn characteristic(domain: ModelSet, set: &ModelSet) -> Result<Self, LangError> {
        domain.same_shape(set)?;
        ValueFunction::from_fn(domain, ValueSet::two_valued(), |m| set.contains(m) as u8)
    }

    pub fn domain(&self) -> &ModelSet {
        &self.domain
    }

    pub fn codomain(&self) -> &ValueSet {
        &self.codomain
    }

    pub fn value(&self, m: &Model) -> Option<u8> {
        self.values.get(m).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Model, u8)> {
        self.values.iter().map(|(m, &v)| (m, v))
    }

    /// Models agreeing outside `j` get the same value.
    pub fn is_insensitive(&self, j: &Language) -> Result<bool, LangError> {
        let lang = self.domain.language();
        lang.positions_of(j)?;
        let rest = lang.positions_of(&lang.difference(j))?;
        let mut seen: BTreeMap<Model, u8> = BTreeMap::new();
        for (m, v) in self.iter() {
            if let Some(&old) = seen.get(&m.project(&rest)) {
                if old != v {
                    return Ok(false);
                }
            } else {
                seen.insert(m.project(&rest), v);
            }
        }
        Ok(true)
    }

    fn extreme(&self, j: &Language, partial: &Model, max: bool) -> Result<u8, LangError> {
        let pos = self.domain.language().positions_of(j)?;
        if partial.0.len() != pos.len() {
            return Err(LangError::Arity {
                got: partial.0.len(),
                expected: pos.len(),
            });
        }
        let vals = self
            .iter()
            .filter(|(m, _)| &m.project(&pos) == partial)
            .map(|(_, v)| v);
        let best = if max { vals.max() } else { vals.min() };
        best.ok_or(LangError::NoExtension)
    }

    /// Max over all domain extensions of `partial`.
    pub fn f_plus(&self, j: &Language, partial: &Model) -> Result<u8, LangError> {
        self.extreme(j, partial, true)
    }

    /// Min over all domain extensions of `partial`.
    pub fn f_minus(&self, j: &Language, partial: &Model) -> Result<u8, LangError> {
        self.extreme(j, partial, false)
    }
}
