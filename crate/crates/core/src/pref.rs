//! Strict preference relations, minimisation, and relations on products of
//! blocks built by the Hamming-family, lexicographic and forget combinators.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bits;
use crate::lang::{LangError, Language, Model, ModelSet, ValueSet};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefError {
    #[error("relation is reflexive at '{0}'")]
    Reflexive(String),
    #[error("point {index} outside a carrier of {len} points")]
    OutOfRange { index: usize, len: usize },
    #[error("carrier of {0} points exceeds the 64-point limit")]
    TooLarge(usize),
    #[error("set is not inside the carrier")]
    NotSubset,
    #[error("{0}")]
    Mismatch(String),
    #[error("blocks overlap")]
    Overlap,
    #[error("no relation for block set {0:#b}")]
    MissingRelation(u64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// Strict relation `≺` on points `0..n`. `below[m]` holds every `k` with `k ≺ m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreferenceRelation {
    below: Vec<u64>,
    labels: Vec<String>,
}

impl PreferenceRelation {
    /// Relation without edges.
    pub fn empty(labels: Vec<String>) -> Result<Self, PrefError> {
        if labels.len() > 64 {
            return Err(PrefError::TooLarge(labels.len()));
        }
        Ok(PreferenceRelation {
            below: vec![0; labels.len()],
            labels,
        })
    }

    /// Unlabelled carrier `0..n`, points named by their index.
    pub fn unlabelled(n: usize) -> Result<Self, PrefError> {
        Self::empty((0..n).map(|i| i.to_string()).collect())
    }

    pub fn from_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, PrefError> {
        let mut r = Self::empty(labels)?;
        for (a, b) in edges {
            r.add_edge(a, b)?;
        }
        Ok(r)
    }

    /// Builds from a predicate `lt(a, b)` meaning `a ≺ b`.
    pub fn from_fn(labels: Vec<String>, lt: impl Fn(usize, usize) -> bool) -> Result<Self, PrefError> {
        let mut r = Self::empty(labels)?;
        let n = r.len();
        for b in 0..n {
            for a in 0..n {
                if a != b && lt(a, b) {
                    r.below[b] |= 1 << a;
                }
            }
        }
        Ok(r)
    }

    /// Raw constructor from predecessor masks.
    pub fn from_below(labels: Vec<String>, below: Vec<u64>) -> Result<Self, PrefError> {
        if labels.len() != below.len() {
            return Err(PrefError::Mismatch("label and row counts differ".into()));
        }
        let r = PreferenceRelation { below, labels };
        if r.len() > 64 {
            return Err(PrefError::TooLarge(r.len()));
        }
        for (i, &row) in r.below.iter().enumerate() {
            if row & !r.full() != 0 {
                return Err(PrefError::OutOfRange {
                    index: 63 - row.leading_zeros() as usize,
                    len: r.len(),
                });
            }
            if bits::contains(row, i) {
                return Err(PrefError::Reflexive(r.labels[i].clone()));
            }
        }
        Ok(r)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<(), PrefError> {
        let n = self.len();
        for i in [a, b] {
            if i >= n {
                return Err(PrefError::OutOfRange { index: i, len: n });
            }
        }
        if a == b {
            return Err(PrefError::Reflexive(self.labels[a].clone()));
        }
        self.below[b] |= 1 << a;
        Ok(())
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        if b < self.len() && a < 64 {
            self.below[b] &= !(1 << a);
        }
    }

    pub fn len(&self) -> usize {
        self.below.len()
    }

    pub fn is_empty(&self) -> bool {
        self.below.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn full(&self) -> u64 {
        bits::full(self.len())
    }

    /// `a ≺ b`.
    #[inline]
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        bits::contains(self.below[b], a)
    }

    /// `a ⪯ b`, i.e. `a ≺ b` or `a = b`.
    #[inline]
    pub fn weakly_precedes(&self, a: usize, b: usize) -> bool {
        a == b || self.precedes(a, b)
    }

    pub fn below(&self, b: usize) -> u64 {
        self.below[b]
    }

    pub fn rows(&self) -> &[u64] {
        &self.below
    }

    /// Edges `(a, b)` with `a ≺ b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.len())
            .flat_map(|b| bits::ones(self.below[b]).map(move |a| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Minimal elements of `x`.
    #[inline]
    pub fn mu(&self, x: u64) -> u64 {
        let mut out = 0;
        for m in bits::ones(x) {
            if self.below[m] & x == 0 {
                out |= 1 << m;
            }
        }
        out
    }

    pub fn mu_checked(&self, x: u64) -> Result<u64, PrefError> {
        if x & !self.full() != 0 {
            return Err(PrefError::NotSubset);
        }
        Ok(self.mu(x))
    }

    /// Every non-minimal point of `x` has a minimal point of `x` below it.
    pub fn is_smooth_on(&self, x: u64) -> bool {
        let m = self.mu(x);
        bits::ones(x & !m).all(|p| self.below[p] & m != 0)
    }

    pub fn is_smooth(&self, domain: impl IntoIterator<Item = u64>) -> bool {
        domain.into_iter().all(|x| self.is_smooth_on(x))
    }

    /// Smoothness over every subset of the carrier. On finite carriers this
    /// coincides with transitivity; small carriers are still enumerated
    /// literally.
    pub fn is_smooth_all(&self) -> bool {
        if self.len() <= 16 {
            bits::submasks(self.full()).all(|x| self.is_smooth_on(x))
        } else {
            self.is_transitive()
        }
    }

    pub fn is_transitive(&self) -> bool {
        (0..self.len()).all(|c| {
            bits::ones(self.below[c]).all(|b| bits::is_subset(self.below[b], self.below[c]))
        })
    }

    /// Incomparability (or equality) is transitive.
    pub fn is_ranked(&self) -> bool {
        let n = self.len();
        let incomparable: Vec<u64> = (0..n)
            .map(|a| {
                let above: u64 = (0..n)
                    .filter(|&b| self.precedes(a, b))
                    .fold(0, |acc, b| acc | 1 << b);
                self.full() & !(self.below[a] | above)
            })
            .collect();
        (0..n).all(|a| {
            bits::ones(incomparable[a])
                .all(|b| bits::is_subset(incomparable[b], incomparable[a]))
        })
    }

    /// Serialised as `{"carrier": [...], "edges": [[from, to], ...]}`.
    pub fn to_json(&self) -> Value {
        let edges: Vec<Value> = self
            .edges()
            .into_iter()
            .map(|(a, b)| json!([self.labels[a], self.labels[b]]))
            .collect();
        json!({ "carrier": self.labels, "edges": edges })
    }

    /// Edges may name points by label or by index.
    pub fn from_json(v: &Value) -> Result<Self, PrefError> {
        let carrier = v
            .get("carrier")
            .and_then(Value::as_array)
            .ok_or_else(|| PrefError::Invalid("relation needs a 'carrier' array".into()))?;
        let labels: Vec<String> = carrier
            .iter()
            .map(|c| match c {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(PrefError::Invalid("carrier ids must be strings or numbers".into())),
            })
            .collect::<Result<_, _>>()?;
        let mut r = Self::empty(labels)?;
        let resolve = |p: &Value, r: &PreferenceRelation| -> Result<usize, PrefError> {
            match p {
                Value::String(s) => r
                    .labels
                    .iter()
                    .position(|l| l == s)
                    .ok_or_else(|| PrefError::Invalid(format!("unknown point '{s}'"))),
                Value::Number(n) => {
                    let key = n.to_string();
                    if let Some(i) = r.labels.iter().position(|l| *l == key) {
                        return Ok(i);
                    }
                    n.as_u64()
                        .map(|i| i as usize)
                        .filter(|&i| i < r.len())
                        .ok_or_else(|| PrefError::Invalid(format!("bad point index {n}")))
                }
                _ => Err(PrefError::Invalid("edge endpoints must be ids".into())),
            }
        };
        if let Some(edges) = v.get("edges") {
            let edges = edges
                .as_array()
                .ok_or_else(|| PrefError::Invalid("'edges' must be an array".into()))?;
            for e in edges {
                let pair = e
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| PrefError::Invalid("each edge is a [from, to] pair".into()))?;
                let a = resolve(&pair[0], &r)?;
                let b = resolve(&pair[1], &r)?;
                r.add_edge(a, b)?;
            }
        }
        Ok(r)
    }
}

/// One factor of a product: a block of variables and its value set. The
/// points are all valuations, first variable most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    lang: Language,
    values: ValueSet,
    points: Vec<Model>,
    labels: Vec<String>,
    abstract_points: bool,
}

impl Block {
    pub fn new(lang: Language, values: ValueSet) -> Result<Self, PrefError> {
        let set = ModelSet::full(lang.clone(), values.clone())?;
        if set.len() > 64 {
            return Err(PrefError::TooLarge(set.len()));
        }
        let points: Vec<Model> = set.iter().cloned().collect();
        let labels = points.iter().map(|m| m.render(&lang, &values)).collect();
        Ok(Block {
            lang,
            values,
            points,
            labels,
            abstract_points: false,
        })
    }

    pub fn two_valued(vars: &[&str]) -> Result<Self, PrefError> {
        Block::new(Language::new(vars.iter().copied())?, ValueSet::two_valued())
    }

    /// Block of abstract points: one variable ranging over `labels`.
    pub fn abstract_points(name: &str, labels: Vec<String>) -> Result<Self, PrefError> {
        let values = ValueSet::new(labels.clone())?;
        let lang = Language::new([name])?;
        let points = (0..labels.len() as u8).map(|v| Model(vec![v])).collect();
        Ok(Block {
            lang,
            values,
            points,
            labels,
            abstract_points: true,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn language(&self) -> &Language {
        &self.lang
    }

    pub fn value_set(&self) -> &ValueSet {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &Model {
        &self.points[i]
    }

    fn index_of(&self, m: &Model) -> usize {
        let k = self.values.len();
        m.values().iter().fold(0, |acc, &v| acc * k + v as usize)
    }
}

/// How the relation on a product is obtained from the block relations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "combinator", rename_all = "lowercase")]
pub enum Combinator {
    /// `σ ≺ τ` iff every block weakly improves and some block strictly.
    Set,
    /// More blocks improve than worsen.
    Counting,
    /// Improving blocks outweigh worsening ones.
    Weighted {
        #[serde(serialize_with = "ser_weights")]
        weights: Vec<Ratio<i64>>,
    },
    /// Blocks in `main` decide; on equality there the rest decide.
    Lex { main: u64 },
    /// Blocks outside `minor` decide; `minor` parts must be equal.
    Forget { minor: u64 },
    /// Relations supplied directly for each block set.
    Explicit,
}

fn ser_weights<S: serde::Serializer>(w: &[Ratio<i64>], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<[i64; 2]> = w.iter().map(|r| [*r.numer(), *r.denom()]).collect();
    v.serialize(s)
}

/// Product of blocks with a relation on every nonempty sub-product. Bit `i`
/// of a block mask selects block `i`; points of a sub-product are indexed in
/// mixed radix with the lowest selected block most significant.
#[derive(Clone, Debug)]
pub struct ProductStructure {
    blocks: Vec<Block>,
    relations: BTreeMap<u64, PreferenceRelation>,
    combinator: Combinator,
}

impl ProductStructure {
    fn check_blocks(blocks: &[Block]) -> Result<(), PrefError> {
        if blocks.is_empty() || blocks.len() > 16 {
            return Err(PrefError::Invalid("a product needs 1 to 16 blocks".into()));
        }
        let mut lang = Language::empty();
        for b in blocks {
            lang = lang.disjoint_union(&b.lang).map_err(|_| PrefError::Overlap)?;
        }
        let size: usize = blocks.iter().map(Block::len).product();
        if size > 64 {
            return Err(PrefError::TooLarge(size));
        }
        Ok(())
    }

    /// Relations supplied per block set. Every block set queried later must
    /// be present; the full product is mandatory.
    pub fn explicit(
        blocks: Vec<Block>,
        relations: BTreeMap<u64, PreferenceRelation>,
    ) -> Result<Self, PrefError> {
        Self::check_blocks(&blocks)?;
        let mut ps = ProductStructure {
            blocks,
            relations: BTreeMap::new(),
            combinator: Combinator::Explicit,
        };
        let all = ps.all_blocks();
        if !relations.contains_key(&all) {
            return Err(PrefError::MissingRelation(all));
        }
        for (&mask, r) in &relations {
            if mask == 0 || mask & !all != 0 {
                return Err(PrefError::Invalid(format!("bad block set {mask:#b}")));
            }
            if r.len() != ps.sub_len(mask) {
                return Err(PrefError::Mismatch(format!(
                    "relation for {mask:#b} has {} points, sub-product has {}",
                    r.len(),
                    ps.sub_len(mask)
                )));
            }
        }
        ps.relations = relations;
        Ok(ps)
    }

    /// Builds every sub-product relation from the block relations.
    pub fn combine(
        blocks: Vec<Block>,
        components: Vec<PreferenceRelation>,
        combinator: Combinator,
    ) -> Result<Self, PrefError> {
        Self::check_blocks(&blocks)?;
        if components.len() != blocks.len() {
            return Err(PrefError::Mismatch(format!(
                "{} component relations for {} blocks",
                components.len(),
                blocks.len()
            )));
        }
        for (b, r) in blocks.iter().zip(&components) {
            if b.len() != r.len() {
                return Err(PrefError::Mismatch(
                    "component relation does not match its block".into(),
                ));
            }
        }
        let k = blocks.len();
        let all = bits::full(k);
        match &combinator {
            Combinator::Weighted { weights } => {
                if weights.len() != k {
                    return Err(PrefError::Mismatch(format!(
                        "{} weights for {k} blocks",
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| *w <= Ratio::zero()) {
                    return Err(PrefError::Invalid("weights must be positive".into()));
                }
            }
            Combinator::Lex { main } if *main & !all != 0 => {
                return Err(PrefError::Invalid("main blocks out of range".into()))
            }
            Combinator::Forget { minor } if *minor & !all != 0 => {
                return Err(PrefError::Invalid("minor blocks out of range".into()))
            }
            Combinator::Explicit => {
                return Err(PrefError::Invalid(
                    "use ProductStructure::explicit for supplied relations".into(),
                ))
            }
            _ => {}
        }
        let mut ps = ProductStructure {
            blocks,
            relations: BTreeMap::new(),
            combinator,
        };
        for mask in bits::nonempty_submasks(all) {
            let r = ps.compose(mask, &components)?;
            ps.relations.insert(mask, r);
        }
        Ok(ps)
    }

    pub fn set_variant(blocks: Vec<Block>, components: Vec<PreferenceRelation>) -> Result<Self, PrefError> {
        Self::combine(blocks, components, Combinator::Set)
    }

    pub fn counting(blocks: Vec<Block>, components: Vec<PreferenceRelation>) -> Result<Self, PrefError> {
        Self::combine(blocks, components, Combinator::Counting)
    }

    pub fn weighted(
        blocks: Vec<Block>,
        components: Vec<PreferenceRelation>,
        weights: Vec<Ratio<i64>>,
    ) -> Result<Self, PrefError> {
        Self::combine(blocks, components, Combinator::Weighted { weights })
    }

    /// Two-block lexicographic product, block 0 having precedence.
    pub fn lexicographic(main: (Block, PreferenceRelation), minor: (Block, PreferenceRelation)) -> Result<Self, PrefError> {
        Self::combine(vec![main.0, minor.0], vec![main.1, minor.1], Combinator::Lex { main: 1 })
    }

    /// Two-block product forgetting the order of block 1.
    pub fn forget(main: (Block, PreferenceRelation), minor: (Block, PreferenceRelation)) -> Result<Self, PrefError> {
        Self::combine(vec![main.0, minor.0], vec![main.1, minor.1], Combinator::Forget { minor: 2 })
    }

    fn compose(&self, mask: u64, comps: &[PreferenceRelation]) -> Result<PreferenceRelation, PrefError> {
        let selected: Vec<usize> = bits::ones(mask).collect();
        let labels = self.sub_labels(mask);
        let parts: Vec<Vec<usize>> = (0..labels.len()).map(|i| self.decompose(mask, i)).collect();
        // Per position: 0 equal, 1 improves (s below t), 2 worsens, 3 incomparable.
        let cmp = |s: &[usize], t: &[usize], k: usize| -> u8 {
            let r = &comps[selected[k]];
            if s[k] == t[k] {
                0
            } else if r.precedes(s[k], t[k]) {
                1
            } else if r.precedes(t[k], s[k]) {
                2
            } else {
                3
            }
        };
        let set_variant = |s: &[usize], t: &[usize], which: &dyn Fn(usize) -> bool| -> bool {
            let mut strict = false;
            for (k, &blk) in selected.iter().enumerate() {
                if !which(blk) {
                    continue;
                }
                match cmp(s, t, k) {
                    0 => {}
                    1 => strict = true,
                    _ => return false,
                }
            }
            strict
        };
        let equal_on = |s: &[usize], t: &[usize], which: &dyn Fn(usize) -> bool| -> bool {
            (0..selected.len()).all(|k| !which(selected[k]) || s[k] == t[k])
        };
        let lt = |a: usize, b: usize| -> bool {
            let (s, t) = (&parts[a], &parts[b]);
            match &self.combinator {
                Combinator::Set => set_variant(s, t, &|_| true),
                Combinator::Counting => {
                    let (mut up, mut down) = (0, 0);
                    for k in 0..selected.len() {
                        match cmp(s, t, k) {
                            1 => up += 1,
                            2 => down += 1,
                            _ => {}
                        }
                    }
                    up > down
                }
                Combinator::Weighted { weights } => {
                    let (mut up, mut down) = (Ratio::zero(), Ratio::zero());
                    for k in 0..selected.len() {
                        match cmp(s, t, k) {
                            1 => up += weights[selected[k]],
                            2 => down += weights[selected[k]],
                            _ => {}
                        }
                    }
                    up > down
                }
                Combinator::Lex { main } => {
                    let is_main = |b: usize| bits::contains(*main, b);
                    if mask & main == 0 {
                        set_variant(s, t, &|_| true)
                    } else if equal_on(s, t, &is_main) {
                        set_variant(s, t, &|b| !is_main(b))
                    } else {
                        set_variant(s, t, &is_main)
                    }
                }
                Combinator::Forget { minor } => {
                    let is_minor = |b: usize| bits::contains(*minor, b);
                    equal_on(s, t, &is_minor) && set_variant(s, t, &|b| !is_minor(b))
                }
                Combinator::Explicit => unreachable!(),
            }
        };
        PreferenceRelation::from_fn(labels, lt)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn combinator(&self) -> &Combinator {
        &self.combinator
    }

    pub fn all_blocks(&self) -> u64 {
        bits::full(self.blocks.len())
    }

    /// Number of points of the sub-product selected by `mask`.
    pub fn sub_len(&self, mask: u64) -> usize {
        bits::ones(mask).map(|b| self.blocks[b].len()).product()
    }

    pub fn len(&self) -> usize {
        self.sub_len(self.all_blocks())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn relation(&self, mask: u64) -> Result<&PreferenceRelation, PrefError> {
        self.relations
            .get(&mask)
            .ok_or(PrefError::MissingRelation(mask))
    }

    pub fn composed(&self) -> &PreferenceRelation {
        &self.relations[&self.all_blocks()]
    }

    pub fn relations(&self) -> &BTreeMap<u64, PreferenceRelation> {
        &self.relations
    }

    /// Per-block point indices of sub-product point `idx`.
    pub fn decompose(&self, mask: u64, mut idx: usize) -> Vec<usize> {
        let sel: Vec<usize> = bits::ones(mask).collect();
        let mut out = vec![0; sel.len()];
        for (k, &b) in sel.iter().enumerate().rev() {
            let n = self.blocks[b].len();
            out[k] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn compose_index(&self, mask: u64, parts: &[usize]) -> usize {
        bits::ones(mask)
            .zip(parts)
            .fold(0, |acc, (b, &p)| acc * self.blocks[b].len() + p)
    }

    /// Splits a point of `left ∪ right` into its `left` and `right` parts.
    pub fn split_index(&self, left: u64, right: u64, idx: usize) -> (usize, usize) {
        let whole = left | right;
        let parts = self.decompose(whole, idx);
        let (mut l, mut r) = (Vec::new(), Vec::new());
        for (b, p) in bits::ones(whole).zip(parts) {
            if bits::contains(left, b) {
                l.push(p);
            } else {
                r.push(p);
            }
        }
        (self.compose_index(left, &l), self.compose_index(right, &r))
    }

    /// Inverse of `split_index`.
    pub fn join_index(&self, left: u64, right: u64, li: usize, ri: usize) -> usize {
        let l = self.decompose(left, li);
        let r = self.decompose(right, ri);
        let (mut lk, mut rk) = (0, 0);
        let parts: Vec<usize> = bits::ones(left | right)
            .map(|b| {
                if bits::contains(left, b) {
                    lk += 1;
                    l[lk - 1]
                } else {
                    rk += 1;
                    r[rk - 1]
                }
            })
            .collect();
        self.compose_index(left | right, &parts)
    }

    /// Rectangle `x × y` inside the sub-product `left ∪ right`.
    pub fn rectangle(&self, left: u64, right: u64, x: u64, y: u64) -> u64 {
        let mut out = 0u64;
        for a in bits::ones(x) {
            for b in bits::ones(y) {
                out |= 1 << self.join_index(left, right, a, b);
            }
        }
        out
    }

    /// Projection of a point set of `left ∪ right` onto `left`.
    pub fn project(&self, left: u64, right: u64, s: u64) -> u64 {
        bits::ones(s).fold(0, |acc, i| acc | 1 << self.split_index(left, right, i).0)
    }

    pub fn sub_labels(&self, mask: u64) -> Vec<String> {
        (0..self.sub_len(mask))
            .map(|i| {
                let parts = self.decompose(mask, i);
                bits::ones(mask)
                    .zip(parts)
                    .map(|(b, p)| self.blocks[b].labels[p].clone())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    /// Variables of the sub-product, blocks in order.
    pub fn language(&self, mask: u64) -> Language {
        bits::ones(mask).fold(Language::empty(), |acc, b| {
            acc.disjoint_union(&self.blocks[b].lang)
                .expect("blocks are disjoint")
        })
    }

    fn uniform_values(&self, mask: u64) -> Result<ValueSet, PrefError> {
        let mut it = bits::ones(mask).map(|b| &self.blocks[b].values);
        let first = it.next().cloned().unwrap_or_else(ValueSet::two_valued);
        if it.any(|v| *v != first) {
            return Err(PrefError::Mismatch("blocks use different value sets".into()));
        }
        Ok(first)
    }

    /// Point index of a model over the sub-product's language.
    pub fn index_of_model(&self, mask: u64, m: &Model) -> usize {
        let mut offset = 0;
        let parts: Vec<usize> = bits::ones(mask)
            .map(|b| {
                let n = self.blocks[b].lang.len();
                let sub = Model(m.values()[offset..offset + n].to_vec());
                offset += n;
                self.blocks[b].index_of(&sub)
            })
            .collect();
        self.compose_index(mask, &parts)
    }

    pub fn mask_of_models(&self, mask: u64, s: &ModelSet) -> Result<u64, PrefError> {
        let lang = self.language(mask);
        let s = s.reorder(&lang)?;
        if *s.value_set() != self.uniform_values(mask)? {
            return Err(PrefError::Mismatch("value sets differ".into()));
        }
        Ok(s.iter()
            .fold(0, |acc, m| acc | 1 << self.index_of_model(mask, m)))
    }

    pub fn models_of_mask(&self, mask: u64, points: u64) -> Result<ModelSet, PrefError> {
        let values = self.uniform_values(mask)?;
        let members = bits::ones(points).map(|i| {
            let parts = self.decompose(mask, i);
            bits::ones(mask)
                .zip(parts)
                .fold(Model(Vec::new()), |acc, (b, p)| acc.concat(&self.blocks[b].points[p]))
        });
        Ok(ModelSet::new(self.language(mask), values, members)?)
    }

    /// μ of a model set over the sub-product `mask`.
    pub fn mu_models(&self, mask: u64, s: &ModelSet) -> Result<ModelSet, PrefError> {
        let x = self.mask_of_models(mask, s)?;
        let r = self.relation(mask)?;
        self.models_of_mask(mask, r.mu(x))
    }

    /// Ordered pairs of disjoint nonempty block sets, the lower one holding
    /// the lowest block of their union. With two blocks this is just `({0},{1})`.
    pub fn splits(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for whole in bits::nonempty_submasks(self.all_blocks()) {
            if whole.count_ones() < 2 {
                continue;
            }
            let low = whole & whole.wrapping_neg();
            for left in bits::nonempty_submasks(whole) {
                if left & low != 0 && left != whole {
                    out.push((left, whole & !left));
                }
            }
        }
        out
    }

    /// Splits whose three relations are all available.
    pub fn available_splits(&self) -> Vec<(u64, u64)> {
        self.splits()
            .into_iter()
            .filter(|&(l, r)| {
                self.relations.contains_key(&l)
                    && self.relations.contains_key(&r)
                    && self.relations.contains_key(&(l | r))
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .map(|b| {
                if b.abstract_points {
                    json!({ "name": b.lang.vars()[0], "points": b.labels })
                } else if b.values == ValueSet::two_valued() {
                    json!({ "vars": b.lang.vars() })
                } else {
                    json!({ "vars": b.lang.vars(), "values": b.values.labels() })
                }
            })
            .collect();
        let relations: serde_json::Map<String, Value> = self
            .relations
            .iter()
            .map(|(m, r)| (m.to_string(), r.to_json()))
            .collect();
        let mut v = json!({ "blocks": blocks, "relations": relations });
        if self.combinator != Combinator::Explicit {
            let comps: Vec<Value> = (0..self.blocks.len())
                .map(|b| self.relations[&(1 << b)].to_json())
                .collect();
            v["components"] = Value::Array(comps);
        }
        if let Value::Object(c) = serde_json::to_value(&self.combinator).expect("serialisable") {
            v.as_object_mut().expect("object").extend(c);
        }
        v
    }

    /// Reads `{"blocks": [...], "combinator": ..., "components": [...]}` or,
    /// for explicit structures, `"relations": {"<block mask>": relation}`.
    pub fn from_json(v: &Value) -> Result<Self, PrefError> {
        let blocks_v = v
            .get("blocks")
            .and_then(Value::as_array)
            .ok_or_else(|| PrefError::Invalid("product needs a 'blocks' array".into()))?;
        let mut blocks = Vec::new();
        for (i, b) in blocks_v.iter().enumerate() {
            if let Some(points) = b.get("points") {
                let labels: Vec<String> = serde_json::from_value(points.clone())
                    .map_err(|e| PrefError::Invalid(format!("block points: {e}")))?;
                let name = b
                    .get("name")
                    .and_then(Value::as_str)
                    .map_or_else(|| format!("b{i}"), str::to_string);
                blocks.push(Block::abstract_points(&name, labels)?);
                continue;
            }
            let vars: Vec<String> = b
                .get("vars")
                .map(|x| serde_json::from_value(x.clone()))
                .transpose()
                .map_err(|e| PrefError::Invalid(format!("block vars: {e}")))?
                .ok_or_else(|| PrefError::Invalid("block needs 'vars' or 'points'".into()))?;
            let values = match b.get("values") {
                Some(x) => ValueSet::new(
                    serde_json::from_value::<Vec<String>>(x.clone())
                        .map_err(|e| PrefError::Invalid(format!("block values: {e}")))?,
                )?,
                None => ValueSet::two_valued(),
            };
            blocks.push(Block::new(Language::new(vars)?, values)?);
        }
        let name = v.get("combinator").and_then(Value::as_str).unwrap_or("explicit");
        let block_mask = |key: &str| -> Result<u64, PrefError> {
            let list: Vec<usize> = v
                .get(key)
                .map(|x| serde_json::from_value(x.clone()))
                .transpose()
                .map_err(|e| PrefError::Invalid(format!("{key}: {e}")))?
                .ok_or_else(|| PrefError::Invalid(format!("combinator needs '{key}'")))?;
            Ok(list.iter().fold(0, |acc, &b| acc | 1 << b))
        };
        if name == "explicit" {
            let rels = v
                .get("relations")
                .and_then(Value::as_object)
                .ok_or_else(|| PrefError::Invalid("explicit product needs 'relations'".into()))?;
            let mut map = BTreeMap::new();
            for (k, r) in rels {
                let mask: u64 = k
                    .parse()
                    .map_err(|_| PrefError::Invalid(format!("bad block mask '{k}'")))?;
                map.insert(mask, PreferenceRelation::from_json(r)?);
            }
            return Self::explicit(blocks, map);
        }
        let comps_v = v
            .get("components")
            .and_then(Value::as_array)
            .ok_or_else(|| PrefError::Invalid("combined product needs 'components'".into()))?;
        let mut comps = Vec::new();
        for (b, c) in blocks.iter().zip(comps_v) {
            let mut r = PreferenceRelation::from_json(c)?;
            if r.labels() != b.labels() {
                if r.len() != b.len() {
                    return Err(PrefError::Mismatch("component carrier does not match block".into()));
                }
                r.labels = b.labels.clone();
            }
            comps.push(r);
        }
        let combinator = match name {
            "set" => Combinator::Set,
            "counting" => Combinator::Counting,
            "weighted" => {
                let w: Vec<[i64; 2]> = v
                    .get("weights")
                    .map(|x| serde_json::from_value(x.clone()))
                    .transpose()
                    .map_err(|e| PrefError::Invalid(format!("weights: {e}")))?
                    .ok_or_else(|| PrefError::Invalid("weighted needs 'weights'".into()))?;
                if w.iter().any(|p| p[1] == 0) {
                    return Err(PrefError::Invalid("zero weight denominator".into()));
                }
                Combinator::Weighted {
                    weights: w.iter().map(|p| Ratio::new(p[0], p[1])).collect(),
                }
            }
            "lex" => Combinator::Lex { main: block_mask("main")? },
            "forget" => Combinator::Forget { minor: block_mask("minor")? },
            other => return Err(PrefError::Invalid(format!("unknown combinator '{other}'"))),
        };
        Self::combine(blocks, comps, combinator)
    }
}

/// Instance of a GH condition failing: the two component pairs and the split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GhWitness {
    pub left: u64,
    pub right: u64,
    /// `(σ, τ)` in the left factor.
    pub left_pair: (usize, usize),
    /// `(σ′, τ′)` in the right factor.
    pub right_pair: (usize, usize),
    pub labels: [String; 4],
    /// Which condition the quadruple breaks.
    pub condition: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GhReport {
    pub gh1: Verdict<GhWitness>,
    pub gh2: Verdict<GhWitness>,
}

impl GhReport {
    pub fn holds(&self) -> bool {
        self.gh1.holds() && self.gh2.holds()
    }
}

/// The GH antecedent: both components weakly improve, one strictly.
#[inline]
fn gh_premise(rl: &PreferenceRelation, rr: &PreferenceRelation, s: usize, t: usize, s2: usize, t2: usize) -> bool {
    rl.weakly_precedes(s, t)
        && rr.weakly_precedes(s2, t2)
        && (rl.precedes(s, t) || rr.precedes(s2, t2))
}

fn quadruples<F>(ps: &ProductStructure, left: u64, right: u64, f: F) -> Result<Option<GhWitness>, PrefError>
where
    F: Fn(&PreferenceRelation, &PreferenceRelation, bool, usize, usize, usize, usize) -> Option<&'static str> + Sync,
{
    if left & right != 0 {
        return Err(PrefError::Overlap);
    }
    let rl = ps.relation(left)?;
    let rr = ps.relation(right)?;
    let rp = ps.relation(left | right)?;
    let (nl, nr) = (rl.len(), rr.len());
    let hit = (0..nl * nl).into_par_iter().find_map_first(|outer| {
        let (s, t) = (outer / nl, outer % nl);
        for s2 in 0..nr {
            for t2 in 0..nr {
                let a = ps.join_index(left, right, s, s2);
                let b = ps.join_index(left, right, t, t2);
                if let Some(cond) = f(rl, rr, rp.precedes(a, b), s, t, s2, t2) {
                    return Some(GhWitness {
                        left,
                        right,
                        left_pair: (s, t),
                        right_pair: (s2, t2),
                        labels: [
                            rl.label(s).to_string(),
                            rl.label(t).to_string(),
                            rr.label(s2).to_string(),
                            rr.label(t2).to_string(),
                        ],
                        condition: cond,
                    });
                }
            }
        }
        None
    });
    Ok(hit)
}

/// GH1 and GH2 for one split of the blocks.
pub fn check_gh_split(ps: &ProductStructure, left: u64, right: u64) -> Result<GhReport, PrefError> {
    let gh1 = quadruples(ps, left, right, |rl, rr, lt, s, t, s2, t2| {
        (gh_premise(rl, rr, s, t, s2, t2) && !lt).then_some("GH1")
    })?;
    let gh2 = quadruples(ps, left, right, |rl, rr, lt, s, t, s2, t2| {
        (lt && !rl.precedes(s, t) && !rr.precedes(s2, t2)).then_some("GH2")
    })?;
    Ok(GhReport {
        gh1: gh1.into(),
        gh2: gh2.into(),
    })
}

/// GH over every available split; the first failing split is reported.
pub fn check_gh(ps: &ProductStructure) -> Result<GhReport, PrefError> {
    let splits = ps.available_splits();
    if splits.is_empty() {
        return Err(PrefError::Invalid("structure has no two-factor split".into()));
    }
    let mut gh1 = Verdict::Holds;
    let mut gh2 = Verdict::Holds;
    for (l, r) in splits {
        let rep = check_gh_split(ps, l, r)?;
        if gh1.holds() {
            gh1 = rep.gh1;
        }
        if gh2.holds() {
            gh2 = rep.gh2;
        }
    }
    Ok(GhReport { gh1, gh2 })
}

/// The GH antecedent is equivalent to product preference.
pub fn check_gh_plus_split(ps: &ProductStructure, left: u64, right: u64) -> Result<Verdict<GhWitness>, PrefError> {
    Ok(quadruples(ps, left, right, |rl, rr, lt, s, t, s2, t2| {
        (gh_premise(rl, rr, s, t, s2, t2) != lt).then_some(if lt { "GH+ (converse)" } else { "GH+" })
    })?
    .into())
}

pub fn check_gh_plus(ps: &ProductStructure) -> Result<Verdict<GhWitness>, PrefError> {
    let splits = ps.available_splits();
    if splits.is_empty() {
        return Err(PrefError::Invalid("structure has no two-factor split".into()));
    }
    for (l, r) in splits {
        let v = check_gh_plus_split(ps, l, r)?;
        if !v.holds() {
            return Ok(v);
        }
    }
    Ok(Verdict::Holds)
}

/// Chain `0 ≺ 1 ≺ … ≺ n-1` (transitively closed).
pub fn chain(labels: Vec<String>) -> Result<PreferenceRelation, PrefError> {
    PreferenceRelation::from_fn(labels, |a, b| a < b)
}

/// Per-variable order `¬x ≺ x` on a block of two-valued variables, lifted
/// by the set variant: the dominance order on valuations.
pub fn dominance(block: &Block) -> Result<PreferenceRelation, PrefError> {
    let pts = &block.points;
    PreferenceRelation::from_fn(block.labels.clone(), |a, b| {
        let (x, y) = (pts[a].values(), pts[b].values());
        x.iter().zip(y).all(|(p, q)| p <= q) && x != y
    })
}
