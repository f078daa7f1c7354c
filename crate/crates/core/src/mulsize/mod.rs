//! Multiplicative laws: μ of products, size of rectangles, and the generic
//! independence harness.

pub mod oracle;
mod sat;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{self, is_subset, nonempty_submasks, submasks};
use crate::lang::{models_of, Formula, Language, LangError, ModelSet};
use crate::pref::{PrefError, PreferenceRelation, ProductStructure};
use crate::size::{RuleId, SizeError, SizeSystem};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MulError {
    #[error(transparent)]
    Pref(#[from] PrefError),
    #[error(transparent)]
    Size(#[from] SizeError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("unknown law '{0}'")]
    UnknownLaw(String),
    #[error("{0}")]
    TooLarge(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Independence harness

/// `f: D → C` with compositions on both sides and a way to split a composed
/// value back into its parts.
pub trait Independence {
    type D;
    type C: PartialEq;
    type Info;

    fn f(&self, d: &Self::D) -> Self::C;
    fn compose_d(&self, a: &Self::D, b: &Self::D) -> Self::D;
    fn compose_c(&self, a: &Self::C, b: &Self::C) -> Self::C;
    /// What `split` needs to know about how the parts were combined.
    fn info(&self, a: &Self::D, b: &Self::D) -> Self::Info;
    fn split(&self, c: &Self::C, info: &Self::Info) -> (Self::C, Self::C);
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndependenceFailure {
    pub sample: usize,
    /// `"composition"` or `"recovery"`.
    pub kind: &'static str,
}

/// Composition commutes with `f`, and the parts are recoverable, on every sample.
pub fn check_independence<I: Independence>(
    inst: &I,
    samples: &[(I::D, I::D)],
) -> Verdict<IndependenceFailure> {
    Verdict::first_failure(samples.iter().enumerate().map(|(i, (a, b))| {
        let (fa, fb) = (inst.f(a), inst.f(b));
        let whole = inst.f(&inst.compose_d(a, b));
        if whole != inst.compose_c(&fa, &fb) {
            return Some(IndependenceFailure { sample: i, kind: "composition" });
        }
        let (ra, rb) = inst.split(&whole, &inst.info(a, b));
        (ra != fa || rb != fb).then_some(IndependenceFailure { sample: i, kind: "recovery" })
    }))
}

/// A formula together with the fragment it is read in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub formula: Formula,
    pub lang: Language,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} over {}", self.formula, self.lang)
    }
}

/// Model sets of formulas, conjunction on the left, product on the right,
/// restriction to recover the parts.
pub struct Classical;

impl Independence for Classical {
    type D = Fragment;
    type C = ModelSet;
    type Info = (Language, Language);

    fn f(&self, d: &Fragment) -> ModelSet {
        models_of(&d.formula, &d.lang).expect("formula lies in its fragment")
    }

    fn compose_d(&self, a: &Fragment, b: &Fragment) -> Fragment {
        Fragment {
            formula: Formula::and(a.formula.clone(), b.formula.clone()),
            lang: a.lang.disjoint_union(&b.lang).expect("fragments are disjoint"),
        }
    }

    fn compose_c(&self, a: &ModelSet, b: &ModelSet) -> ModelSet {
        a.product(b).expect("fragments are disjoint")
    }

    fn info(&self, a: &Fragment, b: &Fragment) -> (Language, Language) {
        (a.lang.clone(), b.lang.clone())
    }

    fn split(&self, c: &ModelSet, info: &(Language, Language)) -> (ModelSet, ModelSet) {
        (
            c.restrict(&info.0).expect("sublanguage"),
            c.restrict(&info.1).expect("sublanguage"),
        )
    }
}

/// Strings under concatenation, `f` the identity.
pub struct Identity;

impl Independence for Identity {
    type D = String;
    type C = String;
    type Info = usize;

    fn f(&self, d: &String) -> String {
        d.clone()
    }

    fn compose_d(&self, a: &String, b: &String) -> String {
        format!("{a}{b}")
    }

    fn compose_c(&self, a: &String, b: &String) -> String {
        format!("{a}{b}")
    }

    fn info(&self, a: &String, _: &String) -> usize {
        a.len()
    }

    fn split(&self, c: &String, at: &usize) -> (String, String) {
        let (l, r) = c.split_at(*at);
        (l.to_string(), r.to_string())
    }
}

// ---------------------------------------------------------------------------
// μ of products

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MuWitness {
    pub left: u64,
    pub right: u64,
    pub x: u64,
    pub y: u64,
    /// Offending point of the sub-product `left ∪ right`.
    pub point: usize,
    pub rendered: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MuStar1Report {
    /// `μ(X × Y) ⊆ μ(X) × μ(Y)`.
    pub subset: Verdict<MuWitness>,
    /// `μ(X) × μ(Y) ⊆ μ(X × Y)`.
    pub superset: Verdict<MuWitness>,
}

impl MuStar1Report {
    pub fn holds(&self) -> bool {
        self.subset.holds() && self.superset.holds()
    }
}

/// `(μ*1)` over every available split and every pair of nonempty subsets.
pub fn check_mu_star_1(ps: &ProductStructure) -> Result<MuStar1Report, MulError> {
    check_mu_star_1_with(ps, |_, _, _, _| true)
}

/// `(μ*1)` restricted to the pairs `(X, Y)` accepted by `domain(left, right, X, Y)`.
pub fn check_mu_star_1_with<F>(ps: &ProductStructure, domain: F) -> Result<MuStar1Report, MulError>
where
    F: Fn(u64, u64, u64, u64) -> bool + Sync,
{
    let splits = ps.available_splits();
    if splits.is_empty() {
        return Err(PrefError::Invalid("structure has no two-factor split".into()).into());
    }
    let mut subset = Verdict::Holds;
    let mut superset = Verdict::Holds;
    for (left, right) in splits {
        let rl = ps.relation(left)?;
        let rr = ps.relation(right)?;
        let rp = ps.relation(left | right)?;
        let labels = ps.sub_labels(left | right);
        let xs: Vec<u64> = nonempty_submasks(rl.full()).collect();
        let ys: Vec<u64> = nonempty_submasks(rr.full()).collect();
        let diff = |want_subset: bool| {
            xs.par_iter().find_map_first(|&x| {
                ys.iter().find_map(|&y| {
                    if !domain(left, right, x, y) {
                        return None;
                    }
                    let m = rp.mu(ps.rectangle(left, right, x, y));
                    let p = ps.rectangle(left, right, rl.mu(x), rr.mu(y));
                    let bad = if want_subset { m & !p } else { p & !m };
                    (bad != 0).then(|| {
                        let point = bad.trailing_zeros() as usize;
                        let rendered = format!(
                            "X = {}, Y = {}: {} {} μ(X×Y) but {} μ(X)×μ(Y)",
                            bits::render(x, rl.labels()),
                            bits::render(y, rr.labels()),
                            labels[point],
                            if want_subset { "∈" } else { "∉" },
                            if want_subset { "∉" } else { "∈" },
                        );
                        MuWitness { left, right, x, y, point, rendered }
                    })
                })
            })
        };
        if subset.holds() {
            subset = diff(true).into();
        }
        if superset.holds() {
            superset = diff(false).into();
        }
    }
    Ok(MuStar1Report { subset, superset })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mu2Witness {
    pub sigma: u64,
    /// Point of the `X′` factor minimal in `Σ↾X′` but outside `μ(Σ)↾X′`.
    pub point: usize,
    pub rendered: String,
}

/// `(μ*2)`: for every nonempty `Σ` of the full product,
/// `μ(Σ↾X′) ⊆ μ(Σ)↾X′`. Taking `Γ = μ(Σ)` is the strongest instance.
pub fn check_mu_star_2(ps: &ProductStructure, x_prime: u64) -> Result<Verdict<Mu2Witness>, MulError> {
    let all = ps.all_blocks();
    if x_prime == 0 || x_prime & !all != 0 || x_prime == all {
        return Err(MulError::Invalid("X′ must be a proper nonempty block set".into()));
    }
    let rest = all & !x_prime;
    let n = ps.len();
    if n > 20 {
        return Err(MulError::TooLarge(format!("{n} points; (μ*2) enumerates every subset")));
    }
    let rp = ps.relation(all)?;
    let rx = ps.relation(x_prime)?;
    let (lo, hi) = if x_prime & 1 != 0 { (x_prime, rest) } else { (rest, x_prime) };
    // Projection of each product point onto X′.
    let proj: Vec<usize> = (0..n)
        .map(|i| {
            let (a, b) = ps.split_index(lo, hi, i);
            if lo == x_prime { a } else { b }
        })
        .collect();
    let restrict = |s: u64| bits::ones(s).fold(0u64, |acc, i| acc | 1 << proj[i]);
    let labels = ps.composed().labels();
    let hit = (1..=bits::full(n)).into_par_iter().find_map_first(|sigma| {
        let bad = rx.mu(restrict(sigma)) & !restrict(rp.mu(sigma));
        (bad != 0).then(|| {
            let point = bad.trailing_zeros() as usize;
            Mu2Witness {
                sigma,
                point,
                rendered: format!(
                    "Σ = {}: {} is minimal in Σ↾X′ but not in μ(Σ)↾X′",
                    bits::render(sigma, labels),
                    rx.label(point)
                ),
            }
        })
    });
    Ok(hit.into())
}

/// σρ ≺ τρ for one ρ forces σρ″ ≺ τρ″ for every ρ″ (and symmetrically on
/// the right factor).
pub fn check_independence_note(
    ps: &ProductStructure,
    left: u64,
    right: u64,
) -> Result<Verdict<[usize; 4]>, MulError> {
    let rp = ps.relation(left | right)?;
    let (nl, nr) = (ps.sub_len(left), ps.sub_len(right));
    let j = |a: usize, b: usize| ps.join_index(left, right, a, b);
    let left_side = (0..nl * nl).find_map(|o| {
        let (s, t) = (o / nl, o % nl);
        let row: Vec<bool> = (0..nr).map(|r| rp.precedes(j(s, r), j(t, r))).collect();
        let on = row.iter().position(|&b| b)?;
        let off = row.iter().position(|&b| !b)?;
        Some([s, t, on, off])
    });
    let right_side = || {
        (0..nr * nr).find_map(|o| {
            let (s, t) = (o / nr, o % nr);
            let col: Vec<bool> = (0..nl).map(|r| rp.precedes(j(r, s), j(r, t))).collect();
            let on = col.iter().position(|&b| b)?;
            let off = col.iter().position(|&b| !b)?;
            Some([on, off, s, t])
        })
    };
    Ok(left_side.or_else(right_side).into())
}

/// Ranked relations: when both `X` and `Y` meet `μ(X ∪ Y)`,
/// `μ(X ∪ Y) = μ(X) ∪ μ(Y)` and `μ(X) = μ(X ∪ Y) ∩ X`.
pub fn check_union_decomposition(r: &PreferenceRelation) -> Verdict<(u64, u64)> {
    let all: Vec<u64> = nonempty_submasks(r.full()).collect();
    all.iter()
        .find_map(|&x| {
            all.iter().find_map(|&y| {
                let m = r.mu(x | y);
                if m & x == 0 || m & y == 0 {
                    return None;
                }
                let ok = m == r.mu(x) | r.mu(y) && r.mu(x) == m & x && r.mu(y) == m & y;
                (!ok).then_some((x, y))
            })
        })
        .into()
}

// ---------------------------------------------------------------------------
// Size on products

/// Size systems on two factors and on their product; the product bases
/// include every rectangle of factor bases.
#[derive(Clone, Debug)]
pub struct ProductSizes {
    left: SizeSystem,
    right: SizeSystem,
    product: SizeSystem,
    join: Vec<Vec<usize>>,
    split: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RectWitness {
    pub law: String,
    pub sigma: (u64, u64),
    /// Rectangle sides, or for projection laws the projections of `gamma_set`.
    pub gamma: (u64, u64),
    pub gamma_set: Option<u64>,
    pub rendered: String,
}

impl ProductSizes {
    /// `join[a][b]` is the product point made of left point `a` and right point `b`.
    pub fn new(
        left: SizeSystem,
        right: SizeSystem,
        product: SizeSystem,
        join: Vec<Vec<usize>>,
    ) -> Result<Self, MulError> {
        let (nl, nr, np) = (left.labels().len(), right.labels().len(), product.labels().len());
        if join.len() != nl || join.iter().any(|r| r.len() != nr) || nl * nr != np {
            return Err(MulError::Invalid("join table does not match the universes".into()));
        }
        let mut split = vec![(usize::MAX, usize::MAX); np];
        for (a, row) in join.iter().enumerate() {
            for (b, &p) in row.iter().enumerate() {
                if p >= np || split[p].0 != usize::MAX {
                    return Err(MulError::Invalid("join table is not a bijection".into()));
                }
                split[p] = (a, b);
            }
        }
        Ok(ProductSizes { left, right, product, join, split })
    }

    /// Principal filters of a split: every nonempty subset of each factor,
    /// every nonempty rectangle of the product.
    pub fn from_structure(ps: &ProductStructure, left: u64, right: u64) -> Result<Self, MulError> {
        let rl = ps.relation(left)?;
        let rr = ps.relation(right)?;
        let rp = ps.relation(left | right)?;
        let join: Vec<Vec<usize>> = (0..rl.len())
            .map(|a| (0..rr.len()).map(|b| ps.join_index(left, right, a, b)).collect())
            .collect();
        let mut rects = Vec::new();
        for x in nonempty_submasks(rl.full()) {
            for y in nonempty_submasks(rr.full()) {
                rects.push(ps.rectangle(left, right, x, y));
            }
        }
        rects.sort_unstable();
        Self::new(
            SizeSystem::from_relation_all(rl)?,
            SizeSystem::from_relation_all(rr)?,
            SizeSystem::from_relation(rp, rects)?,
            join,
        )
    }

    pub fn left(&self) -> &SizeSystem {
        &self.left
    }

    pub fn right(&self) -> &SizeSystem {
        &self.right
    }

    pub fn product(&self) -> &SizeSystem {
        &self.product
    }

    pub fn rect(&self, x: u64, y: u64) -> u64 {
        let mut out = 0;
        for a in bits::ones(x) {
            for b in bits::ones(y) {
                out |= 1 << self.join[a][b];
            }
        }
        out
    }

    /// Projections of a product point set onto both factors.
    pub fn project(&self, s: u64) -> (u64, u64) {
        bits::ones(s).fold((0, 0), |(l, r), p| {
            let (a, b) = self.split[p];
            (l | 1 << a, r | 1 << b)
        })
    }

    /// Factor base pairs in canonical order; each rectangle must be a product base.
    fn base_pairs(&self, law: &str) -> Result<Vec<(u64, u64)>, MulError> {
        let mut out = Vec::new();
        let mut xs = self.left.bases().to_vec();
        let mut ys = self.right.bases().to_vec();
        xs.sort_unstable();
        ys.sort_unstable();
        for &x in &xs {
            for &y in &ys {
                let r = self.rect(x, y);
                if !self.product.is_base(r) {
                    return Err(SizeError::DomainNotClosed {
                        needed: self.product.render(r),
                        rule: law.to_string(),
                    }
                    .into());
                }
                out.push((x, y));
            }
        }
        Ok(out)
    }

    fn rect_witness(&self, law: &str, sigma: (u64, u64), gamma: (u64, u64), what: &str) -> RectWitness {
        RectWitness {
            law: law.to_string(),
            sigma,
            gamma,
            gamma_set: None,
            rendered: format!(
                "Σ₁ = {}, Σ₂ = {}, Γ₁ = {}, Γ₂ = {}: {what}",
                self.left.render(sigma.0),
                self.right.render(sigma.1),
                self.left.render(gamma.0),
                self.right.render(gamma.1),
            ),
        }
    }

    /// First rectangle `(Σ₁, Σ₂, Γ₁, Γ₂)` for which `bad` returns a message.
    fn scan<F>(&self, law: &str, bad: F) -> Result<Verdict<RectWitness>, MulError>
    where
        F: Fn(u64, u64, u64, u64) -> Result<Option<String>, SizeError> + Sync,
    {
        let pairs = self.base_pairs(law)?;
        let hit = pairs
            .par_iter()
            .map(|&(x, y)| -> Result<Option<RectWitness>, SizeError> {
                for g1 in submasks(x) {
                    for g2 in submasks(y) {
                        if let Some(what) = bad(x, y, g1, g2)? {
                            return Ok(Some(self.rect_witness(law, (x, y), (g1, g2), &what)));
                        }
                    }
                }
                Ok(None)
            })
            .find_map_first(|r| match r {
                Ok(None) => None,
                other => Some(other),
            });
        match hit {
            None => Ok(Verdict::Holds),
            Some(Ok(w)) => Ok(w.into()),
            Some(Err(e)) => Err(e.into()),
        }
    }

    /// `Γ₁ × Γ₂` small in `Σ₁ × Σ₂` iff `Γ₁` small in `Σ₁` or `Γ₂` small in `Σ₂`.
    pub fn check_s_times_s(&self) -> Result<Verdict<RectWitness>, MulError> {
        self.scan("s*s", |x, y, g1, g2| {
            let prod = self.product.is_small(self.rect(g1, g2), self.rect(x, y))?;
            let fac = self.left.is_small(g1, x)? || self.right.is_small(g2, y)?;
            Ok((prod != fac).then(|| {
                if prod {
                    "product small, neither factor small".to_string()
                } else {
                    "a factor is small, product is not".to_string()
                }
            }))
        })
    }

    /// The size form of `(μ*1)`: the core of every rectangle is the
    /// rectangle of the cores. The core of `X` is the intersection of its big
    /// subsets, i.e. `μ(X)` for principal filters.
    pub fn check_mu_star_1(&self) -> Result<Verdict<RectWitness>, MulError> {
        let pairs = self.base_pairs("μ*1")?;
        for (x, y) in pairs {
            let whole = self.product.core(self.rect(x, y))?;
            let parts = self.rect(self.left.core(x)?, self.right.core(y)?);
            if whole != parts {
                let (c1, c2) = (self.left.core(x)?, self.right.core(y)?);
                return Ok(Verdict::Fails(self.rect_witness(
                    "μ*1",
                    (x, y),
                    (c1, c2),
                    &format!("core of the rectangle is {}", self.product.render(whole)),
                )));
            }
        }
        Ok(Verdict::Holds)
    }

    /// `(Opt)`, `(iM)` and `(<ω*s)` on all three systems.
    pub fn preconditions_hold(&self) -> Result<bool, MulError> {
        for sys in [&self.left, &self.right, &self.product] {
            for rule in [RuleId::Opt, RuleId::IM, RuleId::IOmega] {
                if !sys.check_rule(rule)?.holds() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn check_law(&self, law: ProductLaw) -> Result<Verdict<RectWitness>, MulError> {
        use ProductLaw::*;
        let name = law.to_string();
        let (l, r, p) = (&self.left, &self.right, &self.product);
        match law {
            BigTimesOne | SmallTimesOne => {
                let small = law == SmallTimesOne;
                let test = move |s: &SizeSystem, a: u64, x: u64| -> Result<bool, SizeError> {
                    if small { s.is_small(a, x) } else { s.is_big(a, x) }
                };
                let word = if small { "small" } else { "big" };
                self.scan(&name, move |x, y, g1, g2| {
                    let whole = self.rect(x, y);
                    if g2 == y && test(l, g1, x)? && !test(p, self.rect(g1, y), whole)? {
                        return Ok(Some(format!("Γ₁ {word}, Γ₁×Σ₂ not {word}")));
                    }
                    if g1 == x && test(r, g2, y)? && !test(p, self.rect(x, g2), whole)? {
                        return Ok(Some(format!("Γ₂ {word}, Σ₁×Γ₂ not {word}")));
                    }
                    Ok(None)
                })
            }
            SmallTimesAny => self.scan(&name, |x, y, g1, g2| {
                let prod = p.is_small(self.rect(g1, g2), self.rect(x, y))?;
                let fac = l.is_small(g1, x)? || r.is_small(g2, y)?;
                Ok((fac && !prod).then(|| "a factor is small, Γ₁×Γ₂ is not".to_string()))
            }),
            BigTimesBig => self.scan(&name, |x, y, g1, g2| {
                let ok = !(l.is_big(g1, x)? && r.is_big(g2, y)?)
                    || p.is_big(self.rect(g1, g2), self.rect(x, y))?;
                Ok((!ok).then(|| "both factors big, Γ₁×Γ₂ is not".to_string()))
            }),
            BigTimesMedium => self.scan(&name, |x, y, g1, g2| {
                let prod = p.is_mplus(self.rect(g1, g2), self.rect(x, y))?;
                if l.is_big(g1, x)? && r.is_mplus(g2, y)? && !prod {
                    return Ok(Some("Γ₁ big, Γ₂ not small, Γ₁×Γ₂ small".into()));
                }
                if l.is_mplus(g1, x)? && r.is_big(g2, y)? && !prod {
                    return Ok(Some("Γ₁ not small, Γ₂ big, Γ₁×Γ₂ small".into()));
                }
                Ok(None)
            }),
            MediumTimesMedium => self.scan(&name, |x, y, g1, g2| {
                let ok = !(l.is_mplus(g1, x)? && r.is_mplus(g2, y)?)
                    || p.is_mplus(self.rect(g1, g2), self.rect(x, y))?;
                Ok((!ok).then(|| "both factors not small, Γ₁×Γ₂ small".to_string()))
            }),
            ProjectionBig => self.check_projection_big(),
        }
    }

    /// Every big subset of a product base projects to big subsets of the
    /// factor bases. Arbitrary subsets are enumerated, so bases are capped
    /// at 20 points.
    fn check_projection_big(&self) -> Result<Verdict<RectWitness>, MulError> {
        let name = ProductLaw::ProjectionBig.to_string();
        let pairs = self.base_pairs(&name)?;
        for (x, y) in pairs {
            let whole = self.rect(x, y);
            if whole.count_ones() > 20 {
                return Err(MulError::TooLarge(format!(
                    "{name} enumerates subsets of a {}-point base",
                    whole.count_ones()
                )));
            }
            for g in submasks(whole) {
                if !self.product.is_big(g, whole)? {
                    continue;
                }
                let (g1, g2) = self.project(g);
                if !self.left.is_big(g1, x)? || !self.right.is_big(g2, y)? {
                    let mut w = self.rect_witness(&name, (x, y), (g1, g2), "big set with a projection that is not big");
                    w.gamma_set = Some(g);
                    w.rendered = format!("Γ = {}; {}", self.product.render(g), w.rendered);
                    return Ok(Verdict::Fails(w));
                }
            }
        }
        Ok(Verdict::Holds)
    }
}

/// Laws relating sizes of factors to sizes of rectangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProductLaw {
    BigTimesOne,
    SmallTimesOne,
    SmallTimesAny,
    BigTimesBig,
    BigTimesMedium,
    MediumTimesMedium,
    ProjectionBig,
}

impl ProductLaw {
    pub fn all() -> [ProductLaw; 7] {
        use ProductLaw::*;
        [
            BigTimesOne,
            SmallTimesOne,
            SmallTimesAny,
            BigTimesBig,
            BigTimesMedium,
            MediumTimesMedium,
            ProjectionBig,
        ]
    }

    pub fn schema(&self) -> &'static str {
        use ProductLaw::*;
        match self {
            BigTimesOne => "Γ₁ ∈ F(Σ₁) ⇒ Γ₁ × Σ₂ ∈ F(Σ₁ × Σ₂), and symmetrically",
            SmallTimesOne => "Γ₁ ∈ I(Σ₁) ⇒ Γ₁ × Σ₂ ∈ I(Σ₁ × Σ₂), and symmetrically",
            SmallTimesAny => "Γ₁ ∈ I(Σ₁) or Γ₂ ∈ I(Σ₂) ⇒ Γ₁ × Γ₂ ∈ I(Σ₁ × Σ₂)",
            BigTimesBig => "Γ₁ ∈ F(Σ₁), Γ₂ ∈ F(Σ₂) ⇒ Γ₁ × Γ₂ ∈ F(Σ₁ × Σ₂)",
            BigTimesMedium => "Γ₁ ∈ F(Σ₁), Γ₂ ∈ M+(Σ₂) ⇒ Γ₁ × Γ₂ ∈ M+(Σ₁ × Σ₂), and symmetrically",
            MediumTimesMedium => "Γ₁ ∈ M+(Σ₁), Γ₂ ∈ M+(Σ₂) ⇒ Γ₁ × Γ₂ ∈ M+(Σ₁ × Σ₂)",
            ProjectionBig => "Γ ∈ F(Σ₁ × Σ₂) ⇒ Γ↾Σ₁ ∈ F(Σ₁), Γ↾Σ₂ ∈ F(Σ₂)",
        }
    }
}

impl fmt::Display for ProductLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ProductLaw::*;
        f.write_str(match self {
            BigTimesOne => "b*1=>b",
            SmallTimesOne => "s*1=>s",
            SmallTimesAny => "s*x=>s",
            BigTimesBig => "b*b=>b",
            BigTimesMedium => "b*m=>m",
            MediumTimesMedium => "m*m=>m",
            ProjectionBig => "pr(b)=b",
        })
    }
}

impl FromStr for ProductLaw {
    type Err = MulError;

    fn from_str(s: &str) -> Result<Self, MulError> {
        let norm = s.replace(' ', "").replace('⇒', "=>");
        ProductLaw::all()
            .into_iter()
            .find(|l| l.to_string() == norm)
            .ok_or_else(|| MulError::UnknownLaw(s.to_string()))
    }
}

/// Runs a law by name.
pub fn check_product_size_laws(sys: &ProductSizes, law: &str) -> Result<Verdict<RectWitness>, MulError> {
    sys.check_law(law.parse()?)
}

// ---------------------------------------------------------------------------
// Small-or

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmallOrReport {
    pub product_small: bool,
    pub left_small: bool,
    pub right_small: bool,
    pub gh1: bool,
    pub gh2: bool,
    /// Under GH2: product small implies a factor small.
    pub part1: Verdict<String>,
    /// Under GH1: a factor small implies the product small.
    pub part2: Verdict<String>,
}

/// Every point of `gamma` has a strictly preferred point in `sigma`.
pub fn relationally_small(r: &PreferenceRelation, gamma: u64, sigma: u64) -> bool {
    bits::ones(gamma).all(|g| r.below(g) & sigma != 0)
}

/// One instance: `Γ ⊆ Σ` in the left factor, `Γ′ ⊆ Σ′` in the right. A
/// direction whose GH condition fails on the split holds vacuously.
pub fn check_small_or(
    ps: &ProductStructure,
    left: u64,
    right: u64,
    (sigma, gamma): (u64, u64),
    (sigma2, gamma2): (u64, u64),
) -> Result<SmallOrReport, MulError> {
    if !is_subset(gamma, sigma) || !is_subset(gamma2, sigma2) {
        return Err(MulError::Invalid("Γ must lie inside Σ".into()));
    }
    let gh = crate::pref::check_gh_split(ps, left, right)?;
    let rl = ps.relation(left)?;
    let rr = ps.relation(right)?;
    let rp = ps.relation(left | right)?;
    let product_small = relationally_small(
        rp,
        ps.rectangle(left, right, gamma, gamma2),
        ps.rectangle(left, right, sigma, sigma2),
    );
    let left_small = relationally_small(rl, gamma, sigma);
    let right_small = relationally_small(rr, gamma2, sigma2);
    let (gh1, gh2) = (gh.gh1.holds(), gh.gh2.holds());
    let part1 = (gh2 && product_small && !left_small && !right_small)
        .then(|| "Γ×Γ′ small but neither factor small".to_string());
    let part2 = (gh1 && (left_small || right_small) && !product_small)
        .then(|| "a factor small but Γ×Γ′ not small".to_string());
    Ok(SmallOrReport {
        product_small,
        left_small,
        right_small,
        gh1,
        gh2,
        part1: part1.into(),
        part2: part2.into(),
    })
}

/// One verdict per direction of the small-or-all law.
pub type SmallOrAll = (Verdict<[u64; 4]>, Verdict<[u64; 4]>);

/// Every `Γ ⊆ Σ`, `Γ′ ⊆ Σ′`; the first failing instance per direction.
pub fn check_small_or_all(
    ps: &ProductStructure,
    left: u64,
    right: u64,
) -> Result<SmallOrAll, MulError> {
    let (nl, nr) = (ps.sub_len(left), ps.sub_len(right));
    let (mut p1, mut p2) = (Verdict::Holds, Verdict::Holds);
    for s in nonempty_submasks(bits::full(nl)) {
        for g in submasks(s) {
            for s2 in nonempty_submasks(bits::full(nr)) {
                for g2 in submasks(s2) {
                    let rep = check_small_or(ps, left, right, (s, g), (s2, g2))?;
                    if p1.holds() && !rep.part1.holds() {
                        p1 = Verdict::Fails([s, g, s2, g2]);
                    }
                    if p2.holds() && !rep.part2.holds() {
                        p2 = Verdict::Fails([s, g, s2, g2]);
                    }
                }
            }
        }
    }
    Ok((p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_formula;
    use crate::pref::{chain, Block, Combinator};
    use std::collections::BTreeMap;

    fn two_chains(comb: Combinator) -> ProductStructure {
        let b0 = Block::abstract_points("a", vec!["a0".into(), "a1".into()]).unwrap();
        let b1 = Block::abstract_points("b", vec!["b0".into(), "b1".into()]).unwrap();
        let r0 = chain(vec!["a0".into(), "a1".into()]).unwrap();
        let r1 = chain(vec!["b0".into(), "b1".into()]).unwrap();
        ProductStructure::combine(vec![b0, b1], vec![r0, r1], comb).unwrap()
    }

    #[test]
    fn classical_and_identity_instances() {
        let l1 = Language::new(["a"]).unwrap();
        let l2 = Language::new(["b"]).unwrap();
        let frag = |t: &str, l: &Language| Fragment {
            formula: parse_formula(t, l).unwrap(),
            lang: l.clone(),
        };
        let good = vec![(frag("a", &l1), frag("!b", &l2)), (frag("a | !a", &l1), frag("b", &l2))];
        assert!(check_independence(&Classical, &good).holds());
        let bad = vec![(frag("a & !a", &l1), frag("b", &l2))];
        assert_eq!(
            check_independence(&Classical, &bad).witness().unwrap().kind,
            "recovery"
        );
        let s = vec![("ab".to_string(), "c".to_string())];
        assert!(check_independence(&Identity, &s).holds());
    }

    #[test]
    fn set_variant_satisfies_mu_star_1() {
        let ps = two_chains(Combinator::Set);
        assert!(check_mu_star_1(&ps).unwrap().holds());
        assert!(check_mu_star_2(&ps, 0b01).unwrap().holds());
        assert!(check_independence_note(&ps, 1, 2).unwrap().holds());
    }

    #[test]
    fn empty_relation_collapses_mu() {
        let b0 = Block::abstract_points("a", vec!["a0".into(), "a1".into()]).unwrap();
        let b1 = Block::abstract_points("b", vec!["b0".into()]).unwrap();
        let mut rels = BTreeMap::new();
        rels.insert(1, chain(vec!["a0".into(), "a1".into()]).unwrap());
        rels.insert(2, PreferenceRelation::unlabelled(1).unwrap());
        rels.insert(3, PreferenceRelation::unlabelled(2).unwrap());
        let ps = ProductStructure::explicit(vec![b0, b1], rels).unwrap();
        let rep = check_mu_star_1(&ps).unwrap();
        assert!(!rep.subset.holds());
        assert!(rep.superset.holds());
    }

    #[test]
    fn sizes_of_set_variant() {
        let ps = two_chains(Combinator::Set);
        let sz = ProductSizes::from_structure(&ps, 1, 2).unwrap();
        assert!(sz.preconditions_hold().unwrap());
        assert!(sz.check_s_times_s().unwrap().holds());
        assert!(sz.check_mu_star_1().unwrap().holds());
        for law in ProductLaw::all() {
            assert!(sz.check_law(law).unwrap().holds(), "{law}");
        }
    }

    #[test]
    fn law_names_round_trip() {
        for law in ProductLaw::all() {
            assert_eq!(law.to_string().parse::<ProductLaw>().unwrap(), law);
        }
        assert_eq!("b*m ⇒ m".parse::<ProductLaw>().unwrap(), ProductLaw::BigTimesMedium);
        assert!(matches!("x*y".parse::<ProductLaw>(), Err(MulError::UnknownLaw(_))));
    }

    #[test]
    fn small_or_vacuous_without_edges() {
        let b0 = Block::abstract_points("a", vec!["a0".into(), "a1".into()]).unwrap();
        let b1 = Block::abstract_points("b", vec!["b0".into(), "b1".into()]).unwrap();
        let e = PreferenceRelation::unlabelled(2).unwrap();
        let ps = ProductStructure::set_variant(vec![b0, b1], vec![e.clone(), e]).unwrap();
        let rep = check_small_or(&ps, 1, 2, (0b11, 0b11), (0b11, 0b11)).unwrap();
        assert!(!rep.product_small && !rep.left_small && !rep.right_small);
        assert!(rep.part1.holds() && rep.part2.holds());
    }
}
