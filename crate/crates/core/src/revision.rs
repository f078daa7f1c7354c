//! Distance-based revision: the bar operator `X | Y`, `T * φ`, generalized
//! Hamming distances and their product factorization.

use num_rational::Ratio;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bits::{self, is_subset};
use crate::consequence::{mask_of, theory_of, ConsError};
use crate::lang::{Formula, LangError, Language, Model, ModelSet, ValueSet};
use crate::verdict::Verdict;

pub type Dist = Ratio<i64>;

/// Distances over more variables do not fit the point masks.
pub const MAX_VARS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RevError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Cons(#[from] ConsError),
    #[error("invalid distance: {0}")]
    Distance(String),
    #[error("languages differ: {0}")]
    Mismatch(String),
    #[error("languages overlap")]
    Overlap,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("block constraint violated: {0}")]
    Blocks(String),
}

/// `d(x, y)` on the two-valued models of a language, points by model code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distance {
    lang: Language,
    n: usize,
    d: Vec<Dist>,
}

impl Distance {
    /// Validates `d(x, y) ≥ 0` and `d(x, y) = 0 ⟺ x = y`.
    pub fn from_fn(lang: Language, f: impl Fn(usize, usize) -> Dist) -> Result<Self, RevError> {
        if lang.len() > MAX_VARS {
            return Err(RevError::Distance(format!("at most {MAX_VARS} variables")));
        }
        let n = 1usize << lang.len();
        let mut d = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                let v = f(x, y);
                if v < Dist::zero() {
                    return Err(RevError::Distance(format!("d({x}, {y}) is negative")));
                }
                if (v == Dist::zero()) != (x == y) {
                    return Err(RevError::Distance(format!("d({x}, {y}) = {v} but d(x, y) = 0 needs x = y")));
                }
                d.push(v);
            }
        }
        Ok(Distance { lang, n, d })
    }

    /// Number of differing variables.
    pub fn hamming(lang: Language) -> Result<Self, RevError> {
        Self::from_fn(lang, |x, y| Dist::from_integer((x ^ y).count_ones() as i64))
    }

    /// Table of `(x, y, num, den)` entries; the diagonal is implicitly 0 and
    /// every other ordered pair must be given.
    pub fn from_table(lang: Language, pairs: &[(usize, usize, i64, i64)]) -> Result<Self, RevError> {
        let n = 1usize << lang.len().min(MAX_VARS + 1);
        let mut t: Vec<Option<Dist>> = vec![None; n * n];
        for &(x, y, num, den) in pairs {
            if x >= n || y >= n {
                return Err(RevError::Distance(format!("pair ({x}, {y}) out of range")));
            }
            if den <= 0 {
                return Err(RevError::Distance(format!("denominator {den} for ({x}, {y})")));
            }
            t[x * n + y] = Some(Dist::new(num, den));
        }
        for x in 0..n {
            for y in 0..n {
                if x != y && t[x * n + y].is_none() {
                    return Err(RevError::Distance(format!("missing pair ({x}, {y})")));
                }
            }
        }
        Self::from_fn(lang, |x, y| t[x * n + y].unwrap_or_else(Dist::zero))
    }

    /// Componentwise sum over `d1.lang ⊎ d2.lang`.
    pub fn sum(d1: &Distance, d2: &Distance) -> Result<Self, RevError> {
        Self::combine(d1, d2, |a, b| a + b)
    }

    /// Componentwise maximum, which is not a GHD in general.
    pub fn max(d1: &Distance, d2: &Distance) -> Result<Self, RevError> {
        Self::combine(d1, d2, |a, b| a.max(b))
    }

    fn combine(d1: &Distance, d2: &Distance, op: impl Fn(Dist, Dist) -> Dist) -> Result<Self, RevError> {
        let lang = d1.lang.disjoint_union(&d2.lang).map_err(|_| RevError::Overlap)?;
        let n2 = d2.n;
        Self::from_fn(lang, |x, y| op(d1.get(x / n2, y / n2), d2.get(x % n2, y % n2)))
    }

    pub fn language(&self) -> &Language {
        &self.lang
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, x: usize, y: usize) -> Dist {
        self.d[x * self.n + y]
    }

    pub fn full(&self) -> u64 {
        bits::full(self.n)
    }

    pub fn label(&self, x: usize) -> String {
        Model::from_code(x as u64, self.lang.len()).render(&self.lang, &ValueSet::two_valued())
    }

    pub fn render(&self, s: u64) -> String {
        let parts: Vec<String> = bits::ones(s).map(|x| self.label(x)).collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// `X | Y`: the points of `Y` at globally minimal distance from `X`.
    pub fn bar(&self, x: u64, y: u64) -> u64 {
        let mut best: Option<Dist> = None;
        let mut out = 0u64;
        for a in bits::ones(x) {
            for b in bits::ones(y) {
                let v = self.get(a, b);
                match best {
                    Some(m) if v > m => {}
                    Some(m) if v == m => out |= 1 << b,
                    _ => {
                        best = Some(v);
                        out = 1 << b;
                    }
                }
            }
        }
        out
    }

    /// `{"vars": [...], "pairs": [[x, y, num, den], ...]}`.
    pub fn to_json(&self) -> Value {
        let mut pairs = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if x != y {
                    let v = self.get(x, y);
                    pairs.push(json!([x, y, v.numer(), v.denom()]));
                }
            }
        }
        json!({ "vars": self.lang.vars(), "pairs": pairs })
    }

    pub fn from_json(v: &Value) -> Result<Self, RevError> {
        let bad = |m: &str| RevError::Distance(m.to_string());
        let vars: Vec<String> = v
            .get("vars")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"vars\""))?
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| bad("variables are strings")))
            .collect::<Result<_, _>>()?;
        let lang = Language::new(vars)?;
        if let Some(kind) = v.get("kind").and_then(Value::as_str) {
            return match kind {
                "hamming" => Self::hamming(lang),
                other => Err(bad(&format!("unknown kind {other}"))),
            };
        }
        let pairs = v
            .get("pairs")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"pairs\""))?
            .iter()
            .map(|p| {
                let a = p.as_array().filter(|a| a.len() == 4).ok_or_else(|| bad("pairs are [x, y, num, den]"))?;
                let i = |k: usize| a[k].as_i64().ok_or_else(|| bad("pair entries are integers"));
                Ok((i(0)? as usize, i(1)? as usize, i(2)?, i(3)?))
            })
            .collect::<Result<Vec<_>, RevError>>()?;
        Self::from_table(lang, &pairs)
    }
}

/// Model-set form of `X | Y`. An empty argument yields `∅`.
pub fn bar(x: &ModelSet, y: &ModelSet, d: &Distance) -> Result<ModelSet, RevError> {
    let (xm, ym) = (to_mask(x, d)?, to_mask(y, d)?);
    Ok(ModelSet::from_codes(d.lang.clone(), bits::ones(d.bar(xm, ym)).map(|c| c as u64)))
}

fn to_mask(s: &ModelSet, d: &Distance) -> Result<u64, RevError> {
    if s.value_set().len() != 2 {
        return Err(RevError::Mismatch("distances act on two-valued models".into()));
    }
    let s = s
        .reorder(&d.lang)
        .map_err(|_| RevError::Mismatch(format!("{} against {}", s.language(), d.lang)))?;
    Ok(s.codes().into_iter().fold(0, |acc, c| acc | 1 << c))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Revision {
    pub models: ModelSet,
    pub generator: Formula,
}

/// `T * φ = Th(M(T) | M(φ))`.
pub fn revise(t: &ModelSet, phi: &Formula, d: &Distance) -> Result<Revision, RevError> {
    let tm = to_mask(t, d)?;
    let pm = mask_of(phi, &d.lang)?;
    if tm == 0 {
        return Err(RevError::Empty("the knowledge base has no models".into()));
    }
    if pm == 0 {
        return Err(RevError::Empty("φ is unsatisfiable".into()));
    }
    let models = ModelSet::from_codes(d.lang.clone(), bits::ones(d.bar(tm, pm)).map(|c| c as u64));
    let generator = theory_of(&models)?;
    Ok(Revision { models, generator })
}

/// A knowledge base with a fixed distance.
#[derive(Clone, Debug)]
pub struct RevisionEngine {
    pub distance: Distance,
    pub kb: ModelSet,
}

impl RevisionEngine {
    pub fn revise(&self, phi: &Formula) -> Result<Revision, RevError> {
        revise(&self.kb, phi, &self.distance)
    }
}

// ---------------------------------------------------------------------------
// Products

/// A product distance with its two components; point `x` of the product is
/// `x1 · |X2| + x2`.
#[derive(Clone, Debug)]
pub struct SplitDistance {
    pub left: Distance,
    pub right: Distance,
    pub product: Distance,
}

impl SplitDistance {
    pub fn new(left: Distance, right: Distance, product: Distance) -> Result<Self, RevError> {
        let lang = left.lang.disjoint_union(&right.lang).map_err(|_| RevError::Overlap)?;
        if lang != product.lang {
            return Err(RevError::Mismatch(format!("product over {} needs {}", product.lang, lang)));
        }
        Ok(SplitDistance { left, right, product })
    }

    pub fn sum(left: Distance, right: Distance) -> Result<Self, RevError> {
        let p = Distance::sum(&left, &right)?;
        Self::new(left, right, p)
    }

    pub fn max(left: Distance, right: Distance) -> Result<Self, RevError> {
        let p = Distance::max(&left, &right)?;
        Self::new(left, right, p)
    }

    fn join(&self, a: usize, b: usize) -> usize {
        a * self.right.n + b
    }

    pub fn rect(&self, x: u64, y: u64) -> u64 {
        let mut out = 0;
        for a in bits::ones(x) {
            for b in bits::ones(y) {
                out |= 1 << self.join(a, b);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GhdWitness {
    /// `(σ, τ, α, β)` in the left block, `(σ′, τ′, α′, β′)` in the right.
    pub left: [usize; 4],
    pub right: [usize; 4],
    pub rendered: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GhdReport {
    pub ghd1: Verdict<GhdWitness>,
    pub ghd2: Verdict<GhdWitness>,
}

impl GhdReport {
    pub fn holds(&self) -> bool {
        self.ghd1.holds() && self.ghd2.holds()
    }
}

/// Both conditions over every pair of left pairs and right pairs.
pub fn check_ghd(s: &SplitDistance) -> GhdReport {
    let (n1, n2) = (s.left.n, s.right.n);
    let pairs1: Vec<(usize, usize)> = (0..n1).flat_map(|a| (0..n1).map(move |b| (a, b))).collect();
    let pairs2: Vec<(usize, usize)> = (0..n2).flat_map(|a| (0..n2).map(move |b| (a, b))).collect();
    let pd = |p: (usize, usize), q: (usize, usize)| s.product.get(s.join(p.0, q.0), s.join(p.1, q.1));
    let witness = |st: (usize, usize), ab: (usize, usize), st2: (usize, usize), ab2: (usize, usize), which: u8| {
        let l = |x: usize| s.left.label(x);
        let r = |x: usize| s.right.label(x);
        GhdWitness {
            left: [st.0, st.1, ab.0, ab.1],
            right: [st2.0, st2.1, ab2.0, ab2.1],
            rendered: format!(
                "GHD{which}: d({},{}) = {}, d({},{}) = {}; d({},{}) = {}, d({},{}) = {}; product {} vs {}",
                l(st.0),
                l(st.1),
                s.left.get(st.0, st.1),
                l(ab.0),
                l(ab.1),
                s.left.get(ab.0, ab.1),
                r(st2.0),
                r(st2.1),
                s.right.get(st2.0, st2.1),
                r(ab2.0),
                r(ab2.1),
                s.right.get(ab2.0, ab2.1),
                pd(st, st2),
                pd(ab, ab2),
            ),
        }
    };
    let search = |which: u8| -> Verdict<GhdWitness> {
        pairs1
            .par_iter()
            .find_map_first(|&st| {
                for &ab in &pairs1 {
                    let (l1, l2) = (s.left.get(st.0, st.1), s.left.get(ab.0, ab.1));
                    for &st2 in &pairs2 {
                        for &ab2 in &pairs2 {
                            let (r1, r2) = (s.right.get(st2.0, st2.1), s.right.get(ab2.0, ab2.1));
                            let bad = if which == 1 {
                                l1 <= l2 && r1 <= r2 && (l1 < l2 || r1 < r2) && pd(st, st2) >= pd(ab, ab2)
                            } else {
                                pd(st, st2) < pd(ab, ab2) && l1 >= l2 && r1 >= r2
                            };
                            if bad {
                                return Some(witness(st, ab, st2, ab2, which));
                            }
                        }
                    }
                }
                None
            })
            .into()
    };
    GhdReport {
        ghd1: search(1),
        ghd2: search(2),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BarWitness {
    /// `Σ1, Σ2` (left) and `Σ1′, Σ2′` (right).
    pub sets: [u64; 4],
    pub lhs: u64,
    pub rhs: u64,
    pub rendered: String,
}

/// `(Σ1 × Σ1′) | (Σ2 × Σ2′) = (Σ1 | Σ2) × (Σ1′ | Σ2′)` on one quadruple.
pub fn bar_factorization_instance(s: &SplitDistance, sets: [u64; 4]) -> Option<BarWitness> {
    let [a1, a2, b1, b2] = sets;
    let lhs = s.product.bar(s.rect(a1, b1), s.rect(a2, b2));
    let rhs = s.rect(s.left.bar(a1, a2), s.right.bar(b1, b2));
    (lhs != rhs).then(|| BarWitness {
        sets,
        lhs,
        rhs,
        rendered: format!(
            "Σ1 = {}, Σ2 = {}, Σ1′ = {}, Σ2′ = {}: {} ≠ {}",
            s.left.render(a1),
            s.left.render(a2),
            s.right.render(b1),
            s.right.render(b2),
            s.product.render(lhs),
            s.product.render(rhs)
        ),
    })
}

/// Every quadruple of nonempty component sets.
pub fn verify_bar_factorization(s: &SplitDistance) -> Verdict<BarWitness> {
    let left: Vec<u64> = bits::nonempty_submasks(s.left.full()).collect();
    let right: Vec<u64> = bits::nonempty_submasks(s.right.full()).collect();
    left.par_iter()
        .find_map_first(|&a1| {
            for &a2 in &left {
                for &b1 in &right {
                    for &b2 in &right {
                        if let Some(w) = bar_factorization_instance(s, [a1, a2, b1, b2]) {
                            return Some(w);
                        }
                    }
                }
            }
            None
        })
        .into()
}

fn formula_mask(f: &Formula, lang: &Language) -> Result<u64, RevError> {
    if !f.is_over(lang) {
        return Err(RevError::Blocks(format!("{f} is not written in {lang}")));
    }
    Ok(mask_of(f, lang)?)
}

/// `(φ ∧ φ′) * (ψ ∧ ψ′) = (φ * ψ) ∧ (φ′ * ψ′)` with `φ, ψ` on the left
/// language and `φ′, ψ′` on the right one. Inconsistent inputs compare
/// the empty sets the bar yields.
pub fn check_revision_split(
    s: &SplitDistance,
    phi: &Formula,
    phi2: &Formula,
    psi: &Formula,
    psi2: &Formula,
) -> Result<Verdict<BarWitness>, RevError> {
    let (a1, a2) = (formula_mask(phi, &s.left.lang)?, formula_mask(psi, &s.left.lang)?);
    let (b1, b2) = (formula_mask(phi2, &s.right.lang)?, formula_mask(psi2, &s.right.lang)?);
    Ok(bar_factorization_instance(s, [a1, a2, b1, b2]).into())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RevisionInterpReport {
    /// The premise `(φ ∧ φ′) * (ψ ∧ ψ′) ⊢ ρ` was false.
    pub vacuous: bool,
    pub verdict: Verdict<String>,
}

/// `(φ ∧ φ′) * (ψ ∧ ψ′) ⊢ ρ ⇒ φ′ * ψ′ ⊢ ρ`. The split puts `L − J` on the
/// left and `J` on the right; `ρ` is written in `J`, `φ, ψ` in `L − J`,
/// `φ′, ψ′` in `J′ ⊆ J`. `φ` and `ψ` must be consistent: otherwise the
/// left revision is empty and entails everything.
pub fn check_revision_interpolation(
    s: &SplitDistance,
    j_prime: &Language,
    phi: &Formula,
    phi2: &Formula,
    psi: &Formula,
    psi2: &Formula,
    rho: &Formula,
) -> Result<RevisionInterpReport, RevError> {
    let j = &s.right.lang;
    if !j_prime.is_sublanguage(j) {
        return Err(RevError::Blocks(format!("J′ = {j_prime} is not inside J = {j}")));
    }
    for f in [phi2, psi2] {
        if !f.is_over(j_prime) {
            return Err(RevError::Blocks(format!("{f} is not written in J′ = {j_prime}")));
        }
    }
    let a = (formula_mask(phi, &s.left.lang)?, formula_mask(psi, &s.left.lang)?);
    let b = (formula_mask(phi2, j)?, formula_mask(psi2, j)?);
    let r = formula_mask(rho, j)?;
    if a.0 == 0 || a.1 == 0 {
        return Err(RevError::Empty("φ and ψ must be consistent".into()));
    }
    let whole = s.product.bar(s.rect(a.0, b.0), s.rect(a.1, b.1));
    let rho_cyl = s.rect(s.left.full(), r);
    if !is_subset(whole, rho_cyl) {
        return Ok(RevisionInterpReport {
            vacuous: true,
            verdict: Verdict::Holds,
        });
    }
    let part = s.right.bar(b.0, b.1);
    let verdict = if is_subset(part, r) {
        Verdict::Holds
    } else {
        Verdict::Fails(format!(
            "φ′ * ψ′ = {} does not entail ρ = {}",
            s.right.render(part),
            s.right.render(r)
        ))
    };
    Ok(RevisionInterpReport { vacuous: false, verdict })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgmReport {
    /// `T * φ ⊢ φ`.
    pub success: Verdict<String>,
    /// `T` and `φ` consistent ⇒ `T * φ` consistent.
    pub consistency: Verdict<String>,
    /// `T ∧ φ` consistent ⇒ `T * φ ≡ T ∧ φ`.
    pub vacuity: Verdict<String>,
}

impl AgmReport {
    pub fn holds(&self) -> bool {
        self.success.holds() && self.consistency.holds() && self.vacuity.holds()
    }
}

/// The three postulates on every pair of pool sets (`T` and `φ` as model masks).
pub fn check_agm_postulates(d: &Distance, pool: &[u64]) -> AgmReport {
    let mut success = Verdict::Holds;
    let mut consistency = Verdict::Holds;
    let mut vacuity = Verdict::Holds;
    for &t in pool {
        for &p in pool {
            let r = d.bar(t, p);
            let name = || format!("T = {}, φ = {}, T * φ = {}", d.render(t), d.render(p), d.render(r));
            if success.holds() && !is_subset(r, p) {
                success = Verdict::Fails(name());
            }
            if consistency.holds() && t != 0 && p != 0 && r == 0 {
                consistency = Verdict::Fails(name());
            }
            if vacuity.holds() && t & p != 0 && r != t & p {
                vacuity = Verdict::Fails(name());
            }
        }
    }
    AgmReport {
        success,
        consistency,
        vacuity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_formula;

    fn lang(v: &[&str]) -> Language {
        Language::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn bar_is_global_minimum() {
        let d = Distance::hamming(lang(&["a", "b"])).unwrap();
        // X = {00}, Y = {01, 11}
        assert_eq!(d.bar(0b0001, 0b1010), 0b0010);
        assert_eq!(d.bar(0b0011, 0b0110), 0b0010);
        assert_eq!(d.bar(0b0001, 0), 0);
    }

    #[test]
    fn distance_validation() {
        let l = lang(&["a"]);
        assert!(Distance::from_fn(l.clone(), |_, _| Dist::zero()).is_err());
        assert!(Distance::from_table(l.clone(), &[(0, 1, 1, 1)]).is_err());
        let d = Distance::from_table(l.clone(), &[(0, 1, 1, 2), (1, 0, 3, 1)]).unwrap();
        assert_eq!(d.get(0, 1), Dist::new(1, 2));
        let back = Distance::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn revise_example() {
        let l = lang(&["a", "b"]);
        let d = Distance::hamming(l.clone()).unwrap();
        let t = ModelSet::from_codes(l.clone(), [0b00]);
        let phi = parse_formula("b", &l).unwrap();
        let r = revise(&t, &phi, &d).unwrap();
        assert_eq!(r.models.codes(), vec![0b01]);
        assert_eq!(r.generator.to_string(), "!a & b");
        assert!(revise(&t, &Formula::False, &d).is_err());
    }
}
