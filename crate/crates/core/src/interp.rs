//! Semantic interpolation: the monotonic band `f⁺ ≤ h ≤ g⁻` for many-valued
//! functions, and the μ-projection interpolant for preferential logics.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::bits::{self, is_subset};
use crate::consequence::theory_of;
use crate::lang::{Formula, LangError, Language, Model, ModelSet, ValueFunction, ValueSet};
use crate::mulsize::{check_mu_star_1, MulError, MuWitness};
use crate::pref::{dominance, Block, PrefError, PreferenceRelation, ProductStructure};
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Pref(#[from] PrefError),
    #[error(transparent)]
    Mul(#[from] MulError),
    #[error("J, J′ and J″ must partition the language: {0}")]
    Partition(String),
    #[error("Γ is not rich: {0} is missing")]
    NotRich(String),
    #[error("f is not insensitive to J: {0}")]
    FSensitive(String),
    #[error("g is not insensitive to J″: {0}")]
    GSensitive(String),
    #[error("f exceeds g at {0}")]
    NotBelow(String),
    #[error("band inverted at {0}")]
    BandInverted(String),
    #[error("(μ*1) fails: {0}")]
    MuStar1(String),
    #[error("φ does not entail ψ")]
    NotEntailed,
    #[error("{0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Monotonic interpolation

/// `f ≤ g` on a rich `Γ`, `f` insensitive to `J`, `g` insensitive to `J″`.
#[derive(Clone, Debug)]
pub struct MonotonicProblem {
    j: Language,
    j1: Language,
    j2: Language,
    f: ValueFunction,
    g: ValueFunction,
}

fn render(m: &Model, lang: &Language, values: &ValueSet) -> String {
    m.render(lang, values)
}

impl MonotonicProblem {
    pub fn new(
        j: Language,
        j1: Language,
        j2: Language,
        f: ValueFunction,
        g: ValueFunction,
    ) -> Result<Self, InterpError> {
        let gamma = f.domain();
        let lang = gamma.language();
        let parts = j.disjoint_union(&j1).and_then(|u| u.disjoint_union(&j2));
        match parts {
            Ok(u) if u.len() == lang.len() && u.is_sublanguage(lang) => {}
            _ => return Err(InterpError::Partition(format!("{j} / {j1} / {j2} over {lang}"))),
        }
        if g.domain() != gamma || f.codomain() != g.codomain() {
            return Err(InterpError::Invalid("f and g need the same domain and values".into()));
        }
        let values = gamma.value_set();
        if !f.is_insensitive(&j)? {
            let w = sensitivity_witness(&f, &j).expect("sensitive");
            return Err(InterpError::FSensitive(render(&w, lang, values)));
        }
        if !g.is_insensitive(&j2)? {
            let w = sensitivity_witness(&g, &j2).expect("sensitive");
            return Err(InterpError::GSensitive(render(&w, lang, values)));
        }
        if let Some((m, _)) = f.iter().find(|(m, v)| g.value(m).is_some_and(|w| *v > w)) {
            return Err(InterpError::NotBelow(render(m, lang, values)));
        }
        Ok(MonotonicProblem { j, j1, j2, f, g })
    }

    pub fn gamma(&self) -> &ModelSet {
        self.f.domain()
    }

    pub fn f(&self) -> &ValueFunction {
        &self.f
    }

    pub fn g(&self) -> &ValueFunction {
        &self.g
    }

    pub fn middle(&self) -> &Language {
        &self.j1
    }

    pub fn outer(&self) -> (&Language, &Language) {
        (&self.j, &self.j2)
    }
}

/// A model whose value changes when only `j` changes.
fn sensitivity_witness(f: &ValueFunction, j: &Language) -> Option<Model> {
    let lang = f.domain().language();
    let rest = lang.positions_of(&lang.difference(j)).ok()?;
    let mut seen: BTreeMap<Model, u8> = BTreeMap::new();
    for (m, v) in f.iter() {
        match seen.get(&m.project(&rest)) {
            Some(&old) if old != v => return Some(m.clone()),
            Some(_) => {}
            None => {
                seen.insert(m.project(&rest), v);
            }
        }
    }
    None
}

/// A cut-and-paste of two members that falls outside `gamma`.
pub fn richness_witness(gamma: &ModelSet) -> Option<Model> {
    let n = gamma.language().len();
    // The full product is closed under any paste.
    if (gamma.value_set().len() as u128).checked_pow(n as u32) == Some(gamma.len() as u128) {
        return None;
    }
    let members: Vec<&Model> = gamma.iter().collect();
    for a in &members {
        for b in &members {
            for split in 0..1u64 << n {
                let pasted = Model(
                    (0..n)
                        .map(|i| if split >> i & 1 == 1 { a.0[i] } else { b.0[i] })
                        .collect(),
                );
                if !gamma.contains(&pasted) {
                    return Some(pasted);
                }
            }
        }
    }
    None
}

/// `lower = f⁺` and `upper = g⁻` on `Γ↾J′`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpolantBand {
    pub lower: ValueFunction,
    pub upper: ValueFunction,
}

impl InterpolantBand {
    pub fn domain(&self) -> &ModelSet {
        self.lower.domain()
    }

    /// First point of `Γ↾J′` where `h` leaves the band.
    pub fn contains(&self, h: &ValueFunction) -> Result<Verdict<Model>, InterpError> {
        if h.domain() != self.domain() {
            return Err(InterpError::Invalid("h must be defined on Γ↾J′".into()));
        }
        Ok(h.iter()
            .find(|(m, v)| {
                let lo = self.lower.value(m).expect("same domain");
                let hi = self.upper.value(m).expect("same domain");
                *v < lo || *v > hi
            })
            .map(|(m, _)| m.clone())
            .into())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lang = self.domain().language();
        let values = self.domain().value_set();
        let points: Vec<serde_json::Value> = self
            .lower
            .iter()
            .map(|(m, lo)| {
                let hi = self.upper.value(m).expect("same domain");
                serde_json::json!({
                    "point": render(m, lang, values),
                    "lower": values.label(lo),
                    "upper": values.label(hi),
                })
            })
            .collect();
        serde_json::Value::Array(points)
    }
}

pub fn monotonic_band(p: &MonotonicProblem) -> Result<InterpolantBand, InterpError> {
    let gamma = p.gamma();
    if let Some(m) = richness_witness(gamma) {
        return Err(InterpError::NotRich(render(&m, gamma.language(), gamma.value_set())));
    }
    let domain = gamma.restrict(&p.j1)?;
    let values = p.f.codomain().clone();
    let lower = ValueFunction::from_fn(domain.clone(), values.clone(), |m| {
        p.f.f_plus(&p.j1, m).expect("m comes from Γ")
    })?;
    let upper = ValueFunction::from_fn(domain, values, |m| p.g.f_minus(&p.j1, m).expect("m comes from Γ"))?;
    if let Some((m, _)) = lower.iter().find(|(m, v)| *v > upper.value(m).expect("same domain")) {
        return Err(InterpError::BandInverted(render(m, &p.j1, p.f.codomain())));
    }
    Ok(InterpolantBand { lower, upper })
}

/// Checks `f ≤ h ≤ g` on `Γ` for `h` lifted from `Γ↾J′`. A failure names
/// the model of `Γ` where an inequality breaks.
pub fn is_interpolant_monotonic(p: &MonotonicProblem, h: &ValueFunction) -> Result<Verdict<Model>, InterpError> {
    let gamma = p.gamma();
    if h.domain() != &gamma.restrict(&p.j1)? || h.codomain() != p.f.codomain() {
        return Err(InterpError::Invalid("h must map Γ↾J′ into the values of f".into()));
    }
    let pos = gamma.language().positions_of(&p.j1)?;
    Ok(gamma
        .iter()
        .find(|m| {
            let v = h.value(&m.project(&pos)).expect("projection lies in Γ↾J′");
            p.f.value(m).expect("total") > v || v > p.g.value(m).expect("total")
        })
        .cloned()
        .into())
}

// ---------------------------------------------------------------------------
// Definability

/// The generator over `sub` when `s` is a cylinder over `sub`.
pub fn definable_over(s: &ModelSet, sub: &Language) -> Option<Formula> {
    if s.value_set().len() != 2 {
        return None;
    }
    let r = s.restrict(sub).ok()?;
    let back = r.cylinder(s.language()).ok()?;
    if back != *s {
        return None;
    }
    theory_of(&r).ok()
}

// ---------------------------------------------------------------------------
// Nonmonotonic interpolation

/// Block masks `J`, `J′`, `J″` of a product. `J` or `J″` may be empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub j: u64,
    pub j1: u64,
    pub j2: u64,
}

impl Partition {
    pub fn new(ps: &ProductStructure, j: u64, j1: u64, j2: u64) -> Result<Self, InterpError> {
        let all = ps.all_blocks();
        if j & j1 != 0 || j & j2 != 0 || j1 & j2 != 0 || j | j1 | j2 != all || j1 == 0 {
            return Err(InterpError::Partition(format!(
                "blocks {j:#b} / {j1:#b} / {j2:#b} of {all:#b}, J′ nonempty"
            )));
        }
        Ok(Partition { j, j1, j2 })
    }
}

/// Key of full-product point `i` restricted to the blocks in `mask`.
fn part(ps: &ProductStructure, mask: u64, i: usize) -> usize {
    let all = ps.all_blocks();
    let parts = ps.decompose(all, i);
    let sel: Vec<usize> = bits::ones(all)
        .zip(parts)
        .filter(|&(b, _)| bits::contains(mask, b))
        .map(|(_, p)| p)
        .collect();
    ps.compose_index(mask, &sel)
}

/// Points whose `mask` part lies in `keys` (a mask over the sub-product).
fn cylinder(ps: &ProductStructure, mask: u64, keys: u64) -> u64 {
    (0..ps.len())
        .filter(|&i| bits::contains(keys, part(ps, mask, i)))
        .fold(0, |acc, i| acc | 1 << i)
}

fn projection(ps: &ProductStructure, mask: u64, s: u64) -> u64 {
    bits::ones(s).fold(0, |acc, i| acc | 1 << part(ps, mask, i))
}

fn depends_only_on(ps: &ProductStructure, mask: u64, s: u64) -> bool {
    cylinder(ps, mask, projection(ps, mask, s)) == s
}

#[derive(Clone, Debug, Serialize)]
pub struct NmInterpolant {
    /// `X_J × (μ(φ)↾J′) × X_J″` as a point mask of the full product.
    pub theta: u64,
    pub rendered: String,
    /// Generator over `J′`, when the blocks are two-valued.
    pub formula: Option<String>,
    /// `μ(φ) ⊆ Θ`.
    pub phi_entails_theta: bool,
    /// `μ(Θ) ⊆ M(ψ)`.
    pub theta_entails_psi: bool,
}

impl NmInterpolant {
    pub fn verified(&self) -> bool {
        self.phi_entails_theta && self.theta_entails_psi
    }
}

fn check_shapes(ps: &ProductStructure, p: &Partition, phi: u64, psi: u64) -> Result<(), InterpError> {
    let full = ps.composed().full();
    if phi & !full != 0 || psi & !full != 0 {
        return Err(InterpError::Invalid("sets exceed the product".into()));
    }
    if !depends_only_on(ps, p.j1 | p.j2, phi) {
        return Err(InterpError::Invalid("φ must be defined on J′ ∪ J″".into()));
    }
    if !depends_only_on(ps, p.j | p.j1, psi) {
        return Err(InterpError::Invalid("ψ must be defined on J ∪ J′".into()));
    }
    Ok(())
}

/// The μ-projection interpolant. Refuses unless (μ*1) holds on every
/// available split and `φ |~ ψ`.
pub fn nm_interpolant(ps: &ProductStructure, p: &Partition, phi: u64, psi: u64) -> Result<NmInterpolant, InterpError> {
    check_shapes(ps, p, phi, psi)?;
    let report = check_mu_star_1(ps)?;
    let failed: Option<&MuWitness> = report.subset.witness().or(report.superset.witness());
    if let Some(w) = failed {
        return Err(InterpError::MuStar1(w.rendered.clone()));
    }
    nm_interpolant_unchecked(ps, p, phi, psi)
}

/// Same construction without the (μ*1) guard.
pub fn nm_interpolant_unchecked(
    ps: &ProductStructure,
    p: &Partition,
    phi: u64,
    psi: u64,
) -> Result<NmInterpolant, InterpError> {
    check_shapes(ps, p, phi, psi)?;
    let r = ps.composed();
    let mu_phi = r.mu(phi);
    if !is_subset(mu_phi, psi) {
        return Err(InterpError::NotEntailed);
    }
    let keys = projection(ps, p.j1, mu_phi);
    let theta = cylinder(ps, p.j1, keys);
    let formula = ps
        .models_of_mask(p.j1, keys)
        .ok()
        .and_then(|m| (m.value_set().len() == 2).then(|| theory_of(&m).ok()).flatten())
        .map(|f| f.to_string());
    Ok(NmInterpolant {
        theta,
        rendered: bits::render(theta, &ps.sub_labels(ps.all_blocks())),
        formula,
        phi_entails_theta: is_subset(mu_phi, theta),
        theta_entails_psi: is_subset(r.mu(theta), psi),
    })
}

/// Shape of an interpolant sought by direct search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpolantForm {
    /// `φ |~ α |~ ψ`.
    NmNm,
    /// `φ ⊢ α |~ ψ`.
    ClassicalNm,
}

/// Searches every cylinder over `J′` for an interpolant of `φ` and `ψ`.
pub fn find_interpolant(
    ps: &ProductStructure,
    p: &Partition,
    phi: u64,
    psi: u64,
    form: InterpolantForm,
) -> Result<Option<u64>, InterpError> {
    check_shapes(ps, p, phi, psi)?;
    let n1 = ps.sub_len(p.j1);
    if n1 > 16 {
        return Err(InterpError::Invalid("J′ has more than 16 points".into()));
    }
    let r = ps.composed();
    let need = match form {
        InterpolantForm::NmNm => r.mu(phi),
        InterpolantForm::ClassicalNm => phi,
    };
    let floor = projection(ps, p.j1, need);
    Ok(bits::submasks(bits::full(n1))
        .filter(|&k| is_subset(floor, k))
        .map(|k| cylinder(ps, p.j1, k))
        .find(|&theta| is_subset(r.mu(theta), psi)))
}

/// A pair `φ |~ ψ` of the given shapes with no interpolant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterpolationFailure {
    pub phi: u64,
    pub psi: u64,
    pub rendered: String,
}

/// Interpolation for all semantic `φ` over `J′ ∪ J″` and `ψ` over `J ∪ J′`
/// with `φ |~ ψ`.
pub fn check_interpolation(
    ps: &ProductStructure,
    p: &Partition,
    form: InterpolantForm,
) -> Result<Verdict<InterpolationFailure>, InterpError> {
    let (a, b) = (p.j1 | p.j2, p.j | p.j1);
    let (na, nb) = (ps.sub_len(a), ps.sub_len(b));
    if na > 8 || nb > 8 {
        return Err(InterpError::Invalid("sides are limited to 8 points".into()));
    }
    let r = ps.composed();
    let labels = ps.sub_labels(ps.all_blocks());
    for ka in bits::submasks(bits::full(na)) {
        let phi = cylinder(ps, a, ka);
        for kb in bits::submasks(bits::full(nb)) {
            let psi = cylinder(ps, b, kb);
            let premise = match form {
                InterpolantForm::NmNm | InterpolantForm::ClassicalNm => is_subset(r.mu(phi), psi),
            };
            if premise && find_interpolant(ps, p, phi, psi, form)?.is_none() {
                return Ok(Verdict::Fails(InterpolationFailure {
                    phi,
                    psi,
                    rendered: format!(
                        "φ = {}, ψ = {}",
                        bits::render(phi, &labels),
                        bits::render(psi, &labels)
                    ),
                }));
            }
        }
    }
    Ok(Verdict::Holds)
}

// ---------------------------------------------------------------------------
// Fixtures

/// Structures on the blocks `p`, `q`, `r`:
/// 1. only `¬p¬q¬r ≺ p¬q¬r`, nothing ordered on shorter sequences;
/// 2. the same on length 3, dominance on lengths 1 and 2;
/// 3. dominance on length 3, nothing on shorter sequences.
pub fn fixture_mul_mu(variant: u8) -> Result<ProductStructure, InterpError> {
    if !(1..=3).contains(&variant) {
        return Err(InterpError::Invalid(format!("no variant {variant}")));
    }
    let blocks: Vec<Block> = ["p", "q", "r"]
        .iter()
        .map(|v| Block::two_valued(&[v]))
        .collect::<Result<_, _>>()?;
    // Labels have to match the product's own naming, so a probe structure
    // supplies them.
    let mut probe = BTreeMap::new();
    probe.insert(0b111, PreferenceRelation::unlabelled(8)?);
    let probe = ProductStructure::explicit(blocks.clone(), probe)?;
    let mut rels = BTreeMap::new();
    for mask in bits::nonempty_submasks(0b111) {
        let labels = probe.sub_labels(mask);
        let len = mask.count_ones();
        let dom = || -> Result<PreferenceRelation, PrefError> {
            let sub = Block::new(probe.language(mask), ValueSet::two_valued())?;
            let d = dominance(&sub)?;
            PreferenceRelation::from_below(labels.clone(), d.rows().to_vec())
        };
        let r = match (variant, len) {
            (1 | 2, 3) => PreferenceRelation::from_edges(labels, [(0, 4)])?,
            (2, _) | (3, 3) => dom()?,
            _ => PreferenceRelation::empty(labels)?,
        };
        rels.insert(mask, r);
    }
    Ok(ProductStructure::explicit(blocks, rels)?)
}

/// `J = {p}`, `J′ = {q}`, `J″ = {r}` on a fixture.
pub fn mul_mu_partition(ps: &ProductStructure) -> Result<Partition, InterpError> {
    Partition::new(ps, 0b001, 0b010, 0b100)
}
