//! CNF encoding of a strict partial order on a product `n1 × n2` with fixed
//! component relations. Queries combine "law holds" and "law fails" forms
//! of (μ*1), GH and (s*s); an unsatisfiable query is a complete proof that
//! no product order realises that combination.

use std::collections::HashMap;

use varisat::{ExtendFormula, Lit, Solver};

use crate::bits::{self, nonempty_submasks};
use crate::pref::PreferenceRelation;

pub(crate) struct Encoding<'a> {
    solver: Solver<'a>,
    n1: usize,
    n2: usize,
    r1: PreferenceRelation,
    r2: PreferenceRelation,
    /// `edge[a][b]` is the literal for `a ≺ b`; the diagonal is unused.
    edge: Vec<Vec<Option<Lit>>>,
    minimal: HashMap<(u64, usize), Lit>,
}

impl<'a> Encoding<'a> {
    /// Product points are `a1 * n2 + a2`. The product relation is an
    /// arbitrary strict partial order.
    pub fn new(r1: &PreferenceRelation, r2: &PreferenceRelation) -> Self {
        let (n1, n2) = (r1.len(), r2.len());
        let n = n1 * n2;
        let mut solver = Solver::new();
        let edge: Vec<Vec<Option<Lit>>> = (0..n)
            .map(|a| (0..n).map(|b| (a != b).then(|| solver.new_lit())).collect())
            .collect();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let ab = edge[a][b].unwrap();
                solver.add_clause(&[!ab, !edge[b][a].unwrap()]);
                for (c, ac) in edge[a].iter().enumerate() {
                    if c != a && c != b {
                        solver.add_clause(&[!ab, !edge[b][c].unwrap(), ac.unwrap()]);
                    }
                }
            }
        }
        Encoding {
            solver,
            n1,
            n2,
            r1: r1.clone(),
            r2: r2.clone(),
            edge,
            minimal: HashMap::new(),
        }
    }

    fn point(&self, a: usize, b: usize) -> usize {
        a * self.n2 + b
    }

    fn rect(&self, x: u64, y: u64) -> u64 {
        let mut out = 0;
        for a in bits::ones(x) {
            for b in bits::ones(y) {
                out |= 1 << self.point(a, b);
            }
        }
        out
    }

    /// Literal true iff `p` is minimal in `s`.
    fn minimal(&mut self, s: u64, p: usize) -> Lit {
        if let Some(&l) = self.minimal.get(&(s, p)) {
            return l;
        }
        let m = self.solver.new_lit();
        let mut clause = vec![m];
        for q in bits::ones(s) {
            if q != p {
                let e = self.edge[q][p].unwrap();
                self.solver.add_clause(&[!m, !e]);
                clause.push(e);
            }
        }
        self.solver.add_clause(&clause);
        self.minimal.insert((s, p), m);
        m
    }

    fn pairs(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for x in nonempty_submasks(bits::full(self.n1)) {
            for y in nonempty_submasks(bits::full(self.n2)) {
                out.push((x, y));
            }
        }
        out
    }

    /// Literals that are all true exactly when (μ*1) holds.
    fn mu1_literals(&mut self) -> Vec<Lit> {
        let mut out = Vec::new();
        for (x, y) in self.pairs() {
            let s = self.rect(x, y);
            let want = self.rect(self.r1.mu(x), self.r2.mu(y));
            for p in bits::ones(s) {
                let m = self.minimal(s, p);
                out.push(if bits::contains(want, p) { m } else { !m });
            }
        }
        out
    }

    /// Literals that are all true exactly when GH1 and GH2 hold.
    fn gh_literals(&self) -> Vec<Lit> {
        let (r1, r2) = (&self.r1, &self.r2);
        let mut out = Vec::new();
        for s in 0..self.n1 {
            for t in 0..self.n1 {
                for s2 in 0..self.n2 {
                    for t2 in 0..self.n2 {
                        let (a, b) = (self.point(s, s2), self.point(t, t2));
                        if a == b {
                            continue;
                        }
                        let e = self.edge[a][b].unwrap();
                        let premise = r1.weakly_precedes(s, t)
                            && r2.weakly_precedes(s2, t2)
                            && (r1.precedes(s, t) || r2.precedes(s2, t2));
                        if premise {
                            out.push(e);
                        }
                        if !r1.precedes(s, t) && !r2.precedes(s2, t2) {
                            out.push(!e);
                        }
                    }
                }
            }
        }
        out
    }

    /// Constrains the product so that (μ*1) holds (`true`) or fails.
    pub fn mu1(&mut self, holds: bool) {
        let lits = self.mu1_literals();
        self.constrain(lits, holds);
    }

    pub fn gh(&mut self, holds: bool) {
        let lits = self.gh_literals();
        self.constrain(lits, holds);
    }

    fn constrain(&mut self, lits: Vec<Lit>, holds: bool) {
        if holds {
            for l in lits {
                self.solver.add_clause(&[l]);
            }
        } else {
            let clause: Vec<Lit> = lits.into_iter().map(|l| !l).collect();
            self.solver.add_clause(&clause);
        }
    }

    /// (s*s) for principal filters over every rectangle of every pair of
    /// nonempty factor bases.
    pub fn ss(&mut self, holds: bool) {
        let mut escape = Vec::new();
        for (x, y) in self.pairs() {
            let s = self.rect(x, y);
            let (m1, m2) = (self.r1.mu(x), self.r2.mu(y));
            for g1 in nonempty_submasks(x) {
                for g2 in nonempty_submasks(y) {
                    let factor_small = g1 & m1 == 0 || g2 & m2 == 0;
                    let g = self.rect(g1, g2);
                    let ms: Vec<Lit> = bits::ones(g).map(|p| self.minimal(s, p)).collect();
                    // The product is small iff no point of g is minimal in s.
                    if holds {
                        if factor_small {
                            for m in ms {
                                self.solver.add_clause(&[!m]);
                            }
                        } else {
                            self.solver.add_clause(&ms);
                        }
                    } else {
                        let v = self.solver.new_lit();
                        if factor_small {
                            let mut c = vec![!v];
                            c.extend(ms);
                            self.solver.add_clause(&c);
                        } else {
                            for m in ms {
                                self.solver.add_clause(&[!v, !m]);
                            }
                        }
                        escape.push(v);
                    }
                }
            }
        }
        if !holds {
            self.solver.add_clause(&escape);
        }
    }

    /// Pins the product relation to `r`.
    #[cfg(test)]
    pub fn fix(&mut self, r: &PreferenceRelation) {
        let n = self.n1 * self.n2;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let e = self.edge[a][b].unwrap();
                    self.solver.add_clause(&[if r.precedes(a, b) { e } else { !e }]);
                }
            }
        }
    }

    /// Solves; a satisfying product relation is decoded with the given labels.
    pub fn solve(mut self, labels: Vec<String>) -> Option<PreferenceRelation> {
        if !self.solver.solve().expect("solver runs without limits") {
            return None;
        }
        let model = self.solver.model().expect("satisfiable");
        let mut value = vec![false; model.len() + 1];
        for l in model {
            let i = l.var().index();
            if i >= value.len() {
                value.resize(i + 1, false);
            }
            value[i] = l.is_positive();
        }
        let edge = &self.edge;
        let r = PreferenceRelation::from_fn(labels, |a, b| {
            edge[a][b].is_some_and(|e| value[e.var().index()] == e.is_positive())
        })
        .expect("labels match the carrier");
        Some(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pref::{chain, Block, ProductStructure};
    use crate::mulsize::{check_mu_star_1, ProductSizes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(n: usize, p: &str) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    fn random_order(rng: &mut ChaCha8Rng, n: usize) -> PreferenceRelation {
        // A random linear extension restricted at random gives a partial order
        // after transitive closure.
        let mut below = vec![0u64; n];
        for b in 0..n {
            for a in 0..b {
                if rng.gen_bool(0.35) {
                    below[b] |= 1 << a | below[a];
                }
            }
        }
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                p.swap(i, rng.gen_range(0..=i));
            }
            p
        };
        PreferenceRelation::from_fn(labels(n, "p"), |a, b| bits::contains(below[perm[b]], perm[a]))
            .unwrap()
    }

    fn structure(r1: &PreferenceRelation, r2: &PreferenceRelation, rp: &PreferenceRelation) -> ProductStructure {
        let b1 = Block::abstract_points("u", r1.labels().to_vec()).unwrap();
        let b2 = Block::abstract_points("v", r2.labels().to_vec()).unwrap();
        let mut rels = std::collections::BTreeMap::new();
        rels.insert(1, r1.clone());
        rels.insert(2, r2.clone());
        let pl = (0..rp.len()).map(|i| format!("{}{}", r1.label(i / r2.len()), r2.label(i % r2.len()))).collect();
        rels.insert(3, PreferenceRelation::from_below(pl, rp.rows().to_vec()).unwrap());
        ProductStructure::explicit(vec![b1, b2], rels).unwrap()
    }

    #[test]
    fn pinned_relation_agrees_with_direct_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let (n1, n2) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
            let r1 = random_order(&mut rng, n1);
            let r2 = random_order(&mut rng, n2);
            let rp = random_order(&mut rng, n1 * n2);
            let ps = structure(&r1, &r2, &rp);
            let mu1 = check_mu_star_1(&ps).unwrap().holds();
            let gh = crate::pref::check_gh(&ps).unwrap().holds();
            let ss = ProductSizes::from_structure(&ps, 1, 2).unwrap().check_s_times_s().unwrap().holds();
            for (which, truth) in [(0, mu1), (1, gh), (2, ss)] {
                for want in [true, false] {
                    let mut enc = Encoding::new(&r1, &r2);
                    enc.fix(&rp);
                    match which {
                        0 => enc.mu1(want),
                        1 => enc.gh(want),
                        _ => enc.ss(want),
                    }
                    let sat = enc.solve(labels(n1 * n2, "x")).is_some();
                    assert_eq!(sat, truth == want, "query {which}, want {want}");
                }
            }
        }
    }

    #[test]
    fn decoded_model_is_a_partial_order() {
        let r1 = chain(labels(2, "a")).unwrap();
        let r2 = chain(labels(2, "b")).unwrap();
        let mut enc = Encoding::new(&r1, &r2);
        enc.gh(true);
        let r = enc.solve(labels(4, "x")).unwrap();
        assert!(r.is_transitive());
        assert!(r.precedes(0, 3));
    }
}
