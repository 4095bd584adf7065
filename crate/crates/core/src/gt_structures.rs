//! The graded Goldman-Turaev structures on `|A|`: the double brackets `Pi_gr`,
//! `Pi_s`, `Pi_add`, the graded bracket and cobracket, `mu_gr`, and the center.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclic_words::{cyc_pair_from, needle, project, CycTensor, CyclicElement, CyclicPair, CyclicWord};
use crate::derivations::TangentialDerivation;
use crate::divergence::{cocycle_cq, tdiv_pair};
use crate::exactlin::{fmt_rational, kernel, q, row_reduce, solve_affine, Rational, SparseMatrix};
use crate::group_ring::Framing;
use crate::lin::Lin;
use crate::series::duflo_s;
use crate::tensor_algebra::{AlgebraContext, TensorElement, TensorSquare, Word};

/// The intersection form on `H/H^(2)` and the boundary form `zeta(z_j, z_k) = delta_jk z_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradedPairing {
    pub ctx: AlgebraContext,
}

impl GradedPairing {
    pub fn new(ctx: AlgebraContext) -> Self {
        GradedPairing { ctx }
    }

    /// `<a, b>` on generators.
    pub fn intersection(&self, a: u8, b: u8) -> i64 {
        let g = self.ctx.genus as u8;
        if a < g && b == a + g {
            1
        } else if b < g && a == b + g {
            -1
        } else {
            0
        }
    }

    /// `zeta(a, b)`, as a generator when nonzero.
    pub fn boundary(&self, a: u8, b: u8) -> Option<u8> {
        if a == b && self.ctx.is_z(a) {
            Some(a)
        } else {
            None
        }
    }

    /// `c_f`: zero on `H/H^(2)`, `z_j -> q_j`.
    pub fn c_f(&self, a: u8, f: &Framing) -> i64 {
        match self.ctx.z_index(a) {
            Some(j) => f.q[j - 1],
            None => 0,
        }
    }
}

fn cat(parts: &[&[u8]]) -> Word {
    Word(parts.concat())
}

fn pi_gr_words(p: &GradedPairing, u: &Word, v: &Word, c: &Rational, out: &mut TensorSquare) {
    let (u, v) = (&u.0, &v.0);
    for i in 0..u.len() {
        for j in 0..v.len() {
            let (a, b) = (u[i], v[j]);
            let ip = p.intersection(a, b);
            if ip != 0 {
                out.add_term(cat(&[&v[..j], &u[i + 1..]]), cat(&[&u[..i], &v[j + 1..]]), c * q(ip));
            }
            if let Some(z) = p.boundary(b, a) {
                out.add_term(cat(&[&v[..j], &[z], &u[i + 1..]]), cat(&[&u[..i], &v[j + 1..]]), c.clone());
            }
            if let Some(z) = p.boundary(a, b) {
                out.add_term(cat(&[&v[..j], &u[i + 1..]]), cat(&[&u[..i], &[z], &v[j + 1..]]), -c);
            }
        }
    }
}

/// The graded double bracket `Pi_gr(u, v)`.
pub fn pi_gr(u: &TensorElement, v: &TensorElement) -> TensorSquare {
    let ctx = u.ctx();
    ctx.check(&v.ctx()).expect("context mismatch");
    let p = GradedPairing::new(ctx);
    let mut out = TensorSquare::zero(ctx);
    for (wu, cu) in u.terms() {
        for (wv, cv) in v.terms() {
            pi_gr_words(&p, wu, wv, &(cu * cv), &mut out);
        }
    }
    out
}

/// `s(omega)` truncated at the context weight.
pub fn s_of_omega(ctx: AlgebraContext) -> TensorElement {
    let s = duflo_s(ctx.max_weight);
    let omega = crate::tensor_algebra::special_elements(ctx).omega;
    let mut out = TensorElement::zero(ctx);
    let mut pow = TensorElement::one(ctx);
    for k in 0..=ctx.max_weight / 2 {
        let c = s.coeff(k);
        if !c.is_zero() {
            out.add_assign_scaled(&pow, &c);
        }
        pow = &pow * &omega;
    }
    out
}

/// `Pi_s(a, b) = (b (x) 1) c - c (1 (x) b)` with `c = s'' (x) a s' - s'' a (x) s'`.
pub fn pi_s(a: &TensorElement, b: &TensorElement) -> TensorSquare {
    let ctx = a.ctx();
    let sweedler = s_of_omega(ctx).tilde_delta();
    let mut c = TensorSquare::zero(ctx);
    for ((s1, s2), v) in sweedler.terms() {
        let s1 = TensorElement::from_word(ctx, s1.clone(), v.clone());
        let s2 = TensorElement::from_word(ctx, s2.clone(), Rational::one());
        c = &c + &TensorSquare::tensor(&s2, &(a * &s1));
        c = &c - &TensorSquare::tensor(&(&s2 * a), &s1);
    }
    &c.lmul_left(b) - &c.rmul_right(b)
}

/// `Pi_add = Pi_gr + Pi_s`
pub fn pi_add(a: &TensorElement, b: &TensorElement) -> TensorSquare {
    &pi_gr(a, b) + &pi_s(a, b)
}

fn representative(c: &CyclicElement) -> TensorElement {
    let ctx = c.ctx();
    let mut out = TensorElement::zero(ctx);
    for (w, v) in c.terms() {
        out.add_term(w.as_word().clone(), v.clone());
    }
    out
}

/// `{|a|, |b|}_gr = |Pi_gr(a, b)' Pi_gr(a, b)''|`
pub fn bracket_gr(a: &CyclicElement, b: &CyclicElement) -> CyclicElement {
    project(&pi_gr(&representative(a), &representative(b)).multiply())
}

/// `{|a|, b}_gr` for `b` in `A`, through the double bracket.
pub fn hamiltonian_apply(a: &CyclicElement, b: &TensorElement) -> TensorElement {
    pi_gr(&representative(a), b).multiply()
}

fn strip_last(n: &TensorElement, g: u8) -> TensorElement {
    let ctx = n.ctx();
    let mut out = TensorElement::zero(ctx);
    for (w, c) in n.terms() {
        if w.0.last() == Some(&g) {
            out.add_term(Word(w.0[..w.len() - 1].to_vec()), c.clone());
        }
    }
    out
}

/// The special derivation `{|a|, .}_gr`, read off the needle map:
/// `x_i -> -(1 (x) y_i*) N|a|`, `y_i -> (1 (x) x_i*) N|a|`, `u_j = (1 (x) z_j*) N|a|`.
pub fn hamiltonian_gr(a: &CyclicElement) -> TangentialDerivation {
    let ctx = a.ctx();
    let mut reduced = a.clone();
    reduced.add_term(CyclicWord::unit(), -a.coeff(&CyclicWord::unit()));
    let n = needle(&reduced).expect("constant class removed");
    let mut images = Vec::with_capacity(2 * ctx.genus);
    for i in 1..=ctx.genus {
        images.push(-&strip_last(&n, ctx.y(i)));
    }
    for i in 1..=ctx.genus {
        images.push(strip_last(&n, ctx.x(i)));
    }
    let comps = (1..=ctx.boundary).map(|j| strip_last(&n, ctx.z(j))).collect();
    TangentialDerivation::new(ctx, images, comps).expect("shapes match the context")
}

/// `tDiv_q(u) = tDiv(u) - c_q(u)` as an element of `|A| (x) |A|`.
pub fn tdiv_q_pair(u: &TangentialDerivation, f: &Framing) -> CyclicPair {
    &tdiv_pair(u) - &cocycle_cq(u, f)
}

/// The graded cobracket `delta_gr = tDiv_q o Pi_gr`.
pub fn delta_gr(c: &CyclicElement, f: &Framing) -> CyclicPair {
    tdiv_q_pair(&hamiltonian_gr(c), f)
}

/// The graded `mu^f_gr(u)` in `|A| (x) A`.
pub fn mu_gr(u: &TensorElement, f: &Framing) -> CycTensor {
    let ctx = u.ctx();
    let p = GradedPairing::new(ctx);
    let mut out = CycTensor::zero(ctx);
    for (w, c) in u.terms() {
        let w = &w.0;
        let m = w.len();
        for i in 0..m {
            let cf = p.c_f(w[i], f);
            if cf != 0 {
                out.add_term(CyclicWord::unit(), cat(&[&w[..i], &w[i + 1..]]), c * q(cf));
            }
        }
        for j in 0..m {
            for k in j + 1..m {
                let mid = &w[j + 1..k];
                let outer = cat(&[&w[..j], &w[k + 1..]]);
                let ip = p.intersection(w[j], w[k]);
                if ip != 0 {
                    out.add_term(CyclicWord::new(&Word(mid.to_vec())), outer.clone(), c * q(ip));
                }
                if let Some(z) = p.boundary(w[k], w[j]) {
                    out.add_term(CyclicWord::new(&cat(&[&[z], mid])), outer.clone(), c.clone());
                }
                if let Some(z) = p.boundary(w[j], w[k]) {
                    let right = cat(&[&w[..j], &[z], &w[k + 1..]]);
                    out.add_term(CyclicWord::new(&Word(mid.to_vec())), right, -c);
                }
            }
        }
    }
    out
}

/// `Alt (1 (x) |.|) mu_gr(a)`, the second route to `delta_gr`.
pub fn delta_gr_via_mu(c: &CyclicElement, f: &Framing) -> CyclicPair {
    let ctx = c.ctx();
    let m = mu_gr(&representative(c), f);
    let mut out = CyclicPair::zero(ctx);
    for ((a, b), v) in m.terms() {
        let b = CyclicWord::new(b);
        out.add_term(a.clone(), b.clone(), v.clone());
        out.add_term(b, a.clone(), -v);
    }
    out
}

/// `u.(a (x) b) = {u, a} (x) b + a (x) {u, b}`
pub fn act_on_pair(u: &CyclicElement, p: &CyclicPair) -> CyclicPair {
    let ctx = u.ctx();
    let mut out = CyclicPair::zero(ctx);
    for ((a, b), v) in p.terms() {
        let ea = CyclicElement::from_lin(ctx, Lin::single(a.clone(), Rational::one()));
        let eb = CyclicElement::from_lin(ctx, Lin::single(b.clone(), Rational::one()));
        out.add_assign_scaled(&cyc_pair_from(&bracket_gr(u, &ea), &eb), v);
        out.add_assign_scaled(&cyc_pair_from(&ea, &bracket_gr(u, &eb)), v);
    }
    out
}

/// `|A|^(x)3`
pub type CyclicTriple = Lin<(CyclicWord, CyclicWord, CyclicWord)>;

/// `{{a,b},c} + {{b,c},a} + {{c,a},b}`
pub fn jacobi_residual(a: &CyclicElement, b: &CyclicElement, c: &CyclicElement) -> CyclicElement {
    let t1 = bracket_gr(&bracket_gr(a, b), c);
    let t2 = bracket_gr(&bracket_gr(b, c), a);
    let t3 = bracket_gr(&bracket_gr(c, a), b);
    &(&t1 + &t2) + &t3
}

/// `(1 + tau + tau^2)(delta (x) 1) delta(c)`
pub fn cojacobi_residual(c: &CyclicElement, f: &Framing) -> CyclicTriple {
    let ctx = c.ctx();
    let mut out = CyclicTriple::new();
    for ((a, b), v) in delta_gr(c, f).terms() {
        let ea = CyclicElement::from_lin(ctx, Lin::single(a.clone(), Rational::one()));
        for ((a1, a2), w) in delta_gr(&ea, f).terms() {
            let k = v * w;
            out.add_term((a1.clone(), a2.clone(), b.clone()), k.clone());
            out.add_term((a2.clone(), b.clone(), a1.clone()), k.clone());
            out.add_term((b.clone(), a1.clone(), a2.clone()), k);
        }
    }
    out
}

/// `delta{a,b} - a.delta(b) + b.delta(a)`
pub fn compatibility_residual(a: &CyclicElement, b: &CyclicElement, f: &Framing) -> CyclicPair {
    let lhs = delta_gr(&bracket_gr(a, b), f);
    let rhs = &act_on_pair(a, &delta_gr(b, f)) - &act_on_pair(b, &delta_gr(a, f));
    &lhs - &rhs
}

/// `[., .] o delta(c)`
pub fn involutivity_residual(c: &CyclicElement, f: &Framing) -> CyclicElement {
    let ctx = c.ctx();
    let mut out = CyclicElement::zero(ctx);
    for ((a, b), v) in delta_gr(c, f).terms() {
        let ea = CyclicElement::from_lin(ctx, Lin::single(a.clone(), Rational::one()));
        let eb = CyclicElement::from_lin(ctx, Lin::single(b.clone(), Rational::one()));
        out.add_assign_scaled(&bracket_gr(&ea, &eb), v);
    }
    out
}

/// Necklaces of weight `w`, in increasing order.
pub fn cyclic_words_of_weight(ctx: AlgebraContext, w: usize) -> Vec<CyclicWord> {
    let set: BTreeSet<CyclicWord> = ctx.words_of_weight(w).iter().map(CyclicWord::new).collect();
    set.into_iter().collect()
}

fn cyc(ctx: AlgebraContext, w: &CyclicWord) -> CyclicElement {
    CyclicElement::from_lin(ctx, Lin::single(w.clone(), Rational::one()))
}

/// Context large enough to bracket weight-`d` classes against the test classes.
fn probe_context(ctx: AlgebraContext, d: usize) -> (AlgebraContext, usize) {
    let probe = d.max(2) + 1;
    (ctx.with_max_weight(d + probe), probe)
}

/// Kernel of `|a| -> ({|a|, |b|})_b` on weight-`d` classes, with `|b|` over all
/// classes of weight at most `d + 1` (at least 3). Row-reduced, so deterministic.
pub fn center_basis(ctx: AlgebraContext, d: usize) -> Vec<CyclicElement> {
    let (big, probe) = probe_context(ctx, d);
    let cols = cyclic_words_of_weight(big, d);
    if d == 0 {
        return vec![CyclicElement::unit(ctx)];
    }
    let mut row_index: std::collections::BTreeMap<(CyclicWord, CyclicWord), usize> = Default::default();
    let mut entries: Vec<(usize, usize, Rational)> = Vec::new();
    for w in 1..=probe {
        for b in cyclic_words_of_weight(big, w) {
            let eb = cyc(big, &b);
            for (ci, a) in cols.iter().enumerate() {
                for (t, v) in bracket_gr(&cyc(big, a), &eb).terms() {
                    let n = row_index.len();
                    let r = *row_index.entry((b.clone(), t.clone())).or_insert(n);
                    entries.push((r, ci, v.clone()));
                }
            }
        }
    }
    let mut m = SparseMatrix::new(row_index.len(), cols.len());
    for (r, c, v) in entries {
        m.add_to(r, c, &v);
    }
    let basis = row_reduce(&kernel(&m), cols.len());
    basis
        .iter()
        .map(|vec| {
            let mut e = CyclicElement::zero(ctx);
            for (k, v) in vec.iter().enumerate() {
                if !v.is_zero() {
                    e.add_term(cols[k].clone(), v.clone());
                }
            }
            e
        })
        .collect()
}

/// Spanning set `{|omega^l|, |z_j^l|}` of the weight-`d` part of the center.
pub fn expected_center(ctx: AlgebraContext, d: usize) -> Vec<CyclicElement> {
    if d == 0 {
        return vec![CyclicElement::unit(ctx)];
    }
    let mut out = Vec::new();
    if d % 2 == 0 {
        let omega = crate::tensor_algebra::special_elements(ctx).omega;
        out.push(project(&omega.pow(d / 2)));
        for j in 1..=ctx.boundary {
            out.push(project(&TensorElement::z(ctx, j).pow(d / 2)));
        }
    }
    out.retain(|e| !e.is_zero());
    out
}

/// Coordinates of homogeneous elements in the necklace basis of weight `d`, row-reduced.
pub fn reduced_span(ctx: AlgebraContext, d: usize, elems: &[CyclicElement]) -> Vec<Vec<Rational>> {
    let cols = cyclic_words_of_weight(ctx, d);
    let vecs: Vec<Vec<Rational>> = elems.iter().map(|e| cols.iter().map(|c| e.coeff(c)).collect()).collect();
    row_reduce(&vecs, cols.len())
}

/// Outcome of a center membership test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterCertificate {
    pub member: bool,
    /// Coefficients on `|omega^l|, |z_j^l|` when a member.
    pub combination: Vec<(String, String)>,
    /// A class `|b|` with `{c, |b|} != 0`, and that bracket.
    pub witness: Option<(String, String)>,
}

/// Membership of `c` in `span{|omega^l|, |z_j^l|}`; on failure, a nonzero bracket.
pub fn center_check(c: &CyclicElement) -> CenterCertificate {
    let ctx = c.ctx();
    let mut gens: Vec<(String, CyclicElement)> = vec![("1".into(), CyclicElement::unit(ctx))];
    let omega = crate::tensor_algebra::special_elements(ctx).omega;
    for l in 1..=ctx.max_weight / 2 {
        gens.push((format!("|omega^{l}|"), project(&omega.pow(l))));
        for j in 1..=ctx.boundary {
            gens.push((format!("|z{j}^{l}|"), project(&TensorElement::z(ctx, j).pow(l))));
        }
    }
    let mut keys: BTreeSet<CyclicWord> = c.terms().map(|(k, _)| k.clone()).collect();
    for (_, g) in &gens {
        keys.extend(g.terms().map(|(k, _)| k.clone()));
    }
    let keys: Vec<CyclicWord> = keys.into_iter().collect();
    let mut m = SparseMatrix::new(keys.len(), gens.len());
    for (ci, (_, g)) in gens.iter().enumerate() {
        for (r, k) in keys.iter().enumerate() {
            let v = g.coeff(k);
            if !v.is_zero() {
                m.set(r, ci, v);
            }
        }
    }
    let rhs: Vec<Rational> = keys.iter().map(|k| c.coeff(k)).collect();
    if let Some(sol) = solve_affine(&m, &rhs).ok().and_then(|s| s.particular) {
        let combination = gens
            .iter()
            .zip(sol.iter())
            .filter(|(_, v)| !v.is_zero())
            .map(|((n, _), v)| (n.clone(), fmt_rational(v)))
            .collect();
        return CenterCertificate { member: true, combination, witness: None };
    }
    let top = (0..=ctx.max_weight).rev().find(|&w| !c.homogeneous(w).is_zero()).unwrap_or(0);
    let (big, probe) = probe_context(ctx, top);
    let cb = c.with_context(big);
    for w in 1..=probe {
        for b in cyclic_words_of_weight(big, w) {
            let br = bracket_gr(&cb, &cyc(big, &b));
            if !br.is_zero() {
                let name = cyc(ctx.with_max_weight(probe), &b).render();
                return CenterCertificate { member: false, combination: vec![], witness: Some((name, br.render())) };
            }
        }
    }
    CenterCertificate { member: false, combination: vec![], witness: None }
}

/// `{v in A_d : v omega = omega v}`, by brute force.
pub fn omega_centralizer(ctx: AlgebraContext, d: usize) -> Vec<TensorElement> {
    let big = ctx.with_max_weight(d + 2);
    let omega = crate::tensor_algebra::special_elements(big).omega;
    centralizer(&omega, big, d)
        .into_iter()
        .map(|v| v.with_context(ctx))
        .collect()
}

/// Homogeneous weight-`d` elements commuting with `u0`, row-reduced.
pub fn centralizer(u0: &TensorElement, ctx: AlgebraContext, d: usize) -> Vec<TensorElement> {
    let cols = ctx.words_of_weight(d);
    let mut rows: std::collections::BTreeMap<Word, usize> = Default::default();
    let mut entries = Vec::new();
    for (ci, w) in cols.iter().enumerate() {
        let v = TensorElement::from_word(ctx, w.clone(), Rational::one());
        let comm = v.bracket(u0);
        for (t, c) in comm.terms() {
            let n = rows.len();
            let r = *rows.entry(t.clone()).or_insert(n);
            entries.push((r, ci, c.clone()));
        }
    }
    let mut m = SparseMatrix::new(rows.len(), cols.len());
    for (r, c, v) in entries {
        m.add_to(r, c, &v);
    }
    row_reduce(&kernel(&m), cols.len())
        .iter()
        .map(|vec| {
            let mut e = TensorElement::zero(ctx);
            for (k, v) in vec.iter().enumerate() {
                if !v.is_zero() {
                    e.add_term(cols[k].clone(), v.clone());
                }
            }
            e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::qf;

    fn el(ctx: AlgebraContext, s: &str) -> TensorElement {
        TensorElement::parse(ctx, s).unwrap()
    }

    fn cl(ctx: AlgebraContext, s: &str) -> CyclicElement {
        CyclicElement::parse(ctx, s).unwrap()
    }

    fn sq(ctx: AlgebraContext, terms: &[(&str, &str, i64)]) -> TensorSquare {
        let mut out = TensorSquare::zero(ctx);
        for (a, b, c) in terms {
            out = &out + &TensorSquare::tensor(&el(ctx, a), &el(ctx, b)).scale(&q(*c));
        }
        out
    }

    #[test]
    fn generator_table() {
        let ctx = AlgebraContext::new(2, 1, 6);
        assert_eq!(pi_gr(&el(ctx, "x1"), &el(ctx, "y1")), sq(ctx, &[("1", "1", 1)]));
        assert_eq!(pi_gr(&el(ctx, "y1"), &el(ctx, "x1")), sq(ctx, &[("1", "1", -1)]));
        assert_eq!(pi_gr(&el(ctx, "z1"), &el(ctx, "z1")), sq(ctx, &[("z1", "1", 1), ("1", "z1", -1)]));
        assert!(pi_gr(&el(ctx, "x1"), &el(ctx, "x2")).is_zero());
        assert!(pi_gr(&el(ctx, "x1"), &el(ctx, "y2")).is_zero());
        assert!(pi_gr(&el(ctx, "x1"), &el(ctx, "z1")).is_zero());
    }

    #[test]
    fn leibniz_in_both_slots() {
        let ctx = AlgebraContext::new(1, 2, 7);
        let (a, b) = (el(ctx, "x1*z1 + y1"), el(ctx, "z1*y1 - 2*z2"));
        let c = el(ctx, "x1*y1*z2 + z1");
        let lhs = pi_gr(&a, &(&b * &c));
        let rhs = &pi_gr(&a, &b).rmul_right(&c) + &pi_gr(&a, &c).lmul_left(&b);
        assert_eq!(lhs, rhs);
        let lhs = pi_gr(&(&a * &b), &c);
        let rhs = &pi_gr(&a, &c).rmul_left(&b) + &pi_gr(&b, &c).lmul_right(&a);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn needle_fast_path_matches_double_bracket() {
        let ctx = AlgebraContext::new(1, 2, 7);
        for s in ["|x1*x1*y1|", "|x1*z1*y1*z2|", "|z1*z1|", "|z1*x1*y1| + 2*|z2*z2*x1|", "|y1*y1*x1*x1*z2|"] {
            let a = cl(ctx, s);
            let h = hamiltonian_gr(&a);
            for g in 0..ctx.num_gens() as u8 {
                let b = TensorElement::gen(ctx, g);
                assert_eq!(h.apply(&b), hamiltonian_apply(&a, &b), "{s} on {}", ctx.gen_name(g));
            }
            let omega = crate::tensor_algebra::special_elements(ctx).omega;
            assert!(h.apply(&omega).is_zero(), "{s}");
        }
    }

    #[test]
    fn lemma_formulas() {
        let ctx = AlgebraContext::new(1, 2, 8);
        let b = el(ctx, "x1*z2*y1 - z1*x1");
        let hz = cl(ctx, "|z1| + 3*|z1*z1| - |z1*z1*z1|");
        assert!(hamiltonian_apply(&hz, &b).is_zero());
        // h = s^2 + s^3; with Pi_gr(x, y) = 1 (x) 1 the bracket is [b, h'(omega)]
        let omega = crate::tensor_algebra::special_elements(ctx).omega;
        let h = project(&(&omega.pow(2) + &omega.pow(3)));
        let hdot = &omega.scale(&q(2)) + &omega.pow(2).scale(&q(3));
        assert_eq!(hamiltonian_apply(&h, &b), b.bracket(&hdot));
        assert_eq!(hamiltonian_gr(&h).apply(&b), b.bracket(&hdot));
    }

    #[test]
    fn pi_s_leading_term_and_vanishing() {
        let ctx = AlgebraContext::new(1, 1, 6);
        let (a, b) = (el(ctx, "x1"), el(ctx, "y1*z1"));
        let half = qf(1, 2);
        let lead = sq(ctx, &[("y1*z1", "x1", 1), ("y1*z1*x1", "1", -1), ("1", "x1*y1*z1", -1), ("x1", "y1*z1", 1)]).scale(&half);
        let ps = pi_s(&a, &b);
        assert_eq!(ps.homogeneous(4), lead);
        assert!(ps.multiply().is_zero());
    }

    #[test]
    fn mu_gr_examples() {
        let ctx = AlgebraContext::new(1, 1, 6);
        let f = Framing::new(ctx, vec![0], vec![0], vec![1]).unwrap();
        assert!(mu_gr(&el(ctx, "x1"), &f).is_zero());
        let mut unit = CycTensor::zero(ctx);
        unit.add_term(CyclicWord::unit(), Word::empty(), q(1));
        assert_eq!(mu_gr(&el(ctx, "z1"), &f), unit);
        let f0 = Framing::adapted(ctx);
        assert_eq!(mu_gr(&el(ctx, "x1*y1"), &f0), unit);
    }

    #[test]
    fn delta_two_ways() {
        for (g, n) in [(1, 0), (0, 2), (1, 1), (2, 0)] {
            let ctx = AlgebraContext::new(g, n, 6);
            let f = Framing::new(ctx, vec![1; g], vec![-2; g], vec![3; n]).unwrap();
            for w in 1..=6 {
                for c in cyclic_words_of_weight(ctx, w).into_iter().take(40) {
                    let e = cyc(ctx, &c);
                    assert_eq!(delta_gr(&e, &f), delta_gr_via_mu(&e, &f), "{}", e.render());
                }
            }
        }
    }

    #[test]
    fn delta_examples() {
        let ctx = AlgebraContext::new(1, 2, 7);
        let f = Framing::adapted(ctx);
        assert!(delta_gr(&cl(ctx, "|z1|"), &f).is_zero());
        assert!(delta_gr(&CyclicElement::unit(ctx), &f).is_zero());
        let omega = crate::tensor_algebra::special_elements(ctx).omega;
        // delta_gr |omega^k| = -k (2g - 1 + sum q_j) |omega^(k-1)| ^ 1
        for (qs, factor) in [(vec![0, 0], -1), (vec![2, -3], 0), (vec![1, 1], -3)] {
            let f = Framing::new(ctx, vec![0], vec![0], qs).unwrap();
            for k in 1..=3i64 {
                let lower = project(&omega.pow(k as usize - 1));
                let expected = crate::cyclic_words::wedge(&lower, &CyclicElement::unit(ctx)).scale(&q(k * factor));
                assert_eq!(delta_gr(&project(&omega.pow(k as usize)), &f), expected);
            }
        }
    }

    #[test]
    fn center_degree_two_in_genus_one() {
        let ctx = AlgebraContext::new(1, 1, 4);
        let basis = center_basis(ctx, 2);
        assert_eq!(basis.len(), 1);
        let omega = crate::tensor_algebra::special_elements(ctx).omega;
        assert_eq!(reduced_span(ctx, 2, &basis), reduced_span(ctx, 2, &[project(&omega)]));
    }

    #[test]
    fn center_membership() {
        let ctx = AlgebraContext::new(1, 1, 6);
        assert!(center_check(&cl(ctx, "|z1*z1*z1|")).member);
        let omega = crate::tensor_algebra::special_elements(ctx).omega;
        assert!(center_check(&project(&(&omega.pow(2) + &omega.pow(3).scale(&q(5))))).member);
        let cert = center_check(&cl(ctx, "|x1*x1|"));
        assert!(!cert.member);
        assert!(cert.witness.is_some());
    }

    #[test]
    fn omega_centralizer_is_polynomial() {
        let ctx = AlgebraContext::new(1, 1, 4);
        let omega = crate::tensor_algebra::special_elements(ctx).omega;
        for d in 1..=4 {
            let c = omega_centralizer(ctx, d);
            if d % 2 == 0 {
                assert_eq!(c.len(), 1);
                let w = omega.pow(d / 2);
                let (word, coeff) = c[0].terms().next().unwrap();
                assert_eq!(c[0], w.scale(&(coeff / w.coeff(word))));
            } else {
                assert!(c.is_empty());
            }
        }
    }

    #[test]
    fn lowest_order_of_group_ring_operations() {
        use crate::group_ring::{Expansion, ExpansionMap, GroupRingElement, Kappa};
        let ctx = AlgebraContext::new(1, 2, 6);
        let theta = ExpansionMap::new(&Expansion::Exp, ctx).unwrap();
        let kap = Kappa::new(ctx);
        let f = Framing::new(ctx, vec![2], vec![-1], vec![1, 3]).unwrap();
        let one = GroupRingElement::one(ctx);
        let lift = |letters: &[(char, usize)]| {
            let mut u = one.clone();
            let mut lead = TensorElement::one(ctx);
            for &(c, i) in letters {
                let (g, x) = match c {
                    'a' => (GroupRingElement::alpha(ctx, i), TensorElement::x(ctx, i)),
                    'b' => (GroupRingElement::beta(ctx, i), TensorElement::y(ctx, i)),
                    _ => (GroupRingElement::gamma(ctx, i), TensorElement::z(ctx, i)),
                };
                u = GroupRingElement::mul(&u, &(&g - &one));
                lead = &lead * &x;
            }
            (u, lead)
        };
        let samples: Vec<Vec<(char, usize)>> = vec![
            vec![('a', 1)],
            vec![('b', 1)],
            vec![('c', 1)],
            vec![('c', 2), ('a', 1)],
            vec![('b', 1), ('a', 1)],
            vec![('a', 1), ('c', 1), ('b', 1)],
            vec![('c', 2), ('c', 2)],
        ];
        for su in &samples {
            let (u, lu) = lift(su);
            let wu = lu.lowest_weight().unwrap();
            if wu >= 2 {
                let m = theta.class_tensor(&kap.mu_f(&u, &f));
                assert_eq!(m.homogeneous(wu - 2), mu_gr(&lu, &f), "mu {su:?}");
            }
            for sv in &samples {
                let (v, lv) = lift(sv);
                let w = wu + lv.lowest_weight().unwrap();
                if w > ctx.max_weight + 2 {
                    continue;
                }
                let k = theta.square(&kap.apply(&u, &v));
                assert_eq!(k.homogeneous(w - 2), pi_gr(&lu, &lv), "kappa {su:?} {sv:?}");
            }
        }
    }
}
