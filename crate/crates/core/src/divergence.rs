//! Divergence cocycles `Div`, `tDiv`, `gDiv`, the framing cocycles, and the group
//! cocycles `j`, `C_q`, `j_q`, `J_{p,q}`.

use num_traits::One;

use crate::cyclic_words::{
    project, project_left, project_pair, project_right, retract, wedge, CycTensor, CyclicElement,
    CyclicPair, CyclicWord, TensorCyc,
};
use crate::derivations::{exp_partial, partial, ExpPartial, Derivation, TAutElement, TangentialDerivation};
use crate::error::Result;
use crate::exactlin::{factorial, q, Rational};
use crate::group_ring::Framing;
use crate::series::{duflo_r, PowerSeries};
use crate::tensor_algebra::{AlgebraContext, Bi, TensorElement, TensorSquare, Word};

pub use crate::series::duflo_s;

/// A value in `|A| (x) |A|`, with its preimage under `Delta~` when it has one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivergenceValue {
    pub pair: CyclicPair,
    pub retracted: Option<CyclicElement>,
}

impl DivergenceValue {
    pub fn new(pair: CyclicPair) -> Self {
        let retracted = retract(&pair).ok();
        DivergenceValue { pair, retracted }
    }

    pub fn is_zero(&self) -> bool {
        self.pair.is_zero()
    }
}

/// Highest weight at which divergences of truncated derivations are complete:
/// `d/dx_i` lowers weight by one.
pub fn honest_weight(ctx: AlgebraContext) -> usize {
    if ctx.genus > 0 {
        ctx.max_weight.saturating_sub(1)
    } else {
        ctx.max_weight
    }
}

/// `Div(u) = |sum_g d u(g) / d g|` over all generators.
pub fn div(u: &Derivation) -> CyclicPair {
    let ctx = u.ctx;
    let mut out = CyclicPair::zero(ctx);
    for g in 0..ctx.num_gens() as u8 {
        out = &out + &project_pair(&partial(&u.images[g as usize], g));
    }
    out.truncated(honest_weight(ctx))
}

/// `[a, s'(x)s''] = a s' (x) s'' - s' (x) s'' a`
pub fn commutator_with(a: &TensorElement, s: &TensorSquare) -> TensorSquare {
    &s.lmul_left(a) - &s.rmul_right(a)
}

/// Tangential divergence as an element of `|A| (x) |A|`.
pub fn tdiv_pair(u: &TangentialDerivation) -> CyclicPair {
    let ctx = u.ctx();
    let mut out = CyclicPair::zero(ctx);
    for g in 0..2 * ctx.genus as u8 {
        out = &out + &project_pair(&partial(u.image(g), g));
    }
    for j in 1..=ctx.boundary {
        let zj = TensorElement::z(ctx, j);
        let d = partial(u.comp(j), ctx.z(j));
        out = &out + &project_pair(&commutator_with(&zj, &d));
    }
    out.truncated(honest_weight(ctx))
}

/// `tDiv(u)`, retracted to `|A|`. Failure of the retraction means `u` is not a
/// tangential derivation of the free Lie algebra.
pub fn tdiv(u: &TangentialDerivation) -> Result<CyclicElement> {
    retract(&tdiv_pair(u))
}

/// `c_j(u) = |u_j| ^ 1`
pub fn cocycle_cj(u: &TangentialDerivation, j: usize) -> CyclicPair {
    let ctx = u.ctx();
    wedge(&project(u.comp(j)), &CyclicElement::unit(ctx))
}

/// `c_q = sum_j q_j c_j`
pub fn cocycle_cq(u: &TangentialDerivation, f: &Framing) -> CyclicPair {
    let ctx = u.ctx();
    let mut out = CyclicPair::zero(ctx);
    for j in 1..=ctx.boundary {
        out.add_assign_scaled(&cocycle_cj(u, j), &q(f.q[j - 1]));
    }
    out
}

/// `c_chi(u) = u.|p| ^ 1 - c_q(u)`
pub fn cocycle_cchi(u: &TangentialDerivation, f: &Framing) -> CyclicPair {
    let ctx = u.ctx();
    let up = u.act_cyclic(&project(&f.p_element(ctx)));
    &wedge(&up, &CyclicElement::unit(ctx)) - &cocycle_cq(u, f)
}

/// `r(s) = log((e^s - 1)/s)` up to degree `d`.
pub fn duflo_r_series(d: usize) -> PowerSeries {
    duflo_r(d)
}

/// `r = sum_i |r(x_i) + r(y_i)|` as an element of `|A|`.
pub fn r_element(ctx: AlgebraContext) -> CyclicElement {
    let r = duflo_r(ctx.max_weight);
    let mut out = TensorElement::zero(ctx);
    for g in 0..2 * ctx.genus as u8 {
        out = &out + &TensorElement::gen(ctx, g).apply_series(&r).expect("generators have no constant term");
    }
    project(&out)
}

/// `gDiv(u)` in exponential generators, collapsed at `T = 1`.
pub fn gdiv_pair(u: &TangentialDerivation) -> CyclicPair {
    let ctx = u.ctx();
    let imgs = u.gen_images();
    let mut out = CyclicPair::zero(ctx);
    for g in 0..2 * ctx.genus as u8 {
        let x = TensorElement::gen(ctx, g);
        let e = x.exp().expect("generator");
        let ue = crate::derivations::apply_derivation(&imgs, &e);
        let ei = (-&x).exp().expect("generator");
        let one = TensorElement::one(ctx);
        let t = &exp_partial(&ue, g) - &TensorSquare::tensor(&one, &(&ue * &ei));
        out = &out + &project_pair(&t);
    }
    for j in 1..=ctx.boundary {
        let gam = TensorElement::z(ctx, j).exp().expect("generator");
        let d = exp_partial(u.comp(j), ctx.z(j));
        out = &out + &project_pair(&commutator_with(&gam, &d));
    }
    out.truncated(honest_weight(ctx))
}

/// `j(e^u) = sum_k (u.)^k tDiv(u) / (k+1)!`
pub fn j_exp(u: &TangentialDerivation) -> Result<CyclicElement> {
    let ctx = u.ctx();
    let hw = honest_weight(ctx);
    let mut term = tdiv(u)?;
    let mut out = CyclicElement::zero(ctx);
    for k in 0..=ctx.max_weight {
        if term.is_zero() {
            break;
        }
        out.add_assign_scaled(&term, &factorial(k + 1).recip());
        term = u.act_cyclic(&term).truncated(hw);
    }
    Ok(out.truncated(hw))
}

/// The group cocycle `j: TAut -> |A|` integrating `tDiv`.
pub fn j_taut(f: &TAutElement) -> Result<CyclicElement> {
    j_exp(&f.log())
}

/// `C_q(F) = sum_j q_j |f_j|` (the `Delta~`-preimage of `sum q_j |f_j| ^ 1`).
pub fn cq_taut(f: &TAutElement, fr: &Framing) -> CyclicElement {
    let ctx = f.ctx();
    let mut out = CyclicElement::zero(ctx);
    for j in 1..=ctx.boundary {
        out.add_assign_scaled(&project(f.conjugator(j)), &q(fr.q[j - 1]));
    }
    out
}

/// `j_q = j - C_q`
pub fn jq_taut(f: &TAutElement, fr: &Framing) -> Result<CyclicElement> {
    Ok(&j_taut(f)? - &cq_taut(f, fr))
}

/// `J_{p,q}(F) = j_q(F) + F.(r + |p|) - (r + |p|)`
pub fn jpq_taut(f: &TAutElement, fr: &Framing) -> Result<CyclicElement> {
    let ctx = f.ctx();
    let rho = &r_element(ctx) + &project(&fr.p_element(ctx));
    let moved = &f.act_cyclic(&rho) - &rho;
    Ok((&jq_taut(f, fr)? + &moved).truncated(honest_weight(ctx)))
}

/// The derivation `F u F^{-1}` with components
/// `v_j = e^{ad f_j} F(u_j) - ((e^{ad f_j} - 1)/ad f_j)(v(f_j))`.
pub fn conjugate(f: &TAutElement, u: &TangentialDerivation) -> TangentialDerivation {
    let ctx = f.ctx();
    let finv = f.inverse();
    let fi_imgs = finv.gen_images();
    let f_imgs = f.gen_images();
    let u_imgs = u.gen_images();
    let images: Vec<TensorElement> = (0..2 * ctx.genus as u8)
        .map(|g| {
            let a = fi_imgs[g as usize].clone();
            let ua = crate::derivations::apply_derivation(&u_imgs, &a);
            ua.substitute_into(&f_imgs, ctx)
        })
        .collect();
    // v on every generator, to apply v to f_j
    let mut v_all = images.clone();
    for j in 1..=ctx.boundary {
        let z = TensorElement::z(ctx, j);
        let a = z.substitute_into(&fi_imgs, ctx);
        let ua = crate::derivations::apply_derivation(&u_imgs, &a);
        v_all.push(ua.substitute_into(&f_imgs, ctx));
    }
    let eseries = crate::series::exp_series(ctx.max_weight);
    let dq = crate::series::exp_difference_quotient(ctx.max_weight);
    let comps = (1..=ctx.boundary)
        .map(|j| {
            let fj = f.conjugator(j);
            let fu = u.comp(j).substitute_into(&f_imgs, ctx);
            let vf = crate::derivations::apply_derivation(&v_all, fj);
            &TensorElement::ad_series(&eseries, fj, &fu) - &TensorElement::ad_series(&dq, fj, &vf)
        })
        .collect();
    TangentialDerivation::new(ctx, images, comps).expect("shapes match")
}

/// `(F^* tDiv)(u) = F^{-1}.tDiv(F u F^{-1})`
pub fn pullback_tdiv(f: &TAutElement, u: &TangentialDerivation) -> Result<CyclicElement> {
    let v = conjugate(f, u);
    let t = tdiv(&v)?;
    Ok(f.inverse().act_cyclic(&t).truncated(honest_weight(f.ctx())))
}

/// A `T`-linear tangential derivation: `a (x) b` stands for `aTb`. Images are given on
/// the group-like generators `alpha_i = e^{x_i}`, `beta_i = e^{y_i}` and as
/// components `u(gamma_j) = [gamma_j, u_j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TLinearDerivation {
    pub ctx: AlgebraContext,
    pub images: Vec<TensorSquare>,
    pub comps: Vec<TensorSquare>,
}

/// A value in `(|A| (x) A) + (A (x) |A|)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitValue {
    pub left: CycTensor,
    pub right: TensorCyc,
}

impl SplitValue {
    pub fn zero(ctx: AlgebraContext) -> Self {
        SplitValue { left: Bi::zero(ctx), right: Bi::zero(ctx) }
    }

    pub fn add(&self, o: &SplitValue) -> SplitValue {
        SplitValue { left: &self.left + &o.left, right: &self.right + &o.right }
    }

    pub fn sub(&self, o: &SplitValue) -> SplitValue {
        SplitValue { left: &self.left - &o.left, right: &self.right - &o.right }
    }

    pub fn truncated(&self, k: usize) -> SplitValue {
        SplitValue { left: self.left.truncated(k), right: self.right.truncated(k) }
    }

    pub fn is_zero(&self) -> bool {
        self.left.is_zero() && self.right.is_zero()
    }

    /// Collapse at `T = 1`.
    pub fn collapse(&self) -> CyclicPair {
        let ctx = self.left.ctx();
        let mut out = CyclicPair::zero(ctx);
        for ((a, b), c) in self.left.terms() {
            out.add_term(a.clone(), CyclicWord::new(b), c.clone());
        }
        for ((a, b), c) in self.right.terms() {
            out.add_term(CyclicWord::new(a), b.clone(), c.clone());
        }
        out
    }
}

/// `d/d alpha (aTb) = a'(x)a''Tb + aTb'(x)b''`, projected to the split form
/// `(|a'|, b a'') + (b' a, |b''|)`, with `a'(x)a'' = d a / d alpha`.
fn split_partial(t: &TensorSquare, gen: u8) -> SplitValue {
    let ctx = t.ctx();
    let ep = ExpPartial::new(ctx, gen);
    let mut left = TensorSquare::zero(ctx);
    let mut right = TensorSquare::zero(ctx);
    for ((a, b), c) in t.terms() {
        for ((a1, a2), ca) in ep.word(a).terms() {
            left.add_term(a1.clone(), b.concat(a2), c * ca);
        }
        for ((b1, b2), cb) in ep.word(b).terms() {
            right.add_term(b1.concat(a), b2.clone(), c * cb);
        }
    }
    SplitValue { left: project_left(&left), right: project_right(&right) }
}

impl TLinearDerivation {
    /// `gDiv` with values in `(|A| (x) A) + (A (x) |A|)`.
    pub fn gdiv(&self) -> SplitValue {
        let ctx = self.ctx;
        let mut out = SplitValue::zero(ctx);
        for g in 0..2 * ctx.genus as u8 {
            let img = &self.images[g as usize];
            out = out.add(&split_partial(img, g));
            // - 1 (x) u(alpha) alpha^{-1}:  aTb alpha^{-1} -> (1, b alpha^{-1} a)
            let ainv = (-&TensorElement::gen(ctx, g)).exp().expect("generator");
            let mut left = TensorSquare::zero(ctx);
            for ((a, b), c) in img.terms() {
                let eb = TensorElement::from_word(ctx, b.clone(), c.clone());
                let ea = TensorElement::from_word(ctx, a.clone(), Rational::one());
                for (w, cw) in (&(&eb * &ainv) * &ea).terms() {
                    left.add_term(Word::empty(), w.clone(), -cw.clone());
                }
            }
            out.left = &out.left + &project_left(&left);
        }
        for j in 1..=ctx.boundary {
            let gam = TensorElement::z(ctx, j).exp().expect("generator");
            out = out.add(&gamma_term(&self.comps[j - 1], &gam, ctx.z(j)));
        }
        out
    }
}

/// `|[gamma, d u_j / d gamma]|` for `u_j = aTb`:
/// `(|gamma a'|, b a'') - (|a'|, b gamma a'') + (b' gamma a, |b''|) - (b' a, |b'' gamma|)`.
fn gamma_term(t: &TensorSquare, gam: &TensorElement, gen: u8) -> SplitValue {
    let ctx = t.ctx();
    let w = |x: &Word| TensorElement::from_word(ctx, x.clone(), Rational::one());
    let ep = ExpPartial::new(ctx, gen);
    let mut left = TensorSquare::zero(ctx);
    let mut right = TensorSquare::zero(ctx);
    for ((a, b), c) in t.terms() {
        for ((a1, a2), ca) in ep.word(a).terms() {
            let (a1, a2, b) = (w(a1), w(a2), w(b));
            let k = c * ca;
            left.add_assign_scaled(&TensorSquare::tensor(&(gam * &a1), &(&b * &a2)), &k);
            left.add_assign_scaled(&TensorSquare::tensor(&a1, &(&(&b * gam) * &a2)), &-k);
        }
        for ((b1, b2), cb) in ep.word(b).terms() {
            let (b1, b2, a) = (w(b1), w(b2), w(a));
            let k = c * cb;
            right.add_assign_scaled(&TensorSquare::tensor(&(&(&b1 * gam) * &a), &b2), &k);
            right.add_assign_scaled(&TensorSquare::tensor(&(&b1 * &a), &(&b2 * gam)), &-k);
        }
    }
    SplitValue { left: project_left(&left), right: project_right(&right) }
}
