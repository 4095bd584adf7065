//! Tangential derivations, the group TAut, double derivations, and the structural
//! maps between surfaces (pants gluing, elliptic map, `phi`, `delta_2n`).

use std::cell::RefCell;
use std::collections::HashMap;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::error::{GtkvError, Result};
use crate::exactlin::{q, Rational};
use crate::series::{bernoulli_generating, exp_difference_quotient, PowerSeries};
use crate::tensor_algebra::{special_elements, AlgebraContext, TensorElement, TensorSquare, Word};
use crate::cyclic_words::{project, CyclicElement, CyclicPair, CyclicWord};

/// Extends generator images to a derivation of `A` by the Leibniz rule.
pub fn apply_derivation(images: &[TensorElement], a: &TensorElement) -> TensorElement {
    let ctx = a.ctx();
    let d = ctx.max_weight;
    let mut out = TensorElement::zero(ctx);
    for (w, c) in a.terms() {
        let ww = ctx.word_weight(w);
        for i in 0..w.len() {
            let g = w.0[i];
            let rest = ww - ctx.gen_weight(g);
            for (v, cv) in images[g as usize].terms() {
                if rest + ctx.word_weight(v) > d {
                    continue;
                }
                out.add_term(Word::concat3(&w.0[..i], &v.0, &w.0[i + 1..]), c * cv);
            }
        }
    }
    out
}

/// Applies a linear endomorphism of `A` to both slots of `|A| (x) |A|` as a derivation.
pub fn act_pair_derivation(p: &CyclicPair, f: impl Fn(&TensorElement) -> TensorElement) -> CyclicPair {
    let ctx = p.ctx();
    let mut out = CyclicPair::zero(ctx);
    for ((a, b), c) in p.terms() {
        let ra = TensorElement::from_word(ctx, a.as_word().clone(), Rational::one());
        let rb = TensorElement::from_word(ctx, b.as_word().clone(), Rational::one());
        for (ca, va) in project(&f(&ra)).terms() {
            out.add_term(ca.clone(), b.clone(), c * va);
        }
        for (cb, vb) in project(&f(&rb)).terms() {
            out.add_term(a.clone(), cb.clone(), c * vb);
        }
    }
    out
}

/// Applies an algebra endomorphism to both slots of `|A| (x) |A|`.
pub fn act_pair_automorphism(p: &CyclicPair, f: impl Fn(&TensorElement) -> TensorElement) -> CyclicPair {
    let ctx = p.ctx();
    let mut out = CyclicPair::zero(ctx);
    for ((a, b), c) in p.terms() {
        let fa = project(&f(&TensorElement::from_word(ctx, a.as_word().clone(), Rational::one())));
        let fb = project(&f(&TensorElement::from_word(ctx, b.as_word().clone(), Rational::one())));
        for (ca, va) in fa.terms() {
            for (cb, vb) in fb.terms() {
                out.add_term(ca.clone(), cb.clone(), c * va * vb);
            }
        }
    }
    out
}

/// A derivation of `A` given on every generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub ctx: AlgebraContext,
    pub images: Vec<TensorElement>,
}

impl Derivation {
    pub fn apply(&self, a: &TensorElement) -> TensorElement {
        apply_derivation(&self.images, a)
    }

    pub fn act_cyclic(&self, c: &CyclicElement) -> CyclicElement {
        c.map_representatives(|a| self.apply(a))
    }

    pub fn act_pair(&self, p: &CyclicPair) -> CyclicPair {
        act_pair_derivation(p, |a| self.apply(a))
    }

    pub fn bracket(&self, o: &Derivation) -> Derivation {
        let images = (0..self.images.len())
            .map(|g| &self.apply(&o.images[g]) - &o.apply(&self.images[g]))
            .collect();
        Derivation { ctx: self.ctx, images }
    }

    /// Inner derivation `a -> [s, a]`.
    pub fn inner(s: &TensorElement) -> Derivation {
        let ctx = s.ctx();
        Derivation { ctx, images: (0..ctx.num_gens() as u8).map(|g| s.bracket(&TensorElement::gen(ctx, g))).collect() }
    }
}

/// An element `(u, u_1, ..., u_n)` of `tder`: `u(z_j) = [z_j, u_j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangentialDerivation {
    ctx: AlgebraContext,
    /// images of `x_1..x_g, y_1..y_g`
    images: Vec<TensorElement>,
    /// tangential components `u_1..u_n`
    comps: Vec<TensorElement>,
}

impl TangentialDerivation {
    pub fn new(ctx: AlgebraContext, images: Vec<TensorElement>, comps: Vec<TensorElement>) -> Result<Self> {
        if images.len() != 2 * ctx.genus || comps.len() != ctx.boundary {
            return Err(GtkvError::DimensionMismatch {
                expected: 2 * ctx.genus + ctx.boundary,
                found: images.len() + comps.len(),
            });
        }
        for e in images.iter().chain(&comps) {
            ctx.check(&e.ctx())?;
        }
        Ok(TangentialDerivation { ctx, images, comps })
    }

    pub fn zero(ctx: AlgebraContext) -> Self {
        TangentialDerivation {
            ctx,
            images: vec![TensorElement::zero(ctx); 2 * ctx.genus],
            comps: vec![TensorElement::zero(ctx); ctx.boundary],
        }
    }

    pub fn ctx(&self) -> AlgebraContext {
        self.ctx
    }

    /// Image of generator `g` (one of `x_i`, `y_i`).
    pub fn image(&self, g: u8) -> &TensorElement {
        &self.images[g as usize]
    }

    pub fn images(&self) -> &[TensorElement] {
        &self.images
    }

    pub fn comps(&self) -> &[TensorElement] {
        &self.comps
    }

    pub fn comp(&self, j: usize) -> &TensorElement {
        &self.comps[j - 1]
    }

    pub fn set_image(&mut self, g: u8, e: TensorElement) {
        self.images[g as usize] = e;
    }

    pub fn set_comp(&mut self, j: usize, e: TensorElement) {
        self.comps[j - 1] = e;
    }

    /// Images of all generators, with `z_j -> [z_j, u_j]`.
    pub fn gen_images(&self) -> Vec<TensorElement> {
        let mut v = self.images.clone();
        for j in 1..=self.ctx.boundary {
            v.push(TensorElement::z(self.ctx, j).bracket(&self.comps[j - 1]));
        }
        v
    }

    pub fn as_derivation(&self) -> Derivation {
        Derivation { ctx: self.ctx, images: self.gen_images() }
    }

    pub fn apply(&self, a: &TensorElement) -> TensorElement {
        apply_derivation(&self.gen_images(), a)
    }

    pub fn act_cyclic(&self, c: &CyclicElement) -> CyclicElement {
        let imgs = self.gen_images();
        c.map_representatives(|a| apply_derivation(&imgs, a))
    }

    pub fn act_pair(&self, p: &CyclicPair) -> CyclicPair {
        let imgs = self.gen_images();
        act_pair_derivation(p, |a| apply_derivation(&imgs, a))
    }

    /// Components `w_j = u(v_j) - v(u_j) + [u_j, v_j]`.
    pub fn bracket(&self, o: &TangentialDerivation) -> TangentialDerivation {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let ui = self.gen_images();
        let vi = o.gen_images();
        let images = (0..2 * self.ctx.genus)
            .map(|g| &apply_derivation(&ui, &o.images[g]) - &apply_derivation(&vi, &self.images[g]))
            .collect();
        let comps = (0..self.ctx.boundary)
            .map(|j| {
                let a = &apply_derivation(&ui, &o.comps[j]) - &apply_derivation(&vi, &self.comps[j]);
                &a + &self.comps[j].bracket(&o.comps[j])
            })
            .collect();
        TangentialDerivation { ctx: self.ctx, images, comps }
    }

    pub fn add(&self, o: &TangentialDerivation) -> TangentialDerivation {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &TangentialDerivation) -> TangentialDerivation {
        self.zip(o, |a, b| a - b)
    }

    fn zip(&self, o: &TangentialDerivation, f: impl Fn(&TensorElement, &TensorElement) -> TensorElement) -> TangentialDerivation {
        self.ctx.check(&o.ctx).expect("context mismatch");
        TangentialDerivation {
            ctx: self.ctx,
            images: self.images.iter().zip(&o.images).map(|(a, b)| f(a, b)).collect(),
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> TangentialDerivation {
        self.map(|e| e.scale(c))
    }

    pub fn map(&self, f: impl Fn(&TensorElement) -> TensorElement) -> TangentialDerivation {
        TangentialDerivation {
            ctx: self.ctx,
            images: self.images.iter().map(&f).collect(),
            comps: self.comps.iter().map(&f).collect(),
        }
    }

    /// Degree-`k` part: images of weight `k+1`, components of weight `k`.
    pub fn homogeneous(&self, k: usize) -> TangentialDerivation {
        TangentialDerivation {
            ctx: self.ctx,
            images: self.images.iter().map(|e| e.homogeneous(k + 1)).collect(),
            comps: self.comps.iter().map(|e| e.homogeneous(k)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().chain(&self.comps).all(|e| e.is_zero())
    }

    /// Lowest degree present (`None` for zero).
    pub fn lowest_degree(&self) -> Option<usize> {
        let a = self.images.iter().filter_map(|e| e.lowest_weight()).map(|w| w.saturating_sub(1)).min();
        let b = self.comps.iter().filter_map(|e| e.lowest_weight()).min();
        match (a, b) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.lowest_degree().is_none_or(|d| d >= 1)
    }

    /// Every image and component is a Lie element.
    pub fn is_lie(&self) -> bool {
        self.images.iter().chain(&self.comps).all(|e| e.is_primitive())
    }

    /// `u(omega) = 0`
    pub fn is_special(&self) -> bool {
        self.apply(&special_elements(self.ctx).omega).is_zero()
    }

    pub fn with_context(&self, ctx: AlgebraContext) -> TangentialDerivation {
        self.map(|e| e.with_context(ctx))
    }

    pub fn to_json(&self) -> Value {
        derivation_json(self.ctx, &self.images, "u_j", &self.comps)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (ctx, images, comps) = parse_derivation_json(v, "u_j")?;
        TangentialDerivation::new(ctx, images, comps)
    }
}

fn derivation_json(ctx: AlgebraContext, images: &[TensorElement], key: &str, comps: &[TensorElement]) -> Value {
    let mut m = Map::new();
    for (g, e) in images.iter().enumerate() {
        m.insert(ctx.gen_name(g as u8), Value::String(e.render()));
    }
    json!({
        "context": {"genus": ctx.genus, "boundary": ctx.boundary, "max_weight": ctx.max_weight},
        "images": Value::Object(m),
        key: comps.iter().map(|e| Value::String(e.render())).collect::<Vec<_>>(),
    })
}

fn parse_derivation_json(v: &Value, key: &str) -> Result<(AlgebraContext, Vec<TensorElement>, Vec<TensorElement>)> {
    let bad = |m: &str| GtkvError::Parse { line: 1, column: 1, message: m.to_string() };
    let c = v.get("context").ok_or_else(|| bad("missing context"))?;
    let field = |k: &str| c.get(k).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(|| bad(&format!("missing context.{k}")));
    let ctx = AlgebraContext::new(field("genus")?, field("boundary")?, field("max_weight")?);
    let imgs = v.get("images").and_then(Value::as_object).ok_or_else(|| bad("missing images"))?;
    let mut images = Vec::new();
    for g in 0..2 * ctx.genus {
        let name = ctx.gen_name(g as u8);
        let s = imgs.get(&name).and_then(Value::as_str).ok_or_else(|| bad(&format!("missing image of {name}")))?;
        images.push(TensorElement::parse(ctx, s)?);
    }
    let arr = v.get(key).and_then(Value::as_array).ok_or_else(|| bad(&format!("missing {key}")))?;
    let comps = arr
        .iter()
        .map(|s| s.as_str().ok_or_else(|| bad("component must be a string")).and_then(|s| TensorElement::parse(ctx, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok((ctx, images, comps))
}

/// An element `(F, f_1, ..., f_n)` of TAut: `F(z_j) = e^{-f_j} z_j e^{f_j}`.
/// With `n = 0` this is a plain automorphism of the free Lie algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TAutElement {
    ctx: AlgebraContext,
    images: Vec<TensorElement>,
    f: Vec<TensorElement>,
}

fn conj(f: &TensorElement, a: &TensorElement) -> TensorElement {
    let e = f.exp().expect("conjugator has zero constant term");
    let ei = (-f).exp().expect("conjugator has zero constant term");
    &(&ei * a) * &e
}

impl TAutElement {
    pub fn new(ctx: AlgebraContext, images: Vec<TensorElement>, f: Vec<TensorElement>) -> Result<Self> {
        if images.len() != 2 * ctx.genus || f.len() != ctx.boundary {
            return Err(GtkvError::DimensionMismatch { expected: 2 * ctx.genus + ctx.boundary, found: images.len() + f.len() });
        }
        for e in images.iter().chain(&f) {
            ctx.check(&e.ctx())?;
        }
        Ok(TAutElement { ctx, images, f })
    }

    pub fn identity(ctx: AlgebraContext) -> Self {
        TAutElement {
            ctx,
            images: (0..2 * ctx.genus as u8).map(|g| TensorElement::gen(ctx, g)).collect(),
            f: vec![TensorElement::zero(ctx); ctx.boundary],
        }
    }

    pub fn ctx(&self) -> AlgebraContext {
        self.ctx
    }

    pub fn images(&self) -> &[TensorElement] {
        &self.images
    }

    pub fn conjugators(&self) -> &[TensorElement] {
        &self.f
    }

    pub fn conjugator(&self, j: usize) -> &TensorElement {
        &self.f[j - 1]
    }

    pub fn gen_images(&self) -> Vec<TensorElement> {
        let mut v = self.images.clone();
        for j in 1..=self.ctx.boundary {
            v.push(conj(&self.f[j - 1], &TensorElement::z(self.ctx, j)));
        }
        v
    }

    pub fn apply(&self, a: &TensorElement) -> TensorElement {
        a.substitute_into(&self.gen_images(), self.ctx)
    }

    pub fn act_cyclic(&self, c: &CyclicElement) -> CyclicElement {
        let imgs = self.gen_images();
        c.map_representatives(|a| a.substitute_into(&imgs, self.ctx))
    }

    pub fn act_pair(&self, p: &CyclicPair) -> CyclicPair {
        let imgs = self.gen_images();
        act_pair_automorphism(p, |a| a.substitute_into(&imgs, self.ctx))
    }

    /// `self . o`, i.e. apply `o` first.
    pub fn compose(&self, o: &TAutElement) -> TAutElement {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let imgs = self.gen_images();
        let images = o.images.iter().map(|e| e.substitute_into(&imgs, self.ctx)).collect();
        let f = (0..self.ctx.boundary)
            .map(|j| {
                let fg = o.f[j].substitute_into(&imgs, self.ctx);
                self.f[j].bch(&fg).expect("Lie elements have zero constant term")
            })
            .collect();
        TAutElement { ctx: self.ctx, images, f }
    }

    pub fn inverse(&self) -> TAutElement {
        let ctx = self.ctx;
        let own = self.gen_images();
        let mut g: Vec<TensorElement> = (0..ctx.num_gens() as u8).map(|i| TensorElement::gen(ctx, i)).collect();
        for _ in 0..=ctx.max_weight + 1 {
            let next: Vec<TensorElement> = (0..ctx.num_gens())
                .map(|i| {
                    let fg = g[i].substitute_into(&own, ctx);
                    let n = &fg - &g[i];
                    &TensorElement::gen(ctx, i as u8) - &n
                })
                .collect();
            if next == g {
                break;
            }
            g = next;
        }
        let images = g[..2 * ctx.genus].to_vec();
        let f = self.f.iter().map(|fj| -&fj.substitute_into(&g, ctx)).collect();
        TAutElement { ctx, images, f }
    }

    /// Exponential of a positive tangential derivation. The conjugators solve
    /// `f' = u(f) + B(ad_f)(u_j)` with `B(t) = t/(e^t - 1)` on `[0, 1]`.
    pub fn exp(u: &TangentialDerivation) -> Result<TAutElement> {
        if !u.is_positive() {
            return Err(GtkvError::Precondition("exp needs a positive-degree derivation".into()));
        }
        let ctx = u.ctx;
        let uimg = u.gen_images();
        let images = (0..2 * ctx.genus as u8)
            .map(|g| {
                let mut out = TensorElement::zero(ctx);
                let mut term = TensorElement::gen(ctx, g);
                for k in 0..=ctx.max_weight {
                    if term.is_zero() {
                        break;
                    }
                    out = &out + &term;
                    term = apply_derivation(&uimg, &term).scale(&q(k as i64 + 1).recip());
                }
                out
            })
            .collect();
        let bern = bernoulli_generating(ctx.max_weight + 1);
        let f = (0..ctx.boundary).map(|j| flow_conjugator(&uimg, &u.comps[j], &bern)).collect();
        Ok(TAutElement { ctx, images, f })
    }

    /// Logarithm: images from `log(F)` on generators; components corrected until
    /// `exp` reproduces the conjugators exactly.
    pub fn log(&self) -> TangentialDerivation {
        let ctx = self.ctx;
        let own = self.gen_images();
        let nmap = |a: &TensorElement| &a.substitute_into(&own, ctx) - a;
        let images = (0..2 * ctx.genus as u8)
            .map(|g| {
                let mut out = TensorElement::zero(ctx);
                let mut pow = TensorElement::gen(ctx, g);
                for k in 1..=ctx.max_weight + 1 {
                    pow = nmap(&pow);
                    if pow.is_zero() {
                        break;
                    }
                    let c = if k % 2 == 1 { q(1) } else { q(-1) } / q(k as i64);
                    out.add_assign_scaled(&pow, &c);
                }
                out
            })
            .collect();
        let mut u = TangentialDerivation { ctx, images, comps: self.f.clone() };
        for _ in 0..=ctx.max_weight + 1 {
            let e = TAutElement::exp(&u).expect("log of a unipotent automorphism is positive");
            let diffs: Vec<TensorElement> = (0..ctx.boundary).map(|j| &self.f[j] - &e.f[j]).collect();
            if diffs.iter().all(|d| d.is_zero()) {
                break;
            }
            for j in 0..ctx.boundary {
                u.comps[j] = &u.comps[j] + &diffs[j];
            }
        }
        u
    }

    pub fn with_context(&self, ctx: AlgebraContext) -> TAutElement {
        TAutElement {
            ctx,
            images: self.images.iter().map(|e| e.with_context(ctx)).collect(),
            f: self.f.iter().map(|e| e.with_context(ctx)).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == TAutElement::identity(self.ctx)
    }

    pub fn to_json(&self) -> Value {
        derivation_json(self.ctx, &self.images, "f_j", &self.f)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (ctx, images, f) = parse_derivation_json(v, "f_j")?;
        TAutElement::new(ctx, images, f)
    }
}

/// Polynomials in an auxiliary time variable with coefficients in `A`.
type TPoly = Vec<TensorElement>;

fn tpoly_bracket(a: &TPoly, b: &TPoly, cap: usize) -> TPoly {
    let ctx = a[0].ctx();
    let mut out = vec![TensorElement::zero(ctx); cap + 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (k, bk) in b.iter().enumerate() {
            if i + k > cap || bk.is_zero() {
                continue;
            }
            out[i + k] = &out[i + k] + &ai.bracket(bk);
        }
    }
    out
}

fn flow_conjugator(uimg: &[TensorElement], uj: &TensorElement, bern: &PowerSeries) -> TensorElement {
    let ctx = uj.ctx();
    let cap = ctx.max_weight + 1;
    let mut f: TPoly = vec![TensorElement::zero(ctx); cap + 1];
    for _ in 0..=cap + 1 {
        // rhs(t) = u(f(t)) + sum_k b_k ad_{f(t)}^k (u_j)
        let mut rhs: TPoly = f.iter().map(|e| apply_derivation(uimg, e)).collect();
        let mut cur: TPoly = vec![TensorElement::zero(ctx); cap + 1];
        cur[0] = uj.clone();
        for k in 0..=ctx.max_weight {
            let c = bern.coeff(k);
            if !c.is_zero() {
                for m in 0..=cap {
                    rhs[m].add_assign_scaled(&cur[m], &c);
                }
            }
            cur = tpoly_bracket(&f, &cur, cap);
            if cur.iter().all(|e| e.is_zero()) {
                break;
            }
        }
        let mut next: TPoly = vec![TensorElement::zero(ctx); cap + 1];
        for m in 0..cap {
            next[m + 1] = rhs[m].scale(&q(m as i64 + 1).recip());
        }
        if next == f {
            break;
        }
        f = next;
    }
    let mut out = TensorElement::zero(ctx);
    for e in &f {
        out = &out + e;
    }
    out
}

/// A derivation `A -> A (x) A` into the outer bimodule `a (s'(x)s'') b = a s' (x) s'' b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleDerivation {
    pub ctx: AlgebraContext,
    pub images: Vec<TensorSquare>,
}

impl DoubleDerivation {
    /// `d/d gen`: `gen -> 1 (x) 1`, other generators to zero.
    pub fn partial(ctx: AlgebraContext, gen: u8) -> Self {
        let images = (0..ctx.num_gens() as u8)
            .map(|g| if g == gen { TensorSquare::one_one(ctx) } else { TensorSquare::zero(ctx) })
            .collect();
        DoubleDerivation { ctx, images }
    }

    /// `phi_0(a) = 1 (x) a - a (x) 1`
    pub fn phi0(ctx: AlgebraContext) -> Self {
        let one = TensorElement::one(ctx);
        let images = (0..ctx.num_gens() as u8)
            .map(|g| {
                let x = TensorElement::gen(ctx, g);
                &TensorSquare::tensor(&one, &x) - &TensorSquare::tensor(&x, &one)
            })
            .collect();
        DoubleDerivation { ctx, images }
    }

    pub fn apply(&self, a: &TensorElement) -> TensorSquare {
        apply_double(&self.images, a)
    }
}

/// Leibniz extension of double-derivation images.
pub fn apply_double(images: &[TensorSquare], a: &TensorElement) -> TensorSquare {
    let ctx = a.ctx();
    let d = ctx.max_weight;
    let mut out = TensorSquare::zero(ctx);
    for (w, c) in a.terms() {
        let ww = ctx.word_weight(w);
        for i in 0..w.len() {
            let g = w.0[i];
            let rest = ww - ctx.gen_weight(g);
            for ((s1, s2), cs) in images[g as usize].terms() {
                if rest + ctx.word_weight(s1) + ctx.word_weight(s2) > d {
                    continue;
                }
                let l = Word::concat3(&w.0[..i], &s1.0, &[]);
                let r = Word::concat3(&s2.0, &w.0[i + 1..], &[]);
                out.add_term(l, r, c * cs);
            }
        }
    }
    out
}

/// Partial derivative of `a` with respect to generator `gen`.
pub fn partial(a: &TensorElement, gen: u8) -> TensorSquare {
    let ctx = a.ctx();
    let mut out = TensorSquare::zero(ctx);
    for (w, c) in a.terms() {
        for i in 0..w.len() {
            if w.0[i] == gen {
                out.add_term(Word(w.0[..i].to_vec()), Word(w.0[i + 1..].to_vec()), c.clone());
            }
        }
    }
    out
}

/// `a <> b = a'b' (x) b''a''`
pub fn diamond(a: &TensorSquare, b: &TensorSquare) -> TensorSquare {
    let mut out = TensorSquare::zero(a.ctx());
    for ((a1, a2), ca) in a.terms() {
        for ((b1, b2), cb) in b.terms() {
            out.add_term(a1.concat(b1), b2.concat(a2), ca * cb);
        }
    }
    out
}

/// Partial derivative in exponential coordinates: `d/d(e^gen)` sends `e^gen` to
/// `1 (x) 1`. Computed by rewriting `a` in the variables `X = e^gen - 1`.
pub fn exp_partial(a: &TensorElement, gen: u8) -> TensorSquare {
    ExpPartial::new(a.ctx(), gen).apply(a)
}

/// [`exp_partial`] for one generator, memoized on words.
pub struct ExpPartial {
    ctx: AlgebraContext,
    gen: u8,
    to_x: Vec<TensorElement>,
    back: Vec<TensorElement>,
    cache: RefCell<HashMap<Word, TensorSquare>>,
}

impl ExpPartial {
    pub fn new(ctx: AlgebraContext, gen: u8) -> Self {
        ExpPartial { ctx, gen, to_x: coordinate_change(ctx, true), back: coordinate_change(ctx, false), cache: RefCell::default() }
    }

    pub fn word(&self, w: &Word) -> TensorSquare {
        if let Some(v) = self.cache.borrow().get(w) {
            return v.clone();
        }
        let ctx = self.ctx;
        let b = TensorElement::from_word(ctx, w.clone(), Rational::one()).substitute_into(&self.to_x, ctx);
        let v = partial(&b, self.gen).map_slots(|s| s.substitute_into(&self.back, ctx), |s| s.substitute_into(&self.back, ctx));
        self.cache.borrow_mut().insert(w.clone(), v.clone());
        v
    }

    pub fn apply(&self, a: &TensorElement) -> TensorSquare {
        let mut out = TensorSquare::zero(self.ctx);
        for (w, c) in a.terms() {
            out.add_assign_scaled(&self.word(w), c);
        }
        out
    }
}

/// Generator images of `x -> log(1+x)` (`forward`) or `x -> e^x - 1`.
pub fn coordinate_change(ctx: AlgebraContext, forward: bool) -> Vec<TensorElement> {
    (0..ctx.num_gens() as u8)
        .map(|g| {
            let x = TensorElement::gen(ctx, g);
            if forward {
                (&TensorElement::one(ctx) + &x).log().expect("constant term is 1")
            } else {
                &x.exp().expect("zero constant term") - &TensorElement::one(ctx)
            }
        })
        .collect()
}

/// The derivation `phi` of the `(g, n) = (1, 0)` algebra: `x -> x`,
/// `y -> ((e^{ad_x} - 1)/ad_x) y`, as an automorphism.
pub fn phi_auto(ctx: AlgebraContext) -> Result<TAutElement> {
    require_genus_one(ctx)?;
    let x = TensorElement::x(ctx, 1);
    let y = TensorElement::y(ctx, 1);
    let fy = TensorElement::ad_series(&exp_difference_quotient(ctx.max_weight), &x, &y);
    TAutElement::new(ctx, vec![x, fy], vec![])
}

/// The derivation `y -> r(ad_x) y`, `x -> 0` whose exponential is `phi`.
pub fn phi_generator(ctx: AlgebraContext) -> Result<TangentialDerivation> {
    require_genus_one(ctx)?;
    let x = TensorElement::x(ctx, 1);
    let y = TensorElement::y(ctx, 1);
    let ry = TensorElement::ad_series(&crate::series::duflo_r(ctx.max_weight), &x, &y);
    TangentialDerivation::new(ctx, vec![TensorElement::zero(ctx), ry], vec![])
}

fn require_genus_one(ctx: AlgebraContext) -> Result<()> {
    if ctx.genus == 1 && ctx.boundary == 0 {
        Ok(())
    } else {
        Err(GtkvError::WrongContext(format!("expected g=1, n=0, got {ctx}")))
    }
}

/// `delta_2n(x) = ad_x^{2n}(y)`,
/// `delta_2n(y) = sum_{i<n} (-1)^i [ad_x^i y, ad_x^{2n-1-i} y]`.
pub fn delta2n(ctx: AlgebraContext, n: usize) -> Result<TangentialDerivation> {
    require_genus_one(ctx)?;
    if n == 0 {
        return Err(GtkvError::Precondition("delta_2n needs n >= 1".into()));
    }
    let x = TensorElement::x(ctx, 1);
    let y = TensorElement::y(ctx, 1);
    let mut ad = vec![y.clone()];
    for k in 1..=2 * n {
        let prev = ad[k - 1].clone();
        ad.push(x.bracket(&prev));
    }
    let dx = ad[2 * n].clone();
    let mut dy = TensorElement::zero(ctx);
    for i in 0..n {
        let t = ad[i].bracket(&ad[2 * n - 1 - i]);
        dy = if i % 2 == 0 { &dy + &t } else { &dy - &t };
    }
    TangentialDerivation::new(ctx, vec![dx, dy], vec![])
}

/// Where the two legs of a pair of pants are glued: surface `k` has `g_k` handles
/// and `n_k` boundary generators, with `n1 = 0` or `g2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PantsTarget {
    pub g1: usize,
    pub n1: usize,
    pub g2: usize,
    pub n2: usize,
}

impl PantsTarget {
    pub fn context(&self, d: usize) -> AlgebraContext {
        AlgebraContext::new(self.g1 + self.g2, self.n1 + self.n2, d)
    }

    /// Which glued surface (1 or 2) generator `g` of the target belongs to.
    pub fn side(&self, ctx: AlgebraContext, g: u8) -> usize {
        let g = g as usize;
        let gen = ctx.genus;
        if g < gen {
            if g < self.g1 { 1 } else { 2 }
        } else if g < 2 * gen {
            if g - gen < self.g1 { 1 } else { 2 }
        } else if g - 2 * gen < self.n1 {
            1
        } else {
            2
        }
    }

    /// Images of the generators of surface `k`'s own algebra inside the target.
    pub fn embedding(&self, k: usize, src: AlgebraContext, ctx: AlgebraContext) -> Vec<TensorElement> {
        let (goff, noff) = if k == 1 { (0, 0) } else { (self.g1, self.n1) };
        let mut v = Vec::new();
        for i in 1..=src.genus {
            v.push(TensorElement::x(ctx, goff + i));
        }
        for i in 1..=src.genus {
            v.push(TensorElement::y(ctx, goff + i));
        }
        for j in 1..=src.boundary {
            v.push(TensorElement::z(ctx, noff + j));
        }
        v
    }

    /// `omega_1, omega_2` in the target.
    pub fn omegas(&self, ctx: AlgebraContext) -> [TensorElement; 2] {
        let mut out = [TensorElement::zero(ctx), TensorElement::zero(ctx)];
        for k in 1..=2 {
            let src = if k == 1 { AlgebraContext::new(self.g1, self.n1, ctx.max_weight) } else { AlgebraContext::new(self.g2, self.n2, ctx.max_weight) };
            let om = special_elements(src).omega;
            out[k - 1] = om.substitute_into(&self.embedding(k, src, ctx), ctx);
        }
        out
    }

    /// `xi_1, xi_2` in the target.
    pub fn xis(&self, ctx: AlgebraContext) -> [TensorElement; 2] {
        let mut out = [TensorElement::zero(ctx), TensorElement::zero(ctx)];
        for k in 1..=2 {
            let src = if k == 1 { AlgebraContext::new(self.g1, self.n1, ctx.max_weight) } else { AlgebraContext::new(self.g2, self.n2, ctx.max_weight) };
            let xi = special_elements(src).xi;
            out[k - 1] = xi.substitute_into(&self.embedding(k, src, ctx), ctx);
        }
        out
    }

    fn check(&self) -> Result<()> {
        if self.n1 == 0 || self.g2 == 0 {
            Ok(())
        } else {
            Err(GtkvError::Precondition("gluing needs n1 = 0 or g2 = 0".into()))
        }
    }
}

fn require_pants(ctx: AlgebraContext) -> Result<()> {
    if ctx.genus == 0 && ctx.boundary == 2 {
        Ok(())
    } else {
        Err(GtkvError::WrongContext(format!("expected the pair of pants g=0, n=2, got {ctx}")))
    }
}

/// `P(u)`: generators of surface `k` go to `[gen, u_k(omega_1, omega_2)]`.
pub fn pants_tder(u: &TangentialDerivation, target: PantsTarget, d: usize) -> Result<TangentialDerivation> {
    require_pants(u.ctx)?;
    target.check()?;
    let ctx = target.context(d);
    let om = target.omegas(ctx);
    let sub = [om[0].clone(), om[1].clone()];
    let uk: Vec<TensorElement> = (0..2).map(|k| u.comps[k].substitute_into(&sub, ctx)).collect();
    let images = (0..2 * ctx.genus as u8)
        .map(|g| TensorElement::gen(ctx, g).bracket(&uk[target.side(ctx, g) - 1]))
        .collect();
    let comps = (1..=ctx.boundary).map(|j| uk[target.side(ctx, ctx.z(j)) - 1].clone()).collect();
    TangentialDerivation::new(ctx, images, comps)
}

fn pants_conjugate(f: &TAutElement, target: PantsTarget, d: usize, use_xi: bool) -> Result<TAutElement> {
    require_pants(f.ctx)?;
    target.check()?;
    let ctx = target.context(d);
    let pts = if use_xi { target.xis(ctx) } else { target.omegas(ctx) };
    let sub = [pts[0].clone(), pts[1].clone()];
    let fk: Vec<TensorElement> = (0..2).map(|k| f.f[k].substitute_into(&sub, ctx)).collect();
    let images = (0..2 * ctx.genus as u8).map(|g| conj(&fk[target.side(ctx, g) - 1], &TensorElement::gen(ctx, g))).collect();
    let fs = (1..=ctx.boundary).map(|j| fk[target.side(ctx, ctx.z(j)) - 1].clone()).collect();
    TAutElement::new(ctx, images, fs)
}

/// `P(F)`: generators of surface `k` are conjugated by `e^{f_k(omega_1, omega_2)}`.
pub fn pants_taut(f: &TAutElement, target: PantsTarget, d: usize) -> Result<TAutElement> {
    pants_conjugate(f, target, d, false)
}

/// `P~(F)`: as `pants_taut` with `xi_1, xi_2` in place of `omega_1, omega_2`.
pub fn pants_conj(f: &TAutElement, target: PantsTarget, d: usize) -> Result<TAutElement> {
    pants_conjugate(f, target, d, true)
}

/// `F_1 x F_2` on the glued algebra.
pub fn product_taut(f1: &TAutElement, f2: &TAutElement, target: PantsTarget, d: usize) -> Result<TAutElement> {
    target.check()?;
    let ctx = target.context(d);
    let mut images = vec![TensorElement::zero(ctx); 2 * ctx.genus];
    let mut fs = vec![TensorElement::zero(ctx); ctx.boundary];
    for (k, f) in [(1usize, f1), (2, f2)] {
        let src = f.ctx;
        let emb = target.embedding(k, src, ctx);
        let (goff, noff) = if k == 1 { (0, 0) } else { (target.g1, target.n1) };
        for i in 0..src.genus {
            images[goff + i] = f.images[i].substitute_into(&emb, ctx);
            images[ctx.genus + goff + i] = f.images[src.genus + i].substitute_into(&emb, ctx);
        }
        for j in 0..src.boundary {
            fs[noff + j] = f.f[j].substitute_into(&emb, ctx);
        }
    }
    TAutElement::new(ctx, images, fs)
}

/// `psi_1 = e^x y e^{-x}`, `psi_2 = -y` in the `(1, 0)` algebra.
pub fn psi(ctx: AlgebraContext) -> [TensorElement; 2] {
    let x = TensorElement::x(ctx, 1);
    let y = TensorElement::y(ctx, 1);
    let p1 = &(&x.exp().unwrap() * &y) * &(-&x).exp().unwrap();
    [p1, -&y]
}

/// `u^ell`: on `alpha = e^x`, `alpha -> [alpha, u_2(psi)] + (u_2 - u_1)(psi) alpha`
/// and `beta -> [beta, u_2(psi)]`; returned as a derivation on `x, y`.
pub fn elliptic_tder(u: &TangentialDerivation, d: usize) -> Result<TangentialDerivation> {
    require_pants(u.ctx)?;
    let ctx = AlgebraContext::new(1, 0, d);
    let ps = psi(ctx);
    let u1 = u.comps[0].substitute_into(&ps, ctx);
    let u2 = u.comps[1].substitute_into(&ps, ctx);
    let x = TensorElement::x(ctx, 1);
    let y = TensorElement::y(ctx, 1);
    let bern = bernoulli_generating(d);
    let ex = crate::series::exp_series(d);
    // u(x) = B(ad_x)(u(alpha) alpha^{-1}) with u(alpha) alpha^{-1} = e^{ad_x} u_2 - u_1
    let ua = &TensorElement::ad_series(&ex, &x, &u2) - &u1;
    let ux = TensorElement::ad_series(&bern, &x, &ua);
    let uy = y.bracket(&u2);
    TangentialDerivation::new(ctx, vec![ux, uy], vec![])
}

/// `F^ell`: `x -> log(e^{-f_1(psi)} e^x e^{f_2(psi)})`, `y -> e^{-f_2(psi)} y e^{f_2(psi)}`.
pub fn elliptic_taut(f: &TAutElement, d: usize) -> Result<TAutElement> {
    require_pants(f.ctx)?;
    let ctx = AlgebraContext::new(1, 0, d);
    let ps = psi(ctx);
    let f1 = f.f[0].substitute_into(&ps, ctx);
    let f2 = f.f[1].substitute_into(&ps, ctx);
    let x = TensorElement::x(ctx, 1);
    let y = TensorElement::y(ctx, 1);
    let ga = &(&(-&f1).exp()? * &x.exp()?) * &f2.exp()?;
    let fx = ga.log()?;
    let fy = conj(&f2, &y);
    TAutElement::new(ctx, vec![fx, fy], vec![])
}

/// Conjugation by `e^{-s}`: the automorphism `a -> e^{s} a e^{-s}` written as a TAut
/// element with conjugators `f_j = -s`.
pub fn inner_taut(s: &TensorElement) -> TAutElement {
    let ctx = s.ctx();
    let images = (0..2 * ctx.genus as u8).map(|g| conj(&-s, &TensorElement::gen(ctx, g))).collect();
    let f = vec![-s; ctx.boundary];
    TAutElement { ctx, images, f }
}

/// The inner tangential derivation `a -> [s, a]` with `u_j = -s`.
pub fn inner_tder(s: &TensorElement) -> TangentialDerivation {
    let ctx = s.ctx();
    let images = (0..2 * ctx.genus as u8).map(|g| s.bracket(&TensorElement::gen(ctx, g))).collect();
    TangentialDerivation { ctx, images, comps: vec![-s; ctx.boundary] }
}

pub fn cyclic_unit_word() -> CyclicWord {
    CyclicWord::unit()
}

pub fn is_zero_series(s: &PowerSeries) -> bool {
    s.coeffs.iter().all(Zero::is_zero)
}
