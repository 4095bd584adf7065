//! The trace space `|A| = A/[A,A]`, the needle map and the `|A| (x) |A|` calculus.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{GtkvError, Result};
use crate::exactlin::{q, Rational};
use crate::lin::Lin;
use crate::tensor_algebra::{AlgebraContext, Bi, HasWord, TensorElement, TensorSquare, Word};
use crate::text::format_sum;

/// Least rotation of a word (Booth's algorithm); the class key in `|A|`.
pub fn least_rotation(w: &[u8]) -> Vec<u8> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let s: Vec<u8> = w.iter().chain(w.iter()).copied().collect();
    let mut f: Vec<isize> = vec![-1; 2 * n];
    let mut k: usize = 0;
    for j in 1..2 * n {
        let sj = s[j];
        let mut i = f[j - k - 1];
        while i != -1 && sj != s[k + i as usize + 1] {
            if sj < s[k + i as usize + 1] {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && sj != s[k] {
            if sj < s[k] {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    s[k..k + n].to_vec()
}

/// A necklace: a word stored in its least rotation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord(Word);

impl CyclicWord {
    pub fn new(w: &Word) -> Self {
        CyclicWord(Word(least_rotation(&w.0)))
    }

    pub fn unit() -> Self {
        CyclicWord(Word::empty())
    }

    pub fn as_word(&self) -> &Word {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All rotations of the representative, with multiplicity.
    pub fn rotations(&self) -> Vec<Word> {
        let n = self.0.len();
        (0..n).map(|k| Word([&self.0 .0[k..], &self.0 .0[..k]].concat())).collect()
    }
}

impl HasWord for CyclicWord {
    fn word(&self) -> &Word {
        &self.0
    }
    fn render(&self, ctx: &AlgebraContext) -> String {
        format!("|{}|", self.0.render(ctx))
    }
}

/// An element of `|A|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicElement {
    ctx: AlgebraContext,
    lin: Lin<CyclicWord>,
}

/// `|A| (x) |A|`
pub type CyclicPair = Bi<CyclicWord, CyclicWord>;
/// `|A| (x) A`
pub type CycTensor = Bi<CyclicWord, Word>;
/// `A (x) |A|`
pub type TensorCyc = Bi<Word, CyclicWord>;

impl CyclicElement {
    pub fn zero(ctx: AlgebraContext) -> Self {
        CyclicElement { ctx, lin: Lin::new() }
    }

    /// The class of the trivial loop, `1 = |1|`.
    pub fn unit(ctx: AlgebraContext) -> Self {
        CyclicElement { ctx, lin: Lin::basis(CyclicWord::unit()) }
    }

    pub fn from_lin(ctx: AlgebraContext, lin: Lin<CyclicWord>) -> Self {
        let d = ctx.max_weight;
        CyclicElement { ctx, lin: lin.filter(|c| ctx.word_weight(c.word()) <= d) }
    }

    pub fn ctx(&self) -> AlgebraContext {
        self.ctx
    }

    pub fn lin(&self) -> &Lin<CyclicWord> {
        &self.lin
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CyclicWord, &Rational)> {
        self.lin.iter()
    }

    pub fn coeff(&self, c: &CyclicWord) -> Rational {
        self.lin.coeff(c)
    }

    pub fn is_zero(&self) -> bool {
        self.lin.is_empty()
    }

    pub fn add_term(&mut self, c: CyclicWord, v: Rational) {
        if self.ctx.word_weight(c.word()) <= self.ctx.max_weight {
            self.lin.add_term(c, v);
        }
    }

    pub fn add_assign_scaled(&mut self, o: &Self, c: &Rational) {
        self.ctx.check(&o.ctx).expect("context mismatch");
        self.lin.add_assign_scaled(&o.lin, c);
    }

    pub fn scale(&self, c: &Rational) -> Self {
        CyclicElement { ctx: self.ctx, lin: self.lin.scaled(c) }
    }

    pub fn homogeneous(&self, k: usize) -> Self {
        let ctx = self.ctx;
        CyclicElement { ctx, lin: self.lin.filter(|c| ctx.word_weight(c.word()) == k) }
    }

    pub fn truncated(&self, k: usize) -> Self {
        let ctx = self.ctx;
        CyclicElement { ctx, lin: self.lin.filter(|c| ctx.word_weight(c.word()) <= k) }
    }

    pub fn lowest_weight(&self) -> Option<usize> {
        self.lin.keys().map(|c| self.ctx.word_weight(c.word())).min()
    }

    pub fn with_context(&self, ctx: AlgebraContext) -> Self {
        assert_eq!((ctx.genus, ctx.boundary), (self.ctx.genus, self.ctx.boundary));
        CyclicElement::from_lin(ctx, self.lin.clone())
    }

    /// Applies `f` to a representative of each class, then projects.
    pub fn map_representatives(&self, f: impl Fn(&TensorElement) -> TensorElement) -> CyclicElement {
        let mut out = CyclicElement::zero(self.ctx);
        for (c, v) in self.lin.iter() {
            let rep = TensorElement::from_word(self.ctx, c.as_word().clone(), Rational::one());
            out.add_assign_scaled(&project(&f(&rep)), v);
        }
        out
    }

    /// Cyclic class of each representative under a substitution into another context.
    pub fn substitute(&self, images: &[TensorElement]) -> CyclicElement {
        let target = images[0].ctx();
        let mut out = CyclicElement::zero(target);
        for (c, v) in self.lin.iter() {
            let rep = TensorElement::from_word(self.ctx, c.as_word().clone(), Rational::one());
            out.add_assign_scaled(&project(&rep.substitute(images)), v);
        }
        out
    }

    pub fn render(&self) -> String {
        format_sum(self.lin.iter().map(|(c, v)| (c.render(&self.ctx), v)))
    }

    /// Parses `2*|x1*y1| - |z1|`; bars may also be omitted, in which case the
    /// expression is read in `A` and projected.
    pub fn parse(ctx: AlgebraContext, s: &str) -> Result<Self> {
        let mut open = false;
        let replaced: String = s
            .chars()
            .map(|c| {
                if c == '|' {
                    open = !open;
                    if open {
                        '('
                    } else {
                        ')'
                    }
                } else {
                    c
                }
            })
            .collect();
        if open {
            return Err(GtkvError::Parse { line: 1, column: s.len() + 1, message: "unbalanced '|'".into() });
        }
        Ok(project(&TensorElement::parse(ctx, &replaced)?))
    }
}

impl fmt::Display for CyclicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<'a> Add for &'a CyclicElement {
    type Output = CyclicElement;
    fn add(self, o: &'a CyclicElement) -> CyclicElement {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let mut l = self.lin.clone();
        l.add_assign(&o.lin);
        CyclicElement { ctx: self.ctx, lin: l }
    }
}

impl<'a> Sub for &'a CyclicElement {
    type Output = CyclicElement;
    fn sub(self, o: &'a CyclicElement) -> CyclicElement {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let mut l = self.lin.clone();
        l.sub_assign(&o.lin);
        CyclicElement { ctx: self.ctx, lin: l }
    }
}

impl<'a> Neg for &'a CyclicElement {
    type Output = CyclicElement;
    fn neg(self) -> CyclicElement {
        CyclicElement { ctx: self.ctx, lin: self.lin.neg() }
    }
}

/// `|.| : A -> |A|`
pub fn project(a: &TensorElement) -> CyclicElement {
    CyclicElement { ctx: a.ctx(), lin: a.lin().map_keys(CyclicWord::new) }
}

pub fn project_pair(x: &TensorSquare) -> CyclicPair {
    Bi::from_lin(x.ctx(), x.lin().map_keys(|(a, b)| (CyclicWord::new(a), CyclicWord::new(b))))
}

pub fn project_left(x: &TensorSquare) -> CycTensor {
    Bi::from_lin(x.ctx(), x.lin().map_keys(|(a, b)| (CyclicWord::new(a), b.clone())))
}

pub fn project_right(x: &TensorSquare) -> TensorCyc {
    Bi::from_lin(x.ctx(), x.lin().map_keys(|(a, b)| (a.clone(), CyclicWord::new(b))))
}

pub fn cyc_pair_from(a: &CyclicElement, b: &CyclicElement) -> CyclicPair {
    let mut out = CyclicPair::zero(a.ctx);
    for (ca, va) in a.terms() {
        for (cb, vb) in b.terms() {
            out.add_term(ca.clone(), cb.clone(), va * vb);
        }
    }
    out
}

/// `a ^ b = a (x) b - b (x) a`
pub fn wedge(a: &CyclicElement, b: &CyclicElement) -> CyclicPair {
    a.ctx.check(&b.ctx).expect("context mismatch");
    &cyc_pair_from(a, b) - &cyc_pair_from(b, a)
}

/// Needle map `N(|w|) = sum of all rotations of w`.
pub fn needle(c: &CyclicElement) -> Result<TensorElement> {
    if !c.coeff(&CyclicWord::unit()).is_zero() {
        return Err(GtkvError::Precondition("needle map is undefined on the constant class".into()));
    }
    let mut out = TensorElement::zero(c.ctx);
    for (cw, v) in c.terms() {
        for r in cw.rotations() {
            out.add_term(r, v.clone());
        }
    }
    Ok(out)
}

/// `|Delta~(a)|` for any representative `a` of `c`.
pub fn embed_tilde_delta(c: &CyclicElement) -> CyclicPair {
    let mut out = CyclicPair::zero(c.ctx);
    for (cw, v) in c.terms() {
        let rep = TensorElement::from_word(c.ctx, cw.as_word().clone(), v.clone());
        let d = project_pair(&rep.tilde_delta());
        out = &out + &d;
    }
    out
}

/// Inverse of `embed_tilde_delta` on its image, computed through `(id (x) counit)`
/// and confirmed by re-embedding.
pub fn retract(p: &CyclicPair) -> Result<CyclicElement> {
    let mut c = CyclicElement::zero(p.ctx());
    for ((a, b), v) in p.terms() {
        if b.is_empty() {
            c.add_term(a.clone(), v.clone());
        }
    }
    let back = embed_tilde_delta(&c);
    let residual = p - &back;
    if residual.is_zero() {
        Ok(c)
    } else {
        Err(GtkvError::NotInImage { residual: residual.render() })
    }
}

/// Moves a pair into a context with a different weight bound.
pub fn pair_with_context(p: &CyclicPair, ctx: AlgebraContext) -> CyclicPair {
    p.with_context(ctx)
}

/// Sum of coefficients weighted by the class length; used in tests of `project . needle`.
pub fn length_weighted(c: &CyclicElement) -> CyclicElement {
    let mut out = CyclicElement::zero(c.ctx);
    for (cw, v) in c.terms() {
        out.add_term(cw.clone(), v * q(cw.len() as i64));
    }
    out
}

pub fn cyclic_pair_scalar_unit(ctx: AlgebraContext) -> CyclicPair {
    let mut p = CyclicPair::zero(ctx);
    p.add_term(CyclicWord::unit(), CyclicWord::unit(), Rational::one());
    p
}

pub fn is_zero_pair(p: &CyclicPair) -> bool {
    p.terms().all(|(_, v)| v.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(w: &[u8]) -> Vec<u8> {
        (0..w.len().max(1)).map(|k| [&w[k.min(w.len())..], &w[..k.min(w.len())]].concat()).min().unwrap_or_default()
    }

    #[test]
    fn booth_matches_brute_force() {
        let words: [&[u8]; 6] = [&[1, 0], &[2, 1, 2, 1, 0], &[0, 0, 1, 0], &[3, 3, 3], &[1, 0, 1, 0, 0], &[]];
        for w in words {
            assert_eq!(least_rotation(w), brute(w), "{w:?}");
        }
    }

    #[test]
    fn commutator_dies() {
        let ctx = AlgebraContext::new(1, 1, 4);
        let a = TensorElement::parse(ctx, "x1*y1 - y1*x1").unwrap();
        assert!(project(&a).is_zero());
        let om = TensorElement::parse(ctx, "x1*y1 - y1*x1 + z1").unwrap();
        assert_eq!(project(&om), CyclicElement::parse(ctx, "|z1|").unwrap());
    }

    #[test]
    fn needle_examples() {
        let ctx = AlgebraContext::new(1, 1, 4);
        let n = needle(&CyclicElement::parse(ctx, "|x1*y1|").unwrap()).unwrap();
        assert_eq!(n, TensorElement::parse(ctx, "x1*y1 + y1*x1").unwrap());
        let n3 = needle(&CyclicElement::parse(ctx, "|x1*x1*x1|").unwrap()).unwrap();
        assert_eq!(n3, TensorElement::parse(ctx, "3*x1*x1*x1").unwrap());
        assert!(needle(&CyclicElement::unit(ctx)).is_err());
    }

    #[test]
    fn retract_examples() {
        let ctx = AlgebraContext::new(1, 0, 4);
        let x = CyclicElement::parse(ctx, "|x1|").unwrap();
        let one = CyclicElement::unit(ctx);
        assert_eq!(embed_tilde_delta(&x), wedge(&x, &one));
        assert_eq!(embed_tilde_delta(&one), cyclic_pair_scalar_unit(ctx));
        assert_eq!(retract(&embed_tilde_delta(&x)).unwrap(), x);
        assert!(retract(&cyc_pair_from(&x, &one)).is_err());
    }

    #[test]
    fn cyclic_text_roundtrip() {
        let ctx = AlgebraContext::new(1, 1, 4);
        let c = CyclicElement::parse(ctx, "2*|y1*x1| - |z1| + 1/3*|1|").unwrap();
        assert_eq!(c.render(), "1/3*|1| - |z1| + 2*|x1*y1|");
        assert_eq!(CyclicElement::parse(ctx, &c.render()).unwrap(), c);
    }
}
