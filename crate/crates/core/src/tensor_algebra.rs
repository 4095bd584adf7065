//! The weight-graded truncated tensor algebra `A = T(H)` on generators
//! `x_1..x_g, y_1..y_g` (weight 1) and `z_1..z_n` (weight 2).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{GtkvError, Result};
use crate::exactlin::{factorial, q, Rational};
use crate::lin::Lin;
use crate::series::PowerSeries;
use crate::text::{format_sum, parse_expr, TextRing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraContext {
    pub genus: usize,
    pub boundary: usize,
    pub max_weight: usize,
}

impl AlgebraContext {
    pub fn new(genus: usize, boundary: usize, max_weight: usize) -> Self {
        assert!(max_weight >= 1, "max weight must be positive");
        assert!(2 * genus + boundary <= 200, "too many generators");
        AlgebraContext { genus, boundary, max_weight }
    }

    pub fn num_gens(&self) -> usize {
        2 * self.genus + self.boundary
    }

    pub fn x(&self, i: usize) -> u8 {
        assert!(i >= 1 && i <= self.genus);
        (i - 1) as u8
    }

    pub fn y(&self, i: usize) -> u8 {
        assert!(i >= 1 && i <= self.genus);
        (self.genus + i - 1) as u8
    }

    pub fn z(&self, j: usize) -> u8 {
        assert!(j >= 1 && j <= self.boundary);
        (2 * self.genus + j - 1) as u8
    }

    pub fn is_z(&self, gen: u8) -> bool {
        gen as usize >= 2 * self.genus
    }

    /// For a `z` generator, its 1-based index `j`.
    pub fn z_index(&self, gen: u8) -> Option<usize> {
        self.is_z(gen).then(|| gen as usize - 2 * self.genus + 1)
    }

    pub fn gen_weight(&self, gen: u8) -> usize {
        if self.is_z(gen) {
            2
        } else {
            1
        }
    }

    pub fn word_weight(&self, w: &Word) -> usize {
        w.0.iter().map(|&g| self.gen_weight(g)).sum()
    }

    pub fn gen_name(&self, gen: u8) -> String {
        let g = gen as usize;
        if g < self.genus {
            format!("x{}", g + 1)
        } else if g < 2 * self.genus {
            format!("y{}", g - self.genus + 1)
        } else {
            format!("z{}", g - 2 * self.genus + 1)
        }
    }

    pub fn parse_gen(&self, name: &str) -> std::result::Result<u8, String> {
        let (head, idx) = name.split_at(1);
        let i: usize = idx.parse().map_err(|_| format!("bad generator '{name}'"))?;
        let bound = match head {
            "x" | "y" => self.genus,
            "z" => self.boundary,
            _ => return Err(format!("unknown symbol '{name}'")),
        };
        if i == 0 || i > bound {
            return Err(format!("generator '{name}' out of range for {self}"));
        }
        Ok(match head {
            "x" => self.x(i),
            "y" => self.y(i),
            _ => self.z(i),
        })
    }

    pub fn with_max_weight(&self, d: usize) -> Self {
        AlgebraContext::new(self.genus, self.boundary, d)
    }

    pub fn check(&self, other: &AlgebraContext) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(GtkvError::ContextMismatch { left: self.to_string(), right: other.to_string() })
        }
    }

    /// All words of exactly weight `w`, in canonical order.
    pub fn words_of_weight(&self, w: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(ctx: &AlgebraContext, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Word>) {
            if left == 0 {
                out.push(Word(cur.clone()));
                return;
            }
            for g in 0..ctx.num_gens() as u8 {
                let gw = ctx.gen_weight(g);
                if gw <= left {
                    cur.push(g);
                    rec(ctx, left - gw, cur, out);
                    cur.pop();
                }
            }
        }
        rec(self, w, &mut cur, &mut out);
        out.sort();
        out
    }
}

impl fmt::Display for AlgebraContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(g={}, n={}, D={})", self.genus, self.boundary, self.max_weight)
    }
}

/// A word in the generators; ordered by length, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<u8>);

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn single(g: u8) -> Word {
        Word(vec![g])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, o: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + o.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&o.0);
        Word(v)
    }

    pub fn concat3(a: &[u8], b: &[u8], c: &[u8]) -> Word {
        let mut v = Vec::with_capacity(a.len() + b.len() + c.len());
        v.extend_from_slice(a);
        v.extend_from_slice(b);
        v.extend_from_slice(c);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn render(&self, ctx: &AlgebraContext) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0.iter().map(|&g| ctx.gen_name(g)).collect::<Vec<_>>().join("*")
    }
}

/// Anything keyed by an underlying word, so weights can be computed.
pub trait HasWord: Ord + Clone {
    fn word(&self) -> &Word;
    fn render(&self, ctx: &AlgebraContext) -> String;
}

impl HasWord for Word {
    fn word(&self) -> &Word {
        self
    }
    fn render(&self, ctx: &AlgebraContext) -> String {
        Word::render(self, ctx)
    }
}

/// An element of `A`, truncated at the context's maximal weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorElement {
    ctx: AlgebraContext,
    lin: Lin<Word>,
}

impl TensorElement {
    pub fn zero(ctx: AlgebraContext) -> Self {
        TensorElement { ctx, lin: Lin::new() }
    }

    pub fn one(ctx: AlgebraContext) -> Self {
        Self::scalar(ctx, Rational::one())
    }

    pub fn scalar(ctx: AlgebraContext, c: Rational) -> Self {
        TensorElement { ctx, lin: Lin::single(Word::empty(), c) }
    }

    pub fn gen(ctx: AlgebraContext, g: u8) -> Self {
        Self::from_word(ctx, Word::single(g), Rational::one())
    }

    pub fn x(ctx: AlgebraContext, i: usize) -> Self {
        Self::gen(ctx, ctx.x(i))
    }

    pub fn y(ctx: AlgebraContext, i: usize) -> Self {
        Self::gen(ctx, ctx.y(i))
    }

    pub fn z(ctx: AlgebraContext, j: usize) -> Self {
        Self::gen(ctx, ctx.z(j))
    }

    pub fn from_word(ctx: AlgebraContext, w: Word, c: Rational) -> Self {
        let mut e = Self::zero(ctx);
        e.add_term(w, c);
        e
    }

    /// Builds an element from a linear combination, dropping words above the bound.
    pub fn from_lin(ctx: AlgebraContext, lin: Lin<Word>) -> Self {
        let d = ctx.max_weight;
        TensorElement { ctx, lin: lin.filter(|w| ctx.word_weight(w) <= d) }
    }

    pub fn ctx(&self) -> AlgebraContext {
        self.ctx
    }

    pub fn lin(&self) -> &Lin<Word> {
        &self.lin
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.lin.iter()
    }

    pub fn coeff(&self, w: &Word) -> Rational {
        self.lin.coeff(w)
    }

    pub fn is_zero(&self) -> bool {
        self.lin.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.lin.len()
    }

    pub fn add_term(&mut self, w: Word, c: Rational) {
        if self.ctx.word_weight(&w) <= self.ctx.max_weight {
            self.lin.add_term(w, c);
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.lin.coeff(&Word::empty())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.ctx.check(&o.ctx)?;
        let mut l = self.lin.clone();
        l.add_assign(&o.lin);
        Ok(TensorElement { ctx: self.ctx, lin: l })
    }

    pub fn add_assign_scaled(&mut self, o: &Self, c: &Rational) {
        self.ctx.check(&o.ctx).expect("context mismatch");
        self.lin.add_assign_scaled(&o.lin, c);
    }

    pub fn scale(&self, c: &Rational) -> Self {
        TensorElement { ctx: self.ctx, lin: self.lin.scaled(c) }
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(&q(c))
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.ctx.check(&o.ctx)?;
        let d = self.ctx.max_weight;
        let buckets = by_weight(&self.ctx, &o.lin);
        let mut out = Lin::new();
        for (wa, ca) in self.lin.iter() {
            let ka = self.ctx.word_weight(wa);
            if ka > d {
                continue;
            }
            for bucket in buckets.iter().take(d - ka + 1) {
                for (wb, cb) in bucket {
                    out.add_term(wa.concat(wb), ca * *cb);
                }
            }
        }
        Ok(TensorElement { ctx: self.ctx, lin: out })
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::one(self.ctx);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// `[a, b] = ab - ba`
    pub fn bracket(&self, o: &Self) -> Self {
        &(self * o) - &(o * self)
    }

    pub fn max_weight_present(&self) -> Option<usize> {
        self.lin.keys().map(|w| self.ctx.word_weight(w)).max()
    }

    /// Lowest weight of a nonzero term (`None` for zero).
    pub fn lowest_weight(&self) -> Option<usize> {
        self.lin.keys().map(|w| self.ctx.word_weight(w)).min()
    }

    /// The weight-`k` homogeneous component.
    pub fn homogeneous(&self, k: usize) -> Self {
        let ctx = self.ctx;
        TensorElement { ctx, lin: self.lin.filter(|w| ctx.word_weight(w) == k) }
    }

    /// Keeps only terms of weight at most `k`.
    pub fn truncated(&self, k: usize) -> Self {
        let ctx = self.ctx;
        TensorElement { ctx, lin: self.lin.filter(|w| ctx.word_weight(w) <= k) }
    }

    /// Keeps only terms of weight at least `k`.
    pub fn from_weight(&self, k: usize) -> Self {
        let ctx = self.ctx;
        TensorElement { ctx, lin: self.lin.filter(|w| ctx.word_weight(w) >= k) }
    }

    /// Moves the element to a context with the same generators and a different bound.
    pub fn with_context(&self, ctx: AlgebraContext) -> Self {
        assert_eq!((ctx.genus, ctx.boundary), (self.ctx.genus, self.ctx.boundary), "generator sets differ");
        TensorElement::from_lin(ctx, self.lin.clone())
    }

    fn require_zero_constant(&self, op: &str) -> Result<()> {
        if self.constant_term().is_zero() {
            Ok(())
        } else {
            Err(GtkvError::Precondition(format!("{op} needs zero constant term")))
        }
    }

    /// `sum_k c_k a^k` for `a` with zero constant term.
    pub fn apply_series(&self, f: &PowerSeries) -> Result<Self> {
        self.require_zero_constant("series substitution")?;
        let mut out = Self::zero(self.ctx);
        let mut pow = Self::one(self.ctx);
        for k in 0..=self.ctx.max_weight {
            let c = f.coeff(k);
            if !c.is_zero() {
                out.add_assign_scaled(&pow, &c);
            }
            pow = &pow * self;
            if pow.is_zero() {
                break;
            }
        }
        Ok(out)
    }

    pub fn exp(&self) -> Result<Self> {
        self.require_zero_constant("exp")?;
        let mut out = Self::one(self.ctx);
        let mut term = Self::one(self.ctx);
        for k in 1..=self.ctx.max_weight {
            term = (&term * self).scale(&q(k as i64).recip());
            if term.is_zero() {
                break;
            }
            out = &out + &term;
        }
        Ok(out)
    }

    pub fn log(&self) -> Result<Self> {
        if !self.constant_term().is_one() {
            return Err(GtkvError::Precondition("log needs constant term 1".into()));
        }
        let a = self - &Self::one(self.ctx);
        let mut out = Self::zero(self.ctx);
        let mut pow = Self::one(self.ctx);
        for k in 1..=self.ctx.max_weight {
            pow = &pow * &a;
            if pow.is_zero() {
                break;
            }
            let c = if k % 2 == 1 { q(1) } else { q(-1) } / q(k as i64);
            out.add_assign_scaled(&pow, &c);
        }
        Ok(out)
    }

    /// Inverse of an element with constant term 1 (or any nonzero constant).
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(GtkvError::Precondition("inverse needs nonzero constant term".into()));
        }
        let inv0 = c0.recip();
        let a = &self.scale(&inv0) - &Self::one(self.ctx);
        let mut out = Self::one(self.ctx);
        let mut pow = Self::one(self.ctx);
        for k in 1..=self.ctx.max_weight {
            pow = &pow * &a;
            if pow.is_zero() {
                break;
            }
            let c = if k % 2 == 1 { q(-1) } else { q(1) };
            out.add_assign_scaled(&pow, &c);
        }
        Ok(out.scale(&inv0))
    }

    /// `log(e^a e^b)`
    pub fn bch(&self, o: &Self) -> Result<Self> {
        self.ctx.check(&o.ctx)?;
        (&self.exp()? * &o.exp()?).log()
    }

    pub fn counit(&self) -> Rational {
        self.constant_term()
    }

    /// Antipode: `w -> (-1)^len reverse(w)`.
    pub fn antipode(&self) -> Self {
        let lin = self.lin.map_keys(|w| w.reversed());
        let lin = lin.map_basis(|w| {
            let c = if w.len() % 2 == 0 { q(1) } else { q(-1) };
            Lin::single(w.clone(), c)
        });
        TensorElement { ctx: self.ctx, lin }
    }

    /// Coproduct with primitive generators: a word splits over all subsequences.
    pub fn coproduct(&self) -> TensorSquare {
        let mut out = Lin::new();
        for (w, c) in self.lin.iter() {
            for (a, b) in deshuffles(w) {
                out.add_term((a, b), c.clone());
            }
        }
        TensorSquare::from_lin(self.ctx, out)
    }

    /// `(1 (x) antipode) coproduct`
    pub fn tilde_delta(&self) -> TensorSquare {
        let mut out = Lin::new();
        for (w, c) in self.lin.iter() {
            for (a, b) in deshuffles(w) {
                let sign = if b.len() % 2 == 0 { c.clone() } else { -c };
                out.add_term((a, b.reversed()), sign);
            }
        }
        TensorSquare::from_lin(self.ctx, out)
    }

    pub fn is_primitive(&self) -> bool {
        let one = Self::one(self.ctx);
        let expect = &TensorSquare::tensor(self, &one) + &TensorSquare::tensor(&one, self);
        self.coproduct() == expect
    }

    pub fn is_group_like(&self) -> bool {
        self.coproduct() == TensorSquare::tensor(self, self)
    }

    /// `sum_k f_k ad_a^k (b)`
    pub fn ad_series(f: &PowerSeries, a: &Self, b: &Self) -> Self {
        let mut out = Self::zero(b.ctx);
        let mut cur = b.clone();
        for k in 0..=f.degree_bound() {
            let c = f.coeff(k);
            if !c.is_zero() {
                out.add_assign_scaled(&cur, &c);
            }
            cur = a.bracket(&cur);
            if cur.is_zero() {
                break;
            }
        }
        out
    }

    /// The algebra homomorphism sending generator `g` to `images[g]`, which live in
    /// the target context. Images must have zero constant term.
    pub fn substitute(&self, images: &[TensorElement]) -> TensorElement {
        let target = images.first().map(|e| e.ctx).expect("images required");
        self.substitute_into(images, target)
    }

    pub fn substitute_into(&self, images: &[TensorElement], target: AlgebraContext) -> TensorElement {
        assert_eq!(images.len(), self.ctx.num_gens(), "one image per generator");
        let mut cache: std::collections::BTreeMap<Word, TensorElement> = Default::default();
        cache.insert(Word::empty(), TensorElement::one(target));
        let mut out = TensorElement::zero(target);
        for (w, c) in self.lin.iter() {
            let v = word_image(w, images, &mut cache, target);
            out.add_assign_scaled(&v, c);
        }
        out
    }

    /// Applies a linear map given on basis words.
    pub fn map_words(&self, mut f: impl FnMut(&Word) -> TensorElement) -> TensorElement {
        let mut out = TensorElement::zero(self.ctx);
        for (w, c) in self.lin.iter() {
            out.add_assign_scaled(&f(w), c);
        }
        out
    }

    pub fn parse(ctx: AlgebraContext, s: &str) -> Result<Self> {
        parse_expr(&TensorElement::zero(ctx), s)
    }

    pub fn render(&self) -> String {
        format_sum(self.lin.iter().map(|(w, c)| (w.render(&self.ctx), c)))
    }
}

fn word_image(
    w: &Word,
    images: &[TensorElement],
    cache: &mut std::collections::BTreeMap<Word, TensorElement>,
    target: AlgebraContext,
) -> TensorElement {
    if let Some(v) = cache.get(w) {
        return v.clone();
    }
    let (head, last) = w.0.split_at(w.0.len() - 1);
    let prefix = word_image(&Word(head.to_vec()), images, cache, target);
    let v = &prefix * &images[last[0] as usize];
    cache.insert(w.clone(), v.clone());
    v
}

fn by_weight<'a>(ctx: &AlgebraContext, lin: &'a Lin<Word>) -> Vec<Vec<(&'a Word, &'a Rational)>> {
    let mut b = vec![Vec::new(); ctx.max_weight + 1];
    for (w, c) in lin.iter() {
        let k = ctx.word_weight(w);
        if k <= ctx.max_weight {
            b[k].push((w, c));
        }
    }
    b
}

/// All ways to split a word into a complementary pair of subsequences.
pub fn deshuffles(w: &Word) -> Vec<(Word, Word)> {
    let n = w.len();
    assert!(n < 30, "word too long for deshuffle");
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, &g) in w.0.iter().enumerate() {
            if mask >> i & 1 == 1 {
                a.push(g);
            } else {
                b.push(g);
            }
        }
        out.push((Word(a), Word(b)));
    }
    out
}

impl TextRing for TensorElement {
    fn scalar(&self, c: Rational) -> Self {
        TensorElement::scalar(self.ctx, c)
    }
    fn symbol(&self, name: &str) -> std::result::Result<Self, String> {
        let g = self.ctx.parse_gen(name)?;
        Ok(TensorElement::gen(self.ctx, g))
    }
    fn add(self, o: Self) -> Self {
        &self + &o
    }
    fn mul(self, o: Self) -> Self {
        &self * &o
    }
    fn negate(self) -> Self {
        -&self
    }
}

impl fmt::Display for TensorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<'a> Add for &'a TensorElement {
    type Output = TensorElement;
    fn add(self, o: &'a TensorElement) -> TensorElement {
        self.try_add(o).expect("context mismatch")
    }
}

impl<'a> Sub for &'a TensorElement {
    type Output = TensorElement;
    fn sub(self, o: &'a TensorElement) -> TensorElement {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let mut l = self.lin.clone();
        l.sub_assign(&o.lin);
        TensorElement { ctx: self.ctx, lin: l }
    }
}

impl<'a> Neg for &'a TensorElement {
    type Output = TensorElement;
    fn neg(self) -> TensorElement {
        TensorElement { ctx: self.ctx, lin: self.lin.neg() }
    }
}

impl<'a> Mul for &'a TensorElement {
    type Output = TensorElement;
    fn mul(self, o: &'a TensorElement) -> TensorElement {
        self.try_mul(o).expect("context mismatch")
    }
}

/// Truncated sparse element of `L (x) R` where both keys carry words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bi<L: HasWord, R: HasWord> {
    ctx: AlgebraContext,
    lin: Lin<(L, R)>,
}

/// `A (x) A`
pub type TensorSquare = Bi<Word, Word>;

impl<L: HasWord, R: HasWord> Bi<L, R> {
    pub fn zero(ctx: AlgebraContext) -> Self {
        Bi { ctx, lin: Lin::new() }
    }

    pub fn from_lin(ctx: AlgebraContext, lin: Lin<(L, R)>) -> Self {
        let d = ctx.max_weight;
        Bi { ctx, lin: lin.filter(|(a, b)| ctx.word_weight(a.word()) + ctx.word_weight(b.word()) <= d) }
    }

    pub fn ctx(&self) -> AlgebraContext {
        self.ctx
    }

    pub fn lin(&self) -> &Lin<(L, R)> {
        &self.lin
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(L, R), &Rational)> {
        self.lin.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.lin.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.lin.len()
    }

    pub fn coeff(&self, a: &L, b: &R) -> Rational {
        self.lin.coeff(&(a.clone(), b.clone()))
    }

    pub fn add_term(&mut self, a: L, b: R, c: Rational) {
        if self.ctx.word_weight(a.word()) + self.ctx.word_weight(b.word()) <= self.ctx.max_weight {
            self.lin.add_term((a, b), c);
        }
    }

    pub fn add_assign_scaled(&mut self, o: &Self, c: &Rational) {
        self.ctx.check(&o.ctx).expect("context mismatch");
        self.lin.add_assign_scaled(&o.lin, c);
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Bi { ctx: self.ctx, lin: self.lin.scaled(c) }
    }

    pub fn swap(&self) -> Bi<R, L> {
        Bi { ctx: self.ctx, lin: self.lin.map_keys(|(a, b)| (b.clone(), a.clone())) }
    }

    /// Keeps terms with combined weight at most `k`.
    pub fn truncated(&self, k: usize) -> Self {
        let ctx = self.ctx;
        Bi { ctx, lin: self.lin.filter(|(a, b)| ctx.word_weight(a.word()) + ctx.word_weight(b.word()) <= k) }
    }

    pub fn homogeneous(&self, k: usize) -> Self {
        let ctx = self.ctx;
        Bi { ctx, lin: self.lin.filter(|(a, b)| ctx.word_weight(a.word()) + ctx.word_weight(b.word()) == k) }
    }

    pub fn with_context(&self, ctx: AlgebraContext) -> Self {
        assert_eq!((ctx.genus, ctx.boundary), (self.ctx.genus, self.ctx.boundary));
        Bi::from_lin(ctx, self.lin.clone())
    }

    /// Linear extension of a map on basis pairs.
    pub fn map_pairs<L2: HasWord, R2: HasWord>(&self, mut f: impl FnMut(&L, &R) -> Bi<L2, R2>) -> Bi<L2, R2> {
        let mut out = Bi::zero(self.ctx);
        for ((a, b), c) in self.lin.iter() {
            out.add_assign_scaled(&f(a, b), c);
        }
        out
    }

    pub fn render(&self) -> String {
        format_sum(self.lin.iter().map(|((a, b), c)| (format!("({} ⊗ {})", a.render(&self.ctx), b.render(&self.ctx)), c)))
    }
}

impl<L: HasWord, R: HasWord> fmt::Display for Bi<L, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<'a, L: HasWord, R: HasWord> Add for &'a Bi<L, R> {
    type Output = Bi<L, R>;
    fn add(self, o: &'a Bi<L, R>) -> Bi<L, R> {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let mut l = self.lin.clone();
        l.add_assign(&o.lin);
        Bi { ctx: self.ctx, lin: l }
    }
}

impl<'a, L: HasWord, R: HasWord> Sub for &'a Bi<L, R> {
    type Output = Bi<L, R>;
    fn sub(self, o: &'a Bi<L, R>) -> Bi<L, R> {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let mut l = self.lin.clone();
        l.sub_assign(&o.lin);
        Bi { ctx: self.ctx, lin: l }
    }
}

impl<'a, L: HasWord, R: HasWord> Neg for &'a Bi<L, R> {
    type Output = Bi<L, R>;
    fn neg(self) -> Bi<L, R> {
        Bi { ctx: self.ctx, lin: self.lin.neg() }
    }
}

impl TensorSquare {
    pub fn tensor(a: &TensorElement, b: &TensorElement) -> TensorSquare {
        a.ctx.check(&b.ctx).expect("context mismatch");
        let mut out = TensorSquare::zero(a.ctx);
        for (wa, ca) in a.terms() {
            for (wb, cb) in b.terms() {
                out.add_term(wa.clone(), wb.clone(), ca * cb);
            }
        }
        out
    }

    pub fn one_one(ctx: AlgebraContext) -> TensorSquare {
        let mut t = TensorSquare::zero(ctx);
        t.add_term(Word::empty(), Word::empty(), Rational::one());
        t
    }

    /// Componentwise product `(a'(x)a'')(b'(x)b'') = a'b' (x) a''b''`.
    pub fn mul(&self, o: &TensorSquare) -> TensorSquare {
        self.ctx.check(&o.ctx).expect("context mismatch");
        let mut out = TensorSquare::zero(self.ctx);
        for ((a1, a2), ca) in self.lin.iter() {
            for ((b1, b2), cb) in o.lin.iter() {
                out.add_term(a1.concat(b1), a2.concat(b2), ca * cb);
            }
        }
        out
    }

    /// `(a (x) 1) X`
    pub fn lmul_left(&self, a: &TensorElement) -> TensorSquare {
        self.mul_slot(a, 0, true)
    }

    /// `(1 (x) a) X`
    pub fn lmul_right(&self, a: &TensorElement) -> TensorSquare {
        self.mul_slot(a, 1, true)
    }

    /// `X (a (x) 1)`
    pub fn rmul_left(&self, a: &TensorElement) -> TensorSquare {
        self.mul_slot(a, 0, false)
    }

    /// `X (1 (x) a)`
    pub fn rmul_right(&self, a: &TensorElement) -> TensorSquare {
        self.mul_slot(a, 1, false)
    }

    fn mul_slot(&self, a: &TensorElement, slot: usize, from_left: bool) -> TensorSquare {
        self.ctx.check(&a.ctx).expect("context mismatch");
        let mut out = TensorSquare::zero(self.ctx);
        for ((x1, x2), cx) in self.lin.iter() {
            for (w, ca) in a.terms() {
                let cat = |x: &Word| if from_left { w.concat(x) } else { x.concat(w) };
                let (n1, n2) = if slot == 0 { (cat(x1), x2.clone()) } else { (x1.clone(), cat(x2)) };
                out.add_term(n1, n2, cx * ca);
            }
        }
        out
    }

    /// Outer bimodule action `a (s'(x)s'') b = a s' (x) s'' b`.
    pub fn outer(&self, a: &TensorElement, b: &TensorElement) -> TensorSquare {
        self.lmul_left(a).rmul_right(b)
    }

    /// `a'(x)a'' -> a' a''`
    pub fn multiply(&self) -> TensorElement {
        let mut out = TensorElement::zero(self.ctx);
        for ((a, b), c) in self.lin.iter() {
            out.add_term(a.concat(b), c.clone());
        }
        out
    }

    /// `(id (x) counit)`
    pub fn counit_right(&self) -> TensorElement {
        let mut out = TensorElement::zero(self.ctx);
        for ((a, b), c) in self.lin.iter() {
            if b.is_empty() {
                out.add_term(a.clone(), c.clone());
            }
        }
        out
    }

    /// `(counit (x) id)`
    pub fn counit_left(&self) -> TensorElement {
        let mut out = TensorElement::zero(self.ctx);
        for ((a, b), c) in self.lin.iter() {
            if a.is_empty() {
                out.add_term(b.clone(), c.clone());
            }
        }
        out
    }

    /// Applies a linear map to each slot.
    pub fn map_slots(&self, f: impl Fn(&TensorElement) -> TensorElement, g: impl Fn(&TensorElement) -> TensorElement) -> TensorSquare {
        let mut out = TensorSquare::zero(self.ctx);
        for ((a, b), c) in self.lin.iter() {
            let fa = f(&TensorElement::from_word(self.ctx, a.clone(), Rational::one()));
            let gb = g(&TensorElement::from_word(self.ctx, b.clone(), Rational::one()));
            out.add_assign_scaled(&TensorSquare::tensor(&fa, &gb), c);
        }
        out
    }

    /// Slot-wise substitution into another context.
    pub fn substitute(&self, images: &[TensorElement]) -> TensorSquare {
        let target = images[0].ctx;
        let mut out = TensorSquare::zero(target);
        for ((a, b), c) in self.lin.iter() {
            let fa = TensorElement::from_word(self.ctx, a.clone(), Rational::one()).substitute(images);
            let fb = TensorElement::from_word(self.ctx, b.clone(), Rational::one()).substitute(images);
            out.add_assign_scaled(&TensorSquare::tensor(&fa, &fb), c);
        }
        out
    }
}

/// `exp(a)` written out as `sum a^k/k!`, used where a plain series is clearer.
pub fn exp_series_of(a: &TensorElement) -> TensorElement {
    let mut out = TensorElement::zero(a.ctx);
    let mut pow = TensorElement::one(a.ctx);
    for k in 0..=a.ctx.max_weight {
        out.add_assign_scaled(&pow, &factorial(k).recip());
        pow = &pow * a;
    }
    out
}

/// `omega = sum [x_i, y_i] + sum z_j` and `xi = log(prod(e^x e^y e^-x e^-y) prod e^z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecialElements {
    pub omega: TensorElement,
    pub xi: TensorElement,
}

pub fn special_elements(ctx: AlgebraContext) -> SpecialElements {
    let mut omega = TensorElement::zero(ctx);
    let mut prod = TensorElement::one(ctx);
    for i in 1..=ctx.genus {
        let x = TensorElement::x(ctx, i);
        let y = TensorElement::y(ctx, i);
        omega = &omega + &x.bracket(&y);
        let f = &(&x.exp().unwrap() * &y.exp().unwrap()) * &(&(-&x).exp().unwrap() * &(-&y).exp().unwrap());
        prod = &prod * &f;
    }
    for j in 1..=ctx.boundary {
        let z = TensorElement::z(ctx, j);
        omega = &omega + &z;
        prod = &prod * &z.exp().unwrap();
    }
    let xi = prod.log().unwrap();
    SpecialElements { omega, xi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::qf;

    fn c11() -> AlgebraContext {
        AlgebraContext::new(1, 1, 6)
    }

    #[test]
    fn parse_print_roundtrip() {
        let ctx = c11();
        let e = TensorElement::parse(ctx, "1/2*x1*y1 - z1").unwrap();
        assert_eq!(e.render(), "-z1 + 1/2*x1*y1");
        let e2 = TensorElement::parse(ctx, &e.render()).unwrap();
        assert_eq!(e, e2);
        assert_eq!(TensorElement::parse(ctx, "3 - 2/3").unwrap().render(), "7/3");
        assert_eq!(TensorElement::zero(ctx).render(), "0");
    }

    #[test]
    fn parse_errors_carry_position() {
        let ctx = c11();
        match TensorElement::parse(ctx, "x1 +\n  w2") {
            Err(GtkvError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(TensorElement::parse(ctx, "x2").is_err());
        assert!(TensorElement::parse(ctx, "1/0*x1").is_err());
    }

    #[test]
    fn truncation_drops_heavy_words() {
        let ctx = AlgebraContext::new(1, 1, 3);
        let z = TensorElement::z(ctx, 1);
        assert!((&z * &z).is_zero());
        let x = TensorElement::x(ctx, 1);
        assert_eq!((&z * &x).num_terms(), 1);
    }

    #[test]
    fn mixing_contexts_is_an_error() {
        let a = TensorElement::x(AlgebraContext::new(1, 0, 3), 1);
        let b = TensorElement::x(AlgebraContext::new(1, 0, 4), 1);
        assert!(matches!(a.try_mul(&b), Err(GtkvError::ContextMismatch { .. })));
    }

    #[test]
    fn coproduct_of_xy() {
        let ctx = c11();
        let xy = TensorElement::parse(ctx, "x1*y1").unwrap();
        let d = xy.coproduct();
        let mut expect = TensorSquare::zero(ctx);
        let x = ctx.x(1);
        let y = ctx.y(1);
        expect.add_term(Word(vec![x, y]), Word::empty(), q(1));
        expect.add_term(Word(vec![x]), Word(vec![y]), q(1));
        expect.add_term(Word(vec![y]), Word(vec![x]), q(1));
        expect.add_term(Word::empty(), Word(vec![x, y]), q(1));
        assert_eq!(d, expect);
    }

    #[test]
    fn bch_low_order() {
        let ctx = AlgebraContext::new(1, 0, 2);
        let x = TensorElement::x(ctx, 1);
        let y = TensorElement::y(ctx, 1);
        let b = x.bch(&y).unwrap();
        let expect = &(&x + &y) + &x.bracket(&y).scale(&qf(1, 2));
        assert_eq!(b, expect);
    }

    #[test]
    fn special_elements_genus_one() {
        let ctx = AlgebraContext::new(1, 0, 2);
        let s = special_elements(ctx);
        let x = TensorElement::x(ctx, 1);
        let y = TensorElement::y(ctx, 1);
        assert_eq!(s.omega, x.bracket(&y));
        assert_eq!(s.xi, s.omega);
    }
}
