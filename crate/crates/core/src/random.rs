//! Seeded random elements for property checks and the CLI suites.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cyclic_words::{project, CyclicElement};
use crate::derivations::{TAutElement, TangentialDerivation};
use crate::exactlin::{qf, Rational};
use crate::group_ring::{FreeGroupWord, GroupRingElement, Letter};
use crate::lie::lie_basis;
use crate::tensor_algebra::{AlgebraContext, TensorElement};

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonzero `a/b` with `|a| <= 3`, `b <= 2`.
pub fn small_rational(r: &mut Rand) -> Rational {
    let a = loop {
        let a = r.gen_range(-3..=3);
        if a != 0 {
            break a;
        }
    };
    qf(a, r.gen_range(1..=2))
}

/// Up to `terms` random words with weights in `weights`.
pub fn random_element(ctx: AlgebraContext, r: &mut Rand, weights: RangeInclusive<usize>, terms: usize) -> TensorElement {
    let mut out = TensorElement::zero(ctx);
    let pools: Vec<_> = weights.filter(|&w| w <= ctx.max_weight).map(|w| ctx.words_of_weight(w)).filter(|p| !p.is_empty()).collect();
    if pools.is_empty() {
        return out;
    }
    for _ in 0..terms {
        let pool = &pools[r.gen_range(0..pools.len())];
        out.add_term(pool[r.gen_range(0..pool.len())].clone(), small_rational(r));
    }
    out
}

pub fn random_cyclic(ctx: AlgebraContext, r: &mut Rand, weights: RangeInclusive<usize>, terms: usize) -> CyclicElement {
    project(&random_element(ctx, r, weights, terms))
}

/// A random combination of at most `terms` Lyndon brackets of weight `k`.
pub fn random_lie(ctx: AlgebraContext, r: &mut Rand, k: usize, terms: usize) -> TensorElement {
    let basis = lie_basis(ctx, k);
    let mut out = TensorElement::zero(ctx);
    if basis.is_empty() {
        return out;
    }
    for _ in 0..terms {
        out.add_assign_scaled(&basis[r.gen_range(0..basis.len())], &small_rational(r));
    }
    out
}

/// A tangential derivation with Lie images and components in the given degrees.
pub fn random_tder(ctx: AlgebraContext, r: &mut Rand, degrees: RangeInclusive<usize>) -> TangentialDerivation {
    let mut u = TangentialDerivation::zero(ctx);
    for k in degrees {
        for g in 0..2 * ctx.genus as u8 {
            let e = &u.image(g).clone() + &random_lie(ctx, r, k + 1, 2);
            u.set_image(g, e);
        }
        for j in 1..=ctx.boundary {
            let e = &u.comp(j).clone() + &random_lie(ctx, r, k, 2);
            u.set_comp(j, e);
        }
    }
    u
}

/// `exp` of a random positive tangential derivation.
pub fn random_taut(ctx: AlgebraContext, r: &mut Rand, degrees: RangeInclusive<usize>) -> TAutElement {
    let lo = (*degrees.start()).max(1);
    let u = random_tder(ctx, r, lo..=*degrees.end());
    TAutElement::exp(&u).expect("positive degrees")
}

/// A reduced free-group word with `len` letters.
pub fn random_group_word(ctx: AlgebraContext, r: &mut Rand, len: usize) -> FreeGroupWord {
    let n = ctx.num_gens() as Letter;
    let letters: Vec<Letter> = (0..len)
        .map(|_| {
            let l = r.gen_range(1..=n);
            if r.gen_bool(0.5) {
                l
            } else {
                -l
            }
        })
        .collect();
    FreeGroupWord::reduce(&letters)
}

/// A sum of up to `terms` random group elements of length at most `len`.
pub fn random_group_ring(ctx: AlgebraContext, r: &mut Rand, terms: usize, len: usize) -> GroupRingElement {
    let mut out = GroupRingElement::zero(ctx);
    for _ in 0..terms {
        let l = r.gen_range(1..=len.max(1));
        out.add_term(random_group_word(ctx, r, l), small_rational(r));
    }
    out
}
