//! Lyndon-word basis of the free Lie algebra on the weighted generators.

use crate::tensor_algebra::{AlgebraContext, TensorElement, Word};

pub fn is_lyndon(w: &[u8]) -> bool {
    let n = w.len();
    if n == 0 {
        return false;
    }
    (1..n).all(|k| w < &w[k..])
}

/// Standard bracketing of a Lyndon word.
pub fn lyndon_bracket(ctx: AlgebraContext, w: &[u8]) -> TensorElement {
    if w.len() == 1 {
        return TensorElement::gen(ctx, w[0]);
    }
    let split = (1..w.len()).find(|&k| is_lyndon(&w[k..])).expect("a Lyndon word has a Lyndon proper suffix");
    let a = lyndon_bracket(ctx, &w[..split]);
    let b = lyndon_bracket(ctx, &w[split..]);
    a.bracket(&b)
}

/// Lyndon words of exact weight `k`, in canonical word order.
pub fn lyndon_words(ctx: AlgebraContext, k: usize) -> Vec<Word> {
    ctx.words_of_weight(k).into_iter().filter(|w| is_lyndon(&w.0)).collect()
}

/// Basis of the weight-`k` part of the free Lie algebra (computed in a context
/// large enough to hold weight `k`, then moved to `ctx`).
pub fn lie_basis(ctx: AlgebraContext, k: usize) -> Vec<TensorElement> {
    if k == 0 || k > ctx.max_weight {
        return Vec::new();
    }
    lyndon_words(ctx, k).iter().map(|w| lyndon_bracket(ctx, &w.0)).collect()
}
