use gtkv_core::cyclic_words::{least_rotation, project, CyclicElement};
use gtkv_core::derivations::TAutElement;
use gtkv_core::divergence::{conjugate, honest_weight, j_taut};
use gtkv_core::exactlin::{dot, inconsistency_witness, kernel, q, solve_affine, Rational, SparseMatrix};
use gtkv_core::group_ring::{goldman, Expansion, ExpansionMap, FreeGroupWord, Framing, GroupRingElement};
use gtkv_core::gt_structures::{delta_gr, delta_gr_via_mu, hamiltonian_gr};
use gtkv_core::kv_suite::{solve_and_verify, SolveOptions};
use gtkv_core::lie::lie_basis;
use gtkv_core::random::*;
use gtkv_core::tensor_algebra::{special_elements, AlgebraContext, TensorElement, TensorSquare};
use proptest::prelude::*;
use rand::Rng;

fn contexts() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(1, 0), (0, 2), (1, 1), (2, 0), (0, 3)])
}

fn matrix(seed: u64) -> SparseMatrix {
    let mut r = rng(seed);
    let (m, n) = (r.gen_range(1..=5), r.gen_range(1..=6));
    let rows: Vec<Vec<Rational>> = (0..m).map(|_| (0..n).map(|_| q(r.gen_range(-2..=2))).collect()).collect();
    SparseMatrix::from_dense(&rows)
}

fn lie_element(ctx: AlgebraContext, r: &mut Rand, top: usize) -> TensorElement {
    let mut out = TensorElement::zero(ctx);
    for k in 1..=top {
        out = &out + &random_lie(ctx, r, k, 2);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_vectors_are_annihilated(seed in any::<u64>()) {
        let m = matrix(seed);
        let ker = kernel(&m);
        prop_assert_eq!(m.rank() + ker.len(), m.cols());
        for v in &ker {
            prop_assert!(m.mul_vec(v).unwrap().iter().all(|c| *c == q(0)));
        }
    }

    #[test]
    fn affine_solve_or_witness(seed in any::<u64>(), consistent in any::<bool>()) {
        let m = matrix(seed);
        let mut r = rng(seed ^ 0x5eed);
        let b: Vec<Rational> = if consistent {
            let x: Vec<Rational> = (0..m.cols()).map(|_| q(r.gen_range(-3..=3))).collect();
            m.mul_vec(&x).unwrap()
        } else {
            (0..m.rows()).map(|_| q(r.gen_range(-3..=3))).collect()
        };
        match solve_affine(&m, &b).unwrap().particular {
            Some(p) => prop_assert_eq!(m.mul_vec(&p).unwrap(), b),
            None => {
                prop_assert!(!consistent);
                let y = inconsistency_witness(&m, &b).unwrap();
                prop_assert!(m.transpose().mul_vec(&y).unwrap().iter().all(|c| *c == q(0)));
                prop_assert_ne!(dot(&y, &b), q(0));
            }
        }
    }

    #[test]
    fn exp_log_roundtrip((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 5);
        let a = random_element(ctx, &mut rng(seed), 1..=5, 4);
        prop_assert_eq!(a.exp().unwrap().log().unwrap(), a);
    }

    #[test]
    fn coproduct_and_antipode_respect_products((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 5);
        let mut r = rng(seed);
        let a = random_element(ctx, &mut r, 0..=3, 3);
        let b = random_element(ctx, &mut r, 0..=3, 3);
        let ab = &a * &b;
        prop_assert_eq!(ab.coproduct(), a.coproduct().mul(&b.coproduct()));
        prop_assert_eq!(ab.antipode(), &b.antipode() * &a.antipode());
    }

    #[test]
    fn bch_is_lie_and_multiplicative((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 5);
        let mut r = rng(seed);
        let a = lie_element(ctx, &mut r, 3);
        let b = lie_element(ctx, &mut r, 3);
        let c = a.bch(&b).unwrap();
        prop_assert!(c.is_primitive());
        prop_assert_eq!(c.exp().unwrap(), &a.exp().unwrap() * &b.exp().unwrap());
    }

    #[test]
    fn tensor_text_roundtrip((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 6);
        let a = random_element(ctx, &mut rng(seed), 0..=6, 5);
        prop_assert_eq!(TensorElement::parse(ctx, &a.render()).unwrap(), a);
    }

    #[test]
    fn necklaces_are_least_rotations(w in prop::collection::vec(0u8..4, 0..12)) {
        let best = (0..w.len().max(1)).map(|i| {
            let mut v = w.clone();
            v.rotate_left(i.min(w.len()));
            v
        }).min().unwrap_or_default();
        prop_assert_eq!(least_rotation(&w), best);
    }

    #[test]
    fn trace_kills_commutators((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 6);
        let mut r = rng(seed);
        let a = random_element(ctx, &mut r, 1..=3, 3);
        let b = random_element(ctx, &mut r, 1..=3, 3);
        prop_assert_eq!(project(&(&a * &b)), project(&(&b * &a)));
        let c = random_cyclic(ctx, &mut r, 1..=6, 4);
        prop_assert_eq!(CyclicElement::parse(ctx, &c.render()).unwrap(), c);
    }

    #[test]
    fn free_group_inverse((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 4);
        let w = random_group_word(ctx, &mut rng(seed), 8);
        prop_assert!(w.mul(&w.inverse()).is_identity());
        prop_assert_eq!(FreeGroupWord::reduce(&w.0), w);
    }

    #[test]
    fn exponential_expansion_is_multiplicative((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 5);
        let th = ExpansionMap::new(&Expansion::Exp, ctx).unwrap();
        let mut r = rng(seed);
        let u = random_group_ring(ctx, &mut r, 2, 3);
        let v = random_group_ring(ctx, &mut r, 2, 3);
        prop_assert_eq!(th.apply(&u.mul(&v)), &th.apply(&u) * &th.apply(&v));
    }

    #[test]
    fn goldman_bracket_is_antisymmetric((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 4);
        let mut r = rng(seed);
        let u = random_group_ring(ctx, &mut r, 2, 4).project();
        let v = random_group_ring(ctx, &mut r, 2, 4).project();
        prop_assert_eq!(goldman(&u, &v), goldman(&v, &u).scale(&q(-1)));
    }

    #[test]
    fn taut_group_laws((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 5);
        let mut r = rng(seed);
        let f = random_taut(ctx, &mut r, 1..=3);
        let h = random_taut(ctx, &mut r, 1..=3);
        prop_assert!(f.compose(&f.inverse()).is_identity());
        prop_assert_eq!(TAutElement::exp(&f.log()).unwrap(), f.clone());
        let x = random_element(ctx, &mut r, 1..=3, 3);
        prop_assert_eq!(f.compose(&h).apply(&x), f.apply(&h.apply(&x)));
    }

    #[test]
    fn conjugation_matches_composition((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 5);
        let mut r = rng(seed);
        let f = random_taut(ctx, &mut r, 1..=2);
        let u = random_tder(ctx, &mut r, 1..=2);
        let v = conjugate(&f, &u);
        let finv = f.inverse();
        for gen in 0..ctx.num_gens() as u8 {
            let a = TensorElement::gen(ctx, gen);
            prop_assert_eq!(v.apply(&a), f.apply(&u.apply(&finv.apply(&a))));
        }
    }

    #[test]
    fn tder_bracket_is_commutator((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 6);
        let mut r = rng(seed);
        let u = random_tder(ctx, &mut r, 1..=2);
        let v = random_tder(ctx, &mut r, 1..=2);
        let a = random_element(ctx, &mut r, 1..=2, 3);
        prop_assert_eq!(u.bracket(&v).apply(&a), &u.apply(&v.apply(&a)) - &v.apply(&u.apply(&a)));
    }

    #[test]
    fn j_of_inverse((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 4);
        let f = random_taut(ctx, &mut rng(seed), 1..=2);
        let lhs = j_taut(&f.inverse()).unwrap();
        let rhs = f.inverse().act_cyclic(&j_taut(&f).unwrap()).scale(&q(-1)).truncated(honest_weight(ctx));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn cobracket_two_routes((g, n) in contexts(), seed in any::<u64>(), shift in -2i64..=2) {
        let ctx = AlgebraContext::new(g, n, 6);
        let fr = Framing::new(ctx, vec![shift; g], vec![1 - shift; g], vec![shift + 1; n]).unwrap();
        let c = random_cyclic(ctx, &mut rng(seed), 2..=6, 3);
        prop_assert_eq!(delta_gr(&c, &fr), delta_gr_via_mu(&c, &fr));
    }

    #[test]
    fn hamiltonian_flows_fix_omega((g, n) in contexts(), seed in any::<u64>()) {
        let ctx = AlgebraContext::new(g, n, 6);
        let c = random_cyclic(ctx, &mut rng(seed), 2..=5, 3);
        let omega = special_elements(ctx).omega;
        prop_assert!(hamiltonian_gr(&c).apply(&omega).is_zero());
    }

    #[test]
    fn lie_basis_is_primitive((g, n) in contexts(), k in 1usize..=4) {
        let ctx = AlgebraContext::new(g, n, 4);
        prop_assert!(lie_basis(ctx, k).iter().all(|e| e.is_primitive()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn genus_zero_solves_for_any_framing(q1 in -2i64..=2, q2 in -2i64..=2, branch in prop::option::of(0u64..50)) {
        let ctx = AlgebraContext::new(0, 2, 4);
        let fr = Framing::new(ctx, vec![], vec![], vec![q1, q2]).unwrap();
        let out = solve_and_verify(ctx, &fr, SolveOptions { branch }).unwrap();
        prop_assert!(out.is_ok());
    }
}

#[test]
fn one_one_is_the_coproduct_unit() {
    let ctx = AlgebraContext::new(1, 1, 3);
    assert_eq!(TensorElement::one(ctx).coproduct(), TensorSquare::one_one(ctx));
    assert!(GroupRingElement::one(ctx).mul(&GroupRingElement::one(ctx)).as_group_element().unwrap().is_identity());
}
