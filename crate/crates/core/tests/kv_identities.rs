use gtkv_core::cyclic_words::project;
use gtkv_core::derivations::{elliptic_taut, elliptic_tder, phi_auto, psi, PantsTarget};
use gtkv_core::divergence::{conjugate, honest_weight, jq_taut};
use gtkv_core::exactlin::q;
use gtkv_core::group_ring::Framing;
use gtkv_core::kv_suite::*;
use gtkv_core::random::{random_taut, rng};
use gtkv_core::series::duflo_r;
use gtkv_core::tensor_algebra::{special_elements, AlgebraContext, TensorElement};

fn pants_solution(d: usize) -> (gtkv_core::derivations::TAutElement, KVReport) {
    let ctx = AlgebraContext::new(0, 2, d);
    let (f, rep) = solve_and_verify(ctx, &elliptic_framing(d), SolveOptions::default()).unwrap().unwrap();
    (normalize_pants_solution(&f).unwrap(), rep)
}

#[test]
fn jpants_for_random_elements() {
    let d = 4;
    let ctx = AlgebraContext::new(0, 2, d);
    for (seed, t) in [
        (1, PantsTarget { g1: 1, n1: 0, g2: 1, n2: 0 }),
        (2, PantsTarget { g1: 1, n1: 0, g2: 1, n2: 0 }),
        (3, PantsTarget { g1: 2, n1: 0, g2: 0, n2: 1 }),
    ] {
        let mut r = rng(seed);
        let f = random_taut(ctx, &mut r, 2..=4);
        let res = jpants_residual(&f, t, d).unwrap();
        assert!(res.is_zero(), "{t:?}: {res}");
    }
}

#[test]
fn normalized_pants_solution_still_solves() {
    let (f, rep) = pants_solution(8);
    let again = verify_kv2(&f, &elliptic_framing(8)).unwrap();
    assert!(again.passed());
    assert_eq!(again.h.coeffs[2..], rep.h.coeffs[2..]);
}

#[test]
fn elliptic_xi_identity() {
    let d = 5;
    let (f, _) = pants_solution(2 * d);
    let e = elliptic_taut(&f, d).unwrap().compose(&phi_auto(AlgebraContext::new(1, 0, d)).unwrap());
    let ctx = e.ctx();
    let x = TensorElement::x(ctx, 1);
    let y = TensorElement::y(ctx, 1);
    let lhs = e.apply(&x.bracket(&y));
    let z12 = &TensorElement::z(f.ctx(), 1) + &TensorElement::z(f.ctx(), 2);
    let mid = f.apply(&z12).substitute(&psi(ctx));
    assert_eq!(lhs, mid);
    assert_eq!(lhs, special_elements(ctx).xi);
}

#[test]
fn inspection_lemma() {
    let d = 5;
    let (f, rep) = pants_solution(2 * d);
    let ctx = AlgebraContext::new(1, 0, d);
    let lhs = jq_taut(&f, &elliptic_framing(2 * d)).unwrap().substitute(&psi(ctx));
    let y = TensorElement::y(ctx, 1);
    let xi = special_elements(ctx).xi;
    let mut rhs = project(&y.apply_series(&duflo_r(d)).unwrap());
    for l in 2..=rep.duflo_range().min(d / 2) {
        rhs.add_assign_scaled(&project(&xi.pow(l)), &-rep.h.coeff(l));
    }
    assert_eq!(lhs.truncated(d), rhs.truncated(d));
}

#[test]
fn special_derivations_move_to_genus_one() {
    let d = 6;
    let pants = AlgebraContext::new(0, 2, 2 * d);
    let fr = elliptic_framing(2 * d);
    let phi_inv = phi_auto(AlgebraContext::new(1, 0, d)).unwrap().inverse();
    let mut seen = 0;
    for k in [4, 6] {
        for u in krv_basis(pants, &fr, k).unwrap() {
            let src = krv_member(&u, &fr);
            assert!(src.member, "{src:?}");
            let image = conjugate(&phi_inv, &elliptic_tder(&u, d).unwrap());
            let dst = krv_member(&image, &Framing::adapted(image.ctx()));
            assert!(dst.member, "{dst:?}");
            let top = honest_weight(image.ctx()) / 2;
            for l in 2..=top {
                assert_eq!(dst.h.coeff(l), src.h.coeff(l));
            }
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn krv_group_closure_adds_duflo() {
    let ctx = AlgebraContext::new(1, 0, 5);
    let fr = Framing::adapted(ctx);
    let (f, _) = solve_and_verify(ctx, &fr, SolveOptions::default()).unwrap().unwrap();
    let (fa, _) = solve_and_verify(ctx, &fr, SolveOptions { branch: Some(1) }).unwrap().unwrap();
    let (fb, _) = solve_and_verify(ctx, &fr, SolveOptions { branch: Some(2) }).unwrap().unwrap();
    let ga = f.inverse().compose(&fa);
    let gb = f.inverse().compose(&fb);
    let (ma, mb) = (krv_group_member(&ga, &fr), krv_group_member(&gb, &fr));
    let prod = krv_group_member(&ga.compose(&gb), &fr);
    let inv = krv_group_member(&ga.inverse(), &fr);
    assert!(ma.member && mb.member && prod.member && inv.member);
    assert_eq!(prod.h, ma.h.add(&mb.h));
    assert_eq!(inv.h, ma.h.scale(&q(-1)));
    let kv = kv_group_member(&f.compose(&ga).compose(&f.inverse()), &fr);
    assert!(kv.member, "{kv:?}");
    assert_eq!(kv.h.coeff(2), ma.h.coeff(2));
}
