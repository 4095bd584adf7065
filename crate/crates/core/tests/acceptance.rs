use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use gtkv_core::cyclic_words::{project, CyclicElement};
use gtkv_core::derivations::{delta2n, phi_auto, Derivation, PantsTarget, TAutElement};
use gtkv_core::divergence::{div, gdiv_pair, honest_weight, j_taut, pullback_tdiv, tdiv, SplitValue};
use gtkv_core::exactlin::{q, Rational};
use gtkv_core::group_ring::{pi_exp_derivation, Expansion, ExpansionMap, Framing, GroupRingElement, GroupRingSquare, Kappa};
use gtkv_core::gt_structures::{
    bracket_gr, center_basis, center_check, cojacobi_residual, compatibility_residual, delta_gr, expected_center, involutivity_residual,
    jacobi_residual, reduced_span,
};
use gtkv_core::kv_suite::*;
use gtkv_core::random::{random_cyclic, random_element, random_group_ring, random_group_word, random_taut, random_tder, rng, Rand};
use gtkv_core::tensor_algebra::{AlgebraContext, TensorElement};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ctx(g: usize, n: usize, d: usize) -> AlgebraContext {
    AlgebraContext::new(g, n, d)
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b = vec![q(1)];
    for m in 1..=n {
        let mut s = q(0);
        let mut binom = q(1);
        for (k, bk) in b.iter().enumerate() {
            s += &binom * bk;
            binom = binom * q((m + 1 - k) as i64) / q(k as i64 + 1);
        }
        b.push(-s / q(m as i64 + 1));
    }
    b
}

/// Coefficients of `log((e^s - 1)/s)` from `r'(s) = 1/2 + sum_{n>=2} B_n s^(n-1) / n!`.
fn r_oracle(n: usize) -> Vec<Rational> {
    let b = bernoulli(n);
    let mut out = vec![q(0); n + 1];
    let mut fact = q(1);
    for k in 1..=n {
        fact = fact * q(k as i64);
        out[k] = if k == 1 { Rational::new(1.into(), 2.into()) } else { &b[k] / (&fact * q(k as i64)) };
    }
    out
}

fn c1_kappa() -> Outcome {
    let mut count = 0;
    for (g, n) in [(1, 1), (2, 0), (0, 3)] {
        let c = ctx(g, n, 4);
        let kap = Kappa::new(c);
        let one = GroupRingElement::one(c);
        let mut r = rng(1000 + 10 * g as u64 + n as u64);
        for i in 0..100 {
            let a = random_group_ring(c, &mut r, 2, 3);
            let b = random_group_ring(c, &mut r, 2, 3);
            let e = random_group_ring(c, &mut r, 2, 3);
            let lhs = kap.apply(&a, &b.mul(&e));
            let rhs = &kap.apply(&a, &b).mul(&GroupRingSquare::tensor(&one, &e)) + &GroupRingSquare::tensor(&b, &one).mul(&kap.apply(&a, &e));
            ensure!(lhs == rhs, "({g},{n}) sample {i}: kappa(a, bc) Leibniz fails for a={}, b={}, c={}", a.render(), b.render(), e.render());
            let lhs = kap.apply(&a.mul(&b), &e);
            let rhs = &kap.apply(&a, &e).mul(&GroupRingSquare::tensor(&b, &one)) + &GroupRingSquare::tensor(&one, &a).mul(&kap.apply(&b, &e));
            ensure!(lhs == rhs, "({g},{n}) sample {i}: kappa(ab, c) Leibniz fails");
            let (u, v) = (&a, &b);
            let mut rhs = -&kap.apply(u, v).circ();
            rhs = &rhs + &GroupRingSquare::tensor(u, v);
            rhs = &rhs + &GroupRingSquare::tensor(v, u);
            rhs = &rhs - &GroupRingSquare::tensor(&u.mul(v), &one);
            rhs = &rhs - &GroupRingSquare::tensor(&one, &v.mul(u));
            ensure!(kap.apply(v, u) == rhs, "({g},{n}) sample {i}: kappa(v,u) identity fails for u={}, v={}", u.render(), v.render());
            count += 1;
        }
    }
    Ok(format!("{count} triples"))
}

fn c2_bialgebra() -> Outcome {
    let (mut count, mut nontrivial) = (0, 0);
    for (g, n) in [(1, 0), (0, 2), (1, 1), (2, 0)] {
        let c = ctx(g, n, 6);
        let big = c.with_max_weight(18);
        let framings = [Framing::adapted(big), Framing::new(big, vec![1; g], vec![-2; g], vec![3; n]).unwrap()];
        let mut r = rng(2000 + 10 * g as u64 + n as u64);
        let pick = |r: &mut Rand| {
            let w = r.gen_range(2..=6);
            random_cyclic(c, r, w..=w, 3).with_context(big)
        };
        for i in 0..25 {
            let (a, b, e) = (pick(&mut r), pick(&mut r), pick(&mut r));
            ensure!((&bracket_gr(&a, &b) + &bracket_gr(&b, &a)).is_zero(), "({g},{n}) sample {i}: bracket not antisymmetric");
            let jac = jacobi_residual(&a, &b, &e);
            ensure!(jac.is_zero(), "({g},{n}) sample {i}: Jacobi residual {}", jac.render());
            for f in &framings {
                let d = delta_gr(&a, f);
                if !d.is_zero() {
                    nontrivial += 1;
                }
                ensure!(d.swap() == -&d, "({g},{n}) sample {i}: cobracket not antisymmetric");
                ensure!(cojacobi_residual(&a, f).is_empty(), "({g},{n}) sample {i}: coJacobi fails");
                let comp = compatibility_residual(&a, &b, f);
                ensure!(comp.is_zero(), "({g},{n}) sample {i}: compatibility residual {}", comp.render());
                let inv = involutivity_residual(&a, f);
                ensure!(inv.is_zero(), "({g},{n}) sample {i}: involutivity residual {}", inv.render());
            }
            count += 1;
        }
    }
    ensure!(nontrivial * 4 >= count, "only {nontrivial} nonzero cobrackets in {count} samples");
    Ok(format!("{count} triples, {nontrivial} nonzero cobrackets over two framings"))
}

fn c3_gdiv_theorem() -> Outcome {
    let mut count = 0;
    for (g, n) in [(1, 1), (2, 0)] {
        let c = ctx(g, n, 6);
        let kap = Kappa::new(c);
        let th = ExpansionMap::new(&Expansion::Exp, c).map_err(|e| e.to_string())?;
        let adp = Framing::adapted(c);
        let mut samples: Vec<GroupRingElement> = (1..=c.num_gens() as i64)
            .flat_map(|l| [l, -l])
            .map(|l| GroupRingElement::letter(c, l as _))
            .collect();
        let mut r = rng(3000 + g as u64);
        for _ in 0..50 {
            let len = r.gen_range(2..=4);
            samples.push(GroupRingElement::word(c, random_group_word(c, &mut r, len)));
        }
        for s in &samples {
            let lhs = pi_exp_derivation(&kap, &th, s).gdiv().truncated(5);
            let rhs = SplitValue { left: th.class_tensor(&kap.mu_f(s, &adp)), right: th.tensor_class(&kap.mu_star_bullet(s, &adp)) };
            ensure!(lhs == rhs.truncated(5), "({g},{n}): mismatch on {}", s.render());
            count += 1;
        }
    }
    Ok(format!("{count} group elements"))
}

fn c4_delta2n() -> Outcome {
    for n in 1..=3 {
        let c = ctx(1, 0, 2 * n + 2);
        let d = delta2n(c, n).map_err(|e| e.to_string())?;
        let t = tdiv(&d).map_err(|e| e.to_string())?;
        ensure!(t.is_zero(), "n={n}: tDiv = {}", t.render());
        let w = d.apply(&TensorElement::x(c, 1).bracket(&TensorElement::y(c, 1)));
        ensure!(w.is_zero(), "n={n}: delta([x,y]) = {}", w.render());
    }
    Ok("n = 1, 2, 3".into())
}

fn c5_j_phi() -> Outcome {
    let c = ctx(1, 0, 7);
    let j = j_taut(&phi_auto(c).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let coeffs = r_oracle(6);
    let x = TensorElement::x(c, 1);
    let mut expect = CyclicElement::zero(c);
    for (k, ck) in coeffs.iter().enumerate().skip(1) {
        expect.add_assign_scaled(&project(&x.pow(k)), ck);
    }
    ensure!(j == expect, "j(phi) = {}, expected {}", j.render(), expect.render());
    Ok(format!("j(phi) = {}", j.render()))
}

fn c6_pants() -> Outcome {
    let coeffs = r_oracle(8);
    let mut notes = vec![];
    for d in [4, 8] {
        let c = ctx(0, 2, d);
        let fr = Framing::adapted(c);
        let (f, rep) = match solve_and_verify(c, &fr, SolveOptions::default()).map_err(|e| e.to_string())? {
            Ok(v) => v,
            Err(cert) => return Err(format!("D={d}: obstructed at degree {}", cert.degree)),
        };
        let (k1, k2) = verify_kv(&f, &fr).map_err(|e| e.to_string())?;
        ensure!(k1.passed() && k2.passed(), "D={d}: verify_kv fails: {:?} {:?}", k1.residual, k2.residual);
        for l in (2..=rep.duflo_range()).step_by(2) {
            let want = &coeffs[l] / q(2);
            ensure!(rep.h.coeff(l) == want, "D={d}: h_{l} = {}, expected {want}", rep.h.coeff(l));
            notes.push(format!("h{l}={want}"));
        }
    }
    Ok(notes.join(" "))
}

fn c7_elliptic() -> Outcome {
    let mut compared = vec![];
    for d in [4, 6] {
        let p = ctx(0, 2, 2 * d);
        let (f, rp) = solve_and_verify(p, &elliptic_framing(2 * d), SolveOptions::default())
            .map_err(|e| e.to_string())?
            .map_err(|c| format!("pants obstructed at degree {}", c.degree))?;
        let e = elliptic_solution(&f, d).map_err(|e| e.to_string())?;
        let (k1, k2) = verify_kv(&e, &Framing::adapted(e.ctx())).map_err(|e| e.to_string())?;
        ensure!(k1.passed(), "D={d}: KV I fails: {:?}", k1.residual);
        ensure!(k2.passed(), "D={d}: KV II fails: {:?}", k2.residual);
        for l in 1..=k2.duflo_range().min(rp.duflo_range()) {
            ensure!(k2.h.coeff(l) == rp.h.coeff(l), "D={d}: h_{l} {} vs {}", k2.h.coeff(l), rp.h.coeff(l));
            compared.push(format!("D={d}:h{l}={}", k2.h.coeff(l)));
        }
    }
    ensure!(compared.iter().any(|s| s.starts_with("D=6:h2")), "no nontrivial Duflo coefficient compared");
    Ok(compared.join(" "))
}

fn c8_gluing() -> Outcome {
    let d = 4;
    let t = PantsTarget { g1: 1, n1: 0, g2: 1, n2: 0 };
    let c1 = ctx(1, 0, d);
    let fr1 = Framing::adapted(c1);
    let solve = |c, fr: &Framing, branch| {
        solve_and_verify(c, fr, SolveOptions { branch }).map_err(|e| e.to_string())?.map_err(|c| format!("obstructed at degree {}", c.degree))
    };
    let (f1, _) = solve(c1, &fr1, None)?;
    let (f2, _) = solve(c1, &fr1, Some(3))?;
    let p = ctx(0, 2, d);
    let (f, _) = solve(p, &pants_framing(t, d), None)?;
    let glued = glue_solutions(&f1, &f2, &f, t, d).map_err(|e| e.to_string())?;
    ensure!(glued.ctx() == ctx(2, 0, d), "glued context {}", glued.ctx());
    let (k1, k2) = verify_kv(&glued, &Framing::adapted(glued.ctx())).map_err(|e| e.to_string())?;
    ensure!(k1.passed() && k2.passed(), "glued solution fails: {:?} {:?}", k1.residual, k2.residual);
    for (seed, t) in [(81, t), (82, t), (83, PantsTarget { g1: 2, n1: 0, g2: 0, n2: 1 })] {
        let mut r = rng(seed);
        let f = random_taut(p, &mut r, 1..=3);
        let res = jpants_residual(&f, t, d).map_err(|e| e.to_string())?;
        ensure!(res.is_zero(), "jpants residual {} for {t:?}", res.render());
    }
    Ok("(1,0)+(1,0)+(0,3) -> (2,0); jpants on 3 random elements".into())
}

fn c9_center() -> Outcome {
    let mut dims = vec![];
    for (g, n) in [(1, 1), (0, 2)] {
        let c = ctx(g, n, 4);
        for d in 1..=4 {
            let found = reduced_span(c, d, &center_basis(c, d));
            let want = reduced_span(c, d, &expected_center(c, d));
            ensure!(found == want, "({g},{n}) degree {d}: kernel dim {} vs expected {}", found.len(), want.len());
            dims.push(found.len().to_string());
        }
    }
    Ok(format!("dims {}", dims.join(",")))
}

fn c10_torsor() -> Outcome {
    let mut notes = vec![];
    for d in [4, 6] {
        let c = ctx(1, 0, d);
        let fr = Framing::adapted(c);
        let run = |b| {
            solve_and_verify(c, &fr, SolveOptions { branch: Some(b) }).map_err(|e| e.to_string())?.map_err(|c| format!("obstructed at degree {}", c.degree))
        };
        let (f, r) = run(1)?;
        let (f2, r2) = run(2)?;
        ensure!(f != f2, "D={d}: branches gave the same solution");
        let m = krv_group_member(&f.inverse().compose(&f2), &fr);
        ensure!(m.member, "D={d}: F^-1 F' not in KRV: {:?}", m.residual);
        for l in 1..=r.duflo_range() {
            let want = &r2.h.coeff(l) - &r.h.coeff(l);
            ensure!(m.h.coeff(l) == want, "D={d}: h_{l} of difference {} vs {want}", m.h.coeff(l));
        }
        notes.push(format!("D={d}"));
    }
    Ok(notes.join(" "))
}

fn random_derivation(c: AlgebraContext, r: &mut Rand, k: usize) -> Derivation {
    let images = (0..c.num_gens() as u8)
        .map(|g| {
            let w = c.gen_weight(g) + k;
            random_element(c, r, w..=w, 2)
        })
        .collect();
    Derivation { ctx: c, images }
}

fn c11_cocycles() -> Outcome {
    for (g, n) in [(1, 1), (0, 2)] {
        let c = ctx(g, n, 6);
        let hw = honest_weight(c);
        let mut r = rng(1100 + 10 * g as u64 + n as u64);
        for i in 0..50 {
            let (k1, k2) = (r.gen_range(1..=2), r.gen_range(1..=2));
            let (u, v) = (random_derivation(c, &mut r, k1), random_derivation(c, &mut r, k2));
            let rhs = (&u.act_pair(&div(&v)) - &v.act_pair(&div(&u))).truncated(hw);
            ensure!(div(&u.bracket(&v)) == rhs, "({g},{n}) sample {i}: Div cocycle");
            let (u, v) = (random_tder(c, &mut r, k1..=k1), random_tder(c, &mut r, k2..=k2));
            let tu = tdiv(&u).map_err(|e| e.to_string())?;
            let tv = tdiv(&v).map_err(|e| e.to_string())?;
            let rhs = (&u.act_cyclic(&tv) - &v.act_cyclic(&tu)).truncated(hw);
            ensure!(tdiv(&u.bracket(&v)).map_err(|e| e.to_string())? == rhs, "({g},{n}) sample {i}: tDiv cocycle");
            let rhs = (&u.act_pair(&gdiv_pair(&v)) - &v.act_pair(&gdiv_pair(&u))).truncated(hw);
            ensure!(gdiv_pair(&u.bracket(&v)) == rhs, "({g},{n}) sample {i}: gDiv cocycle");
        }
        let c = ctx(g, n, 4);
        let hw = honest_weight(c);
        for i in 0..50 {
            let f: TAutElement = random_taut(c, &mut r, 1..=2);
            let h: TAutElement = random_taut(c, &mut r, 1..=2);
            let u = random_tder(c, &mut r, 1..=2);
            let jf = j_taut(&f).map_err(|e| e.to_string())?;
            let lhs = j_taut(&f.compose(&h)).map_err(|e| e.to_string())?;
            let rhs = (&jf + &f.act_cyclic(&j_taut(&h).map_err(|e| e.to_string())?)).truncated(hw);
            ensure!(lhs == rhs, "({g},{n}) sample {i}: j cocycle");
            let lhs = pullback_tdiv(&f, &u).map_err(|e| e.to_string())?;
            let jinv = j_taut(&f.inverse()).map_err(|e| e.to_string())?;
            let rhs = (&tdiv(&u).map_err(|e| e.to_string())? + &u.act_cyclic(&jinv)).truncated(hw);
            ensure!(lhs == rhs, "({g},{n}) sample {i}: pullback identity");
        }
    }
    Ok("Div, tDiv, gDiv, j and pullback on 50 instances per context".into())
}

fn c12_negative() -> Outcome {
    let c = ctx(1, 0, 3);
    let fr = Framing::new(c, vec![1], vec![0], vec![]).map_err(|e| e.to_string())?;
    let cert = match solve_kv(c, &fr, SolveOptions::default()).map_err(|e| e.to_string())? {
        SolveOutcome::Obstructed(cert) => cert,
        SolveOutcome::Solved(_) => return Err("(1,0) with p != 0 was solved".into()),
    };
    ensure!(!cert.witness.is_empty() && cert.pairing != "0", "empty certificate {cert:?}");
    let c = ctx(1, 1, 4);
    let cc = center_check(&CyclicElement::parse(c, "|x1*x1|").map_err(|e| e.to_string())?);
    ensure!(!cc.member, "|x1^2| reported central");
    let (b, br) = cc.witness.ok_or("no bracket witness")?;
    ensure!(br != "0", "zero bracket witness");
    Ok(format!("obstructed at degree {} (pairing {}); {{|x1^2|, {b}}} = {br}", cert.degree, cert.pairing))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("double bracket axioms and kappa(v,u) identity", c1_kappa),
        ("graded involutive Lie bialgebra", c2_bialgebra),
        ("gDiv of Pi_exp equals the mu terms", c3_gdiv_theorem),
        ("delta_2n is special and divergence free", c4_delta2n),
        ("j(phi) = |r(x)|", c5_j_phi),
        ("genus 0 solution and Duflo function", c6_pants),
        ("elliptic pipeline", c7_elliptic),
        ("gluing to genus 2", c8_gluing),
        ("center of the graded bracket", c9_center),
        ("torsor under KRV", c10_torsor),
        ("cocycle and pullback identities", c11_cocycles),
        ("negative controls", c12_negative),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(note) => println!("criterion {:>2} PASS {name} [{secs:.1}s] {note}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} [{secs:.1}s] {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
