use anyhow::{bail, Result};
use gtkv_core::cyclic_words::CyclicElement;
use gtkv_core::derivations::{delta2n, Derivation, PantsTarget, TAutElement};
use gtkv_core::divergence::{div, gdiv_pair, honest_weight, j_taut, pullback_tdiv, tdiv, SplitValue};
use gtkv_core::exactlin::fmt_rational;
use gtkv_core::group_ring::{pi_exp_derivation, Expansion, ExpansionMap, Framing, GroupRingElement, GroupRingSquare, Kappa};
use gtkv_core::gt_structures::{
    bracket_gr, center_basis, center_check, cojacobi_residual, compatibility_residual, delta_gr, expected_center, involutivity_residual,
    jacobi_residual, reduced_span,
};
use gtkv_core::kv_suite::*;
use gtkv_core::random::*;
use gtkv_core::tensor_algebra::{AlgebraContext, TensorElement};
use rand::Rng;
use serde_json::{Map, Value};

use crate::config::{framing_from, p_flag, RunConfig};

#[derive(Default)]
pub struct Outcome {
    pub checks: Vec<CheckRecord>,
    pub artifacts: Map<String, Value>,
}

impl Outcome {
    fn check(&mut self, name: &str, residual: Option<String>) {
        self.checks.push(CheckRecord::new(name, residual));
    }

    fn artifact(&mut self, key: &str, v: impl serde::Serialize) {
        self.artifacts.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }
}

/// First failure among `samples` runs of a check.
struct Tally {
    name: &'static str,
    first: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, first: None }
    }

    fn record(&mut self, i: usize, residual: Option<String>) {
        if self.first.is_none() {
            self.first = residual.map(|r| format!("sample {i}: {r}"));
        }
    }

    fn finish(self, out: &mut Outcome) {
        out.check(self.name, self.first);
    }
}

fn nonzero<T>(zero: bool, render: impl FnOnce() -> T) -> Option<T> {
    (!zero).then(render)
}

pub fn verify_bialgebra(cfg: &mut RunConfig, samples: usize) -> Result<Outcome> {
    cfg.set("samples", samples);
    let ctx = cfg.ctx();
    let big = ctx.with_max_weight(3 * ctx.max_weight);
    let fr = cfg.framing()?;
    let mut r = rng(cfg.seed);
    let lo = ctx.max_weight.min(2);
    let mut names = [
        Tally::new("bracket antisymmetry"),
        Tally::new("Jacobi"),
        Tally::new("cobracket antisymmetry"),
        Tally::new("coJacobi"),
        Tally::new("compatibility"),
        Tally::new("involutivity"),
    ];
    let mut nonzero_cobrackets = 0;
    for i in 0..samples {
        let mut pick = || {
            let w = r.gen_range(lo..=ctx.max_weight);
            random_cyclic(ctx, &mut r, w..=w, 3).with_context(big)
        };
        let (a, b, c) = (pick(), pick(), pick());
        let s = &bracket_gr(&a, &b) + &bracket_gr(&b, &a);
        names[0].record(i, nonzero(s.is_zero(), || s.render()));
        let j = jacobi_residual(&a, &b, &c);
        names[1].record(i, nonzero(j.is_zero(), || j.render()));
        let d = delta_gr(&a, &fr);
        if !d.is_zero() {
            nonzero_cobrackets += 1;
        }
        let s = &d + &d.swap();
        names[2].record(i, nonzero(s.is_zero(), || s.render()));
        let cj = cojacobi_residual(&a, &fr);
        names[3].record(i, nonzero(cj.is_empty(), || format!("{} nonzero terms", cj.len())));
        let cp = compatibility_residual(&a, &b, &fr);
        names[4].record(i, nonzero(cp.is_zero(), || cp.render()));
        let iv = involutivity_residual(&a, &fr);
        names[5].record(i, nonzero(iv.is_zero(), || iv.render()));
    }
    let mut out = Outcome::default();
    for t in names {
        t.finish(&mut out);
    }
    out.artifact("nonzero_cobrackets", nonzero_cobrackets);
    Ok(out)
}

pub fn check_kappa(cfg: &mut RunConfig, samples: usize) -> Result<Outcome> {
    cfg.set("samples", samples);
    let ctx = cfg.ctx();
    let kap = Kappa::new(ctx);
    let one = GroupRingElement::one(ctx);
    let mut r = rng(cfg.seed);
    let mut t = [Tally::new("Leibniz in the second slot"), Tally::new("Leibniz in the first slot"), Tally::new("kappa(v,u) identity")];
    for i in 0..samples {
        let a = random_group_ring(ctx, &mut r, 2, 3);
        let b = random_group_ring(ctx, &mut r, 2, 3);
        let c = random_group_ring(ctx, &mut r, 2, 3);
        let lhs = kap.apply(&a, &b.mul(&c));
        let rhs = &kap.apply(&a, &b).mul(&GroupRingSquare::tensor(&one, &c)) + &GroupRingSquare::tensor(&b, &one).mul(&kap.apply(&a, &c));
        let d = &lhs - &rhs;
        t[0].record(i, nonzero(d.is_zero(), || d.render()));
        let lhs = kap.apply(&a.mul(&b), &c);
        let rhs = &kap.apply(&a, &c).mul(&GroupRingSquare::tensor(&b, &one)) + &GroupRingSquare::tensor(&one, &a).mul(&kap.apply(&b, &c));
        let d = &lhs - &rhs;
        t[1].record(i, nonzero(d.is_zero(), || d.render()));
        let mut rhs = -&kap.apply(&a, &b).circ();
        rhs = &rhs + &GroupRingSquare::tensor(&a, &b);
        rhs = &rhs + &GroupRingSquare::tensor(&b, &a);
        rhs = &rhs - &GroupRingSquare::tensor(&a.mul(&b), &one);
        rhs = &rhs - &GroupRingSquare::tensor(&one, &b.mul(&a));
        let d = &kap.apply(&b, &a) - &rhs;
        t[2].record(i, nonzero(d.is_zero(), || d.render()));
    }
    let mut out = Outcome::default();
    for x in t {
        x.finish(&mut out);
    }
    Ok(out)
}

fn random_derivation(ctx: AlgebraContext, r: &mut Rand, k: usize) -> Derivation {
    let images = (0..ctx.num_gens() as u8)
        .map(|g| {
            let w = ctx.gen_weight(g) + k;
            random_element(ctx, r, w..=w, 2)
        })
        .collect();
    Derivation { ctx, images }
}

pub fn check_divergence(cfg: &mut RunConfig, samples: usize) -> Result<Outcome> {
    cfg.set("samples", samples);
    let ctx = cfg.ctx();
    let hw = honest_weight(ctx);
    let mut r = rng(cfg.seed);
    let mut out = Outcome::default();

    let kap = Kappa::new(ctx);
    let th = ExpansionMap::new(&Expansion::Exp, ctx)?;
    let adp = Framing::adapted(ctx);
    let theorem = |g: &GroupRingElement| {
        let lhs = pi_exp_derivation(&kap, &th, g).gdiv().truncated(hw);
        let rhs = SplitValue { left: th.class_tensor(&kap.mu_f(g, &adp)), right: th.tensor_class(&kap.mu_star_bullet(g, &adp)) }.truncated(hw);
        (lhs != rhs).then(|| g.render())
    };
    let n = ctx.num_gens() as i16;
    let gens = (1..=n).flat_map(|l| [l, -l]).find_map(|l| theorem(&GroupRingElement::letter(ctx, l)));
    out.check("gDiv(Pi_exp) on generators", gens.map(|g| format!("mismatch on {g}")));
    let mut t = Tally::new("gDiv(Pi_exp) on products");
    for i in 0..samples {
        let len = r.gen_range(2..=4);
        let g = GroupRingElement::word(ctx, random_group_word(ctx, &mut r, len));
        t.record(i, theorem(&g).map(|g| format!("mismatch on {g}")));
    }
    t.finish(&mut out);

    // Lie-level cocycles with room for the brackets, compared through the honest weight of D.
    let wide = ctx.with_max_weight(ctx.max_weight + 4);
    let mut t = [Tally::new("Div cocycle"), Tally::new("tDiv cocycle"), Tally::new("gDiv cocycle")];
    for i in 0..samples {
        let (k1, k2) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let (u, v) = (random_derivation(wide, &mut r, k1), random_derivation(wide, &mut r, k2));
        let d = (&div(&u.bracket(&v)) - &(&u.act_pair(&div(&v)) - &v.act_pair(&div(&u)))).truncated(hw);
        t[0].record(i, nonzero(d.is_zero(), || d.render()));
        let (u, v) = (random_tder(wide, &mut r, k1..=k1), random_tder(wide, &mut r, k2..=k2));
        let d = (&tdiv(&u.bracket(&v))? - &(&u.act_cyclic(&tdiv(&v)?) - &v.act_cyclic(&tdiv(&u)?))).truncated(hw);
        t[1].record(i, nonzero(d.is_zero(), || d.render()));
        let d = (&gdiv_pair(&u.bracket(&v)) - &(&u.act_pair(&gdiv_pair(&v)) - &v.act_pair(&gdiv_pair(&u)))).truncated(hw);
        t[2].record(i, nonzero(d.is_zero(), || d.render()));
    }
    for x in t {
        x.finish(&mut out);
    }

    let mut t = [Tally::new("j cocycle"), Tally::new("pullback of tDiv")];
    for i in 0..samples {
        let f: TAutElement = random_taut(ctx, &mut r, 1..=2);
        let h: TAutElement = random_taut(ctx, &mut r, 1..=2);
        let u = random_tder(ctx, &mut r, 1..=2);
        let d = (&j_taut(&f.compose(&h))? - &(&j_taut(&f)? + &f.act_cyclic(&j_taut(&h)?))).truncated(hw);
        t[0].record(i, nonzero(d.is_zero(), || d.render()));
        let rhs = &tdiv(&u)? + &u.act_cyclic(&j_taut(&f.inverse())?);
        let d = (&pullback_tdiv(&f, &u)? - &rhs).truncated(hw);
        t[1].record(i, nonzero(d.is_zero(), || d.render()));
    }
    for x in t {
        x.finish(&mut out);
    }
    Ok(out)
}

pub fn check_center(cfg: &mut RunConfig, element: Option<&str>) -> Result<Outcome> {
    let ctx = cfg.ctx();
    let mut out = Outcome::default();
    let mut dims = vec![];
    for d in 1..=ctx.max_weight {
        let found = reduced_span(ctx, d, &center_basis(ctx, d));
        let want = reduced_span(ctx, d, &expected_center(ctx, d));
        dims.push(found.len());
        let res = (found != want).then(|| format!("kernel dimension {}, span of |omega^l|, |z_j^l| has {}", found.len(), want.len()));
        out.check(&format!("center in degree {d}"), res);
    }
    out.artifact("dimensions", dims);
    if let Some(s) = element {
        cfg.set("element", s);
        let c = CyclicElement::parse(ctx, s)?;
        out.artifact("element", center_check(&c));
    }
    Ok(out)
}

pub fn check_delta2n(cfg: &mut RunConfig, n: usize) -> Result<Outcome> {
    cfg.set("n", n);
    let ctx = cfg.ctx();
    if ctx.max_weight < 2 * n + 2 {
        bail!("delta_{} needs degree at least {}", 2 * n, 2 * n + 2);
    }
    let d = delta2n(ctx, n)?;
    let mut out = Outcome::default();
    let t = tdiv(&d)?;
    out.check("tDiv(delta_2n) = 0", nonzero(t.is_zero(), || t.render()));
    let w = d.apply(&TensorElement::x(ctx, 1).bracket(&TensorElement::y(ctx, 1)));
    out.check("delta_2n([x1,y1]) = 0", nonzero(w.is_zero(), || w.render()));
    out.artifact("image_of_x1", d.apply(&TensorElement::x(ctx, 1)).render());
    Ok(out)
}

fn report_solution(out: &mut Outcome, f: &TAutElement, fr: &Framing) -> Result<SolutionManifest> {
    let (kv1, kv2) = verify_kv(f, fr)?;
    out.check("KV I", kv1.residual.clone());
    out.check("KV II", kv2.residual.clone());
    out.artifact("checked_to", kv2.checked_to);
    out.artifact("duflo_h", series(&kv2.h.coeffs));
    out.artifact("duflo_hj", kv2.h_j.iter().map(|s| series(&s.coeffs)).collect::<Vec<_>>());
    let m = SolutionManifest::new(f, fr, &kv1, &kv2);
    out.artifact("solution", &m);
    Ok(m)
}

fn series(c: &[gtkv_core::exactlin::Rational]) -> Vec<String> {
    c.iter().map(fmt_rational).collect()
}

fn obstructed(out: &mut Outcome, name: &str, cert: &ObstructionCertificate) {
    out.check(name, Some(format!("obstruction at degree {}: pairing {}", cert.degree, cert.pairing)));
    out.artifact("certificate", cert);
}

pub fn solve(cfg: &mut RunConfig, branch: Option<u64>) -> Result<(Outcome, Option<SolutionManifest>)> {
    if let Some(b) = branch {
        cfg.set("branch", b);
    }
    let ctx = cfg.ctx();
    let fr = cfg.framing()?;
    let mut out = Outcome::default();
    match solve_kv(ctx, &fr, SolveOptions { branch })? {
        SolveOutcome::Solved(f) => {
            out.check("solvable", None);
            let m = report_solution(&mut out, &f, &fr)?;
            Ok((out, Some(m)))
        }
        SolveOutcome::Obstructed(cert) => {
            obstructed(&mut out, "solvable", &cert);
            Ok((out, None))
        }
    }
}

pub fn verify(cfg: &mut RunConfig, m: &SolutionManifest) -> Result<Outcome> {
    let f = m.taut()?;
    let fr = framing_from(f.ctx(), &cfg.p, &cfg.q)?;
    let mut out = Outcome::default();
    let (kv1, kv2) = verify_kv(&f, &fr)?;
    out.check("KV I", kv1.residual);
    out.check("KV II", kv2.residual);
    out.artifact("checked_to", kv2.checked_to);
    out.artifact("duflo_h", series(&kv2.h.coeffs));
    out.artifact("duflo_hj", kv2.h_j.iter().map(|s| series(&s.coeffs)).collect::<Vec<_>>());
    Ok(out)
}

/// Adopt the manifest's shape and framing unless flags override the framing.
pub fn adopt_manifest(cfg: &mut RunConfig, m: &SolutionManifest, p_given: bool, q_given: bool) {
    cfg.genus = m.g;
    cfg.boundary = m.n;
    cfg.degree = m.degree;
    if !p_given {
        cfg.p = p_flag(&m.framing);
    }
    if !q_given {
        cfg.q = m.framing.q.clone();
    }
}

pub fn parse_target(s: &str) -> Result<PantsTarget> {
    let v: Vec<usize> = s.split(',').map(|x| x.trim().parse::<usize>()).collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [g1, n1, g2, n2] => Ok(PantsTarget { g1, n1, g2, n2 }),
        _ => bail!("target must be g1,n1,g2,n2"),
    }
}

fn solved_or(
    given: Option<SolutionManifest>,
    ctx: AlgebraContext,
    fr: &Framing,
    branch: Option<u64>,
) -> Result<std::result::Result<TAutElement, ObstructionCertificate>> {
    if let Some(m) = given {
        return Ok(Ok(m.taut()?));
    }
    Ok(match solve_kv(ctx, fr, SolveOptions { branch })? {
        SolveOutcome::Solved(f) => Ok(f),
        SolveOutcome::Obstructed(c) => Err(c),
    })
}

pub struct GlueInputs {
    pub first: Option<SolutionManifest>,
    pub second: Option<SolutionManifest>,
    pub pants: Option<SolutionManifest>,
}

pub fn glue(cfg: &mut RunConfig, target: PantsTarget, inputs: GlueInputs, branch: Option<u64>) -> Result<(Outcome, Option<SolutionManifest>)> {
    let d = cfg.degree;
    cfg.set("target", [target.g1, target.n1, target.g2, target.n2]);
    let glued_ctx = target.context(d);
    cfg.genus = glued_ctx.genus;
    cfg.boundary = glued_ctx.boundary;
    cfg.p = vec![0; 2 * glued_ctx.genus];
    cfg.q = vec![0; glued_ctx.boundary];
    let mut out = Outcome::default();
    let c1 = AlgebraContext::new(target.g1, target.n1, d);
    let c2 = AlgebraContext::new(target.g2, target.n2, d);
    let pants = AlgebraContext::new(0, 2, d);
    let pieces = [
        ("first piece", inputs.first, c1, Framing::adapted(c1)),
        ("second piece", inputs.second, c2, Framing::adapted(c2)),
        ("pants piece", inputs.pants, pants, pants_framing(target, d)),
    ];
    let mut sols = vec![];
    for (name, given, ctx, fr) in pieces {
        match solved_or(given, ctx, &fr, branch)? {
            Ok(f) => {
                out.check(name, None);
                sols.push(f);
            }
            Err(cert) => {
                obstructed(&mut out, name, &cert);
                return Ok((out, None));
            }
        }
    }
    let res = jpants_residual(&sols[2], target, d)?;
    out.check("jpants identity", nonzero(res.is_zero(), || res.render()));
    let glued = match glue_solutions(&sols[0], &sols[1], &sols[2], target, d) {
        Ok(g) => g,
        Err(e) => {
            out.check("gluing", Some(e.to_string()));
            return Ok((out, None));
        }
    };
    out.check("gluing", None);
    let m = report_solution(&mut out, &glued, &Framing::adapted(glued.ctx()))?;
    Ok((out, Some(m)))
}

pub fn elliptic(cfg: &mut RunConfig, pants: Option<SolutionManifest>) -> Result<(Outcome, Option<SolutionManifest>)> {
    let d = cfg.degree;
    cfg.genus = 1;
    cfg.boundary = 0;
    cfg.p = vec![0, 0];
    cfg.q = vec![];
    let mut out = Outcome::default();
    let pctx = AlgebraContext::new(0, 2, 2 * d);
    let pfr = elliptic_framing(2 * d);
    let f = match solved_or(pants, pctx, &pfr, None)? {
        Ok(f) => f,
        Err(cert) => {
            obstructed(&mut out, "pants piece", &cert);
            return Ok((out, None));
        }
    };
    let (_, prep) = verify_kv(&f, &pfr)?;
    out.check("pants piece", prep.residual.clone());
    let e = elliptic_solution(&f, d)?;
    let fr = Framing::adapted(e.ctx());
    let m = report_solution(&mut out, &e, &fr)?;
    let (_, erep) = verify_kv(&e, &fr)?;
    let dm = check_duflo_match(&[("pants", &prep), ("elliptic", &erep)]).err().map(|e| e.to_string());
    out.check("Duflo functions agree", dm);
    Ok((out, Some(m)))
}

pub fn adjust(cfg: &mut RunConfig, m: &SolutionManifest, to_p: Vec<i64>, to_q: Vec<i64>) -> Result<(Outcome, Option<SolutionManifest>)> {
    let f = m.taut()?;
    let ctx = f.ctx();
    let from = framing_from(ctx, &cfg.p, &cfg.q)?;
    let to = framing_from(ctx, &to_p, &to_q)?;
    cfg.set("to_p", &to_p);
    cfg.set("to_q", &to_q);
    let mut out = Outcome::default();
    match adjust_framing(&f, &from, &to) {
        Ok(g) => {
            out.check("framing reachable", None);
            let m = report_solution(&mut out, &g, &to)?;
            Ok((out, Some(m)))
        }
        Err(gtkv_core::GtkvError::UnreachableFraming(why)) => {
            out.check("framing reachable", Some(why));
            Ok((out, None))
        }
        Err(e) => Err(e.into()),
    }
}
