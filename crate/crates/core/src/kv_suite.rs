//! The Kashiwara-Vergne equations `F(omega) = xi` and
//! `j_q(F) = r + |p| + sum |h_j(z_j)| - |h(xi)|`: verification, a degree-by-degree
//! solver, symmetry-group membership, gluing and the elliptic construction.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cyclic_words::{project, CyclicElement, CyclicWord};
use crate::derivations::{elliptic_taut, pants_taut, phi_auto, product_taut, PantsTarget, TAutElement, TangentialDerivation};
use crate::divergence::{honest_weight, j_taut, jpq_taut, jq_taut, r_element, tdiv};
use crate::error::{GtkvError, Result};
use crate::exactlin::{dot, fmt_rational, inconsistency_witness, q, qf, solve_affine, Rational, SparseMatrix};
use crate::group_ring::Framing;
use crate::lie::lie_basis;
use crate::series::PowerSeries;
use crate::tensor_algebra::{special_elements, AlgebraContext, HasWord, TensorElement, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KvEquation {
    #[serde(rename = "KV I")]
    First,
    #[serde(rename = "KV II")]
    Second,
}

/// Outcome of checking one KV equation at truncation `degree`.
///
/// `checked_to` is the highest weight actually compared: `degree` for KV I, the
/// honest divergence weight for KV II. Duflo coefficients `h_l` are meaningful for
/// `2l <= checked_to`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KVReport {
    pub equation: KvEquation,
    pub degree: usize,
    pub checked_to: usize,
    pub satisfied_to_degree: usize,
    pub h: PowerSeries,
    pub h_j: Vec<PowerSeries>,
    pub residual: Option<String>,
}

impl KVReport {
    pub fn passed(&self) -> bool {
        self.residual.is_none()
    }

    /// Largest `l` with `h_l` determined by the checked weights.
    pub fn duflo_range(&self) -> usize {
        self.checked_to / 2
    }
}

/// An unsolvable degree: a functional vanishing on every correction but not on
/// the right-hand side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionCertificate {
    pub degree: usize,
    /// `(equation row, coefficient)` pairs of the witness functional.
    pub witness: Vec<(String, String)>,
    /// Value of the witness on the right-hand side; never zero.
    pub pairing: String,
    /// The right-hand side at this degree.
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Solved(TAutElement),
    Obstructed(ObstructionCertificate),
}

impl SolveOutcome {
    pub fn solution(self) -> Option<TAutElement> {
        match self {
            SolveOutcome::Solved(f) => Some(f),
            SolveOutcome::Obstructed(_) => None,
        }
    }

    pub fn certificate(&self) -> Option<&ObstructionCertificate> {
        match self {
            SolveOutcome::Solved(_) => None,
            SolveOutcome::Obstructed(c) => Some(c),
        }
    }
}

/// Solver options. With `branch = Some(seed)`, each degree adds a random small
/// integer combination of the nullspace to the least-index particular solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    pub branch: Option<u64>,
}

fn zero_report(equation: KvEquation, ctx: AlgebraContext, checked_to: usize) -> KVReport {
    KVReport {
        equation,
        degree: ctx.max_weight,
        checked_to,
        satisfied_to_degree: ctx.max_weight,
        h: PowerSeries::zero(checked_to / 2),
        h_j: vec![PowerSeries::zero(checked_to / 2); ctx.boundary],
        residual: None,
    }
}

/// First nonzero homogeneous piece of `diff` in weights `1..=upto`.
fn first_failure(diff: &TensorElement, upto: usize) -> Option<(usize, TensorElement)> {
    (1..=upto).map(|k| (k, diff.homogeneous(k))).find(|(_, e)| !e.is_zero())
}

fn compare_images(ctx: AlgebraContext, lhs: &TensorElement, rhs: &TensorElement) -> KVReport {
    let mut rep = zero_report(KvEquation::First, ctx, ctx.max_weight);
    if let Some((k, e)) = first_failure(&(rhs - lhs), ctx.max_weight) {
        rep.satisfied_to_degree = k - 1;
        rep.residual = Some(e.render());
    }
    rep
}

/// `F(omega) = xi`, weight by weight.
pub fn verify_kv1(f: &TAutElement) -> KVReport {
    let ctx = f.ctx();
    let sp = special_elements(ctx);
    compare_images(ctx, &f.apply(&sp.omega), &sp.xi)
}

fn cyclic_terms(c: &CyclicElement) -> Vec<(CyclicWord, Rational)> {
    c.terms().map(|(k, v)| (k.clone(), v.clone())).collect()
}

/// Coordinates of `rhs` in the span of `cols`, least-index pivots first.
fn solve_in_span(rhs: &CyclicElement, cols: &[CyclicElement]) -> Option<Vec<Rational>> {
    let mut keys: BTreeMap<CyclicWord, usize> = BTreeMap::new();
    for e in cols.iter().chain(std::iter::once(rhs)) {
        for (k, _) in e.terms() {
            let n = keys.len();
            keys.entry(k.clone()).or_insert(n);
        }
    }
    let mut m = SparseMatrix::new(keys.len(), cols.len());
    for (ci, e) in cols.iter().enumerate() {
        for (k, v) in cyclic_terms(e) {
            m.set(keys[&k], ci, v);
        }
    }
    let mut b = vec![Rational::zero(); keys.len()];
    for (k, v) in rhs.terms() {
        b[keys[k]] = v.clone();
    }
    solve_affine(&m, &b).ok().and_then(|s| s.particular)
}

/// Duflo coefficients fitted to `target = sum_j |h_j(z_j)| - |h(base)|` through
/// weight `upto`, one even weight at a time.
struct DufloFit {
    h: PowerSeries,
    h_j: Vec<PowerSeries>,
    failure: Option<(usize, CyclicElement)>,
}

fn fit_duflo(target: &CyclicElement, base: &TensorElement, upto: usize) -> DufloFit {
    let ctx = target.ctx();
    let lmax = upto / 2;
    let mut h = PowerSeries::zero(lmax);
    let mut h_j = vec![PowerSeries::zero(lmax); ctx.boundary];
    let mut powers = vec![CyclicElement::unit(ctx)];
    let mut acc = TensorElement::one(ctx);
    for _ in 1..=lmax {
        acc = &acc * base;
        powers.push(project(&acc));
    }
    for k in 1..=upto {
        let mut rhs = target.homogeneous(k);
        for l in (1..=lmax).filter(|&l| 2 * l < k) {
            rhs.add_assign_scaled(&powers[l].homogeneous(k), &h.coeffs[l]);
        }
        if k % 2 == 1 {
            if !rhs.is_zero() {
                return DufloFit { h, h_j, failure: Some((k, rhs)) };
            }
            continue;
        }
        let l = k / 2;
        let mut cols: Vec<CyclicElement> = (1..=ctx.boundary).map(|j| project(&TensorElement::z(ctx, j).pow(l))).collect();
        cols.push(-&powers[l].homogeneous(k));
        match solve_in_span(&rhs, &cols) {
            Some(x) => {
                for j in 0..ctx.boundary {
                    h_j[j].coeffs[l] = x[j].clone();
                }
                h.coeffs[l] = x[ctx.boundary].clone();
            }
            None => return DufloFit { h, h_j, failure: Some((k, rhs)) },
        }
    }
    DufloFit { h, h_j, failure: None }
}

fn fit_report(ctx: AlgebraContext, target: &CyclicElement, base: &TensorElement, upto: usize) -> KVReport {
    let fit = fit_duflo(target, base, upto);
    let mut rep = zero_report(KvEquation::Second, ctx, upto);
    rep.h = fit.h;
    rep.h_j = fit.h_j;
    if let Some((k, r)) = fit.failure {
        rep.satisfied_to_degree = k - 1;
        rep.residual = Some(r.render());
    }
    rep
}

/// `r + |p|`
pub fn framing_constant(ctx: AlgebraContext, fr: &Framing) -> CyclicElement {
    &r_element(ctx) + &project(&fr.p_element(ctx))
}

/// KV II with Duflo extraction. If KV I fails, that report is returned instead.
pub fn verify_kv2(f: &TAutElement, fr: &Framing) -> Result<KVReport> {
    let kv1 = verify_kv1(f);
    if !kv1.passed() {
        return Ok(kv1);
    }
    kv2_only(f, fr)
}

fn kv2_only(f: &TAutElement, fr: &Framing) -> Result<KVReport> {
    let ctx = f.ctx();
    let hw = honest_weight(ctx);
    let target = (&jq_taut(f, fr)? - &framing_constant(ctx, fr)).truncated(hw);
    Ok(fit_report(ctx, &target, &special_elements(ctx).xi, hw))
}

/// Both equations; `Ok(report)` is the KV II report when KV I holds.
pub fn verify_kv(f: &TAutElement, fr: &Framing) -> Result<(KVReport, KVReport)> {
    Ok((verify_kv1(f), kv2_only(f, fr)?))
}

// ---------------------------------------------------------------------------
// degree-by-degree linear systems

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum RowKey {
    First(Word),
    Second(CyclicWord),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Image(u8),
    Comp(usize),
}

struct System {
    ctx: AlgebraContext,
    rows: BTreeMap<RowKey, usize>,
    entries: Vec<(usize, usize, Rational)>,
    ncols: usize,
}

impl System {
    fn new(ctx: AlgebraContext) -> Self {
        System { ctx, rows: BTreeMap::new(), entries: Vec::new(), ncols: 0 }
    }

    fn row(&mut self, key: RowKey) -> usize {
        let n = self.rows.len();
        *self.rows.entry(key).or_insert(n)
    }

    fn column(&mut self, first: Option<&TensorElement>, second: Option<&CyclicElement>) -> usize {
        let c = self.ncols;
        self.ncols += 1;
        if let Some(e) = first {
            for (w, v) in e.terms() {
                let r = self.row(RowKey::First(w.clone()));
                self.entries.push((r, c, v.clone()));
            }
        }
        if let Some(e) = second {
            for (w, v) in e.terms() {
                let r = self.row(RowKey::Second(w.clone()));
                self.entries.push((r, c, v.clone()));
            }
        }
        c
    }

    fn rhs(&mut self, first: &TensorElement, second: &CyclicElement) -> Vec<Rational> {
        let mut pairs = Vec::new();
        for (w, v) in first.terms() {
            pairs.push((self.row(RowKey::First(w.clone())), v.clone()));
        }
        for (w, v) in second.terms() {
            pairs.push((self.row(RowKey::Second(w.clone())), v.clone()));
        }
        let mut b = vec![Rational::zero(); self.rows.len()];
        for (r, v) in pairs {
            b[r] += v;
        }
        b
    }

    fn matrix(&self) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.rows.len(), self.ncols);
        for (r, c, v) in &self.entries {
            m.add_to(*r, *c, v);
        }
        m
    }

    fn label(&self, r: usize) -> String {
        let key = self.rows.iter().find(|(_, &i)| i == r).map(|(k, _)| k.clone()).expect("row exists");
        match key {
            RowKey::First(w) => format!("KV I: {}", w.render(&self.ctx)),
            RowKey::Second(c) => format!("KV II: {}", HasWord::render(&c, &self.ctx)),
        }
    }
}

/// Degree-`k` tangential derivations, one basis element per column.
fn tder_columns(ctx: AlgebraContext, k: usize) -> Vec<(Slot, TensorElement)> {
    let mut out = Vec::new();
    let img = lie_basis(ctx, k + 1);
    for g in 0..2 * ctx.genus as u8 {
        out.extend(img.iter().map(|b| (Slot::Image(g), b.clone())));
    }
    let comp = lie_basis(ctx, k);
    for j in 1..=ctx.boundary {
        out.extend(comp.iter().map(|b| (Slot::Comp(j), b.clone())));
    }
    out
}

fn single(ctx: AlgebraContext, slot: Slot, e: &TensorElement) -> TangentialDerivation {
    let mut u = TangentialDerivation::zero(ctx);
    match slot {
        Slot::Image(g) => u.set_image(g, e.clone()),
        Slot::Comp(j) => u.set_comp(j, e.clone()),
    }
    u
}

fn assemble(ctx: AlgebraContext, cols: &[(Slot, TensorElement)], x: &[Rational]) -> TangentialDerivation {
    let mut u = TangentialDerivation::zero(ctx);
    for ((slot, e), c) in cols.iter().zip(x) {
        if c.is_zero() {
            continue;
        }
        match *slot {
            Slot::Image(g) => {
                let v = &u.image(g).clone() + &e.scale(c);
                u.set_image(g, v);
            }
            Slot::Comp(j) => {
                let v = &u.comp(j).clone() + &e.scale(c);
                u.set_comp(j, v);
            }
        }
    }
    u
}

/// `tDiv_q(u) = tDiv(u) - sum_j q_j |u_j|`
pub fn tdiv_q(u: &TangentialDerivation, fr: &Framing) -> Result<CyclicElement> {
    let ctx = u.ctx();
    let mut out = tdiv(u)?;
    for j in 1..=ctx.boundary {
        out.add_assign_scaled(&project(u.comp(j)), &q(-fr.q[j - 1]));
    }
    Ok(out)
}

fn certificate(sys: &System, m: &SparseMatrix, b: &[Rational], k: usize, first: &TensorElement, second: &CyclicElement) -> ObstructionCertificate {
    let y = inconsistency_witness(m, b).expect("inconsistent systems have a witness");
    let witness = y.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(r, v)| (sys.label(r), fmt_rational(v))).collect();
    let mut residual = Vec::new();
    if !first.is_zero() {
        residual.push(format!("KV I: {}", first.render()));
    }
    if !second.is_zero() {
        residual.push(format!("KV II: {}", second.render()));
    }
    ObstructionCertificate { degree: k, witness, pairing: fmt_rational(&dot(&y, b)), residual: residual.join("; ") }
}

fn check_solvable_context(ctx: AlgebraContext) -> Result<()> {
    if ctx.genus == 0 && ctx.boundary == 0 {
        return Err(GtkvError::Precondition("the KV problem needs g > 0 or n > 0".into()));
    }
    if ctx.max_weight < 1 {
        return Err(GtkvError::Precondition("truncation degree must be at least 1".into()));
    }
    Ok(())
}

/// Solves KV I alone, degree by degree.
pub fn solve_kv1(ctx: AlgebraContext) -> Result<SolveOutcome> {
    solve_inner(ctx, None, SolveOptions::default())
}

/// Solves KV I and KV II together, degree by degree.
///
/// The top degrees are only pinned down by KV I two weights higher, so the solve
/// runs at `D + 2` and is truncated back; otherwise the top Duflo coefficient
/// could drift between `h` and the `h_j`.
pub fn solve_kv(ctx: AlgebraContext, fr: &Framing, opts: SolveOptions) -> Result<SolveOutcome> {
    if fr.p_x.len() != ctx.genus || fr.p_y.len() != ctx.genus || fr.q.len() != ctx.boundary {
        return Err(GtkvError::DimensionMismatch { expected: 2 * ctx.genus + ctx.boundary, found: fr.p_x.len() + fr.p_y.len() + fr.q.len() });
    }
    check_solvable_context(ctx)?;
    let wide = ctx.with_max_weight(ctx.max_weight + 2);
    match solve_inner(wide, Some(fr), opts)? {
        SolveOutcome::Solved(f) => Ok(SolveOutcome::Solved(f.with_context(ctx))),
        SolveOutcome::Obstructed(c) if c.degree <= honest_weight(ctx) => Ok(SolveOutcome::Obstructed(c)),
        SolveOutcome::Obstructed(_) => solve_inner(ctx, Some(fr), opts),
    }
}

fn solve_inner(ctx: AlgebraContext, fr: Option<&Framing>, opts: SolveOptions) -> Result<SolveOutcome> {
    check_solvable_context(ctx)?;
    let d = ctx.max_weight;
    let hw = honest_weight(ctx);
    let sp = special_elements(ctx);
    let top = if fr.is_some() { hw } else { d.saturating_sub(2) };
    let mut f = TAutElement::identity(ctx);
    let mut h = PowerSeries::zero(hw / 2);
    let omega_pows: Vec<CyclicElement> = (0..=hw / 2).map(|l| project(&sp.omega.pow(l))).collect();
    let xi_pows: Vec<CyclicElement> = (0..=hw / 2).map(|l| project(&sp.xi.pow(l))).collect();
    for k in 1..=top {
        let kv1_active = k + 2 <= d;
        let kv2 = fr.filter(|_| k <= hw);
        let cols = tder_columns(ctx, k);
        let mut sys = System::new(ctx);
        for (slot, e) in &cols {
            let u = single(ctx, *slot, e);
            let a = kv1_active.then(|| u.apply(&sp.omega).homogeneous(k + 2));
            let b = match kv2 {
                Some(fr) => Some(tdiv_q(&u, fr)?.homogeneous(k)),
                None => None,
            };
            sys.column(a.as_ref(), b.as_ref());
        }
        let even = kv2.is_some() && k % 2 == 0;
        if even {
            let l = k / 2;
            sys.column(None, Some(&omega_pows[l]));
            for j in 1..=ctx.boundary {
                sys.column(None, Some(&-&project(&TensorElement::z(ctx, j).pow(l))));
            }
        }
        let rhs1 = if kv1_active { (&sp.xi - &f.apply(&sp.omega)).homogeneous(k + 2) } else { TensorElement::zero(ctx) };
        let rhs2 = match kv2 {
            Some(fr) => {
                let mut t = &jq_taut(&f, fr)? - &framing_constant(ctx, fr);
                for l in (1..=hw / 2).filter(|&l| 2 * l < k) {
                    t.add_assign_scaled(&xi_pows[l], &h.coeffs[l]);
                }
                -&t.homogeneous(k)
            }
            None => CyclicElement::zero(ctx),
        };
        let b = sys.rhs(&rhs1, &rhs2);
        let m = sys.matrix();
        let sol = solve_affine(&m, &b)?;
        let Some(mut x) = sol.particular else {
            return Ok(SolveOutcome::Obstructed(certificate(&sys, &m, &b, k, &rhs1, &rhs2)));
        };
        if let Some(seed) = opts.branch {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
            for v in &sol.nullspace {
                let c = q(rng.gen_range(-2..=2));
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += &c * vi;
                }
            }
        }
        if even {
            h.coeffs[k / 2] = x[cols.len()].clone();
        }
        let u = assemble(ctx, &cols, &x[..cols.len()]);
        if !u.is_zero() {
            f = f.compose(&TAutElement::exp(&u)?);
        }
    }
    Ok(SolveOutcome::Solved(f))
}

/// Runs `solve_kv` and confirms both equations on the result.
pub fn solve_and_verify(ctx: AlgebraContext, fr: &Framing, opts: SolveOptions) -> Result<std::result::Result<(TAutElement, KVReport), ObstructionCertificate>> {
    match solve_kv(ctx, fr, opts)? {
        SolveOutcome::Obstructed(c) => Ok(Err(c)),
        SolveOutcome::Solved(f) => {
            let rep = verify_kv2(&f, fr)?;
            if !rep.passed() {
                return Err(GtkvError::Obstruction {
                    degree: rep.satisfied_to_degree + 1,
                    detail: format!("solver output fails {:?}: {}", rep.equation, rep.residual.clone().unwrap_or_default()),
                });
            }
            Ok(Ok((f, rep)))
        }
    }
}

// ---------------------------------------------------------------------------
// symmetry groups

/// Membership in a KRV/KV-type group or Lie algebra, with Duflo functions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub member: bool,
    pub fixes_base: bool,
    pub h: PowerSeries,
    pub h_j: Vec<PowerSeries>,
    pub residual: Option<String>,
}

fn membership(ctx: AlgebraContext, moved: TensorElement, base: &TensorElement, target: Result<CyclicElement>) -> MembershipReport {
    let hw = honest_weight(ctx);
    let empty = |residual: String| MembershipReport {
        member: false,
        fixes_base: false,
        h: PowerSeries::zero(hw / 2),
        h_j: vec![PowerSeries::zero(hw / 2); ctx.boundary],
        residual: Some(residual),
    };
    if let Some((k, e)) = first_failure(&moved, ctx.max_weight) {
        return empty(format!("weight {k}: {}", e.render()));
    }
    let target = match target {
        Ok(t) => t.truncated(hw),
        Err(e) => {
            let mut r = empty(e.to_string());
            r.fixes_base = true;
            return r;
        }
    };
    let fit = fit_duflo(&target, base, hw);
    MembershipReport {
        member: fit.failure.is_none(),
        fixes_base: true,
        h: fit.h,
        h_j: fit.h_j,
        residual: fit.failure.map(|(k, r)| format!("weight {k}: {}", r.render())),
    }
}

/// `u(omega) = 0` and `tDiv_q(u) = sum |h_j(z_j)| - |h(omega)|`.
pub fn krv_member(u: &TangentialDerivation, fr: &Framing) -> MembershipReport {
    let ctx = u.ctx();
    let omega = special_elements(ctx).omega;
    if !u.is_positive() {
        let hw = honest_weight(ctx);
        let low = u.homogeneous(0);
        let parts: Vec<String> = low.images().iter().chain(low.comps()).map(|e| e.render()).collect();
        return MembershipReport {
            member: false,
            fixes_base: u.apply(&omega).is_zero(),
            h: PowerSeries::zero(hw / 2),
            h_j: vec![PowerSeries::zero(hw / 2); ctx.boundary],
            residual: Some(format!("degree-0 part [{}]", parts.join(", "))),
        };
    }
    membership(ctx, u.apply(&omega), &omega, tdiv_q(u, fr))
}

/// `G(omega) = omega` and `j_q(G) = sum |h_j(z_j)| - |h(omega)|`.
pub fn krv_group_member(g: &TAutElement, fr: &Framing) -> MembershipReport {
    let ctx = g.ctx();
    let omega = special_elements(ctx).omega;
    membership(ctx, &g.apply(&omega) - &omega, &omega, jq_taut(g, fr))
}

/// `G(xi) = xi` and `J_{p,q}(G) = sum |h_j(z_j)| - |h(xi)|`.
pub fn kv_group_member(g: &TAutElement, fr: &Framing) -> MembershipReport {
    let ctx = g.ctx();
    let xi = special_elements(ctx).xi;
    membership(ctx, &g.apply(&xi) - &xi, &xi, jpq_taut(g, fr))
}

/// Basis of the degree-`k` part of `krv_q`: `u(omega) = 0` with `tDiv_q(u)` central.
pub fn krv_basis(ctx: AlgebraContext, fr: &Framing, k: usize) -> Result<Vec<TangentialDerivation>> {
    let sp = special_elements(ctx);
    let cols = tder_columns(ctx, k);
    let mut sys = System::new(ctx);
    for (slot, e) in &cols {
        let u = single(ctx, *slot, e);
        sys.column(Some(&u.apply(&sp.omega).homogeneous(k + 2)), Some(&tdiv_q(&u, fr)?.homogeneous(k)));
    }
    if k % 2 == 0 {
        sys.column(None, Some(&project(&sp.omega.pow(k / 2))));
        for j in 1..=ctx.boundary {
            sys.column(None, Some(&project(&TensorElement::z(ctx, j).pow(k / 2))));
        }
    }
    let ker = crate::exactlin::kernel(&sys.matrix());
    let proj: Vec<Vec<Rational>> = ker.iter().map(|v| v[..cols.len()].to_vec()).collect();
    Ok(crate::exactlin::row_reduce(&proj, cols.len())
        .iter()
        .map(|x| assemble(ctx, &cols, x))
        .filter(|u| !u.is_zero())
        .collect())
}

// ---------------------------------------------------------------------------
// framings

/// Moves a solution for framing `from` to one for framing `to` by a degree-one
/// special derivation `u` with `tDiv_to(u) = |p_to - p_from| + [C_{q_to - q_from}(F)]_1`.
pub fn adjust_framing(f: &TAutElement, from: &Framing, to: &Framing) -> Result<TAutElement> {
    let ctx = f.ctx();
    let src = verify_kv2(f, from)?;
    if !src.passed() {
        return Err(GtkvError::Precondition(format!("input is not a KV solution for the source framing: {}", src.residual.unwrap_or_default())));
    }
    let mut target = &project(&to.p_element(ctx)) - &project(&from.p_element(ctx));
    for j in 1..=ctx.boundary {
        let dq = to.q[j - 1] - from.q[j - 1];
        target.add_assign_scaled(&project(f.conjugator(j)).homogeneous(1), &q(dq));
    }
    let sp = special_elements(ctx);
    let cols = tder_columns(ctx, 1);
    let mut sys = System::new(ctx);
    for (slot, e) in &cols {
        let u = single(ctx, *slot, e);
        sys.column(Some(&u.apply(&sp.omega).homogeneous(3)), Some(&tdiv_q(&u, to)?.homogeneous(1)));
    }
    let b = sys.rhs(&TensorElement::zero(ctx), &target);
    let sol = solve_affine(&sys.matrix(), &b)?;
    let Some(x) = sol.particular else {
        let why = if ctx.genus == 1 && to.q.iter().all(|&v| v == 0) {
            "in genus one with q = 0 the divergence of degree-one special derivations vanishes, so at most one p is solvable"
        } else {
            "no degree-one special derivation has the required divergence"
        };
        return Err(GtkvError::UnreachableFraming(format!("{why}; needed tDiv_q(u) = {}", target.render())));
    };
    let u = assemble(ctx, &cols, &x);
    let out = if u.is_zero() { f.clone() } else { f.compose(&TAutElement::exp(&u)?) };
    let rep = verify_kv2(&out, to)?;
    if !rep.passed() {
        return Err(GtkvError::Obstruction {
            degree: rep.satisfied_to_degree + 1,
            detail: format!("adjusted element fails {:?}: {}", rep.equation, rep.residual.unwrap_or_default()),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// gluing and the elliptic construction

/// The framing `q = (2 g_1, 2 g_2)` on the pair of pants used for gluing.
pub fn pants_framing(target: PantsTarget, d: usize) -> Framing {
    Framing::new(AlgebraContext::new(0, 2, d), vec![], vec![], vec![2 * target.g1 as i64, 2 * target.g2 as i64]).expect("two boundary values")
}

/// The framing `q = (1, 1)` on the pair of pants used by the elliptic map.
pub fn elliptic_framing(d: usize) -> Framing {
    Framing::new(AlgebraContext::new(0, 2, d), vec![], vec![], vec![1, 1]).expect("two boundary values")
}

/// Compares Duflo functions `h` modulo the linear part on the coefficients every
/// report determines; the error names the first differing coefficient.
pub fn check_duflo_match(named: &[(&str, &KVReport)]) -> Result<()> {
    let Some((n0, r0)) = named.first() else { return Ok(()) };
    for (n, r) in &named[1..] {
        let top = r0.duflo_range().min(r.duflo_range());
        for l in 2..=top {
            let (a, b) = (r0.h.coeff(l), r.h.coeff(l));
            if a != b {
                return Err(GtkvError::DufloMismatch(format!(
                    "coefficient of s^{l} in h: {} for {n0}, {} for {n}",
                    fmt_rational(&a),
                    fmt_rational(&b)
                )));
            }
        }
    }
    Ok(())
}

/// `(F_1 x F_2) . P(F)`. `F_1, F_2` are checked against the adapted framing and
/// `F` against `q = (2 g_1, 2 g_2)`; their Duflo functions must agree modulo `s`.
pub fn glue_solutions(f1: &TAutElement, f2: &TAutElement, f: &TAutElement, target: PantsTarget, d: usize) -> Result<TAutElement> {
    let shapes = [(f1.ctx(), target.g1, target.n1), (f2.ctx(), target.g2, target.n2), (f.ctx(), 0, 2)];
    for (c, g, n) in shapes {
        if (c.genus, c.boundary) != (g, n) {
            return Err(GtkvError::WrongContext(format!("expected g={g}, n={n}, got {c}")));
        }
        if c.max_weight < d {
            return Err(GtkvError::Precondition(format!("{c} is truncated below the target degree {d}")));
        }
    }
    let r1 = verify_kv2(f1, &Framing::adapted(f1.ctx()))?;
    let r2 = verify_kv2(f2, &Framing::adapted(f2.ctx()))?;
    let r = verify_kv2(f, &pants_framing(target, f.ctx().max_weight))?;
    for (name, rep) in [("F1", &r1), ("F2", &r2), ("F", &r)] {
        if !rep.passed() {
            return Err(GtkvError::Precondition(format!("{name} is not a KV solution: {}", rep.residual.clone().unwrap_or_default())));
        }
    }
    check_duflo_match(&[("F", &r), ("F1", &r1), ("F2", &r2)])?;
    let t = |e: &TAutElement| e.with_context(e.ctx().with_max_weight(d));
    let prod = product_taut(&t(f1), &t(f2), target, d)?;
    Ok(prod.compose(&pants_taut(&t(f), target, d)?))
}

/// `j(P(F)) - j_q(F)|_{z_k = omega_k}` with `q = (2 g_1, 2 g_2)`; zero for every `F`.
pub fn jpants_residual(f: &TAutElement, target: PantsTarget, d: usize) -> Result<CyclicElement> {
    let glued = pants_taut(f, target, d)?;
    let ctx = glued.ctx();
    let lhs = j_taut(&glued)?;
    let om = target.omegas(ctx);
    let rhs = jq_taut(f, &pants_framing(target, f.ctx().max_weight))?.substitute(&om);
    Ok((&lhs - &rhs).truncated(honest_weight(ctx)))
}

/// Linear coefficients `c_i^k` of `f_i = c_i^1 z_1 + c_i^2 z_2 + ...`.
fn linear_part(f: &TAutElement) -> [[Rational; 2]; 2] {
    let ctx = f.ctx();
    let c = |i: usize, k: usize| f.conjugator(i).coeff(&Word::single(ctx.z(k)));
    [[c(1, 1), c(1, 2)], [c(2, 1), c(2, 2)]]
}

/// Renormalizes a pair-of-pants solution so that `f_j` has no `z_j` term and
/// `c_1^2 + c_2^1 = 0`; both moves preserve KV I and the Duflo function modulo `s`.
pub fn normalize_pants_solution(f: &TAutElement) -> Result<TAutElement> {
    let ctx = f.ctx();
    if (ctx.genus, ctx.boundary) != (0, 2) {
        return Err(GtkvError::WrongContext(format!("expected g=0, n=2, got {ctx}")));
    }
    let c = linear_part(f);
    let lambda = -(&c[0][1] + &c[1][0]) * qf(1, 2);
    let z1 = TensorElement::z(ctx, 1);
    let z2 = TensorElement::z(ctx, 2);
    let u1 = &z1.scale(&-&c[0][0]) + &z2.scale(&lambda);
    let u2 = &z1.scale(&lambda) + &z2.scale(&-&c[1][1]);
    let v = TangentialDerivation::new(ctx, vec![], vec![u1, u2])?;
    if v.is_zero() {
        return Ok(f.clone());
    }
    Ok(f.compose(&TAutElement::exp(&v)?))
}

/// `F^ell . phi` on the `(g, n) = (1, 0)` algebra truncated at `d`, from a
/// pair-of-pants solution truncated at `2d` or more.
pub fn elliptic_solution(f: &TAutElement, d: usize) -> Result<TAutElement> {
    let ctx = f.ctx();
    if (ctx.genus, ctx.boundary) != (0, 2) {
        return Err(GtkvError::WrongContext(format!("expected g=0, n=2, got {ctx}")));
    }
    if ctx.max_weight < 2 * d {
        return Err(GtkvError::Precondition(format!("the elliptic map needs the pants solution to weight {}, got {}", 2 * d, ctx.max_weight)));
    }
    let rep = verify_kv2(f, &elliptic_framing(ctx.max_weight))?;
    if !rep.passed() {
        return Err(GtkvError::Precondition(format!("input is not a KV solution: {}", rep.residual.unwrap_or_default())));
    }
    let fnorm = normalize_pants_solution(f)?;
    let ell = elliptic_taut(&fnorm, d)?;
    Ok(ell.compose(&phi_auto(ell.ctx())?))
}

// ---------------------------------------------------------------------------
// serialization

/// One named check in a report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, residual: Option<String>) -> Self {
        let status = if residual.is_none() { "pass" } else { "fail" };
        CheckRecord { name: name.into(), status: status.into(), residual }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// A solved KV problem with its Duflo functions and checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionManifest {
    pub g: usize,
    pub n: usize,
    #[serde(rename = "D")]
    pub degree: usize,
    pub framing: Framing,
    pub duflo_h: PowerSeries,
    pub duflo_hj: Vec<PowerSeries>,
    pub checks: Vec<CheckRecord>,
    pub solution: Value,
}

impl SolutionManifest {
    pub fn new(f: &TAutElement, fr: &Framing, kv1: &KVReport, kv2: &KVReport) -> Self {
        let ctx = f.ctx();
        SolutionManifest {
            g: ctx.genus,
            n: ctx.boundary,
            degree: ctx.max_weight,
            framing: fr.clone(),
            duflo_h: kv2.h.clone(),
            duflo_hj: kv2.h_j.clone(),
            checks: vec![CheckRecord::new("KV I", kv1.residual.clone()), CheckRecord::new("KV II", kv2.residual.clone())],
            solution: f.to_json(),
        }
    }

    pub fn taut(&self) -> Result<TAutElement> {
        TAutElement::from_json(&self.solution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivations::delta2n;
    use crate::exactlin::qf;
    use crate::gt_structures::hamiltonian_gr;

    fn solved(ctx: AlgebraContext, fr: &Framing) -> (TAutElement, KVReport) {
        solve_and_verify(ctx, fr, SolveOptions::default()).unwrap().unwrap()
    }

    #[test]
    fn identity_in_one_boundary_component() {
        let ctx = AlgebraContext::new(0, 1, 6);
        let id = TAutElement::identity(ctx);
        assert!(verify_kv1(&id).passed());
        let rep = verify_kv2(&id, &Framing::adapted(ctx)).unwrap();
        assert!(rep.passed());
        assert!(rep.h.coeffs.iter().chain(rep.h_j.iter().flat_map(|s| s.coeffs.iter())).all(|c| c.is_zero()));
    }

    #[test]
    fn identity_fails_at_weight_three_in_genus_one() {
        let ctx = AlgebraContext::new(1, 0, 6);
        let rep = verify_kv1(&TAutElement::identity(ctx));
        assert_eq!(rep.satisfied_to_degree, 2);
        let sp = special_elements(ctx);
        assert_eq!(rep.residual, Some((&sp.xi - &sp.omega).homogeneous(3).render()));
    }

    #[test]
    fn kv1_solver() {
        for (g, n, d) in [(0, 2, 4), (1, 0, 5), (2, 1, 4)] {
            let ctx = AlgebraContext::new(g, n, d);
            let f = solve_kv1(ctx).unwrap().solution().unwrap();
            assert!(verify_kv1(&f).passed(), "{ctx}");
        }
    }

    #[test]
    fn pants_solution_and_duflo() {
        let ctx = AlgebraContext::new(0, 2, 8);
        let (_, rep) = solved(ctx, &Framing::adapted(ctx));
        assert_eq!(rep.h.coeff(2), qf(1, 48));
        assert_eq!(rep.h.coeff(4), qf(-1, 5760));
    }

    #[test]
    fn genus_one_solution() {
        let ctx = AlgebraContext::new(1, 0, 6);
        let (f, rep) = solved(ctx, &Framing::adapted(ctx));
        assert!(verify_kv1(&f).passed());
        assert_eq!(rep.h.coeff(2), qf(1, 48));
    }

    #[test]
    fn genus_one_with_nonzero_p_is_obstructed() {
        let ctx = AlgebraContext::new(1, 0, 3);
        let fr = Framing::new(ctx, vec![1], vec![0], vec![]).unwrap();
        let out = solve_kv(ctx, &fr, SolveOptions::default()).unwrap();
        let cert = out.certificate().expect("obstructed");
        assert_eq!(cert.degree, 1);
        assert_ne!(cert.pairing, "0");
    }

    #[test]
    fn genus_two_any_framing() {
        let ctx = AlgebraContext::new(2, 0, 4);
        let fr = Framing::new(ctx, vec![1, 0], vec![0, -2], vec![]).unwrap();
        solved(ctx, &fr);
    }

    #[test]
    fn delta_is_special_with_zero_duflo() {
        for n in 1..=2 {
            let ctx = AlgebraContext::new(1, 0, 2 * n + 2);
            let rep = krv_member(&delta2n(ctx, n).unwrap(), &Framing::adapted(ctx));
            assert!(rep.member, "{rep:?}");
            assert!(rep.h.coeffs.iter().all(|c| c.is_zero()));
        }
    }

    #[test]
    fn hamiltonian_of_x_squared_is_not_special() {
        let ctx = AlgebraContext::new(1, 1, 6);
        let c = CyclicElement::parse(ctx, "|x1*x1|").unwrap();
        let rep = krv_member(&hamiltonian_gr(&c), &Framing::adapted(ctx));
        assert!(!rep.member);
        assert!(rep.residual.unwrap().starts_with("degree-0"));
    }

    #[test]
    fn special_derivation_with_noncentral_divergence() {
        let ctx = AlgebraContext::new(2, 0, 4);
        let p = |s: &str| TensorElement::parse(ctx, s).unwrap();
        let u = TangentialDerivation::new(
            ctx,
            vec![p("x2*x1 - x1*x2"), TensorElement::zero(ctx), p("x2*y1 - y1*x2"), p("y1*x1 - x1*y1")],
            vec![],
        )
        .unwrap();
        assert_eq!(tdiv(&u).unwrap(), CyclicElement::parse(ctx, "2*|x2|").unwrap());
        let rep = krv_member(&u, &Framing::adapted(ctx));
        assert!(rep.fixes_base && !rep.member);
        assert_eq!(rep.residual.as_deref(), Some("weight 1: 2*|x2|"));
    }

    #[test]
    fn framing_adjustment() {
        let ctx = AlgebraContext::new(2, 0, 3);
        let (f, _) = solved(ctx, &Framing::adapted(ctx));
        let to = Framing::new(ctx, vec![0, 0], vec![1, 0], vec![]).unwrap();
        adjust_framing(&f, &Framing::adapted(ctx), &to).unwrap();

        let ctx = AlgebraContext::new(1, 1, 3);
        let (f, _) = solved(ctx, &Framing::adapted(ctx));
        let to = Framing::new(ctx, vec![0], vec![0], vec![1]).unwrap();
        adjust_framing(&f, &Framing::adapted(ctx), &to).unwrap();

        let ctx = AlgebraContext::new(1, 0, 3);
        let (f, _) = solved(ctx, &Framing::adapted(ctx));
        let to = Framing::new(ctx, vec![1], vec![0], vec![]).unwrap();
        assert!(matches!(adjust_framing(&f, &Framing::adapted(ctx), &to), Err(GtkvError::UnreachableFraming(_))));
    }

    #[test]
    fn elliptic_pipeline() {
        let d = 5;
        let p = AlgebraContext::new(0, 2, 2 * d);
        let (f, rp) = solved(p, &elliptic_framing(2 * d));
        let e = elliptic_solution(&f, d).unwrap();
        let rep = verify_kv2(&e, &Framing::adapted(e.ctx())).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.h.coeff(2), rp.h.coeff(2));
    }

    #[test]
    fn gluing_two_tori() {
        let d = 4;
        let t = PantsTarget { g1: 1, n1: 0, g2: 1, n2: 0 };
        let c1 = AlgebraContext::new(1, 0, d);
        let (f1, _) = solved(c1, &Framing::adapted(c1));
        let (f2, _) = solve_and_verify(c1, &Framing::adapted(c1), SolveOptions { branch: Some(3) }).unwrap().unwrap();
        let p = AlgebraContext::new(0, 2, d);
        let (f, _) = solved(p, &pants_framing(t, d));
        let glued = glue_solutions(&f1, &f2, &f, t, d).unwrap();
        let rep = verify_kv2(&glued, &Framing::adapted(glued.ctx())).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn duflo_mismatch_is_named() {
        let ctx = AlgebraContext::new(0, 2, 4);
        let (_, rep) = solved(ctx, &Framing::adapted(ctx));
        let mut bad = rep.clone();
        bad.h.coeffs[2] = qf(1, 7);
        match check_duflo_match(&[("F", &rep), ("F1", &bad)]) {
            Err(GtkvError::DufloMismatch(m)) => assert!(m.contains("s^2") && m.contains("1/7"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn torsor_difference_is_krv() {
        let ctx = AlgebraContext::new(1, 0, 5);
        let fr = Framing::adapted(ctx);
        let (f, r) = solved(ctx, &fr);
        let (f2, r2) = solve_and_verify(ctx, &fr, SolveOptions { branch: Some(11) }).unwrap().unwrap();
        assert_ne!(f, f2);
        let g = f.inverse().compose(&f2);
        let m = krv_group_member(&g, &fr);
        assert!(m.member, "{m:?}");
        for l in 2..=r.duflo_range() {
            assert_eq!(m.h.coeff(l), &r2.h.coeff(l) - &r.h.coeff(l));
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let ctx = AlgebraContext::new(0, 2, 4);
        let fr = Framing::adapted(ctx);
        let (f, rep) = solved(ctx, &fr);
        let m = SolutionManifest::new(&f, &fr, &verify_kv1(&f), &rep);
        let s = serde_json::to_string(&m).unwrap();
        let back: SolutionManifest = serde_json::from_str(&s).unwrap();
        assert_eq!(back.taut().unwrap(), f);
        assert_eq!(back.duflo_h, rep.h);
    }
}
