//! Check registry and parallel suite runner. Every check is a pure function of
//! an instance context and a per-check seeded RNG, so reports are reproducible.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{commutant, max_abs, op_norm, CMat, CVec, Element, FdAlgebra, OperatorSpan, C64, I};
use crate::automorphism::Automorphism;
use crate::dynamics::{
    default_t_grid, gaussian_smooth, gibbs_weight, integrate_commute, kms_check, modular_group_of, modular_objects,
    representation_matrix, right_action_deviation, strict_convergence, tomita_check, twisted_trace_deviation,
    uniqueness_harness, ModularTriple, OneParamGroup, SmoothingQuadrature, TomitaReport,
};
use crate::error::{Error, Result};
use crate::gns::{cutoff_deviations, gns_construct, lift_automorphism, t_omega, wstar_lift, xi_omega, GnsTriple};
use crate::hullx::{convex_extract, hull_project, hull_project_brute, strong_star_variant, ExtractionProblem, GAP_TOL};
use crate::instance::{Instance, Resolved};
use crate::quadrature::QuadRule;
use crate::random::{
    derive_seed, gaussian_matrix, gaussian_vector, random_dominated, random_element, random_hermitian,
    random_positive, random_unitary, random_unitary_element,
};
use crate::report::{CheckRecord, Status};
use crate::slice::{
    abs_theta_inequality, cp_slice, cs_operator_inequality, dominated_chain, dominated_convergence, fubini_deviation,
    hereditary_gap, ksgns, ksgns_cutoff, ksgns_deviations, module_functional_deviation, reconstruct_from_dual,
    slice_automorphism, slice_module_props, slice_phi, slice_phi_certified, KrausMap, TensorElement,
};
use crate::tensor::{
    basis_expansion, joint_gns, kms_tensor, state_case, tensor_cutoff, tensor_fubini, tensor_rel_invariance,
    tensor_sup_certificate, tensor_weight, JointGns,
};
use crate::weights::{check_dominated, combes_sup, functional_abs, gphi_chain, Functional, Weight};

pub const SUITES: [&str; 8] = ["gns", "kms", "modular", "tomita", "slice", "tensor", "hullx", "integrate"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TolClass {
    Algebraic,
    Kms,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub algebraic: f64,
    pub kms: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { algebraic: 1e-9, kms: 1e-7, quadrature: 1e-6 }
    }
}

impl Tolerances {
    /// One tolerance for every class.
    pub fn uniform(tol: f64) -> Self {
        Self { algebraic: tol, kms: tol, quadrature: tol }
    }

    pub fn get(&self, class: TolClass) -> f64 {
        match class {
            TolClass::Algebraic => self.algebraic,
            TolClass::Kms => self.kms,
            TolClass::Quadrature => self.quadrature,
        }
    }
}

/// Result of one check body. `verdict` overrides the `deviation ≤ tol` rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub deviation: f64,
    pub verdict: Option<bool>,
    pub skipped: bool,
    pub note: Option<String>,
}

impl Outcome {
    pub fn dev(deviation: f64) -> Self {
        Self { deviation, verdict: None, skipped: false, note: None }
    }

    pub fn verdict(deviation: f64, passed: bool) -> Self {
        Self { deviation, verdict: Some(passed), skipped: false, note: None }
    }

    pub fn skip(reason: impl Into<String>) -> Self {
        Self { deviation: 0.0, verdict: None, skipped: true, note: Some(reason.into()) }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

type Body = fn(&Context, &mut ChaCha8Rng, f64) -> Result<Outcome>;

pub struct Check {
    pub id: &'static str,
    pub suite: &'static str,
    pub anchor: &'static str,
    pub class: TolClass,
    body: Body,
}

impl std::fmt::Debug for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Check").field("id", &self.id).field("suite", &self.suite).finish()
    }
}

/// An instance with its derived objects, shared by every check.
#[derive(Debug, Clone)]
pub struct Context {
    pub label: String,
    pub instance: Instance,
    pub phi: Weight,
    pub group: Option<OneParamGroup>,
    pub partner: Weight,
    pub gns: GnsTriple,
    joint: OnceLock<Result<JointGns>>,
    tomita: OnceLock<Result<TomitaReport>>,
}

impl Context {
    pub fn new(label: impl Into<String>, instance: Instance) -> Result<Self> {
        let resolved = instance.resolve()?;
        let partner = resolved.partner_or_default();
        let Resolved { weight, group, .. } = resolved;
        let gns = gns_construct(&weight)?;
        Ok(Self {
            label: label.into(),
            instance,
            phi: weight,
            group,
            partner,
            gns,
            joint: OnceLock::new(),
            tomita: OnceLock::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.instance.seed
    }

    pub fn faithful(&self) -> bool {
        self.phi.faithful(FAITHFUL_TOL)
    }

    pub fn modular(&self) -> Result<(ModularTriple, OneParamGroup)> {
        Ok((modular_objects(&self.phi, &self.gns)?, modular_group_of(&self.phi)?))
    }

    /// Joint GNS of `φ ⊗ ψ`, built once.
    pub fn joint(&self) -> Result<&JointGns> {
        self.joint.get_or_init(|| joint_gns(&self.phi, &self.partner)).as_ref().map_err(Clone::clone)
    }

    fn tomita(&self) -> Result<&TomitaReport> {
        self.tomita
            .get_or_init(|| Ok(tomita_check(&self.gns, &self.modular()?.0, 1e-8)))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Stored group, else the modular group of a faithful weight.
    pub fn dynamics(&self) -> Option<OneParamGroup> {
        self.group.clone().or_else(|| modular_group_of(&self.phi).ok())
    }
}

const FAITHFUL_TOL: f64 = 1e-10;
const NOT_FAITHFUL: &str = "weight is not faithful";

fn tensor(a: &FdAlgebra, b: &FdAlgebra, rng: &mut ChaCha8Rng) -> TensorElement {
    TensorElement::new(a, b, random_element(&a.tensor(b), rng)).expect("shapes match")
}

fn positive_tensor(a: &FdAlgebra, b: &FdAlgebra, rng: &mut ChaCha8Rng) -> TensorElement {
    TensorElement::new(a, b, random_positive(&a.tensor(b), rng)).expect("shapes match")
}

/// `e^{isD}`: unitary commuting with the density, so `φ∘Ad = φ`.
fn density_phase(phi: &Weight, s: f64) -> Element {
    phi.density().func_calc(|x| (I * s * x).exp()).expect("density is Hermitian")
}

fn dominated(phi: &Weight, rng: &mut ChaCha8Rng) -> Weight {
    Weight::new(phi.algebra(), random_dominated(phi.density(), rng)).expect("dominated density is positive")
}

fn fmax(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

// ---- gns suite ----

fn algebra_cstar(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let mut dev: f64 = 0.0;
    for _ in 0..8 {
        let a = random_element(alg, rng);
        let b = random_element(alg, rng);
        let n = a.norm();
        dev = dev.max(((a.adjoint() * &a).norm() - n * n).abs() / (1.0 + n * n));
        dev = dev.max(a.adjoint().adjoint().max_abs_diff(&a));
        let rep = max_abs(&(alg.represent(&(&a * &b)) - alg.represent(&a) * alg.represent(&b)));
        dev = dev.max(rep).max(max_abs(&(alg.represent(&a.adjoint()) - alg.represent(&a).adjoint())));
    }
    let n = alg.total_dim();
    dev = dev.max(max_abs(&(alg.represent(&alg.identity()) - CMat::identity(n, n))));
    Ok(Outcome::dev(dev))
}

fn algebra_bicommutant(ctx: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let n = alg.total_dim();
    let gens: Vec<CMat> = alg.basis().iter().map(|e| alg.represent(e)).collect();
    let first = commutant(&gens, n);
    let second = commutant(&first.basis, n);
    let span = OperatorSpan::from_matrices(&gens);
    let dims_match = second.dim == alg.coord_dim() && first.dim == alg.num_blocks();
    Ok(Outcome::verdict(second.distance(&span, n), dims_match && second.distance(&span, n) <= 1e-8)
        .note(format!("commutant dim {}, bicommutant dim {}", first.dim, second.dim)))
}

fn weights_positivity(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let worst = (0..32)
        .map(|_| {
            let a = random_element(alg, rng);
            ctx.phi.at(&(a.adjoint() * &a))
        })
        .fold(0.0, |acc: f64, v| acc.max((-v.re).max(0.0)).max(v.im.abs()));
    let faithful_agrees = ctx.faithful() == (ctx.phi.min_eigenvalue() > FAITHFUL_TOL);
    Ok(Outcome::verdict(worst, worst <= 1e-10 && faithful_agrees))
}

fn weights_functional_norm(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let theta = Functional::new(alg, random_element(alg, rng))?;
    let norm = theta.norm();
    // sampled unit-ball values are lower bounds; the partial isometry attains the norm
    let sampled = (0..32).map(|_| theta.at(&random_unitary_element(alg, rng)).norm()).fold(0.0, f64::max);
    let abs = functional_abs(&theta);
    let attained = theta.at(&abs.partial_isometry.adjoint()).norm();
    let positive_case = Functional::new(alg, ctx.phi.density().clone())?;
    let positive = (positive_case.norm() - ctx.phi.at(&alg.identity()).re).abs();
    Ok(Outcome::dev(fmax([(sampled - norm).max(0.0), (attained - norm).abs() / (1.0 + norm), positive]))
        .note(format!("norm {norm:.6}, sampled max {sampled:.6}, tol {tol:e}")))
}

fn weights_dominated(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let omega = dominated(&ctx.phi, rng);
    let ok = check_dominated(&omega, &ctx.phi, 1e-10).is_ok();
    let rejects = check_dominated(&ctx.phi.scaled(2.0), &ctx.phi, 1e-10).is_err();
    let chain_ok = gphi_chain(&ctx.phi, 8).iter().all(|w| check_dominated(w, &ctx.phi, 1e-10).is_ok());
    Ok(Outcome::verdict(0.0, ok && rejects && chain_ok))
}

fn weights_combes(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let mut excess: f64 = 0.0;
    for _ in 0..8 {
        let cert = combes_sup(&ctx.phi, &random_positive(alg, rng), 20)?;
        excess = excess.max(cert.gap - cert.bound).max(cert.sup - cert.exact);
    }
    Ok(Outcome::verdict(excess.max(0.0), excess <= tol))
}

fn weights_abs(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let theta = Functional::new(alg, random_element(alg, rng))?;
    let abs = functional_abs(&theta).abs;
    let n = theta.norm();
    let mut dev = (abs.at(&alg.identity()).re - n).abs();
    for _ in 0..16 {
        let a = random_element(alg, rng);
        let lhs = theta.at(&a).norm_sqr();
        let rhs = n * abs.at(&(a.adjoint() * &a)).re;
        dev = dev.max((lhs - rhs) / (1.0 + rhs));
    }
    Ok(Outcome::dev(dev.max(0.0)))
}

fn gns_invariants(ctx: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let d = ctx.gns.invariant_deviations(&ctx.phi);
    Ok(Outcome::verdict(d.max_deviation(), d.max_deviation() <= 1e-10 && d.rank == d.dim_h))
}

fn gns_dimension(ctx: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let d = ctx.gns.invariant_deviations(&ctx.phi);
    Ok(Outcome::verdict((d.dim_h as f64 - d.expected_dim as f64).abs(), d.dims_ok())
        .note(format!("dim H = {}, Σ n_j·rank(D_j) = {}", d.dim_h, d.expected_dim)))
}

fn gns_cutoff(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let mut dev: f64 = 0.0;
    for _ in 0..3 {
        let data = xi_omega(&ctx.gns, &ctx.phi, &dominated(&ctx.phi, rng))?;
        dev = dev.max(cutoff_deviations(&ctx.gns, &data).max_deviation());
    }
    Ok(Outcome::dev(dev))
}

/// `‖T_{ω_k} − 1‖ = 1/(k+1)` on the scalar chain and `‖1 − T_ω‖/(k+1)` on a dominated one.
fn gns_cutoff_chain(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let h = ctx.gns.dim_h();
    let one = CMat::identity(h, h);
    let mut dev: f64 = 0.0;
    for (k, w) in gphi_chain(&ctx.phi, 12).iter().enumerate() {
        let t = t_omega(&ctx.gns, &ctx.phi, w)?;
        dev = dev.max((op_norm(&(&t - &one)) - 1.0 / (k as f64 + 2.0)).abs());
    }
    let omega = dominated(&ctx.phi, rng);
    let base = op_norm(&(&one - t_omega(&ctx.gns, &ctx.phi, &omega)?));
    for (k, w) in dominated_chain(&ctx.phi, &omega, 12)?.iter().enumerate() {
        let t = t_omega(&ctx.gns, &ctx.phi, w)?;
        dev = dev.max((op_norm(&(&t - &one)) - base / (k as f64 + 2.0)).abs());
    }
    Ok(Outcome::dev(dev))
}

fn gns_wstar_lift(ctx: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let lift = wstar_lift(&ctx.gns, &ctx.phi);
    let out = Outcome::dev(lift.span_distance.max(lift.lift_deviation));
    Ok(if lift.kernel_blocks.is_empty() { out } else { out.note(format!("π vanishes on blocks {:?}", lift.kernel_blocks)) })
}

fn gns_lift_automorphism(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alpha = Automorphism::inner(ctx.phi.algebra(), density_phase(&ctx.phi, rng.random_range(-2.0..2.0)))?;
    let lifted = lift_automorphism(&ctx.gns, &ctx.phi, &alpha.coord_matrix(), None)?;
    Ok(Outcome::dev(lifted.unitarity.max(lifted.covariance)).note(format!("r = {}", lifted.r)))
}

// ---- kms suite ----

fn kms_probes(alg: &FdAlgebra, rng: &mut ChaCha8Rng, n: usize) -> Vec<(Element, Element)> {
    (0..n).map(|_| (random_element(alg, rng), random_element(alg, rng))).collect()
}

fn kms_report(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Option<crate::dynamics::KmsReport> {
    let g = ctx.dynamics()?;
    let probes = kms_probes(ctx.phi.algebra(), rng, 4);
    Some(kms_check(&ctx.phi, &g, &default_t_grid(), &probes, tol))
}

fn group_source(ctx: &Context) -> &'static str {
    if ctx.group.is_some() {
        "stored group"
    } else {
        "modular group"
    }
}

fn kms_invariance(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    Ok(match kms_report(ctx, rng, tol) {
        None => Outcome::skip("no group stored and weight is not faithful"),
        Some(r) => Outcome::dev(r.invariance).note(group_source(ctx)),
    })
}

fn kms_condition1(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    Ok(match kms_report(ctx, rng, tol) {
        None => Outcome::skip("no group stored and weight is not faithful"),
        Some(r) => Outcome::dev(r.condition1).note(group_source(ctx)),
    })
}

fn kms_strip(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    Ok(match kms_report(ctx, rng, tol) {
        None => Outcome::skip("no group stored and weight is not faithful"),
        Some(r) => Outcome::dev(r.strip).note(group_source(ctx)),
    })
}

fn kms_gibbs(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let h = random_hermitian(alg, rng);
    let phi = gibbs_weight(alg, &h)?;
    let sigma = modular_group_of(&phi)?;
    let report = kms_check(&phi, &sigma, &default_t_grid(), &kms_probes(alg, rng, 4), tol);
    // generator equals −h up to a constant per block
    let spread = fmax((sigma.generator() + &h).blocks().iter().map(|b| {
        let v = crate::algebra::hermitian_eigenvalues(b);
        v[v.len() - 1] - v[0]
    }));
    Ok(Outcome::dev(report.max_deviation().max(spread)))
}

/// A generator not commuting with the density: invariance must fail by > 1e−3.
fn kms_designed_failure(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    if alg.block_dims().iter().all(|&n| n == 1) {
        return Ok(Outcome::skip("commutative algebra: every group leaves every weight invariant"));
    }
    let phi = gibbs_weight(alg, &random_hermitian(alg, rng))?;
    let bad = OneParamGroup::new(alg, random_hermitian(alg, rng))?;
    let r = kms_check(&phi, &bad, &default_t_grid(), &kms_probes(alg, rng, 2), tol);
    Ok(Outcome::verdict(r.invariance, !r.invariance_ok() && r.invariance > 1e-3)
        .note("expected failure; deviation is the observed invariance defect"))
}

fn kms_group_law(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let g = ctx.dynamics().unwrap_or(OneParamGroup::new(alg, random_hermitian(alg, rng))?);
    let mut dev: f64 = 0.0;
    for _ in 0..6 {
        let (s, t): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let x = random_element(alg, rng);
        let y = random_element(alg, rng);
        dev = dev.max(g.act(0.0, &x).max_abs_diff(&x));
        dev = dev.max(g.act(s, &g.act(t, &x)).max_abs_diff(&g.act(s + t, &x)));
        dev = dev.max(g.act(t, &(&x * &y)).max_abs_diff(&(g.act(t, &x) * g.act(t, &y))));
        dev = dev.max(g.act(t, &x.adjoint()).max_abs_diff(&g.act(t, &x).adjoint()));
    }
    Ok(Outcome::dev(dev))
}

fn kms_analytic(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let g = ctx.dynamics().unwrap_or(OneParamGroup::new(alg, random_hermitian(alg, rng))?);
    let mut dev: f64 = 0.0;
    for _ in 0..6 {
        let x = random_element(alg, rng);
        let y = random_element(alg, rng);
        let t: f64 = rng.random_range(-2.0..2.0);
        let z = C64::new(t, rng.random_range(-1.0..1.0));
        let scale = 1.0 + g.analytic_ext(z, &x).norm() * g.analytic_ext(z, &y).norm();
        let mult = (g.analytic_ext(z, &x) * g.analytic_ext(z, &y)).max_abs_diff(&g.analytic_ext(z, &(&x * &y)));
        dev = dev.max(mult / scale);
        dev = dev.max(g.analytic_ext(C64::from(t), &x).max_abs_diff(&g.act(t, &x)));
    }
    Ok(Outcome::dev(dev))
}

fn kms_smoothing(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let alg = ctx.phi.algebra();
    let g = ctx.dynamics().unwrap_or(OneParamGroup::new(alg, random_hermitian(alg, rng))?);
    let quad = SmoothingQuadrature::default();
    let mut dev: f64 = 0.0;
    for n in [1.0, 2.0, 4.0] {
        let x = random_element(alg, rng);
        dev = dev.max(gaussian_smooth(&g, &x, n, &quad)?.difference);
    }
    // h = diag(0, 2), n = 1, e₁₂ ↦ e^{−1} e₁₂
    let m2 = FdAlgebra::new(&[2])?;
    let h = m2.from_blocks(vec![CMat::from_diagonal(&CVec::from_vec(vec![C64::from(0.0), C64::from(2.0)]))])?;
    let e12 = m2.matrix_unit(0, 0, 1);
    let s = gaussian_smooth(&OneParamGroup::new(&m2, h)?, &e12, 1.0, &quad)?;
    dev = dev.max((s.quadrature.block(0)[(0, 1)] - C64::from((-1f64).exp())).norm());
    Ok(Outcome::dev(dev))
}

fn kms_uniqueness(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    if !ctx.faithful() {
        return Ok(Outcome::skip(NOT_FAITHFUL));
    }
    let alg = ctx.phi.algebra();
    let positives: Vec<Element> = (0..2 * alg.coord_dim()).map(|_| random_positive(alg, rng)).collect();
    let same = uniqueness_harness(&ctx.phi, &ctx.phi, &positives, tol)?;
    let double = uniqueness_harness(&ctx.phi, &ctx.phi.scaled(2.0), &positives, tol)?;
    let ok = same.equal && same.consistent() && !double.equal && double.invariant && double.consistent();
    Ok(Outcome::verdict(same.density_gap, ok))
}

// ---- modular suite ----

fn modular_objects_check(ctx: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    if !ctx.faithful() {
        return Ok(Outcome::skip(NOT_FAITHFUL));
    }
    let (modular, sigma) = ctx.modular()?;
    Ok(Outcome::dev(modular.deviations(&ctx.gns, &ctx.phi, &sigma).max_deviation()))
}

fn modular_group(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    if !ctx.faithful() {
        return Ok(Outcome::skip(NOT_FAITHFUL));
    }
    let sigma = modular_group_of(&ctx.phi)?;
    let r = kms_check(&ctx.phi, &sigma, &default_t_grid(), &kms_probes(ctx.phi.algebra(), rng, 4), tol);
    Ok(Outcome::dev(r.max_deviation()))
}

fn modular_right_action(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    if !ctx.faithful() {
        return Ok(Outcome::skip(NOT_FAITHFUL));
    }
    let (modular, sigma) = ctx.modular()?;
    let alg = ctx.phi.algebra();
    let dev = fmax((0..4).map(|_| {
        right_action_deviation(&ctx.gns, &modular, &sigma, &random_element(alg, rng), &random_element(alg, rng))
    }));
    Ok(Outcome::dev(dev))
}

fn modular_twisted_trace(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    if !ctx.faithful() {
        return Ok(Outcome::skip(NOT_FAITHFUL));
    }
    let sigma = modular_group_of(&ctx.phi)?;
    let alg = ctx.phi.algebra();
    let dev = fmax((0..4).map(|_| twisted_trace_deviation(&ctx.phi, &sigma, &random_element(alg, rng), &random_element(alg, rng))));
    Ok(Outcome::dev(dev))
}

/// `D = diag(1/3, 2/3)` on `M_2`: spectrum of ∇ is `{1/2, 1, 1, 2}`.
fn modular_spectrum_example(_: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let m2 = FdAlgebra::new(&[2])?;
    let d = CMat::from_diagonal(&CVec::from_vec(vec![C64::from(1.0 / 3.0), C64::from(2.0 / 3.0)]));
    let phi = Weight::new(&m2, m2.from_blocks(vec![d])?)?;
    let gns = gns_construct(&phi)?;
    let spec = modular_objects(&phi, &gns)?.spectrum();
    let dev = fmax(spec.iter().zip([0.5, 1.0, 1.0, 2.0]).map(|(s, e)| (s - e).abs()));
    Ok(Outcome::verdict(dev, spec.len() == 4 && dev <= 1e-10))
}

// ---- tomita suite ----

fn tomita_jmj(ctx: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    if !ctx.faithful() {
        return Ok(Outcome::skip(NOT_FAITHFUL));
    }
    let r = ctx.tomita()?;
    Ok(Outcome::verdict(r.projector_distance, r.passed))
}

fn tomita_dimension(ctx: &Context, _: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    if !ctx.faithful() {
        return Ok(Outcome::skip(NOT_FAITHFUL));
    }
    let r = ctx.tomita()?;
    Ok(Outcome::verdict((r.jmj_dim as f64 - r.commutant_dim as f64).abs(), r.jmj_dim == r.commutant_dim)
        .note(format!("dim JMJ = {}, dim M′ = {}", r.jmj_dim, r.commutant_dim)))
}

// ---- slice suite: x ∈ A⊗B with A the partner algebra, φ on B ----

fn slice_algebras(ctx: &Context) -> (FdAlgebra, FdAlgebra) {
    (ctx.partner.algebra().clone(), ctx.phi.algebra().clone())
}

fn slice_value(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let x = positive_tensor(&a, &b, rng);
    let canonical = slice_phi_certified(&x, &ctx.phi, &gphi_chain(&ctx.phi, 12))?;
    let chain = dominated_chain(&ctx.phi, &dominated(&ctx.phi, rng), 12)?;
    let generic = slice_phi_certified(&x, &ctx.phi, &chain)?;
    let w = CVec::from_iterator(b.coord_dim(), b.basis().iter().map(|e| ctx.phi.at(e)));
    let oracle = a.from_coords(&(x.coord_matrix() * w));
    let exact_gap = fmax(canonical.certificate.gaps.iter().zip(&canonical.certificate.bounds).map(|(g, b)| (g - b).abs()));
    let dev = fmax([
        canonical.value.max_abs_diff(&oracle),
        exact_gap,
        canonical.certificate.worst_excess().max(0.0),
        generic.certificate.worst_excess().max(0.0),
    ]);
    Ok(Outcome::verdict(dev, dev <= 1e-9 && generic.value.is_positive(1e-10)))
}

fn slice_fubini(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let dev = fmax((0..4).map(|_| {
        let theta = Functional::new(&a, random_element(&a, rng)).expect("shape");
        fubini_deviation(&tensor(&a, &b, rng), &ctx.phi, &theta).unwrap_or(f64::INFINITY)
    }));
    Ok(Outcome::dev(dev))
}

fn slice_converse(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let x = tensor(&a, &b, rng);
    Ok(Outcome::dev(reconstruct_from_dual(&x, &ctx.phi)?.max_abs_diff(&slice_phi(&x, &ctx.phi)?)))
}

fn slice_cauchy_schwarz(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let (x, y) = (tensor(&a, &b, rng), tensor(&a, &b, rng));
        worst = worst.min(cs_operator_inequality(&x, &y, &ctx.phi)?);
    }
    Ok(Outcome::verdict((-worst).max(0.0), worst >= -tol).note(format!("min eigenvalue {worst:e} over 50 pairs")))
}

fn slice_abs_theta(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let theta = Functional::new(&a, random_element(&a, rng))?;
        worst = worst.min(abs_theta_inequality(&tensor(&a, &b, rng), &theta)?);
    }
    Ok(Outcome::verdict((-worst).max(0.0), worst >= -tol))
}

fn slice_hereditary(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let z = positive_tensor(&a, &b, rng);
        let x = tensor(&a, &b, rng);
        let upper = TensorElement::new(&a, &b, z.element() + x.adjoint().mul(&x)?.element())?;
        worst = worst.min(hereditary_gap(&z, &upper, &ctx.phi)?);
    }
    Ok(Outcome::verdict((-worst).max(0.0), worst >= -tol))
}

fn slice_ksgns(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let u = random_unitary(ctx.gns.dim_h(), rng);
    let d = ksgns_deviations(&tensor(&a, &b, rng), &tensor(&a, &b, rng), &ctx.phi, &ctx.gns, &u)?;
    Ok(Outcome::dev(d.max_deviation()))
}

fn slice_module_functional(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let omega = Functional::new(&a, random_positive(&a, rng))?;
    let (ea, eb) = (random_element(&a, rng), random_element(&a, rng));
    let w = gaussian_vector(ctx.gns.dim_h(), rng);
    Ok(Outcome::dev(module_functional_deviation(&tensor(&a, &b, rng), &ctx.gns, &omega, &ea, &eb, &w)?))
}

fn slice_cutoff(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let data = xi_omega(&ctx.gns, &ctx.phi, &dominated(&ctx.phi, rng))?;
    let scaled = xi_omega(&ctx.gns, &ctx.phi, &ctx.phi.scaled(0.3))?;
    let (x, y) = (tensor(&a, &b, rng), tensor(&a, &b, rng));
    let dev = ksgns_cutoff(&x, &y, &ctx.gns, &data)?.max_deviation().max(ksgns_cutoff(&x, &y, &ctx.gns, &scaled)?.max_deviation());
    Ok(Outcome::dev(dev))
}

/// `x_k = x^{1/2}(1 − q/(k+1))x^{1/2} ↑ x` with deviation bound `‖(ι⊗φ)(x)‖/(k+2)`.
fn slice_dominated_convergence(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let prod = a.tensor(&b);
    let x = positive_tensor(&a, &b, rng);
    let root = x.element().sqrt_psd()?;
    let q = random_positive(&prod, rng);
    let q = q.scale_real(1.0 / q.norm());
    let seq = (1..=12)
        .map(|k| {
            let p = prod.identity() - q.scale_real(1.0 / (k as f64 + 1.0));
            TensorElement::new(&a, &b, &root * p * &root)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = dominated_convergence(&seq, &x, &ctx.phi)?;
    let s = slice_phi(&x, &ctx.phi)?.norm();
    let excess = fmax(report.deviations.iter().enumerate().map(|(k, d)| d - s / (k as f64 + 2.0)));
    Ok(Outcome::verdict(excess, report.monotone && excess <= tol))
}

fn slice_automorphism_check(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let theta = Automorphism::inner(&b, density_phase(&ctx.phi, rng.random_range(-2.0..2.0)))?;
    Ok(Outcome::dev(slice_automorphism(&tensor(&a, &b, rng), &ctx.phi, &ctx.gns, &theta, 1.0)?.max_deviation()))
}

fn module_props(ctx: &Context, rng: &mut ChaCha8Rng) -> Result<Option<crate::slice::ModuleDeviations>> {
    if !ctx.faithful() {
        return Ok(None);
    }
    let (a, b) = slice_algebras(ctx);
    let (modular, sigma) = ctx.modular()?;
    let x = tensor(&a, &b, rng);
    let (ea, eb) = (random_element(&a, rng), random_element(&b, rng));
    Ok(Some(slice_module_props(&x, &ctx.phi, &ctx.gns, &modular, &sigma, &ea, &eb)?))
}

fn slice_module(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    Ok(match module_props(ctx, rng)? {
        None => {
            // the right-module identity needs no modular data
            let (a, b) = slice_algebras(ctx);
            let x = tensor(&a, &b, rng);
            let ea = random_element(&a, rng);
            let lhs = ksgns(&x.mul_left_factor(&ea), &ctx.gns)?;
            let rhs = ksgns(&x, &ctx.gns)?.mul_right(&ea);
            Outcome::dev(lhs.max_abs_diff(&rhs)).note("right-module identity only; weight is not faithful")
        }
        Some(d) => Outcome::dev(d.right_module),
    })
}

fn slice_kms_module(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    Ok(match module_props(ctx, rng)? {
        None => Outcome::skip(NOT_FAITHFUL),
        Some(d) => Outcome::dev(d.kms_vector.max(d.kms_value)),
    })
}

fn slice_cp(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let probes: Vec<CVec> = (0..3).map(|_| gaussian_vector(ctx.gns.dim_h(), rng)).collect();
    let w = random_element(&a, rng);
    let rho = KrausMap::conjugation(&a, &w)?;
    let x = tensor(&a, &b, rng);
    let dev = cp_slice(&rho, &x, &ctx.phi, &ctx.gns, &probes)?
        .max_deviation()
        .max(cp_slice(&KrausMap::identity(&a), &x, &ctx.phi, &ctx.gns, &probes)?.max_deviation());
    Ok(Outcome::dev(dev / (1.0 + w.norm() * w.norm())))
}

fn slice_cp_reject(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = slice_algebras(ctx);
    let n = a.total_dim();
    let neg = KrausMap::new(&a, &a, vec![(-1.0, CMat::identity(n, n))])?;
    let probes = vec![gaussian_vector(ctx.gns.dim_h(), rng)];
    let rejected = matches!(
        cp_slice(&neg, &tensor(&a, &b, rng), &ctx.phi, &ctx.gns, &probes),
        Err(Error::NotCompletelyPositive { .. })
    );
    Ok(Outcome::verdict(0.0, rejected).note("expected rejection of a ↦ −a"))
}

// ---- tensor suite: φ on A (instance) ⊗ ψ on B (partner) ----

fn tensor_weight_check(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let (a, b) = (ctx.phi.algebra(), ctx.partner.algebra());
    let p = tensor_weight(&ctx.phi, &ctx.partner);
    let (x, y) = (random_element(a, rng), random_element(b, rng));
    let mut dev = (p.at(&x.kron(&y)) - ctx.phi.at(&x) * ctx.partner.at(&y)).norm();
    let mut holds = true;
    for _ in 0..4 {
        let cert = tensor_sup_certificate(&ctx.phi, &ctx.partner, &positive_tensor(a, b, rng), 12)?;
        holds &= cert.holds(tol);
    }
    dev = dev.max(if holds { 0.0 } else { f64::INFINITY });
    Ok(Outcome::dev(dev))
}

fn tensor_probes(ctx: &Context, rng: &mut ChaCha8Rng, n: usize) -> Vec<TensorElement> {
    (0..n).map(|_| tensor(ctx.phi.algebra(), ctx.partner.algebra(), rng)).collect()
}

fn tensor_joint(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let j = ctx.joint()?;
    let d = j.deviations(&tensor_probes(ctx, rng, 3))?;
    Ok(Outcome::verdict(d.max_deviation(), d.max_deviation() <= 1e-9 && d.dim_joint == d.dim_product))
}

fn tensor_unitary(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let d = ctx.joint()?.deviations(&tensor_probes(ctx, rng, 1))?;
    Ok(Outcome::verdict(d.unitary(), d.unitary() <= 1e-10)
        .note(format!("U unitary by dimension count ({} = {})", d.dim_joint, d.dim_product)))
}

fn tensor_cutoff_check(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let j = ctx.joint()?;
    let omega = dominated(&ctx.phi, rng);
    let theta = dominated(&ctx.partner, rng);
    let x = tensor(ctx.phi.algebra(), ctx.partner.algebra(), rng);
    Ok(Outcome::dev(tensor_cutoff(&x, &omega, &theta, j)?.max_deviation()))
}

fn tensor_fubini_check(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let (a, b) = (ctx.phi.algebra(), ctx.partner.algebra());
    let x = tensor(a, b, rng);
    let pos = x.adjoint().mul(&x)?;
    let scale = 1.0 + tensor_weight(&ctx.phi, &ctx.partner).at(pos.element()).re;
    Ok(Outcome::dev(tensor_fubini(&pos, &ctx.phi, &ctx.partner, &random_element(b, rng))?.max_deviation() / scale))
}

fn tensor_expansion(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let j = ctx.joint()?;
    let x = tensor(ctx.phi.algebra(), ctx.partner.algebra(), rng);
    let y = random_element(ctx.partner.algebra(), rng);
    let basis = random_unitary(j.gns_psi.dim_h(), rng);
    Ok(Outcome::dev(basis_expansion(&x, &y, j, &basis)?.max_deviation()))
}

fn tensor_rel_invariance_check(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let j = ctx.joint()?;
    let alpha = Automorphism::inner(ctx.phi.algebra(), density_phase(&ctx.phi, rng.random_range(-2.0..2.0)))?;
    let beta = Automorphism::inner(ctx.partner.algebra(), density_phase(&ctx.partner, rng.random_range(-2.0..2.0)))?;
    let x = tensor(ctx.phi.algebra(), ctx.partner.algebra(), rng);
    Ok(Outcome::dev(tensor_rel_invariance(j, &alpha, 1.0, &beta, 1.0, &x)?.max_deviation())
        .note("λ = ν = 1: unital finite weights admit no other scaling"))
}

fn tensor_kms_report(ctx: &Context, rng: &mut ChaCha8Rng) -> Result<Option<crate::tensor::KmsTensorReport>> {
    if !ctx.faithful() || !ctx.partner.faithful(FAITHFUL_TOL) {
        return Ok(None);
    }
    let (a, b) = (ctx.phi.algebra(), ctx.partner.algebra());
    let probes: Vec<(TensorElement, Element)> = (0..2).map(|_| (tensor(a, b, rng), random_element(b, rng))).collect();
    Ok(Some(kms_tensor(ctx.joint()?, &probes, &default_t_grid())?))
}

fn tensor_kms(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    Ok(match tensor_kms_report(ctx, rng)? {
        None => Outcome::skip("a factor weight is not faithful"),
        Some(r) => Outcome::dev(r.nabla.max(r.conjugation).max(r.group).max(r.module)),
    })
}

fn tensor_spectrum(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    Ok(match tensor_kms_report(ctx, rng)? {
        None => Outcome::skip("a factor weight is not faithful"),
        Some(r) => Outcome::verdict(r.spectrum, r.spectrum <= 1e-8),
    })
}

fn tensor_state(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let j = ctx.joint()?;
    let x = tensor(ctx.phi.algebra(), ctx.partner.algebra(), rng);
    let one = TensorElement::identity(ctx.phi.algebra(), ctx.partner.algebra());
    Ok(Outcome::dev(state_case(j, &x)?.max(state_case(j, &one)?)))
}

// ---- hullx suite ----

fn hullx_oracle(_: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let mut dev: f64 = 0.0;
    for _ in 0..4 {
        let m = rng.random_range(1..=12);
        let dim = rng.random_range(1..=6);
        let pts: Vec<CVec> = (0..m).map(|_| gaussian_vector(dim, rng)).collect();
        let t = gaussian_vector(dim, rng) * C64::from(1.5);
        let fw = hull_project(&pts, &t, GAP_TOL)?;
        let bf = hull_project_brute(&pts, &t)?;
        let convex = (fw.weights.iter().sum::<f64>() - 1.0).abs().max(fmax(fw.weights.iter().map(|w| -w)));
        dev = dev.max((&fw.point - &bf.point).norm()).max(convex);
    }
    Ok(Outcome::dev(dev))
}

/// Points converge to `x` in `A`; values are `Λ_φ` of a two-valued bounded sequence.
fn extraction_problem(ctx: &Context, rng: &mut ChaCha8Rng, len: usize) -> Result<ExtractionProblem> {
    let alg = ctx.phi.algebra();
    let x = random_element(alg, rng);
    let (b1, b2) = (random_element(alg, rng), random_element(alg, rng));
    let mut points = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for i in 0..len {
        let damp = 1.0 / (i as f64 + 1.0);
        points.push(alg.coords(&(&x + random_element(alg, rng).scale_real(0.3 * damp))));
        let base = if rng.random::<bool>() { &b1 } else { &b2 };
        values.push(ctx.gns.lambda(&(base + random_element(alg, rng).scale_real(0.2 * damp))));
    }
    let bound = fmax(values.iter().map(|v| v.norm()));
    ExtractionProblem::new(points, values, alg.coords(&x), bound)
}

fn hullx_extract(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let out = convex_extract(&extraction_problem(ctx, rng, 600)?, 50)?;
    let excess = fmax(out.steps.iter().map(|s| {
        let r = 1.0 / s.n as f64;
        (s.value_gap - r).max(s.point_gap - r)
    }));
    Ok(Outcome::verdict(excess.max(0.0), out.all_feasible()))
}

fn hullx_norm(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let out = convex_extract(&extraction_problem(ctx, rng, 300)?, 20)?;
    Ok(Outcome::verdict(out.norm_excess.max(0.0), out.norm_excess <= 1e-12))
}

fn hullx_strong_star(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let n = ctx.phi.algebra().total_dim();
    let target = gaussian_matrix(n, n, rng);
    let len = 200;
    let points: Vec<CMat> =
        (0..len).map(|i| &target + gaussian_matrix(n, n, rng) * C64::from((i as f64 + 1.0).powi(-2))).collect();
    let w = gaussian_vector(2, rng);
    let values: Vec<CVec> = (0..len).map(|i| if i % 3 == 0 { w.clone() } else { -&w }).collect();
    let witnesses: Vec<CVec> = (0..3).map(|_| crate::random::random_unit_vector(n, rng)).collect();
    let out = strong_star_variant(&points, &values, &target, w.norm(), &witnesses, 30)?;
    Ok(Outcome::verdict(out.norm_excess.max(0.0), out.all_feasible() && out.norm_excess <= 1e-12))
}

// ---- integrate suite ----

fn gaussian_kernel(t: f64) -> f64 {
    (-t * t).exp() / std::f64::consts::PI.sqrt()
}

fn integrate_group(ctx: &Context, rng: &mut ChaCha8Rng) -> Result<OneParamGroup> {
    match ctx.dynamics() {
        Some(g) => Ok(g),
        None => OneParamGroup::new(ctx.phi.algebra(), random_hermitian(ctx.phi.algebra(), rng)),
    }
}

fn integrate_lambda(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let g = integrate_group(ctx, rng)?;
    let rule = QuadRule::gauss_legendre(101, -6.0, 6.0)?;
    let a = random_element(ctx.phi.algebra(), rng);
    Ok(Outcome::dev(integrate_commute(gaussian_kernel, &g, &a, ctx.gns.lambda_matrix(), &rule)?.deviation))
}

fn integrate_homomorphism(ctx: &Context, rng: &mut ChaCha8Rng, _: f64) -> Result<Outcome> {
    let g = integrate_group(ctx, rng)?;
    let rule = QuadRule::gauss_legendre(101, -6.0, 6.0)?;
    let a = random_element(ctx.phi.algebra(), rng);
    let hom = representation_matrix(&ctx.gns);
    Ok(Outcome::dev(integrate_commute(gaussian_kernel, &g, &a, &hom, &rule)?.deviation))
}

fn integrate_rate(ctx: &Context, rng: &mut ChaCha8Rng, tol: f64) -> Result<Outcome> {
    let g = integrate_group(ctx, rng)?;
    let rule = QuadRule::gauss_legendre(101, -6.0, 6.0)?;
    let rate = strict_convergence(gaussian_kernel, &g, &random_element(ctx.phi.algebra(), rng), 20, &rule);
    Ok(Outcome::verdict(rate.worst_excess().max(0.0), rate.holds(tol)))
}

macro_rules! check {
    ($id:literal, $suite:literal, $anchor:literal, $class:ident, $body:path) => {
        Check { id: $id, suite: $suite, anchor: $anchor, class: TolClass::$class, body: $body }
    };
}

pub static REGISTRY: &[Check] = &[
    check!("algebra.cstar", "gns", "§Notations: multiplier algebra, M(A) = A", Algebraic, algebra_cstar),
    check!("algebra.bicommutant", "gns", "§2 Tomita-Takesaki proposition: J πφ(A)′′ J = πφ(A)′", Algebraic, algebra_bicommutant),
    check!("weights.positivity", "gns", "Def weight.def1", Algebraic, weights_positivity),
    check!("weights.functional_norm", "gns", "§Notations: a ω, ω a, ω̄", Algebraic, weights_functional_norm),
    check!("weights.dominated", "gns", "Def sweight.def1", Algebraic, weights_dominated),
    check!("weights.combes", "gns", "Thm weight.thm1", Algebraic, weights_combes),
    check!("weights.abs", "gns", "§3 lemma before Prop weight.prop3", Algebraic, weights_abs),
    check!("gns.invariants", "gns", "GNS definition: ⟨Λφ(a), Λφ(b)⟩ = φ(b*a)", Algebraic, gns_invariants),
    check!("gns.dimension", "gns", "GNS definition: Λφ(Nφ) is dense in Hφ", Algebraic, gns_dimension),
    check!("gns.cutoff", "gns", "Notation weight.not1", Algebraic, gns_cutoff),
    check!("gns.cutoff_chain", "gns", "Prop weight.prop5", Algebraic, gns_cutoff_chain),
    check!("gns.wstar_lift", "gns", "Def weight.def6", Algebraic, gns_wstar_lift),
    check!("gns.lift_automorphism", "gns", "§2 proposition: α̃(x) = U x U*", Algebraic, gns_lift_automorphism),
    check!("kms.invariance", "kms", "Def sweight.def2", Kms, kms_invariance),
    check!("kms.condition1", "kms", "Def sweight.def2", Kms, kms_condition1),
    check!("kms.strip", "kms", "KMS equivalence proposition, condition 3", Kms, kms_strip),
    check!("kms.gibbs", "kms", "Def sweight.def2: modular group", Kms, kms_gibbs),
    check!("kms.designed_failure", "kms", "Def sweight.def2", Kms, kms_designed_failure),
    check!("kms.group_law", "kms", "§Notations: α_s α_t = α_{s+t}", Algebraic, kms_group_law),
    check!("kms.analytic", "kms", "§Notations: f is analytic on S(z)^0", Algebraic, kms_analytic),
    check!("kms.smoothing", "kms", "Prop sweight.prop1", Quadrature, kms_smoothing),
    check!("kms.uniqueness", "kms", "Cor sweight.cor1", Algebraic, kms_uniqueness),
    check!("modular.objects", "modular", "§1.4: ∇ = T*T and T = J∇^{1/2}", Algebraic, modular_objects_check),
    check!("modular.group", "modular", "Def sweight.def2: modular group", Kms, modular_group),
    check!("modular.right_action", "modular", "Prop weight.prop6.2", Algebraic, modular_right_action),
    check!("modular.twisted_trace", "modular", "Prop weight.prop6.3", Algebraic, modular_twisted_trace),
    check!("modular.spectrum_example", "modular", "§1.4: ∇ = T*T", Algebraic, modular_spectrum_example),
    check!("tomita.jmj", "tomita", "§2 proposition: J πφ(A)′′ J = πφ(A)′", Algebraic, tomita_jmj),
    check!("tomita.dimension", "tomita", "§2 proposition: J πφ(A)′′ J = πφ(A)′", Algebraic, tomita_dimension),
    check!("slice.value", "slice", "Def weight.def2", Algebraic, slice_value),
    check!("slice.fubini", "slice", "Prop weight.prop1", Algebraic, slice_fubini),
    check!("slice.converse", "slice", "Prop weight.prop1", Algebraic, slice_converse),
    check!("slice.cauchy_schwarz", "slice", "Prop weight.prop3", Algebraic, slice_cauchy_schwarz),
    check!("slice.abs_theta", "slice", "§3 lemma: (θ⊗ι)(x)*(θ⊗ι)(x) ≤ ‖θ‖(|θ|⊗ι)(x*x)", Algebraic, slice_abs_theta),
    check!("slice.hereditary", "slice", "§1.1: hereditary cone in A⁺", Algebraic, slice_hereditary),
    check!("slice.ksgns", "slice", "Prop weight.prop2", Algebraic, slice_ksgns),
    check!("slice.module_functional", "slice", "Lemma weight.lem6", Algebraic, slice_module_functional),
    check!("slice.cutoff", "slice", "Result cutoff; Cor weight.cor1", Algebraic, slice_cutoff),
    check!("slice.dominated_convergence", "slice", "Prop weight.prop8; Prop weight.prop9", Algebraic, slice_dominated_convergence),
    check!("slice.automorphism", "slice", "§3 proposition: (1⊗U)(ι⊗Λφ)(x) = r^{−1/2}(ι⊗Λφ)((ι⊗θ)(x))", Algebraic, slice_automorphism_check),
    check!("slice.module", "slice", "§3 module proposition", Algebraic, slice_module),
    check!("slice.kms_module", "slice", "KMS slice proposition", Algebraic, slice_kms_module),
    check!("slice.cp", "slice", "final §3 proposition: strict completely positive mapping", Algebraic, slice_cp),
    check!("slice.cp_reject", "slice", "final §3 proposition: strict completely positive mapping", Algebraic, slice_cp_reject),
    check!("tensor.weight", "tensor", "§4 definition: (φ⊗ψ)(x) = sup (ω⊗θ)(x)", Algebraic, tensor_weight_check),
    check!("tensor.joint", "tensor", "Def leukedef", Algebraic, tensor_joint),
    check!("tensor.unitary", "tensor", "§4 remark: π(x) U = U (πφ⊗πψ)(x)", Algebraic, tensor_unitary),
    check!("tensor.cutoff", "tensor", "Prop weight.prop12; final §4 proposition", Algebraic, tensor_cutoff_check),
    check!("tensor.fubini", "tensor", "Result tensor.res1; Result tensor.res2", Algebraic, tensor_fubini_check),
    check!("tensor.expansion", "tensor", "Prop tensor.prop1", Algebraic, tensor_expansion),
    check!("tensor.rel_invariance", "tensor", "Prop weight.prop16; Prop weight.prop17", Algebraic, tensor_rel_invariance_check),
    check!("tensor.kms", "tensor", "§4 KMS proposition", Algebraic, tensor_kms),
    check!("tensor.spectrum", "tensor", "Prop tensor.prop2", Algebraic, tensor_spectrum),
    check!("tensor.state", "tensor", "Prop weight.prop13", Algebraic, tensor_state),
    check!("hullx.oracle", "hullx", "Lemma app.lem1: v belongs to the weak closed convex hull", Algebraic, hullx_oracle),
    check!("hullx.extract", "hullx", "Lemma app.lem1", Algebraic, hullx_extract),
    check!("hullx.norm", "hullx", "Lemma app.lem1", Algebraic, hullx_norm),
    check!("hullx.strong_star", "hullx", "Lemma app.lem2", Algebraic, hullx_strong_star),
    check!("integrate.lambda", "integrate", "§5 first result: π(∫ f dμ) = ∫ π(f) dμ", Algebraic, integrate_lambda),
    check!("integrate.homomorphism", "integrate", "§5 first result: π(∫ f dμ) = ∫ π(f) dμ", Algebraic, integrate_homomorphism),
    check!("integrate.rate", "integrate", "Result int.res1", Algebraic, integrate_rate),
];

/// Invariant name ↦ the check ids that exercise it.
pub static COVERAGE: &[(&str, &[&str])] = &[
    ("FdAlgebra: blocks positive, faithful unital representation", &["algebra.cstar"]),
    ("Element: shapes, involution, C*-identity", &["algebra.cstar"]),
    ("commutant / bicommutant", &["algebra.bicommutant", "tomita.jmj"]),
    ("Weight: PSD density, faithfulness, positivity", &["weights.positivity"]),
    ("Functional: positivity, trace-norm", &["weights.functional_norm"]),
    ("is_dominated / G_φ chain", &["weights.dominated", "gns.cutoff_chain"]),
    ("combes_sup", &["weights.combes"]),
    ("functional_abs", &["weights.abs", "slice.abs_theta"]),
    ("GnsTriple: gram, homomorphism, module, surjectivity", &["gns.invariants"]),
    ("GnsTriple: dim H = Σ n_j rank D_j", &["gns.dimension"]),
    ("CutoffData: commutation, pairing, ξ identity", &["gns.cutoff"]),
    ("cut-off chain converges to 1", &["gns.cutoff_chain"]),
    ("wstar_lift", &["gns.wstar_lift"]),
    ("lift_automorphism", &["gns.lift_automorphism"]),
    ("OneParamGroup: group law, *-automorphism", &["kms.group_law"]),
    ("analytic_ext", &["kms.analytic", "kms.condition1"]),
    ("gaussian_smooth", &["kms.smoothing"]),
    ("kms_check: invariance, condition 1, strip", &["kms.invariance", "kms.condition1", "kms.strip", "kms.gibbs"]),
    ("kms_check designed failure", &["kms.designed_failure"]),
    ("uniqueness_harness", &["kms.uniqueness"]),
    ("ModularTriple: ∇ = T*T, polar, J", &["modular.objects"]),
    ("modular_group_of", &["modular.group", "kms.gibbs"]),
    ("right action through J", &["modular.right_action"]),
    ("twisted trace", &["modular.twisted_trace"]),
    ("modular spectrum example", &["modular.spectrum_example"]),
    ("tomita_check", &["tomita.jmj", "tomita.dimension"]),
    ("integrate_commute", &["integrate.lambda", "integrate.homomorphism"]),
    ("strict convergence rate", &["integrate.rate"]),
    ("TensorElement: adjoint, norm", &["tensor.weight", "slice.value"]),
    ("slice_phi with chain certificate", &["slice.value"]),
    ("theta_slice Fubini and converse", &["slice.fubini", "slice.converse"]),
    ("cs_operator_inequality", &["slice.cauchy_schwarz"]),
    ("abs_theta_inequality", &["slice.abs_theta"]),
    ("hereditary order", &["slice.hereditary"]),
    ("KsgnsVector: module norm, pairing, dual", &["slice.ksgns"]),
    ("module functional identity", &["slice.module_functional"]),
    ("ksgns_cutoff", &["slice.cutoff"]),
    ("dominated_convergence", &["slice.dominated_convergence"]),
    ("slice_automorphism", &["slice.automorphism"]),
    ("slice_module_props", &["slice.module", "slice.kms_module"]),
    ("cp_slice", &["slice.cp", "slice.cp_reject"]),
    ("tensor_weight", &["tensor.weight"]),
    ("JointGns: isometry, covariance, pairing", &["tensor.joint"]),
    ("JointGns: U unitary", &["tensor.unitary"]),
    ("tensor_cutoff", &["tensor.cutoff"]),
    ("tensor_fubini", &["tensor.fubini"]),
    ("basis_expansion", &["tensor.expansion"]),
    ("tensor_rel_invariance", &["tensor.rel_invariance"]),
    ("kms_tensor", &["tensor.kms", "tensor.spectrum"]),
    ("state_case", &["tensor.state"]),
    ("hull_project against brute force", &["hullx.oracle"]),
    ("convex_extract schedule", &["hullx.extract"]),
    ("norm preservation", &["hullx.norm"]),
    ("strong_star_variant", &["hullx.strong_star"]),
];

pub fn find(id: &str) -> Option<&'static Check> {
    REGISTRY.iter().find(|c| c.id == id)
}

/// Expands suite names (`all` included); unknown names are an error.
pub fn select(suites: &[String]) -> Result<Vec<&'static Check>> {
    let mut wanted: Vec<&str> = Vec::new();
    for s in suites {
        match s.as_str() {
            "all" => wanted.extend(SUITES),
            name if SUITES.contains(&name) => wanted.push(SUITES[SUITES.iter().position(|x| *x == name).unwrap()]),
            other => return Err(Error::Instance(format!("unknown suite {other:?}; expected one of {SUITES:?} or all"))),
        }
    }
    Ok(REGISTRY.iter().filter(|c| wanted.contains(&c.suite)).collect())
}

pub fn run_check(check: &Check, ctx: &Context, tol: &Tolerances) -> CheckRecord {
    let seed = derive_seed(ctx.seed(), check.id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tolerance = tol.get(check.class);
    let start = Instant::now();
    let result = (check.body)(ctx, &mut rng, tolerance);
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let (status, max_deviation, note) = match result {
        Err(e) => (Status::Fail, None, Some(format!("error: {e}"))),
        Ok(o) if o.skipped => (Status::Skip, None, o.note),
        Ok(o) => {
            let finite = o.deviation.is_finite();
            let passed = finite && o.verdict.unwrap_or(o.deviation <= tolerance);
            let status = if passed { Status::Pass } else { Status::Fail };
            (status, finite.then_some(o.deviation), o.note)
        }
    };
    CheckRecord {
        id: check.id.to_string(),
        suite: check.suite.to_string(),
        anchor: check.anchor.to_string(),
        instance: ctx.label.clone(),
        status,
        max_deviation,
        tolerance,
        wall_time_ms,
        seed,
        note,
    }
}

/// Parallel map over (instance, check) pairs; output order is deterministic.
pub fn run_all(contexts: &[Context], checks: &[&'static Check], tol: &Tolerances, threads: Option<usize>) -> Vec<CheckRecord> {
    let jobs: Vec<(&Context, &Check)> = contexts.iter().flat_map(|c| checks.iter().map(move |k| (c, *k))).collect();
    let work = || jobs.par_iter().map(|(ctx, check)| run_check(check, ctx, tol)).collect();
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(work))
            .unwrap_or_else(|_| work()),
        None => work(),
    }
}

/// Thread cap from `WEIGHTLAB_THREADS`; unset or unparsable means rayon's default.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("WEIGHTLAB_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}
