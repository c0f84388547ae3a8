//! Inner one-parameter groups `α_t(x) = e^{ith} x e^{-ith}`, their analytic
//! extensions, Gaussian smoothing, KMS checks and modular theory.

use crate::algebra::{
    commutant, hermitian_eigh, hermitian_func, max_abs, singular_triples, CMat, CVec, Element, FdAlgebra,
    OperatorSpan, C64, DEFAULT_TOL, I,
};
use crate::error::{Error, Result};
use crate::gns::{inner, GnsTriple};
use crate::quadrature::QuadRule;
use crate::weights::Weight;

#[derive(Debug, Clone)]
pub struct OneParamGroup {
    algebra: FdAlgebra,
    generator: Element,
    eigen: Vec<(Vec<f64>, CMat)>,
}

impl OneParamGroup {
    pub fn new(algebra: &FdAlgebra, generator: Element) -> Result<Self> {
        algebra.check(&generator)?;
        if !generator.is_hermitian(DEFAULT_TOL * (1.0 + generator.norm())) {
            return Err(Error::Domain("group generator must be Hermitian".into()));
        }
        let generator = generator.hermitian_part();
        let eigen = generator.blocks().iter().map(hermitian_eigh).collect();
        Ok(Self { algebra: algebra.clone(), generator, eigen })
    }

    pub fn trivial(algebra: &FdAlgebra) -> Self {
        Self::new(algebra, algebra.zero()).expect("zero is Hermitian")
    }

    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn generator(&self) -> &Element {
        &self.generator
    }

    pub fn act(&self, t: f64, x: &Element) -> Element {
        self.analytic_ext(C64::from(t), x)
    }

    /// `e^{izh} x e^{-izh}`, computed as `x̃_pq ↦ e^{iz(h_p − h_q)} x̃_pq` in the eigenbasis of `h`.
    pub fn analytic_ext(&self, z: C64, x: &Element) -> Element {
        self.in_eigenbasis(x, |hp, hq| (I * z * (hp - hq)).exp())
    }

    /// Applies `x̃_pq ↦ m(h_p, h_q) x̃_pq` in the eigenbasis of `h`.
    pub fn in_eigenbasis(&self, x: &Element, m: impl Fn(f64, f64) -> C64) -> Element {
        let blocks = x
            .blocks()
            .iter()
            .zip(&self.eigen)
            .map(|(xb, (vals, u))| {
                let mut xt = u.adjoint() * xb * u;
                for p in 0..vals.len() {
                    for q in 0..vals.len() {
                        xt[(p, q)] *= m(vals[p], vals[q]);
                    }
                }
                u * xt * u.adjoint()
            })
            .collect();
        Element::new(blocks).expect("shapes preserved")
    }

    /// Product group on `A ⊗ B` with generator `h ⊗ 1 + 1 ⊗ k`.
    pub fn tensor(&self, other: &OneParamGroup) -> OneParamGroup {
        let h = self.generator.kron(&other.algebra.identity()) + self.algebra.identity().kron(&other.generator);
        OneParamGroup::new(&self.algebra.tensor(&other.algebra), h).expect("sum of commuting Hermitians")
    }
}

/// Modular group `σ_t = Ad(D^{it})`; generator `log D` shifted so the top
/// eigenvalue of every block sits at 0.
pub fn modular_group_of(phi: &Weight) -> Result<OneParamGroup> {
    require_faithful(phi)?;
    let h = phi.density().map_blocks(|b| {
        let (vals, _) = hermitian_eigh(b);
        let top = vals.last().copied().unwrap_or(1.0).ln();
        hermitian_func(b, |x| C64::from(x.ln() - top))
    });
    OneParamGroup::new(phi.algebra(), h)
}

/// `D = e^{-h} / tr(e^{-h})`.
pub fn gibbs_weight(algebra: &FdAlgebra, h: &Element) -> Result<Weight> {
    let d = h.func_calc(|x| C64::from((-x).exp()))?;
    let z = d.trace().re;
    Weight::new(algebra, d.scale_real(1.0 / z))
}

fn require_faithful(phi: &Weight) -> Result<()> {
    let m = phi.min_eigenvalue();
    if m <= DEFAULT_TOL {
        return Err(Error::NotFaithful { min_eigenvalue: m });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingQuadrature {
    pub nodes: usize,
    /// Integration window `[−c/n, c/n]`.
    pub half_width: f64,
    pub tolerance: Option<f64>,
}

impl Default for SmoothingQuadrature {
    fn default() -> Self {
        Self { nodes: 201, half_width: 6.0, tolerance: None }
    }
}

#[derive(Debug, Clone)]
pub struct Smoothed {
    pub quadrature: Element,
    pub exact: Element,
    pub difference: f64,
}

/// `x_n = n/√π ∫ e^{−n²t²} α_t(x) dt`, by quadrature and in closed form.
pub fn gaussian_smooth(g: &OneParamGroup, x: &Element, n: f64, quad: &SmoothingQuadrature) -> Result<Smoothed> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!("smoothing parameter must be positive, got {n}")));
    }
    g.algebra.check(x)?;
    let w = quad.half_width / n;
    let rule = QuadRule::gauss_legendre(quad.nodes, -w, w)?;
    let c = n / std::f64::consts::PI.sqrt();
    let quadrature = rule.integrate_element(g.algebra.zero(), |t| g.act(t, x).scale_real(c * (-n * n * t * t).exp()));
    let exact = smooth_exact(g, x, n);
    let difference = quadrature.max_abs_diff(&exact);
    if let Some(tol) = quad.tolerance {
        if difference > tol {
            return Err(Error::Accuracy { achieved: difference, tolerance: tol });
        }
    }
    Ok(Smoothed { quadrature, exact, difference })
}

/// `x̃_pq · exp(−(h_p − h_q)²/(4n²))`.
pub fn smooth_exact(g: &OneParamGroup, x: &Element, n: f64) -> Element {
    g.in_eigenbasis(x, |hp, hq| C64::from((-(hp - hq).powi(2) / (4.0 * n * n)).exp()))
}

pub fn default_t_grid() -> Vec<f64> {
    (0..11).map(|k| -2.0 + 0.4 * k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmsReport {
    pub invariance: f64,
    pub condition1: f64,
    pub strip: f64,
    pub tolerance: f64,
}

impl KmsReport {
    pub fn invariance_ok(&self) -> bool {
        self.invariance <= self.tolerance
    }

    pub fn condition1_ok(&self) -> bool {
        self.condition1 <= self.tolerance
    }

    pub fn strip_ok(&self) -> bool {
        self.strip <= self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.invariance_ok() && self.condition1_ok() && self.strip_ok()
    }

    pub fn max_deviation(&self) -> f64 {
        self.invariance.max(self.condition1).max(self.strip)
    }
}

/// Invariance on the basis over `t_grid`; condition 1 on every `a` in `probes`;
/// strip boundary `f(t+i) = φ(a α_t(b))` with `f(z) = φ(α_z(b) a)` on probe pairs.
pub fn kms_check(phi: &Weight, g: &OneParamGroup, t_grid: &[f64], probes: &[(Element, Element)], tol: f64) -> KmsReport {
    let alg = phi.algebra();
    let mut invariance: f64 = 0.0;
    for e in alg.basis() {
        let base = phi.at(&e);
        for &t in t_grid {
            invariance = invariance.max((phi.at(&g.act(t, &e)) - base).norm());
        }
    }
    let half = I * 0.5;
    let mut condition1: f64 = 0.0;
    let mut strip: f64 = 0.0;
    for (a, b) in probes {
        let s = g.analytic_ext(half, a);
        condition1 = condition1.max((phi.at(&(a.adjoint() * a)) - phi.at(&(&s * s.adjoint()))).norm());
        for &t in t_grid {
            let f = phi.at(&(g.analytic_ext(C64::new(t, 1.0), b) * a));
            let boundary = phi.at(&(a * g.act(t, b)));
            strip = strip.max((f - boundary).norm());
        }
    }
    KmsReport { invariance, condition1, strip, tolerance: tol }
}

/// `v ↦ K · conj(v)` in a fixed orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Antilinear {
    k: CMat,
}

impl Antilinear {
    pub fn new(k: CMat) -> Self {
        Self { k }
    }

    pub fn matrix(&self) -> &CMat {
        &self.k
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.k * v.map(|z| z.conj())
    }

    /// `(K₁ conj)(K₂ conj) = K₁ K̄₂`, a linear map.
    pub fn compose(&self, other: &Antilinear) -> CMat {
        &self.k * other.k.map(|z| z.conj())
    }

    /// `L ∘ (K conj) = (L K) conj`.
    pub fn after_linear(&self, l: &CMat) -> Antilinear {
        Antilinear { k: l * &self.k }
    }

    /// `(K conj) ∘ L = (K L̄) conj`.
    pub fn before_linear(&self, l: &CMat) -> Antilinear {
        Antilinear { k: &self.k * l.map(|z| z.conj()) }
    }

    /// `(K conj)* = Kᵀ conj`.
    pub fn adjoint(&self) -> Antilinear {
        Antilinear { k: self.k.transpose() }
    }

    /// `(K conj) X (K conj) = K X̄ K̄` for linear `X`.
    pub fn conjugate_linear(&self, x: &CMat) -> CMat {
        &self.k * x.map(|z| z.conj()) * self.k.map(|z| z.conj())
    }

    /// `U (K conj) U* = (U K Uᵀ) conj` for unitary `U`.
    pub fn unitary_conjugate(&self, u: &CMat) -> Antilinear {
        Antilinear { k: u * &self.k * u.transpose() }
    }

    /// `(K₁ conj) ⊗ (K₂ conj) = (K₁ ⊗ K₂) conj`.
    pub fn kron(&self, other: &Antilinear) -> Antilinear {
        Antilinear { k: self.k.kronecker(&other.k) }
    }
}

#[derive(Debug, Clone)]
pub struct ModularTriple {
    pub t_conj: Antilinear,
    pub nabla: CMat,
    pub j: Antilinear,
}

pub fn modular_objects(phi: &Weight, gns: &GnsTriple) -> Result<ModularTriple> {
    require_faithful(phi)?;
    let alg = gns.algebra();
    let l = gns.lambda_matrix();
    let lp = gns.lambda_pinv();
    let t_conj = Antilinear::new(l * alg.adjoint_permutation() * lp.map(|z| z.conj()));
    let nabla = t_conj.adjoint().compose(&t_conj);
    let nabla = (&nabla + nabla.adjoint()) * C64::from(0.5);
    let (vals, _) = hermitian_eigh(&nabla);
    if vals[0] <= 0.0 {
        return Err(Error::Domain(format!("modular operator is not positive definite ({:e})", vals[0])));
    }
    let inv_root = hermitian_func(&nabla, |x| C64::from(x.powf(-0.5)));
    let j = t_conj.before_linear(&inv_root);
    Ok(ModularTriple { t_conj, nabla, j })
}

impl ModularTriple {
    pub fn nabla_pow(&self, z: C64) -> CMat {
        hermitian_func(&self.nabla, |x| C64::from(x).powc(z))
    }

    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_eigh(&self.nabla).0
    }

    pub fn deviations(&self, gns: &GnsTriple, phi: &Weight, sigma: &OneParamGroup) -> ModularDeviations {
        let alg = gns.algebra();
        let basis = alg.basis();
        let h = gns.dim_h();
        let id = CMat::identity(h, h);

        let mut t_map: f64 = 0.0;
        let mut nabla_form: f64 = 0.0;
        for a in &basis {
            let la = gns.lambda(a);
            t_map = t_map.max(max_abs(&(self.t_conj.apply(&la) - gns.lambda(&a.adjoint()))));
            let na = &self.nabla * &la;
            for b in &basis {
                let lhs = inner(&na, &gns.lambda(b));
                nabla_form = nabla_form.max((lhs - phi.at(&(a * b.adjoint()))).norm());
            }
        }
        let root = self.nabla_pow(C64::from(0.5));
        let polar = max_abs(&(self.j.before_linear(&root).matrix() - self.t_conj.matrix()));
        let j_involution = max_abs(&(self.j.compose(&self.j) - &id));
        let j_antiunitary = max_abs(&(self.j.matrix().adjoint() * self.j.matrix() - &id));
        let mut j_nabla_real: f64 = 0.0;
        for t in [1.0, -1.0, 0.5, -0.5, 0.25] {
            let lhs = self.j.conjugate_linear(&self.nabla_pow(C64::from(t)));
            j_nabla_real = j_nabla_real.max(max_abs(&(lhs - self.nabla_pow(C64::from(-t)))));
        }
        let mut j_nabla_imag: f64 = 0.0;
        let mut nabla_group: f64 = 0.0;
        for &t in &default_t_grid() {
            let u = self.nabla_pow(I * t);
            j_nabla_imag = j_nabla_imag.max(max_abs(&(self.j.conjugate_linear(&u) - &u)));
            for a in &basis {
                nabla_group = nabla_group.max(max_abs(&(&u * gns.lambda(a) - gns.lambda(&sigma.act(t, a)))));
            }
        }
        ModularDeviations {
            t_map,
            nabla_form,
            polar,
            j_involution,
            j_antiunitary,
            j_nabla_real,
            j_nabla_imag,
            nabla_group,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularDeviations {
    pub t_map: f64,
    /// `⟨∇Λ(a), Λ(b)⟩ = φ(a b*)`, an oracle for `∇ = T*T`.
    pub nabla_form: f64,
    /// `T = J ∇^{1/2}`.
    pub polar: f64,
    pub j_involution: f64,
    pub j_antiunitary: f64,
    /// `J ∇^t J = ∇^{−t}`.
    pub j_nabla_real: f64,
    /// `J ∇^{it} J = ∇^{it}`.
    pub j_nabla_imag: f64,
    /// `∇^{it} Λ(a) = Λ(σ_t(a))`.
    pub nabla_group: f64,
}

impl ModularDeviations {
    pub fn max_deviation(&self) -> f64 {
        [
            self.t_map,
            self.nabla_form,
            self.polar,
            self.j_involution,
            self.j_antiunitary,
            self.j_nabla_real,
            self.j_nabla_imag,
            self.nabla_group,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `Λ(xa) = J π(σ_{i/2}(a))* J Λ(x)`.
pub fn right_action_deviation(gns: &GnsTriple, modular: &ModularTriple, sigma: &OneParamGroup, x: &Element, a: &Element) -> f64 {
    let s = sigma.analytic_ext(I * 0.5, a);
    let op = modular.j.conjugate_linear(&gns.pi(&s).adjoint());
    max_abs(&(gns.lambda(&(x * a)) - op * gns.lambda(x)))
}

/// `φ(ax) = φ(x σ_{−i}(a))`.
pub fn twisted_trace_deviation(phi: &Weight, sigma: &OneParamGroup, x: &Element, a: &Element) -> f64 {
    (phi.at(&(a * x)) - phi.at(&(x * sigma.analytic_ext(-I, a)))).norm()
}

#[derive(Debug, Clone)]
pub struct TomitaReport {
    pub jmj_dim: usize,
    pub commutant_dim: usize,
    pub projector_distance: f64,
    pub passed: bool,
}

/// Projector distance between `span{J π(e_α) J}` and `π(A)′`.
pub fn tomita_check(gns: &GnsTriple, modular: &ModularTriple, tol: f64) -> TomitaReport {
    let h = gns.dim_h();
    let jmj: Vec<CMat> = gns.pi_basis().iter().map(|p| modular.j.conjugate_linear(p)).collect();
    let jmj = OperatorSpan::from_matrices(&jmj);
    let comm = commutant(gns.pi_basis(), h);
    let projector_distance = jmj.distance(&comm, h);
    TomitaReport {
        jmj_dim: jmj.dim,
        commutant_dim: comm.dim,
        projector_distance,
        passed: projector_distance <= tol && jmj.dim == comm.dim,
    }
}

#[derive(Debug, Clone)]
pub struct IntegrateReport {
    pub integral: Element,
    pub after: CVec,
    pub inside: CVec,
    pub deviation: f64,
}

/// `L(∫ f(t) α_t(a) dt)` against `∫ f(t) L(α_t(a)) dt` with the same rule;
/// `L` acts on matrix-unit coordinates.
pub fn integrate_commute(f: impl Fn(f64) -> f64, g: &OneParamGroup, a: &Element, l: &CMat, rule: &QuadRule) -> Result<IntegrateReport> {
    let alg = g.algebra();
    alg.check(a)?;
    if l.ncols() != alg.coord_dim() {
        return Err(Error::Shape(format!("linear map has {} columns, expected {}", l.ncols(), alg.coord_dim())));
    }
    let integral = rule.integrate_element(alg.zero(), |t| g.act(t, a).scale_real(f(t)));
    let after = l * alg.coords(&integral);
    let mut inside = CVec::zeros(l.nrows());
    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
        inside += (l * alg.coords(&g.act(t, a))) * C64::from(w * f(t));
    }
    let deviation = max_abs(&(&after - &inside));
    Ok(IntegrateReport { integral, after, inside, deviation })
}

/// Coordinate matrix of `a ↦ vec(π(a))`, a *-homomorphism into `B(H)`.
pub fn representation_matrix(gns: &GnsTriple) -> CMat {
    let h = gns.dim_h();
    let basis = gns.pi_basis();
    CMat::from_fn(h * h, basis.len(), |r, c| basis[c].as_slice()[r])
}

#[derive(Debug, Clone)]
pub struct StrictConvergence {
    /// `‖S(a_k) − S(a)‖` for `a_k = (k/(k+1)) a`.
    pub deviations: Vec<f64>,
    /// `‖a‖/(k+1) · ∫|f|`.
    pub bounds: Vec<f64>,
}

impl StrictConvergence {
    pub fn holds(&self, slack: f64) -> bool {
        self.deviations.iter().zip(&self.bounds).all(|(d, b)| *d <= b + slack)
    }

    pub fn worst_excess(&self) -> f64 {
        self.deviations
            .iter()
            .zip(&self.bounds)
            .map(|(d, b)| d - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Smoothed integrals of a bounded sequence converge at the advertised rate.
pub fn strict_convergence(f: impl Fn(f64) -> f64, g: &OneParamGroup, a: &Element, m: usize, rule: &QuadRule) -> StrictConvergence {
    let alg = g.algebra();
    let smooth = |x: &Element| rule.integrate_element(alg.zero(), |t| g.act(t, x).scale_real(f(t)));
    let limit = smooth(a);
    let mass = rule.integrate(|t| f(t).abs());
    let norm = a.norm();
    let mut deviations = Vec::with_capacity(m);
    let mut bounds = Vec::with_capacity(m);
    for k in 1..=m {
        let ak = a.scale_real(k as f64 / (k as f64 + 1.0));
        deviations.push(smooth(&ak).dist(&limit));
        bounds.push(norm / (k as f64 + 1.0) * mass);
    }
    StrictConvergence { deviations, bounds }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessReport {
    pub invariance: f64,
    pub agreement: f64,
    pub density_gap: f64,
    /// Gap implied by agreement on the probes.
    pub derived_tolerance: f64,
    pub invariant: bool,
    pub agrees: bool,
    /// Hypotheses hold and the densities coincide.
    pub equal: bool,
}

impl UniquenessReport {
    /// Invariance and agreement imply equal densities on this instance.
    pub fn consistent(&self) -> bool {
        !(self.invariant && self.agrees) || self.density_gap <= self.derived_tolerance
    }
}

/// Checks `η = φ` under σ^φ-invariance of `η` and agreement on positive probes.
pub fn uniqueness_harness(phi: &Weight, eta: &Weight, positives: &[Element], tol: f64) -> Result<UniquenessReport> {
    let sigma = modular_group_of(phi)?;
    let alg = phi.algebra();
    alg.check(eta.density())?;
    let mut invariance: f64 = 0.0;
    for e in alg.basis() {
        for &t in &default_t_grid() {
            invariance = invariance.max((eta.at(&sigma.act(t, &e)) - eta.at(&e)).norm());
        }
    }
    let agreement = positives
        .iter()
        .map(|x| (eta.at(x) - phi.at(x)).norm())
        .fold(0.0, f64::max);
    // |tr(δ x_i)| ≤ ε on probes bounds ‖δ‖₂ by √m ε / s_min(X)
    let x = CMat::from_fn(positives.len(), alg.coord_dim(), |r, c| {
        let (j, p, q) = alg.coord_triple(c);
        positives[r].block(j)[(q, p)]
    });
    let smin = if positives.len() >= alg.coord_dim() {
        let (s, _, _) = singular_triples(&x, 0.0);
        if s.len() == alg.coord_dim() { s.last().copied().unwrap_or(0.0) } else { 0.0 }
    } else {
        0.0
    };
    let derived_tolerance = if smin > 0.0 {
        (positives.len() as f64).sqrt() * tol / smin
    } else {
        f64::INFINITY
    };
    let density_gap = (eta.density() - phi.density()).frobenius_norm();
    let invariant = invariance <= tol;
    let agrees = agreement <= tol;
    Ok(UniquenessReport {
        invariance,
        agreement,
        density_gap,
        derived_tolerance,
        invariant,
        agrees,
        equal: invariant && agrees && density_gap <= derived_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gns::gns_construct;
    use crate::random::{random_density, random_element, random_hermitian, random_positive};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(alg: &FdAlgebra, d: &[f64]) -> Element {
        alg.from_blocks(vec![CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| C64::from(x))))])
            .unwrap()
    }

    /// `Σ_k (iz h)^k / k!` truncated; oracle for the exponential.
    fn exp_series(m: &CMat, z: C64) -> CMat {
        let n = m.nrows();
        let mut term = CMat::identity(n, n);
        let mut acc = term.clone();
        for k in 1..80 {
            term = &term * m * (I * z / C64::from(k as f64));
            acc += &term;
        }
        acc
    }

    fn probes(alg: &FdAlgebra, rng: &mut ChaCha8Rng, n: usize) -> Vec<(Element, Element)> {
        (0..n).map(|_| (random_element(alg, rng), random_element(alg, rng))).collect()
    }

    #[test]
    fn act_on_matrix_unit() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let w0 = 1.7;
        let g = OneParamGroup::new(&m2, diag(&m2, &[0.0, w0])).unwrap();
        let e12 = m2.matrix_unit(0, 0, 1);
        for t in [-1.0, 0.3, 2.0] {
            let expected = e12.scale((-I * t * w0).exp());
            assert!(g.act(t, &e12).max_abs_diff(&expected) < 1e-14);
        }
        assert!(g.act(0.0, &e12).max_abs_diff(&e12) < 1e-15);
    }

    #[test]
    fn analytic_ext_examples() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let h = diag(&m2, &[0.0, 2.0]);
        let g = OneParamGroup::new(&m2, h.clone()).unwrap();
        assert!(g.analytic_ext(I * 0.5, &m2.identity()).max_abs_diff(&m2.identity()) < 1e-14);
        let e12 = m2.matrix_unit(0, 0, 1);
        let got = g.analytic_ext(I * 0.5, &e12);
        assert!(got.max_abs_diff(&e12.scale_real(1f64.exp())) < 1e-13);
        // power-series cross-check on a non-diagonal generator
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m3 = FdAlgebra::new(&[3]).unwrap();
        let h3 = random_hermitian(&m3, &mut rng);
        let g3 = OneParamGroup::new(&m3, h3.clone()).unwrap();
        let x = random_element(&m3, &mut rng);
        let z = C64::new(0.4, -0.7);
        let u = exp_series(h3.block(0), z);
        let v = exp_series(h3.block(0), -z);
        let expected = &u * x.block(0) * &v;
        assert!(max_abs(&(g3.analytic_ext(z, &x).block(0) - expected)) < 1e-11);
    }

    #[test]
    fn smoothing_examples() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let g = OneParamGroup::new(&m2, diag(&m2, &[0.0, 2.0])).unwrap();
        let quad = SmoothingQuadrature::default();
        let one = gaussian_smooth(&g, &m2.identity(), 3.0, &quad).unwrap();
        assert!(one.exact.max_abs_diff(&m2.identity()) < 1e-15);
        assert!(one.quadrature.max_abs_diff(&m2.identity()) < 1e-12);
        let e12 = m2.matrix_unit(0, 0, 1);
        let s = gaussian_smooth(&g, &e12, 1.0, &quad).unwrap();
        assert!((s.exact.block(0)[(0, 1)].re - (-1f64).exp()).abs() < 1e-15);
        assert!((s.quadrature.block(0)[(0, 1)] - C64::from((-1f64).exp())).norm() < 1e-10);
        let tight = SmoothingQuadrature { nodes: 3, half_width: 6.0, tolerance: Some(1e-8) };
        assert!(matches!(gaussian_smooth(&g, &e12, 0.5, &tight), Err(Error::Accuracy { .. })));
        assert!(gaussian_smooth(&g, &e12, 0.0, &quad).is_err());
    }

    #[test]
    fn modular_spectrum_of_thirds() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let phi = Weight::new(&m2, diag(&m2, &[1.0 / 3.0, 2.0 / 3.0])).unwrap();
        let gns = gns_construct(&phi).unwrap();
        let modular = modular_objects(&phi, &gns).unwrap();
        let spec = modular.spectrum();
        for (s, e) in spec.iter().zip([0.5, 1.0, 1.0, 2.0]) {
            assert!((s - e).abs() < 1e-10, "{spec:?}");
        }
        let sigma = modular_group_of(&phi).unwrap();
        let e12 = m2.matrix_unit(0, 0, 1);
        for t in [0.3, -1.2] {
            let expected = e12.scale(C64::from(2.0).powc(-I * t));
            assert!(sigma.act(t, &e12).max_abs_diff(&expected) < 1e-13);
        }
    }

    #[test]
    fn tracial_modular_objects() {
        let m3 = FdAlgebra::new(&[3]).unwrap();
        let phi = Weight::trace(&m3);
        let gns = gns_construct(&phi).unwrap();
        let modular = modular_objects(&phi, &gns).unwrap();
        assert!(max_abs(&(&modular.nabla - CMat::identity(9, 9))) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_element(&m3, &mut rng);
        assert!(max_abs(&(modular.j.apply(&gns.lambda(&a)) - gns.lambda(&a.adjoint()))) < 1e-12);
        assert!(modular_group_of(&phi).unwrap().generator().norm() < 1e-14);
        let tomita = tomita_check(&gns, &modular, 1e-8);
        assert!(tomita.passed && tomita.jmj_dim == 9);
    }

    #[test]
    fn non_faithful_is_rejected() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let phi = Weight::new(&m2, diag(&m2, &[1.0, 0.0])).unwrap();
        let gns = gns_construct(&phi).unwrap();
        assert!(matches!(modular_objects(&phi, &gns), Err(Error::NotFaithful { .. })));
        assert!(matches!(modular_group_of(&phi), Err(Error::NotFaithful { .. })));
    }

    #[test]
    fn kms_examples() {
        let alg = FdAlgebra::new(&[2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = probes(&alg, &mut rng, 5);
        let tr = Weight::trace(&alg);
        assert!(kms_check(&tr, &OneParamGroup::trivial(&alg), &default_t_grid(), &p, 1e-10).passed());

        let h = random_hermitian(&alg, &mut rng);
        let phi = gibbs_weight(&alg, &h).unwrap();
        let sigma = modular_group_of(&phi).unwrap();
        let report = kms_check(&phi, &sigma, &default_t_grid(), &p, 1e-8);
        assert!(report.passed(), "{report:?}");
        // the modular generator is −h up to block constants
        let shifted = sigma.generator() + &h;
        for b in shifted.blocks() {
            let (v, _) = hermitian_eigh(b);
            assert!(v.last().unwrap() - v[0] < 1e-10);
        }

        let bad = OneParamGroup::new(&alg, random_hermitian(&alg, &mut rng)).unwrap();
        let report = kms_check(&phi, &bad, &default_t_grid(), &p, 1e-7);
        assert!(!report.invariance_ok() && report.invariance > 1e-3);
    }

    #[test]
    fn uniqueness_examples() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = gibbs_weight(&m2, &diag(&m2, &[0.0, 1.0])).unwrap();
        let positives: Vec<Element> = (0..12).map(|_| random_positive(&m2, &mut rng)).collect();
        let same = uniqueness_harness(&phi, &phi, &positives, 1e-10).unwrap();
        assert!(same.equal && same.consistent());
        let double = uniqueness_harness(&phi, &phi.scaled(2.0), &positives, 1e-10).unwrap();
        assert!(!double.equal && !double.agrees && double.invariant);
        let tr = Weight::trace(&m2).scaled(0.5);
        let other = uniqueness_harness(&phi, &tr, &positives, 1e-10).unwrap();
        assert!(other.invariant && !other.equal && other.density_gap > 0.1);
    }

    #[test]
    fn integration_commutes_with_maps() {
        let alg = FdAlgebra::new(&[2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = Weight::new(&alg, random_density(&alg, true, &mut rng)).unwrap();
        let gns = gns_construct(&phi).unwrap();
        let g = modular_group_of(&phi).unwrap();
        let a = random_element(&alg, &mut rng);
        let rule = QuadRule::gauss_legendre(101, -6.0, 6.0).unwrap();
        let f = |t: f64| (-t * t).exp() / std::f64::consts::PI.sqrt();
        let id = CMat::identity(alg.coord_dim(), alg.coord_dim());
        assert!(integrate_commute(f, &g, &a, &id, &rule).unwrap().deviation <= 1e-12);
        assert!(integrate_commute(f, &g, &a, gns.lambda_matrix(), &rule).unwrap().deviation <= 1e-10);
        let hom = representation_matrix(&gns);
        assert!(integrate_commute(f, &g, &a, &hom, &rule).unwrap().deviation <= 1e-10);
        let rate = strict_convergence(f, &g, &a, 20, &rule);
        assert!(rate.holds(1e-12));
    }

    #[test]
    fn antilinear_composition_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k1 = crate::random::gaussian_matrix(4, 4, &mut rng);
        let k2 = crate::random::gaussian_matrix(4, 4, &mut rng);
        let l = crate::random::gaussian_matrix(4, 4, &mut rng);
        let v = crate::random::gaussian_vector(4, &mut rng);
        let w = crate::random::gaussian_vector(4, &mut rng);
        let a = Antilinear::new(k1);
        let b = Antilinear::new(k2);
        assert!(max_abs(&(a.compose(&b) * &v - a.apply(&b.apply(&v)))) < 1e-12);
        assert!(max_abs(&(a.after_linear(&l).apply(&v) - &l * a.apply(&v))) < 1e-12);
        assert!(max_abs(&(a.before_linear(&l).apply(&v) - a.apply(&(&l * &v)))) < 1e-12);
        // ⟨A v, w⟩ = conj⟨v, A* w⟩ for antilinear A
        let lhs = inner(&a.apply(&v), &w);
        let rhs = inner(&v, &a.adjoint().apply(&w)).conj();
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(max_abs(&(a.conjugate_linear(&l) * &v - a.apply(&(&l * a.apply(&v))))) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn group_law(seed in any::<u64>(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
            let alg = FdAlgebra::new(&[2, 3]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = OneParamGroup::new(&alg, random_hermitian(&alg, &mut rng)).unwrap();
            let x = random_element(&alg, &mut rng);
            let y = random_element(&alg, &mut rng);
            prop_assert!(g.act(s, &g.act(t, &x)).max_abs_diff(&g.act(s + t, &x)) <= 1e-10);
            prop_assert!(g.act(t, &(&x * &y)).max_abs_diff(&(g.act(t, &x) * g.act(t, &y))) <= 1e-10);
            prop_assert!(g.act(t, &x.adjoint()).max_abs_diff(&g.act(t, &x).adjoint()) <= 1e-10);
            let z = C64::new(s, t);
            prop_assert!((g.analytic_ext(z, &x) * g.analytic_ext(z, &y)).max_abs_diff(&g.analytic_ext(z, &(&x * &y))) <= 1e-9);
        }

        #[test]
        fn modular_invariants(seed in any::<u64>()) {
            let alg = FdAlgebra::new(&[2, 3]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&alg, random_density(&alg, true, &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let modular = modular_objects(&phi, &gns).unwrap();
            let sigma = modular_group_of(&phi).unwrap();
            let dev = modular.deviations(&gns, &phi, &sigma);
            prop_assert!(dev.max_deviation() <= 1e-9, "{:?}", dev);
            let x = random_element(&alg, &mut rng);
            let a = random_element(&alg, &mut rng);
            prop_assert!(right_action_deviation(&gns, &modular, &sigma, &x, &a) <= 1e-8);
            prop_assert!(twisted_trace_deviation(&phi, &sigma, &x, &a) <= 1e-8);
            let tomita = tomita_check(&gns, &modular, 1e-8);
            prop_assert!(tomita.passed, "{:?}", tomita);
        }

        #[test]
        fn smoothing_is_accurate_and_equivariant(seed in any::<u64>(), n in prop::sample::select(vec![1.0f64, 2.0, 4.0])) {
            let alg = FdAlgebra::new(&[3, 2]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&alg, random_density(&alg, true, &mut rng)).unwrap();
            let g = modular_group_of(&phi).unwrap();
            let x = random_element(&alg, &mut rng);
            let s = gaussian_smooth(&g, &x, n, &SmoothingQuadrature::default()).unwrap();
            prop_assert!(s.difference <= 1e-8);
            let shifted = smooth_exact(&g, &g.act(0.7, &x), n);
            prop_assert!(g.act(0.7, &s.exact).max_abs_diff(&shifted) <= 1e-9);
        }

        #[test]
        fn modular_pair_is_kms(seed in any::<u64>()) {
            let alg = FdAlgebra::new(&[2, 2]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&alg, random_density(&alg, true, &mut rng)).unwrap();
            let sigma = modular_group_of(&phi).unwrap();
            let p = probes(&alg, &mut rng, 3);
            let report = kms_check(&phi, &sigma, &default_t_grid(), &p, 1e-7);
            prop_assert!(report.passed(), "{:?}", report);
        }
    }
}
