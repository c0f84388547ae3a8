//! Slice maps `ι⊗φ` on `A ⊗ B`, KSGNS vectors in `A ⊗ H_φ`, and their
//! cut-off, module, dominated-convergence and completely-positive identities.

use crate::algebra::{
    hermitian_eigh, max_abs, min_hermitian_eigenvalue, CMat, CVec, Element, FdAlgebra, C64, DEFAULT_TOL, I,
};
use crate::automorphism::Automorphism;
use crate::dynamics::{ModularTriple, OneParamGroup};
use crate::error::{Error, Result};
use crate::gns::{inner, lift_automorphism, CutoffData, GnsTriple};
use crate::weights::{functional_abs, Functional, Weight};

/// Element of `A ⊗ B` realized in the blockwise Kronecker algebra, pairs `(i, j)` ordered `i`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorElement {
    left: FdAlgebra,
    right: FdAlgebra,
    product: FdAlgebra,
    x: Element,
}

impl TensorElement {
    pub fn new(left: &FdAlgebra, right: &FdAlgebra, x: Element) -> Result<Self> {
        let product = left.tensor(right);
        product.check(&x)?;
        Ok(Self { left: left.clone(), right: right.clone(), product, x })
    }

    pub fn elementary(left: &FdAlgebra, right: &FdAlgebra, a: &Element, b: &Element) -> Result<Self> {
        left.check(a)?;
        right.check(b)?;
        Self::new(left, right, a.kron(b))
    }

    pub fn zero(left: &FdAlgebra, right: &FdAlgebra) -> Self {
        let product = left.tensor(right);
        let x = product.zero();
        Self { left: left.clone(), right: right.clone(), product, x }
    }

    pub fn identity(left: &FdAlgebra, right: &FdAlgebra) -> Self {
        let product = left.tensor(right);
        let x = product.identity();
        Self { left: left.clone(), right: right.clone(), product, x }
    }

    /// `x = Σ X[α, β] e_α ⊗ e_β` in matrix-unit coordinates.
    pub fn from_coord_matrix(left: &FdAlgebra, right: &FdAlgebra, c: &CMat) -> Result<Self> {
        if c.shape() != (left.coord_dim(), right.coord_dim()) {
            return Err(Error::Shape(format!(
                "coordinate matrix must be {}x{}",
                left.coord_dim(),
                right.coord_dim()
            )));
        }
        let product = left.tensor(right);
        let mut blocks = product.zero().into_blocks();
        for alpha in 0..left.coord_dim() {
            let (i, p, q) = left.coord_triple(alpha);
            for beta in 0..right.coord_dim() {
                let (j, r, s) = right.coord_triple(beta);
                let m = right.block_dims()[j];
                blocks[i * right.num_blocks() + j][(p * m + r, q * m + s)] = c[(alpha, beta)];
            }
        }
        Self::new(left, right, Element::new(blocks)?)
    }

    pub fn left(&self) -> &FdAlgebra {
        &self.left
    }

    pub fn right(&self) -> &FdAlgebra {
        &self.right
    }

    pub fn product(&self) -> &FdAlgebra {
        &self.product
    }

    pub fn element(&self) -> &Element {
        &self.x
    }

    pub fn coord_matrix(&self) -> CMat {
        let (l, r) = (&self.left, &self.right);
        CMat::from_fn(l.coord_dim(), r.coord_dim(), |alpha, beta| {
            let (i, p, q) = l.coord_triple(alpha);
            let (j, rr, s) = r.coord_triple(beta);
            let m = r.block_dims()[j];
            self.x.block(i * r.num_blocks() + j)[(p * m + rr, q * m + s)]
        })
    }

    fn with(&self, x: Element) -> Self {
        Self { left: self.left.clone(), right: self.right.clone(), product: self.product.clone(), x }
    }

    fn same_factors(&self, other: &TensorElement) -> Result<()> {
        if self.left != other.left || self.right != other.right {
            return Err(Error::Shape("tensor elements over different algebras".into()));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        self.with(self.x.adjoint())
    }

    pub fn mul(&self, other: &TensorElement) -> Result<Self> {
        self.same_factors(other)?;
        Ok(self.with(&self.x * &other.x))
    }

    pub fn add(&self, other: &TensorElement) -> Result<Self> {
        self.same_factors(other)?;
        Ok(self.with(&self.x + &other.x))
    }

    pub fn sub(&self, other: &TensorElement) -> Result<Self> {
        self.same_factors(other)?;
        Ok(self.with(&self.x - &other.x))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.with(self.x.scale(c))
    }

    pub fn norm(&self) -> f64 {
        self.x.norm()
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.x.is_positive(tol)
    }

    /// `x (a ⊗ 1)`.
    pub fn mul_left_factor(&self, a: &Element) -> Self {
        self.with(&self.x * a.kron(&self.right.identity()))
    }

    /// `x (1 ⊗ b)`.
    pub fn mul_right_factor(&self, b: &Element) -> Self {
        self.with(&self.x * self.left.identity().kron(b))
    }

    /// `(1 ⊗ b) x`.
    pub fn right_factor_mul(&self, b: &Element) -> Self {
        self.with(self.left.identity().kron(b) * &self.x)
    }

    /// `(ι ⊗ M)(x)` for a coordinate matrix `M` on `B`.
    pub fn map_right(&self, m: &CMat) -> Result<Self> {
        if m.shape() != (self.right.coord_dim(), self.right.coord_dim()) {
            return Err(Error::Shape("right map has wrong size".into()));
        }
        Self::from_coord_matrix(&self.left, &self.right, &(self.coord_matrix() * m.transpose()))
    }

    /// `(M ⊗ ι)(x)` for a coordinate matrix `M: A → C`.
    pub fn map_left(&self, target: &FdAlgebra, m: &CMat) -> Result<Self> {
        if m.shape() != (target.coord_dim(), self.left.coord_dim()) {
            return Err(Error::Shape("left map has wrong size".into()));
        }
        Self::from_coord_matrix(target, &self.right, &(m * self.coord_matrix()))
    }
}

/// `(ι⊗ω)(x)_i[p,q] = Σ_j Σ_{r,s} x_ij[(p,r),(q,s)] W_j[s,r]` for `ω = tr(W ·)` on `B`.
pub fn slice_right(x: &TensorElement, w: &Element) -> Result<Element> {
    x.right.check(w)?;
    let mut out = x.left.zero().into_blocks();
    for (i, &n) in x.left.block_dims().iter().enumerate() {
        for (j, &m) in x.right.block_dims().iter().enumerate() {
            let xb = x.x.block(i * x.right.num_blocks() + j);
            let wj = w.block(j);
            for p in 0..n {
                for q in 0..n {
                    let mut acc = C64::from(0.0);
                    for r in 0..m {
                        for s in 0..m {
                            acc += xb[(p * m + r, q * m + s)] * wj[(s, r)];
                        }
                    }
                    out[i][(p, q)] += acc;
                }
            }
        }
    }
    Element::new(out)
}

/// `(θ⊗ι)(x)_j[r,s] = Σ_i Σ_{p,q} x_ij[(p,r),(q,s)] T_i[q,p]` for `θ = tr(T ·)` on `A`.
pub fn slice_left(x: &TensorElement, t: &Element) -> Result<Element> {
    x.left.check(t)?;
    let mut out = x.right.zero().into_blocks();
    for (i, &n) in x.left.block_dims().iter().enumerate() {
        for (j, &m) in x.right.block_dims().iter().enumerate() {
            let xb = x.x.block(i * x.right.num_blocks() + j);
            let ti = t.block(i);
            for r in 0..m {
                for s in 0..m {
                    let mut acc = C64::from(0.0);
                    for p in 0..n {
                        for q in 0..n {
                            acc += xb[(p * m + r, q * m + s)] * ti[(q, p)];
                        }
                    }
                    out[j][(r, s)] += acc;
                }
            }
        }
    }
    Element::new(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainCertificate {
    /// `‖(ι⊗ω_k)(x) − (ι⊗φ)(x)‖` along the chain.
    pub gaps: Vec<f64>,
    /// `‖(ι⊗φ)(x)‖/(k+1)`.
    pub bounds: Vec<f64>,
}

impl ChainCertificate {
    pub fn holds(&self, slack: f64) -> bool {
        self.gaps.iter().zip(&self.bounds).all(|(g, b)| *g <= b + slack)
    }

    pub fn worst_excess(&self) -> f64 {
        self.gaps.iter().zip(&self.bounds).map(|(g, b)| g - b).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceValue {
    pub value: Element,
    pub certificate: ChainCertificate,
}

/// `ω_k = φ − (φ − ω)/(k+1)`, increasing to `φ` for `ω ≤ φ`.
pub fn dominated_chain(phi: &Weight, omega: &Weight, m: usize) -> Result<Vec<Weight>> {
    crate::weights::check_dominated(omega, phi, DEFAULT_TOL * (1.0 + phi.density().norm()))?;
    let gap = phi.density() - omega.density();
    (1..=m)
        .map(|k| Weight::new(phi.algebra(), phi.density() - &gap.scale_real(1.0 / (k as f64 + 1.0))))
        .collect()
}

pub fn slice_phi(x: &TensorElement, phi: &Weight) -> Result<Element> {
    slice_right(x, phi.density())
}

/// Value plus its approximation along `chain`.
pub fn slice_phi_certified(x: &TensorElement, phi: &Weight, chain: &[Weight]) -> Result<SliceValue> {
    let value = slice_phi(x, phi)?;
    let norm = value.norm();
    let mut gaps = Vec::with_capacity(chain.len());
    let mut bounds = Vec::with_capacity(chain.len());
    for (k, w) in chain.iter().enumerate() {
        gaps.push(slice_right(x, w.density())?.dist(&value));
        bounds.push(norm / (k as f64 + 2.0));
    }
    Ok(SliceValue { value, certificate: ChainCertificate { gaps, bounds } })
}

pub fn theta_slice(x: &TensorElement, theta: &Functional) -> Result<Element> {
    slice_left(x, theta.representative())
}

/// `|φ(theta_slice(x,θ)) − θ(slice_phi(x,φ))|`.
pub fn fubini_deviation(x: &TensorElement, phi: &Weight, theta: &Functional) -> Result<f64> {
    let lhs = phi.eval(&theta_slice(x, theta)?)?;
    let rhs = theta.eval(&slice_phi(x, phi)?)?;
    Ok((lhs - rhs).norm())
}

/// Rebuilds `(ι⊗φ)(x)` from `φ((θ_α⊗ι)(x))` over the dual basis of `A`.
pub fn reconstruct_from_dual(x: &TensorElement, phi: &Weight) -> Result<Element> {
    let alg = &x.left;
    let mut c = CVec::zeros(alg.coord_dim());
    for idx in 0..alg.coord_dim() {
        let (j, p, q) = alg.coord_triple(idx);
        let dual = alg.matrix_unit(j, q, p);
        c[idx] = phi.eval(&slice_left(x, &dual)?)?;
    }
    Ok(alg.from_coords(&c))
}

/// Min eigenvalue of `‖S(y*y)‖ S(x*x) − S(y*x)* S(y*x)`, `S = ι⊗φ`.
pub fn cs_operator_inequality(x: &TensorElement, y: &TensorElement, phi: &Weight) -> Result<f64> {
    let yx = slice_phi(&y.adjoint().mul(x)?, phi)?;
    let yy = slice_phi(&y.adjoint().mul(y)?, phi)?;
    let xx = slice_phi(&x.adjoint().mul(x)?, phi)?;
    let rhs = xx.scale_real(yy.norm());
    Ok((rhs - yx.adjoint() * yx).min_eigenvalue())
}

/// Min eigenvalue of `‖θ‖ (|θ|⊗ι)(x*x) − (θ⊗ι)(x)* (θ⊗ι)(x)`.
pub fn abs_theta_inequality(x: &TensorElement, theta: &Functional) -> Result<f64> {
    let abs = functional_abs(theta).abs;
    let s = theta_slice(x, theta)?;
    let rhs = slice_left(&x.adjoint().mul(x)?, abs.density())?.scale_real(theta.norm());
    Ok((rhs - s.adjoint() * s).min_eigenvalue())
}

/// `v = Σ_k q_k ⊗ f_k ∈ A ⊗ H_φ` over the orthonormal basis `f_k` of `H_φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KsgnsVector {
    pub components: Vec<Element>,
}

impl KsgnsVector {
    /// `⟨v, w⟩ = Σ_k q_k(w)* q_k(v)`.
    pub fn pairing(&self, w: &KsgnsVector) -> Element {
        self.components
            .iter()
            .zip(&w.components)
            .map(|(q, p)| p.adjoint() * q)
            .reduce(|a, b| a + b)
            .expect("at least one component")
    }

    pub fn module_norm_sq(&self) -> Element {
        self.pairing(self)
    }

    /// `(1 ⊗ M) v`.
    pub fn apply(&self, m: &CMat) -> KsgnsVector {
        let components = (0..m.nrows())
            .map(|k| {
                self.components
                    .iter()
                    .enumerate()
                    .fold(self.components[0].scale_real(0.0), |acc, (l, q)| acc + q.scale(m[(k, l)]))
            })
            .collect();
        KsgnsVector { components }
    }

    /// Components against the basis `e'_k = Σ_l U[l,k] f_l`.
    pub fn rotate(&self, u: &CMat) -> KsgnsVector {
        self.apply(&u.adjoint())
    }

    /// `v · a`.
    pub fn mul_right(&self, a: &Element) -> KsgnsVector {
        KsgnsVector { components: self.components.iter().map(|q| q * a).collect() }
    }

    /// `(1 ⊗ θ_w*) v = Σ_k conj(w_k) q_k`.
    pub fn contract(&self, w: &CVec) -> Element {
        self.components
            .iter()
            .enumerate()
            .fold(self.components[0].scale_real(0.0), |acc, (k, q)| acc + q.scale(w[k].conj()))
    }

    pub fn max_abs_diff(&self, other: &KsgnsVector) -> f64 {
        if self.components.len() != other.components.len() {
            return f64::INFINITY;
        }
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// `q_k = Σ_β L[k,β] y_β` where `x = Σ_β y_β ⊗ e_β`.
pub fn ksgns(x: &TensorElement, gns: &GnsTriple) -> Result<KsgnsVector> {
    if gns.algebra() != &x.right {
        return Err(Error::Shape("GNS data belongs to a different algebra".into()));
    }
    let q = x.coord_matrix() * gns.lambda_matrix().transpose();
    let components = (0..gns.dim_h()).map(|k| x.left.from_coords(&q.column(k).into_owned())).collect();
    Ok(KsgnsVector { components })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsgnsDeviations {
    /// `Σ q_k* q_k` against `(ι⊗φ)(x*x)`.
    pub norm_identity: f64,
    /// `⟨v_x, v_y⟩` against `(ι⊗φ)(y*x)`.
    pub pairing: f64,
    /// `θ(q_k) = ⟨Λ((θ⊗ι)(x)), f_k⟩` on the dual basis.
    pub dual: f64,
    /// Module norm in a rotated basis.
    pub rotation: f64,
}

impl KsgnsDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.norm_identity.max(self.pairing).max(self.dual).max(self.rotation)
    }
}

pub fn ksgns_deviations(x: &TensorElement, y: &TensorElement, phi: &Weight, gns: &GnsTriple, rotation: &CMat) -> Result<KsgnsDeviations> {
    let vx = ksgns(x, gns)?;
    let vy = ksgns(y, gns)?;
    let xx = slice_phi(&x.adjoint().mul(x)?, phi)?;
    let norm_identity = vx.module_norm_sq().max_abs_diff(&xx);
    let pairing = vx.pairing(&vy).max_abs_diff(&slice_phi(&y.adjoint().mul(x)?, phi)?);
    let alg = &x.left;
    let mut dual: f64 = 0.0;
    for idx in 0..alg.coord_dim() {
        let (j, p, q) = alg.coord_triple(idx);
        let theta = alg.matrix_unit(j, q, p);
        let lam = gns.lambda(&slice_left(x, &theta)?);
        for (k, qk) in vx.components.iter().enumerate() {
            dual = dual.max((alg.coords(qk)[idx] - lam[k]).norm());
        }
    }
    let rotation = vx.rotate(rotation).module_norm_sq().max_abs_diff(&xx);
    Ok(KsgnsDeviations { norm_identity, pairing, dual, rotation })
}

/// `|ω(⟨v_x a, b ⊗ w⟩) − ⟨Λ((aωb*⊗ι)(x)), w⟩|` with `⟨ξ, η⟩ = η*ξ`.
pub fn module_functional_deviation(x: &TensorElement, gns: &GnsTriple, omega: &Functional, a: &Element, b: &Element, w: &CVec) -> Result<f64> {
    let v = ksgns(x, gns)?.mul_right(a);
    let paired = b.adjoint() * v.contract(w);
    let lhs = omega.eval(&paired)?;
    let rhs = inner(&gns.lambda(&theta_slice(x, &omega.sandwich(a, b))?), w);
    Ok((lhs - rhs).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsgnsCutoffDeviations {
    /// `(1⊗T^{1/2}) v_x = (ι⊗π)(x)(1⊗θ_ξ)`.
    pub root: f64,
    /// `v_y* (1⊗T) v_x = (ι⊗ω)(y*x)`.
    pub pairing: f64,
}

impl KsgnsCutoffDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.root.max(self.pairing)
    }
}

pub fn ksgns_cutoff(x: &TensorElement, y: &TensorElement, gns: &GnsTriple, cutoff: &CutoffData) -> Result<KsgnsCutoffDeviations> {
    let vx = ksgns(x, gns)?;
    let vy = ksgns(y, gns)?;
    let root_t = crate::algebra::hermitian_func(&cutoff.t, |s| C64::from(s.max(0.0).sqrt()));
    let lhs = vx.apply(&root_t);
    // (ι⊗π)(x)(1⊗θ_ξ) = Σ_β y_β ⊗ π(e_β) ξ
    let c = x.coord_matrix();
    let basis = x.right.basis();
    let images = CMat::from_fn(gns.dim_h(), basis.len(), |k, beta| (gns.pi(&basis[beta]) * &cutoff.xi)[k]);
    let q = c * images.transpose();
    let rhs = KsgnsVector {
        components: (0..gns.dim_h()).map(|k| x.left.from_coords(&q.column(k).into_owned())).collect(),
    };
    let root = lhs.max_abs_diff(&rhs);
    let paired = vx.apply(&cutoff.t).pairing(&vy);
    let pairing = paired.max_abs_diff(&slice_phi(&y.adjoint().mul(x)?, &cutoff.omega)?);
    Ok(KsgnsCutoffDeviations { root, pairing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub deviations: Vec<f64>,
    /// Worst `‖a*(ι⊗φ)(x_last)a − a*(ι⊗φ)(x)a‖` over `a` in the basis of `A` and `1`.
    pub compressed: f64,
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn final_deviation(&self) -> f64 {
        self.deviations.last().copied().unwrap_or(0.0)
    }
}

/// Checks `0 ⪯ x_k ⪯ x` and reports `‖(ι⊗φ)(x_k) − (ι⊗φ)(x)‖`.
pub fn dominated_convergence(seq: &[TensorElement], x: &TensorElement, phi: &Weight) -> Result<ConvergenceReport> {
    let tol = 1e-10 * (1.0 + x.norm());
    let limit = slice_phi(x, phi)?;
    let mut deviations = Vec::with_capacity(seq.len());
    let mut values = Vec::with_capacity(seq.len());
    for xk in seq {
        x.same_factors(xk)?;
        let low = xk.x.min_eigenvalue();
        let gap = (&x.x - &xk.x).min_eigenvalue();
        if low < -tol || gap < -tol {
            return Err(Error::Order(format!("sequence leaves [0, x]: min eigenvalues {low:e}, {gap:e}")));
        }
        let v = slice_phi(xk, phi)?;
        deviations.push(v.dist(&limit));
        values.push(v);
    }
    let monotone = values
        .windows(2)
        .all(|w| (&w[1] - &w[0]).min_eigenvalue() >= -tol);
    let compressed = match values.last() {
        Some(last) => std::iter::once(x.left.identity())
            .chain(x.left.basis())
            .map(|a| (a.adjoint() * last * &a).dist(&(a.adjoint() * &limit * &a)))
            .fold(0.0, f64::max),
        None => 0.0,
    };
    Ok(ConvergenceReport { deviations, compressed, monotone })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceAutomorphismDeviations {
    /// `(1⊗U) v_x = r^{−1/2} v_{(ι⊗θ)(x)}`.
    pub vector: f64,
    /// `(ι⊗φ)((ι⊗θ)(x)) = r (ι⊗φ)(x)`.
    pub value: f64,
}

impl SliceAutomorphismDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.vector.max(self.value)
    }
}

/// Lifts `θ` with `φ∘θ = rφ` and checks both identities; rejects broken invariance.
pub fn slice_automorphism(x: &TensorElement, phi: &Weight, gns: &GnsTriple, theta: &Automorphism, r: f64) -> Result<SliceAutomorphismDeviations> {
    let m = theta.coord_matrix();
    let lift = lift_automorphism(gns, phi, &m, Some(r))?;
    let moved = x.map_right(&m)?;
    let lhs = ksgns(x, gns)?.apply(&lift.u);
    let rhs = ksgns(&moved, gns)?;
    let rhs = KsgnsVector { components: rhs.components.iter().map(|q| q.scale_real(r.powf(-0.5))).collect() };
    let vector = lhs.max_abs_diff(&rhs);
    let value = slice_phi(&moved, phi)?.max_abs_diff(&slice_phi(x, phi)?.scale_real(r));
    Ok(SliceAutomorphismDeviations { vector, value })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleDeviations {
    /// `v_{x(a⊗1)} = v_x a`.
    pub right_module: f64,
    /// `v_{x(1⊗b)} = (1 ⊗ J π(σ_{i/2}(b))* J) v_x`.
    pub kms_vector: f64,
    /// `(ι⊗φ)(x(1⊗b)) = (ι⊗φ)((1⊗σ_i(b)) x)`.
    pub kms_value: f64,
}

impl ModuleDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.right_module.max(self.kms_vector).max(self.kms_value)
    }
}

pub fn slice_module_props(
    x: &TensorElement,
    phi: &Weight,
    gns: &GnsTriple,
    modular: &ModularTriple,
    sigma: &OneParamGroup,
    a: &Element,
    b: &Element,
) -> Result<ModuleDeviations> {
    let v = ksgns(x, gns)?;
    let right_module = ksgns(&x.mul_left_factor(a), gns)?.max_abs_diff(&v.mul_right(a));
    let half = sigma.analytic_ext(I * 0.5, b);
    let op = modular.j.conjugate_linear(&gns.pi(&half).adjoint());
    let kms_vector = ksgns(&x.mul_right_factor(b), gns)?.max_abs_diff(&v.apply(&op));
    let full = sigma.analytic_ext(I, b);
    let kms_value = slice_phi(&x.mul_right_factor(b), phi)?.max_abs_diff(&slice_phi(&x.right_factor_mul(&full), phi)?);
    Ok(ModuleDeviations { right_module, kms_vector, kms_value })
}

/// `ρ(a) = Σ_k s_k K_k a K_k*` between the block-diagonal representations.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    source: FdAlgebra,
    target: FdAlgebra,
    ops: Vec<(f64, CMat)>,
}

impl KrausMap {
    /// Rejects operators whose image leaves the block structure of `target`.
    pub fn new(source: &FdAlgebra, target: &FdAlgebra, ops: Vec<(f64, CMat)>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Domain("Kraus list is empty".into()));
        }
        for (_, k) in &ops {
            if k.shape() != (target.total_dim(), source.total_dim()) {
                return Err(Error::Shape(format!(
                    "Kraus operator must be {}x{}",
                    target.total_dim(),
                    source.total_dim()
                )));
            }
        }
        let map = Self { source: source.clone(), target: target.clone(), ops };
        let leak = source
            .basis()
            .iter()
            .map(|e| {
                let full = map.apply_full(e);
                max_abs(&(&full - target.represent(&map.compress(&full))))
            })
            .fold(0.0, f64::max);
        if leak > 1e-10 {
            return Err(Error::Domain(format!("Kraus image leaves the target algebra ({leak:e})")));
        }
        Ok(map)
    }

    pub fn identity(alg: &FdAlgebra) -> Self {
        let n = alg.total_dim();
        Self { source: alg.clone(), target: alg.clone(), ops: vec![(1.0, CMat::identity(n, n))] }
    }

    /// `a ↦ w* a w` on a single algebra.
    pub fn conjugation(alg: &FdAlgebra, w: &Element) -> Result<Self> {
        let k = alg.represent(w).adjoint();
        Self::new(alg, alg, vec![(1.0, k)])
    }

    pub fn source(&self) -> &FdAlgebra {
        &self.source
    }

    pub fn target(&self) -> &FdAlgebra {
        &self.target
    }

    fn apply_full(&self, a: &Element) -> CMat {
        let rep = self.source.represent(a);
        let n = self.target.total_dim();
        self.ops
            .iter()
            .fold(CMat::zeros(n, n), |acc, (s, k)| acc + k * &rep * k.adjoint() * C64::from(*s))
    }

    fn compress(&self, full: &CMat) -> Element {
        let mut off = 0;
        let blocks = self
            .target
            .block_dims()
            .iter()
            .map(|&n| {
                let b = full.view((off, off), (n, n)).into_owned();
                off += n;
                b
            })
            .collect();
        Element::new(blocks).expect("nonempty")
    }

    pub fn apply(&self, a: &Element) -> Element {
        self.compress(&self.apply_full(a))
    }

    pub fn coord_matrix(&self) -> CMat {
        let basis = self.source.basis();
        let mut m = CMat::zeros(self.target.coord_dim(), basis.len());
        for (c, e) in basis.iter().enumerate() {
            m.set_column(c, &self.target.coords(&self.apply(e)));
        }
        m
    }

    /// Minimum over source blocks `i` of the least eigenvalue of `Σ_{pq} E_pq ⊗ ρ(e^i_pq)`.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let nt = self.target.total_dim();
        let mut worst = f64::INFINITY;
        for (i, &n) in self.source.block_dims().iter().enumerate() {
            let mut choi = CMat::zeros(n * nt, n * nt);
            for p in 0..n {
                for q in 0..n {
                    let img = self.target.represent(&self.apply(&self.source.matrix_unit(i, p, q)));
                    choi.view_mut((p * nt, q * nt), (nt, nt)).copy_from(&img);
                }
            }
            worst = worst.min(min_hermitian_eigenvalue(&choi));
        }
        worst
    }

    pub fn check_cp(&self, tol: f64) -> Result<()> {
        let m = self.choi_min_eigenvalue();
        if m < -tol {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: m });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpSliceDeviations {
    /// `(ι_B⊗φ)((ρ⊗ι)(x)) = ρ((ι_A⊗φ)(x))`.
    pub value: f64,
    /// `(1⊗θ_v*) v_{(ρ⊗ι)(x)} = ρ((1⊗θ_v*) v_x)`.
    pub component: f64,
}

impl CpSliceDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.value.max(self.component)
    }
}

pub fn cp_slice(rho: &KrausMap, x: &TensorElement, phi: &Weight, gns: &GnsTriple, probes: &[CVec]) -> Result<CpSliceDeviations> {
    rho.check_cp(1e-9)?;
    if x.left != rho.source {
        return Err(Error::Shape("tensor element does not start in the source algebra".into()));
    }
    let moved = x.map_left(&rho.target, &rho.coord_matrix())?;
    let value = slice_phi(&moved, phi)?.max_abs_diff(&rho.apply(&slice_phi(x, phi)?));
    let vx = ksgns(x, gns)?;
    let vm = ksgns(&moved, gns)?;
    let component = probes
        .iter()
        .map(|w| vm.contract(w).max_abs_diff(&rho.apply(&vx.contract(w))))
        .fold(0.0, f64::max);
    Ok(CpSliceDeviations { value, component })
}

/// Min eigenvalue of `S(y) − S(x)`; nonnegative whenever `x ⪯ y`.
pub fn hereditary_gap(x: &TensorElement, y: &TensorElement, phi: &Weight) -> Result<f64> {
    let sx = slice_phi(x, phi)?;
    let sy = slice_phi(y, phi)?;
    let d = &sy - &sx;
    Ok(d.blocks().iter().map(|b| hermitian_eigh(&((b + b.adjoint()) * C64::from(0.5))).0[0]).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ONE;
    use crate::dynamics::{gibbs_weight, modular_group_of, modular_objects};
    use crate::gns::{gns_construct, xi_omega};
    use crate::random::{
        gaussian_vector, random_density, random_dominated, random_element, random_hermitian,
        random_positive, random_unitary,
    };
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn algebras() -> (FdAlgebra, FdAlgebra) {
        (FdAlgebra::new(&[2, 1]).unwrap(), FdAlgebra::new(&[2, 2]).unwrap())
    }

    fn random_tensor(a: &FdAlgebra, b: &FdAlgebra, rng: &mut ChaCha8Rng) -> TensorElement {
        TensorElement::new(a, b, random_element(&a.tensor(b), rng)).unwrap()
    }

    fn random_positive_tensor(a: &FdAlgebra, b: &FdAlgebra, rng: &mut ChaCha8Rng) -> TensorElement {
        TensorElement::new(a, b, random_positive(&a.tensor(b), rng)).unwrap()
    }

    fn faithful(alg: &FdAlgebra, rng: &mut ChaCha8Rng) -> Weight {
        Weight::new(alg, random_density(alg, true, rng)).unwrap()
    }

    #[test]
    fn norms_and_adjoint_of_elementary_tensors() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_element(&a, &mut rng);
        let y = random_element(&b, &mut rng);
        let t = TensorElement::elementary(&a, &b, &x, &y).unwrap();
        assert!((t.norm() - x.norm() * y.norm()).abs() < 1e-10);
        assert_eq!(t.adjoint().element(), &x.adjoint().kron(&y.adjoint()));
        let round = TensorElement::from_coord_matrix(&a, &b, &t.coord_matrix()).unwrap();
        assert_eq!(round, t);
    }

    #[test]
    fn slice_examples() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = faithful(&b, &mut rng);
        let x = random_element(&a, &mut rng);
        let y = random_element(&b, &mut rng);
        let t = TensorElement::elementary(&a, &b, &x, &y).unwrap();
        assert!(slice_phi(&t, &phi).unwrap().max_abs_diff(&x.scale(phi.at(&y))) < 1e-13);
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let one = TensorElement::identity(&a, &m2);
        assert!(slice_phi(&one, &Weight::trace(&m2)).unwrap().max_abs_diff(&a.identity().scale_real(2.0)) < 1e-14);
        let theta = Functional::new(&a, random_element(&a, &mut rng)).unwrap();
        assert!(theta_slice(&t, &theta).unwrap().max_abs_diff(&y.scale(theta.at(&x))) < 1e-13);
        assert!(theta_slice(&t, &Functional::zero(&a)).unwrap().norm() == 0.0);
    }

    #[test]
    fn slice_agrees_with_coordinate_contraction() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = faithful(&b, &mut rng);
        let x = random_tensor(&a, &b, &mut rng);
        let w: CVec = CVec::from_iterator(b.coord_dim(), b.basis().iter().map(|e| phi.at(e)));
        let oracle = a.from_coords(&(x.coord_matrix() * w));
        assert!(slice_phi(&x, &phi).unwrap().max_abs_diff(&oracle) < 1e-13);
    }

    #[test]
    fn chain_certificates() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = faithful(&b, &mut rng);
        let x = random_positive_tensor(&a, &b, &mut rng);
        let canonical = crate::weights::gphi_chain(&phi, 10);
        let cert = slice_phi_certified(&x, &phi, &canonical).unwrap().certificate;
        assert!(cert.holds(1e-12));
        for (g, bnd) in cert.gaps.iter().zip(&cert.bounds) {
            assert!((g - bnd).abs() < 1e-12);
        }
        let omega = Weight::new(&b, random_dominated(phi.density(), &mut rng)).unwrap();
        let chain = dominated_chain(&phi, &omega, 10).unwrap();
        let value = slice_phi_certified(&x, &phi, &chain).unwrap();
        assert!(value.certificate.holds(1e-12));
        assert!(value.value.is_positive(1e-10));
    }

    #[test]
    fn inequalities_edge_cases() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = faithful(&b, &mut rng);
        let x = random_tensor(&a, &b, &mut rng);
        let zero = TensorElement::zero(&a, &b);
        assert!(cs_operator_inequality(&x, &x, &phi).unwrap() >= -1e-10);
        assert!(cs_operator_inequality(&x, &zero, &phi).unwrap().abs() < 1e-14);
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let theta = Functional::new(&m2, m2.matrix_unit(0, 0, 1)).unwrap();
        let y = random_tensor(&m2, &b, &mut rng);
        assert!(abs_theta_inequality(&y, &theta).unwrap() >= -1e-10);
        let psd = Functional::new(&m2, random_positive(&m2, &mut rng)).unwrap();
        assert!(functional_abs(&psd).abs.density().max_abs_diff(psd.representative()) < 1e-10);
        let one = TensorElement::identity(&m2, &b);
        assert!(abs_theta_inequality(&one, &theta).unwrap() >= -1e-12);
    }

    #[test]
    fn ksgns_examples() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi = Weight::new(&b, random_density(&b, false, &mut rng)).unwrap();
        let gns = gns_construct(&phi).unwrap();
        let x = random_element(&a, &mut rng);
        let y = random_element(&b, &mut rng);
        let t = TensorElement::elementary(&a, &b, &x, &y).unwrap();
        let v = ksgns(&t, &gns).unwrap();
        let ly = gns.lambda(&y);
        for (k, q) in v.components.iter().enumerate() {
            assert!(q.max_abs_diff(&x.scale(ly[k])) < 1e-13);
        }
        let zero = ksgns(&TensorElement::zero(&a, &b), &gns).unwrap();
        assert!(zero.components.iter().all(|q| q.norm() == 0.0));
    }

    #[test]
    fn dominated_convergence_examples() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let phi = faithful(&b, &mut rng);
        let x = random_positive_tensor(&a, &b, &mut rng);
        let seq: Vec<TensorElement> = (1..=8).map(|k| x.scale(C64::from(k as f64 / (k as f64 + 1.0)))).collect();
        let report = dominated_convergence(&seq, &x, &phi).unwrap();
        let s = slice_phi(&x, &phi).unwrap().norm();
        for (k, d) in report.deviations.iter().enumerate() {
            assert!((d - s / (k as f64 + 2.0)).abs() < 1e-12);
        }
        assert!(report.monotone);
        let constant = dominated_convergence(&[x.clone(), x.clone()], &x, &phi).unwrap();
        assert!(constant.final_deviation() < 1e-15 && constant.compressed < 1e-15);
        let too_big = x.scale(C64::from(2.0));
        assert!(matches!(dominated_convergence(&[too_big], &x, &phi), Err(Error::Order(_))));
    }

    #[test]
    fn slice_automorphism_examples() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let phi = faithful(&b, &mut rng);
        let gns = gns_construct(&phi).unwrap();
        let x = random_tensor(&a, &b, &mut rng);
        let id = Automorphism::identity(&b);
        assert!(slice_automorphism(&x, &phi, &gns, &id, 1.0).unwrap().max_deviation() < 1e-10);
        // w = D^{it} commutes with D
        let w = phi.density().pow_pd(I * 0.7).unwrap();
        let inner = Automorphism::inner(&b, w).unwrap();
        assert!(slice_automorphism(&x, &phi, &gns, &inner, 1.0).unwrap().max_deviation() < 1e-9);
        let breaking = Automorphism::inner(&b, crate::random::random_unitary_element(&b, &mut rng)).unwrap();
        assert!(matches!(slice_automorphism(&x, &phi, &gns, &breaking, 1.0), Err(Error::Invariance { .. })));
    }

    #[test]
    fn module_props_trivial_factors() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = gibbs_weight(&b, &random_hermitian(&b, &mut rng)).unwrap();
        let gns = gns_construct(&phi).unwrap();
        let modular = modular_objects(&phi, &gns).unwrap();
        let sigma = modular_group_of(&phi).unwrap();
        let x = random_tensor(&a, &b, &mut rng);
        let dev = slice_module_props(&x, &phi, &gns, &modular, &sigma, &a.identity(), &b.identity()).unwrap();
        assert!(dev.max_deviation() < 1e-10, "{dev:?}");
    }

    #[test]
    fn cp_examples() {
        let (a, b) = algebras();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let phi = faithful(&b, &mut rng);
        let gns = gns_construct(&phi).unwrap();
        let x = random_tensor(&a, &b, &mut rng);
        let probes: Vec<CVec> = (0..3).map(|_| gaussian_vector(gns.dim_h(), &mut rng)).collect();
        let id = KrausMap::identity(&a);
        assert!(cp_slice(&id, &x, &phi, &gns, &probes).unwrap().max_deviation() < 1e-12);
        let w = random_element(&a, &mut rng);
        let conj = KrausMap::conjugation(&a, &w).unwrap();
        assert!(cp_slice(&conj, &x, &phi, &gns, &probes).unwrap().max_deviation() < 1e-10);
        let n = a.total_dim();
        let neg = KrausMap::new(&a, &a, vec![(-1.0, CMat::identity(n, n))]).unwrap();
        assert!(matches!(cp_slice(&neg, &x, &phi, &gns, &probes), Err(Error::NotCompletelyPositive { .. })));
        // partial trace M_2 → C is CP; Kraus rows ⟨p|
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let c = FdAlgebra::new(&[1]).unwrap();
        let ops = (0..2).map(|p| (1.0, CMat::from_fn(1, 2, |_, q| if p == q { ONE } else { C64::from(0.0) }))).collect();
        let trace = KrausMap::new(&m2, &c, ops).unwrap();
        assert!(trace.choi_min_eigenvalue() >= -1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn fubini_and_converse(seed in any::<u64>()) {
            let (a, b) = algebras();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = faithful(&b, &mut rng);
            let theta = Functional::new(&a, random_element(&a, &mut rng)).unwrap();
            let x = random_tensor(&a, &b, &mut rng);
            prop_assert!(fubini_deviation(&x, &phi, &theta).unwrap() <= 1e-10);
            let rebuilt = reconstruct_from_dual(&x, &phi).unwrap();
            prop_assert!(rebuilt.max_abs_diff(&slice_phi(&x, &phi).unwrap()) <= 1e-12);
        }

        #[test]
        fn operator_inequalities(seed in any::<u64>()) {
            let (a, b) = algebras();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&b, random_density(&b, seed % 2 == 0, &mut rng)).unwrap();
            let x = random_tensor(&a, &b, &mut rng);
            let y = random_tensor(&a, &b, &mut rng);
            prop_assert!(cs_operator_inequality(&x, &y, &phi).unwrap() >= -1e-9);
            let theta = Functional::new(&a, random_element(&a, &mut rng)).unwrap();
            prop_assert!(abs_theta_inequality(&x, &theta).unwrap() >= -1e-9);
            let z = random_positive_tensor(&a, &b, &mut rng);
            let upper = TensorElement::new(&a, &b, z.element() + x.adjoint().mul(&x).unwrap().element()).unwrap();
            prop_assert!(hereditary_gap(&z, &upper, &phi).unwrap() >= -1e-10);
        }

        #[test]
        fn ksgns_invariants(seed in any::<u64>()) {
            let (a, b) = algebras();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&b, random_density(&b, seed % 3 != 0, &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let x = random_tensor(&a, &b, &mut rng);
            let y = random_tensor(&a, &b, &mut rng);
            let u = random_unitary(gns.dim_h(), &mut rng);
            let dev = ksgns_deviations(&x, &y, &phi, &gns, &u).unwrap();
            prop_assert!(dev.max_deviation() <= 1e-9, "{:?}", dev);
            let omega = Functional::new(&a, random_positive(&a, &mut rng)).unwrap();
            let ea = random_element(&a, &mut rng);
            let eb = random_element(&a, &mut rng);
            let w = gaussian_vector(gns.dim_h(), &mut rng);
            prop_assert!(module_functional_deviation(&x, &gns, &omega, &ea, &eb, &w).unwrap() <= 1e-9);
        }

        #[test]
        fn cutoff_identities(seed in any::<u64>()) {
            let (a, b) = algebras();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&b, random_density(&b, seed % 2 == 0, &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let omega = Weight::new(&b, random_dominated(phi.density(), &mut rng)).unwrap();
            let data = xi_omega(&gns, &phi, &omega).unwrap();
            let x = random_tensor(&a, &b, &mut rng);
            let y = random_tensor(&a, &b, &mut rng);
            let dev = ksgns_cutoff(&x, &y, &gns, &data).unwrap();
            prop_assert!(dev.max_deviation() <= 1e-9, "{:?}", dev);
            let scaled = xi_omega(&gns, &phi, &phi.scaled(0.3)).unwrap();
            prop_assert!(ksgns_cutoff(&x, &y, &gns, &scaled).unwrap().max_deviation() <= 1e-9);
        }

        #[test]
        fn module_and_kms_identities(seed in any::<u64>()) {
            let (a, b) = algebras();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = gibbs_weight(&b, &random_hermitian(&b, &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let modular = modular_objects(&phi, &gns).unwrap();
            let sigma = modular_group_of(&phi).unwrap();
            let x = random_tensor(&a, &b, &mut rng);
            let ea = random_element(&a, &mut rng);
            let eb = random_element(&b, &mut rng);
            let dev = slice_module_props(&x, &phi, &gns, &modular, &sigma, &ea, &eb).unwrap();
            prop_assert!(dev.max_deviation() <= 1e-8, "{:?}", dev);
        }

        #[test]
        fn monotone_sequences_converge(seed in any::<u64>()) {
            let (a, b) = algebras();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = faithful(&b, &mut rng);
            let x = random_positive_tensor(&a, &b, &mut rng);
            let root = x.element().sqrt_psd().unwrap();
            let prod = a.tensor(&b);
            let q = random_positive(&prod, &mut rng);
            let q = q.scale_real(1.0 / q.norm());
            let seq: Vec<TensorElement> = (1..=12)
                .map(|k| {
                    let p = prod.identity() - q.scale_real(1.0 / (k as f64 + 1.0));
                    TensorElement::new(&a, &b, &root * p * &root).unwrap()
                })
                .collect();
            let report = dominated_convergence(&seq, &x, &phi).unwrap();
            prop_assert!(report.monotone);
            let s = slice_phi(&x, &phi).unwrap().norm();
            for (k, d) in report.deviations.iter().enumerate() {
                prop_assert!(*d <= s / (k as f64 + 2.0) + 1e-12);
            }
        }
    }
}
