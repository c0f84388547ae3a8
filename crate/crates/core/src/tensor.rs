//! Product weights `φ⊗ψ`, the map `Λ_φ⊗Λ_ψ` through the joint GNS space,
//! cut-offs, basis expansions, relative invariance and the KMS tensor structure.

use crate::algebra::{hermitian_eigh, max_abs, CMat, CVec, Element, FdAlgebra, C64, I, ONE};
use crate::automorphism::Automorphism;
use crate::dynamics::{modular_group_of, modular_objects, ModularTriple, OneParamGroup};
use crate::error::{Error, Result};
use crate::gns::{gns_construct, inner, lift_automorphism, xi_omega, GnsTriple};
use crate::slice::{slice_phi, TensorElement};
use crate::weights::Weight;

/// Density `D_φ ⊗ D_ψ` blockwise.
pub fn tensor_weight(phi: &Weight, psi: &Weight) -> Weight {
    let alg = phi.algebra().tensor(psi.algebra());
    Weight::new(&alg, phi.density().kron(psi.density())).expect("Kronecker of PSD is PSD")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSupCertificate {
    pub exact: f64,
    pub values: Vec<f64>,
    /// `(φ⊗ψ)(x) · 2/(k+1)`.
    pub bounds: Vec<f64>,
}

impl TensorSupCertificate {
    pub fn holds(&self, slack: f64) -> bool {
        let increasing = self.values.windows(2).all(|w| w[1] >= w[0] - slack);
        increasing && self.values.iter().zip(&self.bounds).all(|(v, b)| self.exact - v <= b + slack)
    }
}

/// `(ω_k⊗θ_k)(x)` along the product of the canonical chains.
pub fn tensor_sup_certificate(phi: &Weight, psi: &Weight, x: &TensorElement, m: usize) -> Result<TensorSupCertificate> {
    let product = tensor_weight(phi, psi);
    let exact = product.eval(x.element())?.re;
    let mut values = Vec::with_capacity(m);
    let mut bounds = Vec::with_capacity(m);
    for k in 1..=m {
        let c = k as f64 / (k as f64 + 1.0);
        let w = tensor_weight(&phi.scaled(c), &psi.scaled(c));
        values.push(w.eval(x.element())?.re);
        bounds.push(exact * 2.0 / (k as f64 + 1.0));
    }
    Ok(TensorSupCertificate { exact, values, bounds })
}

/// Column `α d_B + β` is `coords(e_α ⊗ e_β)` in the product algebra: a single
/// unit entry, since `e^{(i)}_{pq} ⊗ e^{(j)}_{rs} = e^{(i,j)}_{(p m_j + r),(q m_j + s)}`.
pub fn product_coord_embedding(a: &FdAlgebra, b: &FdAlgebra) -> CMat {
    let (da, db) = (a.coord_dim(), b.coord_dim());
    let prod = a.tensor(b);
    let kb = b.num_blocks();
    let mut e = CMat::zeros(da * db, da * db);
    for alpha in 0..da {
        let (i, p, q) = a.coord_triple(alpha);
        for beta in 0..db {
            let (j, r, s) = b.coord_triple(beta);
            let m = b.block_dims()[j];
            e[(prod.coord_index(i * kb + j, p * m + r, q * m + s), alpha * db + beta)] = ONE;
        }
    }
    e
}

#[derive(Debug, Clone)]
pub struct JointGns {
    pub phi: Weight,
    pub psi: Weight,
    pub product: Weight,
    pub gns_phi: GnsTriple,
    pub gns_psi: GnsTriple,
    pub gns_joint: GnsTriple,
    /// `Λ_φ(a)⊗Λ_ψ(b) ↦ Λ(a⊗b)`.
    pub u: CMat,
}

pub fn joint_gns(phi: &Weight, psi: &Weight) -> Result<JointGns> {
    let gns_phi = gns_construct(phi)?;
    let gns_psi = gns_construct(psi)?;
    let product = tensor_weight(phi, psi);
    let gns_joint = gns_construct(&product)?;
    let e = product_coord_embedding(phi.algebra(), psi.algebra());
    let u = gns_joint.lambda_matrix() * e * gns_phi.lambda_pinv().kronecker(gns_psi.lambda_pinv());
    Ok(JointGns { phi: phi.clone(), psi: psi.clone(), product, gns_phi, gns_psi, gns_joint, u })
}

impl JointGns {
    pub fn left(&self) -> &FdAlgebra {
        self.phi.algebra()
    }

    pub fn right(&self) -> &FdAlgebra {
        self.psi.algebra()
    }

    fn check(&self, x: &TensorElement) -> Result<()> {
        if x.left() != self.left() || x.right() != self.right() {
            return Err(Error::Shape("tensor element over different factors".into()));
        }
        Ok(())
    }

    /// `(Λ_φ⊗Λ_ψ)(x) := U* Λ(x)`.
    pub fn lambda(&self, x: &TensorElement) -> Result<CVec> {
        self.check(x)?;
        Ok(self.u.adjoint() * self.gns_joint.lambda(x.element()))
    }

    /// `Σ X[α,β] f(α) ⊗ g(β)`.
    pub fn expand(x: &TensorElement, f: &[CVec], g: &[CVec]) -> CVec {
        let c = x.coord_matrix();
        let n = f.first().map_or(0, |v| v.len()) * g.first().map_or(0, |v| v.len());
        let mut out = CVec::zeros(n);
        for (alpha, fa) in f.iter().enumerate() {
            for (beta, gb) in g.iter().enumerate() {
                let z = c[(alpha, beta)];
                if z.norm() != 0.0 {
                    out += fa.kronecker(gb) * z;
                }
            }
        }
        out
    }

    /// `(π_φ⊗π_ψ)(x)`.
    pub fn pi_product(&self, x: &TensorElement) -> CMat {
        let c = x.coord_matrix();
        let (pa, pb) = (self.gns_phi.pi_basis(), self.gns_psi.pi_basis());
        let n = self.gns_phi.dim_h() * self.gns_psi.dim_h();
        let mut out = CMat::zeros(n, n);
        for (alpha, a) in pa.iter().enumerate() {
            for (beta, b) in pb.iter().enumerate() {
                let z = c[(alpha, beta)];
                if z.norm() != 0.0 {
                    out += a.kronecker(b) * z;
                }
            }
        }
        out
    }

    pub fn deviations(&self, probes: &[TensorElement]) -> Result<JointDeviations> {
        let h = self.u.ncols();
        let isometry = max_abs(&(self.u.adjoint() * &self.u - CMat::identity(h, h)));
        let hj = self.u.nrows();
        let coisometry = max_abs(&(&self.u * self.u.adjoint() - CMat::identity(hj, hj)));
        let mut covariance: f64 = 0.0;
        let mut pairing: f64 = 0.0;
        let mut norm: f64 = 0.0;
        let (la, lb) = (self.left().basis(), self.right().basis());
        for x in probes {
            covariance = covariance.max(max_abs(&(&self.u * self.pi_product(x) - self.gns_joint.pi(x.element()) * &self.u)));
            let v = self.lambda(x)?;
            let full = self.product.at(x.adjoint().mul(x)?.element());
            norm = norm.max((C64::from(v.norm_squared()) - full).norm());
            for a in &la {
                for b in &lb {
                    let w = self.gns_phi.lambda(a).kronecker(&self.gns_psi.lambda(b));
                    let lhs = inner(&v, &w);
                    let rhs = self.product.at(&(a.adjoint().kron(&b.adjoint()) * x.element()));
                    pairing = pairing.max((lhs - rhs).norm());
                }
            }
        }
        Ok(JointDeviations {
            dim_joint: hj,
            dim_product: h,
            isometry,
            coisometry,
            covariance,
            pairing,
            norm,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDeviations {
    pub dim_joint: usize,
    pub dim_product: usize,
    pub isometry: f64,
    pub coisometry: f64,
    /// `U(π_φ⊗π_ψ)(x) = π(x)U`.
    pub covariance: f64,
    /// `⟨v, Λ_φ(a)⊗Λ_ψ(b)⟩ = (φ⊗ψ)((a*⊗b*)x)`.
    pub pairing: f64,
    /// `‖v‖² = (φ⊗ψ)(x*x)`.
    pub norm: f64,
}

impl JointDeviations {
    pub fn unitary(&self) -> f64 {
        if self.dim_joint != self.dim_product {
            return f64::INFINITY;
        }
        self.isometry.max(self.coisometry)
    }

    pub fn max_deviation(&self) -> f64 {
        self.unitary().max(self.covariance).max(self.pairing).max(self.norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorCutoffDeviations {
    /// `(T_ω^{1/2}⊗T_θ^{1/2})(Λ_φ⊗Λ_ψ)(x) = (π_φ⊗π_ψ)(x)(ξ_ω⊗ξ_θ)`.
    pub both: f64,
    /// `(T_ω^{1/2}⊗1)(Λ_φ⊗Λ_ψ)(x) = (Λ_ω⊗Λ_ψ)(x)`, `Λ_ω(a) = π_φ(a)ξ_ω`.
    pub left: f64,
}

impl TensorCutoffDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.both.max(self.left)
    }
}

pub fn tensor_cutoff(x: &TensorElement, omega: &Weight, theta: &Weight, joint: &JointGns) -> Result<TensorCutoffDeviations> {
    let cw = xi_omega(&joint.gns_phi, &joint.phi, omega)?;
    let ct = xi_omega(&joint.gns_psi, &joint.psi, theta)?;
    let root = |t: &CMat| crate::algebra::hermitian_func(t, |s| C64::from(s.max(0.0).sqrt()));
    let (rw, rt) = (root(&cw.t), root(&ct.t));
    let v = joint.lambda(x)?;
    let both_lhs = rw.kronecker(&rt) * &v;
    let both_rhs = joint.pi_product(x) * cw.xi.kronecker(&ct.xi);
    let hb = joint.gns_psi.dim_h();
    let left_lhs = rw.kronecker(&CMat::identity(hb, hb)) * &v;
    let f: Vec<CVec> = joint.gns_phi.pi_basis().iter().map(|p| p * &cw.xi).collect();
    let g: Vec<CVec> = joint.right().basis().iter().map(|b| joint.gns_psi.lambda(b)).collect();
    let left_rhs = JointGns::expand(x, &f, &g);
    Ok(TensorCutoffDeviations {
        both: max_abs(&(both_lhs - both_rhs)),
        left: max_abs(&(left_lhs - left_rhs)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FubiniDeviations {
    /// `φ((ι⊗ψ)(x)) = (φ⊗ψ)(x)`.
    pub plain: f64,
    /// `φ((ι⊗aψa*)(x)) = (φ⊗ψ)((1⊗a*) x (1⊗a))`.
    pub twisted: f64,
}

impl FubiniDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.plain.max(self.twisted)
    }
}

pub fn tensor_fubini(x: &TensorElement, phi: &Weight, psi: &Weight, a: &Element) -> Result<FubiniDeviations> {
    let product = tensor_weight(phi, psi);
    let plain = (phi.eval(&slice_phi(x, psi)?)? - product.eval(x.element())?).norm();
    let twisted_psi = Weight::new(psi.algebra(), psi.as_functional().sandwich(a, a).representative().hermitian_part())?;
    let lhs = phi.eval(&slice_phi(x, &twisted_psi)?)?;
    let moved = x.right_factor_mul(&a.adjoint()).mul_right_factor(a);
    let rhs = product.eval(moved.element())?;
    Ok(FubiniDeviations { plain, twisted: (lhs - rhs).norm() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisExpansion {
    /// `q_i = (ι⊗ω_{Λ_ψ(y), e_i})(x)`.
    pub q: Vec<Element>,
    /// `Σ‖Λ_φ(q_i)‖²` against `‖(Λ_φ⊗Λ_ψ)(x(1⊗y))‖²`.
    pub sum_of_squares: f64,
    /// `(Λ_φ⊗Λ_ψ)(x(1⊗y)) = Σ Λ_φ(q_i)⊗e_i`.
    pub expansion: f64,
}

impl BasisExpansion {
    pub fn max_deviation(&self) -> f64 {
        self.sum_of_squares.max(self.expansion)
    }
}

/// `basis` holds an orthonormal basis of `H_ψ` as columns.
pub fn basis_expansion(x: &TensorElement, y: &Element, joint: &JointGns, basis: &CMat) -> Result<BasisExpansion> {
    let hb = joint.gns_psi.dim_h();
    if basis.shape() != (hb, hb) {
        return Err(Error::Shape(format!("basis must be {hb}x{hb}")));
    }
    let ly = joint.gns_psi.lambda(y);
    let mut q = Vec::with_capacity(hb);
    let mut expansion = CVec::zeros(joint.u.ncols());
    let mut squares = 0.0;
    for i in 0..hb {
        let e = basis.column(i).into_owned();
        let w = joint.gns_psi.vector_functional(&ly, &e);
        let qi = crate::slice::slice_right(x, w.representative())?;
        let lq = joint.gns_phi.lambda(&qi);
        squares += lq.norm_squared();
        expansion += lq.kronecker(&e);
        q.push(qi);
    }
    let target = joint.lambda(&x.mul_right_factor(y))?;
    let moved = x.mul_right_factor(y);
    let full = joint.product.eval(moved.adjoint().mul(&moved)?.element())?;
    Ok(BasisExpansion {
        q,
        sum_of_squares: (C64::from(squares) - full).norm(),
        expansion: max_abs(&(target - expansion)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelInvarianceDeviations {
    /// `(φ⊗ψ)((α⊗β)(x)) = λν (φ⊗ψ)(x)`.
    pub value: f64,
    /// `(Λ_φ⊗Λ_ψ)((α⊗β)(x)) = (λν)^{1/2} (U⊗V)(Λ_φ⊗Λ_ψ)(x)`.
    pub vector: f64,
}

impl RelInvarianceDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.value.max(self.vector)
    }
}

pub fn tensor_rel_invariance(
    joint: &JointGns,
    alpha: &Automorphism,
    lambda: f64,
    beta: &Automorphism,
    nu: f64,
    x: &TensorElement,
) -> Result<RelInvarianceDeviations> {
    let (ma, mb) = (alpha.coord_matrix(), beta.coord_matrix());
    let ua = lift_automorphism(&joint.gns_phi, &joint.phi, &ma, Some(lambda))?;
    let vb = lift_automorphism(&joint.gns_psi, &joint.psi, &mb, Some(nu))?;
    let moved = TensorElement::from_coord_matrix(x.left(), x.right(), &(&ma * x.coord_matrix() * mb.transpose()))?;
    let value = (joint.product.eval(moved.element())? - joint.product.eval(x.element())? * (lambda * nu)).norm();
    let lhs = joint.lambda(&moved)?;
    let rhs = ua.u.kronecker(&vb.u) * joint.lambda(x)? * C64::from((lambda * nu).sqrt());
    Ok(RelInvarianceDeviations { value, vector: max_abs(&(lhs - rhs)) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmsTensorReport {
    /// `∇_{φ⊗ψ} = U(∇⊗∇′)U*`.
    pub nabla: f64,
    /// `J_{φ⊗ψ} = U(J⊗J′)U*`.
    pub conjugation: f64,
    /// `σ^{φ⊗ψ}_t = σ_t⊗σ′_t` on probes.
    pub group: f64,
    /// `(Λ_φ⊗Λ_ψ)(x(1⊗a)) = (1⊗Jπ_ψ(σ′_{i/2}(a))*J)(Λ_φ⊗Λ_ψ)(x)`.
    pub module: f64,
    /// Sorted spectrum of `∇_{φ⊗ψ}` against sorted pairwise products.
    pub spectrum: f64,
}

impl KmsTensorReport {
    pub fn max_deviation(&self) -> f64 {
        self.nabla.max(self.conjugation).max(self.group).max(self.module).max(self.spectrum)
    }
}

pub struct FactorModular {
    pub modular: ModularTriple,
    pub sigma: OneParamGroup,
}

fn factor(phi: &Weight, gns: &GnsTriple) -> Result<FactorModular> {
    Ok(FactorModular { modular: modular_objects(phi, gns)?, sigma: modular_group_of(phi)? })
}

pub fn kms_tensor(joint: &JointGns, probes: &[(TensorElement, Element)], t_grid: &[f64]) -> Result<KmsTensorReport> {
    let fa = factor(&joint.phi, &joint.gns_phi)?;
    let fb = factor(&joint.psi, &joint.gns_psi)?;
    let fj = factor(&joint.product, &joint.gns_joint)?;
    let u = &joint.u;
    let nabla = max_abs(&(&fj.modular.nabla - u * fa.modular.nabla.kronecker(&fb.modular.nabla) * u.adjoint()));
    let jj = fa.modular.j.kron(&fb.modular.j).unitary_conjugate(u);
    let conjugation = max_abs(&(fj.modular.j.matrix() - jj.matrix()));
    let product_group = fa.sigma.tensor(&fb.sigma);
    let mut group: f64 = 0.0;
    let mut module: f64 = 0.0;
    for (x, a) in probes {
        for &t in t_grid {
            group = group.max(fj.sigma.act(t, x.element()).max_abs_diff(&product_group.act(t, x.element())));
        }
        let half = fb.sigma.analytic_ext(I * 0.5, a);
        let op = fb.modular.j.conjugate_linear(&joint.gns_psi.pi(&half).adjoint());
        let ha = joint.gns_phi.dim_h();
        let lhs = joint.lambda(&x.mul_right_factor(a))?;
        let rhs = CMat::identity(ha, ha).kronecker(&op) * joint.lambda(x)?;
        module = module.max(max_abs(&(lhs - rhs)));
    }
    let mut products: Vec<f64> = fa
        .modular
        .spectrum()
        .iter()
        .flat_map(|s| fb.modular.spectrum().into_iter().map(move |t| s * t))
        .collect();
    products.sort_by(f64::total_cmp);
    let direct = hermitian_eigh(&fj.modular.nabla).0;
    let spectrum = if direct.len() == products.len() {
        direct.iter().zip(&products).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(KmsTensorReport { nabla, conjugation, group, module, spectrum })
}

/// `|(Λ_ω⊗Λ_θ)(x) − (π_ω⊗π_θ)(x)(ξ_ω⊗ξ_θ)|` with `ξ = Λ(1)`.
pub fn state_case(joint: &JointGns, x: &TensorElement) -> Result<f64> {
    let xa = joint.gns_phi.lambda(&joint.left().identity());
    let xb = joint.gns_psi.lambda(&joint.right().identity());
    let rhs = joint.pi_product(x) * xa.kronecker(&xb);
    Ok(max_abs(&(joint.lambda(x)? - rhs)))
}
