//! Weights `φ(x) = Σ_j tr(D_j x_j)` and bounded functionals `θ(x) = Σ_j tr(T_j x_j)`.

use crate::algebra::{hermitian_eigh, trace_norm, CMat, Element, FdAlgebra, C64, DEFAULT_TOL, ONE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    algebra: FdAlgebra,
    density: Element,
}

impl Weight {
    pub fn new(algebra: &FdAlgebra, density: Element) -> Result<Self> {
        algebra.check(&density)?;
        let tol = DEFAULT_TOL * (1.0 + density.norm());
        if !density.is_hermitian(tol) {
            return Err(Error::Domain("density is not Hermitian".into()));
        }
        let density = density.hermitian_part();
        let m = density.min_eigenvalue();
        if m < -tol {
            return Err(Error::Domain(format!("density has negative eigenvalue {m:e}")));
        }
        Ok(Self { algebra: algebra.clone(), density })
    }

    pub fn trace(algebra: &FdAlgebra) -> Self {
        Self { algebra: algebra.clone(), density: algebra.identity() }
    }

    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn density(&self) -> &Element {
        &self.density
    }

    pub fn eval(&self, a: &Element) -> Result<C64> {
        self.algebra.check(a)?;
        Ok(self.at(a))
    }

    /// Unchecked evaluation; panics on a foreign element.
    pub fn at(&self, a: &Element) -> C64 {
        trace_pairing(&self.density, a)
    }

    pub fn is_zero(&self) -> bool {
        self.density.norm() == 0.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.density.min_eigenvalue()
    }

    pub fn faithful(&self, tol: f64) -> bool {
        self.min_eigenvalue() > tol
    }

    pub fn scaled(&self, c: f64) -> Weight {
        assert!(c >= 0.0, "weights scale by non-negative reals");
        Self { algebra: self.algebra.clone(), density: self.density.scale_real(c) }
    }

    /// Rank of each density block, with a relative eigenvalue cut.
    pub fn block_ranks(&self) -> Vec<usize> {
        let cut = 1e-12 * self.density.norm();
        self.density
            .blocks()
            .iter()
            .map(|b| hermitian_eigh(b).0.iter().filter(|&&v| v > cut).count())
            .collect()
    }

    /// Range projection of each density block.
    pub fn support(&self) -> Element {
        let cut = 1e-12 * self.density.norm();
        self.density.map_blocks(|b| {
            let (vals, u) = hermitian_eigh(b);
            let n = b.nrows();
            let mut p = CMat::zeros(n, n);
            for (k, &v) in vals.iter().enumerate() {
                if v > cut {
                    p += u.column(k) * u.column(k).adjoint();
                }
            }
            p
        })
    }

    /// `Σ_j n_j · rank(D_j)`.
    pub fn expected_gns_dim(&self) -> usize {
        self.algebra
            .block_dims()
            .iter()
            .zip(self.block_ranks())
            .map(|(n, r)| n * r)
            .sum()
    }

    pub fn as_functional(&self) -> Functional {
        Functional { algebra: self.algebra.clone(), rep: self.density.clone() }
    }
}

/// `Σ_j tr(T_j a_j)`.
pub fn trace_pairing(t: &Element, a: &Element) -> C64 {
    assert!(t.same_shape(a), "trace pairing of mismatched elements");
    t.blocks()
        .iter()
        .zip(a.blocks())
        .map(|(tj, aj)| tj.component_mul(&aj.transpose()).sum())
        .sum()
}

/// `D_φ − D_ω ⪰ −tol` blockwise.
pub fn is_dominated(omega: &Weight, phi: &Weight, tol: f64) -> bool {
    phi.algebra == omega.algebra && (&phi.density - &omega.density).min_eigenvalue() >= -tol
}

pub fn check_dominated(omega: &Weight, phi: &Weight, tol: f64) -> Result<()> {
    phi.algebra.check(omega.density())?;
    let m = (&phi.density - &omega.density).min_eigenvalue();
    if m < -tol {
        return Err(Error::NotDominated { min_eigenvalue: m });
    }
    Ok(())
}

/// `ω_k = (k/(k+1)) φ`, `k = 1..=m`.
pub fn gphi_chain(phi: &Weight, m: usize) -> Vec<Weight> {
    (1..=m).map(|k| phi.scaled(k as f64 / (k as f64 + 1.0))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombesCertificate {
    pub sup: f64,
    pub exact: f64,
    pub gap: f64,
    /// `φ(x)/(m+1)`.
    pub bound: f64,
}

impl CombesCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.gap <= self.bound + tol
    }
}

pub fn combes_sup(phi: &Weight, x: &Element, m: usize) -> Result<CombesCertificate> {
    phi.algebra.check(x)?;
    if !x.is_positive(DEFAULT_TOL * (1.0 + x.norm())) {
        return Err(Error::Domain("Combes sup needs a positive element".into()));
    }
    if m == 0 {
        return Err(Error::Domain("chain length must be positive".into()));
    }
    let sup = gphi_chain(phi, m)
        .iter()
        .map(|w| w.at(x).re)
        .fold(f64::NEG_INFINITY, f64::max);
    let exact = phi.at(x).re;
    Ok(CombesCertificate { sup, exact, gap: (exact - sup).abs(), bound: exact / (m as f64 + 1.0) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    algebra: FdAlgebra,
    rep: Element,
}

impl Functional {
    pub fn new(algebra: &FdAlgebra, rep: Element) -> Result<Self> {
        algebra.check(&rep)?;
        Ok(Self { algebra: algebra.clone(), rep })
    }

    pub fn zero(algebra: &FdAlgebra) -> Self {
        Self { algebra: algebra.clone(), rep: algebra.zero() }
    }

    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn representative(&self) -> &Element {
        &self.rep
    }

    pub fn eval(&self, a: &Element) -> Result<C64> {
        self.algebra.check(a)?;
        Ok(self.at(a))
    }

    pub fn at(&self, a: &Element) -> C64 {
        trace_pairing(&self.rep, a)
    }

    /// Trace norm `Σ_j tr|T_j|`.
    pub fn norm(&self) -> f64 {
        self.rep.blocks().iter().map(trace_norm).sum()
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.rep.is_positive(tol)
    }

    pub fn to_weight(&self) -> Result<Weight> {
        Weight::new(&self.algebra, self.rep.clone())
    }

    /// `(aω)(x) = ω(xa)`.
    pub fn left_act(&self, a: &Element) -> Functional {
        Self { algebra: self.algebra.clone(), rep: a * &self.rep }
    }

    /// `(ωa)(x) = ω(ax)`.
    pub fn right_act(&self, a: &Element) -> Functional {
        Self { algebra: self.algebra.clone(), rep: &self.rep * a }
    }

    /// `(a ω b*)(x) = ω(b* x a)`.
    pub fn sandwich(&self, a: &Element, b: &Element) -> Functional {
        Self { algebra: self.algebra.clone(), rep: a * &self.rep * b.adjoint() }
    }

    /// `ω̄(x) = conj(ω(x*))`.
    pub fn conjugate(&self) -> Functional {
        Self { algebra: self.algebra.clone(), rep: self.rep.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Functional {
        Self { algebra: self.algebra.clone(), rep: self.rep.scale(c) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalAbs {
    /// `|θ|(a) = tr(|T*| a)`.
    pub abs: Weight,
    /// Partial isometry with `T = U |T|`.
    pub partial_isometry: Element,
}

pub fn functional_abs(theta: &Functional) -> FunctionalAbs {
    let mut left_abs = Vec::new();
    let mut isometry = Vec::new();
    for t in theta.rep.blocks() {
        let n = t.nrows();
        let (sv, u, v) = crate::algebra::singular_triples(t, 1e-13);
        let mut abs = CMat::zeros(n, n);
        let mut w = CMat::zeros(n, n);
        for (k, &s) in sv.iter().enumerate() {
            abs += u.column(k) * u.column(k).adjoint() * C64::from(s);
            w += u.column(k) * v.column(k).adjoint() * ONE;
        }
        left_abs.push((&abs + abs.adjoint()) * C64::from(0.5));
        isometry.push(w);
    }
    let abs = Weight::new(&theta.algebra, Element::new(left_abs).expect("nonempty"))
        .expect("|T*| is positive");
    FunctionalAbs { abs, partial_isometry: Element::new(isometry).expect("nonempty") }
}
