//! GNS construction, cut-off operators, the bicommutant lift and lifted
//! automorphisms.
//!
//! The inner product on `H` is linear in the first argument: `⟨u, v⟩ = v* u`.

use crate::algebra::{
    commutant, hermitian_eigh, max_abs, op_norm, pinv, CMat, CVec, Element, FdAlgebra, OperatorSpan,
    C64, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::weights::{check_dominated, Functional, Weight};

/// Relative cut for dropping Gram eigenvalues.
pub const GRAM_CUT: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct GnsTriple {
    algebra: FdAlgebra,
    dim_h: usize,
    /// `dim_H × d`, with `Λ(a) = lambda · coords(a)`.
    lambda: CMat,
    /// Right inverse of `lambda`.
    lambda_pinv: CMat,
    pi_basis: Vec<CMat>,
    gram: CMat,
}

pub fn inner(u: &CVec, v: &CVec) -> C64 {
    v.dotc(u)
}

/// `G[β, α] = φ(e_β* e_α)`, from `e_{q'p} e_{pq} = e_{q'q}` within a block.
pub fn gram_matrix(phi: &Weight) -> CMat {
    let alg = phi.algebra();
    let d = alg.coord_dim();
    let mut g = CMat::zeros(d, d);
    for (j, &n) in alg.block_dims().iter().enumerate() {
        let dj = phi.density().block(j);
        for p in 0..n {
            for q in 0..n {
                for q2 in 0..n {
                    g[(alg.coord_index(j, p, q2), alg.coord_index(j, p, q))] = dj[(q, q2)];
                }
            }
        }
    }
    g
}

/// Same matrix by multiplying basis elements; used as an oracle.
pub fn gram_matrix_by_products(phi: &Weight) -> CMat {
    let basis = phi.algebra().basis();
    let d = basis.len();
    CMat::from_fn(d, d, |b, a| phi.at(&(basis[b].adjoint() * &basis[a])))
}

pub fn gns_construct(phi: &Weight) -> Result<GnsTriple> {
    if phi.is_zero() {
        return Err(Error::DegenerateWeight);
    }
    let alg = phi.algebra().clone();
    let gram = gram_matrix(phi);
    let (vals, v) = hermitian_eigh(&gram);
    let top = vals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > GRAM_CUT * top).collect();
    let dim_h = keep.len();
    let d = alg.coord_dim();
    let lambda = CMat::from_fn(dim_h, d, |r, c| v[(c, keep[r])].conj() * vals[keep[r]].sqrt());
    let lambda_pinv = CMat::from_fn(d, dim_h, |r, c| v[(r, keep[c])] / vals[keep[c]].sqrt());
    let pi_basis = alg
        .basis()
        .iter()
        .map(|e| &lambda * alg.left_mul_matrix(e) * &lambda_pinv)
        .collect();
    Ok(GnsTriple { algebra: alg, dim_h, lambda, lambda_pinv, pi_basis, gram })
}

impl GnsTriple {
    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn lambda_matrix(&self) -> &CMat {
        &self.lambda
    }

    pub fn lambda_pinv(&self) -> &CMat {
        &self.lambda_pinv
    }

    pub fn pi_basis(&self) -> &[CMat] {
        &self.pi_basis
    }

    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    pub fn lambda(&self, a: &Element) -> CVec {
        &self.lambda * self.algebra.coords(a)
    }

    pub fn pi(&self, a: &Element) -> CMat {
        let c = self.algebra.coords(a);
        let mut m = CMat::zeros(self.dim_h, self.dim_h);
        for (k, p) in self.pi_basis.iter().enumerate() {
            if c[k].norm() != 0.0 {
                m += p * c[k];
            }
        }
        m
    }

    /// `x ↦ ⟨π(x) v, w⟩`.
    pub fn vector_functional(&self, v: &CVec, w: &CVec) -> Functional {
        let alg = &self.algebra;
        let mut rep = alg.zero().into_blocks();
        for (idx, p) in self.pi_basis.iter().enumerate() {
            let (j, r, s) = alg.coord_triple(idx);
            rep[j][(s, r)] = w.dotc(&(p * v));
        }
        Functional::new(alg, Element::new(rep).expect("nonempty")).expect("shapes match")
    }

    /// Linear map on algebra coordinates induced by an operator parametrization.
    pub fn lambda_of_coords(&self, c: &CVec) -> CVec {
        &self.lambda * c
    }

    pub fn invariant_deviations(&self, phi: &Weight) -> GnsDeviations {
        let alg = &self.algebra;
        let basis = alg.basis();
        let gram = max_abs(&(self.lambda.adjoint() * &self.lambda - gram_matrix_by_products(phi)));
        let mut homomorphism: f64 = 0.0;
        let mut module: f64 = 0.0;
        let mut adjoint: f64 = 0.0;
        for (i, a) in basis.iter().enumerate() {
            adjoint = adjoint.max(max_abs(&(self.pi(&a.adjoint()) - self.pi_basis[i].adjoint())));
            for (j, b) in basis.iter().enumerate() {
                let ab = a * b;
                homomorphism =
                    homomorphism.max(max_abs(&(self.pi(&ab) - &self.pi_basis[i] * &self.pi_basis[j])));
                module = module.max(max_abs(&(&self.pi_basis[i] * self.lambda(b) - self.lambda(&ab))));
            }
        }
        let unital = max_abs(&(self.pi(&alg.identity()) - CMat::identity(self.dim_h, self.dim_h)));
        let rank = crate::algebra::column_space(&self.lambda, 1e-10).ncols();
        GnsDeviations {
            gram,
            homomorphism,
            adjoint,
            module,
            unital,
            rank,
            dim_h: self.dim_h,
            expected_dim: phi.expected_gns_dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnsDeviations {
    pub gram: f64,
    pub homomorphism: f64,
    pub adjoint: f64,
    pub module: f64,
    pub unital: f64,
    pub rank: usize,
    pub dim_h: usize,
    pub expected_dim: usize,
}

impl GnsDeviations {
    pub fn max_deviation(&self) -> f64 {
        self.gram.max(self.homomorphism).max(self.adjoint).max(self.module).max(self.unital)
    }

    pub fn dims_ok(&self) -> bool {
        self.rank == self.dim_h && self.dim_h == self.expected_dim
    }
}

#[derive(Debug, Clone)]
pub struct CutoffData {
    pub omega: Weight,
    pub t: CMat,
    pub xi: CVec,
}

fn domination_tol(phi: &Weight) -> f64 {
    DEFAULT_TOL * (1.0 + phi.density().norm())
}

/// Solves `L* T L = G_ω` through the right inverse of `L`.
pub fn t_omega(gns: &GnsTriple, phi: &Weight, omega: &Weight) -> Result<CMat> {
    check_dominated(omega, phi, domination_tol(phi))?;
    let g_omega = gram_matrix(omega);
    let t = gns.lambda_pinv.adjoint() * g_omega * &gns.lambda_pinv;
    Ok((&t + t.adjoint()) * C64::from(0.5))
}

/// `T_ω` and the minimal-norm `ξ_ω` with `T_ω^{1/2} Λ(a) = π(a) ξ_ω`.
pub fn xi_omega(gns: &GnsTriple, phi: &Weight, omega: &Weight) -> Result<CutoffData> {
    let t = t_omega(gns, phi, omega)?;
    let root = crate::algebra::hermitian_func(&t, |x| C64::from(x.max(0.0).sqrt()));
    let h = gns.dim_h;
    let d = gns.pi_basis.len();
    let mut stacked = CMat::zeros(h * d, h);
    let mut rhs = CVec::zeros(h * d);
    for (a, p) in gns.pi_basis.iter().enumerate() {
        stacked.view_mut((a * h, 0), (h, h)).copy_from(p);
        rhs.rows_mut(a * h, h).copy_from(&(&root * gns.lambda.column(a)));
    }
    let xi = pinv(&stacked, 1e-12) * &rhs;
    let residual = max_abs(&(&stacked * &xi - &rhs));
    let tol = 1e-9;
    if residual > tol {
        return Err(Error::Inconsistent { residual, tolerance: tol });
    }
    Ok(CutoffData { omega: omega.clone(), t, xi })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffDeviations {
    pub commute: f64,
    pub pairing: f64,
    pub xi: f64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
}

impl CutoffDeviations {
    pub fn max_deviation(&self) -> f64 {
        let spec = (-self.spectrum_min).max(self.spectrum_max - 1.0).max(0.0);
        self.commute.max(self.pairing).max(self.xi).max(spec)
    }
}

pub fn cutoff_deviations(gns: &GnsTriple, data: &CutoffData) -> CutoffDeviations {
    let alg = &gns.algebra;
    let basis = alg.basis();
    let t = &data.t;
    let root = crate::algebra::hermitian_func(t, |x| C64::from(x.max(0.0).sqrt()));
    let mut commute: f64 = 0.0;
    let mut xi: f64 = 0.0;
    for (i, p) in gns.pi_basis.iter().enumerate() {
        commute = commute.max(max_abs(&(t * p - p * t)));
        xi = xi.max(max_abs(&(&root * gns.lambda.column(i) - p * &data.xi)));
    }
    let mut pairing: f64 = 0.0;
    for (a, ea) in basis.iter().enumerate() {
        let ta = t * gns.lambda.column(a);
        for (b, eb) in basis.iter().enumerate() {
            let lhs = gns.lambda.column(b).dotc(&ta);
            let rhs = data.omega.at(&(eb.adjoint() * ea));
            pairing = pairing.max((lhs - rhs).norm());
        }
    }
    let (vals, _) = hermitian_eigh(t);
    CutoffDeviations {
        commute,
        pairing,
        xi,
        spectrum_min: vals.first().copied().unwrap_or(0.0),
        spectrum_max: vals.last().copied().unwrap_or(0.0),
    }
}

/// The bicommutant of `π(A)` together with the pulled-back weight `φ̃`.
#[derive(Debug, Clone)]
pub struct WstarLift {
    pub bicommutant: OperatorSpan,
    pub pi_span: OperatorSpan,
    pub span_distance: f64,
    /// Blocks on which `π` vanishes.
    pub kernel_blocks: Vec<usize>,
    /// `max_α |φ̃(π(e_α)) − φ(e_α)|`.
    pub lift_deviation: f64,
    phi: Weight,
    pullback: CMat,
}

impl WstarLift {
    /// `φ̃(X)` for `X` in `π(A)`, via the minimal-norm preimage.
    pub fn lifted_weight(&self, x: &CMat) -> C64 {
        let v = CVec::from_column_slice(x.as_slice());
        let c = &self.pullback * v;
        self.phi.at(&self.phi.algebra().from_coords(&c))
    }
}

pub fn wstar_lift(gns: &GnsTriple, phi: &Weight) -> WstarLift {
    let h = gns.dim_h;
    let pi_span = OperatorSpan::from_matrices(&gns.pi_basis);
    let comm = commutant(&gns.pi_basis, h);
    let bicommutant = commutant(&comm.basis, h);
    let span_distance = bicommutant.distance(&pi_span, h);
    let alg = &gns.algebra;
    let kernel_blocks = (0..alg.num_blocks())
        .filter(|&j| {
            let n = alg.block_dims()[j];
            (0..n).all(|p| {
                (0..n).all(|q| op_norm(&gns.pi_basis[alg.coord_index(j, p, q)]) <= 1e-12)
            })
        })
        .collect();
    let stacked = CMat::from_fn(h * h, gns.pi_basis.len(), |r, c| gns.pi_basis[c].as_slice()[r]);
    let pullback = pinv(&stacked, 1e-10);
    let mut lift = WstarLift {
        bicommutant,
        pi_span,
        span_distance,
        kernel_blocks,
        lift_deviation: 0.0,
        phi: phi.clone(),
        pullback,
    };
    lift.lift_deviation = alg
        .basis()
        .iter()
        .zip(&gns.pi_basis)
        .map(|(e, p)| (lift.lifted_weight(p) - phi.at(e)).norm())
        .fold(0.0, f64::max);
    lift
}

#[derive(Debug, Clone)]
pub struct LiftedAutomorphism {
    pub u: CMat,
    pub r: f64,
    pub unitarity: f64,
    pub covariance: f64,
}

/// Multiplicativity and adjoint defect of a coordinate map.
pub fn automorphism_defect(alg: &FdAlgebra, alpha: &CMat) -> f64 {
    let basis = alg.basis();
    let images: Vec<Element> = (0..basis.len()).map(|k| alg.from_coords(&alpha.column(k).into_owned())).collect();
    let apply = |a: &Element| alg.from_coords(&(alpha * alg.coords(a)));
    let mut defect: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        defect = defect.max(apply(&a.adjoint()).max_abs_diff(&images[i].adjoint()));
        for (j, b) in basis.iter().enumerate() {
            defect = defect.max(apply(&(a * b)).max_abs_diff(&(&images[i] * &images[j])));
        }
    }
    let rank = crate::algebra::column_space(alpha, 1e-10).ncols();
    if rank < basis.len() {
        defect = defect.max(1.0);
    }
    defect
}

/// `r` estimated as the mean of `φ(α(e))/φ(e)` over diagonal units with `φ(e) > 0`.
pub fn estimate_invariance_ratio(phi: &Weight, alpha: &CMat) -> f64 {
    let alg = phi.algebra();
    let mut acc = 0.0;
    let mut count = 0usize;
    for (j, &n) in alg.block_dims().iter().enumerate() {
        for p in 0..n {
            let e = alg.matrix_unit(j, p, p);
            let base = phi.at(&e).re;
            if base > 1e-12 {
                let image = alg.from_coords(&(alpha * alg.coords(&e)));
                acc += phi.at(&image).re / base;
                count += 1;
            }
        }
    }
    if count == 0 {
        1.0
    } else {
        acc / count as f64
    }
}

/// `max_α |φ(α(e_α)) − r φ(e_α)|`.
pub fn invariance_defect(phi: &Weight, alpha: &CMat, r: f64) -> f64 {
    let alg = phi.algebra();
    alg.basis()
        .iter()
        .map(|e| {
            let image = alg.from_coords(&(alpha * alg.coords(e)));
            (phi.at(&image) - phi.at(e) * r).norm()
        })
        .fold(0.0, f64::max)
}

/// `U Λ(a) = r^{-1/2} Λ(α(a))`; `r = None` estimates it first.
pub fn lift_automorphism(
    gns: &GnsTriple,
    phi: &Weight,
    alpha: &CMat,
    r: Option<f64>,
) -> Result<LiftedAutomorphism> {
    let alg = &gns.algebra;
    let d = alg.coord_dim();
    if alpha.shape() != (d, d) {
        return Err(Error::Shape(format!("automorphism matrix must be {d}x{d}")));
    }
    let defect = automorphism_defect(alg, alpha);
    if defect > 1e-9 {
        return Err(Error::NotAutomorphism { deviation: defect });
    }
    let r = r.unwrap_or_else(|| estimate_invariance_ratio(phi, alpha));
    if !(r > 0.0) {
        return Err(Error::Domain(format!("invariance ratio must be positive, got {r}")));
    }
    let deviation = invariance_defect(phi, alpha, r);
    if deviation > 1e-9 {
        return Err(Error::Invariance { deviation });
    }
    let u = (&gns.lambda * alpha * &gns.lambda_pinv) * C64::from(r.powf(-0.5));
    let h = gns.dim_h;
    let unitarity = max_abs(&(u.adjoint() * &u - CMat::identity(h, h)));
    let mut covariance: f64 = 0.0;
    for (k, p) in gns.pi_basis.iter().enumerate() {
        let image = alg.from_coords(&alpha.column(k).into_owned());
        covariance = covariance.max(max_abs(&(&u * p * u.adjoint() - gns.pi(&image))));
    }
    Ok(LiftedAutomorphism { u, r, unitarity, covariance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::Automorphism;
    use crate::random::{random_density, random_dominated, random_element, random_unitary_element};
    use crate::weights::gphi_chain;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_weight(alg: &FdAlgebra, blocks: &[&[f64]]) -> Weight {
        let mats = blocks
            .iter()
            .map(|d| CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| C64::from(x)))))
            .collect();
        Weight::new(alg, alg.from_blocks(mats).unwrap()).unwrap()
    }

    #[test]
    fn dims_of_examples() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        assert_eq!(gns_construct(&Weight::trace(&m2)).unwrap().dim_h(), 4);
        assert_eq!(gns_construct(&diag_weight(&m2, &[&[1.0, 0.0]])).unwrap().dim_h(), 2);
        let m23 = FdAlgebra::new(&[2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = Weight::new(&m23, random_density(&m23, true, &mut rng)).unwrap();
        assert_eq!(gns_construct(&phi).unwrap().dim_h(), 13);
        let zero = Weight::new(&m2, m2.zero()).unwrap();
        assert!(matches!(gns_construct(&zero), Err(Error::DegenerateWeight)));
    }

    #[test]
    fn invariants_hold_for_non_faithful() {
        let alg = FdAlgebra::new(&[2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let phi = Weight::new(&alg, random_density(&alg, false, &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let dev = gns.invariant_deviations(&phi);
            assert!(dev.max_deviation() <= 1e-10, "{dev:?}");
            assert!(dev.dims_ok(), "{dev:?}");
        }
    }

    #[test]
    fn scalar_and_zero_cutoffs() {
        let alg = FdAlgebra::new(&[2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = Weight::new(&alg, random_density(&alg, true, &mut rng)).unwrap();
        let gns = gns_construct(&phi).unwrap();
        let h = gns.dim_h();
        let t = t_omega(&gns, &phi, &phi.scaled(0.3)).unwrap();
        assert!(max_abs(&(t - CMat::identity(h, h) * C64::from(0.3))) < 1e-12);
        let zero = Weight::new(&alg, alg.zero()).unwrap();
        let data = xi_omega(&gns, &phi, &zero).unwrap();
        assert!(max_abs(&data.t) < 1e-14 && data.xi.norm() < 1e-14);
        let full = xi_omega(&gns, &phi, &phi).unwrap();
        assert!((full.xi - gns.lambda(&alg.identity())).norm() < 1e-10);
        assert!(matches!(t_omega(&gns, &phi, &phi.scaled(1.5)), Err(Error::NotDominated { .. })));
    }

    #[test]
    fn tracial_cutoff_is_right_multiplication() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let phi = Weight::trace(&m2);
        let gns = gns_construct(&phi).unwrap();
        let (s1, s2) = (0.25, 0.8);
        let omega = diag_weight(&m2, &[&[s1, s2]]);
        let data = xi_omega(&gns, &phi, &omega).unwrap();
        let vals = hermitian_eigh(&data.t).0;
        for (v, e) in vals.iter().zip([s1, s1, s2, s2]) {
            assert!((v - e).abs() < 1e-12);
        }
        // closed form: T Λ(a) = Λ(aσ)
        let sigma = omega.density().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_element(&m2, &mut rng);
        assert!((&data.t * gns.lambda(&a) - gns.lambda(&(&a * &sigma))).norm() < 1e-12);
        let root = sigma.sqrt_psd().unwrap();
        let xi_expected = gns.lambda(&root);
        assert!((data.xi - xi_expected).norm() < 1e-10);
    }

    #[test]
    fn canonical_chain_converges_to_one() {
        let alg = FdAlgebra::new(&[2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = Weight::new(&alg, random_density(&alg, false, &mut rng)).unwrap();
        let gns = gns_construct(&phi).unwrap();
        let h = gns.dim_h();
        for (k, omega) in gphi_chain(&phi, 8).iter().enumerate() {
            let t = t_omega(&gns, &phi, omega).unwrap();
            let dev = op_norm(&(t - CMat::identity(h, h)));
            assert!((dev - 1.0 / (k as f64 + 2.0)).abs() <= 1e-10);
        }
    }

    #[test]
    fn lift_examples() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let phi = Weight::trace(&m2);
        let gns = gns_construct(&phi).unwrap();
        let lift = wstar_lift(&gns, &phi);
        assert_eq!(lift.bicommutant.dim, 4);
        assert!(lift.span_distance <= 1e-9 && lift.lift_deviation <= 1e-12);
        assert!(lift.kernel_blocks.is_empty());

        let m22 = FdAlgebra::new(&[2, 2]).unwrap();
        let psi = diag_weight(&m22, &[&[1.0, 0.0], &[0.0, 0.0]]);
        let gns = gns_construct(&psi).unwrap();
        let lift = wstar_lift(&gns, &psi);
        assert_eq!(lift.bicommutant.dim, 4);
        assert_eq!(lift.kernel_blocks, vec![1]);
        assert!(lift.lift_deviation <= 1e-12);
    }

    #[test]
    fn commutant_of_tracial_m2_has_dimension_four() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let gns = gns_construct(&Weight::trace(&m2)).unwrap();
        assert_eq!(commutant(gns.pi_basis(), gns.dim_h()).dim, 4);
    }

    #[test]
    fn lift_automorphism_examples() {
        let m2 = FdAlgebra::new(&[2]).unwrap();
        let phi = Weight::trace(&m2);
        let gns = gns_construct(&phi).unwrap();
        let id = Automorphism::identity(&m2).coord_matrix();
        let lifted = lift_automorphism(&gns, &phi, &id, Some(1.0)).unwrap();
        assert!(max_abs(&(lifted.u - CMat::identity(4, 4))) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_unitary_element(&m2, &mut rng);
        let ad = Automorphism::inner(&m2, w).unwrap().coord_matrix();
        let lifted = lift_automorphism(&gns, &phi, &ad, None).unwrap();
        assert!(lifted.unitarity <= 1e-9 && lifted.covariance <= 1e-9);
        assert!((lifted.r - 1.0).abs() < 1e-12);

        let m22 = FdAlgebra::new(&[2, 2]).unwrap();
        let psi = Weight::new(&m22, m22.identity().map_blocks(|b| b.clone()).scale_real(1.0))
            .unwrap();
        let psi = Weight::new(
            &m22,
            m22.from_blocks(vec![psi.density().block(0).clone(), psi.density().block(1) * C64::from(2.0)])
                .unwrap(),
        )
        .unwrap();
        let gns = gns_construct(&psi).unwrap();
        let swap = Automorphism::block_permutation(&m22, vec![1, 0]).unwrap().coord_matrix();
        assert!(matches!(lift_automorphism(&gns, &psi, &swap, None), Err(Error::Invariance { .. })));
        let not_aut = CMat::identity(8, 8) * C64::from(2.0);
        assert!(matches!(
            lift_automorphism(&gns, &psi, &not_aut, Some(1.0)),
            Err(Error::NotAutomorphism { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cutoff_invariants(seed in any::<u64>(), faithful in any::<bool>()) {
            let alg = FdAlgebra::new(&[2, 3]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&alg, random_density(&alg, faithful, &mut rng)).unwrap();
            let omega = Weight::new(&alg, random_dominated(phi.density(), &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let data = xi_omega(&gns, &phi, &omega).unwrap();
            let dev = cutoff_deviations(&gns, &data);
            prop_assert!(dev.max_deviation() <= 1e-9, "{:?}", dev);
        }

        #[test]
        fn lift_consistency_on_random_elements(seed in any::<u64>()) {
            let alg = FdAlgebra::new(&[1, 2]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&alg, random_density(&alg, false, &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let lift = wstar_lift(&gns, &phi);
            prop_assert!(lift.span_distance <= 1e-9);
            for _ in 0..20 {
                let a = random_element(&alg, &mut rng);
                prop_assert!((lift.lifted_weight(&gns.pi(&a)) - phi.at(&a)).norm() <= 1e-9);
            }
        }

        #[test]
        fn vector_functional_matches_inner_product(seed in any::<u64>()) {
            let alg = FdAlgebra::new(&[2, 1]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = Weight::new(&alg, random_density(&alg, true, &mut rng)).unwrap();
            let gns = gns_construct(&phi).unwrap();
            let v = crate::random::gaussian_vector(gns.dim_h(), &mut rng);
            let w = crate::random::gaussian_vector(gns.dim_h(), &mut rng);
            let f = gns.vector_functional(&v, &w);
            let x = random_element(&alg, &mut rng);
            prop_assert!((f.at(&x) - inner(&(gns.pi(&x) * &v), &w)).norm() <= 1e-12);
        }
    }
}
