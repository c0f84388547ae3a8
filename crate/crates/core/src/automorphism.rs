//! *-automorphisms `a ↦ w · perm(a) · w*` of a finite-dimensional algebra.

use crate::algebra::{CMat, Element, FdAlgebra, DEFAULT_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Automorphism {
    algebra: FdAlgebra,
    /// Target block `j` receives source block `perm[j]`.
    perm: Vec<usize>,
    unitary: Element,
}

impl Automorphism {
    pub fn identity(algebra: &FdAlgebra) -> Self {
        Self {
            algebra: algebra.clone(),
            perm: (0..algebra.num_blocks()).collect(),
            unitary: algebra.identity(),
        }
    }

    pub fn inner(algebra: &FdAlgebra, w: Element) -> Result<Self> {
        Self::new(algebra, (0..algebra.num_blocks()).collect(), w)
    }

    pub fn block_permutation(algebra: &FdAlgebra, perm: Vec<usize>) -> Result<Self> {
        Self::new(algebra, perm, algebra.identity())
    }

    pub fn new(algebra: &FdAlgebra, perm: Vec<usize>, w: Element) -> Result<Self> {
        algebra.check(&w)?;
        let k = algebra.num_blocks();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Domain(format!("{perm:?} is not a permutation of {k} blocks")));
        }
        let dims = algebra.block_dims();
        if perm.iter().enumerate().any(|(j, &p)| dims[j] != dims[p]) {
            return Err(Error::Domain("block permutation must preserve block sizes".into()));
        }
        let defect = (w.adjoint() * &w).max_abs_diff(&algebra.identity());
        if defect > DEFAULT_TOL * 100.0 {
            return Err(Error::Domain(format!("implementing element is not unitary ({defect:e})")));
        }
        Ok(Self { algebra: algebra.clone(), perm, unitary: w })
    }

    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn apply(&self, a: &Element) -> Element {
        let permuted = Element::new(self.perm.iter().map(|&p| a.block(p).clone()).collect())
            .expect("permutation keeps shapes");
        &self.unitary * permuted * self.unitary.adjoint()
    }

    /// The map on matrix-unit coordinates.
    pub fn coord_matrix(&self) -> CMat {
        let alg = &self.algebra;
        let d = alg.coord_dim();
        let mut m = CMat::zeros(d, d);
        for (col, e) in alg.basis().iter().enumerate() {
            m.set_column(col, &alg.coords(&self.apply(e)));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_element, random_unitary_element};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inner_automorphism_is_multiplicative() {
        let alg = FdAlgebra::new(&[2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_unitary_element(&alg, &mut rng);
        let aut = Automorphism::inner(&alg, w).unwrap();
        let a = random_element(&alg, &mut rng);
        let b = random_element(&alg, &mut rng);
        assert!(aut.apply(&(&a * &b)).max_abs_diff(&(aut.apply(&a) * aut.apply(&b))) < 1e-12);
        let via_coords = aut.coord_matrix() * alg.coords(&a);
        assert!(alg.from_coords(&via_coords).max_abs_diff(&aut.apply(&a)) < 1e-12);
    }

    #[test]
    fn block_swap_requires_equal_sizes() {
        let alg = FdAlgebra::new(&[2, 2]).unwrap();
        let swap = Automorphism::block_permutation(&alg, vec![1, 0]).unwrap();
        let a = alg.matrix_unit(0, 0, 1);
        assert_eq!(swap.apply(&a), alg.matrix_unit(1, 0, 1));
        let uneven = FdAlgebra::new(&[2, 3]).unwrap();
        assert!(Automorphism::block_permutation(&uneven, vec![1, 0]).is_err());
        assert!(Automorphism::block_permutation(&alg, vec![0, 0]).is_err());
    }
}
