//! Seeded generators for elements, densities and unitaries.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{CMat, CVec, Element, FdAlgebra, C64};

/// Seed derivation so that every check gets its own reproducible stream.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a, stable across toolchains.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| gaussian_c64(rng))
}

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    loop {
        let v = gaussian_vector(n, rng);
        let nv = v.norm();
        if nv > 1e-8 {
            return v / C64::from(nv);
        }
    }
}

/// Haar-distributed unitary via QR with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let z = gaussian_matrix(n, n, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 { d / C64::from(d.norm()) } else { C64::from(1.0) };
        q.column_mut(k).iter_mut().for_each(|z| *z *= ph);
    }
    q
}

/// Entries of unit variance scaled by `1/√n` per block.
pub fn random_element<R: Rng + ?Sized>(alg: &FdAlgebra, rng: &mut R) -> Element {
    let blocks = alg
        .block_dims()
        .iter()
        .map(|&n| gaussian_matrix(n, n, rng) / C64::from((n as f64).sqrt()))
        .collect();
    alg.from_blocks(blocks).expect("shapes match")
}

pub fn random_hermitian<R: Rng + ?Sized>(alg: &FdAlgebra, rng: &mut R) -> Element {
    random_element(alg, rng).hermitian_part()
}

pub fn random_positive<R: Rng + ?Sized>(alg: &FdAlgebra, rng: &mut R) -> Element {
    let b = random_element(alg, rng);
    b.adjoint() * b
}

/// Unitary element, Haar in every block.
pub fn random_unitary_element<R: Rng + ?Sized>(alg: &FdAlgebra, rng: &mut R) -> Element {
    let blocks = alg.block_dims().iter().map(|&n| random_unitary(n, rng)).collect();
    alg.from_blocks(blocks).expect("shapes match")
}

/// Unit-trace density `W W* (+ floor)`; with `faithful = false` block ranks
/// are drawn from `0..=n`, never all zero.
pub fn random_density<R: Rng + ?Sized>(alg: &FdAlgebra, faithful: bool, rng: &mut R) -> Element {
    let dims = alg.block_dims();
    let ranks: Vec<usize> = loop {
        let ranks: Vec<usize> = dims
            .iter()
            .map(|&n| if faithful { n } else { rng.random_range(0..=n) })
            .collect();
        if ranks.iter().any(|&r| r > 0) {
            break ranks;
        }
    };
    let blocks: Vec<CMat> = dims
        .iter()
        .zip(&ranks)
        .map(|(&n, &r)| {
            let w = gaussian_matrix(n, r, rng);
            let mut d = &w * w.adjoint();
            if faithful {
                d += CMat::identity(n, n) * C64::from(0.1);
            }
            d
        })
        .collect();
    let e = alg.from_blocks(blocks).expect("shapes match");
    let tr = e.trace().re;
    e.scale_real(1.0 / tr)
}

/// A density `S` with `0 ⪯ S ⪯ D`: `D^{1/2} C D^{1/2}` with `0 ⪯ C ⪯ 1`.
pub fn random_dominated<R: Rng + ?Sized>(density: &Element, rng: &mut R) -> Element {
    let dims = density.block_dims();
    let alg = FdAlgebra::new(&dims).expect("density has valid blocks");
    let c = random_positive(&alg, rng);
    let scale: f64 = rng.random_range(0.2..0.95);
    let c = c.scale_real(scale / c.norm().max(1e-300));
    // exact zero on the kernel, so S inherits the support of D
    let cut = 1e-13 * density.norm();
    let root = density
        .func_calc(|x| C64::from(if x > cut { x.sqrt() } else { 0.0 }))
        .expect("density is Hermitian");
    (&root * &c * &root).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::max_abs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = random_unitary(4, &mut rng);
        assert!(max_abs(&(u.adjoint() * &u - CMat::identity(4, 4))) < 1e-13);
    }

    #[test]
    fn densities_are_states() {
        let alg = FdAlgebra::new(&[2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for faithful in [true, false] {
            let d = random_density(&alg, faithful, &mut rng);
            assert!((d.trace().re - 1.0).abs() < 1e-13);
            assert!(d.is_positive(1e-12));
            if faithful {
                assert!(d.min_eigenvalue() > 0.0);
            }
        }
    }

    #[test]
    fn dominated_is_dominated() {
        let alg = FdAlgebra::new(&[3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_density(&alg, false, &mut rng);
        let s = random_dominated(&d, &mut rng);
        assert!((&d - &s).is_positive(1e-12));
        assert!(s.is_positive(1e-12));
    }

    #[test]
    fn derive_seed_is_stable() {
        assert_eq!(derive_seed(7, "gns.gram"), derive_seed(7, "gns.gram"));
        assert_ne!(derive_seed(7, "gns.gram"), derive_seed(8, "gns.gram"));
        assert_ne!(derive_seed(7, "gns.gram"), derive_seed(7, "gns.rank"));
    }
}
