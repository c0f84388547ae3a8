//! Finite-dimensional C*-algebras as ordered lists of full matrix blocks.
//!
//! Coordinates use the matrix-unit basis `e^{(j)}_{pq}`, ordered by block,
//! then row `p`, then column `q`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Absolute tolerance for Hermiticity and positivity.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdAlgebra {
    block_dims: Vec<usize>,
    coord_offsets: Vec<usize>,
    total_dim: usize,
    coord_dim: usize,
}

impl FdAlgebra {
    pub fn new(block_dims: &[usize]) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidDimension("empty block list".into()));
        }
        if let Some(pos) = block_dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDimension(format!("block {pos} has dimension 0")));
        }
        let mut coord_offsets = Vec::with_capacity(block_dims.len());
        let mut acc = 0;
        for &n in block_dims {
            coord_offsets.push(acc);
            acc += n * n;
        }
        Ok(Self {
            block_dims: block_dims.to_vec(),
            coord_offsets,
            total_dim: block_dims.iter().sum(),
            coord_dim: acc,
        })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Dimension `N` of the canonical representation space.
    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Linear dimension `Σ n_j²`.
    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn coord_index(&self, block: usize, p: usize, q: usize) -> usize {
        let n = self.block_dims[block];
        self.coord_offsets[block] + p * n + q
    }

    /// Inverse of [`coord_index`](Self::coord_index).
    pub fn coord_triple(&self, idx: usize) -> (usize, usize, usize) {
        let block = match self.coord_offsets.binary_search(&idx) {
            Ok(b) => b,
            Err(b) => b - 1,
        };
        let n = self.block_dims[block];
        let local = idx - self.coord_offsets[block];
        (block, local / n, local % n)
    }

    pub fn zero(&self) -> Element {
        Element {
            blocks: self.block_dims.iter().map(|&n| CMat::zeros(n, n)).collect(),
        }
    }

    pub fn identity(&self) -> Element {
        Element {
            blocks: self.block_dims.iter().map(|&n| CMat::identity(n, n)).collect(),
        }
    }

    pub fn matrix_unit(&self, block: usize, p: usize, q: usize) -> Element {
        let mut e = self.zero();
        e.blocks[block][(p, q)] = ONE;
        e
    }

    pub fn basis_element(&self, idx: usize) -> Element {
        let (j, p, q) = self.coord_triple(idx);
        self.matrix_unit(j, p, q)
    }

    pub fn basis(&self) -> Vec<Element> {
        (0..self.coord_dim).map(|i| self.basis_element(i)).collect()
    }

    pub fn from_blocks(&self, blocks: Vec<CMat>) -> Result<Element> {
        let e = Element { blocks };
        self.check(&e)?;
        Ok(e)
    }

    /// Element that is the scalar `c` in every block.
    pub fn scalar(&self, c: C64) -> Element {
        self.identity().scale(c)
    }

    pub fn check(&self, a: &Element) -> Result<()> {
        if !self.contains(a) {
            return Err(Error::Shape(format!(
                "element with blocks {:?} is not in algebra {:?}",
                a.block_dims(),
                self.block_dims
            )));
        }
        Ok(())
    }

    pub fn contains(&self, a: &Element) -> bool {
        a.blocks.len() == self.block_dims.len()
            && a.blocks
                .iter()
                .zip(&self.block_dims)
                .all(|(b, &n)| b.nrows() == n && b.ncols() == n)
    }

    pub fn coords(&self, a: &Element) -> CVec {
        debug_assert!(self.contains(a));
        let mut v = CVec::zeros(self.coord_dim);
        for (j, b) in a.blocks.iter().enumerate() {
            let n = self.block_dims[j];
            let off = self.coord_offsets[j];
            for p in 0..n {
                for q in 0..n {
                    v[off + p * n + q] = b[(p, q)];
                }
            }
        }
        v
    }

    pub fn from_coords(&self, v: &CVec) -> Element {
        assert_eq!(v.len(), self.coord_dim, "coordinate vector length");
        let blocks = self
            .block_dims
            .iter()
            .zip(&self.coord_offsets)
            .map(|(&n, &off)| CMat::from_fn(n, n, |p, q| v[off + p * n + q]))
            .collect();
        Element { blocks }
    }

    /// Matrix of `b ↦ a b` in coordinates.
    pub fn left_mul_matrix(&self, a: &Element) -> CMat {
        let d = self.coord_dim;
        let mut m = CMat::zeros(d, d);
        for (j, aj) in a.blocks.iter().enumerate() {
            let n = self.block_dims[j];
            for p in 0..n {
                for r in 0..n {
                    let c = aj[(p, r)];
                    if c == ZERO {
                        continue;
                    }
                    for q in 0..n {
                        m[(self.coord_index(j, p, q), self.coord_index(j, r, q))] = c;
                    }
                }
            }
        }
        m
    }

    /// Matrix of `b ↦ b a` in coordinates.
    pub fn right_mul_matrix(&self, a: &Element) -> CMat {
        let d = self.coord_dim;
        let mut m = CMat::zeros(d, d);
        for (j, aj) in a.blocks.iter().enumerate() {
            let n = self.block_dims[j];
            for r in 0..n {
                for q in 0..n {
                    let c = aj[(r, q)];
                    if c == ZERO {
                        continue;
                    }
                    for p in 0..n {
                        m[(self.coord_index(j, p, q), self.coord_index(j, p, r))] = c;
                    }
                }
            }
        }
        m
    }

    /// Real-linear part of the adjoint: `coords(a*) = P · conj(coords(a))`.
    pub fn adjoint_permutation(&self) -> CMat {
        let d = self.coord_dim;
        let mut m = CMat::zeros(d, d);
        for idx in 0..d {
            let (j, p, q) = self.coord_triple(idx);
            m[(idx, self.coord_index(j, q, p))] = ONE;
        }
        m
    }

    /// Block-diagonal image in `N×N` matrices.
    pub fn represent(&self, a: &Element) -> CMat {
        let mut m = CMat::zeros(self.total_dim, self.total_dim);
        let mut off = 0;
        for b in &a.blocks {
            let n = b.nrows();
            m.view_mut((off, off), (n, n)).copy_from(b);
            off += n;
        }
        m
    }

    /// Product algebra with blocks `n_i·m_j`, pairs ordered `i`-major.
    pub fn tensor(&self, other: &FdAlgebra) -> FdAlgebra {
        let dims: Vec<usize> = self
            .block_dims
            .iter()
            .flat_map(|&n| other.block_dims.iter().map(move |&m| n * m))
            .collect();
        FdAlgebra::new(&dims).expect("product of valid algebras is valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    blocks: Vec<CMat>,
}

/// Arithmetic selector for [`arith`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArithOp {
    Add,
    Mul,
    Adjoint,
    Scale(C64),
}

/// Checked blockwise arithmetic; `b` is ignored by the unary ops.
pub fn arith(a: &Element, b: &Element, op: ArithOp) -> Result<Element> {
    match op {
        ArithOp::Add => a.checked_add(b),
        ArithOp::Mul => a.checked_mul(b),
        ArithOp::Adjoint => Ok(a.adjoint()),
        ArithOp::Scale(c) => Ok(a.scale(c)),
    }
}

impl Element {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidDimension("element without blocks".into()));
        }
        for (j, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(Error::Shape(format!(
                    "block {j} has shape {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &CMat {
        &self.blocks[j]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn same_shape(&self, other: &Element) -> bool {
        self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.shape() == b.shape())
    }

    fn shape_guard(&self, other: &Element) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "blocks {:?} vs {:?}",
                self.block_dims(),
                other.block_dims()
            )))
        }
    }

    fn zip_with(&self, other: &Element, f: impl Fn(&CMat, &CMat) -> CMat) -> Element {
        Element {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn checked_add(&self, other: &Element) -> Result<Element> {
        self.shape_guard(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Element) -> Result<Element> {
        self.shape_guard(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Element) -> Result<Element> {
        self.shape_guard(other)?;
        Ok(self.zip_with(other, |a, b| a * b))
    }

    pub fn map_blocks(&self, f: impl Fn(&CMat) -> CMat) -> Element {
        Element {
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn adjoint(&self) -> Element {
        self.map_blocks(|b| b.adjoint())
    }

    pub fn scale(&self, c: C64) -> Element {
        self.map_blocks(|b| b * c)
    }

    pub fn scale_real(&self, c: f64) -> Element {
        self.map_blocks(|b| b * C64::from(c))
    }

    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// Operator norm of the canonical representation.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(op_norm).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Largest blockwise entry deviation from the adjoint.
    pub fn hermitian_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| max_abs(&(b - b.adjoint())))
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn hermitian_part(&self) -> Element {
        self.map_blocks(|b| (b + b.adjoint()) * C64::from(0.5))
    }

    /// Smallest eigenvalue of the Hermitian part across all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| hermitian_eigh(b).0[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol
    }

    /// Blockwise `U f(Λ) U*`; `f` only ever sees eigenvalues.
    pub fn func_calc(&self, f: impl Fn(f64) -> C64) -> Result<Element> {
        let tol = DEFAULT_TOL * (1.0 + self.norm());
        let defect = self.hermitian_defect();
        if defect > tol {
            return Err(Error::Domain(format!(
                "functional calculus needs a Hermitian element (defect {defect:e})"
            )));
        }
        Ok(self.map_blocks(|b| hermitian_func(b, &f)))
    }

    /// Positive square root; tiny negative eigenvalues are clipped.
    pub fn sqrt_psd(&self) -> Result<Element> {
        self.require_spectrum_above(-DEFAULT_TOL * (1.0 + self.norm()), "square root")?;
        self.func_calc(|x| C64::from(x.max(0.0).sqrt()))
    }

    /// `a^z` for positive definite `a`.
    pub fn pow_pd(&self, z: C64) -> Result<Element> {
        self.require_spectrum_above(0.0, "complex power")?;
        self.func_calc(|x| C64::from(x).powc(z))
    }

    pub fn log_pd(&self) -> Result<Element> {
        self.require_spectrum_above(0.0, "logarithm")?;
        self.func_calc(|x| C64::from(x.ln()))
    }

    fn require_spectrum_above(&self, floor: f64, what: &str) -> Result<()> {
        let m = self.hermitian_part().min_eigenvalue();
        if m <= floor {
            return Err(Error::Domain(format!(
                "{what} needs spectrum above {floor:e}, found {m:e}"
            )));
        }
        Ok(())
    }

    /// `a ⊗ b` in the product algebra, `A`-index major inside each block.
    pub fn kron(&self, other: &Element) -> Element {
        Element {
            blocks: self
                .blocks
                .iter()
                .flat_map(|a| other.blocks.iter().map(move |b| a.kronecker(b)))
                .collect(),
        }
    }

    /// Max entrywise distance; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Element) -> f64 {
        if !self.same_shape(other) {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// Operator-norm distance; infinite on shape mismatch.
    pub fn dist(&self, other: &Element) -> f64 {
        if !self.same_shape(other) {
            return f64::INFINITY;
        }
        self.zip_with(other, |a, b| a - b).norm()
    }
}

macro_rules! element_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&Element> for &Element {
            type Output = Element;
            fn $method(self, rhs: &Element) -> Element {
                assert!(
                    self.same_shape(rhs),
                    "element shape mismatch: {:?} vs {:?}",
                    self.block_dims(),
                    rhs.block_dims()
                );
                self.zip_with(rhs, |a, b| a $op b)
            }
        }
        impl $tr<Element> for Element {
            type Output = Element;
            fn $method(self, rhs: Element) -> Element {
                &self $op &rhs
            }
        }
        impl $tr<&Element> for Element {
            type Output = Element;
            fn $method(self, rhs: &Element) -> Element {
                &self $op rhs
            }
        }
        impl $tr<Element> for &Element {
            type Output = Element;
            fn $method(self, rhs: Element) -> Element {
                self $op &rhs
            }
        }
    };
}

element_binop!(Add, add, +);
element_binop!(Sub, sub, -);
element_binop!(Mul, mul, *);

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.map_blocks(|b| -b)
    }
}

impl Neg for Element {
    type Output = Element;
    fn neg(self) -> Element {
        -&self
    }
}

/// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
pub fn hermitian_eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let h = (m + m.adjoint()) * C64::from(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Largest entry modulus of any matrix or vector.
pub fn max_abs<'a>(m: impl IntoIterator<Item = &'a C64>) -> f64 {
    m.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_func(m: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (vals, u) = hermitian_eigh(m);
    let fd = CVec::from_iterator(vals.len(), vals.iter().map(|&x| f(x)));
    let mut scaled = u.clone();
    for (c, &s) in fd.iter().enumerate() {
        scaled.column_mut(c).iter_mut().for_each(|z| *z *= s);
    }
    scaled * u.adjoint()
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigh(m).0
}

pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    hermitian_eigh(m).0[0]
}

/// Thin singular triples `(σ_k, u_k, v_k)` with `σ_k > rel_tol · σ_max`.
///
/// Computed from the Hermitian dilation `[[0, M], [M*, 0]]`, whose positive
/// eigenvalues are the singular values with eigenvectors `(u_k, v_k)/√2`.
pub fn singular_triples(m: &CMat, rel_tol: f64) -> (Vec<f64>, CMat, CMat) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (Vec::new(), CMat::zeros(r, 0), CMat::zeros(c, 0));
    }
    let mut dil = CMat::zeros(r + c, r + c);
    dil.view_mut((0, r), (r, c)).copy_from(m);
    dil.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let (vals, vecs) = hermitian_eigh(&dil);
    let smax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..vals.len())
        .rev()
        .filter(|&k| vals[k] > 0.0 && vals[k] > rel_tol * smax)
        .take(r.min(c))
        .collect();
    let root2 = C64::from(std::f64::consts::SQRT_2);
    let u = CMat::from_fn(r, keep.len(), |i, k| vecs[(i, keep[k])] * root2);
    let v = CMat::from_fn(c, keep.len(), |i, k| vecs[(r + i, keep[k])] * root2);
    (keep.iter().map(|&k| vals[k]).collect(), u, v)
}

pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    hermitian_eigh(&gram).0.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    singular_triples(m, 0.0).0.iter().sum()
}

/// Moore-Penrose inverse with relative singular-value cut `rel_tol`.
pub fn pinv(m: &CMat, rel_tol: f64) -> CMat {
    let (s, u, v) = singular_triples(m, rel_tol);
    let mut vs = v;
    for (k, &sk) in s.iter().enumerate() {
        vs.column_mut(k).iter_mut().for_each(|z| *z /= sk);
    }
    vs * u.adjoint()
}

/// Orthonormal basis of the column space, relative cut `rel_tol`.
pub fn column_space(m: &CMat, rel_tol: f64) -> CMat {
    singular_triples(m, rel_tol).1
}

/// Frobenius-orthonormal basis of a set of operators.
#[derive(Debug, Clone)]
pub struct OperatorSpan {
    pub dim: usize,
    pub basis: Vec<CMat>,
}

impl OperatorSpan {
    pub fn from_matrices(mats: &[CMat]) -> Self {
        let Some(first) = mats.first() else {
            return Self { dim: 0, basis: Vec::new() };
        };
        let (r, c) = first.shape();
        let stacked = CMat::from_fn(r * c, mats.len(), |row, col| mats[col].as_slice()[row]);
        let q = column_space(&stacked, 1e-9);
        let basis = (0..q.ncols())
            .map(|k| CMat::from_column_slice(r, c, q.column(k).as_slice()))
            .collect::<Vec<_>>();
        Self { dim: basis.len(), basis }
    }

    /// Orthogonal projector on vectorized operators.
    pub fn projector(&self, ambient: usize) -> CMat {
        let d = ambient * ambient;
        let mut p = CMat::zeros(d, d);
        for b in &self.basis {
            let v = CVec::from_column_slice(b.as_slice());
            p += &v * v.adjoint();
        }
        p
    }

    /// Frobenius distance between the orthogonal projectors onto both spans.
    pub fn distance(&self, other: &OperatorSpan, ambient: usize) -> f64 {
        (self.projector(ambient) - other.projector(ambient)).norm()
    }
}

/// `{X : X A_i = A_i X}` for `N×N` generators, as an orthonormal basis.
pub fn commutant(generators: &[CMat], n: usize) -> OperatorSpan {
    let d = n * n;
    let id = CMat::identity(n, n);
    let mut gram = CMat::zeros(d, d);
    let mut scale = 0.0;
    for a in generators {
        scale += a.norm_squared();
        assert_eq!(a.shape(), (n, n), "commutant generator shape");
        // column-major vec: vec(XA - AX) = (Aᵀ⊗1 - 1⊗A) vec(X)
        let k = a.transpose().kronecker(&id) - id.kronecker(a);
        gram += k.adjoint() * &k;
    }
    let (vals, vecs) = hermitian_eigh(&gram);
    // roundoff in the generators must not look like a non-commuting part
    let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = 1e-9 * lmax.max(scale);
    let basis: Vec<CMat> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= cut)
        .map(|(k, _)| CMat::from_column_slice(n, n, vecs.column(k).as_slice()))
        .collect();
    OperatorSpan { dim: basis.len(), basis }
}
