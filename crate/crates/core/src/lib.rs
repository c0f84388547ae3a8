//! Weight theory on finite-dimensional C*-algebras.

// negated comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod random;
pub mod weights;
pub mod automorphism;
pub mod gns;
pub mod quadrature;
pub mod dynamics;
pub mod slice;
pub mod tensor;
pub mod hullx;
pub mod instance;
pub mod suite;
pub mod report;
