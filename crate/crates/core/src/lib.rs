//! Innovation distributions of first-order integer-valued autoregressive
//! processes with geometric-type marginals.
//!
//! The innovation pgf `phi_eps(s) = phi_X(s) / phi_X(phi_N(s))` is built as a
//! rational function and converted into an explicit pmf by partial fractions,
//! by closed linear and quadratic forms, and by a triangular recursive solve.
//! Every route is cross-checked in [`verify`].

// `!(x > y)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod decompose;
mod error;
pub mod pgf;
pub mod polyrat;
mod scalar;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use catalog::{build_model, CatalogModel, InarModel, Moments};
pub use decompose::{
    FractionalDecomposition, GeometricTerm, HurdleForm, InnovationDistribution, LinearForm,
    TabulatedPmf,
};
pub use pgf::{MarginalSpec, ModelSpec, ProductPgf, ThinningOperator};
pub use polyrat::{Polynomial, RationalFunction, RootSet};

pub type Polynomial64 = Polynomial<f64>;
pub type Polynomial32 = Polynomial<f32>;
pub type RationalFunction64 = RationalFunction<f64>;
pub type RationalFunction32 = RationalFunction<f32>;
pub type FractionalDecomposition64 = FractionalDecomposition<f64>;
pub type InnovationDistribution64 = InnovationDistribution<f64>;
pub type HurdleForm64 = HurdleForm<f64>;
pub type MarginalSpec64 = MarginalSpec<f64>;
pub type ThinningOperator64 = ThinningOperator<f64>;
pub type ModelSpec64 = ModelSpec<f64>;
pub type ProductPgf64 = ProductPgf<f64>;
