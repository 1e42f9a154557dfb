//! Floating-point polynomials and rational functions.

mod poly;
mod rational;
mod roots;

pub use poly::Polynomial;
pub use rational::{compose_mobius_uncancelled, rational_cancel, rational_compose_mobius, RationalFunction};
pub use roots::{real_distinct_roots, real_roots, RootSet};

/// Horner evaluation of `p` at `s`.
pub fn poly_eval<T: crate::Scalar>(p: &Polynomial<T>, s: T) -> T {
    p.eval(s)
}

pub fn poly_derivative<T: crate::Scalar>(p: &Polynomial<T>) -> Polynomial<T> {
    p.derivative()
}

pub fn poly_divmod<T: crate::Scalar>(
    num: &Polynomial<T>,
    den: &Polynomial<T>,
) -> crate::Result<(Polynomial<T>, Polynomial<T>)> {
    num.divmod(den)
}
