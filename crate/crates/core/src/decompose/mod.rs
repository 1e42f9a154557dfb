//! From a rational innovation pgf to an explicit pmf.
//!
//! Four routes are provided and kept independent so they can be cross-checked:
//! residue partial fractions ([`partial_fractions`]), the closed linear form
//! ([`LinearForm`]), the closed quadratic hurdle forms ([`HurdleForm`]), and
//! the triangular recursive solve ([`pmf_recursive`]).

mod closed;
mod partial;
mod recursive;

pub use closed::{
    hurdle_method3, hurdle_method4, hurdle_pmf, linear_closed_form, quadratic_closed_form,
    HurdleForm, HurdleMethod, LinearForm,
};
pub use partial::{partial_fractions, pmf_from_decomposition, InnovationDistribution};
pub use recursive::{pmf_recursive, tail_geometric_approx, TabulatedPmf};

use serde::Serialize;

use crate::polyrat::Polynomial;
use crate::Scalar;

/// Default mass captured by tabulated pmfs.
pub const DEFAULT_TARGET_MASS: f64 = 1.0 - 1e-12;

/// One term `rho / (root - s)` of a partial-fraction expansion, i.e. the pmf
/// contribution `rho / root^(m+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricTerm<T> {
    pub rho: T,
    pub root: T,
}

impl<T: Scalar> GeometricTerm<T> {
    pub fn pmf(&self, m: usize) -> T {
        self.rho * self.root.recip().powi(m as i32 + 1)
    }

    /// `sum_{m > after} rho / root^(m+1)`, or the whole series when `after` is `None`.
    pub fn tail_mass(&self, after: Option<usize>) -> T {
        let start = after.map_or(0, |a| a + 1);
        self.rho * self.root.recip().powi(start as i32) / (self.root - T::one())
    }

    /// Mixture form `c * geo(mu)` with `mu = 1/(root - 1)` and `c = rho * mu`.
    pub fn mixture(&self) -> (T, T) {
        let mu = (self.root - T::one()).recip();
        (self.rho * mu, mu)
    }
}

/// `atom_poly(s) + sum_i rho_i / (s_i - s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalDecomposition<T> {
    /// Point masses at `m = 0..=r` (the polynomial part of the quotient).
    pub atom_poly: Polynomial<T>,
    /// Ordered by increasing `|root|`.
    pub terms: Vec<GeometricTerm<T>>,
}

impl<T: Scalar> FractionalDecomposition<T> {
    pub fn new(atom_poly: Polynomial<T>, mut terms: Vec<GeometricTerm<T>>) -> Self {
        terms.sort_by(|x, y| {
            x.root
                .abs()
                .partial_cmp(&y.root.abs())
                .expect("roots are finite")
        });
        Self { atom_poly, terms }
    }

    /// Exact pmf value; may be negative for invalid parameters.
    pub fn pmf_at(&self, m: usize) -> T {
        self.terms
            .iter()
            .fold(self.atom_poly.coeff(m), |acc, t| acc + t.pmf(m))
    }

    pub fn eval(&self, s: T) -> T {
        self.terms
            .iter()
            .fold(self.atom_poly.eval(s), |acc, t| acc + t.rho / (t.root - s))
    }

    pub fn total_mass(&self) -> T {
        let atoms = self.atom_poly.coeffs().iter().fold(T::zero(), |a, &c| a + c);
        self.terms.iter().fold(atoms, |acc, t| acc + t.tail_mass(None))
    }

    /// Largest index carrying a point mass from the polynomial part.
    pub fn atom_degree(&self) -> usize {
        if self.atom_poly.is_zero() {
            0
        } else {
            self.atom_poly.degree()
        }
    }

    /// The term with the smallest `|root|`, which governs the tail.
    pub fn dominant(&self) -> Option<&GeometricTerm<T>> {
        self.terms.first()
    }

    /// Bound on `|sum_{m > after} pmf(m)|` from the geometric terms.
    pub fn tail_bound(&self, after: usize) -> T {
        self.terms.iter().fold(T::zero(), |acc, t| {
            let r = t.root.abs();
            acc + t.rho.abs() * r.recip().powi(after as i32 + 1) / (r - T::one())
        })
    }

    /// `(c_i, mu_i)` pairs of the geometric-mixture representation.
    pub fn geometric_mixture(&self) -> Vec<(T, T)> {
        self.terms.iter().map(GeometricTerm::mixture).collect()
    }
}

/// Tail sums `sum_{m >= n} m^j x^m` for `j = 0, 1, 2` and `|x| < 1`.
pub(crate) fn geometric_tail_moments<T: Scalar>(x: T, n: usize) -> [T; 3] {
    let one = T::one();
    let nn = T::lit(n as f64);
    let xn = x.powi(n as i32);
    let q = one - x;
    let s0 = xn / q;
    let s1 = xn * (nn - (nn - one) * x) / (q * q);
    let two = T::lit(2.0);
    let s2 = xn
        * (nn * nn - (two * nn * nn - two * nn - one) * x + (nn - one) * (nn - one) * x * x)
        / (q * q * q);
    [s0, s1, s2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_moment_sums_match_brute_force() {
        for &(x, n) in &[(0.5_f64, 0_usize), (0.3, 4), (-0.6, 7), (0.9, 12)] {
            let mut b = [0.0_f64; 3];
            for m in n..4000 {
                let p = x.powi(m as i32);
                b[0] += p;
                b[1] += m as f64 * p;
                b[2] += (m * m) as f64 * p;
            }
            let got = geometric_tail_moments(x, n);
            for j in 0..3 {
                assert!((got[j] - b[j]).abs() < 1e-10 * b[j].abs().max(1.0), "{x} {n} {j}");
            }
        }
    }

    #[test]
    fn mixture_form_matches_residue_form() {
        let d = FractionalDecomposition::new(
            Polynomial::zero(),
            vec![
                GeometricTerm { rho: 4.0 / 7.0 * 0.5, root: 2.0 },
                GeometricTerm { rho: 0.3, root: 13.0 / 3.0 },
            ],
        );
        for m in 0..30 {
            let via_mix: f64 = d
                .geometric_mixture()
                .iter()
                .map(|&(c, mu): &(f64, f64)| c * (mu / (1.0 + mu)).powi(m as i32) / (1.0 + mu))
                .sum();
            assert!((via_mix - d.pmf_at(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn terms_are_sorted_by_modulus() {
        let d = FractionalDecomposition::new(
            Polynomial::zero(),
            vec![
                GeometricTerm { rho: 1.0, root: 5.0 },
                GeometricTerm { rho: 1.0, root: -3.0 },
                GeometricTerm { rho: 1.0, root: 4.0 },
            ],
        );
        let roots: Vec<f64> = d.terms.iter().map(|t| t.root).collect();
        assert_eq!(roots, vec![-3.0, 4.0, 5.0]);
    }
}
