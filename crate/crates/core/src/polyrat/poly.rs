use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result, Scalar};

/// Dense real polynomial, coefficients in ascending degree.
///
/// The highest stored coefficient is nonzero unless the polynomial is zero,
/// in which case `coeffs == [0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    pub fn from_f64(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| T::lit(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![T::zero()] }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// `s`, the identity polynomial.
    pub fn monomial() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    /// `c0 + c1 s`
    pub fn linear(c0: T, c1: T) -> Self {
        Self::new(vec![c0, c1])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[T]) -> Self {
        roots
            .iter()
            .fold(Self::constant(T::one()), |acc, &r| &acc * &Self::linear(-r, T::one()))
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn leading(&self) -> T {
        self.coeffs[self.degree()]
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    /// Horner evaluation.
    pub fn eval(&self, s: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Self {
        if self.degree() == 0 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * T::lit(k as f64))
            .collect();
        Self::new(coeffs)
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }

    pub fn pow(&self, exp: usize) -> Self {
        (0..exp).fold(Self::constant(T::one()), |acc, _| &acc * self)
    }

    /// Long division; `num = quotient * den + remainder` with `deg(remainder) < deg(den)`.
    pub fn divmod(&self, den: &Self) -> Result<(Self, Self)> {
        if den.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        let dd = den.degree();
        if self.degree() < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let lead = den.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![T::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &d) in den.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j] - q * d;
            }
            rem[k + dd] = T::zero();
        }
        rem.truncate(dd.max(1));
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Divides out the factor `(s - root)`, discarding the remainder.
    pub fn deflate(&self, root: T) -> Self {
        if self.degree() == 0 {
            return self.clone();
        }
        let n = self.degree();
        let mut out = vec![T::zero(); n];
        let mut carry = T::zero();
        for k in (0..n).rev() {
            carry = self.coeffs[k + 1] + carry * root;
            out[k] = carry;
        }
        Self::new(out)
    }

    /// Drops leading coefficients that are rounding residue relative to the largest one.
    pub fn trim_relative(&self, rel: T) -> Self {
        let cutoff = self.max_abs_coeff() * rel;
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= cutoff) {
            coeffs.pop();
        }
        Self::new(coeffs)
    }

    /// Cauchy upper bound on the modulus of every root.
    pub fn cauchy_bound(&self) -> T {
        let lead = self.leading().abs();
        let m = self.coeffs[..self.degree()]
            .iter()
            .fold(T::zero(), |m, c| m.max(c.abs() / lead));
        T::one() + m
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*s")?,
                _ => write!(f, "{c}*s^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scale(-T::one())
    }
}
