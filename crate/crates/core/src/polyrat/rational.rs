use super::roots::{distinct, real_roots};
use super::Polynomial;
use crate::{Error, Result, Scalar};

/// Quotient `num / den` with `den(0) > 0`.
///
/// `radius` is the modulus of the nearest real pole; [`RationalFunction::eval`]
/// refuses arguments at or beyond it.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction<T> {
    num: Polynomial<T>,
    den: Polynomial<T>,
    radius: T,
}

impl<T: Scalar> RationalFunction<T> {
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        let d0 = den.coeff(0);
        if d0.is_zero() {
            return Err(Error::ZeroConstantDenominator);
        }
        let (num, den) = if d0 < T::zero() { (-&num, -&den) } else { (num, den) };
        let radius = pole_radius(&den);
        Ok(Self { num, den, radius })
    }

    pub fn from_f64(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::from_f64(num), Polynomial::from_f64(den))
    }

    pub fn polynomial(p: Polynomial<T>) -> Self {
        Self::new(p, Polynomial::constant(T::one())).expect("unit denominator is valid")
    }

    pub fn constant(c: T) -> Self {
        Self::polynomial(Polynomial::constant(c))
    }

    /// Overrides the validity radius, e.g. when it is known from factors.
    pub fn with_radius(mut self, radius: T) -> Self {
        self.radius = radius;
        self
    }

    pub fn num(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<T> {
        &self.den
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn eval(&self, s: T) -> Result<T> {
        if s.abs() >= self.radius {
            return Err(Error::DomainViolation {
                value: s.to_f64().unwrap_or(f64::NAN),
                radius: self.radius.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.eval_unchecked(s))
    }

    pub fn eval_unchecked(&self, s: T) -> T {
        self.num.eval(s) / self.den.eval(s)
    }

    /// Rescaled so that `den(0) == 1`.
    pub fn normalized(&self) -> Self {
        let d0 = self.den.coeff(0);
        Self {
            num: self.num.scale(T::one() / d0),
            den: self.den.scale(T::one() / d0),
            radius: self.radius,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.num.degree() == 0 && self.den.degree() == 0
    }

    /// Degree at most one in numerator and denominator.
    pub fn is_mobius(&self) -> bool {
        self.num.degree() <= 1 && self.den.degree() <= 1
    }

    /// Product; the radius is the smaller of the two factors' radii.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
            radius: self.radius.min(other.radius),
        }
    }

    /// Taylor coefficients `c_0..=c_order` of the expansion around `point`.
    pub fn taylor_at(&self, point: T, order: usize) -> Vec<T> {
        let n = taylor_shift(&self.num, point);
        let d = taylor_shift(&self.den, point);
        series_quotient(&n, &d, order)
    }

    /// Mean and variance read off a pgf: `phi'(1)` and `phi''(1) + phi'(1) - phi'(1)^2`.
    pub fn pgf_mean_variance(&self) -> (T, T) {
        let c = self.taylor_at(T::one(), 2);
        let mean = c[1];
        let second_factorial = T::lit(2.0) * c[2];
        (mean, second_factorial + mean - mean * mean)
    }
}

/// Coefficients of `p(point + h)` in powers of `h`.
fn taylor_shift<T: Scalar>(p: &Polynomial<T>, point: T) -> Vec<T> {
    let mut c = p.coeffs().to_vec();
    let n = c.len();
    for i in 0..n {
        for k in (i..n - 1).rev() {
            c[k] = c[k] + point * c[k + 1];
        }
    }
    c
}

fn series_quotient<T: Scalar>(num: &[T], den: &[T], order: usize) -> Vec<T> {
    let mut out = vec![T::zero(); order + 1];
    for l in 0..=order {
        let mut acc = num.get(l).copied().unwrap_or_else(T::zero);
        for i in l.saturating_sub(den.len() - 1)..l {
            acc = acc - out[i] * den[l - i];
        }
        out[l] = acc / den[0];
    }
    out
}

fn pole_radius<T: Scalar>(den: &Polynomial<T>) -> T {
    if den.degree() == 0 {
        return T::infinity();
    }
    let roots = real_roots(den);
    if roots.len() == den.degree() {
        return roots.iter().fold(T::infinity(), |m, r| m.min(r.abs()));
    }
    // some complex poles: fall back to a lower bound on every root modulus
    let a0 = den.coeff(0).abs();
    let rest = den.coeffs()[1..].iter().fold(T::zero(), |m, c| m.max(c.abs()));
    let lower = a0 / (a0 + rest);
    roots.iter().fold(lower, |m, r| m.min(r.abs()))
}

/// `outer(inner(s))` for an `inner` map of degree at most one in each part.
///
/// With `outer = P/Q` of degrees `p, q`, `inner = A/B` and `D = max(p, q)`,
/// the result is `sum P_k A^k B^(D-k) / sum Q_k A^k B^(D-k)`, then cancelled.
pub fn rational_compose_mobius<T: Scalar>(
    outer: &RationalFunction<T>,
    inner: &RationalFunction<T>,
) -> Result<RationalFunction<T>> {
    Ok(rational_cancel(&compose_mobius_uncancelled(outer, inner)?, T::distinct_tol()))
}

/// [`rational_compose_mobius`] without the cancellation step, so nearly
/// shared roots stay in place; scaled to `den(0) == 1`.
pub fn compose_mobius_uncancelled<T: Scalar>(
    outer: &RationalFunction<T>,
    inner: &RationalFunction<T>,
) -> Result<RationalFunction<T>> {
    if !inner.is_mobius() {
        return Err(Error::InvalidParameter(
            "inner map must have degree at most one".into(),
        ));
    }
    let (a, b) = (inner.num(), inner.den());
    // pole of the inner map inside [0, 1]?
    let (b0, b1) = (b.eval(T::zero()), b.eval(T::one()));
    if b0.is_zero() || b1.is_zero() || (b0 < T::zero()) != (b1 < T::zero()) {
        return Err(Error::DomainViolation {
            value: f64::INFINITY,
            radius: outer.radius().to_f64().unwrap_or(f64::NAN),
        });
    }
    // a Mobius map without a pole on [0, 1] is monotone there
    for s in [T::zero(), T::one()] {
        let v = inner.eval_unchecked(s);
        if v.abs() >= outer.radius() {
            return Err(Error::DomainViolation {
                value: v.to_f64().unwrap_or(f64::NAN),
                radius: outer.radius().to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let d = outer.num().degree().max(outer.den().degree());
    let a_pows: Vec<Polynomial<T>> = (0..=d).map(|k| a.pow(k)).collect();
    let b_pows: Vec<Polynomial<T>> = (0..=d).map(|k| b.pow(k)).collect();
    let substitute = |p: &Polynomial<T>| {
        p.coeffs()
            .iter()
            .enumerate()
            .fold(Polynomial::zero(), |acc, (k, &c)| {
                &acc + &(&a_pows[k] * &b_pows[d - k]).scale(c)
            })
    };
    let (num, den) = (substitute(outer.num()), substitute(outer.den()));
    let d0 = den.coeff(0);
    if d0.is_zero() {
        return Err(Error::ZeroConstantDenominator);
    }
    RationalFunction::new(num.scale(T::one() / d0), den.scale(T::one() / d0))
}

/// `Some(k)` when `num = k * den` up to `tol` relative to the coefficient size.
fn proportional<T: Scalar>(num: &Polynomial<T>, den: &Polynomial<T>, tol: T) -> Option<T> {
    if num.degree() != den.degree() || den.degree() == 0 || num.is_zero() {
        return None;
    }
    let k = num.leading() / den.leading();
    let scale = num.max_abs_coeff();
    let fits = (0..=den.degree()).all(|i| (num.coeff(i) - k * den.coeff(i)).abs() <= tol * scale);
    fits.then_some(k)
}

/// Cancels a common factor (whole proportional polynomials, or real roots
/// shared within `tol`, relative), rescales to `den(0) == 1`, and snaps `R(1)`
/// to one when it is already within `tol` of one.
pub fn rational_cancel<T: Scalar>(r: &RationalFunction<T>, tol: T) -> RationalFunction<T> {
    let trim = T::epsilon() * T::lit(4.0);
    let mut num = r.num().trim_relative(trim);
    let mut den = r.den().trim_relative(trim);
    if let Some(k) = proportional(&num, &den, tol) {
        num = Polynomial::constant(k);
        den = Polynomial::constant(T::one());
    }
    while num.degree() > 0 && den.degree() > 0 {
        let nr = real_roots(&num);
        let dr = real_roots(&den);
        let shared = nr
            .iter()
            .find_map(|&x| dr.iter().find(|&&y| !distinct(x, y, tol)).map(|&y| (x, y)));
        match shared {
            Some((x, y)) => {
                num = num.deflate(x);
                den = den.deflate(y);
            }
            None => break,
        }
    }
    let d0 = den.coeff(0);
    let mut num = num.scale(T::one() / d0);
    let den = den.scale(T::one() / d0);
    let at_one = num.eval(T::one()) / den.eval(T::one());
    if at_one.is_finite() && (at_one - T::one()).abs() <= tol && !at_one.is_zero() {
        num = num.scale(T::one() / at_one);
    }
    RationalFunction::new(num, den).expect("den(0) == 1 after normalization")
}

#[cfg(test)]
mod tests {
    use super::*;

    type R = RationalFunction<f64>;
    type P = Polynomial<f64>;

    fn assert_same_function(a: &R, b: &R) {
        for k in 0..=20 {
            let s = k as f64 / 20.0 * 0.99;
            let (x, y) = (a.eval(s).unwrap(), b.eval(s).unwrap());
            assert!((x - y).abs() < 1e-13, "s={s}: {x} vs {y}");
        }
    }

    #[test]
    fn compose_geometric_with_binomial_thinning() {
        let geo = R::from_f64(&[0.5], &[1.0, -0.5]).unwrap();
        let thin = R::from_f64(&[0.5, 0.5], &[1.0]).unwrap();
        let out = rational_compose_mobius(&geo, &thin).unwrap();
        assert_same_function(&out, &R::from_f64(&[0.5], &[0.75, -0.25]).unwrap());
    }

    #[test]
    fn compose_geometric_with_nb_thinning() {
        let geo = R::from_f64(&[1.0], &[2.0, -1.0]).unwrap();
        let thin = R::from_f64(&[1.0], &[1.3, -0.3]).unwrap();
        let out = rational_compose_mobius(&geo, &thin).unwrap();
        assert_same_function(&out, &R::from_f64(&[1.3, -0.3], &[1.6, -0.6]).unwrap());
        // ratio of coefficients is the scale-free content
        assert!((out.num().coeff(1) / out.num().coeff(0) - (-0.3 / 1.3)).abs() < 1e-15);
        assert!((out.den().coeff(1) / out.den().coeff(0) - (-0.6 / 1.6)).abs() < 1e-15);
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let r = R::from_f64(&[1.0, -0.2], &[1.0, -1.2, 0.3]).unwrap().normalized();
        let id = R::polynomial(P::monomial());
        let out = rational_compose_mobius(&r, &id).unwrap();
        assert_eq!(out.num(), r.num());
        assert_eq!(out.den(), r.den());
    }

    #[test]
    fn compose_rejects_domain_exit() {
        let geo = R::from_f64(&[0.5], &[1.0, -0.5]).unwrap(); // pole at 2
        let scaled = R::polynomial(P::from_f64(&[0.0, 3.0]));
        assert!(matches!(
            rational_compose_mobius(&geo, &scaled),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn cancel_shared_factor() {
        let num = P::from_roots(&[2.0, 3.0]);
        let den = P::from_roots(&[2.0, 5.0]);
        let out = rational_cancel(&R::new(num, den).unwrap(), 1e-9);
        assert_eq!(out.num().degree(), 1);
        assert_eq!(out.den().degree(), 1);
        assert_same_function(&out, &R::new(P::from_roots(&[3.0]), P::from_roots(&[5.0])).unwrap());
    }

    #[test]
    fn cancel_leaves_distinct_roots() {
        let r = R::from_f64(&[0.75, -0.25], &[1.0, -0.5]).unwrap();
        assert_eq!(rational_cancel(&r, 1e-9), r);
    }

    #[test]
    fn cancel_full() {
        let p = P::from_f64(&[1.3, -0.4, 0.1]);
        let out = rational_cancel(&R::new(p.clone(), p).unwrap(), 1e-9);
        assert!(out.is_constant());
        assert!((out.eval(0.3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_constant_term_is_flipped() {
        let r = R::from_f64(&[-1.0], &[-2.0, 1.0]).unwrap();
        assert!(r.den().coeff(0) > 0.0);
        assert!((r.eval(0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_constant_denominator_rejected() {
        assert_eq!(R::from_f64(&[1.0], &[0.0, 1.0]), Err(Error::ZeroConstantDenominator));
    }

    #[test]
    fn eval_beyond_radius_errors() {
        let r = R::from_f64(&[0.5], &[1.0, -0.5]).unwrap();
        assert_eq!(r.radius(), 2.0);
        assert!(r.eval(1.99).is_ok());
        assert!(matches!(r.eval(2.0), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn geometric_pgf_moments() {
        // theta = 0.4: mean (1-theta)/theta = 1.5, variance (1-theta)/theta^2 = 3.75
        let r = R::from_f64(&[0.4], &[1.0, -0.6]).unwrap();
        let (m, v) = r.pgf_mean_variance();
        assert!((m - 1.5).abs() < 1e-14);
        assert!((v - 3.75).abs() < 1e-13);
    }
}
