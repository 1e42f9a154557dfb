use serde::Serialize;

use super::{pmf_from_decomposition, FractionalDecomposition, GeometricTerm, InnovationDistribution};
use crate::polyrat::{real_distinct_roots, Polynomial};
use crate::{Error, Result, Scalar};

fn close<T: Scalar>(x: T, y: T, rel: T) -> bool {
    (x - y).abs() <= rel * T::one().max(x.abs()).max(y.abs())
}

/// The linear fractional pgf `(a + b s)/(c + d s)`.
///
/// Its law is an atom `b/d` at zero plus `rho / s_1^(m+1)` with
/// `s_1 = -c/d` and `rho = b c / d^2 - a / d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearForm<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> LinearForm<T> {
    /// Checks `a < c`, `a + b = c + d`, `d != 0` and `-c/d > 1`.
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let (a, b, c, d) = if c < T::zero() { (-a, -b, -c, -d) } else { (a, b, c, d) };
        if d.is_zero() {
            return Err(Error::ConstraintViolation("d != 0".into()));
        }
        if !(a < c) {
            return Err(Error::ConstraintViolation(format!("a < c (a = {a}, c = {c})")));
        }
        if !close(a + b, c + d, T::distinct_tol()) {
            return Err(Error::ConstraintViolation(format!(
                "a + b = c + d ({} vs {})",
                a + b,
                c + d
            )));
        }
        let s1 = -c / d;
        if !(s1 > T::one()) {
            return Err(Error::ConstraintViolation(format!("-c/d > 1 (-c/d = {s1})")));
        }
        Ok(Self { a, b, c, d })
    }

    /// Point mass `b/d` at zero.
    pub fn atom(&self) -> T {
        self.b / self.d
    }

    pub fn s1(&self) -> T {
        -self.c / self.d
    }

    pub fn rho(&self) -> T {
        self.b * self.c / (self.d * self.d) - self.a / self.d
    }

    /// `theta = 1 - 1/s_1`, the success probability of the geometric part.
    pub fn theta(&self) -> T {
        T::one() - self.s1().recip()
    }

    pub fn pmf(&self, m: usize) -> T {
        let geo = self.rho() / self.s1().powi(m as i32 + 1);
        if m == 0 {
            self.atom() + geo
        } else {
            geo
        }
    }

    /// `((1 - theta)/theta)(1 - b/d)`.
    pub fn mean(&self) -> T {
        let th = self.theta();
        (T::one() - th) / th * (T::one() - self.atom())
    }

    /// Mean times the Fisher index `(1/theta)(1 + b/d) - b/d`.
    pub fn variance(&self) -> T {
        self.mean() * self.dispersion()
    }

    pub fn dispersion(&self) -> T {
        let bd = self.atom();
        (T::one() + bd) / self.theta() - bd
    }

    pub fn decomposition(&self) -> FractionalDecomposition<T> {
        FractionalDecomposition::new(
            Polynomial::constant(self.atom()),
            vec![GeometricTerm {
                rho: self.rho(),
                root: self.s1(),
            }],
        )
    }
}

/// Closed-form linear route; tabulated to the default target mass.
pub fn linear_closed_form<T: Scalar>(a: T, b: T, c: T, d: T) -> Result<InnovationDistribution<T>> {
    let f = LinearForm::new(a, b, c, d)?;
    pmf_from_decomposition(&f.decomposition(), T::lit(super::DEFAULT_TARGET_MASS))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HurdleMethod {
    /// Equal leading coefficients.
    Equal,
    /// Distinct leading coefficients.
    Flexible,
}

/// Hurdle law with `Pr[0] = pi` and a signed mixture of two shifted
/// geometrics on `{1, 2, ...}`:
/// `(1 - pi)[w1 (1 - p1) p1^(m-1) + w2 (1 - p2) p2^(m-1)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HurdleForm<T> {
    pub pi: T,
    pub p1: T,
    pub p2: T,
    pub w1: T,
    pub w2: T,
    pub method: HurdleMethod,
}

/// `x^k` with `0^0 = 1`.
fn pow0<T: Scalar>(x: T, k: usize) -> T {
    if k == 0 {
        T::one()
    } else {
        x.powi(k as i32)
    }
}

pub fn hurdle_pmf<T: Scalar>(h: &HurdleForm<T>, m: usize) -> T {
    if m == 0 {
        return h.pi;
    }
    let one = T::one();
    (one - h.pi)
        * (h.w1 * (one - h.p1) * pow0(h.p1, m - 1) + h.w2 * (one - h.p2) * pow0(h.p2, m - 1))
}

impl<T: Scalar> HurdleForm<T> {
    pub fn pmf(&self, m: usize) -> T {
        hurdle_pmf(self, m)
    }

    /// `mu_Z = w1/(1 - p1) + w2/(1 - p2)`, the mean of the positive part.
    pub fn positive_mean(&self) -> T {
        let one = T::one();
        self.w1 / (one - self.p1) + self.w2 / (one - self.p2)
    }

    pub fn mean(&self) -> T {
        (T::one() - self.pi) * self.positive_mean()
    }

    /// Mixture variance: within-component variances and spread about `mu_Z`,
    /// plus the hurdle's Bernoulli contribution.
    pub fn variance(&self) -> T {
        let one = T::one();
        let mz = self.positive_mean();
        let part = |w: T, p: T| {
            let m = one / (one - p);
            w * ((m - mz) * (m - mz) + p / ((one - p) * (one - p)))
        };
        (one - self.pi) * (part(self.w1, self.p1) + part(self.w2, self.p2))
            + self.pi * (one - self.pi) * mz * mz
    }

    /// Nonnegativity of every entry: `1..=horizon` explicitly, then the
    /// dominance condition `w1 (1-p1) > |w2| (1-p2) |p2/p1|^(m-1)` at the horizon.
    pub fn check_nonnegative(&self, horizon: usize) -> Result<()> {
        let one = T::one();
        if self.pi < -T::dust() {
            return Err(Error::NegativeProbability {
                index: 0,
                value: self.pi.to_f64().unwrap_or(f64::NAN),
            });
        }
        for m in 1..=horizon.max(1) {
            let p = self.pmf(m);
            if p < -T::dust() {
                return Err(Error::NegativeProbability {
                    index: m,
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let lead = self.w1 * (one - self.p1);
        let ratio = if self.p1.is_zero() { T::zero() } else { (self.p2 / self.p1).abs() };
        let other = self.w2.abs() * (one - self.p2) * pow0(ratio, horizon.max(1) - 1);
        if self.w2.is_zero() || lead > other {
            Ok(())
        } else {
            Err(Error::ConstraintViolation(format!(
                "tail dominance fails at m = {horizon}"
            )))
        }
    }

    /// The same law as residue terms: `rho_i = (1 - pi) w_i (1 - p_i) / p_i^2`
    /// at `s_i = 1/p_i`, with the atom at zero absorbing the difference.
    /// A component with `p_i = 0` becomes a point mass at one.
    pub fn to_decomposition(&self) -> FractionalDecomposition<T> {
        let one = T::one();
        let mut atoms = vec![self.pi, T::zero()];
        let mut terms = Vec::with_capacity(2);
        for (w, p) in [(self.w1, self.p1), (self.w2, self.p2)] {
            if p.is_zero() {
                atoms[1] = atoms[1] + (one - self.pi) * w;
            } else {
                let rho = (one - self.pi) * w * (one - p) / (p * p);
                atoms[0] = atoms[0] - rho * p;
                terms.push(GeometricTerm { rho, root: p.recip() });
            }
        }
        FractionalDecomposition::new(Polynomial::new(atoms), terms)
    }
}

/// Denominator roots ordered by modulus, validated for the hurdle forms.
fn quadratic_roots<T: Scalar>(abar: T, bbar: T, cbar: T) -> Result<(T, T)> {
    if abar.is_zero() {
        return Err(Error::ConstraintViolation("leading denominator coefficient != 0".into()));
    }
    let den = Polynomial::new(vec![cbar, bbar, abar]);
    let roots = real_distinct_roots(&den, T::distinct_tol())?;
    if roots.multiplicity_flag {
        return Err(Error::RepeatedRoots);
    }
    let (mut s1, mut s2) = (roots.roots[0], roots.roots[1]);
    if s2.abs() < s1.abs() {
        std::mem::swap(&mut s1, &mut s2);
    }
    for s in [s1, s2] {
        if s.abs() <= T::one() {
            return Err(Error::RootInsideDisk {
                root: s.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok((s1, s2))
}

fn check_quadratic<T: Scalar>(a: T, b: T, c: T, abar: T, bbar: T, cbar: T) -> Result<()> {
    if !(cbar > T::zero()) {
        return Err(Error::ConstraintViolation(format!("c_bar > 0 (c_bar = {cbar})")));
    }
    if c > cbar * (T::one() + T::distinct_tol()) {
        return Err(Error::ConstraintViolation(format!("c <= c_bar ({c} > {cbar})")));
    }
    if !close(a + b + c, abar + bbar + cbar, T::distinct_tol()) {
        return Err(Error::ConstraintViolation(format!(
            "a + b + c = a_bar + b_bar + c_bar ({} vs {})",
            a + b + c,
            abar + bbar + cbar
        )));
    }
    Ok(())
}

/// Equal leading coefficients `(a s^2 + b s + c)/(a s^2 + b_bar s + c_bar)`:
/// `p_i = 1/s_i`, `w1 = p1/(p1 - p2)`, `w2 = p2/(p2 - p1)`, `pi = c/c_bar`.
pub fn hurdle_method3<T: Scalar>(a: T, b: T, c: T, bbar: T, cbar: T) -> Result<HurdleForm<T>> {
    check_quadratic(a, b, c, a, bbar, cbar)?;
    let (s1, s2) = quadratic_roots(a, bbar, cbar)?;
    let (p1, p2) = (s1.recip(), s2.recip());
    Ok(HurdleForm {
        pi: c / cbar,
        p1,
        p2,
        w1: p1 / (p1 - p2),
        w2: p2 / (p2 - p1),
        method: HurdleMethod::Equal,
    })
}

/// General leading coefficients: split off `a/a_bar`, take residues of
/// `U_1(s) = [(b - a b_bar/a_bar) s + (c - a c_bar/a_bar)] / a_bar` over
/// `(s - s1)(s - s2)`, and set `w_i = rho_i p_i^2 / ((1 - p_i)(1 - pi))`.
pub fn hurdle_method4<T: Scalar>(
    a: T,
    b: T,
    c: T,
    abar: T,
    bbar: T,
    cbar: T,
) -> Result<HurdleForm<T>> {
    check_quadratic(a, b, c, abar, bbar, cbar)?;
    let (s1, s2) = quadratic_roots(abar, bbar, cbar)?;
    let lead = a / abar;
    let u1 = |s: T| ((b - lead * bbar) * s + (c - lead * cbar)) / abar;
    let rho1 = -u1(s1) / (s1 - s2);
    let rho2 = -u1(s2) / (s2 - s1);
    let pi = c / cbar;
    let one = T::one();
    if !(pi < one) {
        return Err(Error::ConstraintViolation(format!("pgf at zero below one (pi = {pi})")));
    }
    let (p1, p2) = (s1.recip(), s2.recip());
    Ok(HurdleForm {
        pi,
        p1,
        p2,
        w1: rho1 * p1 * p1 / ((one - p1) * (one - pi)),
        w2: rho2 * p2 * p2 / ((one - p2) * (one - pi)),
        method: HurdleMethod::Flexible,
    })
}

/// Quadratic route in the descending notation `(a s^2 + b s + c)/(a_bar s^2 + b_bar s + c_bar)`.
/// Equal leading coefficients (relative `1e-12`) take the equal-coefficient
/// formulas, otherwise the general ones.
pub fn quadratic_closed_form<T: Scalar>(
    a: T,
    b: T,
    c: T,
    abar: T,
    bbar: T,
    cbar: T,
) -> Result<HurdleForm<T>> {
    if close(a, abar, T::lit(1e-12)) {
        hurdle_method3(a, b, c, bbar, cbar)
    } else {
        hurdle_method4(a, b, c, abar, bbar, cbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyrat::RationalFunction;

    /// Ex. 6 coefficients in descending notation.
    fn rho_geo_bin(mu: f64, rho: f64, alpha: f64) -> [f64; 6] {
        let a = alpha * rho * (mu + rho);
        let b = -(rho * (1.0 - rho) + alpha * (mu + rho) * (1.0 + rho));
        let c = 1.0 - rho + alpha * (mu + rho);
        let bbar = -((mu + rho) * (1.0 - rho * (1.0 - alpha)) + rho * alpha * (1.0 + mu));
        let cbar = (1.0 + mu) * (1.0 - rho * (1.0 - alpha));
        [a, b, c, a, bbar, cbar]
    }

    #[test]
    fn ginar_linear() {
        let f = LinearForm::<f64>::new(0.75, -0.25, 1.0, -0.5).unwrap();
        assert_eq!(f.atom(), 0.5);
        assert_eq!(f.s1(), 2.0);
        assert_eq!(f.rho(), 0.5);
        assert_eq!(f.theta(), 0.5);
        let d = linear_closed_form::<f64>(0.75, -0.25, 1.0, -0.5).unwrap();
        assert!((d.table()[0] - 0.75).abs() < 1e-15 && (d.table()[1] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn two_parameter_point() {
        // r = 2, m = 1: a = 1 + r - m, b = m - r, c = 1 + r, d = -r
        let f = LinearForm::<f64>::new(2.0, -1.0, 3.0, -2.0).unwrap();
        assert!((f.atom() - 0.5).abs() < 1e-15);
        assert!((f.s1() - 1.5).abs() < 1e-15);
        assert!((f.pmf(0) - (0.5 + 0.5 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_modified_point() {
        // mu = 1, k = 0.3: a = 1 + k mu, b = -k mu, c = 1 + mu, d = -mu
        let f = LinearForm::<f64>::new(1.3, -0.3, 2.0, -1.0).unwrap();
        assert!((f.pmf(0) - 0.65).abs() < 1e-15);
    }

    #[test]
    fn linear_constraints() {
        assert!(LinearForm::<f64>::new(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(LinearForm::<f64>::new(1.2, -0.5, 1.0, -0.3).is_err());
        assert!(LinearForm::<f64>::new(0.5, 0.0, 1.0, -0.4).is_err());
        // root inside the disk
        assert!(LinearForm::<f64>::new(0.1, 0.9, 0.5, 0.5).is_err());
    }

    #[test]
    fn equidispersion_when_b_is_minus_d() {
        let f = LinearForm::<f64>::new(0.7, 0.3, 1.3, -0.3).unwrap();
        assert!((f.dispersion() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_moments_match_summation() {
        let f = LinearForm::<f64>::new(1.3, -0.3, 2.0, -1.0).unwrap();
        let (mut m1, mut m2) = (0.0, 0.0);
        for m in 0..2000 {
            let p = f.pmf(m);
            m1 += m as f64 * p;
            m2 += (m * m) as f64 * p;
        }
        assert!((m1 - f.mean()).abs() < 1e-12);
        assert!((m2 - m1 * m1 - f.variance()).abs() < 1e-11);
    }

    #[test]
    fn rho_geometric_binomial_point() {
        let [a, b, c, abar, bbar, cbar] = rho_geo_bin(1.0, 0.2, 0.3);
        let h = quadratic_closed_form(a, b, c, abar, bbar, cbar).unwrap();
        assert_eq!(h.method, HurdleMethod::Equal);
        assert!((h.pi - 1.16 / 1.72).abs() < 1e-14);
        assert!((h.pi - 0.674_419).abs() < 5e-7);
        assert!((h.p1 - 0.6).abs() < 1e-14);
        assert!((h.p2 - 0.06 / 0.86).abs() < 1e-14);
        assert!((h.w1 + h.w2 - 1.0).abs() < 1e-12);
        assert_eq!(hurdle_pmf(&h, 0), h.pi);
    }

    #[test]
    fn general_path_reduces_to_equal_path() {
        let [a, b, c, abar, bbar, cbar] = rho_geo_bin(0.7, 0.15, 0.4);
        let h3 = hurdle_method3(a, b, c, bbar, cbar).unwrap();
        let h4 = hurdle_method4(a, b, c, abar, bbar, cbar).unwrap();
        for (x, y) in [(h3.pi, h4.pi), (h3.p1, h4.p1), (h3.p2, h4.p2), (h3.w1, h4.w1), (h3.w2, h4.w2)] {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn hurdle_reconstructs_pgf() {
        let [a, b, c, abar, bbar, cbar] = rho_geo_bin(1.0, 0.2, 0.3);
        let r = RationalFunction::new(
            Polynomial::new(vec![c, b, a]),
            Polynomial::new(vec![cbar, bbar, abar]),
        )
        .unwrap();
        let h = quadratic_closed_form(a, b, c, abar, bbar, cbar).unwrap();
        let d = h.to_decomposition();
        for k in 0..50 {
            let s = 0.99 * k as f64 / 49.0;
            assert!((d.eval(s) - r.eval(s).unwrap()).abs() < 1e-10);
            let series: f64 = (0..400).map(|m| h.pmf(m) * s.powi(m as i32)).sum();
            assert!((series - r.eval(s).unwrap()).abs() < 1e-10);
        }
        for m in 0..40 {
            assert!((d.pmf_at(m) - h.pmf(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn hurdle_moments_match_summation() {
        let [a, b, c, abar, bbar, cbar] = rho_geo_bin(2.0, 0.1, 0.5);
        let h = quadratic_closed_form(a, b, c, abar, bbar, cbar).unwrap();
        let (mut m1, mut m2) = (0.0, 0.0);
        for m in 0..3000 {
            let p = h.pmf(m);
            m1 += m as f64 * p;
            m2 += (m * m) as f64 * p;
        }
        assert!((m1 - h.mean()).abs() < 1e-11);
        assert!((m2 - m1 * m1 - h.variance()).abs() < 1e-10);
    }

    #[test]
    fn hurdle_arithmetic_examples() {
        let h = HurdleForm::<f64> { pi: 0.3, p1: 0.5, p2: 0.0, w1: 1.0, w2: 0.0, method: HurdleMethod::Equal };
        assert_eq!(h.pmf(0), 0.3);
        assert!((h.pmf(2) - 0.175).abs() < 1e-15);
        let h = HurdleForm { w1: 0.7, w2: 0.3, ..h };
        // p2 = 0 contributes only at m = 1
        assert!((h.pmf(1) - 0.7 * (0.7 * 0.5 + 0.3)).abs() < 1e-15);
        assert!((h.pmf(3) - 0.7 * 0.7 * 0.5 * 0.25).abs() < 1e-15);
        let d = h.to_decomposition();
        for m in 0..10 {
            assert!((d.pmf_at(m) - h.pmf(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_roots_rejected() {
        // denominator 1 - s + s^2/4 = (s - 2)^2 / 4
        assert_eq!(hurdle_method3(0.25, -0.9, 0.9, -1.0, 1.0), Err(Error::RepeatedRoots));
    }

    #[test]
    fn nonnegativity_check() {
        let [a, b, c, abar, bbar, cbar] = rho_geo_bin(1.0, 0.2, 0.3);
        let h = quadratic_closed_form(a, b, c, abar, bbar, cbar).unwrap();
        assert!(h.check_nonnegative(50).is_ok());
        let bad = HurdleForm { w1: -0.5, w2: 1.5, ..h };
        assert!(bad.check_nonnegative(50).is_err());
    }
}
