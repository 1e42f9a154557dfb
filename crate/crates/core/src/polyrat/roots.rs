use super::Polynomial;
use crate::{Error, Result, Scalar};

/// Real roots in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet<T> {
    pub roots: Vec<T>,
    /// Some pair of roots is closer than the distinctness tolerance.
    pub multiplicity_flag: bool,
}

impl<T: Scalar> RootSet<T> {
    fn from_roots(mut roots: Vec<T>, tol: T) -> Self {
        roots.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
        let multiplicity_flag = roots.windows(2).any(|w| !distinct(w[0], w[1], tol));
        Self { roots, multiplicity_flag }
    }

    /// Smallest root in absolute value.
    pub fn smallest_modulus(&self) -> Option<T> {
        self.roots
            .iter()
            .copied()
            .min_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("roots are finite"))
    }
}

pub(crate) fn distinct<T: Scalar>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() > tol * T::one().max(a.abs()).max(b.abs())
}

/// All real roots of `p`, which must be real and number `degree(p)`.
///
/// Degrees one and two are solved in closed form. Higher degrees are
/// bracketed between consecutive critical points inside the Cauchy bound and
/// refined by bisection to full precision.
pub fn real_distinct_roots<T: Scalar>(p: &Polynomial<T>, tol: T) -> Result<RootSet<T>> {
    let degree = p.degree();
    match degree {
        0 => Err(Error::ConstantPolynomial),
        1 => Ok(RootSet::from_roots(vec![linear_root(p)], tol)),
        2 => {
            let (a, b, c) = (p.coeff(2), p.coeff(1), p.coeff(0));
            let disc = b * b - T::lit(4.0) * a * c;
            let scale = (b * b).max((T::lit(4.0) * a * c).abs());
            if disc < -tol * scale {
                return Err(Error::ComplexRoots {
                    discriminant: disc.to_f64().unwrap_or(f64::NAN),
                });
            }
            Ok(RootSet::from_roots(quadratic_roots(a, b, c, disc.max(T::zero())), tol))
        }
        _ => {
            let roots = isolate(p);
            if roots.len() < degree {
                return Err(Error::NotAllRealRoots {
                    found: roots.len(),
                    degree,
                });
            }
            Ok(RootSet::from_roots(roots, tol))
        }
    }
}

/// Whatever real roots can be found, without requiring all of them to be real.
/// Double roots at critical points are listed twice.
pub fn real_roots<T: Scalar>(p: &Polynomial<T>) -> Vec<T> {
    let mut roots = match p.degree() {
        0 => Vec::new(),
        1 => vec![linear_root(p)],
        2 => {
            let (a, b, c) = (p.coeff(2), p.coeff(1), p.coeff(0));
            let disc = b * b - T::lit(4.0) * a * c;
            let scale = (b * b).max((T::lit(4.0) * a * c).abs());
            if disc < -T::epsilon() * T::lit(64.0) * scale {
                Vec::new()
            } else {
                quadratic_roots(a, b, c, disc.max(T::zero()))
            }
        }
        _ => isolate(p),
    };
    roots.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
    roots
}

fn linear_root<T: Scalar>(p: &Polynomial<T>) -> T {
    -p.coeff(0) / p.coeff(1)
}

/// Stable quadratic formula: the larger-magnitude root never suffers cancellation.
fn quadratic_roots<T: Scalar>(a: T, b: T, c: T, disc: T) -> Vec<T> {
    let sq = disc.sqrt();
    let q = if b >= T::zero() {
        -(b + sq) / T::lit(2.0)
    } else {
        (sq - b) / T::lit(2.0)
    };
    if q.is_zero() {
        // b = 0 and c = 0: double root at the origin
        return vec![T::zero(), T::zero()];
    }
    vec![q / a, c / q]
}

fn isolate<T: Scalar>(p: &Polynomial<T>) -> Vec<T> {
    if p.degree() <= 2 {
        return real_roots(p);
    }
    let bound = p.cauchy_bound();
    let mut crit: Vec<T> = real_roots(&p.derivative())
        .into_iter()
        .filter(|c| c.abs() < bound)
        .collect();
    crit.dedup_by(|a, b| a == b);

    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(-bound);
    knots.extend(crit.iter().copied());
    knots.push(bound);

    let mut roots = Vec::new();
    for &c in &crit {
        if touches_zero(p, c) {
            // even-multiplicity root at a critical point: no sign change to bracket
            roots.push(c);
            roots.push(c);
        }
    }
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (p.eval(lo), p.eval(hi));
        if touches_zero(p, lo) || touches_zero(p, hi) {
            continue;
        }
        if (flo < T::zero()) != (fhi < T::zero()) {
            roots.push(bisect(p, lo, hi, flo));
        }
    }
    roots
}

fn touches_zero<T: Scalar>(p: &Polynomial<T>, x: T) -> bool {
    let magnitude = p
        .coeffs()
        .iter()
        .rev()
        .fold(T::zero(), |acc, c| acc * x.abs() + c.abs());
    p.eval(x).abs() <= magnitude * T::epsilon() * T::lit(64.0)
}

fn bisect<T: Scalar>(p: &Polynomial<T>, mut lo: T, mut hi: T, mut flo: T) -> T {
    let two = T::lit(2.0);
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = p.eval(mid);
        if fmid.is_zero() {
            return mid;
        }
        if (fmid < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) / two
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Polynomial<f64>;

    #[test]
    fn factored_quadratic() {
        let r = real_distinct_roots(&P::from_f64(&[2.0, -3.0, 1.0]), 1e-9).unwrap();
        assert_eq!(r.roots, vec![1.0, 2.0]);
        assert!(!r.multiplicity_flag);
    }

    #[test]
    fn rho_geometric_binomial_denominator() {
        // (s - (1+mu)/(rho+mu)) (s - (1-rho(1-alpha))/(rho alpha)) at mu=1, rho=0.2, alpha=0.3
        let (mu, rho, alpha) = (1.0, 0.2, 0.3);
        let s1: f64 = (1.0 + mu) / (rho + mu);
        let s2: f64 = (1.0 - rho * (1.0 - alpha)) / (rho * alpha);
        let den = &P::from_f64(&[1.0 + mu, -(rho + mu)]) * &P::from_f64(&[1.0 - rho * (1.0 - alpha), -rho * alpha]);
        let r = real_distinct_roots(&den, 1e-9).unwrap();
        assert!((r.roots[0] - 1.666_666_666_666_667).abs() < 1e-12);
        assert!((r.roots[1] - 14.333_333_333_333_334).abs() < 1e-12);
        assert!((r.roots[0] - s1).abs() < 1e-12 && (r.roots[1] - s2).abs() < 1e-12);
    }

    #[test]
    fn complex_quadratic_errors() {
        assert!(matches!(
            real_distinct_roots(&P::from_f64(&[1.0, 0.0, 1.0]), 1e-9),
            Err(Error::ComplexRoots { .. })
        ));
    }

    #[test]
    fn constant_has_no_roots() {
        assert_eq!(real_distinct_roots(&P::from_f64(&[3.0]), 1e-9), Err(Error::ConstantPolynomial));
    }

    #[test]
    fn cubic_and_quartic() {
        let p = P::from_roots(&[-2.5, 1.25, 7.0]);
        let r = real_distinct_roots(&p, 1e-9).unwrap();
        for (got, want) in r.roots.iter().zip([-2.5, 1.25, 7.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }

        let p = P::from_roots(&[1.1, 1.2, 3.0, 40.0]).scale(0.37);
        let r = real_distinct_roots(&p, 1e-9).unwrap();
        for (got, want) in r.roots.iter().zip([1.1, 1.2, 3.0, 40.0]) {
            assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn cubic_with_complex_pair() {
        // (s - 2)(s^2 + 1)
        let p = &P::from_f64(&[-2.0, 1.0]) * &P::from_f64(&[1.0, 0.0, 1.0]);
        assert_eq!(
            real_distinct_roots(&p, 1e-9),
            Err(Error::NotAllRealRoots { found: 1, degree: 3 })
        );
        assert_eq!(real_roots(&p).len(), 1);
    }

    #[test]
    fn repeated_roots_are_flagged() {
        let r = real_distinct_roots(&P::from_roots(&[3.0, 3.0]), 1e-9).unwrap();
        assert!(r.multiplicity_flag);
        let r = real_distinct_roots(&P::from_roots(&[1.5, 3.0, 3.0]), 1e-9).unwrap();
        assert!(r.multiplicity_flag);
        assert_eq!(r.roots.len(), 3);
    }

    #[test]
    fn single_precision_quadratic() {
        let p = Polynomial::<f32>::from_f64(&[2.0, -3.0, 1.0]);
        let r = real_distinct_roots(&p, f32::distinct_tol()).unwrap();
        assert!((r.roots[0] - 1.0).abs() < 1e-6 && (r.roots[1] - 2.0).abs() < 1e-6);
    }
}
