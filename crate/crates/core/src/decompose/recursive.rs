use super::partial::cumulative;
use super::FractionalDecomposition;
use crate::pgf::ProductPgf;
use crate::polyrat::RationalFunction;
use crate::{Error, Result, Scalar};

/// Power-series coefficients `c_0..=c_n` of `U(s)/V(s)` from
/// `c_l = (a_l - sum_{i=max(0, l-q)}^{l-1} c_i b_{l-i}) / b_0`.
///
/// One streaming recursion covers both staged triangular solves (the
/// coefficients below and above `deg V`), since each system is lower
/// triangular Toeplitz in `b`.
pub fn pmf_recursive<T: Scalar>(r: &RationalFunction<T>, n: usize) -> Result<Vec<T>> {
    let a = r.num().coeffs();
    let b = r.den().coeffs();
    let b0 = b[0];
    if !(b0 > T::zero()) {
        return Err(Error::ZeroConstantDenominator);
    }
    let q = b.len() - 1;
    let mut c: Vec<T> = Vec::with_capacity(n + 1);
    for l in 0..=n {
        let mut acc = a.get(l).copied().unwrap_or_else(T::zero);
        for i in l.saturating_sub(q)..l {
            acc = acc - c[i] * b[l - i];
        }
        c.push(acc / b0);
    }
    Ok(c)
}

/// Geometric approximation `rho_1 / s_1^(m+1)` from the smallest-modulus root.
pub fn tail_geometric_approx<T: Scalar>(d: &FractionalDecomposition<T>, m: usize) -> Result<T> {
    d.dominant()
        .map(|t| t.pmf(m))
        .ok_or(Error::NoGeometricTerms)
}

/// A pmf tabulated from the power series of an arbitrary rational pgf, with
/// a geometric tail whose ratio is read off the last two entries.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedPmf<T> {
    table: Vec<T>,
    cdf: Vec<T>,
    tail_ratio: T,
}

impl<T: Scalar> TabulatedPmf<T> {
    /// Expands `r` until the accumulated mass reaches `target_mass`.
    pub fn from_rational(r: &RationalFunction<T>, target_mass: T, max_len: usize) -> Result<Self> {
        let a = r.num().coeffs();
        let b = r.den().coeffs();
        let b0 = b[0];
        if !(b0 > T::zero()) {
            return Err(Error::ZeroConstantDenominator);
        }
        let q = b.len() - 1;
        let mut c: Vec<T> = Vec::new();
        let mut mass = T::zero();
        let tail_len = 8;
        loop {
            let l = c.len();
            let mut acc = a.get(l).copied().unwrap_or_else(T::zero);
            for i in l.saturating_sub(q)..l {
                acc = acc - c[i] * b[l - i];
            }
            let p = acc / b0;
            if p < -T::dust() || !p.is_finite() {
                return Err(Error::NegativeProbability {
                    index: l,
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
            c.push(p);
            mass = mass + p;
            // past the numerator support the series is geometric-like; stop once the target is met
            if mass >= target_mass && l >= a.len() + tail_len {
                break;
            }
            if c.len() >= max_len {
                return Err(Error::DegenerateModel(format!(
                    "marginal pmf not tabulated to mass {target_mass} within {max_len} terms"
                )));
            }
        }
        for p in c.iter_mut() {
            if *p < T::zero() {
                *p = T::zero();
            }
        }
        Ok(Self::from_table(c))
    }

    /// Convolution of the factor tables, each captured to its share of
    /// `1 - target_mass`.
    pub fn from_product(p: &ProductPgf<T>, target_mass: T, max_len: usize) -> Result<Self> {
        let count = T::lit(p.factors().len().max(1) as f64);
        let share = T::one() - (T::one() - target_mass) / count;
        let mut acc = vec![T::one()];
        for f in p.factors() {
            let t = Self::from_rational(f, share, max_len)?;
            acc = convolve(&acc, t.table());
        }
        // drop the trailing dust produced by the convolution
        while acc.len() > 2 && acc[acc.len() - 1] < T::dust() * T::dust() {
            acc.pop();
        }
        Ok(Self::from_table(acc))
    }

    fn from_table(table: Vec<T>) -> Self {
        let n = table.len();
        let tail_ratio = if n >= 2 && table[n - 2] > T::zero() {
            (table[n - 1] / table[n - 2]).min(T::one() - T::epsilon())
        } else {
            T::zero()
        };
        let cdf = cumulative(&table);
        Self { table, cdf, tail_ratio }
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn cdf(&self) -> &[T] {
        &self.cdf
    }

    pub fn truncation(&self) -> usize {
        self.table.len() - 1
    }

    /// Ratio `q` of the geometric tail `p_{M+k} ~ p_M q^k`.
    pub fn tail_ratio(&self) -> T {
        self.tail_ratio
    }

    pub fn pmf(&self, m: usize) -> T {
        match self.table.get(m) {
            Some(&p) => p,
            None => {
                let last = self.table[self.truncation()];
                last * self.tail_ratio.powi((m - self.truncation()) as i32)
            }
        }
    }

    /// Mean, variance and fourth central moment by summation (tail ignored).
    pub fn moments(&self) -> (T, T, T) {
        let mut mean = T::zero();
        for (m, &p) in self.table.iter().enumerate() {
            mean = mean + T::lit(m as f64) * p;
        }
        let mut m2 = T::zero();
        let mut m4 = T::zero();
        for (m, &p) in self.table.iter().enumerate() {
            let d = T::lit(m as f64) - mean;
            let d2 = d * d;
            m2 = m2 + d2 * p;
            m4 = m4 + d2 * d2 * p;
        }
        (mean, m2, m4)
    }
}

fn convolve<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{partial_fractions, GeometricTerm};
    use crate::polyrat::Polynomial;

    type R = RationalFunction<f64>;

    #[test]
    fn ginar_recursion() {
        let c = pmf_recursive(&R::from_f64(&[0.75, -0.25], &[1.0, -0.5]).unwrap(), 2).unwrap();
        assert_eq!(c, vec![0.75, 0.125, 0.0625]);
    }

    #[test]
    fn constant_recursion() {
        assert_eq!(pmf_recursive(&R::constant(1.0), 3).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn recursion_matches_residues() {
        let u = Polynomial::from_f64(&[1.6, -0.6]);
        let v = Polynomial::from_roots(&[2.0, 13.0 / 3.0]).scale(0.3);
        let r = R::new(u, v).unwrap().normalized();
        let c = pmf_recursive(&r, 200).unwrap();
        let d = partial_fractions(&r).unwrap();
        for (m, &x) in c.iter().enumerate() {
            assert!((x - d.pmf_at(m)).abs() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn tail_approximation() {
        let single = FractionalDecomposition::new(
            Polynomial::constant(0.5),
            vec![GeometricTerm { rho: 0.5, root: 2.0 }],
        );
        assert_eq!(tail_geometric_approx(&single, 4).unwrap(), single.pmf_at(4));
        let empty = FractionalDecomposition::<f64>::new(Polynomial::constant(1.0), vec![]);
        assert_eq!(tail_geometric_approx(&empty, 0), Err(Error::NoGeometricTerms));

        let u = Polynomial::from_f64(&[1.6, -0.6]);
        let v = Polynomial::from_roots(&[2.0, 13.0 / 3.0]).scale(0.3);
        let d = partial_fractions(&R::new(u, v).unwrap()).unwrap();
        let exact = d.pmf_at(20);
        let approx = tail_geometric_approx(&d, 20).unwrap();
        assert!(((approx - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn product_of_two_geometrics() {
        // geo(0.5) * geo(0.5) is negative binomial(2, 0.5): p_m = (m + 1) / 2^(m + 2)
        let g = R::from_f64(&[0.5], &[1.0, -0.5]).unwrap();
        let t = TabulatedPmf::from_product(&ProductPgf::new(vec![g.clone(), g]), 1.0 - 1e-12, 100_000).unwrap();
        for m in 0..30 {
            assert!((t.pmf(m) - (m as f64 + 1.0) / 2f64.powi(m as i32 + 2)).abs() < 1e-15);
        }
        assert!(t.cdf().last().unwrap() >= &(1.0 - 1e-12));
    }

    #[test]
    fn tabulated_geometric() {
        let r = R::from_f64(&[0.4], &[1.0, -0.6]).unwrap();
        let t = TabulatedPmf::from_rational(&r, 1.0 - 1e-12, 100_000).unwrap();
        assert!((t.tail_ratio() - 0.6).abs() < 1e-12);
        assert!(t.cdf().last().unwrap() >= &(1.0 - 1e-12));
        let (mean, var, _) = t.moments();
        assert!((mean - 1.5).abs() < 1e-9);
        assert!((var - 3.75).abs() < 1e-8);
        assert!((t.pmf(t.truncation() + 3) - 0.4 * 0.6f64.powi(t.truncation() as i32 + 3)).abs() < 1e-20);
    }
}
