use serde::Serialize;

use super::{geometric_tail_moments, FractionalDecomposition, GeometricTerm};
use crate::polyrat::{real_distinct_roots, Polynomial, RationalFunction};
use crate::{Error, Result, Scalar};

/// Hard cap on tabulated support, far beyond any pmf of practical interest.
const MAX_TRUNCATION: usize = 50_000_000;
/// Steps searched past the table for the tail-dominance certificate.
const CERTIFICATE_SEARCH: usize = 100_000;

/// Residue decomposition of `U(s)/V(s)`.
///
/// When `deg U >= deg V` the polynomial quotient becomes `atom_poly`; the
/// remainder `U_k` gives residues `rho_i = -U_k(s_i) / V'(s_i)`.
pub fn partial_fractions<T: Scalar>(r: &RationalFunction<T>) -> Result<FractionalDecomposition<T>> {
    let (num, den) = (r.num(), r.den());
    if den.degree() == 0 {
        return Ok(FractionalDecomposition::new(
            num.scale(den.coeff(0).recip()),
            Vec::new(),
        ));
    }
    let (quotient, remainder) = num.divmod(den)?;
    let roots = real_distinct_roots(den, T::distinct_tol())?;
    if roots.multiplicity_flag {
        return Err(Error::RepeatedRoots);
    }
    let dv = den.derivative();
    let mut terms = Vec::with_capacity(roots.roots.len());
    for &s in &roots.roots {
        if s.abs() <= T::one() {
            return Err(Error::RootInsideDisk {
                root: s.to_f64().unwrap_or(f64::NAN),
            });
        }
        terms.push(GeometricTerm {
            rho: -remainder.eval(s) / dv.eval(s),
            root: s,
        });
    }
    Ok(FractionalDecomposition::new(quotient, terms))
}

/// A decomposition together with its pmf tabulated to `truncation`.
#[derive(Clone, Debug, PartialEq)]
pub struct InnovationDistribution<T> {
    decomposition: FractionalDecomposition<T>,
    table: Vec<T>,
    cdf: Vec<T>,
    tail_rho: T,
    tail_s: T,
    tail_certified: bool,
}

/// Tabulation summary for reports.
#[derive(Clone, Debug, Serialize)]
pub struct TableSummary {
    pub truncation: usize,
    pub table_mass: f64,
    pub tail_rho: f64,
    pub tail_s: f64,
    pub tail_certified: bool,
}

/// Tabulates the pmf of `d` until the accumulated mass reaches `target_mass`.
///
/// Entries in `[-dust, 0)` are clamped to zero; anything more negative, in
/// the table or past it, is a [`Error::NegativeProbability`].
pub fn pmf_from_decomposition<T: Scalar>(
    d: &FractionalDecomposition<T>,
    target_mass: T,
) -> Result<InnovationDistribution<T>> {
    if !(target_mass > T::zero() && target_mass < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "target mass {target_mass} must lie in (0, 1)"
        )));
    }
    let allowance = T::one() - target_mass;
    let mut truncation = d.atom_degree();
    while d.tail_bound(truncation) > allowance {
        truncation += 1;
        if truncation > MAX_TRUNCATION {
            return Err(Error::DegenerateModel(
                "pmf tail too heavy to tabulate".into(),
            ));
        }
    }
    let mut table = Vec::with_capacity(truncation + 1);
    for m in 0..=truncation {
        table.push(d.pmf_at(m));
    }
    clamp_dust(&mut table)?;
    let certified = certify_tail(d, truncation)?;
    let dist = InnovationDistribution::assemble(d.clone(), table, certified);
    let mass = dist.total_mass();
    if (mass - T::one()).abs() > T::mass_tol() {
        return Err(Error::Inconsistent(format!(
            "tabulated mass plus tail is {mass}, not 1"
        )));
    }
    Ok(dist)
}

fn clamp_dust<T: Scalar>(table: &mut [T]) -> Result<()> {
    for (m, p) in table.iter_mut().enumerate() {
        if *p < -T::dust() || !p.is_finite() {
            return Err(Error::NegativeProbability {
                index: m,
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        if *p < T::zero() {
            *p = T::zero();
        }
    }
    Ok(())
}

/// Nonnegativity past the table: the dominant term must be a positive
/// geometric and outweigh all others from some point on, with every entry up
/// to that point nonnegative.
fn certify_tail<T: Scalar>(d: &FractionalDecomposition<T>, truncation: usize) -> Result<bool> {
    let Some(dom) = d.dominant() else {
        return Ok(true);
    };
    if dom.rho <= T::zero() || dom.root <= T::zero() {
        let from = truncation + 1;
        let index = (from..from + CERTIFICATE_SEARCH)
            .find(|&m| d.pmf_at(m) < T::zero())
            .unwrap_or(from);
        return Err(Error::NegativeProbability {
            index,
            value: d.pmf_at(index).to_f64().unwrap_or(f64::NAN),
        });
    }
    for m in truncation + 1..truncation + 1 + CERTIFICATE_SEARCH {
        if dominates(d, m) {
            return Ok(true);
        }
        let p = d.pmf_at(m);
        if p < T::zero() {
            return Err(Error::NegativeProbability {
                index: m,
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(false)
}

/// `|term_1(m)| > sum_{j > 1} |term_j(m)|`; once true it stays true for larger `m`.
fn dominates<T: Scalar>(d: &FractionalDecomposition<T>, m: usize) -> bool {
    let mut it = d.terms.iter();
    let Some(dom) = it.next() else { return true };
    let rest = it.fold(T::zero(), |acc, t| acc + t.pmf(m).abs());
    dom.pmf(m) > rest
}

impl<T: Scalar> InnovationDistribution<T> {
    fn assemble(decomposition: FractionalDecomposition<T>, table: Vec<T>, certified: bool) -> Self {
        let (tail_rho, tail_s) = decomposition
            .dominant()
            .map_or((T::zero(), T::infinity()), |t| (t.rho, t.root));
        let cdf = cumulative(&table);
        Self {
            decomposition,
            table,
            cdf,
            tail_rho,
            tail_s,
            tail_certified: certified,
        }
    }

    /// Builds a distribution from arbitrary parts without any validation.
    /// Used to exercise the verification checks with broken inputs.
    pub fn from_parts_unchecked(
        decomposition: FractionalDecomposition<T>,
        table: Vec<T>,
        tail_rho: T,
        tail_s: T,
    ) -> Self {
        let cdf = cumulative(&table);
        Self {
            decomposition,
            table,
            cdf,
            tail_rho,
            tail_s,
            tail_certified: false,
        }
    }

    /// Tabulates `d` on `0..=truncation` with no clamping and no checks.
    pub fn tabulate_unchecked(d: FractionalDecomposition<T>, truncation: usize) -> Self {
        let table: Vec<T> = (0..=truncation).map(|m| d.pmf_at(m)).collect();
        let mut out = Self::assemble(d, table, false);
        out.tail_certified = false;
        out
    }

    pub fn decomposition(&self) -> &FractionalDecomposition<T> {
        &self.decomposition
    }

    /// Last tabulated index `M*`.
    pub fn truncation(&self) -> usize {
        self.table.len().saturating_sub(1)
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn cdf(&self) -> &[T] {
        &self.cdf
    }

    pub fn tail_rho(&self) -> T {
        self.tail_rho
    }

    pub fn tail_s(&self) -> T {
        self.tail_s
    }

    pub fn tail_certified(&self) -> bool {
        self.tail_certified
    }

    /// Table value, or the exact decomposition value past the table.
    pub fn pmf(&self, m: usize) -> T {
        self.table
            .get(m)
            .copied()
            .unwrap_or_else(|| self.decomposition.pmf_at(m))
    }

    pub fn table_mass(&self) -> T {
        self.cdf.last().copied().unwrap_or_else(T::zero)
    }

    /// Mass of the smallest-root geometric beyond the table.
    pub fn tail_mass(&self) -> T {
        if self.tail_s.is_infinite() || self.tail_rho.is_zero() {
            return T::zero();
        }
        let t = GeometricTerm {
            rho: self.tail_rho,
            root: self.tail_s,
        };
        t.tail_mass(Some(self.truncation()))
    }

    pub fn total_mass(&self) -> T {
        self.table_mass() + self.tail_mass()
    }

    /// Mean and variance by summing the table, plus the exact geometric
    /// remainder of every term past the table.
    pub fn moments(&self) -> (T, T) {
        let mut s1 = T::zero();
        let mut s2 = T::zero();
        for (m, &p) in self.table.iter().enumerate() {
            let mm = T::lit(m as f64);
            s1 = s1 + mm * p;
            s2 = s2 + mm * mm * p;
        }
        let start = self.table.len();
        for t in &self.decomposition.terms {
            // rho / s^(m+1) = (rho / s) x^m with x = 1/s
            let x = t.root.recip();
            let [_, t1, t2] = geometric_tail_moments(x, start);
            s1 = s1 + t.rho * x * t1;
            s2 = s2 + t.rho * x * t2;
        }
        (s1, s2 - s1 * s1)
    }

    pub fn summary(&self) -> TableSummary {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        TableSummary {
            truncation: self.truncation(),
            table_mass: f(self.table_mass()),
            tail_rho: f(self.tail_rho),
            tail_s: f(self.tail_s),
            tail_certified: self.tail_certified,
        }
    }
}

pub(crate) fn cumulative<T: Scalar>(table: &[T]) -> Vec<T> {
    table
        .iter()
        .scan(T::zero(), |acc, &p| {
            *acc = *acc + p;
            Some(*acc)
        })
        .collect()
}

/// Unit mass at zero.
impl<T: Scalar> Default for InnovationDistribution<T> {
    fn default() -> Self {
        let d = FractionalDecomposition::new(Polynomial::constant(T::one()), Vec::new());
        Self::assemble(d, vec![T::one()], true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type R = RationalFunction<f64>;

    fn nginar(mu: f64, alpha: f64) -> R {
        let u = Polynomial::from_f64(&[1.0 + alpha * (1.0 + mu), -alpha * (1.0 + mu)]);
        let v = Polynomial::from_roots(&[(1.0 + mu) / mu, (1.0 + alpha) / alpha]).scale(alpha * mu);
        R::new(u, v).unwrap()
    }

    #[test]
    fn ginar_linear_pgf() {
        let d = partial_fractions(&R::from_f64(&[0.75, -0.25], &[1.0, -0.5]).unwrap()).unwrap();
        assert_eq!(d.atom_poly.coeffs(), &[0.5]);
        assert_eq!(d.terms.len(), 1);
        assert!((d.terms[0].rho - 0.5).abs() < 1e-15);
        assert!((d.terms[0].root - 2.0).abs() < 1e-15);
    }

    #[test]
    fn nginar_residues_and_zero_mass() {
        let (mu, alpha) = (1.0, 0.3);
        let d = partial_fractions(&nginar(mu, alpha)).unwrap();
        assert!(d.atom_poly.is_zero());
        let rho1 = (1.0 / mu) * (1.0 - alpha * mu / (mu - alpha));
        let rho2 = mu / (mu - alpha);
        assert!((d.terms[0].root - 2.0).abs() < 1e-14);
        assert!((d.terms[0].rho - rho1).abs() < 1e-13);
        assert!((rho1 - 4.0 / 7.0).abs() < 1e-15);
        assert!((d.terms[1].root - 13.0 / 3.0).abs() < 1e-13);
        assert!((d.terms[1].rho - rho2).abs() < 1e-13);
        let p0 = d.pmf_at(0);
        assert!((p0 - 0.615_385).abs() < 5e-7, "{p0}");
        assert!((d.total_mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constant_pgf_is_unit_atom() {
        let d = partial_fractions(&R::constant(1.0)).unwrap();
        assert_eq!(d.atom_poly.coeffs(), &[1.0]);
        assert!(d.terms.is_empty());
        let dist = pmf_from_decomposition(&d, 1.0 - 1e-12).unwrap();
        assert_eq!(dist.table(), &[1.0]);
        assert_eq!(dist.total_mass(), 1.0);
    }

    #[test]
    fn ginar_table() {
        let d = partial_fractions(&R::from_f64(&[0.75, -0.25], &[1.0, -0.5]).unwrap()).unwrap();
        let dist = pmf_from_decomposition(&d, 1.0 - 1e-12).unwrap();
        let t = dist.table();
        for (m, want) in [0.75, 0.125, 0.0625].into_iter().enumerate() {
            assert!((t[m] - want).abs() < 1e-15);
        }
        assert!(dist.tail_mass() <= 1e-12);
        assert!((dist.total_mass() - 1.0).abs() < 1e-14);
        assert!(dist.tail_certified());
        let (mean, var) = dist.moments();
        // 0.5 * geo(theta = 0.5): mean 0.5, second moment 0.5 * 3
        assert!((mean - 0.5).abs() < 1e-13);
        assert!((var - (1.5 - 0.25)).abs() < 1e-13);
    }

    #[test]
    fn nginar_outside_region_is_negative() {
        let d = partial_fractions(&nginar(1.0, 0.6)).unwrap();
        match pmf_from_decomposition(&d, 1.0 - 1e-12) {
            Err(Error::NegativeProbability { index, value }) => {
                assert_eq!(index, 5);
                assert!(value < 0.0);
            }
            other => panic!("expected negative probability, got {other:?}"),
        }
    }

    #[test]
    fn repeated_and_interior_roots() {
        let rep = R::new(Polynomial::constant(1.0), Polynomial::from_roots(&[2.0, 2.0]).scale(0.25)).unwrap();
        assert_eq!(partial_fractions(&rep), Err(Error::RepeatedRoots));
        let inside = R::new(Polynomial::constant(1.0), Polynomial::from_f64(&[1.0, -2.0])).unwrap();
        assert!(matches!(partial_fractions(&inside), Err(Error::RootInsideDisk { .. })));
    }

    #[test]
    fn reconstruction_on_grid() {
        let r = nginar(1.3, 0.2);
        let d = partial_fractions(&r).unwrap();
        for k in 0..50 {
            let s = 0.99 * k as f64 / 49.0;
            assert!((d.eval(s) - r.eval(s).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn improper_quotient_keeps_atoms() {
        // quadratic over linear: the quotient has degree one
        let num = Polynomial::from_f64(&[0.2, 0.1, 0.3]);
        let den = Polynomial::from_f64(&[1.0, -0.4]);
        let r = R::new(num, den).unwrap();
        let d = partial_fractions(&r).unwrap();
        assert_eq!(d.atom_poly.degree(), 1);
        for k in 0..20 {
            let s = 0.05 * k as f64;
            assert!((d.eval(s) - r.eval(s).unwrap()).abs() < 1e-12);
        }
    }
}
