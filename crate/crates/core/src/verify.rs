//! Oracle checks: pgf identity, pmf validity, cross-method agreement,
//! moments and tail quality. Failures are report entries, never errors.

use serde::Serialize;

use crate::catalog::InarModel;
use crate::decompose::{partial_fractions, pmf_recursive, InnovationDistribution};
use crate::pgf::counting_pgf;
use crate::simulate::SeriesSample;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    /// `|observed - expected| <= tolerance`; NaN fails.
    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        let passed = (observed - expected).abs() <= tolerance;
        Self { name: name.into(), passed, observed, expected, tolerance }
    }

    fn flag(name: impl Into<String>, passed: bool, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed, observed, expected, tolerance }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.passed);
        Self { checks, overall }
    }

    pub fn merge(reports: impl IntoIterator<Item = VerificationReport>) -> Self {
        Self::new(reports.into_iter().flat_map(|r| r.checks).collect())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Max over `grid_points` equispaced `s` in `[0, 0.99]` of
/// `|phi_X(s) - phi_X(phi_N(s)) phi_eps(s)|`, with `phi_eps` taken from the
/// model's stored decomposition.
pub fn check_pgf_identity(model: &InarModel, grid_points: usize, tol: f64) -> VerificationReport {
    let counting = match counting_pgf(&model.thinning()) {
        Ok(c) => c,
        Err(_) => return VerificationReport::new(vec![Check::flag("pgf identity", false, f64::NAN, 0.0, tol)]),
    };
    let d = model.innovation.decomposition();
    let steps = grid_points.max(2) - 1;
    let mut worst = 0.0_f64;
    for k in 0..=steps {
        let s = 0.99 * k as f64 / steps as f64;
        let lhs = model.marginal_pgf.eval_unchecked(s);
        let rhs = model.marginal_pgf.eval_unchecked(counting.eval_unchecked(s)) * d.eval(s);
        let gap = (lhs - rhs).abs();
        worst = if gap.is_nan() { f64::NAN } else { worst.max(gap) };
    }
    VerificationReport::new(vec![Check::within("pgf identity", worst, 0.0, tol)])
}

/// Nonnegative table, unit total mass and, for signed mixtures, a tail certificate.
pub fn check_pmf_validity(d: &InnovationDistribution<f64>, tol: f64) -> VerificationReport {
    let table = d.table();
    let first_negative = table.iter().position(|&p| p < 0.0 || p.is_nan());
    let min = table.iter().copied().fold(f64::INFINITY, f64::min);
    let nonneg = match first_negative {
        Some(i) => Check::flag(format!("pmf nonnegative (first negative at m = {i})"), false, table[i], 0.0, 0.0),
        None => Check::flag("pmf nonnegative", true, min, 0.0, 0.0),
    };

    let m = d.truncation();
    let tail = if d.tail_s() > 1.0 && d.tail_s().is_finite() {
        d.tail_rho() * d.tail_s().powi(-(m as i32 + 1)) / (d.tail_s() - 1.0)
    } else if d.tail_rho() == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let mass = Check::within("total mass", table.iter().sum::<f64>() + tail, 1.0, tol);

    VerificationReport::new(vec![nonneg, mass, tail_certificate(d)])
}

/// Past the table, the dominant term must carry the stored tail and
/// outweigh every other term in absolute value.
fn tail_certificate(d: &InnovationDistribution<f64>) -> Check {
    let terms = &d.decomposition().terms;
    let Some(dom) = terms.first() else {
        let ok = d.tail_rho() == 0.0;
        return Check::flag("tail certificate", ok, d.tail_rho(), 0.0, 0.0);
    };
    let stored_gap = (d.tail_rho() - dom.rho).abs() / dom.rho.abs()
        + (d.tail_s() - dom.root).abs() / dom.root.abs();
    if stored_gap > 1e-12 {
        return Check::flag("tail certificate (stored tail differs from the dominant term)", false, stored_gap, 0.0, 1e-12);
    }
    let signed = terms.iter().any(|t| t.rho < 0.0 || t.root < 0.0);
    if !signed {
        return Check::flag("tail certificate", true, 0.0, 1.0, 0.0);
    }
    let m = d.truncation() + 1;
    let head = dom.pmf(m);
    let rest: f64 = terms[1..].iter().map(|t| t.pmf(m).abs()).sum();
    let dominated = dom.rho > 0.0 && dom.root > 0.0 && rest <= head;
    let ratio = if head > 0.0 { rest / head } else { f64::INFINITY };
    Check::flag("tail certificate", dominated, ratio, 1.0, 0.0)
}

/// Entrywise agreement for `m <= n` of the recursive solve, the stored
/// table, a fresh partial-fraction expansion and any closed form.
pub fn check_cross_method(model: &InarModel, n: usize, tol: f64) -> VerificationReport {
    let Ok(recursive) = pmf_recursive(&model.innovation_pgf, n) else {
        return VerificationReport::new(vec![Check::flag("recursion", false, f64::NAN, 0.0, tol)]);
    };
    let max_gap = |f: &dyn Fn(usize) -> f64| {
        (0..=n).fold(0.0_f64, |acc, m| {
            let g = (recursive[m] - f(m)).abs();
            if g.is_nan() { f64::NAN } else { acc.max(g) }
        })
    };
    let mut checks = vec![Check::within(
        "recursion vs stored pmf",
        max_gap(&|m| model.innovation.pmf(m)),
        0.0,
        tol,
    )];
    checks.push(match partial_fractions(&model.innovation_pgf) {
        Ok(d) => Check::within("recursion vs partial fractions", max_gap(&|m| d.pmf_at(m)), 0.0, tol),
        Err(_) => Check::flag("recursion vs partial fractions", false, f64::NAN, 0.0, tol),
    });
    if let Some(h) = &model.hurdle {
        checks.push(Check::within("recursion vs hurdle form", max_gap(&|m| h.pmf(m)), 0.0, tol));
    }
    if let Some(l) = &model.linear {
        checks.push(Check::within("recursion vs linear form", max_gap(&|m| l.pmf(m)), 0.0, tol));
    }
    VerificationReport::new(checks)
}

/// Relative tolerance for pmf-summed against closed-form moments.
pub const PMF_MOMENT_RTOL: f64 = 1e-7;
/// Width of Monte Carlo bands in standard errors.
pub const SE_BAND: f64 = 4.0;
/// Largest accepted total-variation distance between sample and marginal.
pub const TV_LIMIT: f64 = 0.005;

fn relative(name: &str, observed: f64, expected: f64) -> Check {
    Check::within(name, observed, expected, PMF_MOMENT_RTOL * expected.abs())
}

/// Closed-form vs pmf-sum moments, and closed form vs the sample when one is given.
pub fn check_moments(model: &InarModel, sample: Option<&SeriesSample>) -> VerificationReport {
    let cf = &model.moments;
    let (ie, iv) = model.innovation.moments();
    let (me, mv, m4) = model.marginal.moments();
    let mut checks = vec![
        relative("innovation mean: pmf sum vs closed form", ie, cf.innovation_mean),
        relative("innovation variance: pmf sum vs closed form", iv, cf.innovation_var),
        relative("marginal mean: pmf sum vs closed form", me, cf.marginal_mean),
        relative("marginal variance: pmf sum vs closed form", mv, cf.marginal_var),
    ];
    if let Some(s) = sample {
        let alpha = model.thinning().alpha();
        let n = s.values.len() as f64;
        let ess = (1.0 + alpha) / (1.0 - alpha);
        let (mean, var) = (cf.marginal_mean, cf.marginal_var);
        let se_mean = (var / n * ess).sqrt();
        let se_var = ((m4 - mv * mv).max(0.0) / n * ess).sqrt();
        let se_disp = se_var / mean + var * se_mean / (mean * mean);
        checks.push(Check::within("sample mean", s.mean(), mean, SE_BAND * se_mean));
        checks.push(Check::within("sample variance", s.variance(), var, SE_BAND * se_var));
        checks.push(Check::within("sample dispersion", s.variance() / s.mean(), cf.marginal_dispersion, SE_BAND * se_disp));
        let band = 4.0 * (1.0 + 2.0 * alpha) / n.sqrt();
        checks.push(Check::within("sample lag-1 autocorrelation", s.lag1_autocorrelation(), alpha, band));
        let freq = s.frequencies();
        let mut tv = 0.0;
        let mut covered = 0.0;
        for (m, &f) in freq.iter().enumerate() {
            let p = model.marginal.pmf(m);
            tv += (f - p).abs();
            covered += p;
        }
        tv = 0.5 * (tv + (1.0 - covered).max(0.0));
        checks.push(Check::flag("total variation to marginal pmf", tv < TV_LIMIT, tv, 0.0, TV_LIMIT));
    }
    VerificationReport::new(checks)
}

/// Below this relative error an approximation counts as converged.
const ROUNDING_FLOOR: f64 = 1e-14;

/// Relative errors of the smallest-root geometric approximation at
/// `m_start`, `2 m_start` and `4 m_start`.
pub fn tail_errors(d: &InnovationDistribution<f64>, m_start: usize) -> [f64; 3] {
    [m_start, 2 * m_start, 4 * m_start].map(|m| {
        let exact = d.decomposition().pmf_at(m);
        let approx = d.tail_rho() * d.tail_s().powi(-(m as i32 + 1));
        ((approx - exact) / exact).abs()
    })
}

/// Passes iff the relative error strictly decreases, or has reached the rounding floor.
pub fn check_tail_quality(d: &InnovationDistribution<f64>, m_start: usize) -> VerificationReport {
    if d.decomposition().terms.len() < 2 {
        let exact = d.decomposition().terms.first().is_none_or(|t| t.rho == d.tail_rho() && t.root == d.tail_s());
        return VerificationReport::new(vec![Check::flag("tail approximation (single term)", exact, 0.0, 0.0, 0.0)]);
    }
    let e = tail_errors(d, m_start);
    let step = |a: f64, b: f64| b < a || (a <= ROUNDING_FLOOR && b <= ROUNDING_FLOOR);
    let decreasing = step(e[0], e[1]) && step(e[1], e[2]);
    VerificationReport::new(vec![Check::flag(
        format!("tail approximation error decreasing over m = {}, {}, {}", m_start, 2 * m_start, 4 * m_start),
        decreasing,
        e[2],
        0.0,
        e[0],
    )])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    pub grid_points: usize,
    pub tolerance: f64,
    pub cross_n: usize,
    pub mass_tolerance: f64,
    pub tail_m_start: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { grid_points: 50, tolerance: 1e-10, cross_n: 200, mass_tolerance: 1e-10, tail_m_start: 5 }
    }
}

/// Every check for one model; the empirical ones only when a sample is supplied.
pub fn full_suite(model: &InarModel, sample: Option<&SeriesSample>, opts: &SuiteOptions) -> VerificationReport {
    VerificationReport::merge([
        check_pgf_identity(model, opts.grid_points, opts.tolerance),
        check_pmf_validity(&model.innovation, opts.mass_tolerance),
        check_cross_method(model, opts.cross_n, opts.tolerance),
        check_moments(model, sample),
        check_tail_quality(&model.innovation, opts.tail_m_start),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_model, CatalogModel};
    use crate::decompose::{partial_fractions, FractionalDecomposition, GeometricTerm};
    use crate::pgf::ThinningOperator;
    use crate::polyrat::{Polynomial, RationalFunction};
    use crate::simulate::{simulate_series, SimulationConfig};

    fn ginar() -> InarModel {
        build_model(&CatalogModel::Ginar { theta: 0.5, alpha: 0.5 }).unwrap()
    }

    fn nginar() -> InarModel {
        build_model(&CatalogModel::Nginar { mu: 1.0, alpha: 0.3 }).unwrap()
    }

    /// Same table and tail, but the first residue scaled by 1.01.
    fn perturbed_residue(m: &InarModel) -> InarModel {
        let d = m.innovation.decomposition();
        let mut terms = d.terms.clone();
        terms[0].rho *= 1.01;
        let bad = FractionalDecomposition::new(d.atom_poly.clone(), terms);
        let table: Vec<f64> = (0..=m.innovation.truncation()).map(|k| bad.pmf_at(k)).collect();
        let (r, s) = (bad.terms[0].rho, bad.terms[0].root);
        m.clone().with_innovation_unchecked(InnovationDistribution::from_parts_unchecked(bad, table, r, s))
    }

    #[test]
    fn passes_on_valid_models() {
        for m in [ginar(), nginar()] {
            let r = full_suite(&m, None, &SuiteOptions::default());
            assert!(r.overall, "{:?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn pgf_identity_fault() {
        let m = ginar();
        let bad = perturbed_residue(&m);
        let r = check_pgf_identity(&bad, 50, 1e-10);
        assert!(!r.overall);
        // at s = 0: phi_X(phi_N(0)) * 0.01 rho_1 / s_1
        let rho = m.innovation.decomposition().terms[0].rho;
        assert!(r.checks[0].observed > 0.5 * 0.01 * rho / 2.0);
    }

    #[test]
    fn zero_alpha_identity_is_exact() {
        let m = build_model(&CatalogModel::Ginar { theta: 0.3, alpha: 0.0 }).unwrap();
        let r = check_pgf_identity(&m, 50, 1e-10);
        assert!(r.overall && r.checks[0].observed < 1e-15);
    }

    #[test]
    fn validity_faults() {
        let m = nginar();
        assert!(check_pmf_validity(&m.innovation, 1e-10).overall);

        let mut table = m.innovation.table().to_vec();
        table.truncate(5);
        let d = m.innovation.decomposition().clone();
        let (r, s) = (m.innovation.tail_rho(), m.innovation.tail_s());
        let truncated = InnovationDistribution::from_parts_unchecked(d.clone(), table, r, s);
        assert!(!check_pmf_validity(&truncated, 1e-10).overall);

        let wrong_root = InnovationDistribution::from_parts_unchecked(d, m.innovation.table().to_vec(), r, 1.01);
        assert!(!check_pmf_validity(&wrong_root, 1e-10).overall);
    }

    #[test]
    fn negative_nginar_pmf_reports_index() {
        let pgf = crate::pgf::innovation_pgf(&crate::pgf::ModelSpec {
            marginal: crate::pgf::MarginalSpec::GeometricMean { mu: 1.0 },
            thinning: ThinningOperator::NegativeBinomial { alpha: 0.6 },
            label: String::new(),
        })
        .unwrap();
        let forced = InnovationDistribution::tabulate_unchecked(partial_fractions(&pgf).unwrap(), 40);
        let r = check_pmf_validity(&forced, 1e-10);
        assert!(!r.overall);
        assert_eq!(r.checks[0].name, "pmf nonnegative (first negative at m = 5)");
    }

    #[test]
    fn unit_mass_at_zero() {
        assert!(check_pmf_validity(&InnovationDistribution::default(), 1e-10).overall);
    }

    #[test]
    fn cross_method_fault() {
        let m = ginar();
        assert!(check_cross_method(&m, 200, 1e-10).overall);
        assert!(!check_cross_method(&perturbed_residue(&m), 200, 1e-10).overall);
    }

    #[test]
    fn cross_method_constant() {
        let mut m = ginar();
        m.innovation_pgf = RationalFunction::constant(1.0);
        m.linear = None;
        m.innovation = InnovationDistribution::default();
        assert!(check_cross_method(&m, 20, 1e-12).overall);
    }

    #[test]
    fn moments_fault_by_foreign_sample() {
        let m = ginar();
        let other = build_model(&CatalogModel::Ginar { theta: 0.4, alpha: 0.5 }).unwrap();
        let cfg = SimulationConfig { n: 100_000, burn_in: 0, seed: 5 };
        let own = simulate_series(&m, &cfg, 0).unwrap();
        let foreign = simulate_series(&other, &cfg, 0).unwrap();
        let ok = check_moments(&m, Some(&own));
        assert!(ok.overall, "{:?}", ok.failures().collect::<Vec<_>>());
        assert!(!check_moments(&m, Some(&foreign)).overall);
        assert!(!check_moments(&perturbed_residue(&m), None).overall);
    }

    #[test]
    fn equidispersed_linear_innovation() {
        // b = -d in a s + b s ... form: zmg with k = -1
        let m = build_model(&CatalogModel::Zmg { mu: 0.8, k: -1.0, thinning: ThinningOperator::Binomial { alpha: 0.2 } })
            .unwrap();
        assert!((m.moments.innovation_dispersion - 1.0).abs() < 1e-12);
        assert!(check_moments(&m, None).overall);
    }

    #[test]
    fn tail_quality_and_fault() {
        let m = nginar();
        let r = check_tail_quality(&m.innovation, 5);
        assert!(r.overall);
        let e = tail_errors(&m.innovation, 5);
        // relative error t/(1+t) with t the second-to-first term ratio, which shrinks by (s1/s2)^m
        let t = e.map(|x| x / (1.0 - x));
        let ratio = (2.0_f64 / (13.0 / 3.0)).powi(5);
        assert!((t[1] / t[0] / ratio - 1.0).abs() < 1e-9);

        let d = m.innovation.decomposition().clone();
        let wrong = InnovationDistribution::from_parts_unchecked(d, m.innovation.table().to_vec(), m.innovation.tail_rho(), 2.2);
        assert!(!check_tail_quality(&wrong, 5).overall);
    }

    #[test]
    fn single_term_tail_is_vacuous() {
        let d = FractionalDecomposition::new(Polynomial::constant(0.5), vec![GeometricTerm { rho: 0.5, root: 2.0 }]);
        let dist = crate::decompose::pmf_from_decomposition(&d, 1.0 - 1e-12).unwrap();
        assert!(check_tail_quality(&dist, 5).overall);
    }

    #[test]
    fn overall_is_conjunction() {
        let a = Check::within("a", 1.0, 1.0, 0.0);
        let b = Check::within("b", f64::NAN, 1.0, 1.0);
        assert!(VerificationReport::new(vec![a.clone()]).overall);
        assert!(!VerificationReport::new(vec![a, b]).overall);
    }
}
