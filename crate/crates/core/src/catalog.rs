//! Named models, their validity regions and closed-form moments.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::decompose::{
    partial_fractions, pmf_from_decomposition, quadratic_closed_form, HurdleForm, HurdleMethod,
    InnovationDistribution, LinearForm, TabulatedPmf, DEFAULT_TARGET_MASS,
};
use crate::pgf::{
    innovation_pgf, marginal_pgf, stationary_marginal_pgf, MarginalSpec, ModelSpec, ProductPgf,
    ThinningOperator,
};
use crate::polyrat::{Polynomial, RationalFunction};
use crate::{Error, Result};

type Rf = RationalFunction<f64>;
type Thinning = ThinningOperator<f64>;

/// CLI names, in catalog order.
pub const MODEL_NAMES: [&str; 8] = [
    "ginar",
    "nginar",
    "zmg",
    "two-param",
    "rho-geo-bin",
    "hurdle-geo-bin",
    "rho-geo-nb",
    "hurdle-geo-nb",
];

/// Longest marginal table accepted for the stationary law.
const MAX_MARGINAL_LEN: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum CatalogModel {
    /// Geometric marginal, binomial thinning.
    Ginar { theta: f64, alpha: f64 },
    /// Geometric marginal with mean `mu`, negative binomial thinning.
    Nginar { mu: f64, alpha: f64 },
    /// Zero-modified geometric innovations `k + (1 - k)/(1 + mu(1 - s))`.
    Zmg { mu: f64, k: f64, thinning: Thinning },
    /// Innovations `1 - m(1 - s)/(1 + r(1 - s))`.
    TwoParam { r: f64, m: f64, thinning: Thinning },
    RhoGeoBin { mu: f64, rho: f64, alpha: f64 },
    HurdleGeoBin { mu: f64, rho: f64, alpha: f64 },
    RhoGeoNb { mu: f64, rho: f64, alpha: f64 },
    HurdleGeoNb { mu: f64, rho: f64, alpha: f64 },
}

fn param(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{key}`")))
}

impl CatalogModel {
    /// Builds a model from its CLI name. Innovation-only models (`zmg`,
    /// `two-param`) default to `alpha = 0` and use `thinning` (binomial when
    /// absent); the other models fix their own thinning.
    pub fn from_params(
        name: &str,
        params: &BTreeMap<String, f64>,
        negative_binomial: Option<bool>,
    ) -> Result<Self> {
        let p = |k| param(params, k);
        let alpha = || params.get("alpha").copied().unwrap_or(0.0);
        let thinning = || {
            if negative_binomial.unwrap_or(false) {
                ThinningOperator::NegativeBinomial { alpha: alpha() }
            } else {
                ThinningOperator::Binomial { alpha: alpha() }
            }
        };
        let fixed = |nb: bool| match negative_binomial {
            Some(x) if x != nb => Err(Error::InvalidParameter(format!(
                "model `{name}` uses {} thinning",
                if nb { "negative binomial" } else { "binomial" }
            ))),
            _ => Ok(()),
        };
        Ok(match name {
            "ginar" => {
                fixed(false)?;
                Self::Ginar { theta: p("theta")?, alpha: p("alpha")? }
            }
            "nginar" => {
                fixed(true)?;
                Self::Nginar { mu: p("mu")?, alpha: p("alpha")? }
            }
            "zmg" => Self::Zmg { mu: p("mu")?, k: p("k")?, thinning: thinning() },
            "two-param" => Self::TwoParam { r: p("r")?, m: p("m")?, thinning: thinning() },
            "rho-geo-bin" => {
                fixed(false)?;
                Self::RhoGeoBin { mu: p("mu")?, rho: p("rho")?, alpha: p("alpha")? }
            }
            "hurdle-geo-bin" => {
                fixed(false)?;
                Self::HurdleGeoBin { mu: p("mu")?, rho: p("rho")?, alpha: p("alpha")? }
            }
            "rho-geo-nb" => {
                fixed(true)?;
                Self::RhoGeoNb { mu: p("mu")?, rho: p("rho")?, alpha: p("alpha")? }
            }
            "hurdle-geo-nb" => {
                fixed(true)?;
                Self::HurdleGeoNb { mu: p("mu")?, rho: p("rho")?, alpha: p("alpha")? }
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown model `{other}` (expected one of {})",
                    MODEL_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ginar { .. } => "ginar",
            Self::Nginar { .. } => "nginar",
            Self::Zmg { .. } => "zmg",
            Self::TwoParam { .. } => "two-param",
            Self::RhoGeoBin { .. } => "rho-geo-bin",
            Self::HurdleGeoBin { .. } => "hurdle-geo-bin",
            Self::RhoGeoNb { .. } => "rho-geo-nb",
            Self::HurdleGeoNb { .. } => "hurdle-geo-nb",
        }
    }

    pub fn thinning(&self) -> Thinning {
        use ThinningOperator::{Binomial, NegativeBinomial};
        match *self {
            Self::Ginar { alpha, .. } | Self::RhoGeoBin { alpha, .. } | Self::HurdleGeoBin { alpha, .. } => {
                Binomial { alpha }
            }
            Self::Nginar { alpha, .. } | Self::RhoGeoNb { alpha, .. } | Self::HurdleGeoNb { alpha, .. } => {
                NegativeBinomial { alpha }
            }
            Self::Zmg { thinning, .. } | Self::TwoParam { thinning, .. } => thinning,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.thinning().alpha()
    }

    /// Marginal-driven models have a [`ModelSpec`]; the innovation-only ones do not.
    pub fn spec(&self) -> Option<ModelSpec<f64>> {
        let marginal = match *self {
            Self::Ginar { theta, .. } => MarginalSpec::Geometric { theta },
            Self::Nginar { mu, .. } => MarginalSpec::GeometricMean { mu },
            Self::RhoGeoBin { mu, rho, .. } | Self::RhoGeoNb { mu, rho, .. } => {
                MarginalSpec::RhoGeometric { mu, rho }
            }
            Self::HurdleGeoBin { mu, rho, .. } | Self::HurdleGeoNb { mu, rho, .. } => {
                MarginalSpec::HurdleGeometric { mu, rho }
            }
            Self::Zmg { .. } | Self::TwoParam { .. } => return None,
        };
        Some(ModelSpec {
            marginal,
            thinning: self.thinning(),
            label: self.name().to_owned(),
        })
    }

    /// Linear coefficients `(a, b, c, d)` of the innovation-only models.
    pub fn linear_coefficients(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            Self::Zmg { mu, k, .. } => Some((1.0 + k * mu, -k * mu, 1.0 + mu, -mu)),
            Self::TwoParam { r, m, .. } => Some((1.0 + r - m, m - r, 1.0 + r, -r)),
            _ => None,
        }
    }
}

/// Parameter names and constraints per model, for listings.
pub fn describe() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("ginar", "theta, alpha", "0 < theta < 1, 0 <= alpha < 1"),
        ("nginar", "mu, alpha", "mu > 0, 0 <= alpha <= mu/(1+mu)"),
        ("zmg", "mu, k [, alpha, thinning]", "mu > 0, -1/mu <= k < 1, 0 <= alpha < 1"),
        ("two-param", "r, m [, alpha, thinning]", "r > 0, 0 < m <= r + 1, 0 <= alpha < 1"),
        ("rho-geo-bin", "mu, rho, alpha", "mu > 0, 0 <= rho < 1, 0 <= alpha < 1, pmf nonnegative"),
        ("hurdle-geo-bin", "mu, rho, alpha", "0 < mu < 1, 0 < rho < 1, 0 <= alpha < 1, pmf nonnegative"),
        ("rho-geo-nb", "mu, rho, alpha", "mu > 0, 0 <= rho < 1, 0 <= alpha < 1, pmf nonnegative"),
        ("hurdle-geo-nb", "mu, rho, alpha", "0 < mu < 1, 0 < rho < 1, 0 <= alpha < 1, pmf nonnegative"),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub satisfied: bool,
    /// Signed distance to the boundary; positive inside.
    pub margin: f64,
    /// Informational constraints are reported but do not block construction.
    pub required: bool,
}

impl Constraint {
    fn at_least(name: &str, margin: f64) -> Self {
        Self { name: name.into(), satisfied: margin >= -1e-12, margin, required: true }
    }

    fn strict(name: &str, margin: f64) -> Self {
        Self { name: name.into(), satisfied: margin > 0.0, margin, required: true }
    }

    fn info(name: &str, margin: f64) -> Self {
        Self { name: name.into(), satisfied: margin >= 0.0, margin, required: false }
    }
}

fn unit_open(name: &str, x: f64) -> Vec<Constraint> {
    vec![Constraint::strict(&format!("{name} > 0"), x), Constraint::strict(&format!("{name} < 1"), 1.0 - x)]
}

fn alpha_range(alpha: f64) -> Vec<Constraint> {
    vec![Constraint::at_least("alpha >= 0", alpha), Constraint::strict("alpha < 1", 1.0 - alpha)]
}

/// Analytic constraints only (no pmf construction).
fn parameter_constraints(model: &CatalogModel) -> Vec<Constraint> {
    let mut out = Vec::new();
    match *model {
        CatalogModel::Ginar { theta, alpha } => {
            out.extend(unit_open("theta", theta));
            out.extend(alpha_range(alpha));
        }
        CatalogModel::Nginar { mu, alpha } => {
            out.push(Constraint::strict("mu > 0", mu));
            out.extend(alpha_range(alpha));
            out.push(Constraint::at_least("alpha <= mu/(1+mu)", mu / (1.0 + mu) - alpha));
        }
        CatalogModel::Zmg { mu, k, .. } => {
            out.push(Constraint::strict("mu > 0", mu));
            out.push(Constraint::at_least("k >= -1/mu", k + 1.0 / mu));
            out.push(Constraint::strict("k < 1", 1.0 - k));
            out.extend(alpha_range(model.alpha()));
        }
        CatalogModel::TwoParam { r, m, .. } => {
            out.push(Constraint::strict("r > 0", r));
            out.push(Constraint::strict("m > 0", m));
            out.push(Constraint::at_least("m <= r + 1", r + 1.0 - m));
            out.extend(alpha_range(model.alpha()));
        }
        CatalogModel::RhoGeoBin { mu, rho, alpha } | CatalogModel::RhoGeoNb { mu, rho, alpha } => {
            out.push(Constraint::strict("mu > 0", mu));
            out.push(Constraint::at_least("rho >= 0", rho));
            out.push(Constraint::strict("rho < 1", 1.0 - rho));
            out.extend(alpha_range(alpha));
        }
        CatalogModel::HurdleGeoBin { mu, rho, alpha } | CatalogModel::HurdleGeoNb { mu, rho, alpha } => {
            out.extend(unit_open("mu", mu));
            out.extend(unit_open("rho", rho));
            out.extend(alpha_range(alpha));
        }
    }
    out
}

/// Closed-form denominator roots `(s1, s2)` of the four hurdle-form models.
fn printed_roots(model: &CatalogModel) -> Option<(f64, f64)> {
    match *model {
        CatalogModel::RhoGeoBin { mu, rho, alpha } => {
            Some(((1.0 + mu) / (rho + mu), (1.0 - rho * (1.0 - alpha)) / (rho * alpha)))
        }
        CatalogModel::HurdleGeoBin { mu, rho, alpha } => {
            let kp = rho - mu * (1.0 + rho);
            Some(((1.0 + rho) / rho, (1.0 + alpha * kp) / (alpha * kp)))
        }
        CatalogModel::RhoGeoNb { mu, rho, alpha } => {
            Some(((1.0 + mu) / (rho + mu), (1.0 - rho + alpha) / alpha))
        }
        CatalogModel::HurdleGeoNb { mu, rho, alpha } => {
            let z = alpha * (1.0 + rho) * (1.0 - mu);
            Some(((1.0 + rho) / rho, (1.0 + z) / z))
        }
        _ => None,
    }
}

fn informational_constraints(model: &CatalogModel) -> Vec<Constraint> {
    let mut out = Vec::new();
    if let Some((s1, s2)) = printed_roots(model) {
        if s2.is_finite() {
            out.push(Constraint::info("s2 >= s1 > 1", (s2 - s1).min(s1 - 1.0)));
        }
    }
    if let CatalogModel::HurdleGeoBin { mu, rho, .. } = *model {
        out.push(Constraint::info("mu < rho/(1+rho) (leading coefficient a > 0)", rho / (1.0 + rho) - mu));
    }
    out
}

/// Every applicable constraint with its margin. When the analytic ones hold,
/// the innovation pmf is built and its nonnegativity reported as well.
pub fn validate_params(model: &CatalogModel) -> Vec<Constraint> {
    let mut out = parameter_constraints(model);
    let analytic_ok = out.iter().all(|c| c.satisfied || !c.required);
    out.extend(informational_constraints(model));
    if analytic_ok {
        out.push(match derive_innovation(model) {
            Ok(d) => {
                let min = d.innovation.table().iter().copied().fold(f64::INFINITY, f64::min);
                Constraint::at_least("innovation pmf nonnegative", min)
            }
            Err(e) => failure_constraint(&e),
        });
    }
    out
}

fn failure_constraint(e: &Error) -> Constraint {
    match e {
        Error::NegativeProbability { index, value } => Constraint {
            name: format!("innovation pmf nonnegative (first negative at m = {index})"),
            satisfied: false,
            margin: *value,
            required: true,
        },
        Error::RootInsideDisk { root } => Constraint {
            name: "denominator roots outside the unit disk".into(),
            satisfied: false,
            margin: root.abs() - 1.0,
            required: true,
        },
        other => Constraint {
            name: format!("innovation derivable ({other})"),
            satisfied: false,
            margin: f64::NAN,
            required: true,
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMethod {
    PartialFractions,
    Linear,
    HurdleEqual,
    HurdleFlexible,
}

struct Derived {
    pgf: Rf,
    method: DecompositionMethod,
    innovation: InnovationDistribution<f64>,
    hurdle: Option<HurdleForm<f64>>,
    linear: Option<LinearForm<f64>>,
}

fn model_innovation_pgf(model: &CatalogModel) -> Result<Rf> {
    match (model.spec(), model.linear_coefficients()) {
        (Some(spec), _) => innovation_pgf(&spec),
        (None, Some((a, b, c, d))) => Ok(RationalFunction::new(
            Polynomial::linear(a, b),
            Polynomial::linear(c, d),
        )?
        .normalized()),
        (None, None) => unreachable!("every catalog model has a spec or linear coefficients"),
    }
}

/// Innovation law by the method matching the pgf's degrees after cancellation.
fn derive_innovation(model: &CatalogModel) -> Result<Derived> {
    let pgf = model_innovation_pgf(model)?;
    let target = DEFAULT_TARGET_MASS;
    let (p, q) = (pgf.num().degree(), pgf.den().degree());
    let coefficients = model.linear_coefficients();
    if q == 1 && p <= 1 {
        let (a, b, c, d) = coefficients.unwrap_or_else(|| {
            (pgf.num().coeff(0), pgf.num().coeff(1), pgf.den().coeff(0), pgf.den().coeff(1))
        });
        let linear = LinearForm::new(a, b, c, d)?;
        let innovation = pmf_from_decomposition(&linear.decomposition(), target)?;
        return Ok(Derived { pgf, method: DecompositionMethod::Linear, innovation, hurdle: None, linear: Some(linear) });
    }
    if p == 2 && q == 2 {
        let (n, d) = (pgf.num(), pgf.den());
        let h = quadratic_closed_form(n.coeff(2), n.coeff(1), n.coeff(0), d.coeff(2), d.coeff(1), d.coeff(0))?;
        let innovation = pmf_from_decomposition(&h.to_decomposition(), target)?;
        h.check_nonnegative(innovation.truncation())?;
        let method = match h.method {
            HurdleMethod::Equal => DecompositionMethod::HurdleEqual,
            HurdleMethod::Flexible => DecompositionMethod::HurdleFlexible,
        };
        return Ok(Derived { pgf, method, innovation, hurdle: Some(h), linear: None });
    }
    if pgf.is_constant() && model.alpha() > 0.0 {
        return Err(Error::DegenerateModel("innovation pgf is constant".into()));
    }
    let innovation = pmf_from_decomposition(&partial_fractions(&pgf)?, target)?;
    Ok(Derived { pgf, method: DecompositionMethod::PartialFractions, innovation, hurdle: None, linear: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub marginal_mean: f64,
    pub marginal_var: f64,
    pub marginal_dispersion: f64,
    pub innovation_mean: f64,
    pub innovation_var: f64,
    pub innovation_dispersion: f64,
}

/// A printed closed form that disagrees with the pgf; `derived` is what the library uses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub quantity: String,
    pub printed: f64,
    pub derived: f64,
}

fn rel_close(x: f64, y: f64, rel: f64) -> bool {
    (x - y).abs() <= rel * x.abs().max(y.abs()).max(1e-300)
}

fn arbitrate(quantity: &str, printed: f64, derived: f64, log: &mut Vec<Discrepancy>) -> f64 {
    if rel_close(printed, derived, 1e-9) {
        printed
    } else {
        log::warn!("{quantity}: printed closed form {printed} disagrees with the pgf value {derived}");
        log.push(Discrepancy { quantity: quantity.into(), printed, derived });
        derived
    }
}

/// Moments from the printed closed forms, each checked against the pgf
/// derivatives at one. Disagreements are logged and the pgf value is used.
pub fn closed_form_moments(model: &CatalogModel) -> Result<(Moments, Vec<Discrepancy>)> {
    let mut log = Vec::new();
    let (ie_ref, iv_ref) = model_innovation_pgf(model)?.pgf_mean_variance();
    let marginal_ref = match model.spec() {
        Some(spec) => Some(marginal_pgf(&spec.marginal)?.pgf_mean_variance()),
        None => None,
    };
    let alpha = model.alpha();
    let (ie, iv, printed_marginal, printed_dispersion): (f64, f64, Option<(f64, f64)>, Option<f64>) = match *model {
        CatalogModel::Ginar { theta, alpha } => {
            let f = LinearForm::new(theta + (1.0 - theta) * alpha, -(1.0 - theta) * alpha, 1.0, -(1.0 - theta))?;
            (f.mean(), f.variance(), Some(((1.0 - theta) / theta, (1.0 - theta) / (theta * theta))), None)
        }
        CatalogModel::Nginar { mu, alpha } => {
            let a2 = alpha * mu / (mu - alpha);
            let a1 = 1.0 - a2;
            let mean = a1 * mu + a2 * alpha;
            let second = a1 * mu * (1.0 + 2.0 * mu) + a2 * alpha * (1.0 + 2.0 * alpha);
            (mean, second - mean * mean, Some((mu, mu * (1.0 + mu))), None)
        }
        CatalogModel::Zmg { .. } | CatalogModel::TwoParam { .. } => {
            let (a, b, c, d) = model.linear_coefficients().expect("linear model");
            let f = LinearForm::new(a, b, c, d)?;
            (f.mean(), f.variance(), None, None)
        }
        CatalogModel::RhoGeoBin { mu, rho, alpha: al } => {
            let var = mu * (1.0 - al)
                * (mu * mu * (al - rho + 1.0) + mu * (al * rho + al - rho * rho - rho + 2.0)
                    + al * rho * (rho * rho - 2.0 * rho + 2.0)
                    - rho * rho
                    + 1.0)
                / ((1.0 + mu) * (1.0 - rho).powi(3));
            let marginal = (mu / (1.0 - rho), mu * (1.0 + mu + rho) / (1.0 - rho).powi(2));
            (mu * (1.0 - al) / (1.0 - rho), var, Some(marginal), Some((1.0 + al + rho) / (1.0 - rho)))
        }
        CatalogModel::HurdleGeoBin { mu, rho, alpha: al } => {
            let var = mu * (1.0 - al)
                * (al * rho.powi(3) - mu * (1.0 + rho) * (al * (rho * rho + rho + 1.0) + rho + 1.0)
                    + 2.0 * (1.0 + al) * rho * rho
                    + (2.0 * al + 3.0) * rho
                    + 1.0);
            let marginal = (al * (1.0 + rho), mu * (1.0 + rho) * (rho + (1.0 + rho) * (1.0 - mu)));
            (mu * (1.0 - al) * (1.0 + rho), var, Some(marginal), Some(rho + (1.0 + rho) * (1.0 - mu)))
        }
        CatalogModel::RhoGeoNb { mu, rho, alpha: al } => {
            let var = mu
                * (al * al * (1.0 + mu).powi(2) * (rho - 2.0)
                    + al * (mu * mu - mu * (rho * rho - 4.0 * rho + 1.0) + 2.0 * rho - 1.0)
                    + (1.0 + mu) * (1.0 - rho) * (1.0 + mu + rho))
                / ((1.0 + mu) * (1.0 - rho).powi(3));
            let marginal = (mu / (1.0 - rho), mu * (1.0 + mu + rho) / (1.0 - rho).powi(2));
            (mu * (1.0 - al) / (1.0 - rho), var, Some(marginal), None)
        }
        CatalogModel::HurdleGeoNb { mu, rho, alpha: al } => {
            let var = mu * (1.0 + rho)
                * (al * al * (1.0 + rho) * (mu * rho + mu - rho - 2.0)
                    + al * ((1.0 - mu) * rho * rho - 1.0)
                    - mu * (1.0 + rho)
                    + 2.0 * rho
                    + 1.0);
            let marginal = (mu * (1.0 + rho), mu * (1.0 + rho) * (rho + (1.0 + rho) * (1.0 - mu)));
            (mu * (1.0 - al) * (1.0 + rho), var, Some(marginal), None)
        }
    };
    let innovation_mean = arbitrate("innovation mean", ie, ie_ref, &mut log);
    let innovation_var = arbitrate("innovation variance", iv, iv_ref, &mut log);
    let (marginal_mean, marginal_var) = match (printed_marginal, marginal_ref) {
        (Some((pm, pv)), Some((rm, rv))) => (
            arbitrate("marginal mean", pm, rm, &mut log),
            arbitrate("marginal variance", pv, rv, &mut log),
        ),
        _ => stationary_moments(innovation_mean, innovation_var, &model.thinning()),
    };
    let marginal_dispersion = marginal_var / marginal_mean;
    if let Some(printed) = printed_dispersion {
        arbitrate("marginal dispersion", printed, marginal_dispersion, &mut log);
    }
    let _ = alpha;
    Ok((
        Moments {
            marginal_mean,
            marginal_var,
            marginal_dispersion,
            innovation_mean,
            innovation_var,
            innovation_dispersion: innovation_var / innovation_mean,
        },
        log,
    ))
}

/// Stationary moments implied by the innovation moments:
/// `E X = E eps/(1 - alpha)`, `Var X = (Var eps + Var(N) E X)/(1 - alpha^2)`.
pub fn stationary_moments(mean: f64, var: f64, thinning: &Thinning) -> (f64, f64) {
    let alpha = thinning.alpha();
    let m = mean / (1.0 - alpha);
    (m, (var + thinning.counting_variance() * m) / (1.0 - alpha * alpha))
}

/// Printed HFG / MHFG moment formulas, compared with the hurdle form's own moments.
fn hurdle_probes(h: &HurdleForm<f64>, log: &mut Vec<Discrepancy>) {
    let (pi, p1, p2, w1) = (h.pi, h.p1, h.p2, h.w1);
    let den = (1.0 - p1).powi(2) * (1.0 - p2).powi(2);
    match h.method {
        HurdleMethod::Equal => {
            arbitrate("HFG mean", (1.0 - pi) / ((1.0 - p1) * (1.0 - p2)), h.mean(), log);
            let printed = (1.0 - pi) * (p1 * p1 * p2 - 3.0 * p1 * p2 + p1 + p2 + pi) / den;
            arbitrate("HFG variance", printed, h.variance(), log);
        }
        HurdleMethod::Flexible => {
            let mz = h.positive_mean();
            arbitrate("MHFG mean", (1.0 - pi) * mz, h.mean(), log);
            let printed = (1.0 - pi)
                * ((w1 * (1.0 - w1) * (p1 - p2).powi(2) + w1 * (p1 - p2) + p2 * (1.0 - p1).powi(2)) / den
                    + pi * mz * mz);
            arbitrate("MHFG variance", printed, h.variance(), log);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    Under,
    Equi,
    Over,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DispersionClass {
    pub marginal: Dispersion,
    pub innovation: Dispersion,
}

fn classify(index: f64) -> Dispersion {
    if (index - 1.0).abs() <= 1e-12 {
        Dispersion::Equi
    } else if index < 1.0 {
        Dispersion::Under
    } else {
        Dispersion::Over
    }
}

pub fn dispersion_class(m: &Moments) -> DispersionClass {
    DispersionClass {
        marginal: classify(m.marginal_dispersion),
        innovation: classify(m.innovation_dispersion),
    }
}

/// A catalog model with its derived innovation law and stationary marginal.
#[derive(Clone, Debug)]
pub struct InarModel {
    pub model: CatalogModel,
    pub method: DecompositionMethod,
    pub innovation_pgf: Rf,
    pub innovation: InnovationDistribution<f64>,
    pub hurdle: Option<HurdleForm<f64>>,
    pub linear: Option<LinearForm<f64>>,
    pub marginal_pgf: ProductPgf<f64>,
    pub marginal: TabulatedPmf<f64>,
    pub moments: Moments,
    pub discrepancies: Vec<Discrepancy>,
    pub constraints: Vec<Constraint>,
}

impl InarModel {
    pub fn thinning(&self) -> Thinning {
        self.model.thinning()
    }

    pub fn spec(&self) -> Option<ModelSpec<f64>> {
        self.model.spec()
    }

    /// Replaces the innovation law without any consistency check.
    pub fn with_innovation_unchecked(mut self, innovation: InnovationDistribution<f64>) -> Self {
        self.innovation = innovation;
        self
    }
}

/// Derives the innovation law by the matching method, the stationary marginal
/// and all moments. Fails with [`Error::ValidityViolation`] on the first
/// violated required constraint.
pub fn build_model(model: &CatalogModel) -> Result<InarModel> {
    let mut constraints = parameter_constraints(model);
    if let Some(bad) = constraints.iter().find(|c| c.required && !c.satisfied) {
        return Err(Error::ValidityViolation { constraint: bad.name.clone(), margin: bad.margin });
    }
    constraints.extend(informational_constraints(model));
    let derived = match derive_innovation(model) {
        Ok(d) => d,
        Err(e) => {
            let c = failure_constraint(&e);
            return Err(Error::ValidityViolation { constraint: c.name, margin: c.margin });
        }
    };
    let min = derived.innovation.table().iter().copied().fold(f64::INFINITY, f64::min);
    constraints.push(Constraint::at_least("innovation pmf nonnegative", min));

    for k in 0..=10 {
        let s = 0.099 * k as f64;
        let gap = (derived.innovation.decomposition().eval(s) - derived.pgf.eval(s)?).abs();
        if gap > 1e-9 {
            return Err(Error::Inconsistent(format!("decomposition deviates from the pgf by {gap} at s = {s}")));
        }
    }

    let thinning = model.thinning();
    let marginal_pgf = match model.spec() {
        Some(spec) => ProductPgf::single(marginal_pgf(&spec.marginal)?),
        None => stationary_marginal_pgf(&derived.pgf, &thinning)?,
    };
    let marginal = TabulatedPmf::from_product(&marginal_pgf, DEFAULT_TARGET_MASS, MAX_MARGINAL_LEN)?;
    let (moments, mut discrepancies) = closed_form_moments(model)?;
    if let Some(h) = &derived.hurdle {
        hurdle_probes(h, &mut discrepancies);
    }
    Ok(InarModel {
        model: *model,
        method: derived.method,
        innovation_pgf: derived.pgf,
        innovation: derived.innovation,
        hurdle: derived.hurdle,
        linear: derived.linear,
        marginal_pgf,
        marginal,
        moments,
        discrepancies,
        constraints,
    })
}
