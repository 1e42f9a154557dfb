//! Marginal, counting-series and innovation pgfs of the stationarity identity
//! `phi_X(s) = phi_X(phi_N(s)) * phi_eps(s)`.

use serde::{Deserialize, Serialize};

use crate::polyrat::{
    compose_mobius_uncancelled, rational_cancel, rational_compose_mobius, Polynomial, RationalFunction,
};
use crate::{Error, Result, Scalar};

/// Geometric-type stationary marginal laws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalSpec<T> {
    /// `Pr[X = m] = theta (1 - theta)^m`.
    Geometric { theta: T },
    /// Geometric with mean `mu`: `Pr[X = m] = (mu/(1+mu))^m / (1+mu)`.
    GeometricMean { mu: T },
    /// Inflated-parameter (rho-) geometric, pgf `(1 - rho s) / (1 - rho s + mu (1 - s))`.
    RhoGeometric { mu: T, rho: T },
    /// Hurdle geometric (rho-Bernoulli): `Pr[X = 0] = 1 - mu`, geometric with mean `rho` above zero.
    HurdleGeometric { mu: T, rho: T },
}

/// Success probability of a geometric law with mean `mu`.
pub fn geometric_theta_from_mean<T: Scalar>(mu: T) -> T {
    T::one() / (T::one() + mu)
}

pub fn geometric_mean_from_theta<T: Scalar>(theta: T) -> T {
    (T::one() - theta) / theta
}

fn open_unit<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must lie in (0, 1)")))
    }
}

fn half_open_unit<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x >= T::zero() && x < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must lie in [0, 1)")))
    }
}

fn positive<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must be positive")))
    }
}

impl<T: Scalar> MarginalSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Geometric { theta } => open_unit("theta", theta),
            Self::GeometricMean { mu } => positive("mu", mu),
            Self::RhoGeometric { mu, rho } => {
                positive("mu", mu)?;
                half_open_unit("rho", rho)
            }
            Self::HurdleGeometric { mu, rho } => {
                open_unit("mu", mu)?;
                open_unit("rho", rho)
            }
        }
    }

    /// `phi_X'(1)`.
    pub fn mean(&self) -> T {
        let one = T::one();
        match *self {
            Self::Geometric { theta } => geometric_mean_from_theta(theta),
            Self::GeometricMean { mu } => mu,
            Self::RhoGeometric { mu, rho } => mu / (one - rho),
            Self::HurdleGeometric { mu, rho } => mu * (one + rho),
        }
    }
}

/// Thinning operators `alpha (.) X = sum_{j <= X} N_j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThinningOperator<T> {
    /// Bernoulli(alpha) counting series.
    Binomial { alpha: T },
    /// Geometric counting series with mean `alpha`.
    NegativeBinomial { alpha: T },
}

impl<T: Scalar> ThinningOperator<T> {
    pub fn alpha(&self) -> T {
        match *self {
            Self::Binomial { alpha } | Self::NegativeBinomial { alpha } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        half_open_unit("alpha", self.alpha())
    }

    /// Variance of one counting variable `N_j`.
    pub fn counting_variance(&self) -> T {
        match *self {
            Self::Binomial { alpha } => alpha * (T::one() - alpha),
            Self::NegativeBinomial { alpha } => alpha * (T::one() + alpha),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<T> {
    pub marginal: MarginalSpec<T>,
    pub thinning: ThinningOperator<T>,
    pub label: String,
}

pub fn marginal_pgf<T: Scalar>(m: &MarginalSpec<T>) -> Result<RationalFunction<T>> {
    m.validate()?;
    let one = T::one();
    let (num, den) = match *m {
        MarginalSpec::Geometric { theta } => (
            Polynomial::constant(theta),
            Polynomial::linear(one, theta - one),
        ),
        MarginalSpec::GeometricMean { mu } => {
            (Polynomial::constant(one), Polynomial::linear(one + mu, -mu))
        }
        MarginalSpec::RhoGeometric { mu, rho } => (
            Polynomial::linear(one, -rho),
            Polynomial::linear(one + mu, -(rho + mu)),
        ),
        MarginalSpec::HurdleGeometric { mu, rho } => {
            let kappa = mu + mu * rho - rho;
            (
                Polynomial::linear(one - kappa, kappa),
                Polynomial::linear(one + rho, -rho),
            )
        }
    };
    Ok(RationalFunction::new(num, den)?.normalized())
}

/// Binomial: `1 - alpha + alpha s`. Negative binomial: `1 / (1 + alpha - alpha s)`.
pub fn counting_pgf<T: Scalar>(t: &ThinningOperator<T>) -> Result<RationalFunction<T>> {
    t.validate()?;
    let one = T::one();
    Ok(match *t {
        ThinningOperator::Binomial { alpha } => {
            RationalFunction::polynomial(Polynomial::linear(one - alpha, alpha))
        }
        ThinningOperator::NegativeBinomial { alpha } => RationalFunction::new(
            Polynomial::constant(one),
            Polynomial::linear(one + alpha, -alpha),
        )?,
    })
}

/// `phi_X(s) / phi_X(phi_N(s))`, cancelled and normalized to `den(0) = 1`.
pub fn innovation_pgf<T: Scalar>(spec: &ModelSpec<T>) -> Result<RationalFunction<T>> {
    let marginal = marginal_pgf(&spec.marginal)?;
    let counting = counting_pgf(&spec.thinning)?;
    let out = innovation_pgf_from(&marginal, &counting)?;
    if out.is_constant() && spec.thinning.alpha() > T::zero() {
        return Err(Error::DegenerateModel(
            "innovation pgf reduces to the constant 1".into(),
        ));
    }
    Ok(out)
}

pub fn innovation_pgf_from<T: Scalar>(
    marginal: &RationalFunction<T>,
    counting: &RationalFunction<T>,
) -> Result<RationalFunction<T>> {
    let composed = rational_compose_mobius(marginal, counting)?;
    let quotient = RationalFunction::new(
        marginal.num() * composed.den(),
        marginal.den() * composed.num(),
    )?;
    let out = rational_cancel(&quotient, T::distinct_tol());
    let at_zero = out.eval(T::zero())?;
    if !(at_zero >= T::zero() && at_zero <= T::one()) {
        return Err(Error::Inconsistent(format!(
            "innovation pgf at 0 is {at_zero}, outside [0, 1]"
        )));
    }
    Ok(out)
}

/// `phi_N` composed with itself `j` times, as a Mobius map.
fn iterate_counting<T: Scalar>(
    counting: &RationalFunction<T>,
    previous: &RationalFunction<T>,
) -> Result<RationalFunction<T>> {
    compose_mobius_uncancelled(counting, previous)
}

/// A pgf kept as a product of rational factors, each a pgf in its own right.
///
/// Expanding long products loses accuracy near `s = 1`; evaluating and
/// tabulating factor by factor does not.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPgf<T> {
    factors: Vec<RationalFunction<T>>,
}

impl<T: Scalar> ProductPgf<T> {
    pub fn new(factors: Vec<RationalFunction<T>>) -> Self {
        Self { factors }
    }

    pub fn single(r: RationalFunction<T>) -> Self {
        Self { factors: vec![r] }
    }

    pub fn factors(&self) -> &[RationalFunction<T>] {
        &self.factors
    }

    pub fn eval(&self, s: T) -> Result<T> {
        self.factors.iter().try_fold(T::one(), |acc, f| Ok(acc * f.eval(s)?))
    }

    pub fn eval_unchecked(&self, s: T) -> T {
        self.factors.iter().fold(T::one(), |acc, f| acc * f.eval_unchecked(s))
    }

    /// Means and variances add over independent factors.
    pub fn pgf_mean_variance(&self) -> (T, T) {
        self.factors.iter().fold((T::zero(), T::zero()), |(m, v), f| {
            let (fm, fv) = f.pgf_mean_variance();
            (m + fm, v + fv)
        })
    }

    /// The expanded single rational function.
    pub fn expand(&self) -> RationalFunction<T> {
        self.factors
            .iter()
            .fold(RationalFunction::constant(T::one()), |acc, f| acc.mul(f))
    }
}

/// Stationary marginal pgf implied by an innovation pgf:
/// `prod_{j >= 0} phi_eps(phi_N^{(j)}(s))`, truncated once the next factor is
/// within a few ulps of one on `[0, 1]`, or once the factors left are
/// bounded by `E eps * alpha^j / (1 - alpha)` below one ulp in total.
pub fn stationary_marginal_pgf<T: Scalar>(
    innovation: &RationalFunction<T>,
    thinning: &ThinningOperator<T>,
) -> Result<ProductPgf<T>> {
    const MAX_FACTORS: usize = 4096;
    let counting = counting_pgf(thinning)?;
    let alpha = thinning.alpha();
    let mean = innovation.pgf_mean_variance().0.abs();
    let mut map = RationalFunction::polynomial(Polynomial::monomial());
    let mut factors = vec![innovation.clone()];
    let mut alpha_j = T::one();
    for _ in 0..MAX_FACTORS {
        alpha_j = alpha_j * alpha;
        if mean * alpha_j <= T::epsilon() * (T::one() - alpha) {
            return Ok(ProductPgf::new(factors));
        }
        map = iterate_counting(&counting, &map)?;
        // late factors are nearly constant; cancelling their close roots would truncate them
        let raw = compose_mobius_uncancelled(innovation, &map)?;
        let at_one = raw.eval_unchecked(T::one());
        let factor = RationalFunction::new(raw.num().scale(at_one.recip()), raw.den().clone())?;
        // pgfs are nondecreasing, so the deviation from 1 peaks at s = 0
        let gap = T::one() - factor.eval(T::zero())?;
        if gap.abs() <= T::epsilon() * T::lit(4.0) {
            return Ok(ProductPgf::new(factors));
        }
        factors.push(factor);
    }
    Err(Error::DegenerateModel(format!(
        "stationary product did not converge within {MAX_FACTORS} factors"
    )))
}
