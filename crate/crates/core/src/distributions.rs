//! Lifetime alternatives, censoring laws and censoring-rate calibration.
//!
//! The samplers are thin wrappers over `rand_distr`. Gamma variates (and the
//! chi-square and beta variates built from them) use the Marsaglia-Tsang
//! squeeze method; for shape below one it draws at shape + 1 and multiplies
//! by `U^{1/shape}`, which keeps the method valid for every positive shape.

use std::fmt;

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Exp, Gamma, LogNormal, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternativeFamily {
    /// Density `θ e^{-θx}`.
    Exponential,
    /// Shape `θ`, unit scale.
    Gamma,
    /// Density `θ x^{θ-1} e^{-x^θ}`.
    Weibull,
    /// `exp(θ Z)` with `Z` standard normal.
    Lognormal,
    /// `θ` degrees of freedom.
    ChiSquare,
    /// `Beta(α, θ)` with `α` the `second_shape`.
    Beta,
}

/// A lifetime distribution from the alternative list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlternativeSpec {
    pub family: AlternativeFamily,
    pub shape: f64,
    /// First beta parameter; absent for every other family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_shape: Option<f64>,
}

impl AlternativeSpec {
    pub fn new(family: AlternativeFamily, shape: f64) -> Result<Self> {
        let spec = Self {
            family,
            shape,
            second_shape: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `Beta(alpha, theta)`: density proportional to `x^{α-1}(1-x)^{θ-1}`.
    pub fn beta(alpha: f64, theta: f64) -> Result<Self> {
        let spec = Self {
            family: AlternativeFamily::Beta,
            shape: theta,
            second_shape: Some(alpha),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(AlternativeFamily::Exponential, rate)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape.is_finite() && self.shape > 0.0) {
            return Err(Error::param("shape", format!("must be positive, got {}", self.shape)));
        }
        match (self.family, self.second_shape) {
            (AlternativeFamily::Beta, Some(a)) if a.is_finite() && a > 0.0 => Ok(()),
            (AlternativeFamily::Beta, Some(a)) => {
                Err(Error::param("second_shape", format!("must be positive, got {a}")))
            }
            (AlternativeFamily::Beta, None) => {
                Err(Error::param("second_shape", "required for the beta family"))
            }
            (_, Some(_)) => Err(Error::param(
                "second_shape",
                "only the beta family takes a second shape",
            )),
            (_, None) => Ok(()),
        }
    }

    /// True for the null model `Exp(θ)`.
    pub fn is_exponential(&self) -> bool {
        self.family == AlternativeFamily::Exponential
    }
}

impl fmt::Display for AlternativeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.shape;
        match self.family {
            AlternativeFamily::Exponential => write!(f, "Exp({t})"),
            AlternativeFamily::Gamma => write!(f, "Gamma({t})"),
            AlternativeFamily::Weibull => write!(f, "W({t})"),
            AlternativeFamily::Lognormal => write!(f, "LN({t})"),
            AlternativeFamily::ChiSquare => write!(f, "ChiSq({t})"),
            AlternativeFamily::Beta => {
                write!(f, "Beta({},{t})", self.second_shape.unwrap_or(f64::NAN))
            }
        }
    }
}

/// The fourteen lifetime laws of the standard power comparison, in row order.
pub fn standard_alternatives() -> Vec<AlternativeSpec> {
    use AlternativeFamily::*;
    let one = |family, shape| AlternativeSpec {
        family,
        shape,
        second_shape: None,
    };
    let beta = |alpha, theta| AlternativeSpec {
        family: Beta,
        shape: theta,
        second_shape: Some(alpha),
    };
    vec![
        one(Exponential, 1.0),
        one(Gamma, 0.6),
        one(Gamma, 0.8),
        one(Gamma, 1.2),
        one(Weibull, 0.8),
        one(Weibull, 1.2),
        one(Lognormal, 1.0),
        one(Lognormal, 1.5),
        one(ChiSquare, 1.0),
        one(ChiSquare, 3.0),
        beta(1.0, 1.0),
        beta(0.5, 1.0),
        beta(0.7, 1.0),
        beta(1.0, 1.5),
    ]
}

fn bad(e: impl fmt::Display) -> Error {
    Error::param("distribution", e.to_string())
}

/// `n` i.i.d. lifetimes from `spec`.
pub fn sample_alternative<R: Rng + ?Sized>(
    spec: &AlternativeSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let t = spec.shape;
    let draw = |d: &dyn Fn(&mut R) -> f64, rng: &mut R| (0..n).map(|_| d(rng)).collect();
    Ok(match spec.family {
        AlternativeFamily::Exponential => {
            let d = Exp::new(t).map_err(bad)?;
            draw(&|r| d.sample(r), rng)
        }
        AlternativeFamily::Gamma => {
            let d = Gamma::new(t, 1.0).map_err(bad)?;
            draw(&|r| d.sample(r), rng)
        }
        AlternativeFamily::Weibull => {
            let d = Weibull::new(1.0, t).map_err(bad)?;
            draw(&|r| d.sample(r), rng)
        }
        AlternativeFamily::Lognormal => {
            let d = LogNormal::new(0.0, t).map_err(bad)?;
            draw(&|r| d.sample(r), rng)
        }
        AlternativeFamily::ChiSquare => {
            let d = ChiSquared::new(t).map_err(bad)?;
            draw(&|r| d.sample(r), rng)
        }
        AlternativeFamily::Beta => {
            let alpha = spec.second_shape.unwrap_or(f64::NAN);
            let d = Beta::new(alpha, t).map_err(bad)?;
            draw(&|r| d.sample(r), rng)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoringFamily {
    /// Rate `parameter`.
    Exponential,
    /// Uniform on `(0, parameter)`.
    Uniform,
    /// Density `(p²/(p+1))(1+c)e^{-pc}` with `p = parameter`.
    Lindley,
    /// No censoring; every lifetime is observed.
    None,
}

impl CensoringFamily {
    /// The three censoring laws of the power study, in table-line order.
    pub const STUDY: [CensoringFamily; 3] = [
        CensoringFamily::Exponential,
        CensoringFamily::Uniform,
        CensoringFamily::Lindley,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CensoringFamily::Exponential => "exponential",
            CensoringFamily::Uniform => "uniform",
            CensoringFamily::Lindley => "lindley",
            CensoringFamily::None => "none",
        }
    }
}

impl fmt::Display for CensoringFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensoringSpec {
    pub family: CensoringFamily,
    /// Ignored for [`CensoringFamily::None`].
    pub parameter: f64,
}

impl CensoringSpec {
    pub fn new(family: CensoringFamily, parameter: f64) -> Result<Self> {
        let spec = Self { family, parameter };
        spec.validate()?;
        Ok(spec)
    }

    pub fn none() -> Self {
        Self {
            family: CensoringFamily::None,
            parameter: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family != CensoringFamily::None
            && !(self.parameter.is_finite() && self.parameter > 0.0)
        {
            return Err(Error::param(
                "parameter",
                format!("must be positive, got {}", self.parameter),
            ));
        }
        Ok(())
    }

    /// `G(x) = P(C ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let p = self.parameter;
        match self.family {
            CensoringFamily::Exponential => -(-p * x).exp_m1(),
            CensoringFamily::Uniform => (x / p).clamp(0.0, 1.0),
            CensoringFamily::Lindley => 1.0 - (1.0 + p * x / (p + 1.0)) * (-p * x).exp(),
            CensoringFamily::None => 0.0,
        }
    }
}

/// `n` i.i.d. censoring times; `+∞` for [`CensoringFamily::None`].
pub fn sample_censoring<R: Rng + ?Sized>(
    spec: &CensoringSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let p = spec.parameter;
    Ok(match spec.family {
        CensoringFamily::Exponential => {
            let d = Exp::new(p).map_err(bad)?;
            (0..n).map(|_| d.sample(rng)).collect()
        }
        CensoringFamily::Uniform => (0..n).map(|_| p * rng.random::<f64>()).collect(),
        CensoringFamily::Lindley => {
            // Mixture of Exp(p) with weight p/(p+1) and Gamma(2, rate p).
            let e = Exp::new(p).map_err(bad)?;
            let g = Gamma::new(2.0, 1.0 / p).map_err(bad)?;
            let w = p / (p + 1.0);
            (0..n)
                .map(|_| {
                    if rng.random::<f64>() < w {
                        e.sample(rng)
                    } else {
                        g.sample(rng)
                    }
                })
                .collect()
        }
        CensoringFamily::None => vec![f64::INFINITY; n],
    })
}

/// Seed of the lifetime draws used to estimate censoring fractions.
pub const CALIBRATION_SEED: u64 = 0x6b6d_6578_7063_616c;
/// Number of lifetime draws used to estimate censoring fractions.
pub const CALIBRATION_DRAWS: usize = 1_000_000;
/// Bisection steps on the log of the censoring parameter.
const BISECTION_STEPS: usize = 60;
const CHUNK: usize = 1 << 14;

/// Censoring-fraction estimator for one lifetime law.
///
/// `P(C < X)` is estimated as the average of `G(X_i)` over a fixed set of
/// lifetime draws. Averaging the CDF instead of counting `C_i < X_i`
/// removes the censoring noise entirely, and reusing the same draws for
/// every candidate parameter makes the estimate monotone in the parameter,
/// so bisection is well defined.
#[derive(Debug, Clone)]
pub struct Calibrator {
    alternative: AlternativeSpec,
    draws: Vec<f64>,
}

impl Calibrator {
    pub fn new(alternative: AlternativeSpec) -> Result<Self> {
        Self::with_draws(alternative, CALIBRATION_DRAWS, CALIBRATION_SEED)
    }

    pub fn with_draws(alternative: AlternativeSpec, draws: usize, seed: u64) -> Result<Self> {
        let chunks = draws.div_ceil(CHUNK);
        let parts: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(draws - c * CHUNK);
                sample_alternative(&alternative, len, &mut stream_rng(seed, c as u64))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            alternative,
            draws: parts.concat(),
        })
    }

    pub fn alternative(&self) -> &AlternativeSpec {
        &self.alternative
    }

    /// Estimated `P(C < X)`.
    pub fn censored_fraction(&self, censoring: &CensoringSpec) -> f64 {
        if censoring.family == CensoringFamily::None {
            return 0.0;
        }
        let partial: Vec<f64> = self
            .draws
            .par_chunks(CHUNK)
            .map(|c| c.iter().map(|&x| censoring.cdf(x)).sum::<f64>())
            .collect();
        partial.iter().sum::<f64>() / self.draws.len() as f64
    }

    /// Parameter of `family` whose censored fraction equals `target`.
    pub fn calibrate(&self, family: CensoringFamily, target: f64) -> Result<CensoringSpec> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::param("target_fraction", format!("must lie in (0, 1), got {target}")));
        }
        if family == CensoringFamily::None {
            return Err(Error::Calibration(
                "the uncensored family has a fixed censored fraction of 0".into(),
            ));
        }
        if family == CensoringFamily::Exponential && self.alternative.is_exponential() {
            // P(C < X) = r/(θ + r).
            let r = self.alternative.shape * target / (1.0 - target);
            return CensoringSpec::new(family, r);
        }

        let frac = |log_p: f64| {
            self.censored_fraction(&CensoringSpec {
                family,
                parameter: log_p.exp(),
            })
        };
        // The fraction rises with the rate-type parameters and falls with
        // the uniform upper bound.
        let rising = family != CensoringFamily::Uniform;
        let (mut lo, mut hi) = (-30.0_f64, 30.0_f64);
        let (f_lo, f_hi) = (frac(lo), frac(hi));
        let (min, max) = if rising { (f_lo, f_hi) } else { (f_hi, f_lo) };
        if !(min < target && target < max) {
            return Err(Error::Calibration(format!(
                "{} censoring of {} reaches fractions in [{min:.6}, {max:.6}] over parameters \
                 [e^-30, e^30]; target {target} is outside",
                family, self.alternative
            )));
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if (frac(mid) < target) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        CensoringSpec::new(family, (0.5 * (lo + hi)).exp())
    }
}

/// Censoring law of `family` giving censored fraction `target_fraction`
/// under lifetimes from `alternative`.
pub fn calibrate_censoring(
    alternative: &AlternativeSpec,
    family: CensoringFamily,
    target_fraction: f64,
) -> Result<CensoringSpec> {
    if family == CensoringFamily::Exponential && alternative.is_exponential() {
        alternative.validate()?;
        return Calibrator {
            alternative: *alternative,
            draws: Vec::new(),
        }
        .calibrate(family, target_fraction);
    }
    Calibrator::new(*alternative)?.calibrate(family, target_fraction)
}
