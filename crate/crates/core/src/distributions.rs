//! Scalar variate generators and log-densities for the families that appear in
//! the shrinkage hierarchies and their full conditionals.
//!
//! Parameterizations:
//!
//! | family            | parameters         | density                                        |
//! |-------------------|--------------------|------------------------------------------------|
//! | `Normal`          | mean, sd           | N(x; mean, sd²)                                |
//! | `Exponential`     | rate d             | d·exp(−d x)                                    |
//! | `Gamma`           | shape m, rate c    | cᵐ/Γ(m) x^(m−1) exp(−c x)                      |
//! | `InverseGamma`    | shape a, scale b   | bᵃ/Γ(a) x^(−a−1) exp(−b/x)                     |
//! | `InverseGaussian` | mean μ, shape λ    | √(λ/2πx³) exp(−λ(x−μ)²/(2μ²x))                 |
//! | `HalfCauchy`      | scale a            | 2a / (π(x² + a²)), x > 0                       |
//! | `Laplace`         | location, scale b  | exp(−|x−loc|/b) / 2b                           |

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::{ln_gamma, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarDist<T> {
    Normal { mean: T, sd: T },
    Exponential { rate: T },
    Gamma { shape: T, rate: T },
    InverseGamma { shape: T, scale: T },
    InverseGaussian { mean: T, shape: T },
    HalfCauchy { scale: T },
    Laplace { location: T, scale: T },
}

fn positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    // NaN fails this comparison as well
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(name, v.to_f64_lossy()))
    }
}

fn finite<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(name, v.to_f64_lossy()))
    }
}

impl<T: Scalar> ScalarDist<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarDist::Normal { mean, sd } => {
                finite("normal.mean", mean)?;
                positive("normal.sd", sd)
            }
            ScalarDist::Exponential { rate } => positive("exponential.rate", rate),
            ScalarDist::Gamma { shape, rate } => {
                positive("gamma.shape", shape)?;
                positive("gamma.rate", rate)
            }
            ScalarDist::InverseGamma { shape, scale } => {
                positive("inverse_gamma.shape", shape)?;
                positive("inverse_gamma.scale", scale)
            }
            ScalarDist::InverseGaussian { mean, shape } => {
                positive("inverse_gaussian.mean", mean)?;
                positive("inverse_gaussian.shape", shape)
            }
            ScalarDist::HalfCauchy { scale } => positive("half_cauchy.scale", scale),
            ScalarDist::Laplace { location, scale } => {
                finite("laplace.location", location)?;
                positive("laplace.scale", scale)
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<T> {
        self.validate()?;
        Ok(match *self {
            ScalarDist::Normal { mean, sd } => mean + sd * rng.std_normal::<T>(),
            ScalarDist::Exponential { rate } => exponential(rate, rng),
            ScalarDist::Gamma { shape, rate } => gamma(shape, rate, rng),
            ScalarDist::InverseGamma { shape, scale } => inv_gamma(shape, scale, rng),
            ScalarDist::InverseGaussian { mean, shape } => inv_gaussian(mean, shape, rng),
            ScalarDist::HalfCauchy { scale } => half_cauchy(scale, rng),
            ScalarDist::Laplace { location, scale } => location + laplace(scale, rng),
        })
    }

    /// Natural-log density; `-inf` outside the support.
    pub fn log_density(&self, x: T) -> Result<T> {
        self.validate()?;
        let half = T::lit(0.5);
        let ninf = T::neg_infinity();
        let ln = |v: T| v.ln();
        let lg = |v: T| T::lit(ln_gamma(v.to_f64_lossy()));
        let two_pi = T::lit(2.0) * T::PI();
        Ok(match *self {
            ScalarDist::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -half * ln(two_pi) - ln(sd) - half * z * z
            }
            ScalarDist::Exponential { rate } => {
                if x < T::zero() {
                    ninf
                } else {
                    ln(rate) - rate * x
                }
            }
            ScalarDist::Gamma { shape, rate } => {
                if x < T::zero() || (x == T::zero() && shape > T::one()) {
                    ninf
                } else {
                    shape * ln(rate) - lg(shape) + (shape - T::one()) * ln(x) - rate * x
                }
            }
            ScalarDist::InverseGamma { shape, scale } => {
                if x <= T::zero() {
                    ninf
                } else {
                    shape * ln(scale) - lg(shape) - (shape + T::one()) * ln(x) - scale / x
                }
            }
            ScalarDist::InverseGaussian { mean, shape } => {
                if x <= T::zero() {
                    ninf
                } else {
                    let d = x - mean;
                    half * (ln(shape) - ln(two_pi) - T::lit(3.0) * ln(x))
                        - shape * d * d / (T::lit(2.0) * mean * mean * x)
                }
            }
            ScalarDist::HalfCauchy { scale } => {
                if x < T::zero() {
                    ninf
                } else {
                    ln(T::lit(2.0) * scale) - ln(T::PI() * (x * x + scale * scale))
                }
            }
            ScalarDist::Laplace { location, scale } => {
                -ln(T::lit(2.0) * scale) - (x - location).abs() / scale
            }
        })
    }

    /// Analytic mean, `None` where it does not exist.
    pub fn mean(&self) -> Option<T> {
        let one = T::one();
        match *self {
            ScalarDist::Normal { mean, .. } => Some(mean),
            ScalarDist::Exponential { rate } => Some(one / rate),
            ScalarDist::Gamma { shape, rate } => Some(shape / rate),
            ScalarDist::InverseGamma { shape, scale } => (shape > one).then(|| scale / (shape - one)),
            ScalarDist::InverseGaussian { mean, .. } => Some(mean),
            ScalarDist::HalfCauchy { .. } => None,
            ScalarDist::Laplace { location, .. } => Some(location),
        }
    }

    /// Analytic variance, `None` where it does not exist.
    pub fn variance(&self) -> Option<T> {
        let one = T::one();
        let two = T::lit(2.0);
        match *self {
            ScalarDist::Normal { sd, .. } => Some(sd * sd),
            ScalarDist::Exponential { rate } => Some(one / (rate * rate)),
            ScalarDist::Gamma { shape, rate } => Some(shape / (rate * rate)),
            ScalarDist::InverseGamma { shape, scale } => (shape > two)
                .then(|| scale * scale / ((shape - one) * (shape - one) * (shape - two))),
            ScalarDist::InverseGaussian { mean, shape } => Some(mean * mean * mean / shape),
            ScalarDist::HalfCauchy { .. } => None,
            ScalarDist::Laplace { scale, .. } => Some(two * scale * scale),
        }
    }
}

// Unchecked samplers used on the Gibbs hot path. Callers guarantee positive,
// finite parameters.

#[inline]
pub fn exponential<T: Scalar>(rate: T, rng: &mut RngStream) -> T {
    -rng.uniform::<T>().ln() / rate
}

/// Gamma(shape, rate) by Marsaglia–Tsang squeeze-rejection; shapes below one
/// are boosted to `shape + 1` and corrected with `U^(1/shape)`.
pub fn gamma<T: Scalar>(shape: T, rate: T, rng: &mut RngStream) -> T {
    debug_assert!(shape > T::zero() && rate > T::zero());
    if shape < T::one() {
        let g = gamma_unit(shape + T::one(), rng);
        let u: T = rng.uniform();
        // log space keeps tiny shapes from underflowing to zero too early
        return (g.ln() + u.ln() / shape).exp() / rate;
    }
    gamma_unit(shape, rng) / rate
}

fn gamma_unit<T: Scalar>(shape: T, rng: &mut RngStream) -> T {
    let third = T::one() / T::lit(3.0);
    let d = shape - third;
    let c = T::one() / (T::lit(9.0) * d).sqrt();
    loop {
        let x: T = rng.std_normal();
        let v = T::one() + c * x;
        if v <= T::zero() {
            continue;
        }
        let v = v * v * v;
        let u: T = rng.uniform();
        let x2 = x * x;
        if u < T::one() - T::lit(0.0331) * x2 * x2 {
            return d * v;
        }
        if u.ln() < T::lit(0.5) * x2 + d * (T::one() - v + v.ln()) {
            return d * v;
        }
    }
}

/// InverseGamma(shape, scale): `scale / Gamma(shape, 1)`.
#[inline]
pub fn inv_gamma<T: Scalar>(shape: T, scale: T, rng: &mut RngStream) -> T {
    scale / gamma(shape, T::one(), rng)
}

/// Inverse Gaussian(mean, shape) by the root-of-chi-square transformation with
/// a uniform selection between the two roots.
pub fn inv_gaussian<T: Scalar>(mean: T, shape: T, rng: &mut RngStream) -> T {
    debug_assert!(mean > T::zero() && shape > T::zero());
    let z: T = rng.std_normal();
    let r = mean * z * z / (T::lit(2.0) * shape);
    // smaller root μ(1 + r − √(r² + 2r)), rewritten without cancellation
    let x = mean / (T::one() + r + (r * r + T::lit(2.0) * r).sqrt());
    let u: T = rng.uniform();
    if u <= mean / (mean + x) {
        x
    } else {
        mean * mean / x
    }
}

#[inline]
pub fn half_cauchy<T: Scalar>(scale: T, rng: &mut RngStream) -> T {
    let u: T = rng.uniform();
    scale * (T::FRAC_PI_2() * u).tan()
}

#[inline]
pub fn laplace<T: Scalar>(scale: T, rng: &mut RngStream) -> T {
    let e = exponential(T::one(), rng);
    let u: T = rng.uniform();
    if u < T::lit(0.5) {
        -scale * e
    } else {
        scale * e
    }
}

/// Log of the Gaussian regression likelihood for one observation.
pub fn gaussian_loglik_point<T: Scalar>(y: T, x: &[T], beta: &[T], sigma2: T) -> Result<T> {
    if !(sigma2 > T::zero()) {
        return Err(Error::domain("sigma2", sigma2.to_f64_lossy()));
    }
    if x.len() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "row has {} entries, beta has {}",
            x.len(),
            beta.len()
        )));
    }
    let fit: T = x.iter().zip(beta).map(|(&a, &b)| a * b).sum();
    Ok(loglik_from_residual(y - fit, sigma2))
}

#[inline]
pub(crate) fn loglik_from_residual<T: Scalar>(resid: T, sigma2: T) -> T {
    let half = T::lit(0.5);
    -half * (T::lit(2.0) * T::PI() * sigma2).ln() - half * resid * resid / sigma2
}
