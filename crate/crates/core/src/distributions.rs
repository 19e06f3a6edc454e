//! One-dimensional belief distributions.
//!
//! Every family shares the [`ContinuousDist`] contract: CDF, density,
//! quantile, mean, and inverse-CDF sampling. Supports are half-open,
//! `(lower, upper]`, so the CDF is exactly zero at the lower endpoint.
//!
//! Sampling maps one uniform draw `u ∈ (0, 1]` to one variate through the
//! quantile function, which keeps seeded runs bit-reproducible regardless
//! of how draws are grouped.

use rand::Rng;

use crate::error::{domain, Result};

/// A half-open interval `(lower, upper]` with `0 <= lower < upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    lower: f64,
    upper: f64,
}

impl SupportInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(domain(format!("support ({lower}, {upper}] is not finite")));
        }
        if lower < 0.0 {
            return Err(domain(format!("support lower bound {lower} is negative")));
        }
        if lower >= upper {
            return Err(domain(format!("support ({lower}, {upper}] is empty")));
        }
        Ok(Self { lower, upper })
    }

    /// Exclusive lower endpoint.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Inclusive upper endpoint.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x <= self.upper
    }
}

/// Common contract for the continuous families used as beliefs.
pub trait ContinuousDist {
    fn support(&self) -> SupportInterval;

    /// `P(X <= x)`; 0 at or below the lower endpoint, 1 at or above the upper.
    fn cdf(&self, x: f64) -> f64;

    /// Density; zero outside the support.
    fn density(&self, x: f64) -> f64;

    /// Inverse CDF for `u ∈ (0, 1]`. Values of `u` outside that range are clamped.
    fn quantile(&self, u: f64) -> f64;

    fn mean(&self) -> f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64
    where
        Self: Sized,
    {
        self.quantile(unit_draw(rng))
    }
}

/// One uniform draw on `(0, 1]`.
pub fn unit_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Uniform distribution on `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDist {
    support: SupportInterval,
}

impl UniformDist {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        Ok(Self {
            support: SupportInterval::new(lower, upper)?,
        })
    }

    pub fn from_support(support: SupportInterval) -> Self {
        Self { support }
    }

    pub fn lower(&self) -> f64 {
        self.support.lower
    }

    pub fn upper(&self) -> f64 {
        self.support.upper
    }
}

impl ContinuousDist for UniformDist {
    fn support(&self) -> SupportInterval {
        self.support
    }

    fn cdf(&self, x: f64) -> f64 {
        let s = self.support;
        if x <= s.lower {
            0.0
        } else if x >= s.upper {
            1.0
        } else {
            (x - s.lower) / s.width()
        }
    }

    fn density(&self, x: f64) -> f64 {
        if self.support.contains(x) {
            1.0 / self.support.width()
        } else {
            0.0
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let s = self.support;
        (s.lower + u * s.width()).min(s.upper)
    }

    fn mean(&self) -> f64 {
        0.5 * (self.support.lower + self.support.upper)
    }
}

/// Distribution of the fraction `p` of a true value that a bidder bids.
///
/// On `(ρ, 1]` with floor ratio `ρ = γ / v`:
/// `T(p) = (p^m - ρ^m) / (1 - ρ^m)`, density `m p^(m-1) / (1 - ρ^m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFractionDist {
    floor_ratio: f64,
    exponent: f64,
    // 1 - ρ^m, cached
    mass: f64,
}

impl PowerFractionDist {
    pub const DEFAULT_EXPONENT: f64 = 8.0;

    pub fn new(floor_ratio: f64, exponent: f64) -> Result<Self> {
        if !(floor_ratio > 0.0 && floor_ratio < 1.0) {
            return Err(domain(format!(
                "power-fraction floor ratio {floor_ratio} outside (0, 1)"
            )));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(domain(format!(
                "power-fraction exponent {exponent} must be positive"
            )));
        }
        Ok(Self {
            floor_ratio,
            exponent,
            mass: 1.0 - floor_ratio.powf(exponent),
        })
    }

    pub fn floor_ratio(&self) -> f64 {
        self.floor_ratio
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl ContinuousDist for PowerFractionDist {
    fn support(&self) -> SupportInterval {
        SupportInterval {
            lower: self.floor_ratio,
            upper: 1.0,
        }
    }

    fn cdf(&self, p: f64) -> f64 {
        if p <= self.floor_ratio {
            0.0
        } else if p >= 1.0 {
            1.0
        } else {
            (p.powf(self.exponent) - self.floor_ratio.powf(self.exponent)) / self.mass
        }
    }

    fn density(&self, p: f64) -> f64 {
        if p > self.floor_ratio && p <= 1.0 {
            self.exponent * p.powf(self.exponent - 1.0) / self.mass
        } else {
            0.0
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u >= 1.0 {
            return 1.0;
        }
        let floor_pow = self.floor_ratio.powf(self.exponent);
        (floor_pow + u * self.mass)
            .powf(1.0 / self.exponent)
            .clamp(self.floor_ratio, 1.0)
    }

    fn mean(&self) -> f64 {
        let m = self.exponent;
        m / (m + 1.0) * (1.0 - self.floor_ratio.powf(m + 1.0)) / self.mass
    }
}

/// A belief over a scalar: either uniform or a point mass.
///
/// Point masses are used for quantities that are known exactly (a fixed
/// opponent wealth, a risk-neutral baseline at 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Belief {
    Uniform(UniformDist),
    Point(f64),
}

impl Belief {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        UniformDist::new(lower, upper).map(Belief::Uniform)
    }

    pub fn mean(&self) -> f64 {
        match self {
            Belief::Uniform(u) => u.mean(),
            Belief::Point(x) => *x,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Belief::Uniform(u) => u.cdf(x),
            Belief::Point(p) => {
                if x >= *p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Smallest value the belief can produce (exclusive for uniform supports).
    pub fn lower(&self) -> f64 {
        match self {
            Belief::Uniform(u) => u.lower(),
            Belief::Point(x) => *x,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            Belief::Uniform(u) => u.upper(),
            Belief::Point(x) => *x,
        }
    }

    pub fn as_uniform(&self) -> Option<&UniformDist> {
        match self {
            Belief::Uniform(u) => Some(u),
            Belief::Point(_) => None,
        }
    }

    /// Draws one value. A point mass still consumes one uniform from the
    /// stream so that the draw layout does not depend on the belief family.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = unit_draw(rng);
        match self {
            Belief::Uniform(d) => d.quantile(u),
            Belief::Point(x) => *x,
        }
    }
}
