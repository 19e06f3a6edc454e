//! The decision maker's belief about the opponent's bid, `F(c) = P(C <= c)`.
//!
//! The opponent bids a random fraction `P` of a random true value `V`, so
//! `C = P·V`. With `V ~ G` on `(γ, κ]` and `P ~ T` on `(γ/v, 1]` independent
//! of `V`,
//!
//! ```text
//! F(c) = G(c) + ∫_c^κ g(v) T(c/v) dv
//! ```
//!
//! Several constructions are available (see [`CdfMode`]); all are evaluated
//! through one [`BidDistribution`] value.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use crate::distributions::{ContinuousDist, SupportInterval, UniformDist};
use crate::error::{domain, Error, Result};
use crate::quad::adaptive_simpson;

/// Absolute tolerance of the inner integral.
pub const QUAD_TOL: f64 = 1e-8;
/// Maximum bisection depth of the inner integral.
pub const QUAD_MAX_DEPTH: u32 = 40;
/// Number of nodes in a cached CDF table.
pub const CACHE_POINTS: usize = 4096;

/// How the scaled (level-k) CDF is clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampMode {
    /// Optimize against the affine CDF, report the clamped one.
    #[default]
    PaperFaithful,
    /// Clamp to `[0, 1]` everywhere.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CdfMode {
    /// Numerical composition of a uniform value belief with a power fraction.
    Quadrature { values: UniformDist, floor: f64, exponent: f64 },
    /// Closed-form composition for a uniform value on `(γ, κ]` and exponent 8.
    ClosedForm { floor: f64, ceiling: f64 },
    /// Composition with a zero floor: `(m x - x^m) / (m - 1)`, `x = c / upper`.
    ZeroFloor { upper: f64, exponent: f64 },
    /// Opponent bids the fraction `q` of a uniform value: affine on `(qγ, qκ]`.
    ScaledLinear { values: UniformDist, q: f64 },
    /// Piecewise-linear empirical CDF through sorted samples.
    Empirical { samples: Arc<[f64]> },
}

#[derive(Debug, Clone)]
struct CdfTable {
    lower: f64,
    step: f64,
    values: Vec<f64>,
}

impl CdfTable {
    fn eval(&self, c: f64) -> f64 {
        let t = (c - self.lower) / self.step;
        let last = self.values.len() - 1;
        if t <= 0.0 {
            return self.values[0];
        }
        let i = t.floor() as usize;
        if i >= last {
            return self.values[last];
        }
        let frac = t - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// Opponent-bid CDF over a support `(lower, upper]`.
///
/// Immutable after construction; safe to share between threads.
#[derive(Debug, Clone)]
pub struct BidDistribution {
    support: SupportInterval,
    mode: CdfMode,
    clamp: ClampMode,
    cache: Option<Arc<CdfTable>>,
}

impl BidDistribution {
    /// Uniform values on `(γ, κ]` bid at a power fraction with floor `γ`.
    pub fn quadrature(values: UniformDist, floor: f64, exponent: f64) -> Result<Self> {
        check_composition(&values, floor, exponent)?;
        Ok(Self::raw(
            SupportInterval::new(floor, values.upper())?,
            CdfMode::Quadrature { values, floor, exponent },
        ))
    }

    pub fn closed_form(floor: f64, ceiling: f64) -> Result<Self> {
        if floor <= 0.0 {
            return Err(domain(format!("closed-form CDF needs a positive floor, got {floor}")));
        }
        Ok(Self::raw(
            SupportInterval::new(floor, ceiling)?,
            CdfMode::ClosedForm { floor, ceiling },
        ))
    }

    pub fn zero_floor(upper: f64, exponent: f64) -> Result<Self> {
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(domain(format!("zero-floor exponent {exponent} must exceed 1")));
        }
        Ok(Self::raw(
            SupportInterval::new(0.0, upper)?,
            CdfMode::ZeroFloor { upper, exponent },
        ))
    }

    pub fn scaled_linear(values: UniformDist, q: f64, clamp: ClampMode) -> Result<Self> {
        check_fraction(q)?;
        let mut d = Self::raw(
            SupportInterval::new(q * values.lower(), q * values.upper())?,
            CdfMode::ScaledLinear { values, q },
        );
        d.clamp = clamp;
        Ok(d)
    }

    /// Empirical CDF of `samples`. The CDF is 0 below the smallest sample,
    /// `i / n` at the `i`-th order statistic and linear in between.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("empirical CDF needs at least one sample"));
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite bid sample {x}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        // A single atom still needs a non-empty support.
        // The smallest sample carries mass 1/n, so the open lower end sits
        // just below it.
        let lower = lo - 1e-9 * lo.abs().max(1.0);
        Ok(Self::raw(
            SupportInterval::new(lower.max(0.0), hi)?,
            CdfMode::Empirical { samples: sorted.into() },
        ))
    }

    fn raw(support: SupportInterval, mode: CdfMode) -> Self {
        Self {
            support,
            mode,
            clamp: ClampMode::PaperFaithful,
            cache: None,
        }
    }

    /// Tabulates the CDF on [`CACHE_POINTS`] nodes and interpolates linearly
    /// between them. Only the composed modes are tabulated.
    pub fn with_cache(mut self) -> Result<Self> {
        if !matches!(
            self.mode,
            CdfMode::Quadrature { .. } | CdfMode::ClosedForm { .. } | CdfMode::ZeroFloor { .. }
        ) {
            return Ok(self);
        }
        let lower = self.support.lower();
        let step = self.support.width() / (CACHE_POINTS - 1) as f64;
        let mut values = Vec::with_capacity(CACHE_POINTS);
        let mut running = 0.0f64;
        for i in 0..CACHE_POINTS {
            let c = if i == CACHE_POINTS - 1 {
                self.support.upper()
            } else {
                lower + i as f64 * step
            };
            running = running.max(self.direct(c)?);
            values.push(running);
        }
        self.cache = Some(Arc::new(CdfTable { lower, step, values }));
        Ok(self)
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn mode(&self) -> &CdfMode {
        &self.mode
    }

    pub fn clamp(&self) -> ClampMode {
        self.clamp
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    /// The CDF the optimizer maximizes against. Differs from [`Self::cdf`]
    /// only for a scaled CDF in paper-faithful mode, where it is not capped
    /// at 1.
    pub fn cdf_for_optimization(&self, c: f64) -> Result<f64> {
        match (&self.mode, self.clamp) {
            (CdfMode::ScaledLinear { values, q }, ClampMode::PaperFaithful) => {
                Ok(scaled_cdf(values, *q, c, false)?.max(0.0))
            }
            _ => self.cdf(c),
        }
    }

    /// Reported CDF, always within `[0, 1]`.
    pub fn cdf(&self, c: f64) -> Result<f64> {
        if c <= self.support.lower() {
            return Ok(0.0);
        }
        if c >= self.support.upper() {
            return Ok(1.0);
        }
        if let Some(table) = &self.cache {
            return Ok(table.eval(c));
        }
        self.direct(c)
    }

    fn direct(&self, c: f64) -> Result<f64> {
        match &self.mode {
            CdfMode::Quadrature { values, floor, exponent } => {
                compose_cdf_quadrature(values, *floor, *exponent, c)
            }
            CdfMode::ClosedForm { floor, ceiling } => compose_cdf_closed(*floor, *ceiling, c),
            CdfMode::ZeroFloor { upper, exponent } => Ok(zero_floor_cdf(*upper, *exponent, c)),
            CdfMode::ScaledLinear { values, q } => scaled_cdf(values, *q, c, true),
            CdfMode::Empirical { samples } => Ok(empirical_cdf(samples, c)),
        }
    }
}

fn check_composition(values: &UniformDist, floor: f64, exponent: f64) -> Result<()> {
    if !(floor > 0.0 && floor <= values.lower()) {
        return Err(domain(format!(
            "bid floor {floor} must lie in (0, {}]",
            values.lower()
        )));
    }
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(domain(format!("fraction exponent {exponent} must be positive")));
    }
    Ok(())
}

fn check_fraction(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("bid fraction q = {q} outside (0, 1]")))
    }
}

/// `G(c) + ∫_c^κ g(v) T_v(c/v) dv` by adaptive Simpson, where `T_v` is the
/// power fraction with floor ratio `floor / v`.
pub fn compose_cdf_quadrature(values: &UniformDist, floor: f64, exponent: f64, c: f64) -> Result<f64> {
    check_composition(values, floor, exponent)?;
    let kappa = values.upper();
    if c <= floor {
        return Ok(0.0);
    }
    if c >= kappa {
        return Ok(1.0);
    }
    // Substituting u = ln(v - γ) removes the 1/(v - γ) peak of the
    // integrand when c is close to the floor.
    // The integration range lies inside the support, where g is constant.
    let g = 1.0 / values.support().width();
    let inner = |u: f64| -> f64 {
        let v = (floor + u.exp()).clamp(c, kappa);
        g * power_fraction_cdf(floor, exponent, c, v) * (v - floor)
    };
    let from = c.max(values.lower());
    let tail = adaptive_simpson(
        inner,
        (from - floor).ln(),
        (kappa - floor).ln(),
        QUAD_TOL,
        QUAD_MAX_DEPTH,
    )?;
    Ok((values.cdf(c) + tail).clamp(0.0, 1.0))
}

/// `T_v(c / v)` for the power fraction with floor ratio `γ / v`, written as
/// `((c/γ)^m - 1) / ((v/γ)^m - 1)` to keep precision near the floor.
fn power_fraction_cdf(floor: f64, exponent: f64, c: f64, v: f64) -> f64 {
    if c >= v {
        return 1.0;
    }
    let lift = |x: f64| (exponent * ((x - floor) / floor).ln_1p()).exp_m1();
    lift(c) / lift(v)
}

/// Closed form of the composition for `V ~ U(γ, κ]` and exponent 8.
pub fn compose_cdf_closed(floor: f64, ceiling: f64, c: f64) -> Result<f64> {
    if floor <= 0.0 {
        return Err(domain(format!("closed-form CDF needs a positive floor, got {floor}")));
    }
    if floor >= ceiling {
        return Err(domain(format!("empty support ({floor}, {ceiling}]")));
    }
    if c <= floor {
        return Ok(0.0);
    }
    if c > ceiling {
        return Ok(1.0);
    }
    let (g, k, b) = (floor, ceiling, c);
    let g7 = g.powi(7);
    let s = SQRT_2;
    let log_ratio = |x: f64| ((x * x + x * g * s + g * g) / (x * x - x * g * s + g * g)).ln();
    let bracket = -s / (16.0 * g7) * log_ratio(k) + s / (16.0 * g7) * log_ratio(b)
        - s / (8.0 * g7) * (k * s / g + 1.0).atan()
        + s / (8.0 * g7) * (b * s / g + 1.0).atan()
        - s / (8.0 * g7) * (k * s / g - 1.0).atan()
        + s / (8.0 * g7) * (b * s / g - 1.0).atan()
        - 1.0 / (4.0 * g7) * (k / g).atan()
        + 1.0 / (4.0 * g7) * (b / g).atan()
        + (k - g).ln() / (8.0 * g7)
        - (b - g).ln() / (8.0 * g7)
        - (k + g).ln() / (8.0 * g7)
        + (b + g).ln() / (8.0 * g7);
    let value = (b - g) / (k - g) + (b.powi(8) - g.powi(8)) / (k - g) * bracket;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!("closed-form CDF is not finite at c = {c}")))
    }
}

fn zero_floor_cdf(upper: f64, exponent: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    if c >= upper {
        return 1.0;
    }
    let x = c / upper;
    (exponent * x - x.powf(exponent)) / (exponent - 1.0)
}

/// CDF of `C = q V` with `V` uniform: `(c - qγ) / (q (κ - γ))`.
/// Without `clamp` the affine expression is returned as is.
pub fn scaled_cdf(values: &UniformDist, q: f64, c: f64, clamp: bool) -> Result<f64> {
    check_fraction(q)?;
    let raw = (c - q * values.lower()) / (q * (values.upper() - values.lower()));
    Ok(if clamp { raw.clamp(0.0, 1.0) } else { raw })
}

fn empirical_cdf(sorted: &[f64], c: f64) -> f64 {
    let n = sorted.len();
    // Number of samples <= c.
    let k = sorted.partition_point(|&x| x <= c);
    if k == 0 {
        return 0.0;
    }
    if k == n {
        return 1.0;
    }
    let (x0, x1) = (sorted[k - 1], sorted[k]);
    let f0 = k as f64 / n as f64;
    // Ties at x1 collapse into one jump.
    let k1 = sorted.partition_point(|&x| x <= x1);
    let f1 = k1 as f64 / n as f64;
    f0 + (c - x0) / (x1 - x0) * (f1 - f0)
}
