//! Utility of a bid.
//!
//! The CRRA exponent applies to the profit only, so wealth enters additively:
//!
//! ```text
//! u = w + (v - b)^a   if the bid wins
//! u = w               otherwise
//! Ψ(b) = w + (v - b)^a F(b)
//! ```
//!
//! The legacy form raises final wealth to the power `r` instead:
//! `Ψ₁(b) = (w + v - b)^r F(b) + w^r (1 - F(b))`.

use crate::bid_model::BidDistribution;
use crate::error::{domain, Result};
use crate::risk::{EffectiveRisk, RiskProfile};

/// True value, wealth and effective risk of one bidder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidderState {
    value: f64,
    wealth: f64,
    risk: EffectiveRisk,
}

impl BidderState {
    /// Requires `0 < value <= wealth`.
    pub fn new(value: f64, wealth: f64, risk: EffectiveRisk) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(domain(format!("true value {value} must be positive")));
        }
        if !(wealth >= value && wealth.is_finite()) {
            return Err(domain(format!("wealth {wealth} is below the true value {value}")));
        }
        Ok(Self { value, wealth, risk })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn wealth(&self) -> f64 {
        self.wealth
    }

    pub fn risk(&self) -> EffectiveRisk {
        self.risk
    }

    pub fn with_risk(self, risk: EffectiveRisk) -> Self {
        Self { risk, ..self }
    }

    pub fn with_wealth(self, wealth: f64) -> Result<Self> {
        Self::new(self.value, wealth, self.risk)
    }

    /// `(v - b)^a`, with the limit 0 at `b = v`.
    pub(crate) fn profit_utility(&self, b: f64) -> Result<f64> {
        if b > self.value {
            return Err(domain(format!("bid {b} exceeds the true value {}", self.value)));
        }
        if b == self.value {
            return Ok(0.0);
        }
        Ok((self.value - b).powf(self.risk.value()))
    }
}

/// Utility when the bid `b` wins. At `b = v` this is the limit `w`.
pub fn utility_win(state: &BidderState, b: f64) -> Result<f64> {
    Ok(state.wealth + state.profit_utility(b)?)
}

/// Utility when the bid loses.
pub fn utility_lose(state: &BidderState) -> f64 {
    state.wealth
}

/// `w + (v - b)^a F(b)` with the reported (clamped) CDF.
pub fn expected_utility(state: &BidderState, b: f64, f: &BidDistribution) -> Result<f64> {
    let win = f.cdf(b)?;
    if win == 0.0 {
        state.profit_utility(b)?;
        return Ok(state.wealth);
    }
    Ok(state.wealth + state.profit_utility(b)? * win)
}

/// Legacy expected utility `(w + v - b)^r F(b) + w^r (1 - F(b))`.
pub fn legacy_expected_utility(
    value: f64,
    wealth: f64,
    r: RiskProfile,
    b: f64,
    f: &BidDistribution,
) -> Result<f64> {
    if wealth < 0.0 {
        return Err(domain(format!("wealth {wealth} is negative")));
    }
    let final_wealth = wealth + value - b;
    if !(final_wealth > 0.0) {
        return Err(domain(format!(
            "final wealth w + v - b = {final_wealth} must be positive"
        )));
    }
    let win = f.cdf(b)?;
    let r = r.baseline();
    Ok(final_wealth.powf(r) * win + wealth.powf(r) * (1.0 - win))
}
