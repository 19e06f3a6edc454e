//! Wealth-relative CRRA parameters.
//!
//! A bidder's baseline parameter `r ∈ (0, 2]` describes her risk appetite at
//! her reference wealth. When she is richer than the other party, with
//! `h = poorer / richer ∈ (0, 1)`, the item being a normal good makes her
//! more risk-averse (or less risk-seeking):
//!
//! | baseline        | effective |
//! |-----------------|-----------|
//! | `0 < r < 1`     | `r^(1/h)` |
//! | `r = 1`         | `r`       |
//! | `1 < r <= 2`    | `r^h`     |
//!
//! Without a wealth advantage (including equal wealth) the parameter is
//! unchanged.

use rand::Rng;

use crate::distributions::Belief;
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskClass {
    Averse,
    Neutral,
    Seeking,
}

impl RiskClass {
    pub fn of(r: f64) -> Self {
        if r < 1.0 {
            RiskClass::Averse
        } else if r == 1.0 {
            RiskClass::Neutral
        } else {
            RiskClass::Seeking
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RiskClass::Averse => "averse",
            RiskClass::Neutral => "neutral",
            RiskClass::Seeking => "seeking",
        }
    }
}

/// Baseline CRRA parameter `r ∈ (0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskProfile {
    baseline: f64,
}

impl RiskProfile {
    pub fn new(baseline: f64) -> Result<Self> {
        if !(baseline > 0.0 && baseline <= 2.0) {
            return Err(domain(format!("baseline risk {baseline} outside (0,2]")));
        }
        Ok(Self { baseline })
    }

    pub fn neutral() -> Self {
        Self { baseline: 1.0 }
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn class(&self) -> RiskClass {
        RiskClass::of(self.baseline)
    }

    /// The parameter used unchanged, for a bidder with no wealth advantage.
    pub fn as_effective(&self) -> EffectiveRisk {
        EffectiveRisk(self.baseline)
    }

    /// Applies the transform for a wealth ratio `h ∈ (0, 1]`.
    pub fn adjusted(&self, h: f64) -> EffectiveRisk {
        let r = self.baseline;
        EffectiveRisk(match self.class() {
            RiskClass::Averse => r.powf(1.0 / h),
            RiskClass::Neutral => r,
            RiskClass::Seeking => r.powf(h),
        })
    }
}

/// Effective (wealth-adjusted) CRRA exponent `a ∈ (0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EffectiveRisk(f64);

impl EffectiveRisk {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 2.0) {
            return Err(domain(format!("effective risk {a} outside (0,2]")));
        }
        Ok(Self(a))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

fn check_wealth(label: &str, w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{label} wealth {w} must be positive")))
    }
}

/// Effective parameter of a bidder with wealth `w_self` facing `w_other`.
pub fn effective_risk_self(r: RiskProfile, w_self: f64, w_other: f64) -> Result<EffectiveRisk> {
    check_wealth("own", w_self)?;
    check_wealth("other", w_other)?;
    if w_self > w_other {
        Ok(r.adjusted(w_other / w_self))
    } else {
        Ok(r.as_effective())
    }
}

/// Effective parameter the decision maker (wealth `w_b`) assigns to an
/// opponent with baseline `r_opp` and wealth `w_c`. Only a richer opponent
/// is adjusted.
pub fn effective_risk_opponent(r_opp: RiskProfile, w_b: f64, w_c: f64) -> Result<EffectiveRisk> {
    effective_risk_self(r_opp, w_c, w_b)
}

/// Belief about the opponent's baseline risk parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpponentRiskBelief {
    class: RiskClass,
    baseline: Belief,
}

impl OpponentRiskBelief {
    /// Baseline uniform on `(0, 1)`.
    pub fn averse() -> Self {
        Self {
            class: RiskClass::Averse,
            baseline: Belief::uniform(0.0, 1.0).expect("static support"),
        }
    }

    /// Baseline uniform on `(1, 2]`.
    pub fn seeking() -> Self {
        Self {
            class: RiskClass::Seeking,
            baseline: Belief::uniform(1.0, 2.0).expect("static support"),
        }
    }

    /// Baseline degenerate at 1.
    pub fn neutral() -> Self {
        Self {
            class: RiskClass::Neutral,
            baseline: Belief::Point(1.0),
        }
    }

    pub fn new(class: RiskClass, baseline: Belief) -> Result<Self> {
        let ok = match (class, baseline) {
            (RiskClass::Averse, Belief::Uniform(u)) => u.upper() <= 1.0,
            (RiskClass::Averse, Belief::Point(x)) => x > 0.0 && x < 1.0,
            (RiskClass::Seeking, Belief::Uniform(u)) => u.lower() >= 1.0 && u.upper() <= 2.0,
            (RiskClass::Seeking, Belief::Point(x)) => x > 1.0 && x <= 2.0,
            (RiskClass::Neutral, Belief::Point(x)) => x == 1.0,
            (RiskClass::Neutral, Belief::Uniform(_)) => false,
        };
        if ok {
            Ok(Self { class, baseline })
        } else {
            Err(domain(format!(
                "baseline belief {baseline:?} does not match the {} class",
                class.as_str()
            )))
        }
    }

    pub fn class(&self) -> RiskClass {
        self.class
    }

    pub fn baseline(&self) -> &Belief {
        &self.baseline
    }
}

/// One realisation of the opponent-risk draw, with the wealths it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpponentRiskDraw {
    pub baseline: f64,
    pub self_wealth: f64,
    pub opponent_wealth: f64,
    pub effective: EffectiveRisk,
}

/// Draws `R`, then the decision maker's wealth, then the opponent's wealth
/// (in that order) and returns the opponent's effective parameter.
/// Repeated calls realise the distribution of the opponent's effective risk.
pub fn sample_effective_opponent_risk<R: Rng + ?Sized>(
    belief: &OpponentRiskBelief,
    wealth_self: &Belief,
    wealth_opponent: &Belief,
    rng: &mut R,
) -> Result<OpponentRiskDraw> {
    let baseline = belief.baseline.sample(rng);
    let self_wealth = wealth_self.sample(rng);
    let opponent_wealth = wealth_opponent.sample(rng);
    let profile = RiskProfile::new(baseline).map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("sampled opponent risk: {m}")),
        other => other,
    })?;
    let effective = effective_risk_opponent(profile, self_wealth, opponent_wealth)?;
    Ok(OpponentRiskDraw {
        baseline,
        self_wealth,
        opponent_wealth,
        effective,
    })
}
