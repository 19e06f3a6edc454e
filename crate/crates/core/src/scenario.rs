//! Scenario documents.
//!
//! A scenario is one JSON object holding every belief the solvers consume.
//! Unknown keys are rejected. Currency amounts may be written as numbers or
//! decimal strings and are always written back as strings.
//!
//! ```
//! use fpsb_ara::scenario::parse_scenario;
//!
//! let s = parse_scenario(r#"{
//!     "reserve": "30",
//!     "self": { "value": "150", "wealth": "150", "risk": 1.0 },
//!     "opponent": {
//!         "value": { "type": "uniform", "lower": "30", "upper": "200" },
//!         "fraction": { "type": "power_fraction", "exponent": 8 },
//!         "wealth": { "type": "uniform", "lower": "100", "upper": "300" }
//!     }
//! }"#).unwrap();
//! assert_eq!(s.bidder.value, 150.0);
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bid_model::{BidDistribution, ClampMode};
use crate::distributions::{Belief, PowerFractionDist, SupportInterval, UniformDist};
use crate::error::{Error, Result, ValidationErrors};
use crate::level_k::{ConceptWeights, SolutionConcept};
use crate::mc::DEFAULT_DRAWS;
use crate::risk::{OpponentRiskBelief, RiskClass, RiskProfile};

/// Serde adapter for currency amounts: reads a number or a decimal string,
/// writes the shortest exact decimal string.
pub mod currency {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(Amount)
    }

    struct Amount;

    impl Visitor<'_> for Amount {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a finite number or decimal string")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(E::custom(format!("{v} is not finite")))
            }
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| E::custom(format!("`{v}` is not a decimal number")))?;
            self.visit_f64(x)
        }
    }
}

/// A scalar belief: `{"type":"uniform","lower":..,"upper":..}` or
/// `{"type":"point","value":..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform {
        #[serde(with = "currency")]
        lower: f64,
        #[serde(with = "currency")]
        upper: f64,
    },
    Point {
        #[serde(with = "currency")]
        value: f64,
    },
}

impl DistSpec {
    pub fn uniform(lower: f64, upper: f64) -> Self {
        DistSpec::Uniform { lower, upper }
    }

    pub fn lower(&self) -> f64 {
        match *self {
            DistSpec::Uniform { lower, .. } => lower,
            DistSpec::Point { value } => value,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            DistSpec::Uniform { upper, .. } => upper,
            DistSpec::Point { value } => value,
        }
    }

    pub fn belief(&self) -> Result<Belief> {
        match *self {
            DistSpec::Uniform { lower, upper } => Belief::uniform(lower, upper),
            DistSpec::Point { value } => Ok(Belief::Point(value)),
        }
    }

    pub fn as_uniform(&self) -> Result<UniformDist> {
        match *self {
            DistSpec::Uniform { lower, upper } => UniformDist::new(lower, upper),
            DistSpec::Point { .. } => Err(Error::Domain("a uniform belief is required".into())),
        }
    }
}

/// `{"type":"power_fraction","exponent":m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FractionSpec {
    PowerFraction { exponent: f64 },
}

impl Default for FractionSpec {
    fn default() -> Self {
        FractionSpec::PowerFraction {
            exponent: PowerFractionDist::DEFAULT_EXPONENT,
        }
    }
}

impl FractionSpec {
    pub fn exponent(&self) -> f64 {
        match *self {
            FractionSpec::PowerFraction { exponent } => exponent,
        }
    }
}

/// Belief about a baseline risk parameter. Without `baseline` the class
/// default is used: uniform on (0, 1) for averse, (1, 2] for seeking, 1 for
/// neutral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskBeliefSpec {
    pub class: RiskClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<DistSpec>,
}

impl RiskBeliefSpec {
    pub fn of_class(class: RiskClass) -> Self {
        Self { class, baseline: None }
    }

    pub fn belief(&self) -> Result<OpponentRiskBelief> {
        match self.baseline {
            None => Ok(match self.class {
                RiskClass::Averse => OpponentRiskBelief::averse(),
                RiskClass::Neutral => OpponentRiskBelief::neutral(),
                RiskClass::Seeking => OpponentRiskBelief::seeking(),
            }),
            Some(b) => OpponentRiskBelief::new(self.class, b.belief()?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidderSpec {
    #[serde(with = "currency")]
    pub value: f64,
    #[serde(with = "currency")]
    pub wealth: f64,
    /// Baseline CRRA parameter in (0, 2].
    pub risk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpponentSpec {
    /// Belief over the opponent's true value (uniform).
    pub value: DistSpec,
    #[serde(default)]
    pub fraction: FractionSpec,
    /// Belief over the opponent's wealth.
    pub wealth: DistSpec,
    /// Belief over the opponent's baseline risk; needed by level-k concepts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskBeliefSpec>,
}

/// What the decision maker thinks the opponent believes about her.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelKSpec {
    /// Opponent's belief over the decision maker's value (uniform).
    pub value: DistSpec,
    #[serde(default)]
    pub fraction: FractionSpec,
    /// Opponent's belief over the decision maker's wealth.
    pub wealth: DistSpec,
}

/// Beliefs for the opponent's own level-2 problem, where he models the
/// decision maker as a level-1 bidder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level3Spec {
    /// Opponent's belief over the decision maker's value (uniform).
    pub value: DistSpec,
    /// Opponent's belief over the decision maker's wealth.
    pub wealth: DistSpec,
    /// Opponent's belief over the decision maker's baseline risk.
    pub risk: RiskBeliefSpec,
    /// What the opponent thinks the decision maker believes about his value (uniform).
    pub opponent_value: DistSpec,
    #[serde(default)]
    pub opponent_fraction: FractionSpec,
    /// What the opponent thinks the decision maker believes about his wealth.
    pub opponent_wealth: DistSpec,
    /// Replaces `opponent.value` as the law of the opponent's value in the
    /// outer loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_value: Option<DistSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    #[serde(default = "default_draws")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

impl Default for McSpec {
    fn default() -> Self {
        Self { n: DEFAULT_DRAWS, seed: None }
    }
}

/// Handling of opponent draws whose value exceeds their wealth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overlap {
    /// Keep the draw and cap the bid domain at `min(v, w)`.
    #[default]
    Cap,
    /// Redraw until `v <= w`.
    Reject,
}

/// Construction of composed bid CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdfChoice {
    /// Closed form when the exponent is 8, quadrature otherwise.
    #[default]
    Auto,
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(with = "currency")]
    pub reserve: f64,
    #[serde(rename = "self")]
    pub bidder: BidderSpec,
    pub opponent: OpponentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levelk: Option<LevelKSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level3: Option<Level3Spec>,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub clamp_mode: ClampMode,
    #[serde(default)]
    pub overlap: Overlap,
    #[serde(default)]
    pub cdf: CdfChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<SolutionConcept, f64>>,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    s.validate()?;
    Ok(s)
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks every constraint and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut e = ValidationErrors::default();
        let tau = self.reserve;
        let b = &self.bidder;
        if !(tau >= 0.0) {
            e.push("reserve", format!("reserve {tau} must be nonnegative"));
        }
        if !(b.value > 0.0) {
            e.push("self.value", format!("true value {} must be positive", b.value));
        }
        if tau >= b.value {
            e.push("reserve", format!("reserve exceeds true value: τ = {tau} ≥ v = {}", b.value));
        }
        if b.value > b.wealth {
            e.push("self.wealth", format!("true value exceeds wealth: v = {} > w = {}", b.value, b.wealth));
        }
        if RiskProfile::new(b.risk).is_err() {
            e.push("self.risk", format!("baseline risk outside (0,2]: {}", b.risk));
        }

        let o = &self.opponent;
        check_value_belief(&mut e, "opponent.value", &o.value, tau, "γ ≥ τ");
        check_fraction(&mut e, "opponent.fraction", &o.fraction, self.cdf);
        check_wealth_belief(&mut e, "opponent.wealth", &o.wealth, &o.value, ("η ≥ γ", "β ≥ κ"));
        if let Some(r) = &o.risk {
            check_risk(&mut e, "opponent.risk", r);
        }

        if let Some(k) = &self.levelk {
            check_value_belief(&mut e, "levelk.value", &k.value, tau, "γ₁ ≥ τ");
            check_fraction(&mut e, "levelk.fraction", &k.fraction, self.cdf);
            check_wealth_belief(&mut e, "levelk.wealth", &k.wealth, &k.value, ("η₁ ≥ γ₁", "β₁ ≥ κ₁"));
        }

        if let Some(l3) = &self.level3 {
            check_value_belief(&mut e, "level3.value", &l3.value, tau, "γ ≥ τ");
            check_positive_belief(&mut e, "level3.wealth", &l3.wealth);
            check_risk(&mut e, "level3.risk", &l3.risk);
            check_value_belief(&mut e, "level3.opponent_value", &l3.opponent_value, tau, "γ ≥ τ");
            check_fraction(&mut e, "level3.opponent_fraction", &l3.opponent_fraction, self.cdf);
            check_positive_belief(&mut e, "level3.opponent_wealth", &l3.opponent_wealth);
            if let Some(v) = &l3.outer_value {
                check_positive_belief(&mut e, "level3.outer_value", v);
            }
        }

        if self.mc.n == 0 {
            e.push("mc.n", "at least one draw is required");
        }

        if let Some(w) = &self.weights {
            if let Err(Error::Validation(inner)) = ConceptWeights::new(w.clone()) {
                e.0.extend(inner.0);
            }
            for c in w.keys() {
                if let Some(msg) = self.concept_unavailable(*c) {
                    e.push(format!("weights.{c}"), msg);
                }
            }
        }
        e.into_result()
    }

    /// Why `concept` cannot be solved for this scenario, if it cannot.
    pub fn concept_unavailable(&self, concept: SolutionConcept) -> Option<String> {
        match concept {
            SolutionConcept::NonStrategic | SolutionConcept::LevelK(1) => None,
            SolutionConcept::LevelK(2) => {
                if self.levelk.is_none() {
                    Some("level-2 needs a `levelk` block".into())
                } else if self.opponent.risk.is_none() {
                    Some("level-2 needs `opponent.risk`".into())
                } else {
                    None
                }
            }
            SolutionConcept::LevelK(3) => {
                if self.level3.is_none() {
                    Some("level-3 needs a `level3` block".into())
                } else if self.levelk.is_none() || self.opponent.risk.is_none() {
                    Some("level-3 needs a `levelk` block and `opponent.risk`".into())
                } else {
                    None
                }
            }
            SolutionConcept::LevelK(k) => Some(format!("level-{k} is not supported")),
        }
    }

    pub fn risk_profile(&self) -> RiskProfile {
        RiskProfile::new(self.bidder.risk).expect("validated")
    }

    pub fn opponent_value(&self) -> UniformDist {
        self.opponent.value.as_uniform().expect("validated")
    }

    pub fn opponent_wealth(&self) -> Belief {
        self.opponent.wealth.belief().expect("validated")
    }

    /// Non-strategic belief over the opponent's bid.
    pub fn bid_cdf(&self) -> Result<BidDistribution> {
        composed_cdf(self.opponent_value(), self.opponent.fraction.exponent(), self.cdf)
    }
}

/// Composition of a uniform value belief with a power fraction whose floor is
/// the value floor.
pub fn composed_cdf(values: UniformDist, exponent: f64, choice: CdfChoice) -> Result<BidDistribution> {
    let closed = match choice {
        CdfChoice::Auto => exponent == PowerFractionDist::DEFAULT_EXPONENT,
        CdfChoice::ClosedForm => true,
        CdfChoice::Quadrature => false,
    };
    if closed {
        if exponent != PowerFractionDist::DEFAULT_EXPONENT {
            return Err(Error::Domain(format!(
                "the closed form needs exponent 8, got {exponent}"
            )));
        }
        BidDistribution::closed_form(values.lower(), values.upper())
    } else {
        BidDistribution::quadrature(values, values.lower(), exponent)
    }
}

fn check_value_belief(e: &mut ValidationErrors, field: &str, d: &DistSpec, tau: f64, rule: &str) {
    match *d {
        DistSpec::Point { .. } => e.push(field, "value beliefs must be uniform"),
        DistSpec::Uniform { lower, upper } => {
            if let Err(err) = SupportInterval::new(lower, upper) {
                e.push(field, strip(err));
            } else if lower <= 0.0 {
                e.push(field, format!("value floor {lower} must be positive"));
            }
            if lower < tau {
                e.push(field, format!("{rule} violated: floor {lower} is below the reserve {tau}"));
            }
        }
    }
}

fn check_positive_belief(e: &mut ValidationErrors, field: &str, d: &DistSpec) {
    match *d {
        DistSpec::Point { value } => {
            if !(value > 0.0) {
                e.push(field, format!("point {value} must be positive"));
            }
        }
        DistSpec::Uniform { lower, upper } => {
            if let Err(err) = SupportInterval::new(lower, upper) {
                e.push(field, strip(err));
            }
        }
    }
}

fn check_wealth_belief(e: &mut ValidationErrors, field: &str, w: &DistSpec, value: &DistSpec, rules: (&str, &str)) {
    check_positive_belief(e, field, w);
    let (gamma, kappa) = (value.lower(), value.upper());
    match *w {
        DistSpec::Uniform { lower, upper } => {
            if lower < gamma {
                e.push(field, format!("{} violated: wealth floor {lower} < value floor {gamma}", rules.0));
            }
            if upper < kappa {
                e.push(field, format!("{} violated: wealth ceiling {upper} < value ceiling {kappa}", rules.1));
            }
        }
        DistSpec::Point { value } => {
            if value < gamma {
                e.push(field, format!("{} violated: wealth {value} < value floor {gamma}", rules.0));
            }
        }
    }
}

fn check_fraction(e: &mut ValidationErrors, field: &str, f: &FractionSpec, choice: CdfChoice) {
    let m = f.exponent();
    if !(m > 0.0 && m.is_finite()) {
        e.push(field, format!("exponent {m} must be positive"));
    } else if choice == CdfChoice::ClosedForm && m != PowerFractionDist::DEFAULT_EXPONENT {
        e.push(field, format!("the closed form needs exponent 8, got {m}"));
    }
}

fn check_risk(e: &mut ValidationErrors, field: &str, r: &RiskBeliefSpec) {
    if let Some(b) = &r.baseline {
        check_positive_belief(e, &format!("{field}.baseline"), b);
        if b.lower() < 0.0 || b.upper() > 2.0 {
            e.push(format!("{field}.baseline"), "baseline risk outside (0,2]");
            return;
        }
    }
    if let Err(err) = r.belief() {
        e.push(field, strip(err));
    }
}

fn strip(err: Error) -> String {
    match err {
        Error::Domain(m) | Error::Infeasible(m) | Error::Numerical(m) => m,
        other => other.to_string(),
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}
