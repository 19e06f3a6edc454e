//! Level-k opponents and model averaging.
//!
//! A level-1 opponent best-responds to a non-strategic model of the decision
//! maker. A level-2 decision maker simulates that opponent, summarises his
//! bids by the fraction `q = E(C*) / E(V_C)` of his value, and best-responds
//! to `C = q V_C`. A level-3 decision maker simulates an opponent who is
//! himself level-2.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bid_model::BidDistribution;
use crate::distributions::{Belief, ContinuousDist, UniformDist};
use crate::error::{Error, Result, ValidationErrors};
use crate::mc::{self, derive_seed, McEstimate};
use crate::risk::{sample_effective_opponent_risk, EffectiveRisk, OpponentRiskBelief};
use crate::scenario::{composed_cdf, Overlap, Scenario};
use crate::solver::{bid_domain, expected_optimal_bid, maximize_scalar, ExpectedBid, WealthUncertainty};

/// Assumed model of how the opponent chooses his bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SolutionConcept {
    NonStrategic,
    LevelK(u8),
}

impl fmt::Display for SolutionConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionConcept::NonStrategic => f.write_str("non_strategic"),
            SolutionConcept::LevelK(k) => write!(f, "level_{k}"),
        }
    }
}

impl FromStr for SolutionConcept {
    type Err = Error;

    /// Accepts `non_strategic`, `non-strategic`, `level_2`, `level-2`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        if norm == "non_strategic" {
            return Ok(SolutionConcept::NonStrategic);
        }
        match norm.strip_prefix("level_").map(str::parse::<u8>) {
            Some(Ok(k)) if (1..=3).contains(&k) => Ok(SolutionConcept::LevelK(k)),
            _ => Err(Error::Domain(format!(
                "unknown solution concept `{s}` (expected non_strategic, level_1, level_2 or level_3)"
            ))),
        }
    }
}

impl From<SolutionConcept> for String {
    fn from(c: SolutionConcept) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for SolutionConcept {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Subjective probabilities of the solution concepts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptWeights(BTreeMap<SolutionConcept, f64>);

impl ConceptWeights {
    /// Weights must be nonnegative and sum to 1 within `1e-9`.
    pub fn new(weights: BTreeMap<SolutionConcept, f64>) -> Result<Self> {
        let mut e = ValidationErrors::default();
        if weights.is_empty() {
            e.push("weights", "at least one concept is required");
        }
        for (c, w) in &weights {
            if !(*w >= 0.0 && w.is_finite()) {
                e.push(format!("weights.{c}"), format!("weight {w} must be nonnegative"));
            }
        }
        let total: f64 = weights.values().sum();
        if !weights.is_empty() && (total - 1.0).abs() > 1e-9 {
            e.push("weights", format!("weights sum to {total}, not 1"));
        }
        e.into_result()?;
        Ok(Self(weights))
    }

    pub fn get(&self, c: SolutionConcept) -> Option<f64> {
        self.0.get(&c).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SolutionConcept, f64)> + '_ {
        self.0.iter().map(|(c, w)| (*c, *w))
    }
}

/// `Σ E(b* | M) p(M)` over solution concepts.
pub fn model_average(results: &BTreeMap<SolutionConcept, f64>, weights: &ConceptWeights) -> Result<f64> {
    let mut e = ValidationErrors::default();
    for c in results.keys() {
        if !weights.0.contains_key(c) {
            e.push(format!("weights.{c}"), "no weight for this result");
        }
    }
    for c in weights.0.keys() {
        if !results.contains_key(c) {
            e.push(format!("weights.{c}"), "weight has no matching result");
        }
    }
    e.into_result()?;
    Ok(weights.iter().map(|(c, w)| w * results[&c]).sum())
}

/// Best bid of an opponent with value `v_c`, wealth `w_c` and effective
/// parameter `a_c` against his belief `f_bcb` about the decision maker's bid.
/// The domain is `(max(τ, floor of F), min(v_c, w_c)]`.
pub fn opponent_level1_bid(v_c: f64, a_c: EffectiveRisk, f_bcb: &BidDistribution, reserve: f64, w_c: f64) -> Result<f64> {
    let domain = bid_domain(v_c, w_c, reserve, f_bcb)?;
    let a = a_c.value();
    let m = maximize_scalar(
        |c| {
            let profit = if c >= v_c { 0.0 } else { (v_c - c).powf(a) };
            Ok(profit * f_bcb.cdf_for_optimization(c)?)
        },
        domain,
    )?;
    Ok(m.argmax)
}

/// Draws allowed per accepted draw before giving up.
const MAX_REDRAWS: usize = 10_000;

/// One simulated opponent.
struct OpponentModel<'a> {
    value: &'a Belief,
    risk: &'a OpponentRiskBelief,
    /// Wealth of the party the opponent bids against, as he sees it.
    rival_wealth: &'a Belief,
    wealth: &'a Belief,
    cdf: &'a BidDistribution,
    reserve: f64,
    overlap: Overlap,
}

impl OpponentModel<'_> {
    /// Draws `v`, then `R`, the rival's wealth and the opponent's wealth, and
    /// solves. Draws with an empty domain (or `v > w` under rejection) are
    /// redrawn.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        for _ in 0..MAX_REDRAWS {
            let v = self.value.sample(rng);
            let d = sample_effective_opponent_risk(self.risk, self.rival_wealth, self.wealth, rng)?;
            if self.overlap == Overlap::Reject && v > d.opponent_wealth {
                continue;
            }
            match opponent_level1_bid(v, d.effective, self.cdf, self.reserve, d.opponent_wealth) {
                Ok(c) => return Ok((c, v)),
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Infeasible(format!(
            "no feasible opponent draw in {MAX_REDRAWS} attempts"
        )))
    }
}

/// Simulated opponent bids summarised as a fraction of his mean value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpponentBid {
    /// `E(C*)`.
    pub bid: McEstimate,
    /// `E(C*) / E(V_C)` with the belief mean as `E(V_C)`.
    pub q: f64,
    /// Sample mean of the simulated values, for comparison.
    pub sample_value_mean: f64,
}

fn summarize_opponent(draws: &[(f64, f64)], value_mean: f64, seed: u64) -> Result<OpponentBid> {
    let bids: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let bid = McEstimate::from_samples(&bids, seed)?;
    let sample_value_mean = draws.iter().map(|d| d.1).sum::<f64>() / draws.len() as f64;
    let q = bid.mean / value_mean;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Numerical(format!("bid fraction q = {q} outside (0, 1]")));
    }
    Ok(OpponentBid {
        bid,
        q,
        sample_value_mean,
    })
}

fn require(s: &Scenario, concept: SolutionConcept) -> Result<()> {
    match s.concept_unavailable(concept) {
        None => Ok(()),
        Some(msg) => Err(mc::validation(&concept.to_string(), &msg)),
    }
}

/// Expected bid of a level-1 opponent and the fraction `q`.
///
/// Each draw takes `v_C ~ G_BC`, `R ~ S_BC`, `w_B ~ H_BCB`, `w_C ~ H_BC`,
/// the opponent's effective parameter from his wealth relative to `w_B`, and
/// solves his problem against `F_BCB`.
pub fn expected_opponent_bid(s: &Scenario, n: usize, seed: u64) -> Result<OpponentBid> {
    require(s, SolutionConcept::LevelK(2))?;
    let k = s.levelk.as_ref().expect("checked");
    let f_bcb = composed_cdf(k.value.as_uniform()?, k.fraction.exponent(), s.cdf)?.with_cache()?;
    let g_bc = s.opponent_value();
    let value = Belief::Uniform(g_bc);
    let risk = s.opponent.risk.as_ref().expect("checked").belief()?;
    let rival_wealth = k.wealth.belief()?;
    let wealth = s.opponent_wealth();
    let model = OpponentModel {
        value: &value,
        risk: &risk,
        rival_wealth: &rival_wealth,
        wealth: &wealth,
        cdf: &f_bcb,
        reserve: s.reserve,
        overlap: s.overlap,
    };
    let draws = mc::run(n, seed, |rng| model.draw(rng))?;
    summarize_opponent(&draws, value.mean(), seed)
}

/// Level-2 result.
#[derive(Debug, Clone, Serialize)]
pub struct Level2Solution {
    pub opponent: Option<OpponentBid>,
    pub q: f64,
    pub bid: ExpectedBid,
}

/// Level-2 solve: simulate the level-1 opponent, then best-respond to
/// `C = q V_C` averaging over the opponent's wealth.
pub fn solve_level2(s: &Scenario, n: usize, seed: u64) -> Result<Level2Solution> {
    require(s, SolutionConcept::LevelK(2))?;
    let opponent = expected_opponent_bid(s, n, derive_seed(seed, 1))?;
    let mut out = solve_level2_with_q(s, opponent.q, n, seed)?;
    out.opponent = Some(opponent);
    Ok(out)
}

/// Level-2 best response for a given `q`.
pub fn solve_level2_with_q(s: &Scenario, q: f64, n: usize, seed: u64) -> Result<Level2Solution> {
    let f_bc = BidDistribution::scaled_linear(s.opponent_value(), q, s.clamp_mode)?;
    let bid = respond(s, &f_bc, n, derive_seed(seed, 2))?;
    Ok(Level2Solution {
        opponent: None,
        q,
        bid,
    })
}

fn respond(s: &Scenario, f: &BidDistribution, n: usize, seed: u64) -> Result<ExpectedBid> {
    let wealth = s.opponent_wealth();
    expected_optimal_bid(
        &WealthUncertainty {
            value: s.bidder.value,
            wealth: s.bidder.wealth,
            risk: s.risk_profile(),
            reserve: s.reserve,
            opponent_wealth: &wealth,
            cdf: f,
        },
        n,
        seed,
    )
}

/// Level-3 result.
#[derive(Debug, Clone, Serialize)]
pub struct Level3Solution {
    /// The opponent's estimate of the decision maker's level-1 bid.
    pub inner: OpponentBid,
    /// Simulated level-2 opponent bids.
    pub opponent: McEstimate,
    pub bid: ExpectedBid,
}

/// Level-3 solve.
///
/// 1. The opponent's view of the decision maker as a level-1 bidder is
///    simulated once with `ceil(sqrt(n))` draws, giving his fraction `q_C`.
/// 2. `n` opponent draws each best-respond to `q_C` times the decision
///    maker's value, giving an empirical bid distribution.
/// 3. The decision maker best-responds to that distribution.
pub fn solve_level3(s: &Scenario, n: usize, seed: u64) -> Result<Level3Solution> {
    require(s, SolutionConcept::LevelK(3))?;
    if n == 0 {
        return Err(mc::validation("mc.n", "at least one draw is required"));
    }
    let l3 = s.level3.as_ref().expect("checked");
    let k = s.levelk.as_ref().expect("checked");

    let g_cb: UniformDist = l3.value.as_uniform()?;
    let f_cbc = composed_cdf(l3.opponent_value.as_uniform()?, l3.opponent_fraction.exponent(), s.cdf)?.with_cache()?;
    let inner_value = Belief::Uniform(g_cb);
    let inner_risk = l3.risk.belief()?;
    let inner_rival = l3.opponent_wealth.belief()?;
    let inner_wealth = l3.wealth.belief()?;
    let inner_model = OpponentModel {
        value: &inner_value,
        risk: &inner_risk,
        rival_wealth: &inner_rival,
        wealth: &inner_wealth,
        cdf: &f_cbc,
        reserve: s.reserve,
        overlap: s.overlap,
    };
    let n_inner = (n as f64).sqrt().ceil() as usize;
    let inner_seed = derive_seed(seed, 3);
    let inner_draws = mc::run(n_inner, inner_seed, |rng| inner_model.draw(rng))?;
    let inner = summarize_opponent(&inner_draws, g_cb.mean(), inner_seed)?;

    let f_cb = BidDistribution::scaled_linear(g_cb, inner.q, s.clamp_mode)?;
    let outer_value = match &l3.outer_value {
        Some(v) => v.belief()?,
        None => Belief::Uniform(s.opponent_value()),
    };
    let outer_risk = s.opponent.risk.as_ref().expect("checked").belief()?;
    let outer_rival = k.wealth.belief()?;
    let outer_wealth = s.opponent_wealth();
    let outer_model = OpponentModel {
        value: &outer_value,
        risk: &outer_risk,
        rival_wealth: &outer_rival,
        wealth: &outer_wealth,
        cdf: &f_cb,
        reserve: s.reserve,
        overlap: s.overlap,
    };
    let outer_seed = derive_seed(seed, 4);
    let bids: Vec<f64> = mc::run(n, outer_seed, |rng| outer_model.draw(rng).map(|d| d.0))?;
    let opponent = McEstimate::from_samples(&bids, outer_seed)?;
    let f_bc = BidDistribution::empirical(&bids)?;
    let bid = respond(s, &f_bc, n, derive_seed(seed, 5))?;
    Ok(Level3Solution { inner, opponent, bid })
}

/// Result of solving one concept.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Solution {
    NonStrategic { bid: ExpectedBid },
    Level2(Level2Solution),
    Level3(Level3Solution),
}

impl Solution {
    pub fn expected_bid(&self) -> &ExpectedBid {
        match self {
            Solution::NonStrategic { bid } => bid,
            Solution::Level2(l) => &l.bid,
            Solution::Level3(l) => &l.bid,
        }
    }
}

/// Solves `s` under one concept. Level 1 is the non-strategic problem.
pub fn solve_concept(s: &Scenario, concept: SolutionConcept, n: usize, seed: u64) -> Result<Solution> {
    require(s, concept)?;
    match concept {
        SolutionConcept::NonStrategic | SolutionConcept::LevelK(1) => Ok(Solution::NonStrategic {
            bid: respond(s, &s.bid_cdf()?, n, seed)?,
        }),
        SolutionConcept::LevelK(2) => solve_level2(s, n, seed).map(Solution::Level2),
        SolutionConcept::LevelK(3) => solve_level3(s, n, seed).map(Solution::Level3),
        SolutionConcept::LevelK(k) => Err(Error::Domain(format!("level-{k} is not supported"))),
    }
}

/// Per-concept solutions and their weighted average bid.
#[derive(Debug, Clone, Serialize)]
pub struct AverageSolution {
    pub components: BTreeMap<SolutionConcept, Solution>,
    pub weights: BTreeMap<SolutionConcept, f64>,
    pub bid: f64,
}

pub fn solve_average(s: &Scenario, weights: &ConceptWeights, n: usize, seed: u64) -> Result<AverageSolution> {
    let mut components = BTreeMap::new();
    for (c, _) in weights.iter() {
        components.insert(c, solve_concept(s, c, n, seed)?);
    }
    let bids = components.iter().map(|(c, sol)| (*c, sol.expected_bid().bid.mean)).collect();
    let bid = model_average(&bids, weights)?;
    Ok(AverageSolution {
        components,
        weights: weights.iter().collect(),
        bid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bid_model::ClampMode;
    use crate::risk::RiskClass;
    use crate::scenario::{DistSpec, FractionSpec, LevelKSpec, RiskBeliefSpec};

    fn weights(pairs: &[(SolutionConcept, f64)]) -> Result<ConceptWeights> {
        ConceptWeights::new(pairs.iter().copied().collect())
    }

    #[test]
    fn concept_names() {
        assert_eq!("non-strategic".parse::<SolutionConcept>().unwrap(), SolutionConcept::NonStrategic);
        assert_eq!("level-2".parse::<SolutionConcept>().unwrap(), SolutionConcept::LevelK(2));
        assert_eq!("level_3".parse::<SolutionConcept>().unwrap(), SolutionConcept::LevelK(3));
        assert!("level-4".parse::<SolutionConcept>().is_err());
        assert_eq!(SolutionConcept::LevelK(2).to_string(), "level_2");
    }

    #[test]
    fn averaging() {
        let ns = SolutionConcept::NonStrategic;
        let l2 = SolutionConcept::LevelK(2);
        let l3 = SolutionConcept::LevelK(3);
        let one = weights(&[(ns, 1.0)]).unwrap();
        assert_eq!(model_average(&[(ns, 88.05)].into_iter().collect(), &one).unwrap(), 88.05);
        let half = weights(&[(ns, 0.5), (l2, 0.5)]).unwrap();
        let r = model_average(&[(ns, 88.05), (l2, 112.48)].into_iter().collect(), &half).unwrap();
        assert!((r - 100.265).abs() < 1e-12);
        let three = weights(&[(ns, 0.2), (l2, 0.3), (l3, 0.5)]).unwrap();
        let r = model_average(&[(ns, 90.0), (l2, 110.0), (l3, 120.0)].into_iter().collect(), &three).unwrap();
        assert!((r - (0.2 * 90.0 + 0.3 * 110.0 + 0.5 * 120.0)).abs() < 1e-12);
    }

    #[test]
    fn averaging_needs_matching_keys() {
        let ns = SolutionConcept::NonStrategic;
        let l2 = SolutionConcept::LevelK(2);
        let w = weights(&[(ns, 1.0)]).unwrap();
        let r = model_average(&[(ns, 1.0), (l2, 2.0)].into_iter().collect(), &w);
        assert!(matches!(r, Err(Error::Validation(_))));
        assert!(weights(&[(ns, 0.5), (l2, 0.4)]).is_err());
        assert!(weights(&[(ns, 1.5), (l2, -0.5)]).is_err());
    }

    fn closed() -> BidDistribution {
        BidDistribution::closed_form(30.0, 200.0).unwrap()
    }

    #[test]
    fn level1_opponent_reuses_point_solve() {
        let c = opponent_level1_bid(150.0, EffectiveRisk::new(1.0).unwrap(), &closed(), 30.0, 300.0).unwrap();
        assert!((c - 88.05).abs() < 0.02);
        // Wealth only caps the domain.
        let c2 = opponent_level1_bid(150.0, EffectiveRisk::new(1.0).unwrap(), &closed(), 30.0, 1e6).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn averse_opponent_bids_higher() {
        let f = closed();
        let neutral = opponent_level1_bid(150.0, EffectiveRisk::new(1.0).unwrap(), &f, 30.0, 300.0).unwrap();
        let averse = opponent_level1_bid(150.0, EffectiveRisk::new(0.05).unwrap(), &f, 30.0, 300.0).unwrap();
        assert!(averse >= neutral);
        // Grid oracle for the averse case.
        let n = 200_000;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 1..=n {
            let c = 30.0 + 120.0 * i as f64 / n as f64;
            let v = (150.0 - c).powf(0.05) * f.cdf(c).unwrap();
            if v > best.0 {
                best = (v, c);
            }
        }
        assert!((averse - best.1).abs() < 2e-3);
    }

    #[test]
    fn near_degenerate_domain() {
        let c = opponent_level1_bid(30.0 + 1e-6, EffectiveRisk::new(1.0).unwrap(), &closed(), 30.0, 300.0).unwrap();
        assert!(c > 30.0 && c <= 30.0 + 1e-6);
    }

    pub(crate) fn example_three(class: RiskClass, r_b: f64) -> Scenario {
        let mut s = crate::scenario::parse_scenario(
            r#"{
            "reserve": "30",
            "self": { "value": "150", "wealth": "200", "risk": 1.0 },
            "opponent": {
                "value": { "type": "uniform", "lower": "100", "upper": "200" },
                "wealth": { "type": "uniform", "lower": "100", "upper": "300" }
            }
        }"#,
        )
        .unwrap();
        s.bidder.risk = r_b;
        s.opponent.risk = Some(RiskBeliefSpec::of_class(class));
        s.levelk = Some(LevelKSpec {
            value: DistSpec::uniform(30.0, 200.0),
            fraction: FractionSpec::default(),
            wealth: DistSpec::uniform(150.0, 250.0),
        });
        s
    }

    #[test]
    fn neutral_opponent_matches_one_dimensional_oracle() {
        let s = example_three(RiskClass::Neutral, 1.0);
        let n = 4000;
        let e = expected_opponent_bid(&s, n, 5).unwrap();
        // Oracle: midpoint rule over v_C only, every draw at a_C = 1.
        let f = closed();
        let m = 400;
        let oracle = (0..m)
            .map(|i| {
                let v = 100.0 + 100.0 * (i as f64 + 0.5) / m as f64;
                opponent_level1_bid(v, EffectiveRisk::new(1.0).unwrap(), &f, 30.0, 300.0).unwrap()
            })
            .sum::<f64>()
            / m as f64;
        assert!((e.bid.mean - oracle).abs() < 3.0 * e.bid.std_error + 0.01, "{} vs {oracle}", e.bid.mean);
    }

    #[test]
    fn q_is_a_fraction_and_direction_holds() {
        let averse = expected_opponent_bid(&example_three(RiskClass::Averse, 1.0), 3000, 1).unwrap();
        let seeking = expected_opponent_bid(&example_three(RiskClass::Seeking, 1.0), 3000, 1).unwrap();
        assert!(averse.q > 0.0 && averse.q <= 1.0);
        assert!(seeking.q > 0.0 && seeking.q <= 1.0);
        assert!(averse.q > seeking.q);
    }

    #[test]
    fn affine_best_response() {
        let s = example_three(RiskClass::Averse, 1.0);
        let q = 0.7497;
        let delta = q * 100.0;
        for a in [0.25, 0.5, 1.0, 1.5] {
            let f = BidDistribution::scaled_linear(s.opponent_value(), q, ClampMode::PaperFaithful).unwrap();
            let state = crate::utility::BidderState::new(150.0, 200.0, EffectiveRisk::new(a).unwrap()).unwrap();
            let b = crate::solver::optimal_bid(&state, &f, 30.0).unwrap().bid;
            assert!((b - (150.0 + delta * a) / (1.0 + a)).abs() < 1e-4, "a={a}: {b}");
        }
    }

    #[test]
    fn level1_is_non_strategic() {
        let s = example_three(RiskClass::Averse, 0.5);
        let a = solve_concept(&s, SolutionConcept::NonStrategic, 2000, 8).unwrap();
        let b = solve_concept(&s, SolutionConcept::LevelK(1), 2000, 8).unwrap();
        assert_eq!(a.expected_bid(), b.expected_bid());
    }

    #[test]
    fn missing_beliefs_are_reported() {
        let mut s = example_three(RiskClass::Averse, 0.5);
        s.levelk = None;
        assert!(matches!(solve_concept(&s, SolutionConcept::LevelK(2), 10, 1), Err(Error::Validation(_))));
        assert!(matches!(solve_concept(&s, SolutionConcept::LevelK(3), 10, 1), Err(Error::Validation(_))));
    }
}
