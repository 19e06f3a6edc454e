#![allow(dead_code)]

use fpsb_ara::risk::RiskClass;
use fpsb_ara::scenario::{DistSpec, FractionSpec, Level3Spec, RiskBeliefSpec, Scenario};

pub fn point(value: f64) -> DistSpec {
    DistSpec::Point { value }
}

pub fn uniform(lower: f64, upper: f64) -> DistSpec {
    DistSpec::uniform(lower, upper)
}

/// The level-2 example with a level-3 block for the opponent's own view.
pub fn level3_example(class: RiskClass, r_b: f64) -> Scenario {
    let mut s = fpsb_ara::reproduce::level2_scenario(class, r_b);
    s.level3 = Some(Level3Spec {
        value: uniform(100.0, 200.0),
        wealth: uniform(150.0, 250.0),
        risk: RiskBeliefSpec::of_class(RiskClass::Averse),
        opponent_value: uniform(30.0, 200.0),
        opponent_fraction: FractionSpec::default(),
        opponent_wealth: uniform(150.0, 250.0),
        outer_value: None,
    });
    s
}

/// Every belief of the outer level-3 loop is a point mass.
pub fn level3_point_mass() -> Scenario {
    let mut s = level3_example(RiskClass::Neutral, 1.0);
    s.opponent.wealth = point(180.0);
    s.levelk.as_mut().unwrap().wealth = point(200.0);
    let l3 = s.level3.as_mut().unwrap();
    l3.wealth = point(200.0);
    l3.risk = RiskBeliefSpec::of_class(RiskClass::Neutral);
    l3.opponent_wealth = point(180.0);
    l3.outer_value = Some(point(170.0));
    s
}

/// A neutral, unconstrained opponent facing a linear bid CDF with floor `d`
/// bids `(v + d) / 2`. With his value uniform on (100, 200] his bids are
/// uniform on ((100 + d) / 2, (200 + d) / 2], which is the level-2 belief with
/// `q = 1/2` and values uniform on (100 + d, 200 + d].
pub fn level3_reduction() -> Scenario {
    let mut s = level3_example(RiskClass::Neutral, 1.5);
    s.reserve = 0.0;
    s.bidder.wealth = 150.0;
    s.opponent.wealth = uniform(200.0, 300.0);
    s.level3.as_mut().unwrap().value = uniform(10.0, 300.0);
    s
}
