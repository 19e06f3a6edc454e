mod common;

use fpsb_ara::bid_model::BidDistribution;
use fpsb_ara::distributions::UniformDist;
use fpsb_ara::level_k::{opponent_level1_bid, solve_level2_with_q, solve_level3};
use fpsb_ara::risk::{EffectiveRisk, RiskClass};

#[test]
fn point_masses_collapse_to_one_opponent_bid() {
    let s = common::level3_point_mass();
    s.validate().unwrap();
    let sol = solve_level3(&s, 4000, 11).unwrap();
    assert_eq!(sol.opponent.std_error, 0.0);
    let f_cb = BidDistribution::scaled_linear(UniformDist::new(100.0, 200.0).unwrap(), sol.inner.q, s.clamp_mode).unwrap();
    let c = opponent_level1_bid(170.0, EffectiveRisk::new(1.0).unwrap(), &f_cb, 30.0, 180.0).unwrap();
    assert_eq!(sol.opponent.mean, c);
    // Facing a single known bid, the best response is to match it.
    assert!((sol.bid.bid.mean - c).abs() < 1e-5, "{} vs {c}", sol.bid.bid.mean);
    assert!((sol.bid.win_probability - 1.0).abs() < 1e-6);
}

#[test]
fn reduces_to_level2_when_opponent_bids_a_fixed_fraction() {
    let s = common::level3_reduction();
    s.validate().unwrap();
    let n = 40_000;
    let sol = solve_level3(&s, n, 5).unwrap();
    let d = sol.inner.q * 10.0;
    let se = sol.opponent.std_error;
    let mean = (150.0 + d) / 2.0;
    assert!((sol.opponent.mean - mean).abs() < 3.0 * se, "{} vs {mean} ± {se}", sol.opponent.mean);

    let lo = (100.0 + d) / 2.0;
    // (v + a * lo) / (1 + a) with v = 150, a = 1.5.
    let closed = (150.0 + 1.5 * lo) / 2.5;
    let mut reduced = s.clone();
    reduced.opponent.value = common::uniform(100.0 + d, 200.0 + d);
    let level2 = solve_level2_with_q(&reduced, 0.5, n, 5).unwrap().bid.bid.mean;
    assert!((level2 - closed).abs() < 1e-4, "{level2} vs {closed}");

    // The level-3 response sees an empirical CDF, so compare on the utility
    // scale and bound the CDF error with the DKW inequality (alpha = 1e-6).
    let b = sol.bid.bid.mean;
    let f_u = |x: f64| ((x - lo) / 50.0).clamp(0.0, 1.0);
    let log_profit = |x: f64| 1.5 * (150.0 - x).ln() + f_u(x).ln();
    assert!(log_profit(closed) - log_profit(b) < 2e-3, "{b} vs {closed}");
    let dkw = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
    assert!((sol.bid.win_probability - f_u(b)).abs() < dkw, "{} vs {}", sol.bid.win_probability, f_u(b));
}

#[test]
fn two_seeds_agree_within_three_standard_errors() {
    let s = common::level3_example(RiskClass::Averse, 0.6);
    let a = solve_level3(&s, 20_000, 1).unwrap();
    let b = solve_level3(&s, 20_000, 2).unwrap();
    let joint = |x: f64, y: f64| (x * x + y * y).sqrt();
    let d = (a.opponent.mean - b.opponent.mean).abs();
    assert!(d <= 3.0 * joint(a.opponent.std_error, b.opponent.std_error), "{d}");
    let d = (a.inner.bid.mean - b.inner.bid.mean).abs();
    assert!(d <= 3.0 * joint(a.inner.bid.std_error, b.inner.bid.std_error), "{d}");
}

#[test]
fn same_seed_is_bit_identical() {
    let s = common::level3_example(RiskClass::Seeking, 1.2);
    let a = solve_level3(&s, 5000, 9).unwrap();
    let b = fpsb_ara::mc::with_threads(Some(3), || solve_level3(&s, 5000, 9)).unwrap().unwrap();
    assert_eq!(a.bid, b.bid);
    assert_eq!(a.opponent, b.opponent);
}

#[test]
fn level3_needs_its_block() {
    let s = fpsb_ara::reproduce::level2_scenario(RiskClass::Averse, 1.0);
    assert!(solve_level3(&s, 100, 1).is_err());
}
