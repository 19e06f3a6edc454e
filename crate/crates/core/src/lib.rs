//! Optimal bidding in two-bidder first-price sealed-bid auctions by
//! adversarial risk analysis.
//!
//! The decision maker knows her own value, wealth and risk attitude and
//! holds beliefs about her opponent. [`solver`] maximizes her expected
//! utility against a bid distribution from [`bid_model`]; [`level_k`]
//! derives that distribution by simulating the opponent's own problem.
//! Scenarios are JSON documents read by [`scenario`].
//!
//! ```
//! use fpsb_ara::bid_model::BidDistribution;
//! use fpsb_ara::risk::EffectiveRisk;
//! use fpsb_ara::solver::optimal_bid;
//! use fpsb_ara::utility::BidderState;
//!
//! let f = BidDistribution::closed_form(30.0, 200.0)?;
//! let me = BidderState::new(150.0, 150.0, EffectiveRisk::new(1.0)?)?;
//! assert!((optimal_bid(&me, &f, 30.0)?.bid - 88.05).abs() < 0.01);
//! # Ok::<(), fpsb_ara::error::Error>(())
//! ```

pub mod bid_model;
pub mod distributions;
pub mod error;
pub mod level_k;
pub mod mc;
pub mod quad;
pub mod reproduce;
pub mod risk;
pub mod scenario;
pub mod solver;
pub mod utility;

/// Runs the code blocks of the guide as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/concepts/utility.md")]
    struct Utility;
    #[doc = include_str!("../../../book/src/concepts/bid-distributions.md")]
    struct BidDistributions;
    #[doc = include_str!("../../../book/src/concepts/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/concepts/monte-carlo.md")]
    struct MonteCarlo;
    #[doc = include_str!("../../../book/src/concepts/level-k.md")]
    struct LevelK;
    #[doc = include_str!("../../../book/src/scenario-format.md")]
    struct ScenarioFormat;
    #[doc = include_str!("../../../book/src/reproduction.md")]
    struct Reproduction;
}
