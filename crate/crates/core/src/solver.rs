//! Optimal bids.
//!
//! Every solve is a one-dimensional maximization over the bid domain
//! `(max(τ, floor of F), min(v, w)]`. Because wealth enters the expected
//! utility additively, the bid only has to maximize the profit term
//! `(v - b)^a F(b)`, and `Ψ = w + (v - b*)^a F(b*)` is reported afterwards.

use serde::Serialize;

use crate::bid_model::BidDistribution;
use crate::distributions::{Belief, SupportInterval};
use crate::error::{Error, Result};
use crate::mc::{self, McEstimate};
use crate::risk::{effective_risk_self, EffectiveRisk, RiskProfile};
use crate::utility::{legacy_expected_utility, BidderState};

/// Points in the coarse scan.
pub const GRID_POINTS: usize = 1001;
/// Final bracket width of the golden-section refinement.
pub const GOLDEN_TOL: f64 = 1e-6;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of [`maximize_scalar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
    pub evaluations: usize,
}

fn grid_point(domain: SupportInterval, k: usize) -> f64 {
    if k == GRID_POINTS {
        domain.upper()
    } else {
        domain.lower() + k as f64 * domain.width() / GRID_POINTS as f64
    }
}

fn finite(x: f64, value: f64) -> Result<f64> {
    if !value.is_finite() {
        Err(Error::Numerical(format!("objective is {value} at {x}")))
    } else {
        Ok(value)
    }
}

/// Maximizes `objective` over `(lower, upper]`.
///
/// Scans `lower + k (upper - lower) / 1001` for `k = 1..=1001`, then refines the
/// bracket around the best grid point by golden section down to width `1e-6`.
/// Ties resolve to the smallest argument; the refined point replaces the grid
/// point only if it is strictly better.
pub fn maximize_scalar<F>(mut objective: F, domain: SupportInterval) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut evaluations = 0;
    let mut eval = |x: f64| -> Result<f64> {
        evaluations += 1;
        finite(x, objective(x)?)
    };
    let mut best_k = 1;
    let mut best = f64::NEG_INFINITY;
    for k in 1..=GRID_POINTS {
        let x = grid_point(domain, k);
        let fx = eval(x)?;
        if fx > best || k == 1 {
            best = fx;
            best_k = k;
        }
    }
    let (x, v) = golden(&mut eval, domain, best_k)?;
    let grid_x = grid_point(domain, best_k);
    let (argmax, value) = if v > best { (x, v) } else { (grid_x, best) };
    Ok(Maximum {
        argmax,
        value,
        evaluations,
    })
}

/// Golden section on `[x_{k-1}, x_{k+1}]`, returning the best interior probe.
fn golden<E>(eval: &mut E, domain: SupportInterval, k: usize) -> Result<(f64, f64)>
where
    E: FnMut(f64) -> Result<f64>,
{
    let mut a = grid_point(domain, k - 1).max(domain.lower());
    let mut b = grid_point(domain, (k + 1).min(GRID_POINTS));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let (mut bx, mut bv) = (f64::NAN, f64::NEG_INFINITY);
    let mut record = |x: f64, v: f64| {
        if v > bv || (v == bv && x < bx) {
            bx = x;
            bv = v;
        }
    };
    record(c, fc);
    record(d, fd);
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
            record(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
            record(d, fd);
        }
    }
    Ok((bx, bv))
}

/// Outcome of one optimal-bid solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveResult {
    pub bid: f64,
    /// Reported (clamped) probability of winning at `bid`.
    pub win_probability: f64,
    /// Reported expected utility at `bid`.
    pub expected_utility: f64,
    #[serde(serialize_with = "serialize_interval")]
    pub domain: SupportInterval,
    pub evaluations: usize,
}

fn serialize_interval<S: serde::Serializer>(d: &SupportInterval, s: S) -> Result<S::Ok, S::Error> {
    [d.lower(), d.upper()].serialize(s)
}

/// `(max(τ, floor of F), min(v, w)]`, or an infeasibility error if empty.
pub fn bid_domain(value: f64, wealth: f64, reserve: f64, f: &BidDistribution) -> Result<SupportInterval> {
    let lower = reserve.max(f.support().lower());
    let upper = value.min(wealth);
    if lower >= upper {
        return Err(Error::Infeasible(format!(
            "bid domain ({lower}, {upper}] is empty: the reserve or the opponent's bid floor is not below the value"
        )));
    }
    SupportInterval::new(lower, upper).map_err(|e| Error::Infeasible(e.to_string()))
}

/// A bid problem with its scan grid precomputed, for solving many risk
/// parameters against one CDF.
///
/// The scan ranks grid points by `a ln(v - x) + ln F(x)`, so each extra solve
/// costs one pass of multiply-adds plus the golden refinement.
#[derive(Debug, Clone)]
pub struct BidProblem<'a> {
    value: f64,
    wealth: f64,
    cdf: &'a BidDistribution,
    domain: SupportInterval,
    ln_profit: Vec<f64>,
    ln_win: Vec<f64>,
}

impl<'a> BidProblem<'a> {
    pub fn new(value: f64, wealth: f64, reserve: f64, cdf: &'a BidDistribution) -> Result<Self> {
        let domain = bid_domain(value, wealth, reserve, cdf)?;
        let mut ln_profit = Vec::with_capacity(GRID_POINTS);
        let mut ln_win = Vec::with_capacity(GRID_POINTS);
        for k in 1..=GRID_POINTS {
            let x = grid_point(domain, k);
            ln_profit.push((value - x).ln());
            let fx = finite(x, cdf.cdf_for_optimization(x)?)?;
            ln_win.push(fx.ln());
        }
        Ok(Self {
            value,
            wealth,
            cdf,
            domain,
            ln_profit,
            ln_win,
        })
    }

    pub fn domain(&self) -> SupportInterval {
        self.domain
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn wealth(&self) -> f64 {
        self.wealth
    }

    pub fn cdf(&self) -> &BidDistribution {
        self.cdf
    }

    fn profit(&self, a: f64, b: f64) -> Result<f64> {
        let f = self.cdf.cdf_for_optimization(b)?;
        let p = if b >= self.value { 0.0 } else { (self.value - b).powf(a) };
        finite(b, p * f)
    }

    /// Maximizes `(v - b)^a F(b)`; `value` of the result is that profit term.
    pub fn solve(&self, a: EffectiveRisk) -> Result<Maximum> {
        let a = a.value();
        let mut best_k = 1;
        let mut best = f64::NEG_INFINITY;
        for (i, (lp, lf)) in self.ln_profit.iter().zip(&self.ln_win).enumerate() {
            let s = a * lp + lf;
            if s > best || i == 0 {
                best = s;
                best_k = i + 1;
            }
        }
        let mut evaluations = 0;
        let mut eval = |x: f64| -> Result<f64> {
            evaluations += 1;
            self.profit(a, x)
        };
        let grid_x = grid_point(self.domain, best_k);
        let grid_v = eval(grid_x)?;
        let (x, v) = golden(&mut eval, self.domain, best_k)?;
        let (argmax, value) = if v > grid_v { (x, v) } else { (grid_x, grid_v) };
        Ok(Maximum {
            argmax,
            value,
            evaluations: evaluations + GRID_POINTS,
        })
    }

    /// Reported win probability and expected utility at `b`.
    pub fn report(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let win = self.cdf.cdf(b)?;
        let profit = if b >= self.value { 0.0 } else { (self.value - b).powf(a) };
        Ok((win, self.wealth + profit * win))
    }

    pub fn solve_reported(&self, a: EffectiveRisk) -> Result<SolveResult> {
        let m = self.solve(a)?;
        let (win, psi) = self.report(a.value(), m.argmax)?;
        Ok(SolveResult {
            bid: m.argmax,
            win_probability: win,
            expected_utility: psi,
            domain: self.domain,
            evaluations: m.evaluations,
        })
    }
}

/// Optimal bid of a bidder in `state` against `f`, above the reserve.
pub fn optimal_bid(state: &BidderState, f: &BidDistribution, reserve: f64) -> Result<SolveResult> {
    BidProblem::new(state.value(), state.wealth(), reserve, f)?.solve_reported(state.risk())
}

/// Maximizes the legacy expected utility over `(floor of F, min(upper of F, w + v))`.
/// Bids above the true value are allowed.
pub fn legacy_optimal_bid(value: f64, wealth: f64, r: RiskProfile, f: &BidDistribution) -> Result<SolveResult> {
    let s = f.support();
    let cap = (wealth + value).next_down();
    let domain = SupportInterval::new(s.lower(), s.upper().min(cap))
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    let m = maximize_scalar(|b| legacy_expected_utility(value, wealth, r, b, f), domain)?;
    Ok(SolveResult {
        bid: m.argmax,
        win_probability: f.cdf(m.argmax)?,
        expected_utility: m.value,
        domain,
        evaluations: m.evaluations,
    })
}

/// Inputs of an expected optimal bid under uncertainty about the opponent's
/// wealth.
#[derive(Debug, Clone, Copy)]
pub struct WealthUncertainty<'a> {
    pub value: f64,
    pub wealth: f64,
    pub risk: RiskProfile,
    pub reserve: f64,
    pub opponent_wealth: &'a Belief,
    pub cdf: &'a BidDistribution,
}

/// Monte Carlo summary of an expected optimal bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedBid {
    pub bid: McEstimate,
    pub risk: McEstimate,
    /// Reported win probability at the mean bid.
    pub win_probability: f64,
    /// `w + (v - E b*)^(E a) F(E b*)`.
    pub expected_utility: f64,
    /// Mean over draws of the per-draw win probability.
    pub mean_win_probability: f64,
    /// Mean over draws of the per-draw expected utility.
    pub mean_expected_utility: f64,
}

/// Averages the optimal bid over the opponent's wealth.
///
/// Each draw `w_C` sets the bidder's effective parameter
/// `a = effective_risk_self(r, w, w_C)`; the optimal bid against the fixed
/// CDF is averaged over `n` draws. A point belief is solved once.
pub fn expected_optimal_bid(input: &WealthUncertainty<'_>, n: usize, seed: u64) -> Result<ExpectedBid> {
    if n == 0 {
        return Err(mc::validation("mc.n", "at least one draw is required"));
    }
    let problem = BidProblem::new(input.value, input.wealth, input.reserve, input.cdf)?;
    if let Belief::Point(w_c) = *input.opponent_wealth {
        // Every draw would solve the same problem.
        let a = effective_risk_self(input.risk, input.wealth, w_c)?;
        let b = problem.solve(a)?.argmax;
        let (win, psi) = problem.report(a.value(), b)?;
        return summarize(&problem, &vec![[b, a.value(), win, psi]; n], seed);
    }
    let base = problem.solve(input.risk.as_effective())?;
    let draws = mc::run(n, seed, |rng| {
        let w_c = input.opponent_wealth.sample(rng);
        let a = effective_risk_self(input.risk, input.wealth, w_c)?;
        let b = if a.value() == input.risk.baseline() {
            base.argmax
        } else {
            problem.solve(a)?.argmax
        };
        let (win, psi) = problem.report(a.value(), b)?;
        Ok([b, a.value(), win, psi])
    })?;
    summarize(&problem, &draws, seed)
}

pub(crate) fn summarize(problem: &BidProblem<'_>, draws: &[[f64; 4]], seed: u64) -> Result<ExpectedBid> {
    let column = |j: usize| draws.iter().map(|d| d[j]).collect::<Vec<f64>>();
    let bid = McEstimate::from_samples(&column(0), seed)?;
    let risk = McEstimate::from_samples(&column(1), seed)?;
    let n = draws.len() as f64;
    let (win, psi) = problem.report(risk.mean, bid.mean)?;
    Ok(ExpectedBid {
        bid,
        risk,
        win_probability: win,
        expected_utility: psi,
        mean_win_probability: column(2).iter().sum::<f64>() / n,
        mean_expected_utility: column(3).iter().sum::<f64>() / n,
    })
}
