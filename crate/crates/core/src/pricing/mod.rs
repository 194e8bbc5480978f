//! Toll pricing: robust tolls against nature, the per-instance optimum on
//! realized costs, the deterministic least-cost rule and the MIQP model.

mod miqp;
mod robust;

pub use miqp::{
    emit_nature_miqp, solve_nature_miqp_exact, MiqpModel, MiqpRow, MiqpSolution, MiqpVariable,
    RowSense, TollSetting, VarKind, EXACT_MIQP_MAX_PERIODS,
};
pub use robust::{
    epsilon_sweep_from_usage, epsilon_sweep_robust_toll, lp_robust_toll,
    two_point_robust_toll, worst_case_revenue, Method, RobustTollResult,
};

use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::Money;

/// A toll with its worst-case usage and revenue over a tolling period.
#[derive(Debug, Clone, PartialEq)]
pub struct TollQuote {
    pub toll: Money,
    pub usage_count: usize,
    pub worst_case_revenue: Money,
    pub response: DiscreteDistribution,
}

impl TollQuote {
    pub fn new(toll: Money, usage_count: usize, response: DiscreteDistribution) -> Self {
        Self {
            toll,
            usage_count,
            worst_case_revenue: toll * usage_count as f64,
            response,
        }
    }
}

/// Revenue of toll `r` on realized costs: `r * #{c >= r}`.
pub fn realized_revenue(costs: &[Money], r: Money) -> Money {
    r * costs.iter().filter(|&&c| c >= r).count() as f64
}

/// Best grid toll in hindsight. Costs are clamped into the grid first; ties
/// go to the lowest toll.
pub fn optimal_toll_for_realized_costs(costs: &[Money], grid: &PriceGrid) -> Result<(Money, Money)> {
    if costs.is_empty() {
        return Err(Error::EmptyInput("no realized costs".into()));
    }
    let mut sorted: Vec<Money> = costs.iter().map(|&c| grid.clamp(c)).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut best = (grid.lower(), f64::NEG_INFINITY);
    let mut i = 0;
    for r in grid.points() {
        while i < n && sorted[i] < r {
            i += 1;
        }
        let rev = r * (n - i) as f64;
        if rev > best.1 {
            best = (r, rev);
        }
    }
    Ok(best)
}

/// Least-cost rule for parallel networks: the toll equals the cheapest free
/// alternative.
pub fn deterministic_toll(alternative_costs: &[Money]) -> Result<Money> {
    alternative_costs
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::EmptyInput("no alternative costs".into()))
}

/// Least-cost rule when the toll route itself has a non-toll cost.
pub fn deterministic_margin_toll(toll_base_cost: Money, alternative_costs: &[Money]) -> Result<Money> {
    Ok(deterministic_toll(alternative_costs)? - toll_base_cost)
}
