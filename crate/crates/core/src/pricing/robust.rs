use std::fmt;

use log::warn;
use rayon::prelude::*;

use super::TollQuote;
use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::history::MomentEnvelope;
use crate::nature::{solve_nature, NatureObjective, TwoPointSearch};
use crate::{Money, Probability};

const USAGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    TwoPoint,
    EpsilonSweep,
    /// Worst-case revenue read directly off the nature LP at every toll.
    ExactLp,
    Deterministic,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::TwoPoint => "two-point",
            Method::EpsilonSweep => "epsilon-sweep",
            Method::ExactLp => "exact-lp",
            Method::Deterministic => "deterministic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustTollResult {
    pub toll: Money,
    /// `(r, BR(r))` sorted by toll; revenue is over the whole tolling period.
    pub br_curve: Vec<(Money, Money)>,
    pub epsilon: Probability,
    pub method: Method,
    pub quote: TollQuote,
}

impl RobustTollResult {
    pub fn revenue(&self) -> Money {
        self.br_curve
            .iter()
            .find(|p| p.0 == self.toll)
            .map_or(0.0, |p| p.1)
    }
}

/// Index of the largest value, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|b| v > b.1) {
            best = Some((i, v));
        }
    }
    best.map(|b| b.0)
}

/// Two-point heuristic over every grid toll with the mean fixed at the lower
/// bound of the envelope.
pub fn two_point_robust_toll(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    periods: usize,
) -> Result<RobustTollResult> {
    env.check_feasible(grid)?;
    let mu = grid.clamp(env.u_lower);
    let search = TwoPointSearch::new(grid, mu, env.kappa_bar, periods)?;
    let points: Vec<Money> = grid.points().collect();
    let mut usage: Vec<usize> = points
        .par_iter()
        .map(|&r| search.respond(r).usage_count(r))
        .collect();
    let mut br: Vec<Money> = points.iter().zip(&usage).map(|(r, &k)| r * k as f64).collect();
    // fallback toll: one guaranteed period at the lower mean
    let seed = grid.floor_index(mu);
    if br[seed] < points[seed] {
        br[seed] = points[seed];
        usage[seed] = 1;
    }
    let best = argmax(br.iter().copied()).expect("grid is nonempty");
    let toll = points[best];
    let response = search.respond(toll).distribution();
    Ok(RobustTollResult {
        toll,
        br_curve: points.into_iter().zip(br).collect(),
        epsilon: usage[best] as f64 / periods as f64,
        method: Method::TwoPoint,
        quote: TollQuote::new(toll, usage[best], response),
    })
}

/// Usage probability of nature's response at every grid toll.
fn usage_profile(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    objective: NatureObjective,
) -> Result<Vec<Probability>> {
    let points: Vec<Money> = grid.points().collect();
    points
        .par_iter()
        .map(|&r| solve_nature(grid, env, r, objective).map(|s| s.usage_probability))
        .collect()
}

/// Parametric sweep over usage levels `k / T`: for each level keep the
/// largest toll whose nature response still uses the toll road that often,
/// then pick the level with the best `eps * r_eps`.
pub fn epsilon_sweep_robust_toll(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    periods: usize,
    objective: NatureObjective,
) -> Result<RobustTollResult> {
    env.check_feasible(grid)?;
    let usage = usage_profile(grid, env, objective)?;
    let mut result = epsilon_sweep_from_usage(grid, periods, &usage)?;
    let sol = solve_nature(grid, env, result.toll, objective)?;
    result.quote.response = sol.distribution;
    Ok(result)
}

/// Sweep given precomputed usage probabilities (one per grid point).
pub fn epsilon_sweep_from_usage(
    grid: &PriceGrid,
    periods: usize,
    usage: &[Probability],
) -> Result<RobustTollResult> {
    if periods == 0 {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    if usage.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} usage values for {} grid points",
            usage.len(),
            grid.len()
        )));
    }
    let t = periods as f64;
    let mut curve: Vec<(Money, Money)> = Vec::new();
    let mut best: Option<(usize, Money, Money)> = None;
    for k in 1..=periods {
        let eps = k as f64 / t;
        let Some(idx) = (0..grid.len()).rev().find(|&i| usage[i] >= eps - USAGE_TOL) else {
            continue;
        };
        let r = grid.point(idx);
        let value = eps * r;
        curve.push((r, value * t));
        let better = match best {
            None => true,
            Some((_, br, bv)) => value > bv || (value == bv && r < br),
        };
        if better {
            best = Some((k, r, value));
        }
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    curve.dedup_by(|a, b| a.0 == b.0);
    let response = crate::distribution::DiscreteDistribution::point_mass(grid.lower());
    match best {
        Some((k, toll, _)) => Ok(RobustTollResult {
            toll,
            br_curve: curve,
            epsilon: k as f64 / t,
            method: Method::EpsilonSweep,
            quote: TollQuote::new(toll, k, response),
        }),
        None => {
            warn!("no toll sustains any usage level, falling back to the lower bound");
            Ok(RobustTollResult {
                toll: grid.lower(),
                br_curve: vec![(grid.lower(), 0.0)],
                epsilon: 0.0,
                method: Method::EpsilonSweep,
                quote: TollQuote::new(grid.lower(), 0, response),
            })
        }
    }
}

/// Expected worst-case revenue per period at toll `r`: `r * P(c >= r)` under
/// nature's response.
pub fn worst_case_revenue(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    r: Money,
    objective: NatureObjective,
) -> Result<Money> {
    Ok(r * solve_nature(grid, env, r, objective)?.usage_probability)
}

/// Robust toll taken straight from the nature LP's usage at every toll,
/// scaled to a tolling period of `periods`.
pub fn lp_robust_toll(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    periods: usize,
    objective: NatureObjective,
) -> Result<RobustTollResult> {
    env.check_feasible(grid)?;
    let usage = usage_profile(grid, env, objective)?;
    let t = periods as f64;
    let curve: Vec<(Money, Money)> = grid
        .points()
        .zip(&usage)
        .map(|(r, p)| (r, r * p * t))
        .collect();
    let best = argmax(curve.iter().map(|p| p.1)).expect("grid is nonempty");
    let toll = curve[best].0;
    let sol = solve_nature(grid, env, toll, objective)?;
    let count = (usage[best] * t + 1e-9).floor() as usize;
    Ok(RobustTollResult {
        toll,
        br_curve: curve,
        epsilon: usage[best],
        method: Method::ExactLp,
        quote: TollQuote::new(toll, count, sol.distribution),
    })
}
