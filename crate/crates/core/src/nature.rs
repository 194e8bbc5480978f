//! Nature's lower-level problem: pick the cost distribution inside the moment
//! envelope that minimizes either the user's expected cost (user-friendly
//! nature) or the toll revenue (adversarial nature).

use std::fmt;

use crate::distribution::{expected_revenue, expected_user_cost, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::history::MomentEnvelope;
use crate::lp::{LinearProgram, RowKind};
use crate::{Money, Probability};

/// Largest grid accepted by [`brute_force_nature`].
pub const BRUTE_FORCE_MAX_POINTS: usize = 64;

/// Relative feasibility tolerance on moment rows (scaled by the support bound).
pub const MOMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NatureObjective {
    /// Minimize the user's expected cost `E[min(c, r)]`.
    UserFriendly,
    /// Minimize the toll revenue `r * P(c >= r)`.
    Adversarial,
}

impl NatureObjective {
    /// Per-point objective coefficient at cost `c` and toll `r`.
    pub fn coefficient(self, c: Money, r: Money) -> f64 {
        match self {
            NatureObjective::UserFriendly => c.min(r),
            NatureObjective::Adversarial => {
                if c >= r {
                    r
                } else {
                    0.0
                }
            }
        }
    }

    pub fn evaluate(self, dist: &DiscreteDistribution, r: Money) -> f64 {
        match self {
            NatureObjective::UserFriendly => expected_user_cost(dist, r),
            NatureObjective::Adversarial => expected_revenue(dist, r),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NatureObjective::UserFriendly => "ufn",
            NatureObjective::Adversarial => "an",
        }
    }
}

impl fmt::Display for NatureObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Index of the candidate nature prefers at toll `r` (first one on ties).
pub fn choose_response(
    candidates: &[DiscreteDistribution],
    r: Money,
    objective: NatureObjective,
) -> Option<usize> {
    candidates
        .iter()
        .map(|d| objective.evaluate(d, r))
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActiveConstraint {
    MeanLower,
    MeanUpper,
    Variance,
}

impl ActiveConstraint {
    pub fn label(self) -> &'static str {
        match self {
            ActiveConstraint::MeanLower => "mean-lower",
            ActiveConstraint::MeanUpper => "mean-upper",
            ActiveConstraint::Variance => "variance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NatureSolution {
    pub distribution: DiscreteDistribution,
    pub objective_value: f64,
    pub usage_probability: Probability,
    pub active_constraints: Vec<ActiveConstraint>,
}

impl NatureSolution {
    fn from_distribution(
        distribution: DiscreteDistribution,
        grid: &PriceGrid,
        env: &MomentEnvelope,
        r: Money,
        objective: NatureObjective,
    ) -> Self {
        let scale = moment_scale(grid);
        let mu = distribution.mean();
        let mut active = Vec::new();
        if (mu - env.u_lower).abs() <= MOMENT_TOL * scale {
            active.push(ActiveConstraint::MeanLower);
        }
        if (mu - env.u_upper).abs() <= MOMENT_TOL * scale {
            active.push(ActiveConstraint::MeanUpper);
        }
        if distribution.variance() >= env.kappa_bar * mu - MOMENT_TOL * scale * scale {
            active.push(ActiveConstraint::Variance);
        }
        Self {
            objective_value: objective.evaluate(&distribution, r),
            usage_probability: distribution.usage_probability(r),
            distribution,
            active_constraints: active,
        }
    }

    /// Canonical ordering: objective, then variance, then usage. Smaller wins.
    fn ranks_before(&self, other: &NatureSolution, scale: f64) -> bool {
        let tol = MOMENT_TOL * scale;
        let d = self.objective_value - other.objective_value;
        if d.abs() > tol {
            return d < 0.0;
        }
        let dv = self.distribution.variance() - other.distribution.variance();
        if dv.abs() > tol * scale {
            return dv < 0.0;
        }
        let du = self.usage_probability - other.usage_probability;
        if du.abs() > MOMENT_TOL {
            return du < 0.0;
        }
        false
    }
}

fn moment_scale(grid: &PriceGrid) -> f64 {
    grid.upper().max(1.0)
}

/// True when `dist` satisfies the envelope's moment rows within tolerance.
pub fn satisfies_moments(dist: &DiscreteDistribution, grid: &PriceGrid, env: &MomentEnvelope) -> bool {
    let scale = moment_scale(grid);
    let total: f64 = dist.mass().iter().sum();
    let mu = dist.mean();
    (total - 1.0).abs() <= MOMENT_TOL
        && mu >= env.u_lower - MOMENT_TOL * scale
        && mu <= env.u_upper + MOMENT_TOL * scale
        && dist.variance() <= env.kappa_bar * mu + MOMENT_TOL * scale * scale
}

fn check_toll(grid: &PriceGrid, r: Money) -> Result<()> {
    if grid.index_of(r).is_none() {
        return Err(Error::InvalidArgument(format!("toll {r} is not a grid point")));
    }
    Ok(())
}

/// Exact nature response via the moment LP, one solve per grid-aligned mean.
pub fn solve_nature(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    r: Money,
    objective: NatureObjective,
) -> Result<NatureSolution> {
    check_toll(grid, r)?;
    let means = env.mean_candidates(grid)?;
    let scale = moment_scale(grid);
    let points: Vec<Money> = grid.points().collect();
    let scaled: Vec<f64> = points.iter().map(|c| c / scale).collect();
    let primary: Vec<f64> = points.iter().map(|&c| objective.coefficient(c, r) / scale).collect();
    let second: Vec<f64> = scaled.iter().map(|c| c * c).collect();
    let usage: Vec<f64> = points.iter().map(|&c| if c >= r { 1.0 } else { 0.0 }).collect();

    let mut best: Option<NatureSolution> = None;
    for mu in means {
        let m = mu / scale;
        let cap = (mu * mu + env.kappa_bar * mu) / (scale * scale);
        let mut lp = LinearProgram::new(points.len());
        lp.add_row(vec![1.0; points.len()], RowKind::Eq, 1.0)
            .add_row(scaled.clone(), RowKind::Eq, m)
            .add_row(second.clone(), RowKind::Le, cap);
        let sol = lp
            .minimize_lexicographic(&[&primary, &second, &usage])
            .optimal()
            .ok_or_else(|| Error::Solver(format!("moment LP failed at mean {mu}")))?;
        let dist = DiscreteDistribution::from_pairs(
            points
                .iter()
                .copied()
                .zip(sol.x.iter().copied())
                .filter(|p| p.1 > 1e-13),
        )?;
        let candidate = NatureSolution::from_distribution(dist, grid, env, r, objective);
        if best.as_ref().is_none_or(|b| candidate.ranks_before(b, scale)) {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::InfeasibleEnvelope("no admissible mean".into()))
}

/// User-friendly nature: minimize the user's expected cost.
pub fn solve_nature_ufn(grid: &PriceGrid, env: &MomentEnvelope, r: Money) -> Result<NatureSolution> {
    solve_nature(grid, env, r, NatureObjective::UserFriendly)
}

/// Adversarial nature: minimize the toll revenue.
pub fn solve_nature_an(grid: &PriceGrid, env: &MomentEnvelope, r: Money) -> Result<NatureSolution> {
    solve_nature(grid, env, r, NatureObjective::Adversarial)
}

/// Exhaustive search over every support of at most three grid points.
///
/// For each admissible mean, one- and two-point supports take their masses
/// from the sum and mean rows; three-point supports additionally make the
/// variance row tight. These are exactly the basic solutions of the moment LP.
pub fn brute_force_nature(
    grid: &PriceGrid,
    env: &MomentEnvelope,
    r: Money,
    objective: NatureObjective,
) -> Result<NatureSolution> {
    if grid.len() > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::GridTooLarge {
            points: grid.len(),
            limit: BRUTE_FORCE_MAX_POINTS,
        });
    }
    let means = env.mean_candidates(grid)?;
    let scale = moment_scale(grid);
    let pts: Vec<Money> = grid.points().collect();
    let n = pts.len();
    let mut best: Option<NatureSolution> = None;
    let mut offer = |pairs: Vec<(Money, f64)>| {
        if pairs.iter().any(|p| p.1 < -1e-12) {
            return;
        }
        let Ok(dist) = DiscreteDistribution::from_pairs(pairs.into_iter().map(|(c, m)| (c, m.max(0.0))))
        else {
            return;
        };
        if !satisfies_moments(&dist, grid, env) {
            return;
        }
        let cand = NatureSolution::from_distribution(dist, grid, env, r, objective);
        if best.as_ref().is_none_or(|b| cand.ranks_before(b, scale)) {
            best = Some(cand);
        }
    };
    for &mu in &means {
        let cap = mu * mu + env.kappa_bar * mu;
        offer(vec![(mu, 1.0)]);
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (pts[i], pts[j]);
                if a > mu || b < mu {
                    continue;
                }
                let pb = (mu - a) / (b - a);
                offer(vec![(a, 1.0 - pb), (b, pb)]);
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (a, b, c) = (pts[i], pts[j], pts[k]);
                    if let Some(x) = solve3(
                        [[1.0, 1.0, 1.0], [a, b, c], [a * a, b * b, c * c]],
                        [1.0, mu, cap],
                    ) {
                        offer(vec![(a, x[0]), (b, x[1]), (c, x[2])]);
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::InfeasibleEnvelope("no feasible distribution".into()))
}

/// Cramer's rule for a 3x3 system; `None` when singular.
fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        *slot = det(&mc) / d;
    }
    Some(out)
}

/// Two-point response `{lower: low_count periods, upper: the rest}` over a
/// tolling period of `periods`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointResponse {
    pub lower: Money,
    pub upper: Money,
    pub low_count: usize,
    pub mean: Money,
    pub periods: usize,
}

impl TwoPointResponse {
    fn degenerate(mean: Money, periods: usize) -> Self {
        Self {
            lower: mean,
            upper: mean,
            low_count: 0,
            mean,
            periods,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.low_count == 0
    }

    /// Periods in which the toll road is used at toll `r`.
    pub fn usage_count(&self, r: Money) -> usize {
        if self.is_degenerate() {
            if r <= self.mean {
                self.periods
            } else {
                0
            }
        } else {
            self.periods - self.low_count
        }
    }

    /// Total user cost over the tolling period.
    pub fn objective(&self, r: Money) -> f64 {
        if self.is_degenerate() {
            self.periods as f64 * self.mean.min(r)
        } else {
            self.low_count as f64 * self.lower + (self.periods - self.low_count) as f64 * r
        }
    }

    pub fn distribution(&self) -> DiscreteDistribution {
        if self.is_degenerate() {
            return DiscreteDistribution::point_mass(self.mean);
        }
        let t = self.periods as f64;
        let low = self.low_count as f64 / t;
        DiscreteDistribution::from_pairs([(self.lower, low), (self.upper, 1.0 - low)])
            .expect("two-point masses are valid")
    }
}

/// Precomputed lowest feasible lower point for every low-period count.
///
/// The inner scans of the two-point heuristic do not depend on the toll, so
/// they are run once per `(mu, kappa_bar, T)` and reused across tolls.
#[derive(Debug, Clone)]
pub struct TwoPointSearch {
    mean: Money,
    periods: usize,
    /// `(lambda, lower, upper)`, lambda descending from `T - 1`.
    candidates: Vec<(usize, Money, Money)>,
}

impl TwoPointSearch {
    pub fn new(grid: &PriceGrid, mean: Money, kappa_bar: f64, periods: usize) -> Result<Self> {
        if periods < 2 {
            return Err(Error::InvalidArgument(format!("T = {periods}, need T >= 2")));
        }
        if mean < grid.lower() || mean > grid.upper() {
            return Err(Error::InvalidArgument(format!(
                "mean {mean} outside [{}, {}]",
                grid.lower(),
                grid.upper()
            )));
        }
        let t = periods as f64;
        let cap = kappa_bar * mean * (t - 1.0);
        let mut candidates = Vec::new();
        for lambda in (1..periods).rev() {
            let l = lambda as f64;
            for ell in grid.points().take_while(|&p| p < mean) {
                if let Some(u) = two_point_upper(grid, mean, ell, l, t, cap) {
                    candidates.push((lambda, ell, u));
                    break;
                }
            }
        }
        Ok(Self {
            mean,
            periods,
            candidates,
        })
    }

    pub fn mean(&self) -> Money {
        self.mean
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    /// Nature's two-point response to toll `r`.
    pub fn respond(&self, r: Money) -> TwoPointResponse {
        let t = self.periods;
        let mut best = TwoPointResponse::degenerate(self.mean, t);
        let mut best_obj = best.objective(r);
        for &(lambda, ell, u) in &self.candidates {
            let obj = lambda as f64 * ell + (t - lambda) as f64 * r;
            if obj < best_obj {
                best_obj = obj;
                best = TwoPointResponse {
                    lower: ell,
                    upper: u,
                    low_count: lambda,
                    mean: self.mean,
                    periods: t,
                };
            }
        }
        best
    }
}

/// Upper point balancing the mean, if it is admissible.
pub(crate) fn two_point_upper(
    grid: &PriceGrid,
    mean: Money,
    ell: Money,
    lambda: f64,
    t: f64,
    cap: f64,
) -> Option<Money> {
    let u = (mean * t - lambda * ell) / (t - lambda);
    let spread = lambda * (ell - mean).powi(2) + (t - lambda) * (u - mean).powi(2);
    (u <= grid.upper() + 1e-9 && spread <= cap + 1e-9).then_some(u)
}

/// Two-point heuristic for nature at a single toll, with `mu` fixed to the
/// lower mean bound by the caller.
pub fn solve_nature_two_point(
    grid: &PriceGrid,
    mu: Money,
    kappa_bar: f64,
    periods: usize,
    r: Money,
) -> Result<TwoPointResponse> {
    check_toll(grid, r)?;
    Ok(TwoPointSearch::new(grid, mu, kappa_bar, periods)?.respond(r))
}
