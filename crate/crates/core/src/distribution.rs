//! Discrete cost distributions and the revenue / user-cost primitives over them.

use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::{Money, Probability};

pub const MASS_TOL: f64 = 1e-9;

/// Probability masses on strictly increasing support points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<Money>,
    mass: Vec<Probability>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<Money>, mass: Vec<Probability>) -> Result<Self> {
        if support.is_empty() || support.len() != mass.len() {
            return Err(Error::InvalidDistribution(format!(
                "support ({}) and mass ({}) must be nonempty and of equal length",
                support.len(),
                mass.len()
            )));
        }
        if support.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite support point".into()));
        }
        if !support.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidDistribution(
                "support points must be strictly increasing".into(),
            ));
        }
        if mass.iter().any(|&m| !(m >= -MASS_TOL)) {
            return Err(Error::InvalidDistribution("negative mass".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        let mass = mass.into_iter().map(|m| m.max(0.0)).collect();
        Ok(Self { support, mass })
    }

    /// Builds a distribution from unsorted `(point, mass)` pairs, merging
    /// coincident points and dropping zero masses.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Money, Probability)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().filter(|p| p.1 > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<Money> = Vec::with_capacity(pairs.len());
        let mut mass: Vec<Probability> = Vec::with_capacity(pairs.len());
        for (c, m) in pairs {
            match support.last() {
                Some(&last) if last == c => *mass.last_mut().unwrap() += m,
                _ => {
                    support.push(c);
                    mass.push(m);
                }
            }
        }
        Self::new(support, mass)
    }

    pub fn point_mass(at: Money) -> Self {
        Self {
            support: vec![at],
            mass: vec![1.0],
        }
    }

    /// Equal masses on every grid point.
    pub fn uniform_on(grid: &PriceGrid) -> Self {
        let n = grid.len();
        Self {
            support: grid.points().collect(),
            mass: vec![1.0 / n as f64; n],
        }
    }

    pub fn support(&self) -> &[Money] {
        &self.support
    }

    pub fn mass(&self) -> &[Probability] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Money, Probability)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    pub fn mean(&self) -> Money {
        self.iter().map(|(c, m)| c * m).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(c, m)| c * c * m).sum()
    }

    /// Population variance `E[c^2] - E[c]^2`.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.iter().map(|(c, m)| m * (c - mu) * (c - mu)).sum()
    }

    pub fn within(&self, grid: &PriceGrid) -> bool {
        self.support.iter().all(|&c| grid.contains(c))
    }

    /// `P(c >= r)`: probability that the toll road is used at toll `r`.
    /// Ties `c = r` count as usage.
    pub fn usage_probability(&self, r: Money) -> Probability {
        self.iter().filter(|&(c, _)| c >= r).map(|(_, m)| m).sum()
    }

    /// `P(c <= x)`.
    pub fn cdf(&self, x: Money) -> Probability {
        self.iter().filter(|&(c, _)| c <= x).map(|(_, m)| m).sum()
    }
}

/// Expected toll revenue `r * P(c >= r)`.
pub fn expected_revenue(dist: &DiscreteDistribution, r: Money) -> Money {
    r * dist.usage_probability(r)
}

/// Expected user cost `E[min(c, r)]`.
///
/// Also computed as `r - E[max(r - c, 0)]`; the two forms are checked against
/// each other in debug builds.
pub fn expected_user_cost(dist: &DiscreteDistribution, r: Money) -> Money {
    let direct: f64 = dist.iter().map(|(c, m)| m * c.min(r)).sum();
    debug_assert!({
        let shortfall: f64 = dist.iter().map(|(c, m)| m * (r - c).max(0.0)).sum();
        let rearranged = r - shortfall;
        (direct - rearranged).abs() <= 1e-12 * r.abs().max(1.0)
    });
    direct
}

/// The parametric nature objective `r - E[max(r - c, 0)] / (1 - eps)`.
pub fn cvar_objective(dist: &DiscreteDistribution, r: Money, epsilon: Probability) -> f64 {
    let shortfall: f64 = dist.iter().map(|(c, m)| m * (r - c).max(0.0)).sum();
    r - shortfall / (1.0 - epsilon)
}
