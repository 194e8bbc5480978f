//! Cost distributions for the simulated experiments.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Beta,
    Gamma,
    Normal,
    Lognormal,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Beta, Family::Gamma, Family::Normal, Family::Lognormal];

    pub fn label(self) -> &'static str {
        match self {
            Family::Beta => "beta",
            Family::Gamma => "gamma",
            Family::Normal => "normal",
            Family::Lognormal => "lognormal",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family `{s}`")))
    }
}

/// `cost = offset + scale * raw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMapping {
    pub offset: Money,
    pub scale: f64,
}

impl CostMapping {
    pub const IDENTITY: CostMapping = CostMapping { offset: 0.0, scale: 1.0 };

    pub fn apply(&self, raw: f64) -> Money {
        self.offset + self.scale * raw
    }

    /// Maps the unit interval onto `[q, Q]`.
    pub fn onto_grid(grid: &PriceGrid) -> Self {
        Self {
            offset: grid.lower(),
            scale: grid.upper() - grid.lower(),
        }
    }
}

impl fmt::Display for CostMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*x", self.offset, self.scale)
    }
}

/// A family with parameter intervals; every link draws its own parameters.
///
/// Parameters are `(alpha, beta)` for Beta, `(shape, rate)` for Gamma,
/// `(mean, stdev)` for Normal and `(mu, sigma)` of the underlying normal for
/// Lognormal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub name: String,
    pub family: Family,
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub mapping: CostMapping,
}

impl DistributionSpec {
    /// Reversed intervals are swapped; parameters outside the family's domain
    /// are rejected.
    pub fn new(
        name: impl Into<String>,
        family: Family,
        first: (f64, f64),
        second: (f64, f64),
        mapping: CostMapping,
    ) -> Result<Self> {
        let norm = |(a, b): (f64, f64)| if a <= b { (a, b) } else { (b, a) };
        let spec = Self {
            name: name.into(),
            family,
            first: norm(first),
            second: norm(second),
            mapping,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = (self.first, self.second);
        let finite = [a.0, a.1, b.0, b.1, self.mapping.offset, self.mapping.scale]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidDistribution(format!("{}: non-finite parameter", self.name)));
        }
        if a.0 > a.1 || b.0 > b.1 {
            return Err(Error::InvalidDistribution(format!(
                "{}: empty interval {:?} {:?}",
                self.name, a, b
            )));
        }
        let ok = match self.family {
            Family::Beta | Family::Gamma => a.0 > 0.0 && b.0 > 0.0,
            Family::Normal | Family::Lognormal => b.0 >= 0.0,
        };
        if !ok {
            return Err(Error::InvalidDistribution(format!(
                "{}: parameters {:?} {:?} outside the {} domain",
                self.name, a, b, self.family
            )));
        }
        Ok(())
    }

    /// Preset parameter intervals with their cost mappings onto `grid`.
    ///
    /// Beta is mapped onto `[q, Q]`, Gamma is scaled by 10 and Lognormal by
    /// 100 so that every family has a mean of the same order as the default
    /// `[0, 200]` box; Normal is used as drawn.
    pub fn presets(grid: &PriceGrid) -> Vec<DistributionSpec> {
        let unit = CostMapping::onto_grid(grid);
        let rows = [
            ("beta", Family::Beta, (2.0, 5.0), (2.0, 5.0), unit),
            ("beta-wide", Family::Beta, (1.0, 3.0), (1.0, 3.0), unit),
            ("gamma", Family::Gamma, (1.0, 3.0), (1.0 / 3.0, 1.0 / 5.0), CostMapping { offset: 0.0, scale: 10.0 }),
            ("normal", Family::Normal, (90.0, 110.0), (10.0, 30.0), CostMapping::IDENTITY),
            ("lognormal", Family::Lognormal, (0.1, 0.3), (0.1, 0.3), CostMapping { offset: 0.0, scale: 100.0 }),
        ];
        rows.into_iter()
            .map(|(n, f, a, b, m)| DistributionSpec::new(n, f, a, b, m).expect("preset is valid"))
            .collect()
    }

    /// Preset by name (`beta`, `beta-wide`, `gamma`, `normal`, `lognormal`).
    pub fn preset(name: &str, grid: &PriceGrid) -> Result<DistributionSpec> {
        Self::presets(grid)
            .into_iter()
            .find(|s| s.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown distribution `{name}`")))
    }

    /// Draws link parameters uniformly from the intervals.
    pub fn draw_link(&self, rng: &mut impl RngCore) -> Result<LinkDistribution> {
        self.validate()?;
        let mut pick = |(a, b): (f64, f64)| a + (b - a) * rng.random::<f64>();
        let first = pick(self.first);
        let second = pick(self.second);
        LinkDistribution::new(self.family, first, second, self.mapping)
    }

    /// Parameter intervals and mapping as one header-friendly string.
    pub fn describe(&self) -> String {
        format!(
            "{}:{}[{},{}]x[{},{}] map {}",
            self.name, self.family, self.first.0, self.first.1, self.second.0, self.second.1, self.mapping
        )
    }
}

#[derive(Debug, Clone, Copy)]
enum Sampler {
    Beta(Beta<f64>),
    Gamma(Gamma<f64>),
    Normal(Normal<f64>),
    Lognormal(LogNormal<f64>),
}

/// One link's drawn parameters.
#[derive(Debug, Clone, Copy)]
pub struct LinkDistribution {
    pub family: Family,
    pub first: f64,
    pub second: f64,
    pub mapping: CostMapping,
    sampler: Sampler,
}

impl LinkDistribution {
    pub fn new(family: Family, first: f64, second: f64, mapping: CostMapping) -> Result<Self> {
        let bad = |e: String| Error::InvalidDistribution(format!("{family}({first}, {second}): {e}"));
        let sampler = match family {
            Family::Beta => Sampler::Beta(Beta::new(first, second).map_err(|e| bad(e.to_string()))?),
            Family::Gamma => {
                if !(second > 0.0) {
                    return Err(bad("rate must be positive".into()));
                }
                Sampler::Gamma(Gamma::new(first, 1.0 / second).map_err(|e| bad(e.to_string()))?)
            }
            Family::Normal => Sampler::Normal(Normal::new(first, second).map_err(|e| bad(e.to_string()))?),
            Family::Lognormal => {
                Sampler::Lognormal(LogNormal::new(first, second).map_err(|e| bad(e.to_string()))?)
            }
        };
        Ok(Self {
            family,
            first,
            second,
            mapping,
            sampler,
        })
    }

    /// Mean of the mapped cost before clamping.
    pub fn mean(&self) -> Money {
        let raw = match self.family {
            Family::Beta => self.first / (self.first + self.second),
            Family::Gamma => self.first / self.second,
            Family::Normal => self.first,
            Family::Lognormal => (self.first + 0.5 * self.second * self.second).exp(),
        };
        self.mapping.apply(raw)
    }

    /// One mapped draw, clamped into the grid box.
    pub fn sample(&self, rng: &mut impl RngCore, grid: &PriceGrid) -> Money {
        let raw = match &self.sampler {
            Sampler::Beta(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Lognormal(d) => d.sample(rng),
        };
        grid.clamp(self.mapping.apply(raw))
    }
}

/// Draws one parameter set from `spec`, then `n` i.i.d. costs
/// clamped into `[q, Q]`.
pub fn sample_costs(spec: &DistributionSpec, n: usize, seed: u64, grid: &PriceGrid) -> Result<Vec<Money>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let link = spec.draw_link(&mut rng)?;
    Ok((0..n).map(|_| link.sample(&mut rng, grid)).collect())
}
