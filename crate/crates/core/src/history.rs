//! Observed cost history and the moment envelope estimated from it.

use log::warn;

use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::Money;

/// Default clamp-rate above which a warning is emitted.
pub const DEFAULT_CLAMP_WARN_RATE: f64 = 0.05;

/// Mean interval `[u_lower, u_upper]` and variance-to-mean cap `kappa_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEnvelope {
    pub u_lower: Money,
    pub u_upper: Money,
    pub kappa_bar: f64,
}

impl MomentEnvelope {
    pub fn new(u_lower: Money, u_upper: Money, kappa_bar: f64) -> Result<Self> {
        if !(u_lower.is_finite() && u_upper.is_finite() && kappa_bar.is_finite()) {
            return Err(Error::InvalidEnvelope("values must be finite".into()));
        }
        if u_lower > u_upper {
            return Err(Error::InvalidEnvelope(format!(
                "u_lower {u_lower} exceeds u_upper {u_upper}"
            )));
        }
        if kappa_bar < 0.0 {
            return Err(Error::InvalidEnvelope(format!("kappa_bar {kappa_bar} < 0")));
        }
        Ok(Self {
            u_lower,
            u_upper,
            kappa_bar,
        })
    }

    /// Envelope with a single admissible mean.
    pub fn fixed_mean(mu: Money, kappa_bar: f64) -> Result<Self> {
        Self::new(mu, mu, kappa_bar)
    }

    /// Errors unless the mean interval meets `[q, Q]`.
    pub fn check_feasible(&self, grid: &PriceGrid) -> Result<()> {
        if self.u_lower > grid.upper() || self.u_upper < grid.lower() {
            return Err(Error::InfeasibleEnvelope(format!(
                "mean interval [{}, {}] misses support [{}, {}]",
                self.u_lower,
                self.u_upper,
                grid.lower(),
                grid.upper()
            )));
        }
        Ok(())
    }

    /// Grid-aligned candidate means inside the envelope.
    ///
    /// The interval is intersected with `[q, Q]` and shrunk to grid points;
    /// an interval falling strictly between two grid points is represented by
    /// the grid point nearest its midpoint.
    pub fn mean_candidates(&self, grid: &PriceGrid) -> Result<Vec<Money>> {
        self.check_feasible(grid)?;
        let lo = grid.ceil_index(self.u_lower);
        let hi = grid.floor_index(self.u_upper);
        if lo > hi {
            let mid = 0.5 * (self.u_lower + self.u_upper);
            return Ok(vec![grid.snap(mid)]);
        }
        Ok((lo..=hi).map(|i| grid.point(i)).collect())
    }
}

/// Summary of clamping raw values into `[q, Q]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClampReport {
    pub total: usize,
    pub clamped: usize,
}

impl ClampReport {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.clamped as f64 / self.total as f64
        }
    }

    pub fn merge(&mut self, other: ClampReport) {
        self.total += other.total;
        self.clamped += other.clamped;
    }

    pub fn warn_if_above(&self, threshold: f64, what: &str) {
        if self.rate() > threshold {
            warn!(
                "{what}: {} of {} values ({:.1}%) clamped into the price support",
                self.clamped,
                self.total,
                100.0 * self.rate()
            );
        }
    }
}

/// Clamps every value into `[q, Q]`, counting how many moved.
pub fn clamp_series(grid: &PriceGrid, values: &mut [Money]) -> ClampReport {
    let mut report = ClampReport {
        total: values.len(),
        clamped: 0,
    };
    for v in values.iter_mut() {
        let c = grid.clamp(*v);
        if c != *v {
            report.clamped += 1;
            *v = c;
        }
    }
    report
}

/// Per-state observed arc costs; rows are states, columns arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostHistory {
    states: Vec<Vec<Money>>,
    periods_per_window: usize,
    windows: usize,
}

impl CostHistory {
    pub fn new(states: Vec<Vec<Money>>, periods_per_window: usize, windows: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::NoHistory);
        }
        if periods_per_window == 0 || windows == 0 {
            return Err(Error::InvalidArgument("T and #H must be positive".into()));
        }
        if states.len() != periods_per_window * windows {
            return Err(Error::InvalidArgument(format!(
                "history has {} states, expected T x #H = {} x {}",
                states.len(),
                periods_per_window,
                windows
            )));
        }
        let arcs = states[0].len();
        if arcs == 0 || states.iter().any(|s| s.len() != arcs) {
            return Err(Error::InvalidArgument(
                "every state must list the same nonzero number of arcs".into(),
            ));
        }
        Ok(Self {
            states,
            periods_per_window,
            windows,
        })
    }

    /// Reads the `state,arc,cost` CSV format. Every (state, arc) pair must be
    /// present exactly once; indices are zero-based.
    pub fn from_csv<R: std::io::Read>(
        reader: R,
        periods_per_window: usize,
        windows: usize,
    ) -> Result<Self> {
        let rows = read_state_costs(reader)?;
        Self::new(rows, periods_per_window, windows)
    }

    pub fn states(&self) -> &[Vec<Money>] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn arc_count(&self) -> usize {
        self.states[0].len()
    }

    pub fn periods_per_window(&self) -> usize {
        self.periods_per_window
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    /// Returns a copy with every cost clamped into `[q, Q]`.
    pub fn clamped(&self, grid: &PriceGrid, warn_rate: f64) -> (Self, ClampReport) {
        let mut report = ClampReport::default();
        let states = self
            .states
            .iter()
            .map(|row| {
                let mut row = row.clone();
                report.merge(clamp_series(grid, &mut row));
                row
            })
            .collect();
        report.warn_if_above(warn_rate, "cost history");
        (
            Self {
                states,
                periods_per_window: self.periods_per_window,
                windows: self.windows,
            },
            report,
        )
    }

    /// Per-state margin `min_{free arcs} c - c_toll`, where the toll arc (if
    /// any) is excluded from the minimum. Without a toll arc this is the plain
    /// per-state minimum over all arcs.
    pub fn margin_series(&self, toll_arc: Option<usize>) -> Result<Vec<Money>> {
        if let Some(t) = toll_arc {
            if t >= self.arc_count() {
                return Err(Error::InvalidArgument(format!("toll arc {t} out of range")));
            }
            if self.arc_count() < 2 {
                return Err(Error::NoAlternative);
            }
        }
        Ok(self
            .states
            .iter()
            .map(|row| {
                let best = row
                    .iter()
                    .enumerate()
                    .filter(|(a, _)| Some(*a) != toll_arc)
                    .map(|(_, &c)| c)
                    .fold(f64::INFINITY, f64::min);
                best - toll_arc.map_or(0.0, |t| row[t])
            })
            .collect())
    }
}

pub(crate) fn read_state_costs<R: std::io::Read>(reader: R) -> Result<Vec<Vec<Money>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (s_col, a_col, c_col) = (col("state")?, col("arc")?, col("cost")?);
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let parse_err = |what: &str, v: &str| Error::Parse {
            line,
            message: format!("invalid {what} `{v}`"),
        };
        let s: usize = field(s_col).parse().map_err(|_| parse_err("state", field(s_col)))?;
        let a: usize = field(a_col).parse().map_err(|_| parse_err("arc", field(a_col)))?;
        let c: f64 = field(c_col).parse().map_err(|_| parse_err("cost", field(c_col)))?;
        if !c.is_finite() {
            return Err(parse_err("cost", field(c_col)));
        }
        entries.push((s, a, c));
    }
    if entries.is_empty() {
        return Err(Error::NoHistory);
    }
    let states = entries.iter().map(|e| e.0).max().unwrap() + 1;
    let arcs = entries.iter().map(|e| e.1).max().unwrap() + 1;
    let mut grid = vec![vec![f64::NAN; arcs]; states];
    for (s, a, c) in entries {
        if !grid[s][a].is_nan() {
            return Err(Error::InvalidArgument(format!("duplicate entry for state {s}, arc {a}")));
        }
        grid[s][a] = c;
    }
    for (s, row) in grid.iter().enumerate() {
        if let Some(a) = row.iter().position(|c| c.is_nan()) {
            return Err(Error::InvalidArgument(format!("missing cost for state {s}, arc {a}")));
        }
    }
    Ok(grid)
}

/// Sample mean and (n - 1)-denominator standard deviation.
pub(crate) fn mean_and_stdev(series: &[f64]) -> (f64, f64) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    if series.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Confidence limits of the sample mean, clamped into `[q, Q]`, with the
/// configured variance-to-mean belief `kappa_bar`.
pub fn estimate_moment_envelope(
    grid: &PriceGrid,
    series: &[Money],
    confidence_z: f64,
    kappa_bar: f64,
) -> Result<MomentEnvelope> {
    if series.is_empty() {
        return Err(Error::NoHistory);
    }
    if !(confidence_z >= 0.0) {
        return Err(Error::InvalidArgument(format!("confidence_z {confidence_z} < 0")));
    }
    let (mean, sd) = mean_and_stdev(series);
    let half = confidence_z * sd / (series.len() as f64).sqrt();
    MomentEnvelope::new(grid.clamp(mean - half), grid.clamp(mean + half), kappa_bar)
}
