//! General single-commodity networks: path margins, the per-toll-path
//! parallel reduction, and allocation of path bounds to toll arcs.

use std::io::Read;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::history::{clamp_series, estimate_moment_envelope, read_state_costs, ClampReport, MomentEnvelope};
use crate::lp::{LinearProgram, RowKind};
use crate::nature::NatureObjective;
use crate::pricing::{epsilon_sweep_robust_toll, two_point_robust_toll};
use crate::Money;

pub const DEFAULT_MAX_PATHS: usize = 64;
/// Largest number of toll arcs accepted by [`allocate_arc_tolls`].
pub const MAX_ALLOCATION_ARCS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkArc {
    pub tail: usize,
    pub head: usize,
    pub toll: bool,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TollNetwork {
    node_count: usize,
    arcs: Vec<NetworkArc>,
    origin: usize,
    destination: usize,
    /// Non-toll cost per state (rows) and arc (columns).
    state_costs: Vec<Vec<Money>>,
}

impl TollNetwork {
    pub fn new(
        node_count: usize,
        arcs: Vec<NetworkArc>,
        origin: usize,
        destination: usize,
        state_costs: Vec<Vec<Money>>,
    ) -> Result<Self> {
        if origin == destination {
            return Err(Error::InvalidNetwork("origin equals destination".into()));
        }
        if origin >= node_count || destination >= node_count {
            return Err(Error::InvalidNetwork("origin or destination out of range".into()));
        }
        let mut pairs = std::collections::HashMap::new();
        for (i, a) in arcs.iter().enumerate() {
            if a.tail >= node_count || a.head >= node_count {
                return Err(Error::InvalidNetwork(format!("arc {i} references a missing node")));
            }
            let n = pairs.entry((a.tail, a.head)).or_insert(0usize);
            *n += 1;
            if *n > 2 {
                return Err(Error::InvalidNetwork(format!(
                    "more than two parallel arcs from node {} to node {}",
                    a.tail, a.head
                )));
            }
        }
        if state_costs.is_empty() {
            return Err(Error::NoHistory);
        }
        if let Some(s) = state_costs.iter().position(|row| row.len() != arcs.len()) {
            return Err(Error::InvalidNetwork(format!(
                "state {s} lists {} costs for {} arcs",
                state_costs[s].len(),
                arcs.len()
            )));
        }
        Ok(Self {
            node_count,
            arcs,
            origin,
            destination,
            state_costs,
        })
    }

    /// Reads an arcs table `tail,head,toll_flag,length` and a states table
    /// `state,arc,cost`; arcs are numbered by row order.
    pub fn from_csv(
        arcs: impl Read,
        states: impl Read,
        origin: usize,
        destination: usize,
    ) -> Result<Self> {
        let arcs = read_arcs(arcs)?;
        let node_count = arcs
            .iter()
            .map(|a| a.tail.max(a.head) + 1)
            .max()
            .unwrap_or(0)
            .max(origin + 1)
            .max(destination + 1);
        Self::new(node_count, arcs, origin, destination, read_state_costs(states)?)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[NetworkArc] {
        &self.arcs
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn state_costs(&self) -> &[Vec<Money>] {
        &self.state_costs
    }

    pub fn state_count(&self) -> usize {
        self.state_costs.len()
    }

    /// Non-toll cost of a path in state `s`.
    pub fn path_cost(&self, path: &[usize], s: usize) -> Money {
        path.iter().map(|&a| self.state_costs[s][a]).sum()
    }
}

pub(crate) fn read_arcs(reader: impl Read) -> Result<Vec<NetworkArc>> {
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
    let cols = [col("tail")?, col("head")?, col("toll_flag")?, col("length")?];
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(cols[i]).unwrap_or("");
        let bad = |what: &str, v: &str| Error::Parse {
            line,
            message: format!("invalid {what} `{v}`"),
        };
        let toll = match get(2) {
            "1" | "true" => true,
            "0" | "false" => false,
            v => return Err(bad("toll_flag", v)),
        };
        out.push(NetworkArc {
            tail: get(0).parse().map_err(|_| bad("tail", get(0)))?,
            head: get(1).parse().map_err(|_| bad("head", get(1)))?,
            toll,
            length: get(3).parse().map_err(|_| bad("length", get(3)))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFamily {
    /// Surviving simple origin-destination paths as arc sequences.
    pub paths: Vec<Vec<usize>>,
    /// Indices into `paths` of paths using at least one toll arc.
    pub toll_paths: Vec<usize>,
    /// Indices into `paths` of toll-free paths.
    pub free_paths: Vec<usize>,
    /// Toll arcs appearing on some toll path, ascending.
    pub toll_arcs: Vec<usize>,
    /// `incidence[k][j]`: toll path `k` uses toll arc `toll_arcs[j]`.
    pub incidence: Vec<Vec<bool>>,
    /// Toll-free paths dropped by dominance.
    pub pruned: Vec<Vec<usize>>,
}

/// Simple paths from origin to destination, at most `max_paths`.
///
/// A toll-free path is dropped when another toll-free path costs no more in
/// every state (the earlier path survives among exact ties). Margins only use
/// the cheapest toll-free path per state, so dropped paths never matter.
pub fn enumerate_paths(net: &TollNetwork, max_paths: usize) -> Result<PathFamily> {
    let mut out_arcs: Vec<Vec<usize>> = vec![Vec::new(); net.node_count];
    for (i, a) in net.arcs.iter().enumerate() {
        out_arcs[a.tail].push(i);
    }
    let mut all = Vec::new();
    let mut on_path = vec![false; net.node_count];
    let mut stack = Vec::new();
    let truncated = dfs_paths(net, &out_arcs, net.origin, &mut on_path, &mut stack, &mut all, max_paths);
    if truncated {
        warn!("path enumeration stopped at the cap of {max_paths} paths");
    }
    if all.is_empty() {
        return Err(Error::Disconnected);
    }
    let is_toll = |p: &Vec<usize>| p.iter().any(|&a| net.arcs[a].toll);
    let costs: Vec<Vec<Money>> = all
        .iter()
        .map(|p| (0..net.state_count()).map(|s| net.path_cost(p, s)).collect())
        .collect();
    let free: Vec<usize> = (0..all.len()).filter(|&i| !is_toll(&all[i])).collect();
    let dominated = |i: usize| {
        free.iter().any(|&j| {
            j != i
                && costs[j].iter().zip(&costs[i]).all(|(a, b)| a <= b)
                && (j < i || costs[j].iter().zip(&costs[i]).any(|(a, b)| a < b))
        })
    };
    let mut paths = Vec::new();
    let mut pruned = Vec::new();
    for (i, p) in all.into_iter().enumerate() {
        if !is_toll(&p) && dominated(i) {
            pruned.push(p);
        } else {
            paths.push(p);
        }
    }
    let toll_paths: Vec<usize> = (0..paths.len()).filter(|&i| is_toll(&paths[i])).collect();
    let free_paths: Vec<usize> = (0..paths.len()).filter(|&i| !is_toll(&paths[i])).collect();
    let mut toll_arcs: Vec<usize> = toll_paths
        .iter()
        .flat_map(|&i| paths[i].iter().copied())
        .filter(|&a| net.arcs[a].toll)
        .collect();
    toll_arcs.sort_unstable();
    toll_arcs.dedup();
    let incidence = toll_paths
        .iter()
        .map(|&i| toll_arcs.iter().map(|a| paths[i].contains(a)).collect())
        .collect();
    Ok(PathFamily {
        paths,
        toll_paths,
        free_paths,
        toll_arcs,
        incidence,
        pruned,
    })
}

/// Returns true when the cap cut the enumeration short.
fn dfs_paths(
    net: &TollNetwork,
    out_arcs: &[Vec<usize>],
    node: usize,
    on_path: &mut [bool],
    stack: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
    cap: usize,
) -> bool {
    if node == net.destination {
        if found.len() == cap {
            return true;
        }
        found.push(stack.clone());
        return false;
    }
    on_path[node] = true;
    for &a in &out_arcs[node] {
        let next = net.arcs[a].head;
        if on_path[next] {
            continue;
        }
        stack.push(a);
        let stop = dfs_paths(net, out_arcs, next, on_path, stack, found, cap);
        stack.pop();
        if stop {
            on_path[node] = false;
            return true;
        }
    }
    on_path[node] = false;
    false
}

/// Per-state margin of a toll path: cheapest toll-free path minus the toll
/// path's own non-toll cost, clamped into the grid.
pub fn state_margin_series(
    net: &TollNetwork,
    family: &PathFamily,
    toll_path: &[usize],
    grid: &PriceGrid,
) -> Result<(Vec<Money>, ClampReport)> {
    if toll_path.iter().any(|&a| a >= net.arcs.len()) {
        return Err(Error::InvalidArgument("toll path references a missing arc".into()));
    }
    if family.free_paths.is_empty() {
        return Err(Error::NoAlternative);
    }
    let mut margins: Vec<Money> = (0..net.state_count())
        .map(|s| {
            let best = family
                .free_paths
                .iter()
                .map(|&i| net.path_cost(&family.paths[i], s))
                .fold(f64::INFINITY, f64::min);
            best - net.path_cost(toll_path, s)
        })
        .collect();
    let report = clamp_series(grid, &mut margins);
    Ok((margins, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    TwoPoint,
    EpsilonSweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelConfig {
    pub periods: usize,
    pub kappa_bar: f64,
    pub confidence_z: f64,
    pub method: BoundMethod,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        Self {
            periods: 50,
            kappa_bar: 1.0,
            confidence_z: 1.96,
            method: BoundMethod::TwoPoint,
        }
    }
}

/// One toll path priced as if it were the only tolled route.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelInstance {
    pub path: Vec<usize>,
    pub margins: Vec<Money>,
    pub envelope: MomentEnvelope,
    pub bound: Money,
}

/// Per-toll-path pricing instances, in the order of `family.toll_paths`.
pub fn build_parallel_equivalent(
    net: &TollNetwork,
    family: &PathFamily,
    grid: &PriceGrid,
    cfg: &ParallelConfig,
) -> Result<Vec<ParallelInstance>> {
    family
        .toll_paths
        .par_iter()
        .map(|&i| {
            let path = family.paths[i].clone();
            let (margins, report) = state_margin_series(net, family, &path, grid)?;
            report.warn_if_above(crate::history::DEFAULT_CLAMP_WARN_RATE, "path margins");
            let envelope = estimate_moment_envelope(grid, &margins, cfg.confidence_z, cfg.kappa_bar)?;
            let bound = match cfg.method {
                BoundMethod::TwoPoint => two_point_robust_toll(grid, &envelope, cfg.periods)?.toll,
                BoundMethod::EpsilonSweep => {
                    epsilon_sweep_robust_toll(grid, &envelope, cfg.periods, NatureObjective::UserFriendly)?
                        .toll
                }
            };
            Ok(ParallelInstance {
                path,
                margins,
                envelope,
                bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    /// Integer toll per column of the incidence matrix.
    pub tolls: Vec<u64>,
    pub total: u64,
}

/// Maximize the sum of integer arc tolls subject to every path's total
/// staying within its bound. Depth-first branch and bound over arcs with an
/// LP-relaxation bound; among optima the lexicographically smallest toll
/// vector is returned. Arcs on no path get toll 0.
pub fn allocate_arc_tolls(bounds: &[Money], incidence: &[Vec<bool>]) -> Result<Allocation> {
    if bounds.len() != incidence.len() {
        return Err(Error::InvalidArgument(format!(
            "{} bounds for {} paths",
            bounds.len(),
            incidence.len()
        )));
    }
    let arcs = incidence.first().map_or(0, Vec::len);
    if incidence.iter().any(|row| row.len() != arcs) {
        return Err(Error::InvalidArgument("ragged incidence matrix".into()));
    }
    if arcs > MAX_ALLOCATION_ARCS {
        return Err(Error::AllocationTooLarge {
            arcs,
            limit: MAX_ALLOCATION_ARCS,
        });
    }
    if let Some(b) = bounds.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative path bound {b}")));
    }
    let caps: Vec<u64> = bounds.iter().map(|b| (b + 1e-9).floor() as u64).collect();
    let mut search = AllocationSearch {
        incidence,
        paths_of: (0..arcs)
            .map(|a| (0..bounds.len()).filter(|&p| incidence[p][a]).collect())
            .collect(),
        current: vec![0; arcs],
        best: greedy_allocation(&caps, incidence),
    };
    let mut residual = caps;
    search.dfs(0, 0, &mut residual);
    let tolls = search.best;
    Ok(Allocation {
        total: tolls.iter().sum(),
        tolls,
    })
}

fn greedy_allocation(caps: &[u64], incidence: &[Vec<bool>]) -> Vec<u64> {
    let arcs = incidence.first().map_or(0, Vec::len);
    let mut resid = caps.to_vec();
    let mut out = vec![0; arcs];
    for (a, slot) in out.iter_mut().enumerate() {
        let on: Vec<usize> = (0..caps.len()).filter(|&p| incidence[p][a]).collect();
        if let Some(v) = on.iter().map(|&p| resid[p]).min() {
            *slot = v;
            for p in on {
                resid[p] -= v;
            }
        }
    }
    out
}

struct AllocationSearch<'a> {
    incidence: &'a [Vec<bool>],
    paths_of: Vec<Vec<usize>>,
    current: Vec<u64>,
    best: Vec<u64>,
}

impl AllocationSearch<'_> {
    fn dfs(&mut self, arc: usize, sum: u64, residual: &mut [u64]) {
        let n = self.current.len();
        let best_total: u64 = self.best.iter().sum();
        if arc == n {
            if sum > best_total || (sum == best_total && self.current < self.best) {
                self.best.clone_from(&self.current);
            }
            return;
        }
        let bound = sum + self.relaxation(arc, residual);
        let prefix_after = self.current[..arc] > self.best[..arc];
        if bound < best_total || (bound == best_total && prefix_after) {
            return;
        }
        let paths = &self.paths_of[arc];
        if paths.is_empty() {
            self.current[arc] = 0;
            self.dfs(arc + 1, sum, residual);
            return;
        }
        let top = paths.iter().map(|&p| residual[p]).min().unwrap_or(0);
        for v in 0..=top {
            self.current[arc] = v;
            for &p in &self.paths_of[arc] {
                residual[p] -= v;
            }
            self.dfs(arc + 1, sum + v, residual);
            for &p in &self.paths_of[arc] {
                residual[p] += v;
            }
        }
        self.current[arc] = 0;
    }

    /// Floor of the LP relaxation over arcs `from..`.
    fn relaxation(&self, from: usize, residual: &[u64]) -> u64 {
        let free: Vec<usize> = (from..self.current.len())
            .filter(|&a| !self.paths_of[a].is_empty())
            .collect();
        if free.is_empty() {
            return 0;
        }
        let mut lp = LinearProgram::new(free.len());
        for (p, row) in self.incidence.iter().enumerate() {
            let coeffs: Vec<f64> = free.iter().map(|&a| if row[a] { 1.0 } else { 0.0 }).collect();
            if coeffs.iter().any(|&c| c > 0.0) {
                lp.add_row(coeffs, RowKind::Le, residual[p] as f64);
            }
        }
        let obj = vec![-1.0; free.len()];
        match lp.minimize(&obj).optimal() {
            Some(sol) => (-sol.objectives[0] + 1e-6).floor().max(0.0) as u64,
            None => u64::MAX / 4,
        }
    }
}
