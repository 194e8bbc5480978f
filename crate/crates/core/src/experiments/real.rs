//! Real-data harness: a virtual toll road between random node pairs of an
//! ingested network, priced from a history prefix of the states.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::io::Read;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::simulation::{RegretSummary, Variant};
use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::history::{clamp_series, estimate_moment_envelope, mean_and_stdev, read_state_costs, ClampReport};
use crate::ingest::RoadGraph;
use crate::metrics::relative_regret;
use crate::network::read_arcs;
use crate::pricing::{optimal_toll_for_realized_costs, realized_revenue, two_point_robust_toll};
use crate::Money;

/// Directed arcs with one cost per state and arc; no toll arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostNetwork {
    node_count: usize,
    arcs: Vec<(usize, usize)>,
    state_costs: Vec<Vec<Money>>,
}

impl CostNetwork {
    pub fn new(node_count: usize, arcs: Vec<(usize, usize)>, state_costs: Vec<Vec<Money>>) -> Result<Self> {
        if let Some(i) = arcs.iter().position(|&(t, h)| t >= node_count || h >= node_count) {
            return Err(Error::InvalidNetwork(format!("arc {i} references a missing node")));
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
        if state_costs.iter().flatten().any(|c| !(*c >= 0.0)) {
            return Err(Error::InvalidNetwork("arc costs must be nonnegative".into()));
        }
        Ok(Self {
            node_count,
            arcs,
            state_costs,
        })
    }

    pub fn from_road_graph(graph: &RoadGraph, state_costs: Vec<Vec<Money>>) -> Result<Self> {
        let arcs = graph.arcs.iter().map(|a| (a.tail, a.head)).collect();
        Self::new(graph.nodes.len(), arcs, state_costs)
    }

    /// Same tables as the network module; toll flags are ignored.
    pub fn from_csv(arcs: impl Read, states: impl Read) -> Result<Self> {
        let arcs: Vec<(usize, usize)> = read_arcs(arcs)?.iter().map(|a| (a.tail, a.head)).collect();
        let node_count = arcs.iter().map(|&(t, h)| t.max(h) + 1).max().unwrap_or(0);
        Self::new(node_count, arcs, read_state_costs(states)?)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn state_count(&self) -> usize {
        self.state_costs.len()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count];
        for (i, &(t, _)) in self.arcs.iter().enumerate() {
            out[t].push(i);
        }
        out
    }

    fn reachable(&self, adj: &[Vec<usize>], from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(v) = queue.pop_front() {
            if v == to {
                return true;
            }
            for &a in &adj[v] {
                let h = self.arcs[a].1;
                if !seen[h] {
                    seen[h] = true;
                    queue.push_back(h);
                }
            }
        }
        false
    }

    /// Shortest path cost in state `s`, `None` if unreachable.
    pub fn shortest_cost(&self, s: usize, from: usize, to: usize) -> Option<Money> {
        self.shortest_with(&self.adjacency(), s, from, to)
    }

    fn shortest_with(&self, adj: &[Vec<usize>], s: usize, from: usize, to: usize) -> Option<Money> {
        #[derive(PartialEq)]
        struct Item(Money, usize);
        impl Eq for Item {}
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let costs = &self.state_costs[s];
        let mut dist = vec![f64::INFINITY; self.node_count];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Item(0.0, from));
        while let Some(Item(d, v)) = heap.pop() {
            if v == to {
                return Some(d);
            }
            if d > dist[v] {
                continue;
            }
            for &a in &adj[v] {
                let h = self.arcs[a].1;
                let nd = d + costs[a];
                if nd < dist[h] {
                    dist[h] = nd;
                    heap.push(Item(nd, h));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataConfig {
    pub grid: PriceGrid,
    pub pairs: usize,
    /// States `0..history_cut` are the pricing history.
    pub history_cut: usize,
    pub periods: usize,
    pub kappa_bar: f64,
    pub confidence_z: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub origin: usize,
    pub destination: usize,
    pub robust_toll: Money,
    pub mean_toll: Money,
    pub optimal_toll: Money,
    pub robust_regret: f64,
    pub mean_regret: f64,
}

impl PairResult {
    pub fn ratio(&self) -> f64 {
        self.robust_toll / self.optimal_toll
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataReport {
    pub pairs: Vec<PairResult>,
    /// Draws rejected because no path joins the pair or every margin is zero.
    pub skipped: usize,
    pub summaries: Vec<RegretSummary>,
    pub clamps: ClampReport,
}

impl RealDataReport {
    pub fn summary(&self, variant: Variant) -> &RegretSummary {
        self.summaries
            .iter()
            .find(|s| s.variant == variant)
            .expect("variant is summarized")
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.pairs.iter().map(PairResult::ratio).collect()
    }
}

pub fn run_real_data_experiment(net: &CostNetwork, cfg: &RealDataConfig) -> Result<RealDataReport> {
    if cfg.pairs == 0 || cfg.periods == 0 {
        return Err(Error::InvalidArgument("pairs and T must be positive".into()));
    }
    if cfg.history_cut == 0 || cfg.history_cut > net.state_count() {
        return Err(Error::InvalidArgument(format!(
            "history_cut {} outside 1..={}",
            cfg.history_cut,
            net.state_count()
        )));
    }
    if net.node_count < 2 {
        return Err(Error::InvalidNetwork("fewer than two nodes".into()));
    }
    let adj = net.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen = Vec::new();
    let mut seen = BTreeSet::new();
    let mut skipped = 0;
    let max_draws = cfg.pairs * 50;
    for _ in 0..max_draws {
        if chosen.len() == cfg.pairs {
            break;
        }
        let o = rng.random_range(0..net.node_count);
        let d = rng.random_range(0..net.node_count);
        if o == d || !seen.insert((o, d)) {
            continue;
        }
        if net.reachable(&adj, o, d) {
            chosen.push((o, d));
        } else {
            skipped += 1;
        }
    }

    let grid = &cfg.grid;
    let evaluated: Vec<(Option<PairResult>, ClampReport)> = chosen
        .par_iter()
        .map(|&(o, d)| {
            let mut margins: Vec<Money> = (0..net.state_count())
                .map(|s| net.shortest_with(&adj, s, o, d).expect("pair is connected"))
                .collect();
            let clamps = clamp_series(grid, &mut margins);
            let (optimal_toll, best) = optimal_toll_for_realized_costs(&margins, grid)?;
            if best <= 0.0 {
                return Ok((None, clamps));
            }
            let history = &margins[..cfg.history_cut];
            let env = estimate_moment_envelope(grid, history, cfg.confidence_z, cfg.kappa_bar)?;
            let robust_toll = two_point_robust_toll(grid, &env, cfg.periods)?.toll;
            let mean_toll = grid.snap(mean_and_stdev(history).0);
            let result = PairResult {
                origin: o,
                destination: d,
                robust_toll,
                mean_toll,
                optimal_toll,
                robust_regret: relative_regret(best, realized_revenue(&margins, robust_toll))?,
                mean_regret: relative_regret(best, realized_revenue(&margins, mean_toll))?,
            };
            Ok((Some(result), clamps))
        })
        .collect::<Result<_>>()?;

    let mut clamps = ClampReport::default();
    let mut pairs = Vec::new();
    for (r, c) in evaluated {
        clamps.merge(c);
        match r {
            Some(r) => pairs.push(r),
            None => skipped += 1,
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoAlternative);
    }
    info!("real-data experiment: {} pairs, {} skipped", pairs.len(), skipped);
    clamps.warn_if_above(crate::history::DEFAULT_CLAMP_WARN_RATE, "path margins");

    let robust: Vec<f64> = pairs.iter().map(|p| p.robust_regret).collect();
    let mean: Vec<f64> = pairs.iter().map(|p| p.mean_regret).collect();
    let robust_tolls: Vec<Money> = pairs.iter().map(|p| p.robust_toll).collect();
    let mean_tolls: Vec<Money> = pairs.iter().map(|p| p.mean_toll).collect();
    Ok(RealDataReport {
        summaries: vec![
            RegretSummary::from_regrets(Variant::Robust, &robust, &robust_tolls),
            RegretSummary::from_regrets(Variant::SampleMean, &mean, &mean_tolls),
        ],
        pairs,
        skipped,
        clamps,
    })
}

/// Counts of `values` in bins `[k * width, (k + 1) * width)` spanning the data.
pub fn ratio_histogram(values: &[f64], width: f64) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || !(width > 0.0) {
        return Vec::new();
    }
    let bin = |v: f64| (v / width).floor() as i64;
    let lo = values.iter().map(|&v| bin(v)).min().unwrap();
    let hi = values.iter().map(|&v| bin(v)).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &v in values {
        counts[(bin(v) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, n)| {
            let b = (lo + k as i64) as f64;
            (b * width, (b + 1.0) * width, n)
        })
        .collect()
}
