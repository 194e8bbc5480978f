use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_toll::experiments::*;
use robust_toll::pricing::realized_revenue;
use robust_toll::{Error, PriceGrid};

fn grid() -> PriceGrid {
    PriceGrid::integer(0.0, 200.0).unwrap()
}

const FAMILIES: [&str; 4] = ["beta", "gamma", "normal", "lognormal"];

#[test]
fn sampling_is_deterministic() {
    let g = grid();
    for spec in DistributionSpec::presets(&g) {
        let a = sample_costs(&spec, 200, 42, &g).unwrap();
        assert_eq!(a, sample_costs(&spec, 200, 42, &g).unwrap());
        assert_ne!(a, sample_costs(&spec, 200, 43, &g).unwrap());
        assert!(a.iter().all(|&c| (0.0..=200.0).contains(&c)));
    }
}

#[test]
fn normal_sample_mean_converges() {
    let g = PriceGrid::integer(0.0, 1000.0).unwrap();
    let spec = DistributionSpec::preset("normal", &g).unwrap();
    for seed in 0..3 {
        // Same stream as `sample_costs`: parameters first, then draws.
        let link = spec.draw_link(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let xs = sample_costs(&spec, 100_000, seed, &g).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = link.second / (xs.len() as f64).sqrt();
        assert!((mean - link.first).abs() < 3.0 * se, "mean {mean} vs {} (se {se})", link.first);
    }
}

#[test]
fn gamma_reversed_interval_is_normalized() {
    let g = grid();
    let spec = DistributionSpec::preset("gamma", &g).unwrap();
    assert_eq!(spec.first, (1.0, 3.0));
    assert_eq!(spec.second, (1.0 / 5.0, 1.0 / 3.0));
    let direct = DistributionSpec::new("g", Family::Gamma, (3.0, 1.0), (1.0 / 3.0, 1.0 / 5.0), CostMapping::IDENTITY).unwrap();
    assert_eq!((direct.first, direct.second), (spec.first, spec.second));
}

#[test]
fn invalid_specs_are_rejected() {
    let g = grid();
    let mut spec = DistributionSpec::preset("beta", &g).unwrap();
    spec.first = (5.0, 2.0);
    assert!(matches!(sample_costs(&spec, 10, 0, &g), Err(Error::InvalidDistribution(_))));
    assert!(DistributionSpec::new("b", Family::Beta, (0.0, 1.0), (1.0, 2.0), CostMapping::IDENTITY).is_err());
    assert!(DistributionSpec::new("n", Family::Normal, (1.0, 2.0), (-1.0, 2.0), CostMapping::IDENTITY).is_err());
    assert!(sample_costs(&DistributionSpec::preset("normal", &g).unwrap(), 0, 0, &g).is_err());
    assert!("weibull".parse::<Family>().is_err());
    assert_eq!("Gamma".parse::<Family>().unwrap(), Family::Gamma);
}

proptest! {
    #[test]
    fn drawn_parameters_lie_in_intervals(seed in any::<u64>(), which in 0usize..5) {
        let spec = &DistributionSpec::presets(&grid())[which];
        let link = spec.draw_link(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(spec.first.0 <= link.first && link.first <= spec.first.1);
        prop_assert!(spec.second.0 <= link.second && link.second <= spec.second.1);
    }
}

fn desk(seed: u64) -> ExperimentConfig {
    ExperimentConfig::desk(grid(), seed)
}

#[test]
fn zero_variance_costs_have_zero_regret() {
    let spec = DistributionSpec::new("flat", Family::Normal, (100.0, 100.0), (0.0, 0.0), CostMapping::IDENTITY).unwrap();
    let cfg = ExperimentConfig {
        kappa_bar: 0.0,
        history_samples: 5,
        eval_samples: 20,
        ..desk(3)
    };
    let rep = run_fixed_distribution_experiment(&cfg, &spec).unwrap();
    for s in &rep.summaries {
        assert_eq!(s.avg_pct, 0.0, "{:?}", s.variant);
    }
    assert!(rep.cumulative.iter().all(|&v| v == 0.0));
    assert_eq!(run_dynamic_cumulative_regret(&cfg, &spec).unwrap(), rep.cumulative);
    assert!(rep.robust_tolls.iter().all(|&r| r == 100.0));
}

#[test]
fn config_counts_must_be_positive() {
    let spec = DistributionSpec::preset("beta", &grid()).unwrap();
    for f in [
        |c: &mut ExperimentConfig| c.links = 0,
        |c: &mut ExperimentConfig| c.history_samples = 0,
        |c: &mut ExperimentConfig| c.eval_samples = 0,
        |c: &mut ExperimentConfig| c.periods = 0,
    ] {
        let mut cfg = desk(0);
        f(&mut cfg);
        assert!(run_fixed_distribution_experiment(&cfg, &spec).is_err());
    }
    assert_eq!(desk(0).full_scale().eval_samples, 2500);
}

#[test]
fn runs_are_deterministic_and_bounded() {
    let spec = DistributionSpec::preset("lognormal", &grid()).unwrap();
    let cfg = ExperimentConfig {
        eval_samples: 100,
        ..desk(9)
    };
    let a = run_fixed_distribution_experiment(&cfg, &spec).unwrap();
    assert_eq!(a, run_fixed_distribution_experiment(&cfg, &spec).unwrap());
    for s in &a.summaries {
        assert!((0.0..=100.0).contains(&s.avg_pct));
    }
    assert!(a.cumulative.iter().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(a.robust_tolls.len(), 50);
    assert_eq!(a.optimal.len(), 100);
    assert_eq!(a.cumulative.len(), 100);
    assert!(a.mappings[0].contains("100"));
}

#[test]
fn seed_stability_at_desk_scale() {
    let g = grid();
    for name in FAMILIES {
        let spec = DistributionSpec::preset(name, &g).unwrap();
        let a = run_fixed_distribution_experiment(&desk(0), &spec).unwrap();
        let b = run_fixed_distribution_experiment(&desk(1), &spec).unwrap();
        let (x, y) = (a.summary(Variant::Robust).avg_pct, b.summary(Variant::Robust).avg_pct);
        assert!((x - y).abs() <= 5.0, "{name}: {x} vs {y}");
    }
    let pool: Vec<_> = FAMILIES.iter().map(|n| DistributionSpec::preset(n, &g).unwrap()).collect();
    let a = run_mixed_distribution_experiment(&desk(0), &pool).unwrap();
    let b = run_mixed_distribution_experiment(&desk(1), &pool).unwrap();
    let (x, y) = (a.summary(Variant::Robust).avg_pct, b.summary(Variant::Robust).avg_pct);
    assert!((x - y).abs() <= 5.0, "mixed: {x} vs {y}");
}

#[test]
fn single_family_pool_reduces_to_fixed() {
    let g = grid();
    let spec = DistributionSpec::preset("gamma", &g).unwrap();
    let cfg = ExperimentConfig {
        eval_samples: 60,
        ..desk(4)
    };
    let fixed = run_fixed_distribution_experiment(&cfg, &spec).unwrap();
    let mixed = run_mixed_distribution_experiment(&cfg, &[spec]).unwrap();
    assert_eq!(fixed, mixed);
}

#[test]
fn averaged_toll_soft_check() {
    let g = grid();
    for name in FAMILIES {
        let rep = run_fixed_distribution_experiment(&desk(0), &DistributionSpec::preset(name, &g).unwrap()).unwrap();
        let avg = rep.summary(Variant::AverageRobust).avg_pct;
        let single = rep.summary(Variant::Robust).avg_pct;
        let status = if avg <= single { "holds" } else { "violated" };
        println!("{name}: averaged toll {avg:.2}% vs per-history {single:.2}% ({status})");
    }
}

fn naive_best(costs: &[f64], g: &PriceGrid) -> f64 {
    g.points()
        .map(|r| r * costs.iter().filter(|&&c| c >= r).count() as f64)
        .fold(0.0, f64::max)
}

#[test]
fn cumulative_regret_telescopes_to_whole_horizon() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let periods: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..10).map(|_| rng.random_range(20.0..120.0)).collect())
            .collect();
        let r = rng.random_range(20..100) as f64;
        let series = cumulative_regret(&periods, r, &g).unwrap();
        let all = periods.concat();
        let best = naive_best(&all, &g);
        let direct = (best - realized_revenue(&all, r)) / best;
        assert!((series.last().unwrap() - direct.max(0.0)).abs() < 1e-12);
    }
    let flat = vec![vec![50.0; 5]; 8];
    assert!(cumulative_regret(&flat, 50.0, &g).unwrap().iter().all(|&v| v == 0.0));
}

fn lattice(k: usize, states: usize, seed: u64) -> (CostNetwork, Vec<Vec<f64>>) {
    let id = |r: usize, c: usize| r * k + c;
    let mut arcs = Vec::new();
    for r in 0..k {
        for c in 0..k {
            if c + 1 < k {
                arcs.push((id(r, c), id(r, c + 1)));
                arcs.push((id(r, c + 1), id(r, c)));
            }
            if r + 1 < k {
                arcs.push((id(r, c), id(r + 1, c)));
                arcs.push((id(r + 1, c), id(r, c)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<Vec<f64>> = (0..states)
        .map(|_| arcs.iter().map(|_| rng.random_range(1.0..10.0)).collect())
        .collect();
    (CostNetwork::new(k * k, arcs, costs.clone()).unwrap(), costs)
}

#[test]
fn shortest_costs_match_petgraph() {
    let (net, costs) = lattice(4, 3, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (s, row) in costs.iter().enumerate() {
        let mut g = DiGraph::<(), f64>::new();
        let nodes: Vec<NodeIndex> = (0..net.node_count()).map(|_| g.add_node(())).collect();
        for (a, &(t, h)) in net.arcs().iter().enumerate() {
            g.add_edge(nodes[t], nodes[h], row[a]);
        }
        for _ in 0..10 {
            let o = rng.random_range(0..net.node_count());
            let d = rng.random_range(0..net.node_count());
            let want = dijkstra(&g, nodes[o], Some(nodes[d]), |e| *e.weight())[&nodes[d]];
            assert!((net.shortest_cost(s, o, d).unwrap() - want).abs() < 1e-9);
        }
    }
}

#[test]
fn robust_beats_mean_toll_on_iid_uniform_network() {
    let (net, _) = lattice(6, 100, 21);
    let cfg = RealDataConfig {
        grid: grid(),
        pairs: 40,
        history_cut: 50,
        periods: 50,
        kappa_bar: 1.0,
        confidence_z: 1.96,
        seed: 5,
    };
    let rep = run_real_data_experiment(&net, &cfg).unwrap();
    assert_eq!(rep.pairs.len(), 40);
    assert_eq!(rep.skipped, 0);
    let wins = rep.pairs.iter().filter(|p| p.robust_regret < p.mean_regret).count();
    assert!(wins * 5 >= rep.pairs.len() * 4, "robust better on {wins} of {}", rep.pairs.len());
    assert!(rep.summary(Variant::Robust).avg_pct < rep.summary(Variant::SampleMean).avg_pct);
}

#[test]
fn unreachable_pairs_are_skipped() {
    // Two disjoint two-node cycles.
    let arcs = vec![(0, 1), (1, 0), (2, 3), (3, 2)];
    let costs = vec![vec![5.0, 6.0, 7.0, 8.0]; 10];
    let net = CostNetwork::new(4, arcs, costs).unwrap();
    let cfg = RealDataConfig {
        grid: grid(),
        pairs: 10,
        history_cut: 5,
        periods: 5,
        kappa_bar: 1.0,
        confidence_z: 1.96,
        seed: 0,
    };
    let rep = run_real_data_experiment(&net, &cfg).unwrap();
    assert_eq!(rep.pairs.len(), 4);
    assert_eq!(rep.skipped, 8);
    assert!(rep.pairs.iter().all(|p| p.origin / 2 == p.destination / 2));
    let bad = RealDataConfig { history_cut: 11, ..cfg };
    assert!(run_real_data_experiment(&net, &bad).is_err());
}

#[test]
fn histogram_counts_every_ratio() {
    let xs = [0.91, 0.95, 1.0, 1.02, 1.12, 0.949];
    let h = ratio_histogram(&xs, 0.05);
    assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), xs.len());
    for &x in &xs {
        assert!(h.iter().any(|&(lo, hi, n)| n > 0 && lo <= x + 1e-12 && x < hi + 1e-12));
    }
    assert!(ratio_histogram(&[], 0.05).is_empty());
}
