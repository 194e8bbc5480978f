//! Simulated and real-data regret experiments.

pub mod distributions;
pub mod real;
pub mod simulation;

pub use distributions::{sample_costs, CostMapping, DistributionSpec, Family, LinkDistribution};
pub use real::{ratio_histogram, run_real_data_experiment, CostNetwork, PairResult, RealDataConfig, RealDataReport};
pub use simulation::{
    cumulative_regret, run_dynamic_cumulative_regret, run_fixed_distribution_experiment,
    run_mixed_distribution_experiment, ExperimentConfig, RegretSummary, SimulationReport, Variant,
};
