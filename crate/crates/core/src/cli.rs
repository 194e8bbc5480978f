//! Command-line front end. Every subcommand writes CSV artifacts plus a
//! `run_manifest.csv` into the output directory.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::experiments::{
    ratio_histogram, run_fixed_distribution_experiment, run_mixed_distribution_experiment,
    run_real_data_experiment, CostNetwork, DistributionSpec, ExperimentConfig, RealDataConfig,
    SimulationReport,
};
use crate::grid::PriceGrid;
use crate::history::{estimate_moment_envelope, CostHistory, MomentEnvelope};
use crate::ingest::{
    parse_traffic_records, run_ingest, write_arcs_csv, write_states_csv, write_traffic_records,
    IngestOptions, ParseReport, SyntheticCity,
};
use crate::nature::{solve_nature, solve_nature_two_point, NatureObjective};
use crate::network::{
    allocate_arc_tolls, build_parallel_equivalent, enumerate_paths, BoundMethod, ParallelConfig,
    TollNetwork, DEFAULT_MAX_PATHS,
};
use crate::pricing::{
    emit_nature_miqp, epsilon_sweep_robust_toll, lp_robust_toll, two_point_robust_toll,
    RobustTollResult, TollSetting,
};
use crate::Money;

pub const FORMAT_VERSION: &str = "1";
pub const OUT_DIR_ENV: &str = "ROBUST_TOLL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "robust-toll", version, about = "Robust toll pricing under moment uncertainty")]
pub struct Cli {
    /// Flat `key = value` config file (keys: q, Q, step, T, H, kappa_bar, confidence_z, seed).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the config grid step.
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Pricing method.
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    TwoPoint,
    EpsilonSweep,
    ExactLp,
    /// Nature's moment LP (`nature` only).
    Lp,
}

impl MethodArg {
    fn label(self) -> &'static str {
        match self {
            MethodArg::TwoPoint => "two-point",
            MethodArg::EpsilonSweep => "epsilon-sweep",
            MethodArg::ExactLp => "exact-lp",
            MethodArg::Lp => "lp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Ufn,
    An,
}

impl From<ObjectiveArg> for NatureObjective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Ufn => NatureObjective::UserFriendly,
            ObjectiveArg::An => NatureObjective::Adversarial,
        }
    }
}

/// Where the moment envelope comes from.
#[derive(Debug, Args)]
struct EnvelopeArgs {
    /// History `state,arc,cost` CSV with T x H states.
    #[arg(long, conflicts_with_all = ["u_lower", "u_upper"])]
    history: Option<PathBuf>,
    /// Toll arc column of the history; without it margins are per-state minima.
    #[arg(long, requires = "history")]
    toll_arc: Option<usize>,
    /// Lower mean bound, instead of a history file.
    #[arg(long, requires = "u_upper")]
    u_lower: Option<f64>,
    #[arg(long, requires = "u_lower")]
    u_upper: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Robust toll and its worst-case revenue curve.
    Price {
        #[command(flatten)]
        envelope: EnvelopeArgs,
        #[arg(long, value_enum, default_value = "ufn")]
        objective: ObjectiveArg,
    },
    /// Nature's worst-case distribution at one toll.
    Nature {
        #[command(flatten)]
        envelope: EnvelopeArgs,
        #[arg(long)]
        toll: f64,
        #[arg(long, value_enum, default_value = "ufn")]
        objective: ObjectiveArg,
    },
    /// Writes nature's mixed-integer model in LP format.
    EmitMip {
        #[command(flatten)]
        envelope: EnvelopeArgs,
        /// Fixed toll; the toll is a free variable when omitted.
        #[arg(long)]
        toll: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        big_m: Option<f64>,
        /// File name inside the output directory.
        #[arg(long, default_value = "model.lp")]
        output: String,
    },
    /// Per-path robust bounds on a general network, allocated to toll arcs.
    Allocate {
        #[arg(long)]
        arcs: PathBuf,
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        origin: usize,
        #[arg(long)]
        destination: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
        max_paths: usize,
    },
    /// Traffic records to arcs and per-state costs.
    Ingest {
        /// Records CSV; use --synthetic-segments instead for a generated city.
        #[arg(long, required_unless_present = "synthetic_segments")]
        records: Option<PathBuf>,
        #[arg(long, conflicts_with = "records")]
        synthetic_segments: Option<usize>,
        #[arg(long, default_value_t = 96)]
        synthetic_states: usize,
        #[arg(long)]
        bidirectional: bool,
        #[arg(long)]
        merge_tol: Option<f64>,
        #[arg(long)]
        crossing_tol: Option<f64>,
        #[arg(long)]
        cost_scale: Option<f64>,
    },
    /// Simulated regret experiments.
    Simulate {
        /// beta, beta-wide, gamma, normal, lognormal, mixed or all.
        #[arg(long, default_value = "all")]
        family: String,
        /// 2500 evaluation samples instead of 500.
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        history_samples: Option<usize>,
        #[arg(long)]
        eval_samples: Option<usize>,
        #[arg(long)]
        links: Option<usize>,
    },
    /// Virtual toll roads between random node pairs of an ingested network.
    RealExp {
        #[arg(long)]
        arcs: PathBuf,
        #[arg(long)]
        states: PathBuf,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        /// History states; defaults to half of the states.
        #[arg(long)]
        history_cut: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        bin_width: f64,
    },
}

/// Parses `argv` (including the program name), runs, and returns the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidGrid(_))
}

struct Run {
    cfg: Config,
    out_dir: PathBuf,
    manifest: Vec<(String, String)>,
}

impl Run {
    fn note(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.to_string(), value.to_string()));
    }

    fn grid(&self) -> Result<PriceGrid> {
        self.cfg.grid()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        File::create(&path).map(BufWriter::new).map_err(|e| Error::io(path, e))
    }

    /// Writes a CSV with a trailing `format_version` column.
    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_writer(self.create(name)?);
        let wrap = |e: csv::Error| Error::io(&path, e.into());
        let mut h: Vec<&str> = header.to_vec();
        h.push("format_version");
        w.write_record(&h).map_err(wrap)?;
        for row in rows {
            w.write_record(row.iter().map(String::as_str).chain([FORMAT_VERSION]))
                .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    fn finish(self) -> Result<()> {
        let mut rows: Vec<Vec<String>> = self
            .cfg
            .entries()
            .into_iter()
            .map(|(k, v)| vec![k.to_string(), v])
            .collect();
        rows.extend(self.manifest.iter().map(|(k, v)| vec![k.clone(), v.clone()]));
        self.write_csv("run_manifest.csv", &["key", "value"], &rows)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(step) = cli.grid_step {
        cfg.step = step;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    let mut run = Run {
        cfg,
        out_dir: cli.out_dir.clone(),
        manifest: Vec::new(),
    };
    if let Some(c) = &cli.config {
        run.note("config_file", c.display());
    }
    // Recorded before the subcommand so a failed run still names its method.
    if let Some(m) = cli.method {
        run.note("method", m.label());
    }
    match cli.command {
        Command::Price { envelope, objective } => price(&mut run, cli.method, &envelope, objective)?,
        Command::Nature {
            envelope,
            toll,
            objective,
        } => nature(&mut run, cli.method, &envelope, toll, objective)?,
        Command::EmitMip {
            envelope,
            toll,
            epsilon,
            big_m,
            output,
        } => emit_mip(&mut run, &envelope, toll, epsilon, big_m, &output)?,
        Command::Allocate {
            arcs,
            states,
            origin,
            destination,
            max_paths,
        } => allocate(&mut run, cli.method, &arcs, &states, origin, destination, max_paths)?,
        Command::Ingest {
            records,
            synthetic_segments,
            synthetic_states,
            bidirectional,
            merge_tol,
            crossing_tol,
            cost_scale,
        } => {
            let mut opts = IngestOptions::default();
            opts.graph.bidirectional = bidirectional;
            if let Some(t) = merge_tol {
                opts.graph.merge_tol = t;
            }
            if let Some(t) = crossing_tol {
                opts.graph.crossing_tol = t;
            }
            if let Some(s) = cost_scale {
                opts.cost_scale = s;
            }
            ingest(&mut run, records.as_deref(), synthetic_segments, synthetic_states, &opts)?
        }
        Command::Simulate {
            family,
            full_scale,
            history_samples,
            eval_samples,
            links,
        } => simulate(&mut run, &family, full_scale, history_samples, eval_samples, links)?,
        Command::RealExp {
            arcs,
            states,
            pairs,
            history_cut,
            bin_width,
        } => real_exp(&mut run, &arcs, &states, pairs, history_cut, bin_width)?,
    }
    run.finish()
}

fn envelope(run: &mut Run, args: &EnvelopeArgs, grid: &PriceGrid) -> Result<MomentEnvelope> {
    let cfg = run.cfg.clone();
    if let Some(path) = &args.history {
        let history = CostHistory::from_csv(open(path)?, cfg.periods, cfg.windows)?;
        let (history, _) = history.clamped(grid, crate::history::DEFAULT_CLAMP_WARN_RATE);
        let margins = history.margin_series(args.toll_arc)?;
        let env = estimate_moment_envelope(grid, &margins, cfg.confidence_z, cfg.kappa_bar)?;
        run.note("history", path.display());
        if let Some(t) = args.toll_arc {
            run.note("toll_arc", t);
        }
        run.note("u_lower", env.u_lower);
        run.note("u_upper", env.u_upper);
        return Ok(env);
    }
    match (args.u_lower, args.u_upper) {
        (Some(l), Some(u)) => {
            run.note("u_lower", l);
            run.note("u_upper", u);
            let env = MomentEnvelope::new(l, u, cfg.kappa_bar)?;
            env.check_feasible(grid)?;
            Ok(env)
        }
        _ => Err(Error::InvalidArgument(
            "give --history or both --u-lower and --u-upper".into(),
        )),
    }
}

fn fmt_money(v: Money) -> String {
    v.to_string()
}

fn price(run: &mut Run, method: Option<MethodArg>, args: &EnvelopeArgs, objective: ObjectiveArg) -> Result<()> {
    let grid = run.grid()?;
    let env = envelope(run, args, &grid)?;
    let periods = run.cfg.periods;
    let obj = NatureObjective::from(objective);
    let result: RobustTollResult = match method.unwrap_or(MethodArg::TwoPoint) {
        MethodArg::TwoPoint => two_point_robust_toll(&grid, &env, periods)?,
        MethodArg::EpsilonSweep => epsilon_sweep_robust_toll(&grid, &env, periods, obj)?,
        MethodArg::ExactLp => lp_robust_toll(&grid, &env, periods, obj)?,
        MethodArg::Lp => {
            return Err(Error::InvalidArgument(
                "`price` takes two-point, epsilon-sweep or exact-lp".into(),
            ))
        }
    };
    run.note("objective", obj.label());
    info!("robust toll {} ({})", result.toll, result.method);
    let q = &result.quote;
    run.write_csv(
        "price.csv",
        &["toll", "usage_count", "worst_case_revenue"],
        &[vec![fmt_money(q.toll), q.usage_count.to_string(), fmt_money(q.worst_case_revenue)]],
    )?;
    let curve: Vec<Vec<String>> = result
        .br_curve
        .iter()
        .map(|&(r, br)| vec![fmt_money(r), fmt_money(br)])
        .collect();
    run.write_csv("br_curve.csv", &["r", "br"], &curve)?;
    println!("toll,usage_count,worst_case_revenue");
    println!("{},{},{}", q.toll, q.usage_count, q.worst_case_revenue);
    Ok(())
}

fn nature(
    run: &mut Run,
    method: Option<MethodArg>,
    args: &EnvelopeArgs,
    toll: f64,
    objective: ObjectiveArg,
) -> Result<()> {
    let grid = run.grid()?;
    let env = envelope(run, args, &grid)?;
    let obj = NatureObjective::from(objective);
    run.note("toll", toll);
    run.note("objective", obj.label());
    let (dist, value, usage) = match method.unwrap_or(MethodArg::Lp) {
        MethodArg::Lp | MethodArg::ExactLp => {
            let s = solve_nature(&grid, &env, toll, obj)?;
            (s.distribution, s.objective_value, s.usage_probability)
        }
        MethodArg::TwoPoint => {
            if obj != NatureObjective::UserFriendly {
                return Err(Error::InvalidArgument("the two-point response is user-friendly only".into()));
            }
            let periods = run.cfg.periods;
            let s = solve_nature_two_point(&grid, env.u_lower, env.kappa_bar, periods, toll)?;
            let t = periods as f64;
            (s.distribution(), s.objective(toll) / t, s.usage_count(toll) as f64 / t)
        }
        MethodArg::EpsilonSweep => {
            return Err(Error::InvalidArgument("`nature` takes lp or two-point".into()));
        }
    };
    let rows: Vec<Vec<String>> = dist
        .iter()
        .map(|(c, p)| vec![fmt_money(c), p.to_string()])
        .collect();
    run.write_csv("nature.csv", &["support", "mass"], &rows)?;
    run.write_csv(
        "nature_summary.csv",
        &["toll", "objective", "objective_value", "usage_probability"],
        &[vec![fmt_money(toll), obj.label().into(), value.to_string(), usage.to_string()]],
    )?;
    println!("support,mass");
    for r in &rows {
        println!("{},{}", r[0], r[1]);
    }
    println!("# objective={} value={} usage_probability={}", obj.label(), value, usage);
    Ok(())
}

fn emit_mip(
    run: &mut Run,
    args: &EnvelopeArgs,
    toll: Option<f64>,
    epsilon: Option<f64>,
    big_m: Option<f64>,
    output: &str,
) -> Result<()> {
    if output.contains(['/', '\\']) || output == ".." || output.is_empty() {
        return Err(Error::InvalidArgument(format!("output `{output}` must be a plain file name")));
    }
    let grid = run.grid()?;
    let env = envelope(run, args, &grid)?;
    let setting = match toll {
        Some(r) => TollSetting::Fixed(r),
        None => TollSetting::Free,
    };
    run.note("toll", toll.map_or("free".to_string(), |r| r.to_string()));
    if let Some(e) = epsilon {
        run.note("epsilon", e);
    }
    if let Some(m) = big_m {
        run.note("big_m", m);
    }
    let model = emit_nature_miqp(&grid, &env, run.cfg.periods, setting, epsilon, big_m)?;
    let mut w = run.create(output)?;
    w.write_all(model.to_lp_string().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(run.path(output), e))?;
    run.note("model", output);
    println!(
        "{}: {} binary, {} continuous, {} rows",
        output,
        model.binary_count(),
        model.continuous_count(),
        model.rows.len()
    );
    Ok(())
}

fn allocate(
    run: &mut Run,
    method: Option<MethodArg>,
    arcs: &Path,
    states: &Path,
    origin: usize,
    destination: usize,
    max_paths: usize,
) -> Result<()> {
    let grid = run.grid()?;
    let net = TollNetwork::from_csv(open(arcs)?, open(states)?, origin, destination)?;
    let bound_method = match method.unwrap_or(MethodArg::TwoPoint) {
        MethodArg::TwoPoint => BoundMethod::TwoPoint,
        MethodArg::EpsilonSweep => BoundMethod::EpsilonSweep,
        _ => return Err(Error::InvalidArgument("`allocate` takes two-point or epsilon-sweep".into())),
    };
    run.note("arcs", arcs.display());
    run.note("states", states.display());
    run.note("origin", origin);
    run.note("destination", destination);
    run.note("max_paths", max_paths);
    let family = enumerate_paths(&net, max_paths)?;
    let pcfg = ParallelConfig {
        periods: run.cfg.periods,
        kappa_bar: run.cfg.kappa_bar,
        confidence_z: run.cfg.confidence_z,
        method: bound_method,
    };
    let instances = build_parallel_equivalent(&net, &family, &grid, &pcfg)?;
    let bounds: Vec<Money> = instances.iter().map(|i| i.bound).collect();
    let alloc = allocate_arc_tolls(&bounds, &family.incidence)?;
    let path_rows: Vec<Vec<String>> = instances
        .iter()
        .enumerate()
        .map(|(k, inst)| {
            let arcs: Vec<String> = inst.path.iter().map(usize::to_string).collect();
            vec![
                k.to_string(),
                arcs.join(" "),
                fmt_money(inst.envelope.u_lower),
                fmt_money(inst.envelope.u_upper),
                fmt_money(inst.bound),
            ]
        })
        .collect();
    run.write_csv("path_bounds.csv", &["path", "arcs", "u_lower", "u_upper", "bound"], &path_rows)?;
    let arc_rows: Vec<Vec<String>> = family
        .toll_arcs
        .iter()
        .zip(&alloc.tolls)
        .map(|(a, t)| vec![a.to_string(), t.to_string()])
        .collect();
    run.write_csv("allocation.csv", &["arc", "toll"], &arc_rows)?;
    println!("allocated total {} over {} toll arcs", alloc.total, alloc.tolls.len());
    Ok(())
}

fn ingest(
    run: &mut Run,
    records: Option<&Path>,
    synthetic_segments: Option<usize>,
    synthetic_states: usize,
    opts: &IngestOptions,
) -> Result<()> {
    let grid = run.grid()?;
    let (records, parse) = match (records, synthetic_segments) {
        (Some(path), _) => {
            run.note("records", path.display());
            parse_traffic_records(open(path)?)?
        }
        (None, Some(n)) => {
            if n == 0 || synthetic_states == 0 {
                return Err(Error::InvalidArgument("synthetic city needs segments and states".into()));
            }
            let city = SyntheticCity {
                segments: n,
                states: synthetic_states,
                seed: run.cfg.seed,
                ..SyntheticCity::default()
            };
            run.note("synthetic_segments", n);
            run.note("synthetic_states", synthetic_states);
            let recs = city.records();
            write_traffic_records(&recs, run.create("records.csv")?)?;
            let parse = ParseReport {
                rows: recs.len(),
                ..ParseReport::default()
            };
            (recs, parse)
        }
        (None, None) => return Err(Error::InvalidArgument("give --records or --synthetic-segments".into())),
    };
    run.note("bucket_secs", opts.bucket_secs);
    run.note("merge_tol", opts.graph.merge_tol);
    run.note("crossing_tol", opts.graph.crossing_tol);
    run.note("bidirectional", opts.graph.bidirectional);
    run.note("cost_scale", opts.cost_scale);
    let out = run_ingest(&records, parse, opts, &grid)?;
    write_arcs_csv(&out.graph, run.create("arcs.csv")?, Some(FORMAT_VERSION))?;
    write_states_csv(&out.state_costs, run.create("states.csv")?, Some(FORMAT_VERSION))?;
    let text = out.report.to_text();
    let mut w = run.create("ingest_report.txt")?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(run.path("ingest_report.txt"), e))?;
    print!("{text}");
    Ok(())
}

/// The four families of the mixed experiment, one preset each.
const MIXED_POOL: [&str; 4] = ["beta", "gamma", "normal", "lognormal"];

fn simulate(
    run: &mut Run,
    family: &str,
    full_scale: bool,
    history_samples: Option<usize>,
    eval_samples: Option<usize>,
    links: Option<usize>,
) -> Result<()> {
    let grid = run.grid()?;
    let c = &run.cfg;
    let mut cfg = ExperimentConfig {
        periods: c.periods,
        windows: c.windows,
        kappa_bar: c.kappa_bar,
        confidence_z: c.confidence_z,
        ..ExperimentConfig::desk(grid.clone(), c.seed)
    };
    if full_scale {
        cfg = cfg.full_scale();
    }
    if let Some(n) = history_samples {
        cfg.history_samples = n;
    }
    if let Some(n) = eval_samples {
        cfg.eval_samples = n;
    }
    if let Some(n) = links {
        cfg.links = n;
    }
    cfg.validate()?;
    run.note("family", family);
    run.note("links", cfg.links);
    run.note("history_samples", cfg.history_samples);
    run.note("eval_samples", cfg.eval_samples);

    let presets = DistributionSpec::presets(&grid);
    let pool: Vec<DistributionSpec> = MIXED_POOL
        .iter()
        .map(|n| DistributionSpec::preset(n, &grid))
        .collect::<Result<_>>()?;
    let mut reports: Vec<SimulationReport> = Vec::new();
    let key = family.to_ascii_lowercase();
    match key.as_str() {
        "all" => {
            for spec in &presets {
                reports.push(run_fixed_distribution_experiment(&cfg, spec)?);
            }
            reports.push(run_mixed_distribution_experiment(&cfg, &pool)?);
        }
        "mixed" => reports.push(run_mixed_distribution_experiment(&cfg, &pool)?),
        name => reports.push(run_fixed_distribution_experiment(&cfg, &DistributionSpec::preset(name, &grid)?)?),
    }

    let mut summary = Vec::new();
    let mut curve = Vec::new();
    let mut cumulative = Vec::new();
    let mut tolls = Vec::new();
    for rep in &reports {
        let mapping = rep.mappings.join(";");
        run.note(&format!("mapping.{}", rep.label), &mapping);
        for s in &rep.summaries {
            summary.push(vec![
                rep.label.clone(),
                s.variant.label().to_string(),
                format!("{:.4}", s.avg_pct),
                format!("{:.4}", s.stdev_pct),
                format!("{:.4}", s.toll_stdev),
                mapping.clone(),
            ]);
        }
        curve.extend(
            rep.br_curve
                .iter()
                .map(|&(r, br)| vec![rep.label.clone(), fmt_money(r), fmt_money(br)]),
        );
        cumulative.extend(
            rep.cumulative
                .iter()
                .enumerate()
                .map(|(t, v)| vec![rep.label.clone(), (t + 1).to_string(), format!("{:.6}", 100.0 * v)]),
        );
        tolls.extend(rep.robust_tolls.iter().zip(&rep.mean_tolls).enumerate().map(|(h, (r, m))| {
            vec![rep.label.clone(), h.to_string(), fmt_money(*r), fmt_money(*m)]
        }));
    }
    run.write_csv(
        "regret_summary.csv",
        &["family", "variant", "avg", "stdev", "toll_stdev", "mapping"],
        &summary,
    )?;
    run.write_csv("br_curve.csv", &["family", "r", "br"], &curve)?;
    run.write_csv("cumulative_regret.csv", &["family", "period", "value"], &cumulative)?;
    run.write_csv("history_tolls.csv", &["family", "history", "robust_toll", "mean_toll"], &tolls)?;
    println!("family,variant,avg,stdev,toll_stdev");
    for r in &summary {
        println!("{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4]);
    }
    Ok(())
}

fn real_exp(
    run: &mut Run,
    arcs: &Path,
    states: &Path,
    pairs: usize,
    history_cut: Option<usize>,
    bin_width: f64,
) -> Result<()> {
    let grid = run.grid()?;
    let net = CostNetwork::from_csv(open(arcs)?, open(states)?)?;
    let cut = history_cut.unwrap_or((net.state_count() / 2).max(1));
    run.note("arcs", arcs.display());
    run.note("states", states.display());
    run.note("pairs", pairs);
    run.note("history_cut", cut);
    run.note("bin_width", bin_width);
    let cfg = RealDataConfig {
        grid,
        pairs,
        history_cut: cut,
        periods: run.cfg.periods,
        kappa_bar: run.cfg.kappa_bar,
        confidence_z: run.cfg.confidence_z,
        seed: run.cfg.seed,
    };
    let report = run_real_data_experiment(&net, &cfg)?;
    run.note("pairs_evaluated", report.pairs.len());
    run.note("pairs_skipped", report.skipped);
    let summary: Vec<Vec<String>> = report
        .summaries
        .iter()
        .map(|s| {
            vec![
                "real".to_string(),
                s.variant.label().to_string(),
                format!("{:.4}", s.avg_pct),
                format!("{:.4}", s.stdev_pct),
                format!("{:.4}", s.toll_stdev),
            ]
        })
        .collect();
    run.write_csv("regret_summary.csv", &["family", "variant", "avg", "stdev", "toll_stdev"], &summary)?;
    let ratio_rows: Vec<Vec<String>> = report
        .pairs
        .iter()
        .map(|p| {
            vec![
                p.origin.to_string(),
                p.destination.to_string(),
                fmt_money(p.robust_toll),
                fmt_money(p.mean_toll),
                fmt_money(p.optimal_toll),
                format!("{:.6}", p.ratio()),
                format!("{:.6}", 100.0 * p.robust_regret),
                format!("{:.6}", 100.0 * p.mean_regret),
            ]
        })
        .collect();
    run.write_csv(
        "toll_ratio.csv",
        &[
            "origin",
            "destination",
            "robust_toll",
            "mean_toll",
            "optimal_toll",
            "ratio",
            "robust_regret",
            "mean_regret",
        ],
        &ratio_rows,
    )?;
    let hist: Vec<Vec<String>> = ratio_histogram(&report.ratios(), bin_width)
        .into_iter()
        .map(|(lo, hi, n)| vec![format!("{lo:.4}"), format!("{hi:.4}"), n.to_string()])
        .collect();
    run.write_csv("toll_ratio_histogram.csv", &["bin_lower", "bin_upper", "count"], &hist)?;
    println!("family,variant,avg,stdev,toll_stdev");
    for r in &summary {
        println!("{}", r.join(","));
    }
    println!("# pairs={} skipped={}", report.pairs.len(), report.skipped);
    Ok(())
}
