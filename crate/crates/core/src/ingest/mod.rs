//! Road-segment speed feeds to a road graph with per-state travel costs.

mod graph;
mod observations;
mod records;
mod synthetic;

pub use graph::{
    build_graph_from_segments, GraphOptions, GraphReport, RoadArc, RoadGraph, DEFAULT_CROSSING_TOL,
    DEFAULT_MERGE_TOL,
};
pub use observations::{
    interpolate_missing, InterpolationReport, ObservationGrid, SegmentGeometry, DEFAULT_BUCKET_SECS,
};
pub use records::{
    parse_timestamp, parse_traffic_records, write_traffic_records, GeoPoint, ParseReport,
    SegmentRecord, RECORD_HEADER,
};
pub use synthetic::SyntheticCity;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::history::{clamp_series, ClampReport};
use crate::Money;

/// Travel cost per unit of length / speed.
pub const DEFAULT_COST_SCALE: f64 = 10_000.0;

/// `cost(s, a) = scale * length(a) / speed(s, a)`, clamped and snapped to the
/// grid. Rows are states (timestamps), columns arcs.
pub fn travel_cost_states(
    graph: &RoadGraph,
    obs: &ObservationGrid,
    scale: f64,
    grid: &PriceGrid,
) -> Result<(Vec<Vec<Money>>, ClampReport)> {
    let index: HashMap<&str, usize> = obs
        .segments()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let cols: Vec<usize> = graph
        .arcs
        .iter()
        .map(|a| {
            index
                .get(a.segment.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("arc segment {} not observed", a.segment)))
        })
        .collect::<Result<_>>()?;
    let mut report = ClampReport::default();
    let mut states = Vec::with_capacity(obs.timestamps().len());
    for t in 0..obs.timestamps().len() {
        let mut row = Vec::with_capacity(cols.len());
        for (a, &seg) in graph.arcs.iter().zip(&cols) {
            let speed = obs.speed(seg, t).ok_or_else(|| {
                Error::InvalidArgument(format!("segment {} has no speed at state {t}", a.segment))
            })?;
            if !(speed > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "segment {} has speed {speed} at state {t}",
                    a.segment
                )));
            }
            row.push(scale * a.length / speed);
        }
        report.merge(clamp_series(grid, &mut row));
        for c in row.iter_mut() {
            *c = grid.snap(*c);
        }
        states.push(row);
    }
    Ok((states, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub bucket_secs: i64,
    pub graph: GraphOptions,
    pub cost_scale: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            bucket_secs: DEFAULT_BUCKET_SECS,
            graph: GraphOptions::default(),
            cost_scale: DEFAULT_COST_SCALE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub parse: ParseReport,
    pub interpolation: InterpolationReport,
    pub graph: GraphReport,
    pub clamps: ClampReport,
    pub states: usize,
    pub nodes: usize,
    pub arcs: usize,
}

impl IngestReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "records: {}", self.parse.rows);
        let _ = writeln!(s, "duplicate rows replaced: {}", self.parse.duplicates);
        let _ = writeln!(s, "non-positive speeds read as missing: {}", self.parse.nonpositive_speeds);
        let _ = writeln!(s, "values interpolated: {}", self.interpolation.filled);
        let _ = writeln!(s, "segments never observed (dropped): {}", self.interpolation.dropped_segments.len());
        let _ = writeln!(s, "segments in graph: {}", self.graph.segments);
        let _ = writeln!(s, "crossing splits: {}", self.graph.splits);
        let _ = writeln!(s, "zero-length arcs dropped: {}", self.graph.zero_length_dropped);
        let _ = writeln!(s, "extra parallel arcs dropped: {}", self.graph.parallel_dropped);
        let _ = writeln!(s, "nodes: {}", self.nodes);
        let _ = writeln!(s, "arcs: {}", self.arcs);
        let _ = writeln!(s, "states: {}", self.states);
        let _ = writeln!(s, "costs clamped: {} of {}", self.clamps.clamped, self.clamps.total);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutput {
    pub graph: RoadGraph,
    pub observations: ObservationGrid,
    pub state_costs: Vec<Vec<Money>>,
    pub report: IngestReport,
}

/// Bucket, interpolate, build the graph and price every arc in every state.
pub fn run_ingest(
    records: &[SegmentRecord],
    parse: ParseReport,
    opts: &IngestOptions,
    grid: &PriceGrid,
) -> Result<IngestOutput> {
    let raw = ObservationGrid::from_records(records, opts.bucket_secs)?;
    let (obs, interpolation) = interpolate_missing(&raw);
    if obs.segments().is_empty() {
        return Err(Error::EmptyInput("no segment was ever observed".into()));
    }
    let graph = build_graph_from_segments(obs.segments(), &opts.graph)?;
    let (state_costs, clamps) = travel_cost_states(&graph, &obs, opts.cost_scale, grid)?;
    clamps.warn_if_above(crate::history::DEFAULT_CLAMP_WARN_RATE, "travel costs");
    let report = IngestReport {
        parse,
        interpolation,
        graph: graph.report.clone(),
        clamps,
        states: state_costs.len(),
        nodes: graph.nodes.len(),
        arcs: graph.arcs.len(),
    };
    Ok(IngestOutput {
        graph,
        observations: obs,
        state_costs,
        report,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv output>".into(),
        source: e.into(),
    }
}

/// Arcs table in the network format; every road arc is toll-free.
pub fn write_arcs_csv(graph: &RoadGraph, writer: impl Write, version: Option<&str>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["tail", "head", "toll_flag", "length"];
    header.extend(version.map(|_| "format_version"));
    w.write_record(&header).map_err(csv_err)?;
    for a in &graph.arcs {
        let mut row = vec![a.tail.to_string(), a.head.to_string(), "0".into(), a.length.to_string()];
        row.extend(version.map(str::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

/// States table `state,arc,cost`.
pub fn write_states_csv(costs: &[Vec<Money>], writer: impl Write, version: Option<&str>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["state", "arc", "cost"];
    header.extend(version.map(|_| "format_version"));
    w.write_record(&header).map_err(csv_err)?;
    for (s, row) in costs.iter().enumerate() {
        for (a, c) in row.iter().enumerate() {
            let mut rec = vec![s.to_string(), a.to_string(), c.to_string()];
            rec.extend(version.map(str::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| csv_err(e.into()))
}
