use std::collections::BTreeMap;

use log::warn;

use super::observations::SegmentGeometry;
use super::records::GeoPoint;
use crate::error::{Error, Result};

pub const DEFAULT_MERGE_TOL: f64 = 1e-4;
pub const DEFAULT_CROSSING_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphOptions {
    pub merge_tol: f64,
    pub crossing_tol: f64,
    /// Also add the reverse of every arc.
    pub bidirectional: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            merge_tol: DEFAULT_MERGE_TOL,
            crossing_tol: DEFAULT_CROSSING_TOL,
            bidirectional: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadArc {
    pub tail: usize,
    pub head: usize,
    pub length: f64,
    pub segment: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphReport {
    pub segments: usize,
    pub splits: usize,
    pub zero_length_dropped: usize,
    pub parallel_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    pub nodes: Vec<GeoPoint>,
    pub arcs: Vec<RoadArc>,
    pub report: GraphReport,
}

fn sub(a: GeoPoint, b: GeoPoint) -> (f64, f64) {
    (a.lon - b.lon, a.lat - b.lat)
}

fn at(p: GeoPoint, d: (f64, f64), s: f64) -> GeoPoint {
    GeoPoint::new(p.lon + s * d.0, p.lat + s * d.1)
}

/// Closest points of segments `p1 + s*d1` and `p2 + t*d2`, `s, t` in [0, 1].
fn closest_params(p1: GeoPoint, d1: (f64, f64), p2: GeoPoint, d2: (f64, f64)) -> (f64, f64) {
    let r = sub(p1, p2);
    let a = d1.0 * d1.0 + d1.1 * d1.1;
    let e = d2.0 * d2.0 + d2.1 * d2.1;
    let f = d2.0 * r.0 + d2.1 * r.1;
    let c = d1.0 * r.0 + d1.1 * r.1;
    let b = d1.0 * d2.0 + d1.1 * d2.1;
    let denom = a * e - b * b;
    let mut s = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// Union-find cluster representative.
fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Merge points closer than `tol`, repeating on cluster centroids until no
/// two centroids are within `tol`. Returns the node of every input point and
/// the node coordinates sorted by (lon, lat).
fn merge_points(points: &[GeoPoint], tol: f64) -> (Vec<usize>, Vec<GeoPoint>) {
    let mut assign: Vec<usize> = (0..points.len()).collect();
    let mut coords: Vec<GeoPoint> = points.to_vec();
    loop {
        let n = coords.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| coords[a].lon.total_cmp(&coords[b].lon).then(coords[a].lat.total_cmp(&coords[b].lat)));
        let mut parent: Vec<usize> = (0..n).collect();
        let mut merged = false;
        for (k, &i) in order.iter().enumerate() {
            for &j in &order[k + 1..] {
                if coords[j].lon - coords[i].lon > tol {
                    break;
                }
                if coords[i].distance(coords[j]) <= tol {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                        merged = true;
                    }
                }
            }
        }
        // centroids over the original points, summed in a fixed order
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        let mut members: BTreeMap<usize, Vec<GeoPoint>> = BTreeMap::new();
        for (p, a) in points.iter().zip(assign.iter_mut()) {
            *a = roots[*a];
            members.entry(*a).or_default().push(*p);
        }
        let mut clusters: Vec<(GeoPoint, usize)> = members
            .into_iter()
            .map(|(root, mut pts)| {
                pts.sort_by(|a, b| a.lon.total_cmp(&b.lon).then(a.lat.total_cmp(&b.lat)));
                let k = pts.len() as f64;
                let lon = pts.iter().map(|p| p.lon).sum::<f64>() / k;
                let lat = pts.iter().map(|p| p.lat).sum::<f64>() / k;
                (GeoPoint::new(lon, lat), root)
            })
            .collect();
        clusters.sort_by(|a, b| a.0.lon.total_cmp(&b.0.lon).then(a.0.lat.total_cmp(&b.0.lat)));
        let mut rename = BTreeMap::new();
        for (idx, (_, root)) in clusters.iter().enumerate() {
            rename.insert(*root, idx);
        }
        for a in assign.iter_mut() {
            *a = rename[a];
        }
        coords = clusters.into_iter().map(|c| c.0).collect();
        if !merged {
            return (assign, coords);
        }
    }
}

/// Build a directed road graph from segment geometry. Segments passing within
/// `crossing_tol` of each other are split at the near-intersection; endpoints
/// within `merge_tol` collapse to one node at their centroid. Arc lengths are
/// planar distances on raw lon/lat.
pub fn build_graph_from_segments(segments: &[SegmentGeometry], opts: &GraphOptions) -> Result<RoadGraph> {
    if !(opts.merge_tol > 0.0 && opts.crossing_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let mut segs: Vec<&SegmentGeometry> = segments.iter().collect();
    segs.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = segs.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::InvalidArgument(format!("duplicate segment id {}", w[0].id)));
    }
    let mut report = GraphReport {
        segments: segs.len(),
        ..Default::default()
    };
    let dirs: Vec<(f64, f64)> = segs.iter().map(|s| sub(s.end, s.start)).collect();
    let mut cuts: Vec<Vec<(f64, GeoPoint)>> = vec![Vec::new(); segs.len()];
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let (d1, d2) = (dirs[i], dirs[j]);
            let cross = d1.0 * d2.1 - d1.1 * d2.0;
            let norms = d1.0.hypot(d1.1) * d2.0.hypot(d2.1);
            if cross.abs() <= 1e-9 * norms {
                continue;
            }
            let (s, t) = closest_params(segs[i].start, d1, segs[j].start, d2);
            let (a, b) = (at(segs[i].start, d1, s), at(segs[j].start, d2, t));
            if a.distance(b) > opts.crossing_tol {
                continue;
            }
            let x = GeoPoint::new(0.5 * (a.lon + b.lon), 0.5 * (a.lat + b.lat));
            for (k, param) in [(i, s), (j, t)] {
                let seg = segs[k];
                if x.distance(seg.start) > opts.merge_tol && x.distance(seg.end) > opts.merge_tol {
                    cuts[k].push((param, x));
                }
            }
        }
    }
    let mut pieces: Vec<(usize, GeoPoint, GeoPoint)> = Vec::new();
    for (k, seg) in segs.iter().enumerate() {
        let mut c = std::mem::take(&mut cuts[k]);
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut chain = vec![seg.start];
        for (_, p) in c {
            if p.distance(*chain.last().unwrap()) > opts.merge_tol {
                chain.push(p);
                report.splits += 1;
            }
        }
        chain.push(seg.end);
        for w in chain.windows(2) {
            pieces.push((k, w[0], w[1]));
        }
    }
    let points: Vec<GeoPoint> = pieces.iter().flat_map(|p| [p.1, p.2]).collect();
    let (assign, nodes) = merge_points(&points, opts.merge_tol);
    let mut arcs = Vec::new();
    for (n, &(k, _, _)) in pieces.iter().enumerate() {
        let (tail, head) = (assign[2 * n], assign[2 * n + 1]);
        if tail == head {
            report.zero_length_dropped += 1;
            continue;
        }
        let length = nodes[tail].distance(nodes[head]);
        let segment = segs[k].id.clone();
        if opts.bidirectional {
            arcs.push(RoadArc {
                tail: head,
                head: tail,
                length,
                segment: segment.clone(),
            });
        }
        arcs.push(RoadArc {
            tail,
            head,
            length,
            segment,
        });
    }
    if report.zero_length_dropped > 0 {
        warn!("dropped {} zero-length arcs after merging", report.zero_length_dropped);
    }
    arcs.sort_by(|a, b| {
        (a.tail, a.head, &a.segment)
            .cmp(&(b.tail, b.head, &b.segment))
            .then(a.length.total_cmp(&b.length))
    });
    let mut per_pair: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    arcs.retain(|a| {
        let n = per_pair.entry((a.tail, a.head)).or_insert(0);
        *n += 1;
        *n <= 2
    });
    report.parallel_dropped = per_pair.values().map(|&n| n.saturating_sub(2)).sum();
    Ok(RoadGraph { nodes, arcs, report })
}
