use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;

use super::records::{GeoPoint, SegmentRecord};
use crate::error::{Error, Result};

/// Default timestamp bucket: 15 minutes.
pub const DEFAULT_BUCKET_SECS: i64 = 900;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGeometry {
    pub id: String,
    pub start: GeoPoint,
    pub end: GeoPoint,
}

/// Speeds per segment aligned to a common, evenly spaced timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGrid {
    timestamps: Vec<i64>,
    segments: Vec<SegmentGeometry>,
    /// `values[segment][t]`.
    values: Vec<Vec<Option<f64>>>,
}

impl ObservationGrid {
    pub fn new(
        timestamps: Vec<i64>,
        segments: Vec<SegmentGeometry>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("timestamps must increase strictly".into()));
        }
        if segments.len() != values.len() || values.iter().any(|v| v.len() != timestamps.len()) {
            return Err(Error::InvalidArgument("observation matrix shape mismatch".into()));
        }
        Ok(Self {
            timestamps,
            segments,
            values,
        })
    }

    /// Bucket timestamps down to multiples of `bucket_secs` and average
    /// speeds landing in the same bucket. The timeline covers every bucket
    /// from the first to the last observation.
    pub fn from_records(records: &[SegmentRecord], bucket_secs: i64) -> Result<Self> {
        if bucket_secs <= 0 {
            return Err(Error::InvalidArgument("bucket interval must be positive".into()));
        }
        if records.is_empty() {
            return Err(Error::EmptyInput("no traffic records".into()));
        }
        let bucket = |t: i64| t.div_euclid(bucket_secs) * bucket_secs;
        let first = records.iter().map(|r| bucket(r.timestamp)).min().unwrap();
        let last = records.iter().map(|r| bucket(r.timestamp)).max().unwrap();
        let timestamps: Vec<i64> = (0..=(last - first) / bucket_secs)
            .map(|k| first + k * bucket_secs)
            .collect();
        let mut by_segment: BTreeMap<&str, (SegmentGeometry, Vec<(f64, usize)>)> = BTreeMap::new();
        for r in records {
            let entry = by_segment.entry(&r.segment_id).or_insert_with(|| {
                (
                    SegmentGeometry {
                        id: r.segment_id.clone(),
                        start: r.start,
                        end: r.end,
                    },
                    vec![(0.0, 0); timestamps.len()],
                )
            });
            if let Some(v) = r.speed {
                let slot = &mut entry.1[((bucket(r.timestamp) - first) / bucket_secs) as usize];
                slot.0 += v;
                slot.1 += 1;
            }
        }
        let (segments, values) = by_segment
            .into_values()
            .map(|(g, acc)| {
                let v = acc
                    .into_iter()
                    .map(|(s, n)| (n > 0).then(|| s / n as f64))
                    .collect();
                (g, v)
            })
            .unzip();
        Self::new(timestamps, segments, values)
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn segments(&self) -> &[SegmentGeometry] {
        &self.segments
    }

    pub fn values(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn coverage(&self, segment: usize) -> Vec<bool> {
        self.values[segment].iter().map(Option::is_some).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().flatten().all(Option::is_some)
    }

    pub fn segment_index(&self, id: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.id == id)
    }

    pub fn speed(&self, segment: usize, t: usize) -> Option<f64> {
        self.values[segment][t]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterpolationReport {
    pub dropped_segments: Vec<String>,
    pub filled: usize,
}

/// Fill gaps linearly in time; values before the first or after the last
/// observation repeat the nearest one. Segments never observed are dropped.
pub fn interpolate_missing(grid: &ObservationGrid) -> (ObservationGrid, InterpolationReport) {
    let ts = &grid.timestamps;
    let filled: Vec<Option<(Vec<Option<f64>>, usize)>> = grid
        .values
        .par_iter()
        .map(|series| fill_series(ts, series))
        .collect();
    let mut report = InterpolationReport::default();
    let mut segments = Vec::new();
    let mut values = Vec::new();
    for (geom, f) in grid.segments.iter().zip(filled) {
        match f {
            Some((v, n)) => {
                report.filled += n;
                segments.push(geom.clone());
                values.push(v);
            }
            None => report.dropped_segments.push(geom.id.clone()),
        }
    }
    if !report.dropped_segments.is_empty() {
        warn!("dropped {} never-observed segments", report.dropped_segments.len());
    }
    let out = ObservationGrid {
        timestamps: ts.clone(),
        segments,
        values,
    };
    (out, report)
}

fn fill_series(ts: &[i64], series: &[Option<f64>]) -> Option<(Vec<Option<f64>>, usize)> {
    let known: Vec<usize> = (0..series.len()).filter(|&i| series[i].is_some()).collect();
    let (&first, &last) = (known.first()?, known.last()?);
    let mut out = series.to_vec();
    let mut filled = 0;
    for i in 0..series.len() {
        if out[i].is_some() {
            continue;
        }
        let v = if i < first {
            series[first].unwrap()
        } else if i > last {
            series[last].unwrap()
        } else {
            let k = known.partition_point(|&j| j < i);
            let (a, b) = (known[k - 1], known[k]);
            let (va, vb) = (series[a].unwrap(), series[b].unwrap());
            let w = (ts[i] - ts[a]) as f64 / (ts[b] - ts[a]) as f64;
            va + w * (vb - va)
        };
        out[i] = Some(v);
        filled += 1;
    }
    Some((out, filled))
}
