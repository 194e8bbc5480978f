use std::io::{Read, Write};

use chrono::{DateTime, NaiveDateTime};
use log::warn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    /// Planar distance on raw degrees.
    pub fn distance(self, other: GeoPoint) -> f64 {
        (self.lon - other.lon).hypot(self.lat - other.lat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    /// Seconds since the Unix epoch (UTC).
    pub timestamp: i64,
    pub segment_id: String,
    pub speed: Option<f64>,
    pub start: GeoPoint,
    pub end: GeoPoint,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub rows: usize,
    pub duplicates: usize,
    /// Zero or negative speeds, read as missing (the city feed writes -1).
    pub nonpositive_speeds: usize,
}

pub const RECORD_HEADER: [&str; 7] = ["timestamp", "segment_id", "speed", "lon1", "lat1", "lon2", "lat2"];

const NAIVE_FORMATS: [&str; 4] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%m/%d/%Y %I:%M:%S %p",
    "%m/%d/%Y %H:%M:%S",
];

/// Epoch seconds, RFC 3339, or a naive UTC date-time.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    NAIVE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.and_utc().timestamp())
}

/// Parse the segment CSV, sorted by (segment, timestamp). A repeated
/// (segment, timestamp) keeps the last row in file order.
pub fn parse_traffic_records(reader: impl Read) -> Result<(Vec<SegmentRecord>, ParseReport)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut cols = [0usize; 7];
    for (slot, name) in cols.iter_mut().zip(RECORD_HEADER) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}`"),
        })?;
    }
    let mut report = ParseReport::default();
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
        let num = |i: usize, what: &str| -> Result<f64> {
            get(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(what, get(i)))
        };
        let timestamp = parse_timestamp(get(0)).ok_or_else(|| bad("timestamp", get(0)))?;
        let segment_id = get(1).to_string();
        if segment_id.is_empty() {
            return Err(bad("segment_id", ""));
        }
        let speed = match get(2) {
            "" => None,
            s => {
                let v = s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("speed", s))?;
                if v > 0.0 {
                    Some(v)
                } else {
                    report.nonpositive_speeds += 1;
                    None
                }
            }
        };
        let start = GeoPoint::new(num(3, "lon1")?, num(4, "lat1")?);
        let end = GeoPoint::new(num(5, "lon2")?, num(6, "lat2")?);
        if start == end {
            return Err(Error::Parse {
                line,
                message: format!("segment {segment_id} has identical endpoints"),
            });
        }
        out.push(SegmentRecord {
            timestamp,
            segment_id,
            speed,
            start,
            end,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("no traffic records".into()));
    }
    report.rows = out.len();
    out.sort_by(|a, b| a.segment_id.cmp(&b.segment_id).then(a.timestamp.cmp(&b.timestamp)));
    let mut deduped: Vec<SegmentRecord> = Vec::with_capacity(out.len());
    for rec in out {
        match deduped.last_mut() {
            Some(last) if last.segment_id == rec.segment_id && last.timestamp == rec.timestamp => {
                *last = rec;
                report.duplicates += 1;
            }
            _ => deduped.push(rec),
        }
    }
    if report.duplicates > 0 {
        warn!("{} duplicate (segment, timestamp) rows, kept the last of each", report.duplicates);
    }
    Ok((deduped, report))
}

/// Write records in the input format with epoch-second timestamps.
pub fn write_traffic_records(records: &[SegmentRecord], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Io {
        path: "<traffic records>".into(),
        source: e.into(),
    };
    w.write_record(RECORD_HEADER).map_err(wrap)?;
    for r in records {
        w.write_record([
            r.timestamp.to_string(),
            r.segment_id.clone(),
            r.speed.map_or(String::new(), |v| v.to_string()),
            r.start.lon.to_string(),
            r.start.lat.to_string(),
            r.end.lon.to_string(),
            r.end.lat.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<traffic records>".into(),
        source: e,
    })
}
