use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::records::{GeoPoint, SegmentRecord};

/// Lattice city for exercising the pipeline without the external feed.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCity {
    pub segments: usize,
    pub states: usize,
    pub missing_rate: f64,
    /// Segments (counted from the end) that never report a speed.
    pub never_observed: usize,
    pub seed: u64,
}

impl Default for SyntheticCity {
    fn default() -> Self {
        Self {
            segments: 20,
            states: 96,
            missing_rate: 0.1,
            never_observed: 0,
            seed: 7,
        }
    }
}

const ORIGIN: (f64, f64) = (-87.70, 41.85);
const SPACING: f64 = 0.01;
const START: i64 = 1_420_070_400;

impl SyntheticCity {
    /// Records for every segment and bucket, with some speeds missing.
    pub fn records(&self) -> Vec<SegmentRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut k = 2usize;
        while 2 * k * (k - 1) < self.segments {
            k += 1;
        }
        let node = |r: usize, c: usize| {
            GeoPoint::new(ORIGIN.0 + c as f64 * SPACING, ORIGIN.1 + r as f64 * SPACING)
        };
        let mut edges = Vec::new();
        for r in 0..k {
            for c in 0..k {
                if c + 1 < k {
                    edges.push((node(r, c), node(r, c + 1)));
                }
                if r + 1 < k {
                    edges.push((node(r, c), node(r + 1, c)));
                }
            }
        }
        edges.truncate(self.segments);
        let noise = Normal::new(0.0, 0.05).expect("valid stdev");
        let mut out = Vec::new();
        for (i, &(start, end)) in edges.iter().enumerate() {
            let base: f64 = rng.random_range(18.0..35.0);
            let silent = i + self.never_observed >= edges.len();
            let anchor = rng.random_range(0..self.states.max(1));
            for t in 0..self.states {
                let phase = (std::f64::consts::PI * t as f64 / 48.0).sin();
                let v = (base * (1.0 - 0.3 * phase * phase) * (1.0 + noise.sample(&mut rng))).max(2.0);
                let missing = silent || (t != anchor && rng.random::<f64>() < self.missing_rate);
                let jitter: i64 = rng.random_range(0..300);
                out.push(SegmentRecord {
                    timestamp: START + 900 * t as i64 + jitter,
                    segment_id: format!("{:04}", i + 1),
                    speed: (!missing).then_some((v * 100.0).round() / 100.0),
                    start,
                    end,
                });
            }
        }
        out
    }
}
