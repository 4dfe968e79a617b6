//! Trajectory recording and per-class non-adoption statistics.

use serde::{Deserialize, Serialize};

use crate::dynamics::MarketState;
use crate::equilibration::{all_centroids, ClassCentroid};
use crate::error::{Error, Result};
use crate::model::AssetClass;

/// Per-asset (adoption, return) pair in a snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetPoint {
    pub adoption: f64,
    pub expected_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub snapshot: Option<Vec<AssetPoint>>,
    pub centroids: [ClassCentroid; 4],
    pub r_tot: f64,
    pub accepted_moves: usize,
}

/// Collects a summary every step and a full snapshot every `thinning` steps.
#[derive(Clone, Debug)]
pub struct Recorder {
    thinning: u64,
    records: Vec<TrajectoryRecord>,
}

impl Recorder {
    pub fn new(thinning: u64) -> Result<Self> {
        if thinning == 0 {
            return Err(Error::config("thinning must be >= 1"));
        }
        Ok(Recorder { thinning, records: Vec::new() })
    }

    pub fn record(&mut self, state: &MarketState, accepted_moves: usize) -> &TrajectoryRecord {
        let t = state.t();
        if let Some(last) = self.records.last() {
            debug_assert!(t > last.t, "records must have increasing t");
        }
        let snapshot = t.is_multiple_of(self.thinning).then(|| {
            state
                .assets()
                .iter()
                .map(|a| AssetPoint { adoption: a.adoption, expected_return: a.expected_return })
                .collect()
        });
        self.records.push(TrajectoryRecord {
            t,
            snapshot,
            centroids: all_centroids(state),
            r_tot: state.r_tot(),
            accepted_moves,
        });
        self.records.last().expect("just pushed")
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TrajectoryRecord> {
        self.records
    }
}

/// Streaming mean/variance (population variance), mergeable across workers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// NaN when empty.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Population variance; NaN when empty.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.m2 / self.count as f64
        }
    }
}

/// Normalised histogram of 1 - a for one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub class: AssetClass,
    /// `bins + 1` edges spanning [0, 1].
    pub edges: Vec<f64>,
    /// Sums to 1 for a nonempty class, all zero otherwise.
    pub freqs: Vec<f64>,
    pub count: u64,
    pub mean_nonadoption: f64,
    pub var_nonadoption: f64,
}

impl ClassHistogram {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Raw bin counts for one class; merge replicates before normalising.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramAccumulator {
    class: AssetClass,
    counts: Vec<u64>,
    stats: RunningStats,
}

impl HistogramAccumulator {
    pub fn new(class: AssetClass, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::config(format!("histogram needs >= 2 bins, got {bins}")));
        }
        Ok(HistogramAccumulator { class, counts: vec![0; bins], stats: RunningStats::default() })
    }

    pub fn push(&mut self, nonadoption: f64) {
        let bins = self.counts.len();
        let x = nonadoption.clamp(0.0, 1.0);
        let idx = ((x * bins as f64) as usize).min(bins - 1);
        self.counts[idx] += 1;
        self.stats.push(x);
    }

    pub fn merge(&mut self, other: &HistogramAccumulator) -> Result<()> {
        if other.class != self.class || other.counts.len() != self.counts.len() {
            return Err(Error::domain("cannot merge histograms of different class or binning"));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.stats.merge(&other.stats);
        Ok(())
    }

    pub fn finish(&self) -> ClassHistogram {
        let bins = self.counts.len();
        let total = self.stats.count();
        let freqs = if total == 0 {
            vec![0.0; bins]
        } else {
            self.counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        ClassHistogram {
            class: self.class,
            edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
            freqs,
            count: total,
            mean_nonadoption: self.stats.mean(),
            var_nonadoption: self.stats.variance(),
        }
    }
}

/// One accumulator per class, in [`AssetClass::ALL`] order.
pub fn accumulate_nonadoption(state: &MarketState, bins: usize) -> Result<Vec<HistogramAccumulator>> {
    let mut accs = AssetClass::ALL
        .iter()
        .map(|&c| HistogramAccumulator::new(c, bins))
        .collect::<Result<Vec<_>>>()?;
    for asset in state.assets() {
        accs[asset.class().index()].push(1.0 - asset.adoption);
    }
    Ok(accs)
}

/// Per-class normalised histogram of 1 - a with its mean and variance.
pub fn nonadoption_histogram(state: &MarketState, bins: usize) -> Result<Vec<ClassHistogram>> {
    Ok(accumulate_nonadoption(state, bins)?.iter().map(HistogramAccumulator::finish).collect())
}

/// Mean adoption per class in [`AssetClass::ALL`] order; NaN for empty classes.
pub fn class_mean_adoption(state: &MarketState) -> [f64; 4] {
    all_centroids(state).map(|c| c.mean_adoption)
}
