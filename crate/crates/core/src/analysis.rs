//! Overflow bound, Monte Carlo oracles, cost predictions and locality.

use std::collections::BTreeMap;
use std::fmt;

use crate::bitonic::comparator_count;
use crate::error::{Error, Result};
use crate::params::{derive_params, ClientMode, Params};
use crate::rng::{RngStream, StreamTag};
use crate::trace::{Trace, TraceEvent};

/// Reference runtime constants from the literature (accesses per `n log n`).
pub const AKS_CONSTANT: f64 = 5.4e7;
pub const ZIG_ZAG_CONSTANT: f64 = 8e4;
pub const RANDOMIZED_SHELLSORT_CONSTANT: f64 = 24.0;

fn log2_exact(x: usize) -> u64 {
    debug_assert!(x.is_power_of_two());
    u64::from(x.trailing_zeros())
}

fn ceil_log2(n: usize) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(usize::BITS - (n - 1).leading_zeros())
    }
}

/// Bucket count for `n` elements in buckets of `z` slots.
pub fn bucket_count(n: usize, z: usize) -> usize {
    (2 * n).div_ceil(z).next_power_of_two()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverflowBound {
    pub n: usize,
    pub z: usize,
    pub b: usize,
    pub levels: u32,
    /// `min(1, B * L * e^(-Z/6))`.
    pub value: f64,
    /// `log2` of the unclamped bound; finite even where `value` underflows.
    pub log2_raw: f64,
}

/// Probability bound for any MergeSplit overflowing: a union over `B`
/// buckets and `log2 B` levels of the per-bucket tail `e^(-Z/6)`.
pub fn epsilon_bound(n: usize, z: usize) -> OverflowBound {
    let b = bucket_count(n, z);
    let levels = b.trailing_zeros();
    let log2_raw = if levels == 0 {
        f64::NEG_INFINITY
    } else {
        (b as f64).log2() + f64::from(levels).log2() - z as f64 / (6.0 * std::f64::consts::LN_2)
    };
    OverflowBound {
        n,
        z,
        b,
        levels,
        value: log2_raw.exp2().min(1.0),
        log2_raw,
    }
}

/// Per-bucket Chernoff tail `e^(-Z/6)`.
pub fn per_bucket_bound(z: usize) -> f64 {
    (-(z as f64) / 6.0).exp()
}

/// Load of every bucket at every level for one set of labels, without
/// routing. Element `e` of group `g` with label `l` sits at level `i` in
/// bucket `((g >> i) << i) | (l >> (L - i))`.
pub fn level_loads(params: &Params, labels: &[u32]) -> Vec<Vec<usize>> {
    let l = params.levels();
    let mut loads = vec![vec![0; params.b]; l + 1];
    let mut e = 0;
    for g in 0..params.b {
        for _ in 0..params.group_size(g) {
            let label = labels[e] as usize;
            for (i, row) in loads.iter_mut().enumerate() {
                let prefix = if i == 0 { 0 } else { label >> (l - i) };
                row[((g >> i) << i) | prefix] += 1;
            }
            e += 1;
        }
    }
    loads
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverflowStats {
    pub n: usize,
    pub z: usize,
    pub b: usize,
    pub trials: u64,
    /// Trials in which some bucket at some level held more than `Z` reals.
    pub any_overflow: u64,
    /// `per_bucket[i - 1][b]`: trials where bucket `b` of level `i` overflowed.
    pub per_bucket: Vec<Vec<u64>>,
}

impl OverflowStats {
    pub fn any_rate(&self) -> f64 {
        self.any_overflow as f64 / self.trials as f64
    }

    /// Largest overflow frequency over all (level, bucket) pairs.
    pub fn max_bucket_rate(&self) -> f64 {
        self.per_bucket
            .iter()
            .flatten()
            .map(|&c| c as f64 / self.trials as f64)
            .fold(0.0, f64::max)
    }

    /// Mean overflow frequency of a final-level bucket.
    pub fn final_bucket_rate(&self) -> f64 {
        match self.per_bucket.last() {
            Some(row) => row.iter().sum::<u64>() as f64 / (row.len() as f64 * self.trials as f64),
            None => 0.0,
        }
    }
}

/// Simulates `trials` label draws for `n` elements in buckets of `z` slots
/// and counts overflows from the exact per-level loads. Trial `t` draws its
/// labels from stream `trial(t)` of `seed`.
pub fn overflow_monte_carlo(n: usize, z: usize, trials: u64, seed: u64) -> Result<OverflowStats> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let params = derive_params(n, z, ClientMode::BucketClient, seed, None)?;
    let l = params.levels();
    let mut per_bucket = vec![vec![0u64; params.b]; l];
    let mut any_overflow = 0;
    let mut labels = vec![0u32; n];
    for t in 0..trials {
        let mut rng = RngStream::new(seed, StreamTag::trial(t));
        for x in labels.iter_mut() {
            *x = rng.draw_label(params.b);
        }
        let loads = level_loads(&params, &labels);
        let mut any = false;
        for (row, counts) in loads[1..].iter().zip(per_bucket.iter_mut()) {
            for (&load, c) in row.iter().zip(counts.iter_mut()) {
                if load > z {
                    *c += 1;
                    any = true;
                }
            }
        }
        any_overflow += u64::from(any);
    }
    Ok(OverflowStats {
        n,
        z,
        b: params.b,
        trials,
        any_overflow,
        per_bucket,
    })
}

/// Histogram of load vectors from throwing `n` balls into `b` bins uniformly,
/// `trials` times.
pub fn loads_oracle(n: usize, b: usize, trials: u64, seed: u64) -> BTreeMap<Vec<usize>, u64> {
    let mut hist = BTreeMap::new();
    for t in 0..trials {
        let mut rng = RngStream::new(seed, StreamTag::trial(t));
        let mut loads = vec![0; b];
        for _ in 0..n {
            loads[rng.below(b as u64) as usize] += 1;
        }
        *hist.entry(loads).or_insert(0) += 1;
    }
    hist
}

/// Total-variation distance between two empirical histograms.
pub fn tv_distance<K: Ord>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> f64 {
    let ta: u64 = a.values().sum();
    let tb: u64 = b.values().sum();
    let freq = |m: &BTreeMap<K, u64>, k: &K, t: u64| m.get(k).map_or(0.0, |&c| c as f64 / t as f64);
    let mut d = 0.0;
    for k in a.keys().chain(b.keys().filter(|k| !a.contains_key(k))) {
        d += (freq(a, k, ta) - freq(b, k, tb)).abs();
    }
    d / 2.0
}

/// Pearson chi-square statistic of `observed` against uniform expectation
/// over `cells` categories; unobserved categories count as zero.
pub fn chi_square_uniform(observed: impl IntoIterator<Item = u64>, cells: usize) -> f64 {
    let observed: Vec<u64> = observed.into_iter().collect();
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / cells as f64;
    let seen: f64 = observed
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    seen + (cells - observed.len()) as f64 * expected
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    BinAssignment,
    Orp,
    BucketSort,
    MergeSort,
    Bitonic,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::BinAssignment => "bin",
            Algorithm::Orp => "orp",
            Algorithm::BucketSort => "bucket",
            Algorithm::MergeSort => "merge",
            Algorithm::Bitonic => "bitonic",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bin" => Algorithm::BinAssignment,
            "orp" => Algorithm::Orp,
            "bucket" => Algorithm::BucketSort,
            "merge" => Algorithm::MergeSort,
            "bitonic" => Algorithm::Bitonic,
            _ => return Err(Error::InvalidParams(format!("unknown algorithm '{s}'"))),
        })
    }
}

/// Predicted element accesses per phase on flat memory. The placement of
/// the input into level 0 is not included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Prediction {
    pub routing: u64,
    pub emission: u64,
    pub sort: u64,
}

impl Prediction {
    pub fn total(&self) -> u64 {
        self.routing + self.emission + self.sort
    }
}

/// Exact access counts of this implementation.
///
/// With `B * Z = 2n` the two-bucket routing cost `2BZ log2 B` is
/// `4n log2 B`. The constant-client routing pays, per MergeSplit, two scans
/// over `2Z` slots and a bitonic network on `2Z`; its emission pays per
/// bucket a labelling scan, a network on `Z`, a collision scan and an
/// emission scan, plus one write per real.
pub fn predict_costs(algo: Algorithm, n: usize, z: usize, mode: ClientMode) -> Prediction {
    let merge = 2 * n as u64 * ceil_log2(n);
    match algo {
        Algorithm::MergeSort => Prediction {
            sort: merge,
            ..Prediction::default()
        },
        Algorithm::Bitonic => {
            let m = n.next_power_of_two();
            // Sentinel slots are not charged; for m = n this is 4 * C(n).
            let sentinels = crate::osort::sentinel_costs(n, m).map_or(0, |s| s.0);
            Prediction {
                sort: 4 * comparator_count(m) - sentinels,
                ..Prediction::default()
            }
        }
        _ => {
            let b = bucket_count(n, z);
            let (bz, lb, zz) = (b as u64 * z as u64, log2_exact(b), z as u64);
            let (routing, emission) = match mode {
                ClientMode::BucketClient => (2 * bz * lb, bz + n as u64),
                ClientMode::ConstClient => (
                    (b as u64 / 2) * (8 * zz + 4 * comparator_count(2 * z)) * lb,
                    b as u64 * (4 * zz + 4 * comparator_count(z)) + n as u64,
                ),
            };
            Prediction {
                routing,
                emission: if algo == Algorithm::BinAssignment {
                    0
                } else {
                    emission
                },
                sort: if algo == Algorithm::BucketSort {
                    merge
                } else {
                    0
                },
            }
        }
    }
}

/// Leading-order constant-client routing cost, `2n log2 B log2^2 (2Z)`.
pub fn approx_const_routing(n: usize, z: usize) -> f64 {
    let b = bucket_count(n, z) as f64;
    let lz = ((2 * z) as f64).log2();
    2.0 * n as f64 * b.log2() * lz * lz
}

/// Headline cost formulas: `n log n (log n + 1)` for bitonic against
/// routing, emission and merge sort for the bucket sort at `Z`.
pub fn model_ratio(log2_n: u32, z: usize) -> f64 {
    let ln = f64::from(log2_n);
    let n = ln.exp2();
    let log2_b = ((2.0 * n) / z as f64).log2().ceil().max(0.0);
    let bitonic = n * ln * (ln + 1.0);
    let bucket = 4.0 * n * log2_b + 3.0 * n + 2.0 * n * ln;
    bitonic / bucket
}

/// Measured against predicted costs of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub algo: Algorithm,
    pub n: usize,
    pub z: usize,
    pub mode: ClientMode,
    pub predicted: Prediction,
    pub measured_accesses: u64,
    pub comparisons: u64,
    pub moves: Vec<u64>,
}

impl CostReport {
    pub fn total_moves(&self) -> u64 {
        self.moves.iter().sum()
    }

    /// `measured / predicted` accesses.
    pub fn ratio(&self) -> f64 {
        self.measured_accesses as f64 / self.predicted.total() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalityReport {
    pub disks: usize,
    /// Head moves per disk.
    pub per_disk: Vec<u64>,
}

impl LocalityReport {
    pub fn moves(&self) -> u64 {
        self.per_disk.iter().sum()
    }
}

/// Counts the head moves of a disk-mode trace.
pub fn locality_report(trace: &Trace, disks: usize) -> LocalityReport {
    let mut per_disk = vec![0; disks];
    for e in trace.events() {
        if let TraceEvent::Move { disk, .. } = e {
            per_disk[*disk as usize] += 1;
        }
    }
    if trace.events().is_empty() {
        for (d, &m) in trace.totals().moves.iter().enumerate().take(disks) {
            per_disk[d] = m;
        }
    }
    LocalityReport { disks, per_disk }
}
