//! Bucket oblivious sort and the baselines it is measured against.
//!
//! The sort is the random permutation followed by an ordinary merge sort.
//! After a uniform permutation the merge sort's accesses depend only on the
//! relative ranks of the keys, which are themselves uniformly random.

use crate::bin_assign::check_input;
use crate::bitonic::{bitonic_schedule, bitonic_sort};
use crate::element::Element;
use crate::error::Result;
use crate::memory::{Counters, Memory, MemoryConfig};
use crate::orp::{bucket_orp_in, OrpOptions, PhaseCosts};
use crate::params::{ClientMode, Params};
use crate::trace::{trace_equal, ArrayId, Trace, TraceComparison};

#[derive(Clone, Debug)]
pub struct SortResult {
    pub output: Vec<Element>,
    /// Loads vector of the permutation; empty for the baselines.
    pub loads: Vec<usize>,
    pub phases: PhaseCosts,
    /// Accesses comparable across algorithms: routing, emission and sort for
    /// the bucket sort, everything but sentinel slots for bitonic.
    pub accesses: u64,
    pub trace: Trace,
    pub counters: Counters,
}

impl SortResult {
    pub fn keys(&self) -> Vec<u64> {
        self.output.iter().map(|e| e.sort_key).collect()
    }
}

fn memory(z: usize, mode: ClientMode, disks: Option<usize>, record: bool) -> Memory {
    let config = MemoryConfig::new(z, mode).with_disks(disks);
    Memory::new(if record {
        config
    } else {
        config.counting_only()
    })
}

/// Bucket oblivious sort: permutation, then merge sort on the result.
pub fn bucket_osort(input: &[Element], params: &Params) -> Result<SortResult> {
    bucket_osort_with(input, params, &OrpOptions::default())
}

pub fn bucket_osort_with(
    input: &[Element],
    params: &Params,
    options: &OrpOptions,
) -> Result<SortResult> {
    check_input(input, params)?;
    let mut mem = memory(params.z, params.client_mode, params.disks, options.record);
    let x = mem.load(input.to_vec(), 0);
    let mut phases = PhaseCosts::default();
    let (permuted, loads) = bucket_orp_in(&mut mem, x, params, options, &mut phases, None)?;
    let before = mem.counters();
    let sorted = merge_sort_in(&mut mem, permuted)?;
    phases.sort = mem.counters().since(&before);
    let output = mem.take(sorted);
    Ok(SortResult {
        output,
        loads,
        accesses: phases.accesses(),
        phases,
        counters: mem.counters(),
        trace: mem.into_trace(),
    })
}

/// Sorts `array` by `sort_key` with a bottom-up merge sort and returns the
/// array holding the result.
///
/// Each pass pairs run `k` with run `k + ceil(r/2)` of the `r` current runs,
/// so the runs read by a pass form two contiguous streams, a prefix and a
/// suffix. An unpaired run is copied. There are `ceil(log2 n)` passes, each
/// reading and writing every element once.
///
/// On three or more disks the suffix is first copied to a second disk, so
/// that the two input streams and the output stream each have a head of
/// their own. That costs a constant number of head moves per pass.
pub fn merge_sort_in(mem: &mut Memory, array: ArrayId) -> Result<ArrayId> {
    let n = mem.len(array);
    let striped = mem.disk_count().is_some_and(|d| d >= 3);
    let mut runs: Vec<(usize, usize)> = (0..n).map(|i| (i, 1)).collect();
    let mut src = array;
    while runs.len() > 1 {
        let home = mem.disk_of(src).unwrap_or(0);
        let h = runs.len().div_ceil(2);
        let suffix_start = runs[h].0;
        let (suffix, suffix_base) = if striped {
            let copy = mem.alloc(n - suffix_start, home + 1);
            for t in suffix_start..n {
                let e = mem.read_slot(src, t)?;
                mem.write_slot(copy, t - suffix_start, e)?;
            }
            (copy, suffix_start)
        } else {
            (src, 0)
        };
        let dst = mem.alloc(n, home + 2);
        let mut next = Vec::with_capacity(h);
        let mut out = 0;
        for k in 0..h {
            let (a, alen) = runs[k];
            match runs.get(k + h) {
                Some(&(b, blen)) => {
                    merge(
                        mem,
                        (src, a, alen),
                        (suffix, b - suffix_base, blen),
                        (dst, out),
                    )?;
                    next.push((out, alen + blen));
                    out += alen + blen;
                }
                None => {
                    for t in 0..alen {
                        let e = mem.read_slot(src, a + t)?;
                        mem.write_slot(dst, out + t, e)?;
                    }
                    next.push((out, alen));
                    out += alen;
                }
            }
        }
        if suffix != src {
            mem.free(suffix);
        }
        mem.free(src);
        src = dst;
        runs = next;
    }
    Ok(src)
}

fn merge(
    mem: &mut Memory,
    (xa, a, alen): (ArrayId, usize, usize),
    (xb, b, blen): (ArrayId, usize, usize),
    (dst, out): (ArrayId, usize),
) -> Result<()> {
    let (mut i, mut j) = (0, 0);
    let mut left = Some(mem.read_slot(xa, a)?);
    let mut right = Some(mem.read_slot(xb, b)?);
    for o in 0..alen + blen {
        let take_left = match (&left, &right) {
            (Some(l), Some(r)) => {
                mem.count_comparisons(1);
                l.sort_key <= r.sort_key
            }
            (l, _) => l.is_some(),
        };
        if take_left {
            mem.write_slot(dst, out + o, left.take().unwrap())?;
            i += 1;
            if i < alen {
                left = Some(mem.read_slot(xa, a + i)?);
            }
        } else {
            mem.write_slot(dst, out + o, right.take().unwrap())?;
            j += 1;
            if j < blen {
                right = Some(mem.read_slot(xb, b + j)?);
            }
        }
    }
    Ok(())
}

/// Traced, non-oblivious merge sort of `input`. Pass `Some(3)` for the
/// three-disk layout.
pub fn merge_sort_baseline(input: &[Element], disks: Option<usize>) -> Result<SortResult> {
    merge_sort_baseline_with(input, disks, true)
}

pub fn merge_sort_baseline_with(
    input: &[Element],
    disks: Option<usize>,
    record: bool,
) -> Result<SortResult> {
    let mut mem = memory(2, ClientMode::BucketClient, disks, record);
    let x = mem.load(input.to_vec(), 0);
    let sorted = merge_sort_in(&mut mem, x)?;
    let output = mem.take(sorted);
    let counters = mem.counters();
    Ok(SortResult {
        output,
        loads: Vec::new(),
        phases: PhaseCosts {
            sort: counters,
            ..PhaseCosts::default()
        },
        accesses: counters.accesses(),
        counters,
        trace: mem.into_trace(),
    })
}

/// Whole-array bitonic sort. Non-power-of-two inputs are padded with
/// sentinels that order after every real key; accesses to slots holding a
/// sentinel are left out of `accesses`.
pub fn bitonic_baseline(input: &[Element], record: bool) -> Result<SortResult> {
    let n = input.len();
    let m = n.next_power_of_two().max(1);
    let mut data = input.to_vec();
    data.resize(m, Element::dummy());
    let mut mem = memory(2, ClientMode::ConstClient, None, record);
    let x = mem.load(data, 0);
    bitonic_sort(&mut mem, x, 0, m, |e| (e.is_dummy(), e.sort_key))?;
    let mut output = mem.take(x);
    output.truncate(n);
    let counters = mem.counters();
    let (sentinel_accesses, _) = sentinel_costs(n, m)?;
    Ok(SortResult {
        output,
        loads: Vec::new(),
        phases: PhaseCosts {
            sort: counters,
            ..PhaseCosts::default()
        },
        accesses: counters.accesses() - sentinel_accesses,
        counters,
        trace: mem.into_trace(),
    })
}

/// Accesses to sentinel slots and sentinel-only comparisons when `n` reals
/// are padded to `m`. Sentinels compare above every real, so where they sit
/// after each comparator does not depend on the reals.
pub fn sentinel_costs(n: usize, m: usize) -> Result<(u64, u64)> {
    let schedule = bitonic_schedule(m)?;
    let mut sentinel: Vec<bool> = (0..m).map(|i| i >= n).collect();
    let (mut accesses, mut both) = (0, 0);
    for c in schedule.comparators() {
        let (a, b) = (sentinel[c.low], sentinel[c.high]);
        accesses += 2 * (u64::from(a) + u64::from(b));
        both += u64::from(a && b);
        if c.swaps(&a, &b) {
            sentinel.swap(c.low, c.high);
        }
    }
    Ok((accesses, both))
}

/// Applies `perm` to both inputs (`out[i] = x[perm[i]]`) and compares the
/// merge-sort traces. Inputs with the same rank sequence after the
/// permutation must give equal traces.
pub fn trace_rank_isomorphism_check(
    x: &[u64],
    y: &[u64],
    perm: &[usize],
) -> Result<TraceComparison> {
    let apply = |v: &[u64]| -> Vec<Element> { perm.iter().map(|&p| Element::real(v[p])).collect() };
    let a = merge_sort_baseline(&apply(x), None)?;
    let b = merge_sort_baseline(&apply(y), None)?;
    Ok(trace_equal(&a.trace, &b.trace))
}
