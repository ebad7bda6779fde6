//! Bucket oblivious random permutation.
//!
//! Bin assignment, then each final bucket drops its dummies and has its reals
//! permuted, and the buckets are concatenated. The output array reveals the
//! loads vector and nothing else.

use crate::bin_assign::{check_input, place, route_levels, LevelObserver, RoutedGrid};
use crate::bitonic::bitonic_sort;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::memory::{Counters, Memory, MemoryConfig};
use crate::params::{ClientMode, Params};
use crate::rng::{Purpose, RngStream, StreamTag};
use crate::trace::{ArrayId, Trace};

/// Bits per random label in the constant-storage bucket permutation.
pub const DEFAULT_LABEL_WIDTH: u32 = 64;

/// Counter deltas per phase of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseCosts {
    /// Level-0 placement of the input groups.
    pub setup: Counters,
    /// The butterfly levels.
    pub routing: Counters,
    /// Per-bucket permutation and dummy removal.
    pub emission: Counters,
    /// Non-oblivious sort after the permutation.
    pub sort: Counters,
}

impl PhaseCosts {
    /// Accesses of routing, emission and sort; the placement is left out.
    pub fn accesses(&self) -> u64 {
        self.routing.accesses() + self.emission.accesses() + self.sort.accesses()
    }

    pub fn comparisons(&self) -> u64 {
        self.setup.comparisons
            + self.routing.comparisons
            + self.emission.comparisons
            + self.sort.comparisons
    }
}

#[derive(Clone, Debug)]
pub struct PermutationOutput {
    pub output: Vec<Element>,
    pub loads: Vec<usize>,
    pub phases: PhaseCosts,
    pub trace: Trace,
    pub counters: Counters,
}

/// Knobs that do not change the algorithm's output distribution.
#[derive(Clone, Copy, Debug)]
pub struct OrpOptions {
    pub label_width: u32,
    /// Keep the full event list, not just the totals.
    pub record: bool,
}

impl Default for OrpOptions {
    fn default() -> Self {
        OrpOptions {
            label_width: DEFAULT_LABEL_WIDTH,
            record: true,
        }
    }
}

/// Permuted reals of one bucket held in client storage. Dummies are dropped.
pub fn permute_bucket_local(contents: &[Element], rng: &mut RngStream) -> Vec<Element> {
    let mut reals: Vec<Element> = contents.iter().filter(|e| e.is_real).cloned().collect();
    rng.shuffle(&mut reals);
    reals
}

fn check_label_width(w: u32, z: usize) -> Result<()> {
    let zz = (z as u128) * (z as u128);
    if w == 0 || w > 64 || (1u128 << w) < zz {
        return Err(Error::LabelWidthTooSmall { width: w, z });
    }
    Ok(())
}

/// Permutes the `z` slots of `array` at `offset` by sorting on random
/// `w`-bit labels, dummies last. A scan over adjacent reals detects label
/// collisions; on one the labels are redrawn and the sort repeated. Returns
/// the number of attempts.
pub fn permute_bucket_labels_at(
    mem: &mut Memory,
    array: ArrayId,
    offset: usize,
    z: usize,
    rng: &mut RngStream,
    w: u32,
) -> Result<u32> {
    check_label_width(w, z)?;
    if z == 0 {
        return Ok(0);
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        for s in 0..z {
            let mut e = mem.read_slot(array, offset + s)?;
            e.tag = if e.is_real { rng.draw_bits(w) } else { 0 };
            mem.write_slot(array, offset + s, e)?;
        }
        bitonic_sort(mem, array, offset, z, |e| (e.is_dummy(), e.tag))?;

        let mut collision = false;
        let mut prev = mem.read_slot(array, offset)?;
        for s in 1..z {
            let cur = mem.read_slot(array, offset + s)?;
            mem.count_comparisons(1);
            collision |= prev.is_real && cur.is_real && prev.tag == cur.tag;
            mem.release(1);
            prev = cur;
        }
        mem.release(1);
        if !collision {
            return Ok(attempts);
        }
        log::debug!("label collision in bucket at slot {offset}, redrawing");
    }
}

/// [`permute_bucket_labels_at`] on a scratch constant-storage memory.
pub fn permute_bucket_labels(
    contents: &[Element],
    rng: &mut RngStream,
    w: u32,
) -> Result<Vec<Element>> {
    let z = contents.len();
    let mut mem = Memory::new(MemoryConfig::new(z.max(2), ClientMode::ConstClient).counting_only());
    let a = mem.load(contents.to_vec(), 0);
    permute_bucket_labels_at(&mut mem, a, 0, z, rng, w)?;
    Ok(mem.take(a).into_iter().filter(|e| e.is_real).collect())
}

/// Runs the permutation on an input already resident in `mem`. Returns the
/// output array (exactly `n` reals) and the loads vector.
pub fn bucket_orp_in(
    mem: &mut Memory,
    input: ArrayId,
    params: &Params,
    options: &OrpOptions,
    phases: &mut PhaseCosts,
    observer: Option<LevelObserver<'_>>,
) -> Result<(ArrayId, Vec<usize>)> {
    let mut labels = RngStream::new(params.seed, StreamTag::LABELS);
    let mut perm = RngStream::new(params.seed, StreamTag::BUCKET_PERMUTATION);

    let c0 = mem.counters();
    place(mem, input, params, &mut labels)?;
    let c1 = mem.counters();
    let grid = route_levels(mem, params, observer)?;
    let c2 = mem.counters();
    let (out, loads) = emit(mem, grid, params, options, &mut perm)?;
    let c3 = mem.counters();
    phases.setup = c1.since(&c0);
    phases.routing = c2.since(&c1);
    phases.emission = c3.since(&c2);
    Ok((out, loads))
}

fn emit(
    mem: &mut Memory,
    grid: RoutedGrid,
    params: &Params,
    options: &OrpOptions,
    perm: &mut RngStream,
) -> Result<(ArrayId, Vec<usize>)> {
    let z = params.z;
    let disks = params.disks.unwrap_or(1);
    let out_disk = (mem.disk_of(grid.array).unwrap_or(0) + 1) % disks;
    let out = mem.alloc(params.n, out_disk);
    let mut loads = Vec::with_capacity(params.b);
    let mut offset = 0;
    match params.client_mode {
        ClientMode::BucketClient => {
            for b in 0..params.b {
                let contents = mem.read_bucket(grid.level, b)?;
                let reals = permute_bucket_local(&contents, perm);
                mem.release(z - reals.len());
                loads.push(reals.len());
                offset += reals.len();
                mem.write_range(out, offset - reals.len(), reals)?;
            }
        }
        ClientMode::ConstClient => {
            for b in 0..params.b {
                permute_bucket_labels_at(mem, grid.array, b * z, z, perm, options.label_width)?;
                let mut k = 0;
                for s in 0..z {
                    let e = mem.read_slot(grid.array, b * z + s)?;
                    if e.is_real {
                        mem.write_slot(out, offset + k, e)?;
                        k += 1;
                    } else {
                        mem.release(1);
                    }
                }
                loads.push(k);
                offset += k;
            }
        }
    }
    mem.free(grid.array);
    debug_assert_eq!(offset, params.n);
    Ok((out, loads))
}

/// Oblivious random permutation of `input`. Overflow is returned as an
/// error, never retried here; see [`bucket_orp_with_retry`].
pub fn bucket_orp(input: &[Element], params: &Params) -> Result<PermutationOutput> {
    bucket_orp_with(input, params, &OrpOptions::default())
}

pub fn bucket_orp_with(
    input: &[Element],
    params: &Params,
    options: &OrpOptions,
) -> Result<PermutationOutput> {
    check_input(input, params)?;
    let mut config = MemoryConfig::new(params.z, params.client_mode).with_disks(params.disks);
    if !options.record {
        config = config.counting_only();
    }
    let mut mem = Memory::new(config);
    let x = mem.load(input.to_vec(), 0);
    let mut phases = PhaseCosts::default();
    let (out, loads) = bucket_orp_in(&mut mem, x, params, options, &mut phases, None)?;
    let output = mem.take(out);
    let counters = mem.counters();
    Ok(PermutationOutput {
        output,
        loads,
        phases,
        trace: mem.into_trace(),
        counters,
    })
}

/// Seed for retry `attempt` of a run seeded with `seed`.
pub fn retry_seed(seed: u64, attempt: u64) -> u64 {
    use rand::RngCore;
    RngStream::new(seed, StreamTag::new(Purpose::Retry, attempt)).next_u64()
}

/// Calls `run` with `params`, and on overflow again with a fresh seed, up to
/// `max_retries` more times. Returns the result and the retry count. No
/// uniformity claim is made for outputs obtained after a retry.
pub fn with_retry<T>(
    params: &Params,
    max_retries: u32,
    mut run: impl FnMut(&Params) -> Result<T>,
) -> Result<(T, u32)> {
    let mut p = params.clone();
    let mut retries = 0;
    loop {
        match run(&p) {
            Err(e) if e.is_overflow() && retries < max_retries => {
                retries += 1;
                p.seed = retry_seed(params.seed, u64::from(retries));
                log::warn!("{e}; retry {retries} with seed {:#x}", p.seed);
            }
            other => return other.map(|v| (v, retries)),
        }
    }
}

pub fn bucket_orp_with_retry(
    input: &[Element],
    params: &Params,
    max_retries: u32,
) -> Result<(PermutationOutput, u32)> {
    with_retry(params, max_retries, |p| bucket_orp(input, p))
}
