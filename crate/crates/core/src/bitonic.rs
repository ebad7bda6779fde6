//! Bitonic sorting networks: schedule generation, traced execution over
//! [`Memory`], and pass-major ("striped") execution over many equal-length
//! segments of one array.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::memory::Memory;
use crate::trace::ArrayId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Ascending,
    Descending,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Comparator {
    pub low: usize,
    pub high: usize,
    pub direction: Direction,
}

impl Comparator {
    /// Whether the pair must be exchanged. Equal keys never swap.
    pub fn swaps<K: Ord>(&self, low: &K, high: &K) -> bool {
        match self.direction {
            Direction::Ascending => low > high,
            Direction::Descending => low < high,
        }
    }
}

/// One layer of the network: every index `p` with bit `stride` clear is
/// compared with `p + stride`. The direction is ascending when bit `block`
/// of `p` is clear (and always for the final merge, where `block == m`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pass {
    pub block: usize,
    pub stride: usize,
}

impl Pass {
    pub fn comparator(&self, low: usize) -> Comparator {
        let direction = if low & self.block == 0 {
            Direction::Ascending
        } else {
            Direction::Descending
        };
        Comparator {
            low,
            high: low + self.stride,
            direction,
        }
    }

    pub fn comparators(&self, m: usize) -> impl Iterator<Item = Comparator> + '_ {
        let stride = self.stride;
        (0..m)
            .filter(move |p| p & stride == 0)
            .map(move |p| self.comparator(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparatorSchedule {
    m: usize,
    passes: Vec<Pass>,
}

/// Exact comparator count of the network on `m` inputs:
/// `(m/4) * log2(m) * (log2(m) + 1)`.
pub fn comparator_count(m: usize) -> u64 {
    let lg = m.trailing_zeros() as u64;
    (m as u64 / 2) * lg * (lg + 1) / 2
}

/// Builds the standard recursive bitonic network for `m` inputs.
pub fn bitonic_schedule(m: usize) -> Result<ComparatorSchedule> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidLength(m));
    }
    let mut passes = Vec::new();
    let mut block = 2;
    while block <= m {
        let mut stride = block / 2;
        while stride > 0 {
            passes.push(Pass { block, stride });
            stride /= 2;
        }
        block *= 2;
    }
    Ok(ComparatorSchedule { m, passes })
}

impl ComparatorSchedule {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn passes(&self) -> &[Pass] {
        &self.passes
    }

    pub fn depth(&self) -> usize {
        self.passes.len()
    }

    pub fn comparator_count(&self) -> u64 {
        self.passes.len() as u64 * (self.m as u64 / 2)
    }

    pub fn comparators(&self) -> impl Iterator<Item = Comparator> + '_ {
        self.passes.iter().flat_map(|p| p.comparators(self.m))
    }

    /// Runs the network over an in-client slice.
    pub fn apply_by_key<T, K: Ord>(&self, items: &mut [T], key: impl Fn(&T) -> K) {
        assert_eq!(items.len(), self.m);
        for c in self.comparators() {
            if c.swaps(&key(&items[c.low]), &key(&items[c.high])) {
                items.swap(c.low, c.high);
            }
        }
    }

    pub fn apply<T: Ord>(&self, items: &mut [T]) {
        assert_eq!(items.len(), self.m);
        for c in self.comparators() {
            if c.swaps(&items[c.low], &items[c.high]) {
                items.swap(c.low, c.high);
            }
        }
    }
}

/// Sorts `len` slots of `array` starting at `offset` through traced
/// memory. Each comparator reads both slots and writes both back, so the
/// run costs exactly four element accesses per comparator and its trace
/// depends only on `len`.
pub fn bitonic_sort<K: Ord>(
    mem: &mut Memory,
    array: ArrayId,
    offset: usize,
    len: usize,
    key: impl Fn(&Element) -> K,
) -> Result<()> {
    let schedule = bitonic_schedule(len)?;
    for pass in schedule.passes() {
        run_pass(mem, array, offset, len, *pass, &key)?;
    }
    Ok(())
}

fn run_pass<K: Ord>(
    mem: &mut Memory,
    array: ArrayId,
    offset: usize,
    m: usize,
    pass: Pass,
    key: &impl Fn(&Element) -> K,
) -> Result<()> {
    for c in pass.comparators(m) {
        let a = mem.read_slot(array, offset + c.low)?;
        let b = mem.read_slot(array, offset + c.high)?;
        mem.count_comparisons(1);
        let (a, b) = if c.swaps(&key(&a), &key(&b)) {
            (b, a)
        } else {
            (a, b)
        };
        mem.write_slot(array, offset + c.low, a)?;
        mem.write_slot(array, offset + c.high, b)?;
    }
    Ok(())
}

/// Sorts every length-`k` segment of `array` ascending, running each pass
/// of the network across all segments before the next pass starts.
///
/// On flat memory (or without a `scratch_disk`) the passes run in place,
/// slot by slot. In disk mode the array is streamed between itself and a
/// scratch array on `scratch_disk`: each pass is one sequential read sweep
/// and one sequential write sweep, and the client holds one compare block
/// (`2 * stride <= k` elements) at a time. The number of head moves then
/// depends on `k` alone, not on the segment count. Returns the array that
/// holds the sorted result.
pub fn concurrent_bitonic<K: Ord>(
    mem: &mut Memory,
    array: ArrayId,
    k: usize,
    scratch_disk: Option<usize>,
    key: impl Fn(&Element) -> K,
) -> Result<ArrayId> {
    let schedule = bitonic_schedule(k)?;
    let total = mem.len(array);
    if !total.is_multiple_of(k) {
        return Err(Error::InvalidParams(format!(
            "array of {total} slots is not a whole number of {k}-slot segments"
        )));
    }
    let scratch_disk = scratch_disk.filter(|_| mem.disk_count().is_some());
    let Some(disk) = scratch_disk else {
        for pass in schedule.passes() {
            for seg in (0..total).step_by(k) {
                run_pass(mem, array, seg, k, *pass, &key)?;
            }
        }
        return Ok(array);
    };

    let mut src = array;
    let mut dst = mem.alloc(total, disk);
    for pass in schedule.passes() {
        let width = 2 * pass.stride;
        for start in (0..total).step_by(width) {
            let mut block = mem.read_range(src, start, width)?;
            let local = start % k;
            for t in 0..pass.stride {
                let c = pass.comparator(local + t);
                mem.count_comparisons(1);
                if c.swaps(&key(&block[t]), &key(&block[t + pass.stride])) {
                    block.swap(t, t + pass.stride);
                }
            }
            mem.write_range(dst, start, block)?;
        }
        std::mem::swap(&mut src, &mut dst);
    }
    mem.free(dst);
    Ok(src)
}
