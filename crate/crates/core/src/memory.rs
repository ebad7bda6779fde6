//! Instrumented server memory.
//!
//! Every client access goes through a [`Memory`], which stores the bucket
//! grid and flat arrays, appends to the [`Trace`], enforces the client's
//! working-set budget, and optionally models `D` disks with one head each.
//!
//! In disk mode each array occupies a contiguous address range on one disk.
//! An access whose start address differs from that disk's head first emits a
//! `move`; the head then advances past the range and wraps to address 0 at
//! the end of the disk. A wrap is not a move.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::params::{ClientMode, Params};
use crate::trace::{ArrayId, Op, Region, Trace, TraceEvent, TraceTotals};

/// Working-set limit for a constant-storage client.
pub const CONST_CLIENT_BUDGET: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryConfig {
    /// Bucket capacity, used for bucket-granularity accesses.
    pub z: usize,
    pub client_mode: ClientMode,
    /// Overrides the mode's default budget.
    pub budget: Option<usize>,
    pub disks: Option<usize>,
    /// Store individual trace events, not just totals.
    pub record: bool,
}

impl MemoryConfig {
    pub fn new(z: usize, client_mode: ClientMode) -> Self {
        MemoryConfig {
            z,
            client_mode,
            budget: None,
            disks: None,
            record: true,
        }
    }

    pub fn with_disks(mut self, disks: Option<usize>) -> Self {
        self.disks = disks;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn counting_only(mut self) -> Self {
        self.record = false;
        self
    }

    fn budget_limit(&self) -> usize {
        self.budget.unwrap_or(match self.client_mode {
            ClientMode::BucketClient => 2 * self.z,
            ClientMode::ConstClient => CONST_CLIENT_BUDGET,
        })
    }
}

#[derive(Debug)]
struct Array {
    slots: Vec<Element>,
    len: usize,
    /// `(disk, base address)` in disk mode.
    place: Option<(usize, u64)>,
}

#[derive(Debug)]
struct Disks {
    heads: Vec<Option<u64>>,
    extents: Vec<u64>,
}

/// Client-side operation counters that are not memory accesses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub element_reads: u64,
    pub element_writes: u64,
    pub moves: u64,
    pub comparisons: u64,
}

impl Counters {
    pub fn accesses(&self) -> u64 {
        self.element_reads + self.element_writes
    }

    /// Counter deltas accumulated since `earlier`.
    pub fn since(&self, earlier: &Counters) -> Counters {
        Counters {
            element_reads: self.element_reads - earlier.element_reads,
            element_writes: self.element_writes - earlier.element_writes,
            moves: self.moves - earlier.moves,
            comparisons: self.comparisons - earlier.comparisons,
        }
    }
}

#[derive(Debug)]
pub struct Memory {
    config: MemoryConfig,
    limit: usize,
    held: usize,
    arrays: Vec<Array>,
    levels: Vec<Option<ArrayId>>,
    disks: Option<Disks>,
    trace: Trace,
    comparisons: u64,
}

impl Memory {
    pub fn new(config: MemoryConfig) -> Self {
        let disks = config.disks.map(|d| Disks {
            heads: vec![None; d],
            extents: vec![0; d],
        });
        Memory {
            limit: config.budget_limit(),
            held: 0,
            arrays: Vec::new(),
            levels: Vec::new(),
            disks,
            trace: if config.record {
                Trace::recording()
            } else {
                Trace::counting()
            },
            comparisons: 0,
            config,
        }
    }

    pub fn for_params(params: &Params) -> Self {
        Memory::new(MemoryConfig::new(params.z, params.client_mode).with_disks(params.disks))
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn z(&self) -> usize {
        self.config.z
    }

    pub fn disk_count(&self) -> Option<usize> {
        self.disks.as_ref().map(|d| d.heads.len())
    }

    pub fn budget(&self) -> usize {
        self.limit
    }

    /// Elements currently held by the client.
    pub fn held(&self) -> usize {
        self.held
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn counters(&self) -> Counters {
        let t = self.trace.totals();
        Counters {
            element_reads: t.element_reads,
            element_writes: t.element_writes,
            moves: t.total_moves(),
            comparisons: self.comparisons,
        }
    }

    pub fn totals(&self) -> &TraceTotals {
        self.trace.totals()
    }

    pub fn count_comparisons(&mut self, k: u64) {
        self.comparisons += k;
    }

    // ---- allocation (untraced) ----

    /// Allocates an array of `len` dummy slots. In disk mode it is placed at
    /// the end of disk `disk % D`; the argument is ignored on flat memory.
    pub fn alloc(&mut self, len: usize, disk: usize) -> ArrayId {
        self.insert(vec![Element::dummy(); len], disk)
    }

    /// Places caller-provided data in server memory without tracing it; this
    /// models the input already residing on the server.
    pub fn load(&mut self, data: Vec<Element>, disk: usize) -> ArrayId {
        self.insert(data, disk)
    }

    fn insert(&mut self, slots: Vec<Element>, disk: usize) -> ArrayId {
        let len = slots.len();
        let place = self.disks.as_mut().map(|d| {
            let disk = disk % d.extents.len();
            let base = d.extents[disk];
            d.extents[disk] += len as u64;
            (disk, base)
        });
        let id = ArrayId(self.arrays.len() as u32);
        self.arrays.push(Array { slots, len, place });
        id
    }

    /// Drops an array's contents. Its disk extent stays reserved.
    pub fn free(&mut self, id: ArrayId) {
        self.arrays[id.0 as usize].slots = Vec::new();
    }

    pub fn len(&self, id: ArrayId) -> usize {
        self.arrays[id.0 as usize].len
    }

    pub fn disk_of(&self, id: ArrayId) -> Option<usize> {
        self.arrays[id.0 as usize].place.map(|(d, _)| d)
    }

    /// Untraced view of an array, for verification and result extraction.
    pub fn peek(&self, id: ArrayId) -> &[Element] {
        &self.arrays[id.0 as usize].slots
    }

    pub fn take(&mut self, id: ArrayId) -> Vec<Element> {
        std::mem::take(&mut self.arrays[id.0 as usize].slots)
    }

    // ---- bucket grid ----

    /// Binds grid level `level` to an array of `B * Z` slots.
    pub fn attach_level(&mut self, level: usize, id: ArrayId) {
        debug_assert_eq!(self.len(id) % self.config.z, 0);
        if self.levels.len() <= level {
            self.levels.resize(level + 1, None);
        }
        self.levels[level] = Some(id);
    }

    pub fn alloc_level(&mut self, level: usize, buckets: usize, disk: usize) -> ArrayId {
        let id = self.alloc(buckets * self.config.z, disk);
        self.attach_level(level, id);
        id
    }

    pub fn level(&self, level: usize) -> ArrayId {
        self.levels
            .get(level)
            .copied()
            .flatten()
            .unwrap_or_else(|| panic!("grid level {level} is not materialized"))
    }

    pub fn peek_level(&self, level: usize) -> &[Element] {
        self.peek(self.level(level))
    }

    pub fn read_bucket(&mut self, level: usize, index: usize) -> Result<Vec<Element>> {
        let z = self.config.z;
        if self.config.client_mode == ClientMode::ConstClient {
            return Err(Error::BudgetExceeded {
                held: self.held,
                requested: z,
                limit: self.limit,
            });
        }
        self.acquire(z)?;
        let id = self.level(level);
        let region = Region::Bucket {
            level: level as u32,
            index: index as u32,
        };
        self.record(Op::Read, id, index * z, z, region);
        Ok(self.arrays[id.0 as usize].slots[index * z..(index + 1) * z].to_vec())
    }

    pub fn write_bucket(
        &mut self,
        level: usize,
        index: usize,
        contents: Vec<Element>,
    ) -> Result<()> {
        let z = self.config.z;
        if contents.len() != z {
            return Err(Error::InvalidParams(format!(
                "bucket write of {} slots, expected {z}",
                contents.len()
            )));
        }
        let id = self.level(level);
        let region = Region::Bucket {
            level: level as u32,
            index: index as u32,
        };
        self.record(Op::Write, id, index * z, z, region);
        self.held = self.held.saturating_sub(z);
        let slots = &mut self.arrays[id.0 as usize].slots[index * z..(index + 1) * z];
        for (slot, e) in slots.iter_mut().zip(contents) {
            *slot = e;
        }
        Ok(())
    }

    // ---- flat ranges ----

    pub fn read_range(&mut self, id: ArrayId, offset: usize, len: usize) -> Result<Vec<Element>> {
        self.acquire(len)?;
        self.record_flat(Op::Read, id, offset, len);
        Ok(self.arrays[id.0 as usize].slots[offset..offset + len].to_vec())
    }

    pub fn read_slot(&mut self, id: ArrayId, offset: usize) -> Result<Element> {
        self.acquire(1)?;
        self.record_flat(Op::Read, id, offset, 1);
        Ok(self.arrays[id.0 as usize].slots[offset].clone())
    }

    pub fn write_range(&mut self, id: ArrayId, offset: usize, data: Vec<Element>) -> Result<()> {
        let len = data.len();
        if len == 0 {
            return Ok(());
        }
        self.record_flat(Op::Write, id, offset, len);
        self.held = self.held.saturating_sub(len);
        let slots = &mut self.arrays[id.0 as usize].slots[offset..offset + len];
        for (slot, e) in slots.iter_mut().zip(data) {
            *slot = e;
        }
        Ok(())
    }

    pub fn write_slot(&mut self, id: ArrayId, offset: usize, e: Element) -> Result<()> {
        self.record_flat(Op::Write, id, offset, 1);
        self.held = self.held.saturating_sub(1);
        self.arrays[id.0 as usize].slots[offset] = e;
        Ok(())
    }

    /// The client drops `k` elements it read without writing them back.
    pub fn release(&mut self, k: usize) {
        self.held = self.held.saturating_sub(k);
    }

    fn acquire(&mut self, k: usize) -> Result<()> {
        if self.held + k > self.limit {
            return Err(Error::BudgetExceeded {
                held: self.held,
                requested: k,
                limit: self.limit,
            });
        }
        self.held += k;
        Ok(())
    }

    fn record_flat(&mut self, op: Op, id: ArrayId, offset: usize, len: usize) {
        let region = Region::Flat {
            array: id,
            offset: offset as u32,
            len: len as u32,
        };
        self.record(op, id, offset, len, region);
    }

    fn record(&mut self, op: Op, id: ArrayId, offset: usize, len: usize, region: Region) {
        let array = &self.arrays[id.0 as usize];
        debug_assert!(offset + len <= array.len, "access past the end of {id}");
        let mut disk = None;
        if let (Some(disks), Some((d, base))) = (self.disks.as_mut(), array.place) {
            let addr = base + offset as u64;
            if disks.heads[d] != Some(addr) {
                self.trace.push(TraceEvent::Move {
                    disk: d as u16,
                    addr,
                });
            }
            let mut next = addr + len as u64;
            if next >= disks.extents[d] {
                next -= disks.extents[d];
            }
            disks.heads[d] = Some(next);
            disk = Some(d as u16);
        }
        self.trace.push(TraceEvent::Access {
            op,
            region,
            disk,
            elements: len as u32,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_memory(z: usize, disks: usize) -> Memory {
        Memory::new(MemoryConfig::new(z, ClientMode::BucketClient).with_disks(Some(disks)))
    }

    #[test]
    fn rereading_a_bucket_seeks_again() {
        let mut mem = disk_memory(4, 1);
        mem.alloc_level(0, 2, 0);
        mem.read_bucket(0, 0).unwrap();
        assert_eq!(mem.totals().total_moves(), 1);
        mem.release(4);
        mem.read_bucket(0, 0).unwrap();
        assert_eq!(mem.totals().total_moves(), 2);
    }

    #[test]
    fn contiguous_buckets_need_one_seek() {
        let mut mem = disk_memory(4, 1);
        mem.alloc_level(0, 2, 0);
        mem.read_bucket(0, 0).unwrap();
        mem.read_bucket(0, 1).unwrap();
        assert_eq!(mem.totals().total_moves(), 1);
        assert_eq!(mem.totals().bucket_reads, 2);
        assert_eq!(mem.totals().element_reads, 8);
    }

    #[test]
    fn sequential_scan_moves_once_per_disk() {
        let mut mem =
            Memory::new(MemoryConfig::new(4, ClientMode::ConstClient).with_disks(Some(2)));
        let a = mem.alloc(100, 0);
        let b = mem.alloc(100, 1);
        for i in 0..100 {
            let e = mem.read_slot(a, i).unwrap();
            mem.write_slot(b, i, e).unwrap();
        }
        assert_eq!(mem.totals().moves, vec![1, 1]);
        assert!(mem.trace().totals_consistent());
    }

    #[test]
    fn head_wraps_without_a_move() {
        let mut mem =
            Memory::new(MemoryConfig::new(4, ClientMode::ConstClient).with_disks(Some(1)));
        let a = mem.alloc(3, 0);
        for _ in 0..3 {
            for i in 0..3 {
                mem.read_slot(a, i).unwrap();
                mem.release(1);
            }
        }
        assert_eq!(mem.totals().total_moves(), 1);
    }

    #[test]
    fn third_bucket_exceeds_two_bucket_budget() {
        let mut mem = Memory::new(MemoryConfig::new(4, ClientMode::BucketClient));
        mem.alloc_level(0, 4, 0);
        mem.read_bucket(0, 0).unwrap();
        mem.read_bucket(0, 1).unwrap();
        let err = mem.read_bucket(0, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExceeded {
                held: 8,
                requested: 4,
                limit: 8
            }
        ));
        // Writing one bucket back frees room again.
        let contents = vec![Element::dummy(); 4];
        mem.write_bucket(0, 3, contents).unwrap();
        mem.read_bucket(0, 2).unwrap();
    }

    #[test]
    fn const_client_cannot_read_buckets() {
        let mut mem = Memory::new(MemoryConfig::new(4, ClientMode::ConstClient));
        mem.alloc_level(0, 2, 0);
        assert!(mem.read_bucket(0, 0).is_err());
        let id = mem.level(0);
        for i in 0..CONST_CLIENT_BUDGET {
            mem.read_slot(id, i % 8).unwrap();
        }
        assert!(mem.read_slot(id, 0).is_err());
    }

    #[test]
    fn budget_is_exact_for_synthetic_programs() {
        // A program that holds at most `peak` elements succeeds iff
        // `peak <= budget`.
        for peak in 1..=12 {
            let mut mem = Memory::new(MemoryConfig::new(4, ClientMode::ConstClient));
            let a = mem.alloc(64, 0);
            let mut ok = true;
            for round in 0..4 {
                for k in 0..peak {
                    if mem.read_slot(a, round * 12 + k).is_err() {
                        ok = false;
                    }
                }
                mem.release(peak);
            }
            assert_eq!(ok, peak <= CONST_CLIENT_BUDGET, "peak {peak}");
        }
    }

    #[test]
    fn counters_match_trace() {
        let mut mem = Memory::new(MemoryConfig::new(2, ClientMode::BucketClient));
        let a = mem.alloc(10, 0);
        let data = mem.read_range(a, 2, 3).unwrap();
        mem.write_range(a, 5, data).unwrap();
        mem.count_comparisons(7);
        let c = mem.counters();
        assert_eq!(
            (c.element_reads, c.element_writes, c.comparisons),
            (3, 3, 7)
        );
        assert_eq!(mem.trace().len(), 2);
        assert_eq!(mem.held(), 0);
    }
}
