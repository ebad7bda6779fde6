//! Oblivious random bin assignment.
//!
//! Every element draws a uniformly random destination bucket; the elements
//! are then routed through `log2 B` butterfly levels of MergeSplit calls.
//! Which buckets are read and written never depends on the data: labels only
//! change bucket *contents*.

use crate::bitonic::{bitonic_sort, concurrent_bitonic};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::memory::{Counters, Memory};
use crate::params::{label_bit, merge_split_indices, ClientMode, Engine, Params};
use crate::rng::{RngStream, StreamTag};
use crate::trace::{ArrayId, Trace};

/// Splits the reals of `a0 ∪ a1` by the `(level+1)`-st most significant bit
/// of their routing labels.
///
/// Each output holds its reals first (those from `a0` before those from
/// `a1`, in slot order) and is padded with dummies to `Z = a0.len()` slots.
/// On overflow the error's `bucket` is the overflowing side, 0 or 1.
pub fn merge_split(
    a0: &[Element],
    a1: &[Element],
    level: usize,
    label_bits: u32,
) -> Result<(Vec<Element>, Vec<Element>)> {
    let z = a0.len();
    debug_assert_eq!(a1.len(), z);
    let mut out = [Vec::with_capacity(z), Vec::with_capacity(z)];
    for e in a0.iter().chain(a1).filter(|e| e.is_real) {
        let side = label_bit(e.routing_label, level, label_bits) as usize;
        if out[side].len() == z {
            return Err(Error::Overflow {
                level,
                bucket: side,
            });
        }
        out[side].push(e.clone());
    }
    let [mut lo, mut hi] = out;
    lo.resize(z, Element::dummy());
    hi.resize(z, Element::dummy());
    Ok((lo, hi))
}

fn pack_tag(side: u64, dummy: bool, slot: usize) -> u64 {
    (side << 40) | (u64::from(dummy) << 39) | slot as u64
}

/// Constant-storage MergeSplit over traced memory.
///
/// Reads buckets `in0` and `in1` of grid level `level` and fills the two
/// adjacent output buckets starting at `out0` in level `level + 1`: a
/// counting scan copies all `2Z` slots to the output while counting reals per
/// side, a tagging scan marks `Z - c0` dummies for side 0 and the rest for
/// side 1, and one bitonic sort on `(side, is_dummy, source slot)` finishes
/// the split. The access sequence depends only on `Z`.
pub fn merge_split_bitonic_at(
    mem: &mut Memory,
    level: usize,
    in0: usize,
    in1: usize,
    out0: usize,
    label_bits: u32,
) -> Result<()> {
    let z = mem.z();
    let src = mem.level(level);
    let dst = mem.level(level + 1);
    let base = out0 * z;

    let mut counts = [0usize; 2];
    for s in 0..2 * z {
        let from = if s < z { in0 * z + s } else { in1 * z + s - z };
        let mut e = mem.read_slot(src, from)?;
        e.tag = if e.is_real {
            let side = label_bit(e.routing_label, level, label_bits);
            counts[side as usize] += 1;
            pack_tag(side as u64, false, s)
        } else {
            pack_tag(0, true, s)
        };
        mem.write_slot(dst, base + s, e)?;
    }
    for (side, &c) in counts.iter().enumerate() {
        if c > z {
            return Err(Error::Overflow {
                level,
                bucket: out0 + side,
            });
        }
    }

    let mut zero_dummies = z - counts[0];
    for s in 0..2 * z {
        let mut e = mem.read_slot(dst, base + s)?;
        if !e.is_real {
            let side = if zero_dummies > 0 {
                zero_dummies -= 1;
                0
            } else {
                1
            };
            e.tag = pack_tag(side, true, s);
        }
        mem.write_slot(dst, base + s, e)?;
    }

    bitonic_sort(mem, dst, base, 2 * z, |e| e.tag)
}

/// [`merge_split_bitonic_at`] on a scratch constant-storage memory, for
/// comparing against [`merge_split`] directly.
pub fn merge_split_bitonic(
    a0: &[Element],
    a1: &[Element],
    level: usize,
    label_bits: u32,
) -> Result<(Vec<Element>, Vec<Element>)> {
    let z = a0.len();
    let mut mem =
        Memory::new(crate::memory::MemoryConfig::new(z, ClientMode::ConstClient).counting_only());
    let input = mem.load(a0.iter().chain(a1).cloned().collect(), 0);
    mem.attach_level(level, input);
    mem.alloc_level(level + 1, 2, 0);
    merge_split_bitonic_at(&mut mem, level, 0, 1, 0, label_bits)?;
    let mut out = mem.take(mem.level(level + 1));
    let hi = out.split_off(z);
    Ok((out, hi))
}

/// Final grid level of a bin assignment still resident in memory.
#[derive(Clone, Copy, Debug)]
pub struct RoutedGrid {
    pub level: usize,
    pub array: ArrayId,
}

/// Per-level hook: `(level, slots)` after each level is complete, level 0
/// included.
pub type LevelObserver<'a> = &'a mut dyn FnMut(usize, &[Element]);

/// Draws labels, lays the input out as padded level-0 buckets and routes it
/// through every level. `input` must hold `params.n` reals.
pub fn route(
    mem: &mut Memory,
    input: ArrayId,
    params: &Params,
    labels: &mut RngStream,
    observer: Option<LevelObserver<'_>>,
) -> Result<RoutedGrid> {
    place(mem, input, params, labels)?;
    route_levels(mem, params, observer)
}

/// Level-0 placement: group `g` of the input, labelled in input order and
/// padded with dummies, becomes bucket `g`.
pub fn place(
    mem: &mut Memory,
    input: ArrayId,
    params: &Params,
    labels: &mut RngStream,
) -> Result<()> {
    let first_disk = mem.disk_of(input).map_or(0, |d| d + 1);
    mem.alloc_level(0, params.b, first_disk);
    place_groups(mem, input, params, labels)
}

fn striped(params: &Params) -> bool {
    params.disks.is_some() && params.client_mode == ClientMode::BucketClient
}

/// Runs the `log2 B` butterfly levels over a placed level 0.
pub fn route_levels(
    mem: &mut Memory,
    params: &Params,
    mut observer: Option<LevelObserver<'_>>,
) -> Result<RoutedGrid> {
    let disks = params.disks.unwrap_or(1);
    if let Some(f) = observer.as_mut() {
        f(0, mem.peek_level(0));
    }
    let label_bits = params.label_bits();
    for i in 0..params.levels() {
        if striped(params) {
            route_level_striped(mem, params, i, disks)?;
        } else {
            let here = mem.disk_of(mem.level(i)).unwrap_or(0);
            mem.alloc_level(i + 1, params.b, (here + 1) % disks);
            for j in 0..params.b / 2 {
                let (in0, in1, out0, out1) = merge_split_indices(i, j, params.b);
                match params.engine {
                    Engine::Direct => {
                        let a0 = mem.read_bucket(i, in0)?;
                        let a1 = mem.read_bucket(i, in1)?;
                        let (b0, b1) = merge_split(&a0, &a1, i, label_bits)
                            .map_err(|e| remap_overflow(e, out0))?;
                        mem.write_bucket(i + 1, out0, b0)?;
                        mem.write_bucket(i + 1, out1, b1)?;
                    }
                    Engine::Bitonic => {
                        merge_split_bitonic_at(mem, i, in0, in1, out0, label_bits)?;
                    }
                }
            }
        }
        if let Some(f) = observer.as_mut() {
            f(i + 1, mem.peek_level(i + 1));
        }
        let done = mem.level(i);
        mem.free(done);
    }
    Ok(RoutedGrid {
        level: params.levels(),
        array: mem.level(params.levels()),
    })
}

fn remap_overflow(e: Error, out0: usize) -> Error {
    match e {
        Error::Overflow { level, bucket } => Error::Overflow {
            level,
            bucket: out0 + bucket,
        },
        other => other,
    }
}

fn place_groups(
    mem: &mut Memory,
    input: ArrayId,
    params: &Params,
    labels: &mut RngStream,
) -> Result<()> {
    let z = params.z;
    match params.client_mode {
        ClientMode::BucketClient => {
            for g in 0..params.b {
                let mut group =
                    mem.read_range(input, params.group_start(g), params.group_size(g))?;
                for e in &mut group {
                    e.routing_label = labels.draw_label(params.b);
                }
                group.resize(z, Element::dummy());
                mem.write_bucket(0, g, group)?;
            }
        }
        ClientMode::ConstClient => {
            let level0 = mem.level(0);
            for g in 0..params.b {
                let start = params.group_start(g);
                for s in 0..z {
                    let e = if s < params.group_size(g) {
                        let mut e = mem.read_slot(input, start + s)?;
                        e.routing_label = labels.draw_label(params.b);
                        e
                    } else {
                        Element::dummy()
                    };
                    mem.write_slot(level0, g * z + s, e)?;
                }
            }
        }
    }
    Ok(())
}

/// One butterfly level laid out for sequential disk access.
///
/// A split sweep streams level `i` once and writes the buckets with bit `i`
/// clear and set to two arrays on two other disks, both in ascending order.
/// MergeSplit `j` then reads entry `j` of each, so the inputs arrive as two
/// sequential streams and the outputs leave as one.
fn route_level_striped(mem: &mut Memory, params: &Params, i: usize, disks: usize) -> Result<()> {
    let z = params.z;
    let b = params.b;
    let src = mem.level(i);
    let home = mem.disk_of(src).unwrap_or(0);
    let lo = mem.alloc(b / 2 * z, (home + 1) % disks);
    let hi = mem.alloc(b / 2 * z, (home + 2) % disks);
    for bucket in 0..b {
        let contents = mem.read_bucket(i, bucket)?;
        let rank = ((bucket >> (i + 1)) << i) | (bucket & ((1 << i) - 1));
        let half = if bucket & (1 << i) == 0 { lo } else { hi };
        mem.write_range(half, rank * z, contents)?;
    }

    let label_bits = params.label_bits();
    match params.engine {
        Engine::Direct => {
            mem.alloc_level(i + 1, b, home);
            for j in 0..b / 2 {
                let a0 = mem.read_range(lo, j * z, z)?;
                let a1 = mem.read_range(hi, j * z, z)?;
                let (b0, b1) =
                    merge_split(&a0, &a1, i, label_bits).map_err(|e| remap_overflow(e, 2 * j))?;
                mem.write_bucket(i + 1, 2 * j, b0)?;
                mem.write_bucket(i + 1, 2 * j + 1, b1)?;
            }
        }
        Engine::Bitonic => {
            let segments = mem.alloc(b * z, home);
            for j in 0..b / 2 {
                let mut pair = mem.read_range(lo, j * z, z)?;
                pair.extend(mem.read_range(hi, j * z, z)?);
                let mut counts = [0usize; 2];
                for (s, e) in pair.iter_mut().enumerate() {
                    if e.is_real {
                        let side = label_bit(e.routing_label, i, label_bits) as u64;
                        counts[side as usize] += 1;
                        e.tag = pack_tag(side, false, s);
                    }
                }
                for (side, &c) in counts.iter().enumerate() {
                    if c > z {
                        return Err(Error::Overflow {
                            level: i,
                            bucket: 2 * j + side,
                        });
                    }
                }
                let mut zero_dummies = z - counts[0];
                for (s, e) in pair.iter_mut().enumerate().filter(|(_, e)| !e.is_real) {
                    let side = if zero_dummies > 0 {
                        zero_dummies -= 1;
                        0
                    } else {
                        1
                    };
                    e.tag = pack_tag(side, true, s);
                }
                mem.write_range(segments, 2 * j * z, pair)?;
            }
            let sorted = concurrent_bitonic(mem, segments, 2 * z, Some(home + 1), |e| e.tag)?;
            mem.attach_level(i + 1, sorted);
        }
    }
    mem.free(lo);
    mem.free(hi);
    Ok(())
}

/// Outcome of a standalone bin assignment.
#[derive(Clone, Debug)]
pub struct AssignmentResult {
    pub z: usize,
    /// Final level, `B * Z` slots.
    pub buckets: Vec<Element>,
    /// Real elements per final bucket.
    pub loads: Vec<usize>,
    pub trace: Trace,
    pub counters: Counters,
}

impl AssignmentResult {
    pub fn bucket(&self, index: usize) -> &[Element] {
        &self.buckets[index * self.z..(index + 1) * self.z]
    }
}

/// Real-element count of every `z`-slot bucket in `slots`.
pub fn bucket_loads(slots: &[Element], z: usize) -> Vec<usize> {
    slots
        .chunks(z)
        .map(|b| b.iter().filter(|e| e.is_real).count())
        .collect()
}

/// Runs a bin assignment of `input` on a fresh memory. Labels come from the
/// `(params.seed, LABELS)` stream, one per element in input order.
pub fn random_bin_assignment(input: &[Element], params: &Params) -> Result<AssignmentResult> {
    random_bin_assignment_observed(input, params, None)
}

pub fn random_bin_assignment_observed(
    input: &[Element],
    params: &Params,
    observer: Option<LevelObserver<'_>>,
) -> Result<AssignmentResult> {
    check_input(input, params)?;
    let mut mem = Memory::for_params(params);
    let x = mem.load(input.to_vec(), 0);
    let mut labels = RngStream::new(params.seed, StreamTag::LABELS);
    let grid = route(&mut mem, x, params, &mut labels, observer)?;
    let buckets = mem.take(grid.array);
    let loads = bucket_loads(&buckets, params.z);
    let counters = mem.counters();
    Ok(AssignmentResult {
        z: params.z,
        buckets,
        loads,
        trace: mem.into_trace(),
        counters,
    })
}

pub(crate) fn check_input(input: &[Element], params: &Params) -> Result<()> {
    if input.len() != params.n {
        return Err(Error::InvalidParams(format!(
            "input has {} elements, params expect {}",
            input.len(),
            params.n
        )));
    }
    if input.iter().any(|e| !e.is_real) {
        return Err(Error::Input("inputs must be real elements".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::from_keys;
    use crate::params::derive_params;
    use crate::trace::trace_equal;

    fn labeled(label: u32) -> Element {
        Element {
            routing_label: label,
            ..Element::real(label as u64)
        }
    }

    #[test]
    fn msb_split_example() {
        let a0 = vec![labeled(0b00), labeled(0b10)];
        let a1 = vec![labeled(0b01), Element::dummy()];
        let (lo, hi) = merge_split(&a0, &a1, 0, 2).unwrap();
        assert_eq!(lo, vec![labeled(0b00), labeled(0b01)]);
        assert_eq!(hi, vec![labeled(0b10), Element::dummy()]);

        let (blo, bhi) = merge_split_bitonic(&a0, &a1, 0, 2).unwrap();
        let values = |v: &[Element]| v.iter().map(|e| e.value().map(|x| x.0)).collect::<Vec<_>>();
        assert_eq!(values(&blo), values(&lo));
        assert_eq!(values(&bhi), values(&hi));
    }

    #[test]
    fn overflow_is_reported() {
        let a0 = vec![labeled(0), labeled(1)];
        let a1 = vec![labeled(0), Element::dummy()];
        let err = merge_split(&a0, &a1, 0, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::Overflow {
                level: 0,
                bucket: 0
            }
        ));
        let err = merge_split_bitonic(&a0, &a1, 0, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::Overflow {
                level: 0,
                bucket: 0
            }
        ));
    }

    #[test]
    fn all_dummy_inputs_stay_dummy() {
        let d = vec![Element::dummy(); 4];
        let (lo, hi) = merge_split(&d, &d, 1, 3).unwrap();
        assert!(lo.iter().chain(&hi).all(Element::is_dummy));
        let (lo, hi) = merge_split_bitonic(&d, &d, 1, 3).unwrap();
        assert!(lo.iter().chain(&hi).all(Element::is_dummy));
    }

    #[test]
    fn bitonic_split_cost_depends_on_z_only() {
        let z = 8;
        let mut mem = Memory::new(crate::memory::MemoryConfig::new(z, ClientMode::ConstClient));
        let input = mem.load(vec![Element::dummy(); 2 * z], 0);
        mem.attach_level(0, input);
        mem.alloc_level(1, 2, 0);
        merge_split_bitonic_at(&mut mem, 0, 0, 1, 0, 1).unwrap();
        let expected = 2 * (2 * z as u64) * 2 + 4 * crate::bitonic::comparator_count(2 * z);
        assert_eq!(mem.counters().accesses(), expected);
    }

    #[test]
    fn hand_traced_assignment() {
        // Seed 1 draws labels [1, 0, 1, 1] for B = 2.
        let mut s = RngStream::new(1, StreamTag::LABELS);
        let drawn: Vec<u32> = (0..4).map(|_| s.draw_label(2)).collect();
        assert_eq!(drawn, vec![1, 0, 1, 1]);

        let params = derive_params(4, 4, ClientMode::BucketClient, 1, None).unwrap();
        let res = random_bin_assignment(&from_keys(&[1, 2, 3, 4]), &params).unwrap();
        let keys = |b: usize| {
            res.bucket(b)
                .iter()
                .map(|e| e.value().map(|v| v.0))
                .collect::<Vec<_>>()
        };
        assert_eq!(keys(0), vec![Some(2), None, None, None]);
        assert_eq!(keys(1), vec![Some(1), Some(3), Some(4), None]);
        assert_eq!(res.loads, vec![1, 3]);
        // Placement reads 4 and writes 8 slots; routing is one level.
        assert_eq!(res.counters.accesses() - 12, 16);
    }

    #[test]
    fn single_bucket_needs_no_routing() {
        let params = derive_params(3, 8, ClientMode::BucketClient, 1, None).unwrap();
        assert_eq!(params.b, 1);
        let res = random_bin_assignment(&from_keys(&[7, 8, 9]), &params).unwrap();
        assert_eq!(res.loads, vec![3]);
        // Only the level-0 placement: one range read and one bucket write.
        assert_eq!(res.trace.len(), 2);
    }

    #[test]
    fn traces_ignore_contents() {
        for mode in [ClientMode::BucketClient, ClientMode::ConstClient] {
            let params = derive_params(4, 4, mode, 3, None).unwrap();
            let a = random_bin_assignment(&from_keys(&[1, 2, 3, 4]), &params).unwrap();
            let b = random_bin_assignment(&from_keys(&[9, 9, 9, 9]), &params).unwrap();
            assert!(trace_equal(&a.trace, &b.trace).is_equal());
        }
    }

    #[test]
    fn striped_layout_matches_flat() {
        let keys: Vec<u64> = (0..512).collect();
        let mut per_level = Vec::new();
        for engine in [Engine::Direct, Engine::Bitonic] {
            for n in [256usize, 512] {
                let flat = derive_params(n, 32, ClientMode::BucketClient, 4, None)
                    .unwrap()
                    .with_engine(engine)
                    .unwrap();
                let disk = Params {
                    disks: Some(3),
                    ..flat.clone()
                };
                let a = random_bin_assignment(&from_keys(&keys[..n]), &flat).unwrap();
                let b = random_bin_assignment(&from_keys(&keys[..n]), &disk).unwrap();
                let values = |r: &AssignmentResult| {
                    r.buckets
                        .iter()
                        .map(|e| e.value().map(|v| v.0))
                        .collect::<Vec<_>>()
                };
                assert_eq!(values(&a), values(&b));
                // Level 0 placement costs a fixed number of moves too.
                per_level.push((engine, n, b.counters.moves, disk.levels()));
            }
        }
        for pair in per_level.chunks(2) {
            let (_, _, m1, l1) = pair[0];
            let (_, _, m2, l2) = pair[1];
            assert_eq!(l2, l1 + 1);
            let step = m2 - m1;
            assert!(step <= 64, "{pair:?}");
            assert!(m1 >= step * l1 as u64 / 2, "{pair:?}");
        }
    }
}
