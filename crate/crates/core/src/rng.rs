//! Deterministic, splittable random streams.
//!
//! A master seed and a [`StreamTag`] key a ChaCha8 block cipher: the seed and
//! purpose fill the key, the index selects the cipher's 64-bit stream. Every
//! `(seed, tag)` pair therefore yields its own reproducible sequence, and
//! creating a stream needs no shared state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Part of the key, so streams with different
/// purposes never overlap even at equal indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Labels = 1,
    BucketPermutation = 2,
    Trial = 3,
    Retry = 4,
    Input = 5,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamTag {
    pub purpose: Purpose,
    pub index: u64,
}

impl StreamTag {
    pub const LABELS: StreamTag = StreamTag::new(Purpose::Labels, 0);
    pub const BUCKET_PERMUTATION: StreamTag = StreamTag::new(Purpose::BucketPermutation, 0);

    pub const fn new(purpose: Purpose, index: u64) -> Self {
        StreamTag { purpose, index }
    }

    pub const fn trial(index: u64) -> Self {
        StreamTag::new(Purpose::Trial, index)
    }
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    tag: StreamTag,
    inner: ChaCha8Rng,
    drawn: u64,
}

impl RngStream {
    pub fn new(seed: u64, tag: StreamTag) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(tag.purpose as u64).to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(tag.index);
        RngStream {
            seed,
            tag,
            inner,
            drawn: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tag(&self) -> StreamTag {
        self.tag
    }

    /// Number of 64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        self.drawn
    }

    /// A uniform label in `[0, b)`: the low `log2 b` bits of the next word.
    pub fn draw_label(&mut self, b: usize) -> u32 {
        debug_assert!(b.is_power_of_two());
        (self.next_u64() & (b as u64 - 1)) as u32
    }

    /// A uniform `w`-bit value, `1 <= w <= 64`.
    pub fn draw_bits(&mut self, w: u32) -> u64 {
        debug_assert!((1..=64).contains(&w));
        let x = self.next_u64();
        if w == 64 {
            x
        } else {
            x & ((1u64 << w) - 1)
        }
    }

    /// Uniform in `[0, bound)` without modulo bias.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.gen_range(0..bound)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.drawn += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Parses a seed given as decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64, std::num::ParseIntError> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
}
