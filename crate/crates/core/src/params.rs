//! Instance configuration and the butterfly index arithmetic shared by the
//! routing code.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How much working storage the trusted client has.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ClientMode {
    /// Room for two buckets (`2Z` elements).
    #[default]
    BucketClient,
    /// A small constant number of elements; buckets are streamed slot by slot.
    ConstClient,
}

impl ClientMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ClientMode::BucketClient => "bucket",
            ClientMode::ConstClient => "const",
        }
    }
}

impl fmt::Display for ClientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bucket" | "bucket-client" => Ok(ClientMode::BucketClient),
            "const" | "const-client" => Ok(ClientMode::ConstClient),
            other => Err(Error::InvalidParams(format!(
                "unknown client mode `{other}`"
            ))),
        }
    }
}

/// How a MergeSplit is carried out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Read both input buckets into the client, split, write both outputs.
    Direct,
    /// Count, tag dummies, then run a bitonic network over the `2Z` slots.
    Bitonic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    pub n: usize,
    /// Bucket capacity in slots.
    pub z: usize,
    /// Bucket count; a power of two with `B >= 2n/Z`.
    pub b: usize,
    pub client_mode: ClientMode,
    pub engine: Engine,
    pub seed: u64,
    /// Disk count for the head-move model; `None` runs on flat memory.
    pub disks: Option<usize>,
}

/// Builds a [`Params`] for `n` elements with buckets of `z` slots.
///
/// `B` is the smallest power of two with `B * Z >= 2n`. When `B` does not
/// divide `n`, group `g` receives `ceil(n/B)` elements for `g < n mod B` and
/// `floor(n/B)` otherwise.
pub fn derive_params(
    n: usize,
    z: usize,
    client_mode: ClientMode,
    seed: u64,
    disks: Option<usize>,
) -> Result<Params> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if z < 2 || !z.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "Z = {z} must be even and >= 2"
        )));
    }
    if disks == Some(0) {
        return Err(Error::InvalidParams("disk count must be at least 1".into()));
    }
    let b = (2 * n).div_ceil(z).next_power_of_two();
    if n.div_ceil(b) > z / 2 {
        return Err(Error::InvalidParams(format!(
            "groups of {} elements exceed Z/2 = {}",
            n.div_ceil(b),
            z / 2
        )));
    }
    let engine = match client_mode {
        ClientMode::BucketClient => Engine::Direct,
        ClientMode::ConstClient => Engine::Bitonic,
    };
    let params = Params {
        n,
        z,
        b,
        client_mode,
        engine,
        seed,
        disks,
    };
    params.check_engine()?;
    Ok(params)
}

impl Params {
    /// Overrides the MergeSplit engine (for example the bitonic engine under
    /// a two-bucket client, as used by the disk-locality runs).
    pub fn with_engine(mut self, engine: Engine) -> Result<Self> {
        self.engine = engine;
        self.check_engine()?;
        Ok(self)
    }

    fn check_engine(&self) -> Result<()> {
        if self.client_mode == ClientMode::ConstClient && self.engine == Engine::Direct {
            return Err(Error::InvalidParams(
                "the direct MergeSplit needs a two-bucket client".into(),
            ));
        }
        if self.engine == Engine::Bitonic && !self.z.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "the bitonic MergeSplit needs Z to be a power of two, got {}",
                self.z
            )));
        }
        Ok(())
    }

    /// Number of butterfly levels, `log2 B`.
    pub fn levels(&self) -> usize {
        self.b.trailing_zeros() as usize
    }

    /// Width of a routing label in bits (equal to [`Params::levels`]).
    pub fn label_bits(&self) -> u32 {
        self.b.trailing_zeros()
    }

    pub fn group_size(&self, g: usize) -> usize {
        let base = self.n / self.b;
        base + usize::from(g < self.n % self.b)
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        (0..self.b).map(|g| self.group_size(g)).collect()
    }

    /// Start offset of group `g` within the input array.
    pub fn group_start(&self, g: usize) -> usize {
        let base = self.n / self.b;
        g * base + g.min(self.n % self.b)
    }

    /// Slots per grid level, `B * Z`.
    pub fn level_slots(&self) -> usize {
        self.b * self.z
    }
}

/// Butterfly wiring for pair `j` at level `i`: returns
/// `(in0, in1, out0, out1)`.
///
/// Inputs sit `2^i` apart in level `i`; outputs are adjacent in level `i+1`.
pub fn merge_split_indices(i: usize, j: usize, b: usize) -> (usize, usize, usize, usize) {
    debug_assert!(b.is_power_of_two() && (1usize << i) < b.max(2) && j < b / 2);
    let stride = 1usize << i;
    let base = (j >> i) << i;
    (base + j, base + j + stride, 2 * j, 2 * j + 1)
}

/// The `(i+1)`-st most significant bit of a `label_bits`-wide label.
pub fn label_bit(label: u32, i: usize, label_bits: u32) -> u32 {
    (label >> (label_bits as usize - 1 - i)) & 1
}
