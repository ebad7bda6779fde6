//! Fixed-width records moved around by every algorithm in the crate.

/// One slot of server memory.
///
/// Dummies are flagged records rather than sentinel keys, so the whole `u64`
/// key domain stays available to callers. A dummy's `sort_key` and
/// `routing_label` carry no meaning.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Element {
    pub sort_key: u64,
    /// Destination bucket in `[0, B)`.
    pub routing_label: u32,
    pub is_real: bool,
    /// Scratch sort label written by the network-based phases (MergeSplit
    /// side tags, random permutation labels). Not part of the record's value.
    pub tag: u64,
    pub payload: Box<[u8]>,
}

impl Element {
    pub fn real(sort_key: u64) -> Self {
        Element {
            sort_key,
            is_real: true,
            ..Default::default()
        }
    }

    pub fn with_payload(sort_key: u64, payload: impl Into<Box<[u8]>>) -> Self {
        Element {
            payload: payload.into(),
            ..Element::real(sort_key)
        }
    }

    pub fn dummy() -> Self {
        Element::default()
    }

    pub fn is_dummy(&self) -> bool {
        !self.is_real
    }

    /// Record identity ignoring routing state: `None` for dummies, otherwise
    /// the key and payload. Used to compare bucket contents slot by slot.
    pub fn value(&self) -> Option<(u64, &[u8])> {
        self.is_real.then(|| (self.sort_key, &self.payload[..]))
    }
}

/// Wraps plain keys as real elements with empty payloads.
pub fn from_keys(keys: &[u64]) -> Vec<Element> {
    keys.iter().copied().map(Element::real).collect()
}

/// Keys of the real elements, in slot order.
pub fn real_keys(slots: &[Element]) -> Vec<u64> {
    slots
        .iter()
        .filter(|e| e.is_real)
        .map(|e| e.sort_key)
        .collect()
}
