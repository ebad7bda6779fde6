//! Recorded access patterns and their line-oriented text form.
//!
//! One event per line, single spaces, `\n` terminated, decimal fields, `-`
//! for "no disk":
//!
//! ```text
//! read 0 3 - 512          # op level index disk elements   (whole bucket)
//! write flat:2 10 1 1     # op flat:<id> offset length disk (flat range)
//! move 1 4096             # move disk addr
//! ```

use std::fmt::{self, Write as _};
use std::io::{self, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Read,
    Write,
}

impl Op {
    fn as_str(self) -> &'static str {
        match self {
            Op::Read => "read",
            Op::Write => "write",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrayId(pub u32);

impl fmt::Display for ArrayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Bucket {
        level: u32,
        index: u32,
    },
    Flat {
        array: ArrayId,
        offset: u32,
        len: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Access {
        op: Op,
        region: Region,
        disk: Option<u16>,
        elements: u32,
    },
    Move {
        disk: u16,
        addr: u64,
    },
}

impl TraceEvent {
    pub fn elements(&self) -> u64 {
        match self {
            TraceEvent::Access { elements, .. } => *elements as u64,
            TraceEvent::Move { .. } => 0,
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TraceEvent::Access {
                op,
                region,
                disk,
                elements,
            } => {
                let mut disk_s = String::new();
                match disk {
                    Some(d) => write!(disk_s, "{d}")?,
                    None => disk_s.push('-'),
                }
                match region {
                    Region::Bucket { level, index } => {
                        write!(f, "{} {level} {index} {disk_s} {elements}", op.as_str())
                    }
                    Region::Flat { array, offset, len } => {
                        write!(f, "{} flat:{array} {offset} {len} {disk_s}", op.as_str())
                    }
                }
            }
            TraceEvent::Move { disk, addr } => write!(f, "move {disk} {addr}"),
        }
    }
}

impl FromStr for TraceEvent {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, String> {
        fn num<T: FromStr>(s: Option<&str>, what: &str) -> std::result::Result<T, String> {
            let s = s.ok_or_else(|| format!("missing {what}"))?;
            s.parse().map_err(|_| format!("bad {what} `{s}`"))
        }
        fn disk(s: Option<&str>) -> std::result::Result<Option<u16>, String> {
            match s {
                Some("-") => Ok(None),
                other => num(other, "disk").map(Some),
            }
        }

        let mut parts = line.split(' ');
        let op = match parts.next() {
            Some("read") => Op::Read,
            Some("write") => Op::Write,
            Some("move") => {
                let disk = num(parts.next(), "disk")?;
                let addr = num(parts.next(), "addr")?;
                if parts.next().is_some() {
                    return Err("trailing fields".into());
                }
                return Ok(TraceEvent::Move { disk, addr });
            }
            other => return Err(format!("unknown op {other:?}")),
        };
        let first = parts.next().ok_or("missing region")?;
        let event = if let Some(id) = first.strip_prefix("flat:") {
            let array = ArrayId(num(Some(id), "array id")?);
            let offset = num(parts.next(), "offset")?;
            let len = num(parts.next(), "length")?;
            let disk = disk(parts.next())?;
            TraceEvent::Access {
                op,
                region: Region::Flat { array, offset, len },
                disk,
                elements: len,
            }
        } else {
            let level = num(Some(first), "level")?;
            let index = num(parts.next(), "index")?;
            let disk = disk(parts.next())?;
            let elements = num(parts.next(), "elements")?;
            TraceEvent::Access {
                op,
                region: Region::Bucket { level, index },
                disk,
                elements,
            }
        };
        if parts.next().is_some() {
            return Err("trailing fields".into());
        }
        Ok(event)
    }
}

/// Counters derived from a trace. Always a pure function of the events.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceTotals {
    pub element_reads: u64,
    pub element_writes: u64,
    pub bucket_reads: u64,
    pub bucket_writes: u64,
    /// Move count indexed by disk.
    pub moves: Vec<u64>,
}

impl TraceTotals {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a TraceEvent>) -> Self {
        let mut totals = TraceTotals::default();
        for e in events {
            totals.add(e);
        }
        totals
    }

    pub(crate) fn add(&mut self, event: &TraceEvent) {
        match *event {
            TraceEvent::Access {
                op,
                region,
                elements,
                ..
            } => {
                let bucket = matches!(region, Region::Bucket { .. }) as u64;
                match op {
                    Op::Read => {
                        self.element_reads += elements as u64;
                        self.bucket_reads += bucket;
                    }
                    Op::Write => {
                        self.element_writes += elements as u64;
                        self.bucket_writes += bucket;
                    }
                }
            }
            TraceEvent::Move { disk, .. } => {
                let d = disk as usize;
                if self.moves.len() <= d {
                    self.moves.resize(d + 1, 0);
                }
                self.moves[d] += 1;
            }
        }
    }

    pub fn accesses(&self) -> u64 {
        self.element_reads + self.element_writes
    }

    pub fn total_moves(&self) -> u64 {
        self.moves.iter().sum()
    }
}

/// The ordered access pattern of one run.
///
/// A trace may be created without event storage, in which case only the
/// totals are kept; large benchmark runs use that to bound memory.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    events: Vec<TraceEvent>,
    recording: bool,
    totals: TraceTotals,
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.events == other.events && self.totals == other.totals
    }
}

impl Trace {
    pub fn recording() -> Self {
        Trace {
            recording: true,
            ..Default::default()
        }
    }

    pub fn counting() -> Self {
        Trace::default()
    }

    pub fn from_events(events: Vec<TraceEvent>) -> Self {
        let totals = TraceTotals::from_events(&events);
        Trace {
            events,
            recording: true,
            totals,
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub fn push(&mut self, event: TraceEvent) {
        self.totals.add(&event);
        if self.recording {
            self.events.push(event);
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn totals(&self) -> &TraceTotals {
        &self.totals
    }

    /// Recomputes the totals from the stored events and compares them with
    /// the running counters. Vacuously true for counting-only traces.
    pub fn totals_consistent(&self) -> bool {
        if !self.recording {
            return true;
        }
        let mut fresh = TraceTotals::from_events(&self.events);
        let mut kept = self.totals.clone();
        let width = fresh.moves.len().max(kept.moves.len());
        fresh.moves.resize(width, 0);
        kept.moves.resize(width, 0);
        fresh == kept
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            writeln!(out, "{e}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.events.len() * 16);
        for e in &self.events {
            let _ = writeln!(s, "{e}");
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let events = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                line.parse().map_err(|reason| Error::TraceParse {
                    line: i + 1,
                    reason,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trace::from_events(events))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceComparison {
    Equal,
    /// Index of the first event that differs (or the shorter length).
    Diverges(usize),
}

impl TraceComparison {
    pub fn is_equal(self) -> bool {
        self == TraceComparison::Equal
    }
}

/// Field-by-field comparison of two recorded event sequences.
pub fn trace_equal(a: &Trace, b: &Trace) -> TraceComparison {
    match a.events.iter().zip(&b.events).position(|(x, y)| x != y) {
        Some(i) => TraceComparison::Diverges(i),
        None if a.events.len() == b.events.len() => TraceComparison::Equal,
        None => TraceComparison::Diverges(a.events.len().min(b.events.len())),
    }
}
