//! Variable-update view: domain size per variable over time.
//!
//! A sample is taken after every `newConstraint`, `reject` and `solution`
//! event. It has one row per live variable with the replayed domain size
//! and the strongest update kind seen on that variable since the previous
//! sample (empty > ground > min > max > any > none). A `backTo` undoes the
//! updates it rolls back, so it also clears the pending kinds.
//!
//! The CSV table is `step,var,size,kind`. The scene file is plain text:
//!
//! ```text
//! scene <variables> <steps>
//! color <kind> <r> <g> <b>        one line per kind
//! box <var> <step> <height> <kind>
//! ```
//!
//! A box stands at grid position (var, step) with height equal to the size.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::domain::{UpdateKind, UpdateKinds};
use crate::ids::VarId;
use crate::trace::{Port, TraceEvent, TraceParseError, TraceReader};
use crate::validate::DomainReplay;

#[derive(Debug, Error)]
pub enum VizError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] TraceParseError),
}

/// Ordered by priority, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SceneKind {
    None,
    Any,
    Max,
    Min,
    Ground,
    Empty,
}

impl SceneKind {
    pub const ALL: [SceneKind; 6] =
        [SceneKind::None, SceneKind::Min, SceneKind::Max, SceneKind::Ground, SceneKind::Any, SceneKind::Empty];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::None => "none",
            SceneKind::Min => "min",
            SceneKind::Max => "max",
            SceneKind::Ground => "ground",
            SceneKind::Any => "any",
            SceneKind::Empty => "empty",
        }
    }

    /// The strongest kind in `kinds`.
    pub fn of(kinds: UpdateKinds) -> Self {
        kinds
            .iter()
            .map(|k| match k {
                UpdateKind::Min => SceneKind::Min,
                UpdateKind::Max => SceneKind::Max,
                UpdateKind::Ground => SceneKind::Ground,
                UpdateKind::Any => SceneKind::Any,
                UpdateKind::Empty => SceneKind::Empty,
            })
            .max()
            .unwrap_or(SceneKind::None)
    }

    fn rgb(self) -> (u8, u8, u8) {
        match self {
            SceneKind::None => (190, 190, 190),
            SceneKind::Min => (40, 110, 230),
            SceneKind::Max => (230, 150, 30),
            SceneKind::Ground => (40, 170, 70),
            SceneKind::Any => (150, 80, 190),
            SceneKind::Empty => (210, 30, 30),
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneRow {
    pub step: u64,
    /// Variable ordinal.
    pub var: u32,
    pub size: u64,
    pub kind: SceneKind,
}

/// Streaming sampler over trace events.
#[derive(Debug, Default)]
pub struct Sampler {
    replay: DomainReplay,
    pending: BTreeMap<VarId, UpdateKinds>,
    step: u64,
}

impl Sampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds one event; returns the rows of the sample it triggers, if any.
    pub fn push(&mut self, e: &TraceEvent) -> Vec<SceneRow> {
        self.replay.apply(e);
        match e.port {
            Port::Reduce => {
                if let (Some(v), Some(m)) = (e.vid, e.mods) {
                    let acc = self.pending.entry(v).or_default();
                    *acc = acc.union(m);
                }
            }
            Port::BackTo => self.pending.clear(),
            _ => {}
        }
        if !matches!(e.port, Port::NewConstraint | Port::Reject | Port::Solution) {
            return Vec::new();
        }
        self.step += 1;
        let step = self.step;
        let pending = std::mem::take(&mut self.pending);
        self.replay
            .domain_map()
            .iter()
            .map(|(v, d)| {
                let size = d.size();
                let kind = if size == 0 {
                    SceneKind::Empty
                } else {
                    // `empty` is reserved for empty domains.
                    SceneKind::of(pending.get(v).copied().unwrap_or_default()).min(SceneKind::Ground)
                };
                SceneRow { step, var: v.ordinal(), size, kind }
            })
            .collect()
    }
}

pub fn sample<'a>(events: impl IntoIterator<Item = &'a TraceEvent>) -> Vec<SceneRow> {
    let mut s = Sampler::new();
    events.into_iter().flat_map(|e| s.push(e)).collect()
}

/// Samples a canonical trace read line by line.
pub fn sample_reader<R: BufRead>(input: R) -> Result<Vec<SceneRow>, VizError> {
    let mut s = Sampler::new();
    let mut rows = Vec::new();
    for e in TraceReader::new(input) {
        rows.extend(s.push(&e?));
    }
    Ok(rows)
}

/// Writes the CSV table; rows must already be sorted by (step, var).
pub fn write_csv<W: Write>(rows: &[SceneRow], mut out: W) -> io::Result<()> {
    writeln!(out, "step,var,size,kind")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.step, r.var, r.size, r.kind)?;
    }
    out.flush()
}

pub fn write_scene<W: Write>(rows: &[SceneRow], mut out: W) -> io::Result<()> {
    let vars = rows.iter().map(|r| r.var).max().unwrap_or(0);
    let steps = rows.iter().map(|r| r.step).max().unwrap_or(0);
    writeln!(out, "scene {vars} {steps}")?;
    for k in SceneKind::ALL {
        let (r, g, b) = k.rgb();
        writeln!(out, "color {k} {r} {g} {b}")?;
    }
    for r in rows {
        writeln!(out, "box {} {} {} {}", r.var, r.step, r.size, r.kind)?;
    }
    out.flush()
}
