//! Trace events, selective emission, and sinks.
//!
//! Every rule application is one [`TraceEvent`]. Engines hand events to a
//! [`Tracer`], which numbers them, drops disabled ports, projects away
//! disabled attributes and delivers the rest to a [`TraceSink`]
//! synchronously. Chrono numbers are consumed by every event, delivered or
//! not, so filtered traces stay correlatable.

mod canonical;
mod human;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{classify_bounds, FiniteDomain, UpdateKinds};
use crate::ids::{ChoicePointId, ConstraintId, VarId};
use crate::state::StateView;

pub use canonical::{parse_canonical, parse_trace, render_canonical, ParsedTrace, TraceParseError, TraceReader};
pub use human::{render_domain_human, render_human};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    NewVariable,
    NewConstraint,
    Reduce,
    Suspend,
    Awake,
    Reject,
    Solution,
    ChoicePoint,
    BackTo,
    Failure,
}

impl Port {
    pub const ALL: [Port; 10] = [
        Port::NewVariable,
        Port::NewConstraint,
        Port::Reduce,
        Port::Suspend,
        Port::Awake,
        Port::Reject,
        Port::Solution,
        Port::ChoicePoint,
        Port::BackTo,
        Port::Failure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Port::NewVariable => "newVariable",
            Port::NewConstraint => "newConstraint",
            Port::Reduce => "reduce",
            Port::Suspend => "suspend",
            Port::Awake => "awake",
            Port::Reject => "reject",
            Port::Solution => "solution",
            Port::ChoicePoint => "choicePoint",
            Port::BackTo => "backTo",
            Port::Failure => "failure",
        }
    }

    /// Attributes every event of this port carries (besides chrono and port).
    pub fn attrs(self) -> AttrSet {
        use Attr::*;
        match self {
            Port::NewVariable => AttrSet::of(&[Vid, Dom]),
            Port::NewConstraint => AttrSet::of(&[Cid, Ctext]),
            Port::Reduce => AttrSet::of(&[Cid, Vid, Dom, Wd, Mods]),
            Port::Suspend | Port::Awake | Port::Reject => AttrSet::of(&[Cid]),
            Port::Solution => AttrSet::of(&[Bindings]),
            Port::ChoicePoint | Port::BackTo => AttrSet::of(&[Cpid]),
            Port::Failure => AttrSet::NONE,
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Port {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Port::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown port {s:?}"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PortSet(u16);

impl PortSet {
    pub const NONE: PortSet = PortSet(0);
    pub const ALL: PortSet = PortSet((1 << Port::ALL.len()) - 1);

    pub fn of(ports: &[Port]) -> Self {
        PortSet(ports.iter().fold(0, |acc, p| acc | p.bit()))
    }

    #[inline]
    pub fn contains(self, p: Port) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn with(self, p: Port) -> Self {
        PortSet(self.0 | p.bit())
    }

    pub fn without(self, p: Port) -> Self {
        PortSet(self.0 & !p.bit())
    }

    pub fn union(self, other: PortSet) -> Self {
        PortSet(self.0 | other.0)
    }

    pub fn intersects(self, other: PortSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Port> {
        Port::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl fmt::Debug for PortSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Parses a comma-separated port list such as `reduce,reject`.
pub fn parse_port_list(text: &str) -> Result<PortSet, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .try_fold(PortSet::NONE, |acc, name| Ok(acc.with(name.parse()?)))
}

/// Optional event attributes, in canonical field order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attr {
    Cid,
    Vid,
    Dom,
    Wd,
    Mods,
    Ctext,
    Bindings,
    Cpid,
}

impl Attr {
    pub const ALL: [Attr; 8] =
        [Attr::Cid, Attr::Vid, Attr::Dom, Attr::Wd, Attr::Mods, Attr::Ctext, Attr::Bindings, Attr::Cpid];

    pub fn name(self) -> &'static str {
        match self {
            Attr::Cid => "cid",
            Attr::Vid => "vid",
            Attr::Dom => "dom",
            Attr::Wd => "wd",
            Attr::Mods => "mods",
            Attr::Ctext => "ctext",
            Attr::Bindings => "bindings",
            Attr::Cpid => "cpid",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl FromStr for Attr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Attr::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown attribute {s:?}"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AttrSet(u8);

impl AttrSet {
    pub const NONE: AttrSet = AttrSet(0);
    pub const ALL: AttrSet = AttrSet(u8::MAX);

    pub fn of(attrs: &[Attr]) -> Self {
        AttrSet(attrs.iter().fold(0, |acc, a| acc | a.bit()))
    }

    pub fn contains(self, a: Attr) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn with(self, a: Attr) -> Self {
        AttrSet(self.0 | a.bit())
    }

    pub fn iter(self) -> impl Iterator<Item = Attr> {
        Attr::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

impl fmt::Debug for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub type Bindings = BTreeMap<VarId, u32>;

/// One rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub chrono: u64,
    pub port: Port,
    pub cid: Option<ConstraintId>,
    pub vid: Option<VarId>,
    /// New domain of `vid`.
    pub dom: Option<FiniteDomain>,
    /// Withdrawn values.
    pub wd: Option<FiniteDomain>,
    pub mods: Option<UpdateKinds>,
    pub ctext: Option<String>,
    pub bindings: Option<Bindings>,
    pub cpid: Option<ChoicePointId>,
}

impl TraceEvent {
    fn bare(chrono: u64, port: Port) -> Self {
        TraceEvent {
            chrono,
            port,
            cid: None,
            vid: None,
            dom: None,
            wd: None,
            mods: None,
            ctext: None,
            bindings: None,
            cpid: None,
        }
    }

    pub fn new_variable(chrono: u64, vid: VarId, dom: FiniteDomain) -> Self {
        TraceEvent { vid: Some(vid), dom: Some(dom), ..Self::bare(chrono, Port::NewVariable) }
    }

    pub fn new_constraint(chrono: u64, cid: ConstraintId, ctext: String) -> Self {
        TraceEvent { cid: Some(cid), ctext: Some(ctext), ..Self::bare(chrono, Port::NewConstraint) }
    }

    /// A reduction of `vid` from `old` to `new`; withdrawn values and update
    /// kinds are derived here. The caller guarantees `new ⊊ old`.
    pub fn reduce(chrono: u64, cid: ConstraintId, vid: VarId, old: &FiniteDomain, new: FiniteDomain) -> Self {
        debug_assert!(new != *old && new.is_subset(old), "reduce must strictly shrink {old} (to {new})");
        TraceEvent {
            cid: Some(cid),
            vid: Some(vid),
            wd: Some(old.difference(&new)),
            mods: Some(classify_bounds(old, &new)),
            dom: Some(new),
            ..Self::bare(chrono, Port::Reduce)
        }
    }

    /// `suspend`, `awake` or `reject`.
    pub fn on_constraint(chrono: u64, port: Port, cid: ConstraintId) -> Self {
        debug_assert!(matches!(port, Port::Suspend | Port::Awake | Port::Reject));
        TraceEvent { cid: Some(cid), ..Self::bare(chrono, port) }
    }

    pub fn solution(chrono: u64, bindings: Bindings) -> Self {
        TraceEvent { bindings: Some(bindings), ..Self::bare(chrono, Port::Solution) }
    }

    /// `choicePoint` or `backTo`.
    pub fn on_choice(chrono: u64, port: Port, cpid: ChoicePointId) -> Self {
        debug_assert!(matches!(port, Port::ChoicePoint | Port::BackTo));
        TraceEvent { cpid: Some(cpid), ..Self::bare(chrono, port) }
    }

    pub fn failure(chrono: u64) -> Self {
        Self::bare(chrono, Port::Failure)
    }

    pub fn has(&self, a: Attr) -> bool {
        match a {
            Attr::Cid => self.cid.is_some(),
            Attr::Vid => self.vid.is_some(),
            Attr::Dom => self.dom.is_some(),
            Attr::Wd => self.wd.is_some(),
            Attr::Mods => self.mods.is_some(),
            Attr::Ctext => self.ctext.is_some(),
            Attr::Bindings => self.bindings.is_some(),
            Attr::Cpid => self.cpid.is_some(),
        }
    }

    pub fn present_attrs(&self) -> AttrSet {
        Attr::ALL.into_iter().filter(|a| self.has(*a)).fold(AttrSet::NONE, AttrSet::with)
    }

    /// Drops every attribute outside `keep`.
    pub fn project(&mut self, keep: AttrSet) {
        let drop = |a: Attr| !keep.contains(a);
        if drop(Attr::Cid) {
            self.cid = None;
        }
        if drop(Attr::Vid) {
            self.vid = None;
        }
        if drop(Attr::Dom) {
            self.dom = None;
        }
        if drop(Attr::Wd) {
            self.wd = None;
        }
        if drop(Attr::Mods) {
            self.mods = None;
        }
        if drop(Attr::Ctext) {
            self.ctext = None;
        }
        if drop(Attr::Bindings) {
            self.bindings = None;
        }
        if drop(Attr::Cpid) {
            self.cpid = None;
        }
    }
}

/// Which ports are emitted and which attributes they keep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmissionConfig {
    pub ports: PortSet,
    attrs: [AttrSet; Port::ALL.len()],
}

impl Default for EmissionConfig {
    fn default() -> Self {
        Self::all()
    }
}

impl EmissionConfig {
    pub fn all() -> Self {
        EmissionConfig { ports: PortSet::ALL, attrs: [AttrSet::ALL; Port::ALL.len()] }
    }

    /// Emits nothing; engines still count chrono.
    pub fn off() -> Self {
        EmissionConfig { ports: PortSet::NONE, ..Self::all() }
    }

    pub fn with_ports(ports: PortSet) -> Self {
        EmissionConfig { ports, ..Self::all() }
    }

    /// Restricts the attributes of one port.
    pub fn set_attrs(&mut self, port: Port, attrs: AttrSet) {
        self.attrs[port as usize] = attrs;
    }

    /// Restricts the attributes of every port.
    pub fn set_all_attrs(&mut self, attrs: AttrSet) {
        self.attrs = [attrs; Port::ALL.len()];
    }

    pub fn attrs(&self, port: Port) -> AttrSet {
        self.attrs[port as usize]
    }

    #[inline]
    pub fn enabled(&self, port: Port) -> bool {
        self.ports.contains(port)
    }

    /// The delivered form of `event`, or `None` when its port is disabled.
    pub fn apply(&self, event: &TraceEvent) -> Option<TraceEvent> {
        self.enabled(event.port).then(|| {
            let mut e = event.clone();
            e.project(self.attrs(e.port));
            e
        })
    }
}

#[derive(Debug, Error)]
pub enum SinkError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Closed(String),
}

#[derive(Debug, Error)]
#[error("trace sink failed at event {chrono}: {source}")]
pub struct TraceError {
    pub chrono: u64,
    #[source]
    pub source: SinkError,
}

/// Receives delivered events. The engine is blocked until `deliver` returns,
/// and `state` reflects the solver state immediately after the event.
pub trait TraceSink {
    fn deliver(&mut self, event: &TraceEvent, state: &dyn StateView) -> Result<(), SinkError>;

    /// Called once after the last event of a run.
    fn finish(&mut self) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullSink;

impl TraceSink for NullSink {
    #[inline]
    fn deliver(&mut self, _: &TraceEvent, _: &dyn StateView) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Collects events in memory.
#[derive(Debug, Default)]
pub struct VecSink(pub Vec<TraceEvent>);

impl TraceSink for VecSink {
    fn deliver(&mut self, event: &TraceEvent, _: &dyn StateView) -> Result<(), SinkError> {
        self.0.push(event.clone());
        Ok(())
    }
}

/// Adapts a closure into a sink.
pub struct FnSink<F>(pub F);

impl<F> TraceSink for FnSink<F>
where
    F: FnMut(&TraceEvent, &dyn StateView) -> Result<(), SinkError>,
{
    fn deliver(&mut self, event: &TraceEvent, state: &dyn StateView) -> Result<(), SinkError> {
        (self.0)(event, state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    Human,
    #[default]
    Canonical,
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(TraceFormat::Human),
            "canonical" => Ok(TraceFormat::Canonical),
            _ => Err(format!("unknown trace format {s:?}")),
        }
    }
}

/// Writes one line per event.
pub struct WriterSink<W: Write> {
    out: W,
    format: TraceFormat,
}

impl<W: Write> WriterSink<W> {
    pub fn new(out: W, format: TraceFormat) -> Self {
        WriterSink { out, format }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TraceSink for WriterSink<W> {
    fn deliver(&mut self, event: &TraceEvent, _: &dyn StateView) -> Result<(), SinkError> {
        let line = match self.format {
            TraceFormat::Human => render_human(event),
            TraceFormat::Canonical => render_canonical(event),
        };
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    fn finish(&mut self) -> Result<(), SinkError> {
        self.out.flush()?;
        Ok(())
    }
}

/// Numbers events and routes them through an [`EmissionConfig`] to a sink.
pub struct Tracer<'s> {
    config: EmissionConfig,
    sink: &'s mut dyn TraceSink,
    chrono: u64,
}

impl<'s> Tracer<'s> {
    pub fn new(config: EmissionConfig, sink: &'s mut dyn TraceSink) -> Self {
        Tracer { config, sink, chrono: 0 }
    }

    /// Number of events so far, delivered or not.
    pub fn chrono(&self) -> u64 {
        self.chrono
    }

    /// Counts one event of `port`; builds and delivers it only if the port is
    /// enabled. `build` receives the event's chrono.
    #[inline]
    pub fn emit<F>(&mut self, port: Port, state: &dyn StateView, build: F) -> Result<(), TraceError>
    where
        F: FnOnce(u64) -> TraceEvent,
    {
        self.chrono += 1;
        if !self.config.enabled(port) {
            return Ok(());
        }
        self.deliver(state, build(self.chrono))
    }

    #[cold]
    fn deliver(&mut self, state: &dyn StateView, mut event: TraceEvent) -> Result<(), TraceError> {
        debug_assert_eq!(event.present_attrs(), event.port.attrs(), "attribute presence for {}", event.port);
        let keep = self.config.attrs(event.port);
        if keep != AttrSet::ALL {
            event.project(keep);
        }
        let chrono = self.chrono;
        self.sink.deliver(&event, state).map_err(|source| TraceError { chrono, source })
    }

    pub fn finish(&mut self) -> Result<(), TraceError> {
        let chrono = self.chrono;
        self.sink.finish().map_err(|source| TraceError { chrono, source })
    }
}
