//! Forward search over a trace, live or stored.
//!
//! A [`QuerySession`] holds a cursor on the last event returned by
//! [`QuerySession::fget`]. Filters are evaluated by the event source, so a
//! live engine run discards non-matching events before the analyzer sees
//! them. Reaching the end of the trace without a match ends the session.

mod filter;
mod live;
mod stored;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{FiniteDomain, UpdateKinds};
use crate::ids::{ChoicePointId, ConstraintId, VarId};
use crate::state::StateSnapshot;
use crate::trace::{Attr, Bindings, Port, PortSet, TraceEvent, TraceParseError};

pub use filter::{Cmp, Filter, FilterError, IdCond};
pub use live::LiveSource;
pub use stored::StoredSource;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("unknown attribute {0:?}")]
    UnknownAttr(String),
    #[error("event {chrono} ({port}) has no {attr}")]
    Absent { chrono: u64, port: Port, attr: &'static str },
    #[error("no current event")]
    NoEvent,
    #[error(transparent)]
    Trace(#[from] TraceParseError),
    #[error("live run: {0}")]
    Live(String),
}

/// Something `get_attr` can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrName {
    Chrono,
    Port,
    Event(Attr),
    /// Domain map after the cursor event.
    Domains,
    /// Constraint store after the cursor event.
    Constraints,
}

impl AttrName {
    pub fn name(self) -> &'static str {
        match self {
            AttrName::Chrono => "chrono",
            AttrName::Port => "port",
            AttrName::Event(a) => a.name(),
            AttrName::Domains => "domains",
            AttrName::Constraints => "constraints",
        }
    }

    fn is_snapshot(self) -> bool {
        matches!(self, AttrName::Domains | AttrName::Constraints)
    }
}

impl FromStr for AttrName {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chrono" => Ok(AttrName::Chrono),
            "port" => Ok(AttrName::Port),
            "domains" => Ok(AttrName::Domains),
            "constraints" => Ok(AttrName::Constraints),
            _ => s.parse().map(AttrName::Event).map_err(|_| QueryError::UnknownAttr(s.to_string())),
        }
    }
}

/// Parses a comma-separated attribute list.
pub fn parse_attr_list(text: &str) -> Result<Vec<AttrName>, QueryError> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrValue {
    Chrono(u64),
    Port(Port),
    Cid(ConstraintId),
    Vid(VarId),
    Domain(FiniteDomain),
    Mods(UpdateKinds),
    Text(String),
    Bindings(Bindings),
    Cpid(ChoicePointId),
    Domains(BTreeMap<VarId, FiniteDomain>),
    Constraints(Vec<(ConstraintId, String)>),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Chrono(n) => write!(f, "{n}"),
            AttrValue::Port(p) => write!(f, "{p}"),
            AttrValue::Cid(c) => write!(f, "{c}"),
            AttrValue::Vid(v) => write!(f, "{v}"),
            AttrValue::Domain(d) => write!(f, "{d}"),
            AttrValue::Mods(m) => write!(f, "{m}"),
            AttrValue::Text(t) => f.write_str(t),
            AttrValue::Bindings(b) => {
                let parts: Vec<String> = b.iter().map(|(v, x)| format!("{v}={x}")).collect();
                write!(f, "[{}]", parts.join(","))
            }
            AttrValue::Cpid(p) => write!(f, "{p}"),
            AttrValue::Domains(m) => {
                let parts: Vec<String> = m.iter().map(|(v, d)| format!("{v}:{d}")).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
            AttrValue::Constraints(cs) => {
                let parts: Vec<String> = cs.iter().map(|(c, t)| format!("{c}:{t}")).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

/// Where a session's events come from.
pub trait EventSource {
    /// The first event after the previously returned one that satisfies
    /// `filter`, or `None` when the trace ends first.
    fn next_matching(&mut self, filter: &Filter) -> Result<Option<TraceEvent>, QueryError>;

    /// State immediately after the previously returned event.
    fn snapshot(&mut self) -> Result<StateSnapshot, QueryError>;
}

pub struct QuerySession<S> {
    source: S,
    cursor: Option<TraceEvent>,
    ended: bool,
}

impl<S: EventSource> QuerySession<S> {
    pub fn new(source: S) -> Self {
        QuerySession { source, cursor: None, ended: false }
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn into_source(self) -> S {
        self.source
    }

    pub fn current(&self) -> Option<&TraceEvent> {
        self.cursor.as_ref()
    }

    pub fn ended(&self) -> bool {
        self.ended
    }

    /// Advances to the next event matching `filter`; `None` is end of trace.
    pub fn fget(&mut self, filter: &Filter) -> Result<Option<&TraceEvent>, QueryError> {
        if self.ended {
            return Ok(None);
        }
        match self.source.next_matching(filter)? {
            Some(e) => {
                debug_assert!(self.cursor.as_ref().is_none_or(|c| c.chrono < e.chrono));
                self.cursor = Some(e);
            }
            None => {
                self.ended = true;
                self.cursor = None;
            }
        }
        Ok(self.cursor.as_ref())
    }

    pub fn get_attr(&mut self, names: &[AttrName]) -> Result<Vec<AttrValue>, QueryError> {
        let e = self.cursor.as_ref().ok_or(QueryError::NoEvent)?;
        let absent = |attr: &'static str| QueryError::Absent { chrono: e.chrono, port: e.port, attr };
        let mut out = Vec::with_capacity(names.len());
        let mut snap = None;
        for &name in names {
            if name.is_snapshot() && snap.is_none() {
                snap = Some(self.source.snapshot()?);
            }
            out.push(match name {
                AttrName::Chrono => AttrValue::Chrono(e.chrono),
                AttrName::Port => AttrValue::Port(e.port),
                AttrName::Domains => AttrValue::Domains(snap.as_ref().expect("taken").domains.clone()),
                AttrName::Constraints => AttrValue::Constraints(snap.as_ref().expect("taken").constraints.clone()),
                AttrName::Event(a) => {
                    let missing = || absent(a.name());
                    match a {
                        Attr::Cid => AttrValue::Cid(e.cid.ok_or_else(missing)?),
                        Attr::Vid => AttrValue::Vid(e.vid.ok_or_else(missing)?),
                        Attr::Dom => AttrValue::Domain(e.dom.clone().ok_or_else(missing)?),
                        Attr::Wd => AttrValue::Domain(e.wd.clone().ok_or_else(missing)?),
                        Attr::Mods => AttrValue::Mods(e.mods.ok_or_else(missing)?),
                        Attr::Ctext => AttrValue::Text(e.ctext.clone().ok_or_else(missing)?),
                        Attr::Bindings => AttrValue::Bindings(e.bindings.clone().ok_or_else(missing)?),
                        Attr::Cpid => AttrValue::Cpid(e.cpid.ok_or_else(missing)?),
                    }
                }
            });
        }
        Ok(out)
    }

    /// Counts events of `count` ports up to the first event of a `stop`
    /// port, which is returned with the count.
    pub fn count_until(&mut self, count: PortSet, stop: PortSet) -> Result<(u64, Option<TraceEvent>), QueryError> {
        let filter = Filter::ports(count.union(stop));
        let mut n = 0;
        while let Some(e) = self.fget(&filter)? {
            if stop.contains(e.port) {
                return Ok((n, Some(e.clone())));
            }
            n += 1;
        }
        Ok((n, None))
    }

    /// Every remaining event matching `filter`.
    pub fn find_all(&mut self, filter: &Filter) -> Result<Vec<TraceEvent>, QueryError> {
        let mut out = Vec::new();
        while let Some(e) = self.fget(filter)? {
            out.push(e.clone());
        }
        Ok(out)
    }

    /// Remaining events matching `filter`, counted per port.
    pub fn histogram(&mut self, filter: &Filter) -> Result<BTreeMap<Port, u64>, QueryError> {
        let mut out = BTreeMap::new();
        while let Some(e) = self.fget(filter)? {
            *out.entry(e.port).or_insert(0) += 1;
        }
        Ok(out)
    }
}

pub type StoredSession<R> = QuerySession<StoredSource<R>>;
pub type LiveSession = QuerySession<LiveSource>;
