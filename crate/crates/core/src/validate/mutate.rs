//! Trace mutations for measuring how much the checkers catch.

use std::fmt;

use crate::domain::{FiniteDomain, FULL_MAX};
use crate::trace::{Attr, Port, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Replace the port of event `index` by another port carrying the same
    /// attributes.
    PortSwap {
        index: usize,
        to: Port,
    },
    AttrDrop {
        index: usize,
        attr: Attr,
    },
    /// Add or remove one value of a domain-valued attribute.
    DomainPerturb {
        index: usize,
        attr: Attr,
    },
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mutation::PortSwap { index, to } => write!(f, "event {}: port -> {to}", index + 1),
            Mutation::AttrDrop { index, attr } => write!(f, "event {}: drop {}", index + 1, attr.name()),
            Mutation::DomainPerturb { index, attr } => write!(f, "event {}: perturb {}", index + 1, attr.name()),
        }
    }
}

fn same_shape(p: Port) -> &'static [Port] {
    match p {
        Port::Suspend | Port::Awake | Port::Reject => &[Port::Suspend, Port::Awake, Port::Reject],
        Port::ChoicePoint | Port::BackTo => &[Port::ChoicePoint, Port::BackTo],
        _ => &[],
    }
}

/// Every mutation of the catalog applicable to `events`.
pub fn catalog(events: &[TraceEvent]) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (index, e) in events.iter().enumerate() {
        for &to in same_shape(e.port).iter().filter(|&&p| p != e.port) {
            out.push(Mutation::PortSwap { index, to });
        }
        for attr in e.present_attrs().iter() {
            out.push(Mutation::AttrDrop { index, attr });
        }
        for attr in [Attr::Dom, Attr::Wd] {
            if e.has(attr) {
                out.push(Mutation::DomainPerturb { index, attr });
            }
        }
    }
    out
}

fn perturb(d: &FiniteDomain) -> FiniteDomain {
    match (d.min(), d.max()) {
        (Some(lo), Some(_)) if d.size() > 1 => d.without_value(lo),
        (_, Some(hi)) if hi < FULL_MAX => d.union(&FiniteDomain::singleton(hi + 1)),
        (Some(lo), _) if lo > 0 => d.union(&FiniteDomain::singleton(lo - 1)),
        _ => FiniteDomain::singleton(0),
    }
}

pub fn apply(events: &[TraceEvent], m: Mutation) -> Vec<TraceEvent> {
    let mut out = events.to_vec();
    match m {
        Mutation::PortSwap { index, to } => out[index].port = to,
        Mutation::AttrDrop { index, attr } => {
            let keep = out[index]
                .present_attrs()
                .iter()
                .filter(|&a| a != attr)
                .fold(Default::default(), crate::trace::AttrSet::with);
            out[index].project(keep);
        }
        Mutation::DomainPerturb { index, attr } => {
            let e = &mut out[index];
            let slot = if attr == Attr::Dom { &mut e.dom } else { &mut e.wd };
            if let Some(d) = slot {
                *d = perturb(d);
            }
        }
    }
    out
}
