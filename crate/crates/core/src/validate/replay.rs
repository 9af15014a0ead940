//! Domain reconstruction from a trace, without rule checking.

use std::collections::BTreeMap;

use crate::domain::FiniteDomain;
use crate::ids::{ChoicePointId, ConstraintId, VarId};
use crate::state::{StateSnapshot, StateView};
use crate::trace::{Port, TraceEvent};

/// Rebuilds the domain map and constraint store event by event. Events
/// missing the attributes it needs are skipped.
#[derive(Debug, Clone, Default)]
pub struct DomainReplay {
    current: StateSnapshot,
    choices: Vec<(ChoicePointId, StateSnapshot)>,
}

impl DomainReplay {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, e: &TraceEvent) {
        match e.port {
            Port::NewVariable => {
                if let (Some(v), Some(d)) = (e.vid, &e.dom) {
                    self.current.domains.insert(v, d.clone());
                }
            }
            Port::NewConstraint => {
                if let (Some(c), Some(text)) = (e.cid, &e.ctext) {
                    self.current.constraints.push((c, text.clone()));
                }
            }
            Port::Reduce => {
                let Some(v) = e.vid else { return };
                if let Some(d) = &e.dom {
                    self.current.domains.insert(v, d.clone());
                } else if let (Some(w), Some(d)) = (&e.wd, self.current.domains.get_mut(&v)) {
                    *d = d.difference(w);
                }
            }
            Port::ChoicePoint => {
                if let Some(p) = e.cpid {
                    self.choices.push((p, self.current.clone()));
                }
            }
            Port::BackTo => {
                let Some(p) = e.cpid else { return };
                if let Some(i) = self.choices.iter().rposition(|(q, _)| *q == p) {
                    self.choices.truncate(i + 1);
                    self.current = self.choices[i].1.clone();
                }
            }
            _ => {}
        }
    }

    pub fn domain(&self, v: VarId) -> Option<&FiniteDomain> {
        self.current.domains.get(&v)
    }

    pub fn domain_map(&self) -> &BTreeMap<VarId, FiniteDomain> {
        &self.current.domains
    }

    pub fn snapshot(&self) -> &StateSnapshot {
        &self.current
    }
}

impl StateView for DomainReplay {
    fn domains(&self) -> BTreeMap<VarId, FiniteDomain> {
        self.current.domains.clone()
    }

    fn constraints(&self) -> Vec<(ConstraintId, String)> {
        self.current.constraints.clone()
    }
}

/// Domain maps after each event (index `k` holds the state after event `k+1`).
pub fn replay_domains(events: &[TraceEvent]) -> Vec<BTreeMap<VarId, FiniteDomain>> {
    let mut r = DomainReplay::new();
    events
        .iter()
        .map(|e| {
            r.apply(e);
            r.domain_map().clone()
        })
        .collect()
}
