//! The observed solver state: variables and their domains, the constraint
//! store, and the active / sleeping / rejected sets.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::domain::FiniteDomain;
use crate::ids::{ConstraintId, VarId};
use crate::propagators::{ChangeRecord, ConstraintDef};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverState {
    /// The declared variables (keys) and their current domains.
    pub domains: BTreeMap<VarId, FiniteDomain>,
    pub constraints: BTreeMap<ConstraintId, ConstraintDef>,
    pub active: Option<ConstraintId>,
    pub sleeping: BTreeSet<ConstraintId>,
    pub rejected: Option<ConstraintId>,
    /// Sleeping constraints that received a domain change, in arrival order.
    pub pending_wake: VecDeque<ConstraintId>,
    /// Changes seen by each sleeping constraint since it was suspended.
    pub changes: BTreeMap<ConstraintId, ChangeRecord>,
}

impl SolverState {
    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.domains.keys().copied()
    }

    pub fn all_ground(&self) -> bool {
        self.domains.values().all(FiniteDomain::is_singleton)
    }

    /// Checks the structural invariants; returns the first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        if let Some(a) = self.active {
            if self.sleeping.contains(&a) {
                return Err(format!("{a} is both active and sleeping"));
            }
        }
        if let Some(r) = self.rejected {
            if self.active == Some(r) || self.sleeping.contains(&r) {
                return Err(format!("rejected {r} is also active or sleeping"));
            }
        }
        let known = |c: &ConstraintId| self.constraints.contains_key(c);
        for c in self.active.iter().chain(&self.rejected).chain(&self.sleeping).chain(&self.pending_wake) {
            if !known(c) {
                return Err(format!("{c} is scheduled but not in the constraint store"));
            }
        }
        for def in self.constraints.values() {
            for v in def.vars() {
                if !self.domains.contains_key(&v) {
                    return Err(format!("{} mentions undeclared {v}", def.id));
                }
            }
        }
        Ok(())
    }
}

/// Whole-state access for trace consumers, read at the current event.
pub trait StateView {
    fn domains(&self) -> BTreeMap<VarId, FiniteDomain>;
    /// Live constraints in id order, with their surface text.
    fn constraints(&self) -> Vec<(ConstraintId, String)>;
}

impl StateView for SolverState {
    fn domains(&self) -> BTreeMap<VarId, FiniteDomain> {
        self.domains.clone()
    }

    fn constraints(&self) -> Vec<(ConstraintId, String)> {
        self.constraints.values().map(|d| (d.id, d.ctext())).collect()
    }
}

/// A state view with nothing in it, for emitting outside an engine.
pub struct NoState;

impl StateView for NoState {
    fn domains(&self) -> BTreeMap<VarId, FiniteDomain> {
        BTreeMap::new()
    }

    fn constraints(&self) -> Vec<(ConstraintId, String)> {
        Vec::new()
    }
}

/// An owned copy of a [`StateView`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateSnapshot {
    pub domains: BTreeMap<VarId, FiniteDomain>,
    pub constraints: Vec<(ConstraintId, String)>,
}

impl StateSnapshot {
    pub fn capture(view: &dyn StateView) -> Self {
        StateSnapshot { domains: view.domains(), constraints: view.constraints() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::Constraint;

    #[test]
    fn invariants_catch_overlapping_sets() {
        let mut st = SolverState::default();
        st.domains.insert(VarId(1), FiniteDomain::range(1, 3));
        st.domains.insert(VarId(2), FiniteDomain::range(1, 3));
        let c = ConstraintId(1);
        st.constraints.insert(c, ConstraintDef { id: c, constraint: Constraint::Gt(VarId(1), VarId(2)) });
        st.active = Some(c);
        assert!(st.check_invariants().is_ok());
        st.sleeping.insert(c);
        assert!(st.check_invariants().is_err());
        st.sleeping.clear();
        st.pending_wake.push_back(ConstraintId(9));
        assert!(st.check_invariants().is_err());
    }
}
