//! Handle/identifier tables for the fast engine.
//!
//! Handles are internal slot indices and are reused after backtracking;
//! trace identifiers are never reused.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ids::{ConstraintId, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("no live entity with handle {0}")]
    UnknownHandle(usize),
    #[error("no live entity with id {0}")]
    UnknownId(String),
}

/// One bidirectional table. Handles are dense slot indices, so the forward
/// direction is a vector; ids go through an ordered map.
#[derive(Debug, Clone)]
pub struct Table<I> {
    by_handle: Vec<Option<(I, String)>>,
    by_id: BTreeMap<I, usize>,
}

impl<I> Default for Table<I> {
    fn default() -> Self {
        Table { by_handle: Vec::new(), by_id: BTreeMap::new() }
    }
}

impl<I: Copy + Ord + fmt::Display> Table<I> {
    pub fn insert(&mut self, handle: usize, id: I, payload: String) {
        if handle >= self.by_handle.len() {
            self.by_handle.resize_with(handle + 1, || None);
        }
        let old = self.by_handle[handle].replace((id, payload));
        debug_assert!(old.is_none(), "handle {handle} is live");
        self.by_id.insert(id, handle);
    }

    pub fn remove(&mut self, handle: usize) -> Result<I, RegistryError> {
        let (id, _) =
            self.by_handle.get_mut(handle).and_then(Option::take).ok_or(RegistryError::UnknownHandle(handle))?;
        self.by_id.remove(&id);
        Ok(id)
    }

    /// Drops every handle `>= first`.
    pub fn truncate(&mut self, first: usize) {
        if first < self.by_handle.len() {
            for (id, _) in self.by_handle.drain(first..).flatten() {
                self.by_id.remove(&id);
            }
        }
    }

    fn entry(&self, handle: usize) -> Result<&(I, String), RegistryError> {
        self.by_handle.get(handle).and_then(Option::as_ref).ok_or(RegistryError::UnknownHandle(handle))
    }

    #[inline]
    pub fn id(&self, handle: usize) -> Result<I, RegistryError> {
        self.entry(handle).map(|(id, _)| *id)
    }

    pub fn handle(&self, id: I) -> Result<usize, RegistryError> {
        self.by_id.get(&id).copied().ok_or_else(|| RegistryError::UnknownId(id.to_string()))
    }

    pub fn payload(&self, handle: usize) -> Result<&str, RegistryError> {
        self.entry(handle).map(|(_, p)| p.as_str())
    }

    /// Live ids, ascending.
    pub fn enumerate(&self) -> Vec<I> {
        self.by_id.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn check_bijection(&self) -> Result<(), String> {
        let live = self.by_handle.iter().flatten().count();
        if live != self.by_id.len() {
            return Err(format!("{live} handles but {} ids", self.by_id.len()));
        }
        for (h, (id, _)) in self.by_handle.iter().enumerate().filter_map(|(h, e)| Some((h, e.as_ref()?))) {
            if self.by_id.get(id) != Some(&h) {
                return Err(format!("handle {h} maps to {id}, which maps back to {:?}", self.by_id.get(id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    /// Payload: the declared name.
    pub vars: Table<VarId>,
    /// Payload: the surface text.
    pub constraints: Table<ConstraintId>,
}

impl Registry {
    pub fn check_bijection(&self) -> Result<(), String> {
        self.vars.check_bijection().map_err(|e| format!("variables: {e}"))?;
        self.constraints.check_bijection().map_err(|e| format!("constraints: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups_are_inverse() {
        let mut r = Registry::default();
        r.vars.insert(0, VarId(1), "i".into());
        r.vars.insert(1, VarId(2), "a".into());
        assert_eq!(r.vars.id(r.vars.handle(VarId(1)).unwrap()).unwrap(), VarId(1));
        assert_eq!(r.vars.enumerate(), vec![VarId(1), VarId(2)]);
        r.vars.truncate(1);
        assert_eq!(r.vars.enumerate(), vec![VarId(1)]);
        assert!(r.vars.handle(VarId(2)).is_err());
        r.vars.insert(1, VarId(3), "k".into());
        assert_eq!(r.vars.id(1).unwrap(), VarId(3));
        assert_eq!(r.vars.remove(1), Ok(VarId(3)));
        assert_eq!(r.vars.id(7), Err(RegistryError::UnknownHandle(7)));
        assert!(r.check_bijection().is_ok());
    }
}
