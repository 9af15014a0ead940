//! The constraint catalog.
//!
//! Each constraint kind provides a withdrawal function: given the current
//! domains, the set of values of one of its variables that cannot take part in
//! any solution of the constraint. Rejection, quiescence and wake conditions
//! are all derived from it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::domain::{FiniteDomain, UpdateKind, UpdateKinds};
use crate::ids::{ConstraintId, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Gt,
    Eq,
    NeqOffset,
    Element,
}

impl ConstraintKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Gt => "gt",
            ConstraintKind::Eq => "eq",
            ConstraintKind::NeqOffset => "neq",
            ConstraintKind::Element => "element",
        }
    }

    /// Update kinds that wake a sleeping constraint of this kind.
    pub fn subscription(self) -> UpdateKinds {
        use UpdateKind::*;
        match self {
            ConstraintKind::Gt => UpdateKinds::of(&[Min, Max, Ground, Empty]),
            ConstraintKind::Eq | ConstraintKind::Element => UpdateKinds::of(&UpdateKind::ALL),
            ConstraintKind::NeqOffset => UpdateKinds::of(&[Ground, Empty]),
        }
    }
}

/// A constraint over variables of type `V`.
///
/// Programs hold constraints over declaration indices; engines map them to
/// [`VarId`]s (or internal slots) when the constraint is posted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint<V = VarId> {
    /// `x > y`
    Gt(V, V),
    /// `x = y`
    Eq(V, V),
    /// `x != y + k`
    NeqOffset { x: V, y: V, k: i64 },
    /// `list[index] = value`, 1-based.
    Element { index: V, list: Vec<i64>, value: V },
}

impl<V: Copy + Eq> Constraint<V> {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Gt(..) => ConstraintKind::Gt,
            Constraint::Eq(..) => ConstraintKind::Eq,
            Constraint::NeqOffset { .. } => ConstraintKind::NeqOffset,
            Constraint::Element { .. } => ConstraintKind::Element,
        }
    }

    /// `Var(c)` in argument order.
    pub fn vars(&self) -> [V; 2] {
        match *self {
            Constraint::Gt(x, y) | Constraint::Eq(x, y) => [x, y],
            Constraint::NeqOffset { x, y, .. } => [x, y],
            Constraint::Element { index, value, .. } => [index, value],
        }
    }

    pub fn position(&self, v: V) -> Option<usize> {
        self.vars().iter().position(|&u| u == v)
    }

    pub fn map_vars<W, F: FnMut(V) -> W>(&self, mut f: F) -> Constraint<W> {
        match self {
            Constraint::Gt(x, y) => Constraint::Gt(f(*x), f(*y)),
            Constraint::Eq(x, y) => Constraint::Eq(f(*x), f(*y)),
            Constraint::NeqOffset { x, y, k } => Constraint::NeqOffset { x: f(*x), y: f(*y), k: *k },
            Constraint::Element { index, list, value } => {
                let index = f(*index);
                Constraint::Element { index, list: list.clone(), value: f(*value) }
            }
        }
    }

    /// Surface text with rendered variables, e.g. `element([v1,[2,5,7],v2])`.
    pub fn render_with<F: Fn(V) -> String>(&self, name: F) -> String {
        let args = match self {
            Constraint::Gt(x, y) | Constraint::Eq(x, y) => format!("{},{}", name(*x), name(*y)),
            Constraint::NeqOffset { x, y, k } => format!("{},{},{k}", name(*x), name(*y)),
            Constraint::Element { index, list, value } => {
                let items: Vec<String> = list.iter().map(|n| n.to_string()).collect();
                format!("{},[{}],{}", name(*index), items.join(","), name(*value))
            }
        };
        format!("{}([{args}])", self.kind().name())
    }
}

impl<V: Copy + Eq + fmt::Display> fmt::Display for Constraint<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(|v| v.to_string()))
    }
}

/// A posted constraint instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintDef {
    pub id: ConstraintId,
    pub constraint: Constraint<VarId>,
}

impl ConstraintDef {
    pub fn kind(&self) -> ConstraintKind {
        self.constraint.kind()
    }

    pub fn vars(&self) -> [VarId; 2] {
        self.constraint.vars()
    }

    pub fn ctext(&self) -> String {
        self.constraint.to_string()
    }
}

/// Read access to a domain map.
pub trait DomainLookup<V> {
    fn domain(&self, v: V) -> &FiniteDomain;
}

impl DomainLookup<VarId> for BTreeMap<VarId, FiniteDomain> {
    fn domain(&self, v: VarId) -> &FiniteDomain {
        &self[&v]
    }
}

impl DomainLookup<VarId> for HashMap<VarId, FiniteDomain> {
    fn domain(&self, v: VarId) -> &FiniteDomain {
        &self[&v]
    }
}

impl DomainLookup<usize> for [FiniteDomain] {
    fn domain(&self, v: usize) -> &FiniteDomain {
        &self[v]
    }
}

impl DomainLookup<usize> for Vec<FiniteDomain> {
    fn domain(&self, v: usize) -> &FiniteDomain {
        &self[v]
    }
}

fn offset_value(base: u32, k: i64) -> Option<u32> {
    u32::try_from(base as i64 + k).ok()
}

fn list_value(list: &[i64], j: u32) -> Option<u32> {
    let idx = (j as usize).checked_sub(1)?;
    list.get(idx).and_then(|&n| u32::try_from(n).ok())
}

/// Values of `V` at position `pos` in `Var(c)` whose withdrawal the constraint
/// justifies. Empty if any domain of `c` is empty.
pub fn delta_at<V: Copy + Eq, D: DomainLookup<V> + ?Sized>(c: &Constraint<V>, pos: usize, doms: &D) -> FiniteDomain {
    let [a, b] = c.vars();
    let (da, db) = (doms.domain(a), doms.domain(b));
    if da.is_empty() || db.is_empty() {
        return FiniteDomain::empty();
    }
    match (c, pos) {
        // x > y by bounds: x <= min(y) and y >= max(x) are inconsistent.
        (Constraint::Gt(..), 0) => da.restrict_max(db.min().unwrap_or(0)),
        (Constraint::Gt(..), _) => db.restrict_min(da.max().unwrap_or(0)),
        (Constraint::Eq(..), 0) => da.difference(db),
        (Constraint::Eq(..), _) => db.difference(da),
        (Constraint::NeqOffset { k, .. }, 0) => match db.value().and_then(|b| offset_value(b, *k)) {
            Some(t) if da.contains(t) => FiniteDomain::singleton(t),
            _ => FiniteDomain::empty(),
        },
        (Constraint::NeqOffset { k, .. }, _) => match da.value().and_then(|a| offset_value(a, -*k)) {
            Some(t) if db.contains(t) => FiniteDomain::singleton(t),
            _ => FiniteDomain::empty(),
        },
        (Constraint::Element { list, .. }, 0) => {
            let supported = FiniteDomain::from_values(
                (1..=list.len() as u32)
                    .filter(|&j| da.contains(j) && list_value(list, j).is_some_and(|n| db.contains(n))),
            );
            da.difference(&supported)
        }
        (Constraint::Element { list, .. }, _) => {
            let reachable = FiniteDomain::from_values(
                (1..=list.len() as u32).filter(|&j| da.contains(j)).filter_map(|j| list_value(list, j)),
            );
            db.difference(&reachable)
        }
    }
}

/// `W^c_x(D)`. Panics if `x` is not a variable of `c`.
pub fn delta<V: Copy + Eq + fmt::Debug, D: DomainLookup<V> + ?Sized>(
    c: &Constraint<V>,
    x: V,
    doms: &D,
) -> FiniteDomain {
    let pos =
        c.position(x).unwrap_or_else(|| panic!("delta contract violated: {x:?} is not a variable of the constraint"));
    delta_at(c, pos, doms)
}

/// True when a variable of `c` has an empty domain, or when some withdrawal
/// would wipe out a whole domain. All withdrawals are computed on `doms` as given.
pub fn unsatisfiable<V: Copy + Eq, D: DomainLookup<V> + ?Sized>(c: &Constraint<V>, doms: &D) -> bool {
    let vars = c.vars();
    if vars.iter().any(|&v| doms.domain(v).is_empty()) {
        return true;
    }
    (0..vars.len()).any(|pos| {
        let w = delta_at(c, pos, doms);
        !w.is_empty() && w == *doms.domain(vars[pos])
    })
}

/// True when `c` is satisfiable and cannot withdraw anything.
pub fn no_reduction<V: Copy + Eq, D: DomainLookup<V> + ?Sized>(c: &Constraint<V>, doms: &D) -> bool {
    !unsatisfiable(c, doms) && (0..c.vars().len()).all(|pos| delta_at(c, pos, doms).is_empty())
}

/// Update kinds accumulated per variable since a constraint was last suspended.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeRecord {
    per_var: BTreeMap<VarId, UpdateKinds>,
}

impl ChangeRecord {
    pub fn record(&mut self, var: VarId, kinds: UpdateKinds) {
        let slot = self.per_var.entry(var).or_default();
        *slot = slot.union(kinds);
    }

    pub fn kinds(&self) -> UpdateKinds {
        self.per_var.values().fold(UpdateKinds::NONE, |acc, &k| acc.union(k))
    }

    pub fn get(&self, var: VarId) -> UpdateKinds {
        self.per_var.get(&var).copied().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.per_var.is_empty()
    }

    pub fn clear(&mut self) {
        self.per_var.clear();
    }
}

pub fn wake_condition<V: Copy + Eq>(c: &Constraint<V>, changes: &ChangeRecord) -> bool {
    changes.kinds().intersects(c.kind().subscription())
}
