//! The fast engine: a FIFO propagation queue, trail-based backtracking and a
//! handle/id registry. Its traces follow the same rules as the reference
//! engine but propagation order differs.
//!
//! Variables are created with the full domain and then reduced to their
//! declared domain by the label constraint `c0`.

pub mod registry;
pub mod trail;

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::domain::{classify_bounds, FiniteDomain, UpdateKinds, FULL_MAX};
use crate::ids::{ChoicePointId, ConstraintId, IdCounter, VarId};
use crate::program::{Item, Program, Strategy};
use crate::propagators::Constraint;
use crate::ref_engine::{EngineResult, Outcome};
use crate::search::{select_value, select_var};
use crate::state::StateView;
use crate::trace::{Bindings, EmissionConfig, Port, TraceError, TraceEvent, TraceSink, Tracer};

pub use registry::{Registry, RegistryError, Table};
pub use trail::Trail;

/// Called after every event with its chrono and the live registry.
pub type AuditHook<'a> = &'a mut dyn FnMut(u64, &Registry);

#[derive(Debug, Clone)]
enum Task {
    Item(Item),
    Assign(usize, u32),
    Exclude(usize, u32),
}

struct Frame {
    id: ChoicePointId,
    vars: usize,
    cons: usize,
    agenda: Vec<Task>,
    names: HashMap<usize, usize>,
    remaining: Vec<Vec<Task>>,
}

/// Outcome of one domain update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Update {
    Same,
    Changed,
    Wiped,
}

/// Solver state, readable by sinks.
struct Store {
    doms: Vec<FiniteDomain>,
    cons: Vec<Constraint<usize>>,
    /// Constraint slots watching each variable slot, ascending.
    watchers: Vec<Vec<usize>>,
    registry: Registry,
}

impl StateView for Store {
    fn domains(&self) -> BTreeMap<VarId, FiniteDomain> {
        (0..self.doms.len()).map(|s| (self.registry.vars.id(s).expect("live"), self.doms[s].clone())).collect()
    }

    fn constraints(&self) -> Vec<(ConstraintId, String)> {
        (0..self.cons.len())
            .map(|s| {
                let reg = &self.registry.constraints;
                (reg.id(s).expect("live"), reg.payload(s).expect("live").to_string())
            })
            .collect()
    }
}

struct FastEngine<'p, 'a> {
    program: &'p Program,
    strategy: Strategy,
    st: Store,
    trail: Trail,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    agenda: Vec<Task>,
    names: HashMap<usize, usize>,
    frames: Vec<Frame>,
    rejected: bool,
    var_ids: IdCounter,
    con_ids: IdCounter,
    cp_ids: IdCounter,
    audit: Option<AuditHook<'a>>,
}

fn push_alt(agenda: &mut Vec<Task>, alt: Vec<Task>) {
    agenda.extend(alt.into_iter().rev());
}

fn items(alt: &[Item]) -> Vec<Task> {
    alt.iter().cloned().map(Task::Item).collect()
}

fn list_value(list: &[i64], j: usize) -> Option<u32> {
    list.get(j.checked_sub(1)?).and_then(|&n| u32::try_from(n).ok())
}

impl<'p, 'a> FastEngine<'p, 'a> {
    fn emit<F: FnOnce(u64, &Store) -> TraceEvent>(
        &mut self,
        t: &mut Tracer,
        port: Port,
        build: F,
    ) -> Result<(), TraceError> {
        let st = &self.st;
        t.emit(port, st, |c| build(c, st))?;
        if let Some(hook) = self.audit.as_mut() {
            hook(t.chrono(), &self.st.registry);
        }
        Ok(())
    }

    fn var_id(st: &Store, slot: usize) -> VarId {
        st.registry.vars.id(slot).expect("live variable")
    }

    fn con_id(st: &Store, slot: Option<usize>) -> ConstraintId {
        slot.map_or(ConstraintId::LABEL, |s| st.registry.constraints.id(s).expect("live constraint"))
    }

    /// The one place a domain changes: trails, schedules watchers and emits
    /// the reduce event. `by` is `None` for the label constraint.
    fn commit(&mut self, t: &mut Tracer, by: Option<usize>, slot: usize, new: FiniteDomain) -> Result<(), TraceError> {
        let old = std::mem::replace(&mut self.st.doms[slot], new);
        let kinds = classify_bounds(&old, &self.st.doms[slot]);
        self.schedule(slot, kinds, by);
        let result = self.emit(t, Port::Reduce, |c, st| {
            TraceEvent::reduce(c, Self::con_id(st, by), Self::var_id(st, slot), &old, st.doms[slot].clone())
        });
        self.trail.record(slot, old);
        result
    }

    fn schedule(&mut self, slot: usize, kinds: UpdateKinds, by: Option<usize>) {
        for &ci in &self.st.watchers[slot] {
            if Some(ci) != by && !self.queued[ci] && self.st.cons[ci].kind().subscription().intersects(kinds) {
                self.queued[ci] = true;
                self.queue.push_back(ci);
            }
        }
    }

    // Specialised reduction paths. Each returns `Wiped` without touching the
    // domain when the update would empty it.

    fn set_min(&mut self, t: &mut Tracer, by: Option<usize>, slot: usize, lo: u64) -> Result<Update, TraceError> {
        let d = &self.st.doms[slot];
        match d.min() {
            Some(m) if (m as u64) >= lo => Ok(Update::Same),
            _ if lo > d.max().unwrap_or(0) as u64 => Ok(Update::Wiped),
            _ => {
                let new = d.restrict_min(lo as u32);
                self.commit(t, by, slot, new).map(|_| Update::Changed)
            }
        }
    }

    fn set_max(&mut self, t: &mut Tracer, by: Option<usize>, slot: usize, hi: i64) -> Result<Update, TraceError> {
        let d = &self.st.doms[slot];
        match d.max() {
            Some(m) if (m as i64) <= hi => Ok(Update::Same),
            _ if hi < d.min().unwrap_or(0) as i64 => Ok(Update::Wiped),
            _ => {
                let new = d.restrict_max(hi as u32);
                self.commit(t, by, slot, new).map(|_| Update::Changed)
            }
        }
    }

    fn remove_value(&mut self, t: &mut Tracer, by: Option<usize>, slot: usize, v: i64) -> Result<Update, TraceError> {
        let d = &self.st.doms[slot];
        let Ok(v) = u32::try_from(v) else { return Ok(Update::Same) };
        if !d.contains(v) {
            return Ok(Update::Same);
        }
        if d.is_singleton() {
            return Ok(Update::Wiped);
        }
        let new = d.without_value(v);
        self.commit(t, by, slot, new).map(|_| Update::Changed)
    }

    fn assign(&mut self, t: &mut Tracer, slot: usize, v: u32) -> Result<(), TraceError> {
        debug_assert!(self.st.doms[slot].contains(v) && !self.st.doms[slot].is_singleton());
        self.commit(t, None, slot, FiniteDomain::singleton(v))
    }

    /// Keeps only `keep`.
    fn retain(
        &mut self,
        t: &mut Tracer,
        by: Option<usize>,
        slot: usize,
        keep: &FiniteDomain,
    ) -> Result<Update, TraceError> {
        let d = &self.st.doms[slot];
        let new = d.intersection(keep);
        if new.is_empty() {
            Ok(Update::Wiped)
        } else if new.size() == d.size() {
            Ok(Update::Same)
        } else {
            self.commit(t, by, slot, new).map(|_| Update::Changed)
        }
    }

    /// Runs constraint `ci` to its own fixpoint. Returns false on wipe-out.
    fn propagate(&mut self, t: &mut Tracer, ci: usize) -> Result<bool, TraceError> {
        let by = Some(ci);
        loop {
            let c = self.st.cons[ci].clone();
            let mut changed = false;
            let mut note = |u: Update| -> bool {
                changed |= u == Update::Changed;
                u != Update::Wiped
            };
            let ok = match c {
                Constraint::Gt(x, y) => {
                    let lo = self.st.doms[y].min().expect("non-empty") as u64 + 1;
                    note(self.set_min(t, by, x, lo)?) && {
                        let hi = self.st.doms[x].max().expect("non-empty") as i64 - 1;
                        note(self.set_max(t, by, y, hi)?)
                    }
                }
                Constraint::Eq(x, y) => {
                    let dy = self.st.doms[y].clone();
                    note(self.retain(t, by, x, &dy)?) && {
                        let dx = self.st.doms[x].clone();
                        note(self.retain(t, by, y, &dx)?)
                    }
                }
                Constraint::NeqOffset { x, y, k } => {
                    let yv = self.st.doms[y].value();
                    (match yv {
                        Some(b) => note(self.remove_value(t, by, x, b as i64 + k)?),
                        None => true,
                    }) && match self.st.doms[x].value() {
                        Some(a) => note(self.remove_value(t, by, y, a as i64 - k)?),
                        None => true,
                    }
                }
                Constraint::Element { index, ref list, value } => {
                    let dv = &self.st.doms[value];
                    let di = &self.st.doms[index];
                    let supported = FiniteDomain::from_values(
                        (1..=list.len())
                            .filter(|&j| di.contains(j as u32) && list_value(list, j).is_some_and(|n| dv.contains(n)))
                            .map(|j| j as u32),
                    );
                    note(self.retain(t, by, index, &supported)?) && {
                        let di = &self.st.doms[index];
                        let reachable = FiniteDomain::from_values(
                            (1..=list.len()).filter(|&j| di.contains(j as u32)).filter_map(|j| list_value(list, j)),
                        );
                        note(self.retain(t, by, value, &reachable)?)
                    }
                }
            };
            if !ok {
                return Ok(false);
            }
            if !changed {
                return Ok(true);
            }
        }
    }

    /// Propagation of an active constraint, closed by suspend or reject.
    fn run_active(&mut self, t: &mut Tracer, ci: usize) -> Result<(), TraceError> {
        let port = if self.propagate(t, ci)? { Port::Suspend } else { Port::Reject };
        if port == Port::Reject {
            self.rejected = true;
            self.clear_queue();
        }
        self.emit(t, port, |c, st| TraceEvent::on_constraint(c, port, Self::con_id(st, Some(ci))))
    }

    fn clear_queue(&mut self) {
        for ci in self.queue.drain(..) {
            self.queued[ci] = false;
        }
    }

    fn declare(&mut self, t: &mut Tracer, task: Task) -> Result<(), TraceError> {
        match task {
            Task::Item(Item::Var(decl)) => {
                let slot = self.st.doms.len();
                let id = VarId(self.var_ids.fresh());
                let d = &self.program.decls[decl];
                self.st.registry.vars.insert(slot, id, d.name.clone());
                self.st.doms.push(FiniteDomain::full());
                self.st.watchers.push(Vec::new());
                self.names.insert(decl, slot);
                self.emit(t, Port::NewVariable, |c, _| TraceEvent::new_variable(c, id, FiniteDomain::full()))?;
                if d.domain != FiniteDomain::full() {
                    let (lo, hi) = (d.domain.min().expect("non-empty"), d.domain.max().expect("non-empty"));
                    if d.domain.size() == (hi - lo) as u64 + 1 {
                        // An interval: bound tightening, one reduce for both ends.
                        self.commit(t, None, slot, FiniteDomain::range(lo, hi))?;
                    } else {
                        let keep = d.domain.clone();
                        self.retain(t, None, slot, &keep)?;
                    }
                }
                Ok(())
            }
            Task::Item(Item::Con(con)) => {
                let ci = self.st.cons.len();
                let id = ConstraintId(self.con_ids.fresh());
                let constraint = con.constraint.map_vars(|d| self.names[&d]);
                let ctext = constraint.render_with(|s| Self::var_id(&self.st, s).to_string());
                self.st.registry.constraints.insert(ci, id, ctext.clone());
                for v in constraint.vars() {
                    self.st.watchers[v].push(ci);
                }
                self.st.cons.push(constraint);
                if self.queued.len() <= ci {
                    self.queued.resize(ci + 1, false);
                }
                self.emit(t, Port::NewConstraint, |c, _| TraceEvent::new_constraint(c, id, ctext))?;
                self.run_active(t, ci)
            }
            Task::Assign(slot, v) => self.assign(t, slot, v),
            Task::Exclude(slot, v) => {
                self.remove_value(t, None, slot, v as i64).map(|u| debug_assert_eq!(u, Update::Changed))
            }
            Task::Item(Item::Choice(_)) => unreachable!("choices are opened by the caller"),
        }
    }

    fn open_choice(&mut self, t: &mut Tracer, remaining: Vec<Vec<Task>>, first: Vec<Task>) -> Result<(), TraceError> {
        let id = ChoicePointId(self.cp_ids.fresh());
        self.trail.push_mark();
        self.frames.push(Frame {
            id,
            vars: self.st.doms.len(),
            cons: self.st.cons.len(),
            agenda: self.agenda.clone(),
            names: self.names.clone(),
            remaining,
        });
        push_alt(&mut self.agenda, first);
        self.emit(t, Port::ChoicePoint, |c, _| TraceEvent::on_choice(c, Port::ChoicePoint, id))
    }

    fn back_to(&mut self, t: &mut Tracer) -> Result<bool, TraceError> {
        let Some(frame) = self.frames.last_mut() else {
            self.emit(t, Port::Failure, |c, _| TraceEvent::failure(c))?;
            return Ok(false);
        };
        let alt = frame.remaining.remove(0);
        let last = frame.remaining.is_empty();
        let (id, vars, cons) = (frame.id, frame.vars, frame.cons);
        self.agenda = frame.agenda.clone();
        self.names = frame.names.clone();
        if last {
            self.frames.pop();
        }
        self.trail.restore(&mut self.st.doms, last);
        self.st.doms.truncate(vars);
        self.st.watchers.truncate(vars);
        for w in &mut self.st.watchers {
            while w.last().is_some_and(|&ci| ci >= cons) {
                w.pop();
            }
        }
        self.st.cons.truncate(cons);
        self.st.registry.vars.truncate(vars);
        self.st.registry.constraints.truncate(cons);
        self.rejected = false;
        push_alt(&mut self.agenda, alt);
        self.emit(t, Port::BackTo, |c, _| TraceEvent::on_choice(c, Port::BackTo, id))?;
        Ok(true)
    }

    fn run(&mut self, t: &mut Tracer) -> Result<Outcome, TraceError> {
        loop {
            if self.rejected {
                if !self.back_to(t)? {
                    return Ok(Outcome::Exhausted);
                }
                continue;
            }
            if matches!(
                self.agenda.last(),
                Some(Task::Item(Item::Var(_) | Item::Con(_)) | Task::Assign(..) | Task::Exclude(..))
            ) {
                let task = self.agenda.pop().expect("peeked");
                self.declare(t, task)?;
                continue;
            }
            if let Some(ci) = self.queue.pop_front() {
                self.queued[ci] = false;
                self.emit(t, Port::Awake, |c, st| {
                    TraceEvent::on_constraint(c, Port::Awake, Self::con_id(st, Some(ci)))
                })?;
                self.run_active(t, ci)?;
                continue;
            }
            if let Some(Task::Item(Item::Choice(_))) = self.agenda.last() {
                let Some(Task::Item(Item::Choice(alts))) = self.agenda.pop() else { unreachable!() };
                let mut alts: Vec<Vec<Task>> = alts.iter().map(|a| items(a)).collect();
                let first = alts.remove(0);
                self.open_choice(t, alts, first)?;
                continue;
            }
            let sizes: Vec<u64> = self.st.doms.iter().map(FiniteDomain::size).collect();
            let Some(slot) = select_var(self.strategy.var_order, &sizes) else {
                let bindings: Bindings = (0..self.st.doms.len())
                    .map(|s| (Self::var_id(&self.st, s), self.st.doms[s].value().expect("ground")))
                    .collect();
                let out = bindings.clone();
                self.emit(t, Port::Solution, |c, _| TraceEvent::solution(c, out))?;
                return Ok(Outcome::Solution(bindings));
            };
            let v = select_value(self.strategy.val_order, &self.st.doms[slot]).expect("non-empty");
            self.open_choice(t, vec![vec![Task::Exclude(slot, v)]], vec![Task::Assign(slot, v)])?;
        }
    }
}

/// Runs `program` to its first solution or to exhaustion.
pub fn solve_fast(
    program: &Program,
    strategy: Strategy,
    config: EmissionConfig,
    sink: &mut dyn TraceSink,
) -> Result<EngineResult, TraceError> {
    solve_fast_audited(program, strategy, config, sink, None)
}

/// [`solve_fast`] with a hook invoked after every event.
pub fn solve_fast_audited(
    program: &Program,
    strategy: Strategy,
    config: EmissionConfig,
    sink: &mut dyn TraceSink,
    audit: Option<AuditHook<'_>>,
) -> Result<EngineResult, TraceError> {
    debug_assert!(program.decls.iter().all(|d| d.domain.max().is_some_and(|m| m <= FULL_MAX)));
    let mut tracer = Tracer::new(config, sink);
    let mut agenda = Vec::new();
    push_alt(&mut agenda, items(&program.items));
    let mut engine = FastEngine {
        program,
        strategy,
        st: Store { doms: Vec::new(), cons: Vec::new(), watchers: Vec::new(), registry: Registry::default() },
        trail: Trail::default(),
        queue: VecDeque::new(),
        queued: Vec::new(),
        agenda,
        names: HashMap::new(),
        frames: Vec::new(),
        rejected: false,
        var_ids: IdCounter::default(),
        con_ids: IdCounter::default(),
        cp_ids: IdCounter::default(),
        audit,
    };
    let outcome = engine.run(&mut tracer)?;
    tracer.finish()?;
    Ok(EngineResult { outcome, event_count: tracer.chrono() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;
    use crate::trace::VecSink;

    #[test]
    fn element_choice_solution() {
        let p = parse_program(
            "var i in 0-268435455; var a in 0-268435455; con c1: element(i,[2,5,7],a);
             choice { con c2: eq(a,i); } or { con c3: eq_const(a,2); };",
        )
        .unwrap();
        let mut sink = VecSink::default();
        let r = solve_fast(&p, Strategy::default(), EmissionConfig::all(), &mut sink).unwrap();
        let b = r.bindings().unwrap();
        assert_eq!((b[&VarId(1)], b[&VarId(2)]), (1, 2));
        assert!(sink.0.iter().any(|e| e.port == Port::Reject));
    }

    #[test]
    fn declared_domain_arrives_by_reduce() {
        let p = parse_program("var x in 1-3; var y in [2,5,7];").unwrap();
        let mut sink = VecSink::default();
        solve_fast(&p, Strategy::default(), EmissionConfig::all(), &mut sink).unwrap();
        let e = &sink.0;
        assert_eq!(e[0].dom, Some(FiniteDomain::full()));
        assert_eq!(
            (e[1].port, e[1].cid, e[1].dom.clone()),
            (Port::Reduce, Some(ConstraintId::LABEL), Some(FiniteDomain::range(1, 3)))
        );
        assert_eq!(e[3].dom, Some(FiniteDomain::from_values([2, 5, 7])));
    }
}
