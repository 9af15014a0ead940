//! The reference engine: every step applies exactly one transition rule and
//! emits exactly one event. Slow by design; choice points copy the whole state.

use std::collections::HashMap;

use crate::domain::{FiniteDomain, UpdateKinds};
use crate::ids::{ChoicePointId, ConstraintId, IdCounter, VarId};
use crate::program::{Item, Program, Strategy};
use crate::propagators::{delta_at, unsatisfiable, wake_condition, ConstraintDef};
use crate::search::{select_value, select_var};
use crate::state::SolverState;
use crate::trace::{Bindings, EmissionConfig, Port, TraceError, TraceEvent, TraceSink, Tracer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solution(Bindings),
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineResult {
    pub outcome: Outcome,
    /// Events generated, emitted or not.
    pub event_count: u64,
}

impl EngineResult {
    pub fn bindings(&self) -> Option<&Bindings> {
        match &self.outcome {
            Outcome::Solution(b) => Some(b),
            Outcome::Exhausted => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Task {
    Item(Item),
    Assign(VarId, u32),
    Exclude(VarId, u32),
}

#[derive(Debug, Clone)]
struct Frame {
    id: ChoicePointId,
    state: SolverState,
    agenda: Vec<Task>,
    names: HashMap<usize, VarId>,
    /// Alternatives not yet tried, next one first.
    remaining: Vec<Vec<Task>>,
}

enum Step {
    Continue,
    Done(Outcome),
}

struct RefEngine<'p> {
    program: &'p Program,
    strategy: Strategy,
    state: SolverState,
    /// Pending work, next task last.
    agenda: Vec<Task>,
    /// Declaration index to live variable.
    names: HashMap<usize, VarId>,
    frames: Vec<Frame>,
    vars: IdCounter,
    cons: IdCounter,
    cps: IdCounter,
}

fn push_alt(agenda: &mut Vec<Task>, alt: Vec<Task>) {
    agenda.extend(alt.into_iter().rev());
}

fn items(alt: &[Item]) -> Vec<Task> {
    alt.iter().cloned().map(Task::Item).collect()
}

impl<'p> RefEngine<'p> {
    fn new(program: &'p Program, strategy: Strategy) -> Self {
        let mut agenda = Vec::new();
        push_alt(&mut agenda, items(&program.items));
        RefEngine {
            program,
            strategy,
            state: SolverState::default(),
            agenda,
            names: HashMap::new(),
            frames: Vec::new(),
            vars: IdCounter::default(),
            cons: IdCounter::default(),
            cps: IdCounter::default(),
        }
    }

    /// Sets `x` to `new`, records the change for sleeping constraints and emits
    /// the reduce event.
    fn reduce(&mut self, t: &mut Tracer, cid: ConstraintId, x: VarId, new: FiniteDomain) -> Result<(), TraceError> {
        let old = std::mem::replace(self.state.domains.get_mut(&x).expect("declared"), new.clone());
        let kinds = crate::domain::classify_bounds(&old, &new);
        self.notify(x, kinds);
        t.emit(Port::Reduce, &self.state, |c| TraceEvent::reduce(c, cid, x, &old, new))
    }

    fn notify(&mut self, x: VarId, kinds: UpdateKinds) {
        let st = &mut self.state;
        for &s in &st.sleeping {
            if st.constraints[&s].vars().contains(&x) {
                st.changes.entry(s).or_default().record(x, kinds);
                if !st.pending_wake.contains(&s) {
                    st.pending_wake.push_back(s);
                }
            }
        }
    }

    fn step(&mut self, t: &mut Tracer) -> Result<Step, TraceError> {
        // (1) an active constraint: reject, reduce or suspend.
        if let Some(c) = self.state.active {
            let def = self.state.constraints[&c].clone();
            if unsatisfiable(&def.constraint, &self.state.domains) {
                self.state.active = None;
                self.state.rejected = Some(c);
                t.emit(Port::Reject, &self.state, |ch| TraceEvent::on_constraint(ch, Port::Reject, c))?;
                return Ok(Step::Continue);
            }
            for (pos, x) in def.vars().into_iter().enumerate() {
                let w = delta_at(&def.constraint, pos, &self.state.domains);
                if !w.is_empty() {
                    let new = self.state.domains[&x].difference(&w);
                    self.reduce(t, c, x, new)?;
                    return Ok(Step::Continue);
                }
            }
            self.state.active = None;
            self.state.sleeping.insert(c);
            self.state.changes.remove(&c);
            t.emit(Port::Suspend, &self.state, |ch| TraceEvent::on_constraint(ch, Port::Suspend, c))?;
            return Ok(Step::Continue);
        }
        // (2) a rejected constraint: backtrack or fail.
        if self.state.rejected.is_some() {
            let Some(frame) = self.frames.last_mut() else {
                t.emit(Port::Failure, &self.state, TraceEvent::failure)?;
                return Ok(Step::Done(Outcome::Exhausted));
            };
            let id = frame.id;
            let alt = frame.remaining.remove(0);
            self.state = frame.state.clone();
            self.agenda = frame.agenda.clone();
            self.names = frame.names.clone();
            if frame.remaining.is_empty() {
                self.frames.pop();
            }
            push_alt(&mut self.agenda, alt);
            t.emit(Port::BackTo, &self.state, |ch| TraceEvent::on_choice(ch, Port::BackTo, id))?;
            return Ok(Step::Continue);
        }
        // (3a) declarations and label decisions.
        if let Some(Task::Item(Item::Var(_) | Item::Con(_)) | Task::Assign(..) | Task::Exclude(..)) = self.agenda.last()
        {
            let task = self.agenda.pop().expect("peeked");
            self.declare(t, task)?;
            return Ok(Step::Continue);
        }
        // (3b) wake the first pending constraint whose condition holds.
        while let Some(c) = self.state.pending_wake.pop_front() {
            let def = &self.state.constraints[&c];
            let changes = self.state.changes.get(&c).cloned().unwrap_or_default();
            if wake_condition(&def.constraint, &changes) {
                self.state.sleeping.remove(&c);
                self.state.changes.remove(&c);
                self.state.active = Some(c);
                t.emit(Port::Awake, &self.state, |ch| TraceEvent::on_constraint(ch, Port::Awake, c))?;
                return Ok(Step::Continue);
            }
        }
        // (3c) a program choice.
        if let Some(Task::Item(Item::Choice(_))) = self.agenda.last() {
            let Some(Task::Item(Item::Choice(alts))) = self.agenda.pop() else { unreachable!() };
            let mut alts: Vec<Vec<Task>> = alts.iter().map(|a| items(a)).collect();
            let first = alts.remove(0);
            self.open_choice(t, alts, first)?;
            return Ok(Step::Continue);
        }
        // (3d) a solution.
        if self.state.all_ground() {
            let bindings: Bindings = self.state.domains.iter().map(|(&v, d)| (v, d.value().expect("ground"))).collect();
            let out = bindings.clone();
            t.emit(Port::Solution, &self.state, |ch| TraceEvent::solution(ch, out))?;
            return Ok(Step::Done(Outcome::Solution(bindings)));
        }
        // (3e) labeling: x = v, else x != v.
        let ids: Vec<VarId> = self.state.vars().collect();
        let sizes: Vec<u64> = self.state.domains.values().map(FiniteDomain::size).collect();
        let x = ids[select_var(self.strategy.var_order, &sizes).expect("some variable is not ground")];
        let v = select_value(self.strategy.val_order, &self.state.domains[&x]).expect("non-empty");
        self.open_choice(t, vec![vec![Task::Exclude(x, v)]], vec![Task::Assign(x, v)])?;
        Ok(Step::Continue)
    }

    fn open_choice(&mut self, t: &mut Tracer, remaining: Vec<Vec<Task>>, first: Vec<Task>) -> Result<(), TraceError> {
        let id = ChoicePointId(self.cps.fresh());
        self.frames.push(Frame {
            id,
            state: self.state.clone(),
            agenda: self.agenda.clone(),
            names: self.names.clone(),
            remaining,
        });
        push_alt(&mut self.agenda, first);
        t.emit(Port::ChoicePoint, &self.state, |ch| TraceEvent::on_choice(ch, Port::ChoicePoint, id))
    }

    fn declare(&mut self, t: &mut Tracer, task: Task) -> Result<(), TraceError> {
        match task {
            Task::Item(Item::Var(decl)) => {
                let v = VarId(self.vars.fresh());
                let dom = self.program.decls[decl].domain.clone();
                self.names.insert(decl, v);
                self.state.domains.insert(v, dom.clone());
                t.emit(Port::NewVariable, &self.state, |ch| TraceEvent::new_variable(ch, v, dom))
            }
            Task::Item(Item::Con(con)) => {
                let id = ConstraintId(self.cons.fresh());
                let constraint = con.constraint.map_vars(|d| self.names[&d]);
                let def = ConstraintDef { id, constraint };
                let ctext = def.ctext();
                self.state.constraints.insert(id, def);
                self.state.active = Some(id);
                t.emit(Port::NewConstraint, &self.state, |ch| TraceEvent::new_constraint(ch, id, ctext))
            }
            Task::Assign(x, v) => self.reduce(t, ConstraintId::LABEL, x, FiniteDomain::singleton(v)),
            Task::Exclude(x, v) => {
                let new = self.state.domains[&x].without_value(v);
                self.reduce(t, ConstraintId::LABEL, x, new)
            }
            Task::Item(Item::Choice(_)) => unreachable!("choices are opened by the caller"),
        }
    }
}

/// Runs `program` to its first solution or to exhaustion.
pub fn solve(
    program: &Program,
    strategy: Strategy,
    config: EmissionConfig,
    sink: &mut dyn TraceSink,
) -> Result<EngineResult, TraceError> {
    let mut tracer = Tracer::new(config, sink);
    let mut engine = RefEngine::new(program, strategy);
    let outcome = loop {
        debug_assert_eq!(engine.state.check_invariants(), Ok(()));
        if let Step::Done(outcome) = engine.step(&mut tracer)? {
            break outcome;
        }
    };
    tracer.finish()?;
    Ok(EngineResult { outcome, event_count: tracer.chrono() })
}
