//! Rule-by-rule conformance checking of a trace.
//!
//! The checker keeps its own reading of the observed state and tests each
//! event against the preconditions and effects of its rule. It does not use
//! either engine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::domain::{classify_update, FiniteDomain};
use crate::ids::{ChoicePointId, ConstraintId, VarId};
use crate::trace::{ParsedTrace, Port, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub chrono: u64,
    pub rule: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chrono {}: {}: {}", self.chrono, self.rule, self.message)
    }
}

/// Variables named in a constraint text such as `neq([v1,v2,-3])`.
pub fn ctext_vars(ctext: &str) -> Vec<VarId> {
    ctext.split(['(', ')', '[', ']', ',']).filter_map(|tok| tok.parse::<VarId>().ok()).collect()
}

#[derive(Debug, Clone, Default)]
struct Observed {
    domains: BTreeMap<VarId, FiniteDomain>,
    constraints: BTreeMap<ConstraintId, Vec<VarId>>,
    active: Option<ConstraintId>,
    sleeping: BTreeSet<ConstraintId>,
}

fn set_text<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let items: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

struct Checker {
    now: Observed,
    rejected: Option<ConstraintId>,
    choices: Vec<(ChoicePointId, Observed)>,
    seen_vars: BTreeSet<VarId>,
    seen_cons: BTreeSet<ConstraintId>,
    seen_cps: BTreeSet<ChoicePointId>,
    next_chrono: u64,
    ended: Option<u64>,
    out: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, chrono: u64, rule: &str, message: String) {
        self.out.push(Violation { chrono, rule: rule.to_string(), message });
    }

    fn expect_no_active(&mut self, e: &TraceEvent) {
        if let Some(a) = self.now.active {
            self.fail(e.chrono, e.port.name(), format!("expected A = {{}} but found A = {{{a}}}"));
        }
    }

    fn expect_no_rejected(&mut self, e: &TraceEvent) {
        if let Some(r) = self.rejected {
            self.fail(e.chrono, e.port.name(), format!("expected R = {{}} but found R = {{{r}}}"));
        }
    }

    fn expect_active(&mut self, e: &TraceEvent, c: ConstraintId) {
        if self.now.active != Some(c) {
            let found = set_text(self.now.active);
            self.fail(e.chrono, e.port.name(), format!("expected A = {{{c}}} but found A = {found}"));
        }
    }

    fn event(&mut self, e: &TraceEvent) {
        if e.chrono != self.next_chrono {
            self.fail(e.chrono, "chrono", format!("expected chrono {} but found {}", self.next_chrono, e.chrono));
        }
        self.next_chrono = e.chrono + 1;
        if let Some(end) = self.ended {
            self.fail(e.chrono, e.port.name(), format!("event after the terminal event {end}"));
        }
        let want = e.port.attrs();
        let have = e.present_attrs();
        if want != have {
            self.fail(e.chrono, e.port.name(), format!("expected attributes {want:?} but found {have:?}"));
            return;
        }
        match e.port {
            Port::NewVariable => self.new_variable(e),
            Port::NewConstraint => self.new_constraint(e),
            Port::Reduce => self.reduce(e),
            Port::Suspend | Port::Reject => {
                let c = e.cid.expect("present");
                self.expect_active(e, c);
                self.expect_no_rejected(e);
                self.now.active = None;
                if e.port == Port::Suspend {
                    self.now.sleeping.insert(c);
                } else {
                    self.rejected = Some(c);
                }
            }
            Port::Awake => {
                let c = e.cid.expect("present");
                self.expect_no_active(e);
                self.expect_no_rejected(e);
                if !self.now.sleeping.remove(&c) {
                    let s = set_text(&self.now.sleeping);
                    self.fail(e.chrono, "awake", format!("expected {c} in S = {s}"));
                }
                self.now.active = Some(c);
            }
            Port::ChoicePoint => {
                let p = e.cpid.expect("present");
                self.expect_no_active(e);
                self.expect_no_rejected(e);
                if !self.seen_cps.insert(p) {
                    self.fail(e.chrono, "choicePoint", format!("{p} is not fresh"));
                }
                self.choices.push((p, self.now.clone()));
            }
            Port::BackTo => {
                let p = e.cpid.expect("present");
                if self.rejected.is_none() {
                    self.fail(e.chrono, "backTo", "expected a rejected constraint but found R = {}".into());
                }
                match self.choices.iter().rposition(|(q, _)| *q == p) {
                    Some(i) => {
                        self.choices.truncate(i + 1);
                        self.now = self.choices[i].1.clone();
                    }
                    None => {
                        let open = set_text(self.choices.iter().map(|(q, _)| *q));
                        self.fail(
                            e.chrono,
                            "backTo",
                            format!("expected one of the open choice points {open} but found {p}"),
                        );
                    }
                }
                self.rejected = None;
            }
            Port::Solution => {
                self.ended = Some(e.chrono);
                self.expect_no_active(e);
                self.expect_no_rejected(e);
                let bindings = e.bindings.as_ref().expect("present");
                let mut problems = Vec::new();
                for (v, d) in &self.now.domains {
                    match (d.value(), bindings.get(v)) {
                        (Some(x), Some(&y)) if x == y => {}
                        (_, found) => {
                            let found = found.map_or("nothing".to_string(), |y| y.to_string());
                            problems.push(format!("expected {v} bound to its domain {d} but found {found}"));
                        }
                    }
                }
                for v in bindings.keys().filter(|v| !self.now.domains.contains_key(v)) {
                    problems.push(format!("binding for undeclared {v}"));
                }
                for p in problems {
                    self.fail(e.chrono, "solution", p);
                }
            }
            Port::Failure => {
                self.ended = Some(e.chrono);
                if self.rejected.is_none() {
                    self.fail(e.chrono, "failure", "expected a rejected constraint but found R = {}".into());
                }
            }
        }
    }

    fn new_variable(&mut self, e: &TraceEvent) {
        let v = e.vid.expect("present");
        let d = e.dom.clone().expect("present");
        if !self.seen_vars.insert(v) {
            self.fail(e.chrono, "newVariable", format!("{v} is not fresh"));
        }
        if d.is_empty() {
            self.fail(e.chrono, "newVariable", format!("{v} introduced with an empty domain"));
        }
        self.now.domains.insert(v, d);
    }

    fn new_constraint(&mut self, e: &TraceEvent) {
        let c = e.cid.expect("present");
        self.expect_no_active(e);
        self.expect_no_rejected(e);
        if c.is_label() || !self.seen_cons.insert(c) {
            self.fail(e.chrono, "newConstraint", format!("{c} is not fresh"));
        }
        let vars = ctext_vars(e.ctext.as_deref().unwrap_or_default());
        if vars.is_empty() {
            self.fail(e.chrono, "newConstraint", "constraint text names no variables".into());
        }
        for v in &vars {
            if !self.now.domains.contains_key(v) {
                self.fail(e.chrono, "newConstraint", format!("expected {v} in V but it was never introduced here"));
            }
        }
        self.now.constraints.insert(c, vars);
        self.now.active = Some(c);
    }

    fn reduce(&mut self, e: &TraceEvent) {
        let (c, v) = (e.cid.expect("present"), e.vid.expect("present"));
        let (dom, wd, mods) =
            (e.dom.as_ref().expect("present"), e.wd.as_ref().expect("present"), e.mods.expect("present"));
        self.expect_no_rejected(e);
        if c.is_label() {
            self.expect_no_active(e);
        } else {
            self.expect_active(e, c);
            match self.now.constraints.get(&c) {
                Some(vars) if !vars.contains(&v) => {
                    self.fail(e.chrono, "reduce", format!("expected {v} in Var({c}) = {}", set_text(vars)))
                }
                None => self.fail(e.chrono, "reduce", format!("{c} is not in C")),
                _ => {}
            }
        }
        let Some(cur) = self.now.domains.get(&v).cloned() else {
            self.fail(e.chrono, "reduce", format!("{v} is not in V"));
            return;
        };
        if wd.is_empty() {
            self.fail(e.chrono, "reduce", "expected a non-empty withdrawn set but found []".into());
        }
        if !wd.is_subset(&cur) {
            self.fail(e.chrono, "reduce", format!("expected withdrawn values within {cur} but found {wd}"));
        }
        let expected = cur.difference(wd);
        if *dom != expected {
            self.fail(e.chrono, "reduce", format!("expected domain {expected} but found {dom}"));
        }
        if *dom != cur && dom.is_subset(&cur) {
            if let Ok(kinds) = classify_update(&cur, dom) {
                if kinds != mods {
                    self.fail(e.chrono, "reduce", format!("expected mods {kinds} but found {mods}"));
                }
            }
        }
        self.now.domains.insert(v, dom.clone());
    }
}

/// Checks `events`; a truncated trace is checked as a prefix only.
pub fn check_events(events: &[TraceEvent], truncated: bool) -> Vec<Violation> {
    let mut ck = Checker {
        now: Observed::default(),
        rejected: None,
        choices: Vec::new(),
        seen_vars: BTreeSet::new(),
        seen_cons: BTreeSet::new(),
        seen_cps: BTreeSet::new(),
        next_chrono: 1,
        ended: None,
        out: Vec::new(),
    };
    for e in events {
        ck.event(e);
    }
    if !truncated && ck.ended.is_none() {
        let last = events.last().map_or(0, |e| e.chrono);
        ck.fail(last, "end", "expected the trace to end with solution or failure".into());
    }
    ck.out
}

pub fn replay_check(trace: &ParsedTrace) -> Vec<Violation> {
    check_events(&trace.events, trace.truncated)
}
