//! Equivalence of a reference trace and a fast-engine trace.
//!
//! Variables are matched by creation order. Constraints are matched by text
//! (after variable renaming and the kind-name map), then one reference
//! constraint may absorb several fast constraints over its variables.
//! Between synchronization points (`choicePoint`, `backTo`, `reject`,
//! `solution`, `failure`, end of trace) event order may differ; at each of
//! them the ports must agree and, except at `reject`, so must every domain.
//! Solution bindings must agree under the variable map.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::check::ctext_vars;
use super::replay::DomainReplay;
use crate::domain::FiniteDomain;
use crate::ids::{ChoicePointId, ConstraintId, VarId};
use crate::trace::{Bindings, ParsedTrace, Port, TraceEvent};

/// Kind-name substitutions applied to constraint texts before matching.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameMap(BTreeMap<String, String>);

impl NameMap {
    /// One `from = to` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (from, to) = line.split_once('=').ok_or_else(|| format!("line {}: expected `from = to`", i + 1))?;
            let (from, to) = (from.trim(), to.trim());
            if from.is_empty() || to.is_empty() {
                return Err(format!("line {}: empty name", i + 1));
            }
            map.insert(from.to_string(), to.to_string());
        }
        Ok(NameMap(map))
    }

    pub fn insert(&mut self, from: &str, to: &str) {
        self.0.insert(from.into(), to.into());
    }

    /// The mapped name of a constraint kind; unmapped names stay as they are.
    pub fn kind<'a>(&'a self, name: &'a str) -> &'a str {
        self.0.get(name).map_or(name, String::as_str)
    }

    fn apply(&self, ctext: &str) -> String {
        match ctext.split_once('(') {
            Some((kind, rest)) => format!("{}({rest}", self.kind(kind)),
            None => ctext.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Divergent(String),
    /// The aligner could not decide.
    Unaligned(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equivalent => f.write_str("equivalent"),
            Verdict::Divergent(why) => write!(f, "divergent({why})"),
            Verdict::Unaligned(why) => write!(f, "divergent(unaligned): {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentReport {
    pub verdict: Verdict,
    /// Reference variable to fast variable.
    pub var_map: BTreeMap<VarId, VarId>,
    /// Reference constraint to the fast constraints implementing it.
    pub con_map: BTreeMap<ConstraintId, Vec<ConstraintId>>,
    pub cp_map: BTreeMap<ChoicePointId, ChoicePointId>,
    /// Fast constraints with no reference counterpart.
    pub unmapped_fast: Vec<ConstraintId>,
}

impl AlignmentReport {
    pub fn is_equivalent(&self) -> bool {
        self.verdict == Verdict::Equivalent
    }
}

fn is_sync(p: Port) -> bool {
    matches!(p, Port::ChoicePoint | Port::BackTo | Port::Reject | Port::Solution | Port::Failure)
}

struct Sync {
    port: Option<Port>,
    chrono: u64,
    cpid: Option<ChoicePointId>,
    bindings: Option<Bindings>,
    domains: BTreeMap<VarId, FiniteDomain>,
}

fn sync_points(events: &[TraceEvent]) -> Vec<Sync> {
    let mut replay = DomainReplay::new();
    let mut out = Vec::new();
    for e in events {
        replay.apply(e);
        if is_sync(e.port) {
            out.push(Sync {
                port: Some(e.port),
                chrono: e.chrono,
                cpid: e.cpid,
                bindings: e.bindings.clone(),
                domains: replay.domain_map().clone(),
            });
        }
    }
    let chrono = events.last().map_or(0, |e| e.chrono);
    out.push(Sync { port: None, chrono, cpid: None, bindings: None, domains: replay.domain_map().clone() });
    out
}

fn port_name(p: Option<Port>) -> &'static str {
    p.map_or("end of trace", Port::name)
}

fn complete(events: &[TraceEvent]) -> Result<(), String> {
    for e in events {
        let want = e.port.attrs();
        if e.present_attrs() != want {
            return Err(format!("event {} lacks attributes needed for alignment", e.chrono));
        }
    }
    Ok(())
}

struct Aligner<'a> {
    names: &'a NameMap,
    report: AlignmentReport,
}

impl Aligner<'_> {
    fn map_vars(&mut self, r: &[TraceEvent], f: &[TraceEvent]) -> Result<(), Verdict> {
        let rv: Vec<VarId> = r.iter().filter(|e| e.port == Port::NewVariable).filter_map(|e| e.vid).collect();
        let fv: Vec<VarId> = f.iter().filter(|e| e.port == Port::NewVariable).filter_map(|e| e.vid).collect();
        if rv.len() != fv.len() {
            return Err(Verdict::Divergent(format!(
                "{} variables in the reference trace, {} in the other",
                rv.len(),
                fv.len()
            )));
        }
        self.report.var_map = rv.into_iter().zip(fv).collect();
        Ok(())
    }

    fn map_constraints(&mut self, r: &[TraceEvent], f: &[TraceEvent]) -> Result<(), Verdict> {
        let back: HashMap<VarId, VarId> = self.report.var_map.iter().map(|(&a, &b)| (b, a)).collect();
        let rename = |text: &str| -> String {
            // Rewrite every fast variable to its reference name.
            let mut out = String::new();
            let mut tok = String::new();
            for ch in text.chars().chain(std::iter::once('\0')) {
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    tok.push(ch);
                    continue;
                }
                match tok.parse::<VarId>().ok().and_then(|v| back.get(&v)) {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push_str(&tok),
                }
                tok.clear();
                if ch != '\0' {
                    out.push(ch);
                }
            }
            out
        };
        let cons = |events: &[TraceEvent]| -> Vec<(ConstraintId, String)> {
            events
                .iter()
                .filter(|e| e.port == Port::NewConstraint)
                .filter_map(|e| Some((e.cid?, e.ctext.clone()?)))
                .collect()
        };
        let rc: Vec<(ConstraintId, String)> = cons(r).into_iter().map(|(c, t)| (c, self.names.apply(&t))).collect();
        let fc: Vec<(ConstraintId, String)> =
            cons(f).into_iter().map(|(c, t)| (c, rename(&self.names.apply(&t)))).collect();
        let mut taken = vec![false; fc.len()];
        let mut unmatched = Vec::new();
        for (c, text) in &rc {
            match fc.iter().enumerate().position(|(i, (_, t))| !taken[i] && t == text) {
                Some(i) => {
                    taken[i] = true;
                    self.report.con_map.insert(*c, vec![fc[i].0]);
                }
                None => unmatched.push((*c, text.clone())),
            }
        }
        for (c, text) in unmatched {
            let vars: BTreeSet<VarId> = ctext_vars(&text).into_iter().collect();
            let parts: Vec<usize> = (0..fc.len())
                .filter(|&i| !taken[i])
                .filter(|&i| {
                    let fvars = ctext_vars(&fc[i].1);
                    !fvars.is_empty() && fvars.iter().all(|v| vars.contains(v))
                })
                .collect();
            if parts.is_empty() {
                return Err(Verdict::Unaligned(format!("no counterpart for {c} {text}")));
            }
            for &i in &parts {
                taken[i] = true;
            }
            self.report.con_map.insert(c, parts.iter().map(|&i| fc[i].0).collect());
        }
        self.report.unmapped_fast = (0..fc.len()).filter(|&i| !taken[i]).map(|i| fc[i].0).collect();
        Ok(())
    }

    fn compare_domains(&self, rs: &Sync, fs: &Sync) -> Result<(), Verdict> {
        let where_ = format!("{} at chrono {} / {}", port_name(rs.port), rs.chrono, fs.chrono);
        if rs.domains.len() != fs.domains.len() {
            return Err(Verdict::Divergent(format!(
                "{where_}: {} live variables against {}",
                rs.domains.len(),
                fs.domains.len()
            )));
        }
        for (v, d) in &rs.domains {
            let fv = self.report.var_map[v];
            match fs.domains.get(&fv) {
                Some(fd) if fd == d => {}
                Some(fd) => return Err(Verdict::Divergent(format!("{where_}: {v} is {d} but {fv} is {fd}"))),
                None => return Err(Verdict::Divergent(format!("{where_}: {fv} is not live"))),
            }
        }
        Ok(())
    }

    fn compare_bindings(&self, rs: &Sync, fs: &Sync) -> Result<(), Verdict> {
        let (Some(rb), Some(fb)) = (&rs.bindings, &fs.bindings) else {
            return Ok(());
        };
        let mapped: Option<Bindings> = rb.iter().map(|(v, &x)| Some((*self.report.var_map.get(v)?, x))).collect();
        if mapped.as_ref() != Some(fb) {
            return Err(Verdict::Divergent(format!(
                "solution at chrono {} / {}: bindings differ",
                rs.chrono, fs.chrono
            )));
        }
        Ok(())
    }

    /// With exactly one side cut short, only that side's synchronization
    /// points are compared; ends are compared when both stop at the same place.
    fn compare_syncs(&mut self, r: &[TraceEvent], f: &[TraceEvent], cut: (bool, bool)) -> Result<(), Verdict> {
        let rs = sync_points(r);
        let fs = sync_points(f);
        let ends = cut.0 == cut.1;
        let n = match cut {
            (true, false) => rs.len() - 1,
            (false, true) => fs.len() - 1,
            _ => rs.len().max(fs.len()),
        };
        for k in 0..n {
            let (Some(a), Some(b)) = (rs.get(k), fs.get(k)) else {
                let (a, b) = (rs.get(k).map(|s| s.port), fs.get(k).map(|s| s.port));
                return Err(Verdict::Divergent(format!(
                    "synchronization point {}: {} against {}",
                    k + 1,
                    a.map_or("nothing", port_name),
                    b.map_or("nothing", port_name)
                )));
            };
            if a.port != b.port {
                return Err(Verdict::Divergent(format!(
                    "synchronization point {}: {} at chrono {} against {} at chrono {}",
                    k + 1,
                    port_name(a.port),
                    a.chrono,
                    port_name(b.port),
                    b.chrono
                )));
            }
            if let (Some(p), Some(q)) = (a.cpid, b.cpid) {
                match (a.port, self.report.cp_map.get(&p)) {
                    (Some(Port::ChoicePoint), None) if !self.report.cp_map.values().any(|&x| x == q) => {
                        self.report.cp_map.insert(p, q);
                    }
                    (_, Some(&m)) if m == q => {}
                    _ => {
                        return Err(Verdict::Divergent(format!(
                            "{} at chrono {}: {p} does not correspond to {q}",
                            port_name(a.port),
                            a.chrono
                        )))
                    }
                }
            }
            if a.port == Some(Port::Reject) || (a.port.is_none() && !ends) {
                continue;
            }
            self.compare_domains(a, b)?;
            self.compare_bindings(a, b)?;
        }
        Ok(())
    }
}

/// Aligns a reference trace with a fast trace.
pub fn align(reference: &ParsedTrace, fast: &ParsedTrace, names: &NameMap) -> AlignmentReport {
    let mut a = Aligner {
        names,
        report: AlignmentReport {
            verdict: Verdict::Equivalent,
            var_map: BTreeMap::new(),
            con_map: BTreeMap::new(),
            cp_map: BTreeMap::new(),
            unmapped_fast: Vec::new(),
        },
    };
    let (r, f) = (&reference.events, &fast.events);
    let result = complete(r)
        .and_then(|_| complete(f))
        .map_err(Verdict::Unaligned)
        .and_then(|_| a.map_vars(r, f))
        .and_then(|_| a.map_constraints(r, f))
        .and_then(|_| a.compare_syncs(r, f, (reference.truncated, fast.truncated)));
    if let Err(v) = result {
        a.report.verdict = v;
    }
    a.report
}
