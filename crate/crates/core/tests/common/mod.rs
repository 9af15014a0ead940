//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use fdtrace::fast::solve_fast;
use fdtrace::program::{gen_queens, parse_program, Item, Program, Strategy};
use fdtrace::propagators::Constraint;
use fdtrace::ref_engine::{solve, EngineResult};
use fdtrace::trace::{render_canonical, render_human, EmissionConfig, ParsedTrace, Port, PortSet, TraceEvent, VecSink};
use fdtrace::validate::NameMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GT_CHAIN: &str = "var x in 1-3;\nvar y in 1-3;\nvar z in 1-3;\ncon xy: gt(x,y);\ncon yz: gt(y,z);\n";

pub const ELEMENT_CHOICE: &str = "\
var i in 0-268435455;
var a in 0-268435455;
con c1: element(i,[2,5,7],a);
choice { con c2: eq(a,i); } or { con c3: eq_const(a,2); };
";

pub fn program(src: &str) -> Program {
    parse_program(src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

pub fn queens(n: usize, s: Strategy) -> Program {
    program(&gen_queens(n, s).unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Ref,
    Fast,
}

pub fn run(engine: Engine, p: &Program, s: Strategy) -> (EngineResult, Vec<TraceEvent>) {
    let mut sink = VecSink::default();
    let r = match engine {
        Engine::Ref => solve(p, s, EmissionConfig::all(), &mut sink),
        Engine::Fast => solve_fast(p, s, EmissionConfig::all(), &mut sink),
    }
    .expect("in-memory sink never fails");
    (r, sink.0)
}

pub fn parsed(events: Vec<TraceEvent>) -> ParsedTrace {
    ParsedTrace { events, truncated: false }
}

pub fn canonical_text(events: &[TraceEvent]) -> String {
    events.iter().map(|e| render_canonical(e) + "\n").collect()
}

/// A named corpus program with its labeling strategy.
pub struct Case {
    pub name: String,
    pub program: Program,
    pub strategy: Strategy,
}

pub fn corpus() -> Vec<Case> {
    let mut out = vec![
        Case { name: "gt-chain".into(), program: program(GT_CHAIN), strategy: Strategy::default() },
        Case { name: "element-choice".into(), program: program(ELEMENT_CHOICE), strategy: Strategy::default() },
    ];
    for n in [4, 5, 6, 8] {
        for s in [Strategy::FIRST_FAIL_MIN, Strategy::MIDDLE_FIRST] {
            out.push(Case { name: format!("queens-{n}-{s}"), program: queens(n, s), strategy: s });
        }
    }
    for (i, src) in random_programs(0x5eed, 40).into_iter().enumerate() {
        let p = program(&src);
        let s = p.strategy_or_default();
        out.push(Case { name: format!("random-{i}"), program: p, strategy: s });
    }
    out
}

fn random_domain(rng: &mut ChaCha8Rng) -> String {
    let lo = rng.gen_range(0..=12u32);
    let hi = rng.gen_range(lo + 1..=15);
    if rng.gen_bool(0.3) {
        // A domain with a hole.
        let cut = rng.gen_range(lo..=hi);
        let items: Vec<String> = (lo..=hi).filter(|&v| v != cut).map(|v| v.to_string()).collect();
        format!("[{}]", items.join(","))
    } else {
        format!("{lo}-{hi}")
    }
}

fn random_constraint(rng: &mut ChaCha8Rng, vars: &[String]) -> String {
    let mut pick = vars.choose_multiple(rng, 2);
    let (x, y) = (pick.next().unwrap(), pick.next().unwrap());
    // Weighted towards neq so that a fair share of programs is satisfiable.
    match rng.gen_range(0..8) {
        0 | 1 => format!("gt({x},{y})"),
        2 => format!("eq({x},{y})"),
        3..=5 => format!("neq({x},{y},{})", rng.gen_range(-3..=3)),
        6 => {
            let len = rng.gen_range(1..=5);
            let list: Vec<String> = (0..len).map(|_| rng.gen_range(0..=15).to_string()).collect();
            format!("element({x},[{}],{y})", list.join(","))
        }
        _ => format!("eq_const({x},{})", rng.gen_range(0..=15)),
    }
}

/// Seeded random programs: 3 to 8 variables with domains inside 0..15 and
/// 2 to 10 constraints, sometimes with a choice between constraint groups.
pub fn random_programs(seed: u64, count: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let nvars = rng.gen_range(3..=8);
            let vars: Vec<String> = (1..=nvars).map(|i| format!("x{i}")).collect();
            let mut src = String::new();
            for v in &vars {
                src += &format!("var {v} in {};\n", random_domain(&mut rng));
            }
            let ncons = rng.gen_range(2..=10);
            let mut k = 0;
            let mut next = |rng: &mut ChaCha8Rng| {
                k += 1;
                format!("con k{k}: {};", random_constraint(rng, &vars))
            };
            let in_choice = if ncons >= 4 && rng.gen_bool(0.4) { 2 } else { 0 };
            for _ in 0..ncons - in_choice {
                src += &next(&mut rng);
                src.push('\n');
            }
            if in_choice > 0 {
                let a = next(&mut rng);
                let b = next(&mut rng);
                src += &format!("choice {{ {a} }} or {{ {b} }};\n");
            }
            let strategy = *[Strategy::FIRST_FAIL_MIN, Strategy::MIDDLE_FIRST].choose(&mut rng).unwrap();
            src += &format!("label all {} {};\n", strategy.var_order.name(), strategy.val_order.name());
            src
        })
        .collect()
}

/// A constraint over declaration indices, as a predicate on values.
pub fn holds(c: &Constraint<usize>, val: &dyn Fn(usize) -> i64) -> bool {
    match c {
        Constraint::Gt(x, y) => val(*x) > val(*y),
        Constraint::Eq(x, y) => val(*x) == val(*y),
        Constraint::NeqOffset { x, y, k } => val(*x) != val(*y) + k,
        Constraint::Element { index, list, value } => {
            let i = val(*index);
            i >= 1 && (i as usize) <= list.len() && list[i as usize - 1] == val(*value)
        }
    }
}

/// Every way of resolving the choices: (declarations, constraints) per world.
pub fn worlds(p: &Program) -> Vec<(Vec<usize>, Vec<Constraint<usize>>)> {
    fn expand(
        items: &[Item],
        acc: Vec<(Vec<usize>, Vec<Constraint<usize>>)>,
    ) -> Vec<(Vec<usize>, Vec<Constraint<usize>>)> {
        let mut acc = acc;
        for it in items {
            acc = match it {
                Item::Var(d) => acc
                    .into_iter()
                    .map(|(mut v, c)| {
                        v.push(*d);
                        (v, c)
                    })
                    .collect(),
                Item::Con(con) => acc
                    .into_iter()
                    .map(|(v, mut c)| {
                        c.push(con.constraint.clone());
                        (v, c)
                    })
                    .collect(),
                Item::Choice(alts) => alts.iter().flat_map(|alt| expand(alt, acc.clone())).collect(),
            };
        }
        acc
    }
    expand(&p.items, vec![(Vec::new(), Vec::new())])
}

/// Plain backtracking over declared domains; returns one solution of the world.
pub fn brute_force(p: &Program, vars: &[usize], cons: &[Constraint<usize>]) -> Option<BTreeMap<usize, i64>> {
    fn go(p: &Program, vars: &[usize], cons: &[Constraint<usize>], k: usize, asg: &mut BTreeMap<usize, i64>) -> bool {
        let ok = cons.iter().all(|c| {
            let [a, b] = c.vars();
            !(asg.contains_key(&a) && asg.contains_key(&b)) || holds(c, &|d| asg[&d])
        });
        if !ok {
            return false;
        }
        if k == vars.len() {
            return true;
        }
        for v in p.decls[vars[k]].domain.iter() {
            asg.insert(vars[k], v as i64);
            if go(p, vars, cons, k + 1, asg) {
                return true;
            }
        }
        asg.remove(&vars[k]);
        false
    }
    let mut asg = BTreeMap::new();
    go(p, vars, cons, 0, &mut asg).then_some(asg)
}

pub fn satisfiable(p: &Program) -> bool {
    worlds(p).iter().any(|(v, c)| brute_force(p, v, c).is_some())
}

/// Checks engine bindings (values of variables in creation order of the
/// chosen world) against some world of the program.
pub fn bindings_satisfy(p: &Program, values: &[u32]) -> bool {
    worlds(p).iter().any(|(vars, cons)| {
        vars.len() == values.len() && {
            let val: BTreeMap<usize, i64> = vars.iter().zip(values).map(|(&d, &x)| (d, x as i64)).collect();
            vars.iter().all(|d| p.decls[*d].domain.contains(val[d] as u32))
                && cons.iter().all(|c| holds(c, &|d| val[&d]))
        }
    })
}

pub fn queens_ok(values: &[u32]) -> bool {
    let n = values.len();
    (0..n).all(|i| {
        (i + 1..n).all(|j| {
            let (a, b) = (values[i] as i64, values[j] as i64);
            a != b && (a - b).abs() != (j - i) as i64
        })
    })
}

/// Independent queens search: set domains, arc consistency on the
/// difference constraints, binary branching `x = v` / `x != v` chosen by the
/// strategy. Returns (failed nodes before the first solution, solution).
#[allow(clippy::needless_range_loop)]
pub fn queens_search(n: usize, s: Strategy) -> (u64, Option<Vec<u32>>) {
    use fdtrace::program::{ValOrder, VarOrder};
    use std::collections::BTreeSet;
    type Doms = Vec<BTreeSet<u32>>;

    fn fixpoint(d: &mut Doms) -> bool {
        loop {
            let mut changed = false;
            for i in 0..d.len() {
                if d[i].len() != 1 {
                    continue;
                }
                let a = *d[i].iter().next().unwrap() as i64;
                for j in 0..d.len() {
                    if i == j {
                        continue;
                    }
                    let off = (j as i64 - i as i64).abs();
                    for bad in [a, a - off, a + off] {
                        if bad >= 1 && d[j].remove(&(bad as u32)) {
                            changed = true;
                        }
                    }
                }
            }
            if d.iter().any(|x| x.is_empty()) {
                return false;
            }
            if !changed {
                return true;
            }
        }
    }

    fn pick(d: &Doms, s: Strategy) -> Option<(usize, u32)> {
        let n = d.len() as i64;
        let open = (0..d.len()).filter(|&i| d[i].len() > 1);
        let i = match s.var_order {
            VarOrder::FirstFailMin => open.min_by_key(|&i| (d[i].len(), i)),
            VarOrder::FirstFailMiddleFirst => open.min_by_key(|&i| (d[i].len(), (2 * i as i64 - (n - 1)).abs(), i)),
        }?;
        let v = match s.val_order {
            ValOrder::MinValue => *d[i].iter().next().unwrap(),
            ValOrder::MiddleValue => *d[i].iter().nth(d[i].len().div_ceil(2) - 1).unwrap(),
        };
        Some((i, v))
    }

    fn go(mut d: Doms, s: Strategy, fails: &mut u64) -> Option<Vec<u32>> {
        if !fixpoint(&mut d) {
            *fails += 1;
            return None;
        }
        let Some((i, v)) = pick(&d, s) else {
            return Some(d.iter().map(|x| *x.iter().next().unwrap()).collect());
        };
        let mut left = d.clone();
        left[i] = BTreeSet::from([v]);
        if let Some(sol) = go(left, s, fails) {
            return Some(sol);
        }
        d[i].remove(&v);
        go(d, s, fails)
    }

    let mut fails = 0;
    let sol = go(vec![(1..=n as u32).collect(); n], s, &mut fails);
    (fails, sol)
}

pub fn data_path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "data", name].iter().collect()
}

pub fn data(name: &str) -> String {
    let path = data_path(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Ports of the documented element/choice listing.
pub const LISTED: [Port; 6] =
    [Port::NewVariable, Port::NewConstraint, Port::Reduce, Port::Suspend, Port::Awake, Port::Reject];

/// The first `n` events of the listed ports, rendered for humans.
pub fn listed_prefix(events: &[TraceEvent], n: usize) -> Vec<String> {
    let ports = PortSet::of(&LISTED);
    events.iter().filter(|e| ports.contains(e.port)).take(n).map(render_human).collect()
}

/// Tokens of human lines with the chrono renumbered, constraint ids
/// replaced by their order of first appearance and kind names mapped.
pub fn normalize(lines: &[String], names: &NameMap) -> Vec<Vec<String>> {
    let mut cids: HashMap<String, String> = HashMap::new();
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let mut toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            toks[0] = (i + 1).to_string();
            for t in toks.iter_mut().skip(2) {
                if t.starts_with('c') && t.len() > 1 && t[1..].chars().all(|c| c.is_ascii_digit()) {
                    let n = cids.len() + 1;
                    *t = cids.entry(t.clone()).or_insert_with(|| format!("c{n}")).clone();
                } else if let Some((kind, rest)) = t.split_once('(') {
                    *t = format!("{}({rest}", names.kind(kind));
                }
            }
            toks
        })
        .collect()
}

/// Largest arc-consistent sub-domains, by removing unsupported values
/// until nothing changes. Only for constraint systems without choices.
pub fn arc_fixpoint(p: &Program) -> Vec<BTreeSet<i64>> {
    let (vars, cons) = worlds(p).into_iter().next().expect("one world");
    assert_eq!(worlds(p).len(), 1);
    let mut doms: Vec<BTreeSet<i64>> =
        vars.iter().map(|&d| p.decls[d].domain.iter().map(i64::from).collect()).collect();
    let slot = |d: usize| vars.iter().position(|&v| v == d).unwrap();
    loop {
        let mut changed = false;
        for c in &cons {
            let [x, y] = c.vars().map(slot);
            for (me, other) in [(x, y), (y, x)] {
                let keep: BTreeSet<i64> = doms[me]
                    .iter()
                    .copied()
                    .filter(|&a| {
                        doms[other].iter().any(|&b| {
                            let val = |d: usize| if slot(d) == me { a } else { b };
                            holds(c, &val)
                        })
                    })
                    .collect();
                if keep != doms[me] {
                    doms[me] = keep;
                    changed = true;
                }
            }
        }
        if !changed {
            return doms;
        }
    }
}
