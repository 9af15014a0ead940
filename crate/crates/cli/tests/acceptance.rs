//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use common::*;
use fdtrace::program::Strategy;
use fdtrace::query::{AttrName, AttrValue, Filter, QuerySession};
use fdtrace::ref_engine::Outcome;
use fdtrace::trace::{parse_trace, Attr, EmissionConfig, Port, PortSet, TraceEvent};
use fdtrace::validate::mutate::{apply, catalog};
use fdtrace::validate::{align, check_events, replay_check, replay_domains, NameMap, Verdict};
use fdtrace::EngineKind;
use tempfile::TempDir;

type Checked = Result<String, String>;
type Criterion = (&'static str, fn() -> Checked);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn fdtrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdtrace")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn fixpoint() -> Checked {
    let start = Instant::now();
    let p = program(GT_CHAIN);
    let (r, events) = run(Engine::Ref, &p, Strategy::default());
    let elapsed = start.elapsed();
    let last = replay_domains(&events).pop().unwrap_or_default();
    let got: Vec<String> = last.values().map(|d| d.to_string()).collect();
    let oracle: Vec<String> = arc_fixpoint(&p)
        .iter()
        .map(|s| fdtrace::domain::FiniteDomain::from_values(s.iter().map(|&v| v as u32)).to_string())
        .collect();
    ensure!(got == ["[3]", "[2]", "[1]"], "final domains {got:?}");
    ensure!(got == oracle, "final domains {got:?}, arc-consistency oracle {oracle:?}");
    let mut pairs: Vec<(String, String)> = events
        .iter()
        .filter(|e| e.port == Port::Reduce)
        .map(|e| (e.vid.unwrap().to_string(), e.wd.as_ref().unwrap().to_string()))
        .collect();
    pairs.sort();
    let mut want: Vec<(String, String)> = [("v1", "[1]"), ("v2", "[3]"), ("v2", "[1]"), ("v3", "[2-3]"), ("v1", "[2]")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    want.sort();
    ensure!(pairs == want, "reduce pairs {pairs:?}");
    ensure!(matches!(r.outcome, Outcome::Solution(_)), "outcome {:?}", r.outcome);
    ensure!(elapsed < Duration::from_secs(1), "took {}", secs(elapsed));
    Ok(format!("x=[3] y=[2] z=[1], 5 reduce pairs as expected, {}", secs(elapsed)))
}

fn golden_prefix() -> Checked {
    let p = program(&data("element_choice.fd"));
    let (r, events) = run(Engine::Ref, &p, p.strategy_or_default());
    let names = NameMap::parse(&data("element_choice.names"))?;
    let listing: Vec<String> =
        data("element_choice.listing").lines().take_while(|l| l.trim() != "...").map(str::to_string).collect();
    let ours = listed_prefix(&events, listing.len());
    let (want, got) = (normalize(&listing, &names), normalize(&ours, &NameMap::default()));
    if let Some(i) = (0..want.len()).find(|&i| want.get(i) != got.get(i)) {
        return Err(format!("line {}: expected {:?}, got {:?}", i + 1, want[i], got.get(i)));
    }
    let b = r.bindings().ok_or("no solution")?;
    let first: Vec<(String, u32)> = b.iter().take(2).map(|(v, x)| (v.to_string(), *x)).collect();
    ensure!(first == [("v1".to_string(), 1), ("v2".to_string(), 2)], "solution {b:?}");
    let total = events.len() as i64;
    Ok(format!(
        "12 listed events match, solution v1=1 v2=2; event count {total} against 32 \u{b1} 6 (soft, deviation {:+})",
        total - 32
    ))
}

type Answers = Vec<(Option<TraceEvent>, Result<Vec<AttrValue>, String>)>;

fn ask<S: fdtrace::query::EventSource>(s: &mut QuerySession<S>, filters: &[Filter]) -> Answers {
    let attrs = [AttrName::Event(Attr::Vid), AttrName::Event(Attr::Wd), AttrName::Domains];
    filters
        .iter()
        .map(|f| {
            let e = s.fget(f).unwrap().cloned();
            (e, s.get_attr(&attrs).map_err(|e| e.to_string()))
        })
        .collect()
}

fn query() -> Checked {
    let text = data("element_choice.ref.trace");
    let mut stored = QuerySession::from_text(&text);
    let f: Filter = "port=reduce,chrono>3".parse().map_err(|e| format!("{e}"))?;
    let e = stored.fget(&f).map_err(|e| e.to_string())?.cloned().ok_or("no match")?;
    let vals = stored.get_attr(&[AttrName::Event(Attr::Vid), AttrName::Event(Attr::Wd)]).map_err(|e| e.to_string())?;
    let shown: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
    ensure!(e.chrono == 4 && shown == ["v1", "[0,4-268435455]"], "got chrono {} {shown:?}", e.chrono);
    let (n, stop) = QuerySession::from_text(&text)
        .count_until(PortSet::of(&[Port::Reject]), PortSet::of(&[Port::Solution]))
        .map_err(|e| e.to_string())?;
    ensure!(n == 1 && stop.is_some(), "count_until gave {n}");

    let filters: Vec<Filter> =
        ["port=reduce,chrono>3", "vid=v1", "port in (reject,backTo)", "cid>c1", "", "port=failure"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
    let p = program(&data("element_choice.fd"));
    let mut compared = 0;
    for engine in [EngineKind::Ref, EngineKind::Fast] {
        let (_, events) =
            run(if engine == EngineKind::Ref { Engine::Ref } else { Engine::Fast }, &p, p.strategy_or_default());
        let text = canonical_text(&events);
        let want = ask(&mut QuerySession::from_text(&text), &filters);
        let mut live = QuerySession::live(engine, p.clone(), p.strategy_or_default(), EmissionConfig::all());
        let got = ask(&mut live, &filters);
        drop(live);
        ensure!(want == got, "{engine}: live and stored answers differ");
        let mut live = QuerySession::live(engine, p.clone(), p.strategy_or_default(), EmissionConfig::all());
        let live_count = live
            .count_until(PortSet::of(&[Port::Reject]), PortSet::of(&[Port::Solution]))
            .map_err(|e| e.to_string())?;
        ensure!(live_count.0 == 1, "{engine}: live count_until gave {}", live_count.0);
        compared += filters.len();
    }
    Ok(format!("chrono 4 vid v1 wd [0,4-268435455], count_until 1; {compared} live/stored answers identical"))
}

fn replay() -> Checked {
    let start = Instant::now();
    let cases = corpus();
    let random = cases.iter().filter(|c| c.name.starts_with("random")).count();
    ensure!(random >= 20, "only {random} random programs");
    let mut traces = 0;
    for case in &cases {
        for engine in [Engine::Ref, Engine::Fast] {
            let (_, events) = run(engine, &case.program, case.strategy);
            let v = replay_check(&parsed(events));
            ensure!(v.is_empty(), "{} {engine:?}: {}", case.name, v[0]);
            traces += 1;
        }
    }
    let (mut total, mut caught) = (0usize, 0usize);
    for p in
        [program(GT_CHAIN), program(ELEMENT_CHOICE), queens(4, Strategy::default()), queens(5, Strategy::MIDDLE_FIRST)]
    {
        for engine in [Engine::Ref, Engine::Fast] {
            let (_, events) = run(engine, &p, p.strategy_or_default());
            for m in catalog(&events) {
                total += 1;
                caught += usize::from(!check_events(&apply(&events, m), false).is_empty());
            }
        }
    }
    let rate = caught as f64 / total as f64;
    let elapsed = start.elapsed();
    ensure!(rate >= 0.95, "mutation detection {caught}/{total}");
    ensure!(elapsed < Duration::from_secs(30), "took {}", secs(elapsed));
    Ok(format!(
        "{traces} traces clean ({random} random programs), mutations detected {caught}/{total} ({:.1}%), {}",
        rate * 100.0,
        secs(elapsed)
    ))
}

fn differential() -> Checked {
    let cases = corpus();
    let (mut solved, mut exhausted) = (0, 0);
    for case in &cases {
        let (r, rt) = run(Engine::Ref, &case.program, case.strategy);
        let (f, ft) = run(Engine::Fast, &case.program, case.strategy);
        let report = align(&parsed(rt), &parsed(ft), &NameMap::default());
        ensure!(report.is_equivalent(), "{}: {}", case.name, report.verdict);
        ensure!(r.outcome == f.outcome, "{}: {:?} against {:?}", case.name, r.outcome, f.outcome);
        match &r.outcome {
            Outcome::Solution(b) => {
                let values: Vec<u32> = b.values().copied().collect();
                let ok = if case.name.starts_with("queens") {
                    queens_ok(&values)
                } else {
                    bindings_satisfy(&case.program, &values)
                };
                ensure!(ok, "{}: {values:?} is not a solution", case.name);
                solved += 1;
            }
            Outcome::Exhausted => {
                ensure!(!satisfiable(&case.program), "{}: exhausted but satisfiable", case.name);
                exhausted += 1;
            }
        }
    }
    Ok(format!(
        "{} programs equivalent; {solved} solved, {exhausted} exhausted, all confirmed by brute force",
        cases.len()
    ))
}

fn fragments() -> Checked {
    let r = parse_trace(&data("fragment.ref.trace")).map_err(|e| e.to_string())?;
    let f = parse_trace(&data("fragment.fast.trace")).map_err(|e| e.to_string())?;
    let report = align(&r, &f, &NameMap::default());
    ensure!(report.verdict == Verdict::Equivalent, "{}", report.verdict);
    Ok(format!(
        "equivalent, {} variables mapped, {} extra constraint",
        report.var_map.len(),
        report.unmapped_fast.len()
    ))
}

fn backtracks(n: usize, s: Strategy) -> (u64, Duration) {
    let start = Instant::now();
    let (r, events) = run(Engine::Fast, &queens(n, s), s);
    let elapsed = start.elapsed();
    assert!(r.bindings().is_some_and(|b| queens_ok(&b.values().copied().collect::<Vec<_>>())));
    (events.iter().take_while(|e| e.port != Port::Solution).filter(|e| e.port == Port::BackTo).count() as u64, elapsed)
}

fn strategies() -> Checked {
    let (min_bt, min_t) = backtracks(40, Strategy::FIRST_FAIL_MIN);
    let (mid_bt, mid_t) = backtracks(40, Strategy::MIDDLE_FIRST);
    ensure!(
        min_t < Duration::from_secs(10) && mid_t < Duration::from_secs(10),
        "times {} / {}",
        secs(min_t),
        secs(mid_t)
    );
    let table: Vec<String> = [20, 24, 28, 32, 36]
        .iter()
        .map(|&n| {
            format!("{n}:{}/{}", backtracks(n, Strategy::FIRST_FAIL_MIN).0, backtracks(n, Strategy::MIDDLE_FIRST).0)
        })
        .collect();
    ensure!(mid_bt < min_bt, "backTo middle {mid_bt} >= min {min_bt}; smaller n (min/middle) {}", table.join(" "));
    Ok(format!(
        "40-queens backTo before first solution: firstFailMin {min_bt} ({}), firstFailMiddleFirst {mid_bt} ({}); other n (min/middle) {}",
        secs(min_t),
        secs(mid_t),
        table.join(" ")
    ))
}

fn overhead() -> Checked {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let q = dir.path().join("q40.fd");
    let o = fdtrace(&["gen-queens", "40"]);
    fs::write(&q, &o.stdout).map_err(|e| e.to_string())?;
    let o = fdtrace(&["bench", path(&q), "--repeat", "9"]);
    ensure!(o.status.success(), "bench failed: {}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    let ratio = |mode: &str| -> Option<f64> {
        out.lines().find(|l| l.split_whitespace().next() == Some(mode))?.split_whitespace().nth(2)?.parse().ok()
    };
    let (null, full) = (ratio("null-sink").ok_or("no null-sink line")?, ratio("full-file").ok_or("no full-file line")?);
    let summary = format!(
        "null-sink {null:.2}x (bound 1.5, reference 1.05-1.30x), full-file {full:.2}x (bound 15, reference 3-7.4x)"
    );
    ensure!(null <= 1.5 && full <= 15.0, "{summary}");
    Ok(summary)
}

fn viz() -> Checked {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let (q, trace, csv) = (dir.path().join("q8.fd"), dir.path().join("q8.trace"), dir.path().join("q8.csv"));
    fs::write(&q, fdtrace(&["gen-queens", "8"]).stdout).map_err(|e| e.to_string())?;
    ensure!(fdtrace(&["run", path(&q), "--engine", "fast", "--trace", path(&trace)]).status.success(), "run failed");
    let o = fdtrace(&["viz", path(&trace), "--out", path(&csv)]);
    ensure!(o.status.success(), "viz failed: {}", String::from_utf8_lossy(&o.stderr));

    let events =
        parse_trace(&fs::read_to_string(&trace).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.events;
    let states = replay_domains(&events);
    let sampled: Vec<usize> = events
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.port, Port::NewConstraint | Port::Reject | Port::Solution))
        .map(|(i, _)| i)
        .collect();
    let kinds: BTreeSet<&str> = ["none", "min", "max", "ground", "any", "empty"].into();
    let text = fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    ensure!(lines.next() == Some("step,var,size,kind"), "bad header");
    let mut per_step = vec![0usize; sampled.len()];
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        ensure!(f.len() == 4, "bad row {line}");
        let (step, var, size): (usize, u32, u64) =
            (f[0].parse().map_err(|_| line)?, f[1].parse().map_err(|_| line)?, f[2].parse().map_err(|_| line)?);
        ensure!(step >= 1 && step <= sampled.len(), "step {step} out of range");
        let state = &states[sampled[step - 1]];
        let want = state.iter().find(|(v, _)| v.ordinal() == var).map(|(_, d)| d.size());
        ensure!(want == Some(size), "step {step} var {var}: size {size}, replay says {want:?}");
        ensure!(kinds.contains(f[3]), "unknown kind {}", f[3]);
        per_step[step - 1] += 1;
    }
    ensure!(per_step.iter().all(|&n| n == 8), "variables per sample {per_step:?}");
    Ok(format!("{} samples of 8 variables, sizes match the replay", sampled.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 fixpoint", fixpoint),
        ("2 golden prefix", golden_prefix),
        ("3 query", query),
        ("4 replay validity", replay),
        ("5 differential", differential),
        ("6 fragment alignment", fragments),
        ("7 queens strategies", strategies),
        ("8 tracing overhead", overhead),
        ("9 viz pipeline", viz),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
