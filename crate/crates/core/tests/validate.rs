mod common;

use common::*;
use fdtrace::domain::FiniteDomain;
use fdtrace::program::{Program, Strategy};
use fdtrace::trace::{ParsedTrace, Port, TraceEvent};
use fdtrace::validate::mutate::{apply, catalog};
use fdtrace::validate::{align, check_events, NameMap, Verdict};

fn golden_traces() -> Vec<(String, Vec<TraceEvent>)> {
    let mut out = Vec::new();
    for (name, p) in [
        ("gt-chain", program(GT_CHAIN)),
        ("element-choice", program(ELEMENT_CHOICE)),
        ("queens-4", queens(4, Strategy::default())),
        ("queens-5", queens(5, Strategy::MIDDLE_FIRST)),
    ] {
        for engine in [Engine::Ref, Engine::Fast] {
            out.push((format!("{name}/{engine:?}"), run(engine, &p, p.strategy_or_default()).1));
        }
    }
    out
}

#[test]
fn catalog_mutations_are_detected() {
    let (mut total, mut caught) = (0usize, 0usize);
    let mut missed = Vec::new();
    for (name, events) in golden_traces() {
        assert!(check_events(&events, false).is_empty(), "{name}");
        for m in catalog(&events) {
            total += 1;
            if check_events(&apply(&events, m), false).is_empty() {
                missed.push(format!("{name}: {m}"));
            } else {
                caught += 1;
            }
        }
    }
    let rate = caught as f64 / total as f64;
    assert!(rate >= 0.95, "{caught}/{total} detected; missed {missed:?}");
}

#[test]
fn every_mutation_kind_is_represented() {
    let events = run(Engine::Ref, &program(ELEMENT_CHOICE), Strategy::default()).1;
    let text: Vec<String> = catalog(&events).iter().map(|m| m.to_string()).collect();
    for needle in ["port ->", "drop", "perturb"] {
        assert!(text.iter().any(|t| t.contains(needle)), "{needle}");
    }
}

fn both(p: &Program) -> (ParsedTrace, ParsedTrace) {
    let s = p.strategy_or_default();
    (parsed(run(Engine::Ref, p, s).1), parsed(run(Engine::Fast, p, s).1))
}

#[test]
fn align_rejects_a_changed_solution() {
    let (r, mut f) = both(&program(GT_CHAIN));
    let last = f.events.last_mut().unwrap();
    assert_eq!(last.port, Port::Solution);
    let b = last.bindings.as_mut().unwrap();
    *b.values_mut().next().unwrap() = 2;
    assert!(!align(&r, &f, &NameMap::default()).is_equivalent());
}

#[test]
fn align_rejects_a_changed_domain_at_a_sync_point() {
    let (r, mut f) = both(&queens(5, Strategy::default()));
    let cp = f.events.iter().position(|e| e.port == Port::ChoicePoint).unwrap();
    // Remove a value from the reduce right before the first choice point.
    let i = f.events[..cp].iter().rposition(|e| e.port == Port::Reduce).unwrap();
    let e = &mut f.events[i];
    let d = e.dom.clone().unwrap();
    let v = d.max().unwrap();
    e.dom = Some(d.without_value(v));
    e.wd = Some(e.wd.clone().unwrap().union(&FiniteDomain::singleton(v)));
    assert!(matches!(align(&r, &f, &NameMap::default()).verdict, Verdict::Divergent(_)));
}

#[test]
fn align_rejects_a_missing_search_step() {
    let (r, mut f) = both(&queens(6, Strategy::default()));
    let i = f.events.iter().position(|e| e.port == Port::BackTo).unwrap();
    f.events.remove(i);
    assert!(!align(&r, &f, &NameMap::default()).is_equivalent());
}

#[test]
fn align_needs_the_kind_map_for_renamed_constraints() {
    let (r, mut f) = both(&program(ELEMENT_CHOICE));
    for e in &mut f.events {
        if let Some(t) = e.ctext.as_mut() {
            *t = t.replace("element(", "fd_element(").replace("eq(", "x_eq_y(");
        }
    }
    assert!(!align(&r, &f, &NameMap::default()).is_equivalent());
    let names = NameMap::parse("element = fd_element\neq = x_eq_y\n").unwrap();
    assert_eq!(align(&r, &f, &names).verdict, Verdict::Equivalent);
}

#[test]
fn align_is_reflexive_over_the_corpus() {
    for case in corpus().into_iter().take(12) {
        let t = parsed(run(Engine::Fast, &case.program, case.strategy).1);
        assert!(align(&t, &t, &NameMap::default()).is_equivalent(), "{}", case.name);
    }
}
