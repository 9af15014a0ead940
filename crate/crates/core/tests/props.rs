mod common;

use std::collections::BTreeSet;

use common::*;
use fdtrace::domain::{classify_update, parse_domain, FiniteDomain, UpdateKind};
use fdtrace::fast::solve_fast;
use fdtrace::ids::{ConstraintId, VarId};
use fdtrace::propagators::{delta_at, Constraint};
use fdtrace::ref_engine::solve;
use fdtrace::trace::{parse_canonical, render_canonical, EmissionConfig, Port, PortSet, TraceEvent, VecSink};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HI: u32 = 40;

fn set() -> impl Strategy<Value = BTreeSet<u32>> {
    prop::collection::btree_set(0..HI, 0..20)
}

fn dom(s: &BTreeSet<u32>) -> FiniteDomain {
    FiniteDomain::from_values(s.iter().copied())
}

fn values(d: &FiniteDomain) -> BTreeSet<u32> {
    d.iter().collect()
}

fn constraint() -> impl Strategy<Value = Constraint<usize>> {
    prop_oneof![
        Just(Constraint::Gt(0, 1)),
        Just(Constraint::Eq(0, 1)),
        (-3i64..=3).prop_map(|k| Constraint::NeqOffset { x: 0, y: 1, k }),
        prop::collection::vec(0i64..12, 1..6).prop_map(|list| Constraint::Element { index: 0, list, value: 1 }),
    ]
}

fn holds2(c: &Constraint<usize>, a: u32, b: u32) -> bool {
    holds(c, &|v| if v == 0 { a as i64 } else { b as i64 })
}

fn has_support(c: &Constraint<usize>, pos: usize, w: u32, other: &FiniteDomain) -> bool {
    other.iter().any(|o| if pos == 0 { holds2(c, w, o) } else { holds2(c, o, w) })
}

proptest! {
    #[test]
    fn domain_ops_match_sets(a in set(), b in set(), v in 0..HI) {
        let (da, db) = (dom(&a), dom(&b));
        prop_assert_eq!(da.size(), a.len() as u64);
        prop_assert_eq!(da.min(), a.first().copied());
        prop_assert_eq!(da.max(), a.last().copied());
        prop_assert_eq!(da.contains(v), a.contains(&v));
        prop_assert_eq!(values(&da.difference(&db)), &a - &b);
        prop_assert_eq!(values(&da.intersection(&db)), &a & &b);
        prop_assert_eq!(values(&da.union(&db)), &a | &b);
        prop_assert_eq!(da.is_subset(&db), a.is_subset(&b));
        prop_assert_eq!(values(&da.restrict_min(v)), a.iter().copied().filter(|&x| x >= v).collect::<BTreeSet<_>>());
        prop_assert_eq!(values(&da.restrict_max(v)), a.iter().copied().filter(|&x| x <= v).collect::<BTreeSet<_>>());
        let mut without = a.clone();
        without.remove(&v);
        prop_assert_eq!(values(&da.without_value(v)), without);
        for (k, x) in a.iter().enumerate() {
            prop_assert_eq!(da.nth(k as u64), Some(*x));
        }
        // Intervals are sorted, disjoint and never adjacent.
        for w in da.intervals().windows(2) {
            prop_assert!(w[0].1 + 1 < w[1].0);
        }
    }

    #[test]
    fn domain_text_round_trips(a in set()) {
        let d = dom(&a);
        prop_assert_eq!(parse_domain(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn classify_invariants(a in set(), keep in prop::collection::vec(any::<bool>(), 20)) {
        let old = dom(&a);
        let new = FiniteDomain::from_values(a.iter().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(x, _)| *x));
        if new == old {
            prop_assert!(classify_update(&old, &new).is_err());
            return Ok(());
        }
        let kinds = classify_update(&old, &new).unwrap();
        if new.is_empty() {
            prop_assert_eq!(kinds.to_vec(), vec![UpdateKind::Empty]);
            return Ok(());
        }
        prop_assert!(!kinds.contains(UpdateKind::Empty));
        prop_assert_eq!(kinds.contains(UpdateKind::Min), new.min() > old.min());
        prop_assert_eq!(kinds.contains(UpdateKind::Max), new.max() < old.max());
        prop_assert_eq!(kinds.contains(UpdateKind::Ground), new.size() == 1);
        prop_assert_eq!(kinds.contains(UpdateKind::Any), new.min() == old.min() && new.max() == old.max());
    }

    #[test]
    fn delta_is_sound(c in constraint(), a in set(), b in set()) {
        let doms = vec![dom(&a), dom(&b)];
        for pos in 0..2 {
            let w = delta_at(&c, pos, &doms);
            prop_assert!(w.is_subset(&doms[pos]));
            for x in w.iter() {
                prop_assert!(!has_support(&c, pos, x, &doms[1 - pos]), "{c:?} pos {pos} withdrew supported {x}");
            }
        }
    }

    #[test]
    fn delta_is_monotone(c in constraint(), a in set(), b in set(), ka in set(), kb in set()) {
        let big = vec![dom(&a), dom(&b)];
        let small = vec![dom(&(&a - &ka)), dom(&(&b - &kb))];
        prop_assume!(!small[0].is_empty() && !small[1].is_empty());
        for pos in 0..2 {
            let before = delta_at(&c, pos, &big).intersection(&small[pos]);
            prop_assert!(before.is_subset(&delta_at(&c, pos, &small)));
        }
    }

    #[test]
    fn canonical_events_round_trip(
        chrono in 1u64..1000,
        v in 1u32..50,
        c in 1u32..50,
        a in set(),
        b in set(),
    ) {
        let old = dom(&(&a | &b));
        let new = dom(&a);
        let events = if new != old {
            vec![TraceEvent::reduce(chrono, ConstraintId(c), VarId(v), &old, new)]
        } else {
            vec![]
        };
        let events = events.into_iter().chain([
            TraceEvent::new_variable(chrono, VarId(v), old.clone()),
            TraceEvent::new_constraint(chrono, ConstraintId(c), format!("gt([v{v},v{}])", v + 1)),
            TraceEvent::on_constraint(chrono, Port::Awake, ConstraintId(c)),
            TraceEvent::failure(chrono),
        ]);
        for e in events {
            let line = render_canonical(&e);
            prop_assert_eq!(parse_canonical(&line, 1).unwrap(), e);
        }
    }
}

#[test]
fn port_filtering_preserves_chrono() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ports: Vec<Port> = PortSet::ALL.iter().collect();
    for case in corpus() {
        for engine in [Engine::Ref, Engine::Fast] {
            let (_, full) = run(engine, &case.program, case.strategy);
            let keep = PortSet::of(&ports.iter().copied().filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
            let mut sink = VecSink::default();
            let cfg = EmissionConfig::with_ports(keep);
            match engine {
                Engine::Ref => solve(&case.program, case.strategy, cfg, &mut sink),
                Engine::Fast => solve_fast(&case.program, case.strategy, cfg, &mut sink),
            }
            .unwrap();
            let expected: Vec<TraceEvent> = full.into_iter().filter(|e| keep.contains(e.port)).collect();
            assert_eq!(sink.0, expected, "{} {engine:?} ports {keep:?}", case.name);
        }
    }
}
