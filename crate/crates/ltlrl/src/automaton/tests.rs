use super::*;
use crate::automaton::hoa::ParsedAutomaton;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn aps(n: usize) -> PropositionSet {
    PropositionSet::new((0..n).map(|i| format!("a{i}"))).unwrap()
}

fn random_automaton(rng: &mut ChaCha8Rng, n_states: usize, n_aps: usize) -> RabinAutomaton {
    random_deterministic_automaton(rng, n_states, n_aps)
}

/// All-pairs shortest hop counts by Floyd–Warshall over an adjacency list.
fn floyd_warshall(adj: &[Vec<StateId>]) -> Vec<Vec<Option<u32>>> {
    let n = adj.len();
    let mut d = vec![vec![None; n]; n];
    for (q, outs) in adj.iter().enumerate() {
        d[q][q] = Some(0);
        for &q2 in outs {
            if q2 != q {
                d[q][q2] = Some(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

#[test]
fn feasible_symbol_enumeration() {
    let two = aps(2);
    let syms: Vec<Symbol> = feasible_symbols(&two).collect();
    assert_eq!(syms, vec![Symbol::empty(), Symbol::singleton(0), Symbol::singleton(1)]);

    let empty = PropositionSet::default();
    assert_eq!(feasible_symbols(&empty).count(), 1);

    let hundred = aps(100);
    assert_eq!(feasible_symbols(&hundred).count(), 101);
}

#[test]
fn proposition_set_rejects_duplicates() {
    assert!(matches!(PropositionSet::new(["p1", "p1"]), Err(crate::Error::Semantic(_))));
}

#[test]
fn guard_eval_and_render() {
    let set = aps(3);
    let g = SymbolGuard::conjunction([Literal::pos(0), Literal::neg(1)])
        .or(SymbolGuard::literal(Literal::pos(2)));
    assert!(g.eval(&Symbol::singleton(0)));
    assert!(!g.eval(&Symbol::from_aps([0, 1])));
    assert!(g.eval(&Symbol::from_aps([2, 1])));
    assert!(!g.eval(&Symbol::empty()));
    assert_eq!(g.render(&set), "a0 & !a1 | a2");
    assert!(SymbolGuard::const_true().eval(&Symbol::empty()));
    assert!(!SymbolGuard::const_false().eval(&Symbol::empty()));
}

#[test]
fn single_state_true_guard_accepting() {
    let set = aps(1);
    let auto = RabinAutomaton::new(
        set,
        1,
        0,
        vec![vec![(SymbolGuard::const_true(), 0)]],
        vec![RabinPair { inf: vec![0], fin: vec![] }],
    )
    .unwrap();
    assert_eq!(auto.distance(0), Some(0));
    auto.check_satisfiable().unwrap();
}

#[test]
fn pattern_sizes_match_published_instances() {
    let ra = build_pattern_automaton(&TaskPattern::ReachAvoidStay { goal: 100, obstacles: vec![46] })
        .unwrap();
    assert_eq!(ra.n_states(), 4);
    assert_eq!(ra.pairs().len(), 1);

    let cov = build_pattern_automaton(&TaskPattern::OrderedCoverage {
        targets: vec![100, 46, 33],
        precedences: vec![(33, 100)],
        obstacles: vec![73],
    })
    .unwrap();
    assert_eq!(cov.n_states(), 8);
    assert_eq!(cov.pairs().len(), 1);

    let surv = build_pattern_automaton(&TaskPattern::Surveillance {
        targets: vec![36, 26, 76, 64, 89, 10],
        obstacles: vec![33],
    })
    .unwrap();
    assert_eq!(surv.n_states(), 14);
    assert_eq!(surv.pairs().len(), 1);
}

#[test]
fn pattern_rejects_bad_instances() {
    assert!(build_pattern_automaton(&TaskPattern::Surveillance {
        targets: vec![],
        obstacles: vec![1],
    })
    .is_err());
    assert!(build_pattern_automaton(&TaskPattern::ReachAvoidStay {
        goal: 5,
        obstacles: vec![5],
    })
    .is_err());
    assert!(build_pattern_automaton(&TaskPattern::OrderedCoverage {
        targets: vec![1, 2],
        precedences: vec![(1, 9)],
        obstacles: vec![],
    })
    .is_err());
}

#[test]
fn reach_avoid_steps_to_trap_on_obstacle() {
    let ra = build_pattern_automaton(&TaskPattern::ReachAvoidStay { goal: 100, obstacles: vec![46] })
        .unwrap();
    let obstacle = ra.aps().index_of("p46").unwrap();
    let goal = ra.aps().index_of("p100").unwrap();
    let q0 = ra.initial();
    let trap = ra.step(q0, &Symbol::singleton(obstacle)).unwrap();
    assert!(ra.in_fin(trap));
    assert_eq!(ra.distance(trap), None);
    // Empty label self-loops at the initial state.
    assert_eq!(ra.step(q0, &Symbol::empty()).unwrap(), q0);
    // Reaching the goal and staying produces an accepting lasso.
    let mut q = q0;
    let mut hits = 0;
    for step in 0..20 {
        let sym = if step >= 3 { Symbol::singleton(goal) } else { Symbol::empty() };
        q = ra.step(q, &sym).unwrap();
        if ra.is_accepting(q) {
            hits += 1;
        }
    }
    assert!(hits >= 15, "goal streak should visit the accepting state repeatedly");
}

#[test]
fn infeasible_only_guard_is_pruned() {
    // Single transition q0 -> q1 requiring two locations at once; the pruned
    // graph must drop it while the raw transition relation keeps it.
    let set = aps(2);
    let both = SymbolGuard::conjunction([Literal::pos(0), Literal::pos(1)]);
    let rest = SymbolGuard::conjunction([Literal::neg(0), Literal::neg(1)])
        .or(SymbolGuard::conjunction([Literal::pos(0), Literal::neg(1)]))
        .or(SymbolGuard::conjunction([Literal::neg(0), Literal::pos(1)]));
    let edges = vec![
        vec![(both, 1), (rest, 0)],
        vec![(SymbolGuard::const_true(), 1)],
    ];
    let auto = RabinAutomaton::new(set, 2, 0, edges, vec![RabinPair { inf: vec![1], fin: vec![] }])
        .unwrap();
    assert_eq!(auto.pruned_successors(0), &[0]);
    assert_eq!(auto.step(0, &Symbol::from_aps([0, 1])).unwrap(), 1);
    assert!(matches!(auto.check_satisfiable(), Err(crate::Error::Unsatisfiable)));
}

#[test]
fn pruned_edges_match_brute_force_over_feasible_symbols() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..30 {
        let n = rng.random_range(2..=6);
        let k = rng.random_range(1..=3);
        let auto = random_automaton(&mut rng, n, k);
        for q in 0..n {
            let mut expected: Vec<StateId> = feasible_symbols(auto.aps())
                .map(|s| auto.step(q, &s).unwrap())
                .collect();
            expected.sort_unstable();
            expected.dedup();
            assert_eq!(auto.pruned_successors(q), expected.as_slice());
        }
    }
}

#[test]
fn distance_table_matches_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let k = rng.random_range(1..=3);
        let auto = random_automaton(&mut rng, n, k);
        let pruned: Vec<Vec<StateId>> =
            (0..n).map(|q| auto.pruned_successors(q).to_vec()).collect();
        let ap_dist = floyd_warshall(&pruned);
        for q in 0..n {
            let expected = (0..n)
                .filter(|&g| auto.is_accepting(g))
                .filter_map(|g| ap_dist[q][g])
                .min();
            assert_eq!(auto.distance(q), expected, "state {q}");
        }
    }
}

#[test]
fn distance_is_lipschitz_along_pruned_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let n = rng.random_range(2..=10);
        let auto = random_automaton(&mut rng, n, 2);
        for q in 0..auto.n_states() {
            if let Some(d) = auto.distance(q) {
                for &q2 in auto.pruned_successors(q) {
                    // d(q) can exceed d(q') by at most one hop.
                    if let Some(d2) = auto.distance(q2) {
                        assert!(d <= d2 + 1, "d({q})={d} > d({q2})+1={}", d2 + 1);
                    }
                }
            }
        }
    }
}

#[test]
fn widening_a_guard_never_removes_pruned_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(2..=8);
        let auto = random_automaton(&mut rng, n, 2);
        let before: Vec<Vec<StateId>> =
            (0..auto.n_states()).map(|q| auto.pruned_successors(q).to_vec()).collect();
        // Widen one random edge's guard by a feasible singleton symbol.
        let mut edges = auto.edges().to_vec();
        let q = rng.random_range(0..edges.len());
        let i = rng.random_range(0..edges[q].len());
        let extra = SymbolGuard::conjunction([Literal::pos(0), Literal::neg(1)]);
        edges[q][i].0 = edges[q][i].0.clone().or(extra);
        let widened = prune(auto.aps(), &edges, auto.n_states());
        for q in 0..auto.n_states() {
            for t in &before[q] {
                assert!(widened[q].contains(t), "widening removed pruned edge {q}->{t}");
            }
        }
    }
}

const REACH_AVOID_HOA: &str = r#"
HOA: v1
States: 4
Start: 0
AP: 2 "p100" "p46"
acc-name: Rabin 1
Acceptance: 2 Fin(0) & Inf(1)
properties: state-acc deterministic
--BODY--
State: 0
[1] 3
[0 & !1] 1
[!0 & !1] 0
State: 1 {1}
[1] 3
[0 & !1] 1
[!0 & !1] 2
State: 2 {0}
[1] 3
[0 & !1] 1
[!0 & !1] 2
State: 3 {0}
[t] 3
--END--
"#;

#[test]
fn parses_reach_avoid_hoa() {
    let parsed = parse_hoa(REACH_AVOID_HOA).unwrap();
    let auto = match parsed {
        ParsedAutomaton::Rabin(a) => a,
        other => panic!("expected Rabin automaton, got {other:?}"),
    };
    assert_eq!(auto.n_states(), 4);
    assert_eq!(auto.pairs().len(), 1);
    assert_eq!(auto.pairs()[0].inf, vec![1]);
    assert_eq!(auto.pairs()[0].fin, vec![2, 3]);
    assert_eq!(auto.distance_table(), &[Some(1), Some(0), Some(1), None]);
    let obstacle = auto.aps().index_of("p46").unwrap();
    assert_eq!(auto.step(0, &Symbol::singleton(obstacle)).unwrap(), 3);
}

#[test]
fn hoa_missing_transition_is_a_determinism_error() {
    let text = r#"
HOA: v1
States: 3
Start: 0
AP: 1 "a"
Acceptance: 2 Fin(0) & Inf(1)
--BODY--
State: 0
[0] 1
State: 1 {1}
[t] 1
State: 2 {0}
[t] 2
--END--
"#;
    match parse_hoa(text) {
        Err(crate::Error::Semantic(msg)) => assert!(msg.contains("transitions"), "{msg}"),
        other => panic!("expected determinism error, got {other:?}"),
    }
}

#[test]
fn hoa_double_transition_is_a_determinism_error() {
    let text = r#"
HOA: v1
States: 1
Start: 0
AP: 1 "a"
Acceptance: 2 Fin(0) & Inf(1)
--BODY--
State: 0 {1}
[t] 0
[0] 0
--END--
"#;
    assert!(matches!(parse_hoa(text), Err(crate::Error::Semantic(_))));
}

#[test]
fn hoa_malformed_document_is_a_parse_error() {
    assert!(matches!(
        parse_hoa("HOA: v1\nStates: nonsense"),
        Err(crate::Error::HoaParse { .. })
    ));
    assert!(matches!(parse_hoa(""), Err(crate::Error::HoaParse { .. })));
}

#[test]
fn hoa_implicit_labels_parse() {
    // 1 AP -> two implicit edges per state, symbol order {} then {a}.
    let text = r#"
HOA: v1
States: 2
Start: 0
AP: 1 "a"
Acceptance: 2 Fin(0) & Inf(1)
--BODY--
State: 0
0
1
State: 1 {1}
1
1
--END--
"#;
    let auto = match parse_hoa(text).unwrap() {
        ParsedAutomaton::Rabin(a) => a,
        other => panic!("expected Rabin, got {other:?}"),
    };
    assert_eq!(auto.step(0, &Symbol::empty()).unwrap(), 0);
    assert_eq!(auto.step(0, &Symbol::singleton(0)).unwrap(), 1);
}

#[test]
fn single_inf_set_deterministic_buchi_parses_as_rabin() {
    let text = r#"
HOA: v1
States: 2
Start: 0
AP: 1 "a"
acc-name: Buchi
Acceptance: 1 Inf(0)
--BODY--
State: 0
[0] 1
[!0] 0
State: 1 {0}
[t] 1
--END--
"#;
    match parse_hoa(text).unwrap() {
        ParsedAutomaton::Rabin(a) => {
            assert_eq!(a.pairs().len(), 1);
            assert!(a.pairs()[0].fin.is_empty());
            assert_eq!(a.distance_table(), &[Some(1), Some(0)]);
        }
        other => panic!("expected Rabin, got {other:?}"),
    }
}

#[test]
fn generalized_buchi_parses_as_ldba() {
    let text = r#"
HOA: v1
States: 2
Start: 0
AP: 2 "a" "b"
acc-name: generalized-Buchi 2
Acceptance: 2 Inf(0) & Inf(1)
--BODY--
State: 0 {0}
[0] 1
[!0] 0
State: 1 {1}
[1] 0
[!1] 1
--END--
"#;
    let ldba = match parse_hoa(text).unwrap() {
        ParsedAutomaton::Ldba(a) => a,
        other => panic!("expected LDBA, got {other:?}"),
    };
    assert_eq!(ldba.accepting_sets().len(), 2);
    assert!(ldba.in_deterministic_part(0));
    assert!(ldba.in_deterministic_part(1));
    ldba.check_satisfiable().unwrap();
}

#[test]
fn hoa_roundtrip_preserves_transitions_and_acceptance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut autos: Vec<RabinAutomaton> = (0..10)
        .map(|_| {
            let n = rng.random_range(2..=8);
            random_automaton(&mut rng, n, 2)
        })
        .collect();
    autos.push(
        build_pattern_automaton(&TaskPattern::ReachAvoidStay { goal: 100, obstacles: vec![46] })
            .unwrap(),
    );
    autos.push(
        build_pattern_automaton(&TaskPattern::Surveillance {
            targets: vec![36, 26, 76, 64, 89, 10],
            obstacles: vec![33],
        })
        .unwrap(),
    );
    for auto in autos {
        let text = auto.to_hoa();
        let reparsed = match parse_hoa(&text).unwrap() {
            ParsedAutomaton::Rabin(a) => a,
            other => panic!("expected Rabin, got {other:?}"),
        };
        assert_eq!(reparsed.n_states(), auto.n_states());
        assert_eq!(reparsed.initial(), auto.initial());
        for q in 0..auto.n_states() {
            for sym in feasible_symbols(auto.aps()) {
                assert_eq!(
                    reparsed.step(q, &sym).unwrap(),
                    auto.step(q, &sym).unwrap(),
                    "transition mismatch at state {q}"
                );
            }
        }
        for (p1, p2) in auto.pairs().iter().zip(reparsed.pairs()) {
            let sorted = |v: &[StateId]| {
                let mut v = v.to_vec();
                v.sort_unstable();
                v
            };
            assert_eq!(sorted(&p1.inf), sorted(&p2.inf));
            assert_eq!(sorted(&p1.fin), sorted(&p2.fin));
        }
    }
}

#[test]
fn dump_serializes_and_deserializes() {
    let auto = build_pattern_automaton(&TaskPattern::ReachAvoidStay { goal: 9, obstacles: vec![5] })
        .unwrap();
    let dump = auto.dump();
    let json = serde_json::to_string_pretty(&dump).unwrap();
    let back: AutomatonDump = serde_json::from_str(&json).unwrap();
    assert_eq!(back.kind, "rabin");
    assert_eq!(back.n_states, 4);
    assert_eq!(back.distances[0], vec![1, 0, 1, -1]);
}

// ---------------------------------------------------------------------------
// LDBA
// ---------------------------------------------------------------------------

/// Two-accepting-set LDBA with a nondeterministic prefix state and an
/// ε-bridge into the deterministic part, used across the crate's tests.
pub(crate) fn two_set_ldba() -> LimitDetBuchi {
    let set = aps(2); // a0, a1
    let any = SymbolGuard::const_true();
    let a0 = SymbolGuard::literal(Literal::pos(0));
    let not_a0 = SymbolGuard::literal(Literal::neg(0));
    let a1 = SymbolGuard::literal(Literal::pos(1));
    let not_a1 = SymbolGuard::literal(Literal::neg(1));
    // State 0: prefix, self-loops on anything, ε-jump to 1.
    // States 1, 2: deterministic cycle; 1 in F_1 entered on a0, 2 in F_2 on a1.
    LdbaBuilder::new(set, 3, 0)
        .edge(0, any, 0)
        .epsilon(0, 1)
        .edge(1, a1, 2)
        .edge(1, not_a1, 1)
        .edge(2, a0, 1)
        .edge(2, not_a0, 2)
        .accepting_set(vec![1])
        .accepting_set(vec![2])
        .build()
        .unwrap()
}

#[test]
fn ldba_partition_and_distances() {
    let ldba = two_set_ldba();
    assert!(!ldba.in_deterministic_part(0));
    assert!(ldba.in_deterministic_part(1));
    assert!(ldba.in_deterministic_part(2));
    // F_1 = {1}: reachable from 0 only via the ε-edge, one hop.
    assert_eq!(ldba.distance(0, 0), Some(1));
    assert_eq!(ldba.distance(1, 0), Some(0));
    assert_eq!(ldba.distance(2, 0), Some(1));
    // F_2 = {2}: 0 -ε-> 1 -a1-> 2.
    assert_eq!(ldba.distance(0, 1), Some(2));
    assert_eq!(ldba.distance(1, 1), Some(1));
    assert_eq!(ldba.distance(2, 1), Some(0));
    ldba.check_satisfiable().unwrap();
}

#[test]
fn ldba_distance_matches_floyd_warshall_per_set() {
    let ldba = two_set_ldba();
    let n = ldba.n_states();
    let pruned: Vec<Vec<StateId>> = (0..n).map(|q| ldba.pruned_successors(q).to_vec()).collect();
    let ap_dist = floyd_warshall(&pruned);
    for (j, set) in ldba.accepting_sets().iter().enumerate() {
        for q in 0..n {
            let expected = set.iter().filter_map(|&g| ap_dist[q][g]).min();
            assert_eq!(ldba.distance(q, j), expected);
        }
    }
}

#[test]
fn ldba_runs_never_leave_deterministic_part() {
    let ldba = two_set_ldba();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        // Enter the deterministic part via the ε-edge, then run random symbols.
        let mut q = ldba.epsilon_successors(0)[0];
        assert!(ldba.in_deterministic_part(q));
        for _ in 0..50 {
            let sym = match rng.random_range(0..3) {
                0 => Symbol::empty(),
                1 => Symbol::singleton(0),
                _ => Symbol::singleton(1),
            };
            q = ldba.step_deterministic(q, &sym).unwrap();
            assert!(ldba.in_deterministic_part(q));
        }
    }
}

#[test]
fn ldba_rejects_accepting_state_outside_deterministic_part() {
    let set = aps(1);
    let any = SymbolGuard::const_true();
    // State 0 has an ε-edge, so it cannot be in the deterministic part, yet
    // it is marked accepting.
    let result = LdbaBuilder::new(set, 2, 0)
        .edge(0, any.clone(), 0)
        .epsilon(0, 1)
        .edge(1, any, 1)
        .accepting_set(vec![0])
        .build();
    assert!(matches!(result, Err(crate::Error::Semantic(_))));
}

#[test]
fn ldba_unreachable_set_is_unsatisfiable() {
    let set = aps(1);
    let any = SymbolGuard::const_true();
    let ldba = LdbaBuilder::new(set, 2, 0)
        .edge(0, any.clone(), 0)
        .edge(1, any, 1)
        .accepting_set(vec![1])
        .build()
        .unwrap();
    assert!(matches!(ldba.check_satisfiable(), Err(crate::Error::Unsatisfiable)));
}
