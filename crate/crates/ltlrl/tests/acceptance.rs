//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them). Tolerances are pinned in the
//! assertions themselves.

use ltlrl::automaton::{
    build_pattern_automaton, feasible_symbols, random_deterministic_automaton, LdbaBuilder,
    Literal, PropositionSet, StateId, SymbolGuard, TaskPattern,
};
use ltlrl::bench;
use ltlrl::estimator::EstimatedModel;
use ltlrl::learner::{
    extract_greedy, run_training, AutomatonSource, ConvergenceConfig, PolicyConfig, RunConfig,
};
use ltlrl::mdp::{build_gridworld, EnvSource, GenericMdpSpec, GridWorldSpec};
use ltlrl::oracle;
use ltlrl::policy::{
    epsilon_delta_masses, ActionSelector, BiasConfig, ExplorationParams, PolicyKind, QTable,
};
use ltlrl::product::{ldba_reward, LdbaEpisodeState, Product, RewardParams, TaskAutomaton};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn task_automaton(pattern: TaskPattern) -> ltlrl::automaton::RabinAutomaton {
    build_pattern_automaton(&pattern).unwrap()
}

/// Criterion 1 — PMDP sizes match the published instances exactly.
#[test]
fn criterion_01_pmdp_sizes() {
    let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
    let cases: [(&str, TaskPattern, usize); 4] = [
        (
            "reach-avoid I",
            TaskPattern::ReachAvoidStay { goal: 100, obstacles: vec![46] },
            400,
        ),
        (
            "reach-avoid II",
            TaskPattern::ReachAvoidStay {
                goal: 100,
                obstacles: bench::REACH_AVOID_2_OBSTACLES.to_vec(),
            },
            400,
        ),
        (
            "coverage",
            TaskPattern::OrderedCoverage {
                targets: vec![100, 46, 33],
                precedences: vec![(33, 100)],
                obstacles: vec![73],
            },
            800,
        ),
        (
            "surveillance",
            TaskPattern::Surveillance { targets: vec![36, 26, 76, 64, 89, 10], obstacles: vec![33] },
            1400,
        ),
    ];
    let mut detail = String::new();
    let mut ok = true;
    for (name, pattern, want) in cases {
        let auto = task_automaton(pattern);
        let pmdp = oracle::materialize(&mdp, &auto, oracle::DEFAULT_STATE_CAP).unwrap();
        detail.push_str(&format!("{name}: {} ", pmdp.n_states()));
        ok &= pmdp.n_states() == want && auto.pairs().len() == 1;
    }
    report("1 (product sizes)", ok, detail.trim());
}

/// Criterion 2 — exploration-mass law and the δ_b = 0 reduction.
#[test]
fn criterion_02_exploration_mass_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..1000 {
        let eps: f64 = rng.random();
        let split: f64 = rng.random();
        let delta_e = eps * split;
        let delta_b = eps - delta_e;
        let m = rng.random_range(1..=8);
        let a_star = rng.random_range(0..m);
        let a_b = if rng.random_bool(0.5) { Some(rng.random_range(0..m)) } else { None };
        let masses = epsilon_delta_masses(m, a_star, a_b, eps, delta_b, delta_e);
        assert!(masses.iter().all(|&p| p >= -1e-15));
        worst_gap = worst_gap.max((masses.iter().sum::<f64>() - 1.0).abs());
        // δ_b = 0 with a biased action present is ε-greedy exactly.
        assert_eq!(
            epsilon_delta_masses(m, a_star, a_b, eps, 0.0, eps),
            epsilon_delta_masses(m, a_star, None, eps, 0.0, eps),
        );
    }
    let sum_ok = worst_gap <= 1e-12;

    // δ_b = 0 reduces to ε-greedy distributionally: chi-square at 1e5 draws
    // of the full selector against the ε-greedy masses.
    let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
    let auto = task_automaton(TaskPattern::ReachAvoidStay { goal: 100, obstacles: vec![46] });
    let product = Product::new(mdp, TaskAutomaton::Rabin(auto)).unwrap();
    let estimator = EstimatedModel::for_mdp(product.mdp());
    let mut q_table = QTable::for_product(&product);
    let s = product.initial_state();
    let sid = s.q * 100 + s.x;
    for a in 0..5 {
        q_table.set_value(sid, a, [0.2, 0.6, 0.1, 0.4, 0.3][a]);
    }
    let schedule = ExplorationParams {
        epsilon_init: 0.4,
        epsilon_decay: 1.0,
        // Zero uniform split: all exploration mass rides on δ_b, which must
        // fold back into uniform exploration when no bias is available.
        delta_e_frac_init: 0.0,
        delta_e_frac_floor: 0.0,
        ..ExplorationParams::default()
    };
    let mut selector = ActionSelector::new(
        PolicyKind::EpsilonDeltaGreedy,
        schedule,
        &product,
        BiasConfig::default(),
    );
    let n = 100_000usize;
    let mut counts = [0usize; 5];
    for _ in 0..n {
        counts[selector.select(&q_table, &estimator, &product, s, sid, 0, &mut rng)] += 1;
    }
    let expected = epsilon_delta_masses(5, 1, None, 0.4, 0.0, 0.4);
    let stat: f64 = (0..5)
        .map(|a| {
            let e = expected[a] * n as f64;
            (counts[a] as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(4.0).unwrap().cdf(stat);
    report(
        "2 (exploration masses)",
        sum_ok && p_value > 0.01,
        &format!("worst |sum-1| = {worst_gap:.2e}, chi-square p = {p_value:.4}"),
    );
}

/// Criterion 3 — policy improvement over 100 randomized trials.
#[test]
fn criterion_03_policy_improvement() {
    let spec = GridWorldSpec { width: 3, height: 3, ..GridWorldSpec::benchmark_10x10() };
    let mdp = build_gridworld(&spec).unwrap();
    let auto = task_automaton(TaskPattern::ReachAvoidStay { goal: 9, obstacles: vec![5] });
    assert_eq!(auto.n_states(), 4);
    let pmdp = oracle::materialize(&mdp, &auto, oracle::DEFAULT_STATE_CAP).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let report_data = oracle::verify_policy_improvement(&pmdp, 100, 0.95, &mut rng);
    report(
        "3 (policy improvement)",
        report_data.violations == 0,
        &format!(
            "{} trials, {} violations, worst margin {:.3e}",
            report_data.trials, report_data.violations, report_data.worst_margin
        ),
    );
}

/// Criterion 4 — bias effect: exact strict separation, Monte-Carlo interval
/// separation, and the δ_b = 0 control, on both constructed instances.
#[test]
fn criterion_04_bias_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut ok = true;
    let mut detail = String::new();
    for instance in [oracle::hallway_theorem1_instance(), oracle::hallway_theorem2_instance()] {
        let r = oracle::verify_bias_theorems(&instance, 100_000, &mut rng).unwrap();
        detail.push_str(&format!(
            "[{} k*={} exact {:.4}>{:.4} mc_sep={} ctrl={}] ",
            r.name,
            r.k_star,
            r.exact_p_biased,
            r.exact_p_greedy,
            r.mc_separated,
            r.control_exact_equal && r.control_mc_overlaps,
        ));
        ok &= r.exact_strictly_greater
            && r.mc_separated
            && r.control_exact_equal
            && r.control_mc_overlaps;
    }
    report("4 (bias effect)", ok, detail.trim());
}

/// Criterion 5 — distance tables equal an all-pairs shortest-hops oracle on
/// 50 random automata.
#[test]
fn criterion_05_distance_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut checked = 0;
    for i in 0..50 {
        let n = 2 + (i % 11); // up to 12 states
        let auto = random_deterministic_automaton(&mut rng, n, 2);
        // Floyd–Warshall over the pruned adjacency.
        let mut d = vec![vec![None::<u32>; n]; n];
        for q in 0..n {
            d[q][q] = Some(0);
            for &q2 in auto.pruned_successors(q) {
                if q2 != q {
                    d[q][q2] = Some(1);
                }
            }
        }
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if let (Some(x), Some(y)) = (d[a][k], d[k][b]) {
                        if d[a][b].map_or(true, |c| x + y < c) {
                            d[a][b] = Some(x + y);
                        }
                    }
                }
            }
        }
        for q in 0..n {
            let expected =
                (0..n).filter(|&g| auto.is_accepting(g)).filter_map(|g| d[q][g]).min();
            assert_eq!(auto.distance(q), expected, "automaton {i}, state {q}");
        }
        checked += 1;
    }
    report("5 (distance tables)", checked == 50, &format!("{checked} automata, exact equality"));
}

/// Criterion 6 — estimator consistency on the benchmark kernel row.
#[test]
fn criterion_06_estimator_consistency() {
    let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
    let mut model = EstimatedModel::for_mdp(&mdp);
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let (x, a) = (44, 1); // interior cell, action `right`
    for _ in 0..100_000 {
        let dest = mdp.sample_step(x, a, &mut rng).unwrap();
        model.record(x, a, dest);
    }
    let mut worst: f64 = 0.0;
    for &(dest, p) in mdp.row(x, a) {
        worst = worst.max((model.p_hat(x, a, dest) - p).abs());
    }
    report("6 (estimator consistency)", worst <= 0.01, &format!("max |P̂-P| = {worst:.5}"));
}

// ---------------------------------------------------------------------------
// Criterion 7 — qualitative reproduction of the benchmark comparisons.
//
// Reach-avoid I: the biased policy's mean return at episode 1000 strictly
// exceeds every baseline's; its first positive-reward episode strictly
// precedes the ε-greedy and UCB1 ones. Surveillance: the biased policy
// collects positive reward while every baseline's total stays at zero. The
// benchmark runs once and is shared across the per-condition tests below.
// ---------------------------------------------------------------------------

static BENCHMARK: std::sync::OnceLock<bench::SuiteOutcome> = std::sync::OnceLock::new();

fn benchmark() -> &'static bench::SuiteOutcome {
    BENCHMARK.get_or_init(|| {
        let full = bench::builtin_suite();
        let suite = bench::BenchmarkSuite {
            experiments: full
                .experiments
                .into_iter()
                .filter(|e| e.name == "reach_avoid_1" || e.name == "surveillance")
                .collect(),
            seeds: full.seeds,
        };
        bench::run_suite(&suite, None).unwrap()
    })
}

fn policy_summary(exp: &str, kind: PolicyKind) -> bench::PolicySummary {
    benchmark()
        .summary
        .experiments
        .iter()
        .find(|e| e.experiment == exp)
        .unwrap()
        .policies
        .iter()
        .find(|p| p.policy == kind)
        .unwrap()
        .clone()
}

#[test]
fn criterion_07a_reach_avoid_final_mean() {
    let biased = policy_summary("reach_avoid_1", PolicyKind::EpsilonDeltaGreedy);
    let eg = policy_summary("reach_avoid_1", PolicyKind::EpsilonGreedy);
    let bo = policy_summary("reach_avoid_1", PolicyKind::Boltzmann);
    let uc = policy_summary("reach_avoid_1", PolicyKind::Ucb1);
    report(
        "7a (reach-avoid final mean)",
        biased.final_mean > eg.final_mean
            && biased.final_mean > bo.final_mean
            && biased.final_mean > uc.final_mean,
        &format!(
            "biased {:.2} vs ε-greedy {:.2}, Boltzmann {:.2}, UCB1 {:.2}",
            biased.final_mean, eg.final_mean, bo.final_mean, uc.final_mean
        ),
    );
}

#[test]
fn criterion_07b_reach_avoid_first_positive() {
    let biased = policy_summary("reach_avoid_1", PolicyKind::EpsilonDeltaGreedy);
    let eg = policy_summary("reach_avoid_1", PolicyKind::EpsilonGreedy);
    let uc = policy_summary("reach_avoid_1", PolicyKind::Ucb1);
    let first = biased.first_positive_episode.unwrap_or(u32::MAX);
    report(
        "7b (reach-avoid first positive)",
        first < eg.first_positive_episode.unwrap_or(u32::MAX)
            && first < uc.first_positive_episode.unwrap_or(u32::MAX),
        &format!(
            "biased {:?} vs ε-greedy {:?}, UCB1 {:?}",
            biased.first_positive_episode, eg.first_positive_episode, uc.first_positive_episode
        ),
    );
}

#[test]
fn criterion_07c_surveillance_biased_collects() {
    let biased = policy_summary("surveillance", PolicyKind::EpsilonDeltaGreedy);
    report(
        "7c (surveillance biased collects)",
        biased.total_positive_return > 0.0,
        &format!("biased total positive return {:.3}", biased.total_positive_return),
    );
}

#[test]
fn criterion_07c_surveillance_epsilon_greedy_zero() {
    let p = policy_summary("surveillance", PolicyKind::EpsilonGreedy);
    report(
        "7c (surveillance epsilon_greedy collects zero)",
        p.total_positive_return == 0.0,
        &format!("total positive return {:.4}", p.total_positive_return),
    );
}

/// Known divergence from the published account: an annealed softmax baseline
/// still stumbles into a handful of full surveillance cycles among the 2.5
/// million benchmark steps (here ~3 episodes out of 5000), so its exact
/// positive total is not zero even though its reward curve is flat at plot
/// resolution. The assertion is kept literal rather than loosened.
#[test]
fn criterion_07c_surveillance_boltzmann_zero() {
    let p = policy_summary("surveillance", PolicyKind::Boltzmann);
    let biased = policy_summary("surveillance", PolicyKind::EpsilonDeltaGreedy);
    report(
        "7c (surveillance boltzmann collects zero)",
        p.total_positive_return == 0.0,
        &format!(
            "total positive return {:.4} ({}x below the biased policy's {:.1})",
            p.total_positive_return,
            (biased.total_positive_return / p.total_positive_return.max(1e-12)) as u64,
            biased.total_positive_return
        ),
    );
}

/// Known divergence from the published account: count-driven UCB1 explores
/// the product systematically and completes a few lucky surveillance cycles
/// on most seeds, for any exploration constant in the candidate sweep — the
/// confidence bonus dwarfs every value signal while Q is flat, so no
/// configuration suppresses it. The assertion is kept literal rather than
/// loosened.
#[test]
fn criterion_07c_surveillance_ucb1_zero() {
    let p = policy_summary("surveillance", PolicyKind::Ucb1);
    let biased = policy_summary("surveillance", PolicyKind::EpsilonDeltaGreedy);
    report(
        "7c (surveillance ucb1 collects zero)",
        p.total_positive_return == 0.0,
        &format!(
            "total positive return {:.4} ({}x below the biased policy's {:.1})",
            p.total_positive_return,
            (biased.total_positive_return / p.total_positive_return.max(1e-12)) as u64,
            biased.total_positive_return
        ),
    );
}

/// Criterion 8 — oracle cross-check at reduced scale: the learned greedy
/// policy's satisfaction probability is within 0.05 of the optimum.
#[test]
fn criterion_08_oracle_cross_check() {
    let spec = GridWorldSpec {
        width: 5,
        height: 5,
        absorbing_cells: vec![25],
        ..GridWorldSpec::benchmark_10x10()
    };
    let config = RunConfig {
        environment: EnvSource::Grid(spec.clone()),
        automaton: AutomatonSource::Pattern(TaskPattern::ReachAvoidStay {
            goal: 25,
            obstacles: vec![13],
        }),
        reward: RewardParams::benchmark(),
        gamma: 0.99,
        episodes: 3000,
        tau: 100,
        policy: PolicyConfig::default(),
        seed: 88,
        ldba_reward: 1.0,
        convergence: ConvergenceConfig { enabled: false, ..ConvergenceConfig::default() },
        q_init: 0.0,
        q_init_noise: 1e-9,
        terminate_on_violation: false,
    };
    let result = run_training(&config).unwrap();

    let mdp = build_gridworld(&spec).unwrap();
    let auto = task_automaton(TaskPattern::ReachAvoidStay { goal: 25, obstacles: vec![13] });
    let pmdp = oracle::materialize(&mdp, &auto, oracle::DEFAULT_STATE_CAP).unwrap();
    let optimal = oracle::max_sat_probability(&pmdp);
    let learned = oracle::policy_sat_probability(&pmdp, &result.greedy);
    let s0 = pmdp.initial();
    let gap = optimal[s0] - learned[s0];
    report(
        "8 (oracle cross-check)",
        gap.abs() <= 0.05 && optimal[s0] > 0.5,
        &format!("optimal {:.4}, learned {:.4}, gap {:.4}", optimal[s0], learned[s0], gap),
    );
}

/// Criterion 9 — LDBA reward rule: exactly 2r per completed visit cycle,
/// nothing for intra-cycle revisits, checked on an exhaustive short trace.
#[test]
fn criterion_09_ldba_reward_cycle() {
    // Two-cell world labeled a0/a1; LDBA with F_1 = {1}, F_2 = {2} and an
    // ε-bridge from the prefix state.
    let env = GenericMdpSpec {
        initial: 0,
        aps: vec!["a0".into(), "a1".into()],
        labels: vec![vec!["a0".into()], vec!["a1".into()]],
        transitions: vec![
            vec![vec![(0, 1.0)], vec![(1, 1.0)]],
            vec![vec![(0, 1.0)], vec![(1, 1.0)]],
        ],
        action_names: vec![],
    };
    let aps = PropositionSet::new(["a0", "a1"]).unwrap();
    let ldba = LdbaBuilder::new(aps, 3, 0)
        .edge(0, SymbolGuard::const_true(), 0)
        .epsilon(0, 1)
        .edge(1, SymbolGuard::literal(Literal::pos(1)), 2)
        .edge(1, SymbolGuard::literal(Literal::neg(1)), 1)
        .edge(2, SymbolGuard::literal(Literal::pos(0)), 1)
        .edge(2, SymbolGuard::literal(Literal::neg(0)), 2)
        .accepting_set(vec![1])
        .accepting_set(vec![2])
        .build()
        .unwrap();
    let product = Product::new(env.build().unwrap(), TaskAutomaton::Ldba(ldba)).unwrap();
    let r = 2.0;
    let mut ep = LdbaEpisodeState::new(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut s = product.initial_state();

    // Deterministic script. The automaton reads the label of the cell being
    // left, so moving onto the a1-cell pays only on the following step.
    // (action, expected reward)
    let script: Vec<(usize, f64)> = vec![
        (2, r),   // ε: q 0 -> 1, fresh F_1 visit
        (0, 0.0), // stay at cell 0: reads a0, q stays 1: F_1 revisit, no pay
        (0, 0.0), // again: still nothing
        (1, 0.0), // move to cell 1: reads a0 on the way out, still F_1
        (0, r),   // leave cell 1: reads a1, q 1 -> 2: fresh F_2, cycle done
    ];
    let mut first_cycle = 0.0;
    for (a, want) in &script {
        let out = product.step(s, *a, &mut rng).unwrap();
        let got = ldba_reward(&out.sets_hit, &mut ep, r);
        first_cycle += got;
        assert_eq!(got, *want, "action {a} at {s:?}");
        s = out.next;
    }
    let mut ok = first_cycle == 2.0 * r;
    // The visit set reset; steady alternation between the two cells hits a
    // fresh accepting set every step — each full cycle is two steps and pays
    // exactly 2r.
    for _ in 0..3 {
        let mut cycle_total = 0.0;
        for _ in 0..2 {
            let a = if s.x == 0 { 1 } else { 0 };
            let out = product.step(s, a, &mut rng).unwrap();
            cycle_total += ldba_reward(&out.sets_hit, &mut ep, r);
            s = out.next;
        }
        ok &= cycle_total == 2.0 * r;
    }
    report("9 (ldba reward cycle)", ok, &format!("first cycle {first_cycle}, then 2r per cycle"));
}

/// Criterion 10 — determinism: identical suite + seeds give byte-identical
/// curve files across repeated `bench` invocations of the CLI binary.
#[test]
fn criterion_10_bench_determinism() {
    let dir = tempfile::tempdir().unwrap();
    // A small but non-trivial suite: one experiment, two policies, two seeds.
    let suite = serde_json::json!({
        "experiments": [{
            "name": "det",
            "config": {
                "environment": {"grid": {"width": 5, "height": 5, "p_intended": 0.7, "initial_cell": 1}},
                "automaton": {"pattern": {"kind": "reach_avoid_stay", "goal": 25, "obstacles": [13]}},
                "episodes": 40,
                "tau": 60,
                "convergence": {"enabled": false},
                "q_init_noise": 1e-9
            },
            "policies": ["epsilon_delta_greedy", "ucb1"]
        }],
        "seeds": [7, 8]
    });
    let suite_path = dir.path().join("suite.json");
    std::fs::write(&suite_path, serde_json::to_string_pretty(&suite).unwrap()).unwrap();

    let run = |out: &str| {
        let out_dir = dir.path().join(out);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ltlrl"))
            .args(["bench", suite_path.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out_dir.join("curves.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    report(
        "10 (bench determinism)",
        a == b && !a.is_empty(),
        &format!("{} bytes, byte-identical across reruns", a.len()),
    );
}
