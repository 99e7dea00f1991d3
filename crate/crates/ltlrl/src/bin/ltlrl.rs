//! Command-line front end: training runs, the benchmark suite, verification
//! checks, and inspection helpers.

use clap::{Parser, Subcommand};
use ltlrl::automaton::{self, ParsedAutomaton};
use ltlrl::bench;
use ltlrl::learner::{self, Checkpoint, RunConfig};
use ltlrl::oracle;
use ltlrl::product::TaskAutomaton;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ltlrl", about = "Automaton-guided reinforcement learning for temporal-logic tasks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training configuration and write its artifacts.
    Train {
        /// Path to a run-config JSON document.
        config: PathBuf,
        /// Output directory (returns CSV, checkpoint).
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// Run a benchmark suite (experiments x policies x seeds).
    Bench {
        /// Path to a suite JSON document; omit with --builtin for the
        /// built-in benchmark.
        suite: Option<PathBuf>,
        /// Use the built-in four-task benchmark.
        #[arg(long)]
        builtin: bool,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
        /// Override the episode budget of every experiment.
        #[arg(long)]
        episodes: Option<u32>,
    },
    /// Run the verification battery (policy improvement, bias effects,
    /// distance tables). Exits nonzero when any check fails.
    Verify {
        /// Monte-Carlo trials for the bias-effect checks.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Randomized trials for the policy-improvement check.
        #[arg(long, default_value_t = 100)]
        improvement_trials: usize,
        /// Random automata for the distance-table check.
        #[arg(long, default_value_t = 50)]
        automata: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Parse an automaton source and dump it (with distances) as JSON.
    InspectAutomaton {
        /// A .hoa document, a JSON automaton dump, or a JSON pattern
        /// (`{"pattern": {...}}`).
        source: PathBuf,
    },
    /// Render the greedy policy of a checkpoint as a letter grid.
    PolicyGrid {
        checkpoint: PathBuf,
        /// Automaton state to slice at.
        q: usize,
        /// Emit JSON instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Exact satisfaction probabilities for a run configuration, optionally
    /// comparing a trained checkpoint's greedy policy against the optimum.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: String,
    kind: &'a str,
}

fn exit_code_for(err: &ltlrl::Error) -> u8 {
    use ltlrl::Error::*;
    match err {
        HoaParse { .. } | Semantic(_) | InvalidConfig(_) | Unsatisfiable | Json(_)
        | ProductTooLarge { .. } => 1,
        HypothesisViolated(_) => 2,
        Io(_) | InvalidAction { .. } => 3,
    }
}

fn kind_for(code: u8) -> &'static str {
    match code {
        1 => "config",
        2 => "verification",
        _ => "runtime",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            let code = exit_code_for(&err);
            let report = ErrorReport { error: err.to_string(), kind: kind_for(code) };
            eprintln!("{}", serde_json::to_string(&report).unwrap());
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: Cli) -> ltlrl::Result<ExitCode> {
    match cli.command {
        Command::Train { config, output_dir } => train(&config, &output_dir),
        Command::Bench { suite, builtin, output_dir, episodes } => {
            run_bench(suite, builtin, &output_dir, episodes)
        }
        Command::Verify { trials, improvement_trials, automata, seed } => {
            verify(trials, improvement_trials, automata, seed)
        }
        Command::InspectAutomaton { source } => inspect(&source),
        Command::PolicyGrid { checkpoint, q, json } => policy_grid(&checkpoint, q, json),
        Command::Oracle { config, checkpoint } => oracle_cmd(&config, checkpoint.as_deref()),
    }
}

fn load_config(path: &std::path::Path) -> ltlrl::Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: RunConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

fn train(config_path: &std::path::Path, output_dir: &std::path::Path) -> ltlrl::Result<ExitCode> {
    let config = load_config(config_path)?;
    let result = learner::run_training(&config)?;
    std::fs::create_dir_all(output_dir)?;
    let mut csv = String::from("episode,discounted_return\n");
    for (i, r) in result.returns.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, r));
    }
    std::fs::write(output_dir.join("returns.csv"), csv)?;
    Checkpoint::from_result(&config, &result).save(&output_dir.join("checkpoint.json"))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "episodes_run": result.episodes_run,
            "steps": result.steps,
            "converged_at": result.converged_at,
            "final_return": result.returns.last().copied().unwrap_or(0.0),
            "wall_time_s": result.wall_time.as_secs_f64(),
            "artifacts": [
                output_dir.join("returns.csv"),
                output_dir.join("checkpoint.json"),
            ],
        }))?
    );
    Ok(ExitCode::SUCCESS)
}

fn run_bench(
    suite_path: Option<PathBuf>,
    builtin: bool,
    output_dir: &std::path::Path,
    episodes: Option<u32>,
) -> ltlrl::Result<ExitCode> {
    let mut suite = match (suite_path, builtin) {
        (Some(path), false) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<bench::BenchmarkSuite>(&text)?
        }
        (None, true) => bench::builtin_suite(),
        (Some(_), true) | (None, false) => {
            return Err(ltlrl::Error::InvalidConfig(
                "pass a suite file or --builtin (not both)".into(),
            ))
        }
    };
    if let Some(e) = episodes {
        for exp in &mut suite.experiments {
            exp.config.episodes = e;
        }
    }
    let outcome = bench::run_suite(&suite, Some(output_dir))?;
    let failed = outcome.cells.iter().filter(|c| c.error.is_some()).count();
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    if failed > 0 {
        eprintln!(
            "{}",
            serde_json::to_string(&ErrorReport {
                error: format!("{failed} cells failed; see summary"),
                kind: "runtime",
            })?
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(
    trials: u64,
    improvement_trials: usize,
    automata: usize,
    seed: u64,
) -> ltlrl::Result<ExitCode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    // Policy improvement on the small reach-avoid product.
    let spec = ltlrl::mdp::GridWorldSpec {
        width: 3,
        height: 3,
        ..ltlrl::mdp::GridWorldSpec::benchmark_10x10()
    };
    let mdp = ltlrl::mdp::build_gridworld(&spec)?;
    let auto = automaton::build_pattern_automaton(&automaton::TaskPattern::ReachAvoidStay {
        goal: 9,
        obstacles: vec![5],
    })?;
    let pmdp = oracle::materialize(&mdp, &auto, oracle::DEFAULT_STATE_CAP)?;
    let report = oracle::verify_policy_improvement(&pmdp, improvement_trials, 0.95, &mut rng);
    check(
        "policy-improvement",
        report.passed(),
        format!("{} trials, {} violations, worst margin {:.3e}", report.trials, report.violations, report.worst_margin),
    );

    // Bias effects on the hallway instances.
    for instance in [oracle::hallway_theorem1_instance(), oracle::hallway_theorem2_instance()] {
        let name = format!("bias-effect[{}]", instance.name);
        match oracle::verify_bias_theorems(&instance, trials, &mut rng) {
            Ok(r) => check(
                &name,
                r.passed(),
                format!(
                    "exact {:.5} > {:.5}; MC [{:.5},{:.5}] vs [{:.5},{:.5}]",
                    r.exact_p_biased,
                    r.exact_p_greedy,
                    r.mc_biased.lo,
                    r.mc_biased.hi,
                    r.mc_greedy.lo,
                    r.mc_greedy.hi
                ),
            ),
            Err(e) => check(&name, false, e.to_string()),
        }
    }

    // Distance tables against an all-pairs shortest-hops recomputation.
    let mut worst: Option<String> = None;
    for i in 0..automata {
        let n = 2 + (i % 11);
        let auto = automaton::random_deterministic_automaton(&mut rng, n, 2);
        if let Some(msg) = distance_table_mismatch(&auto) {
            worst = Some(msg);
            break;
        }
    }
    check(
        "distance-tables",
        worst.is_none(),
        worst.unwrap_or_else(|| format!("{automata} random automata agree with Floyd–Warshall")),
    );

    if all_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(ltlrl::Error::HypothesisViolated("verification failed".into()))
    }
}

/// Floyd–Warshall recomputation of the accepting distance; returns an error
/// description on the first disagreement.
fn distance_table_mismatch(auto: &automaton::RabinAutomaton) -> Option<String> {
    let n = auto.n_states();
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
    for q in 0..n {
        let expected =
            (0..n).filter(|&g| auto.is_accepting(g)).filter_map(|g| d[q][g]).min();
        if auto.distance(q) != expected {
            return Some(format!(
                "state {q}: table says {:?}, oracle says {:?}",
                auto.distance(q),
                expected
            ));
        }
    }
    None
}

/// Automaton source forms accepted by `inspect-automaton`.
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum InspectSource {
    Pattern { pattern: automaton::TaskPattern },
    Dump(automaton::AutomatonDump),
}

fn inspect(source: &std::path::Path) -> ltlrl::Result<ExitCode> {
    let text = std::fs::read_to_string(source)?;
    let dump = if text.trim_start().starts_with("HOA:") {
        match automaton::parse_hoa(&text)? {
            ParsedAutomaton::Rabin(a) => a.dump(),
            ParsedAutomaton::Ldba(a) => a.dump(),
        }
    } else {
        match serde_json::from_str::<InspectSource>(&text)? {
            InspectSource::Pattern { pattern } => {
                automaton::build_pattern_automaton(&pattern)?.dump()
            }
            InspectSource::Dump(dump) => match dump.kind.as_str() {
                "rabin" => automaton::RabinAutomaton::from_dump(&dump)?.dump(),
                _ => automaton::LimitDetBuchi::from_dump(&dump)?.dump(),
            },
        }
    };
    println!("{}", serde_json::to_string_pretty(&dump)?);
    Ok(ExitCode::SUCCESS)
}

fn policy_grid(checkpoint: &std::path::Path, q: usize, json: bool) -> ltlrl::Result<ExitCode> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let trainer = learner::Trainer::new(&ckpt.config)?;
    let greedy = learner::extract_greedy(&ckpt.q_table);
    let grid = learner::render_policy_grid(trainer.product(), &greedy, q)?;
    if json {
        let rows: Vec<Vec<String>> = grid
            .lines()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({ "q": q, "actions": rows }))?
        );
    } else {
        print!("{grid}");
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle_cmd(
    config_path: &std::path::Path,
    checkpoint: Option<&std::path::Path>,
) -> ltlrl::Result<ExitCode> {
    let config = load_config(config_path)?;
    let mdp = config.environment.build()?;
    let auto = match config.automaton.build()? {
        TaskAutomaton::Rabin(a) => a,
        TaskAutomaton::Ldba(_) => {
            return Err(ltlrl::Error::InvalidConfig(
                "exact analysis supports Rabin tasks only".into(),
            ))
        }
    };
    let pmdp = oracle::materialize(&mdp, &auto, oracle::DEFAULT_STATE_CAP)?;
    let sat = oracle::max_sat_probability(&pmdp);
    let s0 = pmdp.initial();
    let mut out = serde_json::json!({
        "product_states": pmdp.n_states(),
        "max_sat_probability_initial": sat[s0],
        "accepting_mecs": oracle::accepting_mecs(&pmdp).len(),
    });
    if let Some(path) = checkpoint {
        let ckpt = Checkpoint::load(path)?;
        let greedy = learner::extract_greedy(&ckpt.q_table);
        let learned = oracle::policy_sat_probability(&pmdp, &greedy);
        out["learned_policy_sat_probability"] = serde_json::json!(learned[s0]);
        out["gap"] = serde_json::json!(sat[s0] - learned[s0]);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}
