//! Python bindings: drive training runs, query the exact oracle, and inspect
//! automata from Python. Configurations cross the boundary as JSON strings —
//! the same documents the CLI consumes.

use ltlrl::learner::{self, RunConfig};
use ltlrl::oracle;
use ltlrl::product::TaskAutomaton;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(err: ltlrl::Error) -> PyErr {
    match err {
        ltlrl::Error::Io(_) | ltlrl::Error::InvalidAction { .. } => {
            PyRuntimeError::new_err(err.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_config(config_json: &str) -> PyResult<RunConfig> {
    let config: RunConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    config.validate().map_err(to_py_err)?;
    Ok(config)
}

/// Outcome of one training run.
#[pyclass(get_all)]
struct TrainSummary {
    /// Discounted return of every episode, in order.
    returns: Vec<f64>,
    episodes_run: u32,
    steps: u64,
    /// First episode (1-based) with a positive return, if any.
    first_positive_episode: Option<u32>,
    converged_at: Option<u32>,
    /// Greedy action per product state (indexed `q * n_states + x`).
    greedy: Vec<usize>,
    wall_time_s: f64,
}

/// Runs one training configuration (JSON document) to completion.
#[pyfunction]
fn train(config_json: &str) -> PyResult<TrainSummary> {
    let config = parse_config(config_json)?;
    let result = learner::run_training(&config).map_err(to_py_err)?;
    Ok(TrainSummary {
        first_positive_episode: result
            .returns
            .iter()
            .position(|&r| r > 0.0)
            .map(|i| i as u32 + 1),
        episodes_run: result.episodes_run,
        steps: result.steps,
        converged_at: result.converged_at,
        greedy: result.greedy,
        wall_time_s: result.wall_time.as_secs_f64(),
        returns: result.returns,
    })
}

/// Exact maximal satisfaction probability of the configured task from the
/// initial state. When `greedy` (a per-product-state action table, as
/// returned by `train`) is given, returns `(optimal, learned)` instead.
#[pyfunction]
#[pyo3(signature = (config_json, greedy=None))]
fn satisfaction_probability(
    config_json: &str,
    greedy: Option<Vec<usize>>,
) -> PyResult<(f64, Option<f64>)> {
    let config = parse_config(config_json)?;
    let mdp = config.environment.build().map_err(to_py_err)?;
    let auto = match config.automaton.build().map_err(to_py_err)? {
        TaskAutomaton::Rabin(a) => a,
        TaskAutomaton::Ldba(_) => {
            return Err(PyValueError::new_err("exact analysis supports Rabin tasks only"))
        }
    };
    let pmdp = oracle::materialize(&mdp, &auto, oracle::DEFAULT_STATE_CAP).map_err(to_py_err)?;
    let optimal = oracle::max_sat_probability(&pmdp);
    let s0 = pmdp.initial();
    let learned = match greedy {
        None => None,
        Some(policy) => {
            if policy.len() != pmdp.n_states() {
                return Err(PyValueError::new_err(format!(
                    "greedy table has {} entries, product has {}",
                    policy.len(),
                    pmdp.n_states()
                )));
            }
            Some(oracle::policy_sat_probability(&pmdp, &policy)[s0])
        }
    };
    Ok((optimal[s0], learned))
}

/// Parses an automaton source — HOA text, a `{"pattern": ...}` JSON document,
/// or a previously emitted dump — and returns its JSON dump (states, guarded
/// edges, acceptance, pruned graph, distance tables).
#[pyfunction]
fn automaton_dump(source: &str) -> PyResult<String> {
    use ltlrl::automaton::{self, ParsedAutomaton};
    let dump = if source.trim_start().starts_with("HOA:") {
        match automaton::parse_hoa(source).map_err(to_py_err)? {
            ParsedAutomaton::Rabin(a) => a.dump(),
            ParsedAutomaton::Ldba(a) => a.dump(),
        }
    } else {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Source {
            Pattern { pattern: automaton::TaskPattern },
            Dump(automaton::AutomatonDump),
        }
        match serde_json::from_str::<Source>(source)
            .map_err(|e| PyValueError::new_err(e.to_string()))?
        {
            Source::Pattern { pattern } => {
                automaton::build_pattern_automaton(&pattern).map_err(to_py_err)?.dump()
            }
            Source::Dump(d) => match d.kind.as_str() {
                "rabin" => automaton::RabinAutomaton::from_dump(&d).map_err(to_py_err)?.dump(),
                _ => automaton::LimitDetBuchi::from_dump(&d).map_err(to_py_err)?.dump(),
            },
        }
    };
    serde_json::to_string_pretty(&dump).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// The built-in benchmark suite as a JSON document, ready to edit or to feed
/// back into `run_benchmark`.
#[pyfunction]
fn builtin_suite() -> PyResult<String> {
    serde_json::to_string_pretty(&ltlrl::bench::builtin_suite())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs a benchmark suite (JSON document), writes artifacts into
/// `output_dir`, and returns the summary JSON.
#[pyfunction]
fn run_benchmark(suite_json: &str, output_dir: &str) -> PyResult<String> {
    let suite: ltlrl::bench::BenchmarkSuite =
        serde_json::from_str(suite_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = ltlrl::bench::run_suite(&suite, Some(std::path::Path::new(output_dir)))
        .map_err(to_py_err)?;
    serde_json::to_string_pretty(&outcome.summary)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn ltlrl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TrainSummary>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(satisfaction_probability, m)?)?;
    m.add_function(wrap_pyfunction!(automaton_dump, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_suite, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
