//! The episodic model-based Q-learning loop.
//!
//! An episode starts at the initial product state and runs for at most `tau`
//! iterations: select an action per the configured policy, execute it,
//! update the transition counters and the estimated kernel, then apply the
//! tabular Q-update with harmonic step size `1/n_P(s, a)`. Schedules decay
//! per iteration; everything is driven by one seeded RNG stream so a run
//! replays bit-for-bit.

use crate::automaton::{self, AutomatonDump, TaskPattern};
use crate::estimator::EstimatedModel;
use crate::mdp::{Action, EnvSource};
use crate::policy::{ActionSelector, BiasConfig, ExplorationParams, PolicyKind, QTable};
use crate::product::{ldba_reward, LdbaEpisodeState, Product, ProductState, RewardParams, TaskAutomaton};
use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Where the task automaton comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutomatonSource {
    Pattern(TaskPattern),
    HoaFile { path: String },
    /// A JSON automaton dump as produced by `inspect-automaton`.
    JsonFile { path: String },
}

impl AutomatonSource {
    pub fn build(&self) -> Result<TaskAutomaton> {
        match self {
            AutomatonSource::Pattern(p) => {
                Ok(TaskAutomaton::Rabin(automaton::build_pattern_automaton(p)?))
            }
            AutomatonSource::HoaFile { path } => {
                let text = std::fs::read_to_string(path)?;
                Ok(match automaton::parse_hoa(&text)? {
                    automaton::ParsedAutomaton::Rabin(a) => TaskAutomaton::Rabin(a),
                    automaton::ParsedAutomaton::Ldba(a) => TaskAutomaton::Ldba(a),
                })
            }
            AutomatonSource::JsonFile { path } => {
                let text = std::fs::read_to_string(path)?;
                let dump: AutomatonDump = serde_json::from_str(&text)?;
                Ok(match dump.kind.as_str() {
                    "rabin" => TaskAutomaton::Rabin(automaton::RabinAutomaton::from_dump(&dump)?),
                    "ldba" => TaskAutomaton::Ldba(automaton::LimitDetBuchi::from_dump(&dump)?),
                    other => return Err(Error::Semantic(format!("unknown dump kind `{other}`"))),
                })
            }
        }
    }
}

/// Policy choice plus its knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub exploration: ExplorationParams,
    pub bias: BiasConfig,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            kind: PolicyKind::EpsilonDeltaGreedy,
            exploration: ExplorationParams::default(),
            bias: BiasConfig::default(),
        }
    }
}

/// Stop early once the per-episode max Q change stays under `tolerance` for
/// `patience` consecutive episodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceConfig {
    pub enabled: bool,
    pub tolerance: f64,
    pub patience: u32,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig { enabled: true, tolerance: 1e-4, patience: 50 }
    }
}

/// Everything one training run needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub environment: EnvSource,
    pub automaton: AutomatonSource,
    #[serde(default)]
    pub reward: RewardParams,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub episodes: u32,
    #[serde(default = "default_tau")]
    pub tau: u32,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub seed: u64,
    /// Positive reward paid by the LDBA visit rule (LDBA tasks only).
    #[serde(default = "default_ldba_reward")]
    pub ldba_reward: f64,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    /// Initial Q value for every pair.
    #[serde(default)]
    pub q_init: f64,
    /// Adds seeded uniform noise in `[0, q_init_noise)` on top of `q_init`,
    /// so the greedy argmax starts as a neutral random field instead of
    /// collapsing onto action 0 everywhere.
    #[serde(default)]
    pub q_init_noise: f64,
    /// End episodes early once the automaton can no longer reach acceptance.
    #[serde(default)]
    pub terminate_on_violation: bool,
}

fn default_gamma() -> f64 {
    0.99
}

fn default_tau() -> u32 {
    500
}

fn default_ldba_reward() -> f64 {
    1.0
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if self.tau < 1 {
            return Err(Error::InvalidConfig("tau must be at least 1".into()));
        }
        self.policy.exploration.validate()?;
        Ok(())
    }
}

/// One episode's outcome.
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub discounted_return: f64,
    pub steps: u32,
    pub max_q_delta: f64,
    /// Visited product states, `s_0` included.
    pub states: Vec<ProductState>,
}

/// Output of a full training run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub returns: Vec<f64>,
    pub episodes_run: u32,
    pub steps: u64,
    pub q_table: QTable,
    pub estimator: EstimatedModel,
    pub greedy: Vec<Action>,
    pub converged_at: Option<u32>,
    pub wall_time: std::time::Duration,
}

/// Greedy policy per product state, lowest action index on ties.
pub fn extract_greedy(q: &QTable) -> Vec<Action> {
    (0..q.n_states()).map(|s| q.greedy_action(s)).collect()
}

/// Mutable state of one training run.
pub struct Trainer {
    product: Product,
    q: QTable,
    estimator: EstimatedModel,
    selector: ActionSelector,
    rng: ChaCha8Rng,
    gamma: f64,
    tau: u32,
    reward: RewardParams,
    ldba: Option<LdbaRuntime>,
    q_bound: f64,
    terminate_on_violation: bool,
    per_episode_decay: bool,
    global_step: u64,
    episode_index: u32,
}

struct LdbaRuntime {
    n_sets: usize,
    episode_state: LdbaEpisodeState,
    reward: f64,
}

impl Trainer {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let mdp = config.environment.build()?;
        let auto = config.automaton.build()?;
        auto.check_satisfiable()?;
        let ldba = match &auto {
            TaskAutomaton::Rabin(_) => None,
            TaskAutomaton::Ldba(a) => {
                if config.ldba_reward <= 0.0 {
                    return Err(Error::InvalidConfig("LDBA reward must be positive".into()));
                }
                Some(LdbaRuntime {
                    n_sets: a.accepting_sets().len(),
                    episode_state: LdbaEpisodeState::new(a.accepting_sets().len()),
                    reward: config.ldba_reward,
                })
            }
        };
        let product = Product::new(mdp, auto)?;
        let mut q = QTable::for_product(&product);
        if config.q_init != 0.0 {
            q.fill(config.q_init);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        if config.q_init_noise > 0.0 {
            q.perturb(&mut rng, config.q_init_noise);
        }
        let estimator = EstimatedModel::for_mdp(product.mdp());
        let selector = ActionSelector::new(
            config.policy.kind,
            config.policy.exploration.clone(),
            &product,
            config.policy.bias,
        );
        let reward_magnitude = match &ldba {
            Some(rt) => rt.reward * rt.n_sets as f64,
            None => config.reward.r_accept.abs().max(config.reward.r_violate.abs()),
        };
        Ok(Trainer {
            q_bound: reward_magnitude / (1.0 - config.gamma) + 1e-6,
            per_episode_decay: config.policy.exploration.per_episode,
            product,
            q,
            estimator,
            selector,
            rng,
            gamma: config.gamma,
            tau: config.tau,
            reward: config.reward,
            ldba,
            terminate_on_violation: config.terminate_on_violation,
            global_step: 0,
            episode_index: 0,
        })
    }

    pub fn product(&self) -> &Product {
        &self.product
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    pub fn estimator(&self) -> &EstimatedModel {
        &self.estimator
    }

    fn flat(&self, s: ProductState) -> usize {
        s.q * self.product.mdp().n_states() + s.x
    }

    fn pick_ldba_target(&mut self) {
        // Aim the bias at a uniformly drawn unvisited accepting set.
        let Some(rt) = &self.ldba else { return };
        let unvisited = rt.episode_state.unvisited_sets();
        let pool = if unvisited.is_empty() {
            (0..rt.episode_state.n_sets()).collect::<Vec<_>>()
        } else {
            unvisited
        };
        let j = pool[self.rng.random_range(0..pool.len())];
        if let Some(ctx) = self.selector.bias_context_mut() {
            ctx.set_target_set(j);
        }
    }

    /// Runs one episode and returns its trace.
    pub fn run_episode(&mut self) -> Result<EpisodeTrace> {
        let mut s = self.product.initial_state();
        if let Some(rt) = &mut self.ldba {
            rt.episode_state = LdbaEpisodeState::new(rt.n_sets);
        }
        if self.ldba.is_some() {
            self.pick_ldba_target();
        }
        let mut states = vec![s];
        let mut discounted_return = 0.0;
        let mut discount = 1.0;
        let mut max_q_delta: f64 = 0.0;
        let mut steps = 0;

        for _ in 0..self.tau {
            if self.product.is_deadlock(s) {
                break;
            }
            let sid = self.flat(s);
            let tick = if self.per_episode_decay {
                self.episode_index as u64
            } else {
                self.global_step
            };
            let a = self.selector.select(
                &self.q,
                &self.estimator,
                &self.product,
                s,
                sid,
                tick,
                &mut self.rng,
            );
            let out = self.product.step(s, a, &mut self.rng)?;
            // ε-jumps move only the automaton; they are not MDP transitions
            // and must not touch the kernel estimate.
            if self.product.epsilon_target(s, a).is_none()
                && self.estimator.record(s.x, a, out.next.x)
            {
                if let Some(ctx) = self.selector.bias_context_mut() {
                    ctx.note_new_edge();
                }
            }
            let (reward, refresh_target) = match &mut self.ldba {
                None => (self.product.rabin_reward(out.next.q, &self.reward), false),
                Some(rt) => {
                    let r = ldba_reward(&out.sets_hit, &mut rt.episode_state, rt.reward);
                    (r, r != 0.0)
                }
            };
            if refresh_target {
                // The visit set shrank (or reset); re-aim the bias.
                self.pick_ldba_target();
            }
            let next_sid = self.flat(out.next);
            let delta = self.q.apply_update(sid, a, reward, self.gamma, self.q.max_value(next_sid));
            max_q_delta = max_q_delta.max(delta);
            discounted_return += discount * reward;
            discount *= self.gamma;
            s = out.next;
            states.push(s);
            self.global_step += 1;
            steps += 1;
            if self.terminate_on_violation {
                let dead = match self.product.automaton() {
                    TaskAutomaton::Rabin(auto) => auto.distance(s.q).is_none(),
                    TaskAutomaton::Ldba(auto) => {
                        (0..auto.accepting_sets().len()).any(|j| auto.distance(s.q, j).is_none())
                    }
                };
                if dead {
                    break;
                }
            }
        }
        self.episode_index += 1;
        Ok(EpisodeTrace { discounted_return, steps, max_q_delta, states })
    }

    fn check_q_bound(&self) -> bool {
        (0..self.q.n_states())
            .all(|s| self.q.row_values(s).iter().all(|v| v.abs() <= self.q_bound))
    }
}

/// Executes a full training run.
pub fn run_training(config: &RunConfig) -> Result<RunResult> {
    let start = std::time::Instant::now();
    let mut trainer = Trainer::new(config)?;
    let mut returns = Vec::with_capacity(config.episodes as usize);
    let mut quiet_streak = 0u32;
    let mut converged_at = None;
    for episode in 0..config.episodes {
        let trace = trainer.run_episode()?;
        returns.push(trace.discounted_return);
        debug_assert!(trainer.check_q_bound(), "Q bound violated after episode {episode}");
        if config.convergence.enabled {
            if trace.max_q_delta < config.convergence.tolerance {
                quiet_streak += 1;
                if quiet_streak >= config.convergence.patience {
                    converged_at = Some(episode + 1);
                    break;
                }
            } else {
                quiet_streak = 0;
            }
        }
    }
    Ok(RunResult {
        episodes_run: returns.len() as u32,
        steps: trainer.global_step,
        greedy: extract_greedy(&trainer.q),
        returns,
        q_table: trainer.q,
        estimator: trainer.estimator,
        converged_at,
        wall_time: start.elapsed(),
    })
}

// ---------------------------------------------------------------------------
// Checkpoints and policy grids
// ---------------------------------------------------------------------------

/// On-disk snapshot of a finished (or interrupted) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub episodes_run: u32,
    pub returns: Vec<f64>,
    pub q_table: QTable,
    pub estimator: EstimatedModel,
}

impl Checkpoint {
    pub fn from_result(config: &RunConfig, result: &RunResult) -> Self {
        Checkpoint {
            config: config.clone(),
            episodes_run: result.episodes_run,
            returns: result.returns.clone(),
            q_table: result.q_table.clone(),
            estimator: result.estimator.clone(),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// ASCII rendering of the greedy action per grid cell, for one automaton
/// state: one letter per cell (L/R/U/D/I).
pub fn render_policy_grid(
    product: &Product,
    greedy: &[Action],
    q: usize,
) -> Result<String> {
    let mdp = product.mdp();
    let (w, h) = mdp
        .grid_shape()
        .ok_or_else(|| Error::InvalidConfig("policy grids need a grid environment".into()))?;
    if q >= product.automaton().n_states() {
        return Err(Error::InvalidConfig(format!("automaton state {q} out of range")));
    }
    let mut out = String::new();
    for r in 0..h {
        for c in 0..w {
            let x = r * w + c;
            let a = greedy[q * mdp.n_states() + x];
            let letter = crate::mdp::GRID_ACTION_LETTERS.get(a).copied().unwrap_or('?');
            out.push(letter);
            if c + 1 < w {
                out.push(' ');
            }
        }
        out.push('\n');
    }
    Ok(out)
}
