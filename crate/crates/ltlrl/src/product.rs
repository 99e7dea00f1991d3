//! On-the-fly product of the MDP with the task automaton.
//!
//! The product is never materialized during learning; this module only knows
//! how to take one synchronous step and how to score it. Following the
//! product definition, the automaton reads the label of the state being
//! *left*: `q' = δ(q, L(x))`, so reaching a labeled cell pays off on the
//! step after arrival.

use crate::automaton::{LimitDetBuchi, RabinAutomaton, StateId, Symbol};
use crate::mdp::{Action, LabeledMdp, MdpState};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A product state: MDP component plus automaton component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProductState {
    pub x: MdpState,
    pub q: StateId,
}

/// Reward levels for the Rabin acceptance condition: positive on entering an
/// `inf` state, small punishment on entering a `fin` state, neutral elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub r_accept: f64,
    pub r_violate: f64,
    pub r_neutral: f64,
}

impl RewardParams {
    pub fn new(r_accept: f64, r_violate: f64, r_neutral: f64) -> Result<Self> {
        if !(r_accept > 0.0 && r_violate < r_neutral && r_neutral <= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "reward ordering violated: need r_violate < r_neutral <= 0 < r_accept, got ({r_accept}, {r_violate}, {r_neutral})"
            )));
        }
        Ok(RewardParams { r_accept, r_violate, r_neutral })
    }

    /// The built-in benchmark's reward levels.
    pub fn benchmark() -> Self {
        RewardParams { r_accept: 1.0, r_violate: -1e-4, r_neutral: 0.0 }
    }
}

impl Default for RewardParams {
    fn default() -> Self {
        Self::benchmark()
    }
}

/// The task automaton driving the product.
#[derive(Debug, Clone)]
pub enum TaskAutomaton {
    Rabin(RabinAutomaton),
    Ldba(LimitDetBuchi),
}

impl TaskAutomaton {
    pub fn n_states(&self) -> usize {
        match self {
            TaskAutomaton::Rabin(a) => a.n_states(),
            TaskAutomaton::Ldba(a) => a.n_states(),
        }
    }

    pub fn initial(&self) -> StateId {
        match self {
            TaskAutomaton::Rabin(a) => a.initial(),
            TaskAutomaton::Ldba(a) => a.initial(),
        }
    }

    pub fn check_satisfiable(&self) -> Result<()> {
        match self {
            TaskAutomaton::Rabin(a) => a.check_satisfiable(),
            TaskAutomaton::Ldba(a) => a.check_satisfiable(),
        }
    }
}

/// What a step produced besides the successor state, enough to evaluate
/// either reward scheme without touching the automaton again.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: ProductState,
    /// `q'` entered some Rabin `inf` set.
    pub entered_inf: bool,
    /// `q'` entered some Rabin `fin` set.
    pub entered_fin: bool,
    /// Indices of LDBA accepting sets containing `q'`.
    pub sets_hit: Vec<usize>,
}

/// The synchronous product, stepped on demand.
///
/// For LDBA tasks, ε-transitions of the current automaton state are exposed
/// as extra actions after the MDP's own: taking one moves `q` without moving
/// `x` and reads no label.
#[derive(Debug, Clone)]
pub struct Product {
    mdp: LabeledMdp,
    auto: TaskAutomaton,
    /// `label_step[q][x] = δ(q, L(x))`.
    label_step: Vec<Vec<StateId>>,
    /// Rabin membership flags per automaton state.
    in_inf: Vec<bool>,
    in_fin: Vec<bool>,
    /// LDBA accepting-set membership per automaton state.
    sets_of: Vec<Vec<usize>>,
}

impl Product {
    pub fn new(mdp: LabeledMdp, auto: TaskAutomaton) -> Result<Self> {
        // The automaton's propositions must all exist in the environment;
        // anything else is a mis-paired task.
        let auto_aps = match &auto {
            TaskAutomaton::Rabin(a) => a.aps().clone(),
            TaskAutomaton::Ldba(a) => a.aps().clone(),
        };
        let mut translate = Vec::with_capacity(auto_aps.len());
        for name in auto_aps.iter() {
            match mdp.aps().index_of(name) {
                Some(id) => translate.push(id),
                None => {
                    return Err(Error::Semantic(format!(
                        "automaton proposition `{name}` does not name any MDP state"
                    )))
                }
            }
        }
        // Project each MDP label onto the automaton's alphabet.
        let auto_labels: Vec<Symbol> = (0..mdp.n_states())
            .map(|x| {
                let l = mdp.label_of(x);
                Symbol::from_aps(
                    (0..auto_aps.len() as u16).filter(|&ap| l.contains(translate[ap as usize])),
                )
            })
            .collect();

        let nq = auto.n_states();
        let mut label_step = vec![vec![0; mdp.n_states()]; nq];
        for q in 0..nq {
            for x in 0..mdp.n_states() {
                label_step[q][x] = match &auto {
                    TaskAutomaton::Rabin(a) => a.step(q, &auto_labels[x])?,
                    TaskAutomaton::Ldba(a) => a.step_deterministic(q, &auto_labels[x])?,
                };
            }
        }
        let (in_inf, in_fin, sets_of) = match &auto {
            TaskAutomaton::Rabin(a) => (
                (0..nq).map(|q| a.is_accepting(q)).collect(),
                (0..nq).map(|q| a.in_fin(q)).collect(),
                vec![Vec::new(); nq],
            ),
            TaskAutomaton::Ldba(a) => (
                vec![false; nq],
                vec![false; nq],
                (0..nq).map(|q| a.sets_containing(q)).collect(),
            ),
        };
        Ok(Product { mdp, auto, label_step, in_inf, in_fin, sets_of })
    }

    pub fn mdp(&self) -> &LabeledMdp {
        &self.mdp
    }

    pub fn automaton(&self) -> &TaskAutomaton {
        &self.auto
    }

    pub fn initial_state(&self) -> ProductState {
        ProductState { x: self.mdp.initial(), q: self.auto.initial() }
    }

    pub fn n_mdp_actions(&self, s: ProductState) -> usize {
        self.mdp.n_actions(s.x)
    }

    /// MDP actions plus, for LDBA states, one ε-action per ε-successor.
    pub fn n_actions(&self, s: ProductState) -> usize {
        self.mdp.n_actions(s.x) + self.epsilon_successors(s.q).len()
    }

    fn epsilon_successors(&self, q: StateId) -> &[StateId] {
        match &self.auto {
            TaskAutomaton::Rabin(_) => &[],
            TaskAutomaton::Ldba(a) => a.epsilon_successors(q),
        }
    }

    /// The automaton state an ε-action would jump to, if `a` is one.
    pub fn epsilon_target(&self, s: ProductState, a: Action) -> Option<StateId> {
        let m = self.mdp.n_actions(s.x);
        if a >= m {
            self.epsilon_successors(s.q).get(a - m).copied()
        } else {
            None
        }
    }

    /// `δ(q, L(x))`: the automaton successor fated by standing at `x`.
    pub fn automaton_step_from(&self, s: ProductState) -> StateId {
        self.label_step[s.q][s.x]
    }

    /// True iff no action (MDP or ε) is available.
    pub fn is_deadlock(&self, s: ProductState) -> bool {
        self.n_actions(s) == 0
    }

    /// Executes one product step.
    pub fn step<R: Rng>(&self, s: ProductState, a: Action, rng: &mut R) -> Result<StepOutcome> {
        let next = if let Some(q_target) = self.epsilon_target(s, a) {
            ProductState { x: s.x, q: q_target }
        } else {
            if a >= self.mdp.n_actions(s.x) {
                return Err(Error::InvalidAction { state: s.x, action: a });
            }
            let dest = self.mdp.sample_step(s.x, a, rng)?;
            ProductState { x: dest, q: self.label_step[s.q][s.x] }
        };
        Ok(StepOutcome {
            entered_inf: self.in_inf[next.q],
            entered_fin: self.in_fin[next.q],
            sets_hit: self.sets_of[next.q].clone(),
            next,
        })
    }

    /// Rabin reward for arriving at automaton state `q'`. Membership in an
    /// `inf` set wins over membership in a `fin` set of another pair.
    pub fn rabin_reward(&self, q_next: StateId, params: &RewardParams) -> f64 {
        if self.in_inf[q_next] {
            params.r_accept
        } else if self.in_fin[q_next] {
            params.r_violate
        } else {
            params.r_neutral
        }
    }
}

/// Per-episode bookkeeping for the LDBA reward rule: which accepting sets
/// still owe a reward this cycle.
#[derive(Debug, Clone)]
pub struct LdbaEpisodeState {
    unvisited: Vec<bool>,
    remaining: usize,
}

impl LdbaEpisodeState {
    pub fn new(n_sets: usize) -> Self {
        LdbaEpisodeState { unvisited: vec![true; n_sets], remaining: n_sets }
    }

    pub fn n_sets(&self) -> usize {
        self.unvisited.len()
    }

    pub fn is_unvisited(&self, j: usize) -> bool {
        self.unvisited[j]
    }

    /// Indices still unvisited in the current cycle.
    pub fn unvisited_sets(&self) -> Vec<usize> {
        (0..self.unvisited.len()).filter(|&j| self.unvisited[j]).collect()
    }

    fn reset(&mut self) {
        self.unvisited.fill(true);
        self.remaining = self.unvisited.len();
    }
}

/// LDBA reward rule: a fresh visit to an accepting set pays `r` and marks it
/// visited; revisits pay nothing until every other set has been seen, at
/// which point the cycle resets.
pub fn ldba_reward(sets_hit: &[usize], ep: &mut LdbaEpisodeState, r: f64) -> f64 {
    let mut reward = 0.0;
    for &j in sets_hit {
        if ep.unvisited[j] {
            ep.unvisited[j] = false;
            ep.remaining -= 1;
            reward += r;
        }
    }
    if ep.remaining == 0 {
        ep.reset();
    }
    reward
}
