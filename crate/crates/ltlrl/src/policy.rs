//! Action selection.
//!
//! Four interchangeable policies drive the learner: the biased (ε,δ)-greedy
//! policy, plain ε-greedy, Boltzmann softmax, and UCB1. The bias machinery
//! lives in [`BiasContext`]: from the automaton's pruned distances it derives,
//! per automaton state, which MDP states make progress ([`GoalSets`]), then
//! routes through the learned graph to find the one-hop states strictly
//! closer to them.

use crate::automaton::StateId;
use crate::estimator::{EstimatedModel, GraphWeighting};
use crate::mdp::{Action, MdpState};
use crate::product::{Product, ProductState, TaskAutomaton};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Which policy the learner runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Greedy with probability 1-ε; the ε mass splits into uniform
    /// exploration (δ_e) and automaton-guided exploration (δ_b).
    EpsilonDeltaGreedy,
    EpsilonGreedy,
    Boltzmann,
    Ucb1,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::EpsilonDeltaGreedy,
        PolicyKind::EpsilonGreedy,
        PolicyKind::Boltzmann,
        PolicyKind::Ucb1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::EpsilonDeltaGreedy => "epsilon_delta_greedy",
            PolicyKind::EpsilonGreedy => "epsilon_greedy",
            PolicyKind::Boltzmann => "boltzmann",
            PolicyKind::Ucb1 => "ucb1",
        }
    }
}

// ---------------------------------------------------------------------------
// Q table
// ---------------------------------------------------------------------------

/// Action values and per-pair update counters over product states.
///
/// Product states are indexed `q * |X| + x`; action counts may differ per
/// state (LDBA products add ε-actions), hence the offset table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
    counts: Vec<u32>,
}

impl QTable {
    pub fn new(action_counts: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        let mut total = 0;
        for m in action_counts {
            total += m;
            offsets.push(total);
        }
        QTable { offsets, values: vec![0.0; total], counts: vec![0; total] }
    }

    pub fn for_product(product: &Product) -> Self {
        let n_x = product.mdp().n_states();
        let n_q = product.automaton().n_states();
        Self::new(
            (0..n_x * n_q).map(|s| product.n_actions(ProductState { x: s % n_x, q: s / n_x })),
        )
    }

    pub fn n_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.offsets[s + 1] - self.offsets[s]
    }

    pub fn fill(&mut self, v: f64) {
        self.values.fill(v);
    }

    /// Adds independent uniform noise in `[0, scale)` to every entry.
    /// A tiny scale keeps argmax ties from collapsing onto action 0 while
    /// leaving any real value signal untouched.
    pub fn perturb<R: rand::Rng>(&mut self, rng: &mut R, scale: f64) {
        for v in &mut self.values {
            *v += rng.random::<f64>() * scale;
        }
    }

    pub fn value(&self, s: usize, a: Action) -> f64 {
        self.values[self.offsets[s] + a]
    }

    pub fn set_value(&mut self, s: usize, a: Action, v: f64) {
        self.values[self.offsets[s] + a] = v;
    }

    /// `n_P(s, a)`: how many updates this pair has received.
    pub fn visits(&self, s: usize, a: Action) -> u32 {
        self.counts[self.offsets[s] + a]
    }

    /// Total visits of `s` across actions (the `N(s)` of UCB1).
    pub fn state_visits(&self, s: usize) -> u64 {
        self.row_counts(s).iter().map(|&c| c as u64).sum()
    }

    pub fn row_values(&self, s: usize) -> &[f64] {
        &self.values[self.offsets[s]..self.offsets[s + 1]]
    }

    pub fn row_counts(&self, s: usize) -> &[u32] {
        &self.counts[self.offsets[s]..self.offsets[s + 1]]
    }

    /// Greedy action with lowest-index tie-break.
    pub fn greedy_action(&self, s: usize) -> Action {
        let row = self.row_values(s);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.row_values(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The tabular update with harmonic step size: increments `n_P(s, a)` and
    /// moves the value by `1/n_P` toward `reward + gamma * next_max`.
    /// Returns the absolute change.
    pub fn apply_update(
        &mut self,
        s: usize,
        a: Action,
        reward: f64,
        gamma: f64,
        next_max: f64,
    ) -> f64 {
        let i = self.offsets[s] + a;
        self.counts[i] += 1;
        let step = 1.0 / self.counts[i] as f64;
        let delta = step * (reward - self.values[i] + gamma * next_max);
        self.values[i] += delta;
        delta.abs()
    }
}

// ---------------------------------------------------------------------------
// Exploration schedules
// ---------------------------------------------------------------------------

/// Geometric decay schedules for every policy's knobs, evaluated as a pure
/// function of the step counter so runs replay exactly.
///
/// The split fraction `delta_e_frac` is the share of ε spent on uniform
/// exploration; it starts high and shrinks, so random exploration fades
/// faster than biased exploration while ε itself decays to its floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationParams {
    pub epsilon_init: f64,
    pub epsilon_floor: f64,
    pub epsilon_decay: f64,
    pub delta_e_frac_init: f64,
    pub delta_e_frac_floor: f64,
    pub delta_e_frac_decay: f64,
    pub temperature_init: f64,
    pub temperature_floor: f64,
    pub temperature_decay: f64,
    pub ucb_c: f64,
    /// Decay against episode index instead of the global step counter.
    pub per_episode: bool,
}

impl Default for ExplorationParams {
    fn default() -> Self {
        ExplorationParams {
            epsilon_init: 0.9,
            epsilon_floor: 0.05,
            epsilon_decay: 0.99985,
            delta_e_frac_init: 0.8,
            delta_e_frac_floor: 0.1,
            delta_e_frac_decay: 0.999,
            temperature_init: 5.0,
            temperature_floor: 0.0,
            temperature_decay: 0.999,
            ucb_c: 20.0,
            per_episode: false,
        }
    }
}

impl ExplorationParams {
    pub fn validate(&self) -> crate::Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.epsilon_init)
            && unit(self.epsilon_floor)
            && unit(self.epsilon_decay)
            && unit(self.delta_e_frac_init)
            && unit(self.delta_e_frac_floor)
            && unit(self.delta_e_frac_decay))
        {
            return Err(crate::Error::InvalidConfig(
                "epsilon/delta schedule values must lie in [0, 1]".into(),
            ));
        }
        if self.temperature_init < 0.0 || self.temperature_floor < 0.0 || self.ucb_c < 0.0 {
            return Err(crate::Error::InvalidConfig(
                "temperature and UCB constant must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Schedule values after `k` decay ticks. `ε = δ_b + δ_e` holds exactly.
    pub fn at(&self, k: u64) -> StepParams {
        let decay = |init: f64, floor: f64, rate: f64| {
            if rate >= 1.0 {
                init.max(floor)
            } else {
                (init * rate.powf(k as f64)).max(floor)
            }
        };
        let epsilon = decay(self.epsilon_init, self.epsilon_floor, self.epsilon_decay);
        let frac = decay(self.delta_e_frac_init, self.delta_e_frac_floor, self.delta_e_frac_decay);
        let delta_e = epsilon * frac;
        StepParams {
            epsilon,
            delta_e,
            delta_b: epsilon - delta_e,
            temperature: decay(
                self.temperature_init,
                self.temperature_floor,
                self.temperature_decay,
            ),
            ucb_c: self.ucb_c,
        }
    }
}

/// Snapshot of every schedule at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub epsilon: f64,
    pub delta_b: f64,
    pub delta_e: f64,
    pub temperature: f64,
    pub ucb_c: f64,
}

// ---------------------------------------------------------------------------
// Policy distributions
// ---------------------------------------------------------------------------

/// The (ε,δ)-greedy action distribution over `m` actions.
///
/// Every action carries the uniform share `δ_e/m`; the greedy action gets
/// `1-ε` on top, and the biased action (when one exists) gets `δ_b` on top —
/// the two stack when they coincide. Without a biased action the δ_b mass
/// folds into the uniform share. Masses are nonnegative and sum to one
/// whenever `ε = δ_b + δ_e ≤ 1`.
pub fn epsilon_delta_masses(
    m: usize,
    a_star: Action,
    a_b: Option<Action>,
    epsilon: f64,
    delta_b: f64,
    delta_e: f64,
) -> Vec<f64> {
    debug_assert!((delta_b + delta_e - epsilon).abs() < 1e-12);
    let mut masses = match a_b {
        Some(_) => vec![delta_e / m as f64; m],
        None => vec![epsilon / m as f64; m],
    };
    masses[a_star] += 1.0 - epsilon;
    if let Some(ab) = a_b {
        masses[ab] += delta_b;
    }
    masses
}

/// Boltzmann softmax over a Q row; zero temperature degenerates to greedy
/// with the usual lowest-index tie-break.
pub fn boltzmann_masses(q_row: &[f64], temperature: f64) -> Vec<f64> {
    let m = q_row.len();
    if temperature <= 1e-12 {
        let mut best = 0;
        for (a, &v) in q_row.iter().enumerate().skip(1) {
            if v > q_row[best] {
                best = a;
            }
        }
        let mut masses = vec![0.0; m];
        masses[best] = 1.0;
        return masses;
    }
    let hottest = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = q_row.iter().map(|&v| ((v - hottest) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// UCB1 pick: any unvisited action first (lowest index), otherwise the argmax
/// of value plus confidence bonus. Deterministic.
pub fn ucb1_action(q_row: &[f64], counts: &[u32], c: f64) -> Action {
    if let Some(a) = counts.iter().position(|&n| n == 0) {
        return a;
    }
    let total: u64 = counts.iter().map(|&n| n as u64).sum();
    let ln_total = (total as f64).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for a in 0..q_row.len() {
        let bonus = c * (2.0 * ln_total / counts[a] as f64).sqrt();
        let score = q_row[a] + bonus;
        if score > best_score {
            best_score = score;
            best = a;
        }
    }
    best
}

/// Samples an index from a mass vector with a single uniform draw.
pub fn sample_masses<R: Rng>(masses: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.random();
    for (i, &p) in masses.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    masses.len() - 1
}

// ---------------------------------------------------------------------------
// Bias machinery
// ---------------------------------------------------------------------------

/// How the bias target `x_b` is drawn from the closer set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum XbSelection {
    /// The candidate with the highest estimated one-step probability — the
    /// action most likely to actually land in the closer set.
    #[default]
    MaxProb,
    Random,
}

/// Bias configuration knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct BiasConfig {
    pub weighting: GraphWeighting,
    pub selection: XbSelection,
    /// Treat every state that leaves `Q_goal` as an obstacle, even those that
    /// merely self-loop on the current automaton state. The default keeps
    /// self-loop-preserving states passable, since an unlabeled cell never
    /// moves the automaton.
    pub literal_avoid: bool,
}

/// Per-automaton-state progress sets.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSets {
    /// Pruned one-hop successors strictly closer to acceptance.
    pub q_goal: Vec<StateId>,
    /// MDP states whose label fires a transition into `q_goal`.
    pub x_goal: Vec<bool>,
    /// MDP states whose label would derail the automaton; treated as
    /// obstacles in shortest-path routing.
    pub x_avoid: Vec<bool>,
}

/// What the bias recommends for the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedAction {
    pub action: Action,
    pub target: MdpState,
}

/// Caches everything the biased policy needs: per-automaton-state goal sets
/// (static, since labels are known) and per-automaton-state shortest-path
/// fields over the learned graph (invalidated whenever the estimator
/// observes a brand-new edge; support only ever grows, so recomputing on
/// insertion is sound).
#[derive(Debug, Clone)]
pub struct BiasContext {
    config: BiasConfig,
    n_x: usize,
    n_q: usize,
    /// `δ(q, L(x))` for every automaton state and MDP state.
    label_step: Vec<Vec<StateId>>,
    /// Pruned automaton adjacency (ε-edges included for LDBA).
    pruned: Vec<Vec<StateId>>,
    /// Distance tables: one for Rabin, one per accepting set for LDBA.
    distances: Vec<Vec<Option<u32>>>,
    /// ε-successors per automaton state (LDBA only).
    eps_succ: Vec<Vec<StateId>>,
    /// Which distance table is active (always 0 for Rabin).
    active_table: usize,
    /// Goal sets per (table, q), computed on demand.
    goal_sets: Vec<Option<Option<GoalSets>>>,
    /// Shortest-path field J per (table, q), invalidated on new edges.
    j_fields: Vec<Option<Vec<f64>>>,
}

impl BiasContext {
    pub fn new(product: &Product, config: BiasConfig) -> Self {
        let n_x = product.mdp().n_states();
        let (pruned, distances, eps_succ, n_q) = match product.automaton() {
            TaskAutomaton::Rabin(a) => (
                (0..a.n_states()).map(|q| a.pruned_successors(q).to_vec()).collect::<Vec<_>>(),
                vec![a.distance_table().to_vec()],
                vec![Vec::new(); a.n_states()],
                a.n_states(),
            ),
            TaskAutomaton::Ldba(a) => (
                (0..a.n_states()).map(|q| a.pruned_successors(q).to_vec()).collect::<Vec<_>>(),
                (0..a.accepting_sets().len()).map(|j| a.distance_table(j).to_vec()).collect(),
                (0..a.n_states()).map(|q| a.epsilon_successors(q).to_vec()).collect(),
                a.n_states(),
            ),
        };
        let label_step = (0..n_q)
            .map(|q| (0..n_x).map(|x| product.automaton_step_from(ProductState { x, q })).collect())
            .collect();
        let n_tables = distances.len();
        BiasContext {
            config,
            n_x,
            n_q,
            label_step,
            pruned,
            distances,
            eps_succ,
            active_table: 0,
            goal_sets: vec![None; n_tables * n_q],
            j_fields: vec![None; n_tables * n_q],
        }
    }

    pub fn config(&self) -> &BiasConfig {
        &self.config
    }

    /// Switch the bias toward accepting set `j` (LDBA mode).
    pub fn set_target_set(&mut self, j: usize) {
        assert!(j < self.distances.len());
        self.active_table = j;
    }

    pub fn target_set(&self) -> usize {
        self.active_table
    }

    /// The learned graph gained an edge: every cached shortest-path field is
    /// stale.
    pub fn note_new_edge(&mut self) {
        self.j_fields.iter_mut().for_each(|f| *f = None);
    }

    fn slot(&self, q: StateId) -> usize {
        self.active_table * self.n_q + q
    }

    /// Goal sets for automaton state `q` under the active distance table.
    /// `None` when no strictly-closer successor exists (bias unavailable).
    pub fn goal_sets(&mut self, q: StateId) -> Option<&GoalSets> {
        let slot = self.slot(q);
        if self.goal_sets[slot].is_none() {
            self.goal_sets[slot] = Some(self.compute_goal_sets(q));
        }
        self.goal_sets[slot].as_ref().unwrap().as_ref()
    }

    fn compute_goal_sets(&self, q: StateId) -> Option<GoalSets> {
        let dist = &self.distances[self.active_table];
        let here = dist[q]?;
        // Distance the next hop must reach: one closer, or — at accepting
        // states — one step along the cheapest return path, so the bias keeps
        // steering runs back into the accepting set.
        let want = if here > 0 {
            here - 1
        } else {
            let ret = self.pruned[q].iter().filter_map(|&q2| dist[q2]).min().map(|d| d + 1)?;
            ret - 1
        };
        let q_goal: Vec<StateId> =
            self.pruned[q].iter().copied().filter(|&q2| dist[q2] == Some(want)).collect();
        if q_goal.is_empty() {
            return None;
        }
        let x_goal: Vec<bool> =
            (0..self.n_x).map(|x| q_goal.contains(&self.label_step[q][x])).collect();
        if !x_goal.iter().any(|&g| g) && !self.has_epsilon_shortcut(q, &q_goal) {
            // The only routes into q_goal are infeasible labels; bias is off.
            return None;
        }
        let x_avoid: Vec<bool> = (0..self.n_x)
            .map(|x| {
                let dest = self.label_step[q][x];
                let leaves_track =
                    !q_goal.contains(&dest) && (self.config.literal_avoid || dest != q);
                leaves_track && !x_goal[x]
            })
            .collect();
        Some(GoalSets { q_goal, x_goal, x_avoid })
    }

    fn has_epsilon_shortcut(&self, q: StateId, q_goal: &[StateId]) -> bool {
        self.eps_succ[q].iter().any(|t| q_goal.contains(t))
    }

    /// Index of an ε-action jumping straight into `Q_goal`, if any.
    fn epsilon_shortcut(&self, q: StateId, q_goal: &[StateId]) -> Option<usize> {
        self.eps_succ[q].iter().position(|t| q_goal.contains(t))
    }

    /// Shortest-path cost field `J(x)` to the active goal set of `q`, over
    /// the learned graph with avoid-states deleted.
    fn j_field(&mut self, estimator: &EstimatedModel, q: StateId) -> Option<&Vec<f64>> {
        let slot = self.slot(q);
        self.goal_sets(q)?;
        if self.j_fields[slot].is_none() {
            let sets = self.goal_sets[slot].as_ref().unwrap().as_ref().unwrap();
            let field = compute_j_field(estimator, sets, self.config.weighting);
            self.j_fields[slot] = Some(field);
        }
        self.j_fields[slot].as_ref()
    }

    /// `X_closer(x_cur)`: one-hop-reachable states strictly closer to the
    /// goal set along the learned graph.
    pub fn closer_set(
        &mut self,
        estimator: &EstimatedModel,
        x_cur: MdpState,
        q: StateId,
    ) -> Vec<MdpState> {
        let weighting = self.config.weighting;
        let Some(j) = self.j_field(estimator, q) else {
            return Vec::new();
        };
        let j_cur = j[x_cur];
        if !j_cur.is_finite() || j_cur == 0.0 {
            return Vec::new();
        }
        estimator
            .reachable_one_hop(x_cur)
            .iter()
            .copied()
            .filter(|&x| {
                if !j[x].is_finite() {
                    return false;
                }
                let hop = match weighting {
                    GraphWeighting::Unit => 1.0,
                    GraphWeighting::ReciprocalProb => {
                        1.0 / estimator.best_action_to(x_cur, x).expect("reachable edge").1
                    }
                };
                j[x] + hop <= j_cur + 1e-9
            })
            .collect()
    }

    /// The biased action at product state `s`, or `None` when no bias is
    /// available this step (δ_b then folds into uniform exploration).
    pub fn biased_action<R: Rng>(
        &mut self,
        estimator: &EstimatedModel,
        s: ProductState,
        n_mdp_actions: usize,
        rng: &mut R,
    ) -> Option<BiasedAction> {
        // An ε-jump straight into Q_goal is the strongest possible bias: it
        // advances the automaton deterministically.
        if !self.eps_succ[s.q].is_empty() {
            let q_goal = self.goal_sets(s.q)?.q_goal.clone();
            if let Some(idx) = self.epsilon_shortcut(s.q, &q_goal) {
                return Some(BiasedAction { action: n_mdp_actions + idx, target: s.x });
            }
        }
        let closer = self.closer_set(estimator, s.x, s.q);
        if closer.is_empty() {
            return None;
        }
        let target = match self.config.selection {
            XbSelection::Random => closer[rng.random_range(0..closer.len())],
            XbSelection::MaxProb => {
                let mut best = closer[0];
                let mut best_p = estimator.best_action_to(s.x, best).expect("reachable").1;
                for &x in &closer[1..] {
                    let p = estimator.best_action_to(s.x, x).expect("reachable").1;
                    if p > best_p {
                        best = x;
                        best_p = p;
                    }
                }
                best
            }
        };
        let (action, _) = estimator.best_action_to(s.x, target).expect("reachable");
        Some(BiasedAction { action, target })
    }
}

/// Multi-target shortest paths on the reversed learned graph, skipping avoid
/// states. Unit weights run plain BFS; reciprocal weights run Dijkstra.
fn compute_j_field(
    estimator: &EstimatedModel,
    sets: &GoalSets,
    weighting: GraphWeighting,
) -> Vec<f64> {
    let n = estimator.n_states();
    let graph = estimator.learned_graph(weighting);
    // Reverse adjacency carrying the forward weights.
    let mut rev: Vec<Vec<(MdpState, f64)>> = vec![Vec::new(); n];
    for (x, outs) in graph.edges.iter().enumerate() {
        for &(dest, w) in outs {
            rev[dest].push((x, w));
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    match weighting {
        GraphWeighting::Unit => {
            let mut queue = VecDeque::new();
            for x in 0..n {
                if sets.x_goal[x] {
                    dist[x] = 0.0;
                    queue.push_back(x);
                }
            }
            while let Some(x) = queue.pop_front() {
                for &(p, _) in &rev[x] {
                    if dist[p].is_infinite() && !sets.x_avoid[p] {
                        dist[p] = dist[x] + 1.0;
                        queue.push_back(p);
                    }
                }
            }
        }
        GraphWeighting::ReciprocalProb => {
            use std::cmp::Reverse;
            use std::collections::BinaryHeap;
            #[derive(PartialEq)]
            struct Key(f64, usize);
            impl Eq for Key {}
            impl PartialOrd for Key {
                fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                    Some(self.cmp(other))
                }
            }
            impl Ord for Key {
                fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                    self.0.partial_cmp(&other.0).unwrap().then(self.1.cmp(&other.1))
                }
            }
            let mut heap = BinaryHeap::new();
            for x in 0..n {
                if sets.x_goal[x] {
                    dist[x] = 0.0;
                    heap.push(Reverse(Key(0.0, x)));
                }
            }
            while let Some(Reverse(Key(d, x))) = heap.pop() {
                if d > dist[x] {
                    continue;
                }
                for &(p, w) in &rev[x] {
                    if sets.x_avoid[p] {
                        continue;
                    }
                    let nd = d + w;
                    if nd < dist[p] {
                        dist[p] = nd;
                        heap.push(Reverse(Key(nd, p)));
                    }
                }
            }
        }
    }
    dist
}

// ---------------------------------------------------------------------------
// Selector
// ---------------------------------------------------------------------------

/// Bundles a policy kind with its schedules and (for the biased policy) the
/// bias machinery; the learner drives it once per step.
#[derive(Debug)]
pub struct ActionSelector {
    pub kind: PolicyKind,
    pub schedule: ExplorationParams,
    bias: Option<BiasContext>,
}

impl ActionSelector {
    pub fn new(
        kind: PolicyKind,
        schedule: ExplorationParams,
        product: &Product,
        bias: BiasConfig,
    ) -> Self {
        let bias = match kind {
            PolicyKind::EpsilonDeltaGreedy => Some(BiasContext::new(product, bias)),
            _ => None,
        };
        ActionSelector { kind, schedule, bias }
    }

    pub fn bias_context_mut(&mut self) -> Option<&mut BiasContext> {
        self.bias.as_mut()
    }

    /// Picks an action at product state `s` (flat index `sid`) using the
    /// schedule values at decay tick `k`.
    pub fn select<R: Rng>(
        &mut self,
        q_table: &QTable,
        estimator: &EstimatedModel,
        product: &Product,
        s: ProductState,
        sid: usize,
        k: u64,
        rng: &mut R,
    ) -> Action {
        let m = q_table.n_actions(sid);
        debug_assert!(m > 0);
        let p = self.schedule.at(k);
        match self.kind {
            PolicyKind::EpsilonDeltaGreedy => {
                let a_star = q_table.greedy_action(sid);
                let a_b = self
                    .bias
                    .as_mut()
                    .and_then(|b| b.biased_action(estimator, s, product.n_mdp_actions(s), rng))
                    .map(|b| b.action);
                let masses = epsilon_delta_masses(m, a_star, a_b, p.epsilon, p.delta_b, p.delta_e);
                sample_masses(&masses, rng)
            }
            PolicyKind::EpsilonGreedy => {
                let a_star = q_table.greedy_action(sid);
                let masses = epsilon_delta_masses(m, a_star, None, p.epsilon, 0.0, p.epsilon);
                sample_masses(&masses, rng)
            }
            PolicyKind::Boltzmann => {
                let masses = boltzmann_masses(q_table.row_values(sid), p.temperature);
                sample_masses(&masses, rng)
            }
            PolicyKind::Ucb1 => {
                ucb1_action(q_table.row_values(sid), q_table.row_counts(sid), p.ucb_c)
            }
        }
    }
}
