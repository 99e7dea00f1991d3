//! Online maximum-likelihood model of the unknown transition kernel.
//!
//! Counts are the ground truth; estimated probabilities are derived ratios,
//! so rows always renormalize exactly. Unvisited `(x, a)` pairs report an
//! all-zero row, matching the all-zeros initialization of the estimate.

use crate::mdp::{Action, LabeledMdp, MdpState};
use serde::{Deserialize, Serialize};

/// Edge weighting for the learned-graph view of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GraphWeighting {
    /// Every observed edge costs 1 hop.
    #[default]
    Unit,
    /// Edge cost `1 / max_a P̂(x, a, x')`: shortest paths prefer transitions
    /// the model is most certain to realize.
    ReciprocalProb,
}

/// Visit and successor counters with derived `P̂ = c / n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatedModel {
    n_actions: Vec<usize>,
    offsets: Vec<usize>,
    /// Visits of each `(x, a)`, flattened by `offsets`.
    n: Vec<u64>,
    /// Successor counts of each `(x, a)`, flattened by `offsets`.
    c: Vec<Vec<(MdpState, u64)>>,
    /// Per state: sorted union over actions of observed successors.
    succ_union: Vec<Vec<MdpState>>,
}

impl EstimatedModel {
    pub fn new(n_actions_per_state: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(n_actions_per_state.len() + 1);
        let mut total = 0;
        offsets.push(0);
        for &m in &n_actions_per_state {
            total += m;
            offsets.push(total);
        }
        EstimatedModel {
            succ_union: vec![Vec::new(); n_actions_per_state.len()],
            n_actions: n_actions_per_state,
            offsets,
            n: vec![0; total],
            c: vec![Vec::new(); total],
        }
    }

    pub fn for_mdp(mdp: &LabeledMdp) -> Self {
        Self::new((0..mdp.n_states()).map(|x| mdp.n_actions(x)).collect())
    }

    fn idx(&self, x: MdpState, a: Action) -> usize {
        debug_assert!(a < self.n_actions[x]);
        self.offsets[x] + a
    }

    pub fn n_states(&self) -> usize {
        self.n_actions.len()
    }

    pub fn n_actions(&self, x: MdpState) -> usize {
        self.n_actions[x]
    }

    /// Records one observed transition. Returns `true` when this is the first
    /// observation of the state pair `(x, dest)` under any action — i.e. the
    /// learned graph just gained an edge.
    pub fn record(&mut self, x: MdpState, a: Action, dest: MdpState) -> bool {
        let i = self.idx(x, a);
        self.n[i] += 1;
        match self.c[i].iter_mut().find(|(d, _)| *d == dest) {
            Some((_, count)) => *count += 1,
            None => self.c[i].push((dest, 1)),
        }
        match self.succ_union[x].binary_search(&dest) {
            Ok(_) => false,
            Err(pos) => {
                self.succ_union[x].insert(pos, dest);
                true
            }
        }
    }

    /// `n(x, a)`: number of times `a` was taken at `x`.
    pub fn visits(&self, x: MdpState, a: Action) -> u64 {
        self.n[self.idx(x, a)]
    }

    /// `c(x, a, x')`: number of observed `(x, a) -> x'` transitions.
    pub fn count(&self, x: MdpState, a: Action, dest: MdpState) -> u64 {
        self.c[self.idx(x, a)]
            .iter()
            .find(|(d, _)| *d == dest)
            .map(|(_, k)| *k)
            .unwrap_or(0)
    }

    /// `P̂(x, a, x') = c / n`, zero while `(x, a)` is unvisited.
    pub fn p_hat(&self, x: MdpState, a: Action, dest: MdpState) -> f64 {
        let i = self.idx(x, a);
        if self.n[i] == 0 {
            return 0.0;
        }
        self.count(x, a, dest) as f64 / self.n[i] as f64
    }

    /// Sparse estimated row for `(x, a)`.
    pub fn row(&self, x: MdpState, a: Action) -> impl Iterator<Item = (MdpState, f64)> + '_ {
        let i = self.idx(x, a);
        let total = self.n[i];
        self.c[i].iter().map(move |&(d, k)| (d, k as f64 / total as f64))
    }

    /// States observed reachable from `x` within one hop, under any action.
    pub fn reachable_one_hop(&self, x: MdpState) -> &[MdpState] {
        &self.succ_union[x]
    }

    /// Highest estimated probability of landing on `dest` from `x`, with the
    /// action achieving it (lowest index on ties). `None` if never observed.
    pub fn best_action_to(&self, x: MdpState, dest: MdpState) -> Option<(Action, f64)> {
        let mut best: Option<(Action, f64)> = None;
        for a in 0..self.n_actions[x] {
            let p = self.p_hat(x, a, dest);
            if p > 0.0 && best.map_or(true, |(_, bp)| p > bp) {
                best = Some((a, p));
            }
        }
        best
    }

    /// The learned-MDP digraph: an edge per observed state pair.
    pub fn learned_graph(&self, weighting: GraphWeighting) -> LearnedGraph {
        let edges = (0..self.n_states())
            .map(|x| {
                self.succ_union[x]
                    .iter()
                    .map(|&dest| {
                        let w = match weighting {
                            GraphWeighting::Unit => 1.0,
                            GraphWeighting::ReciprocalProb => {
                                1.0 / self.best_action_to(x, dest).expect("observed edge").1
                            }
                        };
                        (dest, w)
                    })
                    .collect()
            })
            .collect();
        LearnedGraph { edges }
    }
}

/// Weighted digraph over MDP states induced by the estimated model.
#[derive(Debug, Clone)]
pub struct LearnedGraph {
    /// `edges[x]` lists `(destination, weight)` in destination order.
    pub edges: Vec<Vec<(MdpState, f64)>>,
}
