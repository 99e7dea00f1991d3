//! Exact, model-aware verification.
//!
//! Everything here sees the true kernel: the explicit product, its maximal
//! end components, optimal satisfaction probabilities, and exact policy
//! evaluation. The learner never calls into this module; tests and the CLI
//! use it as the independent source of truth.

use crate::automaton::RabinAutomaton;
use crate::mdp::LabeledMdp;
use crate::product::{ProductState, RewardParams};
use crate::{Error, Result};

mod verify;
pub use verify::{
    hallway_theorem1_instance, hallway_theorem2_instance, verify_bias_theorems,
    verify_policy_improvement, BiasTheoremInstance, BiasTheoremReport, ImprovementReport,
    WilsonInterval,
};

/// Default cap on explicit product size.
pub const DEFAULT_STATE_CAP: usize = 100_000;

/// Fully enumerated product MDP. States are indexed `q * |X| + x`.
#[derive(Debug, Clone)]
pub struct ExplicitPmdp {
    n_x: usize,
    n_q: usize,
    initial: usize,
    /// `kernel[s][a]` lists `(s', p)`.
    kernel: Vec<Vec<Vec<(usize, f64)>>>,
    /// Pair-wise acceptance membership per automaton state.
    inf_pairs: Vec<Vec<bool>>,
    fin_pairs: Vec<Vec<bool>>,
    /// Union membership per automaton state.
    in_inf: Vec<bool>,
    in_fin: Vec<bool>,
}

impl ExplicitPmdp {
    pub fn n_states(&self) -> usize {
        self.n_x * self.n_q
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.kernel[s].len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_id(&self, s: ProductState) -> usize {
        s.q * self.n_x + s.x
    }

    pub fn product_state(&self, s: usize) -> ProductState {
        ProductState { x: s % self.n_x, q: s / self.n_x }
    }

    pub fn row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.kernel[s][a]
    }

    /// Reward of landing on `s'`, per the Rabin scheme (accept beats violate).
    pub fn reward_of_landing(&self, s_next: usize, params: &RewardParams) -> f64 {
        let q = s_next / self.n_x;
        if self.in_inf[q] {
            params.r_accept
        } else if self.in_fin[q] {
            params.r_violate
        } else {
            params.r_neutral
        }
    }
}

/// Enumerates the product of an MDP and a Rabin automaton. The kernel is the
/// same one [`crate::product::Product::step`] samples from: `x'` follows
/// `P(x, a, ·)` while `q'` is forced to `δ(q, L(x))`.
pub fn materialize(mdp: &LabeledMdp, auto: &RabinAutomaton, cap: usize) -> Result<ExplicitPmdp> {
    let n_x = mdp.n_states();
    let n_q = auto.n_states();
    let total = n_x * n_q;
    if total > cap {
        return Err(Error::ProductTooLarge { states: total, cap });
    }
    // Reuse the product's label translation by building it once.
    let product = crate::product::Product::new(
        mdp.clone(),
        crate::product::TaskAutomaton::Rabin(auto.clone()),
    )?;

    let mut kernel = Vec::with_capacity(total);
    for q in 0..n_q {
        for x in 0..n_x {
            let q_next = product.automaton_step_from(ProductState { x, q });
            let rows = (0..mdp.n_actions(x))
                .map(|a| {
                    mdp.row(x, a).iter().map(|&(dest, p)| (q_next * n_x + dest, p)).collect()
                })
                .collect();
            kernel.push(rows);
        }
    }
    let inf_pairs = auto
        .pairs()
        .iter()
        .map(|pair| (0..n_q).map(|q| pair.inf.contains(&q)).collect())
        .collect();
    let fin_pairs = auto
        .pairs()
        .iter()
        .map(|pair| (0..n_q).map(|q| pair.fin.contains(&q)).collect())
        .collect();
    Ok(ExplicitPmdp {
        n_x,
        n_q,
        initial: auto.initial() * n_x + mdp.initial(),
        kernel,
        inf_pairs,
        fin_pairs,
        in_inf: (0..n_q).map(|q| auto.is_accepting(q)).collect(),
        in_fin: (0..n_q).map(|q| auto.in_fin(q)).collect(),
    })
}

/// One maximal end component: its states and, per state, the actions that
/// keep the process inside it.
#[derive(Debug, Clone)]
pub struct EndComponent {
    pub states: Vec<usize>,
    pub actions: Vec<Vec<usize>>,
    pub accepting: bool,
}

/// Iterative Tarjan SCC over a subgraph given by an adjacency closure.
fn sccs(n: usize, active: &[bool], succ: impl Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0;
    let mut result = Vec::new();

    // Explicit DFS stack: (node, successor list, cursor).
    for root in 0..n {
        if !active[root] || index[root] != usize::MAX {
            continue;
        }
        let mut dfs: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ(root), 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some((v, outs, cursor)) = dfs.last_mut() {
            let v = *v;
            if *cursor < outs.len() {
                let w = outs[*cursor];
                *cursor += 1;
                if !active[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    dfs.push((w, succ(w), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                dfs.pop();
                if let Some((parent, _, _)) = dfs.last() {
                    let parent = *parent;
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    result.push(comp);
                }
            }
        }
    }
    result
}

/// Maximal end components via the usual SCC refinement: repeatedly drop
/// actions that can leave a candidate component and states left actionless,
/// until stable.
pub fn maximal_end_components(pmdp: &ExplicitPmdp) -> Vec<EndComponent> {
    let n = pmdp.n_states();
    let mut active = vec![true; n];
    let mut enabled: Vec<Vec<usize>> = (0..n).map(|s| (0..pmdp.n_actions(s)).collect()).collect();

    loop {
        let comps = sccs(n, &active, |s| {
            enabled[s].iter().flat_map(|&a| pmdp.row(s, a).iter().map(|&(d, _)| d)).collect()
        });
        let mut comp_of = vec![usize::MAX; n];
        for (i, comp) in comps.iter().enumerate() {
            for &s in comp {
                comp_of[s] = i;
            }
        }
        let mut changed = false;
        for s in 0..n {
            if !active[s] {
                continue;
            }
            let before = enabled[s].len();
            enabled[s].retain(|&a| {
                pmdp.row(s, a).iter().all(|&(d, p)| p == 0.0 || comp_of[d] == comp_of[s])
            });
            if enabled[s].len() != before {
                changed = true;
            }
            if enabled[s].is_empty() {
                active[s] = false;
                changed = true;
            }
        }
        if !changed {
            let mut out = Vec::new();
            for comp in comps {
                let usable: Vec<usize> =
                    comp.iter().copied().filter(|&s| !enabled[s].is_empty()).collect();
                if usable.is_empty() {
                    continue;
                }
                // A singleton needs a self-loop action to be an end component.
                if usable.len() == 1 {
                    let s = usable[0];
                    let has_loop = enabled[s]
                        .iter()
                        .any(|&a| pmdp.row(s, a).iter().all(|&(d, p)| p == 0.0 || d == s));
                    if !has_loop {
                        continue;
                    }
                }
                let accepting = is_accepting_component(pmdp, &usable);
                out.push(EndComponent {
                    actions: usable.iter().map(|&s| enabled[s].clone()).collect(),
                    states: usable,
                    accepting,
                });
            }
            return out;
        }
    }
}

/// Rabin acceptance for a component: some pair has an `inf` state inside and
/// no `fin` state inside.
fn is_accepting_component(pmdp: &ExplicitPmdp, states: &[usize]) -> bool {
    (0..pmdp.inf_pairs.len()).any(|i| {
        let mut hits_inf = false;
        for &s in states {
            let q = s / pmdp.n_x;
            if pmdp.fin_pairs[i][q] {
                return false;
            }
            hits_inf |= pmdp.inf_pairs[i][q];
        }
        hits_inf
    })
}

/// Accepting maximal end components only.
pub fn accepting_mecs(pmdp: &ExplicitPmdp) -> Vec<EndComponent> {
    maximal_end_components(pmdp).into_iter().filter(|c| c.accepting).collect()
}

/// Optimal probability, per product state, of satisfying the task: maximal
/// probability of reaching the union of accepting MECs, by value iteration.
pub fn max_sat_probability(pmdp: &ExplicitPmdp) -> Vec<f64> {
    let n = pmdp.n_states();
    let mut target = vec![false; n];
    for mec in accepting_mecs(pmdp) {
        for s in mec.states {
            target[s] = true;
        }
    }
    let mut v = vec![0.0f64; n];
    for s in 0..n {
        if target[s] {
            v[s] = 1.0;
        }
    }
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if target[s] {
                continue;
            }
            let best = (0..pmdp.n_actions(s))
                .map(|a| pmdp.row(s, a).iter().map(|&(d, p)| p * v[d]).sum::<f64>())
                .fold(0.0f64, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < 1e-10 {
            return v;
        }
    }
}

/// Exact discounted value of a stochastic policy (action distribution per
/// state) under the Rabin reward, by iterative refinement.
pub fn evaluate_policy(
    pmdp: &ExplicitPmdp,
    policy: &[Vec<f64>],
    params: &RewardParams,
    gamma: f64,
) -> Vec<f64> {
    let n = pmdp.n_states();
    assert_eq!(policy.len(), n);
    // Sweep threshold scaled by the contraction factor so the fixpoint error
    // itself stays near 1e-10 even for gamma close to 1.
    let tol = (1e-10 * (1.0 - gamma)).max(1e-14);
    let mut v = vec![0.0f64; n];
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let mut total = 0.0;
            for (a, &w) in policy[s].iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let mut q = 0.0;
                for &(d, p) in pmdp.row(s, a) {
                    q += p * (pmdp.reward_of_landing(d, params) + gamma * v[d]);
                }
                total += w * q;
            }
            delta = delta.max((total - v[s]).abs());
            v[s] = total;
        }
        if delta < tol {
            return v;
        }
    }
}

/// Optimal discounted values under the Rabin reward, by value iteration.
pub fn optimal_values(pmdp: &ExplicitPmdp, params: &RewardParams, gamma: f64) -> Vec<f64> {
    let n = pmdp.n_states();
    let tol = (1e-10 * (1.0 - gamma)).max(1e-14);
    let mut v = vec![0.0f64; n];
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let best = (0..pmdp.n_actions(s))
                .map(|a| {
                    pmdp.row(s, a)
                        .iter()
                        .map(|&(d, p)| p * (pmdp.reward_of_landing(d, params) + gamma * v[d]))
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < tol {
            return v;
        }
    }
}

/// One-step backup of a value function into action values.
pub fn q_from_values(
    pmdp: &ExplicitPmdp,
    values: &[f64],
    params: &RewardParams,
    gamma: f64,
) -> Vec<Vec<f64>> {
    (0..pmdp.n_states())
        .map(|s| {
            (0..pmdp.n_actions(s))
                .map(|a| {
                    pmdp.row(s, a)
                        .iter()
                        .map(|&(d, p)| p * (pmdp.reward_of_landing(d, params) + gamma * values[d]))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Satisfaction probability, per state, of a fixed deterministic policy: the
/// induced chain's probability of reaching an accepting bottom SCC.
pub fn policy_sat_probability(pmdp: &ExplicitPmdp, policy: &[usize]) -> Vec<f64> {
    let n = pmdp.n_states();
    assert_eq!(policy.len(), n);
    let row = |s: usize| pmdp.row(s, policy[s]);
    let active = vec![true; n];
    let comps = sccs(n, &active, |s| row(s).iter().map(|&(d, _)| d).collect());
    let mut comp_of = vec![usize::MAX; n];
    for (i, comp) in comps.iter().enumerate() {
        for &s in comp {
            comp_of[s] = i;
        }
    }
    let mut accepting_state = vec![false; n];
    let mut rejecting_bscc = vec![false; n];
    for comp in &comps {
        let bottom =
            comp.iter().all(|&s| row(s).iter().all(|&(d, p)| p == 0.0 || comp_of[d] == comp_of[s]));
        // A singleton without a self-loop is transient, not a BSCC.
        let nontrivial =
            comp.len() > 1 || row(comp[0]).iter().any(|&(d, p)| p > 0.0 && d == comp[0]);
        if bottom && nontrivial {
            let ok = is_accepting_component(pmdp, comp);
            for &s in comp {
                accepting_state[s] = ok;
                rejecting_bscc[s] = !ok;
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|s| if accepting_state[s] { 1.0 } else { 0.0 }).collect();
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if accepting_state[s] || rejecting_bscc[s] {
                continue;
            }
            let next: f64 = row(s).iter().map(|&(d, p)| p * v[d]).sum();
            delta = delta.max((next - v[s]).abs());
            v[s] = next;
        }
        if delta < 1e-12 {
            return v;
        }
    }
}
