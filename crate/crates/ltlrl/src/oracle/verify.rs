//! Statement-level verification: policy improvement and the two
//! biased-exploration effects, checked by exact forward propagation plus
//! Monte-Carlo confirmation on purpose-built instances.

use super::{evaluate_policy, q_from_values, ExplicitPmdp};
use crate::automaton::{Literal, PropositionSet, RabinAutomaton, RabinPair, SymbolGuard};
use crate::estimator::EstimatedModel;
use crate::mdp::{GenericMdpSpec, LabeledMdp, MdpState};
use crate::policy::{epsilon_delta_masses, sample_masses, BiasConfig, BiasContext};
use crate::product::{Product, ProductState, RewardParams, TaskAutomaton};
use crate::{Error, Result};
use rand::Rng;

// ---------------------------------------------------------------------------
// Policy improvement
// ---------------------------------------------------------------------------

/// Outcome of randomized policy-improvement trials.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ImprovementReport {
    pub trials: usize,
    pub violations: usize,
    /// Most negative improvement margin seen (negative would be a violation).
    pub worst_margin: f64,
}

impl ImprovementReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// For random action-value tables and random valid (ε, δ_b, δ_e) splits:
/// derive the stochastic policy, evaluate it exactly, re-derive the greedy
/// improvement with the same exploration parameters and bias targets, and
/// demand componentwise non-degradation.
pub fn verify_policy_improvement<R: Rng>(
    pmdp: &ExplicitPmdp,
    trials: usize,
    gamma: f64,
    rng: &mut R,
) -> ImprovementReport {
    let params = RewardParams::benchmark();
    let n = pmdp.n_states();
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..trials {
        let epsilon: f64 = rng.random();
        let split: f64 = rng.random();
        let delta_e = epsilon * split;
        let delta_b = epsilon - delta_e;
        // Arbitrary bias targets, held fixed across the improvement step.
        let a_b: Vec<usize> = (0..n).map(|s| rng.random_range(0..pmdp.n_actions(s))).collect();
        let q0: Vec<Vec<f64>> = (0..n)
            .map(|s| (0..pmdp.n_actions(s)).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();

        let greedy = |q: &[Vec<f64>], s: usize| -> usize {
            let row = &q[s];
            let mut best = 0;
            for (a, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = a;
                }
            }
            best
        };
        let policy_of = |q: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..n)
                .map(|s| {
                    epsilon_delta_masses(
                        pmdp.n_actions(s),
                        greedy(q, s),
                        Some(a_b[s]),
                        epsilon,
                        delta_b,
                        delta_e,
                    )
                })
                .collect()
        };

        let mu = policy_of(&q0);
        let u_mu = evaluate_policy(pmdp, &mu, &params, gamma);
        let q_mu = q_from_values(pmdp, &u_mu, &params, gamma);
        let mu_next = policy_of(&q_mu);
        let u_next = evaluate_policy(pmdp, &mu_next, &params, gamma);

        let margin = (0..n).map(|s| u_next[s] - u_mu[s]).fold(f64::INFINITY, f64::min);
        worst_margin = worst_margin.min(margin);
        if margin < -1e-9 {
            violations += 1;
        }
    }
    ImprovementReport { trials, violations, worst_margin }
}

// ---------------------------------------------------------------------------
// Bias theorems
// ---------------------------------------------------------------------------

/// Wilson score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WilsonInterval {
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575829303548901;

impl WilsonInterval {
    pub fn new(successes: u64, trials: u64, z: f64) -> Self {
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        WilsonInterval { p_hat: p, lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
    }

    pub fn separated_above(&self, other: &WilsonInterval) -> bool {
        self.lo > other.hi
    }

    pub fn overlaps(&self, other: &WilsonInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// A constructed instance on which one of the bias-effect statements is
/// checked: a small true-kernel MDP, a reachability automaton, exploration
/// parameters, and which event variant applies.
pub struct BiasTheoremInstance {
    pub name: String,
    pub product: Product,
    /// Bias machinery fed the true kernel (counts proportional to P).
    pub estimator: EstimatedModel,
    pub start: ProductState,
    pub epsilon: f64,
    pub delta_b: f64,
    pub delta_e: f64,
    /// Track the single bias target per step instead of the whole closer set.
    pub single_target_event: bool,
}

/// Builds an estimator whose ratios equal the true kernel exactly
/// (probabilities are rational with denominator dividing 1000).
fn estimator_from_true_kernel(mdp: &LabeledMdp) -> EstimatedModel {
    let mut est = EstimatedModel::for_mdp(mdp);
    for x in 0..mdp.n_states() {
        for a in 0..mdp.n_actions(x) {
            for &(dest, p) in mdp.row(x, a) {
                let count = (p * 1000.0).round() as u64;
                assert!(
                    ((count as f64 / 1000.0) - p).abs() < 1e-12,
                    "instance kernels must have 3-decimal probabilities"
                );
                for _ in 0..count {
                    est.record(x, a, dest);
                }
            }
        }
    }
    est
}

/// Two-state automaton accepting "eventually one of the given propositions".
fn reach_automaton(names: &[&str]) -> RabinAutomaton {
    let aps = PropositionSet::new(names.iter().copied()).unwrap();
    let mut hit = SymbolGuard::const_false();
    for i in 0..names.len() {
        hit = hit.or(SymbolGuard::literal(Literal::pos(i as u16)));
    }
    let miss = SymbolGuard::conjunction((0..names.len()).map(|i| Literal::neg(i as u16)));
    RabinAutomaton::new(
        aps,
        2,
        0,
        vec![vec![(hit, 1), (miss, 0)], vec![(SymbolGuard::const_true(), 1)]],
        vec![RabinPair { inf: vec![1], fin: vec![] }],
    )
    .unwrap()
}

/// Two-lane hallway, four columns, exits in the last column of both lanes.
/// `right` lands ahead in-lane with 0.5 and cross-lane with 0.3; `left` is
/// the weak counterpart. The bias hypothesis holds strictly at every column.
pub fn hallway_theorem1_instance() -> BiasTheoremInstance {
    let idx = |lane: usize, col: usize| lane * 4 + col;
    let mut transitions = vec![Vec::new(); 8];
    for lane in 0..2 {
        for col in 0..4 {
            let here = idx(lane, col);
            let left = if col > 0 {
                vec![(idx(lane, col - 1), 0.7), (idx(1 - lane, col - 1), 0.1), (here, 0.2)]
            } else {
                vec![(here, 0.8), (idx(1 - lane, col), 0.2)]
            };
            let right = if col < 3 {
                vec![(idx(lane, col + 1), 0.5), (idx(1 - lane, col + 1), 0.3), (here, 0.2)]
            } else {
                vec![(here, 1.0)]
            };
            transitions[here] = vec![left, right];
        }
    }
    let labels = (0..8)
        .map(|x| {
            if x == idx(0, 3) {
                vec!["exit1".to_string()]
            } else if x == idx(1, 3) {
                vec!["exit2".to_string()]
            } else {
                vec![]
            }
        })
        .collect();
    let spec = GenericMdpSpec {
        initial: 0,
        aps: vec!["exit1".into(), "exit2".into()],
        labels,
        transitions,
        action_names: vec!["left".into(), "right".into()],
    };
    let mdp = spec.build().unwrap();
    let estimator = estimator_from_true_kernel(&mdp);
    let product =
        Product::new(mdp, TaskAutomaton::Rabin(reach_automaton(&["exit1", "exit2"]))).unwrap();
    let start = product.initial_state();
    BiasTheoremInstance {
        name: "hallway-two-lane".into(),
        product,
        estimator,
        start,
        epsilon: 0.5,
        delta_b: 0.25,
        delta_e: 0.25,
        single_target_event: false,
    }
}

/// Single-lane hallway whose closer set is always the singleton `{x_b}`, the
/// setting of the single-target statement: its hypothesis holds by the very
/// definition of the biased action.
pub fn hallway_theorem2_instance() -> BiasTheoremInstance {
    let mut transitions = Vec::new();
    for col in 0..4usize {
        let left = if col > 0 {
            vec![(col - 1, 0.8), (col, 0.2)]
        } else {
            vec![(col, 1.0)]
        };
        let right = if col < 3 {
            vec![(col + 1, 0.6), (col, 0.4)]
        } else {
            vec![(col, 1.0)]
        };
        transitions.push(vec![left, right]);
    }
    let spec = GenericMdpSpec {
        initial: 0,
        aps: vec!["exit".into()],
        labels: vec![vec![], vec![], vec![], vec!["exit".into()]],
        transitions,
        action_names: vec!["left".into(), "right".into()],
    };
    let mdp = spec.build().unwrap();
    let estimator = estimator_from_true_kernel(&mdp);
    let product = Product::new(mdp, TaskAutomaton::Rabin(reach_automaton(&["exit"]))).unwrap();
    let start = product.initial_state();
    BiasTheoremInstance {
        name: "hallway-single-lane".into(),
        product,
        estimator,
        start,
        epsilon: 0.5,
        delta_b: 0.25,
        delta_e: 0.25,
        single_target_event: true,
    }
}

/// Verification outcome for one bias-effect instance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BiasTheoremReport {
    pub name: String,
    pub k_star: usize,
    pub trials: u64,
    pub exact_p_biased: f64,
    pub exact_p_greedy: f64,
    pub exact_strictly_greater: bool,
    pub mc_biased: WilsonInterval,
    pub mc_greedy: WilsonInterval,
    pub mc_separated: bool,
    /// δ_b = 0 control: exact probabilities coincide and the Monte-Carlo
    /// intervals overlap.
    pub control_exact_equal: bool,
    pub control_mc_overlaps: bool,
}

impl BiasTheoremReport {
    pub fn passed(&self) -> bool {
        self.exact_strictly_greater
            && self.mc_separated
            && self.control_exact_equal
            && self.control_mc_overlaps
    }
}

/// Per-step bias decisions along the corridor, all on the true kernel.
struct CorridorStep {
    closer: Vec<MdpState>,
    x_b: MdpState,
    a_b: usize,
}

fn corridor_step(
    ctx: &mut BiasContext,
    estimator: &EstimatedModel,
    x: MdpState,
    q: usize,
) -> Option<CorridorStep> {
    let closer = ctx.closer_set(estimator, x, q);
    if closer.is_empty() {
        return None;
    }
    // Max-prob target selection, as the worked example recommends.
    let mut x_b = closer[0];
    let mut best = estimator.best_action_to(x, x_b)?.1;
    for &cand in &closer[1..] {
        let p = estimator.best_action_to(x, cand)?.1;
        if p > best {
            best = p;
            x_b = cand;
        }
    }
    let (a_b, _) = estimator.best_action_to(x, x_b)?;
    Some(CorridorStep { closer, x_b, a_b })
}

/// Monte-Carlo estimate plus exact forward propagation of the probability of
/// walking the closer-corridor for `k*` steps, with and without bias, and a
/// δ_b = 0 control. The instance's hypothesis is checked first and the run is
/// refused if it fails.
pub fn verify_bias_theorems<R: Rng>(
    instance: &BiasTheoremInstance,
    trials: u64,
    rng: &mut R,
) -> Result<BiasTheoremReport> {
    let product = &instance.product;
    let estimator = &instance.estimator;
    let mdp = product.mdp();
    let mut ctx = BiasContext::new(product, BiasConfig::default());
    let q0 = instance.start.q;

    // k* = shortest learned-graph distance from the start to X_goal.
    let k_star = {
        let mut k = 0usize;
        let mut frontier = vec![instance.start.x];
        let sets = ctx.goal_sets(q0).ok_or_else(|| {
            Error::HypothesisViolated("instance has no goal set at the start".into())
        })?;
        let goal = sets.x_goal.clone();
        loop {
            if frontier.iter().any(|&x| goal[x]) {
                break k;
            }
            let mut next = Vec::new();
            for &x in &frontier {
                let step = corridor_step(&mut ctx, estimator, x, q0).ok_or_else(|| {
                    Error::HypothesisViolated(format!("no closer set at state {x}"))
                })?;
                for c in step.closer {
                    if !next.contains(&c) {
                        next.push(c);
                    }
                }
            }
            next.sort_unstable();
            frontier = next;
            k += 1;
            if k > mdp.n_states() {
                return Err(Error::HypothesisViolated("goal set unreachable".into()));
            }
        }
    };

    // Hypothesis check at every corridor state of every depth: the biased
    // action's probability of hitting its target must strictly exceed the
    // action-averaged probability of hitting each closer state.
    {
        let mut frontier = vec![instance.start.x];
        for _depth in 0..k_star {
            let mut next = Vec::new();
            for &x in &frontier {
                let step = corridor_step(&mut ctx, estimator, x, q0)
                    .ok_or_else(|| Error::HypothesisViolated(format!("no closer set at {x}")))?;
                let m = mdp.n_actions(x) as f64;
                let p_bias = mdp.prob(x, step.a_b, step.x_b);
                for &target in &step.closer {
                    let avg: f64 =
                        (0..mdp.n_actions(x)).map(|a| mdp.prob(x, a, target)).sum::<f64>() / m;
                    if p_bias <= avg {
                        return Err(Error::HypothesisViolated(format!(
                            "P(x={x}, a_b, x_b) = {p_bias} not above the action average {avg} for closer state {target}"
                        )));
                    }
                }
                for c in step.closer {
                    if !next.contains(&c) {
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
    }

    let masses_at = |ctx: &mut BiasContext, x: MdpState, delta_b: f64, delta_e: f64| {
        let m = mdp.n_actions(x);
        let a_b = if delta_b > 0.0 {
            corridor_step(ctx, estimator, x, q0).map(|s| s.a_b)
        } else {
            None
        };
        // Q is identically zero in this setting: the greedy action is the
        // index tie-break winner, action 0, for both policies.
        epsilon_delta_masses(m, 0, a_b, instance.epsilon, delta_b, delta_e)
    };

    // Exact forward propagation of the corridor event.
    fn exact_event_probability(
        ctx: &mut BiasContext,
        instance: &BiasTheoremInstance,
        q0: usize,
        x: MdpState,
        depth_left: usize,
        delta_b: f64,
        delta_e: f64,
    ) -> f64 {
        if depth_left == 0 {
            return 1.0;
        }
        let mdp = instance.product.mdp();
        let step = match corridor_step(ctx, &instance.estimator, x, q0) {
            Some(s) => s,
            None => return 0.0,
        };
        let m = mdp.n_actions(x);
        let a_b = if delta_b > 0.0 { Some(step.a_b) } else { None };
        let masses = epsilon_delta_masses(m, 0, a_b, instance.epsilon, delta_b, delta_e);
        let targets: Vec<MdpState> =
            if instance.single_target_event { vec![step.x_b] } else { step.closer.clone() };
        let mut total = 0.0;
        for &t in &targets {
            let p_step: f64 =
                (0..m).map(|a| masses[a] * mdp.prob(x, a, t)).sum();
            if p_step > 0.0 {
                total += p_step
                    * exact_event_probability(ctx, instance, q0, t, depth_left - 1, delta_b, delta_e);
            }
        }
        total
    }

    let exact_p_biased = exact_event_probability(
        &mut ctx,
        instance,
        q0,
        instance.start.x,
        k_star,
        instance.delta_b,
        instance.delta_e,
    );
    let exact_p_greedy = exact_event_probability(
        &mut ctx,
        instance,
        q0,
        instance.start.x,
        k_star,
        0.0,
        instance.epsilon,
    );
    let control_p = exact_event_probability(
        &mut ctx,
        instance,
        q0,
        instance.start.x,
        k_star,
        0.0,
        instance.epsilon,
    );

    // Monte-Carlo confirmation of the same event.
    let mut simulate = |delta_b: f64, delta_e: f64, rng: &mut R| -> u64 {
        let mut hits = 0;
        for _ in 0..trials {
            let mut x = instance.start.x;
            let mut ok = true;
            for _ in 0..k_star {
                let step = match corridor_step(&mut ctx, estimator, x, q0) {
                    Some(s) => s,
                    None => {
                        ok = false;
                        break;
                    }
                };
                let masses = masses_at(&mut ctx, x, delta_b, delta_e);
                let a = sample_masses(&masses, rng);
                let mut u: f64 = rng.random();
                let mut dest = x;
                for &(d, p) in mdp.row(x, a) {
                    if u < p {
                        dest = d;
                        break;
                    }
                    u -= p;
                }
                let hit = if instance.single_target_event {
                    dest == step.x_b
                } else {
                    step.closer.contains(&dest)
                };
                if !hit {
                    ok = false;
                    break;
                }
                x = dest;
            }
            if ok {
                hits += 1;
            }
        }
        hits
    };
    let biased_hits = simulate(instance.delta_b, instance.delta_e, rng);
    let greedy_hits = simulate(0.0, instance.epsilon, rng);
    let control_hits = simulate(0.0, instance.epsilon, rng);

    let mc_biased = WilsonInterval::new(biased_hits, trials, Z_99);
    let mc_greedy = WilsonInterval::new(greedy_hits, trials, Z_99);
    let mc_control = WilsonInterval::new(control_hits, trials, Z_99);

    Ok(BiasTheoremReport {
        name: instance.name.clone(),
        k_star,
        trials,
        exact_p_biased,
        exact_p_greedy,
        exact_strictly_greater: exact_p_biased > exact_p_greedy,
        mc_separated: mc_biased.separated_above(&mc_greedy),
        mc_biased,
        mc_greedy,
        control_exact_equal: (control_p - exact_p_greedy).abs() < 1e-15,
        control_mc_overlaps: mc_control.overlaps(&mc_greedy),
    })
}

/// A two-lane instance whose kernel pushes both actions toward the same
/// closer state with identical mass, so the strict hypothesis fails; used to
/// test the refusal path.
#[cfg(test)]
pub(crate) fn degenerate_instance() -> BiasTheoremInstance {
    let idx = |lane: usize, col: usize| lane * 2 + col;
    let mut transitions = vec![Vec::new(); 4];
    for lane in 0..2 {
        // Both actions move to the next column of lane 0 with probability
        // 0.5: the biased action cannot strictly beat the action average.
        transitions[idx(lane, 0)] = vec![
            vec![(idx(0, 1), 0.5), (idx(lane, 0), 0.5)],
            vec![(idx(0, 1), 0.5), (idx(lane, 0), 0.5)],
        ];
        transitions[idx(lane, 1)] = vec![vec![(idx(lane, 1), 1.0)], vec![(idx(lane, 1), 1.0)]];
    }
    let spec = GenericMdpSpec {
        initial: 0,
        aps: vec!["exit".into()],
        labels: vec![vec![], vec!["exit".into()], vec![], vec![]],
        transitions,
        action_names: vec![],
    };
    let mdp = spec.build().unwrap();
    let estimator = estimator_from_true_kernel(&mdp);
    let product = Product::new(mdp, TaskAutomaton::Rabin(reach_automaton(&["exit"]))).unwrap();
    let start = product.initial_state();
    BiasTheoremInstance {
        name: "degenerate".into(),
        product,
        estimator,
        start,
        epsilon: 0.5,
        delta_b: 0.25,
        delta_e: 0.25,
        single_target_event: false,
    }
}
