//! Task-pattern catalogue.
//!
//! Instead of a general LTL translator, tasks are built from a small
//! catalogue of shapes: reach-and-stay with static obstacles, coverage with
//! visit-order constraints, and recurrent surveillance. Each builder emits a
//! deterministic Rabin automaton over location propositions `p<cell>`.

use super::{Literal, PropositionSet, RabinAutomaton, RabinPair, StateId, SymbolGuard};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Catalogue of supported task shapes. Cells are 1-based grid identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskPattern {
    /// Eventually reach `goal` and stay there forever, never touching an
    /// obstacle.
    ReachAvoidStay { goal: u32, obstacles: Vec<u32> },
    /// Eventually visit every target; `precedences` lists `(before, after)`
    /// pairs meaning `after` must not be visited until `before` has been.
    OrderedCoverage {
        targets: Vec<u32>,
        #[serde(default)]
        precedences: Vec<(u32, u32)>,
        obstacles: Vec<u32>,
    },
    /// Visit every target infinitely often, never touching an obstacle.
    Surveillance { targets: Vec<u32>, obstacles: Vec<u32> },
}

/// Proposition name for a grid cell.
pub(crate) fn prop_name(cell: u32) -> String {
    format!("p{cell}")
}

fn check_disjoint(targets: &[u32], obstacles: &[u32]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidConfig("pattern has an empty target set".into()));
    }
    for t in targets {
        if obstacles.contains(t) {
            return Err(Error::InvalidConfig(format!(
                "cell {t} is both a target and an obstacle"
            )));
        }
    }
    for (i, t) in targets.iter().enumerate() {
        if targets[..i].contains(t) {
            return Err(Error::InvalidConfig(format!("duplicate target cell {t}")));
        }
    }
    Ok(())
}

/// Builds the DRA for a pattern instance.
pub fn build_pattern_automaton(pattern: &TaskPattern) -> Result<RabinAutomaton> {
    match pattern {
        TaskPattern::ReachAvoidStay { goal, obstacles } => reach_avoid_stay(*goal, obstacles),
        TaskPattern::OrderedCoverage { targets, precedences, obstacles } => {
            ordered_coverage(targets, precedences, obstacles)
        }
        TaskPattern::Surveillance { targets, obstacles } => surveillance(targets, obstacles),
    }
}

fn alphabet(targets: &[u32], obstacles: &[u32]) -> Result<PropositionSet> {
    PropositionSet::new(targets.iter().chain(obstacles.iter()).map(|c| prop_name(*c)))
}

/// Guard firing when any obstacle proposition holds.
fn obstacle_guard(n_targets: usize, n_obstacles: usize) -> SymbolGuard {
    let mut g = SymbolGuard::const_false();
    for i in 0..n_obstacles {
        g = g.or(SymbolGuard::literal(Literal::pos((n_targets + i) as u16)));
    }
    g
}

fn no_obstacle_lits(n_targets: usize, n_obstacles: usize) -> Vec<Literal> {
    (0..n_obstacles).map(|i| Literal::neg((n_targets + i) as u16)).collect()
}

/// 4 states: neutral start, goal streak (accepting), lapsed, trap.
/// The streak must eventually become permanent, so both the lapsed state and
/// the trap sit in the pair's `fin` set.
fn reach_avoid_stay(goal: u32, obstacles: &[u32]) -> Result<RabinAutomaton> {
    check_disjoint(&[goal], obstacles)?;
    let aps = alphabet(&[goal], obstacles)?;
    let n_obs = obstacles.len();
    let (neutral, streak, lapsed, trap) = (0usize, 1usize, 2usize, 3usize);

    let obs = obstacle_guard(1, n_obs);
    let mut goal_safe = vec![Literal::pos(0)];
    goal_safe.extend(no_obstacle_lits(1, n_obs));
    let mut other_safe = vec![Literal::neg(0)];
    other_safe.extend(no_obstacle_lits(1, n_obs));

    let outs = |fallback: StateId| {
        vec![
            (obs.clone(), trap),
            (SymbolGuard::conjunction(goal_safe.clone()), streak),
            (SymbolGuard::conjunction(other_safe.clone()), fallback),
        ]
    };
    let edges = vec![
        outs(neutral),
        outs(lapsed),
        outs(lapsed),
        vec![(SymbolGuard::const_true(), trap)],
    ];
    RabinAutomaton::new(
        aps,
        4,
        neutral,
        edges,
        vec![RabinPair { inf: vec![streak], fin: vec![lapsed, trap] }],
    )
}

/// Subset-progress construction. States are the subsets of targets reachable
/// without violating a precedence, plus two absorbing failure states that
/// record why the run died (order violation vs. obstacle).
fn ordered_coverage(
    targets: &[u32],
    precedences: &[(u32, u32)],
    obstacles: &[u32],
) -> Result<RabinAutomaton> {
    check_disjoint(targets, obstacles)?;
    for (b, a) in precedences {
        if !targets.contains(b) || !targets.contains(a) {
            return Err(Error::InvalidConfig(format!(
                "precedence ({b},{a}) references a cell that is not a target"
            )));
        }
    }
    let n = targets.len();
    if n > 16 {
        return Err(Error::InvalidConfig("too many coverage targets (max 16)".into()));
    }
    let aps = alphabet(targets, obstacles)?;
    let n_obs = obstacles.len();
    let prec: Vec<(usize, usize)> = precedences
        .iter()
        .map(|(b, a)| {
            (
                targets.iter().position(|t| t == b).unwrap(),
                targets.iter().position(|t| t == a).unwrap(),
            )
        })
        .collect();

    let valid = |s: u32| prec.iter().all(|&(b, a)| s & (1 << a) == 0 || s & (1 << b) != 0);
    let mut subsets: Vec<u32> = (0..(1u32 << n)).filter(|&s| valid(s)).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    let index: HashMap<u32, StateId> = subsets.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let order_trap = subsets.len();
    let obstacle_trap = subsets.len() + 1;
    let n_states = subsets.len() + 2;
    let full = (1u32 << n) - 1;

    let mut edges: Vec<Vec<(SymbolGuard, StateId)>> = Vec::with_capacity(n_states);
    for &s in &subsets {
        let remaining: Vec<usize> = (0..n).filter(|i| s & (1 << i) == 0).collect();
        let mut outs = vec![(obstacle_guard(n, n_obs), obstacle_trap)];
        // One exact guard per subset of still-unseen targets; seen targets
        // are don't-cares, which keeps the guards a partition of 2^AP.
        for mask in 0..(1u32 << remaining.len()) {
            let mut lits = no_obstacle_lits(n, n_obs);
            let mut s2 = s;
            for (j, &t) in remaining.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    lits.push(Literal::pos(t as u16));
                    s2 |= 1 << t;
                } else {
                    lits.push(Literal::neg(t as u16));
                }
            }
            let dest = if valid(s2) { index[&s2] } else { order_trap };
            outs.push((SymbolGuard::conjunction(lits), dest));
        }
        edges.push(outs);
    }
    edges.push(vec![(SymbolGuard::const_true(), order_trap)]);
    edges.push(vec![(SymbolGuard::const_true(), obstacle_trap)]);

    RabinAutomaton::new(
        aps,
        n_states,
        index[&0],
        edges,
        vec![RabinPair { inf: vec![index[&full]], fin: vec![order_trap, obstacle_trap] }],
    )
}

/// Cyclic-waiting construction: waiting states stall until the awaited target
/// shows up, pulse states mark each fresh sighting, and the pulse of the last
/// target — entered exactly once per completed lap — is the accepting state.
fn surveillance(targets: &[u32], obstacles: &[u32]) -> Result<RabinAutomaton> {
    check_disjoint(targets, obstacles)?;
    let n = targets.len();
    let aps = alphabet(targets, obstacles)?;
    let n_obs = obstacles.len();

    // State layout: 0 = initial, 1..=n waiting for target i, n+1..=2n pulse
    // "just saw target i", 2n+1 = obstacle trap.
    let waiting = |i: usize| i; // i in 1..=n
    let pulse = |i: usize| n + i; // i in 1..=n
    let trap = 2 * n + 1;
    let n_states = 2 * n + 2;

    let obs = obstacle_guard(n, n_obs);
    let await_target = |i: usize, go: StateId, stay: StateId| {
        let t = (i - 1) as u16;
        let mut hit = vec![Literal::pos(t)];
        hit.extend(no_obstacle_lits(n, n_obs));
        let mut miss = vec![Literal::neg(t)];
        miss.extend(no_obstacle_lits(n, n_obs));
        vec![
            (obs.clone(), trap),
            (SymbolGuard::conjunction(hit), go),
            (SymbolGuard::conjunction(miss), stay),
        ]
    };

    let mut edges: Vec<Vec<(SymbolGuard, StateId)>> = Vec::with_capacity(n_states);
    edges.push(await_target(1, pulse(1), waiting(1)));
    for i in 1..=n {
        edges.push(await_target(i, pulse(i), waiting(i)));
    }
    for i in 1..=n {
        let next = if i == n { 1 } else { i + 1 };
        edges.push(await_target(next, pulse(next), waiting(next)));
    }
    edges.push(vec![(SymbolGuard::const_true(), trap)]);

    RabinAutomaton::new(
        aps,
        n_states,
        0,
        edges,
        vec![RabinPair { inf: vec![pulse(n)], fin: vec![trap] }],
    )
}
