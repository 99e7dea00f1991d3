//! Limit-deterministic Büchi automata.
//!
//! States split into a (possibly nondeterministic) prefix part and a
//! deterministic suffix part that is invariant once entered and carries every
//! accepting set. ε-transitions bridge the two parts; the product exposes
//! them to the learner as extra actions, and they are never pruned.

use super::{
    distance_to_accepting, feasible_symbols, prune, AutomatonDump, EdgeDump, PropositionSet,
    StateId, Symbol, SymbolGuard,
};
use crate::{Error, Result};

/// A limit-deterministic generalized Büchi automaton.
#[derive(Debug, Clone)]
pub struct LimitDetBuchi {
    aps: PropositionSet,
    n_states: usize,
    initial: StateId,
    edges: Vec<Vec<(SymbolGuard, StateId)>>,
    eps: Vec<Vec<StateId>>,
    accepting: Vec<Vec<StateId>>,
    in_det_part: Vec<bool>,
    /// Feasible-symbol edges plus ε-edges.
    pruned: Vec<Vec<StateId>>,
    /// Hop distances, one table per accepting set.
    dist: Vec<Vec<Option<u32>>>,
}

/// Incremental construction of an [`LimitDetBuchi`]; `build` infers the
/// deterministic part and validates the limit-determinism requirements.
pub struct LdbaBuilder {
    aps: PropositionSet,
    n_states: usize,
    initial: StateId,
    edges: Vec<Vec<(SymbolGuard, StateId)>>,
    eps: Vec<Vec<StateId>>,
    accepting: Vec<Vec<StateId>>,
}

impl LdbaBuilder {
    pub fn new(aps: PropositionSet, n_states: usize, initial: StateId) -> Self {
        LdbaBuilder {
            aps,
            n_states,
            initial,
            edges: vec![Vec::new(); n_states],
            eps: vec![Vec::new(); n_states],
            accepting: Vec::new(),
        }
    }

    pub fn edge(mut self, from: StateId, guard: SymbolGuard, to: StateId) -> Self {
        self.edges[from].push((guard, to));
        self
    }

    pub fn epsilon(mut self, from: StateId, to: StateId) -> Self {
        self.eps[from].push(to);
        self
    }

    pub fn accepting_set(mut self, states: Vec<StateId>) -> Self {
        self.accepting.push(states);
        self
    }

    pub fn build(self) -> Result<LimitDetBuchi> {
        LimitDetBuchi::new(self.aps, self.n_states, self.initial, self.edges, self.eps, self.accepting)
    }
}

impl LimitDetBuchi {
    pub fn new(
        aps: PropositionSet,
        n_states: usize,
        initial: StateId,
        edges: Vec<Vec<(SymbolGuard, StateId)>>,
        eps: Vec<Vec<StateId>>,
        accepting: Vec<Vec<StateId>>,
    ) -> Result<Self> {
        if n_states == 0 || initial >= n_states || edges.len() != n_states || eps.len() != n_states
        {
            return Err(Error::Semantic("LDBA state indices out of range".into()));
        }
        if accepting.is_empty() {
            return Err(Error::Semantic("LDBA needs at least one accepting set".into()));
        }
        for outs in &edges {
            for (_, q2) in outs {
                if *q2 >= n_states {
                    return Err(Error::Semantic("LDBA transition targets unknown state".into()));
                }
            }
        }
        for (f, set) in accepting.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::Semantic(format!("accepting set {f} is empty")));
            }
            for &q in set {
                if q >= n_states {
                    return Err(Error::Semantic(format!(
                        "accepting set {f} references unknown state {q}"
                    )));
                }
            }
        }

        let in_det_part = infer_deterministic_part(&aps, &edges, &eps, n_states);
        for set in &accepting {
            for &q in set {
                if !in_det_part[q] {
                    return Err(Error::Semantic(format!(
                        "accepting state {q} lies outside the deterministic part"
                    )));
                }
            }
        }
        for (q, targets) in eps.iter().enumerate() {
            for &q2 in targets {
                if in_det_part[q] {
                    return Err(Error::Semantic(format!(
                        "ε-transition out of deterministic-part state {q}"
                    )));
                }
                if !in_det_part[q2] {
                    return Err(Error::Semantic(format!(
                        "ε-transition from {q} targets {q2} outside the deterministic part"
                    )));
                }
            }
        }
        // Every state must be able to read every feasible symbol.
        for q in 0..n_states {
            for sym in feasible_symbols(&aps) {
                if !edges[q].iter().any(|(g, _)| g.eval(&sym)) {
                    return Err(Error::Semantic(format!(
                        "LDBA state {q} has no transition for a feasible symbol"
                    )));
                }
            }
        }

        let mut pruned = prune(&aps, &edges, n_states);
        for (q, targets) in eps.iter().enumerate() {
            for &q2 in targets {
                if !pruned[q].contains(&q2) {
                    pruned[q].push(q2);
                }
            }
            pruned[q].sort_unstable();
        }
        let dist = accepting
            .iter()
            .map(|set| {
                let mut mask = vec![false; n_states];
                for &q in set {
                    mask[q] = true;
                }
                distance_to_accepting(&pruned, &mask)
            })
            .collect();

        Ok(LimitDetBuchi {
            aps,
            n_states,
            initial,
            edges,
            eps,
            accepting,
            in_det_part,
            pruned,
            dist,
        })
    }

    pub fn aps(&self) -> &PropositionSet {
        &self.aps
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn accepting_sets(&self) -> &[Vec<StateId>] {
        &self.accepting
    }

    /// Indices of accepting sets containing `q`.
    pub fn sets_containing(&self, q: StateId) -> Vec<usize> {
        (0..self.accepting.len()).filter(|&j| self.accepting[j].contains(&q)).collect()
    }

    pub fn in_deterministic_part(&self, q: StateId) -> bool {
        self.in_det_part[q]
    }

    pub fn epsilon_successors(&self, q: StateId) -> &[StateId] {
        &self.eps[q]
    }

    /// All symbol successors of `q` under `sym` (deduplicated). States in the
    /// deterministic part have exactly one.
    pub fn step(&self, q: StateId, sym: &Symbol) -> Vec<StateId> {
        let mut out: Vec<StateId> = self.edges[q]
            .iter()
            .filter(|(g, _)| g.eval(sym))
            .map(|(_, q2)| *q2)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The unique symbol successor, or an error when the prefix part is
    /// nondeterministic on `sym` — the product construction requires symbol
    /// determinism and resolves branching through ε-actions only.
    pub fn step_deterministic(&self, q: StateId, sym: &Symbol) -> Result<StateId> {
        let succ = self.step(q, sym);
        match succ.len() {
            1 => Ok(succ[0]),
            0 => Err(Error::Semantic(format!("no LDBA transition from {q} on {sym:?}"))),
            _ => Err(Error::Semantic(format!(
                "nondeterministic symbol transition from LDBA state {q}; not supported by the product"
            ))),
        }
    }

    /// Pruned adjacency: feasible-symbol edges plus all ε-edges.
    pub fn pruned_successors(&self, q: StateId) -> &[StateId] {
        &self.pruned[q]
    }

    /// `d_F(q, F_j)` in hops over the pruned graph; ε-edges count one hop.
    pub fn distance(&self, q: StateId, j: usize) -> Option<u32> {
        self.dist[j][q]
    }

    pub fn distance_table(&self, j: usize) -> &[Option<u32>] {
        &self.dist[j]
    }

    /// Errors when some accepting set is unreachable from the initial state.
    pub fn check_satisfiable(&self) -> Result<()> {
        for j in 0..self.accepting.len() {
            if self.dist[j][self.initial].is_none() {
                return Err(Error::Unsatisfiable);
            }
        }
        Ok(())
    }

    /// Rebuilds an LDBA from its JSON dump (derived tables recomputed).
    pub fn from_dump(dump: &AutomatonDump) -> crate::Result<Self> {
        if dump.kind != "ldba" {
            return Err(Error::Semantic(format!("expected an ldba dump, got `{}`", dump.kind)));
        }
        let mut edges = vec![Vec::new(); dump.n_states];
        for e in &dump.edges {
            if e.from >= dump.n_states {
                return Err(Error::Semantic("dump edge out of range".into()));
            }
            edges[e.from].push((e.guard.clone(), e.to));
        }
        let mut eps = vec![Vec::new(); dump.n_states];
        for &(from, to) in &dump.epsilon_edges {
            if from >= dump.n_states {
                return Err(Error::Semantic("dump ε-edge out of range".into()));
            }
            eps[from].push(to);
        }
        LimitDetBuchi::new(
            dump.aps.clone(),
            dump.n_states,
            dump.initial,
            edges,
            eps,
            dump.accepting_sets.clone(),
        )
    }

    pub fn dump(&self) -> AutomatonDump {
        AutomatonDump {
            kind: "ldba".into(),
            aps: self.aps.clone(),
            n_states: self.n_states,
            initial: self.initial,
            edges: self
                .edges
                .iter()
                .enumerate()
                .flat_map(|(q, outs)| {
                    outs.iter().map(move |(g, q2)| EdgeDump { from: q, guard: g.clone(), to: *q2 })
                })
                .collect(),
            pairs: Vec::new(),
            accepting_sets: self.accepting.clone(),
            epsilon_edges: self
                .eps
                .iter()
                .enumerate()
                .flat_map(|(q, ts)| ts.iter().map(move |&t| (q, t)))
                .collect(),
            pruned: self.pruned.clone(),
            distances: self
                .dist
                .iter()
                .map(|row| row.iter().map(|d| d.map(|v| v as i64).unwrap_or(-1)).collect())
                .collect(),
        }
    }
}

/// Greatest set of states that is per-symbol deterministic, ε-free, and
/// closed under symbol successors. Checked over feasible symbols, which is
/// exhaustive for single-robot alphabets.
fn infer_deterministic_part(
    aps: &PropositionSet,
    edges: &[Vec<(SymbolGuard, StateId)>],
    eps: &[Vec<StateId>],
    n_states: usize,
) -> Vec<bool> {
    let feas: Vec<Symbol> = feasible_symbols(aps).collect();
    let mut in_part: Vec<bool> = (0..n_states)
        .map(|q| {
            eps[q].is_empty()
                && feas.iter().all(|s| {
                    let mut succ: Vec<StateId> =
                        edges[q].iter().filter(|(g, _)| g.eval(s)).map(|(_, q2)| *q2).collect();
                    succ.sort_unstable();
                    succ.dedup();
                    succ.len() == 1
                })
        })
        .collect();
    loop {
        let mut changed = false;
        for q in 0..n_states {
            if !in_part[q] {
                continue;
            }
            let leaves = edges[q].iter().any(|(g, q2)| {
                !in_part[*q2] && feas.iter().any(|s| g.eval(s))
            });
            if leaves {
                in_part[q] = false;
                changed = true;
            }
        }
        if !changed {
            return in_part;
        }
    }
}
