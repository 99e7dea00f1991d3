//! Omega-automata for task specifications.
//!
//! A task arrives either as a deterministic Rabin automaton ([`RabinAutomaton`])
//! or a limit-deterministic Büchi automaton ([`LimitDetBuchi`]), over an
//! alphabet of location propositions (one proposition per MDP state the task
//! mentions). Since a single robot occupies exactly one location, only the
//! empty symbol and singleton symbols can ever be produced; transitions that
//! require anything else are infeasible and are pruned before distances to
//! the accepting states are computed.

mod hoa;
mod ldba;
mod pattern;

pub use hoa::{parse_hoa, ParsedAutomaton};
pub use ldba::{LdbaBuilder, LimitDetBuchi};
pub use pattern::{build_pattern_automaton, TaskPattern};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Index of an atomic proposition within a [`PropositionSet`].
pub type ApId = u16;

/// Index of an automaton state.
pub type StateId = usize;

/// The atomic propositions an automaton or MDP speaks about.
///
/// Each identifier names one MDP state (location propositions), so symbols
/// asserting two or more of them cannot be produced by a single robot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropositionSet {
    names: Vec<String>,
}

impl PropositionSet {
    /// Builds a proposition set, rejecting duplicate identifiers.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Semantic(format!("duplicate proposition `{n}`")));
            }
        }
        if names.len() > ApId::MAX as usize {
            return Err(Error::Semantic("too many propositions".into()));
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, ap: ApId) -> &str {
        &self.names[ap as usize]
    }

    pub fn index_of(&self, name: &str) -> Option<ApId> {
        self.names.iter().position(|n| n == name).map(|i| i as ApId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// One input letter: the set of propositions that hold right now.
///
/// Stored sorted and deduplicated. Task labels carry at most one location
/// proposition, but the type supports arbitrary subsets of the alphabet so
/// guards stay total over `2^AP`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(Vec<ApId>);

impl Symbol {
    pub fn empty() -> Self {
        Symbol(Vec::new())
    }

    pub fn singleton(ap: ApId) -> Self {
        Symbol(vec![ap])
    }

    pub fn from_aps<I: IntoIterator<Item = ApId>>(aps: I) -> Self {
        let mut v: Vec<ApId> = aps.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Symbol(v)
    }

    pub fn contains(&self, ap: ApId) -> bool {
        self.0.binary_search(&ap).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn aps(&self) -> &[ApId] {
        &self.0
    }
}

/// A possibly negated proposition inside a guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub ap: ApId,
    pub negated: bool,
}

impl Literal {
    pub fn pos(ap: ApId) -> Self {
        Literal { ap, negated: false }
    }

    pub fn neg(ap: ApId) -> Self {
        Literal { ap, negated: true }
    }

    fn eval(&self, sym: &Symbol) -> bool {
        sym.contains(self.ap) != self.negated
    }
}

/// Boolean predicate over symbols, kept in disjunctive normal form.
///
/// `terms` empty means `false`; a term with no literals means `true`.
/// Evaluation is a literal scan — alphabets here are small enough that
/// anything fancier would not pay for itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolGuard {
    terms: Vec<Vec<Literal>>,
}

impl SymbolGuard {
    pub fn const_true() -> Self {
        SymbolGuard { terms: vec![vec![]] }
    }

    pub fn const_false() -> Self {
        SymbolGuard { terms: vec![] }
    }

    pub fn literal(lit: Literal) -> Self {
        SymbolGuard { terms: vec![vec![lit]] }
    }

    /// Conjunction of literals as a single-term guard.
    pub fn conjunction<I: IntoIterator<Item = Literal>>(lits: I) -> Self {
        SymbolGuard { terms: vec![lits.into_iter().collect()] }
    }

    pub fn from_terms(terms: Vec<Vec<Literal>>) -> Self {
        SymbolGuard { terms }
    }

    pub fn or(mut self, other: SymbolGuard) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// Distributes the conjunction over both operands' terms.
    pub fn and(self, other: &SymbolGuard) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut t = a.clone();
                t.extend_from_slice(b);
                terms.push(t);
            }
        }
        SymbolGuard { terms }
    }

    pub fn eval(&self, sym: &Symbol) -> bool {
        self.terms.iter().any(|t| t.iter().all(|l| l.eval(sym)))
    }

    pub fn terms(&self) -> &[Vec<Literal>] {
        &self.terms
    }

    /// Human-readable rendering against a proposition set.
    pub fn render(&self, aps: &PropositionSet) -> String {
        if self.terms.is_empty() {
            return "false".into();
        }
        let term_str = |t: &Vec<Literal>| -> String {
            if t.is_empty() {
                return "true".into();
            }
            t.iter()
                .map(|l| {
                    let n = aps.name(l.ap);
                    if l.negated { format!("!{n}") } else { n.to_string() }
                })
                .collect::<Vec<_>>()
                .join(" & ")
        };
        self.terms.iter().map(term_str).collect::<Vec<_>>().join(" | ")
    }
}

/// One Rabin acceptance pair: `inf` must be visited infinitely often while
/// `fin` is visited only finitely often.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RabinPair {
    pub inf: Vec<StateId>,
    pub fin: Vec<StateId>,
}

/// Enumerates the symbols a single robot can produce: the empty symbol plus
/// one singleton per proposition.
pub fn feasible_symbols(aps: &PropositionSet) -> impl Iterator<Item = Symbol> + '_ {
    std::iter::once(Symbol::empty()).chain((0..aps.len() as ApId).map(Symbol::singleton))
}

/// A deterministic Rabin automaton with its pruned graph and distance table.
///
/// Construction validates determinism over every feasible symbol, then derives
/// the pruned adjacency (edges enabled by at least one feasible symbol) and
/// the hop distance from each state to the union of `inf` states.
#[derive(Debug, Clone)]
pub struct RabinAutomaton {
    aps: PropositionSet,
    n_states: usize,
    initial: StateId,
    edges: Vec<Vec<(SymbolGuard, StateId)>>,
    pairs: Vec<RabinPair>,
    pruned: Vec<Vec<StateId>>,
    dist: Vec<Option<u32>>,
    inf_mask: Vec<bool>,
    fin_mask: Vec<bool>,
}

impl RabinAutomaton {
    pub fn new(
        aps: PropositionSet,
        n_states: usize,
        initial: StateId,
        edges: Vec<Vec<(SymbolGuard, StateId)>>,
        pairs: Vec<RabinPair>,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::Semantic("automaton has no states".into()));
        }
        if initial >= n_states || edges.len() != n_states {
            return Err(Error::Semantic("state indices out of range".into()));
        }
        for (q, outs) in edges.iter().enumerate() {
            for (_, q2) in outs {
                if *q2 >= n_states {
                    return Err(Error::Semantic(format!(
                        "transition from {q} targets unknown state {q2}"
                    )));
                }
            }
        }
        let mut inf_mask = vec![false; n_states];
        let mut fin_mask = vec![false; n_states];
        for (i, pair) in pairs.iter().enumerate() {
            for &q in pair.inf.iter().chain(pair.fin.iter()) {
                if q >= n_states {
                    return Err(Error::Semantic(format!(
                        "accepting pair {i} references unknown state {q}"
                    )));
                }
            }
            for &q in &pair.inf {
                inf_mask[q] = true;
            }
            for &q in &pair.fin {
                fin_mask[q] = true;
            }
        }

        let auto = RabinAutomaton {
            pruned: Vec::new(),
            dist: Vec::new(),
            inf_mask,
            fin_mask,
            aps,
            n_states,
            initial,
            edges,
            pairs,
        };
        auto.check_determinism()?;
        Ok(auto.with_derived())
    }

    /// Exactly one guard per state must fire for each feasible symbol.
    /// Restricting the check to feasible symbols keeps it exhaustive at
    /// `|AP|+1` symbols per state.
    fn check_determinism(&self) -> Result<()> {
        for q in 0..self.n_states {
            for sym in feasible_symbols(&self.aps) {
                let fired = self.edges[q].iter().filter(|(g, _)| g.eval(&sym)).count();
                if fired != 1 {
                    let rendered = if sym.is_empty() {
                        "{}".to_string()
                    } else {
                        format!("{{{}}}", self.aps.name(sym.aps()[0]))
                    };
                    return Err(Error::Semantic(format!(
                        "state {q} has {fired} transitions for feasible symbol {rendered} (want exactly 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    fn with_derived(mut self) -> Self {
        self.pruned = prune(&self.aps, &self.edges, self.n_states);
        self.dist = distance_to_accepting(&self.pruned, &self.inf_mask);
        self
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

    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    pub fn edges(&self) -> &[Vec<(SymbolGuard, StateId)>] {
        &self.edges
    }

    /// Successor for a symbol: the unique transition whose guard accepts it.
    pub fn step(&self, q: StateId, sym: &Symbol) -> Result<StateId> {
        self.edges[q]
            .iter()
            .find(|(g, _)| g.eval(sym))
            .map(|(_, q2)| *q2)
            .ok_or_else(|| {
                Error::Semantic(format!("no transition from state {q} for symbol {:?}", sym))
            })
    }

    /// Adjacency restricted to transitions enabled by some feasible symbol.
    pub fn pruned_successors(&self, q: StateId) -> &[StateId] {
        &self.pruned[q]
    }

    /// `d_F(q, F)`: hops to the nearest accepting (`inf`) state in the pruned
    /// graph, `None` if unreachable.
    pub fn distance(&self, q: StateId) -> Option<u32> {
        self.dist[q]
    }

    pub fn distance_table(&self) -> &[Option<u32>] {
        &self.dist
    }

    /// Errors when no accepting state is reachable from the initial state —
    /// under pruning that means no single-robot run can satisfy the task.
    pub fn check_satisfiable(&self) -> Result<()> {
        if self.dist[self.initial].is_none() {
            return Err(Error::Unsatisfiable);
        }
        Ok(())
    }

    /// Whether `q` lies in the union of `inf` sets.
    pub fn is_accepting(&self, q: StateId) -> bool {
        self.inf_mask[q]
    }

    /// Whether `q` lies in the union of `fin` sets.
    pub fn in_fin(&self, q: StateId) -> bool {
        self.fin_mask[q]
    }

    /// JSON debug dump: states, guarded edges, pairs, pruned graph, distances.
    pub fn dump(&self) -> AutomatonDump {
        AutomatonDump {
            kind: "rabin".into(),
            aps: self.aps.clone(),
            n_states: self.n_states,
            initial: self.initial,
            edges: self
                .edges
                .iter()
                .enumerate()
                .flat_map(|(q, outs)| {
                    outs.iter().map(move |(g, q2)| EdgeDump {
                        from: q,
                        guard: g.clone(),
                        to: *q2,
                    })
                })
                .collect(),
            pairs: self.pairs.clone(),
            accepting_sets: Vec::new(),
            epsilon_edges: Vec::new(),
            pruned: self.pruned.clone(),
            distances: vec![self.dist.iter().map(|d| d.map(|v| v as i64).unwrap_or(-1)).collect()],
        }
    }

    /// Serializes to HOA v1 with the `Fin(2i) & Inf(2i+1)` pair convention.
    pub fn to_hoa(&self) -> String {
        hoa::rabin_to_hoa(self)
    }

    /// Rebuilds an automaton from its JSON dump (derived tables recomputed).
    pub fn from_dump(dump: &AutomatonDump) -> Result<Self> {
        if dump.kind != "rabin" {
            return Err(Error::Semantic(format!("expected a rabin dump, got `{}`", dump.kind)));
        }
        let mut edges = vec![Vec::new(); dump.n_states];
        for e in &dump.edges {
            if e.from >= dump.n_states {
                return Err(Error::Semantic("dump edge out of range".into()));
            }
            edges[e.from].push((e.guard.clone(), e.to));
        }
        RabinAutomaton::new(dump.aps.clone(), dump.n_states, dump.initial, edges, dump.pairs.clone())
    }
}

/// Pruned adjacency over any guarded edge list: an edge survives iff at least
/// one feasible symbol satisfies its guard. The guarded edges themselves are
/// left untouched; the product always runs on the unpruned automaton.
pub(crate) fn prune(
    aps: &PropositionSet,
    edges: &[Vec<(SymbolGuard, StateId)>],
    n_states: usize,
) -> Vec<Vec<StateId>> {
    let feas: Vec<Symbol> = feasible_symbols(aps).collect();
    let mut adj = vec![Vec::new(); n_states];
    for (q, outs) in edges.iter().enumerate() {
        for (g, q2) in outs {
            if feas.iter().any(|s| g.eval(s)) && !adj[q].contains(q2) {
                adj[q].push(*q2);
            }
        }
        adj[q].sort_unstable();
    }
    adj
}

/// Multi-source reverse BFS: hop distance from every state to the nearest
/// target state along the pruned graph.
pub(crate) fn distance_to_accepting(
    pruned: &[Vec<StateId>],
    targets: &[bool],
) -> Vec<Option<u32>> {
    let n = pruned.len();
    let mut rev = vec![Vec::new(); n];
    for (q, outs) in pruned.iter().enumerate() {
        for &q2 in outs {
            rev[q2].push(q);
        }
    }
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for (q, &is_target) in targets.iter().enumerate() {
        if is_target {
            dist[q] = Some(0);
            queue.push_back(q);
        }
    }
    while let Some(q) = queue.pop_front() {
        let d = dist[q].unwrap();
        for &p in &rev[q] {
            if dist[p].is_none() {
                dist[p] = Some(d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Random deterministic automaton: every feasible symbol gets one uniformly
/// drawn successor per state (exact-symbol guards), plus one random accepting
/// pair. A fuzzing source for the distance-table checks.
pub fn random_deterministic_automaton<R: rand::Rng>(
    rng: &mut R,
    n_states: usize,
    n_aps: usize,
) -> RabinAutomaton {
    let set = PropositionSet::new((0..n_aps).map(|i| format!("a{i}"))).unwrap();
    let feas: Vec<Symbol> = feasible_symbols(&set).collect();
    let mut edges = vec![Vec::new(); n_states];
    for state_edges in edges.iter_mut() {
        for sym in &feas {
            let dest = rng.random_range(0..n_states);
            let lits: Vec<Literal> = (0..n_aps as ApId)
                .map(|a| if sym.contains(a) { Literal::pos(a) } else { Literal::neg(a) })
                .collect();
            state_edges.push((SymbolGuard::conjunction(lits), dest));
        }
    }
    let inf: Vec<StateId> = (0..n_states).filter(|_| rng.random_bool(0.3)).collect();
    let inf = if inf.is_empty() { vec![rng.random_range(0..n_states)] } else { inf };
    let fin: Vec<StateId> = (0..n_states).filter(|_| rng.random_bool(0.2)).collect();
    RabinAutomaton::new(set, n_states, 0, edges, vec![RabinPair { inf, fin }]).unwrap()
}

/// Flat serializable view of an automaton for debugging and golden tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutomatonDump {
    pub kind: String,
    pub aps: PropositionSet,
    pub n_states: usize,
    pub initial: StateId,
    pub edges: Vec<EdgeDump>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<RabinPair>,
    /// Büchi accepting sets (LDBA only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accepting_sets: Vec<Vec<StateId>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon_edges: Vec<(StateId, StateId)>,
    pub pruned: Vec<Vec<StateId>>,
    /// One distance row per accepting target set (-1 encodes unreachable).
    pub distances: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDump {
    pub from: StateId,
    pub guard: SymbolGuard,
    pub to: StateId,
}

#[cfg(test)]
mod tests;
