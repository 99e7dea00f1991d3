//! Ground-truth labeled MDPs.
//!
//! The learner never reads the kernel stored here; it only observes sampled
//! transitions through [`LabeledMdp::sample_step`]. Labels are location
//! propositions `p<cell>` (1-based cell identifiers, row-major from the
//! top-left, so the bottom-right cell of a 10×10 grid is `p100`).

use crate::automaton::{PropositionSet, Symbol};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Index of an MDP state (0-based internally; grid cells are 1-based).
pub type MdpState = usize;

/// Index of an action within a state's action set.
pub type Action = usize;

const ROW_SUM_TOL: f64 = 1e-9;

/// A finite labeled MDP with a dense-per-state sparse-row kernel.
#[derive(Debug, Clone)]
pub struct LabeledMdp {
    n_states: usize,
    initial: MdpState,
    /// `kernel[x][a]` is the sparse outcome row for action `a` at `x`.
    kernel: Vec<Vec<Vec<(MdpState, f64)>>>,
    labels: Vec<Symbol>,
    aps: PropositionSet,
    action_names: Vec<String>,
    grid: Option<(usize, usize)>,
}

impl LabeledMdp {
    pub fn new(
        initial: MdpState,
        kernel: Vec<Vec<Vec<(MdpState, f64)>>>,
        labels: Vec<Symbol>,
        aps: PropositionSet,
        action_names: Vec<String>,
    ) -> Result<Self> {
        let n_states = kernel.len();
        if n_states == 0 || initial >= n_states || labels.len() != n_states {
            return Err(Error::InvalidConfig("inconsistent MDP dimensions".into()));
        }
        for (x, rows) in kernel.iter().enumerate() {
            for (a, row) in rows.iter().enumerate() {
                let mut sum = 0.0;
                for &(dest, p) in row {
                    if dest >= n_states {
                        return Err(Error::InvalidConfig(format!(
                            "transition ({x},{a}) targets unknown state {dest}"
                        )));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidConfig(format!(
                            "probability {p} out of range at ({x},{a})"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidConfig(format!(
                        "kernel row ({x},{a}) sums to {sum}, expected 1"
                    )));
                }
            }
        }
        for (x, l) in labels.iter().enumerate() {
            if l.len() > 1 {
                return Err(Error::InvalidConfig(format!(
                    "state {x} asserts {} location propositions (max 1)",
                    l.len()
                )));
            }
        }
        Ok(LabeledMdp { n_states, initial, kernel, labels, aps, action_names, grid: None })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial(&self) -> MdpState {
        self.initial
    }

    pub fn n_actions(&self, x: MdpState) -> usize {
        self.kernel[x].len()
    }

    pub fn action_name(&self, a: Action) -> &str {
        self.action_names.get(a).map(String::as_str).unwrap_or("?")
    }

    pub fn aps(&self) -> &PropositionSet {
        &self.aps
    }

    /// `L(x)`: the propositions holding at `x` (empty for unlabeled states).
    pub fn label_of(&self, x: MdpState) -> &Symbol {
        &self.labels[x]
    }

    /// True kernel row; the learner must not call this.
    pub fn row(&self, x: MdpState, a: Action) -> &[(MdpState, f64)] {
        &self.kernel[x][a]
    }

    /// True transition probability `P(x, a, x')`.
    pub fn prob(&self, x: MdpState, a: Action, dest: MdpState) -> f64 {
        self.kernel[x][a].iter().find(|(d, _)| *d == dest).map(|(_, p)| *p).unwrap_or(0.0)
    }

    /// Draws the successor state. Deterministic given the RNG state.
    pub fn sample_step<R: Rng>(&self, x: MdpState, a: Action, rng: &mut R) -> Result<MdpState> {
        if a >= self.kernel[x].len() {
            return Err(Error::InvalidAction { state: x, action: a });
        }
        let row = &self.kernel[x][a];
        let mut u: f64 = rng.random();
        for &(dest, p) in row {
            if u < p {
                return Ok(dest);
            }
            u -= p;
        }
        // Guard against f64 row-sum shortfall: fall back to the last outcome.
        Ok(row.last().expect("non-empty kernel row").0)
    }

    /// Grid dimensions when this MDP came from [`build_gridworld`].
    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        self.grid
    }
}

/// Grid-world generator parameters.
///
/// Actions are `left, right, up, down, idle` in that order. A directional
/// action reaches its intended neighbor with probability `p_intended`; the
/// remaining mass splits equally over the four other outcomes (the other
/// three directions and staying put). `idle` keeps the robot in place with
/// `p_intended` and splits the rest over the four neighbors. Outcomes that
/// would leave the grid fold into staying put.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorldSpec {
    pub width: usize,
    pub height: usize,
    pub p_intended: f64,
    /// Initial cell (1-based). Defaults to cell 1, the top-left corner.
    #[serde(default = "default_initial_cell")]
    pub initial_cell: u32,
    /// Cells that carry their location proposition. `None` labels every cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeled_cells: Option<Vec<u32>>,
    /// Cells the robot cannot leave (docking stations, crash sites). Every
    /// action self-loops there with probability 1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub absorbing_cells: Vec<u32>,
}

fn default_initial_cell() -> u32 {
    1
}

impl GridWorldSpec {
    /// The environment every built-in benchmark task runs on.
    pub fn benchmark_10x10() -> Self {
        GridWorldSpec {
            width: 10,
            height: 10,
            p_intended: 0.7,
            initial_cell: 1,
            labeled_cells: None,
            absorbing_cells: Vec::new(),
        }
    }
}

/// Grid action order: left, right, up, down, idle.
pub const GRID_ACTIONS: [&str; 5] = ["left", "right", "up", "down", "idle"];

/// Single-letter action names used by policy-grid renderings.
pub const GRID_ACTION_LETTERS: [char; 5] = ['L', 'R', 'U', 'D', 'I'];

/// Builds the grid-world MDP for a spec.
pub fn build_gridworld(spec: &GridWorldSpec) -> Result<LabeledMdp> {
    let (w, h) = (spec.width, spec.height);
    let n = w * h;
    if n == 0 {
        return Err(Error::InvalidConfig("grid must have at least one cell".into()));
    }
    if !(spec.p_intended > 0.0 && spec.p_intended <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "p_intended {} outside (0, 1]",
            spec.p_intended
        )));
    }
    if spec.initial_cell == 0 || spec.initial_cell as usize > n {
        return Err(Error::InvalidConfig(format!(
            "initial cell {} outside the grid",
            spec.initial_cell
        )));
    }
    let labeled: Vec<u32> = match &spec.labeled_cells {
        None => (1..=n as u32).collect(),
        Some(cells) => {
            for &c in cells {
                if c == 0 || c as usize > n {
                    return Err(Error::InvalidConfig(format!("labeled cell {c} outside the grid")));
                }
            }
            cells.clone()
        }
    };
    let aps = PropositionSet::new(labeled.iter().map(|c| format!("p{c}")))?;
    let labels: Vec<Symbol> = (1..=n as u32)
        .map(|cell| match labeled.iter().position(|&c| c == cell) {
            Some(i) => Symbol::singleton(i as u16),
            None => Symbol::empty(),
        })
        .collect();

    let p_res = (1.0 - spec.p_intended) / 4.0;
    // Outcome of moving in direction d (0..4 = left/right/up/down/idle) from
    // (r, c); off-grid motion stays put.
    let target = |r: usize, c: usize, d: usize| -> usize {
        let (r2, c2) = match d {
            0 if c > 0 => (r, c - 1),
            1 if c + 1 < w => (r, c + 1),
            2 if r > 0 => (r - 1, c),
            3 if r + 1 < h => (r + 1, c),
            _ => (r, c),
        };
        r2 * w + c2
    };

    for &c in &spec.absorbing_cells {
        if c == 0 || c as usize > n {
            return Err(Error::InvalidConfig(format!("absorbing cell {c} outside the grid")));
        }
    }
    let mut kernel = Vec::with_capacity(n);
    for x in 0..n {
        let (r, c) = (x / w, x % w);
        if spec.absorbing_cells.contains(&(x as u32 + 1)) {
            kernel.push(vec![vec![(x, 1.0)]; 5]);
            continue;
        }
        let mut rows = Vec::with_capacity(5);
        for a in 0..5 {
            let mut acc: Vec<(MdpState, f64)> = Vec::with_capacity(5);
            let mut add = |dest: usize, p: f64| {
                if p == 0.0 {
                    return;
                }
                match acc.iter_mut().find(|(d, _)| *d == dest) {
                    Some((_, q)) => *q += p,
                    None => acc.push((dest, p)),
                }
            };
            add(target(r, c, a), spec.p_intended);
            for d in 0..5 {
                if d != a {
                    add(target(r, c, d), p_res);
                }
            }
            acc.sort_unstable_by_key(|(d, _)| *d);
            rows.push(acc);
        }
        kernel.push(rows);
    }

    let mut mdp = LabeledMdp::new(
        spec.initial_cell as usize - 1,
        kernel,
        labels,
        aps,
        GRID_ACTIONS.iter().map(|s| s.to_string()).collect(),
    )?;
    mdp.grid = Some((w, h));
    Ok(mdp)
}

/// Explicit-kernel MDP description for non-grid environments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenericMdpSpec {
    pub initial: MdpState,
    pub aps: Vec<String>,
    /// Proposition names holding at each state.
    pub labels: Vec<Vec<String>>,
    /// `transitions[x][a]` lists `(destination, probability)` pairs.
    pub transitions: Vec<Vec<Vec<(MdpState, f64)>>>,
    #[serde(default)]
    pub action_names: Vec<String>,
}

impl GenericMdpSpec {
    pub fn build(&self) -> Result<LabeledMdp> {
        let aps = PropositionSet::new(self.aps.clone())?;
        let labels: Vec<Symbol> = self
            .labels
            .iter()
            .map(|names| {
                let ids = names
                    .iter()
                    .map(|n| {
                        aps.index_of(n).ok_or_else(|| {
                            Error::InvalidConfig(format!("label uses undeclared proposition `{n}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Symbol::from_aps(ids))
            })
            .collect::<Result<Vec<_>>>()?;
        let names = if self.action_names.is_empty() {
            let max_actions = self.transitions.iter().map(Vec::len).max().unwrap_or(0);
            (0..max_actions).map(|a| format!("a{a}")).collect()
        } else {
            self.action_names.clone()
        };
        LabeledMdp::new(self.initial, self.transitions.clone(), labels, aps, names)
    }
}

/// Environment source used in run configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvSource {
    Grid(GridWorldSpec),
    Mdp(GenericMdpSpec),
    MdpFile { path: String },
}

impl EnvSource {
    pub fn build(&self) -> Result<LabeledMdp> {
        match self {
            EnvSource::Grid(spec) => build_gridworld(spec),
            EnvSource::Mdp(spec) => spec.build(),
            EnvSource::MdpFile { path } => {
                let text = std::fs::read_to_string(path)?;
                let spec: GenericMdpSpec = serde_json::from_str(&text)?;
                spec.build()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rows_sum_to_one_everywhere() {
        let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
        for x in 0..mdp.n_states() {
            for a in 0..mdp.n_actions(x) {
                let sum: f64 = mdp.row(x, a).iter().map(|(_, p)| p).sum();
                assert!((sum - 1.0).abs() < 1e-12, "row ({x},{a}) sums to {sum}");
            }
        }
    }

    #[test]
    fn interior_row_is_point_seven_and_three_quarters() {
        let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
        // Cell 45 (1-based) = index 44 = row 4, col 4: fully interior.
        let row = mdp.row(44, 1); // action right
        assert_eq!(row.len(), 5);
        let mut probs: Vec<f64> = row.iter().map(|(_, p)| *p).collect();
        probs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in probs.iter().zip([0.075, 0.075, 0.075, 0.075, 0.7]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(mdp.prob(44, 1, 45), 0.7);
    }

    #[test]
    fn one_by_one_grid_self_loops() {
        let spec = GridWorldSpec { width: 1, height: 1, ..GridWorldSpec::benchmark_10x10() };
        let mdp = build_gridworld(&spec).unwrap();
        for a in 0..5 {
            let row = mdp.row(0, a);
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].0, 0);
            assert!((row[0].1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_row_matches_outcome_enumeration() {
        // 3x3 grid, top-left corner (index 0), action right:
        //   intended right -> 1 with 0.7
        //   left  -> off-grid -> stay 0.075
        //   up    -> off-grid -> stay 0.075
        //   down  -> 3 with 0.075
        //   idle  -> stay 0.075
        let spec = GridWorldSpec { width: 3, height: 3, ..GridWorldSpec::benchmark_10x10() };
        let mdp = build_gridworld(&spec).unwrap();
        let row = mdp.row(0, 1);
        assert_eq!(row.len(), 3);
        for (&(dest, p), (want_dest, want_p)) in
            row.iter().zip([(0usize, 0.225), (1, 0.7), (3, 0.075)])
        {
            assert_eq!(dest, want_dest);
            assert!((p - want_p).abs() < 1e-12, "{p} vs {want_p}");
        }
        let sum: f64 = row.iter().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_translation_invariant_in_the_interior() {
        let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
        // Two interior cells one column apart: rows must match after shifting.
        let (a, b) = (44usize, 45usize);
        for action in 0..5 {
            let ra = mdp.row(a, action);
            let rb = mdp.row(b, action);
            assert_eq!(ra.len(), rb.len());
            for (&(da, pa), &(db, pb)) in ra.iter().zip(rb) {
                assert_eq!(da + 1, db);
                assert!((pa - pb).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn labels_name_their_cell() {
        let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
        let p100 = mdp.aps().index_of("p100").unwrap();
        assert_eq!(mdp.label_of(99), &Symbol::singleton(p100));
        let p46 = mdp.aps().index_of("p46").unwrap();
        assert_eq!(mdp.label_of(45), &Symbol::singleton(p46));

        let spec = GridWorldSpec {
            labeled_cells: Some(vec![9]),
            ..GridWorldSpec { width: 3, height: 3, ..GridWorldSpec::benchmark_10x10() }
        };
        let small = build_gridworld(&spec).unwrap();
        assert!(small.label_of(0).is_empty());
        assert_eq!(small.label_of(8), &Symbol::singleton(0));
    }

    #[test]
    fn out_of_bounds_label_is_rejected() {
        let spec = GridWorldSpec {
            labeled_cells: Some(vec![10]),
            ..GridWorldSpec { width: 3, height: 3, ..GridWorldSpec::benchmark_10x10() }
        };
        assert!(build_gridworld(&spec).is_err());
    }

    #[test]
    fn deterministic_row_always_moves_there() {
        let spec = GenericMdpSpec {
            initial: 0,
            aps: vec!["goal".into()],
            labels: vec![vec![], vec!["goal".into()]],
            transitions: vec![vec![vec![(1, 1.0)]], vec![vec![(1, 1.0)]]],
            action_names: vec![],
        };
        let mdp = spec.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(mdp.sample_step(0, 0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn invalid_action_is_rejected() {
        let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            mdp.sample_step(0, 9, &mut rng),
            Err(Error::InvalidAction { state: 0, action: 9 })
        ));
    }

    #[test]
    fn sampling_matches_the_kernel_row() {
        let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let x = 44;
        let a = 1;
        let n = 1_000_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(mdp.sample_step(x, a, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        for &(dest, p) in mdp.row(x, a) {
            let freq = counts[&dest] as f64 / n as f64;
            assert!((freq - p).abs() < 0.005, "dest {dest}: {freq} vs {p}");
        }
    }

    #[test]
    fn same_seed_gives_identical_trajectories() {
        let mdp = build_gridworld(&GridWorldSpec::benchmark_10x10()).unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = mdp.initial();
            (0..200)
                .map(|i| {
                    x = mdp.sample_step(x, i % 5, &mut rng).unwrap();
                    x
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn grid_spec_roundtrips_through_json() {
        let spec = GridWorldSpec::benchmark_10x10();
        let json = serde_json::to_string(&spec).unwrap();
        let back: GridWorldSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}
