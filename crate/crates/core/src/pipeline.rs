//! Max flow, min cut, paths and token flows over the time-expanded graph of a
//! capacity word.
//!
//! A word `a_1…a_ℓ` over capacity matrices induces a layered graph with one
//! copy `(v, i)` of every vertex per date `i ∈ 0..=ℓ` and an edge
//! `(v, i-1) → (v', i)` of capacity `a_i(v, v')`. Flow questions about the
//! word are classical integral max-flow questions on that graph.
//!
//! ω-capacities are handled in two stages: a pure reachability pass detects a
//! source-target path made of ω-edges only (in which case the flow value is ω
//! and every cut has cost ω); otherwise the set of finite-capacity edges
//! separates source from target, so replacing every ω by `1 + Σ finite
//! capacities` is exact and the solver stays integral.

use crate::mm::{Capacity, CapacityMatrix};
use crate::{Error, Result};
use std::collections::VecDeque;

/// A per-layer set of cut edges; layer `i` holds edges removed from the
/// transition under letter `i+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub layers: Vec<Vec<(usize, usize)>>,
    pub cost: Capacity,
}

/// Explicit trajectories for a finite set of tokens: `positions[t][i]` is the
/// vertex of token `t` at date `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFlow {
    pub horizon: usize,
    pub positions: Vec<Vec<usize>>,
}

impl TokenFlow {
    pub fn empty(horizon: usize) -> TokenFlow {
        TokenFlow {
            horizon,
            positions: Vec::new(),
        }
    }

    pub fn token_count(&self) -> usize {
        self.positions.len()
    }

    /// Number of tokens starting at `v` and ending at `v'`.
    pub fn global_flow(&self, v: usize, end: usize) -> u64 {
        self.positions
            .iter()
            .filter(|p| p[0] == v && p[self.horizon] == end)
            .count() as u64
    }

    /// Per-vertex token counts at a date.
    pub fn profile(&self, date: usize, dim: usize) -> Vec<u64> {
        let mut counts = vec![0u64; dim];
        for p in &self.positions {
            counts[p[date]] += 1;
        }
        counts
    }
}

fn layer_cap(layers: &[&CapacityMatrix], step: usize, v: usize, w: usize) -> Capacity {
    layers[step].get(v, w)
}

/// True iff some path `(from, 0) → (to, ℓ)` uses only edges of the given
/// minimum capacity class. `omega_only` restricts to ω-edges, otherwise any
/// positive capacity is allowed.
fn layered_reach(layers: &[&CapacityMatrix], from: usize, to: usize, omega_only: bool) -> bool {
    if layers.is_empty() {
        return from == to;
    }
    let n = layers[0].dim();
    let mut current = vec![false; n];
    current[from] = true;
    for step in 0..layers.len() {
        let mut next = vec![false; n];
        for v in 0..n {
            if !current[v] {
                continue;
            }
            for w in 0..n {
                let cap = layer_cap(layers, step, v, w);
                let open = if omega_only {
                    cap.is_omega()
                } else {
                    !cap.is_zero()
                };
                if open {
                    next[w] = true;
                }
            }
        }
        current = next;
    }
    current[to]
}

/// True iff a token could travel from `from` to `to` through the word
/// (positive capacity at every step). The empty word admits exactly the
/// length-zero paths `v → v`.
pub fn path_exists(layers: &[&CapacityMatrix], from: usize, to: usize) -> bool {
    layered_reach(layers, from, to, false)
}

/// Extracts one positive-capacity path as a vertex sequence of length
/// `ℓ + 1`, if any exists.
pub fn find_path(layers: &[&CapacityMatrix], from: usize, to: usize) -> Option<Vec<usize>> {
    if layers.is_empty() {
        return (from == to).then(|| vec![from]);
    }
    let n = layers[0].dim();
    // reach[i][v]: (from,0) reaches (v,i).
    let mut reach = vec![vec![false; n]; layers.len() + 1];
    reach[0][from] = true;
    for step in 0..layers.len() {
        for v in 0..n {
            if !reach[step][v] {
                continue;
            }
            for w in 0..n {
                if !layer_cap(layers, step, v, w).is_zero() {
                    reach[step + 1][w] = true;
                }
            }
        }
    }
    if !reach[layers.len()][to] {
        return None;
    }
    // Walk backwards picking the smallest admissible predecessor.
    let mut path = vec![to];
    let mut cur = to;
    for step in (0..layers.len()).rev() {
        let prev = (0..n)
            .find(|&v| reach[step][v] && !layer_cap(layers, step, v, cur).is_zero())
            .expect("reachable layer must have a predecessor");
        path.push(prev);
        cur = prev;
    }
    path.reverse();
    Some(path)
}

/// Standard Dinic max-flow on an explicit graph, used on the time-expanded
/// network. Capacities are finite here; ω is resolved by the callers.
struct Dinic {
    graph: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Dinic {
        Dinic {
            graph: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![-1; nodes],
            iter: vec![0; nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let id = self.to.len();
        self.graph[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.graph[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        id
    }

    fn bfs(&mut self, s: usize) {
        self.level.fill(-1);
        let mut queue = VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &e in &self.graph[v] {
                let w = self.to[e];
                if self.cap[e] > 0 && self.level[w] < 0 {
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: u64) -> u64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.graph[v].len() {
            let e = self.graph[v][self.iter[v]];
            let w = self.to[e];
            if self.cap[e] > 0 && self.level[v] < self.level[w] {
                let d = self.dfs(w, t, f.min(self.cap[e]));
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, u64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph (defines a min cut).
    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        let mut queue = VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &e in &self.graph[v] {
                let w = self.to[e];
                if self.cap[e] > 0 && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }
}

struct LayeredNet {
    dinic: Dinic,
    edge_ids: Vec<Vec<(usize, usize, usize)>>, // per step: (v, w, dinic edge id)
    n: usize,
    steps: usize,
}

/// Builds the finitized time-expanded network. `bound` replaces ω.
fn build_net(layers: &[&CapacityMatrix], bound: u64) -> LayeredNet {
    let n = layers[0].dim();
    let steps = layers.len();
    let node = |v: usize, i: usize| i * n + v;
    let mut dinic = Dinic::new(n * (steps + 1));
    let mut edge_ids = Vec::with_capacity(steps);
    for (i, layer) in layers.iter().enumerate() {
        let mut ids = Vec::new();
        for v in 0..n {
            for w in 0..n {
                let cap = match layer.get(v, w) {
                    Capacity::Finite(0) => continue,
                    Capacity::Finite(k) => k,
                    Capacity::Omega => bound,
                };
                let id = dinic.add_edge(node(v, i), node(w, i + 1), cap);
                ids.push((v, w, id));
            }
        }
        edge_ids.push(ids);
    }
    LayeredNet {
        dinic,
        edge_ids,
        n,
        steps,
    }
}

fn finite_bound(layers: &[&CapacityMatrix]) -> u64 {
    let mut sum: u64 = 1;
    for layer in layers {
        for (_, _, cap) in layer.entries() {
            if let Some(k) = cap.finite() {
                sum = sum.saturating_add(k);
            }
        }
    }
    sum
}

/// Maximal integral flow value from `(from, 0)` to `(to, ℓ)`.
pub fn max_flow_word(layers: &[&CapacityMatrix], from: usize, to: usize) -> Capacity {
    if layers.is_empty() {
        return if from == to {
            Capacity::Omega
        } else {
            Capacity::ZERO
        };
    }
    if layered_reach(layers, from, to, true) {
        return Capacity::Omega;
    }
    let bound = finite_bound(layers);
    let mut net = build_net(layers, bound);
    let n = net.n;
    let value = net.dinic.max_flow(from, net.steps * n + to);
    Capacity::Finite(value)
}

/// A cut of minimal cost; its cost always equals [`max_flow_word`].
pub fn min_cut_word(layers: &[&CapacityMatrix], from: usize, to: usize) -> Cut {
    if layers.is_empty() {
        return Cut {
            layers: Vec::new(),
            cost: if from == to {
                Capacity::Omega
            } else {
                Capacity::ZERO
            },
        };
    }
    if layered_reach(layers, from, to, true) {
        // Every cut is ω-priced; cut all positive first-step edges out of the
        // source so the result is still a valid cut.
        let n = layers[0].dim();
        let mut first = Vec::new();
        for w in 0..n {
            if !layers[0].get(from, w).is_zero() {
                first.push((from, w));
            }
        }
        let mut cut_layers = vec![Vec::new(); layers.len()];
        cut_layers[0] = first;
        return Cut {
            layers: cut_layers,
            cost: Capacity::Omega,
        };
    }
    let bound = finite_bound(layers);
    let mut net = build_net(layers, bound);
    let n = net.n;
    net.dinic.max_flow(from, net.steps * n + to);
    let reach = net.dinic.residual_reachable(from);
    let mut cut_layers = Vec::with_capacity(net.steps);
    let mut cost = Capacity::ZERO;
    for (i, ids) in net.edge_ids.iter().enumerate() {
        let mut cut = Vec::new();
        for &(v, w, _) in ids {
            if reach[i * n + v] && !reach[(i + 1) * n + w] {
                cut.push((v, w));
                cost = cost.add(layers[i].get(v, w));
            }
        }
        cut_layers.push(cut);
    }
    Cut {
        layers: cut_layers,
        cost,
    }
}

/// Checks that every source-target path crosses the cut.
pub fn validate_cut(layers: &[&CapacityMatrix], from: usize, to: usize, cut: &Cut) -> bool {
    if layers.is_empty() {
        return from != to;
    }
    let n = layers[0].dim();
    if cut.layers.len() != layers.len() {
        return false;
    }
    // Reachability avoiding cut edges must not hit the target.
    let mut current = vec![false; n];
    current[from] = true;
    for step in 0..layers.len() {
        let mut next = vec![false; n];
        for v in 0..n {
            if !current[v] {
                continue;
            }
            for w in 0..n {
                if layer_cap(layers, step, v, w).is_zero() {
                    continue;
                }
                if cut.layers[step].contains(&(v, w)) {
                    continue;
                }
                next[w] = true;
            }
        }
        current = next;
    }
    !current[to]
}

/// True iff every per-step, per-edge token count respects the capacities.
pub fn validate_token_flow(layers: &[&CapacityMatrix], flow: &TokenFlow) -> Result<bool> {
    if flow.horizon != layers.len() {
        return Err(Error::HorizonMismatch {
            expected: layers.len(),
            got: flow.horizon,
        });
    }
    if layers.is_empty() {
        return Ok(true);
    }
    let n = layers[0].dim();
    for p in &flow.positions {
        if p.len() != flow.horizon + 1 || p.iter().any(|&v| v >= n) {
            return Ok(false);
        }
    }
    for step in 0..layers.len() {
        let mut used = vec![0u64; n * n];
        for p in &flow.positions {
            used[p[step] * n + p[step + 1]] += 1;
        }
        for v in 0..n {
            for w in 0..n {
                let count = used[v * n + w];
                if count == 0 {
                    continue;
                }
                match layer_cap(layers, step, v, w) {
                    Capacity::Omega => {}
                    Capacity::Finite(k) => {
                        if count > k {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Extracts a token flow of exactly `value` tokens from `from` to `to` by
/// peeling source-target paths off an integral max flow.
pub fn extract_token_flow(
    layers: &[&CapacityMatrix],
    from: usize,
    to: usize,
    value: u64,
) -> Result<TokenFlow> {
    if value == 0 {
        return Ok(TokenFlow::empty(layers.len()));
    }
    if layers.is_empty() {
        return Ok(TokenFlow {
            horizon: 0,
            positions: vec![vec![from]; value as usize],
        });
    }
    let max = max_flow_word(layers, from, to);
    if let Capacity::Finite(m) = max {
        if value > m {
            return Err(Error::InfeasibleValue {
                requested: value,
                max: m,
            });
        }
    }
    // A finitized run with bound ≥ value is enough to carry `value` tokens.
    let bound = finite_bound(layers).max(value);
    let mut net = build_net(layers, bound);
    let n = net.n;
    let total = net.dinic.max_flow(from, net.steps * n + to);
    debug_assert!(total >= value);
    // Per-step flow counts from the residual capacities.
    let mut flow_count: Vec<Vec<u64>> = Vec::with_capacity(net.steps);
    for (i, ids) in net.edge_ids.iter().enumerate() {
        let mut counts = vec![0u64; n * n];
        for &(v, w, id) in ids {
            let original = match layers[i].get(v, w) {
                Capacity::Finite(k) => k,
                Capacity::Omega => bound,
            };
            counts[v * n + w] = original - net.dinic.cap[id];
        }
        flow_count.push(counts);
    }
    // In a layered DAG flow decomposes into exactly `total` unit paths; peel
    // the first `value` of them.
    let mut positions = Vec::with_capacity(value as usize);
    for _ in 0..value {
        let mut path = vec![from];
        let mut cur = from;
        for counts in flow_count.iter_mut() {
            let next = (0..n)
                .find(|&w| counts[cur * n + w] > 0)
                .expect("flow conservation yields a successor");
            counts[cur * n + next] -= 1;
            path.push(next);
            cur = next;
        }
        debug_assert_eq!(cur, to);
        positions.push(path);
    }
    Ok(TokenFlow {
        horizon: layers.len(),
        positions,
    })
}
