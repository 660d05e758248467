//! Computing the exact optimal value when the instance is bounded.
//!
//! A sequential flow of value `C` exists iff the all-on-source
//! `C`-configuration reaches the all-on-target one under the one-step
//! relation, where one step under letter `a` is an integral transportation
//! problem: a max-flow instance with a fresh super-source feeding the current
//! configuration and a fresh super-target draining the next one. The optimum
//! is found by a search over `C`: a doubling search by default, or the
//! literal binary search from the configured bound under
//! [`SolveOptions::paper_bound`].

use crate::flow::FlowSemigroup;
use crate::mm::{AbstractMatrix, Capacity, CapacityMatrix};
use crate::qualitative::{
    check_fair_unbounded, check_regular_unbounded, Nfa, Strategy, Verdict,
};
use crate::semigroup::FiniteSemigroup;
use crate::summary::SummaryContext;
use crate::{pipeline, Error, Result};
use num_bigint::BigUint;
use std::collections::{HashMap, HashSet, VecDeque};

/// All per-vertex count vectors of the given total.
pub fn enumerate_configs(dim: usize, total: u64) -> Vec<Vec<u64>> {
    fn rec(dim: usize, total: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if prefix.len() == dim - 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for take in 0..=total {
            prefix.push(take);
            rec(dim, total - take, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, total, &mut Vec::new(), &mut out);
    out
}

/// One-step relation between configurations: true iff some letter admits an
/// integral flow moving exactly the `x`-profile onto the `y`-profile.
pub fn one_step(letters: &[(String, CapacityMatrix)], x: &[u64], y: &[u64]) -> Result<bool> {
    let left: u64 = x.iter().sum();
    let right: u64 = y.iter().sum();
    if left != right {
        return Err(Error::ConfigSumMismatch { left, right });
    }
    Ok(letters
        .iter()
        .any(|(_, a)| one_step_letter(a, x, y, left)))
}

fn one_step_letter(a: &CapacityMatrix, x: &[u64], y: &[u64], c: u64) -> bool {
    if c == 0 {
        return true;
    }
    let dim = a.dim();
    let source = dim;
    let target = dim + 1;
    let mut feed = CapacityMatrix::zero(dim + 2);
    let mut mid = CapacityMatrix::zero(dim + 2);
    let mut drain = CapacityMatrix::zero(dim + 2);
    for v in 0..dim {
        feed.set(source, v, Capacity::Finite(x[v]));
        drain.set(v, target, Capacity::Finite(y[v]));
        for w in 0..dim {
            mid.set(v, w, a.get(v, w));
        }
    }
    pipeline::max_flow_word(&[&feed, &mid, &drain], source, target) == Capacity::Finite(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachMode {
    Bfs,
    Dichotomic,
}

/// Search state: a configuration paired with an automaton state (a universal
/// single-state automaton when no language constraint applies).
type State = (Vec<u64>, usize);

struct ScalarSearch<'a> {
    letters: &'a [(String, CapacityMatrix)],
    dim: usize,
    c: u64,
    /// transitions[q] = (letter index, q')
    transitions: Vec<Vec<(usize, usize)>>,
    state_count: usize,
}

impl<'a> ScalarSearch<'a> {
    fn new(letters: &'a [(String, CapacityMatrix)], dim: usize, c: u64, nfa: Option<&Nfa>) -> Self {
        let (state_count, transitions) = compile_nfa(letters, nfa);
        ScalarSearch {
            letters,
            dim,
            c,
            transitions,
            state_count,
        }
    }

    /// All successor states, deduplicated: per letter, a row-by-row token
    /// distribution with partial-profile dedup.
    fn successors(&self, state: &State) -> Vec<State> {
        let (config, q) = state;
        let mut out: HashSet<State> = HashSet::new();
        for &(letter, q2) in &self.transitions[*q] {
            let a = &self.letters[letter].1;
            let mut partials: HashSet<Vec<u64>> = HashSet::new();
            partials.insert(vec![0; self.dim]);
            for v in 0..self.dim {
                if config[v] == 0 {
                    continue;
                }
                let caps: Vec<Capacity> = (0..self.dim).map(|w| a.get(v, w)).collect();
                let mut next: HashSet<Vec<u64>> = HashSet::new();
                for partial in &partials {
                    distribute(&caps, config[v], partial, &mut next);
                }
                partials = next;
                if partials.is_empty() {
                    break;
                }
            }
            for profile in partials {
                out.insert((profile, q2));
            }
        }
        let mut out: Vec<State> = out.into_iter().collect();
        out.sort();
        out
    }

    fn step_exists(&self, from: &State, to: &State) -> bool {
        self.transitions[from.1].iter().any(|&(letter, q2)| {
            q2 == to.1 && one_step_letter(&self.letters[letter].1, &from.0, &to.0, self.c)
        })
    }

    fn all_states(&self) -> Vec<State> {
        let mut out = Vec::new();
        for config in enumerate_configs(self.dim, self.c) {
            for q in 0..self.state_count {
                out.push((config.clone(), q));
            }
        }
        out
    }

    fn state_space_bound(&self) -> u64 {
        // Number of configurations times automaton states, saturated.
        let mut count: u128 = 1;
        for i in 0..self.dim as u128 - 1 {
            count = count.saturating_mul(self.c as u128 + 1 + i) / (i + 1);
        }
        u64::try_from(count.saturating_mul(self.state_count as u128)).unwrap_or(u64::MAX)
    }
}

fn compile_nfa(
    letters: &[(String, CapacityMatrix)],
    nfa: Option<&Nfa>,
) -> (usize, Vec<Vec<(usize, usize)>>) {
    match nfa {
        None => {
            let all: Vec<(usize, usize)> = (0..letters.len()).map(|i| (i, 0)).collect();
            (1, vec![all])
        }
        Some(nfa) => {
            let mut transitions = vec![Vec::new(); nfa.states];
            for (q, name, q2) in &nfa.transitions {
                let letter = letters
                    .iter()
                    .position(|(n, _)| n == name)
                    .expect("validated letter");
                transitions[*q].push((letter, *q2));
            }
            (nfa.states, transitions)
        }
    }
}

/// Spreads `amount` tokens from one vertex over its outgoing edges, bounded
/// by the per-edge capacities, accumulating the resulting partial profiles.
fn distribute(caps: &[Capacity], amount: u64, partial: &[u64], out: &mut HashSet<Vec<u64>>) {
    fn rec(
        caps: &[Capacity],
        w: usize,
        left: u64,
        acc: &mut Vec<u64>,
        out: &mut HashSet<Vec<u64>>,
    ) {
        if w == caps.len() {
            if left == 0 {
                out.insert(acc.clone());
            }
            return;
        }
        let max_here = match caps[w] {
            Capacity::Omega => left,
            Capacity::Finite(k) => k.min(left),
        };
        // Skip remaining capacity check: later edges may absorb the rest.
        for take in 0..=max_here {
            acc[w] += take;
            rec(caps, w + 1, left - take, acc, out);
            acc[w] -= take;
        }
    }
    let mut acc = partial.to_vec();
    rec(caps, 0, amount, &mut acc, out);
}

/// Breadth-first reachability from `starts` to any state satisfying
/// `is_target`, within an optional step horizon.
fn bfs_reach(
    search: &ScalarSearch<'_>,
    starts: &[State],
    is_target: impl Fn(&State) -> bool,
    l_max: Option<u64>,
) -> bool {
    let horizon = l_max
        .unwrap_or(u64::MAX)
        .min(search.state_space_bound());
    if starts.iter().any(|s| is_target(s)) {
        return true;
    }
    let mut visited: HashSet<State> = starts.iter().cloned().collect();
    let mut frontier: VecDeque<(State, u64)> = starts.iter().map(|s| (s.clone(), 0)).collect();
    while let Some((state, dist)) = frontier.pop_front() {
        if dist >= horizon {
            continue;
        }
        for next in search.successors(&state) {
            if visited.contains(&next) {
                continue;
            }
            if is_target(&next) {
                return true;
            }
            visited.insert(next.clone());
            frontier.push_back((next, dist + 1));
        }
    }
    false
}

/// The dichotomic exact-length check: splits the length at the midpoint and
/// enumerates the middle configuration, with memoization on
/// `(from, to, length)`.
fn dichotomic_exact(
    search: &ScalarSearch<'_>,
    mids: &[State],
    from: &State,
    to: &State,
    len: u64,
    memo: &mut HashMap<(State, State, u64), bool>,
) -> bool {
    if len == 0 {
        return from == to;
    }
    if len == 1 {
        return search.step_exists(from, to);
    }
    let key = (from.clone(), to.clone(), len);
    if let Some(&cached) = memo.get(&key) {
        return cached;
    }
    let mut found = false;
    for mid in mids {
        if dichotomic_exact(search, mids, from, mid, len.div_ceil(2), memo)
            && dichotomic_exact(search, mids, mid, to, len / 2, memo)
        {
            found = true;
            break;
        }
    }
    memo.insert(key, found);
    found
}

/// Reachability between two same-sum configurations within `l_max` steps
/// (both modes agree; the dichotomic mode mirrors the midpoint recursion).
pub fn reach(
    letters: &[(String, CapacityMatrix)],
    from: &[u64],
    to: &[u64],
    l_max: Option<u64>,
    mode: ReachMode,
) -> Result<bool> {
    let left: u64 = from.iter().sum();
    let right: u64 = to.iter().sum();
    if left != right {
        return Err(Error::ConfigSumMismatch { left, right });
    }
    let dim = from.len();
    let search = ScalarSearch::new(letters, dim, left, None);
    let start = (from.to_vec(), 0usize);
    let goal = (to.to_vec(), 0usize);
    Ok(match mode {
        ReachMode::Bfs => bfs_reach(&search, &[start], |s| *s == goal, l_max),
        ReachMode::Dichotomic => {
            let horizon = l_max.unwrap_or(u64::MAX).min(search.state_space_bound());
            let mids = search.all_states();
            let mut memo = HashMap::new();
            (0..=horizon)
                .any(|len| dichotomic_exact(&search, &mids, &start, &goal, len, &mut memo))
        }
    })
}

/// Does a sequential flow of value `c` exist (over words accepted by the NFA,
/// when given)?
pub fn exists_flow_of_value(
    letters: &[(String, CapacityMatrix)],
    dim: usize,
    source: usize,
    target: usize,
    c: u64,
    nfa: Option<&Nfa>,
    mode: ReachMode,
) -> Result<bool> {
    if c == 0 {
        return Ok(true);
    }
    let search = ScalarSearch::new(letters, dim, c, nfa);
    let mut start_config = vec![0u64; dim];
    start_config[source] = c;
    let mut goal_config = vec![0u64; dim];
    goal_config[target] = c;
    let starts: Vec<State> = match nfa {
        None => vec![(start_config, 0)],
        Some(nfa) => nfa
            .initial
            .iter()
            .map(|&q| (start_config.clone(), q))
            .collect(),
    };
    let finals: Vec<usize> = match nfa {
        None => vec![0],
        Some(nfa) => nfa.finals.clone(),
    };
    Ok(match mode {
        ReachMode::Bfs => bfs_reach(
            &search,
            &starts,
            |s| s.0 == goal_config && finals.contains(&s.1),
            None,
        ),
        ReachMode::Dichotomic => {
            let horizon = search.state_space_bound();
            let mids = search.all_states();
            let mut memo = HashMap::new();
            let mut goals = Vec::new();
            for &qf in &finals {
                goals.push((goal_config.clone(), qf));
            }
            starts.iter().any(|s| {
                goals.iter().any(|g| {
                    // Words must be nonempty: lengths from 1.
                    (1..=horizon)
                        .any(|len| dichotomic_exact(&search, &mids, s, g, len, &mut memo))
                })
            })
        }
    })
}

/// Fair variant: token classes, one per requested edge, each moving `k`
/// tokens from its source to its target through a shared capacity budget.
pub fn exists_fair_flow(
    letters: &[(String, CapacityMatrix)],
    dim: usize,
    classes: &[(usize, usize)],
    k: u64,
    nfa: Option<&Nfa>,
) -> Result<bool> {
    if classes.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    if k == 0 {
        return Ok(true);
    }
    let (_, transitions) = compile_nfa(letters, nfa);
    let start_cfg: Vec<Vec<u64>> = classes
        .iter()
        .map(|&(s, _)| {
            let mut c = vec![0u64; dim];
            c[s] = k;
            c
        })
        .collect();
    let goal_cfg: Vec<Vec<u64>> = classes
        .iter()
        .map(|&(_, t)| {
            let mut c = vec![0u64; dim];
            c[t] = k;
            c
        })
        .collect();
    let starts: Vec<(Vec<Vec<u64>>, usize)> = match nfa {
        None => vec![(start_cfg.clone(), 0)],
        Some(nfa) => nfa
            .initial
            .iter()
            .map(|&q| (start_cfg.clone(), q))
            .collect(),
    };
    let finals: Vec<usize> = match nfa {
        None => vec![0],
        Some(nfa) => nfa.finals.clone(),
    };
    let mut visited: HashSet<(Vec<Vec<u64>>, usize)> = starts.iter().cloned().collect();
    let mut frontier: VecDeque<(Vec<Vec<u64>>, usize)> = starts.into_iter().collect();
    let is_goal = |state: &(Vec<Vec<u64>>, usize)| {
        state.0 == goal_cfg && finals.contains(&state.1)
    };
    if visited.iter().any(|s| is_goal(s)) {
        return Ok(true);
    }
    while let Some((cfg, q)) = frontier.pop_front() {
        for &(letter, q2) in &transitions[q] {
            for next in colored_successors(&letters[letter].1, &cfg) {
                let state = (next, q2);
                if visited.contains(&state) {
                    continue;
                }
                if is_goal(&state) {
                    return Ok(true);
                }
                visited.insert(state.clone());
                frontier.push_back(state);
            }
        }
    }
    Ok(false)
}

/// All colored successor configurations of one letter step: every class
/// routes its own tokens, all classes sharing the letter's capacities.
fn colored_successors(a: &CapacityMatrix, cfg: &[Vec<u64>]) -> Vec<Vec<Vec<u64>>> {
    let dim = a.dim();
    // Remaining capacity per edge is shared across classes, so enumerate
    // class splits against a mutable budget.
    fn rec(
        a: &CapacityMatrix,
        cfg: &[Vec<u64>],
        class: usize,
        budget: &mut Vec<Option<u64>>,
        acc: &mut Vec<Vec<u64>>,
        out: &mut Vec<Vec<Vec<u64>>>,
    ) {
        let dim = a.dim();
        if class == cfg.len() {
            out.push(acc.clone());
            return;
        }
        // Enumerate class flows row by row.
        fn rows(
            a: &CapacityMatrix,
            counts: &[u64],
            v: usize,
            budget: &mut Vec<Option<u64>>,
            profile: &mut Vec<u64>,
            done: &mut dyn FnMut(&mut Vec<Option<u64>>, &Vec<u64>),
        ) {
            let dim = a.dim();
            if v == dim {
                done(budget, profile);
                return;
            }
            if counts[v] == 0 {
                rows(a, counts, v + 1, budget, profile, done);
                return;
            }
            fn cells(
                a: &CapacityMatrix,
                counts: &[u64],
                v: usize,
                w: usize,
                left: u64,
                budget: &mut Vec<Option<u64>>,
                profile: &mut Vec<u64>,
                done: &mut dyn FnMut(&mut Vec<Option<u64>>, &Vec<u64>),
            ) {
                let dim = a.dim();
                if w == dim {
                    if left == 0 {
                        rows(a, counts, v + 1, budget, profile, done);
                    }
                    return;
                }
                let cap = match budget[v * dim + w] {
                    None => left,
                    Some(b) => b.min(left),
                };
                for take in 0..=cap {
                    if let Some(b) = &mut budget[v * dim + w] {
                        *b -= take;
                    }
                    profile[w] += take;
                    cells(a, counts, v, w + 1, left - take, budget, profile, done);
                    profile[w] -= take;
                    if let Some(b) = &mut budget[v * dim + w] {
                        *b += take;
                    }
                }
            }
            cells(a, counts, v, 0, counts[v], budget, profile, done);
        }
        let counts = cfg[class].clone();
        let mut profile = vec![0u64; dim];
        let mut done = |budget: &mut Vec<Option<u64>>, profile: &Vec<u64>| {
            acc.push(profile.clone());
            rec(a, cfg, class + 1, budget, acc, out);
            acc.pop();
        };
        rows(a, &counts, 0, budget, &mut profile, &mut done);
    }
    let mut budget: Vec<Option<u64>> = (0..dim * dim)
        .map(|i| match a.get(i / dim, i % dim) {
            Capacity::Omega => None,
            Capacity::Finite(k) => Some(k),
        })
        .collect();
    let mut out = Vec::new();
    rec(a, cfg, 0, &mut budget, &mut Vec::new(), &mut out);
    out.sort();
    out.dedup();
    out
}

/// Options for the full solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub strategy: Strategy,
    pub mode: ReachMode,
    pub paper_bound: bool,
    pub edges: Option<Vec<(usize, usize)>>,
    pub nfa: Option<Nfa>,
    pub closure_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            strategy: Strategy::Closure,
            mode: ReachMode::Bfs,
            paper_bound: false,
            edges: None,
            nfa: None,
            closure_limit: crate::flow::DEFAULT_CLOSURE_LIMIT,
        }
    }
}

/// Result of the full solve: the optimum plus the qualitative witness when
/// unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solved {
    Unbounded { expression: crate::flow::SharpExpr },
    Bounded { value: u64 },
}

/// The binary search from Algorithm 2 semantics: maintains
/// `optimum ∈ [m, M-1]` and halves the interval with one feasibility probe
/// per step.
pub fn binary_search_optimum(
    m_upper: BigUint,
    mut exists: impl FnMut(u64) -> Result<bool>,
) -> Result<u64> {
    let mut low = BigUint::from(0u32);
    let mut high = m_upper;
    while high > &low + 1u32 {
        let c: BigUint = (&low + &high + 1u32) >> 1;
        let probe = u64::try_from(&c).map_err(|_| Error::ValueOutOfRange(c.clone()))?;
        if exists(probe)? {
            low = c;
        } else {
            high = c;
        }
    }
    u64::try_from(&low).map_err(|_| Error::ValueOutOfRange(low.clone()))
}

/// Doubling search for the largest feasible value; must agree with
/// [`binary_search_optimum`] from any sound upper bound.
fn doubling_optimum(mut exists: impl FnMut(u64) -> Result<bool>) -> Result<u64> {
    if !exists(1)? {
        return Ok(0);
    }
    let mut lo: u64 = 1;
    loop {
        let next = lo
            .checked_mul(2)
            .ok_or_else(|| Error::ValueOutOfRange(BigUint::from(lo) * 2u32))?;
        if exists(next)? {
            lo = next;
        } else {
            break;
        }
    }
    let mut hi = lo * 2;
    while hi > lo + 1 {
        let mid = lo + (hi - lo) / 2;
        if exists(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The configured worst-case flow bound `K · n^(n² · H)` with `H` the summary
/// height bound evaluated for the instance's flow semigroup.
pub fn configured_flow_bound(
    cap_letters: &[(String, CapacityMatrix)],
    abs_letters: &[(String, AbstractMatrix)],
    closure_limit: usize,
) -> Result<BigUint> {
    let k = cap_letters
        .iter()
        .map(|(_, m)| m.max_finite())
        .max()
        .unwrap_or(0);
    if k == 0 {
        return Ok(BigUint::from(0u32));
    }
    let dim = abs_letters[0].1.dim();
    let closure = FlowSemigroup::generate_with_limit(abs_letters, closure_limit)?;
    let elements: Vec<Vec<u8>> = closure.elements().iter().map(|m| m.encode()).collect();
    let semigroup = FiniteSemigroup::from_elements(elements, |a, b| {
        AbstractMatrix::decode(dim, a)
            .product(&AbstractMatrix::decode(dim, b))
            .encode()
    });
    let ctx = SummaryContext::new(&semigroup, crate::summary::DEFAULT_RAMSEY_STATE_BUDGET);
    let plain_height = ctx.summary_height_bound().ceil() as u64;
    let sharp_height = (dim * dim) as u64 * plain_height;
    let exponent = u32::try_from(sharp_height)
        .map_err(|_| Error::ValueOutOfRange(BigUint::from(sharp_height)))?;
    Ok(BigUint::from(k) * BigUint::from(dim).pow(exponent))
}

/// Full solve: qualitative stage first, then the value search when bounded.
pub fn optimal_value(
    cap_letters: &[(String, CapacityMatrix)],
    abs_letters: &[(String, AbstractMatrix)],
    dim: usize,
    source: usize,
    target: usize,
    opts: &SolveOptions,
) -> Result<Solved> {
    let edges = opts
        .edges
        .clone()
        .unwrap_or_else(|| vec![(source, target)]);
    let verdict = match &opts.nfa {
        Some(nfa) => check_regular_unbounded(abs_letters, nfa, &edges, opts.closure_limit)?,
        None => check_fair_unbounded(abs_letters, &edges, opts.strategy, opts.closure_limit)?,
    };
    if let Verdict::Unbounded { expression, .. } = verdict {
        return Ok(Solved::Unbounded { expression });
    }

    let fair = opts.edges.is_some();
    let mut exists = |c: u64| -> Result<bool> {
        if fair {
            exists_fair_flow(cap_letters, dim, &edges, c, opts.nfa.as_ref())
        } else {
            exists_flow_of_value(
                cap_letters,
                dim,
                source,
                target,
                c,
                opts.nfa.as_ref(),
                opts.mode,
            )
        }
    };
    let value = if opts.paper_bound {
        let bound = configured_flow_bound(cap_letters, abs_letters, opts.closure_limit)?;
        binary_search_optimum(bound + 1u32, &mut exists)?
    } else {
        doubling_optimum(&mut exists)?
    };
    Ok(Solved::Bounded { value })
}
