//! Turns a derivation expression into a concrete capacity word and an
//! explicit token flow witnessing its ω-entries.
//!
//! For a target count `N`, the construction returns a word `w` and a token
//! flow over `w` such that every pair carrying ω in the expression's value
//! transports at least `N` tokens end to end, and every pair with positive
//! value has a path through `w`. It follows the inductive structure of the
//! expression:
//!
//! - a generator leaf is the single-letter word with tokens straight across
//!   its ω-edges;
//! - a product concatenates realizations of its factors, stitching the
//!   selected tokens of the left factor onto tokens of the right factor at a
//!   shared intermediate vertex;
//! - an iteration `e♯` of an unstable idempotent is routed through the chain
//!   `e · e₁♯ ⋯ e_m♯ · e` of simple unstable idempotents below `e`. Each
//!   `e_i♯` is realized by repeating `e`'s word: within one repetition a
//!   fresh token is threaded along a path for the 1-bridge by borrowing the
//!   trajectory slots of at most two deleted tokens, and stacking repetitions
//!   moves one token per round across the bridge while the rest wait on the
//!   ω-loops.
//!
//! Token counts are tracked per demanded pair rather than as one uniform
//! budget, so nested iterations stay desk-sized; the per-pair counts are
//! bounded by the uniform budgets of the inductive argument.

use crate::flow::{sharp, unstable_loop_pairs, SharpExpr};
use crate::mm::{AbstractMatrix, CapacityMatrix, Mm};
use crate::pipeline::{find_path, TokenFlow};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Required token count per (start, end) pair.
type Demand = BTreeMap<(usize, usize), u64>;

/// A word (letter indices) plus token trajectories over it; tokens match the
/// demanded pairs exactly.
#[derive(Debug, Clone)]
struct Realization {
    word: Vec<usize>,
    tokens: Vec<Vec<usize>>,
}

impl Realization {
    fn take_tokens(&mut self, start: usize, end: usize, count: u64) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let horizon = self.word.len();
        let mut i = 0;
        while i < self.tokens.len() && (out.len() as u64) < count {
            if self.tokens[i][0] == start && self.tokens[i][horizon] == end {
                out.push(self.tokens.swap_remove(i));
            } else {
                i += 1;
            }
        }
        assert_eq!(out.len() as u64, count, "realization owes {count} tokens {start}->{end}");
        out
    }
}

/// Realizes a derivation expression: a capacity word (as letter names) and a
/// token flow carrying at least `n` tokens along every ω-pair of the
/// expression's value. `n = 0` yields the structural word with no tokens.
pub fn realize_flow(
    letters: &[(String, CapacityMatrix)],
    expr: &SharpExpr,
    n: u64,
) -> Result<(Vec<String>, TokenFlow)> {
    let realizer = Realizer {
        letters,
        abs: letters.iter().map(|(_, m)| m.abstracted()).collect(),
    };
    let value = realizer.eval(expr)?;
    let mut demand = Demand::new();
    if n > 0 {
        for (v, w, entry) in value.entries() {
            if entry == Mm::Omega {
                demand.insert((v, w), n);
            }
        }
    }
    let result = realizer.realize(expr, &demand)?;
    let word = result.word.iter().map(|&i| letters[i].0.clone()).collect();
    let flow = TokenFlow {
        horizon: result.word.len(),
        positions: result.tokens,
    };
    Ok((word, flow))
}

struct Realizer<'a> {
    letters: &'a [(String, CapacityMatrix)],
    abs: Vec<AbstractMatrix>,
}

/// A factor of the decomposition chain for an iteration node.
enum Factor<'e> {
    Expr(&'e SharpExpr),
    SimpleSharp {
        child: &'e SharpExpr,
        part_sharp: AbstractMatrix,
        bridge: (usize, usize),
    },
}

impl<'a> Realizer<'a> {
    fn eval(&self, expr: &SharpExpr) -> Result<AbstractMatrix> {
        match expr {
            SharpExpr::Gen(name) => self
                .letters
                .iter()
                .position(|(n, _)| n == name)
                .map(|i| self.abs[i].clone())
                .ok_or_else(|| Error::UnknownLetter(name.clone())),
            SharpExpr::Product(a, b) => Ok(self.eval(a)?.product(&self.eval(b)?)),
            SharpExpr::Sharp(child) => {
                let e = self.eval(child)?;
                if !e.is_idempotent() {
                    return Err(Error::MalformedExpression(format!(
                        "iteration applied to the non-idempotent value of {child}"
                    )));
                }
                Ok(sharp(&e).expect("idempotent"))
            }
        }
    }

    fn factor_value(&self, f: &Factor<'_>) -> Result<AbstractMatrix> {
        match f {
            Factor::Expr(e) => self.eval(e),
            Factor::SimpleSharp { part_sharp, .. } => Ok(part_sharp.clone()),
        }
    }

    fn realize(&self, expr: &SharpExpr, demand: &Demand) -> Result<Realization> {
        match expr {
            SharpExpr::Gen(name) => {
                let letter = self
                    .letters
                    .iter()
                    .position(|(n, _)| n == name)
                    .ok_or_else(|| Error::UnknownLetter(name.clone()))?;
                let mut tokens = Vec::new();
                for (&(v, w), &count) in demand {
                    debug_assert_eq!(self.abs[letter].get(v, w), Mm::Omega);
                    for _ in 0..count {
                        tokens.push(vec![v, w]);
                    }
                }
                Ok(Realization {
                    word: vec![letter],
                    tokens,
                })
            }
            SharpExpr::Product(a, b) => {
                let left_value = self.eval(a)?;
                let right_value = self.eval(b)?;
                self.realize_product(
                    &left_value,
                    &right_value,
                    demand,
                    |d| self.realize(a, d),
                    |d| self.realize(b, d),
                )
            }
            SharpExpr::Sharp(child) => {
                let e = self.eval(child)?;
                if !e.is_idempotent() {
                    return Err(Error::MalformedExpression(format!(
                        "iteration applied to the non-idempotent value of {child}"
                    )));
                }
                let es = sharp(&e).expect("idempotent");
                if es == e {
                    return self.realize(child, demand);
                }
                let mut factors: Vec<Factor<'_>> = vec![Factor::Expr(child)];
                for (part, bridge) in crate::flow::decompose_unstable(&e)
                    .expect("unstable idempotent")
                    .into_iter()
                    .zip(unstable_loop_pairs(&e))
                {
                    factors.push(Factor::SimpleSharp {
                        child,
                        part_sharp: sharp(&part).expect("simple parts are idempotent"),
                        bridge,
                    });
                }
                factors.push(Factor::Expr(child));
                self.realize_chain(&factors, demand)
            }
        }
    }

    /// Realizes a left-associated product chain of factors.
    fn realize_chain(&self, factors: &[Factor<'_>], demand: &Demand) -> Result<Realization> {
        if factors.len() == 1 {
            return self.realize_factor(&factors[0], demand);
        }
        let (last, init) = factors.split_last().unwrap();
        let mut left_value = self.factor_value(&init[0])?;
        for f in &init[1..] {
            left_value = left_value.product(&self.factor_value(f)?);
        }
        let right_value = self.factor_value(last)?;
        self.realize_product(
            &left_value,
            &right_value,
            demand,
            |d| self.realize_chain(init, d),
            |d| self.realize_factor(last, d),
        )
    }

    fn realize_factor(&self, factor: &Factor<'_>, demand: &Demand) -> Result<Realization> {
        match factor {
            Factor::Expr(e) => self.realize(e, demand),
            Factor::SimpleSharp {
                child,
                part_sharp,
                bridge,
            } => self.realize_simple_sharp(child, part_sharp, *bridge, demand),
        }
    }

    /// Splits a demand across a product: each demanded ω-pair is routed
    /// through the first intermediate vertex where both factors carry ω, and
    /// the matching tokens are stitched together.
    fn realize_product(
        &self,
        left_value: &AbstractMatrix,
        right_value: &AbstractMatrix,
        demand: &Demand,
        realize_left: impl FnOnce(&Demand) -> Result<Realization>,
        realize_right: impl FnOnce(&Demand) -> Result<Realization>,
    ) -> Result<Realization> {
        let dim = left_value.dim();
        let mut left_demand = Demand::new();
        let mut right_demand = Demand::new();
        let mut routes: Vec<((usize, usize), usize, u64)> = Vec::new();
        for (&(v, w), &count) in demand {
            let via = (0..dim)
                .find(|&k| {
                    left_value.get(v, k) == Mm::Omega && right_value.get(k, w) == Mm::Omega
                })
                .expect("an ω-product entry has an ω-through vertex");
            *left_demand.entry((v, via)).or_insert(0) += count;
            *right_demand.entry((via, w)).or_insert(0) += count;
            routes.push(((v, w), via, count));
        }
        let mut left = realize_left(&left_demand)?;
        let mut right = realize_right(&right_demand)?;
        let mut tokens = Vec::new();
        for ((v, w), via, count) in routes {
            let heads = left.take_tokens(v, via, count);
            let tails = right.take_tokens(via, w, count);
            for (head, tail) in heads.into_iter().zip(tails) {
                let mut path = head;
                path.extend_from_slice(&tail[1..]);
                debug_assert_eq!(path[0], v);
                debug_assert_eq!(*path.last().unwrap(), w);
                tokens.push(path);
            }
        }
        let mut word = left.word;
        word.extend_from_slice(&right.word);
        Ok(Realization { word, tokens })
    }

    /// Realizes `e_i♯` for a simple unstable idempotent `e_i` below `e` (the
    /// value of `child`): `β` tokens across the 1-bridge plus the demanded
    /// ω-loop counts, over a repetition of `e`'s word.
    fn realize_simple_sharp(
        &self,
        child: &SharpExpr,
        part_sharp: &AbstractMatrix,
        bridge: (usize, usize),
        demand: &Demand,
    ) -> Result<Realization> {
        let beta = demand.get(&bridge).copied().unwrap_or(0);
        let mut loops: BTreeMap<usize, u64> = BTreeMap::new();
        for (&(v, w), &count) in demand {
            if (v, w) == bridge {
                continue;
            }
            debug_assert_eq!(v, w, "simple iterations only carry loops and the bridge");
            debug_assert_eq!(part_sharp.get(v, w), Mm::Omega);
            loops.insert(v, count);
        }
        if beta == 0 {
            let loop_demand: Demand = loops.iter().map(|(&u, &c)| ((u, u), c)).collect();
            return self.realize(child, &loop_demand);
        }
        let (from, to) = bridge;
        // The bridge riders wait on the ω-loops at both bridge ends, so those
        // loops need slack for every rider; every used loop also needs slack
        // for the two trajectories the threading step may consume.
        let mut child_demand = Demand::new();
        for (v, w, entry) in part_sharp.entries() {
            if v != w || entry != Mm::Omega {
                continue;
            }
            let lambda = loops.get(&v).copied().unwrap_or(0);
            let need = if v == from || v == to {
                lambda + beta + 2
            } else if lambda > 0 {
                lambda + 2
            } else {
                0
            };
            if need > 0 {
                child_demand.insert((v, v), need);
            }
        }
        let base = self.realize(child, &child_demand)?;
        let layers: Vec<&CapacityMatrix> =
            base.word.iter().map(|&i| &self.letters[i].1).collect();
        let pi = find_path(&layers, from, to)
            .expect("the 1-bridge of an unstable pair has a path through the base word");
        let threaded = thread_bridge_token(&base, &pi);
        Ok(stack_rounds(&threaded, bridge, &loops, beta))
    }
}

/// One repetition round: produces a flow over `base.word` repeated `m + 1`
/// times where one fresh token travels the bridge path and all surviving
/// tokens keep riding their loops.
///
/// The fresh token follows the path `pi`. Whenever a surviving token's
/// trajectory would collide with it, the construction instead deletes the
/// colliding trajectory pair and lets the fresh token impersonate the deleted
/// tokens: it copies a deleted token's prefix up to the last date where a
/// token of the same start vertex sits on the path, rides the path until the
/// next collision, and continues with that collider's suffix into the next
/// repetition.
fn thread_bridge_token(base: &Realization, pi: &[usize]) -> Realization {
    let k = base.word.len();
    let positions = &base.tokens;
    let crossing = |t: usize, date: usize| positions[t][date] == pi[date];

    // Cut the timeline at collision dates.
    struct Seg {
        enter_token: Option<usize>, // τ'_i whose prefix the rider copies
        enter_date: usize,          // δ'_i
        exit_token: Option<usize>,  // τ_{i+1} whose suffix the rider copies
        exit_date: usize,           // δ_{i+1}
    }
    let mut segments: Vec<Seg> = Vec::new();
    let mut deleted: Vec<usize> = Vec::new();
    let mut enter_token: Option<usize> = None;
    let mut enter_date = 0usize;
    loop {
        // First collision strictly after the current entry date, preferring a
        // token that reached the path along the path's own edge.
        let mut exit: Option<(usize, usize)> = None;
        'dates: for date in enter_date + 1..=k {
            let mut candidate: Option<usize> = None;
            for t in 0..positions.len() {
                if deleted.contains(&t) || !crossing(t, date) {
                    continue;
                }
                if positions[t][date - 1] == pi[date - 1] {
                    candidate = Some(t);
                    break;
                }
                candidate.get_or_insert(t);
            }
            if let Some(t) = candidate {
                exit = Some((t, date));
                break 'dates;
            }
        }
        match exit {
            None => {
                segments.push(Seg {
                    enter_token,
                    enter_date,
                    exit_token: None,
                    exit_date: k,
                });
                break;
            }
            Some((tau, date)) => {
                segments.push(Seg {
                    enter_token,
                    enter_date,
                    exit_token: Some(tau),
                    exit_date: date,
                });
                let start_vertex = positions[tau][0];
                if !deleted.contains(&tau) {
                    deleted.push(tau);
                }
                // Latest collision among live tokens sharing that start
                // vertex (the just-deleted collider itself qualifies).
                let mut prime = (date, tau);
                for t in 0..positions.len() {
                    if positions[t][0] != start_vertex || (deleted.contains(&t) && t != tau) {
                        continue;
                    }
                    for d in (prime.0..=k).rev() {
                        if crossing(t, d) {
                            if d > prime.0 {
                                prime = (d, t);
                            }
                            break;
                        }
                    }
                }
                let (date_prime, tau_prime) = prime;
                if !deleted.contains(&tau_prime) {
                    deleted.push(tau_prime);
                }
                enter_token = Some(tau_prime);
                enter_date = date_prime;
            }
        }
    }

    let rounds = segments.len();
    let survivors: Vec<usize> =
        (0..positions.len()).filter(|t| !deleted.contains(t)).collect();
    let mut word = Vec::with_capacity(k * rounds);
    for _ in 0..rounds {
        word.extend_from_slice(&base.word);
    }
    let mut tokens: Vec<Vec<usize>> = Vec::new();
    for &t in &survivors {
        let mut path = positions[t].clone();
        for _ in 1..rounds {
            path.extend_from_slice(&positions[t][1..]);
        }
        tokens.push(path);
    }
    // The rider: one segment per repetition.
    let mut rider: Vec<usize> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let mut piece: Vec<usize> = Vec::with_capacity(k + 1);
        if let Some(t) = seg.enter_token {
            debug_assert_eq!(positions[t][seg.enter_date], pi[seg.enter_date]);
            piece.extend_from_slice(&positions[t][0..=seg.enter_date]);
            piece.extend_from_slice(&pi[seg.enter_date + 1..=seg.exit_date]);
        } else {
            debug_assert_eq!(seg.enter_date, 0);
            piece.extend_from_slice(&pi[0..=seg.exit_date]);
        }
        if let Some(t) = seg.exit_token {
            piece.extend_from_slice(&positions[t][seg.exit_date + 1..=k]);
        } else {
            debug_assert_eq!(seg.exit_date, k);
        }
        debug_assert_eq!(piece.len(), k + 1);
        if i == 0 {
            rider.extend_from_slice(&piece);
        } else {
            debug_assert_eq!(*rider.last().unwrap(), piece[0]);
            rider.extend_from_slice(&piece[1..]);
        }
    }
    tokens.push(rider);
    Realization { word, tokens }
}

/// Stacks `beta` copies of a one-rider round so that one token crosses the
/// bridge per copy; waiting riders park on the bridge-end loops, and `lambda`
/// tokens per loop survive end to end.
fn stack_rounds(
    round: &Realization,
    bridge: (usize, usize),
    lambda: &BTreeMap<usize, u64>,
    beta: u64,
) -> Realization {
    let k = round.word.len();
    let (from, to) = bridge;
    // Identify the rider and the loop slots per vertex.
    let mut rider_idx = None;
    let mut slots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (t, path) in round.tokens.iter().enumerate() {
        if path[0] == from && path[k] == to {
            debug_assert!(rider_idx.is_none(), "exactly one rider per round");
            rider_idx = Some(t);
        } else {
            debug_assert_eq!(path[0], path[k]);
            slots.entry(path[0]).or_default().push(t);
        }
    }
    let rider_idx = rider_idx.expect("round carries a rider");
    let seg = |t: usize, first: bool| -> &[usize] {
        if first {
            &round.tokens[t]
        } else {
            &round.tokens[t][1..]
        }
    };

    let mut word = Vec::with_capacity(k * beta as usize);
    for _ in 0..beta {
        word.extend_from_slice(&round.word);
    }
    let mut tokens: Vec<Vec<usize>> = Vec::new();
    // Permanent loop tokens.
    for (&u, &count) in lambda {
        let u_slots = slots.get(&u).map(Vec::as_slice).unwrap_or(&[]);
        for s in 0..count as usize {
            let slot = u_slots[s];
            let mut path = Vec::with_capacity(k * beta as usize + 1);
            for copy in 0..beta {
                path.extend_from_slice(seg(slot, copy == 0));
            }
            tokens.push(path);
        }
    }
    // Bridge riders: rider r waits at the source loop, crosses in copy r,
    // then parks at the target loop.
    let lam_from = lambda.get(&from).copied().unwrap_or(0) as usize;
    let lam_to = lambda.get(&to).copied().unwrap_or(0) as usize;
    let from_slots = slots.get(&from).map(Vec::as_slice).unwrap_or(&[]);
    let to_slots = slots.get(&to).map(Vec::as_slice).unwrap_or(&[]);
    for r in 0..beta {
        let mut path: Vec<usize> = Vec::with_capacity(k * beta as usize + 1);
        for copy in 0..beta {
            let segment: &[usize] = if copy < r {
                seg(from_slots[lam_from + (r - copy - 1) as usize], copy == 0)
            } else if copy == r {
                seg(rider_idx, copy == 0)
            } else {
                seg(to_slots[lam_to + (copy - r - 1) as usize], copy == 0)
            };
            path.extend_from_slice(segment);
        }
        tokens.push(path);
    }
    Realization { word, tokens }
}
