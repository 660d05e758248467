//! Generic finite-semigroup machinery: Green relations, regular 𝒥-length and
//! Ramsey numbers, parameterized by an element type and a product.
//!
//! Green preorders are computed with the one-sided factors optional (the
//! padded reading `x ≤ y iff x ∈ S¹yS¹`), so no neutral element is assumed.

use num_bigint::BigUint;
use std::collections::HashMap;
use std::hash::Hash;

/// A finite semigroup with an eagerly tabulated product.
#[derive(Debug, Clone)]
pub struct FiniteSemigroup<T> {
    elements: Vec<T>,
    index: HashMap<T, usize>,
    table: Vec<usize>,
}

impl<T: Clone + Eq + Hash> FiniteSemigroup<T> {
    /// Closes the generators under the product and tabulates it.
    pub fn generate(generators: &[T], product: impl Fn(&T, &T) -> T) -> FiniteSemigroup<T> {
        let mut elements: Vec<T> = Vec::new();
        let mut index = HashMap::new();
        for g in generators {
            if !index.contains_key(g) {
                index.insert(g.clone(), elements.len());
                elements.push(g.clone());
            }
        }
        let mut frontier: Vec<usize> = (0..elements.len()).collect();
        while let Some(x) = frontier.pop() {
            let mut y = 0;
            while y < elements.len() {
                for p in [
                    product(&elements[x], &elements[y]),
                    product(&elements[y], &elements[x]),
                ] {
                    if !index.contains_key(&p) {
                        index.insert(p.clone(), elements.len());
                        elements.push(p);
                        frontier.push(index.len() - 1);
                    }
                }
                y += 1;
            }
        }
        let n = elements.len();
        let mut table = vec![0usize; n * n];
        for x in 0..n {
            for y in 0..n {
                table[x * n + y] = index[&product(&elements[x], &elements[y])];
            }
        }
        FiniteSemigroup {
            elements,
            index,
            table,
        }
    }

    /// Wraps an already-closed element set; panics if the set is not closed.
    pub fn from_elements(elements: Vec<T>, product: impl Fn(&T, &T) -> T) -> FiniteSemigroup<T> {
        let index: HashMap<T, usize> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let n = elements.len();
        let mut table = vec![0usize; n * n];
        for x in 0..n {
            for y in 0..n {
                let p = product(&elements[x], &elements[y]);
                table[x * n + y] = *index.get(&p).expect("element set must be closed");
            }
        }
        FiniteSemigroup {
            elements,
            index,
            table,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &T {
        &self.elements[id]
    }

    pub fn id_of(&self, e: &T) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.table[x * self.elements.len() + y]
    }

    pub fn is_idempotent(&self, x: usize) -> bool {
        self.mul(x, x) == x
    }

    pub fn idempotents(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.is_idempotent(x)).collect()
    }

    /// Left fold of a nonempty word.
    pub fn eval_word(&self, word: &[usize]) -> usize {
        let mut acc = word[0];
        for &x in &word[1..] {
            acc = self.mul(acc, x);
        }
        acc
    }
}

/// The four Green preorders and their equivalence classes, as boolean
/// matrices `leq[x][y] = x ≤ y`.
#[derive(Debug, Clone)]
pub struct GreenData {
    n: usize,
    j: Vec<bool>,
    l: Vec<bool>,
    r: Vec<bool>,
    h: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenRelation {
    J,
    L,
    R,
    H,
}

impl GreenData {
    pub fn leq(&self, rel: GreenRelation, x: usize, y: usize) -> bool {
        let m = match rel {
            GreenRelation::J => &self.j,
            GreenRelation::L => &self.l,
            GreenRelation::R => &self.r,
            GreenRelation::H => &self.h,
        };
        m[x * self.n + y]
    }

    pub fn equivalent(&self, rel: GreenRelation, x: usize, y: usize) -> bool {
        self.leq(rel, x, y) && self.leq(rel, y, x)
    }

    pub fn strictly_below(&self, rel: GreenRelation, x: usize, y: usize) -> bool {
        self.leq(rel, x, y) && !self.leq(rel, y, x)
    }

    /// Equivalence classes of a relation, each sorted, ordered by smallest
    /// member.
    pub fn classes(&self, rel: GreenRelation) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.n];
        let mut out = Vec::new();
        for x in 0..self.n {
            if assigned[x] {
                continue;
            }
            let class: Vec<usize> = (x..self.n)
                .filter(|&y| self.equivalent(rel, x, y))
                .collect();
            for &y in &class {
                assigned[y] = true;
            }
            out.push(class);
        }
        out
    }
}

/// Computes all four Green preorders of a finite semigroup.
///
/// `x ≤_L y` iff `x = y` or `x = a·y`; `x ≤_R y` iff `x = y` or `x = y·b`;
/// `x ≤_J y` additionally admits two-sided factors; `≤_H = ≤_L ∩ ≤_R`.
pub fn green_compare<T: Clone + Eq + Hash>(s: &FiniteSemigroup<T>) -> GreenData {
    let n = s.len();
    let mut l = vec![false; n * n];
    let mut r = vec![false; n * n];
    let mut j = vec![false; n * n];
    for y in 0..n {
        l[y * n + y] = true;
        r[y * n + y] = true;
        j[y * n + y] = true;
        let mut left = vec![false; n];
        for a in 0..n {
            left[s.mul(a, y)] = true;
        }
        for x in 0..n {
            if left[x] {
                l[x * n + y] = true;
                j[x * n + y] = true;
            }
        }
        for b in 0..n {
            let yb = s.mul(y, b);
            r[yb * n + y] = true;
            j[yb * n + y] = true;
            for a in 0..n {
                j[s.mul(a, yb) * n + y] = true;
            }
        }
    }
    let h: Vec<bool> = (0..n * n).map(|i| l[i] && r[i]).collect();
    GreenData { n, j, l, r, h }
}

/// Length of the longest strict 𝒥-chain of idempotents.
pub fn regular_j_length<T: Clone + Eq + Hash>(s: &FiniteSemigroup<T>, green: &GreenData) -> usize {
    let idems = s.idempotents();
    longest_chain_among(&idems, green)
}

fn longest_chain_among(idems: &[usize], green: &GreenData) -> usize {
    // Longest path in the strict 𝒥-order DAG over idempotents, counting
    // nodes. 𝒥-equivalent idempotents collapse to one node.
    let mut memo: HashMap<usize, usize> = HashMap::new();
    fn depth(
        e: usize,
        idems: &[usize],
        green: &GreenData,
        memo: &mut HashMap<usize, usize>,
    ) -> usize {
        if let Some(&d) = memo.get(&e) {
            return d;
        }
        let mut best = 1;
        for &f in idems {
            if green.strictly_below(GreenRelation::J, f, e) {
                best = best.max(1 + depth(f, idems, green, memo));
            }
        }
        memo.insert(e, best);
        best
    }
    idems
        .iter()
        .map(|&e| depth(e, idems, green, &mut memo))
        .max()
        .unwrap_or(0)
}

/// Regular 𝒥-length below a single element: the longest strict chain of
/// idempotents that are all 𝒥-below `x`.
pub fn regular_j_length_below<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    green: &GreenData,
    x: usize,
) -> usize {
    let idems: Vec<usize> = s
        .idempotents()
        .into_iter()
        .filter(|&e| green.leq(GreenRelation::J, e, x))
        .collect();
    longest_chain_among(&idems, green)
}

/// Result of a Ramsey-number query: the exact value when the bounded search
/// completes, otherwise the guaranteed bracket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RamseyResult {
    Exact(u64),
    Bracket { lower: BigUint, upper: BigUint },
}

impl RamseyResult {
    pub fn lower(&self) -> BigUint {
        match self {
            RamseyResult::Exact(n) => BigUint::from(*n),
            RamseyResult::Bracket { lower, .. } => lower.clone(),
        }
    }

    pub fn upper(&self) -> BigUint {
        match self {
            RamseyResult::Exact(n) => BigUint::from(*n),
            RamseyResult::Bracket { upper, .. } => upper.clone(),
        }
    }
}

/// The bracket `k^L ≤ R_S(k) ≤ (k·|S|⁴)^L` in big integers.
pub fn ramsey_bracket<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    green: &GreenData,
    k: u64,
) -> (BigUint, BigUint) {
    let jlen = regular_j_length(s, green) as u32;
    let lower = BigUint::from(k).pow(jlen);
    let size4 = BigUint::from(s.len()).pow(4);
    let upper = (BigUint::from(k) * size4).pow(jlen);
    (lower, upper)
}

/// Minimal `n` such that every word of length `n` over `S` contains `k`
/// consecutive infixes all evaluating to one idempotent; exact when the
/// state-space search finishes within `state_budget` states.
pub fn ramsey_number<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    green: &GreenData,
    k: u64,
    state_budget: usize,
) -> RamseyResult {
    if let Some(exact) = ramsey_exact(s, k, state_budget) {
        return RamseyResult::Exact(exact);
    }
    let (lower, upper) = ramsey_bracket(s, green, k);
    RamseyResult::Bracket { lower, upper }
}

/// Search state for the exact Ramsey computation: for each semigroup value
/// `v`, the best vector of chain lengths (per idempotent) over all word
/// boundaries whose suffix evaluates to `v`, plus the chain lengths ending at
/// the current position.
#[derive(Clone, PartialEq, Eq, Hash)]
struct RamseyState {
    per_value: Vec<Option<Vec<u8>>>,
    current: Vec<u8>,
}

/// Longest word avoiding the `k`-fold idempotent-infix pattern, found by a
/// memoized walk of the (finite) state graph; `None` when the budget runs
/// out. The Ramsey number is that length plus one.
fn ramsey_exact<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    k: u64,
    state_budget: usize,
) -> Option<u64> {
    if k == 0 {
        return Some(0);
    }
    let n = s.len();
    let idems = s.idempotents();
    let idem_pos: HashMap<usize, usize> = idems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let start = RamseyState {
        per_value: vec![None; n],
        current: vec![0; idems.len()],
    };

    // next(state, letter) -> Some(state) if still pattern-free.
    let step = |state: &RamseyState, letter: usize| -> Option<RamseyState> {
        let mut per_value: Vec<Option<Vec<u8>>> = vec![None; n];
        let mut merge = |value: usize, vec: &Vec<u8>| {
            match &mut per_value[value] {
                Some(best) => {
                    for (b, v) in best.iter_mut().zip(vec) {
                        *b = (*b).max(*v);
                    }
                }
                slot => *slot = Some(vec.clone()),
            }
        };
        for (v, entry) in state.per_value.iter().enumerate() {
            if let Some(vec) = entry {
                merge(s.mul(v, letter), vec);
            }
        }
        merge(letter, &state.current);
        let mut current = vec![0u8; idems.len()];
        for (i, &e) in idems.iter().enumerate() {
            if let Some(vec) = &per_value[e] {
                let reach = vec[idem_pos[&e]] + 1;
                if reach as u64 >= k {
                    return None;
                }
                current[i] = reach;
            }
        }
        Some(RamseyState { per_value, current })
    };

    // Longest path in the DAG of pattern-free states. The state graph is
    // finite and acyclic on reachable pattern-free states (a cycle would give
    // unboundedly long pattern-free words, contradicting Ramsey's theorem).
    let mut memo: HashMap<RamseyState, u64> = HashMap::new();
    let mut on_stack: HashMap<RamseyState, ()> = HashMap::new();

    fn walk<F: Fn(&RamseyState, usize) -> Option<RamseyState>>(
        state: &RamseyState,
        n: usize,
        step: &F,
        memo: &mut HashMap<RamseyState, u64>,
        on_stack: &mut HashMap<RamseyState, ()>,
        budget: usize,
    ) -> Option<u64> {
        if let Some(&d) = memo.get(state) {
            return Some(d);
        }
        if memo.len() + on_stack.len() > budget || on_stack.contains_key(state) {
            return None;
        }
        on_stack.insert(state.clone(), ());
        let mut best = 0;
        for letter in 0..n {
            if let Some(next) = step(state, letter) {
                let d = walk(&next, n, step, memo, on_stack, budget)?;
                best = best.max(1 + d);
            }
        }
        on_stack.remove(state);
        memo.insert(state.clone(), best);
        Some(best)
    }

    walk(&start, n, &step, &mut memo, &mut on_stack, state_budget).map(|longest| longest + 1)
}

/// State of the block-prefix search: which semigroup values occur as suffix
/// values of the current word, and the per-idempotent progress towards a
/// block prefix `u·α·β·γ` (α complete; α and β complete), each with the value
/// of the letters read since (or ε).
#[derive(Clone, PartialEq, Eq, Hash)]
struct BlockState {
    suffixes: Vec<bool>,
    alpha: Vec<bool>,
    beta: Vec<bool>,
}

/// Minimal `n` such that every word of length `n` has a block prefix
/// `u·α·β·γ` with the three parts evaluating to one idempotent. Always at
/// most the Ramsey number of order 3. `None` when the level search exceeds
/// the state budget or the depth cap.
pub fn block_prefix_threshold<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    max_depth: usize,
    state_budget: usize,
) -> Option<u64> {
    let n = s.len();
    let idems = s.idempotents();
    let ne = idems.len();
    let slot = |e_idx: usize, v: Option<usize>| e_idx * (n + 1) + v.unwrap_or(n);
    let step = |state: &BlockState, letter: usize| -> Option<BlockState> {
        let mut suffixes = vec![false; n];
        for (v, &present) in state.suffixes.iter().enumerate() {
            if present {
                suffixes[s.mul(v, letter)] = true;
            }
        }
        suffixes[letter] = true;
        let advance = |old: &[bool]| -> Vec<bool> {
            let mut new = vec![false; ne * (n + 1)];
            for (i, _) in idems.iter().enumerate() {
                for v in 0..n {
                    if old[slot(i, Some(v))] {
                        new[slot(i, Some(s.mul(v, letter)))] = true;
                    }
                }
                if old[slot(i, None)] {
                    new[slot(i, Some(letter))] = true;
                }
            }
            new
        };
        let mut alpha = advance(&state.alpha);
        for (i, &e) in idems.iter().enumerate() {
            if suffixes[e] {
                alpha[slot(i, None)] = true;
            }
        }
        let mut beta = advance(&state.beta);
        for (i, &e) in idems.iter().enumerate() {
            if alpha[slot(i, Some(e))] {
                beta[slot(i, None)] = true;
            }
        }
        // A block prefix exists once β is followed by a complete γ.
        for (i, &e) in idems.iter().enumerate() {
            if beta[slot(i, Some(e))] {
                return None;
            }
        }
        Some(BlockState {
            suffixes,
            alpha,
            beta,
        })
    };
    let mut level: HashMap<BlockState, ()> = HashMap::new();
    level.insert(
        BlockState {
            suffixes: vec![false; n],
            alpha: vec![false; ne * (n + 1)],
            beta: vec![false; ne * (n + 1)],
        },
        (),
    );
    for depth in 1..=max_depth {
        let mut next: HashMap<BlockState, ()> = HashMap::new();
        for state in level.keys() {
            for letter in 0..n {
                if let Some(new) = step(state, letter) {
                    next.insert(new, ());
                    if next.len() > state_budget {
                        return None;
                    }
                }
            }
        }
        if next.is_empty() {
            return Some(depth as u64);
        }
        level = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    /// {0, 1} under multiplication.
    fn two() -> FiniteSemigroup<u8> {
        FiniteSemigroup::generate(&[0u8, 1u8], |a, b| a * b)
    }

    #[test]
    fn green_on_two_element_semigroup() {
        let s = two();
        let g = green_compare(&s);
        let zero = s.id_of(&0).unwrap();
        let one = s.id_of(&1).unwrap();
        assert!(g.strictly_below(GreenRelation::J, zero, one));
        assert_eq!(g.classes(GreenRelation::J).len(), 2);
        assert_eq!(regular_j_length(&s, &g), 2);
    }

    #[test]
    fn products_are_j_below_their_factors() {
        let s = two();
        let g = green_compare(&s);
        for x in 0..s.len() {
            for y in 0..s.len() {
                assert!(g.leq(GreenRelation::J, s.mul(x, y), y));
                assert!(g.leq(GreenRelation::J, s.mul(x, y), x));
            }
        }
    }

    #[test]
    fn singleton_semigroup() {
        let s = FiniteSemigroup::generate(&[1u8], |a, b| a * b);
        let g = green_compare(&s);
        assert_eq!(regular_j_length(&s, &g), 1);
        assert_eq!(
            ramsey_number(&s, &g, 3, 10_000),
            RamseyResult::Exact(3)
        );
    }

    /// Brute-force Ramsey oracle: smallest n such that every length-n word
    /// contains the pattern, checked by direct dynamic programming per word.
    fn ramsey_oracle<T: Clone + Eq + Hash>(s: &FiniteSemigroup<T>, k: usize, max_n: usize) -> Option<u64> {
        fn has_pattern<T: Clone + Eq + Hash>(s: &FiniteSemigroup<T>, word: &[usize], k: usize) -> bool {
            let len = word.len();
            // value[i][j] = eval of word[i..j]
            let mut value = vec![vec![0usize; len + 1]; len + 1];
            for i in 0..len {
                let mut acc = word[i];
                value[i][i + 1] = acc;
                for j in i + 1..len {
                    acc = s.mul(acc, word[j]);
                    value[i][j + 1] = acc;
                }
            }
            for e in s.idempotents() {
                // reach[p] = longest chain of consecutive e-infixes ending at p
                let mut reach = vec![0usize; len + 1];
                for p in 1..=len {
                    for q in 0..p {
                        if value[q][p] == e {
                            reach[p] = reach[p].max(reach[q] + 1);
                        }
                    }
                    if reach[p] >= k {
                        return true;
                    }
                }
            }
            false
        }
        let n = s.len();
        'lengths: for len in 1..=max_n {
            let mut word = vec![0usize; len];
            loop {
                if !has_pattern(s, &word, k) {
                    continue 'lengths;
                }
                // next word
                let mut pos = 0;
                loop {
                    if pos == len {
                        return Some(len as u64);
                    }
                    word[pos] += 1;
                    if word[pos] < n {
                        break;
                    }
                    word[pos] = 0;
                    pos += 1;
                }
            }
        }
        None
    }

    #[test]
    fn exact_ramsey_matches_oracle_on_two() {
        let s = two();
        let g = green_compare(&s);
        let exact = ramsey_number(&s, &g, 2, 100_000);
        let oracle = ramsey_oracle(&s, 2, 8).unwrap();
        assert_eq!(exact, RamseyResult::Exact(oracle));
        assert_eq!(oracle, 4);
        // The exact value sits in the bracket.
        let (lo, hi) = ramsey_bracket(&s, &g, 2);
        assert!(lo <= BigUint::from(oracle) && BigUint::from(oracle) <= hi);
    }

    #[test]
    fn block_prefix_threshold_equals_the_ramsey_number() {
        // A block prefix is exactly a prefix ending in three consecutive
        // idempotent infixes, so both searches compute the same number.
        let s = two();
        let g = green_compare(&s);
        let via_chains = ramsey_number(&s, &g, 3, 100_000);
        let via_blocks = block_prefix_threshold(&s, 64, 100_000).unwrap();
        assert_eq!(via_chains, RamseyResult::Exact(via_blocks));

        let singleton = FiniteSemigroup::generate(&[1u8], |a, b| a * b);
        assert_eq!(block_prefix_threshold(&singleton, 64, 1000), Some(3));
    }

    #[test]
    fn exact_ramsey_matches_oracle_on_flip_flop() {
        // Right-zero semigroup on two elements: x·y = y.
        let s = FiniteSemigroup::generate(&[0u8, 1u8], |_, b| *b);
        let g = green_compare(&s);
        for k in 2..=3u64 {
            let exact = ramsey_number(&s, &g, k, 100_000);
            let oracle = ramsey_oracle(&s, k as usize, 10).unwrap();
            assert_eq!(exact, RamseyResult::Exact(oracle), "k={k}");
        }
    }

    #[test]
    fn boolean_two_by_two_j_length_within_bound() {
        // All 16 Boolean 2×2 matrices under the ∧/∨ product.
        let all: Vec<[bool; 4]> = (0..16u8)
            .map(|i| [i & 1 != 0, i & 2 != 0, i & 4 != 0, i & 8 != 0])
            .collect();
        let product = |a: &[bool; 4], b: &[bool; 4]| {
            let mut out = [false; 4];
            for r in 0..2 {
                for c in 0..2 {
                    out[r * 2 + c] =
                        (a[r * 2] && b[c]) || (a[r * 2 + 1] && b[2 + c]);
                }
            }
            out
        };
        let s = FiniteSemigroup::from_elements(all, product);
        let g = green_compare(&s);
        let jlen = regular_j_length(&s, &g);
        assert!(jlen <= (4 + 2 + 2) / 2, "bound (n²+n+2)/2 for n=2");
        assert_eq!(jlen, 4);
    }

    #[test]
    fn h_classes_have_at_most_one_idempotent() {
        let all: Vec<[bool; 4]> = (0..16u8)
            .map(|i| [i & 1 != 0, i & 2 != 0, i & 4 != 0, i & 8 != 0])
            .collect();
        let product = |a: &[bool; 4], b: &[bool; 4]| {
            let mut out = [false; 4];
            for r in 0..2 {
                for c in 0..2 {
                    out[r * 2 + c] =
                        (a[r * 2] && b[c]) || (a[r * 2 + 1] && b[2 + c]);
                }
            }
            out
        };
        let s = FiniteSemigroup::from_elements(all, product);
        let g = green_compare(&s);
        for class in g.classes(GreenRelation::H) {
            let idems = class.iter().filter(|&&x| s.is_idempotent(x)).count();
            assert!(idems <= 1);
        }
    }

    #[test]
    fn j_and_one_sided_implies_equivalence() {
        let s = two();
        let g = green_compare(&s);
        for x in 0..s.len() {
            for y in 0..s.len() {
                if g.equivalent(GreenRelation::J, x, y) && g.leq(GreenRelation::L, x, y) {
                    assert!(g.equivalent(GreenRelation::L, x, y));
                }
                if g.equivalent(GreenRelation::J, x, y) && g.leq(GreenRelation::R, x, y) {
                    assert!(g.equivalent(GreenRelation::R, x, y));
                }
            }
        }
    }
}
