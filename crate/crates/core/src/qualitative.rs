//! Deciding unboundedness: closure search, the bounded-height recursive
//! membership test, and the fair / regular-language variants.

use crate::flow::{sharp, FlowSemigroup, SharpExpr, DEFAULT_CLOSURE_LIMIT};
use crate::mm::{all_matrices, AbstractMatrix, Mm};
use crate::{Error, Result};
use std::collections::HashMap;

/// Outcome of the qualitative stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Unbounded {
        witness: AbstractMatrix,
        expression: SharpExpr,
    },
    Bounded,
}

impl Verdict {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Verdict::Unbounded { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Generate the full flow semigroup and scan for a witness.
    Closure,
    /// Enumerate witness candidates and test them with the bounded-height
    /// recursion at the derived height budget.
    BoundedHeight,
}

/// Height budget sufficient to generate every element of the flow semigroup:
/// `2n⁴`.
pub fn height_budget(dim: usize) -> usize {
    2 * dim.pow(4)
}

/// Nesting budget for `♯` applications: `n² - 1`.
pub fn sharp_nesting_budget(dim: usize) -> usize {
    dim * dim - 1
}

/// The bounded-height membership test: does `x` have a derivation expression
/// of height at most `h` over the generators?
///
/// The default solver memoizes on `(x, h)` and enumerates factor candidates
/// from the precomputed closure, which cannot change results (only closure
/// elements admit expressions). [`RecSolver::strict_space`] keeps the literal
/// enumeration over all matrices with no memoization and no precomputed sets,
/// trading time for the small memory footprint; it is practical only for
/// two-vertex instances.
pub struct RecSolver<'a> {
    letters: &'a [(String, AbstractMatrix)],
    closure: Option<&'a FlowSemigroup>,
    memo: std::cell::RefCell<HashMap<(usize, usize), bool>>,
}

impl<'a> RecSolver<'a> {
    pub fn memoized(letters: &'a [(String, AbstractMatrix)], closure: &'a FlowSemigroup) -> Self {
        RecSolver {
            letters,
            closure: Some(closure),
            memo: std::cell::RefCell::new(HashMap::new()),
        }
    }

    pub fn strict_space(letters: &'a [(String, AbstractMatrix)]) -> Self {
        RecSolver {
            letters,
            closure: None,
            memo: std::cell::RefCell::new(HashMap::new()),
        }
    }

    pub fn is_in_rec(&self, x: &AbstractMatrix, h: usize) -> bool {
        if self.letters.iter().any(|(_, m)| m == x) {
            return true;
        }
        if h == 0 {
            return false;
        }
        match self.closure {
            Some(closure) => self.rec_memoized(closure, x, h),
            None => self.rec_strict(x, h),
        }
    }

    fn rec_memoized(&self, closure: &FlowSemigroup, x: &AbstractMatrix, h: usize) -> bool {
        if self.letters.iter().any(|(_, m)| m == x) {
            return true;
        }
        if h == 0 {
            return false;
        }
        let Some(id) = closure.id_of(x) else {
            return false;
        };
        if let Some(&cached) = self.memo.borrow().get(&(id, h)) {
            return cached;
        }
        // Candidates in canonical encoding order.
        let mut order: Vec<usize> = (0..closure.len()).collect();
        order.sort_by_key(|&i| closure.element(i).encode());
        let mut result = false;
        'search: {
            for &y in &order {
                if !self.rec_memoized(closure, closure.element(y), h - 1) {
                    continue;
                }
                for &z in &order {
                    if closure.element(y).product(closure.element(z)) == *x
                        && self.rec_memoized(closure, closure.element(z), h - 1)
                    {
                        result = true;
                        break 'search;
                    }
                }
            }
            for &e in &order {
                let cand = closure.element(e);
                if cand.is_idempotent()
                    && sharp(cand).expect("idempotent") == *x
                    && self.rec_memoized(closure, cand, h - 1)
                {
                    result = true;
                    break 'search;
                }
            }
        }
        self.memo.borrow_mut().insert((id, h), result);
        result
    }

    fn rec_strict(&self, x: &AbstractMatrix, h: usize) -> bool {
        if self.letters.iter().any(|(_, m)| m == x) {
            return true;
        }
        if h == 0 {
            return false;
        }
        let dim = x.dim();
        for y in all_matrices(dim) {
            if !self.rec_strict(&y, h - 1) {
                continue;
            }
            for z in all_matrices(dim) {
                if y.product(&z) == *x && self.rec_strict(&z, h - 1) {
                    return true;
                }
            }
        }
        for e in all_matrices(dim) {
            if e.is_idempotent() && sharp(&e).expect("idempotent") == *x && self.rec_strict(&e, h - 1)
            {
                return true;
            }
        }
        false
    }
}

/// Decides unboundedness of the plain problem for the given abstracted
/// capacities.
pub fn check_unbounded(
    letters: &[(String, AbstractMatrix)],
    source: usize,
    target: usize,
    strategy: Strategy,
    closure_limit: usize,
) -> Result<Verdict> {
    check_fair_unbounded(letters, &[(source, target)], strategy, closure_limit)
}

/// Fair variant: a witness must carry ω on every edge of the set
/// simultaneously.
pub fn check_fair_unbounded(
    letters: &[(String, AbstractMatrix)],
    edges: &[(usize, usize)],
    strategy: Strategy,
    closure_limit: usize,
) -> Result<Verdict> {
    if edges.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let closure = FlowSemigroup::generate_with_limit(letters, closure_limit)?;
    match strategy {
        Strategy::Closure => Ok(match closure.find_fair_witness(edges) {
            Some((witness, expression)) => Verdict::Unbounded {
                witness,
                expression,
            },
            None => Verdict::Bounded,
        }),
        Strategy::BoundedHeight => {
            let solver = RecSolver::memoized(letters, &closure);
            let budget = height_budget(closure.dim());
            // Witness candidates in canonical order.
            let mut order: Vec<usize> = (0..closure.len()).collect();
            order.sort_by_key(|&i| closure.element(i).encode());
            for id in order {
                let x = closure.element(id);
                if edges.iter().all(|&(v, w)| x.get(v, w) == Mm::Omega)
                    && solver.is_in_rec(x, budget)
                {
                    return Ok(Verdict::Unbounded {
                        witness: x.clone(),
                        expression: closure.expression(id),
                    });
                }
            }
            Ok(Verdict::Bounded)
        }
    }
}

/// A nondeterministic finite automaton over capacity-letter names; states are
/// `0..states`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub states: usize,
    pub initial: Vec<usize>,
    pub finals: Vec<usize>,
    pub transitions: Vec<(usize, String, usize)>,
}

impl Nfa {
    /// Single-state automaton accepting every word over the letters.
    pub fn universal(letters: &[(String, AbstractMatrix)]) -> Nfa {
        Nfa {
            states: 1,
            initial: vec![0],
            finals: vec![0],
            transitions: letters
                .iter()
                .map(|(name, _)| (0, name.clone(), 0))
                .collect(),
        }
    }

    pub fn validate_letters<M>(&self, letters: &[(String, M)]) -> Result<()> {
        for (q, name, q2) in &self.transitions {
            if !letters.iter().any(|(n, _)| n == name) {
                return Err(Error::UnknownLetter(name.clone()));
            }
            if *q >= self.states || *q2 >= self.states {
                return Err(Error::Validation(format!(
                    "transition ({q},{name},{q2}) uses a state outside 0..{}",
                    self.states
                )));
            }
        }
        for q in self.initial.iter().chain(&self.finals) {
            if *q >= self.states {
                return Err(Error::Validation(format!(
                    "state {q} outside 0..{}",
                    self.states
                )));
            }
        }
        Ok(())
    }
}

/// A state-labeled semigroup element: `⊥` or a triple `(q, x, q')`. Products
/// of mismatched states collapse to `⊥`; iteration acts on the matrix of
/// diagonal triples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Labeled {
    Bot,
    Tri(usize, Vec<u8>, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LabeledDerivation {
    Generator(usize),
    Product(usize, usize),
    Sharp(usize),
}

/// The labeled flow semigroup generated by `(q, x_a, q')` over the NFA's
/// transitions, closed under the labeled product and iteration.
pub struct LabeledClosure {
    dim: usize,
    elements: Vec<Labeled>,
    index: HashMap<Labeled, usize>,
    derivation: Vec<LabeledDerivation>,
    letter_names: Vec<String>,
}

impl LabeledClosure {
    pub fn generate(
        letters: &[(String, AbstractMatrix)],
        nfa: &Nfa,
        limit: usize,
    ) -> Result<LabeledClosure> {
        nfa.validate_letters(letters)?;
        let dim = letters[0].1.dim();
        let mut closure = LabeledClosure {
            dim,
            elements: Vec::new(),
            index: HashMap::new(),
            derivation: Vec::new(),
            letter_names: Vec::new(),
        };
        for (i, (q, name, q2)) in nfa.transitions.iter().enumerate() {
            let matrix = &letters.iter().find(|(n, _)| n == name).unwrap().1;
            let elem = Labeled::Tri(*q, matrix.encode(), *q2);
            closure.letter_names.push(name.clone());
            closure.insert(elem, LabeledDerivation::Generator(i), limit)?;
        }
        loop {
            let fresh_start = closure.elements.len();
            let mut staged: Vec<(Labeled, LabeledDerivation)> = Vec::new();
            for x in 0..closure.elements.len() {
                for y in 0..closure.elements.len() {
                    let p = closure.product(x, y);
                    if !closure.index.contains_key(&p) {
                        staged.push((p, LabeledDerivation::Product(x, y)));
                    }
                }
            }
            for x in 0..closure.elements.len() {
                if let Some(s) = closure.sharp_of(x) {
                    if !closure.index.contains_key(&s) {
                        staged.push((s, LabeledDerivation::Sharp(x)));
                    }
                }
            }
            for (elem, d) in staged {
                if !closure.index.contains_key(&elem) {
                    closure.insert(elem, d, limit)?;
                }
            }
            if closure.elements.len() == fresh_start {
                return Ok(closure);
            }
        }
    }

    fn insert(&mut self, elem: Labeled, d: LabeledDerivation, limit: usize) -> Result<()> {
        if self.elements.len() >= limit {
            return Err(Error::ClosureLimitExceeded(limit));
        }
        if self.index.contains_key(&elem) {
            return Ok(());
        }
        self.index.insert(elem.clone(), self.elements.len());
        self.elements.push(elem);
        self.derivation.push(d);
        Ok(())
    }

    fn product(&self, x: usize, y: usize) -> Labeled {
        match (&self.elements[x], &self.elements[y]) {
            (Labeled::Tri(q1, m1, r1), Labeled::Tri(q2, m2, r2)) if r1 == q2 => {
                let a = AbstractMatrix::decode(self.dim, m1);
                let b = AbstractMatrix::decode(self.dim, m2);
                Labeled::Tri(*q1, a.product(&b).encode(), *r2)
            }
            _ => Labeled::Bot,
        }
    }

    fn sharp_of(&self, x: usize) -> Option<Labeled> {
        match &self.elements[x] {
            Labeled::Bot => Some(Labeled::Bot),
            Labeled::Tri(q, m, r) if q == r => {
                let e = AbstractMatrix::decode(self.dim, m);
                e.is_idempotent()
                    .then(|| Labeled::Tri(*q, sharp(&e).expect("idempotent").encode(), *r))
            }
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    fn expression(&self, id: usize) -> SharpExpr {
        match self.derivation[id] {
            LabeledDerivation::Generator(i) => SharpExpr::Gen(self.letter_names[i].clone()),
            LabeledDerivation::Product(a, b) => {
                SharpExpr::Product(Box::new(self.expression(a)), Box::new(self.expression(b)))
            }
            LabeledDerivation::Sharp(e) => SharpExpr::Sharp(Box::new(self.expression(e))),
        }
    }

    /// First element `(q, x, q')` with `q` initial, `q'` final and ω on every
    /// requested edge.
    pub fn find_witness(
        &self,
        nfa: &Nfa,
        edges: &[(usize, usize)],
    ) -> Option<(AbstractMatrix, SharpExpr)> {
        for (id, elem) in self.elements.iter().enumerate() {
            let Labeled::Tri(q, m, r) = elem else {
                continue;
            };
            if !nfa.initial.contains(q) || !nfa.finals.contains(r) {
                continue;
            }
            let matrix = AbstractMatrix::decode(self.dim, m);
            if edges.iter().all(|&(v, w)| matrix.get(v, w) == Mm::Omega) {
                return Some((matrix, self.expression(id)));
            }
        }
        None
    }
}

/// Literal polynomial-space unboundedness check: enumerates every matrix
/// with ω on the requested edges and tests it with the memo-free recursion
/// over all matrix factorizations. No closure or table is ever materialized,
/// so memory stays polynomial while time is exponential in the height
/// budget; a finding is definitive, exhaustion only rules out derivations of
/// the given height (complete once `height` reaches [`height_budget`]).
/// Returns the witness matrix (expressions would require provenance, which
/// strict space forgoes).
pub fn check_unbounded_strict_space(
    letters: &[(String, AbstractMatrix)],
    edges: &[(usize, usize)],
    height: usize,
) -> Result<Option<AbstractMatrix>> {
    if edges.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let dim = letters[0].1.dim();
    let solver = RecSolver::strict_space(letters);
    for x in all_matrices(dim) {
        if edges.iter().all(|&(v, w)| x.get(v, w) == Mm::Omega) && solver.is_in_rec(&x, height) {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Regular-constrained variant: only capacity words accepted by the NFA
/// count.
pub fn check_regular_unbounded(
    letters: &[(String, AbstractMatrix)],
    nfa: &Nfa,
    edges: &[(usize, usize)],
    closure_limit: usize,
) -> Result<Verdict> {
    if edges.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let closure = LabeledClosure::generate(letters, nfa, closure_limit)?;
    Ok(match closure.find_witness(nfa, edges) {
        Some((witness, expression)) => Verdict::Unbounded {
            witness,
            expression,
        },
        None => Verdict::Bounded,
    })
}

/// Convenience wrapper using the default closure limit.
pub fn closure_limit_from_env() -> usize {
    std::env::var("SEQFLOW_MAX_CLOSURE")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_CLOSURE_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intro_letters() -> Vec<(String, AbstractMatrix)> {
        vec![
            ("a".into(), AbstractMatrix::parse("0w00/0000/0w0w/0000")),
            ("b".into(), AbstractMatrix::parse("0000/0w10/00w0/0000")),
        ]
    }

    #[test]
    fn intro_instance_is_unbounded_with_printed_witness() {
        let letters = intro_letters();
        for strategy in [Strategy::Closure, Strategy::BoundedHeight] {
            let verdict =
                check_unbounded(&letters, 0, 3, strategy, DEFAULT_CLOSURE_LIMIT).unwrap();
            match verdict {
                Verdict::Unbounded { expression, .. } => {
                    assert_eq!(expression.to_string(), "(a.(b)#.a)");
                }
                Verdict::Bounded => panic!("expected unbounded"),
            }
        }
    }

    #[test]
    fn rec_base_cases() {
        let letters = intro_letters();
        let closure = FlowSemigroup::generate(&letters).unwrap();
        let solver = RecSolver::memoized(&letters, &closure);
        let xa = letters[0].1.clone();
        let xb_sharp = sharp(&letters[1].1).unwrap();
        assert!(solver.is_in_rec(&xa, 0));
        assert!(!solver.is_in_rec(&xb_sharp, 0));
        assert!(solver.is_in_rec(&xb_sharp, 1));
        let witness = xa.product(&xb_sharp).product(&xa);
        assert!(solver.is_in_rec(&witness, 3));
        assert!(!solver.is_in_rec(&witness, 1));
    }

    #[test]
    fn rec_is_monotone_in_height() {
        let letters = intro_letters();
        let closure = FlowSemigroup::generate(&letters).unwrap();
        let solver = RecSolver::memoized(&letters, &closure);
        for id in 0..closure.len() {
            let x = closure.element(id);
            let mut seen = false;
            for h in 0..=height_budget(4) {
                let now = solver.is_in_rec(x, h);
                assert!(!seen || now, "monotonicity violated");
                seen = now;
            }
            assert!(seen, "every closure element is generated within budget");
        }
    }

    #[test]
    fn strict_and_memoized_agree_on_two_vertices() {
        // One-way ω edge plus an idempotent loop letter on two vertices.
        let letters = vec![
            ("p".into(), AbstractMatrix::parse("0w/00")),
            ("q".into(), AbstractMatrix::parse("w1/00")),
        ];
        let closure = FlowSemigroup::generate(&letters).unwrap();
        let memo = RecSolver::memoized(&letters, &closure);
        let strict = RecSolver::strict_space(&letters);
        for x in all_matrices(2) {
            for h in 0..=2 {
                assert_eq!(
                    memo.is_in_rec(&x, h),
                    strict.is_in_rec(&x, h),
                    "x={x} h={h}"
                );
            }
        }
    }

    #[test]
    fn strict_space_checker_finds_generator_witnesses() {
        let letters = vec![("p".to_string(), AbstractMatrix::parse("0w/00"))];
        let witness = check_unbounded_strict_space(&letters, &[(0, 1)], 0)
            .unwrap()
            .expect("the generator itself is a witness");
        assert_eq!(witness, letters[0].1);
        // A capacity-1 edge admits no witness among short derivations.
        let bounded = vec![("p".to_string(), AbstractMatrix::parse("01/00"))];
        assert!(check_unbounded_strict_space(&bounded, &[(0, 1)], 2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn fair_witness_needs_every_edge() {
        let letters = intro_letters();
        let both = check_fair_unbounded(
            &letters,
            &[(0, 3), (2, 3)],
            Strategy::Closure,
            DEFAULT_CLOSURE_LIMIT,
        )
        .unwrap();
        assert!(both.is_unbounded());
        let impossible = check_fair_unbounded(
            &letters,
            &[(0, 3), (1, 0)],
            Strategy::Closure,
            DEFAULT_CLOSURE_LIMIT,
        )
        .unwrap();
        assert_eq!(impossible, Verdict::Bounded);
        assert!(matches!(
            check_fair_unbounded(&letters, &[], Strategy::Closure, DEFAULT_CLOSURE_LIMIT),
            Err(Error::EmptyEdgeSet)
        ));
    }

    #[test]
    fn universal_nfa_matches_unconstrained() {
        let letters = intro_letters();
        let nfa = Nfa::universal(&letters);
        let regular =
            check_regular_unbounded(&letters, &nfa, &[(0, 3)], DEFAULT_CLOSURE_LIMIT).unwrap();
        let plain =
            check_unbounded(&letters, 0, 3, Strategy::Closure, DEFAULT_CLOSURE_LIMIT).unwrap();
        assert_eq!(regular.is_unbounded(), plain.is_unbounded());
    }

    #[test]
    fn ab_star_a_language_is_unbounded() {
        let letters = intro_letters();
        let nfa = Nfa {
            states: 3,
            initial: vec![0],
            finals: vec![2],
            transitions: vec![
                (0, "a".into(), 1),
                (1, "b".into(), 1),
                (1, "a".into(), 2),
            ],
        };
        let verdict =
            check_regular_unbounded(&letters, &nfa, &[(0, 3)], DEFAULT_CLOSURE_LIMIT).unwrap();
        assert!(verdict.is_unbounded());
    }

    #[test]
    fn finite_language_is_bounded() {
        let letters = intro_letters();
        // {a, aba}
        let nfa = Nfa {
            states: 4,
            initial: vec![0],
            finals: vec![1, 3],
            transitions: vec![
                (0, "a".into(), 1),
                (1, "b".into(), 2),
                (2, "a".into(), 3),
            ],
        };
        let verdict =
            check_regular_unbounded(&letters, &nfa, &[(0, 3)], DEFAULT_CLOSURE_LIMIT).unwrap();
        assert_eq!(verdict, Verdict::Bounded);
    }

    #[test]
    fn labeled_closure_size_bound() {
        let letters = intro_letters();
        let flow = FlowSemigroup::generate(&letters).unwrap();
        let nfa = Nfa {
            states: 3,
            initial: vec![0],
            finals: vec![2],
            transitions: vec![
                (0, "a".into(), 1),
                (1, "b".into(), 1),
                (1, "a".into(), 2),
            ],
        };
        let labeled = LabeledClosure::generate(&letters, &nfa, DEFAULT_CLOSURE_LIMIT).unwrap();
        assert!(labeled.len() <= nfa.states * nfa.states * flow.len() + 1);
    }

    #[test]
    fn unknown_nfa_letter_is_rejected() {
        let letters = intro_letters();
        let nfa = Nfa {
            states: 1,
            initial: vec![0],
            finals: vec![0],
            transitions: vec![(0, "zz".into(), 0)],
        };
        assert!(matches!(
            check_regular_unbounded(&letters, &nfa, &[(0, 3)], DEFAULT_CLOSURE_LIMIT),
            Err(Error::UnknownLetter(_))
        ));
    }
}
