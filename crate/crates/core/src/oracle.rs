//! Independent brute-force baselines used by the test suites.
//!
//! Deliberately shares no product, iteration or closure code with the flow
//! module beyond the raw matrix value type, so it can serve as a second
//! opinion on everything the solver computes.

use crate::mm::{AbstractMatrix, Capacity, CapacityMatrix, Mm};
use crate::pipeline;
use std::collections::HashSet;

/// Best value over all words up to a length, with the per-length table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteResult {
    pub best: Capacity,
    pub best_word: Vec<String>,
    /// `table[i]` is the best flow over words of length `i + 1`.
    pub table: Vec<Capacity>,
}

/// Enumerates every capacity word of length `1..=max_len` and takes the best
/// pipeline max-flow. Stops at the end of a length once ω is witnessed.
pub fn brute_optimal(
    letters: &[(String, CapacityMatrix)],
    source: usize,
    target: usize,
    max_len: usize,
) -> BruteResult {
    let mut best = Capacity::ZERO;
    let mut best_word: Vec<String> = Vec::new();
    let mut table = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        let mut best_at_len = Capacity::ZERO;
        let mut indices = vec![0usize; len];
        loop {
            let word: Vec<&CapacityMatrix> = indices.iter().map(|&i| &letters[i].1).collect();
            let value = pipeline::max_flow_word(&word, source, target);
            if value > best_at_len {
                best_at_len = value;
            }
            if value > best {
                best = value;
                best_word = indices.iter().map(|&i| letters[i].0.clone()).collect();
            }
            // next word of this length
            let mut pos = 0;
            loop {
                if pos == len {
                    break;
                }
                indices[pos] += 1;
                if indices[pos] < letters.len() {
                    break;
                }
                indices[pos] = 0;
                pos += 1;
            }
            if pos == len {
                break;
            }
        }
        table.push(best_at_len);
        if best == Capacity::Omega {
            break;
        }
    }
    BruteResult {
        best,
        best_word,
        table,
    }
}

// A second, self-contained implementation of the max-min product and the
// iteration, kept apart from the solver's on purpose.

fn product_independent(x: &AbstractMatrix, y: &AbstractMatrix) -> AbstractMatrix {
    let n = x.dim();
    let mut out = AbstractMatrix::zero(n);
    for r in 0..n {
        for c in 0..n {
            let mut best = Mm::Zero;
            for k in 0..n {
                let through = if x.get(r, k) <= y.get(k, c) {
                    x.get(r, k)
                } else {
                    y.get(k, c)
                };
                if through > best {
                    best = through;
                }
            }
            out.set(r, c, best);
        }
    }
    out
}

fn sharp_independent(e: &AbstractMatrix) -> AbstractMatrix {
    let n = e.dim();
    let mut out = e.clone();
    for v in 0..n {
        for w in 0..n {
            if e.get(v, w) != Mm::One {
                continue;
            }
            let mut unstable = false;
            for v0 in 0..n {
                for w0 in 0..n {
                    if e.get(v, v0) == Mm::Omega
                        && e.get(v0, w0) == Mm::One
                        && e.get(w0, w) == Mm::Omega
                    {
                        unstable = true;
                    }
                }
            }
            if unstable {
                out.set(v, w, Mm::Omega);
            }
        }
    }
    out
}

/// Naive fixpoint closure membership: saturates the generator set under
/// product and iteration with no provenance or ordering, then tests `x`.
pub fn brute_membership(letters: &[(String, AbstractMatrix)], x: &AbstractMatrix) -> bool {
    brute_closure(letters).iter().any(|m| m == x)
}

/// The raw saturated set itself, for exhaustive comparisons.
pub fn brute_closure(letters: &[(String, AbstractMatrix)]) -> Vec<AbstractMatrix> {
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut elements: Vec<AbstractMatrix> = Vec::new();
    for (_, m) in letters {
        if seen.insert(m.encode()) {
            elements.push(m.clone());
        }
    }
    loop {
        let mut fresh = Vec::new();
        for a in &elements {
            for b in &elements {
                let p = product_independent(a, b);
                if !seen.contains(&p.encode()) {
                    fresh.push(p);
                }
            }
            if product_independent(a, a) == *a {
                let s = sharp_independent(a);
                if !seen.contains(&s.encode()) {
                    fresh.push(s);
                }
            }
        }
        if fresh.is_empty() {
            return elements;
        }
        for m in fresh {
            if seen.insert(m.encode()) {
                elements.push(m);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowSemigroup;

    fn fig1_c() -> (String, CapacityMatrix) {
        (
            "c".into(),
            CapacityMatrix::parse("0 w 0 0 / 0 1 1 0 / 0 0 1 w / 0 0 0 0"),
        )
    }

    #[test]
    fn brute_tables_match_the_printed_values() {
        let letters = vec![fig1_c()];
        let result = brute_optimal(&letters, 0, 3, 5);
        let want: Vec<Capacity> = [0, 0, 1, 2, 2]
            .iter()
            .map(|&k| Capacity::Finite(k))
            .collect();
        assert_eq!(result.table, want);
        assert_eq!(result.best, Capacity::Finite(2));

        // The one-letter word d admits no source-target path (all paths have
        // length two), so its pipeline value is 0; dd carries 2.
        let d = (
            "d".to_string(),
            CapacityMatrix::parse("0 w 1 0 / 0 0 0 1 / 0 0 0 w / 0 0 0 0"),
        );
        let result = brute_optimal(&[d], 0, 3, 3);
        let want: Vec<Capacity> = [0, 2, 0].iter().map(|&k| Capacity::Finite(k)).collect();
        assert_eq!(result.table, want);
        assert_eq!(result.best, Capacity::Finite(2));

        let e = (
            "e".to_string(),
            CapacityMatrix::parse("0 1 w 0 / 0 0 0 2 / 0 1 0 0 / 0 0 0 0"),
        );
        let result = brute_optimal(&[e, fig1_c()], 0, 3, 2);
        assert_eq!(result.best, Capacity::Omega);
        assert_eq!(result.best_word, vec!["e".to_string(), "c".to_string()]);
    }

    #[test]
    fn membership_agrees_with_the_generated_closure() {
        let letters = vec![
            (
                "a".to_string(),
                AbstractMatrix::parse("0w00/0000/0w0w/0000"),
            ),
            (
                "b".to_string(),
                AbstractMatrix::parse("0000/0w10/00w0/0000"),
            ),
        ];
        let closure = FlowSemigroup::generate(&letters).unwrap();
        let brute = brute_closure(&letters);
        assert_eq!(brute.len(), closure.len());
        for m in &brute {
            assert!(closure.contains(m));
        }
        assert!(brute_membership(
            &letters,
            &AbstractMatrix::parse("0000/0ww0/00w0/0000")
        ));
        assert!(!brute_membership(
            &letters,
            &AbstractMatrix::parse("0000/w000/0000/0000")
        ));
        for (_, g) in &letters {
            assert!(brute_membership(&letters, g));
        }
    }
}
