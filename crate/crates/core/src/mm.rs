//! The max-min semiring `{0, 1, ω}` and matrices over it.
//!
//! Concrete capacities live in `ℕ ∪ {ω}` ([`Capacity`]); their qualitative
//! abstraction keeps only whether a value is zero, finite positive, or
//! unbounded ([`Mm`]). Matrix product over the abstraction uses `max` as
//! addition and `min` as multiplication, so an entry of a product tracks the
//! best bottleneck over all intermediate vertices.

use std::fmt;

/// A value of the max-min semiring, ordered `Zero < One < Omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mm {
    Zero,
    One,
    Omega,
}

impl Mm {
    pub fn max(self, other: Mm) -> Mm {
        std::cmp::max(self, other)
    }

    pub fn min(self, other: Mm) -> Mm {
        std::cmp::min(self, other)
    }

    fn code(self) -> u8 {
        match self {
            Mm::Zero => 0,
            Mm::One => 1,
            Mm::Omega => 2,
        }
    }

    fn from_code(code: u8) -> Mm {
        match code {
            0 => Mm::Zero,
            1 => Mm::One,
            _ => Mm::Omega,
        }
    }
}

impl fmt::Display for Mm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mm::Zero => write!(f, "0"),
            Mm::One => write!(f, "1"),
            Mm::Omega => write!(f, "w"),
        }
    }
}

/// An extended natural: a concrete edge capacity.
///
/// ω is a distinguished symbol, never an integer sentinel; addition saturates
/// to ω explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Capacity {
    Finite(u64),
    Omega,
}

impl Capacity {
    pub const ZERO: Capacity = Capacity::Finite(0);

    pub fn is_omega(self) -> bool {
        matches!(self, Capacity::Omega)
    }

    pub fn is_zero(self) -> bool {
        self == Capacity::ZERO
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Capacity::Finite(k) => Some(k),
            Capacity::Omega => None,
        }
    }

    pub fn add(self, other: Capacity) -> Capacity {
        match (self, other) {
            (Capacity::Finite(a), Capacity::Finite(b)) => Capacity::Finite(a.saturating_add(b)),
            _ => Capacity::Omega,
        }
    }

    /// Abstraction into the max-min semiring: 0 ↦ 0, ω ↦ ω, finite k ≥ 1 ↦ 1.
    pub fn abstracted(self) -> Mm {
        match self {
            Capacity::Finite(0) => Mm::Zero,
            Capacity::Finite(_) => Mm::One,
            Capacity::Omega => Mm::Omega,
        }
    }
}

impl PartialOrd for Capacity {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Capacity {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Capacity::Finite(a), Capacity::Finite(b)) => a.cmp(b),
            (Capacity::Finite(_), Capacity::Omega) => std::cmp::Ordering::Less,
            (Capacity::Omega, Capacity::Finite(_)) => std::cmp::Ordering::Greater,
            (Capacity::Omega, Capacity::Omega) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(k) => write!(f, "{k}"),
            Capacity::Omega => write!(f, "w"),
        }
    }
}

/// A square table of concrete capacities over a fixed vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityMatrix {
    dim: usize,
    entries: Vec<Capacity>,
}

impl CapacityMatrix {
    pub fn zero(dim: usize) -> CapacityMatrix {
        CapacityMatrix {
            dim,
            entries: vec![Capacity::ZERO; dim * dim],
        }
    }

    pub fn from_entries(dim: usize, entries: &[(usize, usize, Capacity)]) -> CapacityMatrix {
        let mut m = CapacityMatrix::zero(dim);
        for &(r, c, v) in entries {
            m.set(r, c, v);
        }
        m
    }

    /// Parses rows separated by `/`, entries separated by whitespace, with
    /// `w` for ω. Intended for compact test fixtures.
    pub fn parse(text: &str) -> CapacityMatrix {
        let rows: Vec<Vec<Capacity>> = text
            .split('/')
            .map(|row| {
                row.split_whitespace()
                    .map(|tok| {
                        if tok == "w" {
                            Capacity::Omega
                        } else {
                            Capacity::Finite(tok.parse().expect("capacity entry"))
                        }
                    })
                    .collect()
            })
            .collect();
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "square matrix expected");
        CapacityMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Capacity {
        self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Capacity) {
        self.entries[r * self.dim + c] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Capacity)> + '_ {
        let dim = self.dim;
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / dim, i % dim, v))
    }

    /// Largest finite entry.
    pub fn max_finite(&self) -> u64 {
        self.entries
            .iter()
            .filter_map(|c| c.finite())
            .max()
            .unwrap_or(0)
    }

    /// Entrywise abstraction into the max-min semiring.
    pub fn abstracted(&self) -> AbstractMatrix {
        AbstractMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|c| c.abstracted()).collect(),
        }
    }
}

/// A square matrix over the max-min semiring.
///
/// Immutable value with structural equality; [`AbstractMatrix::encode`] gives
/// the canonical byte form (row-major, 2 bits per entry) used for set
/// membership and deterministic ordering during closure computation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractMatrix {
    dim: usize,
    entries: Vec<Mm>,
}

impl AbstractMatrix {
    pub fn zero(dim: usize) -> AbstractMatrix {
        AbstractMatrix {
            dim,
            entries: vec![Mm::Zero; dim * dim],
        }
    }

    pub fn from_entries(dim: usize, entries: &[(usize, usize, Mm)]) -> AbstractMatrix {
        let mut m = AbstractMatrix::zero(dim);
        for &(r, c, v) in entries {
            m.set(r, c, v);
        }
        m
    }

    /// Parses rows separated by `/`, one character per entry: `0`, `1`, `w`.
    pub fn parse(text: &str) -> AbstractMatrix {
        let rows: Vec<Vec<Mm>> = text
            .split('/')
            .map(|row| {
                row.trim()
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '0' => Mm::Zero,
                        '1' => Mm::One,
                        'w' => Mm::Omega,
                        other => panic!("bad matrix entry `{other}`"),
                    })
                    .collect()
            })
            .collect();
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "square matrix expected");
        AbstractMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Mm {
        self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Mm) {
        self.entries[r * self.dim + c] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Mm)> + '_ {
        let dim = self.dim;
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / dim, i % dim, v))
    }

    /// Max-min matrix product: `(x·y)(v,v') = max over v'' of min(x(v,v''), y(v'',v'))`.
    pub fn product(&self, other: &AbstractMatrix) -> AbstractMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = AbstractMatrix::zero(n);
        for r in 0..n {
            for c in 0..n {
                let mut best = Mm::Zero;
                for k in 0..n {
                    best = best.max(self.get(r, k).min(other.get(k, c)));
                    if best == Mm::Omega {
                        break;
                    }
                }
                out.set(r, c, best);
            }
        }
        out
    }

    pub fn is_idempotent(&self) -> bool {
        self.product(self) == *self
    }

    /// Entrywise order: `self ≤ other`.
    pub fn leq(&self, other: &AbstractMatrix) -> bool {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a <= b)
    }

    /// Canonical byte encoding: row-major, 2 bits per entry.
    pub fn encode(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.entries.len().div_ceil(4)];
        for (i, v) in self.entries.iter().enumerate() {
            bytes[i / 4] |= v.code() << ((i % 4) * 2);
        }
        bytes
    }

    pub fn decode(dim: usize, bytes: &[u8]) -> AbstractMatrix {
        let entries = (0..dim * dim)
            .map(|i| Mm::from_code((bytes[i / 4] >> ((i % 4) * 2)) & 3))
            .collect();
        AbstractMatrix { dim, entries }
    }

    /// The pair of Boolean matrices (support of `≥ 1`, support of `= ω`).
    /// The map is an injective morphism into pairs of Boolean matrices under
    /// the ∧/∨ matrix product.
    pub fn bool_pair(&self) -> (Vec<bool>, Vec<bool>) {
        let ones = self.entries.iter().map(|&v| v >= Mm::One).collect();
        let omegas = self.entries.iter().map(|&v| v == Mm::Omega).collect();
        (ones, omegas)
    }

    /// Interprets the abstract matrix as a concrete capacity matrix
    /// (1 stays 1, ω stays ω).
    pub fn as_capacities(&self) -> CapacityMatrix {
        CapacityMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|v| match v {
                    Mm::Zero => Capacity::ZERO,
                    Mm::One => Capacity::Finite(1),
                    Mm::Omega => Capacity::Omega,
                })
                .collect(),
        }
    }
}

impl fmt::Display for AbstractMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim {
            if r > 0 {
                write!(f, " / ")?;
            }
            for c in 0..self.dim {
                write!(f, "{}", self.get(r, c))?;
            }
        }
        Ok(())
    }
}

/// Enumerates all `dim × dim` matrices over `{0, 1, ω}` in canonical
/// (row-major base-3) order. Exponential; intended for tiny dimensions.
pub fn all_matrices(dim: usize) -> impl Iterator<Item = AbstractMatrix> {
    let cells = dim * dim;
    let total = 3usize.checked_pow(cells as u32).expect("dimension too large");
    (0..total).map(move |mut i| {
        let mut m = AbstractMatrix::zero(dim);
        for cell in 0..cells {
            m.entries[cell] = Mm::from_code((i % 3) as u8);
            i /= 3;
        }
        m
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xa() -> AbstractMatrix {
        AbstractMatrix::parse("0w00/0000/0w0w/0000")
    }

    fn xb() -> AbstractMatrix {
        AbstractMatrix::parse("0000/0w10/00w0/0000")
    }

    #[test]
    fn abstraction_keeps_zero_and_omega() {
        let cap = CapacityMatrix::parse("0 w 0 0 / 0 0 0 0 / 0 w 0 w / 0 0 0 0");
        assert_eq!(cap.abstracted(), xa());
        let with_two = CapacityMatrix::parse("0 1 0 0 / 0 0 0 2 / 0 0 0 0 / 0 0 0 0");
        assert_eq!(with_two.abstracted().get(1, 3), Mm::One);
        assert_eq!(
            CapacityMatrix::zero(3).abstracted(),
            AbstractMatrix::zero(3)
        );
    }

    #[test]
    fn product_matches_printed_example() {
        let expected = AbstractMatrix::parse("0w10/0000/0w10/0000");
        assert_eq!(xa().product(&xb()), expected);
        // x_b is idempotent, so x_a·x_b^n·x_a collapses to x_a·x_b·x_a.
        let aba = xa().product(&xb()).product(&xa());
        assert_eq!(aba, AbstractMatrix::parse("0101/0000/0101/0000"));
        assert_eq!(xb().product(&xb()), xb());
    }

    #[test]
    fn idempotency() {
        assert!(xb().is_idempotent());
        assert!(AbstractMatrix::zero(4).is_idempotent());
        // x_a squares to the zero matrix, so it is not idempotent.
        assert_eq!(xa().product(&xa()), AbstractMatrix::zero(4));
        assert!(!xa().is_idempotent());
    }

    #[test]
    fn encoding_round_trips() {
        for m in [xa(), xb(), AbstractMatrix::zero(4)] {
            assert_eq!(AbstractMatrix::decode(4, &m.encode()), m);
        }
    }

    fn arb_matrix(dim: usize) -> impl Strategy<Value = AbstractMatrix> {
        proptest::collection::vec(0u8..3, dim * dim).prop_map(move |codes| {
            let mut m = AbstractMatrix::zero(dim);
            for (i, code) in codes.into_iter().enumerate() {
                m.entries[i] = Mm::from_code(code);
            }
            m
        })
    }

    proptest! {
        #[test]
        fn product_is_associative(
            x in arb_matrix(3), y in arb_matrix(3), z in arb_matrix(3)
        ) {
            prop_assert_eq!(x.product(&y).product(&z), x.product(&y.product(&z)));
        }

        #[test]
        fn product_is_monotone(
            x in arb_matrix(3), y in arb_matrix(3), z in arb_matrix(3)
        ) {
            // Lift x to a pointwise-larger matrix and compare products.
            let mut big = y.clone();
            for (r, c, v) in x.entries() {
                let cur = big.get(r, c);
                big.set(r, c, cur.max(v));
            }
            prop_assert!(y.product(&z).leq(&big.product(&z)));
            prop_assert!(z.product(&y).leq(&z.product(&big)));
        }

        #[test]
        fn bool_pair_is_a_morphism(x in arb_matrix(3), y in arb_matrix(3)) {
            let n = 3;
            let (x1, xw) = x.bool_pair();
            let (y1, yw) = y.bool_pair();
            let (p1, pw) = x.product(&y).bool_pair();
            for r in 0..n {
                for c in 0..n {
                    let one = (0..n).any(|k| x1[r * n + k] && y1[k * n + c]);
                    let om = (0..n).any(|k| xw[r * n + k] && yw[k * n + c]);
                    prop_assert_eq!(p1[r * n + c], one);
                    prop_assert_eq!(pw[r * n + c], om);
                }
            }
        }
    }
}
