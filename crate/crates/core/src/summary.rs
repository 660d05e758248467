//! Bounded-height factorization trees for words over a finite semigroup:
//! block decompositions, summaries, and ♯-summaries.
//!
//! A summary of a word is an ordered binary tree whose leaves are single
//! letters, whose product nodes multiply their children, and whose idempotent
//! nodes keep only the first and last of a run of infixes that all evaluate
//! to one idempotent. Unlike a full factorization forest it skips the middle
//! of such runs, which is what makes constant height (in the word length)
//! possible. A ♯-summary additionally relabels idempotent nodes `e` with
//! `e♯`, so its root evaluates the word as if idempotent runs were iterated
//! unboundedly.
//!
//! The Ramsey-style threshold used by the cutting algorithm can be the exact
//! Ramsey number when the bounded search finishes, or any substitute with the
//! guaranteed-block-prefix property; all height bounds are stated in terms of
//! whichever value was used.

use crate::semigroup::{
    green_compare, ramsey_number, regular_j_length, regular_j_length_below, FiniteSemigroup,
    GreenData, RamseyResult,
};
use std::hash::Hash;

/// Node kind of a summary tree. Idempotent nodes of ♯-summaries carry the
/// middle-piece witnesses required by the definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SummaryKind {
    Leaf,
    Product,
    Idempotent { witnesses: Vec<Summary> },
}

/// An ordered binary factorization tree over a word; `element` is the node
/// label and `span` the half-open word range it describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub kind: SummaryKind,
    pub element: usize,
    pub span: (usize, usize),
    pub children: Vec<Summary>,
}

impl Summary {
    fn leaf(element: usize, pos: (usize, usize)) -> Summary {
        Summary {
            kind: SummaryKind::Leaf,
            element,
            span: pos,
            children: Vec::new(),
        }
    }

    /// Height with leaves at 0.
    pub fn height(&self) -> usize {
        self.children
            .iter()
            .map(|c| 1 + c.height())
            .max()
            .unwrap_or(0)
    }

    /// Total number of nodes (witnesses not counted).
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Summary::size).sum::<usize>()
    }

    /// Maximal number of unstable idempotent nodes along a root-leaf branch,
    /// where a node is unstable iff its label differs from its children's.
    pub fn max_unstable_per_branch(&self) -> usize {
        let here = match &self.kind {
            SummaryKind::Idempotent { .. } => {
                usize::from(self.children[0].element != self.element)
            }
            _ => 0,
        };
        here + self
            .children
            .iter()
            .map(Summary::max_unstable_per_branch)
            .max()
            .unwrap_or(0)
    }
}

/// Precomputed per-semigroup data for summary construction.
pub struct SummaryContext<'a, T> {
    pub semigroup: &'a FiniteSemigroup<T>,
    pub green: GreenData,
    pub jlen: usize,
    pub jlen_below: Vec<usize>,
    /// Window within which the cutting algorithm searches for minimal block
    /// prefixes; cutting stops when no more than this many letters remain.
    pub cut_window: usize,
    /// The exact Ramsey number of order 3, when its search completed. The
    /// window equals it in that case.
    pub exact_ramsey3: Option<u64>,
    /// log₂ of the Ramsey-3 value backing the height-bound formula: the
    /// exact value when known, else the bracket upper bound.
    sound_log2_r3: f64,
}

pub const DEFAULT_RAMSEY_STATE_BUDGET: usize = 10_000;

/// Fallback cut window when the exact Ramsey number is out of reach. Cutting
/// with a smaller window than the true Ramsey number is always sound (blocks
/// are validated structurally; stretches without a block in the window are
/// left to the product stage), it just cuts more eagerly than the literal
/// algorithm.
pub const DEFAULT_CUT_WINDOW: usize = 8;

impl<'a, T: Clone + Eq + Hash> SummaryContext<'a, T> {
    /// Builds the context, attempting the exact Ramsey number of order 3
    /// within the given search budget and falling back to
    /// [`DEFAULT_CUT_WINDOW`] with the bracket backing the bound formula.
    pub fn new(semigroup: &'a FiniteSemigroup<T>, ramsey_budget: usize) -> SummaryContext<'a, T> {
        let green = green_compare(semigroup);
        match ramsey_number(semigroup, &green, 3, ramsey_budget) {
            RamseyResult::Exact(n) => {
                let mut ctx = SummaryContext::with_cut_window(
                    semigroup,
                    green,
                    usize::try_from(n).unwrap_or(usize::MAX),
                );
                ctx.exact_ramsey3 = Some(n);
                ctx.sound_log2_r3 = (n.max(2) as f64).log2();
                ctx
            }
            RamseyResult::Bracket { upper, .. } => {
                let bits = upper.bits() as f64;
                let mut ctx =
                    SummaryContext::with_cut_window(semigroup, green, DEFAULT_CUT_WINDOW);
                ctx.sound_log2_r3 = bits.max(1.0);
                ctx
            }
        }
    }

    /// Uses an explicit cutting window. Decompositions built with any window
    /// are validated structurally; the height-bound formula is backed by the
    /// bracket in this case.
    pub fn with_cut_window(
        semigroup: &'a FiniteSemigroup<T>,
        green: GreenData,
        cut_window: usize,
    ) -> SummaryContext<'a, T> {
        let jlen = regular_j_length(semigroup, &green);
        let jlen_below = (0..semigroup.len())
            .map(|x| regular_j_length_below(semigroup, &green, x))
            .collect();
        let (_, upper) = crate::semigroup::ramsey_bracket(semigroup, &green, 3);
        SummaryContext {
            semigroup,
            green,
            jlen,
            jlen_below,
            cut_window,
            exact_ramsey3: None,
            sound_log2_r3: (upper.bits() as f64).max(1.0),
        }
    }

    /// Height bound `L(S) · (log₂|S| + 2·log₂(R) + 4)` with `R` the exact
    /// Ramsey number when known and its bracket upper bound otherwise.
    pub fn summary_height_bound(&self) -> f64 {
        let size = self.semigroup.len().max(2) as f64;
        self.jlen.max(1) as f64 * (size.log2() + 2.0 * self.sound_log2_r3 + 4.0)
    }
}

/// One block `u·α·β·γ` with `φ(α) = φ(β) = φ(γ)` idempotent; ranges are
/// half-open over the word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub u: (usize, usize),
    pub alpha: (usize, usize),
    pub beta: (usize, usize),
    pub gamma: (usize, usize),
    pub idem: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub blocks: Vec<Block>,
    pub tail: (usize, usize),
}

fn eval_range<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    word: &[usize],
    range: (usize, usize),
) -> usize {
    s.eval_word(&word[range.0..range.1])
}

/// Finds the minimal block prefix of `word[from..]`, if any: the smallest
/// end such that `word[from..end]` splits as `u α β γ` with the three parts
/// evaluating to one idempotent. Returns the block with the lexicographically
/// first split `(|u|, |α|, |β|)`.
fn minimal_block_prefix<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    word: &[usize],
    from: usize,
    end_limit: usize,
) -> Option<Block> {
    for end in from + 3..=end_limit {
        // value[i][j] = eval of word[i..j] for from ≤ i < j ≤ end
        let len = end - from;
        let mut value = vec![vec![usize::MAX; len + 1]; len + 1];
        for i in 0..len {
            let mut acc = word[from + i];
            value[i][i + 1] = acc;
            for j in i + 1..len {
                acc = s.mul(acc, word[from + j]);
                value[i][j + 1] = acc;
            }
        }
        for q0 in 0..len - 2 {
            for q1 in q0 + 1..len - 1 {
                let a = value[q0][q1];
                if !s.is_idempotent(a) {
                    continue;
                }
                for q2 in q1 + 1..len {
                    if value[q1][q2] == a && value[q2][len] == a {
                        return Some(Block {
                            u: (from, from + q0),
                            alpha: (from + q0, from + q1),
                            beta: (from + q1, from + q2),
                            gamma: (from + q2, end),
                            idem: a,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Cuts a word into blocks greedily while more than the cut window remains,
/// then merges blocks that share an idempotent whenever the merged middle
/// still evaluates to it.
pub fn block_decomposition<T: Clone + Eq + Hash>(
    ctx: &SummaryContext<'_, T>,
    word: &[usize],
) -> BlockDecomposition {
    block_decomposition_guarded(ctx, word, ctx.cut_window)
}

/// As [`block_decomposition`], with an explicit remainder guard. The summary
/// construction cuts with no guard at all: it wants idempotent runs exposed
/// wherever they exist, however short the word.
fn block_decomposition_guarded<T: Clone + Eq + Hash>(
    ctx: &SummaryContext<'_, T>,
    word: &[usize],
    guard: usize,
) -> BlockDecomposition {
    let s = ctx.semigroup;
    let mut blocks = Vec::new();
    let mut i = 0;
    while word.len() - i > guard {
        match minimal_block_prefix(s, word, i, word.len()) {
            Some(block) => {
                i = block.gamma.1;
                blocks.push(block);
            }
            None => break,
        }
    }
    let mut decomposition = BlockDecomposition {
        blocks,
        tail: (i, word.len()),
    };
    // Reduction: merge blocks i < j with equal idempotents when everything
    // from β_i through β_j evaluates to that idempotent.
    'merge: loop {
        let blocks = &decomposition.blocks;
        for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                if blocks[i].idem != blocks[j].idem {
                    continue;
                }
                let e = blocks[i].idem;
                let middle = (blocks[i].beta.0, blocks[j].beta.1);
                if eval_range(s, word, middle) == e {
                    let merged = Block {
                        u: blocks[i].u,
                        alpha: blocks[i].alpha,
                        beta: middle,
                        gamma: blocks[j].gamma,
                        idem: e,
                    };
                    decomposition.blocks.splice(i..=j, [merged]);
                    continue 'merge;
                }
            }
        }
        break;
    }
    // Absorb a prefix of the tail into the last block while its idempotent
    // keeps covering it: the old γ and absorbed letters join β, a short new
    // γ is taken from the absorbed stretch.
    'absorb: loop {
        let Some(last) = decomposition.blocks.last() else {
            break;
        };
        let e = last.idem;
        let (tail_start, tail_end) = decomposition.tail;
        for k in (tail_start + 1..=tail_end).rev() {
            for j in (tail_start..k).rev() {
                if eval_range(s, word, (j, k)) == e
                    && eval_range(s, word, (last.beta.0, j)) == e
                {
                    let last = decomposition.blocks.last_mut().unwrap();
                    last.beta = (last.beta.0, j);
                    last.gamma = (j, k);
                    decomposition.tail = (k, tail_end);
                    continue 'absorb;
                }
            }
        }
        break;
    }
    decomposition
}

/// Checks the three block-decomposition conditions, with part lengths
/// measured against the provided threshold.
pub fn validate_block_decomposition<T: Clone + Eq + Hash>(
    ctx: &SummaryContext<'_, T>,
    word: &[usize],
    d: &BlockDecomposition,
    max_part: usize,
) -> bool {
    let s = ctx.semigroup;
    let mut pos = 0;
    for b in &d.blocks {
        if b.u.0 != pos
            || b.u.1 != b.alpha.0
            || b.alpha.1 != b.beta.0
            || b.beta.1 != b.gamma.0
            || b.alpha.0 >= b.alpha.1
            || b.beta.0 >= b.beta.1
            || b.gamma.0 >= b.gamma.1
        {
            return false;
        }
        if b.u.1 - b.u.0 > max_part
            || b.alpha.1 - b.alpha.0 > max_part
            || b.gamma.1 - b.gamma.0 > max_part
        {
            return false;
        }
        if !s.is_idempotent(b.idem)
            || eval_range(s, word, b.alpha) != b.idem
            || eval_range(s, word, b.beta) != b.idem
            || eval_range(s, word, b.gamma) != b.idem
        {
            return false;
        }
        pos = b.gamma.1;
    }
    pos == d.tail.0 && d.tail.1 == word.len()
}

/// Balanced product tree over a nonempty list of subtrees; the left half
/// takes the extra subtree on odd splits.
fn balanced_product<T: Clone + Eq + Hash>(
    s: &FiniteSemigroup<T>,
    mut items: Vec<Summary>,
) -> Summary {
    assert!(!items.is_empty());
    if items.len() == 1 {
        return items.pop().unwrap();
    }
    let right_items = items.split_off(items.len().div_ceil(2));
    let left = balanced_product(s, items);
    let right = balanced_product(s, right_items);
    Summary {
        kind: SummaryKind::Product,
        element: s.mul(left.element, right.element),
        span: (left.span.0, right.span.1),
        children: vec![left, right],
    }
}

/// Builds a summary of `word` whose result is its product and whose height
/// telescopes over the regular 𝒥-length layers of the semigroup.
pub fn build_summary<T: Clone + Eq + Hash>(ctx: &SummaryContext<'_, T>, word: &[usize]) -> Summary {
    assert!(!word.is_empty(), "summaries are defined for nonempty words");
    let letters: Vec<Summary> = word
        .iter()
        .enumerate()
        .map(|(i, &x)| Summary::leaf(x, (i, i + 1)))
        .collect();
    summarize(ctx, &letters)
}

/// Core constructor shared by summaries and ♯-summaries: the "letters" are
/// arbitrary subtrees (single word letters in the plain case).
fn summarize<T: Clone + Eq + Hash>(ctx: &SummaryContext<'_, T>, letters: &[Summary]) -> Summary {
    let s = ctx.semigroup;
    if letters.len() == 1 {
        return letters[0].clone();
    }
    let total = s.eval_word(&letters.iter().map(|l| l.element).collect::<Vec<_>>());
    let mu = ctx.jlen_below[total];

    // Cut into pieces: each piece is the shortest remaining prefix whose
    // value reaches 𝒥-layer μ, recorded as (strictly-higher-layer prefix,
    // closing letter). A trailing remainder that never reaches μ is folded
    // into the last piece.
    struct Piece {
        prefix: (usize, usize),
        letter: usize,
        value: usize,
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let mut tail: Option<(usize, usize)> = None;
    let mut pos = 0;
    while pos < letters.len() {
        let mut q = pos;
        let mut acc = letters[q].element;
        while ctx.jlen_below[acc] > mu && q + 1 < letters.len() {
            q += 1;
            acc = s.mul(acc, letters[q].element);
        }
        if ctx.jlen_below[acc] > mu {
            tail = Some((pos, letters.len()));
            break;
        }
        pieces.push(Piece {
            prefix: (pos, q),
            letter: q,
            value: acc,
        });
        pos = q + 1;
    }
    debug_assert!(!pieces.is_empty(), "the full word reaches layer μ");

    let trees: Vec<Summary> = pieces
        .iter()
        .map(|p| {
            if p.prefix.0 == p.prefix.1 {
                letters[p.letter].clone()
            } else {
                let sub = summarize(ctx, &letters[p.prefix.0..p.prefix.1]);
                let letter = letters[p.letter].clone();
                Summary {
                    kind: SummaryKind::Product,
                    element: p.value,
                    span: (sub.span.0, letter.span.1),
                    children: vec![sub, letter],
                }
            }
        })
        .collect();
    let tail_tree = tail.map(|range| summarize(ctx, &letters[range.0..range.1]));
    if trees.len() == 1 && tail_tree.is_none() {
        return trees.into_iter().next().unwrap();
    }

    // All piece values now live in 𝒥-layer μ: cut their value word into
    // idempotent blocks and connect everything (plus the higher-layer tail,
    // when present) with balanced products.
    let values: Vec<usize> = trees.iter().map(|t| t.element).collect();
    let d = block_decomposition_guarded(ctx, &values, 0);
    let mut items: Vec<Summary> = Vec::new();
    let slice_tree = |range: (usize, usize)| -> Option<Summary> {
        (range.0 < range.1).then(|| balanced_product(s, trees[range.0..range.1].to_vec()))
    };
    for b in &d.blocks {
        if let Some(u) = slice_tree(b.u) {
            items.push(u);
        }
        let alpha = slice_tree(b.alpha).expect("alpha is nonempty");
        let gamma = slice_tree(b.gamma).expect("gamma is nonempty");
        items.push(Summary {
            kind: SummaryKind::Idempotent {
                witnesses: Vec::new(),
            },
            element: b.idem,
            span: (alpha.span.0, gamma.span.1),
            children: vec![alpha, gamma],
        });
    }
    if let Some(t) = slice_tree(d.tail) {
        items.push(t);
    }
    items.extend(tail_tree);
    balanced_product(s, items)
}

/// Validates a plain summary against a word and returns the root element.
pub fn validate_summary<T: Clone + Eq + Hash>(
    ctx: &SummaryContext<'_, T>,
    word: &[usize],
    node: &Summary,
) -> Option<usize> {
    let s = ctx.semigroup;
    match &node.kind {
        SummaryKind::Leaf => {
            (node.span.1 == node.span.0 + 1 && word[node.span.0] == node.element)
                .then_some(node.element)
        }
        SummaryKind::Product => {
            let [a, b] = node.children.as_slice() else {
                return None;
            };
            let va = validate_summary(ctx, word, a)?;
            let vb = validate_summary(ctx, word, b)?;
            (a.span.1 == b.span.0
                && node.span == (a.span.0, b.span.1)
                && s.mul(va, vb) == node.element)
                .then_some(node.element)
        }
        SummaryKind::Idempotent { witnesses } => {
            if !witnesses.is_empty() {
                return None;
            }
            let [a, b] = node.children.as_slice() else {
                return None;
            };
            let va = validate_summary(ctx, word, a)?;
            let vb = validate_summary(ctx, word, b)?;
            let e = node.element;
            (va == e
                && vb == e
                && s.is_idempotent(e)
                && node.span == (a.span.0, b.span.1)
                && a.span.1 < b.span.0
                && eval_range(s, word, (a.span.1, b.span.0)) == e)
                .then_some(e)
        }
    }
}

/// Builds a ♯-summary of a word over a sharp-closed semigroup; `sharp_of`
/// maps each idempotent element id to the id of its iteration (and is the
/// identity elsewhere).
///
/// Follows the rewriting construction: repeatedly take a plain summary, pick
/// a deepest unstable idempotent node, promote its label to the iteration,
/// and collapse its span to that single value in a shorter word. The plain
/// summary found once no unstable node remains closes the recursion.
pub fn build_sharp_summary<T: Clone + Eq + Hash>(
    ctx: &SummaryContext<'_, T>,
    word: &[usize],
    sharp_of: &[usize],
) -> Summary {
    assert!(!word.is_empty(), "summaries are defined for nonempty words");
    let mut letters: Vec<Summary> = word
        .iter()
        .enumerate()
        .map(|(i, &x)| Summary::leaf(x, (i, i + 1)))
        .collect();
    loop {
        let atoms: Vec<(usize, usize)> = letters.iter().map(|l| l.span).collect();
        let plain = summarize(ctx, &letters);
        match deepest_unstable(&plain, sharp_of, &atoms, 0) {
            None => return attach_witnesses(ctx, plain, &letters),
            Some((_, subtree)) => {
                let span = subtree.span;
                let from = letters.iter().position(|l| l.span.0 == span.0).unwrap();
                let to = letters.iter().position(|l| l.span.1 == span.1).unwrap();
                let mut promoted = attach_witnesses(ctx, subtree, &letters);
                debug_assert!(matches!(promoted.kind, SummaryKind::Idempotent { .. }));
                promoted.element = sharp_of[promoted.children[0].element];
                letters.splice(from..=to, [promoted]);
            }
        }
    }
}

/// Locates a deepest unstable idempotent node above the atom level (ties to
/// the left), returning its depth and a clone of its subtree. Subtrees whose
/// span matches an atom are previously promoted letters and are not
/// descended into.
fn deepest_unstable(
    node: &Summary,
    sharp_of: &[usize],
    atoms: &[(usize, usize)],
    depth: usize,
) -> Option<(usize, Summary)> {
    if atoms.contains(&node.span) {
        return None;
    }
    let mut best: Option<(usize, Summary)> = None;
    if let SummaryKind::Idempotent { .. } = node.kind {
        if sharp_of[node.element] != node.element {
            best = Some((depth, node.clone()));
        }
    }
    for child in &node.children {
        if let Some(found) = deepest_unstable(child, sharp_of, atoms, depth + 1) {
            let replace = match &best {
                None => true,
                Some((d, _)) => found.0 > *d,
            };
            if replace {
                best = Some(found);
            }
        }
    }
    best
}

/// Converts a freshly built plain summary over subtree "letters" into
/// ♯-summary form: every idempotent node above the letter level receives a
/// witness tree (a balanced product of the letters it skipped) for its
/// middle. Letter subtrees are already in ♯-summary form and left untouched.
fn attach_witnesses<T: Clone + Eq + Hash>(
    ctx: &SummaryContext<'_, T>,
    node: Summary,
    letters: &[Summary],
) -> Summary {
    if letters.iter().any(|l| l.span == node.span) {
        return node;
    }
    let Summary {
        kind,
        element,
        span,
        children,
    } = node;
    let children: Vec<Summary> = children
        .into_iter()
        .map(|c| attach_witnesses(ctx, c, letters))
        .collect();
    match kind {
        SummaryKind::Idempotent { .. } => {
            let middle = (children[0].span.1, children[1].span.0);
            let skipped: Vec<Summary> = letters
                .iter()
                .filter(|l| middle.0 <= l.span.0 && l.span.1 <= middle.1)
                .cloned()
                .collect();
            let witness = balanced_product(ctx.semigroup, skipped);
            debug_assert_eq!(witness.element, element);
            debug_assert_eq!(witness.span, middle);
            Summary {
                kind: SummaryKind::Idempotent {
                    witnesses: vec![witness],
                },
                element,
                span,
                children,
            }
        }
        other => Summary {
            kind: other,
            element,
            span,
            children,
        },
    }
}

/// Validates a ♯-summary against a word, returning the root element of its
/// induced ♯-evaluation.
pub fn validate_sharp_summary<T: Clone + Eq + Hash>(
    ctx: &SummaryContext<'_, T>,
    word: &[usize],
    sharp_of: &[usize],
    node: &Summary,
) -> Option<usize> {
    let s = ctx.semigroup;
    match &node.kind {
        SummaryKind::Leaf => {
            (node.span.1 == node.span.0 + 1 && word[node.span.0] == node.element)
                .then_some(node.element)
        }
        SummaryKind::Product => {
            let [a, b] = node.children.as_slice() else {
                return None;
            };
            let va = validate_sharp_summary(ctx, word, sharp_of, a)?;
            let vb = validate_sharp_summary(ctx, word, sharp_of, b)?;
            (a.span.1 == b.span.0
                && node.span == (a.span.0, b.span.1)
                && s.mul(va, vb) == node.element)
                .then_some(node.element)
        }
        SummaryKind::Idempotent { witnesses } => {
            let [a, b] = node.children.as_slice() else {
                return None;
            };
            let e = validate_sharp_summary(ctx, word, sharp_of, a)?;
            if validate_sharp_summary(ctx, word, sharp_of, b)? != e || !s.is_idempotent(e) {
                return None;
            }
            if node.element != sharp_of[e] || node.span != (a.span.0, b.span.1) {
                return None;
            }
            // Witnesses must tile the skipped middle and each must be a
            // ♯-summary rooted at the idempotent itself.
            if witnesses.is_empty() {
                return None;
            }
            let mut pos = a.span.1;
            for w in witnesses {
                if w.span.0 != pos || validate_sharp_summary(ctx, word, sharp_of, w)? != e {
                    return None;
                }
                pos = w.span.1;
            }
            (pos == b.span.0).then_some(node.element)
        }
    }
}
