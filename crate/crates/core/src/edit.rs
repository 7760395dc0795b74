//! Unit-cost Levenshtein alignment with a deterministic backtrace.
//!
//! Both the metrics and the confusion model read their operations from here,
//! so edit counts and channel statistics always agree on how a pair aligns.
//! When several optimal alignments exist the backtrace, walking from the end
//! of both sequences, prefers the diagonal step (match or substitution), then
//! a deletion, then an insertion.

/// One step of an alignment from a reference sequence to a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignOp<T> {
    Match(T),
    Substitute { reference: T, hypothesis: T },
    /// Reference unit with no counterpart in the hypothesis.
    Delete(T),
    /// Hypothesis unit with no counterpart in the reference.
    Insert(T),
}

impl<T> AlignOp<T> {
    pub fn is_edit(&self) -> bool {
        !matches!(self, AlignOp::Match(_))
    }
}

/// Full cost matrix, row-major with `hyp.len() + 1` columns.
fn cost_matrix<T: PartialEq>(reference: &[T], hyp: &[T]) -> Vec<usize> {
    let cols = hyp.len() + 1;
    let mut d = vec![0usize; (reference.len() + 1) * cols];
    for (j, cell) in d.iter_mut().enumerate().take(cols) {
        *cell = j;
    }
    for i in 1..=reference.len() {
        d[i * cols] = i;
        for j in 1..cols {
            let diag = d[(i - 1) * cols + j - 1] + usize::from(reference[i - 1] != hyp[j - 1]);
            let del = d[(i - 1) * cols + j] + 1;
            let ins = d[i * cols + j - 1] + 1;
            d[i * cols + j] = diag.min(del).min(ins);
        }
    }
    d
}

/// Walks the cost matrix back from the corner, calling `visit` for each step
/// in reverse order.
fn backtrace<T: PartialEq + Clone>(
    reference: &[T],
    hyp: &[T],
    mut visit: impl FnMut(AlignOp<T>),
) -> usize {
    let cols = hyp.len() + 1;
    let d = cost_matrix(reference, hyp);
    let (mut i, mut j) = (reference.len(), hyp.len());
    while i > 0 || j > 0 {
        let here = d[i * cols + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hyp[j - 1];
            if here == d[(i - 1) * cols + j - 1] + usize::from(!same) {
                visit(if same {
                    AlignOp::Match(reference[i - 1].clone())
                } else {
                    AlignOp::Substitute {
                        reference: reference[i - 1].clone(),
                        hypothesis: hyp[j - 1].clone(),
                    }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * cols + j] + 1 {
            visit(AlignOp::Delete(reference[i - 1].clone()));
            i -= 1;
        } else {
            visit(AlignOp::Insert(hyp[j - 1].clone()));
            j -= 1;
        }
    }
    d[reference.len() * cols + hyp.len()]
}

/// Minimal-cost alignment of `reference` onto `hyp`, in sequence order.
pub fn align<T: PartialEq + Clone>(reference: &[T], hyp: &[T]) -> Vec<AlignOp<T>> {
    let mut ops = Vec::with_capacity(reference.len().max(hyp.len()));
    backtrace(reference, hyp, |op| ops.push(op));
    ops.reverse();
    ops
}

/// Substitution, deletion and insertion counts under the backtrace tie-break.
pub(crate) fn count_ops<T: PartialEq + Clone>(reference: &[T], hyp: &[T]) -> (usize, usize, usize) {
    let (mut s, mut d, mut i) = (0, 0, 0);
    backtrace(reference, hyp, |op| match op {
        AlignOp::Match(_) => {}
        AlignOp::Substitute { .. } => s += 1,
        AlignOp::Delete(_) => d += 1,
        AlignOp::Insert(_) => i += 1,
    });
    (s, d, i)
}

/// Plain Levenshtein distance with unit costs.
pub fn distance<T: PartialEq>(reference: &[T], hyp: &[T]) -> usize {
    let d = cost_matrix(reference, hyp);
    d[d.len() - 1]
}

/// Rebuilds the hypothesis from an alignment.
pub fn replay<T: Clone>(ops: &[AlignOp<T>]) -> Vec<T> {
    ops.iter()
        .filter_map(|op| match op {
            AlignOp::Match(x) | AlignOp::Insert(x) => Some(x.clone()),
            AlignOp::Substitute { hypothesis, .. } => Some(hypothesis.clone()),
            AlignOp::Delete(_) => None,
        })
        .collect()
}
