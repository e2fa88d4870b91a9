//! Enumeration of basis trees and forests by degree.

use crate::forest::{Forest, Mode};
use crate::tree::{Input, Label, Tree};

/// All planar trees with `n` vertices labeled from `labels`, without flags.
pub fn vertex_trees(n: usize, labels: &[Label]) -> Vec<Tree> {
    let mut table: Vec<Vec<Tree>> = vec![Vec::new()];
    let mut seqs: Vec<Vec<Vec<Tree>>> = vec![vec![Vec::new()]];
    for k in 1..=n {
        // Trees of size k: a root over a child sequence of total size k-1.
        let mut trees = Vec::new();
        for &l in labels {
            for s in &seqs[k - 1] {
                trees.push(Tree::with_children(l, s.clone()));
            }
        }
        table.push(trees);
        // Sequences of total size k: first tree of size j, then a sequence of size k-j.
        let mut s_k = Vec::new();
        for j in 1..=k {
            for t in &table[j] {
                for rest in &seqs[k - j] {
                    let mut v = Vec::with_capacity(rest.len() + 1);
                    v.push(t.clone());
                    v.extend_from_slice(rest);
                    s_k.push(v);
                }
            }
        }
        seqs.push(s_k);
    }
    table.swap_remove(n)
}

/// All trees with `n` vertices in which every vertex has exactly two inputs, each input
/// either a child or an unlabeled flag.
pub fn binary_flagged_trees(n: usize, labels: &[Label]) -> Vec<Tree> {
    let mut table: Vec<Vec<Input>> = vec![vec![Input::Flag(None)]];
    for k in 1..=n {
        let mut level = Vec::new();
        for j in 0..k {
            for l in &table[j] {
                for r in &table[k - 1 - j] {
                    for &lab in labels {
                        level.push(Input::Child(Tree::new(lab, vec![l.clone(), r.clone()])));
                    }
                }
            }
        }
        table.push(level);
    }
    table
        .swap_remove(n)
        .into_iter()
        .filter_map(|i| match i {
            Input::Child(t) => Some(t),
            Input::Flag(_) => None,
        })
        .collect()
}

/// Forests of total degree exactly `n` built from the trees produced by `trees_of`.
/// In commutative mode only canonical (sorted) forests are returned.
pub fn forests_from(n: usize, mode: Mode, trees_of: &dyn Fn(usize) -> Vec<Tree>) -> Vec<Forest> {
    let by_size: Vec<Vec<Tree>> = (0..=n).map(|k| if k == 0 { Vec::new() } else { trees_of(k) }).collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    extend(n, mode, &by_size, &mut current, &mut out);
    out.sort();
    out
}

fn extend(remaining: usize, mode: Mode, by_size: &[Vec<Tree>], current: &mut Vec<Tree>, out: &mut Vec<Forest>) {
    if remaining == 0 {
        out.push(Forest::new(current.clone()));
        return;
    }
    for k in 1..=remaining {
        for t in &by_size[k] {
            if mode == Mode::Commutative {
                if let Some(last) = current.last() {
                    if t < last {
                        continue;
                    }
                }
            }
            current.push(t.clone());
            extend(remaining - k, mode, by_size, current, out);
            current.pop();
        }
    }
}

/// Vertex-labeled forests of degree exactly `n`.
pub fn vertex_forests(n: usize, labels: &[Label], mode: Mode) -> Vec<Forest> {
    forests_from(n, mode, &|k| vertex_trees(k, labels))
}

/// Vertex-labeled forests of every degree up to `max_degree`, in basis order.
pub fn vertex_forests_upto(max_degree: usize, labels: &[Label], mode: Mode) -> Vec<Forest> {
    (0..=max_degree).flat_map(|n| vertex_forests(n, labels, mode)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_tree_counts_are_catalan() {
        let counts: Vec<usize> = (1..=6).map(|n| vertex_trees(n, &[Label::B]).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 14, 42]);
        assert_eq!(vertex_trees(3, &Label::ALL).len(), 2 * 64);
    }

    #[test]
    fn binary_tree_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| binary_flagged_trees(n, &[Label::B]).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 14, 42]);
        assert_eq!(binary_flagged_trees(2, &[Label::B, Label::C, Label::R]).len(), 18);
    }

    #[test]
    fn forest_counts() {
        // Ordered forests of single-label planar trees: degree n gives Catalan(n).
        let nc: Vec<usize> = (0..=5)
            .map(|n| vertex_forests(n, &[Label::B], Mode::NonCommutative).len())
            .collect();
        assert_eq!(nc, vec![1, 1, 2, 5, 14, 42]);
        let comm: Vec<usize> = (0..=4)
            .map(|n| vertex_forests(n, &[Label::B], Mode::Commutative).len())
            .collect();
        // Multisets of planar trees: degree 4 has 5 trees + 2 + 1 + 1 + 1.
        assert_eq!(comm, vec![1, 1, 2, 4, 10]);
    }
}
