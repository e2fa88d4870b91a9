//! Forests: monomials of the free (or free commutative) algebra on trees.

use std::fmt;

use crate::tree::Tree;

/// Noncommutative (ordered forests) or commutative (multisets of trees) algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    NonCommutative,
    Commutative,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::NonCommutative => "nc",
            Mode::Commutative => "comm",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        match s {
            "nc" => Some(Mode::NonCommutative),
            "comm" => Some(Mode::Commutative),
            _ => None,
        }
    }
}

/// An ordered sequence of trees. The empty forest is the unit.
///
/// Field order matters: the derived `Ord` compares total degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Forest {
    degree: usize,
    trees: Vec<Tree>,
}

impl Forest {
    pub fn unit() -> Forest {
        Forest::default()
    }

    pub fn new(trees: Vec<Tree>) -> Forest {
        let degree = trees.iter().map(Tree::size).sum();
        Forest { degree, trees }
    }

    pub fn single(t: Tree) -> Forest {
        Forest::new(vec![t])
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn into_trees(self) -> Vec<Tree> {
        self.trees
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_unit(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Canonical representative: identity in noncommutative mode, sorted trees otherwise.
    pub fn canonicalize(mut self, mode: Mode) -> Forest {
        if mode == Mode::Commutative {
            self.trees.sort();
        }
        self
    }

    /// Concatenation, followed by canonicalization.
    pub fn concat(&self, other: &Forest, mode: Mode) -> Forest {
        let mut trees = Vec::with_capacity(self.trees.len() + other.trees.len());
        trees.extend_from_slice(&self.trees);
        trees.extend_from_slice(&other.trees);
        Forest {
            degree: self.degree + other.degree,
            trees,
        }
        .canonicalize(mode)
    }
}

/// Every distinct ordering of `trees`, in lexicographic order.
pub fn distinct_orderings(trees: &[Tree]) -> Vec<Vec<Tree>> {
    let mut cur = trees.to_vec();
    cur.sort();
    let mut out = vec![cur.clone()];
    // Standard next-permutation step; duplicates are skipped by the strict comparisons.
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..cur.len()).rev().find(|&j| cur[i - 1] < cur[j]).expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.trees.is_empty() {
            return write!(f, "1");
        }
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Label;

    fn leaves(ls: &[Label]) -> Forest {
        Forest::new(ls.iter().map(|&l| Tree::leaf(l)).collect())
    }

    #[test]
    fn canonicalize_sorts_in_commutative_mode() {
        use Label::*;
        assert_eq!(leaves(&[R, B]).canonicalize(Mode::Commutative), leaves(&[B, R]));
        assert_eq!(leaves(&[B]).canonicalize(Mode::Commutative), leaves(&[B]));
        assert_eq!(
            leaves(&[C, B, C]).canonicalize(Mode::Commutative),
            leaves(&[B, C, C])
        );
        assert_eq!(leaves(&[R, B]).canonicalize(Mode::NonCommutative), leaves(&[R, B]));
    }

    #[test]
    fn orderings_skip_duplicates() {
        use Label::*;
        let ts = leaves(&[C, B, C]).into_trees();
        assert_eq!(distinct_orderings(&ts).len(), 3);
        assert_eq!(distinct_orderings(&leaves(&[B, C, R]).into_trees()).len(), 6);
        assert_eq!(distinct_orderings(&[]).len(), 1);
    }

    #[test]
    fn degree_is_vertex_count() {
        assert_eq!(Forest::unit().degree(), 0);
        assert_eq!(leaves(&[Label::B]).degree(), 1);
        let t = Tree::with_children(Label::B, vec![Tree::leaf(Label::C), Tree::leaf(Label::R)]);
        assert_eq!(Forest::single(t).degree(), 3);
    }
}
