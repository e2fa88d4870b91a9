//! Planar rooted trees with labeled vertices and optional external input flags.

use std::cmp::Ordering;
use std::fmt;

use crate::recfun::RecFun;

/// Vertex decoration. The derived order `b < c < r < m` is the canonical label order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Bracketing (juxtaposition).
    B,
    /// Composition.
    C,
    /// Primitive recursion.
    R,
    /// Minimization.
    M,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::B, Label::C, Label::R, Label::M];

    pub fn symbol(self) -> char {
        match self {
            Label::B => 'b',
            Label::C => 'c',
            Label::R => 'r',
            Label::M => 'm',
        }
    }

    pub fn from_symbol(c: char) -> Option<Label> {
        match c {
            'b' => Some(Label::B),
            'c' => Some(Label::C),
            'r' => Some(Label::R),
            'm' => Some(Label::M),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// One incoming position of a vertex: either an internal edge to a child or an external
/// input flag, possibly labeled by a recursive function.
///
/// Flags sort before children; the order is otherwise structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Input {
    Flag(Option<RecFun>),
    Child(Tree),
}

impl Input {
    pub fn as_child(&self) -> Option<&Tree> {
        match self {
            Input::Child(t) => Some(t),
            Input::Flag(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    label: Label,
    inputs: Vec<Input>,
    size: usize,
}

impl Tree {
    pub fn new(label: Label, inputs: Vec<Input>) -> Tree {
        let size = 1 + inputs
            .iter()
            .filter_map(Input::as_child)
            .map(Tree::size)
            .sum::<usize>();
        Tree { label, inputs, size }
    }

    pub fn leaf(label: Label) -> Tree {
        Tree::new(label, Vec::new())
    }

    /// A vertex whose inputs are all internal edges.
    pub fn with_children(label: Label, children: Vec<Tree>) -> Tree {
        Tree::new(label, children.into_iter().map(Input::Child).collect())
    }

    /// A corolla with `k` unlabeled input flags.
    pub fn corolla(label: Label, k: usize) -> Tree {
        Tree::new(label, vec![Input::Flag(None); k])
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn inputs(&self) -> &[Input] {
        &self.inputs
    }

    pub fn children(&self) -> impl Iterator<Item = &Tree> {
        self.inputs.iter().filter_map(Input::as_child)
    }

    /// Number of vertices.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn valence(&self) -> usize {
        self.inputs.len()
    }

    /// True when some vertex carries an external input flag.
    pub fn has_flags(&self) -> bool {
        self.inputs.iter().any(|i| match i {
            Input::Flag(_) => true,
            Input::Child(t) => t.has_flags(),
        })
    }

    /// Total number of external input flags, in planar order.
    pub fn flag_count(&self) -> usize {
        self.inputs
            .iter()
            .map(|i| match i {
                Input::Flag(_) => 1,
                Input::Child(t) => t.flag_count(),
            })
            .sum()
    }

    /// External input flags in planar (depth-first, left-to-right) order.
    pub fn flags(&self) -> Vec<&Option<RecFun>> {
        let mut out = Vec::new();
        self.collect_flags(&mut out);
        out
    }

    fn collect_flags<'a>(&'a self, out: &mut Vec<&'a Option<RecFun>>) {
        for i in &self.inputs {
            match i {
                Input::Flag(f) => out.push(f),
                Input::Child(t) => t.collect_flags(out),
            }
        }
    }

    /// Replaces the external flags, in planar order, by the trees produced by `fill`.
    /// `fill` receives the flag index and returns `None` to leave the flag in place.
    pub fn substitute_flags(&self, fill: &mut impl FnMut(usize) -> Option<Input>) -> Tree {
        let mut counter = 0;
        self.substitute_inner(&mut counter, fill)
    }

    fn substitute_inner(
        &self,
        counter: &mut usize,
        fill: &mut impl FnMut(usize) -> Option<Input>,
    ) -> Tree {
        let inputs = self
            .inputs
            .iter()
            .map(|i| match i {
                Input::Flag(f) => {
                    let idx = *counter;
                    *counter += 1;
                    fill(idx).unwrap_or_else(|| Input::Flag(f.clone()))
                }
                Input::Child(t) => Input::Child(t.substitute_inner(counter, fill)),
            })
            .collect();
        Tree::new(self.label, inputs)
    }

    /// Drops every external flag, keeping the vertex structure.
    pub fn strip_flags(&self) -> Tree {
        Tree::with_children(self.label, self.children().map(Tree::strip_flags).collect())
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size
            .cmp(&other.size)
            .then(self.label.cmp(&other.label))
            .then_with(|| self.inputs.cmp(&other.inputs))
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if self.inputs.is_empty() {
            return Ok(());
        }
        write!(f, "(")?;
        for (k, i) in self.inputs.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            match i {
                Input::Flag(None) => write!(f, "_")?,
                Input::Flag(Some(e)) => write!(f, "in({e})")?,
                Input::Child(t) => write!(f, "{t}")?,
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_counts_vertices_only() {
        let t = Tree::new(
            Label::B,
            vec![Input::Child(Tree::leaf(Label::C)), Input::Flag(None)],
        );
        assert_eq!(t.size(), 2);
        assert_eq!(t.flag_count(), 1);
        assert_eq!(t.to_string(), "b(c,_)");
    }

    #[test]
    fn order_is_degree_then_label_then_children() {
        let b = Tree::leaf(Label::B);
        let m = Tree::leaf(Label::M);
        let bb = Tree::with_children(Label::B, vec![b.clone()]);
        assert!(b < m);
        assert!(m < bb);
        let bc = Tree::with_children(Label::B, vec![Tree::leaf(Label::C)]);
        assert!(bb < bc);
    }
}
