//! The operad of flow charts and its Dyson–Schwinger equation.
//!
//! Operations of arity n are planar trees with n external input flags. Vertices with a
//! single input are contracted, so the only operation of arity one is the identity.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::dse::FormalSeries;
use crate::element::Element;
use crate::forest::{Forest, Mode};
use crate::lincomb::LinComb;
use crate::linsolve::Span;
use crate::parse::{parse_marked_tree, ParseError};
use crate::scalar::{format_q, parse_q, Q};
use crate::tree::{Input, Label, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperadError {
    #[error("composition expects {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("non-invertible degree-1 operator: 1 - a1*lambda = 0")]
    NonInvertible,
    #[error("vertex {0} has no inputs; operations need at least one input per vertex")]
    ZeroInputVertex(Label),
    #[error("operation has labeled flags")]
    LabeledFlag,
    #[error("bad beta specification '{0}'")]
    BetaSyntax(String),
    #[error("beta component for arity {arity} has arity {found}")]
    BetaArity { arity: usize, found: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A basis operation: the identity, or a tree with unlabeled flags and no unary vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpTree {
    Id,
    Node(Tree),
}

fn normalize_input(i: &Input) -> Result<Input, OperadError> {
    match i {
        Input::Flag(None) => Ok(Input::Flag(None)),
        Input::Flag(Some(_)) => Err(OperadError::LabeledFlag),
        Input::Child(t) => {
            if t.valence() == 0 {
                return Err(OperadError::ZeroInputVertex(t.label()));
            }
            let inputs = t.inputs().iter().map(normalize_input).collect::<Result<Vec<_>, _>>()?;
            if inputs.len() == 1 {
                // A unary vertex acts as the identity.
                return Ok(inputs.into_iter().next().expect("one input"));
            }
            Ok(Input::Child(Tree::new(t.label(), inputs)))
        }
    }
}

impl OpTree {
    /// Normalizes a tree with unlabeled flags into a basis operation.
    pub fn from_tree(t: &Tree) -> Result<OpTree, OperadError> {
        Ok(match normalize_input(&Input::Child(t.clone()))? {
            Input::Flag(_) => OpTree::Id,
            Input::Child(t) => OpTree::Node(t),
        })
    }

    pub fn corolla(label: Label, k: usize) -> Result<OpTree, OperadError> {
        OpTree::from_tree(&Tree::corolla(label, k))
    }

    pub fn arity(&self) -> usize {
        match self {
            OpTree::Id => 1,
            OpTree::Node(t) => t.flag_count(),
        }
    }

    /// Vertex count; the identity has none.
    pub fn vertices(&self) -> usize {
        match self {
            OpTree::Id => 0,
            OpTree::Node(t) => t.size(),
        }
    }

    fn as_input(&self) -> Input {
        match self {
            OpTree::Id => Input::Flag(None),
            OpTree::Node(t) => Input::Child(t.clone()),
        }
    }

    /// Grafts the output of `gs[i]` onto the `i`-th input flag.
    pub fn compose(&self, gs: &[&OpTree]) -> Result<OpTree, OperadError> {
        if gs.len() != self.arity() {
            return Err(OperadError::ArityMismatch { expected: self.arity(), got: gs.len() });
        }
        match self {
            OpTree::Id => Ok(gs[0].clone()),
            OpTree::Node(t) => {
                let grafted = t.substitute_flags(&mut |i| Some(gs[i].as_input()));
                OpTree::from_tree(&grafted)
            }
        }
    }
}

impl fmt::Display for OpTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpTree::Id => write!(f, "id"),
            OpTree::Node(t) => write!(f, "{t}"),
        }
    }
}

/// A linear combination of operations of a fixed arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperadElement {
    arity: usize,
    terms: LinComb<OpTree>,
}

impl OperadElement {
    pub fn zero(arity: usize) -> Self {
        OperadElement { arity, terms: LinComb::zero() }
    }

    pub fn identity() -> Self {
        OperadElement::basis(OpTree::Id)
    }

    pub fn basis(t: OpTree) -> Self {
        OperadElement { arity: t.arity(), terms: LinComb::basis(t) }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &LinComb<OpTree> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_zero()
    }

    pub fn scale(&self, c: &Q) -> Self {
        OperadElement { arity: self.arity, terms: self.terms.scaled(c) }
    }

    pub fn add_scaled(&mut self, other: &OperadElement, c: &Q) {
        assert_eq!(self.arity, other.arity, "arity mismatch");
        self.terms.add_scaled(&other.terms, c);
    }

    /// Multilinear composition `f ∘ (g₁, …, gₙ)`.
    pub fn compose(&self, gs: &[&OperadElement]) -> Result<OperadElement, OperadError> {
        if gs.len() != self.arity {
            return Err(OperadError::ArityMismatch { expected: self.arity, got: gs.len() });
        }
        let arity = gs.iter().map(|g| g.arity).sum();
        let mut out = OperadElement::zero(arity);
        if gs.iter().any(|g| g.is_zero()) {
            return Ok(out);
        }
        for (ft, fc) in &self.terms {
            // Expand the product of the argument combinations one slot at a time.
            let mut partial: Vec<(Vec<&OpTree>, Q)> = vec![(Vec::new(), fc.clone())];
            for g in gs {
                let mut next = Vec::with_capacity(partial.len() * g.terms.len());
                for (ts, c) in &partial {
                    for (gt, gc) in &g.terms {
                        let mut ts = ts.clone();
                        ts.push(gt);
                        next.push((ts, c * gc));
                    }
                }
                partial = next;
            }
            for (ts, c) in partial {
                out.terms.add_term(ft.compose(&ts)?, c);
            }
        }
        Ok(out)
    }

    /// Erases external flags: the identity becomes the unit, trees become vertex-labeled trees.
    pub fn forget_flags(&self) -> Element {
        let mode = Mode::NonCommutative;
        let mut out = Element::zero(mode);
        for (t, c) in &self.terms {
            let f = match t {
                OpTree::Id => Forest::unit(),
                OpTree::Node(t) => Forest::single(t.strip_flags()),
            };
            out.add_term(f, c.clone());
        }
        out
    }
}

impl fmt::Display for OperadElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_zero() {
            return write!(f, "0");
        }
        for (i, (t, c)) in self.terms.iter().enumerate() {
            let neg = crate::scalar::is_negative(c);
            let abs = if neg { -c.clone() } else { c.clone() };
            let sep = match (i, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            write!(f, "{sep}")?;
            if !abs.is_one() {
                write!(f, "{} ", format_q(&abs))?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// The data of `X = β(P(X))`: series coefficients, the scalar λ with `β₁ = λ·id`, and the
/// components `β_k` for `k ≥ 2` (absent arities are zero).
#[derive(Clone, Debug)]
pub struct OperadDse {
    pub series: FormalSeries,
    pub lambda: Q,
    pub beta: BTreeMap<usize, OperadElement>,
}

impl OperadDse {
    /// Parses `k:spec` entries separated by commas. For `k = 1` the spec is the scalar λ;
    /// otherwise it is a label (the k-ary corolla) or a tree with `#1 … #k` flag markers.
    pub fn parse_beta(s: &str) -> Result<(Q, BTreeMap<usize, OperadElement>), OperadError> {
        let bad = || OperadError::BetaSyntax(s.to_string());
        let mut lambda = Q::zero();
        let mut beta = BTreeMap::new();
        for part in split_top_level(s) {
            let (k, spec) = part.split_once(':').ok_or_else(bad)?;
            let k: usize = k.trim().parse().map_err(|_| bad())?;
            let spec = spec.trim();
            if k == 1 {
                lambda = parse_q(spec).ok_or_else(bad)?;
                continue;
            }
            let mut chars = spec.chars();
            let op = match (chars.next().and_then(Label::from_symbol), chars.next()) {
                (Some(l), None) => OpTree::corolla(l, k)?,
                _ => OpTree::from_tree(&parse_marked_tree(spec)?)?,
            };
            if op.arity() != k {
                return Err(OperadError::BetaArity { arity: k, found: op.arity() });
            }
            beta.insert(k, OperadElement::basis(op));
        }
        Ok((lambda, beta))
    }

    fn inverse_scalar(&self) -> Result<Q, OperadError> {
        let d = Q::one() - self.series.coeff(1) * &self.lambda;
        if d.is_zero() {
            return Err(OperadError::NonInvertible);
        }
        Ok(Q::one() / d)
    }

    fn beta_k(&self, k: usize) -> Option<&OperadElement> {
        self.beta.get(&k).filter(|b| !b.is_zero())
    }

    /// `Σ_{k≥2} a_k Σ_{j₁+⋯+j_k=n} β_k ∘ (x_{j₁} ⊗ ⋯ ⊗ x_{j_k})`.
    fn higher_terms(&self, xs: &BTreeMap<usize, OperadElement>, n: usize) -> Result<OperadElement, OperadError> {
        let mut out = OperadElement::zero(n);
        for k in 2..=n {
            let a = self.series.coeff(k);
            let Some(bk) = self.beta_k(k) else { continue };
            if a.is_zero() {
                continue;
            }
            for js in compositions(n, k) {
                let args: Vec<&OperadElement> = js.iter().map(|j| &xs[j]).collect();
                out.add_scaled(&bk.compose(&args)?, &a);
            }
        }
        Ok(out)
    }

    /// Solves through arity `cutoff`: `x₁ = (1 − a₁λ)⁻¹ id` and
    /// `xₙ = (1 − a₁λ)⁻¹ Σ_{k≥2} a_k Σ β_k ∘ (x_{j₁} ⊗ ⋯ ⊗ x_{j_k})`.
    pub fn solve(&self, cutoff: usize) -> Result<BTreeMap<usize, OperadElement>, OperadError> {
        let inv = self.inverse_scalar()?;
        let mut xs = BTreeMap::new();
        xs.insert(1, OperadElement::identity().scale(&inv));
        for n in 2..=cutoff {
            let h = self.higher_terms(&xs, n)?;
            xs.insert(n, h.scale(&inv));
        }
        Ok(xs)
    }

    /// Substitutes a solution into `X = β(P(X))` arity by arity; returns the first failing
    /// arity.
    pub fn verify(&self, xs: &BTreeMap<usize, OperadElement>, cutoff: usize) -> Result<Option<usize>, OperadError> {
        for n in 1..=cutoff {
            let Some(xn) = xs.get(&n) else { return Ok(Some(n)) };
            let mut rhs = self.higher_terms(xs, n)?;
            let linear = xn.scale(&(self.series.coeff(1) * &self.lambda));
            rhs.add_scaled(&linear, &Q::one());
            if n == 1 {
                rhs.add_scaled(&OperadElement::identity(), &self.series.coeff(0));
            }
            if &rhs != xn {
                return Ok(Some(n));
            }
        }
        Ok(None)
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.into_iter().filter(|p| !p.is_empty()).collect()
}

/// Ordered tuples of `k` positive integers summing to `n`.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Spanning set of the sub-operad in arity `n`: all `x_k ∘ (x_{j₁} ⊗ ⋯ ⊗ x_{j_k})` with
/// `Σ j = n`.
pub fn suboperad_span(xs: &BTreeMap<usize, OperadElement>, n: usize) -> Result<Vec<OperadElement>, OperadError> {
    let mut out = Vec::new();
    for k in 1..=n {
        let Some(xk) = xs.get(&k) else { continue };
        for js in compositions(n, k) {
            let args: Option<Vec<&OperadElement>> = js.iter().map(|j| xs.get(j)).collect();
            let Some(args) = args else { continue };
            let c = xk.compose(&args)?;
            if !c.is_zero() {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Checks that partial compositions `s ∘ᵢ t` of spanning elements stay in the span, for
/// result arities up to `max_arity`. Returns the first arity where closure fails.
pub fn suboperad_closure_check(xs: &BTreeMap<usize, OperadElement>, max_arity: usize) -> Result<Option<usize>, OperadError> {
    let spans: BTreeMap<usize, Vec<OperadElement>> = (1..=max_arity)
        .map(|n| suboperad_span(xs, n).map(|s| (n, s)))
        .collect::<Result<_, _>>()?;
    let id = OperadElement::identity();
    for n in 1..=max_arity {
        let span = Span::from_generators(spans[&n].iter().map(OperadElement::terms));
        for p in 1..=n {
            let q = n + 1 - p;
            for s in &spans[&p] {
                for t in &spans[&q] {
                    for i in 0..p {
                        let args: Vec<&OperadElement> =
                            (0..p).map(|j| if j == i { t } else { &id }).collect();
                        let c = s.compose(&args)?;
                        if !span.contains(c.terms()) {
                            return Ok(Some(n));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_tree;
    use crate::scalar::{q, q_frac};

    fn op(s: &str) -> OpTree {
        OpTree::from_tree(&parse_tree(s).unwrap()).unwrap()
    }

    #[test]
    fn unary_vertices_contract() {
        assert_eq!(op("b(_)"), OpTree::Id);
        assert_eq!(op("b(c(_),_)"), op("b(_,_)"));
        assert!(matches!(OpTree::from_tree(&parse_tree("b(c,_)").unwrap()), Err(OperadError::ZeroInputVertex(Label::C))));
    }

    #[test]
    fn composition_and_units() {
        let b2 = OperadElement::basis(op("b(_,_)"));
        let c2 = OperadElement::basis(op("c(_,_)"));
        let id = OperadElement::identity();
        assert_eq!(id.compose(&[&c2]).unwrap(), c2);
        assert_eq!(b2.compose(&[&id, &id]).unwrap(), b2);
        let g = b2.compose(&[&c2, &id]).unwrap();
        assert_eq!(g, OperadElement::basis(op("b(c(_,_),_)")));
        assert_eq!(g.arity(), 3);
        assert!(matches!(b2.compose(&[&id]), Err(OperadError::ArityMismatch { .. })));
        assert_eq!(g.forget_flags().to_string(), "b(c)");
        assert_eq!(id.forget_flags().to_string(), "1");
    }

    #[test]
    fn solver_examples() {
        let (lambda, beta) = OperadDse::parse_beta("2:b").unwrap();
        let dse = OperadDse { series: FormalSeries::parse("1,0,1").unwrap(), lambda, beta };
        let xs = dse.solve(4).unwrap();
        assert_eq!(xs[&1], OperadElement::identity());
        assert_eq!(xs[&2], OperadElement::basis(op("b(_,_)")));
        assert_eq!(dse.verify(&xs, 4).unwrap(), None);

        let (lambda, beta) = OperadDse::parse_beta("1:1/2,2:b").unwrap();
        let dse = OperadDse { series: FormalSeries::parse("1,1,1").unwrap(), lambda, beta };
        let xs = dse.solve(3).unwrap();
        assert_eq!(xs[&1], OperadElement::identity().scale(&q(2)));
        assert_eq!(dse.verify(&xs, 3).unwrap(), None);

        let (lambda, beta) = OperadDse::parse_beta("1:1,2:b").unwrap();
        let dse = OperadDse { series: FormalSeries::parse("1,1").unwrap(), lambda, beta };
        assert_eq!(dse.solve(3), Err(OperadError::NonInvertible));
        let _ = q_frac(1, 2);
    }

    #[test]
    fn beta_with_markers() {
        let (_, beta) = OperadDse::parse_beta("3:b(#1,c(#2,#3))").unwrap();
        assert_eq!(beta[&3].arity(), 3);
        assert!(OperadDse::parse_beta("2:b(#1,c(#2,#3))").is_err());
    }

    #[test]
    fn compositions_enumerate() {
        assert_eq!(compositions(3, 2), vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(compositions(2, 3).len(), 0);
    }
}
