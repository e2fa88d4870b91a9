//! Grafting operators and the 1-cocycle identity.

use std::fmt;

use num_traits::One;
use thiserror::Error;

use crate::basis::{binary_flagged_trees, forests_from, vertex_forests};
use crate::element::{Element, Tensor};
use crate::forest::{distinct_orderings, Forest, Mode};
use crate::hopf::CoproductCache;
use crate::scalar::Q;
use crate::tree::{Input, Label, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraftError {
    #[error("corolla grafting takes vertex-labeled forests, got {0}")]
    FlaggedInput(String),
    #[error("binary grafting needs a label in b, c, r; got {0}")]
    BinaryLabel(Label),
    #[error("unknown grafting operator '{0}'")]
    Unknown(String),
}

/// How binary grafting treats monomials that do not have exactly two trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Convention {
    /// The empty monomial gives the bare corolla, one tree goes on the first input, and
    /// for three or more trees only the first is grafted while the rest stay as factors.
    FirstInput,
    /// Only monomials of exactly two trees are grafted; every other monomial maps to zero.
    ZeroOnMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Graft {
    /// `B⁺_δ`: a new δ-root whose ordered children are the trees of the forest.
    Corolla(Label),
    /// Grafting onto the two inputs of the δ-corolla with external flags.
    Binary(Label, Convention),
    /// A sum of grafting operators.
    Sum(Vec<Graft>),
}

impl Graft {
    /// Parses `corolla:b`, `binary:r`, `binary-zero:c`, or `binary-sum` (the sum over b, c, r
    /// with the first-input convention).
    pub fn parse(s: &str) -> Result<Graft, GraftError> {
        let unknown = || GraftError::Unknown(s.to_string());
        if s == "binary-sum" {
            return Ok(Graft::binary_sum(Convention::FirstInput));
        }
        if s == "binary-zero-sum" {
            return Ok(Graft::binary_sum(Convention::ZeroOnMismatch));
        }
        let (kind, label) = s.split_once(':').ok_or_else(unknown)?;
        let mut chars = label.chars();
        let l = match (chars.next(), chars.next()) {
            (Some(c), None) => Label::from_symbol(c).ok_or_else(unknown)?,
            _ => return Err(unknown()),
        };
        let g = match kind {
            "corolla" => Graft::Corolla(l),
            "binary" => Graft::Binary(l, Convention::FirstInput),
            "binary-zero" => Graft::Binary(l, Convention::ZeroOnMismatch),
            _ => return Err(unknown()),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn binary_sum(convention: Convention) -> Graft {
        Graft::Sum(
            [Label::B, Label::C, Label::R]
                .into_iter()
                .map(|l| Graft::Binary(l, convention))
                .collect(),
        )
    }

    fn validate(&self) -> Result<(), GraftError> {
        match self {
            Graft::Corolla(_) => Ok(()),
            Graft::Binary(l, _) => {
                if *l == Label::M {
                    Err(GraftError::BinaryLabel(*l))
                } else {
                    Ok(())
                }
            }
            Graft::Sum(gs) => gs.iter().try_for_each(Graft::validate),
        }
    }

    /// True when the operator works on trees with external flags.
    pub fn is_flagged(&self) -> bool {
        match self {
            Graft::Corolla(_) => false,
            Graft::Binary(..) => true,
            Graft::Sum(gs) => gs.iter().any(Graft::is_flagged),
        }
    }

    /// Labels of the roots this operator creates.
    pub fn labels(&self) -> Vec<Label> {
        match self {
            Graft::Corolla(l) | Graft::Binary(l, _) => vec![*l],
            Graft::Sum(gs) => {
                let mut v: Vec<Label> = gs.iter().flat_map(Graft::labels).collect();
                v.sort();
                v.dedup();
                v
            }
        }
    }

    /// In the commutative algebra trees stay planar, so a monomial is read as the average
    /// of its distinct orderings and each ordering is grafted as in the free algebra.
    fn forest(&self, f: &Forest, mode: Mode) -> Result<Element, GraftError> {
        if mode == Mode::Commutative && f.len() > 1 {
            let orders = distinct_orderings(f.trees());
            let weight = Q::one() / Q::from_integer(orders.len().into());
            let mut out = Element::zero(mode);
            for o in orders {
                out.add_scaled(&self.ordered(&Forest::new(o), mode)?, &weight);
            }
            return Ok(out);
        }
        self.ordered(f, mode)
    }

    fn ordered(&self, f: &Forest, mode: Mode) -> Result<Element, GraftError> {
        match self {
            Graft::Corolla(l) => {
                if let Some(t) = f.trees().iter().find(|t| t.has_flags()) {
                    return Err(GraftError::FlaggedInput(t.to_string()));
                }
                Ok(Element::tree(mode, Tree::with_children(*l, f.trees().to_vec())))
            }
            Graft::Binary(l, conv) => {
                let ts = f.trees();
                let child = |t: &Tree| Input::Child(t.clone());
                let flag = || Input::Flag(None);
                Ok(match (conv, ts.len()) {
                    (_, 2) => Element::tree(mode, Tree::new(*l, vec![child(&ts[0]), child(&ts[1])])),
                    (Convention::ZeroOnMismatch, _) => Element::zero(mode),
                    (Convention::FirstInput, 0) => Element::tree(mode, Tree::corolla(*l, 2)),
                    (Convention::FirstInput, _) => {
                        let mut trees = vec![Tree::new(*l, vec![child(&ts[0]), flag()])];
                        trees.extend_from_slice(&ts[1..]);
                        Element::forest(mode, Forest::new(trees))
                    }
                })
            }
            Graft::Sum(gs) => {
                let mut out = Element::zero(mode);
                for g in gs {
                    out.add_scaled(&g.forest(f, mode)?, &Q::one());
                }
                Ok(out)
            }
        }
    }

    /// Applies the operator linearly.
    pub fn apply(&self, x: &Element) -> Result<Element, GraftError> {
        let mut out = Element::zero(x.mode());
        for (f, c) in x.iter() {
            out.add_scaled(&self.forest(f, x.mode())?, c);
        }
        Ok(out)
    }

    /// Basis forests of degree exactly `n` on which the operator is meant to act.
    pub fn basis(&self, n: usize, mode: Mode) -> Vec<Forest> {
        if self.is_flagged() {
            let labels = [Label::B, Label::C, Label::R];
            forests_from(n, mode, &|k| binary_flagged_trees(k, &labels))
        } else {
            vertex_forests(n, &Label::ALL, mode)
        }
    }
}

impl fmt::Display for Graft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Graft::Corolla(l) => write!(f, "corolla:{l}"),
            Graft::Binary(l, Convention::FirstInput) => write!(f, "binary:{l}"),
            Graft::Binary(l, Convention::ZeroOnMismatch) => write!(f, "binary-zero:{l}"),
            Graft::Sum(gs) => {
                let parts: Vec<String> = gs.iter().map(Graft::to_string).collect();
                write!(f, "{}", parts.join("+"))
            }
        }
    }
}

/// Outcome of checking `Δ̃B(x) = (id ⊗ B)Δ̃(x) + x ⊗ B(1)` on a basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CocycleOutcome {
    Pass { checked: usize, max_degree: usize },
    Witness { forest: Forest, lhs: Tensor, rhs: Tensor },
}

impl CocycleOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CocycleOutcome::Pass { .. })
    }
}

/// Both sides of the cocycle identity at a basis forest. On the empty forest the full
/// identity `ΔB(1) = (id ⊗ B)Δ(1) + B(1) ⊗ 1` is used, i.e. `B(1)` must be primitive.
pub fn cocycle_sides(b: &Graft, f: &Forest, mode: Mode) -> Result<(Tensor, Tensor), GraftError> {
    cocycle_sides_cached(b, f, &mut CoproductCache::new(mode))
}

fn cocycle_sides_cached(b: &Graft, f: &Forest, cache: &mut CoproductCache) -> Result<(Tensor, Tensor), GraftError> {
    let mode = cache.mode();
    let one = Element::one(mode);
    let b1 = b.apply(&one)?;
    if f.is_unit() {
        let lhs = crate::hopf::coproduct(&b1);
        let rhs = &Tensor::of(&one, &b1) + &Tensor::of(&b1, &one);
        return Ok((lhs, rhs));
    }
    let x = Element::forest(mode, f.clone());
    let bx = b.apply(&x)?;
    let lhs = cache.reduced(&bx).expect("grafting output has no constant term");
    let mut rhs = Tensor::of(&x, &b1);
    let dx = cache.reduced_forest(f);
    for ((l, r), c) in dx.iter() {
        let br = b.apply(&Element::forest(mode, r.clone()))?;
        rhs.add_scaled(&Tensor::of(&Element::forest(mode, l.clone()), &br), c);
    }
    Ok((lhs, rhs))
}

/// Evaluates the cocycle identity on every basis forest of degree at most `max_degree`, in
/// increasing basis order, and reports the first discrepancy.
pub fn cocycle_check(b: &Graft, max_degree: usize, mode: Mode) -> Result<CocycleOutcome, GraftError> {
    let mut checked = 0;
    let mut cache = CoproductCache::new(mode);
    for n in 0..=max_degree {
        for f in b.basis(n, mode) {
            let (lhs, rhs) = cocycle_sides_cached(b, &f, &mut cache)?;
            checked += 1;
            if lhs != rhs {
                return Ok(CocycleOutcome::Witness { forest: f, lhs, rhs });
            }
        }
    }
    Ok(CocycleOutcome::Pass { checked, max_degree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_element, parse_tree};

    fn el(s: &str) -> Element {
        parse_element(s, Mode::NonCommutative).unwrap()
    }

    #[test]
    fn corolla_grafting() {
        let b = Graft::Corolla(Label::B);
        assert_eq!(b.apply(&el("1")).unwrap(), el("b"));
        assert_eq!(b.apply(&el("c")).unwrap(), el("b(c)"));
        let r = Graft::Corolla(Label::R);
        assert_eq!(r.apply(&el("b*c")).unwrap(), el("r(b,c)"));
        assert!(b.apply(&el("b(_,_)")).is_err());
    }

    #[test]
    fn binary_grafting_conventions() {
        let r = Graft::Binary(Label::R, Convention::FirstInput);
        assert_eq!(r.apply(&el("1")).unwrap(), el("r(_,_)"));
        let b = Graft::Binary(Label::B, Convention::FirstInput);
        assert_eq!(b.apply(&el("r(_,_)")).unwrap(), el("b(r(_,_),_)"));
        let c = Graft::Binary(Label::C, Convention::FirstInput);
        assert_eq!(c.apply(&el("b(_,_)*r(_,_)")).unwrap(), el("c(b(_,_),r(_,_))"));
        assert_eq!(
            c.apply(&el("b(_,_)*r(_,_)*c(_,_)")).unwrap(),
            el("c(b(_,_),_)*r(_,_)*c(_,_)")
        );
        let z = Graft::Binary(Label::C, Convention::ZeroOnMismatch);
        assert!(z.apply(&el("1")).unwrap().is_zero());
        assert!(z.apply(&el("b(_,_)")).unwrap().is_zero());
        assert_eq!(z.apply(&el("b(_,_)*r(_,_)")).unwrap(), el("c(b(_,_),r(_,_))"));
    }

    #[test]
    fn commutative_grafting_averages_orderings() {
        let r = Graft::Corolla(Label::R);
        let x = parse_element("b*c", Mode::Commutative).unwrap();
        let want = parse_element("1/2 r(b,c) + 1/2 r(c,b)", Mode::Commutative).unwrap();
        assert_eq!(r.apply(&x).unwrap(), want);
    }

    #[test]
    fn corolla_is_a_cocycle() {
        for l in [Label::B, Label::M] {
            let out = cocycle_check(&Graft::Corolla(l), 3, Mode::NonCommutative).unwrap();
            assert!(out.passed(), "{out:?}");
        }
    }

    #[test]
    fn binary_grafting_is_not_a_cocycle() {
        let out = cocycle_check(&Graft::Binary(Label::R, Convention::FirstInput), 3, Mode::NonCommutative).unwrap();
        match out {
            CocycleOutcome::Witness { forest, .. } => {
                assert_eq!(forest.len(), 2);
                assert_eq!(forest.trees()[0], parse_tree("b(_,_)").unwrap());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_operators() {
        assert_eq!(Graft::parse("corolla:b").unwrap(), Graft::Corolla(Label::B));
        assert_eq!(
            Graft::parse("binary-zero:r").unwrap(),
            Graft::Binary(Label::R, Convention::ZeroOnMismatch)
        );
        assert!(Graft::parse("binary:m").is_err());
        assert!(Graft::parse("tree:b").is_err());
        assert_eq!(Graft::parse("corolla:c").unwrap().to_string(), "corolla:c");
    }
}
