//! Algebra elements (linear combinations of forests) and tensors (combinations of forest pairs).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::forest::{Forest, Mode};
use crate::lincomb::LinComb;
use crate::scalar::{format_q, is_negative, Q};
use crate::tree::Tree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("mode mismatch: {left} vs {right}")]
    ModeMismatch { left: &'static str, right: &'static str },
    #[error("element has a nonzero constant term")]
    ConstantTerm,
}

/// A finite linear combination of canonical forests.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    mode: Mode,
    terms: LinComb<Forest>,
}

impl Element {
    pub fn zero(mode: Mode) -> Element {
        Element { mode, terms: LinComb::zero() }
    }

    pub fn one(mode: Mode) -> Element {
        Element::forest(mode, Forest::unit())
    }

    pub fn forest(mode: Mode, f: Forest) -> Element {
        Element::term(mode, f, Q::one())
    }

    pub fn tree(mode: Mode, t: Tree) -> Element {
        Element::forest(mode, Forest::single(t))
    }

    pub fn term(mode: Mode, f: Forest, coef: Q) -> Element {
        Element {
            mode,
            terms: LinComb::term(f.canonicalize(mode), coef),
        }
    }

    /// Builds an element from a combination, canonicalizing every forest.
    pub fn from_lincomb(mode: Mode, lc: &LinComb<Forest>) -> Element {
        let mut out = Element::zero(mode);
        for (f, c) in lc {
            out.add_term(f.clone(), c.clone());
        }
        out
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn terms(&self) -> &LinComb<Forest> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Forest, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_zero()
    }

    pub fn coef(&self, f: &Forest) -> Q {
        self.terms.coef(&f.clone().canonicalize(self.mode))
    }

    pub fn add_term(&mut self, f: Forest, coef: Q) {
        self.terms.add_term(f.canonicalize(self.mode), coef);
    }

    pub fn constant_term(&self) -> Q {
        self.terms.coef(&Forest::unit())
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(Forest::degree).max()
    }

    /// The degree-`n` homogeneous component.
    pub fn component(&self, n: usize) -> Element {
        Element {
            mode: self.mode,
            terms: self.terms.filtered(|f| f.degree() == n),
        }
    }

    /// Drops every term of degree above `cutoff`.
    pub fn truncate(&self, cutoff: usize) -> Element {
        Element {
            mode: self.mode,
            terms: self.terms.filtered(|f| f.degree() <= cutoff),
        }
    }

    pub fn is_homogeneous(&self, n: usize) -> bool {
        self.terms.keys().all(|f| f.degree() == n)
    }

    pub fn scale(&self, c: &Q) -> Element {
        Element {
            mode: self.mode,
            terms: self.terms.scaled(c),
        }
    }

    fn check_mode(&self, other: &Element) -> Result<(), AlgebraError> {
        if self.mode == other.mode {
            Ok(())
        } else {
            Err(AlgebraError::ModeMismatch {
                left: self.mode.name(),
                right: other.mode.name(),
            })
        }
    }

    pub fn try_add(&self, other: &Element) -> Result<Element, AlgebraError> {
        self.check_mode(other)?;
        let mut terms = self.terms.clone();
        terms.add_assign(&other.terms);
        Ok(Element { mode: self.mode, terms })
    }

    pub fn try_sub(&self, other: &Element) -> Result<Element, AlgebraError> {
        self.check_mode(other)?;
        let mut terms = self.terms.clone();
        terms.sub_assign(&other.terms);
        Ok(Element { mode: self.mode, terms })
    }

    pub fn try_mul(&self, other: &Element) -> Result<Element, AlgebraError> {
        self.try_mul_truncated(other, usize::MAX)
    }

    /// Product keeping only terms of degree at most `cutoff`.
    pub fn try_mul_truncated(&self, other: &Element, cutoff: usize) -> Result<Element, AlgebraError> {
        self.check_mode(other)?;
        let mut terms = LinComb::zero();
        for (f, a) in &self.terms {
            for (g, b) in &other.terms {
                if f.degree() + g.degree() <= cutoff {
                    terms.add_term(f.concat(g, self.mode), crate::scalar::mul(a, b));
                }
            }
        }
        Ok(Element { mode: self.mode, terms })
    }

    pub fn add_scaled(&mut self, other: &Element, c: &Q) {
        assert_eq!(self.mode, other.mode, "mode mismatch");
        self.terms.add_scaled(&other.terms, c);
    }

    /// Applies a linear map given on basis forests.
    pub fn map_linear(&self, mut f: impl FnMut(&Forest) -> Element) -> Element {
        let mut out = Element::zero(self.mode);
        for (k, c) in &self.terms {
            out.add_scaled(&f(k), c);
        }
        out
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.try_add(rhs).expect("mode mismatch in addition")
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.try_sub(rhs).expect("mode mismatch in subtraction")
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        self.try_mul(rhs).expect("mode mismatch in multiplication")
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        Element {
            mode: self.mode,
            terms: self.terms.negated(),
        }
    }
}

fn write_terms<'a, K: 'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (&'a K, &'a Q)>,
    mut render: impl FnMut(&K) -> String,
) -> fmt::Result {
    let mut first = true;
    for (k, c) in terms {
        let neg = is_negative(c);
        let abs = if neg { -c.clone() } else { c.clone() };
        match (first, neg) {
            (true, true) => write!(f, "-")?,
            (false, true) => write!(f, " - ")?,
            (false, false) => write!(f, " + ")?,
            (true, false) => {}
        }
        if abs.is_one() {
            write!(f, "{}", render(k))?;
        } else {
            write!(f, "{} {}", format_q(&abs), render(k))?;
        }
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.terms.iter(), |k: &Forest| k.to_string())
    }
}

/// An element of H ⊗ H.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tensor {
    mode: Mode,
    terms: LinComb<(Forest, Forest)>,
}

impl Tensor {
    pub fn zero(mode: Mode) -> Tensor {
        Tensor { mode, terms: LinComb::zero() }
    }

    pub fn one(mode: Mode) -> Tensor {
        Tensor::pair(mode, Forest::unit(), Forest::unit(), Q::one())
    }

    pub fn pair(mode: Mode, l: Forest, r: Forest, coef: Q) -> Tensor {
        let mut out = Tensor::zero(mode);
        out.add_term(l, r, coef);
        out
    }

    /// `x ⊗ y` for elements.
    pub fn of(x: &Element, y: &Element) -> Tensor {
        assert_eq!(x.mode(), y.mode(), "mode mismatch");
        let mut out = Tensor::zero(x.mode());
        for (f, a) in x.iter() {
            for (g, b) in y.iter() {
                out.terms.add_term((f.clone(), g.clone()), crate::scalar::mul(a, b));
            }
        }
        out
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn terms(&self) -> &LinComb<(Forest, Forest)> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Forest, Forest), &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_zero()
    }

    pub fn coef(&self, l: &Forest, r: &Forest) -> Q {
        self.terms.coef(&(
            l.clone().canonicalize(self.mode),
            r.clone().canonicalize(self.mode),
        ))
    }

    pub fn add_term(&mut self, l: Forest, r: Forest, coef: Q) {
        if coef.is_zero() {
            return;
        }
        self.terms
            .add_term((l.canonicalize(self.mode), r.canonicalize(self.mode)), coef);
    }

    pub fn add_scaled(&mut self, other: &Tensor, c: &Q) {
        assert_eq!(self.mode, other.mode, "mode mismatch");
        self.terms.add_scaled(&other.terms, c);
    }

    pub fn scale(&self, c: &Q) -> Tensor {
        Tensor {
            mode: self.mode,
            terms: self.terms.scaled(c),
        }
    }

    pub fn try_add(&self, other: &Tensor) -> Result<Tensor, AlgebraError> {
        self.check_mode(other)?;
        let mut terms = self.terms.clone();
        terms.add_assign(&other.terms);
        Ok(Tensor { mode: self.mode, terms })
    }

    pub fn try_sub(&self, other: &Tensor) -> Result<Tensor, AlgebraError> {
        self.check_mode(other)?;
        let mut terms = self.terms.clone();
        terms.sub_assign(&other.terms);
        Ok(Tensor { mode: self.mode, terms })
    }

    /// Componentwise product `(a⊗b)(c⊗d) = ac ⊗ bd`.
    pub fn try_mul(&self, other: &Tensor) -> Result<Tensor, AlgebraError> {
        self.check_mode(other)?;
        let mut terms = LinComb::zero();
        for ((a, b), x) in &self.terms {
            for ((c, d), y) in &other.terms {
                terms.add_term((a.concat(c, self.mode), b.concat(d, self.mode)), crate::scalar::mul(x, y));
            }
        }
        Ok(Tensor { mode: self.mode, terms })
    }

    fn check_mode(&self, other: &Tensor) -> Result<(), AlgebraError> {
        if self.mode == other.mode {
            Ok(())
        } else {
            Err(AlgebraError::ModeMismatch {
                left: self.mode.name(),
                right: other.mode.name(),
            })
        }
    }

    /// Applies linear maps to the left and right factors: `(f ⊗ g)(t)`.
    pub fn map_each(
        &self,
        mut f: impl FnMut(&Forest) -> Element,
        mut g: impl FnMut(&Forest) -> Element,
    ) -> Tensor {
        let mut out = Tensor::zero(self.mode);
        for ((l, r), c) in &self.terms {
            out.add_scaled(&Tensor::of(&f(l), &g(r)), c);
        }
        out
    }

    /// Multiplication map `m: H ⊗ H → H`.
    pub fn multiply(&self) -> Element {
        let mut out = Element::zero(self.mode);
        for ((l, r), c) in &self.terms {
            out.add_term(l.concat(r, self.mode), c.clone());
        }
        out
    }
}

impl Add for &Tensor {
    type Output = Tensor;
    fn add(self, rhs: &Tensor) -> Tensor {
        self.try_add(rhs).expect("mode mismatch in addition")
    }
}

impl Sub for &Tensor {
    type Output = Tensor;
    fn sub(self, rhs: &Tensor) -> Tensor {
        self.try_sub(rhs).expect("mode mismatch in subtraction")
    }
}

impl Mul for &Tensor {
    type Output = Tensor;
    fn mul(self, rhs: &Tensor) -> Tensor {
        self.try_mul(rhs).expect("mode mismatch in multiplication")
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.terms.iter(), |(l, r): &(Forest, Forest)| {
            format!("{l} ⊗ {r}")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use crate::tree::Label;

    fn leaf(mode: Mode, l: Label) -> Element {
        Element::tree(mode, Tree::leaf(l))
    }

    #[test]
    fn bilinear_product() {
        let m = Mode::NonCommutative;
        let x = leaf(m, Label::B).scale(&q(2));
        let y = leaf(m, Label::C).scale(&q(3));
        let p = &x * &y;
        let bc = Forest::new(vec![Tree::leaf(Label::B), Tree::leaf(Label::C)]);
        assert_eq!(p, Element::term(m, bc, q(6)));
        assert_eq!(&x * &Element::one(m), x);
    }

    #[test]
    fn commutative_quotient_identifies_orders() {
        let m = Mode::Commutative;
        let b = leaf(m, Label::B);
        let c = leaf(m, Label::C);
        assert_eq!(&b * &c, &c * &b);
        let n = Mode::NonCommutative;
        assert_ne!(&leaf(n, Label::B) * &leaf(n, Label::C), &leaf(n, Label::C) * &leaf(n, Label::B));
    }

    #[test]
    fn mode_mismatch_is_an_error() {
        let x = Element::one(Mode::Commutative);
        let y = Element::one(Mode::NonCommutative);
        assert!(matches!(x.try_mul(&y), Err(AlgebraError::ModeMismatch { .. })));
        assert!(x.try_add(&y).is_err());
    }

    #[test]
    fn display_signs() {
        let m = Mode::NonCommutative;
        let x = &leaf(m, Label::B).scale(&q(-1)) + &leaf(m, Label::C).scale(&crate::scalar::q_frac(1, 2));
        assert_eq!(x.to_string(), "-b + 1/2 c");
        assert_eq!(Element::zero(m).to_string(), "0");
    }
}
