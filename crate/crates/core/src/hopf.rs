//! Coproduct by admissible cuts, counit, antipode, characters and convolution.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::element::{Element, Tensor};
use crate::forest::{Forest, Mode};
use crate::lincomb::LinComb;
use crate::recfun::flowchart_output;
use crate::scalar::Q;
use crate::tree::{Input, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HopfError {
    #[error("reduced coproduct needs zero constant term")]
    ConstantTerm,
    #[error("character undefined on {tree}")]
    UndefinedValue { tree: String },
    #[error("character evaluated at degree {degree} beyond its cutoff {cutoff}")]
    BeyondCutoff { degree: usize, cutoff: usize },
}

/// Every cut of `t` including the empty one, as (pruned trees in planar order, trunk).
///
/// At each child edge the cut either severs the whole subtree or recurses into it, which
/// enforces the one-cut-per-path condition. In trees carrying flags a severed edge becomes
/// an input flag of the trunk, labeled by the function the pruned subtree computes when it
/// is a flow chart.
fn cuts_with_empty(t: &Tree, flagged: bool) -> Vec<(Vec<Tree>, Tree)> {
    let mut partial: Vec<(Vec<Tree>, Vec<Input>)> = vec![(Vec::new(), Vec::new())];
    for inp in t.inputs() {
        let options: Vec<(Vec<Tree>, Option<Input>)> = match inp {
            Input::Flag(_) => vec![(Vec::new(), Some(inp.clone()))],
            Input::Child(c) => {
                let severed = if flagged {
                    Some(Input::Flag(flowchart_output(c).ok()))
                } else {
                    None
                };
                let mut opts = vec![(vec![c.clone()], severed)];
                for (p, trunk) in cuts_with_empty(c, flagged) {
                    opts.push((p, Some(Input::Child(trunk))));
                }
                opts
            }
        };
        let mut next = Vec::with_capacity(partial.len() * options.len());
        for (pruned, inputs) in &partial {
            for (p, i) in &options {
                let mut pruned = pruned.clone();
                pruned.extend(p.iter().cloned());
                let mut inputs = inputs.clone();
                inputs.extend(i.iter().cloned());
                next.push((pruned, inputs));
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|(p, inputs)| (p, Tree::new(t.label(), inputs)))
        .collect()
}

/// The nonempty admissible cuts of `t`: pairs (pruned forest, trunk containing the root).
pub fn admissible_cuts(t: &Tree) -> Vec<(Forest, Tree)> {
    let flagged = t.has_flags();
    cuts_with_empty(t, flagged)
        .into_iter()
        .filter(|(p, _)| !p.is_empty())
        .map(|(p, trunk)| (Forest::new(p), trunk))
        .collect()
}

/// `Δ(τ) = τ ⊗ 1 + 1 ⊗ τ + Σ_C π_C(τ) ⊗ ρ_C(τ)`.
pub fn tree_coproduct(t: &Tree, mode: Mode) -> Tensor {
    let mut out = Tensor::pair(mode, Forest::single(t.clone()), Forest::unit(), Q::one());
    for (p, trunk) in cuts_with_empty(t, t.has_flags()) {
        out.add_term(Forest::new(p), Forest::single(trunk), Q::one());
    }
    out
}

/// Coproduct of a forest, extended multiplicatively.
pub fn forest_coproduct(f: &Forest, mode: Mode) -> Tensor {
    let mut out = Tensor::one(mode);
    for t in f.trees() {
        out = &out * &tree_coproduct(t, mode);
    }
    out
}

pub fn coproduct(x: &Element) -> Tensor {
    let mut out = Tensor::zero(x.mode());
    for (f, c) in x.iter() {
        out.add_scaled(&forest_coproduct(f, x.mode()), c);
    }
    out
}

fn forest_reduced(f: &Forest, mode: Mode) -> Tensor {
    let mut d = forest_coproduct(f, mode);
    d.add_term(f.clone(), Forest::unit(), -Q::one());
    d.add_term(Forest::unit(), f.clone(), -Q::one());
    d
}

/// `Δ̃(x) = Δ(x) − x ⊗ 1 − 1 ⊗ x`, defined on the augmentation ideal.
pub fn reduced_coproduct(x: &Element) -> Result<Tensor, HopfError> {
    if !x.constant_term().is_zero() {
        return Err(HopfError::ConstantTerm);
    }
    let mut out = Tensor::zero(x.mode());
    for (f, c) in x.iter() {
        out.add_scaled(&forest_reduced(f, x.mode()), c);
    }
    Ok(out)
}

pub fn counit(x: &Element) -> Q {
    x.constant_term()
}

/// Coproducts of trees and forests, memoized for repeated use over a basis.
#[derive(Debug)]
pub struct CoproductCache {
    mode: Mode,
    trees: HashMap<Tree, Tensor>,
    forests: HashMap<Forest, Tensor>,
}

impl CoproductCache {
    pub fn new(mode: Mode) -> CoproductCache {
        CoproductCache { mode, trees: HashMap::new(), forests: HashMap::new() }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tree(&mut self, t: &Tree) -> Tensor {
        if let Some(d) = self.trees.get(t) {
            return d.clone();
        }
        let d = tree_coproduct(t, self.mode);
        self.trees.insert(t.clone(), d.clone());
        d
    }

    pub fn forest(&mut self, f: &Forest) -> Tensor {
        match f.trees() {
            [] => return Tensor::one(self.mode),
            [t] => return self.tree(t),
            _ => {}
        }
        if let Some(d) = self.forests.get(f) {
            return d.clone();
        }
        let trees = f.trees();
        let (last, init) = trees.split_last().expect("nonempty forest");
        let head = self.forest(&Forest::new(init.to_vec()));
        let d = &head * &self.tree(last);
        self.forests.insert(f.clone(), d.clone());
        d
    }

    /// The reduced coproduct of a forest of positive degree.
    pub fn reduced_forest(&mut self, f: &Forest) -> Tensor {
        let mut d = self.forest(f);
        d.add_term(f.clone(), Forest::unit(), -Q::one());
        d.add_term(Forest::unit(), f.clone(), -Q::one());
        d
    }

    pub fn reduced(&mut self, x: &Element) -> Result<Tensor, HopfError> {
        if !x.constant_term().is_zero() {
            return Err(HopfError::ConstantTerm);
        }
        let mut out = Tensor::zero(x.mode());
        for (f, c) in x.iter() {
            out.add_scaled(&self.reduced_forest(f), c);
        }
        Ok(out)
    }
}

/// Antipode computed from `S(x) = −x − Σ S(x′) x″`, memoized per forest.
#[derive(Debug)]
pub struct Antipode {
    mode: Mode,
    memo: HashMap<Forest, Element>,
    coproducts: CoproductCache,
}

impl Antipode {
    pub fn new(mode: Mode) -> Antipode {
        Antipode { mode, memo: HashMap::new(), coproducts: CoproductCache::new(mode) }
    }

    pub fn forest(&mut self, f: &Forest) -> Element {
        if let Some(v) = self.memo.get(f) {
            return v.clone();
        }
        let mode = self.mode;
        let value = if f.is_unit() {
            Element::one(mode)
        } else {
            let mut s = -&Element::forest(mode, f.clone());
            for ((l, r), c) in self.coproducts.reduced_forest(f).iter() {
                let sl = self.forest(l);
                let prod = &sl * &Element::forest(mode, r.clone());
                s.add_scaled(&prod, &-c.clone());
            }
            s
        };
        self.memo.insert(f.clone(), value.clone());
        value
    }

    pub fn apply(&mut self, x: &Element) -> Element {
        assert_eq!(x.mode(), self.mode, "mode mismatch");
        x.map_linear(|f| self.forest(f))
    }
}

pub fn antipode(x: &Element) -> Element {
    Antipode::new(x.mode()).apply(x)
}

/// A commutative target algebra for characters.
pub trait Target: Clone + Debug {
    fn zero_elem() -> Self;
    fn one_elem() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: &Q) -> Self;
}

impl Target for Q {
    fn zero_elem() -> Self {
        Q::zero()
    }
    fn one_elem() -> Self {
        Q::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: &Q) -> Self {
        self * c
    }
}

/// A character given by its values on trees up to a degree cutoff, extended
/// multiplicatively to forests and linearly to elements.
#[derive(Clone, Debug)]
pub struct Character<A> {
    cutoff: usize,
    values: BTreeMap<Tree, A>,
}

impl<A: Target> Character<A> {
    pub fn new(cutoff: usize) -> Self {
        Character { cutoff, values: BTreeMap::new() }
    }

    pub fn from_fn<'a>(cutoff: usize, trees: impl IntoIterator<Item = &'a Tree>, mut f: impl FnMut(&Tree) -> A) -> Self {
        let mut c = Character::new(cutoff);
        for t in trees {
            if t.size() <= cutoff {
                let v = f(t);
                c.values.insert(t.clone(), v);
            }
        }
        c
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn set(&mut self, t: Tree, value: A) {
        self.values.insert(t, value);
    }

    pub fn forest(&self, f: &Forest) -> Result<A, HopfError> {
        if f.degree() > self.cutoff {
            return Err(HopfError::BeyondCutoff { degree: f.degree(), cutoff: self.cutoff });
        }
        let mut acc = A::one_elem();
        for t in f.trees() {
            let v = self
                .values
                .get(t)
                .ok_or_else(|| HopfError::UndefinedValue { tree: t.to_string() })?;
            acc = acc.mul(v);
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &Element) -> Result<A, HopfError> {
        let mut acc = A::zero_elem();
        for (f, c) in x.iter() {
            acc = acc.add(&self.forest(f)?.scale(c));
        }
        Ok(acc)
    }
}

/// The counit as a character: 1 on the empty forest, 0 elsewhere.
pub fn counit_value<A: Target>(f: &Forest) -> A {
    if f.is_unit() {
        A::one_elem()
    } else {
        A::zero_elem()
    }
}

/// `(φ ⋆ ψ)(x) = ⟨φ ⊗ ψ, Δ(x)⟩` for linear maps given on forests.
pub fn convolution<A: Target, E>(
    phi: &mut dyn FnMut(&Forest) -> Result<A, E>,
    psi: &mut dyn FnMut(&Forest) -> Result<A, E>,
    x: &Element,
) -> Result<A, E> {
    let mut acc = A::zero_elem();
    for ((l, r), c) in coproduct(x).iter() {
        acc = acc.add(&phi(l)?.mul(&psi(r)?).scale(c));
    }
    Ok(acc)
}

/// A failed Hopf-algebra identity on a basis forest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomFailure {
    pub axiom: &'static str,
    pub forest: Forest,
}

pub type Triple = LinComb<(Forest, Forest, Forest)>;

/// `(Δ ⊗ id)Δ(f)` and `(id ⊗ Δ)Δ(f)` as combinations of forest triples.
pub fn coassociativity_sides(f: &Forest, cache: &mut CoproductCache) -> (Triple, Triple) {
    let d = cache.forest(f);
    let mut left = LinComb::zero();
    let mut right = LinComb::zero();
    for ((a, b), c) in d.iter() {
        for ((a1, a2), c2) in cache.forest(a).iter() {
            left.add_term((a1.clone(), a2.clone(), b.clone()), c * c2);
        }
        for ((b1, b2), c2) in cache.forest(b).iter() {
            right.add_term((a.clone(), b1.clone(), b2.clone()), c * c2);
        }
    }
    (left, right)
}

/// Checks coassociativity, both counit laws, grading and both antipode laws on `f`.
pub fn check_axioms(f: &Forest, mode: Mode, s: &mut Antipode) -> Result<(), AxiomFailure> {
    let fail = |axiom| AxiomFailure { axiom, forest: f.clone() };
    let x = Element::forest(mode, f.clone());
    let d = s.coproducts.forest(f);
    if d.iter().any(|((l, r), _)| l.degree() + r.degree() != f.degree()) {
        return Err(fail("grading"));
    }
    let (l, r) = coassociativity_sides(f, &mut s.coproducts);
    if l != r {
        return Err(fail("coassociativity"));
    }
    let mut left_counit = Element::zero(mode);
    let mut right_counit = Element::zero(mode);
    for ((a, b), c) in d.iter() {
        if a.is_unit() {
            left_counit.add_term(b.clone(), c.clone());
        }
        if b.is_unit() {
            right_counit.add_term(a.clone(), c.clone());
        }
    }
    if left_counit != x || right_counit != x {
        return Err(fail("counit"));
    }
    let unit_eps = Element::one(mode).scale(&counit(&x));
    let mut sl = Element::zero(mode);
    let mut sr = Element::zero(mode);
    for ((a, b), c) in d.iter() {
        let a_el = Element::forest(mode, a.clone());
        let b_el = Element::forest(mode, b.clone());
        sl.add_scaled(&(&s.forest(a) * &b_el), c);
        sr.add_scaled(&(&a_el * &s.forest(b)), c);
    }
    if sl != unit_eps {
        return Err(fail("antipode (S ⊗ id)"));
    }
    if sr != unit_eps {
        return Err(fail("antipode (id ⊗ S)"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_element, parse_tree};
    use crate::scalar::q;

    fn t(s: &str) -> Tree {
        parse_tree(s).unwrap()
    }

    #[test]
    fn cuts_of_small_trees() {
        assert!(admissible_cuts(&t("b")).is_empty());
        let c = admissible_cuts(&t("b(c)"));
        assert_eq!(c, vec![(Forest::single(t("c")), t("b"))]);
        let mut got: Vec<(String, String)> = admissible_cuts(&t("b(c,r)"))
            .into_iter()
            .map(|(p, tr)| (p.to_string(), tr.to_string()))
            .collect();
        got.sort();
        let mut want = vec![
            ("c".to_string(), "b(r)".to_string()),
            ("r".to_string(), "b(c)".to_string()),
            ("c*r".to_string(), "b".to_string()),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn coproduct_examples() {
        let m = Mode::NonCommutative;
        let x = parse_element("b(c,r)", m).unwrap();
        let d = coproduct(&x);
        assert_eq!(d.len(), 5);
        assert_eq!(d.coef(&Forest::new(vec![t("c"), t("r")]), &Forest::single(t("b"))), q(1));
        let red = reduced_coproduct(&parse_element("b(c)", m).unwrap()).unwrap();
        assert_eq!(red, Tensor::pair(m, Forest::single(t("c")), Forest::single(t("b")), q(1)));
        assert!(reduced_coproduct(&parse_element("b", m).unwrap()).unwrap().is_zero());
        assert_eq!(
            reduced_coproduct(&parse_element("1 + b", m).unwrap()),
            Err(HopfError::ConstantTerm)
        );
    }

    #[test]
    fn flagged_cut_labels_the_new_flag() {
        let tr = t("c(in(S),m(in(P[2,2])))");
        let cuts = admissible_cuts(&tr);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].1.to_string(), "c(in(S),in(mu(P[2,2])))");
        let tr = t("b(c(_,_),_)");
        assert_eq!(admissible_cuts(&tr)[0].1.to_string(), "b(_,_)");
    }

    #[test]
    fn antipode_examples() {
        let m = Mode::NonCommutative;
        let s = antipode(&parse_element("b", m).unwrap());
        assert_eq!(s, parse_element("-b", m).unwrap());
        let s = antipode(&parse_element("b(c)", m).unwrap());
        assert_eq!(s, parse_element("-b(c) + c*b", m).unwrap());
    }

    #[test]
    fn convolution_laws() {
        let m = Mode::Commutative;
        let x = parse_element("b(c)", m).unwrap();
        let phi: Character<Q> = Character::from_fn(3, [t("b"), t("c"), t("b(c)")].iter(), |tr| q(tr.size() as i64 + 1));
        let mut eps = |f: &Forest| Ok::<Q, HopfError>(counit_value(f));
        let mut ph = |f: &Forest| phi.forest(f);
        assert_eq!(convolution(&mut eps, &mut ph, &x).unwrap(), phi.eval(&x).unwrap());
        let mut s = Antipode::new(m);
        let mut phi_s = |f: &Forest| phi.eval(&s.forest(f));
        let mut ph = |f: &Forest| phi.forest(f);
        assert_eq!(convolution(&mut phi_s, &mut ph, &x).unwrap(), q(0));
    }

    #[test]
    fn character_beyond_cutoff_is_an_error() {
        let phi: Character<Q> = Character::from_fn(1, [t("b")].iter(), |_| q(2));
        let f = Forest::new(vec![t("b"), t("b")]);
        assert!(matches!(phi.forest(&f), Err(HopfError::BeyondCutoff { .. })));
        assert!(matches!(phi.forest(&Forest::single(t("c"))), Err(HopfError::UndefinedValue { .. })));
    }
}
