//! Renormalization of the halting problem: a Rota–Baxter target algebra, the Feynman
//! rules of flow charts, and the BPHZ factorization.
//!
//! The target is `span{w⁻ᵏ : k ≥ 1} ⊕ ℝ` with `w = 1 − z`: convergent factors are
//! collapsed to their value at `z = 1`, and `T` projects onto the polar part.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::element::Element;
use crate::forest::{Forest, Mode};
use crate::hopf::{admissible_cuts, reduced_coproduct, Antipode, HopfError, Target};
use crate::recfun::{
    basic_inputs, fbar, flowchart_output, flowchart_output_vertexmode, pad_tree, sigma_assignments,
    vertex_function, RecFun, RecFunError,
};
use crate::scalar::{q_to_f64, Q};
use crate::tree::{Input, Label, Tree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenormError {
    #[error("{count} basic-input assignments exceed the cap of {cap}")]
    SigmaCap { count: u128, cap: usize },
    #[error(transparent)]
    RecFun(#[from] RecFunError),
    #[error(transparent)]
    Hopf(#[from] HopfError),
}

/// An element `Σ cₖ w⁻ᵏ + finite` of the target algebra.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Laurent {
    polar: BTreeMap<usize, f64>,
    finite: f64,
}

impl Laurent {
    pub fn zero() -> Laurent {
        Laurent::default()
    }

    pub fn one() -> Laurent {
        Laurent::constant(1.0)
    }

    pub fn constant(v: f64) -> Laurent {
        Laurent { polar: BTreeMap::new(), finite: v }
    }

    /// `c · w⁻ᵏ` for `k ≥ 1`.
    pub fn pole(order: usize, c: f64) -> Laurent {
        assert!(order >= 1, "pole order starts at 1");
        let mut polar = BTreeMap::new();
        if c != 0.0 {
            polar.insert(order, c);
        }
        Laurent { polar, finite: 0.0 }
    }

    pub fn new(polar: BTreeMap<usize, f64>, finite: f64) -> Laurent {
        assert!(!polar.contains_key(&0), "pole order starts at 1");
        let polar = polar.into_iter().filter(|(_, c)| *c != 0.0).collect();
        Laurent { polar, finite }
    }

    pub fn polar(&self) -> &BTreeMap<usize, f64> {
        &self.polar
    }

    pub fn finite(&self) -> f64 {
        self.finite
    }

    fn add_polar(&mut self, k: usize, c: f64) {
        let e = self.polar.entry(k).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.polar.remove(&k);
        }
    }

    pub fn plus(&self, other: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (&k, &c) in &other.polar {
            out.add_polar(k, c);
        }
        out.finite += other.finite;
        out
    }

    pub fn minus(&self, other: &Laurent) -> Laurent {
        self.plus(&other.scaled(-1.0))
    }

    pub fn times(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::constant(self.finite * other.finite);
        for (&a, &x) in &self.polar {
            for (&b, &y) in &other.polar {
                out.add_polar(a + b, x * y);
            }
            out.add_polar(a, x * other.finite);
        }
        for (&b, &y) in &other.polar {
            out.add_polar(b, self.finite * y);
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Laurent {
        Laurent::new(self.polar.iter().map(|(&k, &v)| (k, v * c)).collect(), self.finite * c)
    }

    /// The Rota–Baxter operator: projection onto the polar part.
    pub fn rb_t(&self) -> Laurent {
        Laurent { polar: self.polar.clone(), finite: 0.0 }
    }

    /// `(1 − T)`: the finite part.
    pub fn rb_complement(&self) -> Laurent {
        Laurent::constant(self.finite)
    }

    /// Highest pole order whose coefficient exceeds `tol` in absolute value; 0 if none.
    pub fn polar_order(&self, tol: f64) -> usize {
        self.polar.iter().filter(|(_, c)| c.abs() > tol).map(|(k, _)| *k).max().unwrap_or(0)
    }

    /// Largest absolute coefficient difference.
    pub fn distance(&self, other: &Laurent) -> f64 {
        let d = self.minus(other);
        d.polar.values().fold(d.finite.abs(), |m, c| m.max(c.abs()))
    }

    pub fn to_json(&self) -> Value {
        // Adding 0.0 turns -0.0 into 0.0.
        let polar: Map<String, Value> = self.polar.iter().map(|(k, c)| (k.to_string(), json!(c + 0.0))).collect();
        json!({"polar": polar, "finite": self.finite + 0.0})
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.polar.iter().rev().map(|(k, c)| format!("{c} w^-{k}")).collect();
        if self.finite != 0.0 || parts.is_empty() {
            parts.push(format!("{}", self.finite));
        }
        write!(f, "{}", parts.join(" + ").replace("+ -", "- "))
    }
}

impl Target for Laurent {
    fn zero_elem() -> Self {
        Laurent::zero()
    }
    fn one_elem() -> Self {
        Laurent::one()
    }
    fn add(&self, other: &Self) -> Self {
        self.plus(other)
    }
    fn mul(&self, other: &Self) -> Self {
        self.times(other)
    }
    fn scale(&self, c: &Q) -> Self {
        self.scaled(q_to_f64(c))
    }
}

/// `Σ_{n≥0} 1/(1+nm)²` by partial sums up to `N = ⌈1/(m²ε)⌉ + 1` terms, added from the
/// smallest term up. The neglected tail is below `1/(m²(N−1)) ≤ ε`.
pub fn phi_series_value(m: u64, eps: f64) -> f64 {
    assert!(m >= 1, "series value needs m >= 1");
    let mf = m as f64;
    let n = (1.0 / (mf * mf * eps)).ceil() as u64 + 1;
    (0..n).rev().map(|k| 1.0 / (1.0 + k as f64 * mf).powi(2)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleMode {
    /// Flag-decorated trees: the chart's own output function.
    Flagged,
    /// Vertex-decorated trees: product over basic-input assignments.
    Vertex,
}

impl RuleMode {
    pub fn name(self) -> &'static str {
        match self {
            RuleMode::Flagged => "flagged",
            RuleMode::Vertex => "vertex",
        }
    }

    pub fn from_name(s: &str) -> Option<RuleMode> {
        match s {
            "flagged" => Some(RuleMode::Flagged),
            "vertex" => Some(RuleMode::Vertex),
            _ => None,
        }
    }
}

/// The halting-problem Feynman rule `Φ(k, f, z) = Σ zⁿ/(1 + n f̄(k))²`, collapsed at `z = 1`.
#[derive(Clone, Debug)]
pub struct FeynmanRule {
    pub mode: RuleMode,
    /// Finite prefix of `k ∈ N^∞`; later coordinates are 1.
    pub k: Vec<u64>,
    pub fuel: u64,
    pub eps: f64,
    /// Largest number of basic-input assignments a vertex-mode tree may need.
    pub sigma_cap: usize,
    /// Domain arities of the basic functions offered as inputs in vertex mode.
    pub sigma_arities: Vec<usize>,
    functions: HashMap<RecFun, Laurent>,
    series: HashMap<u64, f64>,
}

impl FeynmanRule {
    pub fn new(mode: RuleMode, k: Vec<u64>, fuel: u64, eps: f64) -> FeynmanRule {
        FeynmanRule {
            mode,
            k,
            fuel,
            eps,
            sigma_cap: 729,
            sigma_arities: vec![1],
            functions: HashMap::new(),
            series: HashMap::new(),
        }
    }

    pub fn args(&self, m: usize) -> Vec<u64> {
        (0..m).map(|i| self.k.get(i).copied().unwrap_or(1)).collect()
    }

    fn series_value(&mut self, m: u64) -> f64 {
        let eps = self.eps;
        *self.series.entry(m).or_insert_with(|| phi_series_value(m, eps))
    }

    /// `∏ⱼ Φ(k, fⱼ)` over output components; the empty function gives 1. A component with
    /// `f̄ⱼ(k) = 0` contributes the geometric series `w⁻¹`.
    pub fn function_value(&mut self, f: &RecFun) -> Result<Laurent, RenormError> {
        if let Some(v) = self.functions.get(f) {
            return Ok(v.clone());
        }
        let value = if let RecFun::Empty(..) = f {
            Laurent::one()
        } else {
            let (m, n) = f.signature()?;
            let args = self.args(m);
            let mut acc = Laurent::one();
            for j in 0..n {
                let fj = f.component(j)?;
                let factor = if let RecFun::Empty(..) = fj {
                    Laurent::one()
                } else {
                    match fbar(&fj, &args, self.fuel)? {
                        0 => Laurent::pole(1, 1.0),
                        v => Laurent::constant(self.series_value(v)),
                    }
                };
                acc = acc.times(&factor);
            }
            acc
        };
        self.functions.insert(f.clone(), value.clone());
        Ok(value)
    }

    /// `Φ` of a single tree. Flag-decorated trees that are not flow charts compute the
    /// empty function and get value 1.
    pub fn tree_value(&mut self, t: &Tree) -> Result<Laurent, RenormError> {
        match self.mode {
            RuleMode::Flagged => match flowchart_output(t) {
                Ok(f) => self.function_value(&f),
                Err(_) => Ok(Laurent::one()),
            },
            RuleMode::Vertex => {
                let padded = pad_tree(t);
                let flags = padded.flag_count();
                let pool = basic_inputs(&self.sigma_arities);
                let count = (pool.len() as u128).pow(flags as u32);
                if count > self.sigma_cap as u128 {
                    return Err(RenormError::SigmaCap { count, cap: self.sigma_cap });
                }
                let mut acc = Laurent::one();
                for sigma in sigma_assignments(flags, &pool) {
                    let f = flowchart_output_vertexmode(t, &sigma);
                    acc = acc.times(&self.function_value(&f)?);
                }
                Ok(acc)
            }
        }
    }

    pub fn forest_value(&mut self, f: &Forest) -> Result<Laurent, RenormError> {
        let mut acc = Laurent::one();
        for t in f.trees() {
            acc = acc.times(&self.tree_value(t)?);
        }
        Ok(acc)
    }

    pub fn element_value(&mut self, x: &Element) -> Result<Laurent, RenormError> {
        let mut acc = Laurent::zero();
        for (f, c) in x.iter() {
            acc = acc.plus(&self.forest_value(f)?.scaled(q_to_f64(c)));
        }
        Ok(acc)
    }
}

/// BPHZ factorization `φ = (φ₋ ∘ S) ⋆ φ₊` of a Feynman rule, memoized per tree.
#[derive(Debug)]
pub struct Bphz {
    pub rule: FeynmanRule,
    minus: HashMap<Tree, Laurent>,
    minus_direct: HashMap<Forest, Laurent>,
}

impl Bphz {
    pub fn new(rule: FeynmanRule) -> Bphz {
        Bphz { rule, minus: HashMap::new(), minus_direct: HashMap::new() }
    }

    /// `φ(τ) + Σ_C φ₋(π_C(τ)) φ(ρ_C(τ))`, the prepared value.
    pub fn prepared(&mut self, t: &Tree) -> Result<Laurent, RenormError> {
        let mut acc = self.rule.tree_value(t)?;
        for (pruned, trunk) in admissible_cuts(t) {
            let term = self.minus_forest(&pruned)?.times(&self.rule.tree_value(&trunk)?);
            acc = acc.plus(&term);
        }
        Ok(acc)
    }

    /// The counterterm `φ₋(τ) = −T(prepared)`.
    pub fn minus_tree(&mut self, t: &Tree) -> Result<Laurent, RenormError> {
        if let Some(v) = self.minus.get(t) {
            return Ok(v.clone());
        }
        let v = self.prepared(t)?.rb_t().scaled(-1.0);
        self.minus.insert(t.clone(), v.clone());
        Ok(v)
    }

    /// The renormalized value `φ₊(τ) = (1 − T)(prepared)`.
    pub fn plus_tree(&mut self, t: &Tree) -> Result<Laurent, RenormError> {
        Ok(self.prepared(t)?.rb_complement())
    }

    /// `φ₋` extended multiplicatively to a forest.
    pub fn minus_forest(&mut self, f: &Forest) -> Result<Laurent, RenormError> {
        let mut acc = Laurent::one();
        for t in f.trees() {
            acc = acc.times(&self.minus_tree(t)?);
        }
        Ok(acc)
    }

    pub fn plus_forest(&mut self, f: &Forest) -> Result<Laurent, RenormError> {
        let mut acc = Laurent::one();
        for t in f.trees() {
            acc = acc.times(&self.plus_tree(t)?);
        }
        Ok(acc)
    }

    pub fn minus_element(&mut self, x: &Element) -> Result<Laurent, RenormError> {
        let mut acc = Laurent::zero();
        for (f, c) in x.iter() {
            acc = acc.plus(&self.minus_forest(f)?.scaled(q_to_f64(c)));
        }
        Ok(acc)
    }

    fn prepared_forest_direct(&mut self, f: &Forest) -> Result<Laurent, RenormError> {
        let x = Element::forest(Mode::Commutative, f.clone());
        let mut acc = self.rule.forest_value(f)?;
        for ((l, r), c) in reduced_coproduct(&x)?.iter() {
            let term = self.minus_forest_direct(l)?.times(&self.rule.forest_value(r)?);
            acc = acc.plus(&term.scaled(q_to_f64(c)));
        }
        Ok(acc)
    }

    /// `φ₋` on a monomial computed by the recursion over its own reduced coproduct, without
    /// assuming multiplicativity.
    pub fn minus_forest_direct(&mut self, f: &Forest) -> Result<Laurent, RenormError> {
        if f.is_unit() {
            return Ok(Laurent::one());
        }
        let f = f.clone().canonicalize(Mode::Commutative);
        if let Some(v) = self.minus_direct.get(&f) {
            return Ok(v.clone());
        }
        let v = self.prepared_forest_direct(&f)?.rb_t().scaled(-1.0);
        self.minus_direct.insert(f, v.clone());
        Ok(v)
    }

    /// `φ₊` on a monomial by the same direct recursion.
    pub fn plus_forest_direct(&mut self, f: &Forest) -> Result<Laurent, RenormError> {
        if f.is_unit() {
            return Ok(Laurent::one());
        }
        let f = f.clone().canonicalize(Mode::Commutative);
        Ok(self.prepared_forest_direct(&f)?.rb_complement())
    }

    /// `((φ₋ ∘ S) ⋆ φ₊)(f)`, which should reproduce `φ(f)`.
    pub fn factorization_value(&mut self, f: &Forest, antipode: &mut Antipode) -> Result<Laurent, RenormError> {
        let x = Element::forest(Mode::Commutative, f.clone());
        let mut acc = Laurent::zero();
        for ((l, r), c) in crate::hopf::coproduct(&x).iter() {
            let s = antipode.forest(l);
            let term = self.minus_element(&s)?.times(&self.plus_forest(r)?);
            acc = acc.plus(&term.scaled(q_to_f64(c)));
        }
        Ok(acc)
    }

    /// The counterterm in the factored form `−T(φ(τ)(1 + Σ_C φ₋(π_C(τ))))`, which agrees
    /// with [`Bphz::minus_tree`] whenever every trunk has the same value as the tree.
    pub fn minus_tree_factored(&mut self, t: &Tree) -> Result<Laurent, RenormError> {
        let mut sum = Laurent::one();
        for (pruned, _) in admissible_cuts(t) {
            sum = sum.plus(&self.minus_forest(&pruned)?);
        }
        Ok(self.rule.tree_value(t)?.times(&sum).rb_t().scaled(-1.0))
    }
}

/// Flow charts up to `max_degree` vertices with binary `b`, `c`, `r` vertices and unary
/// `m` vertices, whose external flags carry functions from `pool`. Only admissible
/// labelings are kept; the result is sorted.
pub fn flagged_basis(max_degree: usize, pool: &[RecFun]) -> Vec<Tree> {
    // by_degree[d] holds (tree, output) pairs with d vertices; degree 0 stands for a flag.
    let mut by_degree: Vec<Vec<(Input, RecFun)>> = vec![pool.iter().map(|f| (Input::Flag(Some(f.clone())), f.clone())).collect()];
    let mut out = Vec::new();
    for d in 1..=max_degree {
        let mut level = Vec::new();
        for label in Label::ALL {
            if label == Label::M {
                for (i, f) in &by_degree[d - 1] {
                    if let Ok(g) = vertex_function(label, vec![f.clone()]) {
                        level.push((Input::Child(Tree::new(label, vec![i.clone()])), g));
                    }
                }
                continue;
            }
            for d1 in 0..d {
                let d2 = d - 1 - d1;
                for (i1, f1) in &by_degree[d1] {
                    for (i2, f2) in &by_degree[d2] {
                        if let Ok(g) = vertex_function(label, vec![f1.clone(), f2.clone()]) {
                            level.push((Input::Child(Tree::new(label, vec![i1.clone(), i2.clone()])), g));
                        }
                    }
                }
            }
        }
        out.extend(level.iter().filter_map(|(i, _)| match i {
            Input::Child(t) => Some(t.clone()),
            Input::Flag(_) => None,
        }));
        by_degree.push(level);
    }
    out.sort();
    out
}

/// The flag pool used for the exhaustive renormalization checks: the successor, the first
/// projection `N² → N` (whose minimization diverges off the diagonal) and the last
/// projection `N³ → N` (a recursion step).
pub fn default_flag_pool() -> Vec<RecFun> {
    vec![RecFun::S, RecFun::Proj(1, 2), RecFun::Proj(3, 3)]
}

/// Whether the value has no polar part beyond `tol`.
pub fn is_finite(x: &Laurent, tol: f64) -> bool {
    x.polar_order(tol) == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_tree;

    fn rule(mode: RuleMode, k: Vec<u64>) -> FeynmanRule {
        FeynmanRule::new(mode, k, 20_000, 1e-7)
    }

    #[test]
    fn laurent_arithmetic() {
        let w1 = Laurent::pole(1, 1.0);
        assert_eq!(w1.times(&w1), Laurent::pole(2, 1.0));
        let x = Laurent::constant(3.0).plus(&w1);
        assert_eq!(x.times(&Laurent::constant(2.0)), Laurent::constant(6.0).plus(&Laurent::pole(1, 2.0)));
        let t = Laurent::pole(2, 3.0).plus(&Laurent::constant(5.0));
        assert_eq!(t.rb_t(), Laurent::pole(2, 3.0));
        assert_eq!(Laurent::constant(5.0).rb_t(), Laurent::zero());
        let lhs = w1.rb_t().times(&w1.rb_t());
        let rhs = w1.times(&w1.rb_t()).rb_t().plus(&w1.rb_t().times(&w1).rb_t()).minus(&w1.times(&w1).rb_t());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn series_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((phi_series_value(1, 1e-7) - pi2 / 6.0).abs() <= 1e-7);
        assert!((phi_series_value(2, 1e-7) - pi2 / 8.0).abs() <= 1e-7);
        assert!((phi_series_value(3, 1e-4) - phi_series_value(3, 1e-5)).abs() <= 1e-4);
    }

    #[test]
    fn flagged_rule_examples() {
        let mut r = rule(RuleMode::Flagged, vec![2]);
        let diverging = parse_tree("m(in(P[1,2]))").unwrap();
        assert_eq!(r.tree_value(&diverging).unwrap(), Laurent::pole(1, 1.0));
        // S(1) = 2, so the finite value is the m = 2 series.
        let mut r1 = rule(RuleMode::Flagged, vec![1]);
        let total = parse_tree("c(in(S),in(P[1,1]))").unwrap();
        let v = r1.tree_value(&total).unwrap();
        assert!((v.finite() - std::f64::consts::PI.powi(2) / 8.0).abs() < 1e-6);
        let forest = Forest::new(vec![diverging.clone(), total.clone()]);
        let mut r2 = rule(RuleMode::Flagged, vec![2]);
        let prod = r2.forest_value(&forest).unwrap();
        let expected = r2.tree_value(&diverging).unwrap().times(&r2.tree_value(&total).unwrap());
        assert!(prod.distance(&expected) < 1e-12);
        // A chart that is not admissible computes the empty function.
        assert_eq!(r.tree_value(&parse_tree("r(in(S),in(S))").unwrap()).unwrap(), Laurent::one());
    }

    #[test]
    fn vertex_rule_examples() {
        let mut r = rule(RuleMode::Vertex, vec![1]);
        assert_eq!(r.tree_value(&parse_tree("r").unwrap()).unwrap(), Laurent::one());
        let b = r.tree_value(&parse_tree("b").unwrap()).unwrap();
        assert_eq!(b.polar_order(0.0), 0);
        assert!(b.finite() > 1.0);
        r.sigma_cap = 8;
        assert!(matches!(r.tree_value(&parse_tree("b").unwrap()), Err(RenormError::SigmaCap { count: 9, cap: 8 })));
        // With binary projections available, minimization can diverge.
        let mut r = rule(RuleMode::Vertex, vec![2]);
        r.sigma_arities = vec![1, 2];
        assert!(r.tree_value(&parse_tree("m").unwrap()).unwrap().polar_order(0.0) >= 1);
    }

    #[test]
    fn primitive_bphz() {
        let mut b = Bphz::new(rule(RuleMode::Flagged, vec![2]));
        let t = parse_tree("m(in(P[1,2]))").unwrap();
        assert_eq!(b.minus_tree(&t).unwrap(), Laurent::pole(1, -1.0));
        assert_eq!(b.plus_tree(&t).unwrap(), Laurent::zero());
        let finite = parse_tree("c(in(S),in(S))").unwrap();
        assert_eq!(b.minus_tree(&finite).unwrap(), Laurent::zero());
        assert_eq!(b.plus_tree(&finite).unwrap(), b.rule.tree_value(&finite).unwrap());
    }

    #[test]
    fn chain_with_divergent_subtree() {
        let mut b = Bphz::new(rule(RuleMode::Flagged, vec![2]));
        let t = parse_tree("c(m(in(P[1,2])),in(S))").unwrap();
        let sub = parse_tree("m(in(P[1,2]))").unwrap();
        let trunk = admissible_cuts(&t).into_iter().next().unwrap().1;
        let phi = b.rule.tree_value(&t).unwrap();
        let expected = phi.plus(&b.minus_tree(&sub).unwrap().times(&b.rule.tree_value(&trunk).unwrap())).rb_t().scaled(-1.0);
        assert_eq!(b.minus_tree(&t).unwrap(), expected);
        assert!(b.minus_tree(&t).unwrap().distance(&b.minus_tree_factored(&t).unwrap()) < 1e-12);
        assert_eq!(b.plus_tree(&t).unwrap().polar_order(0.0), 0);
    }

    #[test]
    fn flagged_basis_is_admissible() {
        let basis = flagged_basis(2, &default_flag_pool());
        assert!(!basis.is_empty());
        assert!(basis.iter().all(|t| flowchart_output(t).is_ok()));
        assert!(basis.contains(&parse_tree("m(in(P[1,2]))").unwrap()));
    }
}
