//! Combinatorial Dyson–Schwinger equations in the Hopf algebra of trees.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::element::{Element, Tensor};
use crate::forest::{Forest, Mode};
use crate::grafting::{Graft, GraftError};
use crate::hopf::coproduct;
use crate::lincomb::LinComb;
use crate::linsolve::{tensor_membership, Membership, Span};
use crate::scalar::{format_q, parse_q, Q};
use crate::tree::{Label, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DseError {
    #[error("series must have constant coefficient 1, found {0}")]
    ConstantCoefficient(String),
    #[error("cannot parse series '{0}'")]
    SeriesSyntax(String),
    #[error("series for {0} is identically zero")]
    DegenerateSeries(Label),
    #[error("the Hopf-ideal check works in the commutative algebra")]
    NeedsCommutative,
    #[error(transparent)]
    Graft(#[from] GraftError),
}

/// A power series `P(t) = Σ a_k t^k` with `a₀ = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormalSeries {
    /// Finitely many coefficients `a₀, a₁, …`; the rest vanish.
    Polynomial(Vec<Q>),
    /// `1/(1−t)`.
    Geometric,
    /// `exp(t)`.
    Exponential,
}

impl FormalSeries {
    pub fn polynomial(coeffs: Vec<Q>) -> Result<FormalSeries, DseError> {
        let s = FormalSeries::Polynomial(coeffs);
        s.validate()?;
        Ok(s)
    }

    /// Parses `geometric`, `exp`, or comma-separated coefficients starting at `a₀`.
    pub fn parse(s: &str) -> Result<FormalSeries, DseError> {
        match s.trim() {
            "geometric" => Ok(FormalSeries::Geometric),
            "exp" => Ok(FormalSeries::Exponential),
            other => {
                let coeffs = other
                    .split(',')
                    .filter(|p| !p.trim().is_empty() && p.trim() != "...")
                    .map(|p| parse_q(p).ok_or_else(|| DseError::SeriesSyntax(s.to_string())))
                    .collect::<Result<Vec<_>, _>>()?;
                FormalSeries::polynomial(coeffs)
            }
        }
    }

    fn validate(&self) -> Result<(), DseError> {
        let a0 = self.coeff(0);
        if a0.is_one() {
            Ok(())
        } else {
            Err(DseError::ConstantCoefficient(format_q(&a0)))
        }
    }

    pub fn coeff(&self, k: usize) -> Q {
        match self {
            FormalSeries::Polynomial(c) => c.get(k).cloned().unwrap_or_else(Q::zero),
            FormalSeries::Geometric => Q::one(),
            FormalSeries::Exponential => {
                let mut f = Q::one();
                for i in 2..=k {
                    f *= Q::from_integer(i.into());
                }
                Q::one() / f
            }
        }
    }
}

impl fmt::Display for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormalSeries::Geometric => write!(f, "geometric"),
            FormalSeries::Exponential => write!(f, "exp"),
            FormalSeries::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(format_q).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// Homogeneous components `x₀, x₁, …, x_N` of a solution; `x₀` is the constant part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSolution {
    pub mode: Mode,
    pub cutoff: usize,
    pub components: Vec<Element>,
}

impl GradedSolution {
    pub fn component(&self, n: usize) -> &Element {
        &self.components[n]
    }

    /// `Σ xₙ` through the cutoff.
    pub fn total(&self) -> Element {
        let mut out = Element::zero(self.mode);
        for c in &self.components {
            out.add_scaled(c, &Q::one());
        }
        out
    }
}

/// Powers of a graded element: `table[k][n]` is the degree-`n` part of `X^k`.
struct PowerTable {
    mode: Mode,
    table: Vec<Vec<Element>>,
}

impl PowerTable {
    fn new(mode: Mode) -> PowerTable {
        PowerTable { mode, table: vec![vec![Element::one(mode)]] }
    }

    /// `(X^k)_n`, computed from the components of `X` through degree `n`.
    fn get(&mut self, k: usize, n: usize, xs: &[Element]) -> Element {
        while self.table.len() <= k {
            self.table.push(Vec::new());
        }
        if k == 0 {
            return if n == 0 { Element::one(self.mode) } else { Element::zero(self.mode) };
        }
        while self.table[k].len() <= n {
            let m = self.table[k].len();
            let mut acc = Element::zero(self.mode);
            for j in 0..=m {
                if xs[j].is_zero() {
                    continue;
                }
                let rest = self.get(k - 1, m - j, xs);
                if !rest.is_zero() {
                    acc.add_scaled(&(&xs[j] * &rest), &Q::one());
                }
            }
            self.table[k].push(acc);
        }
        self.table[k][n].clone()
    }
}

/// Solves `X = B(P(X))` degree by degree: `x₁ = B(1)` and
/// `x_{n+1} = Σ_k a_k B((X^k)_n)`.
pub fn solve_dse(p: &FormalSeries, b: &Graft, cutoff: usize, mode: Mode) -> Result<GradedSolution, DseError> {
    p.validate()?;
    let mut xs = vec![Element::zero(mode)];
    let mut powers = PowerTable::new(mode);
    for n in 0..cutoff {
        let mut next = Element::zero(mode);
        for k in 0..=n {
            let a = p.coeff(k);
            if a.is_zero() {
                continue;
            }
            let pk = powers.get(k, n, &xs);
            next.add_scaled(&b.apply(&pk)?, &a);
        }
        xs.push(next);
    }
    Ok(GradedSolution { mode, cutoff, components: xs })
}

/// Solves `X = 1 + Σ_k c_k B(X^{k+1})` with `x₀ = 1` and
/// `xₙ = Σ_k c_k B((X^{k+1})_{n−1})`.
pub fn solve_bk(c: &BTreeMap<usize, Q>, b: &Graft, cutoff: usize, mode: Mode) -> Result<GradedSolution, DseError> {
    let mut xs = vec![Element::one(mode)];
    let mut powers = PowerTable::new(mode);
    for n in 1..=cutoff {
        let mut next = Element::zero(mode);
        for (k, ck) in c {
            if ck.is_zero() || *k == 0 {
                continue;
            }
            let pk = powers.get(k + 1, n - 1, &xs);
            next.add_scaled(&b.apply(&pk)?, ck);
        }
        xs.push(next);
    }
    Ok(GradedSolution { mode, cutoff, components: xs })
}

/// Result of a degree-by-degree verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DegreeCheck {
    Pass { through: usize },
    Fail { degree: usize, detail: String },
}

impl DegreeCheck {
    pub fn passed(&self) -> bool {
        matches!(self, DegreeCheck::Pass { .. })
    }
}

impl fmt::Display for DegreeCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeCheck::Pass { through } => write!(f, "pass through degree {through}"),
            DegreeCheck::Fail { degree, detail } => write!(f, "fail at degree {degree}: {detail}"),
        }
    }
}

fn compare_components(xs: &[Element], rhs: &Element, cutoff: usize) -> DegreeCheck {
    for n in 0..=cutoff {
        let want = rhs.component(n);
        if xs[n] != want {
            let diff = &xs[n] - &want;
            return DegreeCheck::Fail { degree: n, detail: format!("x - rhs = {diff}") };
        }
    }
    DegreeCheck::Pass { through: cutoff }
}

/// `Σ_k a_k X^k` truncated at `cutoff`.
fn series_of(p: &dyn Fn(usize) -> Q, x: &Element, cutoff: usize) -> Element {
    let mode = x.mode();
    let mut out = Element::zero(mode);
    let mut power = Element::one(mode);
    for k in 0..=cutoff {
        let a = p(k);
        if !a.is_zero() {
            out.add_scaled(&power, &a);
        }
        power = power.try_mul_truncated(x, cutoff).expect("same mode");
        if power.is_zero() {
            break;
        }
    }
    out
}

/// Substitutes the components back into `X = B(P(X))` and compares degree by degree.
pub fn verify_dse(sol: &GradedSolution, p: &FormalSeries, b: &Graft, cutoff: usize) -> Result<DegreeCheck, DseError> {
    let cutoff = cutoff.min(sol.cutoff);
    let x = sol.total().truncate(cutoff);
    let px = series_of(&|k| p.coeff(k), &x, cutoff.saturating_sub(1));
    let rhs = b.apply(&px)?;
    Ok(compare_components(&sol.components, &rhs, cutoff))
}

/// Substitutes the components back into `X = 1 + Σ c_k B(X^{k+1})`.
pub fn verify_bk(sol: &GradedSolution, c: &BTreeMap<usize, Q>, b: &Graft, cutoff: usize) -> Result<DegreeCheck, DseError> {
    let cutoff = cutoff.min(sol.cutoff);
    let x = sol.total().truncate(cutoff);
    let mut rhs = Element::one(sol.mode);
    for (k, ck) in c {
        let mut power = Element::one(sol.mode);
        for _ in 0..=*k {
            power = power.try_mul_truncated(&x, cutoff.saturating_sub(1)).expect("same mode");
        }
        rhs.add_scaled(&b.apply(&power)?, ck);
    }
    Ok(compare_components(&sol.components, &rhs, cutoff))
}

/// `F(X) = Σ a_{k₁k₂k₃} X_b^{k₁} X_c^{k₂} X_r^{k₃}` for a system of equations.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MultiSeries {
    pub coeffs: BTreeMap<(usize, usize, usize), Q>,
}

impl MultiSeries {
    /// Parses sums of monomials such as `1 + Xc` or `1 + 2*Xb^2*Xr`.
    pub fn parse(s: &str) -> Result<MultiSeries, DseError> {
        let bad = || DseError::SeriesSyntax(s.to_string());
        let mut coeffs = BTreeMap::new();
        let normalized = s.replace('-', "+-");
        for term in normalized.split('+') {
            let term = term.trim();
            if term.is_empty() {
                continue;
            }
            let (neg, term) = match term.strip_prefix('-') {
                Some(t) => (true, t.trim()),
                None => (false, term),
            };
            let mut coef = Q::one();
            let mut exps = [0usize; 3];
            for factor in term.split('*').map(str::trim) {
                if let Some(var) = factor.strip_prefix('X') {
                    let (name, power) = match var.split_once('^') {
                        Some((n, p)) => (n, p.trim().parse::<usize>().map_err(|_| bad())?),
                        None => (var, 1),
                    };
                    let slot = match name.trim() {
                        "b" | "_b" => 0,
                        "c" | "_c" => 1,
                        "r" | "_r" => 2,
                        _ => return Err(bad()),
                    };
                    exps[slot] += power;
                } else {
                    coef *= parse_q(factor).ok_or_else(bad)?;
                }
            }
            if neg {
                coef = -coef;
            }
            let e = coeffs.entry((exps[0], exps[1], exps[2])).or_insert_with(Q::zero);
            *e += coef;
        }
        coeffs.retain(|_, v: &mut Q| !v.is_zero());
        Ok(MultiSeries { coeffs })
    }
}

pub const SYSTEM_LABELS: [Label; 3] = [Label::B, Label::C, Label::R];

/// Solves `X_δ = B⁺_δ(F_δ(X))` for δ ∈ {b, c, r} with corolla grafting.
pub fn solve_dse_system(fs: &[MultiSeries; 3], cutoff: usize, mode: Mode) -> Result<[GradedSolution; 3], DseError> {
    for (f, l) in fs.iter().zip(SYSTEM_LABELS) {
        if f.coeffs.is_empty() {
            return Err(DseError::DegenerateSeries(l));
        }
    }
    let mut xs: [Vec<Element>; 3] = std::array::from_fn(|_| vec![Element::zero(mode)]);
    for n in 0..cutoff {
        let totals: Vec<Element> = xs.iter().map(|c| sum(c, mode)).collect();
        let mut next = Vec::with_capacity(3);
        for (i, l) in SYSTEM_LABELS.iter().enumerate() {
            let fx = eval_multi(&fs[i], &totals, n, mode).component(n);
            next.push(Graft::Corolla(*l).apply(&fx)?);
        }
        for (i, x) in next.into_iter().enumerate() {
            xs[i].push(x);
        }
    }
    Ok(xs.map(|components| GradedSolution { mode, cutoff, components }))
}

fn sum(xs: &[Element], mode: Mode) -> Element {
    let mut out = Element::zero(mode);
    for x in xs {
        out.add_scaled(x, &Q::one());
    }
    out
}

fn eval_multi(f: &MultiSeries, x: &[Element], cutoff: usize, mode: Mode) -> Element {
    let mut out = Element::zero(mode);
    for ((k1, k2, k3), a) in &f.coeffs {
        let mut m = Element::one(mode);
        for (i, k) in [k1, k2, k3].into_iter().enumerate() {
            for _ in 0..*k {
                m = m.try_mul_truncated(&x[i], cutoff).expect("same mode");
            }
        }
        out.add_scaled(&m, a);
    }
    out
}

/// Substitutes a system solution back into its equations.
pub fn verify_dse_system(sols: &[GradedSolution; 3], fs: &[MultiSeries; 3], cutoff: usize) -> Result<DegreeCheck, DseError> {
    let mode = sols[0].mode;
    let totals: Vec<Element> = sols.iter().map(|s| s.total().truncate(cutoff)).collect();
    for (i, l) in SYSTEM_LABELS.iter().enumerate() {
        let rhs = Graft::Corolla(*l).apply(&eval_multi(&fs[i], &totals, cutoff.saturating_sub(1), mode))?;
        if let DegreeCheck::Fail { degree, detail } = compare_components(&sols[i].components, &rhs, cutoff) {
            return Ok(DegreeCheck::Fail { degree, detail: format!("X_{l}: {detail}") });
        }
    }
    Ok(DegreeCheck::Pass { through: cutoff })
}

/// Solves `(1 − αβt) P′(t) = α P(t)` for `(α, β)` from the first coefficients and checks the
/// recurrence `(k+1) a_{k+1} = α a_k + k α β a_k` for all `k < depth`.
pub fn foissy_series_check(p: &FormalSeries, depth: usize) -> Option<(Q, Q)> {
    let a = |k: usize| p.coeff(k);
    let alpha = a(1);
    let beta = if alpha.is_zero() {
        Q::zero()
    } else {
        Q::from_integer(2.into()) * a(2) / (&alpha * &alpha) - Q::one()
    };
    for k in 0..depth {
        let kq = Q::from_integer(k.into());
        let lhs = (&kq + Q::one()) * a(k + 1);
        let rhs = &alpha * a(k) + &kq * &alpha * &beta * a(k);
        if lhs != rhs {
            return None;
        }
    }
    Some((alpha, beta))
}

/// Products `x_{j₁} ⋯ x_{j_k}` with `Σ j = n`, spanning the degree-`n` part of the algebra
/// generated by the components (the unit for `n = 0`).
fn monomials(sol: &GradedSolution, n: usize) -> Vec<Element> {
    let mode = sol.mode;
    if n == 0 {
        return vec![Element::one(mode)];
    }
    let mut out = Vec::new();
    for j in 1..=n {
        let xj = &sol.components[j];
        if xj.is_zero() {
            continue;
        }
        for rest in monomials(sol, n - j) {
            let p = xj * &rest;
            if !p.is_zero() {
                out.push(p);
            }
        }
    }
    out
}

/// Checks that `Δ(xₙ)` lies in `A ⊗ A` for each `n ≤ cutoff`, where `A` is the algebra
/// generated by the components, by exact elimination.
pub fn subalgebra_closure_check(sol: &GradedSolution, cutoff: usize) -> DegreeCheck {
    let cutoff = cutoff.min(sol.cutoff);
    let mono: Vec<Vec<Element>> = (0..=cutoff).map(|n| monomials(sol, n)).collect();
    for n in 1..=cutoff {
        let target = coproduct(&sol.components[n]);
        let mut gens = Vec::new();
        for p in 0..=n {
            for l in &mono[p] {
                for r in &mono[n - p] {
                    gens.push(Tensor::of(l, r));
                }
            }
        }
        if let Membership::NotInSpan { residual } = tensor_membership(&target, &gens) {
            let (k, _) = residual.first().expect("nonzero residual");
            return DegreeCheck::Fail {
                degree: n,
                detail: format!("coproduct term {} ⊗ {} is outside A ⊗ A", k.0, k.1),
            };
        }
    }
    DegreeCheck::Pass { through: cutoff }
}

/// Checks `Δ(xₙ) = Σ_k Πⁿ_k ⊗ x_k` with `Πⁿ_k = (X^{k+1})_{n−k}` and `X = Σ x_j`, `x₀ = 1`.
pub fn bk_coproduct_formula_check(sol: &GradedSolution, cutoff: usize) -> DegreeCheck {
    let cutoff = cutoff.min(sol.cutoff);
    let mut powers = PowerTable::new(sol.mode);
    for n in 0..=cutoff {
        let lhs = coproduct(&sol.components[n]);
        let mut rhs = Tensor::zero(sol.mode);
        for k in 0..=n {
            let pi = powers.get(k + 1, n - k, &sol.components);
            rhs.add_scaled(&Tensor::of(&pi, &sol.components[k]), &Q::one());
        }
        if lhs != rhs {
            return DegreeCheck::Fail {
                degree: n,
                detail: format!("difference {}", &lhs - &rhs),
            };
        }
    }
    DegreeCheck::Pass { through: cutoff }
}

fn label_alphabet(gens: &[Element]) -> Vec<Label> {
    fn walk(t: &Tree, out: &mut Vec<Label>) {
        out.push(t.label());
        for c in t.children() {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    for g in gens {
        for (f, _) in g.iter() {
            for t in f.trees() {
                walk(t, &mut out);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Checks `Δ(I) ⊂ I ⊗ H + H ⊗ I` for the ideal generated by homogeneous `gens`, truncated at
/// `cutoff`. Works by reducing both tensor factors to normal forms modulo the degree-wise
/// spans `I_d = span{h·g}`; the check passes when every coproduct vanishes in `H/I ⊗ H/I`.
pub fn hopf_ideal_check(gens: &[Element], cutoff: usize) -> Result<DegreeCheck, DseError> {
    let gens: Vec<Element> = gens.iter().filter(|g| !g.is_zero()).cloned().collect();
    let Some(first) = gens.first() else {
        return Ok(DegreeCheck::Pass { through: cutoff });
    };
    let mode = first.mode();
    if mode != Mode::Commutative {
        return Err(DseError::NeedsCommutative);
    }
    let labels = label_alphabet(&gens);
    let mut spans: Vec<Span<Forest>> = (0..=cutoff).map(|_| Span::new()).collect();
    for g in &gens {
        let Some(k) = g.max_degree() else { continue };
        for d in k..=cutoff {
            for h in crate::basis::vertex_forests(d - k, &labels, mode) {
                let hg = &Element::forest(mode, h) * g;
                spans[d].push(hg.terms());
            }
        }
    }
    let reduce = |f: &Forest| -> LinComb<Forest> {
        let d = f.degree();
        if d > cutoff {
            return LinComb::basis(f.clone());
        }
        spans[d].normal_form(&LinComb::basis(f.clone()))
    };
    let mut gens_sorted = gens.clone();
    gens_sorted.sort_by_key(|g| g.max_degree());
    for g in &gens_sorted {
        let d = g.max_degree().unwrap_or(0);
        if d > cutoff {
            continue;
        }
        let mut image: LinComb<(Forest, Forest)> = LinComb::zero();
        for ((l, r), c) in coproduct(g).iter() {
            let nl = reduce(l);
            if nl.is_zero() {
                continue;
            }
            let nr = reduce(r);
            for (a, x) in &nl {
                for (b, y) in &nr {
                    image.add_term((a.clone(), b.clone()), c * x * y);
                }
            }
        }
        if let Some(((a, b), c)) = image.first() {
            return Ok(DegreeCheck::Fail {
                degree: d,
                detail: format!(
                    "generator {g}: term {} {a} ⊗ {b} has neither factor in the ideal",
                    format_q(c)
                ),
            });
        }
    }
    Ok(DegreeCheck::Pass { through: cutoff })
}

/// The positive-degree components of a solution, as ideal generators.
pub fn solution_generators(sol: &GradedSolution) -> Vec<Element> {
    sol.components[1..].to_vec()
}

/// Convenience: a single tree forest for tests and presets.
pub fn tree_element(mode: Mode, t: Tree) -> Element {
    Element::forest(mode, Forest::single(t))
}
