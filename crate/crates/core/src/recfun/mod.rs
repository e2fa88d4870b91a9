//! Partial recursive functions: syntax, signatures, fuel-bounded evaluation and flow charts.

mod eval;
mod flowchart;
pub(crate) mod parse;

use std::fmt;

use thiserror::Error;

pub use eval::{evaluate, fbar, EvalResult};
pub use flowchart::{
    basic_inputs, binarize, flowchart_output, flowchart_output_vertexmode, pad_tree,
    sigma_assignments, Rejection, MIN_VALENCE,
};
pub(crate) use flowchart::vertex_function;
pub use parse::parse_recfun;

/// Abstract syntax of a partial recursive function `Nᵐ → Nⁿ`.
///
/// Naturals start at 1: constants return 1 and recursion is indexed from 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecFun {
    /// Successor `N → N`.
    S,
    /// The constant `Nⁿ → N` with value 1.
    Const(usize),
    /// Projection `πᵢⁿ`, with `1 ≤ i ≤ n`.
    Proj(usize, usize),
    /// `Comp(f, g) = g ∘ f`; `f` is applied first.
    Comp(Box<RecFun>, Box<RecFun>),
    /// Juxtaposition of functions on a common domain.
    Bracket(Vec<RecFun>),
    /// `h(x, 1) = f(x)`, `h(x, k+1) = g(x, k, h(x, k))`.
    PrimRec(Box<RecFun>, Box<RecFun>),
    /// Recursion with `k` initial conditions `h(x, j) = fⱼ(x)` for `j ≤ k` and
    /// `h(x, k+ℓ) = g(x, h(x, ℓ), …, h(x, ℓ+k−1), k+ℓ−1)`.
    KRec(Vec<RecFun>, Box<RecFun>),
    /// `h(x) = min { y | f(x, y) = 1 }`, searched upwards from 1.
    Mu(Box<RecFun>),
    /// The nowhere-defined function `Nᵐ → Nⁿ`.
    Empty(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecFunError {
    #[error("arity mismatch at {node}: {reason}")]
    Signature { node: String, reason: String },
    #[error("expected {expected} arguments, got {got}")]
    ArgumentCount { expected: usize, got: usize },
    #[error("arguments must be naturals >= 1")]
    ZeroArgument,
    #[error("f-bar needs a single output, function has {0}")]
    MultiOutput(usize),
}

impl RecFun {
    pub fn comp(f: RecFun, g: RecFun) -> RecFun {
        RecFun::Comp(Box::new(f), Box::new(g))
    }

    pub fn prim_rec(f: RecFun, g: RecFun) -> RecFun {
        RecFun::PrimRec(Box::new(f), Box::new(g))
    }

    pub fn k_rec(fs: Vec<RecFun>, g: RecFun) -> RecFun {
        RecFun::KRec(fs, Box::new(g))
    }

    pub fn mu(f: RecFun) -> RecFun {
        RecFun::Mu(Box::new(f))
    }

    /// Addition `(x, y) ↦ x + y` as a primitive recursion.
    pub fn addition() -> RecFun {
        RecFun::prim_rec(RecFun::S, RecFun::comp(RecFun::Proj(3, 3), RecFun::S))
    }

    /// Input and output arity `(m, n)`.
    pub fn signature(&self) -> Result<(usize, usize), RecFunError> {
        let err = |reason: String| RecFunError::Signature { node: self.to_string(), reason };
        match self {
            RecFun::S => Ok((1, 1)),
            RecFun::Const(n) => {
                if *n == 0 {
                    return Err(err("constant needs arity >= 1".into()));
                }
                Ok((*n, 1))
            }
            RecFun::Proj(i, n) => {
                if *i == 0 || i > n {
                    return Err(err(format!("projection index {i} outside 1..={n}")));
                }
                Ok((*n, 1))
            }
            RecFun::Empty(m, n) => {
                if *m == 0 || *n == 0 {
                    return Err(err("empty function needs arities >= 1".into()));
                }
                Ok((*m, *n))
            }
            RecFun::Comp(f, g) => {
                let (m, n) = f.signature()?;
                let (n2, p) = g.signature()?;
                if n != n2 {
                    return Err(err(format!("inner range {n} does not match outer domain {n2}")));
                }
                Ok((m, p))
            }
            RecFun::Bracket(fs) => {
                let Some(first) = fs.first() else {
                    return Err(err("empty bracket".into()));
                };
                let (m, _) = first.signature()?;
                let mut total = 0;
                for f in fs {
                    let (mi, ni) = f.signature()?;
                    if mi != m {
                        return Err(err(format!("domains {m} and {mi} differ")));
                    }
                    total += ni;
                }
                Ok((m, total))
            }
            RecFun::PrimRec(f, g) => {
                let (n, o) = f.signature()?;
                let (gm, go) = g.signature()?;
                if o != 1 || go != 1 {
                    return Err(err("recursion needs single-output functions".into()));
                }
                if gm != n + 2 {
                    return Err(err(format!("step must have arity {}, found {gm}", n + 2)));
                }
                Ok((n + 1, 1))
            }
            RecFun::KRec(fs, g) => {
                let Some(first) = fs.first() else {
                    return Err(err("k-ary recursion needs k >= 1 initial functions".into()));
                };
                let (n, _) = first.signature()?;
                for f in fs {
                    let (fm, fo) = f.signature()?;
                    if fm != n || fo != 1 {
                        return Err(err(format!("initial function must be {n} -> 1, found {fm} -> {fo}")));
                    }
                }
                let k = fs.len();
                let (gm, go) = g.signature()?;
                if go != 1 || gm != n + k + 1 {
                    return Err(err(format!("step must be {} -> 1, found {gm} -> {go}", n + k + 1)));
                }
                Ok((n + 1, 1))
            }
            RecFun::Mu(f) => {
                let (m, o) = f.signature()?;
                if o != 1 || m < 2 {
                    return Err(err(format!("minimization needs n+1 -> 1 with n >= 1, found {m} -> {o}")));
                }
                Ok((m - 1, 1))
            }
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            RecFun::S | RecFun::Const(_) | RecFun::Proj(..) | RecFun::Empty(..) => 0,
            RecFun::Comp(f, g) | RecFun::PrimRec(f, g) => f.size() + g.size(),
            RecFun::Bracket(fs) => fs.iter().map(RecFun::size).sum(),
            RecFun::KRec(fs, g) => fs.iter().map(RecFun::size).sum::<usize>() + g.size(),
            RecFun::Mu(f) => f.size(),
        }
    }

    /// The `j`-th output component (0-based) of a well-formed function, as a function
    /// with a single output.
    pub fn component(&self, j: usize) -> Result<RecFun, RecFunError> {
        let (m, n) = self.signature()?;
        if j >= n {
            return Err(RecFunError::Signature {
                node: self.to_string(),
                reason: format!("no output component {}", j + 1),
            });
        }
        if n == 1 {
            return Ok(self.clone());
        }
        match self {
            RecFun::Bracket(fs) => {
                let mut offset = 0;
                for f in fs {
                    let (_, k) = f.signature()?;
                    if j < offset + k {
                        return f.component(j - offset);
                    }
                    offset += k;
                }
                unreachable!("signature covers every component")
            }
            RecFun::Comp(f, g) => Ok(RecFun::comp((**f).clone(), g.component(j)?)),
            RecFun::Empty(..) => Ok(RecFun::Empty(m, 1)),
            _ => unreachable!("only brackets, composites and the empty function have several outputs"),
        }
    }
}

impl fmt::Display for RecFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, xs: &[RecFun]) -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
        match self {
            RecFun::S => write!(f, "S"),
            RecFun::Const(n) => write!(f, "C[{n}]"),
            RecFun::Proj(i, n) => write!(f, "P[{i},{n}]"),
            RecFun::Comp(a, b) => write!(f, "comp({a};{b})"),
            RecFun::Bracket(xs) => {
                write!(f, "br(")?;
                list(f, xs)?;
                write!(f, ")")
            }
            RecFun::PrimRec(a, b) => write!(f, "rec({a};{b})"),
            RecFun::KRec(xs, g) => {
                write!(f, "krec(")?;
                list(f, xs)?;
                write!(f, ";{g})")
            }
            RecFun::Mu(a) => write!(f, "mu({a})"),
            RecFun::Empty(m, n) => write!(f, "empty[{m},{n}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signatures() {
        assert_eq!(RecFun::S.signature(), Ok((1, 1)));
        assert_eq!(RecFun::comp(RecFun::S, RecFun::S).signature(), Ok((1, 1)));
        assert_eq!(RecFun::addition().signature(), Ok((2, 1)));
        assert_eq!(
            RecFun::Bracket(vec![RecFun::S, RecFun::Const(1)]).signature(),
            Ok((1, 2))
        );
        assert_eq!(RecFun::mu(RecFun::Proj(2, 2)).signature(), Ok((1, 1)));
        assert_eq!(
            RecFun::k_rec(vec![RecFun::S, RecFun::S], RecFun::Proj(1, 4)).signature(),
            Ok((2, 1))
        );
    }

    #[test]
    fn mismatches_name_the_node() {
        let bad = RecFun::prim_rec(RecFun::S, RecFun::S);
        match bad.signature() {
            Err(RecFunError::Signature { node, .. }) => assert_eq!(node, "rec(S;S)"),
            other => panic!("{other:?}"),
        }
        assert!(RecFun::Proj(3, 2).signature().is_err());
        assert!(RecFun::comp(RecFun::S, RecFun::Const(2)).signature().is_err());
    }
}
