//! Flow charts: trees whose flags carry recursive functions and whose vertices apply
//! the elementary operations.

use std::fmt;

use super::RecFun;
use crate::tree::{Input, Label, Tree};

/// Why a labeled tree is not a flow chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    /// Child indices (counting all inputs) from the root to the offending vertex.
    pub path: Vec<usize>,
    pub label: Label,
    pub rule: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(usize::to_string).collect();
        write!(f, "vertex /{} ({}): {}", path.join("/"), self.label, self.rule)
    }
}

impl std::error::Error for Rejection {}

/// Smallest valence a vertex of each kind can have in a flow chart. Used to attach free
/// input flags to vertex-labeled trees.
pub const MIN_VALENCE: [(Label, usize); 4] =
    [(Label::B, 2), (Label::C, 2), (Label::R, 2), (Label::M, 1)];

fn min_valence(l: Label) -> usize {
    MIN_VALENCE.iter().find(|(x, _)| *x == l).map(|(_, v)| *v).unwrap_or(0)
}

/// Applies the elementary operation of a vertex to the functions on its inputs.
pub(crate) fn vertex_function(label: Label, inputs: Vec<RecFun>) -> Result<RecFun, String> {
    let sigs = inputs
        .iter()
        .map(|f| f.signature().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    match label {
        Label::C => {
            if inputs.len() < 2 {
                return Err(format!("composition needs at least 2 inputs, found {}", inputs.len()));
            }
            for w in sigs.windows(2) {
                if w[0].1 != w[1].0 {
                    return Err(format!(
                        "range {} of one input does not match domain {} of the next",
                        w[0].1, w[1].0
                    ));
                }
            }
            let mut it = inputs.into_iter();
            let first = it.next().expect("nonempty");
            Ok(it.fold(first, RecFun::comp))
        }
        Label::B => {
            if inputs.is_empty() {
                return Err("bracketing needs at least 1 input".into());
            }
            let m = sigs[0].0;
            if let Some(bad) = sigs.iter().find(|s| s.0 != m) {
                return Err(format!("bracketed functions need a common domain, found {m} and {}", bad.0));
            }
            Ok(RecFun::Bracket(inputs))
        }
        Label::R => {
            if inputs.len() < 2 {
                return Err(format!("recursion needs at least 2 inputs, found {}", inputs.len()));
            }
            let k = inputs.len() - 1;
            let n = sigs[0].0;
            for s in &sigs[..k] {
                if *s != (n, 1) {
                    return Err(format!(
                        "initial functions must be {n} -> 1, found {} -> {}",
                        s.0, s.1
                    ));
                }
            }
            let step = sigs[k];
            if step != (n + k + 1, 1) {
                return Err(format!(
                    "recursion step must be {} -> 1, found {} -> {}",
                    n + k + 1,
                    step.0,
                    step.1
                ));
            }
            let mut inputs = inputs;
            let g = inputs.pop().expect("k + 1 inputs");
            if k == 1 {
                Ok(RecFun::prim_rec(inputs.pop().expect("one initial"), g))
            } else {
                Ok(RecFun::k_rec(inputs, g))
            }
        }
        Label::M => {
            if inputs.len() != 1 {
                return Err(format!("minimization needs exactly 1 input, found {}", inputs.len()));
            }
            let (m, o) = sigs[0];
            if o != 1 || m < 2 {
                return Err(format!("minimized function must be n+1 -> 1 with n >= 1, found {m} -> {o}"));
            }
            Ok(RecFun::mu(inputs.into_iter().next().expect("one input")))
        }
    }
}

/// Propagates the flag labels to the root, checking every vertex. Returns the function
/// computed by the flow chart.
pub fn flowchart_output(t: &Tree) -> Result<RecFun, Rejection> {
    let mut path = Vec::new();
    output_at(t, &mut path)
}

fn output_at(t: &Tree, path: &mut Vec<usize>) -> Result<RecFun, Rejection> {
    let mut fs = Vec::with_capacity(t.valence());
    for (i, inp) in t.inputs().iter().enumerate() {
        match inp {
            Input::Flag(Some(f)) => fs.push(f.clone()),
            Input::Flag(None) => {
                return Err(Rejection {
                    path: path.clone(),
                    label: t.label(),
                    rule: format!("input {} is an unlabeled flag", i + 1),
                })
            }
            Input::Child(c) => {
                path.push(i);
                let f = output_at(c, path)?;
                path.pop();
                fs.push(f);
            }
        }
    }
    vertex_function(t.label(), fs).map_err(|rule| Rejection {
        path: path.clone(),
        label: t.label(),
        rule,
    })
}

/// Attaches free flags to every vertex that has none, up to the minimal valence of its kind.
pub fn pad_tree(t: &Tree) -> Tree {
    let has_flag = t.inputs().iter().any(|i| matches!(i, Input::Flag(_)));
    let mut inputs: Vec<Input> = t
        .inputs()
        .iter()
        .map(|i| match i {
            Input::Child(c) => Input::Child(pad_tree(c)),
            f => f.clone(),
        })
        .collect();
    if !has_flag {
        while inputs.len() < min_valence(t.label()) {
            inputs.push(Input::Flag(None));
        }
    }
    Tree::new(t.label(), inputs)
}

/// The basic functions available as inputs: `S` (arity 1), `C[a]` and `P[i,a]`.
pub fn basic_inputs(arities: &[usize]) -> Vec<RecFun> {
    let mut out = Vec::new();
    for &a in arities {
        if a == 1 {
            out.push(RecFun::S);
        }
        out.push(RecFun::Const(a));
        out.extend((1..=a).map(|i| RecFun::Proj(i, a)));
    }
    out
}

/// All assignments of `pool` elements to `flags` positions, in lexicographic order.
pub fn sigma_assignments(flags: usize, pool: &[RecFun]) -> impl Iterator<Item = Vec<RecFun>> + '_ {
    let total = if pool.is_empty() && flags > 0 { 0 } else { pool.len().pow(flags as u32) };
    (0..total).map(move |mut idx| {
        let mut v = vec![RecFun::S; flags];
        for slot in v.iter_mut().rev() {
            *slot = pool[idx % pool.len()].clone();
            idx /= pool.len();
        }
        v
    })
}

/// Output of a vertex-labeled tree under a basic-input assignment `sigma` (one function per
/// flag of the padded tree). Inadmissible labelings yield the empty function.
pub fn flowchart_output_vertexmode(t: &Tree, sigma: &[RecFun]) -> RecFun {
    let padded = pad_tree(t);
    assert_eq!(padded.flag_count(), sigma.len(), "one basic input per flag");
    let labeled = padded.substitute_flags(&mut |i| Some(Input::Flag(Some(sigma[i].clone()))));
    flowchart_output(&labeled).unwrap_or(RecFun::Empty(1, 1))
}

/// Rewrites every bracketing and composition vertex with more than two inputs as a
/// right-nested chain of binary vertices of the same kind. Recursion and minimization
/// vertices are left as they are.
pub fn binarize(t: &Tree) -> Tree {
    let inputs: Vec<Input> = t
        .inputs()
        .iter()
        .map(|i| match i {
            Input::Child(c) => Input::Child(binarize(c)),
            f => f.clone(),
        })
        .collect();
    match t.label() {
        Label::B | Label::C if inputs.len() > 2 => {
            let mut rev = inputs.into_iter().rev();
            let last = rev.next().expect("len > 2");
            let second = rev.next().expect("len > 2");
            let mut acc = Tree::new(t.label(), vec![second, last]);
            for inp in rev {
                acc = Tree::new(t.label(), vec![inp, Input::Child(acc)]);
            }
            acc
        }
        _ => Tree::new(t.label(), inputs),
    }
}
