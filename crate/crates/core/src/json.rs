//! JSON renderings of trees, forests, elements and tensors.
//!
//! Trees are `{"label": "b", "children": [...]}`; an external flag in the children list is
//! `{"flag": "S"}`, or `{"flag": null}` when unlabeled. Coefficients are `"p/q"` strings.

use serde_json::{json, Value};

use crate::element::{Element, Tensor};
use crate::forest::Forest;
use crate::scalar::format_q;
use crate::tree::{Input, Tree};

pub fn tree(t: &Tree) -> Value {
    let children: Vec<Value> = t
        .inputs()
        .iter()
        .map(|i| match i {
            Input::Child(c) => tree(c),
            Input::Flag(f) => json!({"flag": f.as_ref().map(|f| f.to_string())}),
        })
        .collect();
    json!({"label": t.label().to_string(), "children": children})
}

pub fn forest(f: &Forest) -> Value {
    Value::Array(f.trees().iter().map(tree).collect())
}

/// `{"mode": .., "cutoff": .., "terms": [{"coef": "p/q", "forest": [...]}]}`.
pub fn element(x: &Element, cutoff: usize) -> Value {
    let terms: Vec<Value> = x
        .iter()
        .map(|(f, c)| json!({"coef": format_q(c), "forest": forest(f)}))
        .collect();
    json!({"mode": x.mode().name(), "cutoff": cutoff, "terms": terms})
}

/// `{"terms": [{"coef": "p/q", "left": [...], "right": [...]}]}`.
pub fn tensor(x: &Tensor) -> Value {
    let terms: Vec<Value> = x
        .iter()
        .map(|((l, r), c)| json!({"coef": format_q(c), "left": forest(l), "right": forest(r)}))
        .collect();
    json!({"terms": terms})
}
