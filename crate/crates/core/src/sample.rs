//! Seeded random generators for property checks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::recfun::{flowchart_output, RecFun};
use crate::renorm::Laurent;
use crate::tree::{Input, Label, Tree};

/// A random element with up to `max_order` pole orders and coefficients in `[-range, range]`.
pub fn random_laurent<R: Rng>(rng: &mut R, max_order: usize, range: f64) -> Laurent {
    let mut polar = BTreeMap::new();
    for k in 1..=max_order {
        if rng.gen_bool(0.7) {
            polar.insert(k, rng.gen_range(-range..=range));
        }
    }
    Laurent::new(polar, rng.gen_range(-range..=range))
}

fn leaf<R: Rng>(rng: &mut R, domain: usize) -> (Input, usize) {
    let mut pool: Vec<RecFun> = (1..=domain).map(|i| RecFun::Proj(i, domain)).collect();
    pool.push(RecFun::Const(domain));
    if domain == 1 {
        pool.push(RecFun::S);
    }
    let f = pool.choose(rng).expect("nonempty pool").clone();
    (Input::Flag(Some(f)), 1)
}

/// Options for [`random_flowchart`].
#[derive(Clone, Debug)]
pub struct ChartShape {
    pub max_depth: usize,
    /// Largest number of inputs of bracketing and composition vertices.
    pub max_fan: usize,
    pub allow_recursion: bool,
    pub allow_mu: bool,
}

impl Default for ChartShape {
    fn default() -> Self {
        ChartShape { max_depth: 3, max_fan: 4, allow_recursion: true, allow_mu: false }
    }
}

/// Builds an input computing a function on `domain` arguments; with `single` the function
/// has exactly one output. Returns the input and its output arity.
fn gen<R: Rng>(rng: &mut R, shape: &ChartShape, depth: usize, domain: usize, single: bool) -> (Input, usize) {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, domain);
    }
    let mut kinds = vec![Label::C];
    if !single {
        kinds.push(Label::B);
    }
    if shape.allow_recursion && domain >= 2 {
        kinds.push(Label::R);
    }
    if shape.allow_mu {
        kinds.push(Label::M);
    }
    let d = depth - 1;
    match *kinds.choose(rng).expect("nonempty") {
        Label::B => {
            let k = rng.gen_range(2..=shape.max_fan.max(2));
            let mut inputs = Vec::with_capacity(k);
            let mut out = 0;
            for _ in 0..k {
                let (i, o) = gen(rng, shape, d, domain, false);
                inputs.push(i);
                out += o;
            }
            (Input::Child(Tree::new(Label::B, inputs)), out)
        }
        Label::C => {
            let k = rng.gen_range(2..=shape.max_fan.max(2));
            let mut inputs = Vec::with_capacity(k);
            let mut dom = domain;
            for j in 0..k {
                let (i, o) = gen(rng, shape, d, dom, single && j + 1 == k);
                inputs.push(i);
                dom = o;
            }
            (Input::Child(Tree::new(Label::C, inputs)), dom)
        }
        Label::R => {
            // Recursion over the last argument with k initial functions.
            let n = domain - 1;
            let k = rng.gen_range(1..=2);
            let mut inputs: Vec<Input> = (0..k).map(|_| gen(rng, shape, d, n, true).0).collect();
            inputs.push(gen(rng, shape, d, n + k + 1, true).0);
            (Input::Child(Tree::new(Label::R, inputs)), 1)
        }
        Label::M => {
            let (i, _) = gen(rng, shape, d, domain + 1, true);
            (Input::Child(Tree::new(Label::M, vec![i])), 1)
        }
    }
}

/// A random admissible flow chart on `domain` arguments with at least one vertex.
pub fn random_flowchart<R: Rng>(rng: &mut R, shape: &ChartShape, domain: usize) -> Tree {
    loop {
        if let (Input::Child(t), _) = gen(rng, shape, shape.max_depth.max(1), domain, false) {
            debug_assert!(flowchart_output(&t).is_ok(), "generated chart {t} is admissible");
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_charts_are_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shape = ChartShape { allow_mu: true, ..ChartShape::default() };
        for domain in 1..=3 {
            for _ in 0..200 {
                let t = random_flowchart(&mut rng, &shape, domain);
                let f = flowchart_output(&t).unwrap_or_else(|e| panic!("{t}: {e}"));
                assert_eq!(f.signature().unwrap().0, domain);
            }
        }
    }
}
