use std::collections::BTreeMap;

use flowhopf::dse::{solve_dse, FormalSeries};
use flowhopf::grafting::Graft;
use flowhopf::operad::{suboperad_closure_check, OpTree, OperadDse, OperadElement, OperadError};
use flowhopf::scalar::Q;
use flowhopf::{parse_tree, Element, Label, Mode};
use proptest::prelude::*;

fn dse(series: &str, beta: &str) -> OperadDse {
    let (lambda, beta) = OperadDse::parse_beta(beta).unwrap();
    OperadDse { series: FormalSeries::parse(series).unwrap(), lambda, beta }
}

/// Sum of the flag-forgetful images, split by vertex count.
fn by_degree(xs: &BTreeMap<usize, OperadElement>, max_degree: usize) -> Vec<Element> {
    let mode = Mode::NonCommutative;
    let mut out = vec![Element::zero(mode); max_degree + 1];
    for x in xs.values() {
        for (f, c) in x.forget_flags().iter() {
            if f.degree() <= max_degree {
                out[f.degree()].add_term(f.clone(), c.clone());
            }
        }
    }
    out
}

#[test]
fn solution_satisfies_the_equation_through_arity_six() {
    for (series, beta) in [
        ("1,0,1", "2:b"),
        ("1,1/2,1,1", "1:3,2:c,3:r"),
        ("1,0,1,2", "2:b,3:b(#1,c(#2,#3))"),
    ] {
        let d = dse(series, beta);
        let xs = d.solve(6).unwrap();
        assert_eq!(d.verify(&xs, 6).unwrap(), None, "{series} / {beta}");
    }
}

#[test]
fn corrupted_solution_is_rejected() {
    let d = dse("1,0,1", "2:b");
    let mut xs = d.solve(4).unwrap();
    let x3 = xs[&3].scale(&Q::from_integer(2.into()));
    xs.insert(3, x3);
    assert_eq!(d.verify(&xs, 4).unwrap(), Some(3));
}

#[test]
fn forgetting_flags_recovers_the_hopf_solution() {
    // With corolla components and a₁ = 0, Y = Σ xₙ forgets to 1 + Z where Z solves
    // Z = B(Q(Z)) for Q(t) = Σ a_k (1+t)^k. Each vertex of arity k adds k − 1 inputs.
    let cases = [
        ("1,0,1", "2:b", "1,2,1", 5, 6),
        ("1,0,1/2,1/2", "2:c,3:c", "1,5/2,2,1/2", 2, 5),
    ];
    for (series, beta, hopf_series, degree, arity) in cases {
        let xs = dse(series, beta).solve(arity).unwrap();
        let got = by_degree(&xs, degree);
        let label = if beta.contains('b') { Label::B } else { Label::C };
        let p = FormalSeries::parse(hopf_series).unwrap();
        let want = solve_dse(&p, &Graft::Corolla(label), degree, Mode::NonCommutative).unwrap();
        assert_eq!(got[0], Element::one(Mode::NonCommutative));
        for n in 1..=degree {
            assert_eq!(&got[n], want.component(n), "{series}: degree {n}");
        }
    }
}

#[test]
fn lambda_one_is_not_invertible() {
    let d = dse("1,1,1", "1:1,2:b");
    assert!(matches!(d.solve(3), Err(OperadError::NonInvertible)));
    let d = dse("1,1/3,1", "1:3,2:b");
    assert!(matches!(d.solve(3), Err(OperadError::NonInvertible)));
}

#[test]
fn linear_part_scales_the_identity() {
    let d = dse("1,1/3,1", "1:3/2,2:b");
    let xs = d.solve(3).unwrap();
    assert_eq!(xs[&1], OperadElement::identity().scale(&Q::from_integer(2.into())));
    // x₂ = 2 · a₂ · b ∘ (x₁, x₁) = 8 b.
    let b2 = OperadElement::basis(OpTree::corolla(Label::B, 2).unwrap());
    assert_eq!(xs[&2], b2.scale(&Q::from_integer(8.into())));
}

#[test]
fn solution_span_closure() {
    let xs = dse("1,0,1", "2:b").solve(4).unwrap();
    // The compositions already separate every binary b-tree, so the span is closed.
    assert_eq!(suboperad_closure_check(&xs, 4).unwrap(), None);
}

#[test]
fn unit_laws_for_corollas() {
    let id = OperadElement::identity();
    for l in Label::ALL {
        for k in 2..=4 {
            let f = OperadElement::basis(OpTree::corolla(l, k).unwrap());
            let ids: Vec<&OperadElement> = vec![&id; k];
            assert_eq!(f.compose(&ids).unwrap(), f);
            assert_eq!(id.compose(&[&f]).unwrap(), f);
        }
    }
}

fn op(s: &str) -> OperadElement {
    OperadElement::basis(OpTree::from_tree(&parse_tree(s).unwrap()).unwrap())
}

fn small_op() -> impl Strategy<Value = OperadElement> {
    prop::sample::select(vec!["id", "b(_,_)", "c(_,_,_)", "r(_,b(_,_))", "b(c(_,_),_)", "m(_,_)"]).prop_map(|s| {
        if s == "id" {
            OperadElement::identity()
        } else {
            op(s)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative(f in small_op(), gs in prop::collection::vec(small_op(), 3), hs in prop::collection::vec(small_op(), 9)) {
        let gs = &gs[..f.arity()];
        let g_refs: Vec<&OperadElement> = gs.iter().collect();
        let total: usize = gs.iter().map(OperadElement::arity).sum();
        let hs = &hs[..total.min(hs.len())];
        prop_assume!(hs.len() == total);
        let left = f.compose(&g_refs).unwrap().compose(&hs.iter().collect::<Vec<_>>()).unwrap();
        let mut inner = Vec::new();
        let mut rest = hs;
        for g in gs {
            let (now, later) = rest.split_at(g.arity());
            inner.push(g.compose(&now.iter().collect::<Vec<_>>()).unwrap());
            rest = later;
        }
        let right = f.compose(&inner.iter().collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn composition_is_multilinear(f in small_op(), g in small_op(), h in small_op(), c in -3i64..=3) {
        let c = Q::from_integer(c.into());
        let mut sum = g.clone();
        prop_assume!(g.arity() == h.arity());
        sum.add_scaled(&h, &c);
        let first = |x: &OperadElement| {
            let mut a = vec![OperadElement::identity(); f.arity()];
            a[0] = x.clone();
            f.compose(&a.iter().collect::<Vec<_>>()).unwrap()
        };
        let mut want = first(&g);
        want.add_scaled(&first(&h), &c);
        prop_assert_eq!(first(&sum), want);
    }
}
