use flowhopf::dse::FormalSeries;
use flowhopf::operad::OperadDse;
use flowhopf::properad::{FlowDag, ProperadDse, ProperadElement, ProperadError};
use flowhopf::scalar::Q;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POOL: &[&str] = &[
    "edge",
    "v: b(2->1)",
    "v: c(1->1)",
    "v: M(2->2)",
    "v: N(1->2)",
    "v: K(3->1)",
    "u: N(1->2); v: b(2->1); u.out1 -> v.in1",
    "u: M(2->2); v: c(2->1); u.out1 -> v.in1; u.out2 -> v.in2",
    "u: N(1->2); v: M(2->2); u.out2 -> v.in1",
];

fn pool() -> Vec<FlowDag> {
    POOL.iter().map(|s| FlowDag::parse(s).unwrap()).collect()
}

/// Random dags whose outputs add up to `total`.
fn fill(rng: &mut ChaCha8Rng, pool: &[FlowDag], total: usize) -> Vec<FlowDag> {
    let mut out = Vec::new();
    let mut left = total;
    while left > 0 {
        let fits: Vec<&FlowDag> = pool.iter().filter(|d| d.outputs() <= left).collect();
        let d = (*fits.choose(rng).expect("the edge always fits")).clone();
        left -= d.outputs();
        out.push(d);
    }
    out
}

fn el(d: &FlowDag) -> ProperadElement {
    ProperadElement::basis(d.clone())
}

fn compose(f: &ProperadElement, gs: &[ProperadElement]) -> ProperadElement {
    f.compose(&gs.iter().collect::<Vec<_>>()).unwrap()
}

#[test]
fn unit_laws_on_small_dags() {
    let e = ProperadElement::edge();
    for d in pool() {
        let x = el(&d);
        let (m, n) = d.bi_arity();
        assert_eq!(compose(&x, &vec![e.clone(); m]), x, "{d}");
        if n == 1 {
            assert_eq!(e.compose(&[&x]).unwrap(), x, "{d}");
        }
    }
}

#[test]
fn composition_is_associative_on_random_small_dags() {
    let pool = pool();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut nonzero = 0;
    for _ in 0..300 {
        let f = pool[rng.gen_range(0..pool.len())].clone();
        let gs = fill(&mut rng, &pool, f.inputs());
        // One block of inputs per g, so that each h feeds a single g.
        let blocks: Vec<Vec<ProperadElement>> =
            gs.iter().map(|g| fill(&mut rng, &pool, g.inputs()).iter().map(el).collect()).collect();
        let gs_el: Vec<ProperadElement> = gs.iter().map(el).collect();
        let hs_el: Vec<ProperadElement> = blocks.concat();
        let left = compose(&compose(&el(&f), &gs_el), &hs_el);
        let inner: Vec<ProperadElement> = gs.iter().zip(&blocks).map(|(g, b)| compose(&el(g), b)).collect();
        let right = compose(&el(&f), &inner);
        assert_eq!(left, right, "f = {f}");
        for (d, _) in left.terms() {
            // Every composite is connected and acyclic: it survives a round trip through the parser.
            assert_eq!(&FlowDag::parse(&d.to_string()).unwrap(), d);
        }
        if !left.is_zero() {
            nonzero += 1;
        }
    }
    assert!(nonzero > 100, "only {nonzero} connected composites");
}

fn diagonal() -> ProperadDse {
    ProperadDse { series: FormalSeries::parse("1,1/2,1/2").unwrap(), beta: ProperadDse::parse_beta("1,1:b | 2,2:M").unwrap() }
}

#[test]
fn diagonal_example_satisfies_the_equation() {
    let d = diagonal();
    let sol = d.solve(5).unwrap();
    assert_eq!(d.verify(&sol).unwrap(), None);
    assert!(!sol.component(2, 2).is_zero());
    let mut broken = sol.clone();
    let x22 = broken.component(2, 2).scale(&Q::from_integer(3.into()));
    broken.components.insert((2, 2), x22);
    assert_eq!(d.verify(&broken).unwrap(), Some((2, 2)));
}

#[test]
fn scalar_linear_part() {
    let d = ProperadDse { series: FormalSeries::parse("1,2/5").unwrap(), beta: ProperadDse::parse_beta("1,1:1/2").unwrap() };
    let sol = d.solve(4).unwrap();
    // (1 − 2/5 · 1/2)⁻¹ = 5/4.
    assert_eq!(sol.component(1, 1), ProperadElement::edge().scale(&(Q::from_integer(5.into()) / Q::from_integer(4.into()))));
    assert_eq!(sol.components.len(), 1);
    let d = ProperadDse { series: FormalSeries::parse("1,1/2").unwrap(), beta: ProperadDse::parse_beta("1,1:2").unwrap() };
    assert_eq!(d.solve(2), Err(ProperadError::NonInvertible));
}

#[test]
fn tree_shaped_case_matches_the_operad_solution() {
    let cases = [
        ("1,0,1", "2:b", "2,1:b"),
        ("1,1/3,1,1", "1:3/2,2:b,3:c", "1,1:3/2 | 2,1:b | 3,1:c"),
    ];
    let arity = 5;
    for (series, op_beta, prop_beta) in cases {
        let (lambda, beta) = OperadDse::parse_beta(op_beta).unwrap();
        let op = OperadDse { series: FormalSeries::parse(series).unwrap(), lambda, beta };
        let xs = op.solve(arity).unwrap();
        let pr = ProperadDse { series: FormalSeries::parse(series).unwrap(), beta: ProperadDse::parse_beta(prop_beta).unwrap() };
        let sol = pr.solve(arity - 1).unwrap();
        assert!(sol.components.keys().all(|&(_, n)| n == 1));
        for n in 1..=arity {
            let mut want = ProperadElement::zero(n, 1);
            for (t, c) in xs[&n].terms() {
                want.add_term(FlowDag::from_op_tree(t), c.clone());
            }
            assert_eq!(sol.component(n, 1), want, "{series}: arity {n}");
        }
    }
}
