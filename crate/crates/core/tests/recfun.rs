use flowhopf::recfun::{binarize, evaluate, fbar, flowchart_output, parse_recfun, EvalResult};
use flowhopf::sample::{random_flowchart, ChartShape};
use flowhopf::RecFun;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUEL: u64 = 100_000;

#[test]
fn addition_matches_integer_sum() {
    let add = RecFun::addition();
    for x in 1..=10u64 {
        for y in 1..=10u64 {
            assert_eq!(evaluate(&add, &[x, y], FUEL).unwrap(), EvalResult::Halted(vec![x + y]), "{x} + {y}");
        }
    }
}

#[test]
fn one_step_recursion_agrees_with_primitive_recursion() {
    // The k-ary step receives (x, h, counter) where the primitive step receives (x, counter, h).
    let prim = RecFun::addition();
    let krec = RecFun::k_rec(vec![RecFun::S], RecFun::comp(RecFun::Proj(2, 3), RecFun::S));
    for x in 1..=10u64 {
        for y in 1..=10u64 {
            assert_eq!(evaluate(&krec, &[x, y], FUEL).unwrap(), evaluate(&prim, &[x, y], FUEL).unwrap());
        }
    }
}

#[test]
fn two_step_recursion_computes_fibonacci() {
    // h(x, 1) = h(x, 2) = 1 and h(x, n+2) = h(x, n) + h(x, n+1).
    let f = parse_recfun("krec(C[1],C[1]; comp(br(P[2,4],P[3,4]); rec(S; comp(P[3,3]; S))))").unwrap();
    let fib = [1u64, 1, 2, 3, 5, 8, 13, 21, 34, 55];
    for (i, want) in fib.iter().enumerate() {
        let got = evaluate(&f, &[1, i as u64 + 1], FUEL).unwrap();
        assert_eq!(got.halted(), Some(&[*want][..]), "h({})", i + 1);
    }
}

#[test]
fn binarize_preserves_the_computed_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shape = ChartShape::default();
    let mut compared = 0;
    for i in 0..100 {
        let domain = 1 + i % 3;
        let t = random_flowchart(&mut rng, &shape, domain);
        let b = binarize(&t);
        let f = flowchart_output(&t).unwrap();
        let g = flowchart_output(&b).unwrap_or_else(|e| panic!("binarized {b} rejected: {e}"));
        assert_eq!(f.signature().unwrap(), g.signature().unwrap(), "{t}");
        for _ in 0..3 {
            let args: Vec<u64> = (0..domain).map(|_| rng.gen_range(1..=4)).collect();
            let (x, y) = (evaluate(&f, &args, FUEL).unwrap(), evaluate(&g, &args, FUEL).unwrap());
            if let (Some(x), Some(y)) = (x.halted(), y.halted()) {
                assert_eq!(x, y, "{t} on {args:?}");
                compared += 1;
            }
        }
    }
    assert!(compared > 100, "only {compared} halting comparisons");
}

#[test]
fn more_fuel_never_changes_a_halted_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = ChartShape { allow_mu: true, ..ChartShape::default() };
    for _ in 0..100 {
        let t = random_flowchart(&mut rng, &shape, 2);
        let f = flowchart_output(&t).unwrap();
        let args = [rng.gen_range(1..=3), rng.gen_range(1..=3)];
        let small = evaluate(&f, &args, 2_000).unwrap();
        if let Some(v) = small.halted() {
            assert_eq!(evaluate(&f, &args, FUEL).unwrap().halted(), Some(v), "{t}");
        }
    }
}

#[test]
fn fbar_is_zero_exactly_when_fuel_runs_out() {
    let first = parse_recfun("mu(P[2,2])").unwrap();
    assert_eq!(fbar(&first, &[1], 1_000).unwrap(), 1);
    let never = parse_recfun("mu(comp(P[1,2]; S))").unwrap();
    assert_eq!(fbar(&never, &[1], 1_000).unwrap(), 0);
    assert_eq!(fbar(&RecFun::addition(), &[2, 3], FUEL).unwrap(), 5);
}
