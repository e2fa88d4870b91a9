use flowhopf_cli::run;
use serde_json::Value;

fn cli(args: &[&str]) -> (i32, String) {
    let mut argv = vec!["flowhopf"];
    argv.extend_from_slice(args);
    run(argv)
}

fn cli_json(args: &[&str]) -> (i32, Value) {
    let mut argv = vec!["--json"];
    argv.extend_from_slice(args);
    let (code, out) = cli(&argv);
    (code, serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}")))
}

#[test]
fn every_text_run_starts_with_a_metadata_line() {
    let runs: &[&[&str]] = &[
        &["parse", "--expr", "b(c)"],
        &["coproduct", "--expr", "b(c)", "--reduced"],
        &["antipode", "--expr", "b(c)", "--mode", "comm"],
        &["cocycle-check", "--op", "corolla:c", "--max-degree", "2"],
        &["dse", "solve", "--preset", "foissy-geometric", "--cutoff", "3"],
        &["dse", "verify", "--series", "1,1", "--cutoff", "3"],
        &["operad", "solve", "--series", "1,0,1", "--beta", "2:b"],
        &["properad", "solve", "--preset", "properad-diagonal", "--cutoff", "2"],
        &["eval", "--expr", "S", "--args", "4"],
        &["flowchart", "--tree", "b(in(S),in(S))"],
        &["renorm", "--preset", "halting-demo"],
    ];
    for args in runs {
        let (code, out) = cli(args);
        assert_eq!(code, 0, "{args:?}: {out}");
        let first = out.lines().next().unwrap();
        assert!(first.starts_with(&format!("# {}", args[0])), "{args:?}: {first}");
    }
}

#[test]
fn json_carries_the_metadata_fields() {
    let (code, v) = cli_json(&["dse", "solve", "--preset", "foissy-geometric", "--cutoff", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["command"], "dse solve");
    assert_eq!(v["mode"], "nc");
    assert_eq!(v["cutoff"], 3);
    assert_eq!(v["series"], "geometric");
    assert_eq!(v["components"].as_array().unwrap().len(), 3);
    assert_eq!(v["components"][1]["terms"][0]["forest"][0]["label"], "b");
}

#[test]
fn outputs_are_deterministic() {
    let runs: &[&[&str]] = &[
        &["--json", "coproduct", "--expr", "b(c,r(m))*c + 1/2 r(b)"],
        &["dse", "solve", "--preset", "bk-binary"],
        &["--seed", "9", "renorm", "--sample", "4", "--k", "2", "--fuel", "2000"],
    ];
    for args in runs {
        assert_eq!(cli(args), cli(args), "{args:?}");
    }
    let a = cli(&["--seed", "1", "renorm", "--sample", "3", "--fuel", "2000"]);
    let b = cli(&["--seed", "2", "renorm", "--sample", "3", "--fuel", "2000"]);
    assert_ne!(a.1, b.1);
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["cocycle-check", "--op", "corolla:b", "--max-degree", "3"]).0, 0);
    let (code, out) = cli(&["cocycle-check", "--op", "binary:r", "--max-degree", "3"]);
    assert_eq!(code, 1);
    assert!(out.contains("witness"), "{out}");
    assert_eq!(cli(&["flowchart", "--tree", "r(in(S),in(S))"]).0, 1);
    assert_eq!(cli(&["parse", "--expr", "b(("]).0, 2);
    assert_eq!(cli(&["parse", "--expr", "b", "--mode", "weird"]).0, 2);
    assert_eq!(cli(&["dse", "solve", "--series", "2,1"]).0, 2);
    assert_eq!(cli(&["dse", "solve", "--preset", "nope"]).0, 2);
    assert_eq!(cli(&["nonsense"]).0, 2);
    assert_eq!(cli(&["--help"]).0, 0);
    let (code, out) = cli(&["flowchart", "--tree", "b(in(S),c)", "--sigma", "S"]);
    assert_eq!(code, 2);
    assert!(out.contains("3 flags"), "{out}");
}

#[test]
fn coproduct_of_a_chain() {
    let (_, out) = cli(&["coproduct", "--expr", "b(c)"]);
    assert!(out.contains("1 ⊗ b(c) + c ⊗ b + b(c) ⊗ 1"), "{out}");
    let (_, v) = cli_json(&["coproduct", "--expr", "b(c)", "--reduced"]);
    assert_eq!(v["reduced"], true);
    assert_eq!(v["terms"].as_array().unwrap().len(), 1);
    assert_eq!(v["terms"][0]["left"][0]["label"], "c");
}

#[test]
fn antipode_of_a_chain() {
    let (_, out) = cli(&["antipode", "--expr", "b(c)", "--mode", "comm"]);
    assert_eq!(out.lines().nth(1), Some("b*c - b(c)"));
}

#[test]
fn eval_reports_halting_and_fuel() {
    let (_, out) = cli(&["eval", "--expr", "comp(P[2,2];S)", "--args", "3,4"]);
    assert_eq!(out.lines().nth(1), Some("Halted(5)"));
    let (code, v) = cli_json(&["eval", "--expr", "mu(comp(P[1,2];S))", "--args", "1", "--fuel", "500"]);
    assert_eq!(code, 0);
    assert_eq!(v["halted"], false);
}

#[test]
fn flowchart_vertex_mode_and_binarize() {
    let (code, out) = cli(&["flowchart", "--tree", "c(b)", "--sigma", "S;S;S"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("N^1 -> N^1"), "{out}");
    let (_, v) = cli_json(&["flowchart", "--tree", "b(in(S),in(S),in(S))", "--binarize"]);
    assert_eq!(v["binarized"], "b(in(S),b(in(S),in(S)))");
    assert_eq!(v["signature"], serde_json::json!([1, 3]));
}

#[test]
fn dse_presets_and_checks() {
    let (code, v) = cli_json(&["dse", "check-hopf", "--preset", "bk-binary"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["bk-coproduct"]["pass"], true);
    let (code, v) = cli_json(&["dse", "check-ideal", "--gens", "b; c(b) - b*b", "--cutoff", "3"]);
    assert_eq!(v["mode"], "comm");
    assert_eq!(code, if v["pass"] == true { 0 } else { 1 });
    let (code, v) = cli_json(&["dse", "system", "--fb", "1 + Xc", "--fc", "1 + Xb", "--cutoff", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["verify"]["pass"], true);
}

#[test]
fn operad_closure_and_properad_verify() {
    let (code, v) = cli_json(&["operad", "solve", "--series", "1,0,1", "--beta", "2:b", "--cutoff", "4", "--closure", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["closure"]["pass"], true);
    assert_eq!(v["components"][0]["terms"][0]["tree"], "id");
    let (code, v) = cli_json(&["properad", "verify", "--preset", "properad-diagonal", "--cutoff", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["components"][0]["inputs"], 1);
}

#[test]
fn renorm_halting_demo() {
    let (code, v) = cli_json(&["renorm", "--preset", "halting-demo"]);
    assert_eq!(code, 0);
    assert_eq!(v["polar_order"], 1);
    assert!(v["phi_plus"]["polar"].as_object().unwrap().is_empty());
    let (code, out) = cli(&["renorm", "--tree", "b", "--mode", "vertex", "--sigma-cap", "8"]);
    assert_eq!(code, 2);
    assert!(out.contains("cap of 8"), "{out}");
}
