use flowhopf_cli::{run, MAX_TERMS_VAR};

// Kept in its own test binary: setting the variable would affect concurrently running tests.
#[test]
fn term_guard_stops_large_outputs() {
    std::env::set_var(MAX_TERMS_VAR, "5");
    let (code, out) = run(["flowhopf", "dse", "solve", "--preset", "bk-binary"]);
    assert_eq!(code, 2);
    assert!(out.contains("x2 has 9 terms"), "{out}");
    assert_eq!(run(["flowhopf", "dse", "solve", "--preset", "foissy-geometric", "--cutoff", "3"]).0, 0);
    std::env::set_var(MAX_TERMS_VAR, "lots");
    assert_eq!(run(["flowhopf", "parse", "--expr", "b"]).0, 2);
    std::env::remove_var(MAX_TERMS_VAR);
}
