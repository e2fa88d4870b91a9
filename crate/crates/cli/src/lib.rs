//! Command-line front end. [`run`] takes the argument vector and returns the exit code
//! with everything the command printed, so tests can drive it without a subprocess.
//!
//! Exit codes: 0 on success or a passing check, 1 on a failing check (the witness is
//! printed), 2 on usage, parse or evaluation errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand};
use flowhopf::dse::{
    bk_coproduct_formula_check, foissy_series_check, hopf_ideal_check, solution_generators, solve_bk, solve_dse,
    solve_dse_system, subalgebra_closure_check, verify_bk, verify_dse, verify_dse_system, DegreeCheck, FormalSeries,
    GradedSolution, MultiSeries,
};
use flowhopf::grafting::{cocycle_check, CocycleOutcome, Graft};
use flowhopf::hopf::{coproduct, reduced_coproduct, Antipode};
use flowhopf::operad::{suboperad_closure_check, OperadDse};
use flowhopf::properad::{ProperadDse, ProperadSolution};
use flowhopf::recfun::{binarize, evaluate, flowchart_output, flowchart_output_vertexmode, pad_tree, parse_recfun, EvalResult};
use flowhopf::renorm::{Bphz, FeynmanRule, Laurent, RuleMode};
use flowhopf::sample::{random_flowchart, ChartShape};
use flowhopf::scalar::{format_q, parse_q, Q};
use flowhopf::{json, parse_element, parse_tree, Element, Mode, Tree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Environment variable bounding the number of terms any printed object may have.
pub const MAX_TERMS_VAR: &str = "HOPF_FLOW_MAX_TERMS";

#[derive(Parser, Debug)]
#[command(name = "flowhopf", version, about = "Hopf algebras, operads and renormalization of flow charts")]
struct Cli {
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse an element and print its canonical form.
    Parse(ElementArgs),
    /// Coproduct by admissible cuts.
    Coproduct(CoproductArgs),
    /// Antipode.
    Antipode(ElementArgs),
    /// Check the 1-cocycle identity of a grafting operator on all basis forests.
    CocycleCheck(CocycleArgs),
    /// Hopf-algebraic Dyson-Schwinger equations.
    #[command(subcommand)]
    Dse(DseCmd),
    /// Dyson-Schwinger equations in the operad of flow charts.
    #[command(subcommand)]
    Operad(OperadCmd),
    /// Dyson-Schwinger equations in the properad of flow dags.
    #[command(subcommand)]
    Properad(ProperadCmd),
    /// Evaluate a recursive function with a fuel budget.
    Eval(EvalArgs),
    /// The function computed by a flow chart.
    Flowchart(FlowchartArgs),
    /// BPHZ renormalization of the halting Feynman rule.
    Renorm(RenormArgs),
}

#[derive(Args, Debug)]
struct ElementArgs {
    /// Element in the tree DSL, e.g. "b(c,r) + 2 c*m".
    #[arg(long, alias = "tree")]
    expr: String,
    #[arg(long, default_value = "nc")]
    mode: String,
}

#[derive(Args, Debug)]
struct CoproductArgs {
    #[command(flatten)]
    element: ElementArgs,
    /// Print the reduced coproduct.
    #[arg(long)]
    reduced: bool,
}

#[derive(Args, Debug)]
struct CocycleArgs {
    /// `corolla:b`, `binary:r`, `binary-zero:c`, `binary-sum` or `binary-zero-sum`.
    #[arg(long)]
    op: String,
    #[arg(long, default_value_t = 5)]
    max_degree: usize,
    #[arg(long, default_value = "nc")]
    mode: String,
}

#[derive(Subcommand, Debug)]
enum DseCmd {
    /// Solve degree by degree.
    Solve(DseArgs),
    /// Solve, then substitute back into the equation.
    Verify(DseArgs),
    /// Foissy series criterion and sub-Hopf-algebra closure of the solution.
    CheckHopf(DseArgs),
    /// Hopf-ideal check for the ideal generated by the solution (commutative mode).
    CheckIdeal(IdealArgs),
    /// Solve a system with one equation per label b, c, r.
    System(SystemArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct DseArgs {
    /// bk-binary or foissy-geometric.
    #[arg(long)]
    preset: Option<String>,
    /// Series coefficients `1,a1,a2,...`, or `geometric` / `exp`, for `X = B(P(X))`.
    #[arg(long, conflicts_with = "bk")]
    series: Option<String>,
    /// Coefficients `n:c_n,...` for `X = 1 + Σ c_n B(X^{n+1})`.
    #[arg(long)]
    bk: Option<String>,
    /// Grafting operator, as for cocycle-check.
    #[arg(long)]
    graft: Option<String>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args, Debug)]
struct IdealArgs {
    #[command(flatten)]
    dse: DseArgs,
    /// Explicit generators separated by `;` instead of a solution.
    #[arg(long)]
    gens: Option<String>,
}

#[derive(Args, Debug)]
struct SystemArgs {
    #[arg(long, default_value = "1")]
    fb: String,
    #[arg(long, default_value = "1")]
    fc: String,
    #[arg(long, default_value = "1")]
    fr: String,
    #[arg(long, default_value_t = 3)]
    cutoff: usize,
    #[arg(long, default_value = "nc")]
    mode: String,
}

#[derive(Subcommand, Debug)]
enum OperadCmd {
    Solve(OperadArgs),
    Verify(OperadArgs),
}

#[derive(Args, Debug)]
struct OperadArgs {
    #[arg(long)]
    series: String,
    /// Components `k:spec`, e.g. `1:1/2,2:b,3:b(#1,c(#2,#3))`.
    #[arg(long)]
    beta: String,
    /// Largest arity.
    #[arg(long, default_value_t = 4)]
    cutoff: usize,
    /// Also check that the spanned sub-operad is closed through this arity.
    #[arg(long)]
    closure: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum ProperadCmd {
    Solve(ProperadArgs),
    Verify(ProperadArgs),
}

#[derive(Args, Debug)]
struct ProperadArgs {
    /// properad-diagonal.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    series: Option<String>,
    /// Components `m,n:spec` separated by `|`, e.g. `1,1:b | 2,2:M`.
    #[arg(long)]
    beta: Option<String>,
    /// Largest vertex count kept.
    #[arg(long)]
    cutoff: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    expr: String,
    /// Comma-separated naturals >= 1.
    #[arg(long, default_value = "")]
    args: String,
    #[arg(long, default_value_t = 100_000)]
    fuel: u64,
}

#[derive(Args, Debug)]
struct FlowchartArgs {
    #[arg(long)]
    tree: String,
    /// Basic inputs for the flags of the padded vertex-labeled tree, separated by `;`.
    #[arg(long)]
    sigma: Option<String>,
    /// Also print the binarized chart.
    #[arg(long)]
    binarize: bool,
}

#[derive(Args, Debug)]
struct RenormArgs {
    /// halting-demo.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    tree: Option<String>,
    /// Renormalize this many seeded random flow charts instead of one tree.
    #[arg(long, conflicts_with = "tree")]
    sample: Option<usize>,
    /// Finite prefix of k; later coordinates are 1.
    #[arg(long)]
    k: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    fuel: u64,
    #[arg(long, default_value_t = 1e-7)]
    eps: f64,
    /// flagged or vertex.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 729)]
    sigma_cap: usize,
    /// Domain arities of the basic inputs used in vertex mode.
    #[arg(long, default_value = "1")]
    sigma_arities: String,
}

enum Failure {
    /// A check failed; the output already holds the witness.
    Check,
    /// Usage, parse or evaluation error.
    Error(String),
}

type Res = Result<(), Failure>;

fn err(e: impl std::fmt::Display) -> Failure {
    Failure::Error(e.to_string())
}

struct Out {
    json: bool,
    seed: u64,
    text: String,
}

impl Out {
    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    /// The metadata header of a text run.
    fn meta(&mut self, command: &str, fields: &[(&str, String)]) {
        if self.json {
            return;
        }
        let mut s = format!("# {command}");
        for (k, v) in fields {
            let _ = write!(s, " {k}={v}");
        }
        self.line(s);
    }

    fn emit_json(&mut self, command: &str, mut v: Value) {
        if let Value::Object(m) = &mut v {
            m.insert("command".into(), json!(command));
        }
        self.line(serde_json::to_string_pretty(&v).expect("serializable"));
    }
}

fn max_terms() -> Result<Option<usize>, Failure> {
    match std::env::var(MAX_TERMS_VAR) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Error(format!("{MAX_TERMS_VAR} must be a natural number, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn guard(what: &str, terms: usize) -> Res {
    if let Some(limit) = max_terms()? {
        if terms > limit {
            return Err(Failure::Error(format!("{what} has {terms} terms, over {MAX_TERMS_VAR}={limit}")));
        }
    }
    Ok(())
}

fn mode(s: &str) -> Result<Mode, Failure> {
    Mode::from_name(s).ok_or_else(|| Failure::Error(format!("unknown mode '{s}' (expected nc or comm)")))
}

/// Runs one command line (including the program name) and returns its exit code and output.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.to_string());
        }
    };
    let mut out = Out { json: cli.json, seed: cli.seed, text: String::new() };
    let result = match &cli.cmd {
        Cmd::Parse(a) => cmd_parse(&mut out, a),
        Cmd::Coproduct(a) => cmd_coproduct(&mut out, a),
        Cmd::Antipode(a) => cmd_antipode(&mut out, a),
        Cmd::CocycleCheck(a) => cmd_cocycle(&mut out, a),
        Cmd::Dse(c) => cmd_dse(&mut out, c),
        Cmd::Operad(c) => cmd_operad(&mut out, c),
        Cmd::Properad(c) => cmd_properad(&mut out, c),
        Cmd::Eval(a) => cmd_eval(&mut out, a),
        Cmd::Flowchart(a) => cmd_flowchart(&mut out, a),
        Cmd::Renorm(a) => cmd_renorm(&mut out, a),
    };
    match result {
        Ok(()) => (0, out.text),
        Err(Failure::Check) => (1, out.text),
        Err(Failure::Error(msg)) => {
            out.line(format!("error: {msg}"));
            (2, out.text)
        }
    }
}

fn cmd_parse(out: &mut Out, a: &ElementArgs) -> Res {
    let m = mode(&a.mode)?;
    let x = parse_element(&a.expr, m).map_err(err)?;
    guard("element", x.len())?;
    let degree = x.max_degree().unwrap_or(0);
    if out.json {
        out.emit_json("parse", json::element(&x, degree));
    } else {
        out.meta("parse", &[("mode", m.name().into()), ("cutoff", degree.to_string())]);
        out.line(x.to_string());
        out.line(format!("{} terms, degree <= {degree}", x.len()));
    }
    Ok(())
}

fn cmd_coproduct(out: &mut Out, a: &CoproductArgs) -> Res {
    let m = mode(&a.element.mode)?;
    let x = parse_element(&a.element.expr, m).map_err(err)?;
    let d = if a.reduced { reduced_coproduct(&x).map_err(err)? } else { coproduct(&x) };
    guard("coproduct", d.len())?;
    if out.json {
        let mut v = json::tensor(&d);
        v["mode"] = json!(m.name());
        v["reduced"] = json!(a.reduced);
        out.emit_json("coproduct", v);
    } else {
        out.meta("coproduct", &[("mode", m.name().into()), ("reduced", a.reduced.to_string())]);
        out.line(d.to_string());
        out.line(format!("{} terms", d.len()));
    }
    Ok(())
}

fn cmd_antipode(out: &mut Out, a: &ElementArgs) -> Res {
    let m = mode(&a.mode)?;
    let x = parse_element(&a.expr, m).map_err(err)?;
    let s = Antipode::new(m).apply(&x);
    guard("antipode", s.len())?;
    let degree = x.max_degree().unwrap_or(0);
    if out.json {
        out.emit_json("antipode", json::element(&s, degree));
    } else {
        out.meta("antipode", &[("mode", m.name().into()), ("cutoff", degree.to_string())]);
        out.line(s.to_string());
    }
    Ok(())
}

fn cmd_cocycle(out: &mut Out, a: &CocycleArgs) -> Res {
    let m = mode(&a.mode)?;
    let b = Graft::parse(&a.op).map_err(err)?;
    let outcome = cocycle_check(&b, a.max_degree, m).map_err(err)?;
    let meta = [("op", a.op.clone()), ("mode", m.name().into()), ("cutoff", a.max_degree.to_string())];
    match outcome {
        CocycleOutcome::Pass { checked, max_degree } => {
            if out.json {
                out.emit_json(
                    "cocycle-check",
                    json!({"op": a.op, "mode": m.name(), "cutoff": max_degree, "pass": true, "checked": checked}),
                );
            } else {
                out.meta("cocycle-check", &meta);
                out.line(format!("pass: {checked} basis forests through degree {max_degree}"));
            }
            Ok(())
        }
        CocycleOutcome::Witness { forest, lhs, rhs } => {
            let residual = &lhs - &rhs;
            if out.json {
                out.emit_json(
                    "cocycle-check",
                    json!({
                        "op": a.op, "mode": m.name(), "cutoff": a.max_degree, "pass": false,
                        "witness": json::forest(&forest), "witness_text": forest.to_string(),
                        "lhs": json::tensor(&lhs), "rhs": json::tensor(&rhs), "residual": json::tensor(&residual),
                    }),
                );
            } else {
                out.meta("cocycle-check", &meta);
                out.line(format!("fail: witness {forest} ({} trees)", forest.len()));
                out.line(format!("reduced lhs: {lhs}"));
                out.line(format!("reduced rhs: {rhs}"));
                out.line(format!("lhs - rhs: {residual}"));
            }
            Err(Failure::Check)
        }
    }
}

/// The equation behind a `dse` command after presets and defaults are applied.
enum Equation {
    Series(FormalSeries),
    Bk(BTreeMap<usize, Q>),
}

struct DseSetup {
    /// `None` only for `check-ideal` with explicit generators.
    equation: Option<Equation>,
    graft: Graft,
    graft_text: String,
    cutoff: usize,
    mode: Mode,
}

fn parse_bk(s: &str) -> Result<BTreeMap<usize, Q>, Failure> {
    let bad = || Failure::Error(format!("cannot parse coefficients '{s}' (expected n:c,...)"));
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (n, c) = part.split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        out.insert(n, parse_q(c).ok_or_else(bad)?);
    }
    Ok(out)
}

fn dse_setup(a: &DseArgs, default_mode: &str, need_equation: bool) -> Result<DseSetup, Failure> {
    let mut a = a.clone();
    match a.preset.as_deref() {
        None => {}
        Some("bk-binary") => {
            if a.series.is_none() {
                a.bk.get_or_insert_with(|| "1:1".into());
            }
            a.graft.get_or_insert_with(|| "binary-sum".into());
            a.cutoff.get_or_insert(2);
        }
        Some("foissy-geometric") => {
            if a.bk.is_none() {
                a.series.get_or_insert_with(|| "geometric".into());
            }
            a.graft.get_or_insert_with(|| "corolla:b".into());
            a.cutoff.get_or_insert(5);
        }
        Some(p) => return Err(Failure::Error(format!("unknown dse preset '{p}' (bk-binary, foissy-geometric)"))),
    }
    let equation = match (&a.series, &a.bk) {
        (Some(s), None) => Some(Equation::Series(FormalSeries::parse(s).map_err(err)?)),
        (None, Some(c)) => Some(Equation::Bk(parse_bk(c)?)),
        (None, None) if !need_equation => None,
        (None, None) => return Err(Failure::Error("one of --series, --bk or --preset is required".into())),
        (Some(_), Some(_)) => return Err(Failure::Error("--series and --bk exclude each other".into())),
    };
    let graft_text = a.graft.unwrap_or_else(|| "corolla:b".into());
    let graft = Graft::parse(&graft_text).map_err(err)?;
    Ok(DseSetup {
        equation,
        graft,
        graft_text,
        cutoff: a.cutoff.unwrap_or(4),
        mode: mode(a.mode.as_deref().unwrap_or(default_mode))?,
    })
}

impl DseSetup {
    fn describe(&self) -> Vec<(&'static str, String)> {
        let mut out = match &self.equation {
            Some(Equation::Series(p)) => vec![("series", p.to_string())],
            Some(Equation::Bk(c)) => vec![(
                "bk",
                c.iter().map(|(n, c)| format!("{n}:{}", format_q(c))).collect::<Vec<_>>().join(","),
            )],
            None => vec![],
        };
        out.extend([("graft", self.graft_text.clone()), ("mode", self.mode.name().into()), ("cutoff", self.cutoff.to_string())]);
        out
    }

    fn equation(&self) -> &Equation {
        self.equation.as_ref().expect("equation required by dse_setup")
    }

    fn solve(&self) -> Result<GradedSolution, Failure> {
        let sol = match self.equation() {
            Equation::Series(p) => solve_dse(p, &self.graft, self.cutoff, self.mode),
            Equation::Bk(c) => solve_bk(c, &self.graft, self.cutoff, self.mode),
        }
        .map_err(err)?;
        for (n, x) in sol.components.iter().enumerate() {
            guard(&format!("x{n}"), x.len())?;
        }
        Ok(sol)
    }

    fn meta_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for (k, v) in self.describe() {
            m.insert(k.into(), if k == "cutoff" { json!(self.cutoff) } else { json!(v) });
        }
        Value::Object(m)
    }
}

fn components_json(sol: &GradedSolution) -> Value {
    Value::Array(
        sol.components
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, x)| {
                let mut v = json::element(x, sol.cutoff);
                v["degree"] = json!(n);
                v
            })
            .collect(),
    )
}

fn check_json(c: &DegreeCheck) -> Value {
    match c {
        DegreeCheck::Pass { through } => json!({"pass": true, "through": through}),
        DegreeCheck::Fail { degree, detail } => json!({"pass": false, "degree": degree, "detail": detail}),
    }
}

fn cmd_dse(out: &mut Out, c: &DseCmd) -> Res {
    match c {
        DseCmd::Solve(a) => {
            let s = dse_setup(a, "nc", true)?;
            let sol = s.solve()?;
            if out.json {
                let mut v = s.meta_json();
                v["components"] = components_json(&sol);
                out.emit_json("dse solve", v);
            } else {
                out.meta("dse solve", &s.describe());
                for (n, x) in sol.components.iter().enumerate().skip(1) {
                    out.line(format!("x{n} = {x}"));
                }
            }
            Ok(())
        }
        DseCmd::Verify(a) => {
            let s = dse_setup(a, "nc", true)?;
            let sol = s.solve()?;
            let check = match s.equation() {
                Equation::Series(p) => verify_dse(&sol, p, &s.graft, s.cutoff),
                Equation::Bk(c) => verify_bk(&sol, c, &s.graft, s.cutoff),
            }
            .map_err(err)?;
            if !out.json {
                out.meta("dse verify", &s.describe());
            }
            report_checks(out, "dse verify", &s, &[("substitution", &check)], json!({}))
        }
        DseCmd::CheckHopf(a) => {
            let s = dse_setup(a, "nc", true)?;
            let sol = s.solve()?;
            let closure = subalgebra_closure_check(&sol, s.cutoff);
            match s.equation() {
                Equation::Series(p) => {
                    // Closure through degree n only involves a_1, ..., a_{n-1}.
                    let foissy = foissy_series_check(p, s.cutoff.saturating_sub(1));
                    let criterion = match &foissy {
                        Some((al, be)) => json!({"alpha": format_q(al), "beta": format_q(be)}),
                        None => Value::Null,
                    };
                    if !out.json {
                        out.meta("dse check-hopf", &s.describe());
                        match &foissy {
                            Some((al, be)) => out.line(format!("foissy: (alpha, beta) = ({}, {})", format_q(al), format_q(be))),
                            None => out.line("foissy: none"),
                        }
                    }
                    let agree = foissy.is_some() == closure.passed();
                    if !out.json {
                        out.line(format!("criterion and closure {}", if agree { "agree" } else { "disagree" }));
                    }
                    let res = report_checks(out, "dse check-hopf", &s, &[("closure", &closure)], json!({"foissy": criterion, "agree": agree}));
                    if agree {
                        res
                    } else {
                        Err(Failure::Check)
                    }
                }
                Equation::Bk(_) => {
                    let formula = bk_coproduct_formula_check(&sol, s.cutoff);
                    if !out.json {
                        out.meta("dse check-hopf", &s.describe());
                    }
                    report_checks(out, "dse check-hopf", &s, &[("bk-coproduct", &formula), ("closure", &closure)], json!({}))
                }
            }
        }
        DseCmd::CheckIdeal(a) => {
            let s = dse_setup(&a.dse, "comm", a.gens.is_none())?;
            let gens: Vec<Element> = match &a.gens {
                Some(g) => g
                    .split(';')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(|p| parse_element(p, s.mode).map_err(err))
                    .collect::<Result<_, _>>()?,
                None => solution_generators(&s.solve()?),
            };
            let check = hopf_ideal_check(&gens, s.cutoff).map_err(err)?;
            if !out.json {
                out.meta("dse check-ideal", &s.describe());
            }
            report_checks(out, "dse check-ideal", &s, &[("hopf-ideal", &check)], json!({"generators": gens.len()}))
        }
        DseCmd::System(a) => {
            let m = mode(&a.mode)?;
            let fs = [
                MultiSeries::parse(&a.fb).map_err(err)?,
                MultiSeries::parse(&a.fc).map_err(err)?,
                MultiSeries::parse(&a.fr).map_err(err)?,
            ];
            let sols = solve_dse_system(&fs, a.cutoff, m).map_err(err)?;
            let check = verify_dse_system(&sols, &fs, a.cutoff).map_err(err)?;
            let names = ["X_b", "X_c", "X_r"];
            if out.json {
                let mut v = json!({"mode": m.name(), "cutoff": a.cutoff, "fb": a.fb, "fc": a.fc, "fr": a.fr});
                for (name, sol) in names.iter().zip(&sols) {
                    v[*name] = components_json(sol);
                }
                v["verify"] = check_json(&check);
                out.emit_json("dse system", v);
            } else {
                out.meta(
                    "dse system",
                    &[("fb", a.fb.clone()), ("fc", a.fc.clone()), ("fr", a.fr.clone()), ("mode", m.name().into()), ("cutoff", a.cutoff.to_string())],
                );
                for (name, sol) in names.iter().zip(&sols) {
                    for (n, x) in sol.components.iter().enumerate().skip(1) {
                        guard(name, x.len())?;
                        out.line(format!("{name}[{n}] = {x}"));
                    }
                }
                out.line(format!("verify: {check}"));
            }
            if check.passed() {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
    }
}

fn report_checks(out: &mut Out, command: &str, s: &DseSetup, checks: &[(&str, &DegreeCheck)], extra: Value) -> Res {
    let passed = checks.iter().all(|(_, c)| c.passed());
    if out.json {
        let mut v = s.meta_json();
        for (name, c) in checks {
            v[*name] = check_json(c);
        }
        if let Value::Object(extra) = extra {
            for (k, x) in extra {
                v[k] = x;
            }
        }
        v["pass"] = json!(passed);
        out.emit_json(command, v);
    } else {
        for (name, c) in checks {
            out.line(format!("{name}: {c}"));
        }
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_operad(out: &mut Out, c: &OperadCmd) -> Res {
    let (a, verify) = match c {
        OperadCmd::Solve(a) => (a, false),
        OperadCmd::Verify(a) => (a, true),
    };
    let series = FormalSeries::parse(&a.series).map_err(err)?;
    let (lambda, beta) = OperadDse::parse_beta(&a.beta).map_err(err)?;
    let d = OperadDse { series, lambda, beta };
    let xs = d.solve(a.cutoff).map_err(err)?;
    for (n, x) in &xs {
        guard(&format!("x{n}"), x.terms().len())?;
    }
    let name = if verify { "operad verify" } else { "operad solve" };
    let failing = if verify { d.verify(&xs, a.cutoff).map_err(err)? } else { None };
    let closure = match a.closure {
        Some(k) => Some(suboperad_closure_check(&xs, k).map_err(err)?),
        None => None,
    };
    if out.json {
        let comps: Vec<Value> = xs
            .iter()
            .map(|(n, x)| {
                let terms: Vec<Value> = x.terms().iter().map(|(t, c)| json!({"coef": format_q(c), "tree": t.to_string()})).collect();
                json!({"arity": n, "terms": terms})
            })
            .collect();
        let mut v = json!({"series": a.series, "beta": a.beta, "cutoff": a.cutoff, "components": comps});
        if verify {
            v["verify"] = json!({"pass": failing.is_none(), "failing_arity": failing});
        }
        if let (Some(k), Some(c)) = (a.closure, closure) {
            v["closure"] = json!({"through": k, "pass": c.is_none(), "failing_arity": c});
        }
        out.emit_json(name, v);
    } else {
        out.meta(name, &[("series", a.series.clone()), ("beta", a.beta.clone()), ("cutoff", a.cutoff.to_string())]);
        for (n, x) in &xs {
            out.line(format!("x{n} = {x}"));
        }
        if verify {
            match failing {
                None => out.line(format!("verify: pass through arity {}", a.cutoff)),
                Some(n) => out.line(format!("verify: fail at arity {n}")),
            }
        }
        if let (Some(k), Some(c)) = (a.closure, closure) {
            match c {
                None => out.line(format!("closure: pass through arity {k}")),
                Some(n) => out.line(format!("closure: fail at arity {n}")),
            }
        }
    }
    if failing.is_some() || matches!(closure, Some(Some(_))) {
        Err(Failure::Check)
    } else {
        Ok(())
    }
}

fn properad_json(sol: &ProperadSolution) -> Value {
    Value::Array(
        sol.components
            .iter()
            .map(|((m, n), x)| {
                let terms: Vec<Value> = x
                    .terms()
                    .iter()
                    .map(|(d, c)| json!({"coef": format_q(c), "dag": d.to_json()}))
                    .collect();
                json!({"inputs": m, "outputs": n, "terms": terms})
            })
            .collect(),
    )
}

fn cmd_properad(out: &mut Out, c: &ProperadCmd) -> Res {
    let (a, verify) = match c {
        ProperadCmd::Solve(a) => (a, false),
        ProperadCmd::Verify(a) => (a, true),
    };
    let (mut series, mut beta, mut cutoff) = (a.series.clone(), a.beta.clone(), a.cutoff);
    match a.preset.as_deref() {
        None => {}
        Some("properad-diagonal") => {
            series.get_or_insert_with(|| "1,1/2,1/2".into());
            beta.get_or_insert_with(|| "1,1:b | 2,2:M".into());
            cutoff.get_or_insert(4);
        }
        Some(p) => return Err(Failure::Error(format!("unknown properad preset '{p}' (properad-diagonal)"))),
    }
    let (Some(series), Some(beta)) = (series, beta) else {
        return Err(Failure::Error("--series and --beta (or --preset) are required".into()));
    };
    let cutoff = cutoff.unwrap_or(3);
    let d = ProperadDse {
        series: FormalSeries::parse(&series).map_err(err)?,
        beta: ProperadDse::parse_beta(&beta).map_err(err)?,
    };
    let sol = d.solve(cutoff).map_err(err)?;
    for ((m, n), x) in &sol.components {
        guard(&format!("x({m},{n})"), x.terms().len())?;
    }
    let name = if verify { "properad verify" } else { "properad solve" };
    let failing = if verify { d.verify(&sol).map_err(err)? } else { None };
    if out.json {
        let mut v = json!({"series": series, "beta": beta, "cutoff": cutoff, "components": properad_json(&sol)});
        if verify {
            v["verify"] = json!({"pass": failing.is_none(), "failing": failing.map(|(m, n)| [m, n])});
        }
        out.emit_json(name, v);
    } else {
        out.meta(name, &[("series", series.clone()), ("beta", beta.clone()), ("cutoff", cutoff.to_string())]);
        for ((m, n), x) in &sol.components {
            out.line(format!("x({m},{n}) = {x}"));
        }
        if verify {
            match failing {
                None => out.line(format!("verify: pass through {cutoff} vertices")),
                Some((m, n)) => out.line(format!("verify: fail at bi-arity ({m},{n})")),
            }
        }
    }
    if failing.is_some() {
        Err(Failure::Check)
    } else {
        Ok(())
    }
}

fn parse_naturals(s: &str) -> Result<Vec<u64>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Failure::Error(format!("'{p}' is not a natural number"))))
        .collect()
}

fn cmd_eval(out: &mut Out, a: &EvalArgs) -> Res {
    let f = parse_recfun(&a.expr).map_err(err)?;
    let args = parse_naturals(&a.args)?;
    let r = evaluate(&f, &args, a.fuel).map_err(err)?;
    let shown = match &r {
        EvalResult::Halted(v) => {
            let vs: Vec<String> = v.iter().map(u64::to_string).collect();
            format!("Halted({})", vs.join(","))
        }
        EvalResult::OutOfFuel { consumed } => format!("OutOfFuel({consumed})"),
    };
    if out.json {
        let v = match &r {
            EvalResult::Halted(v) => json!({"expr": f.to_string(), "args": args, "fuel": a.fuel, "halted": true, "value": v}),
            EvalResult::OutOfFuel { consumed } => {
                json!({"expr": f.to_string(), "args": args, "fuel": a.fuel, "halted": false, "consumed": consumed})
            }
        };
        out.emit_json("eval", v);
    } else {
        out.meta("eval", &[("expr", f.to_string()), ("fuel", a.fuel.to_string())]);
        out.line(shown);
    }
    Ok(())
}

fn cmd_flowchart(out: &mut Out, a: &FlowchartArgs) -> Res {
    let t = parse_tree(&a.tree).map_err(err)?;
    let mut v = json!({"tree": t.to_string()});
    if !out.json {
        out.meta("flowchart", &[("tree", t.to_string())]);
    }
    if a.binarize {
        let b = binarize(&t);
        v["binarized"] = json!(b.to_string());
        if !out.json {
            out.line(format!("binarized: {b}"));
        }
    }
    let result = match &a.sigma {
        Some(sigma) => {
            let sigma = sigma
                .split(';')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| parse_recfun(p).map_err(err))
                .collect::<Result<Vec<_>, _>>()?;
            let flags = pad_tree(&t).flag_count();
            if sigma.len() != flags {
                return Err(Failure::Error(format!("the padded tree has {flags} flags, got {} basic inputs", sigma.len())));
            }
            Ok(flowchart_output_vertexmode(&t, &sigma))
        }
        None => flowchart_output(&t),
    };
    match result {
        Ok(f) => {
            let (m, n) = f.signature().map_err(err)?;
            if out.json {
                v["admissible"] = json!(true);
                v["function"] = json!(f.to_string());
                v["signature"] = json!([m, n]);
                out.emit_json("flowchart", v);
            } else {
                out.line(format!("{f} : N^{m} -> N^{n}"));
            }
            Ok(())
        }
        Err(rej) => {
            if out.json {
                v["admissible"] = json!(false);
                v["rejection"] = json!(rej.to_string());
                out.emit_json("flowchart", v);
            } else {
                out.line(format!("inadmissible: {rej}"));
            }
            Err(Failure::Check)
        }
    }
}

struct Renormalized {
    tree: Tree,
    phi: Laurent,
    minus: Laurent,
    plus: Laurent,
}

fn renorm_json(r: &Renormalized) -> Value {
    json!({
        "tree": r.tree.to_string(),
        "phi": r.phi.to_json(),
        "phi_minus": r.minus.to_json(),
        "phi_plus": r.plus.to_json(),
        "polar_order": r.phi.polar_order(0.0),
    })
}

fn cmd_renorm(out: &mut Out, a: &RenormArgs) -> Res {
    let (mut tree, mut k, mut rule_mode) = (a.tree.clone(), a.k.clone(), a.mode.clone());
    match a.preset.as_deref() {
        None => {}
        Some("halting-demo") => {
            if a.sample.is_none() {
                tree.get_or_insert_with(|| "c(m(in(P[1,2])),in(S))".into());
            }
            k.get_or_insert_with(|| "2".into());
            rule_mode.get_or_insert_with(|| "flagged".into());
        }
        Some(p) => return Err(Failure::Error(format!("unknown renorm preset '{p}' (halting-demo)"))),
    }
    let rule_mode = rule_mode.unwrap_or_else(|| "flagged".into());
    let rm = RuleMode::from_name(&rule_mode)
        .ok_or_else(|| Failure::Error(format!("unknown rule mode '{rule_mode}' (flagged or vertex)")))?;
    let k = parse_naturals(k.as_deref().unwrap_or("1"))?;
    if k.contains(&0) {
        return Err(Failure::Error("k must have coordinates >= 1".into()));
    }
    let mut rule = FeynmanRule::new(rm, k.clone(), a.fuel, a.eps);
    rule.sigma_cap = a.sigma_cap;
    rule.sigma_arities = parse_naturals(&a.sigma_arities)?.into_iter().map(|x| x as usize).collect();
    let trees: Vec<Tree> = match (&tree, a.sample) {
        (Some(t), None) => vec![parse_tree(t).map_err(err)?],
        (None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(out.seed);
            let shape = ChartShape { allow_mu: true, ..ChartShape::default() };
            (0..n).map(|_| random_flowchart(&mut rng, &shape, 1)).collect()
        }
        _ => return Err(Failure::Error("one of --tree, --sample or --preset is required".into())),
    };
    let mut b = Bphz::new(rule);
    let mut results = Vec::with_capacity(trees.len());
    for t in trees {
        let phi = b.rule.tree_value(&t).map_err(err)?;
        let minus = b.minus_tree(&t).map_err(err)?;
        let plus = b.plus_tree(&t).map_err(err)?;
        results.push(Renormalized { tree: t, phi, minus, plus });
    }
    let k_text: Vec<String> = k.iter().map(u64::to_string).collect();
    if out.json {
        let mut v = json!({"mode": rm.name(), "k": k, "fuel": a.fuel, "eps": a.eps, "sigma_cap": a.sigma_cap});
        if a.sample.is_some() {
            v["seed"] = json!(out.seed);
            v["results"] = Value::Array(results.iter().map(renorm_json).collect());
        } else if let (Value::Object(m), Value::Object(r)) = (&mut v, renorm_json(&results[0])) {
            m.extend(r);
        }
        out.emit_json("renorm", v);
    } else {
        let mut meta = vec![
            ("mode", rm.name().to_string()),
            ("k", k_text.join(",")),
            ("fuel", a.fuel.to_string()),
            ("eps", a.eps.to_string()),
            ("sigma_cap", a.sigma_cap.to_string()),
        ];
        if a.sample.is_some() {
            meta.push(("seed", out.seed.to_string()));
        }
        out.meta("renorm", &meta);
        for r in &results {
            out.line(format!("tree: {}", r.tree));
            out.line(format!("  phi       = {}  (polar order {})", r.phi, r.phi.polar_order(0.0)));
            out.line(format!("  phi_minus = {}", r.minus));
            out.line(format!("  phi_plus  = {}", r.plus));
        }
    }
    Ok(())
}
