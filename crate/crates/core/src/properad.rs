//! The properad of flow charts on planar connected directed acyclic graphs, and its
//! Dyson–Schwinger equation.
//!
//! A [`FlowDag`] is stored in canonical form: vertices are numbered in the order a fixed
//! depth-first traversal discovers them, so structural equality is isomorphism of planar
//! graphs with ordered flags.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dse::FormalSeries;
use crate::lincomb::LinComb;
use crate::operad::OpTree;
use crate::scalar::{format_q, is_negative, Q};
use crate::tree::{Input, Label};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("dag syntax: {0}")]
    Syntax(String),
    #[error("unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("port {0} is out of range")]
    PortRange(String),
    #[error("port {0} is used more than once")]
    PortReused(String),
    #[error("output port {0} is neither connected nor a graph output")]
    DanglingOutput(String),
    #[error("vertex input {0} has no source")]
    MissingSource(String),
    #[error("elementary vertex {0} must have exactly one output")]
    ElementaryOutputs(String),
    #[error("vertex {0} needs at least one input and one output")]
    EmptyVertex(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has a directed cycle")]
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProperadError {
    #[error("composition expects arguments with {expected} outputs in total, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("non-invertible degree-1 operator: 1 - a1*lambda = 0")]
    NonInvertible,
    #[error("bad beta specification '{0}'")]
    BetaSyntax(String),
    #[error("beta component ({m},{n}) has bi-arity ({found_m},{found_n})")]
    BetaArity { m: usize, n: usize, found_m: usize, found_n: usize },
    #[error(transparent)]
    Dag(#[from] DagError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexLabel {
    Elementary(Label),
    Macro(String),
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Elementary(l) => write!(f, "{l}"),
            VertexLabel::Macro(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub label: VertexLabel,
    pub inputs: usize,
    pub outputs: usize,
}

/// Where a wire comes from: a graph input flag or an output port of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Input(usize),
    Port(usize, usize),
}

/// Where a wire goes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sink {
    Port(usize, usize),
    Output(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowDag {
    vertices: Vec<Vertex>,
    /// Source of each vertex input port.
    sources: Vec<Vec<Source>>,
    /// Source of each graph output flag.
    outputs: Vec<Source>,
    n_inputs: usize,
}

impl FlowDag {
    /// The bare edge, unit of `P(1,1)`.
    pub fn edge() -> FlowDag {
        FlowDag { vertices: Vec::new(), sources: Vec::new(), outputs: vec![Source::Input(0)], n_inputs: 1 }
    }

    /// A single vertex with its inputs and outputs as the graph flags, in order.
    pub fn vertex(label: VertexLabel, inputs: usize, outputs: usize) -> Result<FlowDag, DagError> {
        let v = Vertex { label, inputs, outputs };
        FlowDag::new(
            inputs,
            vec![v],
            vec![(0..inputs).map(Source::Input).collect()],
            (0..outputs).map(|q| Source::Port(0, q)).collect(),
        )
    }

    /// Validates the wiring and returns the canonical form.
    pub fn new(n_inputs: usize, vertices: Vec<Vertex>, sources: Vec<Vec<Source>>, outputs: Vec<Source>) -> Result<FlowDag, DagError> {
        if sources.len() != vertices.len() {
            return Err(DagError::Syntax("one source list per vertex expected".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            let name = format!("v{}", i + 1);
            if v.inputs == 0 || v.outputs == 0 {
                return Err(DagError::EmptyVertex(name));
            }
            if matches!(v.label, VertexLabel::Elementary(_)) && v.outputs != 1 {
                return Err(DagError::ElementaryOutputs(name));
            }
            if sources[i].len() != v.inputs {
                return Err(DagError::MissingSource(format!("{name}.in{}", sources[i].len() + 1)));
            }
        }
        let dag = FlowDag { vertices, sources, outputs, n_inputs };
        dag.check_wiring()?;
        dag.check_acyclic()?;
        dag.canonical()
    }

    pub fn inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn bi_arity(&self) -> (usize, usize) {
        (self.n_inputs, self.outputs.len())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn is_edge(&self) -> bool {
        self.vertices.is_empty()
    }

    fn all_sources(&self) -> impl Iterator<Item = (Sink, Source)> + '_ {
        let ports = self
            .sources
            .iter()
            .enumerate()
            .flat_map(|(v, ss)| ss.iter().enumerate().map(move |(p, s)| (Sink::Port(v, p), *s)));
        ports.chain(self.outputs.iter().enumerate().map(|(o, s)| (Sink::Output(o), *s)))
    }

    fn check_wiring(&self) -> Result<(), DagError> {
        let mut input_used = vec![false; self.n_inputs];
        let mut port_used: Vec<Vec<bool>> = self.vertices.iter().map(|v| vec![false; v.outputs]).collect();
        for (_, s) in self.all_sources() {
            match s {
                Source::Input(i) => {
                    let slot = input_used.get_mut(i).ok_or_else(|| DagError::PortRange(format!("in{}", i + 1)))?;
                    if std::mem::replace(slot, true) {
                        return Err(DagError::PortReused(format!("in{}", i + 1)));
                    }
                }
                Source::Port(v, q) => {
                    let slot = port_used
                        .get_mut(v)
                        .and_then(|ps| ps.get_mut(q))
                        .ok_or_else(|| DagError::PortRange(format!("v{}.out{}", v + 1, q + 1)))?;
                    if std::mem::replace(slot, true) {
                        return Err(DagError::PortReused(format!("v{}.out{}", v + 1, q + 1)));
                    }
                }
            }
        }
        if let Some(i) = input_used.iter().position(|u| !u) {
            return Err(DagError::Syntax(format!("graph input {} is unused", i + 1)));
        }
        for (v, ps) in port_used.iter().enumerate() {
            if let Some(q) = ps.iter().position(|u| !u) {
                return Err(DagError::DanglingOutput(format!("v{}.out{}", v + 1, q + 1)));
            }
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Result<(), DagError> {
        let n = self.vertices.len();
        let mut indegree = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (v, ss) in self.sources.iter().enumerate() {
            for s in ss {
                if let Source::Port(u, _) = s {
                    indegree[v] += 1;
                    succ[*u].push(v);
                }
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut done = 0;
        while let Some(u) = ready.pop() {
            done += 1;
            for &v in &succ[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.push(v);
                }
            }
        }
        if done == n {
            Ok(())
        } else {
            Err(DagError::Cyclic)
        }
    }

    /// Renumbers vertices by depth-first discovery from the output flags. Fails if some
    /// vertex or flag is unreachable.
    fn canonical(&self) -> Result<FlowDag, DagError> {
        let n = self.vertices.len();
        let mut consumer: Vec<Vec<Option<Sink>>> = self.vertices.iter().map(|v| vec![None; v.outputs]).collect();
        for (sink, s) in self.all_sources() {
            if let Source::Port(v, q) = s {
                consumer[v][q] = Some(sink);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut inputs_seen = vec![false; self.n_inputs];
        let mut stack: Vec<usize> = Vec::new();
        // Only the first output seeds the search, so every other part must be reached
        // through the wiring. A graph output fed straight from an input is a bare edge.
        match self.outputs.first() {
            Some(Source::Port(v, _)) => stack.push(*v),
            Some(Source::Input(_)) if n == 0 && self.outputs.len() == 1 => return Ok(self.clone()),
            _ => return Err(DagError::Disconnected),
        }
        if self.outputs.iter().any(|s| matches!(s, Source::Input(_))) {
            return Err(DagError::Disconnected);
        }
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            order.push(v);
            // Push in reverse so that inputs are explored before outputs, each in order.
            let mut next = Vec::new();
            for &s in &self.sources[v] {
                match s {
                    Source::Input(i) => inputs_seen[i] = true,
                    Source::Port(u, _) => next.push(u),
                }
            }
            for c in consumer[v].iter().flatten() {
                if let Sink::Port(w, _) = c {
                    next.push(*w);
                }
            }
            stack.extend(next.into_iter().rev());
        }
        if order.len() != n || inputs_seen.iter().any(|s| !s) {
            return Err(DagError::Disconnected);
        }
        let mut rank = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let remap = |s: &Source| match *s {
            Source::Input(i) => Source::Input(i),
            Source::Port(v, q) => Source::Port(rank[v], q),
        };
        Ok(FlowDag {
            vertices: order.iter().map(|&v| self.vertices[v].clone()).collect(),
            sources: order.iter().map(|&v| self.sources[v].iter().map(remap).collect()).collect(),
            outputs: self.outputs.iter().map(remap).collect(),
            n_inputs: self.n_inputs,
        })
    }

    /// Grafts the outputs of `gs`, blockwise and in order, onto the inputs of `self`.
    /// Returns `Ok(None)` when the composite is disconnected.
    pub fn compose(&self, gs: &[&FlowDag]) -> Result<Option<FlowDag>, ProperadError> {
        let got: usize = gs.iter().map(|g| g.outputs()).sum();
        if got != self.n_inputs {
            return Err(ProperadError::ArityMismatch { expected: self.n_inputs, got });
        }
        let mut vertices = Vec::new();
        let mut sources = Vec::new();
        // Each input of `self` resolves to a source in the composite.
        let mut resolved = Vec::with_capacity(self.n_inputs);
        let mut in_off = 0;
        for g in gs {
            let v_off = vertices.len();
            let shift = |s: &Source| match *s {
                Source::Input(i) => Source::Input(i + in_off),
                Source::Port(v, q) => Source::Port(v + v_off, q),
            };
            vertices.extend(g.vertices.iter().cloned());
            sources.extend(g.sources.iter().map(|ss| ss.iter().map(shift).collect::<Vec<_>>()));
            resolved.extend(g.outputs.iter().map(shift));
            in_off += g.n_inputs;
        }
        let v_off = vertices.len();
        let lift = |s: &Source| match *s {
            Source::Input(i) => resolved[i],
            Source::Port(v, q) => Source::Port(v + v_off, q),
        };
        vertices.extend(self.vertices.iter().cloned());
        sources.extend(self.sources.iter().map(|ss| ss.iter().map(lift).collect::<Vec<_>>()));
        let outputs = self.outputs.iter().map(lift).collect();
        let raw = FlowDag { vertices, sources, outputs, n_inputs: in_off };
        debug_assert!(raw.check_wiring().is_ok());
        debug_assert!(raw.check_acyclic().is_ok());
        match raw.canonical() {
            Ok(d) => Ok(Some(d)),
            Err(DagError::Disconnected) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// The dag of a tree-shaped operation: one elementary vertex per tree vertex.
    pub fn from_op_tree(t: &OpTree) -> FlowDag {
        let OpTree::Node(tree) = t else { return FlowDag::edge() };
        let mut vertices = Vec::new();
        let mut sources = Vec::new();
        let mut next_input = 0;
        fn walk(t: &crate::tree::Tree, vs: &mut Vec<Vertex>, ss: &mut Vec<Vec<Source>>, next_input: &mut usize) -> usize {
            let id = vs.len();
            vs.push(Vertex { label: VertexLabel::Elementary(t.label()), inputs: t.valence(), outputs: 1 });
            ss.push(Vec::new());
            let mut mine = Vec::with_capacity(t.valence());
            for i in t.inputs() {
                match i {
                    Input::Flag(_) => {
                        mine.push(Source::Input(*next_input));
                        *next_input += 1;
                    }
                    Input::Child(c) => {
                        let cid = walk(c, vs, ss, next_input);
                        mine.push(Source::Port(cid, 0));
                    }
                }
            }
            ss[id] = mine;
            id
        }
        walk(tree, &mut vertices, &mut sources, &mut next_input);
        FlowDag::new(next_input, vertices, sources, vec![Source::Port(0, 0)]).expect("trees are connected dags")
    }

    /// Parses the dag DSL: `edge`, or statements separated by `;` or newlines:
    /// `v1: b(2->1)`, `v1.out1 -> v2.in2`, and optionally `in: v1.in1, …` / `out: v2.out1, …`
    /// to order the graph flags. Without them dangling ports are taken in declaration order.
    pub fn parse(text: &str) -> Result<FlowDag, DagError> {
        let stmts: Vec<&str> = text.split([';', '\n']).map(str::trim).filter(|s| !s.is_empty()).collect();
        if stmts == ["edge"] {
            return Ok(FlowDag::edge());
        }
        let mut names: Vec<String> = Vec::new();
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut ins: Option<Vec<(usize, usize)>> = None;
        let mut outs: Option<Vec<(usize, usize)>> = None;
        let syntax = |s: &str| DagError::Syntax(s.to_string());
        for stmt in &stmts {
            if let Some((lhs, rhs)) = stmt.split_once("->").filter(|(l, _)| l.contains('.')) {
                edges.push((lhs.trim().to_string(), rhs.trim().to_string()));
                continue;
            }
            let (head, body) = stmt.split_once(':').ok_or_else(|| syntax(stmt))?;
            let head = head.trim();
            let body = body.trim();
            match head {
                "in" | "out" => {
                    let list = body.split(',').map(|p| p.trim().to_string()).collect::<Vec<_>>();
                    let slot = if head == "in" { &mut ins } else { &mut outs };
                    let kind = if head == "in" { "in" } else { "out" };
                    let mut ports = Vec::new();
                    for p in list {
                        ports.push(port_ref(&p, kind, &names)?);
                    }
                    *slot = Some(ports);
                }
                name => {
                    if names.iter().any(|n| n == name) || name.is_empty() || name.contains('.') {
                        return Err(syntax(stmt));
                    }
                    let open = body.find('(').ok_or_else(|| syntax(stmt))?;
                    let label = body[..open].trim();
                    let arity = body[open + 1..].strip_suffix(')').ok_or_else(|| syntax(stmt))?;
                    let (a, b) = arity.split_once("->").ok_or_else(|| syntax(stmt))?;
                    let inputs: usize = a.trim().parse().map_err(|_| syntax(stmt))?;
                    let outputs: usize = b.trim().parse().map_err(|_| syntax(stmt))?;
                    let mut chars = label.chars();
                    let label = match (chars.next(), chars.next()) {
                        (Some(ch), None) if Label::from_symbol(ch).is_some() => {
                            VertexLabel::Elementary(Label::from_symbol(ch).expect("checked"))
                        }
                        (Some(ch), _) if ch.is_ascii_uppercase() && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                            VertexLabel::Macro(label.to_string())
                        }
                        _ => return Err(syntax(stmt)),
                    };
                    names.push(name.to_string());
                    vertices.push(Vertex { label, inputs, outputs });
                }
            }
        }
        let mut wires = Vec::new();
        for (from, to) in edges {
            wires.push((port_ref(&from, "out", &names)?, port_ref(&to, "in", &names)?));
        }
        let port_name = |v: usize, kind: &str, p: usize| format!("{}.{kind}{}", names[v], p + 1);
        FlowDag::from_wires(vertices, wires, ins, outs, &port_name)
    }

    fn from_wires(
        vertices: Vec<Vertex>,
        wires: Vec<((usize, usize), (usize, usize))>,
        ins: Option<Vec<(usize, usize)>>,
        outs: Option<Vec<(usize, usize)>>,
        port_name: &dyn Fn(usize, &str, usize) -> String,
    ) -> Result<FlowDag, DagError> {
        let mut sources: Vec<Vec<Option<Source>>> = vertices.iter().map(|v| vec![None; v.inputs]).collect();
        let mut out_used: Vec<Vec<bool>> = vertices.iter().map(|v| vec![false; v.outputs]).collect();
        let check = |v: usize, p: usize, inputs: bool| -> Result<(), DagError> {
            let limit = if inputs { vertices[v].inputs } else { vertices[v].outputs };
            if p < limit {
                Ok(())
            } else {
                Err(DagError::PortRange(port_name(v, if inputs { "in" } else { "out" }, p)))
            }
        };
        for ((u, q), (v, p)) in wires {
            check(u, q, false)?;
            check(v, p, true)?;
            if sources[v][p].is_some() {
                return Err(DagError::PortReused(port_name(v, "in", p)));
            }
            if std::mem::replace(&mut out_used[u][q], true) {
                return Err(DagError::PortReused(port_name(u, "out", q)));
            }
            sources[v][p] = Some(Source::Port(u, q));
        }
        let ins = match ins {
            Some(list) => list,
            None => sources
                .iter()
                .enumerate()
                .flat_map(|(v, ss)| ss.iter().enumerate().filter(|(_, s)| s.is_none()).map(move |(p, _)| (v, p)))
                .collect(),
        };
        let outs = match outs {
            Some(list) => list,
            None => out_used
                .iter()
                .enumerate()
                .flat_map(|(v, us)| us.iter().enumerate().filter(|(_, u)| !**u).map(move |(q, _)| (v, q)))
                .collect(),
        };
        for (i, &(v, p)) in ins.iter().enumerate() {
            check(v, p, true)?;
            if sources[v][p].is_some() {
                return Err(DagError::PortReused(port_name(v, "in", p)));
            }
            sources[v][p] = Some(Source::Input(i));
        }
        let mut outputs = Vec::with_capacity(outs.len());
        for &(v, q) in &outs {
            check(v, q, false)?;
            if std::mem::replace(&mut out_used[v][q], true) {
                return Err(DagError::PortReused(port_name(v, "out", q)));
            }
            outputs.push(Source::Port(v, q));
        }
        for (v, us) in out_used.iter().enumerate() {
            if let Some(q) = us.iter().position(|u| !u) {
                return Err(DagError::DanglingOutput(port_name(v, "out", q)));
            }
        }
        let mut full = Vec::with_capacity(sources.len());
        for (v, ss) in sources.into_iter().enumerate() {
            let mut row = Vec::with_capacity(ss.len());
            for (p, s) in ss.into_iter().enumerate() {
                row.push(s.ok_or_else(|| DagError::MissingSource(port_name(v, "in", p)))?);
            }
            full.push(row);
        }
        FlowDag::new(ins.len(), vertices, full, outputs)
    }

    /// JSON mirror of the DSL with zero-based indices:
    /// `{"vertices":[{"label","in","out"}], "edges":[[u,q,v,p]], "inputs":[[v,p]], "outputs":[[v,q]]}`.
    /// A dag without vertices is the bare edge.
    pub fn to_json(&self) -> Value {
        let mut edges = Vec::new();
        let mut inputs = vec![Value::Null; self.n_inputs];
        for (v, ss) in self.sources.iter().enumerate() {
            for (p, s) in ss.iter().enumerate() {
                match *s {
                    Source::Input(i) => inputs[i] = json!([v, p]),
                    Source::Port(u, q) => edges.push(json!([u, q, v, p])),
                }
            }
        }
        let outputs: Vec<Value> = self
            .outputs
            .iter()
            .map(|s| match *s {
                Source::Port(v, q) => json!([v, q]),
                Source::Input(_) => Value::Null,
            })
            .collect();
        if self.is_edge() {
            return json!({"vertices": [], "edges": [], "inputs": [], "outputs": []});
        }
        json!({
            "vertices": self.vertices.iter().map(|v| json!({"label": v.label.to_string(), "in": v.inputs, "out": v.outputs})).collect::<Vec<_>>(),
            "edges": edges,
            "inputs": inputs,
            "outputs": outputs,
        })
    }

    pub fn from_json(value: &Value) -> Result<FlowDag, DagError> {
        let bad = |what: &str| DagError::Syntax(format!("json: {what}"));
        let list = |key: &str| value.get(key).and_then(Value::as_array).ok_or_else(|| bad(key));
        let idx = |v: &Value| v.as_u64().map(|x| x as usize).ok_or_else(|| bad("index"));
        let pair = |v: &Value| -> Result<(usize, usize), DagError> {
            let a = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("port pair"))?;
            Ok((idx(&a[0])?, idx(&a[1])?))
        };
        let raw_vertices = list("vertices")?;
        if raw_vertices.is_empty() {
            return Ok(FlowDag::edge());
        }
        let mut vertices = Vec::new();
        for v in raw_vertices {
            let label = v.get("label").and_then(Value::as_str).ok_or_else(|| bad("label"))?;
            let inputs = idx(v.get("in").ok_or_else(|| bad("in"))?)?;
            let outputs = idx(v.get("out").ok_or_else(|| bad("out"))?)?;
            let vl = match label.chars().next().and_then(Label::from_symbol) {
                Some(l) if label.len() == 1 => VertexLabel::Elementary(l),
                _ => VertexLabel::Macro(label.to_string()),
            };
            vertices.push(Vertex { label: vl, inputs, outputs });
        }
        let n = vertices.len();
        let in_range = |v: usize| if v < n { Ok(v) } else { Err(DagError::UnknownVertex(format!("#{v}"))) };
        let mut wires = Vec::new();
        for e in list("edges")? {
            let a = e.as_array().filter(|a| a.len() == 4).ok_or_else(|| bad("edge"))?;
            let (u, q, v, p) = (idx(&a[0])?, idx(&a[1])?, idx(&a[2])?, idx(&a[3])?);
            wires.push(((in_range(u)?, q), (in_range(v)?, p)));
        }
        let mut ins = Vec::new();
        for p in list("inputs")? {
            let (v, p) = pair(p)?;
            ins.push((in_range(v)?, p));
        }
        let mut outs = Vec::new();
        for p in list("outputs")? {
            let (v, q) = pair(p)?;
            outs.push((in_range(v)?, q));
        }
        let port_name = |v: usize, kind: &str, p: usize| format!("v{}.{kind}{}", v + 1, p + 1);
        FlowDag::from_wires(vertices, wires, Some(ins), Some(outs), &port_name)
    }
}

fn port_ref(s: &str, kind: &str, names: &[String]) -> Result<(usize, usize), DagError> {
    let (name, port) = s.split_once('.').ok_or_else(|| DagError::Syntax(s.to_string()))?;
    let v = names.iter().position(|n| n == name.trim()).ok_or_else(|| DagError::UnknownVertex(name.trim().to_string()))?;
    let num = port.trim().strip_prefix(kind).ok_or_else(|| DagError::Syntax(s.to_string()))?;
    let p: usize = num.parse().map_err(|_| DagError::Syntax(s.to_string()))?;
    if p == 0 {
        return Err(DagError::PortRange(s.to_string()));
    }
    Ok((v, p - 1))
}

impl fmt::Display for FlowDag {
    /// Canonical DSL with explicit flag orders; `FlowDag::parse` reads it back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_edge() {
            return write!(f, "edge");
        }
        let mut parts = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            parts.push(format!("v{}: {}({}->{})", i + 1, v.label, v.inputs, v.outputs));
        }
        let mut ins = vec![String::new(); self.n_inputs];
        for (v, ss) in self.sources.iter().enumerate() {
            for (p, s) in ss.iter().enumerate() {
                match *s {
                    Source::Port(u, q) => parts.push(format!("v{}.out{} -> v{}.in{}", u + 1, q + 1, v + 1, p + 1)),
                    Source::Input(i) => ins[i] = format!("v{}.in{}", v + 1, p + 1),
                }
            }
        }
        parts.push(format!("in: {}", ins.join(", ")));
        let outs: Vec<String> = self
            .outputs
            .iter()
            .map(|s| match *s {
                Source::Port(v, q) => format!("v{}.out{}", v + 1, q + 1),
                Source::Input(i) => format!("in{}", i + 1),
            })
            .collect();
        parts.push(format!("out: {}", outs.join(", ")));
        write!(f, "{}", parts.join("; "))
    }
}

/// A linear combination of dags with a common bi-arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProperadElement {
    arity: (usize, usize),
    terms: LinComb<FlowDag>,
}

impl ProperadElement {
    pub fn zero(m: usize, n: usize) -> Self {
        ProperadElement { arity: (m, n), terms: LinComb::zero() }
    }

    pub fn edge() -> Self {
        ProperadElement::basis(FlowDag::edge())
    }

    pub fn basis(d: FlowDag) -> Self {
        ProperadElement { arity: d.bi_arity(), terms: LinComb::basis(d) }
    }

    pub fn bi_arity(&self) -> (usize, usize) {
        self.arity
    }

    pub fn terms(&self) -> &LinComb<FlowDag> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_zero()
    }

    pub fn coef(&self, d: &FlowDag) -> Q {
        self.terms.coef(d)
    }

    pub fn scale(&self, c: &Q) -> Self {
        ProperadElement { arity: self.arity, terms: self.terms.scaled(c) }
    }

    pub fn add_term(&mut self, d: FlowDag, c: Q) {
        assert_eq!(d.bi_arity(), self.arity, "bi-arity mismatch");
        self.terms.add_term(d, c);
    }

    pub fn add_scaled(&mut self, other: &ProperadElement, c: &Q) {
        assert_eq!(self.arity, other.arity, "bi-arity mismatch");
        self.terms.add_scaled(&other.terms, c);
    }

    /// Keeps dags with at most `max_vertices` vertices.
    pub fn truncate(&self, max_vertices: usize) -> Self {
        ProperadElement { arity: self.arity, terms: self.terms.filtered(|d| d.vertex_count() <= max_vertices) }
    }

    /// Multilinear composition; disconnected composites contribute zero.
    pub fn compose(&self, gs: &[&ProperadElement]) -> Result<ProperadElement, ProperadError> {
        let got: usize = gs.iter().map(|g| g.arity.1).sum();
        if got != self.arity.0 {
            return Err(ProperadError::ArityMismatch { expected: self.arity.0, got });
        }
        let m = gs.iter().map(|g| g.arity.0).sum();
        let mut out = ProperadElement::zero(m, self.arity.1);
        let mut picked = Vec::with_capacity(gs.len());
        compose_rec(gs, &mut picked, &Q::one(), &mut |dags, c| {
            for (f, fc) in &self.terms {
                if let Some(d) = f.compose(dags)? {
                    out.terms.add_term(d, c * fc);
                }
            }
            Ok(())
        })?;
        Ok(out)
    }
}

/// Receives one choice of basis dag per input slot with the product of their coefficients.
type EmitRef<'e> = dyn FnMut(&[&FlowDag], &Q) -> Result<(), ProperadError> + 'e;
type Emit<'e> = dyn FnMut(&[&FlowDag], Q) -> Result<(), ProperadError> + 'e;

fn compose_rec<'a>(
    gs: &[&'a ProperadElement],
    picked: &mut Vec<&'a FlowDag>,
    coef: &Q,
    emit: &mut EmitRef,
) -> Result<(), ProperadError> {
    let Some((g, rest)) = gs.split_first() else { return emit(picked, coef) };
    for (d, c) in &g.terms {
        picked.push(d);
        compose_rec(rest, picked, &(coef * c), emit)?;
        picked.pop();
    }
    Ok(())
}

impl fmt::Display for ProperadElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_zero() {
            return write!(f, "0");
        }
        for (i, (d, c)) in self.terms.iter().enumerate() {
            let neg = is_negative(c);
            let abs = if neg { -c.clone() } else { c.clone() };
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if !abs.is_one() {
                write!(f, "{} ", format_q(&abs))?;
            }
            write!(f, "[{d}]")?;
        }
        Ok(())
    }
}

/// `Λₙ(a,β)` on `⊕_{k=1}^n P(n,k)`: `(Λv)_i = Σ_j a_j β_{j,i} ∘ v_j`.
pub struct LambdaMatrix<'a> {
    pub n: usize,
    pub series: &'a FormalSeries,
    pub beta: &'a BTreeMap<(usize, usize), ProperadElement>,
}

impl LambdaMatrix<'_> {
    /// `v[k-1]` is the `P(n,k)` summand.
    pub fn apply(&self, v: &[ProperadElement]) -> Result<Vec<ProperadElement>, ProperadError> {
        let mut out: Vec<ProperadElement> = (1..=self.n).map(|i| ProperadElement::zero(self.n, i)).collect();
        for (j, vj) in v.iter().enumerate().take(self.n) {
            let j = j + 1;
            let a = self.series.coeff(j);
            if a.is_zero() || vj.is_zero() {
                continue;
            }
            for i in 1..=self.n {
                if let Some(b) = self.beta.get(&(j, i)) {
                    out[i - 1].add_scaled(&b.compose(&[vj])?, &a);
                }
            }
        }
        Ok(out)
    }
}

/// Solution components keyed by bi-arity, each truncated to `vertex_cutoff` vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ProperadSolution {
    pub vertex_cutoff: usize,
    pub components: BTreeMap<(usize, usize), ProperadElement>,
}

impl ProperadSolution {
    pub fn component(&self, m: usize, n: usize) -> ProperadElement {
        self.components.get(&(m, n)).cloned().unwrap_or_else(|| ProperadElement::zero(m, n))
    }
}

/// `X = β(P(X))` with `β_{m,n} ∈ P(m,n)`. The `(m,n)` component of the right side is
/// the unit edge in `(1,1)` plus `Σ_k a_k Σ β_{ℓ,n} ∘ (x_{j₁,i₁} ⊗ ⋯ ⊗ x_{j_k,i_k})` over
/// `j₁+⋯+j_k = m`, `i₁+⋯+i_k = ℓ`.
#[derive(Clone, Debug)]
pub struct ProperadDse {
    pub series: FormalSeries,
    pub beta: BTreeMap<(usize, usize), ProperadElement>,
}

struct Basis<'a> {
    dag: &'a FlowDag,
    coef: &'a Q,
}

impl ProperadDse {
    /// Parses `m,n:dag` entries separated by `|`, where `dag` is a scalar (only for
    /// `(1,1)`, a multiple of the edge), a bare label (a single vertex of that bi-arity), or
    /// the dag DSL. Entries for the same bi-arity add up.
    pub fn parse_beta(s: &str) -> Result<BTreeMap<(usize, usize), ProperadElement>, ProperadError> {
        let bad = || ProperadError::BetaSyntax(s.to_string());
        let mut beta: BTreeMap<(usize, usize), ProperadElement> = BTreeMap::new();
        for part in s.split('|').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, spec) = part.split_once(':').ok_or_else(bad)?;
            let (m, n) = key.split_once(',').ok_or_else(bad)?;
            let m: usize = m.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            let spec = spec.trim();
            let el = if let Some(c) = crate::scalar::parse_q(spec) {
                if (m, n) != (1, 1) {
                    return Err(bad());
                }
                ProperadElement::edge().scale(&c)
            } else if spec.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                let label = match (spec.len(), spec.chars().next().and_then(Label::from_symbol)) {
                    (1, Some(l)) => VertexLabel::Elementary(l),
                    _ => VertexLabel::Macro(spec.to_string()),
                };
                ProperadElement::basis(FlowDag::vertex(label, m, n)?)
            } else {
                ProperadElement::basis(FlowDag::parse(spec)?)
            };
            let (fm, fn_) = el.bi_arity();
            if (fm, fn_) != (m, n) {
                return Err(ProperadError::BetaArity { m, n, found_m: fm, found_n: fn_ });
            }
            beta.entry((m, n)).or_insert_with(|| ProperadElement::zero(m, n)).add_scaled(&el, &Q::one());
        }
        Ok(beta)
    }

    /// The scalar λ with `β_{1,1} = λ·edge + (terms with vertices)`.
    pub fn lambda(&self) -> Q {
        self.beta.get(&(1, 1)).map(|b| b.coef(&FlowDag::edge())).unwrap_or_else(Q::zero)
    }

    fn max_beta_inputs(&self) -> usize {
        self.beta.keys().map(|k| k.0).max().unwrap_or(0)
    }

    /// Right side without the unit edge. When `skip_scalar` is set, the `λ·edge` part of
    /// `β_{1,1}` is left out.
    fn rhs(&self, x: &BTreeMap<(usize, usize), ProperadElement>, cutoff: usize, skip_scalar: bool) -> Result<BTreeMap<(usize, usize), ProperadElement>, ProperadError> {
        let basis: Vec<Basis> = x.values().flat_map(|e| e.terms.iter().map(|(dag, coef)| Basis { dag, coef })).collect();
        let mut out: BTreeMap<(usize, usize), ProperadElement> = BTreeMap::new();
        let edge = FlowDag::edge();
        for k in 1..=self.max_beta_inputs() {
            let a = self.series.coeff(k);
            if a.is_zero() {
                continue;
            }
            for (&(l, n), b) in &self.beta {
                if l < k {
                    continue;
                }
                for (bd, bc) in &b.terms {
                    if skip_scalar && *bd == edge {
                        continue;
                    }
                    let Some(budget) = cutoff.checked_sub(bd.vertex_count()) else { continue };
                    let scale = &a * bc;
                    let mut picked = Vec::with_capacity(k);
                    tuples(&basis, k, l, budget, &mut picked, &mut |args, c| {
                        if let Some(d) = bd.compose(args)? {
                            let m = d.inputs();
                            out.entry((m, n)).or_insert_with(|| ProperadElement::zero(m, n)).add_term(d, c * &scale);
                        }
                        Ok(())
                    })?;
                }
            }
        }
        out.retain(|_, e| !e.is_zero());
        Ok(out)
    }

    /// Solves through `vertex_cutoff` by graded Neumann iteration. The scalar part `λ` of
    /// `β_{1,1}` is inverted exactly as `(1 − a₁λ)⁻¹` on the `(m,1)` components; every
    /// other term of β adds at least one vertex, so each pass fixes one more vertex degree.
    pub fn solve(&self, vertex_cutoff: usize) -> Result<ProperadSolution, ProperadError> {
        let d = Q::one() - self.series.coeff(1) * self.lambda();
        if d.is_zero() {
            return Err(ProperadError::NonInvertible);
        }
        let inv = Q::one() / d;
        let mut x: BTreeMap<(usize, usize), ProperadElement> = BTreeMap::new();
        for _ in 0..=vertex_cutoff + 1 {
            let mut next = self.rhs(&x, vertex_cutoff, true)?;
            next.entry((1, 1)).or_insert_with(|| ProperadElement::zero(1, 1)).add_term(FlowDag::edge(), Q::one());
            for ((_, n), e) in next.iter_mut() {
                if *n == 1 {
                    *e = e.scale(&inv);
                }
            }
            next.retain(|_, e| !e.is_zero());
            if next == x {
                break;
            }
            x = next;
        }
        Ok(ProperadSolution { vertex_cutoff, components: x })
    }

    /// Substitutes the solution into the equation; returns the first bi-arity whose
    /// components differ up to the vertex cutoff.
    pub fn verify(&self, sol: &ProperadSolution) -> Result<Option<(usize, usize)>, ProperadError> {
        let cutoff = sol.vertex_cutoff;
        let mut rhs = self.rhs(&sol.components, cutoff, false)?;
        rhs.entry((1, 1)).or_insert_with(|| ProperadElement::zero(1, 1)).add_term(FlowDag::edge(), self.series.coeff(0));
        rhs.retain(|_, e| !e.is_zero());
        let keys: std::collections::BTreeSet<_> = rhs.keys().chain(sol.components.keys()).copied().collect();
        for key in keys {
            let l = rhs.get(&key).map(|e| e.truncate(cutoff));
            let r = sol.components.get(&key).map(|e| e.truncate(cutoff));
            let same = match (&l, &r) {
                (Some(l), Some(r)) => l == r,
                (Some(e), None) | (None, Some(e)) => e.is_zero(),
                (None, None) => true,
            };
            if !same {
                return Ok(Some(key));
            }
        }
        Ok(None)
    }
}

/// Enumerates ordered `k`-tuples of basis dags whose outputs sum to `outputs` and whose
/// vertex counts sum to at most `budget`.
fn tuples<'a>(
    basis: &[Basis<'a>],
    k: usize,
    outputs: usize,
    budget: usize,
    picked: &mut Vec<&'a FlowDag>,
    emit: &mut Emit,
) -> Result<(), ProperadError> {
    fn go<'a>(
        basis: &[Basis<'a>],
        k: usize,
        outputs: usize,
        budget: usize,
        picked: &mut Vec<&'a FlowDag>,
        coef: Q,
        emit: &mut Emit,
    ) -> Result<(), ProperadError> {
        if k == 0 {
            return if outputs == 0 { emit(picked, coef) } else { Ok(()) };
        }
        for b in basis {
            let o = b.dag.outputs();
            let v = b.dag.vertex_count();
            // Each remaining slot needs at least one output.
            if o + (k - 1) > outputs || v > budget {
                continue;
            }
            picked.push(b.dag);
            go(basis, k - 1, outputs - o, budget - v, picked, &coef * b.coef, emit)?;
            picked.pop();
        }
        Ok(())
    }
    go(basis, k, outputs, budget, picked, Q::one(), emit)
}

/// Spanning set of the sub-properad in bi-arity `(m,n)`: all
/// `x_{k,n} ∘ (x_{j₁,i₁} ⊗ ⋯ ⊗ x_{j_ℓ,i_ℓ})` with `Σ j = m`, `Σ i = k`, truncated to the
/// solution's vertex cutoff. Zero composites are dropped.
pub fn subproperad_span(sol: &ProperadSolution, m: usize, n: usize) -> Result<Vec<ProperadElement>, ProperadError> {
    let mut out = Vec::new();
    let comps: Vec<(&(usize, usize), &ProperadElement)> = sol.components.iter().collect();
    for (&(k, n2), head) in &comps {
        if n2 != n {
            continue;
        }
        for l in 1..=k {
            let mut stack = Vec::new();
            arg_tuples(&comps, l, m, k, &mut stack, &mut |args| {
                let c = head.compose(args)?.truncate(sol.vertex_cutoff);
                if !c.is_zero() {
                    out.push(c);
                }
                Ok(())
            })?;
        }
    }
    Ok(out)
}

fn arg_tuples<'a>(
    comps: &[(&(usize, usize), &'a ProperadElement)],
    slots: usize,
    inputs: usize,
    outputs: usize,
    stack: &mut Vec<&'a ProperadElement>,
    emit: &mut dyn FnMut(&[&ProperadElement]) -> Result<(), ProperadError>,
) -> Result<(), ProperadError> {
    if slots == 0 {
        return if inputs == 0 && outputs == 0 { emit(stack) } else { Ok(()) };
    }
    for &(&(j, i), e) in comps {
        if j + (slots - 1) > inputs || i + (slots - 1) > outputs {
            continue;
        }
        stack.push(e);
        arg_tuples(comps, slots - 1, inputs - j, outputs - i, stack, emit)?;
        stack.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, q_frac};

    fn dag(s: &str) -> FlowDag {
        FlowDag::parse(s).unwrap()
    }

    #[test]
    fn canonical_form_ignores_declaration_order() {
        let a = dag("x: b(2->1); y: c(2->1); y.out1 -> x.in1; in: y.in1, y.in2, x.in2");
        let b = dag("y: c(2->1); x: b(2->1); y.out1 -> x.in1");
        assert_eq!(a, b);
        assert_eq!(a.bi_arity(), (3, 1));
        assert_eq!(FlowDag::parse(&a.to_string()).unwrap(), a);
        assert_eq!(FlowDag::from_json(&a.to_json()).unwrap(), a);
        let swapped = dag("x: b(2->1); y: c(2->1); y.out1 -> x.in1; in: y.in2, y.in1, x.in2");
        assert_ne!(a, swapped);
    }

    #[test]
    fn invalid_dags_are_rejected() {
        assert_eq!(FlowDag::parse("x: b(1->1); y: c(1->1)"), Err(DagError::Disconnected));
        assert!(matches!(FlowDag::parse("x: b(1->2)"), Err(DagError::ElementaryOutputs(_))));
        assert!(matches!(
            FlowDag::parse("x: M(2->2); y: N(1->1); x.out1 -> y.in1; y.out1 -> x.in1"),
            Err(DagError::Cyclic)
        ));
        assert!(matches!(FlowDag::parse("x: b(1->1); x.out2 -> x.in1"), Err(DagError::PortRange(_))));
    }

    #[test]
    fn units_and_tree_composition() {
        let b2 = ProperadElement::basis(dag("v: b(2->1)"));
        let c2 = ProperadElement::basis(dag("v: c(2->1)"));
        let e = ProperadElement::edge();
        assert_eq!(e.compose(&[&c2]).unwrap(), c2);
        assert_eq!(b2.compose(&[&e, &e]).unwrap(), b2);
        let g = b2.compose(&[&c2, &e]).unwrap();
        let expected = FlowDag::from_op_tree(&OpTree::from_tree(&crate::parse::parse_tree("b(c(_,_),_)").unwrap()).unwrap());
        assert_eq!(g, ProperadElement::basis(expected));
        assert!(matches!(b2.compose(&[&e]), Err(ProperadError::ArityMismatch { .. })));
    }

    #[test]
    fn composites_through_macros() {
        let m = ProperadElement::basis(dag("v: M(2->2)"));
        let e = ProperadElement::edge();
        assert_eq!(m.compose(&[&e, &e]).unwrap(), m);
        let split = ProperadElement::basis(dag("u: N(1->2)"));
        let joined = m.compose(&[&split]).unwrap();
        assert_eq!(joined.bi_arity(), (1, 2));
        let expected = dag("u: N(1->2); v: M(2->2); u.out1 -> v.in1; u.out2 -> v.in2");
        assert_eq!(joined, ProperadElement::basis(expected));
    }

    #[test]
    fn lambda_examples() {
        let beta = ProperadDse::parse_beta("1,1:b").unwrap();
        let series = FormalSeries::parse("1,1").unwrap();
        let lm = LambdaMatrix { n: 1, series: &series, beta: &beta };
        let v = vec![ProperadElement::edge()];
        assert_eq!(lm.apply(&v).unwrap()[0], beta[&(1, 1)]);
        let empty = BTreeMap::new();
        let lm = LambdaMatrix { n: 1, series: &series, beta: &empty };
        assert!(lm.apply(&v).unwrap()[0].is_zero());
    }

    #[test]
    fn scalar_case_inverts_exactly() {
        let dse = ProperadDse { series: FormalSeries::parse("1,1/3").unwrap(), beta: ProperadDse::parse_beta("1,1:3/2").unwrap() };
        let sol = dse.solve(3).unwrap();
        assert_eq!(sol.components.len(), 1);
        assert_eq!(sol.component(1, 1), ProperadElement::edge().scale(&q(2)));
        assert_eq!(dse.verify(&sol).unwrap(), None);
        let dse = ProperadDse { series: FormalSeries::parse("1,1").unwrap(), beta: ProperadDse::parse_beta("1,1:1").unwrap() };
        assert_eq!(dse.solve(3), Err(ProperadError::NonInvertible));
    }

    #[test]
    fn diagonal_example_solves() {
        let dse = ProperadDse {
            series: FormalSeries::parse("1,1/2,1/2").unwrap(),
            beta: ProperadDse::parse_beta("1,1:b | 2,2:M").unwrap(),
        };
        let sol = dse.solve(4).unwrap();
        assert_eq!(dse.verify(&sol).unwrap(), None);
        // x_{1,1} is the chain of unary b vertices with weights 2^-j.
        let chain2 = dag("u: b(1->1); v: b(1->1); u.out1 -> v.in1");
        assert_eq!(sol.component(1, 1).coef(&chain2), q_frac(1, 4));
        assert!(!sol.component(2, 2).is_zero());
        let span = subproperad_span(&sol, 1, 1).unwrap();
        assert!(!span.is_empty());
    }
}
