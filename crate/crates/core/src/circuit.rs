//! Boolean circuits and message-passing circuits.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::eval::Trace;
use crate::model::{KripkeModel, PropositionSet};
use crate::syntax::Schema;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("expected {expected} input bits, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("formula contains a diamond")]
    UnexpectedDiamond,
    #[error("formula mentions `{0}`, which is not an input label")]
    UnknownLabel(String),
    #[error("circuits have {0} and {1} outputs")]
    OutputArityMismatch(usize, usize),
    #[error("netlist line {0}: {1}")]
    Netlist(usize, String),
    #[error("invalid message-passing circuit: {0}")]
    InvalidMpc(String),
    #[error("model is unsuitable: {0}")]
    UnsuitableModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Input,
    And,
    Or,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub fanin: Vec<usize>,
}

/// A gate DAG kept in topological order: every fan-in index is smaller
/// than the gate's own index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Circuit {
    gates: Vec<Gate>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, kind: GateKind, fanin: Vec<usize>) -> usize {
        let id = self.gates.len();
        assert!(fanin.iter().all(|&f| f < id), "fan-in must reference earlier gates");
        self.gates.push(Gate { kind, fanin });
        id
    }

    pub fn input(&mut self) -> usize {
        let g = self.push(GateKind::Input, vec![]);
        self.inputs.push(g);
        g
    }

    pub fn and(&mut self, fanin: Vec<usize>) -> usize {
        self.push(GateKind::And, fanin)
    }

    pub fn or(&mut self, fanin: Vec<usize>) -> usize {
        self.push(GateKind::Or, fanin)
    }

    pub fn not(&mut self, x: usize) -> usize {
        self.push(GateKind::Not, vec![x])
    }

    /// Fan-in-one AND, used to delay a signal by one level.
    pub fn identity(&mut self, x: usize) -> usize {
        self.push(GateKind::And, vec![x])
    }

    pub fn constant(&mut self, value: bool) -> usize {
        if value {
            self.and(vec![])
        } else {
            self.or(vec![])
        }
    }

    pub fn set_outputs(&mut self, outputs: Vec<usize>) {
        assert!(outputs.iter().all(|&o| o < self.gates.len()));
        self.outputs = outputs;
    }

    pub fn set_inputs_order(&mut self, inputs: Vec<usize>) {
        let mut a = inputs.clone();
        let mut b = self.inputs.clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b, "input reordering must be a permutation");
        self.inputs = inputs;
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn max_fanin(&self) -> usize {
        self.gates.iter().map(|g| g.fanin.len()).max().unwrap_or(0)
    }

    /// Values of every gate.
    pub fn eval_all(&self, input: &[bool]) -> Result<Vec<bool>, CircuitError> {
        if input.len() != self.inputs.len() {
            return Err(CircuitError::ArityMismatch { expected: self.inputs.len(), got: input.len() });
        }
        let mut val = vec![false; self.gates.len()];
        for (&g, &b) in self.inputs.iter().zip(input) {
            val[g] = b;
        }
        for (i, g) in self.gates.iter().enumerate() {
            val[i] = match g.kind {
                GateKind::Input => val[i],
                GateKind::And => g.fanin.iter().all(|&f| val[f]),
                GateKind::Or => g.fanin.iter().any(|&f| val[f]),
                GateKind::Not => !val[g.fanin[0]],
            };
        }
        Ok(val)
    }

    pub fn eval(&self, input: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let val = self.eval_all(input)?;
        Ok(self.outputs.iter().map(|&o| val[o]).collect())
    }

    /// Longest path (in edges) from an input gate (or a constant) to each gate.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            h[i] = g.fanin.iter().map(|&f| h[f] + 1).max().unwrap_or(0);
        }
        h
    }

    /// Maximum height over output gates.
    pub fn depth(&self) -> usize {
        let h = self.heights();
        self.outputs.iter().map(|&o| h[o]).max().unwrap_or(0)
    }

    /// Appends a copy of `other`; its inputs are mapped onto `inputs` of `self`.
    /// Returns the images of `other`'s outputs.
    pub fn embed(&mut self, other: &Circuit, inputs: &[usize]) -> Vec<usize> {
        let map = self.embed_map(other, inputs);
        other.outputs.iter().map(|&o| map[o]).collect()
    }

    /// Like `embed`, but returns the image of every gate of `other`.
    pub fn embed_map(&mut self, other: &Circuit, inputs: &[usize]) -> Vec<usize> {
        assert_eq!(inputs.len(), other.inputs.len());
        let mut map = vec![usize::MAX; other.gates.len()];
        for (&g, &to) in other.inputs.iter().zip(inputs) {
            map[g] = to;
        }
        for (i, g) in other.gates.iter().enumerate() {
            if g.kind == GateKind::Input {
                assert!(map[i] != usize::MAX, "every input gate of an embedded circuit is listed");
                continue;
            }
            let fanin = g.fanin.iter().map(|&f| map[f]).collect();
            map[i] = self.push(g.kind, fanin);
        }
        map
    }

    /// Drops gates that no output depends on; every input gate stays.
    pub fn pruned(&self) -> Circuit {
        let mut live = vec![false; self.gates.len()];
        for &o in &self.outputs {
            live[o] = true;
        }
        for i in (0..self.gates.len()).rev() {
            if live[i] {
                for &f in &self.gates[i].fanin {
                    live[f] = true;
                }
            }
        }
        let mut out = Circuit::new();
        let mut map = vec![usize::MAX; self.gates.len()];
        for &g in &self.inputs {
            map[g] = out.input();
        }
        for (i, g) in self.gates.iter().enumerate() {
            if live[i] && g.kind != GateKind::Input {
                let fanin = g.fanin.iter().map(|&f| map[f]).collect();
                map[i] = out.push(g.kind, fanin);
            }
        }
        out.outputs = self.outputs.iter().map(|&o| map[o]).collect();
        out
    }

    /// Replaces every AND/OR with fan-in above `max` by a balanced tree.
    pub fn split_fanin(&self, max: usize) -> Circuit {
        assert!(max >= 2);
        let mut out = Circuit::new();
        let mut map = vec![0; self.gates.len()];
        let mut input_map = HashMap::new();
        for (i, g) in self.gates.iter().enumerate() {
            map[i] = match g.kind {
                GateKind::Input => {
                    let id = out.push(GateKind::Input, vec![]);
                    input_map.insert(i, id);
                    id
                }
                GateKind::Not => out.not(map[g.fanin[0]]),
                kind => {
                    let mut layer: Vec<usize> = g.fanin.iter().map(|&f| map[f]).collect();
                    while layer.len() > max {
                        layer = layer.chunks(max).map(|c| if c.len() == 1 { c[0] } else { out.push(kind, c.to_vec()) }).collect();
                    }
                    out.push(kind, layer)
                }
            };
        }
        out.inputs = self.inputs.iter().map(|i| input_map[i]).collect();
        out.outputs = self.outputs.iter().map(|&o| map[o]).collect();
        out
    }

    pub fn to_netlist(&self) -> String {
        let mut s = String::new();
        let names = |v: &[usize]| v.iter().map(|g| format!("g{g}")).collect::<Vec<_>>().join(", ");
        writeln!(s, "inputs: {}", names(&self.inputs)).unwrap();
        writeln!(s, "outputs: {}", names(&self.outputs)).unwrap();
        for (i, g) in self.gates.iter().enumerate() {
            let args = names(&g.fanin).replace(' ', "");
            let rhs = match g.kind {
                GateKind::Input => "INPUT".to_string(),
                GateKind::And => format!("AND({args})"),
                GateKind::Or => format!("OR({args})"),
                GateKind::Not => format!("NOT({args})"),
            };
            writeln!(s, "g{i} = {rhs}").unwrap();
        }
        s
    }

    /// Parses gate lines and `inputs:`/`outputs:` lines; other `key:` lines go to `headers`.
    pub fn parse_netlist(text: &str) -> Result<(Circuit, Vec<(String, String)>), CircuitError> {
        let mut defs: Vec<(String, GateKind, Vec<String>, usize)> = vec![];
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut inputs = None;
        let mut outputs = None;
        let mut headers = vec![];
        for (ln, raw) in text.lines().enumerate() {
            let ln = ln + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some((name, rhs)) = line.split_once('=') {
                let name = name.trim().to_string();
                let rhs = rhs.trim();
                let (kind, args) = if rhs == "INPUT" {
                    (GateKind::Input, vec![])
                } else {
                    let open = rhs.find('(').ok_or_else(|| CircuitError::Netlist(ln, "expected `(`".into()))?;
                    if !rhs.ends_with(')') {
                        return Err(CircuitError::Netlist(ln, "expected `)`".into()));
                    }
                    let kind = match &rhs[..open] {
                        "AND" => GateKind::And,
                        "OR" => GateKind::Or,
                        "NOT" => GateKind::Not,
                        other => return Err(CircuitError::Netlist(ln, format!("unknown gate `{other}`"))),
                    };
                    let inner = &rhs[open + 1..rhs.len() - 1];
                    let args: Vec<String> = inner.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
                    if kind == GateKind::Not && args.len() != 1 {
                        return Err(CircuitError::Netlist(ln, "NOT takes exactly one argument".into()));
                    }
                    (kind, args)
                };
                if index.insert(name.clone(), defs.len()).is_some() {
                    return Err(CircuitError::Netlist(ln, format!("gate `{name}` defined twice")));
                }
                defs.push((name, kind, args, ln));
            } else if let Some((key, rest)) = line.split_once(':') {
                let list = || rest.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect::<Vec<_>>();
                match key.trim() {
                    "inputs" => inputs = Some((list(), ln)),
                    "outputs" => outputs = Some((list(), ln)),
                    other => headers.push((other.to_string(), rest.trim().to_string())),
                }
            } else {
                return Err(CircuitError::Netlist(ln, "expected `name = GATE(...)` or `key: value`".into()));
            }
        }
        // topological numbering by depth-first search
        let mut order = vec![usize::MAX; defs.len()];
        let mut state = vec![0u8; defs.len()];
        let mut circuit = Circuit::new();
        fn visit(
            i: usize,
            defs: &[(String, GateKind, Vec<String>, usize)],
            index: &HashMap<String, usize>,
            state: &mut [u8],
            order: &mut [usize],
            c: &mut Circuit,
        ) -> Result<usize, CircuitError> {
            match state[i] {
                2 => return Ok(order[i]),
                1 => return Err(CircuitError::Netlist(defs[i].3, format!("cycle through `{}`", defs[i].0))),
                _ => {}
            }
            state[i] = 1;
            let mut fanin = vec![];
            for a in &defs[i].2 {
                let j = *index.get(a).ok_or_else(|| CircuitError::Netlist(defs[i].3, format!("unknown gate `{a}`")))?;
                fanin.push(visit(j, defs, index, state, order, c)?);
            }
            state[i] = 2;
            order[i] = c.push(defs[i].1, fanin);
            Ok(order[i])
        }
        for i in 0..defs.len() {
            visit(i, &defs, &index, &mut state, &mut order, &mut circuit)?;
        }
        let resolve = |names: &[String], ln: usize| -> Result<Vec<usize>, CircuitError> {
            names.iter().map(|n| index.get(n).map(|&i| order[i]).ok_or_else(|| CircuitError::Netlist(ln, format!("unknown gate `{n}`")))).collect()
        };
        let declared_inputs: Vec<usize> = defs.iter().enumerate().filter(|d| d.1 .1 == GateKind::Input).map(|(i, _)| order[i]).collect();
        circuit.inputs = match inputs {
            Some((names, ln)) => {
                let v = resolve(&names, ln)?;
                let mut a = v.clone();
                a.sort_unstable();
                let mut b = declared_inputs.clone();
                b.sort_unstable();
                if a != b {
                    return Err(CircuitError::Netlist(ln, "inputs must list every INPUT gate exactly once".into()));
                }
                v
            }
            None => declared_inputs,
        };
        circuit.outputs = match outputs {
            Some((names, ln)) => resolve(&names, ln)?,
            None => vec![],
        };
        Ok((circuit, headers))
    }
}

/// A circuit run at every node: inputs are the local propositions followed
/// by `delta + 1` blocks of `k` state bits (own block first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mpc {
    pub circuit: Circuit,
    pub props: PropositionSet,
    pub delta: usize,
    pub k: usize,
    /// 0-based attention positions within the state.
    pub attention: Vec<usize>,
    /// 0-based print positions within the state.
    pub print: Vec<usize>,
}

impl Mpc {
    pub fn new(
        circuit: Circuit,
        props: PropositionSet,
        delta: usize,
        k: usize,
        mut attention: Vec<usize>,
        mut print: Vec<usize>,
    ) -> Result<Mpc, CircuitError> {
        let want = props.len() + k * (delta + 1);
        if circuit.inputs().len() != want {
            return Err(CircuitError::InvalidMpc(format!("{} inputs, expected {want}", circuit.inputs().len())));
        }
        if circuit.outputs().len() != k {
            return Err(CircuitError::InvalidMpc(format!("{} outputs, expected {k}", circuit.outputs().len())));
        }
        attention.sort_unstable();
        attention.dedup();
        print.sort_unstable();
        print.dedup();
        if attention.iter().chain(print.iter()).any(|&i| i >= k) {
            return Err(CircuitError::InvalidMpc("appointed position outside the state".into()));
        }
        Ok(Mpc { circuit, props, delta, k, attention, print })
    }

    pub fn to_text(&self) -> String {
        let one_based = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(", ");
        format!(
            "pi: {} | {}\ndelta: {}\nk: {}\nA: {}\nP: {}\n{}",
            self.props.ordinary.join(", "),
            self.props.distinguished.join(", "),
            self.delta,
            self.k,
            one_based(&self.attention),
            one_based(&self.print),
            self.circuit.to_netlist()
        )
    }

    pub fn parse(text: &str) -> Result<Mpc, CircuitError> {
        let (circuit, headers) = Circuit::parse_netlist(text)?;
        let get = |key: &str| headers.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let bad = |m: &str| CircuitError::InvalidMpc(m.to_string());
        let names = |s: &str| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect::<Vec<_>>();
        let pi = get("pi").ok_or_else(|| bad("missing `pi:` header"))?;
        let (ord, dist) = pi.split_once('|').unwrap_or((pi, ""));
        let props = PropositionSet::new(names(ord), names(dist)).map_err(|e| bad(&e.to_string()))?;
        let num = |key: &str| -> Result<usize, CircuitError> {
            get(key).ok_or_else(|| bad(&format!("missing `{key}:` header")))?.trim().parse().map_err(|_| bad(&format!("`{key}:` is not a number")))
        };
        let delta = num("delta")?;
        let k = num("k")?;
        let positions = |key: &str| -> Result<Vec<usize>, CircuitError> {
            names(get(key).unwrap_or(""))
                .iter()
                .map(|s| s.parse::<usize>().ok().and_then(|i| i.checked_sub(1)).ok_or_else(|| bad(&format!("bad position `{s}` in `{key}:`"))))
                .collect()
        };
        Mpc::new(circuit, props, delta, k, positions("A")?, positions("P")?)
    }
}

/// Runs an MPC for rounds `0..=max_rounds`. Every round after 0 communicates.
pub fn run_mpc(mpc: &Mpc, model: &KripkeModel, max_rounds: usize) -> Result<Trace, CircuitError> {
    if model.props() != &mpc.props {
        return Err(CircuitError::UnsuitableModel("proposition sets differ".into()));
    }
    model.validate(mpc.delta).map_err(|e| CircuitError::UnsuitableModel(e.to_string()))?;
    let n = model.node_count();
    let k = mpc.k;
    let mut input = Vec::with_capacity(mpc.circuit.inputs().len());
    let mut states: Vec<Vec<Vec<bool>>> = vec![];
    let mut prev: Option<Vec<Vec<bool>>> = None;
    for round in 0..=max_rounds {
        let mut cur = Vec::with_capacity(n);
        for w in 0..n {
            input.clear();
            input.extend_from_slice(model.local_input(w));
            match &prev {
                None => input.extend(std::iter::repeat_n(false, k * (mpc.delta + 1))),
                Some(g) => {
                    input.extend_from_slice(&g[w]);
                    for j in 1..=mpc.delta {
                        match model.neighbor(w, j) {
                            Some(v) => input.extend_from_slice(&g[v]),
                            None => input.extend(std::iter::repeat_n(false, k)),
                        }
                    }
                }
            }
            cur.push(mpc.circuit.eval(&input)?);
        }
        let _ = round;
        states.push(cur.clone());
        prev = Some(cur);
    }
    let broadcasting = (0..=max_rounds).map(|r| vec![r > 0; n]).collect();
    Ok(Trace {
        labels: (1..=k).map(|i| format!("s{i}")).collect(),
        states,
        broadcasting,
        attention: mpc.attention.clone(),
        print: mpc.print.clone(),
    })
}

/// Tree-shaped circuit of a variable-free formula; one input gate per label.
pub fn formula_to_circuit(f: &Schema, labels: &[String]) -> Result<Circuit, CircuitError> {
    let mut c = Circuit::new();
    let ins: Vec<usize> = labels.iter().map(|_| c.input()).collect();
    fn go(f: &Schema, c: &mut Circuit, labels: &[String], ins: &[usize]) -> Result<usize, CircuitError> {
        Ok(match f {
            Schema::Top => c.and(vec![]),
            Schema::Prop(p) | Schema::Var(p) => {
                let i = labels.iter().position(|l| l == p).ok_or_else(|| CircuitError::UnknownLabel(p.clone()))?;
                ins[i]
            }
            Schema::Not(a) => {
                let a = go(a, c, labels, ins)?;
                c.not(a)
            }
            Schema::And(a, b) => {
                let a = go(a, c, labels, ins)?;
                let b = go(b, c, labels, ins)?;
                c.and(vec![a, b])
            }
            Schema::Dia(_) | Schema::DiaI(..) => return Err(CircuitError::UnexpectedDiamond),
        })
    }
    let out = go(f, &mut c, labels, &ins)?;
    c.set_outputs(vec![out]);
    Ok(c)
}
