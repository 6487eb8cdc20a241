//! Circuits to programs and back.

use std::collections::HashMap;

use super::{cmsc_to_msc, make_omnipresent, CompileError, TranslationReport};
use crate::circuit::{Circuit, CircuitError, GateKind, Mpc};
use crate::eval::run;
use crate::model::{KripkeModel, PropositionSet};
use crate::syntax::{and_all, bot, dia_i, not, or_all, prop, top, var, Program, ProgramBuilder, Rule, Schema, Variant};

/// A diamond-free program that evaluates a circuit in `depth` rounds.
#[derive(Debug, Clone)]
pub struct CircuitSimulation {
    pub program: Program,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub depth: usize,
}

impl CircuitSimulation {
    /// Patches the input terminals with `x`, runs `depth` rounds and reads the outputs.
    pub fn simulate(&self, x: &[bool]) -> Vec<bool> {
        let mut b = self.program.to_builder();
        for (name, &v) in self.inputs.iter().zip(x) {
            b.set_terminal(name, if v { top() } else { bot() });
        }
        let p = b.build().expect("patching terminals keeps the program valid");
        let m = KripkeModel::new(PropositionSet::default(), 1, &[], &[vec![]]).expect("one-node model");
        let t = run(&p, &m, self.depth).expect("diamond-free program runs anywhere");
        self.outputs.iter().map(|o| t.bit(self.depth, 0, o).expect("output head exists")).collect()
    }
}

/// Gates of a circuit whose outputs all sit at height `target`.
struct Padded {
    circuit: Circuit,
    /// Gate index of output `i` in `circuit`.
    outputs: Vec<usize>,
}

fn pad_outputs(c: &Circuit, target: usize) -> Padded {
    let c = &c.pruned();
    let mut out = Circuit::new();
    for _ in c.inputs() {
        out.input();
    }
    let ins = out.inputs().to_vec();
    let index = out.embed_map(c, &ins);
    let heights = out.heights();
    let mut claimed = vec![false; out.size()];
    let mut outputs = vec![];
    for &o in c.outputs() {
        let mut g = index[o];
        let is_input = out.gates()[g].kind == GateKind::Input;
        if heights[g] == target && (target == 0 || (!is_input && !claimed[g])) {
            if target > 0 {
                claimed[g] = true;
            }
        } else if heights[g] == target {
            let gate = out.gates()[g].clone();
            g = match gate.kind {
                GateKind::And => out.and(gate.fanin),
                GateKind::Or => out.or(gate.fanin),
                GateKind::Not => out.not(gate.fanin[0]),
                GateKind::Input => unreachable!("input gates have height 0"),
            };
        } else {
            for _ in heights[g]..target {
                g = out.identity(g);
            }
        }
        outputs.push(g);
    }
    out.set_outputs(outputs.clone());
    Padded { circuit: out, outputs }
}

/// Constant gates hold their value from round 0; every other gate starts false.
fn constant_start(kind: GateKind, fanin: &[usize]) -> Schema {
    if fanin.is_empty() && kind == GateKind::And {
        top()
    } else {
        bot()
    }
}

fn gate_body(kind: GateKind, fanin: &[usize], names: &[String]) -> Schema {
    let args = fanin.iter().map(|&f| var(names[f].clone()));
    match kind {
        GateKind::And => and_all(args),
        GateKind::Or => or_all(args),
        GateKind::Not => not(var(names[fanin[0]].clone())),
        GateKind::Input => unreachable!(),
    }
}

/// Head names for the padded circuit. Outputs are named `O1..Ok`; input
/// gates are named by `input_name(position)`.
fn gate_names(p: &Padded, input_name: &dyn Fn(usize) -> String) -> Vec<String> {
    let mut names: Vec<String> = (0..p.circuit.size()).map(|g| format!("G{g}")).collect();
    for (pos, &g) in p.circuit.inputs().iter().enumerate() {
        names[g] = input_name(pos);
    }
    for (i, &g) in p.outputs.iter().enumerate() {
        if p.circuit.gates()[g].kind != GateKind::Input {
            names[g] = format!("O{}", i + 1);
        }
    }
    names
}

/// Heads in the order: other gates, then outputs `O1..Ok`.
fn head_order(p: &Padded) -> Vec<usize> {
    let is_output: Vec<bool> = {
        let mut v = vec![false; p.circuit.size()];
        for &g in &p.outputs {
            if p.circuit.gates()[g].kind != GateKind::Input {
                v[g] = true;
            }
        }
        v
    };
    let mut order: Vec<usize> = (0..p.circuit.size()).filter(|&g| !is_output[g]).collect();
    let mut seen = vec![false; p.circuit.size()];
    for &g in &p.outputs {
        if is_output[g] && !seen[g] {
            seen[g] = true;
            order.push(g);
        }
    }
    order
}

/// Programs whose `depth`-th configuration holds the circuit outputs.
pub fn simulate_circuit_as_program(c: &Circuit, variant: Variant) -> CircuitSimulation {
    let depth = c.depth();
    let padded = pad_outputs(c, depth);
    let names = gate_names(&padded, &|i| format!("I{}", i + 1));
    let mut b = ProgramBuilder::new(variant);
    for g in head_order(&padded) {
        let gate = &padded.circuit.gates()[g];
        let rule = match gate.kind {
            GateKind::Input if depth == 0 => Rule::Plain(bot()),
            GateKind::Input => Rule::Plain(var(names[g].clone())),
            kind => Rule::Plain(gate_body(kind, &gate.fanin, &names)),
        };
        b.head(names[g].clone(), constant_start(gate.kind, &gate.fanin), rule);
    }
    let program = b.build().expect("circuit simulation is a valid program");
    CircuitSimulation {
        program,
        inputs: padded.circuit.inputs().iter().map(|&g| names[g].clone()).collect(),
        outputs: padded.outputs.iter().map(|&g| names[g].clone()).collect(),
        depth,
    }
}

/// An MPMSC program that runs the circuit in periods of `d + 1` rounds.
///
/// The circuit's round-`n` state is held by the `O` heads from round
/// `d + n(d + 1)` on; a depth-0 circuit is padded to depth 1.
pub fn mpc_to_mpmsc(mpc: &Mpc) -> (Program, TranslationReport) {
    let depth = mpc.circuit.depth().max(1);
    let padded = pad_outputs(&mpc.circuit, depth);
    let props: Vec<String> = mpc.props.all().cloned().collect();
    let np = props.len();
    let k = mpc.k;
    let input_name = |pos: usize| {
        if pos < np {
            format!("IP_{}", props[pos])
        } else {
            let r = pos - np;
            format!("I{}_{}", r % k + 1, r / k)
        }
    };
    let names = gate_names(&padded, &input_name);
    let heights = padded.circuit.heights();
    let clock: Vec<String> = (0..=depth).map(|i| format!("T{i}")).collect();
    let output_name = |i: usize| names[padded.outputs[i]].clone();

    let mut b = ProgramBuilder::new(Variant::Mpmsc);
    for g in head_order(&padded) {
        let gate = &padded.circuit.gates()[g];
        let name = names[g].clone();
        let (terminal, rule) = match gate.kind {
            GateKind::Input => {
                let pos = padded.circuit.inputs().iter().position(|&x| x == g).unwrap();
                let t0 = var(clock[0].clone());
                if pos < np {
                    let p = prop(props[pos].clone());
                    (p.clone(), Rule::cond(vec![t0], vec![p], var(name.clone())))
                } else {
                    let r = pos - np;
                    let (i, j) = (r % k, r / k);
                    let src = var(output_name(i));
                    let cons = if j == 0 { src } else { dia_i(j, src) };
                    (bot(), Rule::cond(vec![t0], vec![cons], var(name.clone())))
                }
            }
            kind => {
                let body = gate_body(kind, &gate.fanin, &names);
                (constant_start(kind, &gate.fanin), Rule::cond(vec![var(clock[heights[g]].clone())], vec![body], var(name.clone())))
            }
        };
        b.head(name, terminal, rule);
    }
    b.head(clock[0].clone(), bot(), Rule::Plain(var(clock[depth].clone())));
    b.head(clock[1].clone(), top(), Rule::Plain(var(clock[0].clone())));
    for i in 1..depth {
        b.head(clock[i + 1].clone(), bot(), Rule::Plain(var(clock[i].clone())));
    }
    b.attention = mpc.attention.iter().map(|&i| output_name(i)).collect();
    b.print = mpc.print.iter().map(|&i| output_name(i)).collect();
    let program = b.build().expect("mpc simulation is a valid mpmsc program");
    let report = TranslationReport {
        translation: "mpc-to-mpmsc".into(),
        source_size: mpc.circuit.size(),
        target_size: program.metrics().size,
        source_metrics: None,
        target_metrics: Some(program.metrics()),
        time_dilation: format!("1 source round = {} target rounds; source round n is read at target round {depth} + n*{}", depth + 1, depth + 1),
        notes: vec![],
    };
    (program, report)
}

/// The two-circuit multiplexer: inputs `s0 · b · s1`, outputs `1 · (b ? C1(s1) : C0(s0))`.
pub fn combine_two_circuits(c0: &Circuit, c1: &Circuit) -> Result<Circuit, CircuitError> {
    if c0.outputs().len() != c1.outputs().len() {
        return Err(CircuitError::OutputArityMismatch(c0.outputs().len(), c1.outputs().len()));
    }
    let mut c = Circuit::new();
    let s0: Vec<usize> = (0..c0.inputs().len()).map(|_| c.input()).collect();
    let sel = c.input();
    let s1: Vec<usize> = (0..c1.inputs().len()).map(|_| c.input()).collect();
    let o0 = c.embed(c0, &s0);
    let o1 = c.embed(c1, &s1);
    let neg = c.not(sel);
    let one = c.or(vec![sel, neg]);
    let mut outputs = vec![one];
    for (a, b) in o0.into_iter().zip(o1) {
        let x = c.and(vec![a, neg]);
        let y = c.and(vec![b, sel]);
        outputs.push(c.or(vec![x, y]));
    }
    c.set_outputs(outputs);
    Ok(c)
}

struct HomeAndNeighbours {
    prop: Vec<Vec<usize>>,
    head: Vec<Vec<usize>>,
    flag: Vec<usize>,
}

fn tree(c: &mut Circuit, s: &Schema, scope: usize, ins: &HomeAndNeighbours, pidx: &HashMap<&str, usize>, hidx: &HashMap<&str, usize>) -> usize {
    match s {
        Schema::Top => c.and(vec![]),
        Schema::Prop(p) => ins.prop[scope][pidx[p.as_str()]],
        Schema::Var(x) => ins.head[scope][hidx[x.as_str()]],
        Schema::Not(a) => {
            let a = tree(c, a, scope, ins, pidx, hidx);
            c.not(a)
        }
        Schema::And(a, b) => {
            let a = tree(c, a, scope, ins, pidx, hidx);
            let b = tree(c, b, scope, ins, pidx, hidx);
            c.and(vec![a, b])
        }
        Schema::DiaI(j, a) => {
            let a = tree(c, a, *j, ins, pidx, hidx);
            c.and(vec![a, ins.flag[*j]])
        }
        Schema::Dia(_) => unreachable!("indexed programs have no plain diamonds"),
    }
}

/// A strongly equivalent MPC. State layout: the iteration propositions,
/// one initialisation flag, then one bit per head of the flattened program.
pub fn mpmsc_to_mpc(p: &Program, props: &PropositionSet, delta: usize) -> Result<(Mpc, TranslationReport), CompileError> {
    if p.variant() != Variant::Mpmsc {
        return Err(CompileError::WrongVariant { expected: "mpmsc".into(), got: p.variant() });
    }
    let index = p.metrics().max_diamond_index;
    if index > delta {
        return Err(CompileError::DiamondIndexExceedsDelta { index, delta });
    }
    for q in p.props() {
        if !props.contains(&q) {
            return Err(CompileError::UnknownProposition(q));
        }
    }
    let (omni, omni_report) = make_omnipresent(p, props, delta)?;
    let (gamma, _) = cmsc_to_msc(&omni);
    let all: Vec<String> = props.all().cloned().collect();
    let iter_props: std::collections::BTreeSet<String> =
        gamma.rules().iter().flat_map(|r| r.parts().into_iter().flat_map(|s| s.props())).collect();
    let pi_prime: Vec<String> = all.iter().filter(|q| iter_props.contains(*q)).cloned().collect();
    let k = gamma.head_count();
    let np = all.len();

    let all_idx: HashMap<&str, usize> = all.iter().enumerate().map(|(i, q)| (q.as_str(), i)).collect();
    let pidx: HashMap<&str, usize> = pi_prime.iter().enumerate().map(|(i, q)| (q.as_str(), i)).collect();
    let hidx: HashMap<&str, usize> = gamma.heads().iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();

    // terminal round
    let mut c0 = Circuit::new();
    let local: Vec<usize> = (0..np).map(|_| c0.input()).collect();
    let ins0 = HomeAndNeighbours { prop: vec![local.clone()], head: vec![vec![]], flag: vec![] };
    let outs0: Vec<usize> = gamma.terminals().iter().map(|t| tree(&mut c0, t, 0, &ins0, &all_idx, &hidx)).collect();
    c0.set_outputs(outs0);

    // later rounds; inputs: home props, home heads, then per neighbour props, flag, heads
    let mut c1 = Circuit::new();
    let mut ins1 = HomeAndNeighbours { prop: vec![], head: vec![], flag: vec![usize::MAX] };
    ins1.prop.push(pi_prime.iter().map(|_| c1.input()).collect());
    ins1.head.push((0..k).map(|_| c1.input()).collect());
    for _ in 1..=delta {
        ins1.prop.push(pi_prime.iter().map(|_| c1.input()).collect());
        ins1.flag.push(c1.input());
        ins1.head.push((0..k).map(|_| c1.input()).collect());
    }
    let outs1: Vec<usize> = gamma.rules().iter().map(|r| {
        let Rule::Plain(body) = r else { unreachable!("flattened") };
        tree(&mut c1, body, 0, &ins1, &pidx, &hidx)
    }).collect();
    c1.set_outputs(outs1);

    let mut c = combine_two_circuits(&c0, &c1)?;
    let ins = c.inputs().to_vec();
    let mut outputs: Vec<usize> = pi_prime.iter().map(|q| ins[all_idx[q.as_str()]]).map(|g| c.identity(g)).collect();
    outputs.extend_from_slice(c.outputs());
    c.set_outputs(outputs);
    let s1 = &ins[np + 1..];
    let mut order: Vec<usize> = ins[..np].to_vec();
    order.extend_from_slice(&s1[..pi_prime.len()]);
    order.push(ins[np]);
    order.extend_from_slice(&s1[pi_prime.len()..]);
    c.set_inputs_order(order);

    let offset = pi_prime.len() + 1;
    let state = offset + k;
    let mpc = Mpc::new(
        c,
        props.clone(),
        delta,
        state,
        gamma.attention().iter().map(|i| i + offset).collect(),
        gamma.print().iter().map(|i| i + offset).collect(),
    )?;
    let m = p.metrics();
    let report = TranslationReport {
        translation: "mpmsc-to-mpc".into(),
        source_size: m.size,
        target_size: mpc.circuit.size(),
        source_metrics: Some(m),
        target_metrics: None,
        time_dilation: format!("none: head i is state bit {} + i", offset + 1),
        notes: {
            let mut n = omni_report.notes;
            n.push(format!("state length {state} = {} propositions + 1 flag + {k} heads", pi_prime.len()));
            n.push(format!("size bound base delta*m + |props| = {}", delta * m.size + np));
            n
        },
    };
    Ok((mpc, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::run_mpc;
    use crate::model::{graph_to_kripke, Graph};
    use crate::syntax::parse_program;

    #[test]
    fn negation_gate_clause() {
        let mut c = Circuit::new();
        let i = c.input();
        let n = c.not(i);
        c.set_outputs(vec![n]);
        let sim = simulate_circuit_as_program(&c, Variant::Msc);
        let o = sim.program.head_index("O1").unwrap();
        assert_eq!(sim.program.terminal(o), &bot());
        assert_eq!(sim.program.rule(o), &Rule::Plain(not(var("I1"))));
        assert_eq!(sim.simulate(&[true]), vec![false]);
        assert_eq!(sim.simulate(&[false]), vec![true]);
    }

    #[test]
    fn depth_zero_simulation() {
        let mut c = Circuit::new();
        let i = c.input();
        c.set_outputs(vec![i]);
        let sim = simulate_circuit_as_program(&c, Variant::Msc);
        assert_eq!(sim.inputs, sim.outputs);
        assert_eq!(sim.program.rule(0), &Rule::Plain(bot()));
        assert_eq!(sim.simulate(&[true]), vec![true]);
    }

    #[test]
    fn padding_to_common_height() {
        let mut c = Circuit::new();
        let a = c.input();
        let b = c.input();
        let x = c.and(vec![a, b]);
        let y = c.not(x);
        c.set_outputs(vec![y, a, y]);
        let sim = simulate_circuit_as_program(&c, Variant::Cmsc);
        for v in 0..4u8 {
            let bits = [v & 1 == 1, v & 2 == 2];
            assert_eq!(sim.simulate(&bits), c.eval(&bits).unwrap());
        }
    }

    #[test]
    fn two_circuit_depth() {
        let mut c0 = Circuit::new();
        let a = c0.input();
        let n = c0.not(a);
        c0.set_outputs(vec![n]);
        let mut c1 = Circuit::new();
        let a = c1.input();
        let b = c1.input();
        let x = c1.and(vec![a, b]);
        let y = c1.not(x);
        c1.set_outputs(vec![y]);
        let c = combine_two_circuits(&c0, &c1).unwrap();
        assert_eq!(c.depth(), 4);
        assert_eq!(c.inputs().len(), 4);
    }

    #[test]
    fn clock_heads_of_the_mpc_program() {
        let m = graph_to_kripke(&Graph::new(2, vec![(1, 2)]).unwrap()).unwrap();
        let text = "pi: | p1, p2\ndelta: 1\nk: 1\nA: 1\nP: 1\ninputs: a, b, s, t\noutputs: o\na = INPUT\nb = INPUT\ns = INPUT\nt = INPUT\nx = OR(t, a)\no = NOT(x)\n";
        let mpc = Mpc::parse(text).unwrap();
        let (p, _) = mpc_to_mpmsc(&mpc);
        let tr = run(&p, &m, 12).unwrap();
        let t1 = p.head_index("T1").unwrap();
        let t0 = p.head_index("T0").unwrap();
        let clocks: Vec<usize> = (0..=2).map(|i| p.head_index(&format!("T{i}")).unwrap()).collect();
        assert_eq!(clocks.iter().map(|&i| tr.state(0, 0)[i]).collect::<Vec<_>>(), vec![false, true, false]);
        assert!(tr.state(0, 0)[t1]);
        assert!(tr.state(2, 0)[t0]);
        assert_eq!(tr.comm_rounds(), vec![3, 6, 9, 12]);
        let c = run_mpc(&mpc, &m, 4).unwrap();
        let o = p.head_index("O1").unwrap();
        for n in 0..4 {
            for w in 0..2 {
                assert_eq!(tr.state(2 + 3 * n, w)[o], c.state(n, w)[0], "round {n} node {w}");
            }
        }
    }

    #[test]
    fn strong_equivalence_of_a_small_program() {
        let p = parse_program("mpmsc { X(0) := p1; X :=[X] <1>X; !X; Y(0) := !p1; Y := <1>Y | X; attention X; print Y; }").unwrap();
        let m = graph_to_kripke(&Graph::path(3)).unwrap();
        let (mpc, _) = mpmsc_to_mpc(&p, m.props(), 2).unwrap();
        let a = run(&p, &m, 8).unwrap();
        let b = run_mpc(&mpc, &m, 8).unwrap();
        for n in 0..=8 {
            for w in 0..3 {
                assert_eq!(a.appointed(n, w), b.appointed(n, w));
            }
        }
    }

    #[test]
    fn constant_gates_hold_from_the_first_round() {
        let m = graph_to_kripke(&Graph::path(2)).unwrap();
        let mut c = Circuit::new();
        let ins: Vec<usize> = (0..m.props().len() + 2).map(|_| c.input()).collect();
        let one = c.constant(true);
        let neg = c.not(one);
        let x = c.or(vec![neg, ins[0]]);
        let y = c.and(vec![x, ins[1]]);
        c.set_outputs(vec![y]);
        let mpc = Mpc::new(c, m.props().clone(), 1, 1, vec![0], vec![0]).unwrap();
        let (p, _) = mpc_to_mpmsc(&mpc);
        let a = run_mpc(&mpc, &m, 4).unwrap();
        let b = run(&p, &m, 20).unwrap();
        for n in 0..=4 {
            for w in 0..2 {
                assert_eq!(a.state(n, w)[0], b.bit(2 + 3 * n, w, "O1").unwrap(), "round {n} node {w}");
            }
        }
    }
}
