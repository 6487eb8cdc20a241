//! Round-based execution of programs over Kripke models.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::KripkeModel;
use crate::syntax::{and, not, or, Program, Rule, Schema};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("model is unsuitable: {0}")]
    UnsuitableModel(String),
    #[error("expanded formula exceeds the budget of {0} nodes")]
    TooLarge(usize),
    #[error("iteration formulas are only defined for programs with plain diamonds")]
    IndexedDiamond,
}

/// Per-node, per-round states together with the appointed positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    /// Names of the state bits (heads, or `s0..` for circuits).
    pub labels: Vec<String>,
    /// `states[round][node]`.
    pub states: Vec<Vec<Vec<bool>>>,
    /// `broadcasting[round][node]`; always false in round 0.
    pub broadcasting: Vec<Vec<bool>>,
    pub attention: Vec<usize>,
    pub print: Vec<usize>,
}

impl Trace {
    pub fn rounds(&self) -> usize {
        self.states.len()
    }

    pub fn node_count(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn state(&self, round: usize, w: usize) -> &[bool] {
        &self.states[round][w]
    }

    /// First round in which some attention bit is set.
    pub fn acceptance_round(&self, w: usize) -> Option<usize> {
        (0..self.rounds()).find(|&r| self.attention.iter().any(|&i| self.states[r][w][i]))
    }

    /// Print bits at the acceptance round.
    pub fn output(&self, w: usize) -> Option<Vec<bool>> {
        self.acceptance_round(w).map(|r| self.print.iter().map(|&i| self.states[r][w][i]).collect())
    }

    /// Positions of attention and print bits, ascending and merged.
    pub fn appointed_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.attention.iter().chain(self.print.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Attention bits followed by print bits at `round`.
    pub fn appointed(&self, round: usize, w: usize) -> (Vec<bool>, Vec<bool>) {
        let s = &self.states[round][w];
        (self.attention.iter().map(|&i| s[i]).collect(), self.print.iter().map(|&i| s[i]).collect())
    }

    /// Rounds in which at least one node broadcasts.
    pub fn comm_rounds(&self) -> Vec<usize> {
        (0..self.rounds()).filter(|&r| self.broadcasting[r].iter().any(|&b| b)).collect()
    }

    /// Value of the state bit named `label`.
    pub fn bit(&self, round: usize, w: usize, label: &str) -> Option<bool> {
        self.labels.iter().position(|l| l == label).map(|i| self.states[round][w][i])
    }

    pub fn dump_text(&self) -> String {
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        let mut out = String::new();
        for r in 0..self.rounds() {
            for w in 0..self.node_count() {
                let (a, p) = self.appointed(r, w);
                out.push_str(&format!(
                    "round {r}: {w} {} [A:{}] [P:{}] bcast:{}\n",
                    bits(&self.states[r][w]),
                    bits(&a),
                    bits(&p),
                    self.broadcasting[r][w] as u8
                ));
            }
        }
        out
    }

    pub fn dump_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = (0..self.node_count())
            .map(|w| {
                serde_json::json!({
                    "node": w,
                    "acceptance_round": self.acceptance_round(w),
                    "output": self.output(w).map(|o| o.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>()),
                })
            })
            .collect();
        serde_json::json!({
            "labels": self.labels,
            "attention": self.attention,
            "print": self.print,
            "states": self.states.iter().map(|round| round.iter().map(|s| s.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "broadcasting": self.broadcasting,
            "comm_rounds": self.comm_rounds(),
            "nodes": nodes,
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Top,
    Prop(usize),
    Var(usize),
    Not(usize),
    And(usize, usize),
    Dia(usize),
    DiaI(usize, usize),
}

struct CompiledRule {
    conds: Vec<usize>,
    /// Consequences then backup.
    branches: Vec<usize>,
    branch_has_diamond: Vec<bool>,
}

/// A program lowered to a shared DAG over one model's proposition indices.
pub struct Engine<'a> {
    model: &'a KripkeModel,
    nodes: Vec<Node>,
    terminals: Vec<usize>,
    rules: Vec<CompiledRule>,
    heads: usize,
}

struct Lowering<'p> {
    nodes: Vec<Node>,
    memo: HashMap<Schema, usize>,
    program: &'p Program,
    model: &'p KripkeModel,
}

impl Lowering<'_> {
    fn lower(&mut self, s: &Schema) -> Result<usize, EvalError> {
        if let Some(&i) = self.memo.get(s) {
            return Ok(i);
        }
        let node = match s {
            Schema::Top => Node::Top,
            Schema::Prop(p) => Node::Prop(
                self.model
                    .props()
                    .index_of(p)
                    .ok_or_else(|| EvalError::UnsuitableModel(format!("proposition `{p}` is not interpreted")))?,
            ),
            Schema::Var(x) => Node::Var(self.program.head_index(x).expect("validated program")),
            Schema::Not(a) => Node::Not(self.lower(a)?),
            Schema::And(a, b) => {
                let a = self.lower(a)?;
                Node::And(a, self.lower(b)?)
            }
            Schema::Dia(a) => Node::Dia(self.lower(a)?),
            Schema::DiaI(i, a) => Node::DiaI(*i, self.lower(a)?),
        };
        self.nodes.push(node);
        let id = self.nodes.len() - 1;
        self.memo.insert(s.clone(), id);
        Ok(id)
    }
}

impl<'a> Engine<'a> {
    pub fn new(program: &Program, model: &'a KripkeModel) -> Result<Engine<'a>, EvalError> {
        let max_i = program.metrics().max_diamond_index;
        if max_i > 0 {
            model.validate(usize::MAX).map_err(|e| EvalError::UnsuitableModel(e.to_string()))?;
        }
        let mut lw = Lowering { nodes: vec![], memo: HashMap::new(), program, model };
        let terminals = program.terminals().iter().map(|t| lw.lower(t)).collect::<Result<Vec<_>, _>>()?;
        let mut rules = vec![];
        for r in program.rules() {
            let conds = r.conditions().iter().map(|c| lw.lower(c)).collect::<Result<Vec<_>, _>>()?;
            let bs = r.branches();
            let branches = bs.iter().map(|b| lw.lower(b)).collect::<Result<Vec<_>, _>>()?;
            let branch_has_diamond = bs.iter().map(|b| b.has_diamond()).collect();
            rules.push(CompiledRule { conds, branches, branch_has_diamond });
        }
        Ok(Engine { model, nodes: lw.nodes, terminals, rules, heads: program.head_count() })
    }

    /// Values of every DAG node at every model node, given head values `g`.
    fn evaluate(&self, g: Option<&[Vec<bool>]>) -> Vec<Vec<bool>> {
        let n = self.model.node_count();
        let mut val: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let row: Vec<bool> = match *node {
                Node::Top => vec![true; n],
                Node::Prop(p) => (0..n).map(|w| self.model.holds(w, p)).collect(),
                Node::Var(x) => match g {
                    Some(g) => (0..n).map(|w| g[w][x]).collect(),
                    None => vec![false; n],
                },
                Node::Not(a) => val[a].iter().map(|b| !b).collect(),
                Node::And(a, b) => val[a].iter().zip(&val[b]).map(|(x, y)| *x && *y).collect(),
                Node::Dia(a) => (0..n).map(|w| self.model.neighbor_order(w).iter().any(|&v| val[a][v])).collect(),
                Node::DiaI(i, a) => (0..n).map(|w| self.model.neighbor(w, i).is_some_and(|v| val[a][v])).collect(),
            };
            val.push(row);
        }
        val
    }

    pub fn initial(&self) -> Vec<Vec<bool>> {
        let val = self.evaluate(None);
        (0..self.model.node_count()).map(|w| self.terminals.iter().map(|&t| val[t][w]).collect()).collect()
    }

    /// Next configuration and per-node broadcasting flags.
    pub fn step(&self, g: &[Vec<bool>]) -> (Vec<Vec<bool>>, Vec<bool>) {
        let val = self.evaluate(Some(g));
        let n = self.model.node_count();
        let mut next = vec![vec![false; self.heads]; n];
        let mut bcast = vec![false; n];
        for w in 0..n {
            for (h, r) in self.rules.iter().enumerate() {
                let k = r.conds.iter().position(|&c| val[c][w]).unwrap_or(r.conds.len());
                next[w][h] = val[r.branches[k]][w];
                bcast[w] |= r.branch_has_diamond[k];
            }
        }
        (next, bcast)
    }
}

/// Runs `program` for rounds `0..=max_rounds`.
pub fn run(program: &Program, model: &KripkeModel, max_rounds: usize) -> Result<Trace, EvalError> {
    let engine = Engine::new(program, model)?;
    let n = model.node_count();
    let mut states = vec![engine.initial()];
    let mut broadcasting = vec![vec![false; n]];
    for _ in 0..max_rounds {
        let (next, b) = engine.step(states.last().unwrap());
        states.push(next);
        broadcasting.push(b);
    }
    Ok(Trace {
        labels: program.heads().to_vec(),
        states,
        broadcasting,
        attention: program.attention().to_vec(),
        print: program.print().to_vec(),
    })
}

/// Single step from an explicit configuration (`g[w]` is the head string of `w`).
pub fn step(program: &Program, model: &KripkeModel, g: &[Vec<bool>]) -> Result<Vec<Vec<bool>>, EvalError> {
    Ok(Engine::new(program, model)?.step(g).0)
}

/// Standard modal truth of a variable-free formula.
pub fn model_check(f: &Schema, model: &KripkeModel, w: usize) -> bool {
    match f {
        Schema::Top => true,
        Schema::Prop(p) => model.holds_named(w, p).unwrap_or(false),
        Schema::Var(_) => panic!("model_check needs a formula without head predicates"),
        Schema::Not(a) => !model_check(a, model, w),
        Schema::And(a, b) => model_check(a, model, w) && model_check(b, model, w),
        Schema::Dia(a) => model.neighbor_order(w).iter().any(|&v| model_check(a, model, v)),
        Schema::DiaI(i, a) => model.neighbor(w, *i).is_some_and(|v| model_check(a, model, v)),
    }
}

/// The `n`-th iteration formula of `head`, by literal substitution.
pub fn expand_iteration_formula(program: &Program, head: &str, n: usize, budget: usize) -> Result<Schema, EvalError> {
    if program.variant().indexed() {
        return Err(EvalError::IndexedDiamond);
    }
    let hi = program.head_index(head).ok_or_else(|| EvalError::UnsuitableModel(format!("no head `{head}`")))?;
    let mut cur: Vec<Schema> = program.terminals().to_vec();
    for _ in 0..n {
        let sub = |x: &str| cur[program.head_index(x).expect("validated")].clone();
        let mut next = Vec::with_capacity(cur.len());
        for r in program.rules() {
            let f = match r {
                Rule::Plain(b) => b.substitute(&sub),
                Rule::Cond { conds, conss, backup } => {
                    // first true condition wins; none true selects the backup
                    let mut disjuncts = vec![];
                    let mut earlier_false: Vec<Schema> = vec![];
                    for (c, k) in conds.iter().zip(conss) {
                        let c = c.substitute(&sub);
                        let guard = earlier_false.iter().cloned().chain([c.clone()]).reduce(and).unwrap();
                        disjuncts.push(and(guard, k.substitute(&sub)));
                        earlier_false.push(not(c));
                    }
                    let guard = earlier_false.into_iter().reduce(and).unwrap();
                    disjuncts.push(and(guard, backup.substitute(&sub)));
                    disjuncts.into_iter().reduce(or).unwrap()
                }
            };
            if f.size() > budget {
                return Err(EvalError::TooLarge(budget));
            }
            next.push(f);
        }
        cur = next;
    }
    Ok(cur.swap_remove(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KripkeModel, PropositionSet};
    use crate::syntax::{dia, parse_program, prop};

    fn two_cycle() -> KripkeModel {
        KripkeModel::new(PropositionSet::new(vec!["p".into()], vec!["p1".into()]).unwrap(), 2, &[(0, 1), (1, 0)], &[
            vec!["p".into(), "p1".into()],
            vec![],
        ])
        .unwrap()
    }

    #[test]
    fn identity_rule_keeps_configuration() {
        let p = parse_program("msc { X(0) := p; X := X; }").unwrap();
        let t = run(&p, &two_cycle(), 3).unwrap();
        assert!(t.states.iter().all(|s| s == &t.states[0]));
    }

    #[test]
    fn diamond_swaps_on_two_cycle() {
        let p = parse_program("msc { X(0) := p; X := <>X; }").unwrap();
        let m = two_cycle();
        let g1 = step(&p, &m, &[vec![true], vec![false]]).unwrap();
        assert_eq!(g1, vec![vec![false], vec![true]]);
    }

    #[test]
    fn accepts_in_round_zero() {
        let p = parse_program("msc { X(0) := T; X := X; attention X; print X }").unwrap();
        let t = run(&p, &two_cycle(), 2).unwrap();
        assert_eq!(t.acceptance_round(0), Some(0));
        assert_eq!(t.output(1), Some(vec![true]));
    }

    #[test]
    fn diamonds_in_conditions_do_not_broadcast() {
        let p = parse_program("cmsc { X(0) := F; X :=[<>p] X; !X; Y(0) := F; Y := Y; }").unwrap();
        let t = run(&p, &two_cycle(), 4).unwrap();
        assert!(t.comm_rounds().is_empty());
        let q = parse_program("cmsc { X(0) := F; X :=[X] <>p; F; }").unwrap();
        let t = run(&q, &two_cycle(), 4).unwrap();
        // X false in round 0 so round 1 uses the backup; afterwards X stays false
        assert!(t.comm_rounds().is_empty());
        let r = parse_program("cmsc { X(0) := T; X :=[X] <>p; F; }").unwrap();
        let t = run(&r, &two_cycle(), 2).unwrap();
        // node 1 sees p at node 0, so it keeps taking the diamond branch
        assert_eq!(t.comm_rounds(), vec![1, 2]);
    }

    #[test]
    fn iteration_formulas() {
        let p = parse_program("msc { Y(0) := p; Y := <>Y; }").unwrap();
        assert_eq!(expand_iteration_formula(&p, "Y", 0, 1000).unwrap(), prop("p"));
        assert_eq!(expand_iteration_formula(&p, "Y", 2, 1000).unwrap(), dia(dia(prop("p"))));
        let c = parse_program("cmsc { X(0) := q; X :=[p] r; s; }").unwrap();
        let expected = or(and(prop("p"), prop("r")), and(not(prop("p")), prop("s")));
        assert_eq!(expand_iteration_formula(&c, "X", 1, 1000).unwrap(), expected);
    }

    #[test]
    fn model_checking_basics() {
        let m = KripkeModel::new(PropositionSet::new(vec!["p1".into(), "p2".into()], vec![]).unwrap(), 3, &[(0, 1), (1, 2)], &[
            vec![],
            vec!["p1".into()],
            vec!["p2".into()],
        ])
        .unwrap();
        assert!(model_check(&Schema::Top, &m, 0));
        assert!(!model_check(&dia(Schema::Top), &m, 2));
        assert!(model_check(&dia(and(prop("p1"), dia(prop("p2")))), &m, 0));
    }
}
