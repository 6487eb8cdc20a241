//! Translations between program variants and message-passing circuits.

mod bridge;
mod clock;
mod indexed;
mod normal;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{CircuitError, Mpc};
use crate::model::PropositionSet;
use crate::syntax::{
    and, and_all, dia_i, not, or, or_all, prop, var, Metrics, Program, ProgramBuilder, Rule, Schema, SyntaxError, Variant,
};

pub use bridge::{combine_two_circuits, mpc_to_mpmsc, mpmsc_to_mpc, simulate_circuit_as_program, CircuitSimulation};
pub use clock::{add_clock, build_clock, build_diamond_simulator, Clock, DiamondSimulator};
pub use indexed::{eliminate_indexed_diamonds, eliminate_indexed_diamonds_with, Elimination, ScanGuard};
pub use normal::{terminal_depth_zero, to_msc1, to_msc1_conditional, NormalForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("expected a {expected} program, got {got}")]
    WrongVariant { expected: String, got: Variant },
    #[error("diamond index {index} exceeds the degree bound {delta}")]
    DiamondIndexExceedsDelta { index: usize, delta: usize },
    #[error("proposition `{0}` is not in the proposition set")]
    UnknownProposition(String),
    #[error("the proposition set has no identifier bits")]
    NoIdentifierBits,
    #[error("the program has no clause that can host the injected tautologies")]
    NoPlainClause,
}

/// Sizes before and after a translation and how rounds correspond.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranslationReport {
    pub translation: String,
    pub source_size: usize,
    pub target_size: usize,
    pub source_metrics: Option<Metrics>,
    pub target_metrics: Option<Metrics>,
    pub time_dilation: String,
    pub notes: Vec<String>,
}

impl TranslationReport {
    pub fn ratio(&self) -> f64 {
        self.target_size as f64 / self.source_size.max(1) as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "translation: {}\nsource size: {}\ntarget size: {}\nratio: {:.3}\ntime dilation: {}\n",
            self.translation,
            self.source_size,
            self.target_size,
            self.ratio(),
            self.time_dilation
        );
        for (label, m) in [("source", &self.source_metrics), ("target", &self.target_metrics)] {
            if let Some(m) = m {
                s.push_str(&format!(
                    "{label} metrics: size {} md {} mdt {} mdi {} max index {} heads {}\n",
                    m.size, m.md, m.mdt, m.mdi, m.max_diamond_index, m.head_count
                ));
            }
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}

pub(crate) fn program_report(name: &str, src: &Program, dst: &Program, dilation: impl Into<String>) -> TranslationReport {
    let (a, b) = (src.metrics(), dst.metrics());
    TranslationReport {
        translation: name.to_string(),
        source_size: a.size,
        target_size: b.size,
        source_metrics: Some(a),
        target_metrics: Some(b),
        time_dilation: dilation.into(),
        notes: vec![],
    }
}

/// Names a fresh head must avoid: existing heads plus all propositions.
pub(crate) fn taken_names(b: &ProgramBuilder, extra: impl IntoIterator<Item = String>) -> BTreeSet<String> {
    let mut s: BTreeSet<String> = b.heads.iter().cloned().collect();
    for t in &b.terminals {
        s.extend(t.props());
    }
    for r in &b.rules {
        for p in r.parts() {
            s.extend(p.props());
        }
    }
    s.extend(extra);
    s
}

/// Adds a head under a fresh name derived from `base`; returns the chosen name.
pub(crate) fn add_fresh(b: &mut ProgramBuilder, base: &str, avoid: &mut BTreeSet<String>, terminal: Schema, rule: Rule) -> String {
    let name = b.fresh(base, avoid);
    avoid.insert(name.clone());
    b.head(name.clone(), terminal, rule);
    name
}

/// A rule with an extra leading condition.
pub(crate) fn prepend_condition(rule: &Rule, cond: Schema, cons: Schema) -> Rule {
    match rule {
        Rule::Plain(b) => Rule::cond(vec![cond], vec![cons], b.clone()),
        Rule::Cond { conds, conss, backup } => {
            let mut c = vec![cond];
            c.extend(conds.iter().cloned());
            let mut k = vec![cons];
            k.extend(conss.iter().cloned());
            Rule::cond(c, k, backup.clone())
        }
    }
}

/// The conditional chain as a single schema.
pub fn flatten_rule(rule: &Rule) -> Schema {
    match rule {
        Rule::Plain(b) => b.clone(),
        Rule::Cond { conds, conss, backup } => {
            let mut theta = backup.clone();
            for (c, k) in conds.iter().zip(conss).rev() {
                theta = or(and(c.clone(), k.clone()), and(not(c.clone()), theta));
            }
            theta
        }
    }
}

/// Replaces every conditional clause by its flattened body. CMSC gives MSC,
/// MPMSC gives MMSC; other variants are returned unchanged.
pub fn cmsc_to_msc(p: &Program) -> (Program, TranslationReport) {
    let target = match p.variant() {
        Variant::Cmsc => Variant::Msc,
        Variant::Mpmsc => Variant::Mmsc,
        v => v,
    };
    let mut b = p.to_builder();
    b.variant = target;
    b.rules = p.rules().iter().map(|r| Rule::Plain(flatten_rule(r))).collect();
    let out = b.build().expect("flattening keeps a program valid");
    let report = program_report("cmsc-to-msc", p, &out, "none: strongly equivalent round by round");
    (out, report)
}

#[derive(Default)]
struct Occurrences {
    free: BTreeSet<String>,
    under: Vec<BTreeSet<String>>,
}

impl Occurrences {
    fn scan(&mut self, s: &Schema, scope: Option<usize>) {
        match s {
            Schema::Top => {}
            Schema::Prop(x) | Schema::Var(x) => {
                let key = if matches!(s, Schema::Prop(_)) { format!("p:{x}") } else { format!("v:{x}") };
                match scope {
                    None => {
                        self.free.insert(key);
                    }
                    Some(i) => {
                        if self.under.len() <= i {
                            self.under.resize(i + 1, BTreeSet::new());
                        }
                        self.under[i].insert(key);
                    }
                }
            }
            Schema::Not(a) | Schema::Dia(a) => self.scan(a, scope),
            Schema::DiaI(i, a) => self.scan(a, Some(*i)),
            Schema::And(a, b) => {
                self.scan(a, scope);
                self.scan(b, scope);
            }
        }
    }

    fn omnipresent(&self, key: &str, d: usize) -> bool {
        self.free.contains(key) && (1..=d).all(|i| self.under.get(i).is_some_and(|s| s.contains(key)))
    }

    fn anywhere(&self, key: &str) -> bool {
        self.free.contains(key) || self.under.iter().any(|s| s.contains(key))
    }
}

/// Injects tautologies so that every proposition of `props` occurs, every
/// head is `d`-omnipresent and every iteration proposition is too.
///
/// The injected conjunct for a symbol `x` is
/// `(x | !x) & (<1>x | !<1>x) & ... & (<d>x | !<d>x)`.
pub fn make_omnipresent(p: &Program, props: &PropositionSet, d: usize) -> Result<(Program, TranslationReport), CompileError> {
    if p.variant() != Variant::Mpmsc {
        return Err(CompileError::WrongVariant { expected: "mpmsc".into(), got: p.variant() });
    }
    let mut b = p.to_builder();
    let mut notes = vec![];
    let mentioned = p.props();
    if b.heads.is_empty() {
        return Err(CompileError::NoPlainClause);
    }
    let missing: Vec<String> = props.all().filter(|q| !mentioned.contains(*q)).cloned().collect();
    if !missing.is_empty() {
        let host = b.terminals[0].clone();
        b.terminals[0] = missing.iter().fold(host, |acc, q| and(acc, or(prop(q.clone()), not(prop(q.clone())))));
    }

    let mut occ = Occurrences::default();
    for r in p.rules() {
        for s in r.parts() {
            occ.scan(s, None);
        }
    }
    let tautology = |x: Schema| {
        and_all(
            std::iter::once(or(x.clone(), not(x.clone())))
                .chain((1..=d).map(|i| or(dia_i(i, x.clone()), not(dia_i(i, x.clone()))))),
        )
    };
    let mut inject = vec![];
    for h in p.heads() {
        if !occ.omnipresent(&format!("v:{h}"), d) {
            inject.push(tautology(var(h.clone())));
        }
    }
    for q in &mentioned {
        let key = format!("p:{q}");
        if occ.anywhere(&key) && !occ.omnipresent(&key, d) {
            inject.push(tautology(prop(q.clone())));
        }
    }
    if !inject.is_empty() {
        let host = p.rules().iter().position(|r| !r.is_conditional());
        match host {
            Some(i) => {
                let Rule::Plain(body) = &b.rules[i] else { unreachable!() };
                b.rules[i] = Rule::Plain(inject.iter().cloned().fold(body.clone(), and));
            }
            None => {
                let Rule::Cond { conds, conss, backup } = &b.rules[0] else { unreachable!() };
                let backup = inject.iter().cloned().fold(backup.clone(), and);
                b.rules[0] = Rule::Cond { conds: conds.clone(), conss: conss.clone(), backup };
                notes.push(format!("no plain clause; tautologies injected into the backup of `{}`", b.heads[0]));
            }
        }
    }
    let out = b.build()?;
    let mut report = program_report("make-omnipresent", p, &out, "none: strongly equivalent round by round");
    report.notes = notes;
    Ok((out, report))
}

/// Affine round correspondence: source round `n` is target round `offset + period * n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundMap {
    pub offset: usize,
    pub period: usize,
}

impl RoundMap {
    pub const IDENTITY: RoundMap = RoundMap { offset: 0, period: 1 };

    pub fn target(&self, n: usize) -> usize {
        self.offset + self.period * n
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: RoundMap) -> RoundMap {
        RoundMap { offset: self.target(first.offset), period: self.period * first.period }
    }
}

/// An MPC compiled from a plain program.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    pub mpc: Mpc,
    pub report: TranslationReport,
    pub rounds: RoundMap,
    /// State position of the source's first head.
    pub head_offset: usize,
}

/// Plain program to MPC: depth-one normal form, diamonds spread over all
/// `delta` indices, then the indexed translation.
pub fn msc_to_mpc(p: &Program, props: &PropositionSet, delta: usize) -> Result<CompiledCircuit, CompileError> {
    let nf = to_msc1(p)?;
    let mut b = nf.program.to_builder();
    b.variant = Variant::Mpmsc;
    let spread = |s: &Schema| {
        s.rewrite(&mut |x| match x {
            Schema::Dia(a) => or_all((1..=delta).map(|i| dia_i(i, (*a).clone()))),
            x => x,
        })
    };
    b.rules = b.rules.iter().map(|r| r.map(&mut |s| spread(s))).collect();
    b.terminals = b.terminals.iter().map(spread).collect();
    let indexed = b.build()?;
    let (mpc, inner) = mpmsc_to_mpc(&indexed, props, delta)?;
    let head_offset = mpc.k - indexed.head_count();
    let rounds = RoundMap { offset: nf.period * nf.shift, period: nf.period };
    let mut notes = nf.report.notes.clone();
    notes.extend(inner.notes);
    let m = p.metrics();
    let report = TranslationReport {
        translation: "msc-to-mpc".into(),
        source_size: m.size,
        target_size: mpc.circuit.size(),
        source_metrics: Some(m),
        target_metrics: None,
        time_dilation: format!("source round n is MPC round {} + {}n", rounds.offset, rounds.period),
        notes,
    };
    Ok(CompiledCircuit { mpc, report, rounds, head_offset })
}

/// A plain program compiled from an MPC.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub program: Program,
    pub report: TranslationReport,
    pub rounds: RoundMap,
    /// Heads holding the MPC state, in state order.
    pub state_heads: Vec<String>,
}

/// MPC to plain program: simulation by an indexed program, then the
/// identifier scan.
pub fn mpc_to_msc(mpc: &Mpc) -> Result<CompiledProgram, CompileError> {
    let (indexed, _) = mpc_to_mpmsc(mpc);
    let depth = mpc.circuit.depth().max(1);
    let bits = mpc.props.distinguished.clone();
    let e = eliminate_indexed_diamonds(&indexed, &bits)?;
    let (program, _) = cmsc_to_msc(&e.program);
    let inner = RoundMap { offset: depth, period: depth + 1 };
    let outer = RoundMap { offset: e.first_reset, period: e.cycle };
    let rounds = outer.after(inner);
    let state_heads = (1..=mpc.k).map(|i| format!("O{i}")).collect();
    let m = program.metrics();
    let report = TranslationReport {
        translation: "mpc-to-msc".into(),
        source_size: mpc.circuit.size(),
        target_size: m.size,
        source_metrics: None,
        target_metrics: Some(m),
        time_dilation: format!("MPC round n is target round {} + {}n", rounds.offset, rounds.period),
        notes: e.report.notes,
    };
    Ok(CompiledProgram { program, report, rounds, state_heads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::run;
    use crate::model::{graph_to_kripke, Graph, KripkeModel};
    use crate::syntax::parse_program;

    #[test]
    fn single_condition_flattens_to_the_base_case() {
        let p = parse_program("cmsc { X(0) := p; X :=[q] <>X; X; }").unwrap();
        let (m, _) = cmsc_to_msc(&p);
        let (phi, psi, chi) = (prop("q"), crate::syntax::dia(var("X")), var("X"));
        assert_eq!(m.rule(0), &Rule::Plain(or(and(phi.clone(), psi), and(not(phi), chi))));
        assert_eq!(m.variant(), Variant::Msc);
    }

    #[test]
    fn plain_rules_untouched() {
        let p = parse_program("cmsc { X(0) := p; X := <>X; }").unwrap();
        let (m, _) = cmsc_to_msc(&p);
        assert_eq!(m.rules(), p.rules());
    }

    #[test]
    fn omnipresence_is_idempotent_and_inert() {
        let p = parse_program("mpmsc { X(0) := p1; X :=[p1] <1>X; !X; Y(0) := T; Y := Y; }").unwrap();
        let props = PropositionSet::id_bits(2);
        let (q, _) = make_omnipresent(&p, &props, 2).unwrap();
        assert!(q.props().contains("p2"));
        let (r, _) = make_omnipresent(&q, &props, 2).unwrap();
        assert_eq!(q, r);
        let m: KripkeModel = graph_to_kripke(&Graph::path(3)).unwrap();
        let (a, b) = (run(&p, &m, 6).unwrap(), run(&q, &m, 6).unwrap());
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn all_conditional_program_hosts_in_a_backup() {
        let p = parse_program("mpmsc { X(0) := T; X :=[X] X; F; }").unwrap();
        let (q, rep) = make_omnipresent(&p, &PropositionSet::id_bits(1), 1).unwrap();
        assert_eq!(rep.notes.len(), 1);
        assert_eq!(q.head_count(), 1);
    }
}
