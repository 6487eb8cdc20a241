//! Removing indexed diamonds by scanning neighbour identifiers.

use std::collections::BTreeMap;

use super::clock::DiamondSimulator;
use super::{prepend_condition, program_report, taken_names, CompileError, TranslationReport};
use crate::syntax::{and, not, schema_tag, var, Program, ProgramBuilder, Rule, Schema, Variant};

/// Which rounds of a scan may overwrite a diamond head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanGuard {
    /// Every round until the neighbour flag is raised.
    AsPrinted,
    /// Only the first round of each minute block. Without it a missing
    /// neighbour after one with identifier `1...1` leaves a stale value.
    #[default]
    BlockStart,
}

#[derive(Debug, Clone)]
pub struct Elimination {
    pub program: Program,
    pub report: TranslationReport,
    pub simulator: DiamondSimulator,
    /// Diamond heads keyed by the index and body they replace.
    pub diamond_heads: BTreeMap<(usize, Schema), String>,
    pub first_reset: usize,
    pub cycle: usize,
}

impl Elimination {
    /// Target round that holds source round `n`.
    pub fn target_round(&self, n: usize) -> usize {
        self.first_reset + n * self.cycle
    }
}

pub fn eliminate_indexed_diamonds(p: &Program, id_bits: &[String]) -> Result<Elimination, CompileError> {
    eliminate_indexed_diamonds_with(p, id_bits, ScanGuard::default())
}

/// Turns an MPMSC program into a conditional program without indexed
/// diamonds; `id_bits` are the identifier propositions, least significant first.
pub fn eliminate_indexed_diamonds_with(p: &Program, id_bits: &[String], guard: ScanGuard) -> Result<Elimination, CompileError> {
    if p.variant() != Variant::Mpmsc {
        return Err(CompileError::WrongVariant { expected: "mpmsc".into(), got: p.variant() });
    }
    if id_bits.is_empty() {
        return Err(CompileError::NoIdentifierBits);
    }
    let ell = id_bits.len();
    let max_index = p.metrics().max_diamond_index;
    let src = p.to_builder();
    let mut b = ProgramBuilder::new(Variant::Cmsc);
    b.heads = src.heads.clone();
    b.terminals = src.terminals.clone();
    b.rules = src.rules.clone();
    b.attention = src.attention.clone();
    b.print = src.print.clone();
    let mut avoid = taken_names(&b, id_bits.iter().cloned());
    let sim = DiamondSimulator::add(&mut b, id_bits, max_index, &mut avoid);

    let mut diamonds: BTreeMap<(usize, Schema), String> = BTreeMap::new();
    for r in p.rules() {
        for s in r.parts() {
            s.for_each(&mut |x| {
                if let Schema::DiaI(i, body) = x {
                    diamonds.entry((*i, (**body).clone())).or_default();
                }
            });
        }
    }
    for ((i, body), name) in diamonds.iter_mut() {
        let fresh = b.fresh(&format!("X_{i}_{}", schema_tag(body)), &avoid);
        avoid.insert(fresh.clone());
        let cond = match guard {
            ScanGuard::AsPrinted => not(sim.n(*i)),
            ScanGuard::BlockStart => and(not(sim.n(*i)), sim.not_same()),
        };
        let rule = Rule::cond(vec![cond], vec![sim.diamond(*i, body.clone())], var(fresh.clone()));
        b.head(fresh.clone(), crate::syntax::bot(), rule);
        *name = fresh;
    }

    let replace = |s: &Schema| {
        s.rewrite(&mut |x| match &x {
            Schema::DiaI(i, body) => var(diamonds[&(*i, (**body).clone())].clone()),
            _ => x,
        })
    };
    for (h, r) in p.heads().iter().zip(p.rules()) {
        let r = r.map(&mut |s| replace(s));
        let me = var(h.clone());
        let new = match r {
            Rule::Plain(body) => Rule::cond(vec![sim.reset()], vec![body], me),
            cond => prepend_condition(&cond, not(sim.reset()), me),
        };
        b.set_rule(h, new);
    }

    let out = b.build()?;
    let first_reset = DiamondSimulator::first_reset(ell);
    let cycle = DiamondSimulator::cycle(ell);
    let mut report = program_report(
        "eliminate-indexed-diamonds",
        p,
        &out,
        format!("source round n is target round {first_reset} + {cycle}n"),
    );
    if guard == ScanGuard::AsPrinted {
        report.notes.push("scan guard as printed: diamond heads are rewritten on every round of a block".into());
    }
    Ok(Elimination { program: out, report, simulator: sim, diamond_heads: diamonds, first_reset, cycle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::run;
    use crate::model::{graph_to_kripke, Graph};
    use crate::syntax::parse_program;

    #[test]
    fn path_neighbour_values_survive() {
        // Each node learns whether its second neighbour holds p1.
        let p = parse_program("mpmsc { X(0) := p1; Y(0) := F; X := X; Y := <2>X | Y; }").unwrap();
        let m = graph_to_kripke(&Graph::path(4)).unwrap();
        let bits: Vec<String> = m.props().distinguished.clone();
        let e = eliminate_indexed_diamonds(&p, &bits).unwrap();
        let src = run(&p, &m, 3).unwrap();
        let dst = run(&e.program, &m, e.target_round(3)).unwrap();
        for n in 0..=3 {
            for w in 0..4 {
                assert_eq!(&dst.state(e.target_round(n), w)[..2], src.state(n, w), "round {n} node {w}");
            }
        }
    }

    #[test]
    fn rejects_non_indexed_program() {
        let p = parse_program("msc { X(0) := p; X := <>X; }").unwrap();
        assert!(matches!(
            eliminate_indexed_diamonds(&p, &["p1".into()]),
            Err(CompileError::WrongVariant { .. })
        ));
    }
}
