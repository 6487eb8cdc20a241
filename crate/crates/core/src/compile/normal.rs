//! Normal forms for plain programs: terminal depth zero and iteration depth one.

use std::collections::BTreeMap;

use super::{cmsc_to_msc, program_report, taken_names, CompileError, TranslationReport};
use crate::syntax::{bot, dia, schema_tag, top, var, Program, ProgramBuilder, Rule, Schema, Variant};

/// A translated program and its round correspondence: source round `n`
/// is target round `period * (n + shift)`.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub program: Program,
    pub report: TranslationReport,
    pub shift: usize,
    pub period: usize,
}

impl NormalForm {
    pub fn target_round(&self, n: usize) -> usize {
        self.period * (n + self.shift)
    }
}

fn require_plain(p: &Program) -> Result<Program, CompileError> {
    match p.variant() {
        Variant::Msc => Ok(p.clone()),
        Variant::Cmsc => Ok(cmsc_to_msc(p).0),
        got => Err(CompileError::WrongVariant { expected: "msc".into(), got }),
    }
}

/// Moves modal terminal clauses into the first iteration behind a flag head.
pub fn terminal_depth_zero(p: &Program) -> Result<NormalForm, CompileError> {
    let p = require_plain(p)?;
    if p.metrics().mdt == 0 {
        let report = program_report("terminal-depth-zero", &p, &p, "none: terminal clauses already have depth 0");
        return Ok(NormalForm { program: p, report, shift: 0, period: 1 });
    }
    let mut b = ProgramBuilder::new(Variant::Cmsc);
    let mut avoid = taken_names(&p.to_builder(), []);
    let flag = b.fresh("I", &avoid);
    avoid.insert(flag.clone());
    for (h, (t, r)) in p.heads().iter().zip(p.terminals().iter().zip(p.rules())) {
        let Rule::Plain(body) = r else { unreachable!("plain program") };
        b.head(h.clone(), bot(), Rule::cond(vec![var(flag.clone())], vec![body.clone()], t.clone()));
    }
    b.head(flag, bot(), Rule::Plain(top()));
    b.attention = p.attention_names();
    b.print = p.print_names();
    let (out, _) = cmsc_to_msc(&b.build()?);
    let report = program_report("terminal-depth-zero", &p, &out, "source round n is target round n + 1");
    Ok(NormalForm { program: out, report, shift: 1, period: 1 })
}

/// Iteration depth one, kept in conditional form: a cyclic clock of length
/// equal to the iteration depth lets each head take one diamond step per round.
pub fn to_msc1_conditional(p: &Program) -> Result<NormalForm, CompileError> {
    let base = terminal_depth_zero(p)?;
    let q = &base.program;
    let depth = q.metrics().mdi;
    if depth <= 1 {
        let report = program_report("to-msc1", &require_plain(p)?, q, dilation(1, base.shift));
        return Ok(NormalForm { program: q.clone(), report, shift: base.shift, period: 1 });
    }
    let mut b = ProgramBuilder::new(Variant::Cmsc);
    b.heads = q.heads().to_vec();
    b.terminals = q.terminals().to_vec();
    b.rules = q.rules().to_vec();
    b.attention = q.attention_names();
    b.print = q.print_names();
    let mut avoid = taken_names(&b, []);

    // Diamond subschemata below the full depth, shallowest first.
    let mut inner: BTreeMap<(usize, Schema), String> = BTreeMap::new();
    for r in q.rules() {
        for s in r.parts() {
            s.for_each(&mut |x| {
                if let Schema::Dia(_) = x {
                    let d = x.modal_depth();
                    if d < depth {
                        inner.entry((d, x.clone())).or_default();
                    }
                }
            });
        }
    }
    for ((_, x), name) in inner.iter_mut() {
        *name = b.fresh(&format!("X_{}", schema_tag(x)), &avoid);
        avoid.insert(name.clone());
    }
    let clock: Vec<String> = (1..=depth)
        .map(|i| {
            let n = b.fresh(&format!("T{i}"), &avoid);
            avoid.insert(n.clone());
            n
        })
        .collect();
    let by_schema: BTreeMap<Schema, String> = inner.iter().map(|((_, x), n)| (x.clone(), n.clone())).collect();

    // Replaces maximal shallow diamonds by their heads; a diamond of full
    // depth is kept with its body rewritten.
    fn replace(s: &Schema, heads: &BTreeMap<Schema, String>) -> Schema {
        if let Some(h) = heads.get(s) {
            return var(h.clone());
        }
        match s {
            Schema::Top | Schema::Prop(_) | Schema::Var(_) => s.clone(),
            Schema::Not(a) => crate::syntax::not(replace(a, heads)),
            Schema::Dia(a) => dia(replace(a, heads)),
            Schema::DiaI(i, a) => Schema::DiaI(*i, Box::new(replace(a, heads))),
            Schema::And(a, c) => crate::syntax::and(replace(a, heads), replace(c, heads)),
        }
    }

    for (h, r) in q.heads().iter().zip(q.rules()) {
        let Rule::Plain(body) = r else { unreachable!("plain program") };
        let me = var(h.clone());
        b.set_rule(h, Rule::cond(vec![var(clock[depth - 1].clone())], vec![replace(body, &by_schema)], me));
    }
    for ((d, x), name) in &inner {
        let Schema::Dia(body) = x else { unreachable!() };
        let step = dia(replace(body, &by_schema));
        b.head(name.clone(), bot(), Rule::cond(vec![var(clock[d - 1].clone())], vec![step], var(name.clone())));
    }
    for i in 0..depth {
        let prev = if i == 0 { depth - 1 } else { i - 1 };
        b.head(clock[i].clone(), if i == 0 { top() } else { bot() }, Rule::Plain(var(clock[prev].clone())));
    }
    let out = b.build()?;
    let report = program_report("to-msc1", &require_plain(p)?, &out, dilation(depth, base.shift));
    Ok(NormalForm { program: out, report, shift: base.shift, period: depth })
}

fn dilation(period: usize, shift: usize) -> String {
    match (period, shift) {
        (1, 0) => "none: strongly equivalent round by round".into(),
        (1, s) => format!("source round n is target round n + {s}"),
        (d, 0) => format!("source round n is target round {d}n"),
        (d, s) => format!("source round n is target round {d}(n + {s})"),
    }
}

/// Iteration depth one as a plain program.
pub fn to_msc1(p: &Program) -> Result<NormalForm, CompileError> {
    let mut nf = to_msc1_conditional(p)?;
    if nf.program.variant() == Variant::Cmsc {
        nf.program = cmsc_to_msc(&nf.program).0;
        nf.report.target_size = nf.program.metrics().size;
        nf.report.target_metrics = Some(nf.program.metrics());
    }
    Ok(nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::run;
    use crate::model::{graph_to_kripke, Graph};
    use crate::syntax::parse_program;

    fn agrees(p: &Program, nf: &NormalForm, rounds: usize) {
        let m = graph_to_kripke(&Graph::path(5)).unwrap();
        let a = run(p, &m, rounds).unwrap();
        let b = run(&nf.program, &m, nf.target_round(rounds)).unwrap();
        let k = p.head_count();
        for n in 0..=rounds {
            for w in 0..5 {
                assert_eq!(&b.state(nf.target_round(n), w)[..k], a.state(n, w), "round {n} node {w}");
            }
        }
    }

    #[test]
    fn modal_terminal_moves_into_the_rules() {
        let p = parse_program("msc { X(0) := <>p1; X := <>X; }").unwrap();
        let nf = terminal_depth_zero(&p).unwrap();
        assert_eq!(nf.shift, 1);
        assert_eq!(nf.program.metrics().mdt, 0);
        agrees(&p, &nf, 4);
    }

    #[test]
    fn deep_iteration_becomes_depth_one() {
        let p = parse_program("msc { X(0) := p1; X := <><>(<><>X & <>X); }").unwrap();
        let nf = to_msc1(&p).unwrap();
        assert_eq!(nf.program.metrics().mdi, 1);
        assert_eq!(nf.period, p.metrics().mdi);
        agrees(&p, &nf, 3);
    }
}
