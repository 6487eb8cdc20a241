//! Compiles a program to a circuit and back, checking each step on random models.

use msc::compile::{mpc_to_msc, msc_to_mpc};
use msc::harness::{check_equivalence, random_kripke, Artifact, EquivalenceKind, EquivalenceSpec};
use msc::syntax::parse_program;

fn main() {
    let p = parse_program("msc { X(0) := q1; Y(0) := F; X := <>X | X; Y := X & !Y; attention Y; print X, Y; }").unwrap();
    let models: Vec<_> = (0..5).map(|s| random_kripke(5, 1, 2, s).unwrap()).collect();
    let props = models[0].props().clone();

    let compiled = msc_to_mpc(&p, &props, 2).unwrap();
    println!("{}", compiled.report.to_text());
    let spec = EquivalenceSpec::new(EquivalenceKind::Acceptance, Some(compiled.rounds));
    let r = check_equivalence(Artifact::Program(&p), Artifact::Circuit(&compiled.mpc), &spec, &models).unwrap();
    println!("program vs circuit: {} comparisons, passed {}", r.comparisons, r.passed());

    let back = mpc_to_msc(&compiled.mpc).unwrap();
    println!("{}", back.report.to_text());
    let spec = EquivalenceSpec::new(EquivalenceKind::Acceptance, Some(back.rounds));
    let r = check_equivalence(Artifact::Circuit(&compiled.mpc), Artifact::Program(&back.program), &spec, &models).unwrap();
    println!("circuit vs program: {} comparisons, passed {}", r.comparisons, r.passed());
    if let Some(d) = &r.divergence {
        println!("  first divergence: {d:?}");
    }
}
