//! Unfolds a head into its round-n formula and model-checks it against a run.

use msc::eval::{expand_iteration_formula, model_check, run};
use msc::harness::random_kripke;
use msc::syntax::{parse_program, print_schema};

fn main() {
    let p = parse_program("msc { X(0) := q1; Y(0) := F; X := <>X; Y := Y | X; attention Y; print Y; }").unwrap();
    let m = random_kripke(4, 1, 2, 11).unwrap();
    let t = run(&p, &m, 4).unwrap();
    for n in 0..=3 {
        let f = expand_iteration_formula(&p, "Y", n, 100_000).unwrap();
        let agrees = m.nodes().all(|w| model_check(&f, &m, w) == t.bit(n, w, "Y").unwrap());
        println!("Y^{n} = {}", print_schema(&f));
        println!("  agrees with the run at every node: {agrees}");
    }
}
