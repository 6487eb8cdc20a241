//! Runs the coloring program on random graphs, with the repaired rules and
//! with the rules as printed. Pass `printed` to sweep only the printed rules.

use msc::colevishkin::{check_coloring, direct_cv_oracle, generate_cv, program_orientation, run_cv, CvParams, Stage};
use msc::harness::{random_graph, seeded};
use rand::Rng;

fn sweep(printed: bool) -> (usize, usize) {
    let mut rng = seeded(7);
    let (mut failures, mut total) = (0, 0);
    for (max_n, delta, stage, cases) in [(16, 1, Stage::Final, 20), (16, 2, Stage::Final, 40), (40, 3, Stage::Three, 10), (64, 4, Stage::Seven, 3)] {
        for _ in 0..cases {
            let n = rng.gen_range(2..=max_n);
            let g = random_graph(n, delta, &mut rng);
            let mut params = CvParams::new(n, delta).unwrap();
            if printed {
                params = params.printed();
            }
            let run = run_cv(&generate_cv(&params, stage), &params, stage, &g).unwrap();
            let proper = check_coloring(&run.result, &g, params.palette(stage)).is_ok_and(|v| v.ok());
            let oriented = program_orientation(&run.trace, &params, &g) == direct_cv_oracle(&g, delta).unwrap().higher;
            total += 1;
            if !(proper && oriented && run.comm_rounds == params.expected_rounds(stage)) {
                failures += 1;
            }
        }
    }
    (failures, total)
}

fn main() {
    let only_printed = std::env::args().nth(1).is_some_and(|a| a == "printed");
    let modes: &[bool] = if only_printed { &[true] } else { &[false, true] };
    for &printed in modes {
        let (f, t) = sweep(printed);
        println!("{} rules: {f}/{t} runs failed", if printed { "printed" } else { "repaired" });
    }
}
