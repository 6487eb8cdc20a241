//! Generates the coloring program and runs it on the hexagon.

use msc::colevishkin::{check_coloring, direct_cv_oracle, generate_cv, run_cv, CvParams, Stage};
use msc::model::Graph;

fn main() {
    let g = Graph::cycle(6);
    let params = CvParams::new(6, 2).unwrap();
    for stage in [Stage::Seven, Stage::Three, Stage::Final] {
        let program = generate_cv(&params, stage);
        let run = run_cv(&program, &params, stage, &g).unwrap();
        let verdict = check_coloring(&run.result, &g, params.palette(stage)).unwrap();
        println!(
            "{stage:?}: {} heads ({} color heads, {} before pruning), {} communication rounds (expected {}), proper {}, colors used {:?}",
            program.head_count(),
            params.palette(stage),
            params.unpruned_palette(stage),
            run.comm_rounds,
            params.expected_rounds(stage),
            verdict.ok(),
            verdict.palette_used
        );
    }
    let oracle = direct_cv_oracle(&g, 2).unwrap();
    println!("oracle colors {:?}, rounds {:?}", oracle.colors, oracle.rounds);
}
