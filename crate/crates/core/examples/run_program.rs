//! Runs the reachability program from `data/` on the three-node path.

use msc::eval::run;
use msc::model::ModelFile;
use msc::syntax::parse_program;

fn main() {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let program = parse_program(&std::fs::read_to_string(format!("{data}/reach.msc")).unwrap()).unwrap();
    let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(format!("{data}/path3.model.json")).unwrap()).unwrap();
    let model = file.into_model().unwrap();
    let trace = run(&program, &model, 6).unwrap();
    print!("{}", trace.dump_text());
    for w in model.nodes() {
        println!("node {w}: accepts in round {:?} with output {:?}", trace.acceptance_round(w), trace.output(w));
    }
}
