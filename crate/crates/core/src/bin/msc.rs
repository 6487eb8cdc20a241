use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use msc::circuit::{run_mpc, Mpc};
use msc::colevishkin::{check_coloring, generate_cv, run_cv, CvParams, Stage};
use msc::compile::{
    cmsc_to_msc, eliminate_indexed_diamonds, make_omnipresent, mpc_to_mpmsc, mpc_to_msc, mpmsc_to_mpc, msc_to_mpc,
    terminal_depth_zero, to_msc1, TranslationReport,
};
use msc::eval::{run, Trace};
use msc::harness::{run_suite, SuiteOptions, SUITES};
use msc::model::{Graph, KripkeModel, ModelFile, PropositionSet};
use msc::syntax::{parse_program, Program};

#[derive(Parser)]
#[command(name = "msc", version, about = "Run, translate and verify modal substitution calculus programs and message-passing circuits")]
struct Cli {
    /// Print every report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program on a model and dump the trace.
    RunProgram {
        program: PathBuf,
        model: PathBuf,
        #[arg(long, default_value_t = 16)]
        rounds: usize,
    },
    /// Run a message-passing circuit on a model and dump the trace.
    RunCircuit {
        circuit: PathBuf,
        model: PathBuf,
        #[arg(long, default_value_t = 16)]
        rounds: usize,
    },
    /// Translate a program or circuit.
    Translate(TranslateArgs),
    /// Print the coloring program for `n` nodes of degree at most `delta`.
    GenerateCv {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: usize,
        /// `7`, `3` or `final`.
        #[arg(long, default_value = "final")]
        stage: String,
        /// Use the rules exactly as printed, without the three repairs.
        #[arg(long)]
        printed: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate and run the coloring program on a graph file.
    RunCv {
        #[arg(long)]
        graph: PathBuf,
        /// Degree bound; the graph's maximum degree when omitted.
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long, default_value = "final")]
        stage: String,
        #[arg(long)]
        printed: bool,
    },
    /// Run a randomized verification suite (or `all`).
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        cases: usize,
        /// Random models per case.
        #[arg(long, default_value_t = 3)]
        models: usize,
        /// Corrupt every translated artifact; the suite should then fail.
        #[arg(long)]
        mutate: bool,
    },
    /// Size and depth measures of a program or circuit file.
    Stats { input: PathBuf },
}

#[derive(Args)]
struct TranslateArgs {
    /// `msc`, `cmsc`, `mpmsc` or `mpc`.
    #[arg(long)]
    from: String,
    /// `msc`, `mmsc`, `msc0`, `msc1`, `cmsc`, `mpmsc`, `omnipresent` or `mpc`.
    #[arg(long)]
    to: String,
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    delta: usize,
    /// Ordinary propositions, comma separated; inferred from the program when omitted.
    #[arg(long)]
    pi0: Option<String>,
    /// Identifier bits `p1..pN`; inferred from the program when omitted.
    #[arg(long)]
    id_bits: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Check(String),
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<KripkeModel, Failure> {
    let file: ModelFile = serde_json::from_str(&read(path)?)?;
    Ok(file.into_model()?)
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_mpc(path: &Path) -> Result<Mpc, Failure> {
    Mpc::parse(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn emit_trace(trace: &Trace, json: bool) {
    if json {
        print_json(&trace.dump_json());
        return;
    }
    print!("{}", trace.dump_text());
    for w in 0..trace.node_count() {
        match (trace.acceptance_round(w), trace.output(w)) {
            (Some(r), Some(o)) => println!("node {w}: output {} at round {r}", o.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>()),
            _ => println!("node {w}: no output"),
        }
    }
    println!("communication rounds: {}", trace.comm_rounds().len());
}

/// The proposition set for translating `p`: explicit flags, else the
/// program's `p<i>` symbols as identifier bits and the rest as ordinary.
fn infer_props(p: &Program, pi0: &Option<String>, id_bits: Option<usize>) -> Result<PropositionSet, Failure> {
    let used = p.props();
    let bit = |s: &str| s.strip_prefix('p').and_then(|d| d.parse::<usize>().ok()).filter(|&i| i >= 1);
    let bits = id_bits.unwrap_or_else(|| used.iter().filter_map(|s| bit(s)).max().unwrap_or(1));
    let ordinary = match pi0 {
        Some(s) => s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
        None => used.iter().filter(|s| bit(s).is_none_or(|i| i > bits)).cloned().collect(),
    };
    Ok(PropositionSet::new(ordinary, PropositionSet::id_bits(bits).distinguished)?)
}

fn translate(a: &TranslateArgs, json: bool) -> Outcome {
    let text = read(&a.input)?;
    let (artifact, report): (String, TranslationReport) = match (a.from.as_str(), a.to.as_str()) {
        ("mpc", to) => {
            let c = Mpc::parse(&text)?;
            match to {
                "mpmsc" => {
                    let (p, r) = mpc_to_mpmsc(&c);
                    (p.to_text(), r)
                }
                "msc" => {
                    let cp = mpc_to_msc(&c)?;
                    (cp.program.to_text(), cp.report)
                }
                _ => return Err(Failure::Usage(format!("no translation from mpc to {to}"))),
            }
        }
        (from, to) => {
            let p = parse_program(&text)?;
            if p.variant().keyword() != from {
                return Err(Failure::Usage(format!("input is a {} program, not {from}", p.variant())));
            }
            let props = || infer_props(&p, &a.pi0, a.id_bits);
            match (from, to) {
                ("cmsc", "msc") | ("mpmsc", "mmsc") => {
                    let (q, r) = cmsc_to_msc(&p);
                    (q.to_text(), r)
                }
                ("msc" | "cmsc", "msc0") => {
                    let nf = terminal_depth_zero(&p)?;
                    (nf.program.to_text(), nf.report)
                }
                ("msc" | "cmsc", "msc1") => {
                    let nf = to_msc1(&p)?;
                    (nf.program.to_text(), nf.report)
                }
                ("msc" | "cmsc", "mpc") => {
                    let cc = msc_to_mpc(&p, &props()?, a.delta)?;
                    (cc.mpc.to_text(), cc.report)
                }
                ("mpmsc", "omnipresent") => {
                    let (q, r) = make_omnipresent(&p, &props()?, a.delta)?;
                    (q.to_text(), r)
                }
                ("mpmsc", "cmsc") => {
                    let e = eliminate_indexed_diamonds(&p, &props()?.distinguished)?;
                    (e.program.to_text(), e.report)
                }
                ("mpmsc", "mpc") => {
                    let (c, r) = mpmsc_to_mpc(&p, &props()?, a.delta)?;
                    (c.to_text(), r)
                }
                _ => return Err(Failure::Usage(format!("no translation from {from} to {to}"))),
            }
        }
    };
    if let Some(out) = &a.output {
        fs::write(out, &artifact).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    }
    if json {
        let mut v = json!({ "report": report });
        if a.output.is_none() {
            v["artifact"] = json!(artifact);
        }
        print_json(&v);
    } else {
        if a.output.is_none() {
            println!("{artifact}");
        }
        print!("{}", report.to_text());
    }
    Ok(())
}

fn stage(s: &str) -> Result<Stage, Failure> {
    Stage::parse(s).ok_or_else(|| Failure::Usage(format!("unknown stage `{s}`; use 7, 3 or final")))
}

fn dispatch(cli: Cli) -> Outcome {
    let json = cli.json;
    match cli.command {
        Command::RunProgram { program, model, rounds } => {
            let (p, m) = (load_program(&program)?, load_model(&model)?);
            emit_trace(&run(&p, &m, rounds)?, json);
        }
        Command::RunCircuit { circuit, model, rounds } => {
            let (c, m) = (load_mpc(&circuit)?, load_model(&model)?);
            emit_trace(&run_mpc(&c, &m, rounds)?, json);
        }
        Command::Translate(a) => translate(&a, json)?,
        Command::GenerateCv { n, delta, stage: s, printed, output } => {
            let st = stage(&s)?;
            let mut params = CvParams::new(n, delta)?;
            if printed {
                params = params.printed();
            }
            let p = generate_cv(&params, st);
            let text = p.to_text();
            if let Some(out) = &output {
                fs::write(out, &text).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
            }
            let summary = json!({
                "n": n,
                "delta": delta,
                "stage": s,
                "heads": p.head_count(),
                "size": p.metrics().size,
                "palette": params.palette(st),
                "unpruned_palette": params.unpruned_palette(st),
                "expected_comm_rounds": params.expected_rounds(st),
            });
            if json {
                let mut v = summary;
                if output.is_none() {
                    v["program"] = json!(text);
                }
                print_json(&v);
            } else {
                if output.is_none() {
                    println!("{text}");
                }
                println!(
                    "heads {} size {} palette {} expected communication rounds {}",
                    p.head_count(),
                    p.metrics().size,
                    params.palette(st),
                    params.expected_rounds(st)
                );
            }
        }
        Command::RunCv { graph, delta, stage: s, printed } => {
            let st = stage(&s)?;
            let g: Graph = serde_json::from_str(&read(&graph)?)?;
            g.check()?;
            let delta = delta.unwrap_or_else(|| g.max_degree().max(1));
            let mut params = CvParams::new(g.n.max(2), delta)?;
            if printed {
                params = params.printed();
            }
            let p = generate_cv(&params, st);
            let r = run_cv(&p, &params, st, &g)?;
            let verdict = check_coloring(&r.result, &g, params.palette(st))?;
            let colors: Vec<Option<usize>> =
                r.result.colors.iter().map(|c| c.as_ref().and_then(|v| v.iter().position(|&b| b).map(|i| i + 1))).collect();
            let rounds_ok = r.comm_rounds == params.expected_rounds(st);
            if json {
                print_json(&json!({
                    "colors": colors,
                    "verdict": verdict,
                    "ok": verdict.ok(),
                    "comm_rounds": r.comm_rounds,
                    "expected_comm_rounds": params.expected_rounds(st),
                    "finish_round": r.finish_round,
                }));
            } else {
                for (v, c) in colors.iter().enumerate() {
                    match c {
                        Some(c) => println!("node {}: color {c}", v + 1),
                        None => println!("node {}: no color", v + 1),
                    }
                }
                println!(
                    "one-hot {} proper {} within palette {} ({} colors)",
                    verdict.one_hot,
                    verdict.proper,
                    verdict.within_palette,
                    params.palette(st)
                );
                let finish = r.finish_round.map_or("never".to_string(), |f| f.to_string());
                println!("communication rounds {} (expected {}), finished at round {finish}", r.comm_rounds, params.expected_rounds(st));
            }
            if !verdict.ok() || !rounds_ok {
                return Err(Failure::Check("coloring check failed".into()));
            }
        }
        Command::Verify { suite, seed, cases, models, mutate } => {
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let opts = SuiteOptions { seed, cases, models, mutate };
            let mut reports = vec![];
            for name in names {
                reports.push(run_suite(name, &opts)?);
            }
            if json {
                print_json(&json!({ "suites": reports, "ok": reports.iter().all(|r| r.ok()) }));
            } else {
                for r in &reports {
                    print!("{}", r.to_text());
                }
            }
            if !reports.iter().all(|r| r.ok()) {
                return Err(Failure::Check("verification failed".into()));
            }
        }
        Command::Stats { input } => {
            let text = read(&input)?;
            let v = match parse_program(&text) {
                Ok(p) => json!({ "kind": "program", "variant": p.variant().keyword(), "metrics": p.metrics() }),
                Err(pe) => match Mpc::parse(&text) {
                    Ok(c) => json!({
                        "kind": "circuit",
                        "gates": c.circuit.size(),
                        "depth": c.circuit.depth(),
                        "max_fanin": c.circuit.max_fanin(),
                        "inputs": c.circuit.inputs().len(),
                        "k": c.k,
                        "delta": c.delta,
                    }),
                    Err(ce) => return Err(Failure::Usage(format!("not a program ({pe}) nor a circuit ({ce})"))),
                },
            };
            if json {
                print_json(&v);
            } else if let Some(m) = v.get("metrics") {
                println!("{} program: {}", v["variant"].as_str().unwrap_or(""), m);
            } else {
                println!("circuit: {v}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
