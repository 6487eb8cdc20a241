use std::process::Command;

use msc::circuit::{run_mpc, Circuit, Mpc};
use msc::colevishkin::{check_coloring, direct_cv_oracle, generate_cv, log_star, run_cv, CvParams, Stage};
use msc::compile::{
    build_clock, build_diamond_simulator, eliminate_indexed_diamonds, mpc_to_msc, msc_to_mpc, terminal_depth_zero, to_msc1,
    DiamondSimulator,
};
use msc::eval::run;
use msc::harness::{random_graph, random_kripke, seeded};
use msc::model::{graph_to_kripke, Graph, KripkeModel, PropositionSet};
use msc::syntax::parse_program;

fn lone_node() -> KripkeModel {
    KripkeModel::new(PropositionSet::default(), 1, &[], &[vec![]]).unwrap()
}

#[test]
fn second_hand_is_zeros_then_ones() {
    let (p, c) = build_clock(4, 0);
    let t = run(&p, &lone_node(), 3 * 16 * 2).unwrap();
    for r in 0..t.rounds() {
        let s: String = c.second.iter().rev().map(|n| if t.bit(r, 0, n).unwrap() { '1' } else { '0' }).collect();
        assert!(!s.contains("10"), "round {r}: {s}");
    }
}

#[test]
fn reset_fires_once_per_cycle() {
    let bits = PropositionSet::id_bits(3);
    let (p, sim) = build_diamond_simulator(&bits.distinguished, 2);
    let m = KripkeModel::new(bits, 1, &[], &[vec![]]).unwrap();
    let cyc = DiamondSimulator::cycle(3);
    let first = DiamondSimulator::first_reset(3);
    let t = run(&p, &m, first + 2 * cyc).unwrap();
    let resets: Vec<usize> = (0..t.rounds()).filter(|&r| t.bit(r, 0, &sim.reset).unwrap()).collect();
    assert_eq!(resets, [first, first + cyc, first + 2 * cyc]);
    // no neighbours, so no scan flag is ever raised
    for r in 0..t.rounds() {
        assert!(sim.found.iter().all(|n| !t.bit(r, 0, n).unwrap()));
    }
}

#[test]
fn first_neighbour_diamond_after_one_scan() {
    let p = parse_program("mpmsc { X(0) := F; X := <1>q; attention X; print X; }").unwrap();
    let props = PropositionSet::new(vec!["q".into()], vec!["p1".into(), "p2".into()]).unwrap();
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    // node 0 (id 01) points at node 1 (id 10), which holds q
    let m = KripkeModel::new(props, 2, &[(0, 1)], &[names(&["p1"]), names(&["q", "p2"])]).unwrap();
    let e = eliminate_indexed_diamonds(&p, &m.props().distinguished).unwrap();
    let t = run(&e.program, &m, e.target_round(2)).unwrap();
    let x = |r: usize| t.bit(r, 0, "X").unwrap();
    assert!((0..=e.first_reset).all(|r| !x(r)));
    assert!(x(e.target_round(1)));
    assert_eq!((0..t.rounds()).find(|&r| x(r)), Some(e.first_reset + 1));
}

#[test]
fn diamond_free_program_keeps_its_values_under_elimination() {
    let p = parse_program("mpmsc { X(0) := p1; Y(0) := F; X := !X; Y := X | Y; }").unwrap();
    let m = graph_to_kripke(&Graph::path(3)).unwrap();
    let e = eliminate_indexed_diamonds(&p, &m.props().distinguished).unwrap();
    let src = run(&p, &m, 3).unwrap();
    let dst = run(&e.program, &m, e.target_round(3)).unwrap();
    for n in 0..=3 {
        for w in 0..3 {
            assert_eq!(&dst.state(e.target_round(n), w)[..2], src.state(n, w));
        }
    }
}

#[test]
fn modal_terminal_costs_one_round() {
    let p = parse_program("msc { X(0) := <>p1; X := X; attention X; print X; }").unwrap();
    let nf = terminal_depth_zero(&p).unwrap();
    let m = graph_to_kripke(&Graph::path(4)).unwrap();
    let a = run(&p, &m, 5).unwrap();
    let b = run(&nf.program, &m, 6).unwrap();
    let x = nf.program.head_index("X").unwrap();
    for n in 0..=5 {
        for w in 0..4 {
            assert_eq!(b.state(n + 1, w)[x], a.state(n, w)[0]);
        }
    }
    for w in 0..4 {
        assert_eq!(b.acceptance_round(w), a.acceptance_round(w).map(|r| r + 1));
    }
}

#[test]
fn depth_zero_terminals_are_left_alone() {
    let p = parse_program("msc { X(0) := p1; X := <>X; }").unwrap();
    let nf = terminal_depth_zero(&p).unwrap();
    assert_eq!(nf.program, p);
    assert_eq!(nf.shift, 0);
}

#[test]
fn normal_form_of_the_nested_example() {
    let p = parse_program("msc { X(0) := p; X := <><>(<><>X & <>X); }").unwrap();
    assert_eq!(p.metrics().mdi, 4);
    let nf = to_msc1(&p).unwrap();
    let fresh: Vec<&String> = nf.program.heads().iter().filter(|h| h.starts_with("X_")).collect();
    assert_eq!(fresh, ["X_DX", "X_DDX", "X_DDDXaDX"]);
    let text = nf.program.to_text();
    for clause in ["X_DX := (T1 & <>X)", "X_DDX := (T2 & <>X_DX)", "X_DDDXaDX := (T3 & <>(X_DDX & X_DX))", "X := (T4 & <>X_DDDXaDX)"] {
        assert!(text.contains(clause), "missing {clause} in\n{text}");
    }
    let m = nf.program.metrics();
    assert_eq!((m.mdi, m.mdt), (1, 0));
}

#[test]
fn spread_diamond_tests_out_degree() {
    let p = parse_program("msc { X(0) := <>T; X := <>T; attention X; print X; }").unwrap();
    let m = random_kripke(6, 0, 2, 3).unwrap();
    let c = msc_to_mpc(&p, m.props(), 2).unwrap();
    let t = run_mpc(&c.mpc, &m, 4).unwrap();
    for w in m.nodes() {
        let accepts = t.acceptance_round(w).is_some();
        assert_eq!(accepts, m.out_degree(w) >= 1, "node {w}");
    }
}

fn always_accepting(props: PropositionSet) -> Mpc {
    let mut c = Circuit::new();
    for _ in 0..props.len() + 3 {
        c.input();
    }
    let one = c.constant(true);
    c.set_outputs(vec![one]);
    Mpc::new(c, props, 2, 1, vec![0], vec![0]).unwrap()
}

#[test]
fn always_accepting_circuit_compiles_to_an_accepting_program() {
    let m = graph_to_kripke(&Graph::path(3)).unwrap();
    let mpc = always_accepting(m.props().clone());
    let cp = mpc_to_msc(&mpc).unwrap();
    let t = run(&cp.program, &m, cp.rounds.target(1)).unwrap();
    for w in 0..3 {
        assert!(t.acceptance_round(w).is_some());
        assert_eq!(t.output(w), Some(vec![true]));
    }

    // and back to a circuit
    let back = msc_to_mpc(&cp.program, m.props(), 2).unwrap();
    let u = run_mpc(&back.mpc, &m, back.rounds.target(cp.rounds.target(0))).unwrap();
    for w in 0..3 {
        assert_eq!(u.output(w), Some(vec![true]));
    }
}

#[test]
fn shift_down_rounds() {
    for (g, delta) in [(Graph::path(2), 1), (Graph::cycle(6), 2), (Graph::path(16), 2)] {
        let params = CvParams::new(g.n, delta).unwrap();
        let r = run_cv(&generate_cv(&params, Stage::Three), &params, Stage::Three, &g).unwrap();
        assert_eq!(r.comm_rounds, log_star(g.n as u64) + 12);
    }
}

#[test]
fn higher_identifier_is_the_root_on_an_edge() {
    let o = direct_cv_oracle(&Graph::path(2), 1).unwrap();
    assert_eq!(o.parents[0], [Some(1), None]);
    assert_eq!(o.higher, [vec![true], vec![false]]);
    let mut colors = o.colors.clone();
    colors.sort();
    assert_eq!(colors, [1, 2]);
}

#[test]
fn oracle_colorings_are_proper() {
    let mut rng = seeded(99);
    for case in 0..100 {
        let delta = 1 + case % 4;
        let n = 2 + (case * 7) % 63;
        let g = random_graph(n, delta, &mut rng);
        let o = direct_cv_oracle(&g, delta).unwrap();
        let r = msc::colevishkin::ColoringResult::from_colors(&o.colors, delta + 1);
        assert!(check_coloring(&r, &g, delta + 1).unwrap().ok(), "case {case}");
    }
}

#[test]
fn random_models_validate() {
    let one = random_kripke(1, 0, 0, 5).unwrap();
    assert_eq!(one.node_count(), 1);
    assert!(one.edges().is_empty());
    for seed in 0..10 {
        random_kripke(5, 1, 2, seed).unwrap().validate(2).unwrap();
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_msc")).args(args).current_dir(env!("CARGO_MANIFEST_DIR")).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn cli_runs_a_program() {
    let (code, out) = cli(&["run-program", "data/reach.msc", "data/path3.model.json", "--rounds", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("round 4"));
}

#[test]
fn cli_translates_to_a_netlist() {
    let dir = std::env::temp_dir().join(format!("msc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let target = dir.join("relay.netlist");
    let (code, out) = cli(&["translate", "--from", "mpmsc", "--to", "mpc", "data/relay.mpmsc", "--delta", "2", "-o", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("mpmsc-to-mpc"));
    let mpc = Mpc::parse(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(mpc.delta, 2);
}

#[test]
fn cli_verify_detects_mutation() {
    assert_eq!(cli(&["verify", "--suite", "msc1", "--cases", "5"]).0, 0);
    assert_eq!(cli(&["verify", "--suite", "msc1", "--cases", "5", "--mutate"]).0, 1);
    assert_eq!(cli(&["verify", "--suite", "no-such-suite"]).0, 2);
}
