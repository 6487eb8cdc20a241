//! Acceptance criteria, one verdict line each. Runs without the libtest
//! harness so the lines always reach the test log.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use msc::circuit::Circuit;
use msc::colevishkin::{generate_cv, log_star, run_cv, CvParams, Stage};
use msc::compile::{build_clock, build_diamond_simulator, combine_two_circuits};
use msc::eval::{run, Trace};
use msc::harness::{run_suite, scaling_reports, SuiteOptions, SuiteReport};
use msc::model::{Graph, KripkeModel, PropositionSet};

#[derive(Debug, Clone, PartialEq)]
enum Verdict {
    Pass,
    /// A failure explained by a recorded decision.
    Documented(String),
    Fail(String),
}

struct Outcome {
    verdict: Verdict,
    detail: String,
    budget: Duration,
}

fn pass(detail: impl Into<String>, budget: Duration) -> Outcome {
    Outcome { verdict: Verdict::Pass, detail: detail.into(), budget }
}

fn fail(why: impl Into<String>, detail: impl Into<String>, budget: Duration) -> Outcome {
    Outcome { verdict: Verdict::Fail(why.into()), detail: detail.into(), budget }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn hand(t: &Trace, round: usize, names: &[String]) -> String {
    names.iter().rev().map(|n| if t.bit(round, 0, n).unwrap() { '1' } else { '0' }).collect()
}

fn suite(name: &str, cases: usize, models: usize) -> SuiteReport {
    run_suite(name, &SuiteOptions { seed: 2024, cases, models, mutate: false }).expect("suite names are valid")
}

// 1. configurations agree with the expanded iteration formulas
fn semantics() -> Outcome {
    let r = suite("semantics", 60, 10);
    let c = &r.checks[0];
    let detail = format!("{}/{} programs x 10 models, rounds 0..4", c.cases - c.failures, c.cases);
    match &c.first_failure {
        None => pass(detail, secs(30)),
        Some(f) => fail(format!("case {}: {}", f.case, f.detail), detail, secs(30)),
    }
}

// 2. the four-bit clock table
fn clock_golden() -> Outcome {
    const ROWS: [(&str, &str, char); 11] = [
        ("0000", "0000", '0'),
        ("0001", "0000", '1'),
        ("0001", "0001", '1'),
        ("0001", "0001", '0'),
        ("0010", "0000", '1'),
        ("0010", "0000", '0'),
        ("0011", "0000", '1'),
        ("0011", "0001", '1'),
        ("0011", "0011", '1'),
        ("0011", "0011", '0'),
        ("0100", "0000", '1'),
    ];
    // the block of minute 0111 and the first row of 1000
    const TAIL: [(&str, &str, char); 6] = [
        ("0111", "0000", '1'),
        ("0111", "0001", '1'),
        ("0111", "0011", '1'),
        ("0111", "0111", '1'),
        ("0111", "0111", '0'),
        ("1000", "0000", '1'),
    ];
    let (p, c) = build_clock(4, 0);
    let m = KripkeModel::new(PropositionSet::default(), 1, &[], &[vec![]]).unwrap();
    let t = run(&p, &m, 200).unwrap();
    let row = |r: usize| (hand(&t, r, &c.minute), hand(&t, r, &c.second), if t.bit(r, 0, &c.changing).unwrap() { '1' } else { '0' });
    let budget = secs(1);
    for (r, want) in ROWS.iter().enumerate() {
        let got = row(r);
        if (got.0.as_str(), got.1.as_str(), got.2) != *want {
            return fail(format!("round {r}: got {got:?}, table has {want:?}"), "", budget);
        }
    }
    let Some(k) = (1..200).find(|&r| row(r).0 == "0111") else {
        return fail("minute 0111 never appears", "", budget);
    };
    for (i, want) in TAIL.iter().enumerate() {
        let got = row(k + i);
        if (got.0.as_str(), got.1.as_str(), got.2) != *want {
            return fail(format!("round k+{i} (k = {k}): got {got:?}, table has {want:?}"), "", budget);
        }
    }
    let mut blocks: Vec<String> = vec![];
    for r in 1..200 {
        let mh = row(r).0;
        if blocks.last() != Some(&mh) {
            blocks.push(mh);
        }
    }
    let expected: Vec<String> = (1..=17).map(|v: u32| format!("{:04b}", v % 16)).collect();
    if blocks[..17] != expected[..] {
        return fail(format!("minute hand sequence {:?}", &blocks[..17]), "", budget);
    }
    pass(format!("rounds 0-10 and k..k+5 (k = {k}) match; minute hand runs 0001..1111, 0000, 0001"), budget)
}

// 3. the three-neighbour identifier scan
fn diamond_golden() -> Outcome {
    // round, basic minute, forward minute, reset, not-same, N1 N2 N3
    const ROWS: [(usize, &str, &str, char, char, &str); 17] = [
        (0, "000", "001", '0', '1', "000"),
        (1, "001", "001", '0', '1', "100"),
        (2, "001", "001", '0', '0', "100"),
        (3, "001", "010", '0', '0', "100"),
        (4, "010", "010", '0', '1', "100"),
        (5, "010", "011", '0', '0', "110"),
        (6, "011", "011", '0', '1', "110"),
        (16, "110", "111", '0', '0', "110"),
        (17, "111", "111", '0', '1', "110"),
        (18, "111", "111", '0', '0', "111"),
        (19, "111", "111", '0', '0', "111"),
        (20, "111", "111", '0', '0', "111"),
        (21, "111", "000", '1', '0', "111"),
        (22, "000", "000", '0', '1', "000"),
        (23, "000", "001", '0', '0', "100"),
        (24, "001", "001", '0', '1', "100"),
        (25, "001", "001", '0', '0', "100"),
    ];
    let budget = secs(1);
    let bits = PropositionSet::id_bits(3);
    let (p, sim) = build_diamond_simulator(&bits.distinguished, 3);
    let named = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    // node 0 has identifier 100; its neighbours are 000, 010 and 111
    let tp = vec![named(&["p3"]), named(&[]), named(&["p2"]), named(&["p1", "p2", "p3"])];
    let m = KripkeModel::new(bits, 4, &[(0, 1), (0, 2), (0, 3)], &tp).unwrap();
    let t = run(&p, &m, 30).unwrap();
    let b = |r: usize, n: &str| if t.bit(r, 0, n).unwrap() { '1' } else { '0' };
    for &(r, mh, fh, reset, ns, found) in &ROWS {
        let got_found: String = sim.found.iter().map(|n| b(r, n)).collect();
        let got = (hand(&t, r, &sim.basic.minute), hand(&t, r, &sim.forward.minute), b(r, &sim.reset), b(r, &sim.not_same), got_found);
        if (got.0.as_str(), got.1.as_str(), got.2, got.3, got.4.as_str()) != (mh, fh, reset, ns, found) {
            return fail(format!("round {r}: got {got:?}, table has {:?}", (mh, fh, reset, ns, found)), "", budget);
        }
    }
    let first = |n: &str| (0..=30).find(|&r| t.bit(r, 0, n).unwrap());
    let act: Vec<Option<usize>> = sim.found.iter().map(|n| first(n)).collect();
    let reset = first(&sim.reset);
    if act != [Some(1), Some(5), Some(18)] || reset != Some(21) {
        return fail(format!("activation rounds {act:?}, reset {reset:?}"), "", budget);
    }
    pass("N1/N2/N3 rise at rounds 1, 5, 18 = k+2 (k = 16); reset at 21; rows 0-6 and k..k+9 match", budget)
}

// 4. the translations on random instances
fn translations() -> Outcome {
    let budget = secs(300);
    let mut lines = vec![];
    let mut undocumented = vec![];
    let mut documented = vec![];
    for name in ["cmsc-msc", "omnipresent", "mpmsc-mpc", "mpc-mpmsc", "terminal-zero", "msc1", "eliminate", "msc-mpc", "mpc-msc"] {
        let r = suite(name, 30, 3);
        for c in &r.checks {
            let v = if c.passed() { "ok" } else if c.known_deviation.is_some() { "FAIL, documented" } else { "FAIL" };
            lines.push(format!("    {name}: {} {}/{} {v}", c.name, c.cases - c.failures, c.cases));
            if !c.passed() {
                let f = c.first_failure.as_ref().map_or(String::new(), |f| format!(" (case {}: {})", f.case, f.detail));
                match &c.known_deviation {
                    Some(why) => documented.push(format!("{name} {}: {why}{f}", c.name)),
                    None => undocumented.push(format!("{name} {}{f}", c.name)),
                }
            }
        }
    }
    let detail = format!("30 cases per check, 3 models each\n{}", lines.join("\n"));
    if !undocumented.is_empty() {
        fail(undocumented.join("; "), detail, budget)
    } else if !documented.is_empty() {
        Outcome { verdict: Verdict::Documented(documented.join("; ")), detail, budget }
    } else {
        pass(detail, budget)
    }
}

// 5. the two-circuit multiplexer, exhaustively
fn combine() -> Outcome {
    let budget = secs(1);
    let f0 = |x: &[bool]| vec![x[0] && x[1], !x[2] || x[0]];
    let f1 = |x: &[bool]| vec![(x[0] || x[3]) && !x[4], x[1] && x[2] || x[4]];
    let mut c0 = Circuit::new();
    let i0: Vec<usize> = (0..3).map(|_| c0.input()).collect();
    let a = c0.and(vec![i0[0], i0[1]]);
    let n2 = c0.not(i0[2]);
    let b = c0.or(vec![n2, i0[0]]);
    c0.set_outputs(vec![a, b]);
    let mut c1 = Circuit::new();
    let i1: Vec<usize> = (0..5).map(|_| c1.input()).collect();
    let o = c1.or(vec![i1[0], i1[3]]);
    let n4 = c1.not(i1[4]);
    let a1 = c1.and(vec![o, n4]);
    let m = c1.and(vec![i1[1], i1[2]]);
    let b1 = c1.or(vec![m, i1[4]]);
    c1.set_outputs(vec![a1, b1]);
    let c = combine_two_circuits(&c0, &c1).unwrap();
    if c.inputs().len() != 9 || c.outputs().len() != 3 {
        return fail(format!("{} inputs and {} outputs", c.inputs().len(), c.outputs().len()), "", budget);
    }
    for v in 0u32..512 {
        let s: Vec<bool> = (0..9).map(|i| v >> i & 1 == 1).collect();
        let out = c.eval(&s).unwrap();
        let mut want = vec![true];
        want.extend(if s[3] { f1(&s[4..]) } else { f0(&s[..3]) });
        if out != want || c0.eval(&s[..3]).unwrap() != f0(&s[..3]) || c1.eval(&s[4..]).unwrap() != f1(&s[4..]) {
            return fail(format!("input {v:09b}: got {out:?}, want {want:?}"), "", budget);
        }
    }
    pass("all 512 inputs: first bit 1, then C0(s0) when b = 0 and C1(s1) when b = 1", budget)
}

// 6. communication-round counts of the colouring programs
fn cv_counts() -> Outcome {
    let budget = secs(120 * 6);
    let mut lines = vec![];
    let mut bad = vec![];
    for n in [4usize, 8, 16] {
        let params = CvParams::new(n, 2).unwrap();
        let ls = log_star(n as u64);
        for (stage, want) in [(Stage::Seven, ls + 4), (Stage::Final, ls + 9 - 2 + 11)] {
            assert_eq!(params.expected_rounds(stage), want);
            let program = generate_cv(&params, stage);
            for (label, g) in [("cycle", Graph::cycle(n)), ("path", Graph::path(n))] {
                let r = run_cv(&program, &params, stage, &g).unwrap();
                lines.push(format!("    n {n:>2} {label:<5} {stage:?}: {} rounds (log* {ls}, expected {want})", r.comm_rounds));
                if r.comm_rounds != want {
                    bad.push(format!("n {n} {label} {stage:?}: {} != {want}", r.comm_rounds));
                }
            }
        }
    }
    let detail = lines.join("\n");
    if bad.is_empty() {
        pass(format!("cv7 = log* n + 4 and full = log* n + 3^2 - 2 + 11\n{detail}"), budget)
    } else {
        fail(bad.join("; "), detail, budget)
    }
}

// 7. the full program colours random graphs properly
fn coloring() -> Outcome {
    let budget = secs(300);
    let r = suite("coloring", 25, 1);
    let c = &r.checks[0];
    let detail = format!("6-cycle and {} random graphs with n <= 16, degree <= 2: {}/{} one-hot, proper, oracle orientation", c.cases - 1, c.cases - c.failures, c.cases);
    match &c.first_failure {
        None => pass(detail, budget),
        Some(f) => fail(format!("case {}: {}", f.case, f.detail), detail, budget),
    }
}

// 8. size ratios
fn scaling() -> Outcome {
    let budget = secs(60);
    let reports = scaling_reports(2024);
    let mut lines = vec![];
    let mut bad = vec![];
    for r in &reports {
        lines.push(format!("    {}: max ratio {:.2} <= {:.1}", r.translation, r.max_ratio, r.bound));
        if !r.within_bound() {
            bad.push(format!("{} ratio {:.2} above {:.1}", r.translation, r.max_ratio, r.bound));
        }
    }
    // logarithmic growth: each doubling of n adds a bounded number of heads
    let cv = reports.iter().find(|r| r.translation.starts_with("generate_cv7")).unwrap();
    let steps: Vec<i64> = cv.points.windows(2).map(|w| w[1].output as i64 - w[0].output as i64).collect();
    lines.push(format!("    generate_cv7 heads per doubling of n: {steps:?}"));
    if steps.iter().any(|&s| !(1..=20).contains(&s)) {
        bad.push(format!("cv7 head increments {steps:?} are not logarithmic"));
    }
    let sizes: BTreeSet<usize> = reports.iter().flat_map(|r| r.points.iter().map(|p| p.input)).collect();
    let detail = format!("input sizes {}..{}\n{}", sizes.first().unwrap(), sizes.last().unwrap(), lines.join("\n"));
    if bad.is_empty() {
        pass(detail, budget)
    } else {
        fail(bad.join("; "), detail, budget)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("semantics oracle", semantics),
        ("clock golden", clock_golden),
        ("diamond scan golden", diamond_golden),
        ("translation equivalences", translations),
        ("combine_two_circuits", combine),
        ("coloring round counts", cv_counts),
        ("coloring correctness", coloring),
        ("size scaling", scaling),
    ];
    let mut undocumented = vec![];
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = check();
        let took = start.elapsed();
        if took > out.budget && !matches!(out.verdict, Verdict::Fail(_)) {
            out.verdict = Verdict::Fail(format!("took {took:.1?}, over the {:?} budget", out.budget));
        }
        let (tag, why) = match &out.verdict {
            Verdict::Pass => ("PASS".to_string(), String::new()),
            Verdict::Documented(w) => ("FAIL (documented)".to_string(), format!(": {w}")),
            Verdict::Fail(w) => ("FAIL".to_string(), format!(": {w}")),
        };
        println!("criterion {}: {tag} {name} [{took:.2?}]{why}", i + 1);
        if !out.detail.is_empty() {
            println!("    {}", out.detail);
        }
        if let Verdict::Fail(w) = out.verdict {
            undocumented.push(format!("criterion {}: {w}", i + 1));
        }
    }
    if !undocumented.is_empty() {
        panic!("undocumented failures: {}", undocumented.join("; "));
    }
}
