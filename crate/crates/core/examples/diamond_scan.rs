//! The identifier scanner on a node whose neighbours have identifiers 000, 010 and 111.

use msc::compile::build_diamond_simulator;
use msc::eval::run;
use msc::model::{KripkeModel, PropositionSet};

fn main() {
    let bits = PropositionSet::id_bits(3);
    let (p, sim) = build_diamond_simulator(&bits.distinguished, 3);
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let tp = vec![names(&["p3"]), names(&[]), names(&["p2"]), names(&["p1", "p2", "p3"])];
    let m = KripkeModel::new(bits, 4, &[(0, 1), (0, 2), (0, 3)], &tp).unwrap();
    let t = run(&p, &m, 26).unwrap();
    let b = |r: usize, n: &str| if t.bit(r, 0, n).unwrap() { '1' } else { '0' };
    let hand = |r: usize, v: &[String]| v.iter().rev().map(|n| b(r, n)).collect::<String>();
    println!("round  M    M'   reset  notsame  N1N2N3  XID");
    for r in 0..=25 {
        let found: String = sim.found.iter().map(|n| b(r, n)).collect();
        println!(
            "{r:>5}  {}  {}  {}      {}        {}     {}",
            hand(r, &sim.basic.minute),
            hand(r, &sim.forward.minute),
            b(r, &sim.reset),
            b(r, &sim.not_same),
            found,
            b(r, &sim.id)
        );
    }
}
