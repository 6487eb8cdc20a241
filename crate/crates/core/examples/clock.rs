//! Prints the minute hand, second hand and change flag of a clock.

use msc::compile::build_clock;
use msc::eval::run;
use msc::model::{KripkeModel, PropositionSet};

fn main() {
    let ell = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let (p, clock) = build_clock(ell, 0);
    let m = KripkeModel::new(PropositionSet::default(), 1, &[], &[vec![]]).unwrap();
    let rounds = 3 * (1 << ell) + 2;
    let t = run(&p, &m, rounds).unwrap();
    let hand = |r: usize, names: &[String]| -> String {
        names.iter().rev().map(|n| if t.bit(r, 0, n).unwrap() { '1' } else { '0' }).collect()
    };
    println!("round  minute  second  changing");
    for r in 0..=rounds {
        println!("{r:>5}  {:>6}  {:>6}  {}", hand(r, &clock.minute), hand(r, &clock.second), t.bit(r, 0, &clock.changing).unwrap() as u8);
    }
}
