//! The two-circuit multiplexer on a pair of small circuits.

use msc::circuit::Circuit;
use msc::compile::combine_two_circuits;

fn main() {
    let mut c0 = Circuit::new();
    let a = c0.input();
    let b = c0.input();
    let and = c0.and(vec![a, b]);
    c0.set_outputs(vec![and]);
    let mut c1 = Circuit::new();
    let x = c1.input();
    let not = c1.not(x);
    c1.set_outputs(vec![not]);

    let c = combine_two_circuits(&c0, &c1).unwrap();
    println!("inputs s0 s0 b s1, {} gates", c.size());
    for v in 0..16u8 {
        let s: Vec<bool> = (0..4).map(|i| v >> i & 1 == 1).collect();
        let out: String = c.eval(&s).unwrap().iter().map(|&o| if o { '1' } else { '0' }).collect();
        let bits: String = s.iter().map(|&o| if o { '1' } else { '0' }).collect();
        println!("{bits} -> {out}");
    }
}
