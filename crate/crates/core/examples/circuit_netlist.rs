//! Builds a circuit, writes it as a netlist, and reads it back.

use msc::circuit::{formula_to_circuit, Circuit};
use msc::syntax::{and, not, or, prop};

fn main() {
    let f = or(and(prop("a"), not(prop("b"))), prop("c"));
    let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let c = formula_to_circuit(&f, &labels).unwrap();
    println!("size {}, depth {}, max fan-in {}", c.size(), c.depth(), c.max_fanin());
    let text = c.to_netlist();
    print!("{text}");
    let (back, _) = Circuit::parse_netlist(&text).unwrap();
    for v in 0..8u8 {
        let x: Vec<bool> = (0..3).map(|i| v >> i & 1 == 1).collect();
        assert_eq!(c.eval(&x).unwrap(), back.eval(&x).unwrap());
        println!("a b c = {} {} {} -> {:?}", x[0] as u8, x[1] as u8, x[2] as u8, c.eval(&x).unwrap());
    }
}
