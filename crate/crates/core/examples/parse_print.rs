//! Parses a conditional program, prints it back and reports its size.

use msc::syntax::{parse_program, print_schema};

const SOURCE: &str = "cmsc {
  X(0) := q;
  Y(0) := F;
  X := X;
  Y := [X & !Y] <>X; Y;
  attention Y;
  print X, Y;
}";

fn main() {
    let p = parse_program(SOURCE).expect("example parses");
    println!("variant {:?}, heads {:?}", p.variant(), p.heads());
    for (i, h) in p.heads().iter().enumerate() {
        println!("  {h}: terminal {}, rule parts {:?}", print_schema(p.terminal(i)), p.rule(i).parts().iter().map(|s| print_schema(s)).collect::<Vec<_>>());
    }
    let text = p.to_text();
    println!("{text}");
    let again = parse_program(&text).expect("printed text parses");
    println!("round trip equal: {}", again == p);
    println!("metrics: {:?}", p.metrics());
}
