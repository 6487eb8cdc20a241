//! Runs every randomized check suite; pass `mutate` to break each target on purpose.

use std::time::Instant;

use msc::harness::{run_suite, SuiteOptions, SUITES};

fn main() {
    let mutate = std::env::args().nth(1).is_some_and(|a| a == "mutate");
    for name in SUITES {
        let start = Instant::now();
        let r = run_suite(name, &SuiteOptions { mutate, ..SuiteOptions::default() }).unwrap();
        print!("{}", r.to_text());
        println!("  took {:.2?}", start.elapsed());
    }
}
