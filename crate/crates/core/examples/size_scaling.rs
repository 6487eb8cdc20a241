//! Size ratios of the translations over generated families.

use msc::harness::scaling_reports;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    for r in scaling_reports(seed) {
        print!("{}", r.to_text());
        println!("  {}", if r.within_bound() { "within bound" } else { "BOUND EXCEEDED" });
    }
}
