//! Decoder components against brute-force references.

use topoloss::oracles::run_selftest;

fn main() {
    let reports = run_selftest(2, 20);
    for r in reports.iter().step_by(10) {
        println!("{r}");
    }
    let bad = reports.iter().filter(|r| !r.agree).count();
    println!("{} comparisons, {bad} disagreements", reports.len());
}
