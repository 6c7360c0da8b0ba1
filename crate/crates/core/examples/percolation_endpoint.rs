//! Wrapping probability of lost faces near the bond percolation threshold.

use topoloss::montecarlo::estimate_percolation;

fn main() {
    let ps = [0.22, 0.24, 0.25, 0.26, 0.28];
    println!("{:>4} {}", "L", ps.map(|p| format!("{p:>8}")).join(""));
    for l in [6, 10, 14] {
        let row: Vec<String> = ps
            .iter()
            .map(|&p| format!("{:>8.3}", estimate_percolation(l, p, 2000, 1).unwrap().estimate.p_fail))
            .collect();
        println!("{l:>4} {}", row.join(""));
    }
}
