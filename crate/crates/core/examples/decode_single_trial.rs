//! One trial step by step: syndrome, matching, correction and homology verdict.

use topoloss::decoder::{decode, DecoderOptions};
use topoloss::loss_recovery::build_test_surfaces;
use topoloss::montecarlo::{Simulator, TrialConfig};
use topoloss::noise::NoiseParams;

fn main() {
    let cfg = TrialConfig::for_point(1, 6, NoiseParams::circuit(0.006, 0.05), 1);
    let sim = Simulator::new(cfg).unwrap();
    let l = sim.lattice();
    for i in 0..5 {
        let s = sim.sample(i);
        let Some(grid) = s.grid else {
            println!("trial {i}: losses percolate");
            continue;
        };
        let surfaces = build_test_surfaces(l, &s.partition, &s.losses).unwrap();
        let opts = DecoderOptions::new(cfg.noise.effective_flip_probability());
        let d = decode(l, &s.partition, &grid, &surfaces, &opts);
        println!(
            "trial {i}: {} lost, {} flips, {} failed checks, {} pairs, correction {} faces (+{} lost), homology {:?} -> {}",
            s.losses.len(),
            grid.n_flipped(),
            d.syndrome.len(),
            d.matching.len(),
            d.correction.faces().len(),
            d.correction.closure().len(),
            d.homology,
            if d.is_success() { "success" } else { "failure" }
        );
        assert_eq!(sim.run_trial(i).homology, d.homology);
    }
}
