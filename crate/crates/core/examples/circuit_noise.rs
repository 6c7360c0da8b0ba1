//! Circuit-level faults propagated through the CPHASE schedule, and the flip rate they cause.

use topoloss::noise::{measure, sample_circuit_noise, CircuitLayout, GateSchedule, LossSet, NoiseParams};
use topoloss::rng::trial_rng;
use topoloss::Lattice;

fn main() {
    let lattice = Lattice::new(6).unwrap();
    let layout = CircuitLayout::new(lattice, GateSchedule::standard());
    let none = LossSet::none(&lattice);
    for p in [0.002, 0.005, 0.01] {
        let params = NoiseParams::circuit(p, 0.0);
        let trials = 200;
        let mut flips = 0;
        for i in 0..trials {
            let mut rng = trial_rng(7, i);
            let frame = sample_circuit_noise(&layout, &params, &none, &mut rng).unwrap();
            flips += measure(&lattice, &params, &frame, &none, &mut rng).n_flipped();
        }
        let rate = flips as f64 / (trials as usize * lattice.n_faces()) as f64;
        println!(
            "p={p:<6} sampled flip rate {rate:.5}  effective p {:.5}",
            params.effective_flip_probability()
        );
    }
}
