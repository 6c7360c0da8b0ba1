//! Merging checks around lost faces and deforming the test surfaces.

use topoloss::loss_recovery::{build_partition, build_test_surfaces};
use topoloss::noise::{sample_losses, LossSet};
use topoloss::rng::trial_rng;
use topoloss::{Axis, Lattice};

fn main() {
    let l = Lattice::new(5).unwrap();
    let lost = LossSet::from_faces(&l, [l.face([2, 2, 2], Axis::X), l.face([2, 2, 2], Axis::Y)]);
    let p = build_partition(&l, &lost);
    let k = p.component_of(l.cell([2, 2, 2]));
    println!("two losses: {} components, merged check has {} cells and {} boundary faces",
        p.n_components(), p.members(k).len(), p.boundary(k).len());

    for q in [0.1, 0.2, 0.3] {
        let losses = sample_losses(&l, q, &mut trial_rng(3, 0));
        let p = build_partition(&l, &losses);
        print!("p_loss={q}: {} lost, {} components, wraps {:?}", losses.len(), p.n_components(), p.wraps());
        match build_test_surfaces(&l, &p, &losses) {
            Some(s) => {
                let weights: Vec<_> = s.iter().map(|t| t.weight()).collect();
                let valid = s.iter().all(|t| t.audit(&l, &losses).is_valid_for(t.direction()));
                println!(", surface weights {weights:?}, audit ok: {valid}");
            }
            None => println!(", no surfaces (percolating)"),
        }
    }
}
