//! Incidence structure of the periodic cubic lattice.

use topoloss::{Axis, FaceSet, Lattice};

fn main() {
    let l = Lattice::new(4).unwrap();
    println!("L={} cells={} faces={} edges={}", l.size(), l.n_cells(), l.n_faces(), l.n_edges());

    let c = l.cell([1, 2, 3]);
    println!("faces of cell {:?}:", l.cell_coord(c));
    for f in l.cell_faces(c) {
        println!("  face {:?} normal {:?} base {:?}", f, l.face_normal(f), l.face_base(f));
    }

    let f = l.face([0, 0, 0], Axis::Z);
    let [a, b] = l.face_cells(f);
    println!("face {f:?} separates {:?} and {:?} (wraps around z)", l.cell_coord(a), l.cell_coord(b));

    let e = l.edge([2, 2, 2], Axis::X);
    println!("plaquette around edge {e:?}: {:?}", l.edge_faces(e));

    let lp = FaceSet::from_faces(&l, l.dual_loop(Axis::Y, [1, 0, 1]));
    println!("dual loop along y has {} faces", lp.len());
}
