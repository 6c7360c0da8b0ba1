mod common;

use common::{lat, odd_cells};
use rand::Rng;
use topoloss::decoder::{
    build_correction, close_chain, decode, distances_with_degeneracy, extract_syndrome, homology_class,
    match_syndrome, ComponentGraph, DecoderOptions, MatchingGraph, Syndrome, WeightMode,
};
use topoloss::loss_recovery::{build_partition, build_random_test_surface, build_test_surfaces};
use topoloss::montecarlo::{run_batch, TrialConfig};
use topoloss::noise::{sample_phenomenological, LossSet, NoiseParams, OutcomeGrid};
use topoloss::oracles::{oracle_matching, oracle_paths, random_closed_chain};
use topoloss::rng::trial_rng;
use topoloss::{Axis, EdgeId, FaceSet};

#[test]
fn syndrome_examples() {
    let l = lat(6);
    let none = LossSet::none(&l);
    let p = build_partition(&l, &none);
    assert!(extract_syndrome(&p, &OutcomeGrid::all_plus(&l, none.clone())).is_empty());

    let f = l.face([3, 3, 3], Axis::X);
    let s = extract_syndrome(&p, &OutcomeGrid::new(none.clone(), FaceSet::from_faces(&l, [f])));
    let mut want: Vec<_> = l.face_cells(f).iter().map(|&c| p.component_of(c)).collect();
    want.sort();
    assert_eq!(s.components(), &want[..]);

    // Straight dual path of three faces along Y from cell (1,0,2) to (1,3,2).
    let chain = FaceSet::from_faces(&l, (1..4).map(|y| l.face([1, y, 2], Axis::Y)));
    let s = extract_syndrome(&p, &OutcomeGrid::new(none, chain.clone()));
    let direct: Vec<_> = odd_cells(&l, &chain).into_iter().map(|c| p.component_of(c)).collect();
    assert_eq!(s.components(), &direct[..]);
    assert_eq!(
        s.components(),
        &[p.component_of(l.cell([1, 0, 2])), p.component_of(l.cell([1, 3, 2]))]
    );
}

#[test]
fn distance_and_degeneracy_examples() {
    let l = lat(6);
    let none = LossSet::none(&l);
    let p = build_partition(&l, &none);
    let g = ComponentGraph::new(&l, &p);
    let src = p.component_of(l.cell([0, 0, 0]));
    let pc = distances_with_degeneracy(&g, src);
    assert_eq!(pc.get(p.component_of(l.cell([1, 0, 0]))), Some((1, 1)));
    assert_eq!(pc.get(p.component_of(l.cell([2, 1, 0]))), Some((3, 3)));
    assert_eq!(pc.get(p.component_of(l.cell([1, 1, 1]))), Some((3, 6)));

    // A two-cell super-check next to a singleton across two parallel faces: on L = 2 the
    // cells (0,0,0) and (1,0,0) touch through both X faces.
    let l2 = lat(2);
    let losses = LossSet::from_faces(&l2, [l2.face([0, 0, 0], Axis::Y)]);
    let p2 = build_partition(&l2, &losses);
    let g2 = ComponentGraph::new(&l2, &p2);
    let merged = p2.component_of(l2.cell([0, 0, 0]));
    assert_eq!(p2.members(merged).len(), 2);
    let single = p2.component_of(l2.cell([1, 1, 0]));
    assert_eq!(p2.members(single).len(), 1);
    let pc = distances_with_degeneracy(&g2, merged);
    assert_eq!(pc.get(single), Some((1, 2)));
}

#[test]
fn degeneracy_agrees_with_enumeration() {
    for t in 0..60u64 {
        let mut rng = trial_rng(55, t);
        let l = lat(rng.gen_range(3..=6));
        let p_loss = if t % 3 == 0 { 0.0 } else { rng.gen_range(0.0..0.2) };
        let losses = topoloss::noise::sample_losses(&l, p_loss, &mut rng);
        let p = build_partition(&l, &losses);
        let g = ComponentGraph::new(&l, &p);
        let u = l.cells().nth(rng.gen_range(0..l.n_cells())).unwrap();
        let pc = distances_with_degeneracy(&g, p.component_of(u));
        for v in l.cells() {
            if let Some(r) = oracle_paths(&l, &losses, u, v, 4).unwrap() {
                assert_eq!(pc.get(p.component_of(v)), Some(r));
            } else {
                assert!(pc.distance(p.component_of(v)) > 4);
            }
        }
    }
}

#[test]
fn rectangle_matching() {
    let l = lat(8);
    let p = build_partition(&l, &LossSet::none(&l));
    let g = ComponentGraph::new(&l, &p);
    let cells = [[2, 2, 2], [3, 2, 2], [2, 4, 2], [3, 4, 2]];
    let s = Syndrome::from_components(cells.iter().map(|&c| p.component_of(l.cell(c))).collect());
    let opts = DecoderOptions::new(0.05).with_degeneracy(false).with_weight_mode(WeightMode::Distance);
    let mg = MatchingGraph::build(&g, &s, &opts);
    let m = match_syndrome(&mg);
    let total: u32 = m.iter().map(|&(i, j)| mg.distance(i, j)).sum();
    assert_eq!(total, 2);
    let (best, pairs) = oracle_matching(4, |i, j| mg.quantized_weight(i, j)).unwrap();
    assert_eq!(pairs, m);
    assert_eq!(best, m.iter().map(|&(i, j)| mg.quantized_weight(i, j)).sum::<i64>());
}

#[test]
fn two_node_matching() {
    let l = lat(4);
    let p = build_partition(&l, &LossSet::none(&l));
    let g = ComponentGraph::new(&l, &p);
    let s = Syndrome::from_components(vec![p.component_of(l.cell([0, 0, 0])), p.component_of(l.cell([2, 2, 2]))]);
    let mg = MatchingGraph::build(&g, &s, &DecoderOptions::new(0.1));
    assert_eq!(match_syndrome(&mg), vec![(0, 1)]);
    let empty = MatchingGraph::build(&g, &Syndrome::default(), &DecoderOptions::new(0.1));
    assert!(match_syndrome(&empty).is_empty());
}

#[test]
fn matching_is_optimal_on_small_syndromes() {
    let l = lat(6);
    for t in 0..60u64 {
        let mut rng = trial_rng(66, t);
        let losses = topoloss::noise::sample_losses(&l, 0.1, &mut rng);
        let p = build_partition(&l, &losses);
        let g = ComponentGraph::new(&l, &p);
        let k = 2 * rng.gen_range(1..=4);
        let mut ids: Vec<_> = p.components().collect();
        rand::seq::SliceRandom::shuffle(&mut ids[..], &mut rng);
        let s = Syndrome::from_components(ids[..k].to_vec());
        let mg = MatchingGraph::build(&g, &s, &DecoderOptions::new(0.05));
        let got: i64 = match_syndrome(&mg).iter().map(|&(i, j)| mg.quantized_weight(i, j)).sum();
        let (best, _) = oracle_matching(k, |i, j| mg.quantized_weight(i, j)).unwrap();
        assert_eq!(got, best);
    }
}

fn correction_for(l: &topoloss::Lattice, grid: &OutcomeGrid) -> (topoloss::decoder::CorrectionChain, Syndrome) {
    let p = build_partition(l, grid.losses());
    let g = ComponentGraph::new(l, &p);
    let s = extract_syndrome(&p, grid);
    let mg = MatchingGraph::build(&g, &s, &DecoderOptions::new(0.05));
    let m = match_syndrome(&mg);
    (build_correction(l, &p, grid.losses(), &g, &mg, &m), s)
}

#[test]
fn correction_examples() {
    let l = lat(6);
    let none = LossSet::none(&l);
    let f = l.face([1, 4, 2], Axis::Y);
    let (c, _) = correction_for(&l, &OutcomeGrid::new(none.clone(), FaceSet::from_faces(&l, [f])));
    assert_eq!(c.faces().iter().collect::<Vec<_>>(), vec![f]);

    // Flipped pair at offset (0,0,2): the correction is two collinear faces with the same
    // boundary.
    let e = FaceSet::from_faces(&l, [l.face([2, 2, 1], Axis::Z), l.face([2, 2, 2], Axis::Z)]);
    let (c, _) = correction_for(&l, &OutcomeGrid::new(none, e.clone()));
    assert_eq!(c.faces().len(), 2);
    assert_eq!(odd_cells(&l, c.faces()), odd_cells(&l, &e));
    assert!(c.faces().iter().all(|f| l.face_normal(f) == Axis::Z));
}

#[test]
fn corrections_close_error_chains() {
    let l = lat(6);
    for t in 0..40u64 {
        let grid = sample_phenomenological(&l, 0.04, 0.15, &mut trial_rng(71, t));
        let p = build_partition(&l, grid.losses());
        if p.percolates() {
            continue;
        }
        let (c, _) = correction_for(&l, &grid);
        assert!(c.closure().iter().all(|f| grid.is_lost(f)));
        assert!(c.faces().iter().all(|f| !grid.is_lost(f)));
        let mut total = grid.flipped().symmetric_difference(&c.full());
        total.xor_with(&close_chain(&l, &p, grid.losses(), grid.flipped()));
        assert!(odd_cells(&l, &total).is_empty(), "trial {t}");
    }
}

#[test]
fn homology_examples() {
    let l = lat(5);
    let none = LossSet::none(&l);
    let p = build_partition(&l, &none);
    let s = build_test_surfaces(&l, &p, &none).unwrap();
    let e = random_closed_chain(&l, &mut trial_rng(1, 1));
    assert_eq!(homology_class(&e, &e, &s), [false; 3]);
    let lp = FaceSet::from_faces(&l, l.dual_loop(Axis::X, [0, 2, 4]));
    assert_eq!(homology_class(&lp, &FaceSet::empty(&l), &s), [true, false, false]);
    for e in l.edges() {
        let plaquette = FaceSet::from_faces(&l, l.edge_faces(e));
        assert_eq!(homology_class(&plaquette, &FaceSet::empty(&l), &s), [false; 3]);
    }
}

#[test]
fn zero_noise_decodes_trivially() {
    let l = lat(6);
    for t in 0..30u64 {
        let grid = sample_phenomenological(&l, 0.0, 0.2, &mut trial_rng(81, t));
        let p = build_partition(&l, grid.losses());
        let Some(s) = build_test_surfaces(&l, &p, grid.losses()) else {
            assert!(p.percolates());
            continue;
        };
        let d = decode(&l, &p, &grid, &s, &DecoderOptions::new(0.01));
        assert!(d.syndrome.is_empty());
        assert!(d.correction.faces().is_empty());
        assert_eq!(d.homology, [false; 3]);
    }
}

#[test]
fn plaquette_deformations_keep_verdict() {
    let l = lat(6);
    let mut checked = 0;
    for t in 0..80u64 {
        let mut rng = trial_rng(91, t);
        let grid = sample_phenomenological(&l, 0.03, 0.1, &mut rng);
        let p = build_partition(&l, grid.losses());
        let Some(s) = build_test_surfaces(&l, &p, grid.losses()) else { continue };
        let before = decode(&l, &p, &grid, &s, &DecoderOptions::new(0.03));
        let mut flipped = grid.flipped().clone();
        let e = EdgeId(rng.gen_range(0..l.n_edges()) as u32);
        for f in l.edge_faces(e) {
            if !grid.is_lost(f) {
                flipped.toggle(f);
            }
        }
        let moved = OutcomeGrid::new(grid.losses().clone(), flipped);
        let after = decode(&l, &p, &moved, &s, &DecoderOptions::new(0.03));
        assert_eq!(before.syndrome, after.syndrome);
        assert_eq!(before.homology, after.homology);
        checked += 1;
    }
    assert!(checked > 50);
}

#[test]
fn verdict_does_not_depend_on_surface() {
    let l = lat(6);
    for t in 0..40u64 {
        let mut rng = trial_rng(101, t);
        let grid = sample_phenomenological(&l, 0.05, 0.15, &mut rng);
        let p = build_partition(&l, grid.losses());
        let Some(s) = build_test_surfaces(&l, &p, grid.losses()) else { continue };
        let d = decode(&l, &p, &grid, &s, &DecoderOptions::new(0.05));
        for _ in 0..3 {
            let alt = Axis::ALL.map(|a| build_random_test_surface(&l, &p, grid.losses(), a, &mut rng).unwrap());
            assert_eq!(homology_class(grid.flipped(), d.correction.faces(), &alt), d.homology);
        }
    }
}

fn fail_rate(l: usize, p_flip: f64, trials: u64) -> topoloss::montecarlo::BatchResult {
    run_batch(&TrialConfig::for_point(2024, l, NoiseParams::phenomenological(p_flip, 0.0), trials)).unwrap()
}

#[test]
fn failure_rate_trend_with_size() {
    let below: Vec<_> = [6, 8, 10].iter().map(|&l| fail_rate(l, 0.02, 3000)).collect();
    for w in below.windows(2) {
        assert!(w[1].estimate.upper < w[0].estimate.lower || w[1].estimate.p_fail < w[0].estimate.p_fail,
            "below: {:?}", below.iter().map(|b| b.estimate.p_fail).collect::<Vec<_>>());
    }
    assert!(below[2].estimate.upper < below[0].estimate.lower);

    let above: Vec<_> = [6, 8, 10].iter().map(|&l| fail_rate(l, 0.05, 600)).collect();
    for w in above.windows(2) {
        assert!(w[1].estimate.p_fail > w[0].estimate.p_fail,
            "above: {:?}", above.iter().map(|b| b.estimate.p_fail).collect::<Vec<_>>());
    }
    assert!(above[2].estimate.lower > above[0].estimate.upper);
}
