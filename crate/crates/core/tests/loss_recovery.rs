mod common;

use common::lat;
use topoloss::loss_recovery::{
    build_partition, build_random_test_surface, build_test_surface, component_parity, detect_percolation,
};
use topoloss::noise::{sample_losses, LossSet, OutcomeGrid};
use topoloss::oracles::oracle_percolation;
use topoloss::rng::trial_rng;
use topoloss::{Axis, FaceSet, Lattice};

#[test]
fn partition_examples() {
    let l = lat(4);
    let p = build_partition(&l, &LossSet::none(&l));
    assert_eq!(p.n_components(), 64);

    let f = l.face([1, 2, 3], Axis::Z);
    let p = build_partition(&l, &LossSet::from_faces(&l, [f]));
    assert_eq!(p.n_components(), 63);
    let [a, b] = l.face_cells(f);
    assert_eq!(p.component_of(a), p.component_of(b));
    let mut members = p.members(p.component_of(a)).to_vec();
    members.sort();
    let mut want = vec![a, b];
    want.sort();
    assert_eq!(members, want);

    let path = LossSet::from_faces(&l, (1..4).map(|x| l.face([x, 0, 0], Axis::X)));
    let p = build_partition(&l, &path);
    let k = p.component_of(l.cell([0, 0, 0]));
    assert_eq!(p.members(k).len(), 4);
    assert_eq!(p.n_components(), 61);
    assert_eq!(detect_percolation(&p), [false; 3]);
}

#[test]
fn boundary_faces_are_kept_and_cross() {
    let l = lat(5);
    for t in 0..20 {
        let losses = sample_losses(&l, 0.2, &mut trial_rng(4, t));
        let p = build_partition(&l, &losses);
        for k in p.components() {
            for &f in p.boundary(k) {
                assert!(!losses.is_lost(f));
                let inside = l.face_cells(f).iter().filter(|&&c| p.component_of(c) == k).count();
                assert_eq!(inside, 1);
            }
        }
    }
}

#[test]
fn straight_loss_line_wraps_once() {
    let l = lat(4);
    let line = LossSet::from_faces(&l, (0..4).map(|x| l.face([x, 0, 0], Axis::X)));
    assert_eq!(detect_percolation(&build_partition(&l, &line)), [true, false, false]);
    assert_eq!(detect_percolation(&build_partition(&l, &LossSet::none(&l))), [false; 3]);
}

#[test]
fn wrapping_rates_far_from_threshold() {
    let l = lat(16);
    let rate = |p: f64| {
        (0..1000u64)
            .filter(|&i| {
                let losses = sample_losses(&l, p, &mut trial_rng(21, i));
                let wraps = detect_percolation(&build_partition(&l, &losses));
                assert_eq!(wraps, oracle_percolation(&l, &losses).unwrap());
                wraps.iter().any(|&w| w)
            })
            .count() as f64
            / 1000.0
    };
    assert!(rate(0.15) < 0.05);
    assert!(rate(0.35) > 0.95);
}

#[test]
fn flat_surface_weight() {
    for size in [2, 3, 4, 6] {
        let l = lat(size);
        let none = LossSet::none(&l);
        let p = build_partition(&l, &none);
        for d in Axis::ALL {
            let s = build_test_surface(&l, &p, &none, d).unwrap();
            assert_eq!(s.weight(), size * size);
            assert!(s.faces().iter().all(|f| l.face_normal(f) == d && l.face_base(f)[d.index()] == 0));
            assert!(s.audit(&l, &none).is_valid_for(d));
        }
    }
}

#[test]
fn surface_detours_around_single_loss() {
    let l = lat(5);
    let f = l.face([2, 3, 0], Axis::Z);
    let losses = LossSet::from_faces(&l, [f]);
    let p = build_partition(&l, &losses);
    let s = build_test_surface(&l, &p, &losses, Axis::Z).unwrap();
    assert_eq!(s.weight(), 25 + 4);
    assert!(!s.faces().contains(f));
    assert!(s.audit(&l, &losses).is_valid_for(Axis::Z));
    // The detour replaces the lost face by the other five faces of one adjacent cell.
    let mut plane = FaceSet::from_faces(&l, (0..25).map(|i| l.face([i % 5, i / 5, 0], Axis::Z)));
    plane.xor_with(s.faces());
    let cell_faces: Vec<_> = plane.iter().collect();
    assert_eq!(cell_faces.len(), 6);
    let c = l.face_cells(f).into_iter().find(|&c| {
        let mut b = l.cell_faces(c).to_vec();
        b.sort();
        b == cell_faces
    });
    assert!(c.is_some());
}

#[test]
fn wrapping_loss_blocks_surface_along_its_axis() {
    let l = lat(4);
    let line = LossSet::from_faces(&l, (0..4).map(|x| l.face([x, 1, 2], Axis::X)));
    let p = build_partition(&l, &line);
    assert!(build_test_surface(&l, &p, &line, Axis::X).is_none());
    assert!(build_test_surface(&l, &p, &line, Axis::Y).is_some());
    assert!(build_test_surface(&l, &p, &line, Axis::Z).is_some());
}

/// Is there any cell set `h` such that `plane_d + Σ_{h} ∂c` avoids every lost face?
fn surface_exists_brute_force(l: &Lattice, losses: &LossSet, d: Axis) -> bool {
    let n = l.n_cells();
    (0u32..1 << n).any(|h| {
        l.faces().all(|f| {
            let [a, b] = l.face_cells(f);
            let bit = ((h >> a.index()) ^ (h >> b.index())) & 1 == 1;
            let on = bit ^ (l.face_normal(f) == d && l.face_base(f)[d.index()] == 0);
            !(on && losses.is_lost(f))
        })
    })
}

#[test]
fn surface_exists_exactly_when_no_wrap_along_direction() {
    let l = lat(2);
    for t in 0..300u64 {
        let p_loss = 0.1 + 0.5 * (t % 10) as f64 / 10.0;
        let losses = sample_losses(&l, p_loss, &mut trial_rng(13, t));
        let p = build_partition(&l, &losses);
        let wraps = detect_percolation(&p);
        for d in Axis::ALL {
            let found = build_test_surface(&l, &p, &losses, d);
            assert_eq!(found.is_some(), surface_exists_brute_force(&l, &losses, d), "trial {t}");
            assert_eq!(found.is_none(), wraps[d.index()], "trial {t}");
        }
    }
}

#[test]
fn surfaces_pass_audit_on_random_losses() {
    let l = lat(6);
    for t in 0..50u64 {
        let mut rng = trial_rng(17, t);
        let losses = sample_losses(&l, 0.2, &mut rng);
        let p = build_partition(&l, &losses);
        for d in Axis::ALL {
            match build_test_surface(&l, &p, &losses, d) {
                Some(s) => {
                    assert!(s.audit(&l, &losses).is_valid_for(d));
                    let r = build_random_test_surface(&l, &p, &losses, d, &mut rng).unwrap();
                    assert!(r.audit(&l, &losses).is_valid_for(d));
                }
                None => assert!(p.wraps()[d.index()]),
            }
        }
    }
}

#[test]
fn component_parity_examples() {
    let l = lat(4);
    let none = LossSet::none(&l);
    let p = build_partition(&l, &none);
    let clean = OutcomeGrid::all_plus(&l, none.clone());
    assert!(p.components().all(|k| component_parity(&p, &clean, k) == 1));

    let f = l.face([1, 1, 1], Axis::Y);
    let g = OutcomeGrid::new(none, FaceSet::from_faces(&l, [f]));
    for k in p.components() {
        let touches = l.face_cells(f).iter().any(|&c| p.component_of(c) == k);
        assert_eq!(component_parity(&p, &g, k), if touches { -1 } else { 1 });
    }

    // Flipped boundary face of a two-cell super-check.
    let lost = l.face([1, 0, 0], Axis::X);
    let losses = LossSet::from_faces(&l, [lost]);
    let p = build_partition(&l, &losses);
    let flip = l.face([1, 0, 0], Axis::Y);
    let g = OutcomeGrid::new(losses, FaceSet::from_faces(&l, [flip]));
    let big = p.component_of(l.cell([1, 0, 0]));
    assert_eq!(p.members(big).len(), 2);
    let other = p.component_of(l.cell([1, 3, 0]));
    for k in p.components() {
        // Product of member-cell parities, counted directly.
        let direct: usize = p
            .members(k)
            .iter()
            .map(|&c| l.cell_faces(c).iter().filter(|&&f| g.flipped().contains(f)).count())
            .sum();
        let want = if direct % 2 == 1 { -1 } else { 1 };
        assert_eq!(component_parity(&p, &g, k), want);
        assert_eq!(want == -1, k == big || k == other);
    }
}

#[test]
fn failed_super_checks_come_in_pairs() {
    use topoloss::noise::sample_phenomenological;
    let l = lat(5);
    for t in 0..100u64 {
        let g = sample_phenomenological(&l, 0.1, 0.2, &mut trial_rng(31, t));
        let p = build_partition(&l, g.losses());
        let odd = p.components().filter(|&k| component_parity(&p, &g, k) == -1).count();
        assert_eq!(odd % 2, 0);
    }
}
