//! Brute-force references for the decoder pipeline.
//!
//! These share nothing with the code they check beyond lattice indexing, and are only meant for
//! small instances. [`run_selftest`] compares them against the production paths on random
//! instances.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::decoder::{
    distances_with_degeneracy, homology_class, match_syndrome, ComponentGraph, DecoderOptions,
    MatchingGraph, Syndrome,
};
use crate::lattice::{Axis, CellId, FaceSet, Lattice};
use crate::loss_recovery::{build_test_surfaces, SuperCheckPartition};
use crate::noise::{sample_losses, LossSet};
use crate::rng::trial_rng;

pub const MAX_MATCHING_NODES: usize = 10;
pub const MAX_PATH_LENGTH: u32 = 6;
pub const MAX_PATH_LATTICE: usize = 6;
pub const MAX_PERCOLATION_LATTICE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance exceeds oracle cap: {0}")]
    CapExceeded(String),
    #[error("chain is not closed")]
    NotClosed,
}

/// One comparison between a reference and a candidate value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub suite: &'static str,
    pub case: String,
    pub reference: String,
    pub candidate: String,
    pub agree: bool,
}

impl OracleReport {
    pub fn new(suite: &'static str, case: String, reference: String, candidate: String) -> Self {
        let agree = reference == candidate;
        OracleReport {
            suite,
            case,
            reference,
            candidate,
            agree,
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} [{}] reference={} candidate={}",
            if self.agree { "ok  " } else { "FAIL" },
            self.suite,
            self.case,
            self.reference,
            self.candidate
        )
    }
}

/// Minimum total weight over all perfect pairings of `0..n`, and the first pairing reaching it
/// in lexicographic order.
pub fn oracle_matching(
    n: usize,
    weight: impl Fn(usize, usize) -> i64,
) -> Result<(i64, Vec<(usize, usize)>), OracleError> {
    if n > MAX_MATCHING_NODES || n % 2 == 1 {
        return Err(OracleError::CapExceeded(format!("{n} nodes")));
    }
    fn rec(
        free: &mut Vec<usize>,
        w: &dyn Fn(usize, usize) -> i64,
        cur: &mut Vec<(usize, usize)>,
        acc: i64,
        best: &mut Option<(i64, Vec<(usize, usize)>)>,
    ) {
        if free.is_empty() {
            if best.as_ref().map_or(true, |(b, _)| acc < *b) {
                *best = Some((acc, cur.clone()));
            }
            return;
        }
        let first = free.remove(0);
        for k in 0..free.len() {
            let other = free.remove(k);
            cur.push((first, other));
            rec(free, w, cur, acc + w(first, other), best);
            cur.pop();
            free.insert(k, other);
        }
        free.insert(0, first);
    }
    let mut free: Vec<usize> = (0..n).collect();
    let mut best = None;
    rec(&mut free, &weight, &mut Vec::new(), 0, &mut best);
    Ok(best.unwrap_or((0, Vec::new())))
}

/// Cell labels of the lost-face clusters, by flood fill.
fn clusters(lattice: &Lattice, losses: &LossSet) -> Vec<usize> {
    let n = lattice.n_cells();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut stack = vec![CellId(start as u32)];
        while let Some(c) = stack.pop() {
            for (slot, f) in lattice.cell_faces(c).into_iter().enumerate() {
                let nb = lattice.cell_neighbor(c, slot);
                if losses.is_lost(f) && label[nb.index()] == usize::MAX {
                    label[nb.index()] = next;
                    stack.push(nb);
                }
            }
        }
        next += 1;
    }
    label
}

/// Shortest length and number of shortest walks between the clusters of `u` and `v`, found by
/// enumerating all simple walks of increasing length up to `d_max`. Each step crosses one
/// non-lost face between different clusters. `None` if no walk of length `≤ d_max` exists.
pub fn oracle_paths(
    lattice: &Lattice,
    losses: &LossSet,
    u: CellId,
    v: CellId,
    d_max: u32,
) -> Result<Option<(u32, u128)>, OracleError> {
    if d_max > MAX_PATH_LENGTH || lattice.size() > MAX_PATH_LATTICE {
        return Err(OracleError::CapExceeded(format!(
            "d_max={d_max}, L={}",
            lattice.size()
        )));
    }
    let label = clusters(lattice, losses);
    let n_labels = label.iter().max().map_or(0, |m| m + 1);
    let (src, dst) = (label[u.index()], label[v.index()]);
    if src == dst {
        return Ok(Some((0, 1)));
    }
    // Multigraph over clusters, one entry per crossing face.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_labels];
    for f in lattice.faces() {
        if losses.is_lost(f) {
            continue;
        }
        let [a, b] = lattice.face_cells(f);
        let (la, lb) = (label[a.index()], label[b.index()]);
        if la != lb {
            adj[la].push(lb);
            adj[lb].push(la);
        }
    }
    fn count(adj: &[Vec<usize>], at: usize, dst: usize, left: u32, visited: &mut [bool]) -> u128 {
        if at == dst {
            return (left == 0) as u128;
        }
        if left == 0 {
            return 0;
        }
        let mut total = 0;
        for &nb in &adj[at] {
            if !visited[nb] {
                visited[nb] = true;
                total += count(adj, nb, dst, left - 1, visited);
                visited[nb] = false;
            }
        }
        total
    }
    let mut visited = vec![false; n_labels];
    visited[src] = true;
    for d in 1..=d_max {
        let n = count(&adj, src, dst, d, &mut visited);
        if n > 0 {
            return Ok(Some((d, n)));
        }
    }
    Ok(None)
}

/// Per-axis loss percolation by reachability on the two-sheeted cover along each axis: crossing
/// a lost face through the seam at coordinate 0 switches sheets, and a cluster winds an odd
/// number of times iff some cell reaches its own copy on the other sheet.
pub fn oracle_percolation(lattice: &Lattice, losses: &LossSet) -> Result<[bool; 3], OracleError> {
    if lattice.size() > MAX_PERCOLATION_LATTICE {
        return Err(OracleError::CapExceeded(format!("L={}", lattice.size())));
    }
    let n = lattice.n_cells();
    let mut out = [false; 3];
    for axis in Axis::ALL {
        let mut done = vec![false; n];
        'search: for start in 0..n {
            if done[start] {
                continue;
            }
            let mut seen = std::collections::HashSet::new();
            seen.insert((start, 0usize));
            let mut stack = vec![(start, 0usize)];
            while let Some((c, sheet)) = stack.pop() {
                let cell = CellId(c as u32);
                for (slot, f) in lattice.cell_faces(cell).into_iter().enumerate() {
                    if !losses.is_lost(f) {
                        continue;
                    }
                    let seam =
                        lattice.face_normal(f) == axis && lattice.face_base(f)[axis.index()] == 0;
                    let nb = lattice.cell_neighbor(cell, slot).index();
                    let s = sheet ^ seam as usize;
                    if seen.insert((nb, s)) {
                        stack.push((nb, s));
                    }
                }
            }
            for &(c, _) in &seen {
                if seen.contains(&(c, 1)) && seen.contains(&(c, 0)) {
                    out[axis.index()] = true;
                    break 'search;
                }
                done[c] = true;
            }
        }
    }
    Ok(out)
}

/// Winding parity of a closed chain along `direction`: the number of its faces on the flat
/// coordinate plane normal to `direction` at coordinate 0, mod 2. Loss-free lattices only.
pub fn oracle_homology(lattice: &Lattice, chain: &FaceSet, direction: Axis) -> Result<bool, OracleError> {
    for c in lattice.cells() {
        let k = lattice.cell_faces(c).iter().filter(|&&f| chain.contains(f)).count();
        if k % 2 == 1 {
            return Err(OracleError::NotClosed);
        }
    }
    let crossings = chain
        .iter()
        .filter(|&f| lattice.face_normal(f) == direction && lattice.face_base(f)[direction.index()] == 0)
        .count();
    Ok(crossings % 2 == 1)
}

/// Random matching instance: an even number `≤ max_nodes` of distinct super-checks of a random
/// lossy lattice, with degeneracy-weighted distances.
fn matching_instance<R: Rng>(rng: &mut R, max_nodes: usize) -> (String, MatchingGraph) {
    loop {
        let l = rng.gen_range(4..=6);
        let lattice = Lattice::new(l).expect("valid size");
        let p_loss = rng.gen_range(0.0..0.15);
        let losses = sample_losses(&lattice, p_loss, rng);
        let partition = SuperCheckPartition::build(&lattice, &losses);
        if partition.percolates() || partition.n_components() < max_nodes {
            continue;
        }
        let k = 2 * rng.gen_range(1..=max_nodes / 2);
        let mut ids: Vec<_> = partition.components().collect();
        ids.shuffle(rng);
        ids.truncate(k);
        let syndrome = Syndrome::from_components(ids);
        let graph = ComponentGraph::new(&lattice, &partition);
        let opts = DecoderOptions::new(rng.gen_range(0.01..0.2)).with_degeneracy(rng.gen());
        let mg = MatchingGraph::build(&graph, &syndrome, &opts);
        return (format!("L={l} p_loss={p_loss:.3} nodes={k}"), mg);
    }
}

pub fn selftest_matching(seed: u64, cases: u64) -> Vec<OracleReport> {
    (0..cases)
        .map(|i| {
            let mut rng = trial_rng(seed ^ 0x6d61_7463, i);
            let (case, mg) = matching_instance(&mut rng, 8);
            let (best, _) = oracle_matching(mg.len(), |a, b| mg.quantized_weight(a, b))
                .expect("at most 8 nodes");
            let got: i64 = match_syndrome(&mg)
                .iter()
                .map(|&(a, b)| mg.quantized_weight(a, b))
                .sum();
            OracleReport::new("matching", case, best.to_string(), got.to_string())
        })
        .collect()
}

pub fn selftest_paths(seed: u64, cases: u64) -> Vec<OracleReport> {
    let mut out = Vec::new();
    let mut i = 0;
    while (out.len() as u64) < cases {
        let mut rng = trial_rng(seed ^ 0x7061_7468, i);
        i += 1;
        let l = rng.gen_range(3..=6);
        let lattice = Lattice::new(l).expect("valid size");
        let p_loss = if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..0.2) };
        let losses = sample_losses(&lattice, p_loss, &mut rng);
        let u = CellId(rng.gen_range(0..lattice.n_cells()) as u32);
        let mut c = lattice.cell_coord(u);
        for _ in 0..rng.gen_range(1..=4) {
            let axis = Axis::from_index(rng.gen_range(0..3));
            c = lattice.shift(c, axis, if rng.gen() { 1 } else { -1 });
        }
        let v = lattice.cell(c);
        let Ok(Some(reference)) = oracle_paths(&lattice, &losses, u, v, MAX_PATH_LENGTH) else {
            continue;
        };
        let partition = SuperCheckPartition::build(&lattice, &losses);
        let graph = ComponentGraph::new(&lattice, &partition);
        let got = distances_with_degeneracy(&graph, partition.component_of(u))
            .get(partition.component_of(v));
        out.push(OracleReport::new(
            "paths",
            format!("L={l} p_loss={p_loss:.3} u={:?} v={:?}", lattice.cell_coord(u), c),
            format!("{reference:?}"),
            format!("{:?}", got.unwrap_or((u32::MAX, 0))),
        ));
    }
    out
}

pub fn selftest_percolation(seed: u64, cases: u64) -> Vec<OracleReport> {
    (0..cases)
        .map(|i| {
            let mut rng = trial_rng(seed ^ 0x7065_7263, i);
            let l = rng.gen_range(2..=8);
            let lattice = Lattice::new(l).expect("valid size");
            let p_loss = rng.gen_range(0.15..0.4);
            let losses = sample_losses(&lattice, p_loss, &mut rng);
            let reference = oracle_percolation(&lattice, &losses).expect("L <= 8");
            let got = SuperCheckPartition::build(&lattice, &losses).wraps();
            OracleReport::new(
                "percolation",
                format!("L={l} p_loss={p_loss:.3}"),
                format!("{reference:?}"),
                format!("{got:?}"),
            )
        })
        .collect()
}

/// Random closed chain on a loss-free lattice: a sum of plaquettes around random edges plus
/// random straight dual loops.
pub fn random_closed_chain<R: Rng + ?Sized>(lattice: &Lattice, rng: &mut R) -> FaceSet {
    let mut chain = FaceSet::empty(lattice);
    for _ in 0..rng.gen_range(0..12) {
        let e = crate::lattice::EdgeId(rng.gen_range(0..lattice.n_edges()) as u32);
        for f in lattice.edge_faces(e) {
            chain.toggle(f);
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        let axis = Axis::from_index(rng.gen_range(0..3));
        let l = lattice.size();
        let through = [rng.gen_range(0..l), rng.gen_range(0..l), rng.gen_range(0..l)];
        for f in lattice.dual_loop(axis, through) {
            chain.toggle(f);
        }
    }
    chain
}

pub fn selftest_homology(seed: u64, cases: u64) -> Vec<OracleReport> {
    (0..cases)
        .map(|i| {
            let mut rng = trial_rng(seed ^ 0x686f_6d6f, i);
            let l = rng.gen_range(2..=6);
            let lattice = Lattice::new(l).expect("valid size");
            let chain = random_closed_chain(&lattice, &mut rng);
            let none = LossSet::none(&lattice);
            let partition = SuperCheckPartition::build(&lattice, &none);
            let surfaces = build_test_surfaces(&lattice, &partition, &none).expect("no losses");
            let reference = Axis::ALL.map(|a| oracle_homology(&lattice, &chain, a).expect("closed"));
            let got = homology_class(&chain, &FaceSet::empty(&lattice), &surfaces);
            OracleReport::new(
                "homology",
                format!("L={l} |chain|={}", chain.len()),
                format!("{reference:?}"),
                format!("{got:?}"),
            )
        })
        .collect()
}

/// All four oracle suites at the given case counts.
pub fn run_selftest(seed: u64, cases: u64) -> Vec<OracleReport> {
    let mut out = selftest_matching(seed, cases);
    out.extend(selftest_paths(seed, cases));
    out.extend(selftest_percolation(seed, cases));
    out.extend(selftest_homology(seed, cases.div_ceil(2)));
    out
}
