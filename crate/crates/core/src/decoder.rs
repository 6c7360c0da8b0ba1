//! Matching decoder on the super-check lattice.
//!
//! Failed super-checks are paired by minimum-weight perfect matching, where the weight of a
//! pair is `d·λ − ln N`: `d` is the number of non-lost faces on a shortest walk between the two
//! components, `N` how many such walks exist and `λ = ln((1−p)/p)`. The correction is one
//! shortest walk per pair, closed up through lost faces so that it is a genuine chain.

use std::collections::VecDeque;

use crate::lattice::{Axis, FaceId, FaceSet, Lattice};
use crate::loss_recovery::{component_parity, ComponentId, SuperCheckPartition, TestSurface};
use crate::matching::min_weight_perfect_matching;
use crate::noise::{LossSet, OutcomeGrid};

/// Failed super-checks, in increasing component order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Syndrome {
    components: Vec<ComponentId>,
}

impl Syndrome {
    pub fn from_components(mut components: Vec<ComponentId>) -> Self {
        components.sort();
        components.dedup();
        Syndrome { components }
    }

    pub fn components(&self) -> &[ComponentId] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

pub fn extract_syndrome(partition: &SuperCheckPartition, outcomes: &OutcomeGrid) -> Syndrome {
    let components = partition
        .components()
        .filter(|&k| component_parity(partition, outcomes, k) < 0)
        .collect();
    Syndrome { components }
}

/// Components of the partition as nodes; one edge per non-lost face joining two components.
#[derive(Debug, Clone)]
pub struct ComponentGraph {
    // Per component: (neighbour, face) sorted by face id.
    adjacency: Vec<Vec<(u32, FaceId)>>,
}

impl ComponentGraph {
    pub fn new(lattice: &Lattice, partition: &SuperCheckPartition) -> Self {
        let adjacency = partition
            .components()
            .map(|k| {
                partition
                    .boundary(k)
                    .iter()
                    .map(|&f| {
                        let [a, b] = lattice.face_cells(f);
                        let (ka, kb) = (partition.component_of(a), partition.component_of(b));
                        let other = if ka == k { kb } else { ka };
                        (other.0, f)
                    })
                    .collect()
            })
            .collect();
        ComponentGraph { adjacency }
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// `(neighbour, face)` pairs of `k`, one per parallel edge, sorted by face.
    pub fn neighbors(&self, k: ComponentId) -> impl Iterator<Item = (ComponentId, FaceId)> + '_ {
        self.adjacency[k.index()]
            .iter()
            .map(|&(n, f)| (ComponentId(n), f))
    }
}

/// Shortest-walk lengths and walk counts from one source component.
#[derive(Debug, Clone)]
pub struct PathCounts {
    source: ComponentId,
    dist: Vec<u32>,
    count: Vec<u128>,
}

impl PathCounts {
    pub const UNREACHABLE: u32 = u32::MAX;

    pub fn source(&self) -> ComponentId {
        self.source
    }

    /// `(d, N)` to `target`, or `None` if unreachable. `N` saturates at `u128::MAX`.
    pub fn get(&self, target: ComponentId) -> Option<(u32, u128)> {
        let d = self.dist[target.index()];
        (d != Self::UNREACHABLE).then(|| (d, self.count[target.index()]))
    }

    pub fn distance(&self, target: ComponentId) -> u32 {
        self.dist[target.index()]
    }
}

/// Breadth-first search from `source` counting shortest walks, with parallel faces counted
/// separately: `N(v) = Σ N(u)·m(u, v)` over predecessors `u` one step closer.
pub fn distances_with_degeneracy(graph: &ComponentGraph, source: ComponentId) -> PathCounts {
    let n = graph.n_nodes();
    let mut dist = vec![PathCounts::UNREACHABLE; n];
    let mut count = vec![0u128; n];
    let mut queue = VecDeque::new();
    dist[source.index()] = 0;
    count[source.index()] = 1;
    queue.push_back(source.0);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        let cu = count[u as usize];
        for &(v, _) in &graph.adjacency[u as usize] {
            let v = v as usize;
            if dist[v] == PathCounts::UNREACHABLE {
                dist[v] = du + 1;
                queue.push_back(v as u32);
            }
            if dist[v] == du + 1 {
                count[v] = count[v].saturating_add(cu);
            }
        }
    }
    PathCounts {
        source,
        dist,
        count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `λ = ln((1−p_eff)/p_eff)`.
    LogLikelihood,
    /// `λ = 1`.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOptions {
    pub degeneracy: bool,
    pub weight_mode: WeightMode,
    /// Effective per-face flip probability, in `(0, ½)`.
    pub p_eff: f64,
}

impl DecoderOptions {
    pub fn new(p_eff: f64) -> Self {
        DecoderOptions {
            degeneracy: true,
            weight_mode: WeightMode::LogLikelihood,
            p_eff,
        }
    }

    pub fn with_degeneracy(mut self, on: bool) -> Self {
        self.degeneracy = on;
        self
    }

    pub fn with_weight_mode(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }

    /// Cost per face crossed.
    pub fn lambda(&self) -> f64 {
        match self.weight_mode {
            WeightMode::Distance => 1.0,
            WeightMode::LogLikelihood => {
                let p = self.p_eff.clamp(1e-12, 0.5 - 1e-12);
                ((1.0 - p) / p).ln()
            }
        }
    }

    pub fn weight(&self, d: u32, n: u128) -> f64 {
        let mut w = d as f64 * self.lambda();
        if self.degeneracy {
            w -= (n.max(1) as f64).ln();
        }
        w
    }
}

/// Complete graph over the syndrome with pairwise `(d, N)` and weights.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    nodes: Vec<ComponentId>,
    paths: Vec<PathCounts>,
    weights: Vec<f64>,
}

/// Fixed-point scale used to make matching weights integral.
const WEIGHT_SCALE: f64 = 1e6;

impl MatchingGraph {
    pub fn build(graph: &ComponentGraph, syndrome: &Syndrome, options: &DecoderOptions) -> Self {
        let nodes = syndrome.components().to_vec();
        let paths: Vec<PathCounts> = nodes
            .iter()
            .map(|&k| distances_with_degeneracy(graph, k))
            .collect();
        let n = nodes.len();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let (d, c) = paths[i]
                        .get(nodes[j])
                        .expect("components of a torus are connected");
                    weights[i * n + j] = options.weight(d, c);
                }
            }
        }
        MatchingGraph {
            nodes,
            paths,
            weights,
        }
    }

    pub fn nodes(&self) -> &[ComponentId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> u32 {
        self.paths[i].distance(self.nodes[j])
    }

    pub fn degeneracy(&self, i: usize, j: usize) -> u128 {
        self.paths[i].get(self.nodes[j]).map_or(0, |(_, c)| c)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    pub fn quantized_weight(&self, i: usize, j: usize) -> i64 {
        (self.weight(i, j) * WEIGHT_SCALE).round() as i64
    }

    pub fn paths_from(&self, i: usize) -> &PathCounts {
        &self.paths[i]
    }
}

/// Minimum-weight perfect matching over node indices of `graph`, as sorted pairs `(i, j)`
/// with `i < j`.
pub fn match_syndrome(graph: &MatchingGraph) -> Vec<(usize, usize)> {
    min_weight_perfect_matching(graph.len(), |i, j| graph.quantized_weight(i, j))
}

/// Correction chain: non-lost faces whose outcomes are inverted, plus lost faces that close the
/// chain up inside super-checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionChain {
    faces: FaceSet,
    closure: FaceSet,
}

impl CorrectionChain {
    pub fn empty(lattice: &Lattice) -> Self {
        CorrectionChain {
            faces: FaceSet::empty(lattice),
            closure: FaceSet::empty(lattice),
        }
    }

    /// Non-lost faces of the chain.
    pub fn faces(&self) -> &FaceSet {
        &self.faces
    }

    /// Lost faces added to close the chain.
    pub fn closure(&self) -> &FaceSet {
        &self.closure
    }

    /// Faces and closure together.
    pub fn full(&self) -> FaceSet {
        self.faces.symmetric_difference(&self.closure)
    }
}

/// One shortest walk from `paths.source()` to `target`, traced back from the target. At every
/// step the lowest-numbered face leading one step closer is taken.
pub fn shortest_walk(graph: &ComponentGraph, paths: &PathCounts, target: ComponentId) -> Vec<FaceId> {
    let mut out = Vec::new();
    let mut cur = target;
    let mut d = paths.distance(cur);
    assert!(d != PathCounts::UNREACHABLE, "target unreachable");
    while d > 0 {
        let (prev, f) = graph
            .neighbors(cur)
            .find(|&(k, _)| paths.distance(k) == d - 1)
            .expect("a shortest walk has a predecessor");
        out.push(f);
        cur = prev;
        d -= 1;
    }
    out.reverse();
    out
}

/// Lost faces that, added to `chain`, leave at most one odd cell per super-check: its smallest
/// member, and only when the super-check sees `chain` an odd number of times on its boundary.
/// Uses a breadth-first spanning tree of lost faces per super-check. The map is linear, so
/// closing `E` and `C` separately closes `E + C` whenever `∂C = ∂E`.
pub fn close_chain(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    losses: &LossSet,
    chain: &FaceSet,
) -> FaceSet {
    let mut odd = vec![false; lattice.n_cells()];
    for f in chain.iter() {
        for c in lattice.face_cells(f) {
            odd[c.index()] ^= true;
        }
    }
    let mut closure = FaceSet::empty(lattice);
    let mut seen = vec![false; lattice.n_cells()];
    let mut order = Vec::new();
    let mut parent_face: Vec<Option<(usize, FaceId)>> = vec![None; lattice.n_cells()];
    for k in partition.components() {
        let members = partition.members(k);
        if members.len() == 1 {
            continue;
        }
        order.clear();
        let root = members[0];
        seen[root.index()] = true;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let c = order[head];
            head += 1;
            for (slot, f) in lattice.cell_faces(c).into_iter().enumerate() {
                if !losses.is_lost(f) {
                    continue;
                }
                let n = lattice.cell_neighbor(c, slot);
                if !seen[n.index()] {
                    seen[n.index()] = true;
                    parent_face[n.index()] = Some((c.index(), f));
                    order.push(n);
                }
            }
        }
        for &c in order.iter().skip(1).rev() {
            if odd[c.index()] {
                let (p, f) = parent_face[c.index()].expect("non-root cells have a parent");
                closure.toggle(f);
                odd[c.index()] = false;
                odd[p] ^= true;
            }
        }
    }
    closure
}

/// XOR of one shortest walk per matched pair, closed up through lost faces.
pub fn build_correction(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    losses: &LossSet,
    graph: &ComponentGraph,
    matching_graph: &MatchingGraph,
    matching: &[(usize, usize)],
) -> CorrectionChain {
    let mut faces = FaceSet::empty(lattice);
    for &(i, j) in matching {
        let walk = shortest_walk(graph, matching_graph.paths_from(i), matching_graph.nodes()[j]);
        for f in walk {
            faces.toggle(f);
        }
    }
    let closure = close_chain(lattice, partition, losses, &faces);
    CorrectionChain { faces, closure }
}

/// Intersection parity of `E + C` with each surface; any `true` entry is a logical error.
/// Surfaces avoid lost faces, so only the non-lost parts of the chains contribute.
pub fn homology_class(error: &FaceSet, correction: &FaceSet, surfaces: &[TestSurface; 3]) -> [bool; 3] {
    let sum = error.symmetric_difference(correction);
    let mut out = [false; 3];
    for s in surfaces {
        out[s.direction().index()] = sum.intersection_parity(s.faces());
    }
    out
}

/// Everything the decoder produced for one trial.
#[derive(Debug, Clone)]
pub struct Decoding {
    pub syndrome: Syndrome,
    pub matching: Vec<(ComponentId, ComponentId)>,
    pub correction: CorrectionChain,
    pub homology: [bool; 3],
}

impl Decoding {
    pub fn is_success(&self) -> bool {
        self.homology.iter().all(|&b| !b)
    }
}

/// Syndrome extraction, matching, correction and homology test in one call.
pub fn decode(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    outcomes: &OutcomeGrid,
    surfaces: &[TestSurface; 3],
    options: &DecoderOptions,
) -> Decoding {
    let syndrome = extract_syndrome(partition, outcomes);
    if syndrome.is_empty() {
        let correction = CorrectionChain::empty(lattice);
        let homology = homology_class(outcomes.flipped(), correction.faces(), surfaces);
        return Decoding {
            syndrome,
            matching: Vec::new(),
            correction,
            homology,
        };
    }
    let graph = ComponentGraph::new(lattice, partition);
    let mg = MatchingGraph::build(&graph, &syndrome, options);
    let pairs = match_syndrome(&mg);
    let correction = build_correction(lattice, partition, outcomes.losses(), &graph, &mg, &pairs);
    let homology = homology_class(outcomes.flipped(), correction.faces(), surfaces);
    let nodes = mg.nodes();
    Decoding {
        matching: pairs.iter().map(|&(i, j)| (nodes[i], nodes[j])).collect(),
        syndrome,
        correction,
        homology,
    }
}

/// Axes along which the homology bits are set.
pub fn failing_axes(homology: &[bool; 3]) -> Vec<Axis> {
    Axis::ALL.into_iter().filter(|a| homology[a.index()]).collect()
}
