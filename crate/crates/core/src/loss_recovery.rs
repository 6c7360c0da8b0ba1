//! Recovery from lost face qubits.
//!
//! A lost face leaves both adjacent parity checks incomplete, but their product no longer
//! involves the lost qubit. Merging every pair of cells joined by a lost face yields the
//! super-checks: the connected components of the cell lattice under lost-face adjacency.
//!
//! Test surfaces are closed sheets of faces homologous to a coordinate plane. Around losses
//! they are deformed by multiplying in cell boundaries until no lost face remains on them; this
//! fails exactly when a cluster of lost faces winds an odd number of times around the torus
//! along the surface's direction.

use std::collections::VecDeque;

use rand::Rng;

use crate::lattice::{Axis, CellId, FaceId, FaceSet, Lattice};
use crate::noise::{LossSet, OutcomeGrid};

/// Index of a super-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub u32);

impl ComponentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Union-find over cells that also tracks the unrolled displacement of every cell relative to
/// its root, so that closing a cycle reveals how many times it winds around the torus.
struct WindingUnionFind {
    parent: Vec<u32>,
    // Displacement from a node to its parent, in lattice units.
    offset: Vec<[i64; 3]>,
    rank: Vec<u8>,
    odd_winding: Vec<[bool; 3]>,
}

impl WindingUnionFind {
    fn new(n: usize) -> Self {
        WindingUnionFind {
            parent: (0..n as u32).collect(),
            offset: vec![[0; 3]; n],
            rank: vec![0; n],
            odd_winding: vec![[false; 3]; n],
        }
    }

    /// Root of `x` and the displacement from the root to `x`.
    fn find(&mut self, x: usize) -> (usize, [i64; 3]) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur] as usize != cur {
            path.push(cur);
            cur = self.parent[cur] as usize;
        }
        let root = cur;
        // Walk back down, compressing and accumulating offsets towards the root.
        let mut acc = [0i64; 3];
        for &node in path.iter().rev() {
            for a in 0..3 {
                acc[a] += self.offset[node][a];
            }
            self.offset[node] = acc;
            self.parent[node] = root as u32;
        }
        (root, self.offset_of(x, root))
    }

    fn offset_of(&self, x: usize, root: usize) -> [i64; 3] {
        if x == root {
            [0; 3]
        } else {
            self.offset[x]
        }
    }

    /// Record a bond with `pos(b) = pos(a) + step`.
    fn union(&mut self, a: usize, b: usize, step: [i64; 3], size: i64) {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        let mut rel = [0i64; 3];
        for k in 0..3 {
            rel[k] = oa[k] + step[k] - ob[k];
        }
        if ra == rb {
            for k in 0..3 {
                debug_assert_eq!(rel[k] % size, 0);
                if (rel[k] / size) % 2 != 0 {
                    self.odd_winding[ra][k] = true;
                }
            }
            return;
        }
        // pos(rb) - pos(ra) = rel
        let (root, child, child_offset) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb, rel)
        } else {
            (rb, ra, [-rel[0], -rel[1], -rel[2]])
        };
        self.parent[child] = root as u32;
        self.offset[child] = child_offset;
        if self.rank[root] == self.rank[child] {
            self.rank[root] += 1;
        }
        let w = self.odd_winding[child];
        for k in 0..3 {
            self.odd_winding[root][k] |= w[k];
        }
    }
}

/// Partition of the cells into super-checks induced by a loss set.
#[derive(Debug, Clone)]
pub struct SuperCheckPartition {
    component_of: Vec<u32>,
    members: Vec<Vec<CellId>>,
    boundary: Vec<Vec<FaceId>>,
    wraps: [bool; 3],
}

impl SuperCheckPartition {
    /// Merge the two cells of every lost face. Components are numbered in order of their
    /// smallest cell; member and boundary lists are sorted.
    pub fn build(lattice: &Lattice, losses: &LossSet) -> Self {
        let n = lattice.n_cells();
        let size = lattice.size() as i64;
        let mut uf = WindingUnionFind::new(n);
        for f in losses.faces() {
            let [upper, lower] = lattice.face_cells(f);
            let mut step = [0i64; 3];
            step[lattice.face_normal(f).index()] = 1;
            uf.union(lower.index(), upper.index(), step, size);
        }

        let mut wraps = [false; 3];
        let mut id_of_root = vec![u32::MAX; n];
        let mut component_of = vec![0u32; n];
        let mut members: Vec<Vec<CellId>> = Vec::new();
        for c in 0..n {
            let (root, _) = uf.find(c);
            if id_of_root[root] == u32::MAX {
                id_of_root[root] = members.len() as u32;
                members.push(Vec::new());
                for (k, w) in wraps.iter_mut().enumerate() {
                    *w |= uf.odd_winding[root][k];
                }
            }
            let id = id_of_root[root];
            component_of[c] = id;
            members[id as usize].push(CellId(c as u32));
        }

        let mut boundary: Vec<Vec<FaceId>> = vec![Vec::new(); members.len()];
        for f in lattice.faces() {
            if losses.is_lost(f) {
                continue;
            }
            let [a, b] = lattice.face_cells(f);
            let (ca, cb) = (component_of[a.index()], component_of[b.index()]);
            if ca != cb {
                boundary[ca as usize].push(f);
                boundary[cb as usize].push(f);
            }
        }

        SuperCheckPartition {
            component_of,
            members,
            boundary,
            wraps,
        }
    }

    pub fn n_components(&self) -> usize {
        self.members.len()
    }

    pub fn component_of(&self, cell: CellId) -> ComponentId {
        ComponentId(self.component_of[cell.index()])
    }

    pub fn members(&self, k: ComponentId) -> &[CellId] {
        &self.members[k.index()]
    }

    /// Non-lost faces with exactly one incident cell in the component.
    pub fn boundary(&self, k: ComponentId) -> &[FaceId] {
        &self.boundary[k.index()]
    }

    pub fn components(&self) -> impl Iterator<Item = ComponentId> {
        (0..self.members.len() as u32).map(ComponentId)
    }

    /// Whether some lost-face cluster winds an odd number of times around each axis.
    pub fn wraps(&self) -> [bool; 3] {
        self.wraps
    }

    pub fn percolates(&self) -> bool {
        self.wraps.iter().any(|&w| w)
    }
}

pub fn build_partition(lattice: &Lattice, losses: &LossSet) -> SuperCheckPartition {
    SuperCheckPartition::build(lattice, losses)
}

/// Per-axis loss percolation: `true` for axis `a` when a cluster of lost faces contains a
/// cycle with odd winding number along `a`.
pub fn detect_percolation(partition: &SuperCheckPartition) -> [bool; 3] {
    partition.wraps()
}

/// Product of the recorded outcomes over the boundary faces of a super-check.
pub fn component_parity(
    partition: &SuperCheckPartition,
    outcomes: &OutcomeGrid,
    component: ComponentId,
) -> i8 {
    let odd = partition
        .boundary(component)
        .iter()
        .filter(|&&f| outcomes.flipped().contains(f))
        .count()
        % 2
        == 1;
    if odd {
        -1
    } else {
        1
    }
}

/// A closed sheet of faces homologous to the coordinate plane normal to `direction`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSurface {
    direction: Axis,
    faces: FaceSet,
}

/// Result of checking a surface against the defining properties directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceAudit {
    /// Every lattice edge lies on an even number of surface faces.
    pub closed: bool,
    /// Intersection parity with straight dual loops along each axis, when consistent across
    /// all parallel loops; `None` if parallel loops disagree.
    pub winding: [Option<bool>; 3],
    pub avoids_losses: bool,
}

impl SurfaceAudit {
    pub fn is_valid_for(&self, direction: Axis) -> bool {
        self.closed
            && self.avoids_losses
            && Axis::ALL
                .iter()
                .all(|&a| self.winding[a.index()] == Some(a == direction))
    }
}

impl TestSurface {
    pub fn direction(&self) -> Axis {
        self.direction
    }

    pub fn faces(&self) -> &FaceSet {
        &self.faces
    }

    pub fn weight(&self) -> usize {
        self.faces.len()
    }

    /// Verify closure, wrapping and loss avoidance by direct counting.
    pub fn audit(&self, lattice: &Lattice, losses: &LossSet) -> SurfaceAudit {
        let mut on_edge = vec![0u8; lattice.n_edges()];
        for f in self.faces.iter() {
            for e in lattice.face_edges(f) {
                on_edge[e.index()] ^= 1;
            }
        }
        let closed = on_edge.iter().all(|&n| n == 0);

        let l = lattice.size();
        let mut winding = [None; 3];
        for axis in Axis::ALL {
            let (u, v) = (axis.next().index(), axis.prev().index());
            let mut parity = None;
            let mut consistent = true;
            for i in 0..l {
                for j in 0..l {
                    let mut through = [0; 3];
                    through[u] = i;
                    through[v] = j;
                    let p = lattice
                        .dual_loop(axis, through)
                        .iter()
                        .filter(|&&f| self.faces.contains(f))
                        .count()
                        % 2
                        == 1;
                    match parity {
                        None => parity = Some(p),
                        Some(q) if q != p => consistent = false,
                        _ => {}
                    }
                }
            }
            winding[axis.index()] = if consistent { parity } else { None };
        }

        let avoids_losses = self.faces.iter().all(|f| !losses.is_lost(f));
        SurfaceAudit {
            closed,
            winding,
            avoids_losses,
        }
    }
}

/// Is `f` on the flat seam plane normal to `direction` at coordinate `offset`?
fn on_seam(lattice: &Lattice, f: FaceId, direction: Axis, offset: usize) -> bool {
    lattice.face_normal(f) == direction && lattice.face_base(f)[direction.index()] == offset
}

/// Assign every cell a bit such that the surface `seam + Σ_{h(c)=1} ∂c` contains no lost face.
///
/// Within a super-check the bits are forced up to one free flip per component (`flip`). Returns
/// `None` when the constraints conflict, which happens exactly when a lost cycle crosses the
/// seam an odd number of times.
fn forced_cell_bits(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    losses: &LossSet,
    direction: Axis,
    offset: usize,
    flip: &dyn Fn(ComponentId) -> bool,
) -> Option<Vec<bool>> {
    let mut bit: Vec<Option<bool>> = vec![None; lattice.n_cells()];
    let mut queue = VecDeque::new();
    for k in partition.components() {
        let root = partition.members(k)[0];
        bit[root.index()] = Some(flip(k));
        queue.push_back(root);
        while let Some(c) = queue.pop_front() {
            let hc = bit[c.index()].expect("queued cells are assigned");
            for (slot, f) in lattice.cell_faces(c).into_iter().enumerate() {
                if !losses.is_lost(f) {
                    continue;
                }
                let n = lattice.cell_neighbor(c, slot);
                let want = hc ^ on_seam(lattice, f, direction, offset);
                match bit[n.index()] {
                    None => {
                        bit[n.index()] = Some(want);
                        queue.push_back(n);
                    }
                    Some(b) if b != want => return None,
                    Some(_) => {}
                }
            }
        }
    }
    Some(bit.into_iter().map(|b| b.expect("every cell is in a component")).collect())
}

fn surface_from_bits(
    lattice: &Lattice,
    losses: &LossSet,
    bits: &[bool],
    direction: Axis,
    offset: usize,
) -> TestSurface {
    let mut faces = FaceSet::empty(lattice);
    for f in lattice.faces() {
        if losses.is_lost(f) {
            continue;
        }
        let [a, b] = lattice.face_cells(f);
        if bits[a.index()] ^ bits[b.index()] ^ on_seam(lattice, f, direction, offset) {
            faces.insert(f);
        }
    }
    TestSurface { direction, faces }
}

/// Flip whole super-checks while that strictly shrinks the surface. Components are visited in
/// index order, sweeping until a full pass makes no change.
fn shrink_by_component_flips(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    bits: &mut [bool],
    direction: Axis,
    offset: usize,
) {
    loop {
        let mut changed = false;
        for k in partition.components() {
            let mut inside = 0usize;
            let mut outside = 0usize;
            for &f in partition.boundary(k) {
                let [a, b] = lattice.face_cells(f);
                if bits[a.index()] ^ bits[b.index()] ^ on_seam(lattice, f, direction, offset) {
                    inside += 1;
                } else {
                    outside += 1;
                }
            }
            if inside > outside {
                for &c in partition.members(k) {
                    bits[c.index()] ^= true;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Deformed test surface for `direction`, or `None` if lost faces block every such surface.
///
/// Starts from the flat plane at coordinate 0, multiplies in the cell boundaries needed to move
/// off every lost face, then greedily flips whole super-checks while that lowers the face count.
/// Deterministic for given inputs.
pub fn build_test_surface(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    losses: &LossSet,
    direction: Axis,
) -> Option<TestSurface> {
    let mut bits = forced_cell_bits(lattice, partition, losses, direction, 0, &|_| false)?;
    shrink_by_component_flips(lattice, partition, &mut bits, direction, 0);
    Some(surface_from_bits(lattice, losses, &bits, direction, 0))
}

/// A valid but randomly chosen test surface: random seam offset and a random free flip for
/// every super-check. Used to check that verdicts do not depend on the surface chosen.
pub fn build_random_test_surface<R: Rng + ?Sized>(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    losses: &LossSet,
    direction: Axis,
    rng: &mut R,
) -> Option<TestSurface> {
    let offset = rng.gen_range(0..lattice.size());
    let flips: Vec<bool> = (0..partition.n_components()).map(|_| rng.gen()).collect();
    let bits = forced_cell_bits(lattice, partition, losses, direction, offset, &|k| {
        flips[k.index()]
    })?;
    Some(surface_from_bits(lattice, losses, &bits, direction, offset))
}

/// Surfaces for all three directions, or `None` if any is blocked.
pub fn build_test_surfaces(
    lattice: &Lattice,
    partition: &SuperCheckPartition,
    losses: &LossSet,
) -> Option<[TestSurface; 3]> {
    let x = build_test_surface(lattice, partition, losses, Axis::X)?;
    let y = build_test_surface(lattice, partition, losses, Axis::Y)?;
    let z = build_test_surface(lattice, partition, losses, Axis::Z)?;
    Some([x, y, z])
}
