//! Geometry of the periodic `L × L × L` cubic lattice.
//!
//! Cells are the primal cubes; cell `(x, y, z)` occupies `[x, x+1] × [y, y+1] × [z, z+1]`.
//! A face with base `(x, y, z)` and normal `a` is the lower `a`-boundary of cell `(x, y, z)`,
//! so it separates that cell from its `-a` neighbour. An edge with base `(x, y, z)` and
//! direction `b` runs from the corner point `(x, y, z)` to `(x, y, z) + e_b`.
//!
//! Face qubits are the X-measured sites of the primal sector; edge qubits are the faces of the
//! dual lattice. All coordinates wrap modulo `L`.

use std::fmt;

use crate::error::Error;

/// One of the three lattice axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i % 3]
    }

    /// The next axis in cyclic order `X → Y → Z → X`.
    pub fn next(self) -> Axis {
        Axis::from_index(self.index() + 1)
    }

    /// The axis two steps ahead in cyclic order.
    pub fn prev(self) -> Axis {
        Axis::from_index(self.index() + 2)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(s)
    }
}

pub type Coord = [usize; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl FaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Indexing and incidence for the periodic cubic lattice.
///
/// Cells are numbered `x + L (y + L z)`; face and edge `(base, axis)` is numbered
/// `3 · cell(base) + axis`, which makes ids lexicographic in (base cell, axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lattice {
    size: usize,
}

impl Lattice {
    pub const MIN_SIZE: usize = 2;

    pub fn new(size: usize) -> Result<Self, Error> {
        if size < Self::MIN_SIZE {
            return Err(Error::InvalidSize(size));
        }
        if size > 1024 {
            return Err(Error::InvalidSize(size));
        }
        Ok(Lattice { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_cells(&self) -> usize {
        self.size * self.size * self.size
    }

    pub fn n_faces(&self) -> usize {
        3 * self.n_cells()
    }

    pub fn n_edges(&self) -> usize {
        3 * self.n_cells()
    }

    pub fn cell(&self, c: Coord) -> CellId {
        let l = self.size;
        CellId((c[0] % l + l * (c[1] % l + l * (c[2] % l))) as u32)
    }

    pub fn cell_coord(&self, cell: CellId) -> Coord {
        let l = self.size;
        let i = cell.index();
        [i % l, (i / l) % l, i / (l * l)]
    }

    pub fn face(&self, base: Coord, normal: Axis) -> FaceId {
        FaceId(3 * self.cell(base).0 + normal as u32)
    }

    pub fn face_base(&self, face: FaceId) -> Coord {
        self.cell_coord(CellId(face.0 / 3))
    }

    pub fn face_normal(&self, face: FaceId) -> Axis {
        Axis::from_index(face.index() % 3)
    }

    pub fn edge(&self, base: Coord, direction: Axis) -> EdgeId {
        EdgeId(3 * self.cell(base).0 + direction as u32)
    }

    pub fn edge_base(&self, edge: EdgeId) -> Coord {
        self.cell_coord(CellId(edge.0 / 3))
    }

    pub fn edge_direction(&self, edge: EdgeId) -> Axis {
        Axis::from_index(edge.index() % 3)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        (0..self.n_cells() as u32).map(CellId)
    }

    pub fn faces(&self) -> impl Iterator<Item = FaceId> {
        (0..self.n_faces() as u32).map(FaceId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.n_edges() as u32).map(EdgeId)
    }

    /// Move `c` by `delta ∈ {-1, +1}` along `axis`, wrapping around the torus.
    pub fn shift(&self, mut c: Coord, axis: Axis, delta: isize) -> Coord {
        let l = self.size as isize;
        let a = axis.index();
        c[a] = (c[a] as isize + delta).rem_euclid(l) as usize;
        c
    }

    /// The two cells separated by `face`: its base cell and the base cell's `-normal` neighbour.
    pub fn face_cells(&self, face: FaceId) -> [CellId; 2] {
        let base = self.face_base(face);
        let normal = self.face_normal(face);
        [self.cell(base), self.cell(self.shift(base, normal, -1))]
    }

    /// The six faces bounding `cell`, ordered (low X, high X, low Y, high Y, low Z, high Z).
    pub fn cell_faces(&self, cell: CellId) -> [FaceId; 6] {
        let c = self.cell_coord(cell);
        let mut out = [FaceId(0); 6];
        for axis in Axis::ALL {
            out[2 * axis.index()] = self.face(c, axis);
            out[2 * axis.index() + 1] = self.face(self.shift(c, axis, 1), axis);
        }
        out
    }

    /// The neighbour of `cell` across face number `slot` of [`Lattice::cell_faces`].
    pub fn cell_neighbor(&self, cell: CellId, slot: usize) -> CellId {
        let axis = Axis::from_index(slot / 2);
        let delta = if slot % 2 == 0 { -1 } else { 1 };
        self.cell(self.shift(self.cell_coord(cell), axis, delta))
    }

    /// The four boundary edges of `face`, ordered by (direction `normal+1`, then `normal+2`),
    /// low side before high side.
    pub fn face_edges(&self, face: FaceId) -> [EdgeId; 4] {
        let base = self.face_base(face);
        let normal = self.face_normal(face);
        let (b, c) = (normal.next(), normal.prev());
        [
            self.edge(base, b),
            self.edge(self.shift(base, c, 1), b),
            self.edge(base, c),
            self.edge(self.shift(base, b, 1), c),
        ]
    }

    /// The four faces containing `edge` on their boundary, i.e. the CPHASE partners of the edge
    /// qubit. Ordered by (normal `direction+1`, then `direction+2`), the face on the edge's
    /// high side before the one on its low side.
    pub fn edge_faces(&self, edge: EdgeId) -> [FaceId; 4] {
        let base = self.edge_base(edge);
        let dir = self.edge_direction(edge);
        let mut out = [FaceId(0); 4];
        for (i, normal) in [dir.next(), dir.prev()].into_iter().enumerate() {
            // The face spans `dir` and the remaining axis `span`.
            let span = if normal.next() == dir { normal.prev() } else { normal.next() };
            out[2 * i] = self.face(base, normal);
            out[2 * i + 1] = self.face(self.shift(base, span, -1), normal);
        }
        out
    }

    /// Faces of the straight dual loop along `axis` through the line of cells whose other two
    /// coordinates equal those of `through`.
    pub fn dual_loop(&self, axis: Axis, through: Coord) -> Vec<FaceId> {
        (0..self.size)
            .map(|k| {
                let mut c = through;
                c[axis.index()] = k;
                self.face(c, axis)
            })
            .collect()
    }
}

/// Sign-free set of faces stored as a dense membership vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaceSet {
    bits: Vec<bool>,
}

impl FaceSet {
    pub fn empty(lattice: &Lattice) -> Self {
        FaceSet {
            bits: vec![false; lattice.n_faces()],
        }
    }

    pub fn from_faces(lattice: &Lattice, faces: impl IntoIterator<Item = FaceId>) -> Self {
        let mut s = Self::empty(lattice);
        for f in faces {
            s.insert(f);
        }
        s
    }

    pub fn from_mask(bits: Vec<bool>) -> Self {
        FaceSet { bits }
    }

    pub fn contains(&self, f: FaceId) -> bool {
        self.bits[f.index()]
    }

    pub fn insert(&mut self, f: FaceId) {
        self.bits[f.index()] = true;
    }

    pub fn remove(&mut self, f: FaceId) {
        self.bits[f.index()] = false;
    }

    pub fn toggle(&mut self, f: FaceId) {
        self.bits[f.index()] ^= true;
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| FaceId(i as u32))
    }

    pub fn as_mask(&self) -> &[bool] {
        &self.bits
    }

    /// In-place symmetric difference.
    pub fn xor_with(&mut self, other: &FaceSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= *b;
        }
    }

    pub fn symmetric_difference(&self, other: &FaceSet) -> FaceSet {
        let mut out = self.clone();
        out.xor_with(other);
        out
    }

    /// Parity of `|self ∩ other|`.
    pub fn intersection_parity(&self, other: &FaceSet) -> bool {
        self.bits
            .iter()
            .zip(&other.bits)
            .fold(false, |acc, (a, b)| acc ^ (*a & *b))
    }
}
