//! Loss and Pauli-fault sampling for the cluster-creation circuit.
//!
//! The circuit prepares every face and edge qubit in `|+⟩`, applies a CPHASE between each face
//! and each of its four boundary edges, lets every qubit idle for one storage step, and measures
//! the face qubits in the X basis. Faults are tracked as a phase-free Pauli frame.
//!
//! Fault locations per qubit: one preparation, four gates, one storage step and one
//! measurement ([`LOCATIONS_PER_QUBIT`]).
//!
//! The four gates of each qubit run in four global time slots. For a face with normal `a`, the
//! gate with its boundary edge number `k` of [`Lattice::face_edges`] runs in slot `k` of the
//! standard schedule: edges along `a+1` occupy slots 0 and 1 (low side, high side), edges along
//! `a+2` occupy slots 2 and 3. Every edge qubit then also sees each slot exactly once.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{EdgeId, FaceId, FaceSet, Lattice};

pub const LOCATIONS_PER_QUBIT: usize = 7;
pub const GATE_SLOTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    /// Circuit-level depolarizing faults propagated through the CPHASE schedule.
    Circuit,
    /// Independent outcome flips on every face.
    Phenomenological,
}

/// When lost face qubits disappear relative to the CPHASE gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossTiming {
    /// Lost before any gate: all four partner gates degrade to noisy identities.
    BeforeGates,
    /// Lost after all gates: the gates act normally.
    AfterGates,
    /// Each lost qubit independently before (probability ½) or after the gates.
    RandomHalf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub p_prep: f64,
    pub p_storage: f64,
    pub p_meas: f64,
    pub p_gate: f64,
    /// Per-face outcome flip probability; used only in phenomenological mode.
    pub p_flip: f64,
    pub p_loss: f64,
    pub mode: NoiseMode,
    pub loss_timing: LossTiming,
}

impl NoiseParams {
    /// Circuit noise with every depolarizing rate equal to `p_comp`.
    pub fn circuit(p_comp: f64, p_loss: f64) -> Self {
        NoiseParams {
            p_prep: p_comp,
            p_storage: p_comp,
            p_meas: p_comp,
            p_gate: p_comp,
            p_flip: 0.0,
            p_loss,
            mode: NoiseMode::Circuit,
            loss_timing: LossTiming::BeforeGates,
        }
    }

    pub fn phenomenological(p_flip: f64, p_loss: f64) -> Self {
        NoiseParams {
            p_prep: 0.0,
            p_storage: 0.0,
            p_meas: 0.0,
            p_gate: 0.0,
            p_flip,
            p_loss,
            mode: NoiseMode::Phenomenological,
            loss_timing: LossTiming::BeforeGates,
        }
    }

    pub fn with_loss_timing(mut self, timing: LossTiming) -> Self {
        self.loss_timing = timing;
        self
    }

    /// The computational error rate labelling this noise model in sweeps: `p_gate` in circuit
    /// mode, `p_flip` in phenomenological mode.
    pub fn p_comp(&self) -> f64 {
        match self.mode {
            NoiseMode::Circuit => self.p_gate,
            NoiseMode::Phenomenological => self.p_flip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("p_prep", self.p_prep),
            ("p_storage", self.p_storage),
            ("p_meas", self.p_meas),
            ("p_gate", self.p_gate),
            ("p_flip", self.p_flip),
            ("p_loss", self.p_loss),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        Ok(())
    }

    /// Marginal probability that a given non-lost face outcome is flipped, ignoring losses.
    ///
    /// Circuit mode combines, as independent parity events: preparation, storage and
    /// measurement faults on the face (`2p/3` each); the four own-gate faults with a Z or Y on
    /// the face (`8p₂/15` each); the six earlier neighbouring-gate faults whose X component on a
    /// shared edge propagates onto the face through a later gate (`8p₂/15` each); and X or Y
    /// preparation faults on the four boundary edges (`2p_P/3` each).
    pub fn effective_flip_probability(&self) -> f64 {
        match self.mode {
            NoiseMode::Phenomenological => self.p_flip,
            NoiseMode::Circuit => {
                let single = |p: f64| 2.0 * p / 3.0;
                let gate = 8.0 * self.p_gate / 15.0;
                // Sum over the face's gates of the number of earlier gates on the same edge:
                // 0 + 1 + 2 + 3.
                let earlier_neighbor_gates = 6;
                let events = [
                    (single(self.p_prep), 1 + 4),
                    (single(self.p_storage), 1),
                    (single(self.p_meas), 1),
                    (gate, 4 + earlier_neighbor_gates),
                ];
                let bias: f64 = events
                    .iter()
                    .map(|&(q, n)| (1.0 - 2.0 * q).powi(n))
                    .product();
                0.5 * (1.0 - bias)
            }
        }
    }
}

/// A single-qubit Pauli with phase discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Product up to phase.
    pub fn mul(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self.has_x() ^ other.has_x(), self.has_z() ^ other.has_z())
    }

    /// Non-identity Pauli number `i ∈ {0, 1, 2}` in the order X, Y, Z.
    fn nontrivial(i: usize) -> Pauli {
        [Pauli::X, Pauli::Y, Pauli::Z][i]
    }

    /// The `i`-th of the 16 two-qubit Paulis `(first, second)`, index 0 being `I ⊗ I`.
    fn two_qubit(i: usize) -> (Pauli, Pauli) {
        let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        (all[i / 4], all[i % 4])
    }
}

/// A physical qubit: a face or an edge of the primal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qubit {
    Face(FaceId),
    Edge(EdgeId),
}

impl Qubit {
    fn index(self, lattice: &Lattice) -> usize {
        match self {
            Qubit::Face(f) => f.index(),
            Qubit::Edge(e) => lattice.n_faces() + e.index(),
        }
    }
}

/// Accumulated Pauli on every face and edge qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliFrame {
    n_faces: usize,
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliFrame {
    pub fn identity(lattice: &Lattice) -> Self {
        let n = lattice.n_faces() + lattice.n_edges();
        PauliFrame {
            n_faces: lattice.n_faces(),
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn face(&self, f: FaceId) -> Pauli {
        Pauli::from_bits(self.x[f.index()], self.z[f.index()])
    }

    pub fn edge(&self, e: EdgeId) -> Pauli {
        let i = self.n_faces + e.index();
        Pauli::from_bits(self.x[i], self.z[i])
    }

    pub fn is_identity(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    /// Multiply `p` into the qubit at raw index `i`.
    fn apply(&mut self, i: usize, p: Pauli) {
        self.x[i] ^= p.has_x();
        self.z[i] ^= p.has_z();
    }

    /// Conjugate by CPHASE between raw indices `a` and `b`.
    fn cphase(&mut self, a: usize, b: usize) {
        let (xa, xb) = (self.x[a], self.x[b]);
        self.z[a] ^= xb;
        self.z[b] ^= xa;
    }

    /// Qubit-wise product with another frame.
    pub fn mul_assign(&mut self, other: &PauliFrame) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= *b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= *b;
        }
    }

    /// Faces whose frame label anticommutes with X, i.e. would flip an X-basis outcome.
    pub fn z_faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.z[..self.n_faces]
            .iter()
            .enumerate()
            .filter(|(_, &z)| z)
            .map(|(i, _)| FaceId(i as u32))
    }
}

/// Where in the circuit a fault acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultLocation {
    /// Right after preparation, before any gate.
    Preparation,
    /// Right after the gates of the given slot.
    AfterSlot(u8),
    /// During the idle step after all gates, before measurement.
    Storage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fault {
    pub qubit: Qubit,
    pub location: FaultLocation,
    pub pauli: Pauli,
}

impl Fault {
    pub fn new(qubit: Qubit, location: FaultLocation, pauli: Pauli) -> Self {
        Fault { qubit, location, pauli }
    }
}

/// Assignment of the four gates of every face to time slots.
///
/// `slot_of[k]` is the slot of the gate between a face and its `k`-th boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GateSchedule {
    slot_of: [u8; GATE_SLOTS],
}

impl GateSchedule {
    pub fn standard() -> Self {
        GateSchedule { slot_of: [0, 1, 2, 3] }
    }

    /// A relabelled schedule; `perm` must be a permutation of `0..4`.
    pub fn permuted(perm: [u8; GATE_SLOTS]) -> Option<Self> {
        let mut seen = [false; GATE_SLOTS];
        for &p in &perm {
            if p as usize >= GATE_SLOTS || seen[p as usize] {
                return None;
            }
            seen[p as usize] = true;
        }
        Some(GateSchedule { slot_of: perm })
    }

    pub fn slot(&self, edge_position: usize) -> u8 {
        self.slot_of[edge_position]
    }
}

impl Default for GateSchedule {
    fn default() -> Self {
        Self::standard()
    }
}

/// Gate list of the cluster-creation circuit for one lattice, grouped by time slot.
#[derive(Debug, Clone)]
pub struct CircuitLayout {
    lattice: Lattice,
    schedule: GateSchedule,
    slots: [Vec<(FaceId, EdgeId)>; GATE_SLOTS],
}

impl CircuitLayout {
    pub fn new(lattice: Lattice, schedule: GateSchedule) -> Self {
        let mut slots: [Vec<(FaceId, EdgeId)>; GATE_SLOTS] = Default::default();
        for f in lattice.faces() {
            for (k, e) in lattice.face_edges(f).into_iter().enumerate() {
                slots[schedule.slot(k) as usize].push((f, e));
            }
        }
        CircuitLayout {
            lattice,
            schedule,
            slots,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn schedule(&self) -> GateSchedule {
        self.schedule
    }

    /// Gates `(face, edge)` executed in `slot`, in face order.
    pub fn gates(&self, slot: usize) -> &[(FaceId, EdgeId)] {
        &self.slots[slot]
    }

    /// Propagate `faults` to the end of the circuit.
    ///
    /// Gates touching a face in `degraded` act as the identity (the face was lost before the
    /// gates ran). Faults at [`FaultLocation::AfterSlot`] see only strictly later gates.
    pub fn propagate(&self, faults: &[Fault], degraded: Option<&FaceSet>) -> PauliFrame {
        let lat = &self.lattice;
        let mut frame = PauliFrame::identity(lat);
        let inject = |frame: &mut PauliFrame, at: FaultLocation| {
            for fault in faults.iter().filter(|f| f.location == at) {
                frame.apply(fault.qubit.index(lat), fault.pauli);
            }
        };
        inject(&mut frame, FaultLocation::Preparation);
        for slot in 0..GATE_SLOTS {
            self.apply_slot(&mut frame, slot, degraded);
            inject(&mut frame, FaultLocation::AfterSlot(slot as u8));
        }
        inject(&mut frame, FaultLocation::Storage);
        frame
    }

    fn apply_slot(&self, frame: &mut PauliFrame, slot: usize, degraded: Option<&FaceSet>) {
        let n_faces = self.lattice.n_faces();
        for &(f, e) in &self.slots[slot] {
            if degraded.is_some_and(|d| d.contains(f)) {
                continue;
            }
            frame.cphase(f.index(), n_faces + e.index());
        }
    }
}

/// Face qubits that were lost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossSet {
    lost: FaceSet,
    count: usize,
}

impl LossSet {
    pub fn none(lattice: &Lattice) -> Self {
        LossSet {
            lost: FaceSet::empty(lattice),
            count: 0,
        }
    }

    pub fn from_faces(lattice: &Lattice, faces: impl IntoIterator<Item = FaceId>) -> Self {
        Self::from_set(FaceSet::from_faces(lattice, faces))
    }

    pub fn from_set(lost: FaceSet) -> Self {
        let count = lost.len();
        LossSet { lost, count }
    }

    pub fn is_lost(&self, f: FaceId) -> bool {
        self.lost.contains(f)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.lost.iter()
    }

    pub fn as_set(&self) -> &FaceSet {
        &self.lost
    }
}

/// Raw data of one trial: a recorded X outcome for every face that was not lost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeGrid {
    losses: LossSet,
    flipped: FaceSet,
}

impl OutcomeGrid {
    /// Build from the set of faces whose outcome is `-1`. Flips on lost faces are dropped.
    pub fn new(losses: LossSet, mut flipped: FaceSet) -> Self {
        for f in losses.faces() {
            flipped.remove(f);
        }
        OutcomeGrid { losses, flipped }
    }

    pub fn all_plus(lattice: &Lattice, losses: LossSet) -> Self {
        Self::new(losses, FaceSet::empty(lattice))
    }

    /// `Some(±1)` for measured faces, `None` for lost ones.
    pub fn outcome(&self, f: FaceId) -> Option<i8> {
        if self.losses.is_lost(f) {
            None
        } else if self.flipped.contains(f) {
            Some(-1)
        } else {
            Some(1)
        }
    }

    pub fn is_lost(&self, f: FaceId) -> bool {
        self.losses.is_lost(f)
    }

    pub fn losses(&self) -> &LossSet {
        &self.losses
    }

    /// Measured faces with outcome `-1`; this is the error chain seen by the decoder.
    pub fn flipped(&self) -> &FaceSet {
        &self.flipped
    }

    pub fn n_flipped(&self) -> usize {
        self.flipped.len()
    }
}

/// Each face lost independently with probability `p_loss`.
pub fn sample_losses<R: Rng + ?Sized>(lattice: &Lattice, p_loss: f64, rng: &mut R) -> LossSet {
    let mask = (0..lattice.n_faces()).map(|_| rng.gen::<f64>() < p_loss).collect();
    LossSet::from_set(FaceSet::from_mask(mask))
}

fn depolarize<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Option<Pauli> {
    let u: f64 = rng.gen();
    if u < p {
        Some(Pauli::nontrivial(((u / p) * 3.0).min(2.0) as usize))
    } else {
        None
    }
}

fn depolarize_two<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Option<(Pauli, Pauli)> {
    let u: f64 = rng.gen();
    if u < p {
        let i = 1 + ((u / p) * 15.0).min(14.0) as usize;
        Some(Pauli::two_qubit(i))
    } else {
        None
    }
}

/// Sample circuit faults and propagate them to the end-of-circuit frame.
///
/// Random draws are consumed in a fixed order: preparation (faces, then edges), loss timing for
/// each lost face (only under [`LossTiming::RandomHalf`]), gate faults slot by slot in layout
/// order, then storage (faces, then edges).
pub fn sample_circuit_noise<R: Rng + ?Sized>(
    layout: &CircuitLayout,
    params: &NoiseParams,
    losses: &LossSet,
    rng: &mut R,
) -> Result<PauliFrame> {
    if params.mode != NoiseMode::Circuit {
        return Err(Error::WrongMode { expected: "circuit" });
    }
    let lat = layout.lattice();
    let n_faces = lat.n_faces();
    let n_qubits = n_faces + lat.n_edges();
    let mut frame = PauliFrame::identity(lat);

    for q in 0..n_qubits {
        if let Some(p) = depolarize(params.p_prep, rng) {
            frame.apply(q, p);
        }
    }

    let degraded = match params.loss_timing {
        LossTiming::BeforeGates => losses.as_set().clone(),
        LossTiming::AfterGates => FaceSet::empty(lat),
        LossTiming::RandomHalf => {
            let mut d = FaceSet::empty(lat);
            for f in losses.faces() {
                if rng.gen::<bool>() {
                    d.insert(f);
                }
            }
            d
        }
    };

    for slot in 0..GATE_SLOTS {
        layout.apply_slot(&mut frame, slot, Some(&degraded));
        for &(f, e) in layout.gates(slot) {
            let (fi, ei) = (f.index(), n_faces + e.index());
            if degraded.contains(f) {
                if let Some(p) = depolarize(params.p_gate, rng) {
                    frame.apply(ei, p);
                }
            } else if let Some((pf, pe)) = depolarize_two(params.p_gate, rng) {
                frame.apply(fi, pf);
                frame.apply(ei, pe);
            }
        }
    }

    for q in 0..n_qubits {
        if let Some(p) = depolarize(params.p_storage, rng) {
            frame.apply(q, p);
        }
    }
    Ok(frame)
}

/// X-basis readout of every non-lost face.
///
/// An outcome is flipped when the frame label on the face is Z or Y, and additionally with
/// probability `2p_M/3` for a measurement depolarizing event.
pub fn measure<R: Rng + ?Sized>(
    lattice: &Lattice,
    params: &NoiseParams,
    frame: &PauliFrame,
    losses: &LossSet,
    rng: &mut R,
) -> OutcomeGrid {
    let p_readout = 2.0 * params.p_meas / 3.0;
    let mut flipped = FaceSet::empty(lattice);
    for f in lattice.faces() {
        if losses.is_lost(f) {
            continue;
        }
        let mut flip = frame.face(f).has_z();
        if p_readout > 0.0 && rng.gen::<f64>() < p_readout {
            flip = !flip;
        }
        if flip {
            flipped.insert(f);
        }
    }
    OutcomeGrid::new(losses.clone(), flipped)
}

/// Independent flips with probability `p_flip` on every non-lost face, after sampling losses.
pub fn sample_phenomenological<R: Rng + ?Sized>(
    lattice: &Lattice,
    p_flip: f64,
    p_loss: f64,
    rng: &mut R,
) -> OutcomeGrid {
    let losses = sample_losses(lattice, p_loss, rng);
    sample_flips(lattice, p_flip, losses, rng)
}

/// Independent flips with probability `p_flip` on the non-lost faces of a given loss set.
pub fn sample_flips<R: Rng + ?Sized>(
    lattice: &Lattice,
    p_flip: f64,
    losses: LossSet,
    rng: &mut R,
) -> OutcomeGrid {
    let mut flipped = FaceSet::empty(lattice);
    for f in lattice.faces() {
        if !losses.is_lost(f) && rng.gen::<f64>() < p_flip {
            flipped.insert(f);
        }
    }
    OutcomeGrid::new(losses, flipped)
}
