#![allow(dead_code)]

use topoloss::noise::OutcomeGrid;
use topoloss::{CellId, FaceSet, Lattice};

pub fn lat(l: usize) -> Lattice {
    Lattice::new(l).unwrap()
}

/// Cells whose six recorded outcomes multiply to -1, by direct counting.
pub fn failed_cells(lattice: &Lattice, grid: &OutcomeGrid) -> Vec<CellId> {
    odd_cells(lattice, grid.flipped())
}

pub fn odd_cells(lattice: &Lattice, chain: &FaceSet) -> Vec<CellId> {
    lattice
        .cells()
        .filter(|&c| {
            lattice
                .cell_faces(c)
                .iter()
                .filter(|&&f| chain.contains(f))
                .count()
                % 2
                == 1
        })
        .collect()
}
