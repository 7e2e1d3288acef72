use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use crate::error::{Error, Result};

/// Maximum number of cells a population voxel can hold.
pub const CAPACITY: usize = 2;

pub type CellId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Move,
    Proliferate,
}

/// One population-level event. For a proliferation, `from_voxel ==
/// to_voxel` is the parent's voxel and the daughter takes the next free
/// cell id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationEvent {
    pub t: f64,
    pub kind: EventKind,
    pub cell: CellId,
    pub from_voxel: usize,
    pub to_voxel: usize,
}

/// Cell occupancy of the population lattice.
#[derive(Debug, Clone)]
pub struct PopulationGrid {
    lattice: Arc<Lattice>,
    occupants: Vec<Vec<CellId>>,
    cell_voxel: Vec<usize>,
    n_populated: usize,
}

impl PopulationGrid {
    pub fn new(lattice: Arc<Lattice>) -> Self {
        let occupants = vec![Vec::new(); lattice.len()];
        Self {
            lattice,
            occupants,
            cell_voxel: Vec::new(),
            n_populated: 0,
        }
    }

    /// One cell in each of `voxels` (repeats allowed up to capacity), ids in
    /// the given order.
    pub fn with_cells(lattice: Arc<Lattice>, voxels: &[usize]) -> Result<Self> {
        let mut g = Self::new(lattice);
        for &v in voxels {
            g.add_cell(v)?;
        }
        Ok(g)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn shared_lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn n_voxels(&self) -> usize {
        self.occupants.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_voxel.len()
    }

    pub fn occupancy(&self, v: usize) -> usize {
        self.occupants[v].len()
    }

    pub fn occupancies(&self) -> Vec<u8> {
        self.occupants.iter().map(|o| o.len() as u8).collect()
    }

    pub fn cells_in(&self, v: usize) -> &[CellId] {
        &self.occupants[v]
    }

    pub fn voxel_of(&self, cell: CellId) -> Option<usize> {
        self.cell_voxel.get(cell).copied()
    }

    pub fn add_cell(&mut self, v: usize) -> Result<CellId> {
        if v >= self.n_voxels() {
            return Err(Error::InvalidParameter(format!("voxel {v} outside the lattice")));
        }
        if self.occupancy(v) >= CAPACITY {
            return Err(Error::InvalidParameter(format!("voxel {v} is full")));
        }
        let id = self.cell_voxel.len();
        if self.occupants[v].is_empty() {
            self.n_populated += 1;
        }
        self.cell_voxel.push(v);
        self.occupants[v].push(id);
        Ok(id)
    }

    pub fn move_cell(&mut self, cell: CellId, to: usize) -> Result<()> {
        let from = self
            .voxel_of(cell)
            .ok_or_else(|| Error::LogStateMismatch(format!("unknown cell {cell}")))?;
        if to >= self.n_voxels() || self.occupancy(to) >= CAPACITY {
            return Err(Error::LogStateMismatch(format!(
                "cell {cell} cannot move into voxel {to}"
            )));
        }
        self.occupants[from].retain(|&c| c != cell);
        if self.occupants[from].is_empty() {
            self.n_populated -= 1;
        }
        if self.occupants[to].is_empty() {
            self.n_populated += 1;
        }
        self.occupants[to].push(cell);
        self.cell_voxel[cell] = to;
        Ok(())
    }

    /// Execute `event`, checking it against the current state. Returns the
    /// daughter id for proliferations.
    pub fn apply(&mut self, event: &PopulationEvent) -> Result<Option<CellId>> {
        let at = self.voxel_of(event.cell).ok_or_else(|| {
            Error::LogStateMismatch(format!("event references unknown cell {}", event.cell))
        })?;
        if at != event.from_voxel {
            return Err(Error::LogStateMismatch(format!(
                "cell {} is in voxel {at}, event says {}",
                event.cell, event.from_voxel
            )));
        }
        match event.kind {
            EventKind::Move => {
                if !self.lattice.are_adjacent(event.from_voxel, event.to_voxel) {
                    return Err(Error::LogStateMismatch(format!(
                        "move between non-adjacent voxels {} and {}",
                        event.from_voxel, event.to_voxel
                    )));
                }
                self.move_cell(event.cell, event.to_voxel)?;
                Ok(None)
            }
            EventKind::Proliferate => {
                if event.to_voxel != event.from_voxel {
                    return Err(Error::LogStateMismatch(
                        "daughter must start in the parent voxel".into(),
                    ));
                }
                self.add_cell(event.to_voxel)
                    .map(Some)
                    .map_err(|e| Error::LogStateMismatch(e.to_string()))
            }
        }
    }

    pub fn populated_count(&self) -> usize {
        self.n_populated
    }

    /// Populated voxels in increasing order.
    pub fn populated(&self) -> Vec<usize> {
        (0..self.n_voxels()).filter(|&v| self.occupancy(v) > 0).collect()
    }

    /// Empty voxels sharing an edge with a populated one.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.n_voxels())
            .filter(|&v| {
                self.occupancy(v) == 0
                    && self
                        .lattice
                        .neighbors(v)
                        .iter()
                        .any(|&(w, _)| self.occupancy(w) > 0)
            })
            .collect()
    }

    /// Whether the populated voxels form one edge-connected set.
    pub fn is_connected(&self) -> bool {
        let populated = self.populated();
        let Some(&start) = populated.first() else {
            return true;
        };
        let mut seen = vec![false; self.n_voxels()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &(w, _) in self.lattice.neighbors(v) {
                if !seen[w] && self.occupancy(w) > 0 {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        count == populated.len()
    }

    /// Every registered cell sits in the voxel that lists it, and no voxel
    /// exceeds capacity.
    pub fn check_invariants(&self) -> bool {
        self.occupants.iter().all(|o| o.len() <= CAPACITY)
            && self
                .cell_voxel
                .iter()
                .enumerate()
                .all(|(c, &v)| self.occupants[v].contains(&c))
            && self.occupants.iter().map(Vec::len).sum::<usize>() == self.n_cells()
            && self.occupants.iter().filter(|o| !o.is_empty()).count() == self.n_populated
    }
}
