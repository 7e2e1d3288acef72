//! Inputs shared by the benchmarks.

use std::sync::Arc;

use tissuesim_core::dlcm::{simulate_growth, GrowthParams, Lattice, PopulationGrid};
use tissuesim_core::ndr::{build_network, NdrNetwork, NdrParams, SignalState};
use tissuesim_core::rdme::{diffusion_rates, generate_disk_mesh, DiffusionRates, DualMesh, VoxelState};
use tissuesim_core::ssa::RngStream;

/// Default kinetics with signals typical of an inhibited cell.
pub fn inhibited_cell() -> (NdrParams, NdrNetwork, [u64; 3]) {
    let p = NdrParams::default();
    let net = build_network(&p, SignalState { d_in: 2.0e4, d_out: 2.0e4, n_in: 1.0e4 });
    (p, net, [4000, 40, 4000])
}

/// The 40-voxel disk with diffusion constant `1 / omega`.
pub fn cell_mesh(omega: f64) -> (DualMesh, DiffusionRates) {
    let mesh = generate_disk_mesh(3, omega).expect("valid disk");
    let rates = diffusion_rates(&mesh, 1.0 / omega).expect("valid rates");
    (mesh, rates)
}

pub fn spread(mesh: &DualMesh, totals: [u64; 3], seed: u64) -> VoxelState {
    VoxelState::distribute(mesh, &totals, &mut RngStream::new(seed, 0))
}

/// A grown population of `cells` cells on a lattice large enough to hold it.
pub fn grown_population(cells: usize, seed: u64) -> PopulationGrid {
    let side = (2.0 * (cells as f64).sqrt()).ceil() as usize + 11;
    let lattice = Arc::new(Lattice::hexagonal(side, side));
    let start = lattice.central_voxel();
    let mut grid = PopulationGrid::with_cells(lattice, &[start]).expect("empty lattice");
    simulate_growth(&mut grid, &GrowthParams::default(), 0.0, f64::INFINITY, Some(cells), &mut RngStream::new(seed, 0))
        .expect("growth runs");
    grid
}
