//! Single-cell reaction-diffusion master equation on a dual mesh.

pub mod heap;
pub mod mesh;
pub mod nsm;

pub use heap::IndexedHeap;
pub use mesh::{dual_of_triangulation, generate_disk_mesh, DualMesh, MeshEdge};
pub use nsm::{diffusion_rates, nsm_simulate, DiffusionRates, Nsm, NsmStats, VoxelState};
