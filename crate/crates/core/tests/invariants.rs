use std::sync::Arc;

use proptest::prelude::*;
use tissuesim_core::dlcm::{Lattice, PopulationGrid, CAPACITY};
use tissuesim_core::io::snapshot::{snapshot_from_str, snapshot_to_string, CellRecord, Snapshot, Totals};
use tissuesim_core::ndr::{build_network, hill_r1, hill_r2, simulate_ndr_direct, NdrParams, SignalState};
use tissuesim_core::rdme::{diffusion_rates, generate_disk_mesh, nsm_simulate, VoxelState};
use tissuesim_core::ssa::{MassActionNetwork, RngStream};

fn small_params() -> impl Strategy<Value = NdrParams> {
    (0.5f64..5.0, 0.5f64..5.0, 0.5f64..20.0, 0.05f64..5.0, 5.0f64..40.0).prop_map(
        |(beta_n, beta_d, beta_r, k_rs, omega)| NdrParams {
            beta_n,
            beta_d,
            beta_r,
            k_rs,
            omega,
            ..NdrParams::default()
        },
    )
}

fn signals() -> impl Strategy<Value = SignalState> {
    (0.0f64..200.0, 0.0f64..200.0, 0.0f64..200.0).prop_map(|(d_in, d_out, n_in)| SignalState {
        d_in,
        d_out,
        n_in,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn direct_kernel_is_reproducible_and_bounded(
        p in small_params(),
        sig in signals(),
        x0 in prop::array::uniform3(0u64..200),
        seed in any::<u64>(),
    ) {
        let net = build_network(&p, sig);
        let run = || {
            let mut x = x0;
            let mut rng = RngStream::new(seed, 5);
            let fired = simulate_ndr_direct(&net, &mut x, p.omega, 0.0, 2.0, &mut rng).unwrap();
            (x, fired)
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a, b);
        prop_assert!(a.0.iter().all(|&v| v < 1 << 40));
    }

    #[test]
    fn pure_diffusion_conserves_every_species(
        rings in 1usize..3,
        counts in prop::collection::vec((0u64..30, 0u64..30), 1..8),
        seed in any::<u64>(),
    ) {
        let mesh = generate_disk_mesh(rings, 10.0).unwrap();
        let rates = diffusion_rates(&mesh, 0.7).unwrap();
        let net = MassActionNetwork::new(2, Vec::new()).unwrap();
        let mut state = VoxelState::zeros(mesh.n_voxels(), 2);
        for (k, &(a, b)) in counts.iter().enumerate() {
            let v = k % mesh.n_voxels();
            state.set(v, 0, state.get(v, 0) + a);
            state.set(v, 1, state.get(v, 1) + b);
        }
        let before = state.totals();
        let mut rng = RngStream::new(seed, 9);
        nsm_simulate(&mesh, &rates, &net, &mut state, 0.0, 3.0, &mut rng).unwrap();
        prop_assert_eq!(state.totals(), before);
    }

    #[test]
    fn repression_falls_and_activation_rises(
        a in 0.0f64..1e6,
        b in 0.0f64..1e6,
        notch in 0.0f64..1e5,
        omega in 1.0f64..1e3,
        k_rs in 1e-3f64..1e8,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(hill_r1(lo, omega) >= hill_r1(hi, omega));
        prop_assert!(hill_r2(lo, notch, omega, k_rs) <= hill_r2(hi, notch, omega, k_rs));
        for v in [hill_r1(lo, omega), hill_r2(hi, notch, omega, k_rs)] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn occupancy_stays_within_capacity(
        ops in prop::collection::vec((any::<bool>(), 0usize..25, 0usize..25), 1..120),
    ) {
        let mut grid = PopulationGrid::new(Arc::new(Lattice::hexagonal(5, 5)));
        for (add, a, b) in ops {
            let cells = grid.n_cells();
            if add || cells == 0 {
                let _ = grid.add_cell(a);
                prop_assert!(grid.n_cells() - cells <= 1);
            } else {
                let _ = grid.move_cell(a % cells, b);
                prop_assert_eq!(grid.n_cells(), cells);
            }
            prop_assert!((0..grid.n_voxels()).all(|v| grid.occupancy(v) <= CAPACITY));
            prop_assert!(grid.check_invariants());
        }
    }

    #[test]
    fn snapshots_round_trip_exactly(
        t in 0.0f64..1e4,
        cells in prop::collection::vec((any::<[u32; 3]>(), -1e3f64..1e3, -1e3f64..1e3, 0.0f64..1e7), 0..20),
    ) {
        let counts = Snapshot {
            t,
            cells: cells
                .iter()
                .enumerate()
                .map(|(id, &(c, x, y, _))| CellRecord {
                    id,
                    voxel_center_xy: [x, y],
                    totals: Totals { n: u64::from(c[0]), d: u64::from(c[1]), r: u64::from(c[2]) },
                })
                .collect(),
        };
        let back: Snapshot<u64> = snapshot_from_str(&snapshot_to_string(&counts)).unwrap();
        prop_assert_eq!(&back, &counts);

        let mut conc = counts.to_real();
        for (rec, &(_, _, _, z)) in conc.cells.iter_mut().zip(&cells) {
            rec.totals.r = z;
        }
        let back: Snapshot<f64> = snapshot_from_str(&snapshot_to_string(&conc)).unwrap();
        prop_assert_eq!(back, conc);
    }
}
