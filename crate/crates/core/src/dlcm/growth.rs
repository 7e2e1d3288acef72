use serde::{Deserialize, Serialize};

use super::grid::{EventKind, PopulationEvent, PopulationGrid};
use super::laplacian::{LaplaceSolver, PressureField};
use crate::error::{Error, Result};
use crate::ssa::{select_index, RngStream};

/// Conversion factors `D` of the movement rate, one per movement class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MovementFactors {
    pub double_to_single: f64,
    pub double_to_empty: f64,
    pub single_to_empty: f64,
}

impl Default for MovementFactors {
    fn default() -> Self {
        Self {
            double_to_single: 1.0,
            double_to_empty: 1.0,
            single_to_empty: 0.0,
        }
    }
}

impl MovementFactors {
    /// Factor for a move out of a voxel holding `from` cells into one
    /// holding `to`; zero unless `to < from`.
    pub fn factor(&self, from: usize, to: usize) -> f64 {
        match (from, to) {
            (2, 1) => self.double_to_single,
            (2, 0) => self.double_to_empty,
            (1, 0) => self.single_to_empty,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthParams {
    pub proliferation_rate: f64,
    pub nutrient_boundary_value: f64,
    pub consumption_kappa: f64,
    pub nutrient_threshold: f64,
    pub movement_d: MovementFactors,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self {
            proliferation_rate: 1.0,
            nutrient_boundary_value: 1.0,
            consumption_kappa: 0.05,
            nutrient_threshold: 0.5,
            movement_d: MovementFactors::default(),
        }
    }
}

impl GrowthParams {
    pub fn validate(&self) -> Result<()> {
        let m = &self.movement_d;
        for (name, v) in [
            ("proliferation_rate", self.proliferation_rate),
            ("nutrient_boundary_value", self.nutrient_boundary_value),
            ("consumption_kappa", self.consumption_kappa),
            ("nutrient_threshold", self.nutrient_threshold),
            ("movement_d.double_to_single", m.double_to_single),
            ("movement_d.double_to_empty", m.double_to_empty),
            ("movement_d.single_to_empty", m.single_to_empty),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A pressure-driven move from voxel `from` to the adjacent voxel `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Movement {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// All moves with positive rate `D (e/d) (p_from - p_to)`, in increasing
/// `(from, to)` order.
pub fn movement_rates(
    grid: &PopulationGrid,
    p: &PressureField,
    params: &GrowthParams,
) -> Vec<Movement> {
    let mut out = Vec::new();
    for from in 0..grid.n_voxels() {
        let u = grid.occupancy(from);
        if u == 0 {
            continue;
        }
        for &(to, weight) in grid.lattice().neighbors(from) {
            let d = params.movement_d.factor(u, grid.occupancy(to));
            let rate = d * weight * (p.at(from) - p.at(to));
            if rate > 0.0 {
                out.push(Movement { from, to, rate });
            }
        }
    }
    out
}

/// Timestamped population events in execution order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<PopulationEvent>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Error unless timestamps are nondecreasing.
    pub fn check_sorted(&self) -> Result<()> {
        for (k, w) in self.events.windows(2).enumerate() {
            if !(w[1].t >= w[0].t) {
                return Err(Error::UnsortedLog {
                    index: k + 1,
                    t: w[1].t,
                    previous: w[0].t,
                });
            }
        }
        Ok(())
    }

    /// Apply every event to `grid`, calling `observe` after each one.
    pub fn replay(
        &self,
        grid: &mut PopulationGrid,
        mut observe: impl FnMut(&PopulationEvent, &PopulationGrid),
    ) -> Result<()> {
        self.check_sorted()?;
        for e in &self.events {
            grid.apply(e)?;
            observe(e, grid);
        }
        Ok(())
    }
}

/// When [`simulate_growth`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthStop {
    /// Reached the end time.
    Horizon,
    /// Reached the requested number of cells.
    Population,
    /// No event has positive rate.
    Equilibrium,
}

#[derive(Debug, Clone)]
pub struct GrowthOutcome {
    pub log: EventLog,
    pub stop: GrowthStop,
    pub t_end: f64,
}

/// Event-driven population dynamics by the Direct method: pressure-driven
/// moves and nutrient-gated proliferation, run from `t0` until `t1`, until
/// `max_cells` cells exist, or until nothing can happen.
pub fn simulate_growth(
    grid: &mut PopulationGrid,
    params: &GrowthParams,
    t0: f64,
    t1: f64,
    max_cells: Option<usize>,
    rng: &mut RngStream,
) -> Result<GrowthOutcome> {
    params.validate()?;
    if grid.n_cells() == 0 {
        return Err(Error::InvalidParameter("growth needs at least one cell".into()));
    }
    let mut solver = LaplaceSolver::new();
    let mut log = EventLog::default();
    let mut t = t0;
    let mut rates = Vec::new();
    let mut prolif_voxels = Vec::new();
    loop {
        if max_cells.is_some_and(|m| grid.n_cells() >= m) {
            return Ok(GrowthOutcome { log, stop: GrowthStop::Population, t_end: t });
        }
        let p = solver.pressure(grid)?;
        let moves = movement_rates(grid, &p, params);
        prolif_voxels.clear();
        if params.proliferation_rate > 0.0 {
            let c = solver.nutrient(
                grid,
                params.nutrient_boundary_value,
                params.consumption_kappa,
            )?;
            prolif_voxels.extend((0..grid.n_voxels()).filter(|&v| {
                grid.occupancy(v) == 1 && c[v] >= params.nutrient_threshold
            }));
        }
        rates.clear();
        rates.extend(moves.iter().map(|m| m.rate));
        rates.extend(prolif_voxels.iter().map(|_| params.proliferation_rate));
        let total: f64 = rates.iter().sum();
        if !(total > 0.0) {
            return Ok(GrowthOutcome { log, stop: GrowthStop::Equilibrium, t_end: t1 });
        }
        t += rng.exp_unchecked(total);
        if t >= t1 {
            return Ok(GrowthOutcome { log, stop: GrowthStop::Horizon, t_end: t1 });
        }
        let k = select_index(&rates, rng.uniform_open() * total);
        let event = if k < moves.len() {
            let m = moves[k];
            let cells = grid.cells_in(m.from);
            let cell = if cells.len() > 1 {
                cells[(rng.uniform_open() * cells.len() as f64) as usize % cells.len()]
            } else {
                cells[0]
            };
            PopulationEvent {
                t,
                kind: EventKind::Move,
                cell,
                from_voxel: m.from,
                to_voxel: m.to,
            }
        } else {
            let v = prolif_voxels[k - moves.len()];
            PopulationEvent {
                t,
                kind: EventKind::Proliferate,
                cell: grid.cells_in(v)[0],
                from_voxel: v,
                to_voxel: v,
            }
        };
        grid.apply(&event)?;
        log.events.push(event);
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::dlcm::lattice::Lattice;

    fn hex_grid(rows: usize, cols: usize, voxels: &[usize]) -> PopulationGrid {
        PopulationGrid::with_cells(Arc::new(Lattice::hexagonal(rows, cols)), voxels).unwrap()
    }

    #[test]
    fn movement_rate_formula() {
        let grid = PopulationGrid::with_cells(Arc::new(Lattice::chain(2)), &[0, 0, 1]).unwrap();
        let p = PressureField { values: vec![1.0, 0.0] };
        let m = movement_rates(&grid, &p, &GrowthParams::default());
        assert_eq!(m, vec![Movement { from: 0, to: 1, rate: 1.0 }]);
    }

    #[test]
    fn equal_occupancy_blocks_moves() {
        let grid =
            PopulationGrid::with_cells(Arc::new(Lattice::chain(2)), &[0, 0, 1, 1]).unwrap();
        let p = PressureField { values: vec![5.0, 0.0] };
        assert!(movement_rates(&grid, &p, &GrowthParams::default()).is_empty());
    }

    #[test]
    fn zero_pressure_no_moves() {
        let grid = hex_grid(5, 5, &[6, 7, 12]);
        let p = PressureField { values: vec![0.0; 25] };
        assert!(movement_rates(&grid, &p, &GrowthParams::default()).is_empty());
    }

    #[test]
    fn equilibrium_without_proliferation() {
        let mut grid = hex_grid(6, 6, &[7, 8, 14, 20]);
        let params = GrowthParams {
            proliferation_rate: 0.0,
            ..Default::default()
        };
        let out = simulate_growth(&mut grid, &params, 0.0, 100.0, None, &mut RngStream::new(1, 0))
            .unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.stop, GrowthStop::Equilibrium);
    }

    #[test]
    fn first_event_is_proliferation() {
        let n = 4000;
        let mut mean = 0.0;
        for r in 0..n {
            let lat = Arc::new(Lattice::hexagonal(9, 9));
            let c = lat.central_voxel();
            let mut grid = PopulationGrid::with_cells(lat, &[c]).unwrap();
            let mut rng = RngStream::new(3, r);
            let out =
                simulate_growth(&mut grid, &GrowthParams::default(), 0.0, 1e9, Some(2), &mut rng)
                    .unwrap();
            assert_eq!(out.log.events[0].kind, EventKind::Proliferate);
            mean += out.log.events[0].t / n as f64;
        }
        // Exp(1): standard error 1/sqrt(n)
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn growth_stays_connected_and_replays() {
        let lat = Arc::new(Lattice::hexagonal(15, 15));
        let c = lat.central_voxel();
        let mut grid = PopulationGrid::with_cells(lat.clone(), &[c]).unwrap();
        let out = simulate_growth(
            &mut grid,
            &GrowthParams::default(),
            0.0,
            1e9,
            Some(80),
            &mut RngStream::new(9, 0),
        )
        .unwrap();
        assert_eq!(out.stop, GrowthStop::Population);
        assert_eq!(grid.n_cells(), 80);
        let mut replayed = PopulationGrid::with_cells(lat, &[c]).unwrap();
        out.log
            .replay(&mut replayed, |_, g| {
                assert!(g.is_connected());
                assert!(g.check_invariants());
            })
            .unwrap();
        assert_eq!(replayed.occupancies(), grid.occupancies());
    }

    #[test]
    fn single_to_empty_moves_can_split_the_tissue() {
        // chain 0..5: a pressure gradient pulls the lone cell at voxel 2
        // away from the double at 1 and leaves 1 and 3 disconnected
        let lat = Arc::new(Lattice::chain(5));
        let grid = PopulationGrid::with_cells(lat, &[1, 1, 2]).unwrap();
        let p = LaplaceSolver::new().pressure(&grid).unwrap();
        let on = GrowthParams {
            movement_d: MovementFactors { single_to_empty: 1.0, ..Default::default() },
            ..Default::default()
        };
        let moves = movement_rates(&grid, &p, &on);
        assert!(moves.iter().any(|m| m.from == 2 && m.to == 3));
        let off = movement_rates(&grid, &p, &GrowthParams::default());
        assert!(off.iter().all(|m| m.from == 1));
    }

    #[test]
    fn unsorted_log_rejected() {
        let e = PopulationEvent {
            t: 2.0,
            kind: EventKind::Move,
            cell: 0,
            from_voxel: 0,
            to_voxel: 1,
        };
        let log = EventLog {
            events: vec![e, PopulationEvent { t: 1.0, ..e }],
        };
        assert!(matches!(log.check_sorted(), Err(Error::UnsortedLog { index: 1, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn relaxation_terminates(
            seed in any::<u64>(),
            picks in prop::collection::vec(0usize..100, 1..80),
        ) {
            let lat = Arc::new(Lattice::hexagonal(10, 10));
            let mut grid = PopulationGrid::new(lat);
            for v in picks {
                let _ = grid.add_cell(v);
            }
            let n = grid.n_cells();
            let params = GrowthParams { proliferation_rate: 0.0, ..Default::default() };
            let mut rng = RngStream::new(seed, 0);
            let out = simulate_growth(&mut grid, &params, 0.0, f64::INFINITY, None, &mut rng)
                .unwrap();
            prop_assert_eq!(out.stop, GrowthStop::Equilibrium);
            prop_assert_eq!(grid.n_cells(), n);
            prop_assert!((0..grid.n_voxels()).all(|v| grid.occupancy(v) <= 1));
            prop_assert!(grid.check_invariants());
        }

        #[test]
        fn single_occupancy_is_at_rest(
            picks in prop::collection::btree_set(0usize..100, 1..60),
        ) {
            let lat = Arc::new(Lattice::hexagonal(10, 10));
            let voxels: Vec<usize> = picks.into_iter().collect();
            let grid = PopulationGrid::with_cells(lat, &voxels).unwrap();
            let p = LaplaceSolver::new().pressure(&grid).unwrap();
            prop_assert!(p.values.iter().all(|&x| x == 0.0));
            prop_assert!(movement_rates(&grid, &p, &GrowthParams::default()).is_empty());
        }
    }
}
