//! Junctional and protrusional contact sets over the population grid.
//!
//! Junctional contacts are the cells in lattice-adjacent voxels plus any
//! co-occupant of the same voxel. Protrusional contacts are the remaining
//! cells within the protrusion length whose direction falls into the
//! protrusion sector, seen from either end of the pair.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dlcm::grid::{CellId, PopulationGrid};
use crate::dlcm::lattice::Lattice;
use crate::error::{Error, Result};

const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtrusionSpec {
    /// Reach, centre to centre, in cell radii.
    pub length_l: f64,
    /// Axis direction in radians.
    pub theta: f64,
    /// Full angular width of the sector in radians.
    pub dtheta: f64,
    /// The sector also opens around `theta + pi`.
    pub bidirectional: bool,
}

impl Default for ProtrusionSpec {
    fn default() -> Self {
        Self {
            length_l: 3.5,
            theta: 0.0,
            dtheta: 2.0 * PI,
            bidirectional: false,
        }
    }
}

impl ProtrusionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_l >= 0.0 && self.length_l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "protrusion length must be nonnegative, got {}",
                self.length_l
            )));
        }
        if !(0.0..=2.0 * PI + ANGLE_EPS).contains(&self.dtheta) {
            return Err(Error::InvalidParameter(format!(
                "angular width must lie in [0, 2pi], got {}",
                self.dtheta
            )));
        }
        Ok(())
    }

    fn is_isotropic(&self) -> bool {
        self.dtheta >= 2.0 * PI - ANGLE_EPS
    }

    /// Whether a protrusion from a cell at `from` reaches a cell at `to`.
    pub fn covers(&self, from: [f64; 2], to: [f64; 2]) -> bool {
        let dx = to[0] - from[0];
        let dy = to[1] - from[1];
        let l = self.length_l;
        if dx * dx + dy * dy > l * l * (1.0 + 1e-12) + 1e-12 {
            return false;
        }
        if self.is_isotropic() {
            return true;
        }
        let angle = dy.atan2(dx);
        let half = 0.5 * self.dtheta + ANGLE_EPS;
        wrap(angle - self.theta).abs() <= half
            || (self.bidirectional && wrap(angle - self.theta - PI).abs() <= half)
    }
}

/// Wrap an angle into (-pi, pi].
fn wrap(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Per-cell contact sets, each sorted by cell id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContactGraph {
    junctional: Vec<Vec<CellId>>,
    protrusional: Vec<Vec<CellId>>,
}

impl ContactGraph {
    pub fn from_sets(mut junctional: Vec<Vec<CellId>>, mut protrusional: Vec<Vec<CellId>>) -> Self {
        assert_eq!(junctional.len(), protrusional.len());
        for s in junctional.iter_mut().chain(protrusional.iter_mut()) {
            s.sort_unstable();
            s.dedup();
        }
        Self {
            junctional,
            protrusional,
        }
    }

    /// Every cell a junctional contact of every other one.
    pub fn complete(n: usize) -> Self {
        Self::from_sets(
            (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect(),
            vec![Vec::new(); n],
        )
    }

    pub fn n_cells(&self) -> usize {
        self.junctional.len()
    }

    pub fn junctional(&self, i: CellId) -> &[CellId] {
        &self.junctional[i]
    }

    pub fn protrusional(&self, i: CellId) -> &[CellId] {
        &self.protrusional[i]
    }

    /// Reindex the graph under `perm` (old id -> new id).
    pub fn relabel(&self, perm: &[CellId]) -> Self {
        let n = self.n_cells();
        let mut j = vec![Vec::new(); n];
        let mut p = vec![Vec::new(); n];
        for old in 0..n {
            j[perm[old]] = self.junctional[old].iter().map(|&c| perm[c]).collect();
            p[perm[old]] = self.protrusional[old].iter().map(|&c| perm[c]).collect();
        }
        Self::from_sets(j, p)
    }
}

/// Cells sharing a lattice edge with `cell`'s voxel, plus its co-occupants.
pub fn junctional_contacts(grid: &PopulationGrid, cell: CellId) -> Vec<CellId> {
    let Some(v) = grid.voxel_of(cell) else {
        return Vec::new();
    };
    let mut out: Vec<CellId> = grid
        .cells_in(v)
        .iter()
        .copied()
        .filter(|&c| c != cell)
        .chain(
            grid.lattice()
                .neighbors(v)
                .iter()
                .flat_map(|&(w, _)| grid.cells_in(w).iter().copied()),
        )
        .collect();
    out.sort_unstable();
    out
}

/// Protrusional contacts by a scan over every cell.
pub fn protrusional_contacts(
    grid: &PopulationGrid,
    cell: CellId,
    spec: &ProtrusionSpec,
) -> Vec<CellId> {
    let Some(v) = grid.voxel_of(cell) else {
        return Vec::new();
    };
    let lat = grid.lattice();
    let ci = lat.center(v);
    let mut out = Vec::new();
    for j in 0..grid.n_cells() {
        let w = grid.voxel_of(j).unwrap();
        if j == cell || w == v || lat.are_adjacent(v, w) {
            continue;
        }
        let cj = lat.center(w);
        if spec.covers(ci, cj) || spec.covers(cj, ci) {
            out.push(j);
        }
    }
    out
}

/// Builds and incrementally maintains a [`ContactGraph`] for one
/// protrusion specification.
#[derive(Debug, Clone)]
pub struct ContactModel {
    spec: ProtrusionSpec,
    /// Voxels within protrusion reach of each voxel.
    reach: Vec<Vec<usize>>,
    /// Voxels whose cells may see their sets change when this voxel changes.
    influence: Vec<Vec<usize>>,
}

impl ContactModel {
    pub fn new(lattice: &Lattice, spec: ProtrusionSpec) -> Self {
        let reach = lattice.reach(spec.length_l);
        let influence = lattice.reach(spec.length_l.max(lattice.max_edge_distance()) + 2.0);
        Self {
            spec,
            reach,
            influence,
        }
    }

    pub fn spec(&self) -> &ProtrusionSpec {
        &self.spec
    }

    pub fn build(&self, grid: &PopulationGrid) -> ContactGraph {
        let n = grid.n_cells();
        let mut graph = ContactGraph {
            junctional: vec![Vec::new(); n],
            protrusional: vec![Vec::new(); n],
        };
        for c in 0..n {
            self.recompute(&mut graph, grid, c);
        }
        graph
    }

    fn recompute(&self, graph: &mut ContactGraph, grid: &PopulationGrid, cell: CellId) {
        graph.junctional[cell] = junctional_contacts(grid, cell);
        let v = grid.voxel_of(cell).unwrap();
        let lat = grid.lattice();
        let ci = lat.center(v);
        let mut p = Vec::new();
        for &w in &self.reach[v] {
            if lat.are_adjacent(v, w) {
                continue;
            }
            let cw = lat.center(w);
            if self.spec.covers(ci, cw) || self.spec.covers(cw, ci) {
                p.extend_from_slice(grid.cells_in(w));
            }
        }
        p.sort_unstable();
        graph.protrusional[cell] = p;
    }

    /// Bring `graph` up to date after a population event already applied
    /// to `grid`. Only cells near the event's voxels are recomputed.
    pub fn rebuild_after_event(
        &self,
        graph: &mut ContactGraph,
        grid: &PopulationGrid,
        from_voxel: usize,
        to_voxel: usize,
    ) {
        let n = grid.n_cells();
        graph.junctional.resize(n, Vec::new());
        graph.protrusional.resize(n, Vec::new());
        let mut touched: Vec<CellId> = [from_voxel, to_voxel]
            .iter()
            .flat_map(|&s| {
                std::iter::once(s)
                    .chain(self.influence[s].iter().copied())
                    .flat_map(|w| grid.cells_in(w).iter().copied())
            })
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for c in touched {
            self.recompute(graph, grid, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::dlcm::grid::{EventKind, PopulationEvent};
    use crate::dlcm::lattice::distance;

    fn full_patch(rows: usize, cols: usize) -> PopulationGrid {
        let lat = Arc::new(Lattice::hexagonal(rows, cols));
        let all: Vec<usize> = (0..lat.len()).collect();
        PopulationGrid::with_cells(lat, &all).unwrap()
    }

    #[test]
    fn isolated_cell_has_no_contacts() {
        let lat = Arc::new(Lattice::hexagonal(5, 5));
        let g = PopulationGrid::with_cells(lat, &[12]).unwrap();
        assert!(junctional_contacts(&g, 0).is_empty());
        assert!(protrusional_contacts(&g, 0, &ProtrusionSpec::default()).is_empty());
    }

    #[test]
    fn full_neighbourhood_has_six_junctions() {
        let g = full_patch(7, 7);
        let centre = g.lattice().hex_index(3, 3).unwrap();
        assert_eq!(junctional_contacts(&g, centre).len(), 6);
    }

    #[test]
    fn boundary_cell_sees_only_occupied_neighbours() {
        let lat = Arc::new(Lattice::hexagonal(5, 5));
        let v = lat.hex_index(2, 2).unwrap();
        let nbrs: Vec<usize> = lat.neighbors(v).iter().map(|&(w, _)| w).take(3).collect();
        let mut voxels = vec![v];
        voxels.extend(&nbrs);
        let g = PopulationGrid::with_cells(lat, &voxels).unwrap();
        assert_eq!(junctional_contacts(&g, 0), vec![1, 2, 3]);
    }

    #[test]
    fn co_occupants_are_junctional() {
        let lat = Arc::new(Lattice::hexagonal(5, 5));
        let g = PopulationGrid::with_cells(lat, &[12, 12, 13]).unwrap();
        assert_eq!(junctional_contacts(&g, 0), vec![1, 2]);
        assert_eq!(junctional_contacts(&g, 2), vec![0, 1]);
    }

    #[test]
    fn isotropic_protrusions_match_distance_scan() {
        let g = full_patch(11, 11);
        let spec = ProtrusionSpec::default();
        let i = g.lattice().hex_index(5, 5).unwrap();
        let p = protrusional_contacts(&g, i, &spec);
        // brute force: cells at distance in (2, 3.5]
        let ci = g.lattice().center(i);
        let expect: Vec<usize> = (0..g.n_cells())
            .filter(|&j| {
                let d = distance(ci, g.lattice().center(j));
                d > 2.0 + 1e-9 && d <= 3.5
            })
            .collect();
        assert_eq!(p, expect);
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn zero_length_reaches_nothing() {
        let g = full_patch(7, 7);
        let spec = ProtrusionSpec {
            length_l: 0.0,
            ..Default::default()
        };
        assert!(ContactModel::new(g.lattice(), spec)
            .build(&g)
            .protrusional
            .iter()
            .all(Vec::is_empty));
    }

    #[test]
    fn horizontal_protrusions_stay_near_axis() {
        let g = full_patch(15, 15);
        let spec = ProtrusionSpec {
            length_l: 5.0,
            theta: PI,
            dtheta: PI / 20.0,
            bidirectional: true,
        };
        let graph = ContactModel::new(g.lattice(), spec).build(&g);
        let lat = g.lattice();
        let mut total = 0;
        for i in 0..g.n_cells() {
            let ci = lat.center(i);
            for &j in graph.protrusional(i) {
                let cj = lat.center(j);
                let angle = (cj[1] - ci[1]).atan2(cj[0] - ci[0]);
                assert!(angle.sin().abs() <= (PI / 40.0).sin() + 1e-9);
                total += 1;
            }
        }
        assert!(total > 0);
        // interior cell: the two cells four radii away along its row
        let c = lat.hex_index(7, 7).unwrap();
        assert_eq!(
            graph.protrusional(c),
            &[lat.hex_index(7, 5).unwrap(), lat.hex_index(7, 9).unwrap()]
        );
    }

    #[test]
    fn one_sided_sector_is_symmetrised() {
        let lat = Arc::new(Lattice::hexagonal(3, 9));
        let a = lat.hex_index(1, 2).unwrap();
        let b = lat.hex_index(1, 5).unwrap();
        let g = PopulationGrid::with_cells(lat, &[a, b]).unwrap();
        let spec = ProtrusionSpec {
            length_l: 6.5,
            theta: 0.0,
            dtheta: 0.2,
            bidirectional: false,
        };
        // a points at b; b points away, but the contact is shared
        let graph = ContactModel::new(g.lattice(), spec).build(&g);
        assert_eq!(graph.protrusional(0), &[1]);
        assert_eq!(graph.protrusional(1), &[0]);
    }

    #[test]
    fn model_matches_scan() {
        let g = full_patch(9, 9);
        let spec = ProtrusionSpec {
            length_l: 4.5,
            theta: 0.3,
            dtheta: 1.0,
            bidirectional: true,
        };
        let graph = ContactModel::new(g.lattice(), spec).build(&g);
        for c in 0..g.n_cells() {
            assert_eq!(graph.protrusional(c), protrusional_contacts(&g, c, &spec));
        }
    }

    #[test]
    fn validate_rejects_bad_spec() {
        let bad = ProtrusionSpec {
            dtheta: 7.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let neg = ProtrusionSpec {
            length_l: -1.0,
            ..Default::default()
        };
        assert!(neg.validate().is_err());
    }

    fn check_graph_invariants(graph: &ContactGraph, isotropic: bool) {
        for i in 0..graph.n_cells() {
            let j = graph.junctional(i);
            let p = graph.protrusional(i);
            assert!(!j.contains(&i) && !p.contains(&i));
            assert!(j.iter().all(|c| !p.contains(c)));
            for &k in j {
                assert!(graph.junctional(k).contains(&i));
            }
            if isotropic {
                for &k in p {
                    assert!(graph.protrusional(k).contains(&i));
                }
            }
        }
    }

    fn random_event(
        grid: &PopulationGrid,
        pick_cell: usize,
        pick_dir: usize,
        proliferate: bool,
    ) -> Option<PopulationEvent> {
        let cell = pick_cell % grid.n_cells();
        let v = grid.voxel_of(cell).unwrap();
        if proliferate {
            return (grid.occupancy(v) < 2).then_some(PopulationEvent {
                t: 0.0,
                kind: EventKind::Proliferate,
                cell,
                from_voxel: v,
                to_voxel: v,
            });
        }
        let nb = grid.lattice().neighbors(v);
        let (w, _) = nb[pick_dir % nb.len()];
        (grid.occupancy(w) < 2).then_some(PopulationEvent {
            t: 0.0,
            kind: EventKind::Move,
            cell,
            from_voxel: v,
            to_voxel: w,
        })
    }

    fn spec_strategy() -> impl Strategy<Value = ProtrusionSpec> {
        prop_oneof![
            Just(ProtrusionSpec::default()),
            Just(ProtrusionSpec {
                length_l: 5.0,
                theta: PI,
                dtheta: PI / 20.0,
                bidirectional: true,
            }),
            (0.0f64..6.0, -PI..PI, 0.0f64..(2.0 * PI), any::<bool>()).prop_map(
                |(length_l, theta, dtheta, bidirectional)| ProtrusionSpec {
                    length_l,
                    theta,
                    dtheta,
                    bidirectional,
                }
            ),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn incremental_update_equals_full_rebuild(
            voxels in proptest::collection::vec(0usize..144, 50),
            spec in spec_strategy(),
            events in proptest::collection::vec((any::<usize>(), 0usize..6, any::<bool>()), 1..4),
        ) {
            let lat = Arc::new(Lattice::hexagonal(12, 12));
            let mut grid = PopulationGrid::new(lat);
            for v in voxels {
                let _ = grid.add_cell(v);
            }
            let model = ContactModel::new(grid.lattice(), spec);
            let mut graph = model.build(&grid);
            check_graph_invariants(&graph, spec.is_isotropic());
            for (c, d, prolif) in events {
                if let Some(ev) = random_event(&grid, c, d, prolif) {
                    grid.apply(&ev).unwrap();
                    model.rebuild_after_event(&mut graph, &grid, ev.from_voxel, ev.to_voxel);
                    prop_assert_eq!(&graph, &model.build(&grid));
                    check_graph_invariants(&graph, spec.is_isotropic());
                }
            }
        }
    }

    #[test]
    fn no_op_event_keeps_graph() {
        let g = full_patch(6, 6);
        let model = ContactModel::new(g.lattice(), ProtrusionSpec::default());
        let mut graph = model.build(&g);
        let before = graph.clone();
        model.rebuild_after_event(&mut graph, &g, 7, 7);
        assert_eq!(graph, before);
    }
}
