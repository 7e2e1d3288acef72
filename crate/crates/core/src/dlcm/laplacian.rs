//! Discrete Laplacian over the populated region with homogeneous or
//! constant Dirichlet data on the surrounding empty voxels.

use super::cholesky::{EnvelopeCholesky, SymmetricSparse};
use super::grid::PopulationGrid;
use crate::error::{Error, Result};

const NOT_POPULATED: usize = usize::MAX;

/// The operator `-L` restricted to the populated voxels, with Dirichlet
/// neighbours eliminated.
#[derive(Debug, Clone)]
pub struct DirichletLaplacian {
    voxels: Vec<usize>,
    row_of: Vec<usize>,
    neg_l: SymmetricSparse,
    boundary_coupling: Vec<f64>,
}

impl DirichletLaplacian {
    /// Populated voxels; row `k` of the system belongs to `voxels()[k]`.
    pub fn voxels(&self) -> &[usize] {
        &self.voxels
    }

    pub fn n(&self) -> usize {
        self.voxels.len()
    }

    pub fn row_of(&self, voxel: usize) -> Option<usize> {
        let r = self.row_of[voxel];
        (r != NOT_POPULATED).then_some(r)
    }

    /// Entry `L[i][j]` of the Laplacian itself (negative diagonal).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            -self.neg_l.diag[i]
        } else {
            self.neg_l.off[i]
                .iter()
                .find(|&&(c, _)| c == j)
                .map_or(0.0, |&(_, a)| -a)
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = self.neg_l.to_dense();
        m.iter_mut().flatten().for_each(|a| *a = -*a);
        m
    }

    /// Total edge weight from each row to empty (Dirichlet) voxels.
    pub fn boundary_coupling(&self) -> &[f64] {
        &self.boundary_coupling
    }

    pub fn factor(&self) -> Result<EnvelopeCholesky> {
        if self.n() == 0 {
            return Err(Error::InvalidParameter("no populated voxels".into()));
        }
        EnvelopeCholesky::factor(&self.neg_l).map_err(|e| match e {
            Error::Singular(m) => Error::Singular(format!(
                "populated region has no Dirichlet boundary ({m})"
            )),
            e => e,
        })
    }
}

pub fn assemble_laplacian(grid: &PopulationGrid) -> DirichletLaplacian {
    let lat = grid.lattice();
    let voxels = grid.populated();
    let mut row_of = vec![NOT_POPULATED; lat.len()];
    for (k, &v) in voxels.iter().enumerate() {
        row_of[v] = k;
    }
    let n = voxels.len();
    let mut diag = vec![0.0; n];
    let mut off = vec![Vec::new(); n];
    let mut boundary_coupling = vec![0.0; n];
    for (k, &v) in voxels.iter().enumerate() {
        for &(w, weight) in lat.neighbors(v) {
            diag[k] += weight;
            match row_of[w] {
                NOT_POPULATED => boundary_coupling[k] += weight,
                r => off[k].push((r, -weight)),
            }
        }
    }
    DirichletLaplacian {
        voxels,
        row_of,
        neg_l: SymmetricSparse { diag, off },
        boundary_coupling,
    }
}

/// Cellular pressure on every lattice voxel; zero off the populated set.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub values: Vec<f64>,
}

impl PressureField {
    pub fn at(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Factorization cache: the operator only depends on which voxels are
/// populated, so it is refactored only when that set changes.
#[derive(Debug, Clone, Default)]
pub struct LaplaceSolver {
    cached: Option<(Vec<usize>, DirichletLaplacian, EnvelopeCholesky)>,
    factorizations: u64,
}

impl LaplaceSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// How many numeric factorizations were performed so far.
    pub fn factorizations(&self) -> u64 {
        self.factorizations
    }

    fn prepare(&mut self, grid: &PopulationGrid) -> Result<&(Vec<usize>, DirichletLaplacian, EnvelopeCholesky)> {
        let stale = match &self.cached {
            Some((key, _, _)) => {
                key.len() != grid.populated_count()
                    || key.iter().any(|&v| grid.occupancy(v) == 0)
            }
            None => true,
        };
        if stale {
            let op = assemble_laplacian(grid);
            let f = op.factor()?;
            self.factorizations += 1;
            self.cached = Some((op.voxels().to_vec(), op, f));
        }
        Ok(self.cached.as_ref().unwrap())
    }

    /// Solve `-L p = s(u)` with `p = 0` on the empty neighbours, where
    /// `s = 1` on doubly occupied voxels and 0 elsewhere.
    pub fn pressure(&mut self, grid: &PopulationGrid) -> Result<PressureField> {
        let mut values = vec![0.0; grid.n_voxels()];
        if !(0..grid.n_voxels()).any(|v| grid.occupancy(v) >= 2) {
            if grid.populated_count() == 0 {
                return Err(Error::InvalidParameter("no populated voxels".into()));
            }
            return Ok(PressureField { values });
        }
        let (_, op, f) = self.prepare(grid)?;
        let rhs: Vec<f64> = op
            .voxels()
            .iter()
            .map(|&v| if grid.occupancy(v) >= 2 { 1.0 } else { 0.0 })
            .collect();
        for (k, p) in f.solve(&rhs).into_iter().enumerate() {
            values[op.voxels()[k]] = p.max(0.0);
        }
        Ok(PressureField { values })
    }

    /// Quasi-steady nutrient: `-L c = -kappa u` inside, `c = boundary_value`
    /// on the empty neighbours, clamped below at zero. Empty voxels report
    /// the boundary value.
    pub fn nutrient(
        &mut self,
        grid: &PopulationGrid,
        boundary_value: f64,
        kappa: f64,
    ) -> Result<Vec<f64>> {
        let (_, op, f) = self.prepare(grid)?;
        let rhs: Vec<f64> = op
            .voxels()
            .iter()
            .zip(op.boundary_coupling())
            .map(|(&v, &b)| b * boundary_value - kappa * grid.occupancy(v) as f64)
            .collect();
        let mut c = vec![boundary_value; grid.n_voxels()];
        for (k, x) in f.solve(&rhs).into_iter().enumerate() {
            c[op.voxels()[k]] = x.max(0.0);
        }
        Ok(c)
    }
}

pub fn solve_pressure(grid: &PopulationGrid) -> Result<PressureField> {
    LaplaceSolver::new().pressure(grid)
}

pub fn solve_nutrient(grid: &PopulationGrid, boundary_value: f64, kappa: f64) -> Result<Vec<f64>> {
    LaplaceSolver::new().nutrient(grid, boundary_value, kappa)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::dlcm::lattice::Lattice;

    /// Dense Gaussian elimination with partial pivoting, independent of the
    /// sparse path.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    /// Finite-difference matrix assembled straight from the lattice
    /// adjacency, over the given populated voxel list.
    fn dense_laplacian(lat: &Lattice, populated: &[usize]) -> Vec<Vec<f64>> {
        let n = populated.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, &v) in populated.iter().enumerate() {
            for &(w, wt) in lat.neighbors(v) {
                m[i][i] -= wt;
                if let Some(j) = populated.iter().position(|&x| x == w) {
                    m[i][j] += wt;
                }
            }
        }
        m
    }

    fn random_grid(lat: &Arc<Lattice>, picks: &[(usize, bool)]) -> PopulationGrid {
        let mut g = PopulationGrid::new(lat.clone());
        for &(v, double) in picks {
            let v = v % lat.len();
            let _ = g.add_cell(v);
            if double {
                let _ = g.add_cell(v);
            }
        }
        g
    }

    #[test]
    fn single_voxel_system() {
        let lat = Arc::new(Lattice::hexagonal(3, 3));
        let g = PopulationGrid::with_cells(lat, &[4]).unwrap();
        let op = assemble_laplacian(&g);
        assert_eq!(op.n(), 1);
        assert_eq!(op.entry(0, 0), -6.0);
    }

    #[test]
    fn row_sums_equal_negated_boundary_coupling() {
        let lat = Arc::new(Lattice::hexagonal(8, 8));
        let g = random_grid(&lat, &(0..30).map(|k| ((k * 37) % 64, false)).collect::<Vec<_>>());
        let op = assemble_laplacian(&g);
        for i in 0..op.n() {
            let s: f64 = (0..op.n()).map(|j| op.entry(i, j)).sum();
            assert!((s + op.boundary_coupling()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_pressure_exact() {
        let lat = Arc::new(Lattice::chain(5));
        let g = PopulationGrid::with_cells(lat, &[1, 2, 2, 3]).unwrap();
        let p = solve_pressure(&g).unwrap();
        let expect = [0.0, 0.5, 1.0, 0.5, 0.0];
        for (a, b) in p.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn no_double_occupancy_means_no_pressure() {
        let lat = Arc::new(Lattice::hexagonal(6, 6));
        let g = random_grid(&lat, &(0..20).map(|k| (k * 5, false)).collect::<Vec<_>>());
        assert!(solve_pressure(&g).unwrap().values.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn full_lattice_is_singular() {
        let lat = Arc::new(Lattice::chain(3));
        let g = PopulationGrid::with_cells(lat, &[0, 1, 1, 2]).unwrap();
        assert!(matches!(solve_pressure(&g), Err(Error::Singular(_))));
    }

    #[test]
    fn nutrient_without_consumption_is_constant() {
        let lat = Arc::new(Lattice::hexagonal(7, 7));
        let g = random_grid(&lat, &(10..30).map(|k| (k, k % 3 == 0)).collect::<Vec<_>>());
        let c = solve_nutrient(&g, 1.3, 0.0).unwrap();
        assert!(c.iter().all(|&x| (x - 1.3).abs() < 1e-12));
    }

    #[test]
    fn nutrient_single_cell_dips() {
        let lat = Arc::new(Lattice::hexagonal(5, 5));
        let g = PopulationGrid::with_cells(lat, &[12]).unwrap();
        let c = solve_nutrient(&g, 1.0, 0.05).unwrap();
        // 6 c = 6 - 0.05
        assert!((c[12] - (1.0 - 0.05 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn nutrient_chain_matches_dense() {
        let lat = Arc::new(Lattice::chain(7));
        let g = PopulationGrid::with_cells(lat.clone(), &[1, 2, 2, 3, 4, 5]).unwrap();
        let kappa = 0.1;
        let c = solve_nutrient(&g, 1.0, kappa).unwrap();
        let pop = g.populated();
        let a: Vec<Vec<f64>> = dense_laplacian(&lat, &pop)
            .into_iter()
            .map(|r| r.into_iter().map(|x| -x).collect())
            .collect();
        let b: Vec<f64> = pop
            .iter()
            .map(|&v| {
                let ends = if v == 1 || v == 5 { 1.0 } else { 0.0 };
                ends - kappa * g.occupancy(v) as f64
            })
            .collect();
        let x = dense_solve(a, b);
        for (k, &v) in pop.iter().enumerate() {
            assert!((c[v] - x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cache_refactors_only_on_support_change() {
        let lat = Arc::new(Lattice::chain(8));
        let mut g = PopulationGrid::with_cells(lat, &[2, 3, 3, 4]).unwrap();
        let mut s = LaplaceSolver::new();
        s.pressure(&g).unwrap();
        s.nutrient(&g, 1.0, 0.1).unwrap();
        // 3 -> 2 leaves the support unchanged
        g.move_cell(1, 2).unwrap();
        s.pressure(&g).unwrap();
        assert_eq!(s.factorizations(), 1);
        g.move_cell(1, 1).unwrap();
        s.nutrient(&g, 1.0, 0.1).unwrap();
        assert_eq!(s.factorizations(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn operator_matches_dense_assembly(
            picks in proptest::collection::vec((0usize..49, any::<bool>()), 1..30)
        ) {
            let lat = Arc::new(Lattice::hexagonal(7, 7));
            let g = random_grid(&lat, &picks);
            let op = assemble_laplacian(&g);
            prop_assert_eq!(op.to_dense(), dense_laplacian(&lat, op.voxels()));
        }

        #[test]
        fn pressure_matches_dense_and_max_principle(
            picks in proptest::collection::vec((0usize..100, any::<bool>()), 1..60)
        ) {
            let lat = Arc::new(Lattice::hexagonal(10, 10));
            let g = random_grid(&lat, &picks);
            match solve_pressure(&g) {
                Ok(p) => {
                    let pop = g.populated();
                    let a = dense_laplacian(&lat, &pop)
                        .into_iter()
                        .map(|r| r.into_iter().map(|x| -x).collect())
                        .collect();
                    let b = pop.iter().map(|&v| if g.occupancy(v) == 2 { 1.0 } else { 0.0 }).collect();
                    let x = dense_solve(a, b);
                    for (k, &v) in pop.iter().enumerate() {
                        prop_assert!((p.at(v) - x[k]).abs() < 1e-9 * x[k].abs().max(1.0));
                    }
                    prop_assert!(p.values.iter().all(|&x| x >= 0.0));
                    let max = p.max();
                    if max > 0.0 {
                        let at_source = (0..g.n_voxels())
                            .filter(|&v| g.occupancy(v) == 2)
                            .map(|v| p.at(v))
                            .fold(0.0, f64::max);
                        prop_assert!(at_source >= max - 1e-12);
                    }
                }
                Err(e) => prop_assert!(matches!(e, Error::Singular(_))),
            }
        }
    }
}
