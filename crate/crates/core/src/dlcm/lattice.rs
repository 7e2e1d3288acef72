use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Static voxel geometry of the population layer.
///
/// Coordinates are in cell radii; neighbouring hexagonal voxels sit two
/// radii apart. Every adjacency carries the edge weight `e_ij / d_ij` of
/// the discrete Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    centers: Vec<[f64; 2]>,
    neighbors: Vec<Vec<(usize, f64)>>,
    hex_shape: Option<(usize, usize)>,
}

impl Lattice {
    /// Pointy-top hexagonal patch of `rows x cols` voxels, odd rows shifted
    /// right by one radius. All edge weights are 1: on a uniform lattice the
    /// common factor `e/d` is folded into the movement conversion factor.
    pub fn hexagonal(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        let mut centers = Vec::with_capacity(n);
        let mut neighbors = Vec::with_capacity(n);
        for r in 0..rows {
            for c in 0..cols {
                let shift = if r % 2 == 1 { 1.0 } else { 0.0 };
                centers.push([2.0 * c as f64 + shift, SQRT3 * r as f64]);
                let mut nb = Vec::with_capacity(6);
                let mut push = |rr: isize, cc: isize| {
                    if rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols {
                        nb.push((rr as usize * cols + cc as usize, 1.0));
                    }
                };
                let (ri, ci) = (r as isize, c as isize);
                push(ri, ci - 1);
                push(ri, ci + 1);
                let (lo, hi) = if r % 2 == 0 { (ci - 1, ci) } else { (ci, ci + 1) };
                for rr in [ri - 1, ri + 1] {
                    push(rr, lo);
                    push(rr, hi);
                }
                nb.sort_unstable_by_key(|&(j, _)| j);
                neighbors.push(nb);
            }
        }
        Self {
            centers,
            neighbors,
            hex_shape: Some((rows, cols)),
        }
    }

    /// Straight chain of `n` voxels with unit weights.
    pub fn chain(n: usize) -> Self {
        let centers = (0..n).map(|i| [2.0 * i as f64, 0.0]).collect();
        let neighbors = (0..n)
            .map(|i| {
                let mut nb = Vec::new();
                if i > 0 {
                    nb.push((i - 1, 1.0));
                }
                if i + 1 < n {
                    nb.push((i + 1, 1.0));
                }
                nb
            })
            .collect();
        Self {
            centers,
            neighbors,
            hex_shape: None,
        }
    }

    /// General lattice from `(i, j, e_ij / d_ij)` edges.
    pub fn from_edges(centers: Vec<[f64; 2]>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = centers.len();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidParameter(format!("bad lattice edge ({i}, {j})")));
            }
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lattice edge ({i}, {j}) has weight {w}"
                )));
            }
            if neighbors[i].iter().any(|&(k, _)| k == j) {
                continue;
            }
            neighbors[i].push((j, w));
            neighbors[j].push((i, w));
        }
        for nb in &mut neighbors {
            nb.sort_unstable_by_key(|&(j, _)| j);
        }
        Ok(Self {
            centers,
            neighbors,
            hex_shape: None,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, v: usize) -> [f64; 2] {
        self.centers[v]
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbors[v]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search_by_key(&b, |&(j, _)| j).is_ok()
    }

    pub fn hex_shape(&self) -> Option<(usize, usize)> {
        self.hex_shape
    }

    pub fn hex_index(&self, row: usize, col: usize) -> Option<usize> {
        let (rows, cols) = self.hex_shape?;
        (row < rows && col < cols).then_some(row * cols + col)
    }

    /// Voxel closest to the geometric centre of the lattice.
    pub fn central_voxel(&self) -> usize {
        let n = self.len() as f64;
        let (sx, sy) = self
            .centers
            .iter()
            .fold((0.0, 0.0), |(x, y), c| (x + c[0], y + c[1]));
        let mid = [sx / n, sy / n];
        (0..self.len())
            .min_by(|&a, &b| {
                distance(self.centers[a], mid).total_cmp(&distance(self.centers[b], mid))
            })
            .unwrap_or(0)
    }

    /// Longest centre distance between adjacent voxels.
    pub fn max_edge_distance(&self) -> f64 {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().map(move |&(j, _)| (i, j)))
            .map(|(i, j)| distance(self.centers[i], self.centers[j]))
            .fold(0.0, f64::max)
    }

    /// For every voxel, the other voxels whose centres lie within `radius`.
    pub fn reach(&self, radius: f64) -> Vec<Vec<usize>> {
        let r2 = radius * radius * (1.0 + 1e-12) + 1e-12;
        (0..self.len())
            .map(|i| {
                let ci = self.centers[i];
                (0..self.len())
                    .filter(|&j| {
                        let dx = self.centers[j][0] - ci[0];
                        let dy = self.centers[j][1] - ci[1];
                        j != i && dx * dx + dy * dy <= r2
                    })
                    .collect()
            })
            .collect()
    }

    /// Graph distance (in lattice steps) from every voxel to the nearest
    /// voxel of `sources`; `usize::MAX` if unreachable.
    pub fn hop_distance(&self, sources: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = std::collections::VecDeque::new();
        for s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.neighbors[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
