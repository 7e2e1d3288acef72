use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interface between two voxels: shared dual-edge length `e` and centre
/// distance `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshEdge {
    pub k: usize,
    pub l: usize,
    pub e: f64,
    pub d: f64,
}

/// Voxels of a single cell: the dual cells of a triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct DualMesh {
    volumes: Vec<f64>,
    edges: Vec<MeshEdge>,
    total_volume: f64,
    /// Voxel centres (the primal vertices), if known.
    centers: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    volumes: Vec<f64>,
    edges: Vec<[f64; 4]>,
}

impl DualMesh {
    /// Validated mesh from volumes and undirected edges.
    pub fn new(volumes: Vec<f64>, edges: Vec<MeshEdge>) -> Result<Self> {
        let n = volumes.len();
        if n == 0 {
            return Err(Error::InvalidMesh("no voxels".into()));
        }
        if let Some((k, v)) = volumes.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidMesh(format!("voxel {k} has volume {v}")));
        }
        let mut seen = BTreeMap::new();
        for e in &edges {
            if e.k >= n || e.l >= n || e.k == e.l {
                return Err(Error::InvalidMesh(format!("bad edge ({}, {})", e.k, e.l)));
            }
            if !(e.e > 0.0 && e.d > 0.0 && e.e.is_finite() && e.d.is_finite()) {
                return Err(Error::InvalidMesh(format!(
                    "edge ({}, {}) has e = {}, d = {}",
                    e.k, e.l, e.e, e.d
                )));
            }
            if seen.insert((e.k.min(e.l), e.k.max(e.l)), ()).is_some() {
                return Err(Error::InvalidMesh(format!("duplicate edge ({}, {})", e.k, e.l)));
            }
        }
        let mesh = Self {
            total_volume: volumes.iter().sum(),
            volumes,
            edges,
            centers: Vec::new(),
        };
        if !mesh.is_connected() {
            return Err(Error::InvalidMesh("mesh graph is not connected".into()));
        }
        Ok(mesh)
    }

    /// Parse `{"volumes": [...], "edges": [[k, l, e, d], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: MeshFile = serde_json::from_str(text)?;
        let edges = f
            .edges
            .iter()
            .map(|&[k, l, e, d]| {
                let index = |x: f64| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(Error::InvalidMesh(format!("edge endpoint {x} is not an index")))
                    }
                };
                Ok(MeshEdge { k: index(k)?, l: index(l)?, e, d })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(f.volumes, edges)
    }

    pub fn to_json(&self) -> String {
        let f = MeshFile {
            volumes: self.volumes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| [e.k as f64, e.l as f64, e.e, e.d])
                .collect(),
        };
        serde_json::to_string(&f).expect("mesh serializes")
    }

    /// One voxel holding the whole volume.
    pub fn single_voxel(volume: f64) -> Result<Self> {
        Self::new(vec![volume], Vec::new())
    }

    pub fn n_voxels(&self) -> usize {
        self.volumes.len()
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    fn is_connected(&self) -> bool {
        let n = self.n_voxels();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.k].push(e.l);
            adj[e.l].push(e.k);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}

/// Disk of concentric rings: a centre vertex and `6r + 1` vertices on
/// ring `r`, consecutive rings stitched into triangles in angular order.
/// Voxels are the barycentric dual cells, scaled so their volumes add up
/// to `total_volume`. Three rings give 40 voxels.
pub fn generate_disk_mesh(n_rings: usize, total_volume: f64) -> Result<DualMesh> {
    if n_rings < 1 {
        return Err(Error::InvalidMesh("a disk mesh needs at least one ring".into()));
    }
    if !(total_volume > 0.0 && total_volume.is_finite()) {
        return Err(Error::InvalidMesh(format!("total volume {total_volume}")));
    }
    let mut points = vec![[0.0, 0.0]];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    for r in 1..=n_rings {
        let m = 6 * r + 1;
        let radius = r as f64 / n_rings as f64;
        let ids = (0..m)
            .map(|k| {
                let a = TAU * k as f64 / m as f64;
                points.push([radius * a.cos(), radius * a.sin()]);
                points.len() - 1
            })
            .collect();
        rings.push(ids);
    }
    let mut triangles = Vec::new();
    for pair in rings.windows(2) {
        let (inner, outer) = (&pair[0], &pair[1]);
        let (a, b) = (inner.len(), outer.len());
        let (mut i, mut j) = (0, 0);
        while i < a || j < b {
            let next_inner = (i + 1) as f64 / a as f64;
            let next_outer = (j + 1) as f64 / b as f64;
            if j < b && (i == a || next_outer <= next_inner) {
                triangles.push([inner[i % a], outer[j % b], outer[(j + 1) % b]]);
                j += 1;
            } else {
                if a > 1 {
                    triangles.push([inner[i % a], inner[(i + 1) % a], outer[j % b]]);
                }
                i += 1;
            }
        }
    }
    dual_of_triangulation(&points, &triangles, total_volume)
}

fn area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])).abs()
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Barycentric dual of a triangulation, rescaled to `total_volume`.
pub fn dual_of_triangulation(
    points: &[[f64; 2]],
    triangles: &[[usize; 3]],
    total_volume: f64,
) -> Result<DualMesh> {
    let raw_area: f64 = triangles
        .iter()
        .map(|t| area(points[t[0]], points[t[1]], points[t[2]]))
        .sum();
    if !(raw_area > 0.0) {
        return Err(Error::InvalidMesh("triangulation has no area".into()));
    }
    let s = (total_volume / raw_area).sqrt();
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0] * s, p[1] * s]).collect();
    let mut volumes = vec![0.0; pts.len()];
    let mut shared: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for t in triangles {
        let [a, b, c] = t.map(|v| pts[v]);
        let third = area(a, b, c) / 3.0;
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let mid = [(pts[u][0] + pts[v][0]) / 2.0, (pts[u][1] + pts[v][1]) / 2.0];
            *shared.entry((u.min(v), u.max(v))).or_insert(0.0) += dist(mid, centroid);
        }
        for v in t {
            volumes[*v] += third;
        }
    }
    let sum: f64 = volumes.iter().sum();
    volumes.iter_mut().for_each(|v| *v *= total_volume / sum);
    let edges = shared
        .into_iter()
        .map(|((k, l), e)| MeshEdge { k, l, e, d: dist(pts[k], pts[l]) })
        .collect();
    let mut mesh = DualMesh::new(volumes, edges)?;
    mesh.centers = pts;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_disk_has_forty_voxels() {
        let m = generate_disk_mesh(3, 400.0).unwrap();
        assert_eq!(m.n_voxels(), 40);
        assert!((m.volumes().iter().sum::<f64>() - 400.0).abs() < 400.0 * 1e-10);
        assert!((m.total_volume() - 400.0).abs() < 400.0 * 1e-10);
    }

    #[test]
    fn smallest_disk() {
        let m = generate_disk_mesh(1, 1.0).unwrap();
        assert_eq!(m.n_voxels(), 8);
        assert!(m.volumes().iter().all(|&v| v > 0.0));
        // centre connects to all seven rim vertices
        assert_eq!(m.edges().iter().filter(|e| e.k == 0).count(), 7);
    }

    #[test]
    fn zero_rings_rejected() {
        assert!(generate_disk_mesh(0, 400.0).is_err());
    }

    #[test]
    fn volumes_normalised_for_many_sizes() {
        for rings in 1..8 {
            for total in [1.0, 37.5, 400.0, 4000.0] {
                let m = generate_disk_mesh(rings, total).unwrap();
                let s: f64 = m.volumes().iter().sum();
                assert!((s - total).abs() <= total * 1e-10);
            }
        }
    }

    #[test]
    fn interior_dual_edges_match_triangle_geometry() {
        // equilateral pair sharing an edge: each half of the dual edge is
        // the midpoint-centroid distance h/3 of that triangle
        let h = 3f64.sqrt() / 2.0;
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, h], [0.5, -h]];
        let m = dual_of_triangulation(&pts, &[[0, 1, 2], [1, 0, 3]], 2.0 * h / 2.0).unwrap();
        let shared = m.edges().iter().find(|e| (e.k, e.l) == (0, 1)).unwrap();
        assert!((shared.e - 2.0 * h / 3.0).abs() < 1e-12);
        assert!((shared.d - 1.0).abs() < 1e-12);
        assert!((m.volumes()[0] - h / 3.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = generate_disk_mesh(2, 10.0).unwrap();
        let back = DualMesh::from_json(&m.to_json()).unwrap();
        assert_eq!(back.volumes(), m.volumes());
        assert_eq!(back.edges(), m.edges());
        let bad = r#"{"volumes": [1.0, 1.0], "edges": []}"#;
        assert!(matches!(DualMesh::from_json(bad), Err(Error::InvalidMesh(_))));
        let neg = r#"{"volumes": [1.0, -1.0], "edges": [[0, 1, 1, 1]]}"#;
        assert!(DualMesh::from_json(neg).is_err());
        let extra = r#"{"volumes": [1.0], "edges": [], "name": "x"}"#;
        assert!(DualMesh::from_json(extra).is_err());
    }
}
