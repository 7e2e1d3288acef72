use rand_distr::{Binomial, Distribution};

use super::heap::IndexedHeap;
use super::mesh::DualMesh;
use crate::error::{Error, Result};
use crate::ssa::{select_index, ReactionNetwork, RngStream};

/// Per-molecule jump rates `q[k -> l] = gamma e_kl / (d_kl vol_k)`, the
/// same for every species.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionRates {
    jumps: Vec<Vec<(usize, f64)>>,
    total_out: Vec<f64>,
}

impl DiffusionRates {
    pub fn jumps(&self, k: usize) -> &[(usize, f64)] {
        &self.jumps[k]
    }

    /// `q[k -> l]`, zero when `(k, l)` is not a mesh edge.
    pub fn rate(&self, k: usize, l: usize) -> f64 {
        self.jumps[k]
            .iter()
            .find(|&&(j, _)| j == l)
            .map_or(0.0, |&(_, q)| q)
    }

    /// Total jump rate of one molecule out of voxel `k`.
    pub fn total_out(&self, k: usize) -> f64 {
        self.total_out[k]
    }
}

pub fn diffusion_rates(mesh: &DualMesh, gamma: f64) -> Result<DiffusionRates> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("diffusion constant {gamma}")));
    }
    let vol = mesh.volumes();
    let mut jumps = vec![Vec::new(); mesh.n_voxels()];
    for e in mesh.edges() {
        let w = gamma * e.e / e.d;
        if w > 0.0 {
            jumps[e.k].push((e.l, w / vol[e.k]));
            jumps[e.l].push((e.k, w / vol[e.l]));
        }
    }
    for j in &mut jumps {
        j.sort_unstable_by_key(|&(l, _)| l);
    }
    let total_out = jumps.iter().map(|j| j.iter().map(|&(_, q)| q).sum()).collect();
    Ok(DiffusionRates { jumps, total_out })
}

/// Molecule counts per voxel and species, voxel-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoxelState {
    n_species: usize,
    counts: Vec<u64>,
}

impl VoxelState {
    pub fn zeros(n_voxels: usize, n_species: usize) -> Self {
        Self {
            n_species,
            counts: vec![0; n_voxels * n_species],
        }
    }

    pub fn n_voxels(&self) -> usize {
        self.counts.len() / self.n_species.max(1)
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn get(&self, voxel: usize, species: usize) -> u64 {
        self.counts[voxel * self.n_species + species]
    }

    pub fn set(&mut self, voxel: usize, species: usize, value: u64) {
        self.counts[voxel * self.n_species + species] = value;
    }

    pub fn voxel(&self, v: usize) -> &[u64] {
        &self.counts[v * self.n_species..(v + 1) * self.n_species]
    }

    pub fn voxel_mut(&mut self, v: usize) -> &mut [u64] {
        &mut self.counts[v * self.n_species..(v + 1) * self.n_species]
    }

    /// Whole-cell count of every species.
    pub fn totals(&self) -> Vec<u64> {
        let mut t = vec![0; self.n_species];
        for row in self.counts.chunks_exact(self.n_species) {
            for (a, b) in t.iter_mut().zip(row) {
                *a += b;
            }
        }
        t
    }

    /// Scatter `totals` over the voxels of `mesh`, each molecule landing
    /// in a voxel with probability proportional to its volume.
    pub fn distribute(mesh: &DualMesh, totals: &[u64], rng: &mut RngStream) -> Self {
        let mut s = Self::zeros(mesh.n_voxels(), totals.len());
        let vols = mesh.volumes();
        for (sp, &total) in totals.iter().enumerate() {
            let mut left = total;
            let mut vol_left = mesh.total_volume();
            for (v, &vol) in vols.iter().enumerate() {
                if left == 0 {
                    break;
                }
                let take = if v + 1 == vols.len() {
                    left
                } else {
                    let p = (vol / vol_left).clamp(0.0, 1.0);
                    Binomial::new(left, p).expect("valid binomial").sample(rng)
                };
                s.set(v, sp, take);
                left -= take;
                vol_left -= vol;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NsmStats {
    pub reactions: u64,
    pub diffusions: u64,
}

/// Next Subvolume Method over one mesh with a fixed network.
pub struct Nsm<'a, N: ReactionNetwork + ?Sized> {
    mesh: &'a DualMesh,
    rates: &'a DiffusionRates,
    net: &'a N,
    n_channels: usize,
    props: Vec<f64>,
    sigma_r: Vec<f64>,
    sigma_d: Vec<f64>,
    heap: IndexedHeap,
    t: f64,
    stats: NsmStats,
}

impl<'a, N: ReactionNetwork + ?Sized> Nsm<'a, N> {
    /// Evaluate every rate in `state` and draw the first event time of each
    /// voxel after `t0`.
    pub fn new(
        mesh: &'a DualMesh,
        rates: &'a DiffusionRates,
        net: &'a N,
        state: &VoxelState,
        t0: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let nv = mesh.n_voxels();
        if state.n_voxels() != nv || state.n_species() != net.n_species() {
            return Err(Error::InvalidParameter(format!(
                "state is {} x {}, mesh and network need {} x {}",
                state.n_voxels(),
                state.n_species(),
                nv,
                net.n_species()
            )));
        }
        let nc = net.n_channels();
        let mut s = Self {
            mesh,
            rates,
            net,
            n_channels: nc,
            props: vec![0.0; nv * nc],
            sigma_r: vec![0.0; nv],
            sigma_d: vec![0.0; nv],
            heap: IndexedHeap::new(vec![f64::INFINITY; nv]),
            t: t0,
            stats: NsmStats::default(),
        };
        for v in 0..nv {
            for c in 0..nc {
                s.eval(state, v, c)?;
            }
            s.refresh_sums(state, v);
            s.reschedule(v, rng);
        }
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn stats(&self) -> NsmStats {
        self.stats
    }

    #[inline]
    fn eval(&mut self, state: &VoxelState, v: usize, c: usize) -> Result<()> {
        let a = self.net.propensity(c, state.voxel(v), self.mesh.volumes()[v]);
        if !(a >= 0.0) {
            return Err(Error::NegativeVoxelPropensity {
                voxel: v,
                channel: c,
                value: a,
            });
        }
        self.props[v * self.n_channels + c] = a;
        Ok(())
    }

    #[inline]
    fn refresh_sums(&mut self, state: &VoxelState, v: usize) {
        let nc = self.n_channels;
        self.sigma_r[v] = self.props[v * nc..(v + 1) * nc].iter().sum();
        let molecules: u64 = state.voxel(v).iter().sum();
        self.sigma_d[v] = self.rates.total_out(v) * molecules as f64;
    }

    #[inline]
    fn reschedule(&mut self, v: usize, rng: &mut RngStream) {
        let total = self.sigma_r[v] + self.sigma_d[v];
        let key = if total > 0.0 {
            self.t + rng.exp_ziggurat(total)
        } else {
            f64::INFINITY
        };
        self.heap.update(v, key);
    }

    /// Execute events until the next one would fall at or after `t1`.
    pub fn run_until(&mut self, state: &mut VoxelState, t1: f64, rng: &mut RngStream) -> Result<()> {
        let nc = self.n_channels;
        loop {
            let (v, tv) = self.heap.peek();
            if !(tv < t1) {
                break;
            }
            self.t = tv;
            let target = rng.uniform_open() * (self.sigma_r[v] + self.sigma_d[v]);
            if target < self.sigma_r[v] {
                let c = select_index(&self.props[v * nc..(v + 1) * nc], target);
                self.net.fire(c, state.voxel_mut(v));
                for &dep in self.net.dependents(c) {
                    self.eval(state, v, dep)?;
                }
                self.refresh_sums(state, v);
                self.stats.reactions += 1;
            } else {
                let w = self.diffuse(state, v, rng);
                for c in 0..nc {
                    self.eval(state, v, c)?;
                    self.eval(state, w, c)?;
                }
                self.refresh_sums(state, v);
                self.refresh_sums(state, w);
                self.reschedule(w, rng);
                self.stats.diffusions += 1;
            }
            self.reschedule(v, rng);
        }
        self.t = self.t.max(t1);
        Ok(())
    }

    /// Move one uniformly chosen molecule out of `v` along a jump chosen
    /// in proportion to its rate. Returns the destination voxel.
    fn diffuse(&mut self, state: &mut VoxelState, v: usize, rng: &mut RngStream) -> usize {
        let counts = state.voxel(v);
        let total: u64 = counts.iter().sum();
        let pick = ((rng.uniform_open() * total as f64) as u64).min(total - 1);
        let mut acc = 0;
        let mut species = counts.len() - 1;
        for (s, &x) in counts.iter().enumerate() {
            acc += x;
            if pick < acc {
                species = s;
                break;
            }
        }
        let jumps = self.rates.jumps(v);
        let target = rng.uniform_open() * self.rates.total_out(v);
        let mut acc = 0.0;
        let mut to = jumps[jumps.len() - 1].0;
        for &(l, q) in jumps {
            acc += q;
            if target < acc {
                to = l;
                break;
            }
        }
        state.voxel_mut(v)[species] -= 1;
        state.voxel_mut(to)[species] += 1;
        to
    }

    /// Every voxel's rate sums match a fresh evaluation of `state` and no
    /// scheduled time lies before the current time.
    pub fn is_consistent(&self, state: &VoxelState) -> bool {
        let nc = self.n_channels;
        (0..self.mesh.n_voxels()).all(|v| {
            let vol = self.mesh.volumes()[v];
            let fresh: Vec<f64> = (0..nc).map(|c| self.net.propensity(c, state.voxel(v), vol)).collect();
            let sr: f64 = fresh.iter().sum();
            let molecules: u64 = state.voxel(v).iter().sum();
            let sd = self.rates.total_out(v) * molecules as f64;
            let key = self.heap.key(v);
            let scheduled = if sr + sd > 0.0 { key >= self.t && key.is_finite() } else { key.is_infinite() };
            fresh == self.props[v * nc..(v + 1) * nc]
                && (sr - self.sigma_r[v]).abs() <= 1e-12 * sr.abs()
                && sd == self.sigma_d[v]
                && scheduled
        }) && self.heap.is_valid()
    }
}

/// Advance `state` from `t0` to `t1` by the Next Subvolume Method.
pub fn nsm_simulate<N: ReactionNetwork + ?Sized>(
    mesh: &DualMesh,
    rates: &DiffusionRates,
    net: &N,
    state: &mut VoxelState,
    t0: f64,
    t1: f64,
    rng: &mut RngStream,
) -> Result<NsmStats> {
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let mut nsm = Nsm::new(mesh, rates, net, state, t0, rng)?;
    nsm.run_until(state, t1, rng)?;
    Ok(nsm.stats())
}
