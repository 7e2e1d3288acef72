//! Specialised simulation kernels for the NDR network.
//!
//! Both kernels follow the same law as the generic solvers in
//! [`crate::ssa`] and [`crate::rdme`]; they only trade generality for
//! fixed-size propensity arrays that are updated in place.

use super::{channel, ipow, NdrNetwork};
use crate::error::{Error, Result};
use crate::rdme::{DiffusionRates, DualMesh, IndexedHeap, NsmStats, VoxelState};
use crate::ssa::{ReactionNetwork, RngStream};
use std::cell::RefCell;
use std::rc::Rc;

/// Kernel scan order: the reporter channels dominate the event stream in
/// most parameter regimes, so they come first.
pub(crate) const SCAN: [usize; channel::COUNT] = [
    channel::DECAY_R,
    channel::BIRTH_R,
    channel::BIRTH_D,
    channel::DECAY_D,
    channel::CIS,
    channel::TRANS_D,
    channel::BIRTH_N,
    channel::DECAY_N,
    channel::TRANS_N,
];

pub(crate) const RESUM_EVERY: u32 = crate::ssa::RESUM_INTERVAL;

const TABLE_LEN: usize = 1 << 19;
const TABLE_SLOTS: usize = 4;

thread_local! {
    static DELTA_TABLES: RefCell<Vec<((u64, u64, i32), Rc<[f64]>)>> = const { RefCell::new(Vec::new()) };
}

/// Rate constants of one compartment, with its volume folded in.
#[derive(Debug, Clone)]
struct Rates {
    inv_v: f64,
    birth_d: f64,
    birth_r: f64,
    cis: f64,
    act: f64,
    trans_n: f64,
    trans_d: f64,
    k_rs: f64,
    m: i32,
    s: i32,
}

impl Rates {
    fn new(net: &NdrNetwork, volume: f64) -> Self {
        let p = &net.params;
        Self {
            inv_v: 1.0 / volume,
            birth_d: p.beta_d * volume,
            birth_r: p.beta_r * volume,
            cis: 1.0 / (p.k_c * volume),
            act: net.d_out_conc / volume,
            trans_n: net.trans_n,
            trans_d: net.trans_d,
            k_rs: p.k_rs,
            m: p.m as i32,
            s: p.s as i32,
        }
    }

    #[inline(always)]
    fn delta_birth(&self, r: f64) -> f64 {
        self.birth_d / (1.0 + ipow(r * self.inv_v, self.m))
    }

    /// `delta_birth` at every reporter count below [`TABLE_LEN`], shared
    /// by all compartments of the thread with the same rates.
    fn delta_table(&self) -> Rc<[f64]> {
        let key = (self.birth_d.to_bits(), self.inv_v.to_bits(), self.m);
        DELTA_TABLES.with(|cache| {
            let mut cache = cache.borrow_mut();
            if let Some((_, t)) = cache.iter().find(|(k, _)| *k == key) {
                return t.clone();
            }
            let table: Rc<[f64]> = (0..TABLE_LEN).map(|r| self.delta_birth(r as f64)).collect();
            if cache.len() == TABLE_SLOTS {
                cache.remove(0);
            }
            cache.push((key, table.clone()));
            table
        })
    }

    #[inline(always)]
    fn reporter_birth(&self, n: f64) -> f64 {
        let xs = ipow(self.act * n, self.s);
        if xs.is_infinite() {
            self.birth_r
        } else {
            self.birth_r * xs / (self.k_rs + xs)
        }
    }
}

/// One well-stirred compartment: counts as floats and propensities in
/// [`SCAN`] order with their running sum.
#[derive(Debug, Clone)]
pub(crate) struct Compartment {
    k: Rates,
    a: [f64; channel::COUNT],
    total: f64,
    n: f64,
    d: f64,
    r: u64,
    since_resum: u32,
    table: Rc<[f64]>,
}

impl Compartment {
    pub(crate) fn new(net: &NdrNetwork, x: [u64; 3], volume: f64) -> Result<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "compartment volume must be positive, got {volume}"
            )));
        }
        let a = SCAN.map(|c| net.propensity(c, &x, volume));
        if let Some(v) = a.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "propensity {v} is not a finite nonnegative number"
            )));
        }
        Ok(Self {
            k: Rates::new(net, volume),
            a,
            total: a.iter().sum(),
            n: x[0] as f64,
            d: x[1] as f64,
            r: x[2],
            since_resum: 0,
            table: Rc::from([]),
        })
    }

    #[cfg(test)]
    fn total(&self) -> f64 {
        self.total
    }

    pub(crate) fn counts(&self) -> [u64; 3] {
        [self.n as u64, self.d as u64, self.r]
    }

    #[inline(always)]
    pub(crate) fn molecules(&self) -> f64 {
        self.n + self.d + self.r as f64
    }

    #[cfg(test)]
    fn propensities(&self) -> &[f64; channel::COUNT] {
        &self.a
    }

    /// Exact sum of the propensities; repairs rounding drift.
    #[inline]
    pub(crate) fn resum(&mut self) {
        self.total = self.a.iter().sum();
        self.since_resum = 0;
    }

    /// Fire the channel owning `target`, drawn uniformly on `[0, total)`.
    #[inline(always)]
    pub(crate) fn fire(&mut self, target: f64) {
        if target < self.a[0] + self.a[1] {
            self.fire_reporter(target >= self.a[0]);
        } else {
            self.fire_other(target);
        }
        self.since_resum += 1;
        if self.since_resum == RESUM_EVERY {
            self.resum();
        }
    }

    fn with_table(mut self) -> Self {
        self.table = self.k.delta_table();
        self
    }

    #[inline(always)]
    fn fire_reporter(&mut self, up: bool) {
        let r = self.r as usize;
        if let Some(w) = self.table.get(r.saturating_sub(1)..r + 2) {
            let (below, here, above) = (w[0], w[w.len() - 2], w[w.len() - 1]);
            let rise = 1.0 + (above - here);
            let fall = -1.0 + (below - here);
            self.total += if up { rise } else { fall };
            self.a[2] = if up { above } else { below };
            self.r = self.r.wrapping_add(2 * u64::from(up)).wrapping_sub(1);
            self.a[0] = self.r as f64;
            return;
        }
        self.r = self.r.wrapping_add(2 * u64::from(up)).wrapping_sub(1);
        let step = if up { 1.0 } else { -1.0 };
        let old = self.a[2];
        self.a[0] = self.r as f64;
        self.a[2] = self.k.delta_birth(self.r as f64);
        self.total += step + (self.a[2] - old);
    }

    #[inline]
    fn fire_other(&mut self, target: f64) {
        let mut acc = self.a[0] + self.a[1];
        let mut slot = channel::COUNT;
        for (j, &v) in self.a.iter().enumerate().skip(2) {
            acc += v;
            if acc > target {
                slot = j;
                break;
            }
        }
        if slot == channel::COUNT || self.a[slot] <= 0.0 {
            slot = self.a.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        }
        match slot {
            0 => self.fire_reporter(false),
            1 => self.fire_reporter(true),
            2 | 3 | 5 => self.shift_delta(if slot == 2 { 1.0 } else { -1.0 }),
            4 => {
                self.n -= 1.0;
                self.d -= 1.0;
                self.refresh_notch_delta();
            }
            _ => self.shift_notch(if slot == 6 { 1.0 } else { -1.0 }),
        }
    }

    fn shift_delta(&mut self, step: f64) {
        self.d += step;
        let (a, k) = (&mut self.a, &self.k);
        let old = a[3] + a[4] + a[5];
        a[3] = self.d;
        a[4] = self.n * self.d * k.cis;
        a[5] = k.trans_d * self.d;
        self.total += a[3] + a[4] + a[5] - old;
    }

    fn shift_notch(&mut self, step: f64) {
        self.n += step;
        let (a, k) = (&mut self.a, &self.k);
        let old = a[1] + a[4] + a[7] + a[8];
        a[1] = k.reporter_birth(self.n);
        a[4] = self.n * self.d * k.cis;
        a[7] = self.n;
        a[8] = k.trans_n * self.n;
        self.total += a[1] + a[4] + a[7] + a[8] - old;
    }

    fn refresh_notch_delta(&mut self) {
        let (a, k) = (&mut self.a, &self.k);
        let old = a[1] + a[3] + a[4] + a[5] + a[7] + a[8];
        a[1] = k.reporter_birth(self.n);
        a[3] = self.d;
        a[4] = self.n * self.d * k.cis;
        a[5] = k.trans_d * self.d;
        a[7] = self.n;
        a[8] = k.trans_n * self.n;
        self.total += a[1] + a[3] + a[4] + a[5] + a[7] + a[8] - old;
    }

    /// Add one molecule of `species` (`step = 1`) or remove one
    /// (`step = -1`).
    pub(crate) fn shift(&mut self, species: usize, step: f64) {
        match species {
            0 => self.shift_notch(step),
            1 => self.shift_delta(step),
            _ => self.fire_reporter(step > 0.0),
        }
    }
}

/// Direct-method simulation of one well-stirred NDR compartment.
///
/// Same law as [`crate::ssa::simulate_direct`] applied to `net`.
pub fn simulate_ndr_direct(
    net: &NdrNetwork,
    x: &mut [u64; 3],
    volume: f64,
    t0: f64,
    t1: f64,
    rng: &mut RngStream,
) -> Result<u64> {
    if t1 < t0 {
        return Err(Error::InvalidParameter(format!(
            "horizon t1 = {t1} precedes t0 = {t0}"
        )));
    }
    let mut c = Compartment::new(net, *x, volume)?.with_table();
    let mut t = t0;
    let mut fired = 0u64;
    loop {
        if c.total <= 0.0 {
            c.resum();
            if c.total <= 0.0 {
                break;
            }
        }
        t += rng.exp_ziggurat(c.total);
        if t >= t1 {
            break;
        }
        let target = rng.uniform_open() * c.total;
        c.fire(target);
        fired += 1;
    }
    *x = c.counts();
    Ok(fired)
}

/// Next Subvolume Method for the NDR network on one cell mesh.
///
/// Same law as [`crate::rdme::nsm_simulate`] applied to `net`.
pub fn nsm_ndr_simulate(
    mesh: &DualMesh,
    rates: &DiffusionRates,
    net: &NdrNetwork,
    state: &mut VoxelState,
    t0: f64,
    t1: f64,
    rng: &mut RngStream,
) -> Result<NsmStats> {
    if t1 < t0 {
        return Err(Error::InvalidParameter(format!(
            "horizon t1 = {t1} precedes t0 = {t0}"
        )));
    }
    let nv = mesh.n_voxels();
    if state.n_voxels() != nv || state.n_species() != 3 {
        return Err(Error::InvalidParameter(format!(
            "state is {} x {}, mesh and network need {nv} x 3",
            state.n_voxels(),
            state.n_species()
        )));
    }
    let mut comps = Vec::with_capacity(nv);
    for (v, &vol) in mesh.volumes().iter().enumerate() {
        let x = state.voxel(v);
        comps.push(Compartment::new(net, [x[0], x[1], x[2]], vol)?);
    }
    let out: Vec<f64> = (0..nv).map(|v| rates.total_out(v)).collect();
    let schedule = |c: &Compartment, q: f64, t: f64, rng: &mut RngStream| {
        let total = c.total + q * c.molecules();
        if total > 0.0 {
            t + rng.exp_ziggurat(total)
        } else {
            f64::INFINITY
        }
    };
    let keys = (0..nv)
        .map(|v| schedule(&comps[v], out[v], t0, rng))
        .collect();
    let mut heap = IndexedHeap::new(keys);
    let mut stats = NsmStats::default();
    loop {
        let (v, t) = heap.peek();
        if !(t < t1) {
            break;
        }
        let c = &mut comps[v];
        let sigma_d = out[v] * c.molecules();
        let target = rng.uniform_open() * (c.total + sigma_d);
        if target < c.total {
            c.fire(target);
            stats.reactions += 1;
        } else {
            let counts = c.counts();
            let pick = rng.uniform_open() * c.molecules();
            let species = if pick < counts[0] as f64 {
                0
            } else if pick < (counts[0] + counts[1]) as f64 {
                1
            } else {
                2
            };
            let jumps = rates.jumps(v);
            let aim = rng.uniform_open() * out[v];
            let mut acc = 0.0;
            let mut w = jumps[jumps.len() - 1].0;
            for &(l, q) in jumps {
                acc += q;
                if aim < acc {
                    w = l;
                    break;
                }
            }
            c.shift(species, -1.0);
            comps[w].shift(species, 1.0);
            let key = schedule(&comps[w], out[w], t, rng);
            heap.update(w, key);
            stats.diffusions += 1;
        }
        if comps[v].total <= 0.0 {
            comps[v].resum();
        }
        let key = schedule(&comps[v], out[v], t, rng);
        heap.update(v, key);
    }
    for (v, c) in comps.iter().enumerate() {
        state.voxel_mut(v).copy_from_slice(&c.counts());
    }
    Ok(stats)
}
