//! Exact stochastic simulation primitives.
//!
//! Everything stochastic in the crate draws from an [`RngStream`] keyed by
//! `(seed, stream_id)`. The key selects a ChaCha8 stream (counter based),
//! whose first 256 bits seed a xoshiro256++ generator that produces the
//! actual draws. Every cell therefore owns an independent, reproducible
//! stream no matter in which order (or on which thread) the cells are
//! advanced.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Number of incremental propensity updates between two exact re-sums of
/// [`PropensityVector::total`].
pub const RESUM_INTERVAL: u32 = 10_000;

/// Stream-id namespaces, one per simulation layer.
pub mod streams {
    pub const POPULATION: u64 = 1 << 56;
    pub const CELL: u64 = 2 << 56;
    pub const INIT: u64 = 3 << 56;
    pub const REPLICA: u64 = 4 << 56;
    pub const POISSON: u64 = 5 << 56;

    /// Stream id for `index` inside namespace `layer`.
    pub fn id(layer: u64, index: u64) -> u64 {
        debug_assert!(index < 1 << 56);
        layer | index
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = ChaCha8Rng::seed_from_u64(seed);
        key.set_stream(stream_id);
        let inner = Xoshiro256PlusPlus::from_rng(&mut key);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Waiting time of a Poisson process with intensity `rate`. Only for
    /// hot loops where `rate > 0` is already established.
    #[inline]
    pub(crate) fn exp_unchecked(&mut self, rate: f64) -> f64 {
        exponential_from_uniform(rate, self.uniform_open())
    }

    /// Ziggurat exponential waiting time; cheaper than inversion but
    /// consumes a variable number of draws.
    #[inline]
    pub(crate) fn exp_ziggurat(&mut self, rate: f64) -> f64 {
        let e: f64 = Exp1.sample(&mut self.inner);
        e / rate
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[inline]
pub(crate) fn exponential_from_uniform(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

/// Draw an exponentially distributed waiting time, `-ln(U) / rate`.
///
/// Zero-rate channels never fire; callers must not ask for their waiting
/// time.
pub fn sample_exponential(rate: f64, rng: &mut RngStream) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::NonPositiveRate(rate));
    }
    Ok(rng.exp_unchecked(rate))
}

/// Inverse-CDF scan: first index whose running sum strictly exceeds
/// `target`. Falls back to the last positive entry when rounding leaves the
/// target just above the accumulated sum.
#[inline]
pub(crate) fn select_index(rates: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &r) in rates.iter().enumerate() {
        acc += r;
        if r > 0.0 {
            if acc > target {
                return j;
            }
            last_positive = j;
        }
    }
    last_positive
}

/// Channel rates together with their running sum.
#[derive(Debug, Clone, Default)]
pub struct PropensityVector {
    rates: Vec<f64>,
    total: f64,
    updates: u32,
}

impl PropensityVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            rates: vec![0.0; n],
            total: 0.0,
            updates: 0,
        }
    }

    pub fn from_rates(rates: Vec<f64>) -> Result<Self> {
        if let Some((channel, &value)) = rates.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::NegativePropensity { channel, value });
        }
        let total = rates.iter().sum();
        Ok(Self {
            rates,
            total,
            updates: 0,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Replace one rate, updating the total incrementally.
    #[inline]
    pub fn set(&mut self, channel: usize, value: f64) -> Result<()> {
        if !(value >= 0.0) {
            return Err(Error::NegativePropensity { channel, value });
        }
        let old = std::mem::replace(&mut self.rates[channel], value);
        self.total += value - old;
        self.updates += 1;
        if self.updates >= RESUM_INTERVAL {
            self.resum();
        }
        Ok(())
    }

    pub fn resum(&mut self) {
        self.total = self.rates.iter().sum();
        self.updates = 0;
    }
}

/// Pick channel `j` with probability `rates[j] / total`.
pub fn direct_select(p: &PropensityVector, rng: &mut RngStream) -> Result<usize> {
    if !(p.total > 0.0) {
        return Err(Error::NoEnabledChannel);
    }
    Ok(select_index(&p.rates, rng.uniform_open() * p.total))
}

/// A well-stirred reaction network over integer molecule counts.
///
/// Propensities take the compartment volume so that the same network can
/// drive a whole cell (volume = system size) or a single RDME voxel.
pub trait ReactionNetwork {
    fn n_species(&self) -> usize;

    fn n_channels(&self) -> usize;

    fn propensity(&self, channel: usize, state: &[u64], volume: f64) -> f64;

    /// Apply the state change of `channel`. Only called when its propensity
    /// is positive, so reactants are present.
    fn fire(&self, channel: usize, state: &mut [u64]);

    /// Channels whose propensity may change when `channel` fires (including
    /// `channel` itself if it does).
    fn dependents(&self, channel: usize) -> &[usize];
}

/// Evaluate every channel into `out`, rejecting negative or NaN values.
pub fn evaluate_all<N: ReactionNetwork + ?Sized>(
    net: &N,
    state: &[u64],
    volume: f64,
    out: &mut PropensityVector,
) -> Result<()> {
    for j in 0..net.n_channels() {
        let a = net.propensity(j, state, volume);
        if !(a >= 0.0) {
            return Err(Error::NegativePropensity {
                channel: j,
                value: a,
            });
        }
        out.rates[j] = a;
    }
    out.resum();
    Ok(())
}

/// Advance `state` from `t0` to `t1` with Gillespie's Direct method.
/// Returns the number of firings.
pub fn simulate_direct<N: ReactionNetwork + ?Sized>(
    net: &N,
    state: &mut [u64],
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
    let mut props = PropensityVector::zeros(net.n_channels());
    evaluate_all(net, state, volume, &mut props)?;
    let mut t = t0;
    let mut fired = 0;
    loop {
        if props.total <= 0.0 {
            // Rounding residue after the last channel switched off.
            props.resum();
            if props.total <= 0.0 {
                break;
            }
        }
        t += rng.exp_unchecked(props.total);
        if t >= t1 {
            break;
        }
        let j = select_index(&props.rates, rng.uniform_open() * props.total);
        net.fire(j, state);
        fired += 1;
        for &k in net.dependents(j) {
            props.set(k, net.propensity(k, state, volume))?;
        }
    }
    Ok(fired)
}

/// Mass-action reaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// `(species, multiplicity)` consumed; total order at most 2.
    pub reactants: Vec<(usize, u32)>,
    /// `(species, multiplicity)` produced.
    pub products: Vec<(usize, u32)>,
    pub rate: f64,
}

impl Reaction {
    pub fn new(reactants: &[(usize, u32)], products: &[(usize, u32)], rate: f64) -> Self {
        Self {
            reactants: reactants.to_vec(),
            products: products.to_vec(),
            rate,
        }
    }

    fn order(&self) -> u32 {
        self.reactants.iter().map(|&(_, m)| m).sum()
    }
}

/// Mass-action kinetics with the usual volume scaling: zeroth order
/// `k V`, first order `k X`, second order `k X Y / V` or `k X (X-1) / V`.
#[derive(Debug, Clone)]
pub struct MassActionNetwork {
    n_species: usize,
    reactions: Vec<Reaction>,
    deltas: Vec<Vec<(usize, i64)>>,
    dependents: Vec<Vec<usize>>,
}

impl MassActionNetwork {
    pub fn new(n_species: usize, reactions: Vec<Reaction>) -> Result<Self> {
        for (j, r) in reactions.iter().enumerate() {
            if r.order() > 2 {
                return Err(Error::InvalidParameter(format!(
                    "reaction {j} has order {} > 2",
                    r.order()
                )));
            }
            if r.reactants.iter().chain(&r.products).any(|&(s, _)| s >= n_species) {
                return Err(Error::InvalidParameter(format!(
                    "reaction {j} references an unknown species"
                )));
            }
        }
        let deltas: Vec<Vec<(usize, i64)>> = reactions
            .iter()
            .map(|r| {
                let mut d = vec![0i64; n_species];
                for &(s, m) in &r.reactants {
                    d[s] -= m as i64;
                }
                for &(s, m) in &r.products {
                    d[s] += m as i64;
                }
                d.into_iter()
                    .enumerate()
                    .filter(|&(_, v)| v != 0)
                    .collect()
            })
            .collect();
        let dependents = deltas
            .iter()
            .map(|delta| {
                reactions
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| {
                        r.reactants
                            .iter()
                            .any(|&(s, _)| delta.iter().any(|&(t, _)| t == s))
                    })
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect();
        Ok(Self {
            n_species,
            reactions,
            deltas,
            dependents,
        })
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }
}

impl ReactionNetwork for MassActionNetwork {
    fn n_species(&self) -> usize {
        self.n_species
    }

    fn n_channels(&self) -> usize {
        self.reactions.len()
    }

    fn propensity(&self, channel: usize, state: &[u64], volume: f64) -> f64 {
        let r = &self.reactions[channel];
        match r.reactants.as_slice() {
            [] => r.rate * volume,
            [(s, 1)] => r.rate * state[*s] as f64,
            [(s, 2)] => {
                let x = state[*s] as f64;
                r.rate * x * (x - 1.0).max(0.0) / volume
            }
            [(a, 1), (b, 1)] => r.rate * state[*a] as f64 * state[*b] as f64 / volume,
            _ => unreachable!("order checked at construction"),
        }
    }

    fn fire(&self, channel: usize, state: &mut [u64]) {
        for &(s, d) in &self.deltas[channel] {
            state[s] = state[s]
                .checked_add_signed(d)
                .expect("reaction fired without its reactants");
        }
    }

    fn dependents(&self, channel: usize) -> &[usize] {
        &self.dependents[channel]
    }
}
