//! Notch-Delta-Reporter kinetics.
//!
//! Species are molecule counts `(N, D, R)`; concentrations are counts over
//! the system volume `omega`. Cell-to-cell signals enter as frozen
//! propensity parameters, recomputed between split-steps.

use serde::{Deserialize, Serialize};

use crate::contacts::ContactGraph;
use crate::error::{Error, Result};
use crate::ssa::ReactionNetwork;

mod kernel;

pub use kernel::{nsm_ndr_simulate, simulate_ndr_direct};

pub const NOTCH: usize = 0;
pub const DELTA: usize = 1;
pub const REPORTER: usize = 2;
pub const N_SPECIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NdrParams {
    pub beta_n: f64,
    pub beta_d: f64,
    pub beta_r: f64,
    pub k_t: f64,
    pub k_c: f64,
    pub k_rs: f64,
    /// Hill exponent of Delta repression by the reporter.
    pub m: u32,
    /// Hill exponent of reporter activation.
    pub s: u32,
    pub omega: f64,
}

impl Default for NdrParams {
    fn default() -> Self {
        Self {
            beta_n: 100.0,
            beta_d: 500.0,
            beta_r: 3e5,
            k_t: 2.0,
            k_c: 0.5,
            k_rs: 1e7,
            m: 2,
            s: 2,
            omega: 400.0,
        }
    }
}

impl NdrParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("beta_n", self.beta_n),
            ("beta_d", self.beta_d),
            ("beta_r", self.beta_r),
            ("k_t", self.k_t),
            ("k_c", self.k_c),
            ("k_rs", self.k_rs),
            ("omega", self.omega),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.m == 0 || self.s == 0 {
            return Err(Error::InvalidParameter("Hill exponents must be positive".into()));
        }
        Ok(())
    }
}

/// Weights of junctional (`a`) and protrusional (`b`) contacts in the
/// incoming (`w`) and outgoing (`q`) signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalWeights {
    pub w_a: f64,
    pub w_b: f64,
    pub q_a: f64,
    pub q_b: f64,
}

impl Default for SignalWeights {
    fn default() -> Self {
        Self {
            w_a: 1.0,
            w_b: 1.0,
            q_a: 1.0,
            q_b: 1.0,
        }
    }
}

impl SignalWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w_a", self.w_a),
            ("w_b", self.w_b),
            ("q_a", self.q_a),
            ("q_b", self.q_b),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "signal weight {name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Frozen aggregated signals of one cell, in molecule counts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SignalState {
    pub d_in: f64,
    pub d_out: f64,
    pub n_in: f64,
}

impl SignalState {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            d_in: self.d_in * factor,
            d_out: self.d_out * factor,
            n_in: self.n_in * factor,
        }
    }
}

/// Weighted sums of neighbour Notch and Delta over the junctional and
/// protrusional contact sets. `totals[i]` is `(N, D)` of cell `i`, in any
/// unit; the signals come out in the same unit.
pub fn aggregate_signals(
    totals: &[(f64, f64)],
    graph: &ContactGraph,
    w: &SignalWeights,
) -> Vec<SignalState> {
    (0..totals.len())
        .map(|i| {
            let sum = |set: &[usize]| {
                set.iter().fold((0.0, 0.0), |(n, d), &j| {
                    (n + totals[j].0, d + totals[j].1)
                })
            };
            let (n_a, d_a) = sum(graph.junctional(i));
            let (n_b, d_b) = sum(graph.protrusional(i));
            SignalState {
                d_in: w.w_a * d_a + w.w_b * d_b,
                d_out: w.q_a * d_a + w.q_b * d_b,
                n_in: w.w_a * n_a + w.w_b * n_b,
            }
        })
        .collect()
}

/// Repression of Delta production, `1 / (1 + (R/omega)^2)`.
pub fn hill_r1(reporter: f64, omega: f64) -> f64 {
    repression(reporter / omega, 2)
}

/// Reporter activation, `x^2 / (k_rs + x^2)` with `x = d_out N / omega^2`.
pub fn hill_r2(d_out: f64, notch: f64, omega: f64, k_rs: f64) -> f64 {
    activation(d_out * notch / (omega * omega), k_rs, 2)
}

#[inline]
pub(crate) fn ipow(x: f64, k: i32) -> f64 {
    match k {
        1 => x,
        2 => x * x,
        _ => x.powi(k),
    }
}

#[inline]
fn repression(conc: f64, m: u32) -> f64 {
    1.0 / (1.0 + ipow(conc, m as i32))
}

#[inline]
fn activation(x: f64, k: f64, s: u32) -> f64 {
    let xs = ipow(x, s as i32);
    if xs.is_infinite() {
        1.0
    } else {
        xs / (k + xs)
    }
}

/// Channel indices of [`NdrNetwork`].
pub mod channel {
    pub const BIRTH_N: usize = 0;
    pub const BIRTH_D: usize = 1;
    pub const BIRTH_R: usize = 2;
    pub const TRANS_N: usize = 3;
    pub const TRANS_D: usize = 4;
    pub const CIS: usize = 5;
    pub const DECAY_N: usize = 6;
    pub const DECAY_D: usize = 7;
    pub const DECAY_R: usize = 8;
    pub const COUNT: usize = 9;
}

const AFTER_N: &[usize] = &[2, 3, 5, 6];
const AFTER_D: &[usize] = &[4, 5, 7];
const AFTER_R: &[usize] = &[1, 8];
const AFTER_ND: &[usize] = &[2, 3, 4, 5, 6, 7];

/// The nine NDR transitions with signals frozen.
///
/// Propensities are evaluated in a compartment of volume `V`: the whole
/// cell (`V = omega`) or one RDME voxel. Births scale with `V`, the Hill
/// factors see local concentrations, cis-inactivation is bimolecular in
/// `V`, and the signal-mediated decays are per-molecule rates that do not
/// depend on `V`.
#[derive(Debug, Clone)]
pub struct NdrNetwork {
    params: NdrParams,
    signals: SignalState,
    trans_n: f64,
    trans_d: f64,
    d_out_conc: f64,
}

impl NdrNetwork {
    pub fn params(&self) -> &NdrParams {
        &self.params
    }

    pub fn signals(&self) -> SignalState {
        self.signals
    }
}

pub fn build_network(p: &NdrParams, signals: SignalState) -> NdrNetwork {
    NdrNetwork {
        params: *p,
        signals,
        trans_n: signals.d_in / (p.k_t * p.omega),
        trans_d: signals.n_in / (p.k_t * p.omega),
        d_out_conc: signals.d_out / p.omega,
    }
}

impl ReactionNetwork for NdrNetwork {
    fn n_species(&self) -> usize {
        N_SPECIES
    }

    fn n_channels(&self) -> usize {
        channel::COUNT
    }

    #[inline]
    fn propensity(&self, ch: usize, x: &[u64], volume: f64) -> f64 {
        let p = &self.params;
        let n = x[NOTCH] as f64;
        let d = x[DELTA] as f64;
        let r = x[REPORTER] as f64;
        match ch {
            channel::BIRTH_N => p.beta_n * volume,
            channel::BIRTH_D => p.beta_d * volume * repression(r / volume, p.m),
            channel::BIRTH_R => {
                p.beta_r * volume * activation(self.d_out_conc * n / volume, p.k_rs, p.s)
            }
            channel::TRANS_N => self.trans_n * n,
            channel::TRANS_D => self.trans_d * d,
            channel::CIS => n * d / (p.k_c * volume),
            channel::DECAY_N => n,
            channel::DECAY_D => d,
            channel::DECAY_R => r,
            _ => unreachable!("channel {ch} out of range"),
        }
    }

    #[inline]
    fn fire(&self, ch: usize, x: &mut [u64]) {
        match ch {
            channel::BIRTH_N => x[NOTCH] += 1,
            channel::BIRTH_D => x[DELTA] += 1,
            channel::BIRTH_R => x[REPORTER] += 1,
            channel::TRANS_N | channel::DECAY_N => x[NOTCH] -= 1,
            channel::TRANS_D | channel::DECAY_D => x[DELTA] -= 1,
            channel::CIS => {
                x[NOTCH] -= 1;
                x[DELTA] -= 1;
            }
            channel::DECAY_R => x[REPORTER] -= 1,
            _ => unreachable!("channel {ch} out of range"),
        }
    }

    fn dependents(&self, ch: usize) -> &[usize] {
        match ch {
            channel::BIRTH_N | channel::TRANS_N | channel::DECAY_N => AFTER_N,
            channel::BIRTH_D | channel::TRANS_D | channel::DECAY_D => AFTER_D,
            channel::BIRTH_R | channel::DECAY_R => AFTER_R,
            channel::CIS => AFTER_ND,
            _ => unreachable!("channel {ch} out of range"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contacts::ContactGraph;
    use crate::ssa::{simulate_direct, RngStream};

    fn propensities(net: &NdrNetwork, x: &[u64], v: f64) -> Vec<f64> {
        (0..channel::COUNT).map(|c| net.propensity(c, x, v)).collect()
    }

    #[test]
    fn isolated_cell_has_no_signal() {
        let g = ContactGraph::from_sets(vec![vec![]], vec![vec![]]);
        let s = aggregate_signals(&[(5.0, 7.0)], &g, &SignalWeights::default());
        assert_eq!(s[0], SignalState::default());
    }

    #[test]
    fn single_junctional_neighbor() {
        let g = ContactGraph::from_sets(vec![vec![1], vec![0]], vec![vec![], vec![]]);
        let s = aggregate_signals(&[(0.0, 0.0), (3.0, 2.0)], &g, &SignalWeights::default());
        assert_eq!(s[0].d_in, 2.0);
        assert_eq!(s[0].d_out, 2.0);
        assert_eq!(s[0].n_in, 3.0);
    }

    #[test]
    fn differential_weights() {
        // cell 0 touches 1 junctionally and 2 through a protrusion
        let g = ContactGraph::from_sets(
            vec![vec![1], vec![0], vec![]],
            vec![vec![2], vec![], vec![0]],
        );
        let w = SignalWeights {
            w_a: 1.0,
            q_a: 0.001,
            w_b: 0.06,
            q_b: 0.06,
        };
        let s = aggregate_signals(&[(0.0, 0.0), (0.0, 10.0), (0.0, 10.0)], &g, &w);
        assert!((s[0].d_in - 10.6).abs() < 1e-12);
        assert!((s[0].d_out - 0.61).abs() < 1e-12);
    }

    #[test]
    fn hill_values() {
        assert_eq!(hill_r1(0.0, 400.0), 1.0);
        assert_eq!(hill_r1(400.0, 400.0), 0.5);
        assert!((hill_r1(1200.0, 400.0) - 0.1).abs() < 1e-15);

        let omega = 400.0;
        let k_rs = 1e7;
        assert_eq!(hill_r2(0.0, 10.0, omega, k_rs), 0.0);
        assert_eq!(hill_r2(10.0, 0.0, omega, k_rs), 0.0);
        // (d_out N / omega^2)^2 = k_rs
        let x = k_rs.sqrt();
        let half = hill_r2(x * omega * omega, 1.0, omega, k_rs);
        assert!((half - 0.5).abs() < 1e-12);
        assert!(hill_r2(1e300, 1e300, omega, k_rs) <= 1.0);
        assert!(hill_r2(1e12, 1e12, omega, k_rs) > 0.999);
    }

    #[test]
    fn hill_monotonicity() {
        let omega = 400.0;
        let mut prev1 = f64::INFINITY;
        let mut prev2 = -1.0;
        for k in 0..2000 {
            let x = k as f64 * 37.0;
            let r1 = hill_r1(x, omega);
            assert!(r1 <= prev1 && r1 > 0.0 && r1 <= 1.0);
            prev1 = r1;
            let r2 = hill_r2(x * 10.0, x, omega, 1e7);
            assert!(r2 >= prev2 && (0.0..1.0).contains(&r2));
            prev2 = r2;
        }
    }

    #[test]
    fn unsignalled_channels() {
        let p = NdrParams::default();
        let net = build_network(&p, SignalState::default());
        let a = propensities(&net, &[10, 10, 0], p.omega);
        assert_eq!(a[channel::BIRTH_N], 40_000.0);
        assert_eq!(a[channel::BIRTH_D], 500.0 * 400.0);
        // no outgoing delta: reporter is never produced
        assert_eq!(a[channel::BIRTH_R], 0.0);
        assert_eq!(a[channel::TRANS_N], 0.0);
        assert_eq!(a[channel::TRANS_D], 0.0);
        assert!(a[channel::CIS] > 0.0);
        assert_eq!(a[channel::DECAY_N], 10.0);
        assert_eq!(a[channel::DECAY_D], 10.0);
        assert_eq!(a[channel::DECAY_R], 0.0);
    }

    #[test]
    fn spatial_scaling_matches_well_stirred() {
        let p = NdrParams {
            beta_r: 30.0,
            k_rs: 0.5,
            ..NdrParams::default()
        };
        let signals = SignalState {
            d_in: 300.0,
            d_out: 250.0,
            n_in: 80.0,
        };
        let net = build_network(&p, signals);
        // counts exactly proportional to voxel volumes
        let shares = [0.1, 0.2, 0.3, 0.4];
        let whole = [120u64, 2400, 360];
        let mut summed = vec![0.0; channel::COUNT];
        for s in shares {
            let v = s * p.omega;
            let x: Vec<u64> = whole.iter().map(|&c| (c as f64 * s).round() as u64).collect();
            for (acc, a) in summed.iter_mut().zip(propensities(&net, &x, v)) {
                *acc += a;
            }
        }
        let direct = propensities(&net, &whole, p.omega);
        for (c, (a, b)) in summed.iter().zip(&direct).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9 * b.abs().max(1.0),
                "channel {c}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn propensities_nonnegative() {
        let p = NdrParams::default();
        for k in 0..200u64 {
            let sig = SignalState {
                d_in: k as f64 * 13.0,
                d_out: k as f64 * 7.0,
                n_in: k as f64,
            };
            let net = build_network(&p, sig);
            let x = [k * 3, k * 11 % 97, k * k];
            assert!(propensities(&net, &x, 10.0).iter().all(|&a| a >= 0.0));
        }
    }

    #[test]
    fn dependents_cover_changes() {
        let p = NdrParams::default();
        let net = build_network(
            &p,
            SignalState {
                d_in: 3.0,
                d_out: 5e5,
                n_in: 2.0,
            },
        );
        let x0 = [40u64, 50, 60];
        let before = propensities(&net, &x0, 100.0);
        for ch in 0..channel::COUNT {
            let mut x = x0;
            net.fire(ch, &mut x);
            let after = propensities(&net, &x, 100.0);
            for k in 0..channel::COUNT {
                if before[k] != after[k] {
                    assert!(
                        net.dependents(ch).contains(&k),
                        "firing {ch} changes {k}"
                    );
                }
            }
        }
    }

    #[test]
    fn notch_birth_death_is_poisson() {
        let p = NdrParams {
            beta_n: 0.05,
            beta_d: 0.0,
            beta_r: 0.0,
            omega: 400.0,
            ..NdrParams::default()
        };
        let net = build_network(&p, SignalState::default());
        let target = p.beta_n * p.omega;
        let mut rng = RngStream::new(8, 0);
        let mut x = [0u64; 3];
        simulate_direct(&net, &mut x, p.omega, 0.0, 20.0, &mut rng).unwrap();
        let n = 4000;
        let mut sum = 0.0;
        for k in 0..n {
            let t = 20.0 + 5.0 * k as f64;
            simulate_direct(&net, &mut x, p.omega, t, t + 5.0, &mut rng).unwrap();
            sum += x[NOTCH] as f64;
        }
        let mean = sum / n as f64;
        assert!((mean - target).abs() < 3.0 * (target / n as f64).sqrt(), "mean {mean}");
    }
}
