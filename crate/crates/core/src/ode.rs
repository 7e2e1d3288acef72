//! Mean-field Notch-Delta-Reporter equations over a fixed contact graph.

use serde::{Deserialize, Serialize};

use crate::contacts::ContactGraph;
use crate::error::{Error, Result};
use crate::ndr::{aggregate_signals, NdrParams, SignalState, SignalWeights};

/// Concentrations `[n, d, r]` of every cell.
pub type OdeState = Vec<[f64; 3]>;

/// Right-hand side for given (already aggregated) signals, in
/// concentration units.
pub fn ndr_rhs_with_signals(state: &[[f64; 3]], signals: &[SignalState], p: &NdrParams) -> OdeState {
    state
        .iter()
        .zip(signals)
        .map(|(&[n, d, r], s)| {
            let x = (s.d_out * n).powi(p.s as i32);
            let act = if x.is_infinite() { 1.0 } else { x / (p.k_rs + x) };
            [
                p.beta_n - s.d_in * n / p.k_t - d * n / p.k_c - n,
                p.beta_d / (1.0 + r.powi(p.m as i32)) - d * s.n_in / p.k_t - d * n / p.k_c - d,
                p.beta_r * act - r,
            ]
        })
        .collect()
}

pub fn ndr_rhs(
    state: &[[f64; 3]],
    graph: &ContactGraph,
    w: &SignalWeights,
    p: &NdrParams,
) -> OdeState {
    let nd: Vec<(f64, f64)> = state.iter().map(|x| (x[0], x[1])).collect();
    ndr_rhs_with_signals(state, &aggregate_signals(&nd, graph, w), p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            h_min: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<OdeState>,
}

impl Trajectory {
    pub fn last(&self) -> &OdeState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration of `y' = f(t, y)` through the
/// increasing `sample_times`, returning the state at each of them.
pub fn integrate_fn(
    f: impl Fn(f64, &[f64]) -> Vec<f64>,
    y0: &[f64],
    t0: f64,
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<f64>>> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut out = Vec::with_capacity(sample_times.len());
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    k[0] = f(t, &y);
    let mut h = initial_step(&y, &k[0], opts);
    let mut stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    for &target in sample_times {
        if target < t {
            return Err(Error::InvalidParameter(format!(
                "sample time {target} precedes {t}"
            )));
        }
        while t < target {
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += step * A[s][j] * kj[i];
                    }
                    stage[i] = acc;
                }
                k[s] = f(t + C[s] * step, &stage);
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut hi = 0.0;
                let mut lo = 0.0;
                for s in 0..7 {
                    hi += B5[s] * k[s][i];
                    lo += B4[s] * k[s][i];
                }
                y5[i] = y[i] + step * hi;
                let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((step * (hi - lo)).abs() / scale);
            }
            if !err.is_finite() {
                err = f64::INFINITY;
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y5);
                // first-same-as-last: the seventh stage is f at the new point
                k.swap(0, 6);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 && last {
                h = h.max(step);
            } else {
                h = step * factor;
            }
            if h < opts.h_min && t < target {
                return Err(Error::StepSizeUnderflow(h));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(y: &[f64], f0: &[f64], opts: &OdeOptions) -> f64 {
    let d0 = y
        .iter()
        .map(|v| (v / (opts.atol + opts.rtol * v.abs())).powi(2))
        .sum::<f64>()
        .sqrt();
    let d1 = y
        .iter()
        .zip(f0)
        .map(|(v, g)| (g / (opts.atol + opts.rtol * v.abs())).powi(2))
        .sum::<f64>()
        .sqrt();
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1.0)
    }
}

/// Integrate the NDR equations from `state0` at time 0 and sample at
/// `sample_times`.
pub fn integrate(
    state0: &[[f64; 3]],
    graph: &ContactGraph,
    w: &SignalWeights,
    p: &NdrParams,
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let flat: Vec<f64> = state0.iter().flatten().copied().collect();
    let rhs = |_t: f64, y: &[f64]| -> Vec<f64> {
        let s: Vec<[f64; 3]> = y.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        ndr_rhs(&s, graph, w, p).into_iter().flatten().collect()
    };
    let samples = integrate_fn(rhs, &flat, 0.0, sample_times, opts)?;
    Ok(Trajectory {
        times: sample_times.to_vec(),
        states: samples
            .into_iter()
            .map(|y| y.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
            .collect(),
    })
}
