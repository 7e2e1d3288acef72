//! Strong-error measurement of the split-step approximation.
//!
//! Paths at different split-step lengths are coupled through a random
//! time change: every (cell, channel) pair owns a unit-rate Poisson
//! process, and a channel fires when its integrated propensity reaches the
//! next arrival of that process. Runs that differ only in the step length
//! therefore share all of their randomness, and their endpoint distance
//! measures the pathwise (strong) error of the signal freezing.

use crate::contacts::ContactGraph;
use crate::error::{Error, Result};
use crate::ndr::{aggregate_signals, build_network, channel, NdrParams, SignalWeights};
use crate::ssa::{streams, ReactionNetwork, RngStream};

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub params: NdrParams,
    pub weights: SignalWeights,
    pub graph: ContactGraph,
    /// Initial counts of every cell.
    pub initial: Vec<[u64; 3]>,
    pub t_end: f64,
    /// Coarsest step; level `k` uses `coarsest / 2^k`.
    pub coarsest: f64,
    pub levels: usize,
    /// The reference path uses `coarsest / 2^reference_level`.
    pub reference_level: usize,
    pub replicas: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub dtaus: Vec<f64>,
    /// Root-mean-square endpoint distance to the reference, in
    /// concentration units.
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln dtau`.
    pub slope: f64,
}

/// Unit Poisson process of one (cell, channel) pair.
struct UnitProcess {
    rng: RngStream,
    next: f64,
    internal: f64,
}

/// Endpoint counts of one path with fixed split-step `dtau`, driven by the
/// unit processes of `replica`.
pub fn coupled_path(study: &ConvergenceStudy, dtau: f64, replica: u64) -> Result<Vec<[u64; 3]>> {
    let n_cells = study.initial.len();
    let n_ch = channel::COUNT;
    let mut x = study.initial.clone();
    let mut procs: Vec<UnitProcess> = (0..n_cells * n_ch)
        .map(|k| {
            let index = (replica << 24) | k as u64;
            let mut rng = RngStream::new(study.seed, streams::id(streams::POISSON, index));
            let next = rng.exp_unchecked(1.0);
            UnitProcess { rng, next, internal: 0.0 }
        })
        .collect();
    let omega = study.params.omega;
    let steps = (study.t_end / dtau).round() as u64;
    if steps == 0 || ((steps as f64) * dtau - study.t_end).abs() > 1e-9 * study.t_end {
        return Err(Error::InvalidParameter(format!(
            "step {dtau} does not divide the horizon {}",
            study.t_end
        )));
    }
    let mut a = [0.0; channel::COUNT];
    for step in 0..steps {
        let t0 = step as f64 * dtau;
        let t1 = if step + 1 == steps { study.t_end } else { t0 + dtau };
        let nd: Vec<(f64, f64)> = x.iter().map(|c| (c[0] as f64, c[1] as f64)).collect();
        let signals = aggregate_signals(&nd, &study.graph, &study.weights);
        for (c, state) in x.iter_mut().enumerate() {
            let net = build_network(&study.params, signals[c]);
            let procs = &mut procs[c * n_ch..(c + 1) * n_ch];
            let mut t = t0;
            loop {
                let mut best = f64::INFINITY;
                let mut mu = usize::MAX;
                for k in 0..n_ch {
                    a[k] = net.propensity(k, state, omega);
                    if a[k] > 0.0 {
                        let wait = (procs[k].next - procs[k].internal) / a[k];
                        if wait < best {
                            best = wait;
                            mu = k;
                        }
                    }
                }
                let dt = if mu == usize::MAX || t + best >= t1 { t1 - t } else { best };
                for k in 0..n_ch {
                    procs[k].internal += a[k] * dt;
                }
                if mu == usize::MAX || t + best >= t1 {
                    break;
                }
                t += dt;
                net.fire(mu, state);
                // exact arrival, immune to rounding in the accumulated sum
                procs[mu].internal = procs[mu].next;
                let p = &mut procs[mu];
                p.next += p.rng.exp_unchecked(1.0);
            }
        }
    }
    Ok(x)
}

pub fn strong_error_study(study: &ConvergenceStudy) -> Result<ConvergenceResult> {
    if study.levels < 2 || study.reference_level < study.levels {
        return Err(Error::InvalidParameter(
            "need at least two levels below the reference".into(),
        ));
    }
    let dtaus: Vec<f64> = (0..study.levels)
        .map(|k| study.coarsest / (1u64 << k) as f64)
        .collect();
    let reference = study.coarsest / (1u64 << study.reference_level) as f64;
    let omega = study.params.omega;
    let mut sq = vec![0.0; study.levels];
    for rep in 0..study.replicas {
        let r = coupled_path(study, reference, rep)?;
        for (k, &h) in dtaus.iter().enumerate() {
            let y = coupled_path(study, h, rep)?;
            sq[k] += y
                .iter()
                .flatten()
                .zip(r.iter().flatten())
                .map(|(&u, &v)| {
                    let d = (u as f64 - v as f64) / omega;
                    d * d
                })
                .sum::<f64>();
        }
    }
    let errors: Vec<f64> = sq
        .iter()
        .map(|s| (s / study.replicas as f64).sqrt())
        .collect();
    Ok(ConvergenceResult {
        slope: log_log_slope(&dtaus, &errors),
        dtaus,
        errors,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssa::simulate_direct;

    fn study(graph: ContactGraph, initial: Vec<[u64; 3]>) -> ConvergenceStudy {
        ConvergenceStudy {
            params: NdrParams {
                beta_n: 2.0,
                beta_d: 3.0,
                beta_r: 4.0,
                k_rs: 1.0,
                omega: 10.0,
                ..Default::default()
            },
            weights: SignalWeights::default(),
            graph,
            initial,
            t_end: 1.0,
            coarsest: 0.25,
            levels: 2,
            reference_level: 3,
            replicas: 1,
            seed: 1,
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 0.5, 0.25];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.7)).collect();
        assert!((log_log_slope(&x, &y) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn isolated_cells_do_not_depend_on_the_step() {
        let g = ContactGraph::from_sets(vec![vec![], vec![]], vec![vec![], vec![]]);
        let s = study(g, vec![[5, 5, 5], [0, 9, 1]]);
        let a = coupled_path(&s, 0.25, 0).unwrap();
        let b = coupled_path(&s, 0.03125, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_time_change_has_direct_method_law() {
        let g = ContactGraph::from_sets(vec![vec![]], vec![vec![]]);
        let s = study(g, vec![[3, 4, 0]]);
        let net = build_network(&s.params, Default::default());
        let reps = 4000;
        let (mut m1, mut m2, mut v1, mut v2) = (0.0, 0.0, 0.0, 0.0);
        for rep in 0..reps {
            let a = coupled_path(&s, 0.25, rep).unwrap()[0][1] as f64;
            let mut x = [3u64, 4, 0];
            simulate_direct(&net, &mut x, s.params.omega, 0.0, 1.0, &mut RngStream::new(7, rep)).unwrap();
            let b = x[1] as f64;
            m1 += a;
            v1 += a * a;
            m2 += b;
            v2 += b * b;
        }
        let r = reps as f64;
        let (m1, m2) = (m1 / r, m2 / r);
        let se = ((v1 / r - m1 * m1 + v2 / r - m2 * m2) / r).sqrt();
        assert!((m1 - m2).abs() < 3.0 * se, "{m1} vs {m2}");
    }

    #[test]
    fn non_dividing_step_rejected() {
        let g = ContactGraph::from_sets(vec![vec![]], vec![vec![]]);
        let s = study(g, vec![[0, 0, 0]]);
        assert!(coupled_path(&s, 0.3, 0).is_err());
    }
}
