//! Pattern statistics of a Delta snapshot.

use tissuesim_core::io::Snapshot;

/// Centre distance of junctional neighbours on the hexagonal lattice.
pub const NEIGHBOUR_DISTANCE: f64 = 2.0;

/// Two-group split of per-cell Delta.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSplit {
    pub high: Vec<bool>,
    pub low_mean: f64,
    pub high_mean: f64,
}

impl DeltaSplit {
    /// Ratio of the group means; one without a high group, infinite when
    /// the low group is all zero.
    pub fn means_ratio(&self) -> f64 {
        if !self.high.contains(&true) {
            1.0
        } else if self.low_mean > 0.0 {
            self.high_mean / self.low_mean
        } else {
            f64::INFINITY
        }
    }

    pub fn high_fraction(&self) -> f64 {
        if self.high.is_empty() {
            return 0.0;
        }
        self.high.iter().filter(|&&h| h).count() as f64 / self.high.len() as f64
    }
}

/// Exact two-cluster k-means of `ln(1 + D)` in one dimension: the split of
/// the sorted values minimising the within-group sum of squares.
pub fn split_delta(delta: &[f64]) -> DeltaSplit {
    let n = delta.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| delta[a].total_cmp(&delta[b]));
    let logs: Vec<f64> = order.iter().map(|&k| delta[k].max(0.0).ln_1p()).collect();
    let total: f64 = logs.iter().sum();
    let total_sq: f64 = logs.iter().map(|v| v * v).sum();
    let (mut best, mut cut) = (f64::INFINITY, n);
    let (mut s, mut sq) = (0.0, 0.0);
    for k in 1..n {
        s += logs[k - 1];
        sq += logs[k - 1] * logs[k - 1];
        if logs[k] == logs[k - 1] {
            continue;
        }
        let (m, r) = (k as f64, (n - k) as f64);
        let within = (sq - s * s / m) + (total_sq - sq - (total - s) * (total - s) / r);
        if within < best {
            best = within;
            cut = k;
        }
    }
    let mut high = vec![false; n];
    for &k in &order[cut..] {
        high[k] = true;
    }
    let mean = |sel: bool| {
        let v: Vec<f64> = (0..n).filter(|&k| high[k] == sel).map(|k| delta[k]).collect();
        if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 }
    };
    DeltaSplit { low_mean: mean(false), high_mean: mean(true), high }
}

fn centres(s: &Snapshot<f64>) -> Vec<[f64; 2]> {
    s.cells.iter().map(|c| c.voxel_center_xy).collect()
}

/// Junctional neighbours: cells sharing a voxel or in adjacent voxels.
pub fn junctional_pairs(s: &Snapshot<f64>) -> Vec<Vec<usize>> {
    let xy = centres(s);
    let limit = NEIGHBOUR_DISTANCE * (1.0 + 1e-9);
    (0..xy.len())
        .map(|i| {
            (0..xy.len())
                .filter(|&j| j != i && (xy[i][0] - xy[j][0]).hypot(xy[i][1] - xy[j][1]) <= limit)
                .collect()
        })
        .collect()
}

/// Fraction of high cells with no high junctional neighbour; one when
/// there are no high cells.
pub fn isolated_fraction(s: &Snapshot<f64>, high: &[bool]) -> f64 {
    let nb = junctional_pairs(s);
    let highs: Vec<usize> = (0..high.len()).filter(|&k| high[k]).collect();
    if highs.is_empty() {
        return 1.0;
    }
    let isolated = highs.iter().filter(|&&i| nb[i].iter().all(|&j| !high[j])).count();
    isolated as f64 / highs.len() as f64
}

/// Mean distance from a high cell to the nearest other high cell lying
/// within 30 degrees of the horizontal axis, and likewise of the vertical
/// axis. Cells without a partner in a sector do not contribute to it.
pub fn directional_gaps(s: &Snapshot<f64>, high: &[bool]) -> (f64, f64) {
    let xy = centres(s);
    let highs: Vec<usize> = (0..high.len()).filter(|&k| high[k]).collect();
    let tan30 = (std::f64::consts::PI / 6.0).tan() * (1.0 + 1e-9);
    let (mut h_sum, mut h_n, mut v_sum, mut v_n) = (0.0, 0usize, 0.0, 0usize);
    for &i in &highs {
        let (mut h_best, mut v_best) = (f64::INFINITY, f64::INFINITY);
        for &j in &highs {
            if j == i {
                continue;
            }
            let (dx, dy) = ((xy[j][0] - xy[i][0]).abs(), (xy[j][1] - xy[i][1]).abs());
            let d = dx.hypot(dy);
            if d == 0.0 {
                continue;
            }
            if dy <= tan30 * dx {
                h_best = h_best.min(d);
            }
            if dx <= tan30 * dy {
                v_best = v_best.min(d);
            }
        }
        if h_best.is_finite() {
            h_sum += h_best;
            h_n += 1;
        }
        if v_best.is_finite() {
            v_sum += v_best;
            v_n += 1;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    (mean(h_sum, h_n), mean(v_sum, v_n))
}
