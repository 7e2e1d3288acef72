use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Totals<T> {
    #[serde(rename = "N")]
    pub n: T,
    #[serde(rename = "D")]
    pub d: T,
    #[serde(rename = "R")]
    pub r: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord<T> {
    pub id: usize,
    pub voxel_center_xy: [f64; 2],
    pub totals: Totals<T>,
}

/// Whole-cell amounts of every cell at one output time: molecule counts
/// for stochastic runs, concentrations for the ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot<T> {
    pub t: f64,
    pub cells: Vec<CellRecord<T>>,
}

impl Snapshot<u64> {
    /// Per-cell Delta counts as reals, in cell order.
    pub fn delta(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.totals.d as f64).collect()
    }

    /// The same snapshot with real-valued amounts.
    pub fn to_real(&self) -> Snapshot<f64> {
        Snapshot {
            t: self.t,
            cells: self
                .cells
                .iter()
                .map(|c| CellRecord {
                    id: c.id,
                    voxel_center_xy: c.voxel_center_xy,
                    totals: Totals {
                        n: c.totals.n as f64,
                        d: c.totals.d as f64,
                        r: c.totals.r as f64,
                    },
                })
                .collect(),
        }
    }
}

impl Snapshot<f64> {
    pub fn delta(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.totals.d).collect()
    }
}

pub fn snapshot_to_string<T: Serialize>(s: &Snapshot<T>) -> String {
    let mut text = serde_json::to_string(s).expect("snapshots serialize");
    text.push('\n');
    text
}

pub fn snapshot_from_str<T: DeserializeOwned>(text: &str) -> Result<Snapshot<T>> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_snapshot<T: Serialize>(path: &Path, s: &Snapshot<T>) -> Result<()> {
    std::fs::write(path, snapshot_to_string(s))?;
    Ok(())
}

pub fn read_snapshot<T: DeserializeOwned>(path: &Path) -> Result<Snapshot<T>> {
    snapshot_from_str(&std::fs::read_to_string(path)?)
}

/// Per-cell Delta of a snapshot file, whatever its number type.
pub fn read_delta(path: &Path) -> Result<(Snapshot<f64>, Vec<f64>)> {
    let s: Snapshot<f64> = read_snapshot(path)?;
    let d = s.cells.iter().map(|c| c.totals.d).collect();
    Ok((s, d))
}
