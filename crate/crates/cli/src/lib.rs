//! Run modes behind the `sim` binary and the files they write.

pub mod analysis;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tissuesim_core::coupling::{run_coupled, Tissue};
use tissuesim_core::dlcm::{simulate_growth, EventLog, PopulationGrid};
use tissuesim_core::io::{
    event_log_to_string, snapshot_to_string, CellRecord, Mode, RunConfig, Snapshot, Totals,
};
use tissuesim_core::ode;
use tissuesim_core::contacts::ContactModel;
use tissuesim_core::ssa::{streams, RngStream};

pub const EVENT_LOG_FILE: &str = "events.jsonl";

/// Snapshots of one run: molecule counts, or concentrations for `ode`.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    Counts(Vec<Snapshot<u64>>),
    Concentrations(Vec<Snapshot<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub log: EventLog,
    pub snapshots: Snapshots,
}

impl RunArtifacts {
    pub fn real_snapshots(&self) -> Vec<Snapshot<f64>> {
        match &self.snapshots {
            Snapshots::Counts(s) => s.iter().map(Snapshot::to_real).collect(),
            Snapshots::Concentrations(s) => s.clone(),
        }
    }

    /// File names and contents, in output order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![(EVENT_LOG_FILE.to_string(), event_log_to_string(&self.log))];
        match &self.snapshots {
            Snapshots::Counts(s) => {
                out.extend(s.iter().map(|s| (snapshot_file_name(s.t), snapshot_to_string(s))))
            }
            Snapshots::Concentrations(s) => {
                out.extend(s.iter().map(|s| (snapshot_file_name(s.t), snapshot_to_string(s))))
            }
        }
        out
    }
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_t{t}.json")
}

/// Execute `cfg` in its configured mode.
pub fn run(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    match cfg.mode {
        Mode::WellStirred => run_static(cfg),
        Mode::Grow => run_grow(cfg),
        Mode::Simulate => run_simulate(cfg),
        Mode::Ode => run_ode(cfg),
    }
}

fn grow(cfg: &RunConfig) -> Result<EventLog> {
    let mut grid = cfg.initial_grid()?;
    let mut rng = RngStream::new(cfg.seed, streams::id(streams::POPULATION, 0));
    let outcome = simulate_growth(&mut grid, &cfg.growth, 0.0, cfg.t_end(), cfg.max_cells, &mut rng)?;
    Ok(outcome.log)
}

fn run_static(cfg: &RunConfig) -> Result<RunArtifacts> {
    let mut tissue = Tissue::new(cfg.initial_grid()?, cfg.tissue_setup()?, 0.0)?;
    let log = EventLog::default();
    let snaps = run_coupled(&mut tissue, &log, &cfg.output_times)?;
    Ok(RunArtifacts { log, snapshots: Snapshots::Counts(snaps) })
}

fn population_snapshot(grid: &PopulationGrid, t: f64) -> Snapshot<u64> {
    Snapshot {
        t,
        cells: (0..grid.n_cells())
            .map(|id| CellRecord {
                id,
                voxel_center_xy: grid.lattice().center(grid.voxel_of(id).expect("registered cell")),
                totals: Totals { n: 0, d: 0, r: 0 },
            })
            .collect(),
    }
}

fn run_grow(cfg: &RunConfig) -> Result<RunArtifacts> {
    let log = grow(cfg)?;
    let mut grid = cfg.initial_grid()?;
    let mut snaps = Vec::with_capacity(cfg.output_times.len());
    let mut events = log.events.iter().peekable();
    for &t in &cfg.output_times {
        while let Some(e) = events.next_if(|e| e.t <= t) {
            grid.apply(e)?;
        }
        snaps.push(population_snapshot(&grid, t));
    }
    Ok(RunArtifacts { log, snapshots: Snapshots::Counts(snaps) })
}

fn run_simulate(cfg: &RunConfig) -> Result<RunArtifacts> {
    let log = grow(cfg)?;
    let mut tissue = Tissue::new(cfg.initial_grid()?, cfg.tissue_setup()?, 0.0)?;
    let snaps = run_coupled(&mut tissue, &log, &cfg.output_times)?;
    Ok(RunArtifacts { log, snapshots: Snapshots::Counts(snaps) })
}

/// Mean-field run from the same random initial amounts as the stochastic
/// modes, scaled to concentrations.
fn run_ode(cfg: &RunConfig) -> Result<RunArtifacts> {
    let grid = cfg.initial_grid()?;
    let omega = cfg.ndr.omega;
    let x0: Vec<[f64; 3]> = (0..grid.n_cells())
        .map(|id| {
            let mut rng = RngStream::new(cfg.seed, streams::id(streams::INIT, id as u64));
            cfg.initial.sample(omega, &mut rng).map(|v| v as f64 / omega)
        })
        .collect();
    let graph = ContactModel::new(grid.lattice(), cfg.protrusions).build(&grid);
    let traj = ode::integrate(&x0, &graph, &cfg.weights, &cfg.ndr, &cfg.output_times, &cfg.ode)?;
    let snaps = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, state)| Snapshot {
            t,
            cells: state
                .iter()
                .enumerate()
                .map(|(id, &[n, d, r])| CellRecord {
                    id,
                    voxel_center_xy: grid.lattice().center(grid.voxel_of(id).expect("registered cell")),
                    totals: Totals { n, d, r },
                })
                .collect(),
        })
        .collect();
    Ok(RunArtifacts {
        log: EventLog::default(),
        snapshots: Snapshots::Concentrations(snaps),
    })
}

/// Write the event log and every snapshot into `dir`, creating it if
/// needed. Returns the written paths.
pub fn write_artifacts(dir: &Path, artifacts: &RunArtifacts) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    artifacts
        .files()
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        })
        .collect()
}
