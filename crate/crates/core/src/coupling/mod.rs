//! Two-level driver: the intracellular layer is advanced in split-steps
//! with frozen cell-to-cell signals, between population events replayed
//! from a precomputed log.

pub mod convergence;

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contacts::{ContactGraph, ContactModel, ProtrusionSpec};
use crate::dlcm::{EventKind, EventLog, PopulationEvent, PopulationGrid};
use crate::error::{Error, Result};
use crate::io::snapshot::{CellRecord, Snapshot, Totals};
use crate::ndr::{aggregate_signals, build_network, nsm_ndr_simulate, simulate_ndr_direct, NdrParams, SignalState, SignalWeights, N_SPECIES};
use crate::ode::ndr_rhs_with_signals;
use crate::rdme::{DiffusionRates, DualMesh, VoxelState};
use crate::ssa::{streams, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitStepConfig {
    pub safety_factor: f64,
    pub dtau_min: f64,
    pub dtau_max: f64,
}

impl Default for SplitStepConfig {
    fn default() -> Self {
        Self {
            safety_factor: 0.05,
            dtau_min: 1e-6,
            dtau_max: 0.5,
        }
    }
}

impl SplitStepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety_factor > 0.0
            && self.dtau_min > 0.0
            && self.dtau_min <= self.dtau_max
            && self.dtau_max.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "split-step bounds: safety factor {}, dtau in [{}, {}]",
                self.safety_factor, self.dtau_min, self.dtau_max
            )));
        }
        Ok(())
    }
}

/// Split-step length `safety * |x| / |f(x)|` over the stacked
/// concentrations `x` of all cells, with `signals` in concentration units.
pub fn select_dtau(
    x: &[[f64; 3]],
    signals: &[SignalState],
    params: &NdrParams,
    cfg: &SplitStepConfig,
) -> f64 {
    let f = ndr_rhs_with_signals(x, signals, params);
    let norm = |v: &[[f64; 3]]| v.iter().flatten().map(|a| a * a).sum::<f64>().sqrt();
    let fx = norm(&f);
    if fx == 0.0 {
        return cfg.dtau_max;
    }
    (cfg.safety_factor * norm(x) / fx).clamp(cfg.dtau_min, cfg.dtau_max)
}

/// Random initial amounts: each species count uniform on
/// `0..=round(omega * max_concentration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialCondition {
    pub max_concentration: [f64; 3],
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            max_concentration: [10.0, 10.0, 10.0],
        }
    }
}

impl InitialCondition {
    pub fn sample(&self, omega: f64, rng: &mut RngStream) -> [u64; 3] {
        self.max_concentration.map(|c| {
            let hi = (omega * c).round().max(0.0) as u64;
            rng.random_range(0..=hi)
        })
    }
}

/// Intracellular model of one cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellState {
    WellStirred([u64; 3]),
    Spatial(VoxelState),
}

impl CellState {
    pub fn totals(&self) -> [u64; 3] {
        match self {
            CellState::WellStirred(x) => *x,
            CellState::Spatial(s) => {
                let t = s.totals();
                [t[0], t[1], t[2]]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellInstance {
    pub id: usize,
    pub voxel: usize,
    pub state: CellState,
    pub rng: RngStream,
}

/// How every cell is simulated between signal updates.
#[derive(Debug, Clone)]
pub enum CellModel {
    /// Whole-cell Direct method in volume `omega`.
    WellStirred,
    /// Next Subvolume Method on a shared mesh.
    Spatial {
        mesh: Arc<DualMesh>,
        rates: Arc<DiffusionRates>,
    },
}

/// Everything needed to advance a population of cells.
#[derive(Debug, Clone)]
pub struct TissueSetup {
    pub model: CellModel,
    pub params: NdrParams,
    pub weights: SignalWeights,
    pub protrusions: ProtrusionSpec,
    pub split: SplitStepConfig,
    pub initial: InitialCondition,
    pub seed: u64,
}

/// Cells, their population grid and contacts, at a common time.
#[derive(Debug, Clone)]
pub struct Tissue {
    setup: TissueSetup,
    cells: Vec<CellInstance>,
    grid: PopulationGrid,
    contacts: ContactModel,
    graph: ContactGraph,
    t: f64,
    chunks: u64,
    firings: u64,
}

fn cell_rng(seed: u64, id: usize) -> RngStream {
    RngStream::new(seed, streams::id(streams::CELL, id as u64))
}

impl Tissue {
    /// Cells of `grid` with random initial amounts at time `t0`.
    pub fn new(grid: PopulationGrid, setup: TissueSetup, t0: f64) -> Result<Self> {
        setup.params.validate()?;
        setup.weights.validate()?;
        setup.protrusions.validate()?;
        setup.split.validate()?;
        let mut cells = Vec::with_capacity(grid.n_cells());
        for id in 0..grid.n_cells() {
            let mut init_rng = RngStream::new(setup.seed, streams::id(streams::INIT, id as u64));
            let totals = setup.initial.sample(setup.params.omega, &mut init_rng);
            let state = match &setup.model {
                CellModel::WellStirred => CellState::WellStirred(totals),
                CellModel::Spatial { mesh, .. } => {
                    CellState::Spatial(VoxelState::distribute(mesh, &totals, &mut init_rng))
                }
            };
            cells.push(CellInstance {
                id,
                voxel: grid.voxel_of(id).expect("registered cell"),
                state,
                rng: cell_rng(setup.seed, id),
            });
        }
        Self::with_cells(grid, setup, cells, t0)
    }

    /// Tissue with explicitly given cell states; `cells[k].id` must be `k`.
    pub fn with_cells(
        grid: PopulationGrid,
        setup: TissueSetup,
        cells: Vec<CellInstance>,
        t0: f64,
    ) -> Result<Self> {
        if cells.len() != grid.n_cells()
            || cells
                .iter()
                .enumerate()
                .any(|(k, c)| c.id != k || grid.voxel_of(k) != Some(c.voxel))
        {
            return Err(Error::LogStateMismatch(
                "cell instances do not match the population grid".into(),
            ));
        }
        let contacts = ContactModel::new(grid.lattice(), setup.protrusions);
        let graph = contacts.build(&grid);
        Ok(Self {
            setup,
            cells,
            grid,
            contacts,
            graph,
            t: t0,
            chunks: 0,
            firings: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn cells(&self) -> &[CellInstance] {
        &self.cells
    }

    pub fn grid(&self) -> &PopulationGrid {
        &self.grid
    }

    pub fn graph(&self) -> &ContactGraph {
        &self.graph
    }

    pub fn setup(&self) -> &TissueSetup {
        &self.setup
    }

    /// Split-step chunks taken so far.
    pub fn chunks(&self) -> u64 {
        self.chunks
    }

    /// Intracellular reaction firings so far.
    pub fn firings(&self) -> u64 {
        self.firings
    }

    pub fn totals(&self) -> Vec<[u64; 3]> {
        self.cells.iter().map(|c| c.state.totals()).collect()
    }

    /// Signals of every cell from the current whole-cell counts, in counts.
    pub fn signals(&self) -> Vec<SignalState> {
        let nd: Vec<(f64, f64)> = self
            .cells
            .iter()
            .map(|c| {
                let [n, d, _] = c.state.totals();
                (n as f64, d as f64)
            })
            .collect();
        aggregate_signals(&nd, &self.graph, &self.setup.weights)
    }

    /// The split-step length the current state asks for.
    pub fn next_dtau(&self, signals: &[SignalState]) -> f64 {
        let omega = self.setup.params.omega;
        let x: Vec<[f64; 3]> = self
            .totals()
            .iter()
            .map(|t| t.map(|v| v as f64 / omega))
            .collect();
        let s: Vec<SignalState> = signals.iter().map(|s| s.scaled(1.0 / omega)).collect();
        select_dtau(&x, &s, &self.setup.params, &self.setup.split)
    }

    /// Advance every cell to `tau`: chunks of frozen signals, each chunk
    /// simulated cell by cell in parallel, signals recomputed in between.
    pub fn advance_to(&mut self, tau: f64) -> Result<()> {
        if tau < self.t {
            return Err(Error::InvalidParameter(format!(
                "cannot advance from {} back to {tau}",
                self.t
            )));
        }
        while self.t < tau {
            let signals = self.signals();
            let dtau = self.next_dtau(&signals);
            let t1 = (self.t + dtau).min(tau);
            self.run_chunk(&signals, t1)?;
        }
        Ok(())
    }

    /// One chunk `[t, t1)` with the given frozen signals.
    pub fn run_chunk(&mut self, signals: &[SignalState], t1: f64) -> Result<()> {
        let t0 = self.t;
        let params = self.setup.params;
        let model = &self.setup.model;
        let fired: u64 = self
            .cells
            .par_iter_mut()
            .zip(signals.par_iter())
            .map(|(cell, &s)| -> Result<u64> {
                let net = build_network(&params, s);
                match (&mut cell.state, model) {
                    (CellState::WellStirred(x), _) => {
                        simulate_ndr_direct(&net, x, params.omega, t0, t1, &mut cell.rng)
                    }
                    (CellState::Spatial(v), CellModel::Spatial { mesh, rates }) => {
                        let st = nsm_ndr_simulate(mesh, rates, &net, v, t0, t1, &mut cell.rng)?;
                        Ok(st.reactions + st.diffusions)
                    }
                    (CellState::Spatial(_), CellModel::WellStirred) => Err(
                        Error::InvalidParameter("spatial cell in a well-stirred tissue".into()),
                    ),
                }
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        self.firings += fired;
        self.chunks += 1;
        self.t = t1;
        Ok(())
    }

    /// Execute a logged population event at the current time.
    pub fn apply_event(&mut self, event: &PopulationEvent) -> Result<()> {
        let daughter = self.grid.apply(event)?;
        match event.kind {
            EventKind::Move => {
                self.cells[event.cell].voxel = event.to_voxel;
            }
            EventKind::Proliferate => {
                let id = daughter.expect("proliferation yields a daughter");
                let parent = &mut self.cells[event.cell];
                let state = split_state(&mut parent.state, &mut parent.rng);
                self.cells.push(CellInstance {
                    id,
                    voxel: event.to_voxel,
                    state,
                    rng: cell_rng(self.setup.seed, id),
                });
            }
        }
        self.contacts
            .rebuild_after_event(&mut self.graph, &self.grid, event.from_voxel, event.to_voxel);
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot<u64> {
        Snapshot {
            t: self.t,
            cells: self
                .cells
                .iter()
                .map(|c| {
                    let [n, d, r] = c.state.totals();
                    CellRecord {
                        id: c.id,
                        voxel_center_xy: self.grid.lattice().center(c.voxel),
                        totals: Totals { n, d, r },
                    }
                })
                .collect(),
        }
    }
}

/// Hand each molecule of the parent to the daughter with probability 1/2,
/// independently, voxel by voxel. Returns the daughter's state.
pub fn split_state(parent: &mut CellState, rng: &mut RngStream) -> CellState {
    let mut half = |x: &mut u64| {
        let k = if *x == 0 {
            0
        } else {
            Binomial::new(*x, 0.5).expect("valid binomial").sample(rng)
        };
        *x -= k;
        k
    };
    match parent {
        CellState::WellStirred(x) => CellState::WellStirred([half(&mut x[0]), half(&mut x[1]), half(&mut x[2])]),
        CellState::Spatial(v) => {
            let mut d = VoxelState::zeros(v.n_voxels(), N_SPECIES);
            for k in 0..v.n_voxels() {
                for s in 0..N_SPECIES {
                    let mut x = v.get(k, s);
                    let moved = half(&mut x);
                    v.set(k, s, x);
                    d.set(k, s, moved);
                }
            }
            CellState::Spatial(d)
        }
    }
}

/// Advance the tissue through `log`, emitting a snapshot at every output
/// time. Events at or before an output time are applied before it is
/// taken; events after the last output time are ignored.
pub fn run_coupled(
    tissue: &mut Tissue,
    log: &EventLog,
    output_times: &[f64],
) -> Result<Vec<Snapshot<u64>>> {
    log.check_sorted()?;
    if output_times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParameter("output times must be sorted".into()));
    }
    let mut out = Vec::with_capacity(output_times.len());
    let mut events = log.events.iter().peekable();
    for &t_out in output_times {
        while let Some(e) = events.next_if(|e| e.t <= t_out) {
            if e.t > tissue.time() {
                tissue.advance_to(e.t)?;
            }
            tissue.apply_event(e)?;
        }
        tissue.advance_to(t_out)?;
        out.push(tissue.snapshot());
    }
    Ok(out)
}
