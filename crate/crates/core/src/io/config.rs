//! Run configuration files.
//!
//! A configuration is a TOML document. Only `mode` and `output_times` are
//! required; every section falls back to the defaults of the type it
//! configures. Unknown keys are rejected, and every error names the key
//! path it refers to.
//!
//! ```toml
//! mode = "wellstirred"          # wellstirred | grow | simulate | ode
//! seed = 1
//! output_times = [4, 20, 40, 200]
//!
//! [grid]
//! rows = 20
//! cols = 20
//! start = "full"                # full patch, or "center" for one cell
//!
//! [ndr]
//! omega = 400
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contacts::ProtrusionSpec;
use crate::coupling::{CellModel, InitialCondition, SplitStepConfig, TissueSetup};
use crate::dlcm::{GrowthParams, Lattice, PopulationGrid};
use crate::error::{Error, Result};
use crate::ndr::{NdrParams, SignalWeights};
use crate::ode::OdeOptions;
use crate::rdme::{diffusion_rates, generate_disk_mesh, DualMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Static population, Direct method per cell.
    WellStirred,
    /// Population growth only.
    Grow,
    /// Growth followed by the spatial intracellular replay.
    Simulate,
    /// Mean-field equations on the static population.
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    /// Every lattice voxel holds one cell.
    #[default]
    Full,
    /// One cell in the central voxel.
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub start: Start,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 20,
            cols: 20,
            start: Start::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSpec {
    /// Rings of the generated disk mesh.
    pub rings: usize,
    /// Diffusion constant; `1 / omega` when absent.
    pub gamma: Option<f64>,
    /// JSON mesh to use instead of the generated disk.
    pub file: Option<PathBuf>,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            rings: 3,
            gamma: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub output_times: Vec<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Growth stops once the population reaches this size.
    #[serde(default)]
    pub max_cells: Option<usize>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub ndr: NdrParams,
    #[serde(default)]
    pub weights: SignalWeights,
    #[serde(default)]
    pub protrusions: ProtrusionSpec,
    #[serde(default)]
    pub growth: GrowthParams,
    #[serde(default)]
    pub split: SplitStepConfig,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub ode: OdeOptions,
}

fn at(path: &str, e: Error) -> Error {
    let message = match e {
        Error::InvalidParameter(m) | Error::InvalidMesh(m) => m,
        other => other.to_string(),
    };
    Error::Config {
        path: path.into(),
        message,
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.output_times.is_empty() {
            return Err(at("output_times", Error::InvalidParameter("at least one output time".into())));
        }
        if self.output_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(at("output_times", Error::InvalidParameter("times must be finite and nonnegative".into())));
        }
        if self.output_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(at("output_times", Error::InvalidParameter("times must be sorted ascending".into())));
        }
        if self.grid.rows == 0 || self.grid.cols == 0 {
            return Err(at("grid", Error::InvalidParameter("rows and cols must be positive".into())));
        }
        if self.max_cells == Some(0) {
            return Err(at("max_cells", Error::InvalidParameter("must be positive".into())));
        }
        self.ndr.validate().map_err(|e| at("ndr", e))?;
        self.weights.validate().map_err(|e| at("weights", e))?;
        self.protrusions.validate().map_err(|e| at("protrusions", e))?;
        self.growth.validate().map_err(|e| at("growth", e))?;
        self.split.validate().map_err(|e| at("split", e))?;
        if self.initial.max_concentration.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(at("initial.max_concentration", Error::InvalidParameter("must be finite and nonnegative".into())));
        }
        if self.mesh.rings == 0 {
            return Err(at("mesh.rings", Error::InvalidParameter("must be positive".into())));
        }
        if let Some(g) = self.mesh.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return Err(at("mesh.gamma", Error::InvalidParameter(format!("must be nonnegative, got {g}"))));
            }
        }
        let o = &self.ode;
        if !(o.rtol > 0.0 && o.atol > 0.0 && o.h_min > 0.0) {
            return Err(at("ode", Error::InvalidParameter("tolerances must be positive".into())));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        *self.output_times.last().expect("validated config has output times")
    }

    pub fn lattice(&self) -> Arc<Lattice> {
        Arc::new(Lattice::hexagonal(self.grid.rows, self.grid.cols))
    }

    /// Population at time zero.
    pub fn initial_grid(&self) -> Result<PopulationGrid> {
        let lattice = self.lattice();
        let voxels: Vec<usize> = match self.grid.start {
            Start::Full => (0..lattice.len()).collect(),
            Start::Center => vec![lattice.central_voxel()],
        };
        PopulationGrid::with_cells(lattice, &voxels)
    }

    /// Mesh of one cell: the configured file, or the generated disk.
    pub fn cell_mesh(&self) -> Result<DualMesh> {
        match &self.mesh.file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                DualMesh::from_json(&text).map_err(|e| at("mesh.file", e))
            }
            None => generate_disk_mesh(self.mesh.rings, self.ndr.omega).map_err(|e| at("mesh", e)),
        }
    }

    pub fn cell_model(&self) -> Result<CellModel> {
        match self.mode {
            Mode::Simulate => {
                let mesh = self.cell_mesh()?;
                let gamma = self.mesh.gamma.unwrap_or(1.0 / self.ndr.omega);
                let rates = diffusion_rates(&mesh, gamma)?;
                Ok(CellModel::Spatial {
                    mesh: Arc::new(mesh),
                    rates: Arc::new(rates),
                })
            }
            _ => Ok(CellModel::WellStirred),
        }
    }

    pub fn tissue_setup(&self) -> Result<TissueSetup> {
        Ok(TissueSetup {
            model: self.cell_model()?,
            params: self.ndr,
            weights: self.weights,
            protrusions: self.protrusions,
            split: self.split,
            initial: self.initial,
            seed: self.seed,
        })
    }
}

impl RunConfig {
    /// The configuration as a TOML document that parses back to itself.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configurations serialize")
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
        path: String::new(),
        message: e.message().to_string(),
    })?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read and validate a configuration file. A relative `mesh.file` is
/// resolved against the directory of the configuration.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config_str(&text)?;
    if let (Some(file), Some(dir)) = (&cfg.mesh.file, path.parent()) {
        if file.is_relative() {
            cfg.mesh.file = Some(dir.join(file));
        }
    }
    Ok(cfg)
}
