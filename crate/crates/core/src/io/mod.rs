//! Persistence: run configuration, event logs, snapshots and SVG renders.

pub mod config;
pub mod log;
pub mod render;
pub mod snapshot;

pub use config::{parse_config, parse_config_str, GridSpec, MeshSpec, Mode, RunConfig, Start};
pub use log::{event_log_to_string, read_event_log, write_event_log};
pub use snapshot::{read_snapshot, snapshot_from_str, snapshot_to_string, write_snapshot, CellRecord, Snapshot, Totals};
pub use render::{render_svg, RenderStyle};
