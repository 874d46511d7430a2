//! Configuration, scenario runner, and file output.

mod config;
mod output;
mod runner;
pub mod verify;

pub use config::{
    AssembleSection, PhysicsSection, PrandtlSection, Preset, RunConfig, RunSection, Scenario, SweepSection,
};
pub use output::{column_csv, emit_plotdata, plot_tables, sha256_hex, Artifacts, FileEntry, Manifest, MANIFEST};
pub use runner::{exit_code, initial_state, run, sweep, Sweep};
