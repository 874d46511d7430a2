//! Slab geometry, lattice modes, the acoustic eigenbasis and its projections.

pub mod column;
pub mod dft;
pub mod fd;
pub mod grid;
pub mod lattice;
pub mod mean;
pub mod modal;
pub mod osc;
pub mod params;
pub mod snapshot;
pub mod transform;

pub use column::{ColumnField, ColumnSource, ColumnTerm, LevelSpectrum, Side, ZProfile};
pub use grid::{GridField, GridSpec, Vertical};
pub use lattice::{wavevector, Lattice, ModeIndex, Sign, Truncation, WaveVector};
pub use mean::{MeanFlowState, MeanPreset};
pub use modal::{ModalField, Projection};
pub use osc::{apply_l_spectrally, eigen_coeffs, eigenmode_eval, semigroup_phase, sobolev_norm, OscState};
pub use params::{eta, Geometry, PhysicalParams};
pub use snapshot::{read_snapshot, write_snapshot};
pub use transform::{analyze, apply_l_grid, eigenmode_norm_sqr, modal_to_grid, synthesize};
