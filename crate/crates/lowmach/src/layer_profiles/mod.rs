//! Boundary layers, the eigen-corrector and the Prandtl-type mean-flow layer.

mod acoustic;
mod eigen;
mod lift;
mod prandtl;

pub use acoustic::{build_oscillating_layers, layer_rate, LayerProfile, LayerRecord};
pub use eigen::{build_eigen_corrector, corrector_mode, lambda1, CorrectorMode, EigenCorrector};
pub use lift::{
    build_wall_correctors, corrector_traces, eigen_traces, normal_lift, normal_profile, stokes_layer, tangential_lift,
    tangential_profile, NormalTrace, OscTrace, WallCorrectors,
};
pub use prandtl::{
    prandtl_solve, wall_trace, wall_waves, LayerForcing, PrandtlGrid, PrandtlLayer, PrandtlRun, PrandtlSolver,
    PrandtlState, ThetaMesh, WallTrace, WallWave, DECAY_TOL,
};
