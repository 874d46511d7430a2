//! Composition of the approximate solution, its residual, and scaling fits.

mod compose;
mod fit;
mod residual;
mod spec;

pub use compose::{
    assemble, compose, default_box, interior_field, require_layers, simulate, standard_initial, Composition, Group,
    LayerRuns, Trajectory, TrajectoryOptions, STANDARD_AMPLITUDE,
};
pub use fit::{
    dominant_exponent, rate_fit, strong_convergence_check, strong_from_report, sweep_csv, RateFit, StrongReport,
    SweepPoint, SweepRow, VIOLATION_SLOPE,
};
pub use residual::{
    conormal_norm, conormal_parts, linear_residual, residual, residual_tiers, Column, Quadratic, ResidualReport,
    SampleReport, BOUNDARY_TERM,
};
pub use spec::{AssemblySpec, ConormalSpec, Term, Tier, MAX_CONORMAL_ORDER, MAX_TIME_ORDER};
