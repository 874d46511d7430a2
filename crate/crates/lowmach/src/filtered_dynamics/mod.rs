//! Damped-Burgers amplitudes, the horizontally dissipated mean flow and the
//! second interior corrector.

mod corrector;
mod db;
mod run;
mod vins;

pub use corrector::{
    corrector_by_quadrature, corrector_forcing, interior_waves, second_corrector, CorrectorAccumulator, Forcing,
    ForcingSet, NearResonance, Origin, SecondCorrector, Target, Wave,
};
pub use db::{db_advance, DbSystem, EigenDamping};
pub use run::{ptb_budget, run_filtered, FilteredRun, FilteredSample, FilteredState, RunOptions};
pub use vins::{vins_advance, InsSystem};
