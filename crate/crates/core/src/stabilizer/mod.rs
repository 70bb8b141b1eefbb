//! Clifford dynamics with projective Z measurements on a stabilizer tableau.

mod clifford2;
mod tableau;
pub mod trajectory;

pub use clifford2::{Clifford2, Gate2};
pub use tableau::{Measurement, Subregion, Tableau};
pub use trajectory::{
    prepare_code_state, prepare_purification, purification_time, run_trajectory, EvalTimes, MeasurementEvent,
    MeasurementRecord, Observable, ObservablePlan, Purification, Sample, Trajectory, TrajectoryOutput,
};
