//! Numerical laboratory for the damped nonlinear Klein–Gordon equation
//! `u_tt - Δu + 2α u_t + u - |u|^{p-1} u = 0`: ground states, linearized
//! spectrum, soliton interaction kernel, reduced center dynamics, a 1-D
//! field solver and modulation diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation; index loops
// mirror the stencils they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod field;
pub mod ground_state;
pub mod interaction;
pub mod modulation;
pub mod numerics;
pub mod params;
pub mod reduced;
pub mod spectral;

pub use error::{DnkgError, Result};
pub use ground_state::{
    decay_constant, evaluate_profile, ground_state_constants, solve_ground_state, DecayFit,
    GroundStateConstants, RadialProfile, ShootingOptions,
};
pub use field::{initial_multi_soliton, simulate, FieldGrid, FieldState, LatticeSoliton};
pub use interaction::{asymptotic_c0, invert_time_scale, time_scale_g, InteractionKernel};
pub use modulation::{decompose, run_tracked, ModulationBasis, ModulationRecord, TrackedRun};
pub use params::{AnalysisConstants, ModelParameters};
pub use reduced::{fit_asymptotic_law, integrate_centers, CenterTrajectory, SolitonConfiguration};
pub use spectral::{linearized_spectrum, GridSpec, SpectralData};
