//! Pseudo-spectral solver for incompressible flow coupled to a relaxed
//! director field with a Ginzburg–Landau penalty, on a periodic box, together
//! with the diagnostics used to measure algebraic decay rates.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! bottom fix the scalar for the common cases.

pub mod analysis;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod initdata;
pub mod scalar;
pub mod stepper;

pub use analysis::{
    compare_to_theory, compare_with, fit_power_law, heat_oracle_l2, ExpectationTable, FitResult, NormSeries,
    RadialProfile, TheoryReport,
};
pub use diagnostics::{
    director_geometry, fourier_split, gn_exponent, gn_ratio, measure, sobolev_ladder, total_energy, DiagnosticsConfig,
    DiagnosticsRecord, GnTuple,
};
pub use dynamics::{energy_rate, ericksen_stress_divergence, tendency, PhysicsParams, State};
pub use error::{Error, Result};
pub use field::{
    forward_transform, inverse_transform, l2_norm_spectral, leray_project, lp_norm, spectral_derivative, Exponent,
    RealField, SpectralField,
};
pub use grid::Grid;
pub use initdata::{make_director, make_velocity, smallness_report, InitConfig};
pub use scalar::Real;
pub use stepper::{integrate, step, step_with, Hooks, NoHooks, Scheme, StepperConfig};

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type SpectralField64 = SpectralField<f64>;
pub type SpectralField32 = SpectralField<f32>;
pub type RealField64 = RealField<f64>;
pub type RealField32 = RealField<f32>;
pub type State64 = State<f64>;
pub type State32 = State<f32>;
pub type PhysicsParams64 = PhysicsParams<f64>;
pub type StepperConfig64 = StepperConfig<f64>;
