//! Sub-wavelength localization of three-level Λ atoms by coherent population
//! trapping in a standing-wave drive.
//!
//! Units: ħ = 1 and the probe-channel decay rate γ_p = 1. Positions along a
//! standing wave are given as kx.

pub mod analytic;
pub mod error;
pub mod fields;
pub mod lindblad;
pub mod modulation;
pub mod psf;

pub use analytic::{dark_state, fwhm_analytic, rho22_unmodulated, DarkState, IntensityRatio};
pub use error::{Error, Result, Side};
pub use fields::{field_ratio, FieldProfile, ModulationSpec, Position};
pub use lindblad::{evolve, evolve_modulated, steady_state, DensityMatrix, LambdaConfig, Level, Trajectory};
pub use modulation::{demodulate, f_coeff_closed, f_coeff_quadrature, perturbative_coeff, TimeSeries};
pub use psf::{improvement_factor, measure_width, FeatureWidth, PsfCurve, PsfFamily, Reference};
