//! Numerical laboratory for the spontaneous emission of a two-level emitter
//! coupled to the edge of a semi-infinite coupled-cavity waveguide whose
//! photon modes undergo pure dephasing.
//!
//! Every solver produces a [`DecayCurve`] of the survival probability of the
//! excited emitter, so results from independent routes can be compared
//! point by point:
//!
//! * [`lindblad`]: full single-excitation master equation.
//! * [`trajectory`]: stochastic pure-state unraveling with Wiener phase kicks.
//! * [`closed`]: dephasing-free amplitudes, both in time and by spectral quadrature.
//! * [`jc`]: the single-cavity (zero hopping) limit with its exceptional point.
//! * [`walk`]: the classical random walk reached at strong dephasing.
//! * [`analysis`]: exponential, power-law and plateau fits of decay curves.
//!
//! The math is generic over the scalar type through [`Real`]; the `*64`
//! aliases at the crate root fix it to `f64`, which is what the binaries use.

pub mod analysis;
pub mod closed;
pub mod config;
pub mod curve;
mod error;
pub mod integrate;
pub mod jc;
pub mod lindblad;
pub mod model;
pub mod quadrature;
mod scalar;
pub mod trajectory;
pub mod walk;

pub use analysis::{FitKind, FitReport};
pub use closed::SpectralDensity;
pub use config::RunConfig;
pub use curve::{DecayCurve, TimeGrid};
pub use error::{Error, Result};
pub use integrate::StepOptions;
pub use jc::{JcSpectrum, JcState};
pub use lindblad::DensityState;
pub use model::{DerivedRates, ModelParams};
pub use scalar::Real;
pub use trajectory::{EnsembleResult, PureState};
pub use walk::{WalkKernel, WalkState};

pub type ModelParams64 = ModelParams<f64>;
pub type ModelParams32 = ModelParams<f32>;
pub type DerivedRates64 = DerivedRates<f64>;
pub type DecayCurve64 = DecayCurve<f64>;
pub type DecayCurve32 = DecayCurve<f32>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type DensityState64 = DensityState<f64>;
pub type PureState64 = PureState<f64>;
pub type EnsembleResult64 = EnsembleResult<f64>;
pub type JcSpectrum64 = JcSpectrum<f64>;
pub type WalkKernel64 = WalkKernel<f64>;
pub type FitReport64 = FitReport<f64>;
pub type StepOptions64 = StepOptions<f64>;
