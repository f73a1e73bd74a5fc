//! Heating of a harmonic oscillator weakly coupled to a high-temperature Ohmic reservoir that is
//! periodically disconnected and reconnected ("shuttered").
//!
//! Units: `ħ = k_B = 1`. Times are in `1/ω₀` unless a function says otherwise; most callers use
//! [`BathParams::natural`], which fixes `ω₀ = 1`, and express times as `x / p.omega_c()`.
//!
//! Everything numeric is generic over [`Scalar`] (`f32`, `f64`); the `*F64` aliases below name
//! the common case.
//!
//! ```
//! use shutterqbm::{steady_state, BathParamsF64};
//!
//! let p = BathParamsF64::natural(0.1, 10.0, 10.0).unwrap();
//! let n_s = steady_state(1.0 / p.omega_c(), &p, 1e-10).unwrap();
//! assert!(n_s > p.nbar());
//! ```

pub mod coefficients;
pub mod dynamics;
pub mod error;
pub mod ode;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod steady;
pub mod zeno;

pub use coefficients::{BathParams, ConstantRates, Reservoir, ValidityWarning};
pub use dynamics::{
    evolve_shuttered, evolve_unshuttered, heating_stroboscopic, heating_unshuttered, period_map, OnePeriodMap,
    ShutterSchedule, Trajectory,
};
pub use error::{Error, Result};
pub use oracle::{simulate_populations, OracleComparison, PopulationState, Protocol};
pub use scalar::Scalar;
pub use steady::{steady_state, steady_state_approx, SteadyStateResult};
pub use zeno::{ZenoClass, ZenoReport};

pub type BathParamsF64 = BathParams<f64>;
pub type ConstantRatesF64 = ConstantRates<f64>;
pub type ShutterScheduleF64 = ShutterSchedule<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type OnePeriodMapF64 = OnePeriodMap<f64>;
pub type SteadyStateResultF64 = SteadyStateResult<f64>;
pub type ZenoReportF64 = ZenoReport<f64>;
pub type PopulationStateF64 = PopulationState<f64>;
