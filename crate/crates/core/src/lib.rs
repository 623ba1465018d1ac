//! Ground states of normalized Schrödinger-type systems
//!
//! ```text
//!     -Δu_j + λ_j u_j = ∂_j F(u),   ∫ u_j² dx = a_j²,   j = 1,…,M
//! ```
//!
//! obtained by minimizing the energy
//!
//! ```text
//!     J(u) = ∫ ½|∇u|² - F(u) dx
//! ```
//!
//! over the mass *ball* 𝒟(a) = { |u_j|₂ ≤ a_j for all j } rather than the
//! sphere, together with the numerical apparatus needed to check everything
//! that is checkable at desk scale: the Gagliardo–Nirenberg constant via the
//! soliton profile, the mass thresholds, the Pohozaev identity, Schwarz
//! rearrangement inequalities, the two-bump radial merge, subadditivity of
//! the ground-state energy map, swap-antisymmetric (nonradial) minimizers,
//! and split-step time evolution with an orbital-stability experiment.
//!
//! The library is generic over the scalar type through [`Scalar`]
//! (`f32`/`f64`); concrete `f64` aliases are exported at the crate root.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod nonlin;
pub mod rearrange;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use grid::{Domain, DomainKind, Field};
pub use nonlin::{Eta, NonlinearTerm, Nonlinearity, StructuralForm};
pub use energy::{CoercivityBound, GnData, MassSpec, ThresholdReport, TrialField};
pub use rearrange::{LayerCake, MonotoneProfile};
pub use solver::{
    EnergyMapRecord, GroundStateReport, InitStrategy, MinimizeOptions, MinimizeResult,
    SubadditivityReport, Symmetry,
};
// pub use dynamics::{ConservationReport, Stepper, WaveState};

/// Concrete double-precision aliases.
pub type Domain64 = Domain<f64>;
pub type Field64 = Field<f64>;
pub type Nonlinearity64 = Nonlinearity<f64>;
pub type GnData64 = GnData<f64>;
pub type MassSpec64 = MassSpec<f64>;
pub type MinimizeResult64 = MinimizeResult<f64>;
// pub type WaveState64 = WaveState<f64>;

/// Single-precision aliases, mostly exercised by the generic test suite.
pub type Domain32 = Domain<f32>;
pub type Field32 = Field<f32>;
pub type Nonlinearity32 = Nonlinearity<f32>;
