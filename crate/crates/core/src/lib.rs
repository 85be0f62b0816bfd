//! Pseudospectral engine for one step of a convex-integration iteration of
//! the 2D Navier-Stokes-Reynolds system on the torus.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`], [`fft`], [`field`], [`ops`], [`norms`]: exact spectral
//!   calculus for band-limited periodic fields (derivatives, inverse
//!   Laplacian, Leray projection, antidivergence operators, norm
//!   quadrature);
//! - [`bump`], [`quad`], [`intervals`]: smooth compactly-supported bumps,
//!   Gauss-Legendre quadrature and interval-union measure arithmetic;
//! - [`jets`], [`temporal`]: stationary concentrated jets and the
//!   intermittent temporal profiles, composed into accelerating jets;
//! - [`amplitude`]: the geometric decomposition of symmetric matrices near
//!   the identity and the amplitude coefficient fields;
//! - [`perturbation`]: the velocity perturbation pieces and the exceptional
//!   time set;
//! - [`stress`]: assembly of the new Reynolds stress, the pressures, and
//!   the Navier-Stokes-Reynolds residual verification;
//! - [`exponents`], [`universality`], [`energy`], [`scheme`]: the symbolic
//!   parameter checker, the heat-semigroup initializer, the energy
//!   corrector, and the one-step driver;
//! - [`snapshot`], [`regression`]: field snapshot I/O and log-log slope
//!   fitting for the scaling-law sweeps.

pub mod amplitude;
pub mod bump;
pub mod energy;
pub mod error;
pub mod exponents;
pub mod fft;
pub mod field;
pub mod grid;
pub mod intervals;
pub mod jets;
pub mod norms;
pub mod ops;
pub mod perturbation;
pub mod quad;
pub mod regression;
pub mod scheme;
pub mod snapshot;
pub mod stress;
pub mod temporal;
pub mod tol;
pub mod universality;

pub use error::{EngineError, Result};
pub use field::{ScalarField, SymTensorField, VectorField};
pub use grid::Grid;
