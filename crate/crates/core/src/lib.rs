//! Link-level performance engine for short-packet mini-slot OFDM.
//!
//! Three transmission schemes are modelled on the same `K x T` resource grid:
//!
//! * `PA`: pilot-assisted coherent detection with LMMSE pilot estimation,
//!   linear interpolation across subcarriers and reuse across symbols.
//! * `FDDi`: differential PSK across adjacent subcarriers of one symbol.
//! * `TDDi`: differential PSK across adjacent symbols on one subcarrier.
//!
//! For each scheme the crate evaluates the normal-approximation block error
//! rate, Monte Carlo information-spectrum (lower) and dependence-testing
//! (upper) bounds, and the channel-estimation error budget of the coherent
//! scheme. All information quantities are in bits.

pub mod bounds;
pub mod chanest;
pub mod channel;
pub mod constellation;
mod error;
pub mod fbl;
pub mod grid;
pub mod modem;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Complex `rows x cols` matrix used for resource grids (`K x T`) and tap
/// histories (`L x T`).
pub type CMatrix = nalgebra::DMatrix<Complex64>;
