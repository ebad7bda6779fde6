//! Oblivious random permutation and sorting via butterfly bin assignment.

pub mod analysis;
pub mod bin_assign;
pub mod bitonic;
pub mod cli;
pub mod element;
pub mod error;
pub mod memory;
pub mod orp;
pub mod osort;
pub mod params;
pub mod rng;
pub mod trace;

pub use element::Element;
pub use error::{Error, Result};
pub use params::{derive_params, ClientMode, Engine, Params};
