//! Joint spectral and temporal properties, and pair flux, of cavity-enhanced
//! spontaneous four-wave mixing in tapered silica fibers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod numeric;
pub mod design;
pub mod dispersion;
pub mod flux;
pub mod grid;
pub mod spectral;
pub mod temporal;
mod special;

pub use error::{Error, Result};
