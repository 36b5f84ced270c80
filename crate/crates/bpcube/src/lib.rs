//! Reshuffle mode theory and finite presheaf models over depth-n cube
//! categories.

pub mod cube;
pub mod cwf;
pub mod disc;
pub mod error;
pub mod mode;
pub mod psh;

pub use error::{Error, Result};
