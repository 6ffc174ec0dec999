//! Numerical toolkit for infinite order pseudodifferential operators on
//! Gelfand-Shilov type spaces defined by weight sequences.

pub mod calculus;
pub mod error;
pub mod fft;
pub mod harness;
pub mod jet;
pub mod mollify;
pub mod numeric;
pub mod par;
pub mod quantize;
pub mod symbols;
pub mod ultrapoly;
pub mod weights;

pub use error::{Error, Result};
