//! Numerical experiments around semiclassical resolvent estimates at
//! normally hyperbolic trapping, on the inverted harmonic oscillator with
//! complex absorption.

pub mod bsymbols;
pub mod commutant;
pub mod dual;
pub mod error;
pub mod linalg;
pub mod model;
pub mod phasespace;
pub mod quantize;
pub mod resolvent;
pub mod smooth;
pub mod spaces;

pub use error::{Error, Result};
