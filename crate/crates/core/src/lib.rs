//! Joint, product and separable numerical ranges of triples of two-qubit
//! observables, with detection and classification of ruled boundary pieces.

pub mod error;
pub mod geom;
pub mod qops;
pub mod hull;
pub mod ranges;
pub mod models;
pub mod boundary;
pub mod cli;

pub use error::{Error, Result};
