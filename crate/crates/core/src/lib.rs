pub mod adiabatic;
pub mod cli;
pub mod error;
pub mod gates;
pub mod lambda_model;
pub mod propagate;
pub mod qmat;
pub mod rydberg;
pub mod schedule;

pub use error::{Error, Result};
