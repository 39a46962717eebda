pub mod abstraction;
pub mod cfr;
pub mod cli;
pub mod evaluator;
pub mod game;
pub mod games;
pub mod verifier;

mod error;

pub use error::{Error, Result};
