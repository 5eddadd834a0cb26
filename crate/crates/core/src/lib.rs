//! One-pass cascaded association of per-frame object masks into
//! identity-consistent instance tracks.

pub mod error;
pub mod eval;
pub mod cascade;
pub mod cli;
pub mod flow;
pub mod io;
pub mod maskcore;
pub mod reid;
pub mod simulator;

pub use error::{Error, Result};
