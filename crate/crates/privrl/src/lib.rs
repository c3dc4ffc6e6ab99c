//! Experiment harness for private offline RL: environment files, dataset and
//! ledger formats, parallel sweeps scored against the exact optimum, and
//! CSV/SVG output. The algorithms live in [`privrl_core`].

pub mod env;
pub mod error;
pub mod format;
pub mod output;
pub mod sweep;

pub use error::{Error, Result};
pub use privrl_core;
