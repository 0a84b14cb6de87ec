//! Experiment front end: config parsing, seeded execution, sweeps, and
//! plot-data emission. See FORMATS.md at the repository root for the file
//! schemas.

pub mod config;
pub mod plotdata;
pub mod runner;
pub mod sweep;
pub mod validation;
