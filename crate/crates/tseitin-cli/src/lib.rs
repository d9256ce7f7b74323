//! File formats, statistics and experiment drivers for the `tseitin` command.

pub mod experiment;
pub mod formats;
pub mod stats;
