//! Configuration, orchestration and output machinery for the lattice-laser
//! command line tool.

pub mod config;
pub mod presets;
pub mod run;
pub mod selftest;
