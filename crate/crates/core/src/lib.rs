//! Steady states, photon statistics, spectra and linewidths of a small
//! superradiant lattice laser: N two-level atoms in a regular geometry,
//! coupled to a lossy cavity mode, with dipole-dipole interactions,
//! correlated spontaneous emission and incoherent pumping.

pub mod blocks;
pub mod collective;
pub mod geometry;
pub mod model;
pub mod observables;
pub mod ode;
pub mod operators;
pub mod solvers;
pub mod sparse;
pub mod spectrum;
pub mod states;
