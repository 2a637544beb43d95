//! Solitary travelling waves of FPU chains with a singular potential.
//!
//! Waves are computed on a uniform grid and compared with the high-energy
//! limit profiles. The linearized operator is analysed in exponentially
//! weighted spaces, and the lattice dynamics check the travelling motion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod limit;
pub mod linalg;
pub mod linearization;
pub mod potential;
pub mod rescaled;
pub mod wave;

pub use error::{Error, Result};
pub use grid::Grid;
pub use limit::{solve_limit_ode, AsymptoticProfiles, LimitOde};
pub use potential::{eval_potential, PotentialParams};
pub use wave::{solve_wave, WaveSolution};
