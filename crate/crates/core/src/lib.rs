//! Simulation and certification of rotating Forchheimer flow in porous media.

pub mod fields;
pub mod cli_io;
pub mod constitutive;
pub mod estimates;
pub mod functionals;
pub mod inequality;
pub mod solver;
