//! Separated plane-wave-like modes of the nonrelativistic spin-1 equations
//! in a space of constant negative curvature, with exact and numeric checks
//! of the reduction chain that produces them.

pub mod exec;
pub mod ode;
pub mod opalg;
pub mod quad;
pub mod special;
pub mod modes;
pub mod solutions;
pub mod verify;
pub mod scattering;
