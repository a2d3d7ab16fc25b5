//! Discrete Abelian Yang–Mills–Higgs (gauged Ginzburg–Landau) laboratory on
//! flat tori with nontrivial line bundles.

pub mod bundle;
pub mod fields;
pub mod gauge;
pub mod hodge;
pub mod io;
pub mod lattice;
pub mod selftest;
pub mod solve;
mod util;
pub mod vortex;

pub use util::{seeded_rng, wrap_angle};
