//! Numerical toolkit for locally quasiconformal mappings of the unit disk:
//! growth-function allowability, dilatation calculus on polar grids, Beltrami
//! solvers with degenerating dilatation, conformal moduli and capacities,
//! boundary quasisymmetry bounds, and extremality experiments.

pub mod error;
pub mod quadrature;

pub mod fem;
pub mod growth;
pub mod grid;
pub mod mapcore;
pub mod mobius;
pub mod modulus;
pub mod beltrami;
pub mod boundary;
pub mod teich;

pub mod cli;
pub mod svg;

pub use error::{Error, Result};
