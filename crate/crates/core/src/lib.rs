//! Numerical core for spectral comparisons on geodesic balls.
//!
//! The crate is `no_std` (it needs `alloc`) and deterministic: every routine
//! is single-threaded and sums in a fixed order, so a fixed input reproduces
//! its output bit for bit.
//!
//! Layout:
//!
//! * [`expr`] parses closed-form scalar fields and evaluates exact
//!   value/gradient/Hessian jets.
//! * [`warp`] integrates the warping function `f'' + k f = 0` of a
//!   rotationally symmetric model space.
//! * [`radial`] shoots the radial Steklov modes of model balls.
//! * [`geom`] holds two-dimensional metric patches and their boundary data.
//! * [`fem`] assembles tensor-grid forms and solves the closed, Steklov,
//!   Wentzell and weighted Steklov eigenproblems through Dirichlet-to-Neumann
//!   Schur complements.
//! * [`identities`] evaluates both sides of the weighted Reilly formula, its
//!   degenerations, and the weighted Pohozaev identity by quadrature.
//! * [`comparisons`] runs the eigenvalue inequalities as verdict-producing
//!   harnesses.

#![no_std]

extern crate alloc;

pub mod comparisons;
pub mod expr;
pub mod fem;
pub mod fft;
pub mod geom;
pub mod identities;
pub mod linalg;
pub mod math;
pub mod ode;
pub mod radial;
pub mod sparse;
pub mod spline;
pub mod warp;

pub use expr::{Expr, Jet2};
pub use geom::MetricField;
pub use warp::{CurvatureProfile, WarpingSolution};
