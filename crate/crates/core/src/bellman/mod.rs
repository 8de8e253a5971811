//! Bellman functions: the Lambert-W candidate, its lego compositions and a value-iteration
//! solver for the finite-depth extremal problem.

pub mod candidate;
pub mod dp;
pub mod lambert;
pub mod lego;
pub mod quadrature;

pub use candidate::{b_upper, concavity_gain, matrix_form_check, ode_residual, segment_containment, BellmanPoint};
pub use dp::{dp_bellman, BellmanGrid, GridSpec};
pub use lambert::lambert_w0;
pub use lego::{big_bellman, discrete_lego_gain, phi_concavity_check, test_bellman, FullPoint, TestPoint};
