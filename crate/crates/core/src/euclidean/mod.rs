//! Private solvers for constrained problems in `(R^d, ||.||_2)`: approximate
//! objective perturbation (convex and strongly convex) and phased DP-SGD.

mod inner;
mod objp;
mod phased;

pub use inner::{inner_solve, pgd_iteration_bound, InnerSolution, SmoothObjective};
pub use objp::{app_objp, app_objp_sc, AlphaPolicy, ObjPConfig, ObjPOutput, PerturbedErm};
pub use phased::{auto_step, phase_sizes, phased_dp_sgd, PhasedSgdConfig, PhasedSgdOutput};
