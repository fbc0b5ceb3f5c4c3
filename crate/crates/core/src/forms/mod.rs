//! Discrete forms: the linearised operator, the nonlinear residual with its
//! right-hand side, the Jacobian and the dof stabilisations.

mod assembly;
mod data;

pub use assembly::{
    assemble_jacobian, assemble_linearized, assemble_residual, assemble_rhs, extend_free,
    frozen_coefficient, restrict_to_free, GlobalSystem, SparseMatrix,
};
pub use data::{
    cofactor, det2, frobenius, CoefficientField, ExactSolution, MatrixFn, ProblemData, ScalarFn,
    StabilizationMode, StabilizationSpec, VectorFn,
};
