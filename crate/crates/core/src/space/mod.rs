//! The local virtual element space of order `ℓ >= 2`: dofs, interpolation
//! and the computable projections.

mod interpolation;
mod layout;
mod operators;

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::Mesh;

pub use interpolation::{boundary_values, dof_evaluate, interpolate, interpolation_degree};
pub use layout::{build_dof_layout, interior_count, local_dof_count, DofKind, DofLayout, DofTag};
pub use operators::{
    edge_rule, hessian_projection, EdgeFrame, EdgeNormalProjection, ElementOperators,
};

/// A mesh together with its dof layout and the cached operators of every
/// element.
#[derive(Debug, Clone)]
pub struct VemSpace {
    pub mesh: Mesh,
    pub layout: DofLayout,
    pub operators: Vec<ElementOperators>,
}

impl VemSpace {
    pub fn new(mesh: Mesh, order: usize) -> Result<Self> {
        let layout = build_dof_layout(&mesh, order)?;
        let operators = (0..mesh.n_elements())
            .into_par_iter()
            .map(|k| ElementOperators::new(&mesh, k, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(VemSpace {
            mesh,
            layout,
            operators,
        })
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs
    }
}
