//! Scaled monomials, quadrature and local `L²` projections.

mod basis;
pub mod projection;
pub mod quadrature;

pub use basis::{
    edge_powers, legendre_coefficients, monomial_exponents, monomial_index, poly_dim, MonomialBasis,
};
pub use projection::{gram_matrix, l2_project_element, spd_condition};
pub use quadrature::{
    edge_quadrature, element_quadrature, polygon_quadrature, segment_quadrature, GaussLegendre,
    QuadratureRule,
};
