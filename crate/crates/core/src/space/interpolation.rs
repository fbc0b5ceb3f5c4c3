use nalgebra::DVector;

use super::layout::{interior_count, local_dof_count, DofLayout};
use super::operators::EdgeFrame;
use crate::error::Result;
use crate::mesh::{Mesh, Point};
use crate::poly::{edge_powers, element_quadrature, GaussLegendre, MonomialBasis};

/// Quadrature exactness used when sampling smooth functions into dofs.
pub fn interpolation_degree(order: usize) -> usize {
    2 * order + 4
}

/// Local dofs of a smooth `u` on element `k`; normal moments use the
/// element's outward normal.
pub fn dof_evaluate<U, G>(
    mesh: &Mesh,
    k: usize,
    order: usize,
    u: U,
    grad: G,
) -> Result<DVector<f64>>
where
    U: Fn(&Point) -> f64,
    G: Fn(&Point) -> Point,
{
    let el = &mesh.elements[k];
    let n = el.n_edges();
    let pe = order - 1;
    let mut out = DVector::zeros(local_dof_count(n, order));
    for (i, &v) in el.vertices.iter().enumerate() {
        out[i] = u(&mesh.vertices[v]);
    }
    let gl = GaussLegendre::for_degree(interpolation_degree(order));
    for i in 0..n {
        let f = EdgeFrame::new(mesh, k, i);
        let (m, dn) = edge_moments(&f, pe, &gl, &u, &grad);
        for j in 0..pe {
            out[n + i * pe + j] = m[j];
            out[n + n * pe + i * pe + j] = dn[j];
        }
    }
    let interior = interior_moments(mesh, k, order, &u)?;
    for (j, v) in interior.iter().enumerate() {
        out[n + 2 * n * pe + j] = *v;
    }
    Ok(out)
}

/// Global dof vector of a smooth `u`.
pub fn interpolate<U, G>(mesh: &Mesh, layout: &DofLayout, u: U, grad: G) -> Result<DVector<f64>>
where
    U: Fn(&Point) -> f64,
    G: Fn(&Point) -> Point,
{
    let order = layout.order;
    let pe = order - 1;
    let mut out = DVector::zeros(layout.n_dofs);
    for (v, p) in mesh.vertices.iter().enumerate() {
        out[layout.vertex_dof(v)] = u(p);
    }
    let gl = GaussLegendre::for_degree(interpolation_degree(order));
    for e in 0..mesh.n_edges() {
        let f = global_frame(mesh, e);
        let (m, dn) = edge_moments(&f, pe, &gl, &u, &grad);
        for j in 0..pe {
            out[layout.edge_moment_dof(e, j)] = m[j];
            out[layout.normal_moment_dof(e, j)] = dn[j];
        }
    }
    for k in 0..mesh.n_elements() {
        for (j, v) in interior_moments(mesh, k, order, &u)?.iter().enumerate() {
            out[layout.interior_dof(k, j)] = *v;
        }
    }
    Ok(out)
}

/// Values of the Dirichlet-constrained dofs (boundary vertex values and
/// boundary edge moments) for data `g`; other entries are zero.
pub fn boundary_values<G: Fn(&Point) -> f64>(
    mesh: &Mesh,
    layout: &DofLayout,
    g: G,
) -> DVector<f64> {
    let pe = layout.per_edge();
    let mut out = DVector::zeros(layout.n_dofs);
    for (v, on) in mesh.boundary_vertices().into_iter().enumerate() {
        if on {
            out[layout.vertex_dof(v)] = g(&mesh.vertices[v]);
        }
    }
    let gl = GaussLegendre::for_degree(interpolation_degree(layout.order));
    for (e, edge) in mesh.edges.iter().enumerate() {
        if !edge.is_boundary() {
            continue;
        }
        let f = global_frame(mesh, e);
        for j in 0..pe {
            out[layout.edge_moment_dof(e, j)] = 0.5
                * gl.nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(xi, w)| w * g(&f.point(*xi)) * xi.powi(j as i32))
                    .sum::<f64>();
        }
    }
    out
}

/// Frame of edge `e` as seen from its plus element, i.e. with the global
/// normal.
fn global_frame(mesh: &Mesh, e: usize) -> EdgeFrame {
    let k = mesh.edges[e].plus;
    let i = mesh.elements[k]
        .edges
        .iter()
        .position(|&x| x == e)
        .expect("plus element lists its edge");
    EdgeFrame::new(mesh, k, i)
}

fn edge_moments<U, G>(
    f: &EdgeFrame,
    pe: usize,
    gl: &GaussLegendre,
    u: &U,
    grad: &G,
) -> (Vec<f64>, Vec<f64>)
where
    U: Fn(&Point) -> f64,
    G: Fn(&Point) -> Point,
{
    let mut m = vec![0.0; pe];
    let mut dn = vec![0.0; pe];
    for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
        let x = f.point(*xi);
        let val = u(&x);
        let der = grad(&x).dot(&f.normal);
        let p = edge_powers(*xi, pe - 1);
        for j in 0..pe {
            m[j] += 0.5 * w * val * p[j];
            dn[j] += 0.5 * f.length * w * der * p[j];
        }
    }
    (m, dn)
}

fn interior_moments<U: Fn(&Point) -> f64>(
    mesh: &Mesh,
    k: usize,
    order: usize,
    u: &U,
) -> Result<Vec<f64>> {
    let n4 = interior_count(order);
    if n4 == 0 {
        return Ok(Vec::new());
    }
    let el = &mesh.elements[k];
    let basis = MonomialBasis::new(el.centroid, el.diameter, order - 4);
    let q = element_quadrature(mesh, k, interpolation_degree(order))?;
    let mut out = vec![0.0; n4];
    let mut m = vec![0.0; n4];
    for (x, w) in q.points.iter().zip(&q.weights) {
        basis.eval_into(x, &mut m);
        let val = w * u(x) / el.area;
        for j in 0..n4 {
            out[j] += val * m[j];
        }
    }
    Ok(out)
}
