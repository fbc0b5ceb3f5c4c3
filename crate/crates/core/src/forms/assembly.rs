use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::data::{
    cofactor, det2, frobenius, CoefficientField, ProblemData, StabilizationMode, StabilizationSpec,
};
use crate::poly::{edge_powers, poly_dim};
use crate::space::{edge_rule, ElementOperators, VemSpace};

pub type SparseMatrix = SparseColMat<usize, f64>;

/// A sparse system over the free dofs together with the full-length lift
/// carrying the Dirichlet values.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub matrix: SparseMatrix,
    pub rhs: DVector<f64>,
    pub lift: DVector<f64>,
}

fn hessian_values(op: &ElementOperators, v: &DVector<f64>) -> Vec<[f64; 4]> {
    op.hessian_at_points(v)
}

/// `Σ_c P2_cᵀ G P2_c`.
fn hessian_energy(op: &ElementOperators) -> DMatrix<f64> {
    let g = op.hessian_gram();
    op.p2
        .iter()
        .fold(DMatrix::zeros(op.n_dofs, op.n_dofs), |acc, p| {
            acc + p.transpose() * &g * p
        })
}

/// Mean over `K` of `Π_2 v`, one linear functional per component.
fn mean_hessian_rows(op: &ElementOperators, area: f64) -> [DVector<f64>; 4] {
    let n2 = poly_dim(op.order as isize - 2);
    let mean = DVector::from_iterator(n2, (0..n2).map(|b| op.mass[(0, b)] / area));
    std::array::from_fn(|c| op.p2[c].transpose() * &mean)
}

/// Stabilisation coefficient of the nonlinear form and its gradient with
/// respect to the local dofs (zero in constant mode).
fn b_coefficient(
    op: &ElementOperators,
    area: f64,
    v: &DVector<f64>,
    stab: &StabilizationSpec,
) -> (f64, Option<DVector<f64>>) {
    match stab.mode {
        StabilizationMode::Constant => (-stab.constant, None),
        StabilizationMode::Scaled => {
            let rows = mean_hessian_rows(op, area);
            let m: [f64; 4] = std::array::from_fn(|c| rows[c].dot(v));
            let cof = cofactor(&m);
            let norm = frobenius(&cof);
            if norm == 0.0 {
                return (0.0, None);
            }
            // d|cof M| = cof(M) : cof(dM) / |cof M|
            let dir = cofactor(&cof).map(|x| x / norm);
            let grad = (0..4).fold(DVector::zeros(op.n_dofs), |acc: DVector<f64>, c| {
                acc + &rows[c] * dir[c]
            });
            (-norm, Some(-grad))
        }
    }
}

fn element_load(space: &VemSpace, k: usize, problem: &ProblemData) -> DVector<f64> {
    let op = &space.operators[k];
    let mesh = &space.mesh;
    let np = op.basis.dim();
    let mut fm = DVector::zeros(np);
    for (q, (x, w)) in op
        .quadrature
        .points
        .iter()
        .zip(&op.quadrature.weights)
        .enumerate()
    {
        let fw = w * (problem.f)(x);
        for a in 0..np {
            fm[a] += fw * op.basis_values[(q, a)];
        }
    }
    let mut out = op.p0.transpose() * fm;
    let l = op.order;
    let gl = edge_rule(l);
    for (i, f) in op.frames.iter().enumerate() {
        if !mesh.edges[f.edge].is_boundary() {
            continue;
        }
        let mut m = DVector::zeros(l);
        for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
            let x = f.point(*xi);
            let weight = (problem.g_tangential(&x, &f.tangent, f.length) - (problem.psi)(&x))
                * 0.5
                * f.length
                * w;
            m += edge_powers(*xi, l - 1) * weight;
        }
        out += op.en[i].full().transpose() * m * problem.epsilon;
    }
    out
}

/// Right-hand side `∫ f Π_0 w + ε Σ_{e ⊂ ∂Ω} ∫_e (∂²g/∂t² - ψ) Π^e_n w` as a
/// full-length vector.
pub fn assemble_rhs(space: &VemSpace, problem: &ProblemData) -> DVector<f64> {
    let locals: Vec<DVector<f64>> = (0..space.mesh.n_elements())
        .into_par_iter()
        .map(|k| element_load(space, k, problem))
        .collect();
    scatter_vectors(space, &locals)
}

fn scatter_vectors(space: &VemSpace, locals: &[DVector<f64>]) -> DVector<f64> {
    let layout = &space.layout;
    let mut out = DVector::zeros(layout.n_dofs);
    for (k, loc) in locals.iter().enumerate() {
        for ((&g, &s), v) in layout
            .local_to_global(k)
            .iter()
            .zip(layout.local_signs(k))
            .zip(loc.iter())
        {
            out[g] += s * v;
        }
    }
    out
}

/// Local residual of the nonlinear form, without the right-hand side.
fn element_residual(
    space: &VemSpace,
    k: usize,
    u: &[f64],
    epsilon: f64,
    stab: &StabilizationSpec,
) -> DVector<f64> {
    let op = &space.operators[k];
    let el = &space.mesh.elements[k];
    let v = DVector::from_vec(space.layout.gather(k, u));
    let h = hessian_values(op, &v);
    let np = op.basis.dim();
    let mut dm = DVector::zeros(np);
    for (q, w) in op.quadrature.weights.iter().enumerate() {
        let d = w * det2(&h[q]);
        for a in 0..np {
            dm[a] += d * op.basis_values[(q, a)];
        }
    }
    let (cb, _) = b_coefficient(op, el.area, &v, stab);
    let a = epsilon / (el.diameter * el.diameter);
    let sv = &op.stab * &v;
    let g = op.hessian_gram();
    let mut out = op.p0.transpose() * dm + sv * (cb - a);
    for p in &op.p2 {
        out -= p.transpose() * (&g * (p * &v)) * epsilon;
    }
    out
}

/// `F(u)(w) = A_QL,h(u, w) - RHS(w)` for every global test dof; `u` carries
/// the Dirichlet values. Only the free entries are residuals in the strict
/// sense.
pub fn assemble_residual(
    space: &VemSpace,
    u: &DVector<f64>,
    problem: &ProblemData,
    stab: &StabilizationSpec,
    rhs: &DVector<f64>,
) -> DVector<f64> {
    let locals: Vec<DVector<f64>> = (0..space.mesh.n_elements())
        .into_par_iter()
        .map(|k| element_residual(space, k, u.as_slice(), problem.epsilon, stab))
        .collect();
    scatter_vectors(space, &locals) - rhs
}

fn element_jacobian(
    space: &VemSpace,
    k: usize,
    u: &[f64],
    epsilon: f64,
    stab: &StabilizationSpec,
) -> DMatrix<f64> {
    let op = &space.operators[k];
    let el = &space.mesh.elements[k];
    let v = DVector::from_vec(space.layout.gather(k, u));
    let h = hessian_values(op, &v);
    let np = op.basis.dim();
    let n2 = poly_dim(op.order as isize - 2);
    let (cb, dcb) = b_coefficient(op, el.area, &v, stab);
    let a = epsilon / (el.diameter * el.diameter);
    let mut jac = hessian_energy(op) * (-epsilon) + &op.stab * (cb - a);
    if let Some(grad) = dcb {
        jac += (&op.stab * &v) * grad.transpose();
    }
    let mut kc: [DMatrix<f64>; 4] = std::array::from_fn(|_| DMatrix::zeros(np, n2));
    for (q, w) in op.quadrature.weights.iter().enumerate() {
        let c = cofactor(&h[q]);
        let m = op.basis_values.row(q);
        for comp in 0..4 {
            let s = w * c[comp];
            if s == 0.0 {
                continue;
            }
            for b in 0..n2 {
                let sb = s * m[b];
                for a in 0..np {
                    kc[comp][(a, b)] += sb * m[a];
                }
            }
        }
    }
    let mut det_block = DMatrix::zeros(np, op.n_dofs);
    for (k, p) in kc.iter().zip(&op.p2) {
        det_block += k * p;
    }
    jac + op.p0.transpose() * det_block
}

/// Exact derivative of [`assemble_residual`] restricted to free rows and
/// columns.
pub fn assemble_jacobian(
    space: &VemSpace,
    u: &DVector<f64>,
    problem: &ProblemData,
    stab: &StabilizationSpec,
) -> SparseMatrix {
    let locals: Vec<DMatrix<f64>> = (0..space.mesh.n_elements())
        .into_par_iter()
        .map(|k| element_jacobian(space, k, u.as_slice(), problem.epsilon, stab))
        .collect();
    scatter_matrices(space, &locals, None).0
}

fn element_linearized(
    space: &VemSpace,
    k: usize,
    phi: &CoefficientField,
    epsilon: f64,
    stab: &StabilizationSpec,
) -> DMatrix<f64> {
    let op = &space.operators[k];
    let el = &space.mesh.elements[k];
    let n1 = poly_dim(op.order as isize - 1);
    let mut gphi: [DMatrix<f64>; 4] = std::array::from_fn(|_| DMatrix::zeros(n1, n1));
    let mut phi_max: f64 = 0.0;
    for (q, w) in op.quadrature.weights.iter().enumerate() {
        let p = phi.at(k, q);
        phi_max = phi_max.max(frobenius(&p));
        let m = op.basis_values.row(q);
        for comp in 0..4 {
            let s = w * p[comp];
            if s == 0.0 {
                continue;
            }
            for b in 0..n1 {
                let sb = s * m[b];
                for a in 0..n1 {
                    gphi[comp][(a, b)] += sb * m[a];
                }
            }
        }
    }
    let c_phi = match stab.mode {
        StabilizationMode::Constant => stab.constant,
        StabilizationMode::Scaled => phi_max,
    };
    let mut out =
        hessian_energy(op) * epsilon + &op.stab * (epsilon / (el.diameter * el.diameter) + c_phi);
    for i in 0..2 {
        for j in 0..2 {
            out += op.p1[i].transpose() * &gphi[2 * i + j] * &op.p1[j];
        }
    }
    out
}

/// `A_L,h` with coefficient `Φ` over the free dofs; `rhs` holds the
/// elimination of the lift, `-A_{free, fixed} lift`.
pub fn assemble_linearized(
    space: &VemSpace,
    phi: &CoefficientField,
    epsilon: f64,
    stab: &StabilizationSpec,
    lift: &DVector<f64>,
) -> GlobalSystem {
    let locals: Vec<DMatrix<f64>> = (0..space.mesh.n_elements())
        .into_par_iter()
        .map(|k| element_linearized(space, k, phi, epsilon, stab))
        .collect();
    let (matrix, rhs) = scatter_matrices(space, &locals, Some(lift));
    GlobalSystem {
        matrix,
        rhs,
        lift: lift.clone(),
    }
}

/// Frozen coefficient `Φ = cof(Π_2 v)` at every operator quadrature point.
pub fn frozen_coefficient(space: &VemSpace, v: &DVector<f64>) -> CoefficientField {
    let values = (0..space.mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let local = DVector::from_vec(space.layout.gather(k, v.as_slice()));
            hessian_values(&space.operators[k], &local)
                .iter()
                .map(|h| {
                    let off = 0.5 * (h[1] + h[2]);
                    cofactor(&[h[0], off, off, h[3]])
                })
                .collect()
        })
        .collect();
    CoefficientField::PerPoint(values)
}

/// Merges element matrices in element order. Returns the free-free block
/// and, when a lift is given, `-A_{free, fixed} lift`.
fn scatter_matrices(
    space: &VemSpace,
    locals: &[DMatrix<f64>],
    lift: Option<&DVector<f64>>,
) -> (SparseMatrix, DVector<f64>) {
    let layout = &space.layout;
    let n = layout.n_free();
    let mut triplets = Vec::new();
    let mut rhs = DVector::zeros(n);
    for (k, loc) in locals.iter().enumerate() {
        let map = layout.local_to_global(k);
        let sign = layout.local_signs(k);
        for b in 0..map.len() {
            let col = layout.free_index(map[b]);
            for a in 0..map.len() {
                let Some(row) = layout.free_index(map[a]) else {
                    continue;
                };
                let val = sign[a] * sign[b] * loc[(a, b)];
                match col {
                    Some(col) => triplets.push(Triplet::new(row, col, val)),
                    None => {
                        if let Some(l) = lift {
                            rhs[row] -= val * l[map[b]];
                        }
                    }
                }
            }
        }
    }
    let matrix =
        SparseColMat::try_new_from_triplets(n, n, &triplets).expect("triplet indices are in range");
    (matrix, rhs)
}

/// Free entries of a full-length vector.
pub fn restrict_to_free(space: &VemSpace, full: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        space.layout.n_free(),
        space.layout.free_dofs.iter().map(|&d| full[d]),
    )
}

/// `base` with its free entries replaced by `free`.
pub fn extend_free(space: &VemSpace, base: &DVector<f64>, free: &DVector<f64>) -> DVector<f64> {
    let mut out = base.clone();
    for (i, &d) in space.layout.free_dofs.iter().enumerate() {
        out[d] = free[i];
    }
    out
}
