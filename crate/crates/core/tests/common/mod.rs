#![allow(dead_code)]

use std::sync::Arc;

use mavem::forms::{
    assemble_residual, assemble_rhs, restrict_to_free, ExactSolution, ProblemData, SparseMatrix,
    StabilizationSpec,
};
use mavem::mesh::Point;
use mavem::poly::GaussLegendre;
use mavem::space::VemSpace;
use nalgebra::{DMatrix, DVector, Matrix2};

pub fn dense(a: &SparseMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    for j in 0..a.ncols() {
        for p in col_ptr[j]..col_ptr[j + 1] {
            out[(row_idx[p], j)] += a.val()[p];
        }
    }
    out
}

/// Tensor Gauss rule on the unit square.
pub fn integrate_unit_square(f: impl Fn(&Point) -> f64) -> f64 {
    let g = GaussLegendre::new(10);
    let mut s = 0.0;
    for (xi, wi) in g.nodes.iter().zip(&g.weights) {
        for (yj, wj) in g.nodes.iter().zip(&g.weights) {
            let p = Point::new(0.5 * (xi + 1.0), 0.5 * (yj + 1.0));
            s += 0.25 * wi * wj * f(&p);
        }
    }
    s
}

/// A polynomial with its gradient and Hessian.
#[derive(Clone)]
pub struct Poly {
    pub terms: Vec<(f64, i32, i32)>,
}

impl Poly {
    pub fn new(terms: &[(f64, i32, i32)]) -> Self {
        Poly {
            terms: terms.to_vec(),
        }
    }

    fn mono(c: f64, a: i32, b: i32, p: &Point) -> f64 {
        if a < 0 || b < 0 {
            0.0
        } else {
            c * p.x.powi(a) * p.y.powi(b)
        }
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.terms
            .iter()
            .map(|&(c, a, b)| Self::mono(c, a, b, p))
            .sum()
    }

    pub fn grad(&self, p: &Point) -> Point {
        let gx = self
            .terms
            .iter()
            .map(|&(c, a, b)| Self::mono(c * a as f64, a - 1, b, p))
            .sum();
        let gy = self
            .terms
            .iter()
            .map(|&(c, a, b)| Self::mono(c * b as f64, a, b - 1, p))
            .sum();
        Point::new(gx, gy)
    }

    pub fn hessian(&self, p: &Point) -> Matrix2<f64> {
        let mut h = Matrix2::zeros();
        for &(c, a, b) in &self.terms {
            let (af, bf) = (a as f64, b as f64);
            h[(0, 0)] += Self::mono(c * af * (af - 1.0), a - 2, b, p);
            h[(1, 1)] += Self::mono(c * bf * (bf - 1.0), a, b - 2, p);
            let xy = Self::mono(c * af * bf, a - 1, b - 1, p);
            h[(0, 1)] += xy;
            h[(1, 0)] += xy;
        }
        h
    }

    pub fn laplacian(&self, p: &Point) -> f64 {
        self.hessian(p).trace()
    }

    pub fn exact(&self) -> ExactSolution {
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        ExactSolution {
            u: Arc::new(move |p| a.value(p)),
            grad: Arc::new(move |p| b.grad(p)),
            hessian: Arc::new(move |p| c.hessian(p)),
        }
    }
}

/// Data for which `u` solves the regularised equation when `Δ²u = 0`.
pub fn biharmonic_free_problem(u: &Poly, epsilon: f64) -> ProblemData {
    let (a, b, c, d) = (u.clone(), u.clone(), u.clone(), u.clone());
    ProblemData {
        name: "polynomial".into(),
        epsilon,
        f: Arc::new(move |p| a.hessian(p).determinant()),
        g: Arc::new(move |p| b.value(p)),
        g_hessian: Some(Arc::new(move |p| c.hessian(p))),
        psi: Arc::new(move |p| d.laplacian(p)),
        exact: Some(u.exact()),
    }
}

/// Zero data: `f = g = ψ = 0`.
pub fn zero_problem(epsilon: f64) -> ProblemData {
    ProblemData {
        name: "zero".into(),
        epsilon,
        f: Arc::new(|_| 0.0),
        g: Arc::new(|_| 0.0),
        g_hessian: None,
        psi: Arc::new(|_| 0.0),
        exact: None,
    }
}

/// Central differences of the free residual in the free dofs.
pub fn fd_jacobian(
    space: &VemSpace,
    u: &DVector<f64>,
    problem: &ProblemData,
    stab: &StabilizationSpec,
    tau: f64,
) -> DMatrix<f64> {
    let rhs = assemble_rhs(space, problem);
    let free = &space.layout.free_dofs;
    let n = free.len();
    let mut out = DMatrix::zeros(n, n);
    for (j, &d) in free.iter().enumerate() {
        let mut up = u.clone();
        up[d] += tau;
        let mut um = u.clone();
        um[d] -= tau;
        let rp = restrict_to_free(space, &assemble_residual(space, &up, problem, stab, &rhs));
        let rm = restrict_to_free(space, &assemble_residual(space, &um, problem, stab, &rhs));
        out.set_column(j, &((rp - rm) / (2.0 * tau)));
    }
    out
}
