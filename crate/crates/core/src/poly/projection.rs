use nalgebra::{DMatrix, DVector};

use super::basis::MonomialBasis;
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Gram matrices with a larger condition number are treated as singular.
pub const GRAM_CONDITION_LIMIT: f64 = 1e14;

/// Mass matrix `∫_K m_α m_β` for the given basis and rule.
pub fn gram_matrix(basis: &MonomialBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let n = basis.dim();
    let mut g = DMatrix::zeros(n, n);
    let mut m = vec![0.0; n];
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval_into(x, &mut m);
        for j in 0..n {
            let wm = w * m[j];
            for i in 0..n {
                g[(i, j)] += wm * m[i];
            }
        }
    }
    g
}

/// Condition number estimate of a symmetric positive definite matrix.
pub fn spd_condition(g: &DMatrix<f64>) -> f64 {
    let ev = g.clone().symmetric_eigenvalues();
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `L²(K)` projection of `f` onto `P_degree(K)`; returns monomial
/// coefficients.
pub fn l2_project_element<F: Fn(&Point) -> f64>(
    f: F,
    basis: &MonomialBasis,
    rule: &QuadratureRule,
    element: usize,
) -> Result<DVector<f64>> {
    let g = gram_matrix(basis, rule);
    let condition = spd_condition(&g);
    if condition > GRAM_CONDITION_LIMIT {
        return Err(Error::SingularLocalSystem {
            element,
            what: "Gram matrix",
            condition,
        });
    }
    let n = basis.dim();
    let mut rhs = DVector::zeros(n);
    let mut m = vec![0.0; n];
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval_into(x, &mut m);
        let fx = w * f(x);
        for i in 0..n {
            rhs[i] += fx * m[i];
        }
    }
    g.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::SingularLocalSystem {
            element,
            what: "Gram matrix",
            condition,
        })
}
