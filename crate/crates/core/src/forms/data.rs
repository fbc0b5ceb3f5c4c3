use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;

use crate::mesh::Point;

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&Point) -> Matrix2<f64> + Send + Sync>;

/// Closed-form solution used for error measurement.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: VectorFn,
    pub hessian: MatrixFn,
}

/// Data of `-εΔ²u + det(D²u) = f`, `u = g` and `Δu = ψ` on the boundary.
#[derive(Clone)]
pub struct ProblemData {
    pub name: String,
    pub epsilon: f64,
    pub f: ScalarFn,
    pub g: ScalarFn,
    /// Hessian of `g`, used for `∂²g/∂t²` on boundary edges when present.
    pub g_hessian: Option<MatrixFn>,
    pub psi: ScalarFn,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("name", &self.name)
            .field("epsilon", &self.epsilon)
            .field("g_hessian", &self.g_hessian.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemData {
    /// Second tangential derivative of `g` at `x` along unit `t`.
    pub fn g_tangential(&self, x: &Point, t: &Point, h_edge: f64) -> f64 {
        match &self.g_hessian {
            Some(h) => (t.transpose() * h(x) * t)[0],
            None => {
                let d = h_edge / 64.0;
                let g = |s: f64| (self.g)(&(x + t * s));
                (-g(2.0 * d) + 16.0 * g(d) - 30.0 * g(0.0) + 16.0 * g(-d) - g(-2.0 * d))
                    / (12.0 * d * d)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabilizationMode {
    /// Global constant `C` in both second-order stabilisations.
    #[default]
    Constant,
    /// Element-wise sup-norms of the cofactor of the mean Hessian and of
    /// the coefficient field.
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationSpec {
    pub mode: StabilizationMode,
    pub constant: f64,
}

impl Default for StabilizationSpec {
    fn default() -> Self {
        StabilizationSpec {
            mode: StabilizationMode::Constant,
            constant: 1.0,
        }
    }
}

impl StabilizationSpec {
    pub fn scaled() -> Self {
        StabilizationSpec {
            mode: StabilizationMode::Scaled,
            constant: 1.0,
        }
    }
}

/// Symmetric 2×2 coefficient `Φ` of the linearised form, stored as
/// `[φ11, φ12, φ21, φ22]`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientField {
    Identity,
    /// Values at the operator quadrature points of every element.
    PerPoint(Vec<Vec<[f64; 4]>>),
}

impl CoefficientField {
    pub fn at(&self, element: usize, q: usize) -> [f64; 4] {
        match self {
            CoefficientField::Identity => [1.0, 0.0, 0.0, 1.0],
            CoefficientField::PerPoint(v) => v[element][q],
        }
    }
}

/// `cof(H) = [[h22, -h21], [-h12, h11]]` in the component order
/// `11, 12, 21, 22`.
pub fn cofactor(h: &[f64; 4]) -> [f64; 4] {
    [h[3], -h[2], -h[1], h[0]]
}

pub fn det2(h: &[f64; 4]) -> f64 {
    h[0] * h[3] - h[1] * h[2]
}

pub fn frobenius(h: &[f64; 4]) -> f64 {
    h.iter().map(|x| x * x).sum::<f64>().sqrt()
}
