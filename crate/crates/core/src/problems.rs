//! Manufactured solutions with closed-form derivatives, checked against
//! finite differences whenever a problem is constructed.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::forms::{ExactSolution, MatrixFn, ProblemData, ScalarFn, VectorFn};
use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    /// `u = x² + y²`, the exact vanishing-moment solution for every `ε`.
    Quadratic,
    /// `u = (x⁴ + y⁴)/12`.
    P1Quartic,
    /// `u = exp((x² + y²)/2)`.
    P2Exponential,
    /// `u = x sin x + y sin y`.
    P3Trig,
    /// `f = 4`, `g = x² + y²` with `Δu = ε` on the boundary; errors are
    /// measured against the limit `u₀ = x² + y²`.
    Limit,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [
        ProblemId::Quadratic,
        ProblemId::P1Quartic,
        ProblemId::P2Exponential,
        ProblemId::P3Trig,
        ProblemId::Limit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Quadratic => "quadratic",
            ProblemId::P1Quartic => "p1",
            ProblemId::P2Exponential => "p2",
            ProblemId::P3Trig => "p3",
            ProblemId::Limit => "limit",
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ProblemId::Quadratic),
            "p1" | "p1_quartic" => Ok(ProblemId::P1Quartic),
            "p2" | "p2_exponential" => Ok(ProblemId::P2Exponential),
            "p3" | "p3_trig" => Ok(ProblemId::P3Trig),
            "limit" => Ok(ProblemId::Limit),
            _ => Err(Error::UnknownProblem(s.to_string())),
        }
    }
}

/// A smooth function with hand-derived derivatives up to `Δ²u`.
#[derive(Clone)]
pub struct ManufacturedSolution {
    pub name: &'static str,
    pub u: ScalarFn,
    pub grad: VectorFn,
    pub hessian: MatrixFn,
    pub laplacian: ScalarFn,
    pub bilaplacian: ScalarFn,
}

impl ManufacturedSolution {
    pub fn new(id: ProblemId) -> Self {
        match id {
            ProblemId::Quadratic | ProblemId::Limit => ManufacturedSolution {
                name: id.name(),
                u: Arc::new(|p| p.x * p.x + p.y * p.y),
                grad: Arc::new(|p| Point::new(2.0 * p.x, 2.0 * p.y)),
                hessian: Arc::new(|_| Matrix2::new(2.0, 0.0, 0.0, 2.0)),
                laplacian: Arc::new(|_| 4.0),
                bilaplacian: Arc::new(|_| 0.0),
            },
            ProblemId::P1Quartic => ManufacturedSolution {
                name: id.name(),
                u: Arc::new(|p| (p.x.powi(4) + p.y.powi(4)) / 12.0),
                grad: Arc::new(|p| Point::new(p.x.powi(3) / 3.0, p.y.powi(3) / 3.0)),
                hessian: Arc::new(|p| Matrix2::new(p.x * p.x, 0.0, 0.0, p.y * p.y)),
                laplacian: Arc::new(|p| p.x * p.x + p.y * p.y),
                bilaplacian: Arc::new(|_| 4.0),
            },
            ProblemId::P2Exponential => {
                let e = |p: &Point| (0.5 * (p.x * p.x + p.y * p.y)).exp();
                ManufacturedSolution {
                    name: id.name(),
                    u: Arc::new(e),
                    grad: Arc::new(move |p| Point::new(p.x, p.y) * e(p)),
                    hessian: Arc::new(move |p| {
                        Matrix2::new(1.0 + p.x * p.x, p.x * p.y, p.x * p.y, 1.0 + p.y * p.y) * e(p)
                    }),
                    laplacian: Arc::new(move |p| (2.0 + p.x * p.x + p.y * p.y) * e(p)),
                    bilaplacian: Arc::new(move |p| {
                        let r2 = p.x * p.x + p.y * p.y;
                        ((2.0 + r2).powi(2) + 4.0 * r2 + 4.0) * e(p)
                    }),
                }
            }
            ProblemId::P3Trig => ManufacturedSolution {
                name: id.name(),
                u: Arc::new(|p| p.x * p.x.sin() + p.y * p.y.sin()),
                grad: Arc::new(|p| {
                    Point::new(p.x.sin() + p.x * p.x.cos(), p.y.sin() + p.y * p.y.cos())
                }),
                hessian: Arc::new(|p| {
                    Matrix2::new(
                        2.0 * p.x.cos() - p.x * p.x.sin(),
                        0.0,
                        0.0,
                        2.0 * p.y.cos() - p.y * p.y.sin(),
                    )
                }),
                laplacian: Arc::new(|p| {
                    2.0 * p.x.cos() - p.x * p.x.sin() + 2.0 * p.y.cos() - p.y * p.y.sin()
                }),
                bilaplacian: Arc::new(|p| {
                    -4.0 * p.x.cos() + p.x * p.x.sin() - 4.0 * p.y.cos() + p.y * p.y.sin()
                }),
            },
        }
    }

    pub fn exact(&self) -> ExactSolution {
        ExactSolution {
            u: self.u.clone(),
            grad: self.grad.clone(),
            hessian: self.hessian.clone(),
        }
    }
}

/// Points of the 2–3 Halton sequence in `[0,1]²`.
pub fn halton_points(n: usize) -> Vec<Point> {
    let radical = |mut i: usize, base: usize| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    };
    (1..=n)
        .map(|i| Point::new(radical(i, 2), radical(i, 3)))
        .collect()
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-6;

fn d1(f: &dyn Fn(&Point) -> f64, p: &Point, dir: Point, h: f64) -> f64 {
    let at = |s: f64| f(&(p + dir * s));
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

fn d2(f: &dyn Fn(&Point) -> f64, p: &Point, dir: Point, h: f64) -> f64 {
    let at = |s: f64| f(&(p + dir * s));
    (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h)
}

/// Largest relative deviation between closed-form derivatives and fourth-order
/// central differences, per derivative, over the sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub gradient: f64,
    pub hessian: f64,
    pub laplacian: f64,
    pub bilaplacian: f64,
}

impl DerivativeReport {
    pub fn max(&self) -> f64 {
        self.gradient
            .max(self.hessian)
            .max(self.laplacian)
            .max(self.bilaplacian)
    }
}

/// Checks `∇u` against differences of `u`, `D²u` against differences of
/// `∇u`, `Δu` against the Hessian trace and `Δ²u` against second differences
/// of `Δu`.
pub fn validate_derivatives(sol: &ManufacturedSolution) -> Result<DerivativeReport> {
    let ex = Point::new(1.0, 0.0);
    let ey = Point::new(0.0, 1.0);
    let h = FD_STEP;
    let mut report = DerivativeReport {
        gradient: 0.0,
        hessian: 0.0,
        laplacian: 0.0,
        bilaplacian: 0.0,
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let fail = |derivative: &'static str, p: &Point, error: f64| Error::DerivativeMismatch {
        problem: sol.name.to_string(),
        derivative,
        x: p.x,
        y: p.y,
        error,
    };
    for p in halton_points(100) {
        let g = (sol.grad)(&p);
        let u = |x: &Point| (sol.u)(x);
        let eg = rel(d1(&u, &p, ex, h), g.x).max(rel(d1(&u, &p, ey, h), g.y));
        if eg > FD_TOLERANCE {
            return Err(fail("gradient", &p, eg));
        }
        let hs = (sol.hessian)(&p);
        let gx = |x: &Point| (sol.grad)(x).x;
        let gy = |x: &Point| (sol.grad)(x).y;
        let eh = [
            rel(d1(&gx, &p, ex, h), hs[(0, 0)]),
            rel(d1(&gx, &p, ey, h), hs[(0, 1)]),
            rel(d1(&gy, &p, ex, h), hs[(1, 0)]),
            rel(d1(&gy, &p, ey, h), hs[(1, 1)]),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if eh > FD_TOLERANCE {
            return Err(fail("hessian", &p, eh));
        }
        let el = rel(hs.trace(), (sol.laplacian)(&p));
        if el > FD_TOLERANCE {
            return Err(fail("laplacian", &p, el));
        }
        let lap = |x: &Point| (sol.laplacian)(x);
        let fd = d2(&lap, &p, ex, h) + d2(&lap, &p, ey, h);
        let eb = rel(fd, (sol.bilaplacian)(&p));
        if eb > FD_TOLERANCE {
            return Err(fail("bilaplacian", &p, eb));
        }
        report.gradient = report.gradient.max(eg);
        report.hessian = report.hessian.max(eh);
        report.laplacian = report.laplacian.max(el);
        report.bilaplacian = report.bilaplacian.max(eb);
    }
    Ok(report)
}

/// Problem data for `id` at regularisation `epsilon`.
pub fn manufactured(id: ProblemId, epsilon: f64) -> Result<ProblemData> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let sol = ManufacturedSolution::new(id);
    validate_derivatives(&sol)?;
    let (f, psi): (ScalarFn, ScalarFn) = match id {
        ProblemId::Limit => (Arc::new(|_| 4.0), Arc::new(move |_| epsilon)),
        _ => {
            let hess = sol.hessian.clone();
            let bilap = sol.bilaplacian.clone();
            (
                Arc::new(move |p| hess(p).determinant() - epsilon * bilap(p)),
                sol.laplacian.clone(),
            )
        }
    };
    let data = ProblemData {
        name: id.name().to_string(),
        epsilon,
        f,
        g: sol.u.clone(),
        g_hessian: Some(sol.hessian.clone()),
        psi,
        exact: Some(sol.exact()),
    };
    if id != ProblemId::Limit {
        check_consistency(&data, &sol)?;
    }
    Ok(data)
}

/// `f = det(D²u) - εΔ²u`, `g = u`, `ψ = Δu` at sample points.
pub fn check_consistency(data: &ProblemData, sol: &ManufacturedSolution) -> Result<()> {
    for p in halton_points(100) {
        let f = (sol.hessian)(&p).determinant() - data.epsilon * (sol.bilaplacian)(&p);
        let checks = [
            ("f", (data.f)(&p), f),
            ("g", (data.g)(&p), (sol.u)(&p)),
            ("psi", (data.psi)(&p), (sol.laplacian)(&p)),
        ];
        for (what, got, want) in checks {
            if (got - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(Error::InconsistentProblem(format!(
                    "{what} at ({:.4}, {:.4}): {got} vs {want}",
                    p.x, p.y
                )));
            }
        }
    }
    Ok(())
}

/// `det(D²u) > 0` and `tr(D²u) > 0` at every point.
pub fn is_strictly_convex_at(sol: &ManufacturedSolution, points: &[Point]) -> bool {
    points.iter().all(|p| {
        let h = (sol.hessian)(p);
        h.determinant() > 0.0 && h.trace() > 0.0
    })
}
