use crate::error::{Error, Result};
use crate::mesh::{is_convex, polygon_area_centroid, Mesh, Point};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Smallest rule exact for polynomials of degree `degree`.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Points and positive weights on a 2D domain.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rule on a convex polygon, exact up to total degree `degree`: fan
/// triangulation from the centroid, collapsed tensor Gauss on each triangle.
pub fn polygon_quadrature(pts: &[Point], degree: usize) -> Option<QuadratureRule> {
    if pts.len() < 3 || !is_convex(pts) {
        return None;
    }
    let (_, c) = polygon_area_centroid(pts);
    // in collapsed coordinates the Jacobian adds one degree in the radial
    // direction
    let radial = GaussLegendre::for_degree(degree + 1);
    let angular = GaussLegendre::for_degree(degree);
    let n = pts.len();
    let mut points = Vec::with_capacity(n * radial.len() * angular.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for i in 0..n {
        let a = pts[i] - c;
        let b = pts[(i + 1) % n] - c;
        let area2 = a.x * b.y - a.y * b.x;
        for (u, wu) in radial.nodes.iter().zip(&radial.weights) {
            let u = 0.5 * (u + 1.0);
            for (v, wv) in angular.nodes.iter().zip(&angular.weights) {
                let v = 0.5 * (v + 1.0);
                points.push(c + (a + (b - a) * v) * u);
                // (1/2)(1/2) from the interval maps; |T| = area2/2
                weights.push(0.25 * wu * wv * area2 * u);
            }
        }
    }
    Some(QuadratureRule {
        points,
        weights,
        exactness: degree,
    })
}

pub fn element_quadrature(mesh: &Mesh, element: usize, degree: usize) -> Result<QuadratureRule> {
    polygon_quadrature(&mesh.element_points(element), degree)
        .ok_or(Error::NonConvexElement { element })
}

/// Gauss–Legendre rule mapped to the segment `[a, b]`.
pub fn segment_quadrature(a: &Point, b: &Point, degree: usize) -> QuadratureRule {
    let gl = GaussLegendre::for_degree(degree);
    let half = (b - a).norm() * 0.5;
    let mid = (a + b) * 0.5;
    let t = (b - a) * 0.5;
    QuadratureRule {
        points: gl.nodes.iter().map(|x| mid + t * *x).collect(),
        weights: gl.weights.iter().map(|w| w * half).collect(),
        exactness: degree,
    }
}

pub fn edge_quadrature(mesh: &Mesh, edge: usize, degree: usize) -> QuadratureRule {
    let [a, b] = mesh.edges[edge].endpoints;
    segment_quadrature(&mesh.vertices[a], &mesh.vertices[b], degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_quad_mesh;

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..12 {
            let gl = GaussLegendre::new(n);
            for k in 0..2 * n {
                let approx: f64 = gl
                    .nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k + 1) as f64
                };
                assert!((approx - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn unit_square_x2y() {
        let m = build_uniform_quad_mesh(1);
        let q = element_quadrature(&m, 0, 3).unwrap();
        assert!((q.measure() - 1.0).abs() < 1e-14);
        assert!((q.integrate(|p| p.x * p.x * p.y) - 1.0 / 6.0).abs() < 1e-15);
        assert!(q.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn regular_pentagon_area() {
        let pts: Vec<Point> = (0..5)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 5.0;
                Point::new(0.5 + 0.4 * t.cos(), 0.5 + 0.4 * t.sin())
            })
            .collect();
        // shoelace
        let shoelace = 0.5
            * (0..5)
                .map(|i| {
                    let (p, q) = (pts[i], pts[(i + 1) % 5]);
                    p.x * q.y - q.x * p.y
                })
                .sum::<f64>();
        let q = polygon_quadrature(&pts, 4).unwrap();
        assert!((q.measure() - shoelace).abs() < 1e-13);
    }

    #[test]
    fn nonconvex_rejected() {
        let dart = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.3, 0.3),
            Point::new(0.0, 1.0),
        ];
        assert!(polygon_quadrature(&dart, 2).is_none());
    }

    #[test]
    fn edge_rules() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let q = segment_quadrature(&a, &b, 3);
        assert_eq!(q.len(), 2);
        assert!((q.measure() - 1.0).abs() < 1e-15);
        assert!((q.integrate(|p| p.x.powi(3)) - 0.25).abs() < 1e-15);
        let c = Point::new(0.3, 0.9);
        assert!((segment_quadrature(&a, &c, 0).measure() - c.norm()).abs() < 1e-15);
    }
}
