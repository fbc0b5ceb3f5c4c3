use super::{is_convex, Mesh};

/// Measured shape-regularity of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    /// min over elements `K` and edges `e ⊂ ∂K` of `h_e / h_K`.
    pub rho_min: f64,
    pub max_edge_count: usize,
    /// Every element is convex and contains a ball of positive radius about
    /// its centroid.
    pub star_shaped_ok: bool,
    /// min over `K` of (distance from centroid to `∂K`) / `h_K`.
    pub star_radius_ratio: f64,
    pub threshold: f64,
    /// `rho_min >= threshold` and `star_shaped_ok`.
    pub passed: bool,
}

pub fn check_mesh_regularity(mesh: &Mesh, threshold: f64) -> RegularityReport {
    let mut rho_min = f64::INFINITY;
    let mut max_edge_count = 0;
    let mut star_radius_ratio = f64::INFINITY;
    let mut all_convex = true;
    for (k, el) in mesh.elements.iter().enumerate() {
        max_edge_count = max_edge_count.max(el.n_edges());
        for &e in &el.edges {
            rho_min = rho_min.min(mesh.edges[e].length / el.diameter);
        }
        let pts = mesh.element_points(k);
        all_convex &= is_convex(&pts);
        // inradius about the centroid: distance to the nearest edge line,
        // signed so that a centroid outside gives a negative value
        let n = pts.len();
        let inradius = (0..n)
            .map(|i| {
                let a = pts[i];
                let t = (pts[(i + 1) % n] - a).normalize();
                let c = el.centroid - a;
                t.x * c.y - t.y * c.x
            })
            .fold(f64::INFINITY, f64::min);
        star_radius_ratio = star_radius_ratio.min(inradius / el.diameter);
    }
    let star_shaped_ok = all_convex && star_radius_ratio > 0.0;
    RegularityReport {
        rho_min,
        max_edge_count,
        star_shaped_ok,
        star_radius_ratio,
        threshold,
        passed: rho_min >= threshold && star_shaped_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_quad_mesh, Point};

    #[test]
    fn unit_square() {
        let r = check_mesh_regularity(&build_uniform_quad_mesh(1), 0.1);
        assert!((r.rho_min - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.max_edge_count, 4);
        assert!(r.star_shaped_ok);
        assert!((r.star_radius_ratio - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn sliver_is_flagged() {
        let m = Mesh::from_polygons(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 0.1),
                Point::new(0.0, 0.1),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let r = check_mesh_regularity(&m, 0.1);
        // h_e = 0.1, h_K = sqrt(1.01)
        let expected = 0.1 / 1.01f64.sqrt();
        assert!((r.rho_min - expected).abs() < 1e-15);
        assert!((r.rho_min - 0.0995).abs() < 1e-4);
        assert!(!r.passed);
    }
}
