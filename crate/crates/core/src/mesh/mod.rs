//! Polygonal meshes of the unit square.
//!
//! A [`Mesh`] is built once from a vertex list and counter-clockwise
//! polygons and is immutable afterwards. Every edge carries a designated
//! "plus" element `K⁺`; the edge tangent runs counter-clockwise with respect
//! to `K⁺` and the stored normal points out of `K⁺`.

mod io;
mod quad;
mod regularity;
mod voronoi;

use std::collections::HashMap;

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};
pub use quad::build_uniform_quad_mesh;
pub use regularity::{check_mesh_regularity, RegularityReport};
pub use voronoi::{build_voronoi_mesh, voronoi_mesh_from_seeds, LLOYD_TOLERANCE};

pub type Point = Vector2<f64>;

/// Tolerance used when deduplicating vertices produced by independent
/// geometric constructions.
pub const VERTEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Counter-clockwise vertex indices.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    /// `true` when this element is the plus side of `edges[i]`.
    pub is_plus: Vec<bool>,
    pub centroid: Point,
    pub diameter: f64,
    pub area: f64,
}

impl Element {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Orientation factor of local edge `i`: `+1` for `K⁺`, `-1` for `K⁻`.
    pub fn edge_sign(&self, i: usize) -> f64 {
        if self.is_plus[i] {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// `tangent = (x[endpoints[1]] - x[endpoints[0]]) / length`.
    pub endpoints: [usize; 2],
    pub length: f64,
    pub normal: Point,
    pub tangent: Point,
    pub plus: usize,
    pub minus: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.plus).chain(self.minus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    pub h_max: f64,
}

impl Mesh {
    /// Builds topology and geometry from counter-clockwise polygons.
    ///
    /// Fails if a polygon is clockwise or degenerate, if an edge is shared
    /// by more than two polygons, or if two polygons traverse a shared edge
    /// in the same direction (overlap).
    pub fn from_polygons(vertices: Vec<Point>, polygons: Vec<Vec<usize>>) -> Result<Self> {
        let mut elements = Vec::with_capacity(polygons.len());
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();

        for (k, poly) in polygons.into_iter().enumerate() {
            if poly.len() < 3 {
                return Err(Error::InvalidMesh(format!(
                    "element {k} has {} vertices",
                    poly.len()
                )));
            }
            if let Some(&bad) = poly.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element {k} references missing vertex {bad}"
                )));
            }
            let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
            let (area, centroid) = polygon_area_centroid(&pts);
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "element {k} is clockwise or degenerate (signed area {area:e})"
                )));
            }
            let n = poly.len();
            let mut elem_edges = Vec::with_capacity(n);
            let mut is_plus = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                if a == b {
                    return Err(Error::InvalidMesh(format!(
                        "element {k} repeats vertex {a}"
                    )));
                }
                let key = (a.min(b), a.max(b));
                match edge_map.get(&key) {
                    None => {
                        let d = vertices[b] - vertices[a];
                        let length = d.norm();
                        let tangent = d / length;
                        let normal = Point::new(tangent.y, -tangent.x);
                        edge_map.insert(key, edges.len());
                        elem_edges.push(edges.len());
                        is_plus.push(true);
                        edges.push(Edge {
                            endpoints: [a, b],
                            length,
                            normal,
                            tangent,
                            plus: k,
                            minus: None,
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.minus.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({a},{b}) shared by more than two elements"
                            )));
                        }
                        if edge.endpoints != [b, a] {
                            return Err(Error::InvalidMesh(format!(
                                "elements {} and {k} traverse edge ({a},{b}) in the same direction",
                                edge.plus
                            )));
                        }
                        edge.minus = Some(k);
                        elem_edges.push(e);
                        is_plus.push(false);
                    }
                }
            }
            let diameter = polygon_diameter(&pts);
            elements.push(Element {
                vertices: poly,
                edges: elem_edges,
                is_plus,
                centroid,
                diameter,
                area,
            });
        }

        let h_max = elements.iter().map(|e| e.diameter).fold(0.0, f64::max);
        Ok(Mesh {
            vertices,
            elements,
            edges,
            h_max,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn element_points(&self, k: usize) -> Vec<Point> {
        self.elements[k]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].endpoints;
        (self.vertices[a] + self.vertices[b]) * 0.5
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// Vertices lying on an edge with a single adjacent element.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            flags[e.endpoints[0]] = true;
            flags[e.endpoints[1]] = true;
        }
        flags
    }

    /// Checks the invariants expected of a mesh of `[0,1]²`: area partition,
    /// convex elements, boundary edges on the square, outward normals.
    pub fn validate_unit_square(&self) -> Result<()> {
        let area = self.total_area();
        if (area - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMesh(format!(
                "element areas sum to {area:.15}, expected 1"
            )));
        }
        for (k, _) in self.elements.iter().enumerate() {
            if !is_convex(&self.element_points(k)) {
                return Err(Error::NonConvexElement { element: k });
            }
        }
        let on_side = |p: &Point| {
            p.x.abs() < 1e-12
                || (p.x - 1.0).abs() < 1e-12
                || p.y.abs() < 1e-12
                || (p.y - 1.0).abs() < 1e-12
        };
        for (i, e) in self.edges.iter().enumerate() {
            let mid = self.edge_midpoint(i);
            if e.is_boundary() && !on_side(&mid) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {i} at ({:.6},{:.6}) is interior to the square",
                    mid.x, mid.y
                )));
            }
            let out = e.normal.dot(&(mid - self.elements[e.plus].centroid));
            if out <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "edge {i} normal does not point out of its plus element"
                )));
            }
        }
        Ok(())
    }
}

/// Signed area and area centroid of a polygon (positive for CCW).
pub fn polygon_area_centroid(pts: &[Point]) -> (f64, Point) {
    let n = pts.len();
    // Shift by the first vertex to limit cancellation.
    let o = pts[0];
    let mut area2 = 0.0;
    let mut c = Point::zeros();
    for i in 0..n {
        let p = pts[i] - o;
        let q = pts[(i + 1) % n] - o;
        let cross = p.x * q.y - q.x * p.y;
        area2 += cross;
        c += (p + q) * cross;
    }
    let area = 0.5 * area2;
    if area2 == 0.0 {
        return (0.0, o);
    }
    (area, o + c / (3.0 * area2))
}

pub fn polygon_diameter(pts: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max((pts[i] - pts[j]).norm());
        }
    }
    d
}

/// Convexity test: all cross products of consecutive edge vectors are
/// non-negative (collinear vertices allowed).
pub fn is_convex(pts: &[Point]) -> bool {
    let n = pts.len();
    let scale = polygon_diameter(pts).powi(2);
    (0..n).all(|i| {
        let a = pts[(i + 1) % n] - pts[i];
        let b = pts[(i + 2) % n] - pts[(i + 1) % n];
        a.x * b.y - a.y * b.x >= -1e-14 * scale
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh {
        Mesh::from_polygons(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn single_square_geometry() {
        let m = unit_square();
        assert_eq!(m.n_edges(), 4);
        let k = &m.elements[0];
        assert!((k.area - 1.0).abs() < 1e-15);
        assert!((k.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert!((k.centroid - Point::new(0.5, 0.5)).norm() < 1e-15);
        m.validate_unit_square().unwrap();
        // bottom edge: tangent +x, outward normal -y
        let e = &m.edges[0];
        assert_eq!(e.tangent, Point::new(1.0, 0.0));
        assert_eq!(e.normal, Point::new(0.0, -1.0));
        assert!(e.is_boundary());
    }

    #[test]
    fn clockwise_polygon_rejected() {
        let r = Mesh::from_polygons(
            vec![
                Point::new(0.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(1.0, 0.0),
            ],
            vec![vec![0, 1, 2]],
        );
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn overlapping_polygons_rejected() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let r = Mesh::from_polygons(v, vec![vec![0, 1, 2, 3], vec![0, 1, 2]]);
        assert!(r.is_err());
    }

    #[test]
    fn shared_edge_orientation() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.5, 1.0),
            Point::new(1.0, 1.0),
        ];
        let m = Mesh::from_polygons(v, vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]]).unwrap();
        let shared: Vec<_> = m.edges.iter().filter(|e| !e.is_boundary()).collect();
        assert_eq!(shared.len(), 1);
        let e = shared[0];
        assert_eq!(e.plus, 0);
        assert_eq!(e.minus, Some(1));
        assert_eq!(e.normal, Point::new(1.0, 0.0));
        assert!(!m.elements[1].is_plus[3]);
        m.validate_unit_square().unwrap();
    }

    #[test]
    fn convexity() {
        let square = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!(is_convex(&square));
        let dart = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.3, 0.3),
            Point::new(0.0, 1.0),
        ];
        assert!(!is_convex(&dart));
    }
}
