use super::{Mesh, Point};

/// Uniform `n × n` grid of axis-aligned squares on `[0,1]²`.
///
/// Vertices are numbered row by row from the origin; elements likewise.
pub fn build_uniform_quad_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "quad mesh needs at least one cell per side");
    let h = 1.0 / n as f64;
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints on the boundary
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push(Point::new(x, y));
        }
    }
    let mut polygons = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            polygons.push(vec![
                vid(i, j),
                vid(i + 1, j),
                vid(i + 1, j + 1),
                vid(i, j + 1),
            ]);
        }
    }
    Mesh::from_polygons(vertices, polygons).expect("uniform quad mesh is always valid")
}
