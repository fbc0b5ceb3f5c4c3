//! Plain-text mesh format.
//!
//! ```text
//! NV NE
//! x y            (NV lines)
//! k i1 ... ik    (NE lines, 0-based, counter-clockwise)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, Point};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.n_vertices(), mesh.n_elements());
    for v in &mesh.vertices {
        // {:e} is the shortest representation that round-trips exactly
        let _ = writeln!(s, "{:e} {:e}", v.x, v.y);
    }
    for el in &mesh.elements {
        let _ = write!(s, "{}", el.vertices.len());
        for v in &el.vertices {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text).map_err(|message| Error::MeshFormat {
        path: path.display().to_string(),
        message,
    })
}

pub fn parse_mesh(text: &str) -> std::result::Result<Mesh, String> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| format!("unexpected end of file, expected {what}"))
    };
    let parse_usize = |tok: &str, line: usize| {
        tok.parse::<usize>()
            .map_err(|_| format!("line {}: `{tok}` is not a non-negative integer", line + 1))
    };

    let (ln, header) = next("header")?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(format!("line {}: header must be `NV NE`", ln + 1));
    }
    let nv = parse_usize(head[0], ln)?;
    let ne = parse_usize(head[1], ln)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", ln + 1))?;
        if xs.len() != 2 {
            return Err(format!("line {}: vertex needs two coordinates", ln + 1));
        }
        vertices.push(Point::new(xs[0], xs[1]));
    }
    let mut polygons = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = next("element")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let k = parse_usize(toks.first().copied().unwrap_or(""), ln)?;
        if toks.len() != k + 1 {
            return Err(format!("line {}: expected {k} vertex indices", ln + 1));
        }
        let poly = toks[1..]
            .iter()
            .map(|t| parse_usize(t, ln))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        polygons.push(poly);
    }
    Mesh::from_polygons(vertices, polygons).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_quad_mesh, build_voronoi_mesh};

    #[test]
    fn round_trip_is_exact() {
        for mesh in [
            build_uniform_quad_mesh(3),
            build_voronoi_mesh(20, 1, 5).unwrap(),
        ] {
            let back = parse_mesh(&format_mesh(&mesh)).unwrap();
            assert_eq!(back, mesh);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_mesh("3 1\n0 0\n1 0\n").is_err());
        assert!(parse_mesh("3 1\n0 0\n1 0\n0 1\n3 0 1\n").is_err());
        assert!(parse_mesh("3 1\n0 0\n1 0\n0 1\n3 0 1 7\n").is_err());
        assert!(parse_mesh("3 1\n0 0\n1 0\n0 1\n3 0 1 2\n").is_ok());
    }
}
