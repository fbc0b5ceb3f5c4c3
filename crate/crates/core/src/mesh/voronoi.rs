//! Lloyd-relaxed Voronoi meshes of the unit square.
//!
//! Cells are computed independently by clipping the square against the
//! bisector half-planes of nearby seeds (found through a uniform bucket
//! grid), then merged into a conforming mesh by vertex deduplication.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{polygon_area_centroid, Mesh, Point, VERTEX_TOLERANCE};
use crate::error::{Error, Result};

/// Lloyd iterations stop early once no seed moves farther than this.
pub const LLOYD_TOLERANCE: f64 = 1e-8;

const CLIP_TOLERANCE: f64 = 1e-13;
const MAX_REGENERATIONS: usize = 5;

/// Voronoi mesh of `n_cells` uniformly random seeds, relaxed by up to
/// `lloyd_iterations` centroidal steps. Deterministic in `rng_seed`.
pub fn build_voronoi_mesh(n_cells: usize, rng_seed: u64, lloyd_iterations: usize) -> Result<Mesh> {
    if n_cells == 0 {
        return Err(Error::DegenerateSeeds("need at least one cell".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds: Vec<Point> = (0..n_cells)
        .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    generate(seeds, lloyd_iterations, &mut rng)
}

/// Voronoi mesh of explicitly given seeds (all inside `[0,1]²`).
pub fn voronoi_mesh_from_seeds(seeds: Vec<Point>, lloyd_iterations: usize) -> Result<Mesh> {
    if seeds.is_empty() {
        return Err(Error::DegenerateSeeds("need at least one seed".into()));
    }
    if seeds
        .iter()
        .any(|p| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y))
    {
        return Err(Error::DegenerateSeeds(
            "seed outside the unit square".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    generate(seeds, lloyd_iterations, &mut rng)
}

fn generate(mut seeds: Vec<Point>, lloyd_iterations: usize, rng: &mut ChaCha8Rng) -> Result<Mesh> {
    let mut last_error = None;
    for attempt in 0..=MAX_REGENERATIONS {
        if attempt > 0 {
            // perturb and try again
            let amp = 1e-7 * 10f64.powi(attempt as i32);
            for p in seeds.iter_mut() {
                p.x = (p.x + amp * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
                p.y = (p.y + amp * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
            }
        }
        match relax_and_mesh(&seeds, lloyd_iterations) {
            Ok(mesh) => return Ok(mesh),
            Err(e) => {
                log::debug!("voronoi attempt {attempt} failed: {e}");
                last_error = Some(e);
            }
        }
    }
    Err(Error::DegenerateSeeds(format!(
        "generation failed after {MAX_REGENERATIONS} perturbations: {}",
        last_error.map(|e| e.to_string()).unwrap_or_default()
    )))
}

fn relax_and_mesh(seeds: &[Point], lloyd_iterations: usize) -> Result<Mesh> {
    let mut seeds = seeds.to_vec();
    let mut cells = voronoi_cells(&seeds)?;
    for _ in 0..lloyd_iterations {
        let mut max_move: f64 = 0.0;
        for (s, cell) in seeds.iter_mut().zip(&cells) {
            let (_, c) = polygon_area_centroid(cell);
            max_move = max_move.max((c - *s).norm());
            *s = c;
        }
        cells = voronoi_cells(&seeds)?;
        if max_move < LLOYD_TOLERANCE {
            break;
        }
    }
    let mesh = merge_cells(&cells)?;
    mesh.validate_unit_square()?;
    Ok(mesh)
}

struct SeedGrid {
    n: usize,
    size: f64,
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn new(seeds: &[Point]) -> Self {
        let n = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); n * n];
        let grid = SeedGrid {
            n,
            size: 1.0 / n as f64,
            buckets: Vec::new(),
        };
        for (i, p) in seeds.iter().enumerate() {
            let (bi, bj) = grid.bucket_of(p);
            buckets[bj * n + bi].push(i);
        }
        SeedGrid { buckets, ..grid }
    }

    fn bucket_of(&self, p: &Point) -> (usize, usize) {
        let f = |x: f64| ((x / self.size).floor().max(0.0) as usize).min(self.n - 1);
        (f(p.x), f(p.y))
    }

    /// Buckets at Chebyshev distance exactly `ring` from `(bi, bj)`.
    fn ring(&self, bi: usize, bj: usize, ring: usize) -> Vec<usize> {
        let n = self.n as isize;
        let (bi, bj, r) = (bi as isize, bj as isize, ring as isize);
        let mut out = Vec::new();
        for j in (bj - r)..=(bj + r) {
            for i in (bi - r)..=(bi + r) {
                if (i - bi).abs().max((j - bj).abs()) != r {
                    continue;
                }
                if i >= 0 && j >= 0 && i < n && j < n {
                    out.push((j * n + i) as usize);
                }
            }
        }
        out
    }
}

fn unit_square() -> Vec<Point> {
    vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ]
}

fn voronoi_cells(seeds: &[Point]) -> Result<Vec<Vec<Point>>> {
    let grid = SeedGrid::new(seeds);
    (0..seeds.len())
        .map(|i| voronoi_cell(i, seeds, &grid))
        .collect()
}

fn voronoi_cell(i: usize, seeds: &[Point], grid: &SeedGrid) -> Result<Vec<Point>> {
    let p = seeds[i];
    let (bi, bj) = grid.bucket_of(&p);
    let mut poly = unit_square();
    for ring in 0..=grid.n {
        if ring >= 1 {
            let radius = poly.iter().map(|v| (v - p).norm()).fold(0.0, f64::max);
            if (ring - 1) as f64 * grid.size > 2.0 * radius {
                break;
            }
        }
        for b in grid.ring(bi, bj, ring) {
            for &j in &grid.buckets[b] {
                if j == i {
                    continue;
                }
                let q = seeds[j];
                if (q - p).norm() < VERTEX_TOLERANCE {
                    return Err(Error::DegenerateSeeds(format!(
                        "seeds {i} and {j} coincide"
                    )));
                }
                poly = clip(&poly, &p, &q);
                if poly.len() < 3 {
                    return Err(Error::DegenerateSeeds(format!("cell {i} vanished")));
                }
            }
        }
    }
    Ok(poly)
}

/// Keeps the part of `poly` closer to `p` than to `q`.
fn clip(poly: &[Point], p: &Point, q: &Point) -> Vec<Point> {
    let d = q - p;
    let dn = d / d.norm();
    let m = (p + q) * 0.5;
    let dist = |x: &Point| (x - m).dot(&dn);
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let a = &poly[k];
        let b = &poly[(k + 1) % n];
        let (da, db) = (dist(a), dist(b));
        let (a_in, b_in) = (da <= CLIP_TOLERANCE, db <= CLIP_TOLERANCE);
        let cross = |a: &Point, b: &Point| a + (b - a) * (da / (da - db));
        match (a_in, b_in) {
            (true, true) => out.push(*b),
            (true, false) => {
                if da < -CLIP_TOLERANCE {
                    out.push(cross(a, b));
                }
            }
            (false, true) => {
                if db < -CLIP_TOLERANCE {
                    out.push(cross(a, b));
                }
                out.push(*b);
            }
            (false, false) => {}
        }
    }
    // drop coincident consecutive points
    let mut cleaned: Vec<Point> = Vec::with_capacity(out.len());
    for x in out {
        if cleaned
            .last()
            .is_none_or(|l: &Point| (l - x).norm() > CLIP_TOLERANCE)
        {
            cleaned.push(x);
        }
    }
    while cleaned.len() > 1 && (cleaned[0] - cleaned[cleaned.len() - 1]).norm() <= CLIP_TOLERANCE {
        cleaned.pop();
    }
    cleaned
}

fn snap(x: f64) -> f64 {
    if x.abs() < VERTEX_TOLERANCE {
        0.0
    } else if (x - 1.0).abs() < VERTEX_TOLERANCE {
        1.0
    } else {
        x
    }
}

fn merge_cells(cells: &[Vec<Point>]) -> Result<Mesh> {
    const Q: f64 = 1e-10;
    let key = |p: &Point| ((p.x / Q).floor() as i64, (p.y / Q).floor() as i64);
    let mut lookup: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut polygons = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut poly: Vec<usize> = Vec::with_capacity(cell.len());
        for raw in cell {
            let p = Point::new(snap(raw.x), snap(raw.y));
            let (kx, ky) = key(&p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = lookup.get(&(kx + dx, ky + dy)) {
                        for &id in ids {
                            if (vertices[id] - p).norm() <= VERTEX_TOLERANCE {
                                found = Some(id);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                vertices.push(p);
                lookup.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if poly.last() != Some(&id) {
                poly.push(id);
            }
        }
        while poly.len() > 1 && poly.first() == poly.last() {
            poly.pop();
        }
        if poly.len() < 3 {
            return Err(Error::DegenerateSeeds("cell collapsed during merge".into()));
        }
        polygons.push(poly);
    }
    Mesh::from_polygons(vertices, polygons)
}
