use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::poly::poly_dim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofKind {
    VertexValue,
    EdgeMoment,
    NormalMoment,
    InteriorMoment,
}

/// A degree of freedom: its kind, the vertex/edge/element it lives on and
/// the moment index within that entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofTag {
    pub kind: DofKind,
    pub entity: usize,
    pub moment: usize,
}

/// Global numbering of the dofs D1–D4 and their local-to-global maps.
///
/// Global order: vertex values, edge moments (`ℓ-1` per edge), normal
/// moments (`ℓ-1` per edge), interior moments (`dim P_{ℓ-4}` per element).
/// Local order on an element with `N` edges follows the same grouping with
/// vertices and edges taken in counter-clockwise order. Normal moments are
/// stored globally against the edge normal `n_e`; a minus element reads
/// them with a factor `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    pub order: usize,
    pub n_dofs: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_elements: usize,
    local_to_global: Vec<Vec<usize>>,
    local_signs: Vec<Vec<f64>>,
    /// Boundary vertex values and boundary edge moments, fixed by `g`.
    pub constrained: Vec<bool>,
    pub free_dofs: Vec<usize>,
    free_index: Vec<Option<usize>>,
}

pub fn build_dof_layout(mesh: &Mesh, order: usize) -> Result<DofLayout> {
    if order < 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    let nv = mesh.n_vertices();
    let ne = mesh.n_edges();
    let nk = mesh.n_elements();
    let pe = order - 1;
    let pk = interior_count(order);
    let n_dofs = nv + 2 * ne * pe + nk * pk;

    let mut local_to_global = Vec::with_capacity(nk);
    let mut local_signs = Vec::with_capacity(nk);
    for (k, el) in mesh.elements.iter().enumerate() {
        let n = el.n_edges();
        let mut map = Vec::with_capacity(local_dof_count(n, order));
        let mut sign = Vec::with_capacity(map.capacity());
        for &v in &el.vertices {
            map.push(v);
            sign.push(1.0);
        }
        for &e in &el.edges {
            for j in 0..pe {
                map.push(nv + e * pe + j);
                sign.push(1.0);
            }
        }
        for (i, &e) in el.edges.iter().enumerate() {
            for j in 0..pe {
                map.push(nv + ne * pe + e * pe + j);
                sign.push(el.edge_sign(i));
            }
        }
        for j in 0..pk {
            map.push(nv + 2 * ne * pe + k * pk + j);
            sign.push(1.0);
        }
        local_to_global.push(map);
        local_signs.push(sign);
    }

    let mut constrained = vec![false; n_dofs];
    for (v, on) in mesh.boundary_vertices().into_iter().enumerate() {
        constrained[v] = on;
    }
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.is_boundary() {
            for j in 0..pe {
                constrained[nv + e * pe + j] = true;
            }
        }
    }
    let mut free_dofs = Vec::new();
    let mut free_index = vec![None; n_dofs];
    for (i, c) in constrained.iter().enumerate() {
        if !c {
            free_index[i] = Some(free_dofs.len());
            free_dofs.push(i);
        }
    }

    Ok(DofLayout {
        order,
        n_dofs,
        n_vertices: nv,
        n_edges: ne,
        n_elements: nk,
        local_to_global,
        local_signs,
        constrained,
        free_dofs,
        free_index,
    })
}

/// `dim P_{ℓ-4}`.
pub fn interior_count(order: usize) -> usize {
    poly_dim(order as isize - 4)
}

/// Number of local dofs on an element with `n_edges` edges.
pub fn local_dof_count(n_edges: usize, order: usize) -> usize {
    n_edges * (1 + 2 * (order - 1)) + interior_count(order)
}

impl DofLayout {
    pub fn per_edge(&self) -> usize {
        self.order - 1
    }

    pub fn per_element(&self) -> usize {
        interior_count(self.order)
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn vertex_dof(&self, v: usize) -> usize {
        v
    }

    pub fn edge_moment_dof(&self, e: usize, j: usize) -> usize {
        self.n_vertices + e * self.per_edge() + j
    }

    pub fn normal_moment_dof(&self, e: usize, j: usize) -> usize {
        self.n_vertices + (self.n_edges + e) * self.per_edge() + j
    }

    pub fn interior_dof(&self, k: usize, j: usize) -> usize {
        self.n_vertices + 2 * self.n_edges * self.per_edge() + k * self.per_element() + j
    }

    pub fn local_to_global(&self, k: usize) -> &[usize] {
        &self.local_to_global[k]
    }

    /// `+1`, or `-1` for normal moments read from the minus side.
    pub fn local_signs(&self, k: usize) -> &[f64] {
        &self.local_signs[k]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    pub fn tag(&self, dof: usize) -> DofTag {
        let pe = self.per_edge();
        let nv = self.n_vertices;
        let ne = self.n_edges;
        let (kind, rel, block) = if dof < nv {
            (DofKind::VertexValue, dof, 1)
        } else if dof < nv + ne * pe {
            (DofKind::EdgeMoment, dof - nv, pe)
        } else if dof < nv + 2 * ne * pe {
            (DofKind::NormalMoment, dof - nv - ne * pe, pe)
        } else {
            (
                DofKind::InteriorMoment,
                dof - nv - 2 * ne * pe,
                self.per_element(),
            )
        };
        DofTag {
            kind,
            entity: rel / block,
            moment: rel % block,
        }
    }

    /// Tags of the local dofs of element `k`, in local order.
    pub fn local_tags(&self, k: usize) -> Vec<DofTag> {
        self.local_to_global[k]
            .iter()
            .map(|&g| self.tag(g))
            .collect()
    }

    /// Local dof vector `sign ⊙ v[l2g]` of element `k`.
    pub fn gather(&self, k: usize, global: &[f64]) -> Vec<f64> {
        self.local_to_global[k]
            .iter()
            .zip(&self.local_signs[k])
            .map(|(&g, s)| s * global[g])
            .collect()
    }
}
