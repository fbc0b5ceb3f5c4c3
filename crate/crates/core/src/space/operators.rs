use nalgebra::{DMatrix, DVector};

use super::layout::{interior_count, local_dof_count};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::poly::{
    edge_powers, element_quadrature, gram_matrix, legendre_coefficients, poly_dim, spd_condition,
    GaussLegendre, MonomialBasis, QuadratureRule,
};

const CONDITION_LIMIT: f64 = 1e14;

/// Local edge `i` of an element seen through the global edge
/// parametrisation `x(ξ) = mid + ξ (h/2) t_e`, `ξ ∈ [-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeFrame {
    pub edge: usize,
    pub mid: Point,
    pub length: f64,
    pub tangent: Point,
    /// Normal pointing out of this element.
    pub normal: Point,
    pub sign: f64,
    /// Local vertex indices at `ξ = -1` and `ξ = 1`.
    pub start: usize,
    pub end: usize,
}

impl EdgeFrame {
    pub fn new(mesh: &Mesh, element: usize, i: usize) -> Self {
        let el = &mesh.elements[element];
        let n = el.n_edges();
        let e = el.edges[i];
        let edge = &mesh.edges[e];
        let sign = el.edge_sign(i);
        let (start, end) = if el.is_plus[i] {
            (i, (i + 1) % n)
        } else {
            ((i + 1) % n, i)
        };
        EdgeFrame {
            edge: e,
            mid: mesh.edge_midpoint(e),
            length: edge.length,
            tangent: edge.tangent,
            normal: edge.normal * sign,
            sign,
            start,
            end,
        }
    }

    pub fn point(&self, xi: f64) -> Point {
        self.mid + self.tangent * (0.5 * self.length * xi)
    }
}

/// `Π^e_n` split into the part fixed by the normal-moment dofs and the
/// single-coefficient completion along `L_{ℓ-1}`. Both are `ℓ × N_dof` maps
/// into the `ξ`-power basis of `P_{ℓ-1}(e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeNormalProjection {
    pub moment: DMatrix<f64>,
    pub completion: DMatrix<f64>,
}

impl EdgeNormalProjection {
    pub fn full(&self) -> DMatrix<f64> {
        &self.moment + &self.completion
    }
}

/// Dense projection matrices of one element at order `ℓ`.
///
/// All maps act on local dof vectors (outward-normal convention for the
/// normal moments) and return monomial coefficients in `basis`; edge maps
/// return coefficients in powers of `ξ`.
#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub order: usize,
    pub n_dofs: usize,
    pub basis: MonomialBasis,
    pub frames: Vec<EdgeFrame>,
    /// Dofs of the monomials, `N_dof × dim P_ℓ`.
    pub d: DMatrix<f64>,
    /// `Π^K_0`, `dim P_ℓ × N_dof`.
    pub p0: DMatrix<f64>,
    /// `Π^K_1` components, `dim P_{ℓ-1} × N_dof` each.
    pub p1: [DMatrix<f64>; 2],
    /// `Π^K_2` components in the order `11, 12, 21, 22`.
    pub p2: [DMatrix<f64>; 4],
    /// `Π^e_0` per local edge, `(ℓ+1) × N_dof`.
    pub e0: Vec<DMatrix<f64>>,
    pub en: Vec<EdgeNormalProjection>,
    /// `(I - D Π_0)ᵀ (I - D Π_0)`.
    pub stab: DMatrix<f64>,
    /// `∫_K m_α m_β` over `P_ℓ`.
    pub mass: DMatrix<f64>,
    /// Element rule of exactness `3ℓ` and the monomials at its points
    /// (`n_q × dim P_ℓ`).
    pub quadrature: QuadratureRule,
    pub basis_values: DMatrix<f64>,
}

/// Gauss rule used on edges; exact for the products appearing in the
/// projection right-hand sides.
pub fn edge_rule(order: usize) -> GaussLegendre {
    GaussLegendre::for_degree(2 * order)
}

fn check_spd(g: &DMatrix<f64>, element: usize, what: &'static str) -> Result<DMatrix<f64>> {
    let condition = spd_condition(g);
    if condition > CONDITION_LIMIT {
        return Err(Error::SingularLocalSystem {
            element,
            what,
            condition,
        });
    }
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularLocalSystem {
            element,
            what,
            condition,
        })
}

impl ElementOperators {
    pub fn new(mesh: &Mesh, k: usize, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        let el = &mesh.elements[k];
        let n = el.n_edges();
        let l = order;
        let pe = l - 1;
        let n4 = interior_count(l);
        let nd = local_dof_count(n, l);
        let np = poly_dim(l as isize);
        let n1 = poly_dim(l as isize - 1);
        let n2 = poly_dim(l as isize - 2);
        let basis = MonomialBasis::new(el.centroid, el.diameter, l);
        let pts = mesh.element_points(k);
        let frames: Vec<EdgeFrame> = (0..n).map(|i| EdgeFrame::new(mesh, k, i)).collect();
        let gl = edge_rule(l);

        let quadrature = element_quadrature(mesh, k, 3 * l)?;
        let nq = quadrature.len();
        let mut basis_values = DMatrix::zeros(nq, np);
        let mut row = vec![0.0; np];
        for (q, x) in quadrature.points.iter().enumerate() {
            basis.eval_into(x, &mut row);
            for a in 0..np {
                basis_values[(q, a)] = row[a];
            }
        }
        let mass = gram_matrix(&basis, &quadrature);

        let edge_mom = |i: usize, j: usize| n + i * pe + j;
        let norm_mom = |i: usize, j: usize| n + n * pe + i * pe + j;
        let interior = |j: usize| n + 2 * n * pe + j;

        // dofs of the scaled monomials
        let mut d = DMatrix::zeros(nd, np);
        for (i, p) in pts.iter().enumerate() {
            d.row_mut(i).copy_from(&basis.eval(p).transpose());
        }
        for (i, f) in frames.iter().enumerate() {
            for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
                let x = f.point(*xi);
                let m = basis.eval(&x);
                let (gx, gy) = basis.eval_grad(&x);
                let dn = gx * f.normal.x + gy * f.normal.y;
                let xp = edge_powers(*xi, pe - 1);
                for j in 0..pe {
                    // (1/h)∫ m ξ^j ds = ½∫ m ξ^j dξ
                    let mut r = d.row_mut(edge_mom(i, j));
                    r += m.transpose() * (0.5 * w * xp[j]);
                    let mut r = d.row_mut(norm_mom(i, j));
                    r += dn.transpose() * (0.5 * f.length * w * xp[j]);
                }
            }
        }
        for j in 0..n4 {
            let r = mass.row(j) / el.area;
            d.row_mut(interior(j)).copy_from(&r);
        }

        // Π_0: boundary least squares with interior moments as constraints
        let nb = nd - n4;
        let b = d.rows(0, nb).into_owned();
        let c = d.rows(nb, n4).into_owned();
        let mut kkt = DMatrix::zeros(np + n4, np + n4);
        kkt.view_mut((0, 0), (np, np))
            .copy_from(&(b.transpose() * &b));
        kkt.view_mut((np, 0), (n4, np)).copy_from(&c);
        kkt.view_mut((0, np), (np, n4)).copy_from(&c.transpose());
        let mut kkt_rhs = DMatrix::zeros(np + n4, nd);
        kkt_rhs.view_mut((0, 0), (np, nb)).copy_from(&b.transpose());
        for j in 0..n4 {
            kkt_rhs[(np + j, nb + j)] = 1.0;
        }
        let sv = kkt.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if condition > CONDITION_LIMIT {
            return Err(Error::SingularLocalSystem {
                element: k,
                what: "value projection system",
                condition,
            });
        }
        let sol = kkt.lu().solve(&kkt_rhs).ok_or(Error::SingularLocalSystem {
            element: k,
            what: "value projection system",
            condition,
        })?;
        let p0 = sol.rows(0, np).into_owned();

        // Π^e_0: endpoint values and edge moments
        let mut interp = DMatrix::zeros(l + 1, l + 1);
        for kk in 0..=l {
            interp[(0, kk)] = if kk % 2 == 0 { 1.0 } else { -1.0 };
            interp[(1, kk)] = 1.0;
            for j in 0..pe {
                interp[(2 + j, kk)] = 0.5 * monomial_integral(kk + j);
            }
        }
        let interp_inv = interp.try_inverse().ok_or(Error::SingularLocalSystem {
            element: k,
            what: "edge value projection",
            condition: f64::INFINITY,
        })?;
        let e0: Vec<DMatrix<f64>> = frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut sel = DMatrix::zeros(l + 1, nd);
                sel[(0, f.start)] = 1.0;
                sel[(1, f.end)] = 1.0;
                for j in 0..pe {
                    sel[(2 + j, edge_mom(i, j))] = 1.0;
                }
                &interp_inv * sel
            })
            .collect();

        // Π^e_n: normal moments fix the P_{ℓ-2} part, L_{ℓ-1} takes the rest
        let leg = legendre_coefficients(pe);
        let leg_norm = 2.0 / (2 * pe + 1) as f64;
        let en: Vec<EdgeNormalProjection> = frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut g = DMatrix::zeros(pe, pe);
                for a in 0..pe {
                    for bb in 0..pe {
                        g[(a, bb)] = 0.5 * f.length * monomial_integral(a + bb);
                    }
                }
                let g_inv = g.try_inverse().expect("edge moment matrix is SPD");
                let mut moment = DMatrix::zeros(l, nd);
                for a in 0..pe {
                    for bb in 0..pe {
                        moment[(a, norm_mom(i, bb))] = g_inv[(a, bb)];
                    }
                }
                // c = ∫ L (∇Π_0 v · n) dξ / ∫ L²
                let mut c_row = DVector::zeros(np);
                for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
                    let (gx, gy) = basis.eval_grad(&f.point(*xi));
                    let lv = leg.dot(&edge_powers(*xi, pe));
                    c_row += (gx * f.normal.x + gy * f.normal.y) * (w * lv / leg_norm);
                }
                let c = c_row.transpose() * &p0;
                let completion = &leg * c;
                EdgeNormalProjection { moment, completion }
            })
            .collect();

        // Π_1
        let g1_inv = check_spd(
            &mass.view((0, 0), (n1, n1)).into_owned(),
            k,
            "gradient Gram matrix",
        )?;
        let lower1 = basis.with_degree(l - 1);
        let (dx1, dy1) = lower1.derivative_matrices();
        let m_21 = mass.view((0, 0), (n2, np)).into_owned();
        let mut p1 = [DMatrix::zeros(n1, nd), DMatrix::zeros(n1, nd)];
        for (comp, dmat) in [&dx1, &dy1].into_iter().enumerate() {
            let mut rhs = -(dmat.transpose() * &m_21) * &p0;
            for (i, f) in frames.iter().enumerate() {
                let ni = f.normal[comp];
                for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
                    let ws = 0.5 * f.length * w;
                    let m = lower1.eval(&f.point(*xi));
                    let trace = edge_powers(*xi, l).transpose() * &e0[i];
                    rhs += (m * (ws * ni)) * trace;
                }
            }
            p1[comp] = &g1_inv * rhs;
        }

        // Π_2, tested with m_β E_ij
        let g2_inv = check_spd(
            &mass.view((0, 0), (n2, n2)).into_owned(),
            k,
            "Hessian Gram matrix",
        )?;
        let moments: Vec<&DMatrix<f64>> = en.iter().map(|e| &e.moment).collect();
        let p2 = hessian_projection(&basis, &frames, &mass, &g2_inv, &p1, &e0, &moments);

        let mut resid = DMatrix::identity(nd, nd);
        resid -= &d * &p0;
        let stab = resid.transpose() * &resid;

        Ok(ElementOperators {
            order,
            n_dofs: nd,
            basis,
            frames,
            d,
            p0,
            p1,
            p2,
            e0,
            en,
            stab,
            mass,
            quadrature,
            basis_values,
        })
    }

    /// Tensor Gram matrix block `∫_K m_α m_β` over `P_{ℓ-2}`.
    pub fn hessian_gram(&self) -> DMatrix<f64> {
        let n2 = poly_dim(self.order as isize - 2);
        self.mass.view((0, 0), (n2, n2)).into_owned()
    }

    /// Values `Π_2 v` at the operator quadrature points, one `[h11, h12,
    /// h21, h22]` per point, for a local dof vector `v`.
    pub fn hessian_at_points(&self, v: &DVector<f64>) -> Vec<[f64; 4]> {
        let n2 = poly_dim(self.order as isize - 2);
        let coeffs: Vec<DVector<f64>> = self.p2.iter().map(|p| p * v).collect();
        let vals = self.basis_values.columns(0, n2);
        let h: Vec<DVector<f64>> = coeffs.iter().map(|c| vals * c).collect();
        (0..self.quadrature.len())
            .map(|q| [h[0][q], h[1][q], h[2][q], h[3][q]])
            .collect()
    }
}

/// Hessian projection tested with `m_β E_ij`:
/// `∫ Π_2 v : m_β E_ij = -∫ (Π_1 v)_i ∂_j m_β
///     + Σ_e ∫_e [Π^e_n v n_i n_j + ∂_t(Π^e_0 v) t_i n_j] m_β`.
/// `normal` holds the edge normal maps to use; only their moments against
/// `P_{ℓ-2}(e)` matter.
pub fn hessian_projection(
    basis: &MonomialBasis,
    frames: &[EdgeFrame],
    mass: &DMatrix<f64>,
    gram_inv: &DMatrix<f64>,
    p1: &[DMatrix<f64>; 2],
    e0: &[DMatrix<f64>],
    normal: &[&DMatrix<f64>],
) -> [DMatrix<f64>; 4] {
    let l = basis.degree;
    let nd = p1[0].ncols();
    let n1 = poly_dim(l as isize - 1);
    let n2 = poly_dim(l as isize - 2);
    let n3 = poly_dim(l as isize - 3);
    let gl = edge_rule(l);
    let lower2 = basis.with_degree(l - 2);
    let deriv2 = (l >= 3).then(|| lower2.derivative_matrices());
    let m_31 = mass.view((0, 0), (n3, n1)).into_owned();
    std::array::from_fn(|comp| {
        let (ci, cj) = (comp / 2, comp % 2);
        let mut rhs = DMatrix::zeros(n2, nd);
        if let Some((dx2, dy2)) = &deriv2 {
            let dj = if cj == 0 { dx2 } else { dy2 };
            rhs -= (dj.transpose() * &m_31) * &p1[ci];
        }
        for (i, f) in frames.iter().enumerate() {
            let nn = f.normal[ci] * f.normal[cj];
            let tn = f.tangent[ci] * f.normal[cj];
            for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
                let ws = 0.5 * f.length * w;
                let m = lower2.eval(&f.point(*xi));
                let dn = edge_powers(*xi, l - 1).transpose() * normal[i];
                let pw = edge_powers(*xi, l);
                let mut dpow = DVector::zeros(l + 1);
                for kk in 1..=l {
                    dpow[kk] = kk as f64 * pw[kk - 1] * 2.0 / f.length;
                }
                let dt = dpow.transpose() * &e0[i];
                rhs += (m * ws) * (dn * nn + dt * tn);
            }
        }
        gram_inv * rhs
    })
}

/// `∫_{-1}^{1} ξ^k dξ`.
fn monomial_integral(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 / (k + 1) as f64
    }
}
