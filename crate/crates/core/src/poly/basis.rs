use nalgebra::{DMatrix, DVector};

use crate::mesh::Point;

/// Dimension of `P_d` in two variables; zero for negative degree.
pub fn poly_dim(degree: isize) -> usize {
    if degree < 0 {
        0
    } else {
        let d = degree as usize;
        (d + 1) * (d + 2) / 2
    }
}

/// Position of `x^a y^b` in the basis ordering (total degree, then
/// decreasing power of `x`).
pub fn monomial_index(a: usize, b: usize) -> usize {
    let t = a + b;
    t * (t + 1) / 2 + b
}

/// Exponents `(a, b)` of the `i`-th monomial.
pub fn monomial_exponents(i: usize) -> (usize, usize) {
    let mut t = 0;
    while (t + 1) * (t + 2) / 2 <= i {
        t += 1;
    }
    let b = i - t * (t + 1) / 2;
    (t - b, b)
}

/// Scaled monomials `m_α(x) = ((x - x_K)/h_K)^α`, `|α| <= degree`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialBasis {
    pub center: Point,
    pub scale: f64,
    pub degree: usize,
}

impl MonomialBasis {
    pub fn new(center: Point, scale: f64, degree: usize) -> Self {
        MonomialBasis {
            center,
            scale,
            degree,
        }
    }

    pub fn dim(&self) -> usize {
        poly_dim(self.degree as isize)
    }

    /// Same center and scale, different degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        MonomialBasis { degree, ..*self }
    }

    fn local(&self, x: &Point) -> (f64, f64) {
        (
            (x.x - self.center.x) / self.scale,
            (x.y - self.center.y) / self.scale,
        )
    }

    pub fn eval_into(&self, x: &Point, out: &mut [f64]) {
        let (s, t) = self.local(x);
        let d = self.degree;
        let mut ps = [1.0; 16];
        let mut pt = [1.0; 16];
        for i in 1..=d {
            ps[i] = ps[i - 1] * s;
            pt[i] = pt[i - 1] * t;
        }
        let mut k = 0;
        for tot in 0..=d {
            for b in 0..=tot {
                out[k] = ps[tot - b] * pt[b];
                k += 1;
            }
        }
    }

    pub fn eval(&self, x: &Point) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        self.eval_into(x, v.as_mut_slice());
        v
    }

    /// Values of `∂_x m_α` and `∂_y m_α`.
    pub fn eval_grad(&self, x: &Point) -> (DVector<f64>, DVector<f64>) {
        let n = self.dim();
        let (s, t) = self.local(x);
        let pow = |v: f64, k: usize| v.powi(k as i32);
        let mut gx = DVector::zeros(n);
        let mut gy = DVector::zeros(n);
        for i in 0..n {
            let (a, b) = monomial_exponents(i);
            if a > 0 {
                gx[i] = a as f64 * pow(s, a - 1) * pow(t, b) / self.scale;
            }
            if b > 0 {
                gy[i] = b as f64 * pow(s, a) * pow(t, b - 1) / self.scale;
            }
        }
        (gx, gy)
    }

    pub fn evaluate(&self, coeffs: &[f64], x: &Point) -> f64 {
        let mut v = [0.0; 64];
        let n = self.dim();
        self.eval_into(x, &mut v[..n]);
        coeffs.iter().zip(&v[..n]).map(|(c, m)| c * m).sum()
    }

    /// Matrices `(D_x, D_y)` of size `dim P_{ℓ-1} × dim P_ℓ` mapping
    /// coefficients of `p` to coefficients of `∂_x p` and `∂_y p`.
    pub fn derivative_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        assert!(self.degree >= 1);
        let n = self.dim();
        let m = poly_dim(self.degree as isize - 1);
        let mut dx = DMatrix::zeros(m, n);
        let mut dy = DMatrix::zeros(m, n);
        for i in 0..n {
            let (a, b) = monomial_exponents(i);
            if a > 0 {
                dx[(monomial_index(a - 1, b), i)] = a as f64 / self.scale;
            }
            if b > 0 {
                dy[(monomial_index(a, b - 1), i)] = b as f64 / self.scale;
            }
        }
        (dx, dy)
    }

    /// Gradient coefficient matrices padded to the full `P_ℓ` output space
    /// (`dim P_ℓ × dim P_ℓ`), convenient for chaining.
    pub fn derivative_matrices_square(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (dx, dy) = self.derivative_matrices();
        let n = self.dim();
        let mut sx = DMatrix::zeros(n, n);
        let mut sy = DMatrix::zeros(n, n);
        sx.view_mut((0, 0), (dx.nrows(), n)).copy_from(&dx);
        sy.view_mut((0, 0), (dy.nrows(), n)).copy_from(&dy);
        (sx, sy)
    }
}

/// Powers `ξ^0 .. ξ^degree` of the edge coordinate `ξ ∈ [-1, 1]`.
pub fn edge_powers(xi: f64, degree: usize) -> DVector<f64> {
    let mut v = DVector::zeros(degree + 1);
    v[0] = 1.0;
    for j in 1..=degree {
        v[j] = v[j - 1] * xi;
    }
    v
}

/// Legendre polynomial coefficients `L_n(ξ) = Σ c_j ξ^j`.
pub fn legendre_coefficients(n: usize) -> DVector<f64> {
    let mut prev = DVector::zeros(n + 1);
    prev[0] = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = DVector::zeros(n + 1);
    cur[1] = 1.0;
    for k in 1..n {
        // (k+1) L_{k+1} = (2k+1) ξ L_k - k L_{k-1}
        let mut next = DVector::zeros(n + 1);
        for j in 0..n {
            next[j + 1] += (2 * k + 1) as f64 * cur[j];
        }
        next -= &prev * k as f64;
        next /= (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}
