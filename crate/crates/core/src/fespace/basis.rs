//! Polynomial bases on the reference elements.
//!
//! The modal basis used by the solver is orthonormal in `L2` of the
//! reference element:
//! * quadrilaterals: tensor products `p_i(xi) p_j(eta)` of orthonormal
//!   Legendre polynomials, `0 <= i, j <= k`, index `j (k+1) + i`;
//! * triangles: monomials `(xi-1/3)^a (eta-1/3)^b` ordered by total degree
//!   `a+b` and then by `b`, orthonormalized by a Cholesky factor of their
//!   reference Gram matrix.
//!
//! The nodal (Lagrange) basis interpolates at the equispaced lattice of
//! the reference element, ordered row by row from the `xi` axis.
//!
//! Face spaces use `p_m(s)`, `0 <= m <= k`, on `[-1,1]`.

use nalgebra::{DMatrix, DVector};

use super::quadrature::{self, legendre};
use crate::error::{Error, Result};
use crate::mesh::{Point, Shape};

pub const MAX_DEGREE: usize = 8;

/// Values `values[q][i]` and reference gradients `grads[q][i]` of basis
/// function `i` at point `q`.
#[derive(Clone, Debug)]
pub struct BasisEval {
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<Point>>,
}

impl BasisEval {
    pub fn n_basis(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

pub fn dim(shape: Shape, k: usize) -> usize {
    match shape {
        Shape::Tri => (k + 1) * (k + 2) / 2,
        Shape::Quad => (k + 1) * (k + 1),
    }
}

fn check_degree(k: usize) -> Result<()> {
    if k > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "polynomial degree {k} not supported (maximum {MAX_DEGREE})"
        )));
    }
    Ok(())
}

/// Orthonormal Legendre polynomial `sqrt((2m+1)/2) P_m` and its derivative.
pub fn legendre_orthonormal(m: usize, x: f64) -> (f64, f64) {
    let (p, dp) = legendre(m, x);
    let c = ((2 * m + 1) as f64 / 2.0).sqrt();
    (c * p, c * dp)
}

/// Face basis values `p_0(s) .. p_k(s)`.
pub fn face_basis(k: usize, s: f64) -> Vec<f64> {
    (0..=k).map(|m| legendre_orthonormal(m, s).0).collect()
}

fn tri_exponents(k: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::with_capacity(dim(Shape::Tri, k));
    for d in 0..=k {
        for b in 0..=d {
            e.push((d - b, b));
        }
    }
    e
}

fn monomials(k: usize, p: Point) -> (Vec<f64>, Vec<Point>) {
    let (x, y) = (p[0] - 1.0 / 3.0, p[1] - 1.0 / 3.0);
    let pw = |v: f64, n: usize| if n == 0 { 1.0 } else { v.powi(n as i32) };
    let mut vals = Vec::new();
    let mut grads = Vec::new();
    for (a, b) in tri_exponents(k) {
        vals.push(pw(x, a) * pw(y, b));
        let dx = if a == 0 { 0.0 } else { a as f64 * pw(x, a - 1) * pw(y, b) };
        let dy = if b == 0 { 0.0 } else { b as f64 * pw(x, a) * pw(y, b - 1) };
        grads.push([dx, dy]);
    }
    (vals, grads)
}

/// Coefficients `C` such that `phi_j = sum_i C[(i, j)] m_i` is orthonormal.
fn tri_coefficients(k: usize) -> DMatrix<f64> {
    let n = dim(Shape::Tri, k);
    let rule = quadrature::element_rule(Shape::Tri, 2 * k).expect("degree checked");
    let mut gram = DMatrix::zeros(n, n);
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let (m, _) = monomials(k, *p);
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] += w * m[i] * m[j];
            }
        }
    }
    // G = L L^T, phi = L^{-1} m  =>  C = L^{-T}
    let l = gram.cholesky().expect("monomial Gram matrix is SPD").l();
    l.try_inverse().expect("triangular factor invertible").transpose()
}

fn eval_modal_at(shape: Shape, k: usize, coeff: Option<&DMatrix<f64>>, p: Point) -> (Vec<f64>, Vec<Point>) {
    match shape {
        Shape::Quad => {
            let px: Vec<(f64, f64)> = (0..=k).map(|i| legendre_orthonormal(i, p[0])).collect();
            let py: Vec<(f64, f64)> = (0..=k).map(|j| legendre_orthonormal(j, p[1])).collect();
            let mut vals = Vec::with_capacity((k + 1) * (k + 1));
            let mut grads = Vec::with_capacity((k + 1) * (k + 1));
            for (vy, dy) in &py {
                for (vx, dx) in &px {
                    vals.push(vx * vy);
                    grads.push([dx * vy, vx * dy]);
                }
            }
            (vals, grads)
        }
        Shape::Tri => {
            let c = coeff.expect("triangle coefficients");
            let (m, dm) = monomials(k, p);
            let n = m.len();
            let mut vals = vec![0.0; n];
            let mut grads = vec![[0.0; 2]; n];
            for j in 0..n {
                for i in 0..=j {
                    let cij = c[(i, j)];
                    vals[j] += cij * m[i];
                    grads[j][0] += cij * dm[i][0];
                    grads[j][1] += cij * dm[i][1];
                }
            }
            (vals, grads)
        }
    }
}

/// Orthonormal modal basis at reference points.
pub fn eval_basis(shape: Shape, k: usize, points: &[Point]) -> Result<BasisEval> {
    check_degree(k)?;
    let coeff = (shape == Shape::Tri).then(|| tri_coefficients(k));
    let mut values = Vec::with_capacity(points.len());
    let mut grads = Vec::with_capacity(points.len());
    for &p in points {
        let (v, g) = eval_modal_at(shape, k, coeff.as_ref(), p);
        values.push(v);
        grads.push(g);
    }
    Ok(BasisEval { values, grads })
}

/// Equispaced interpolation nodes of degree `k`.
pub fn lattice_nodes(shape: Shape, k: usize) -> Vec<Point> {
    let mut nodes = Vec::new();
    if k == 0 {
        return match shape {
            Shape::Tri => vec![[1.0 / 3.0, 1.0 / 3.0]],
            Shape::Quad => vec![[0.0, 0.0]],
        };
    }
    let kf = k as f64;
    match shape {
        Shape::Tri => {
            for j in 0..=k {
                for i in 0..=k - j {
                    nodes.push([i as f64 / kf, j as f64 / kf]);
                }
            }
        }
        Shape::Quad => {
            for j in 0..=k {
                for i in 0..=k {
                    nodes.push([-1.0 + 2.0 * i as f64 / kf, -1.0 + 2.0 * j as f64 / kf]);
                }
            }
        }
    }
    nodes
}

/// Lagrange basis interpolating at [`lattice_nodes`].
pub fn eval_nodal_basis(shape: Shape, k: usize, points: &[Point]) -> Result<BasisEval> {
    check_degree(k)?;
    let nodes = lattice_nodes(shape, k);
    let modal_nodes = eval_basis(shape, k, &nodes)?;
    let n = nodes.len();
    let v = DMatrix::from_fn(n, n, |p, i| modal_nodes.values[p][i]);
    let c = v
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular interpolation matrix".into()))?;
    let modal = eval_basis(shape, k, points)?;
    let mut values = Vec::with_capacity(points.len());
    let mut grads = Vec::with_capacity(points.len());
    for q in 0..points.len() {
        let m = DVector::from_row_slice(&modal.values[q]);
        let gx = DVector::from_iterator(n, modal.grads[q].iter().map(|g| g[0]));
        let gy = DVector::from_iterator(n, modal.grads[q].iter().map(|g| g[1]));
        let (lv, lx, ly) = (c.tr_mul(&m), c.tr_mul(&gx), c.tr_mul(&gy));
        values.push(lv.iter().copied().collect());
        grads.push((0..n).map(|j| [lx[j], ly[j]]).collect());
    }
    Ok(BasisEval { values, grads })
}
