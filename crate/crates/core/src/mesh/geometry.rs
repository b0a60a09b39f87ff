//! Reference elements and reference-to-physical element maps.
//!
//! Triangles live on the unit triangle `(0,0),(1,0),(0,1)`, quadrilaterals on
//! `[-1,1]^2`. Local edge `j` runs from local vertex `j` to vertex `j+1` in
//! counter-clockwise order and is parametrized by `t` in `[0,1]`.
//!
//! Straight elements use the affine (triangle) or bilinear (quad) map. Edges
//! tagged with a [`Circle`] are blended in with a transfinite correction that
//! vanishes on the other edges, so the curved boundary is represented exactly.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];
pub type Jacobian = [[f64; 2]; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn det(j: &Jacobian) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Inverse transpose of a 2x2 Jacobian, used to push reference gradients forward.
#[inline]
pub fn inv_transpose(j: &Jacobian) -> Jacobian {
    let d = det(j);
    [[j[1][1] / d, -j[1][0] / d], [-j[0][1] / d, j[0][0] / d]]
}

#[inline]
pub fn mat_vec(m: &Jacobian, v: Point) -> Point {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Tri,
    Quad,
}

impl Shape {
    pub fn n_vertices(self) -> usize {
        match self {
            Shape::Tri => 3,
            Shape::Quad => 4,
        }
    }

    pub fn reference_measure(self) -> f64 {
        match self {
            Shape::Tri => 0.5,
            Shape::Quad => 4.0,
        }
    }

    pub fn reference_vertices(self) -> &'static [Point] {
        match self {
            Shape::Tri => &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            Shape::Quad => &[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        }
    }

    /// Reference coordinates of the point at parameter `t` on local edge `edge`.
    pub fn edge_point(self, edge: usize, t: f64) -> Point {
        let v = self.reference_vertices();
        let a = v[edge];
        let b = v[(edge + 1) % v.len()];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Derivative of [`Shape::edge_point`] with respect to `t`.
    pub fn edge_tangent(self, edge: usize) -> Point {
        let v = self.reference_vertices();
        sub(v[(edge + 1) % v.len()], v[edge])
    }

    pub fn contains_reference(self, p: Point, tol: f64) -> bool {
        match self {
            Shape::Tri => p[0] >= -tol && p[1] >= -tol && p[0] + p[1] <= 1.0 + tol,
            Shape::Quad => p[0].abs() <= 1.0 + tol && p[1].abs() <= 1.0 + tol,
        }
    }
}

/// A circle an element edge is bent onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn project(&self, p: Point) -> Point {
        let d = sub(p, self.center);
        let r = norm(d);
        [
            self.center[0] + self.radius * d[0] / r,
            self.center[1] + self.radius * d[1] / r,
        ]
    }
}

/// Arc between two points, parametrized by polar angle linear in `t`.
/// The radius is interpolated between the endpoint radii so the arc
/// passes through both endpoints exactly.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ArcEdge {
    center: Point,
    r0: f64,
    r1: f64,
    phi0: f64,
    dphi: f64,
}

impl ArcEdge {
    pub(crate) fn new(circle: &Circle, a: Point, b: Point) -> Self {
        let da = sub(a, circle.center);
        let db = sub(b, circle.center);
        let phi0 = da[1].atan2(da[0]);
        let mut dphi = db[1].atan2(db[0]) - phi0;
        if dphi > std::f64::consts::PI {
            dphi -= 2.0 * std::f64::consts::PI;
        } else if dphi <= -std::f64::consts::PI {
            dphi += 2.0 * std::f64::consts::PI;
        }
        ArcEdge {
            center: circle.center,
            r0: norm(da),
            r1: norm(db),
            phi0,
            dphi,
        }
    }

    pub(crate) fn eval(&self, t: f64) -> (Point, Point) {
        let phi = self.phi0 + t * self.dphi;
        let r = self.r0 + t * (self.r1 - self.r0);
        let (s, c) = phi.sin_cos();
        let x = [self.center[0] + r * c, self.center[1] + r * s];
        let dr = self.r1 - self.r0;
        let dx = [dr * c - r * s * self.dphi, dr * s + r * c * self.dphi];
        (x, dx)
    }
}

/// Reference-to-physical map of one element.
#[derive(Clone, Debug)]
pub struct ElementMap {
    shape: Shape,
    vertices: [Point; 4],
    arcs: [Option<ArcEdge>; 4],
}

impl ElementMap {
    pub fn new(shape: Shape, vertices: &[Point], arcs: &[Option<Circle>]) -> Self {
        let n = shape.n_vertices();
        let mut v = [[0.0; 2]; 4];
        v[..n].copy_from_slice(&vertices[..n]);
        let mut a = [None; 4];
        for (j, c) in arcs.iter().enumerate().take(n) {
            if let Some(c) = c {
                a[j] = Some(ArcEdge::new(c, v[j], v[(j + 1) % n]));
            }
        }
        ElementMap {
            shape,
            vertices: v,
            arcs: a,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn is_curved(&self) -> bool {
        self.arcs.iter().any(Option::is_some)
    }

    /// Whether the map is affine, i.e. the Jacobian is constant.
    pub fn is_affine(&self) -> bool {
        if self.is_curved() {
            return false;
        }
        match self.shape {
            Shape::Tri => true,
            Shape::Quad => {
                let v = &self.vertices;
                let d = sub(sub(v[2], v[1]), sub(v[3], v[0]));
                norm(d) <= 1e-14 * norm(sub(v[2], v[0]))
            }
        }
    }

    /// Physical point and Jacobian `d x / d xi` at reference point `xi`.
    pub fn map(&self, xi: Point) -> (Point, Jacobian) {
        match self.shape {
            Shape::Tri => self.map_tri(xi),
            Shape::Quad => self.map_quad(xi),
        }
    }

    fn map_tri(&self, xi: Point) -> (Point, Jacobian) {
        let v = &self.vertices;
        let lam = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
        // d lambda_i / d (xi, eta)
        const DLAM: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for i in 0..3 {
            for d in 0..2 {
                x[d] += lam[i] * v[i][d];
                jac[d][0] += DLAM[i][0] * v[i][d];
                jac[d][1] += DLAM[i][1] * v[i][d];
            }
        }
        // Smooth blending: lambda_a lambda_b g(t) with t = (1 + lambda_b - lambda_a)/2
        // and g = corr / (t (1 - t)), which reproduces the arc on edge (a, b)
        // and vanishes on the other two edges.
        for j in 0..3 {
            let Some(arc) = &self.arcs[j] else { continue };
            let (a, b) = (j, (j + 1) % 3);
            let t = (0.5 * (1.0 + lam[b] - lam[a])).clamp(1e-6, 1.0 - 1e-6);
            let (c, dc) = arc.eval(t);
            let corr = [
                c[0] - ((1.0 - t) * v[a][0] + t * v[b][0]),
                c[1] - ((1.0 - t) * v[a][1] + t * v[b][1]),
            ];
            let dcorr = [dc[0] - (v[b][0] - v[a][0]), dc[1] - (v[b][1] - v[a][1])];
            let q = t * (1.0 - t);
            let dq = 1.0 - 2.0 * t;
            let g = [corr[0] / q, corr[1] / q];
            let dg = [
                (dcorr[0] * q - corr[0] * dq) / (q * q),
                (dcorr[1] * q - corr[1] * dq) / (q * q),
            ];
            let w = lam[a] * lam[b];
            for k in 0..2 {
                let dw = DLAM[a][k] * lam[b] + lam[a] * DLAM[b][k];
                let dt = 0.5 * (DLAM[b][k] - DLAM[a][k]);
                for d in 0..2 {
                    jac[d][k] += dw * g[d] + w * dg[d] * dt;
                }
            }
            for d in 0..2 {
                x[d] += w * g[d];
            }
        }
        (x, jac)
    }

    fn map_quad(&self, xi: Point) -> (Point, Jacobian) {
        let v = &self.vertices;
        let (r, s) = (xi[0], xi[1]);
        let n = [
            0.25 * (1.0 - r) * (1.0 - s),
            0.25 * (1.0 + r) * (1.0 - s),
            0.25 * (1.0 + r) * (1.0 + s),
            0.25 * (1.0 - r) * (1.0 + s),
        ];
        let dn = [
            [-0.25 * (1.0 - s), -0.25 * (1.0 - r)],
            [0.25 * (1.0 - s), -0.25 * (1.0 + r)],
            [0.25 * (1.0 + s), 0.25 * (1.0 + r)],
            [-0.25 * (1.0 + s), 0.25 * (1.0 - r)],
        ];
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for i in 0..4 {
            for d in 0..2 {
                x[d] += n[i] * v[i][d];
                jac[d][0] += dn[i][0] * v[i][d];
                jac[d][1] += dn[i][1] * v[i][d];
            }
        }
        for j in 0..4 {
            let Some(arc) = &self.arcs[j] else { continue };
            // (edge parameter t, blend weight) and their derivatives in (r, s)
            let (t, dt, w, dw) = match j {
                0 => ((1.0 + r) / 2.0, [0.5, 0.0], (1.0 - s) / 2.0, [0.0, -0.5]),
                1 => ((1.0 + s) / 2.0, [0.0, 0.5], (1.0 + r) / 2.0, [0.5, 0.0]),
                2 => ((1.0 - r) / 2.0, [-0.5, 0.0], (1.0 + s) / 2.0, [0.0, 0.5]),
                _ => ((1.0 - s) / 2.0, [0.0, -0.5], (1.0 - r) / 2.0, [-0.5, 0.0]),
            };
            let (a, b) = (v[j], v[(j + 1) % 4]);
            let (c, dc) = arc.eval(t);
            let corr = [
                c[0] - ((1.0 - t) * a[0] + t * b[0]),
                c[1] - ((1.0 - t) * a[1] + t * b[1]),
            ];
            let dcorr = [dc[0] - (b[0] - a[0]), dc[1] - (b[1] - a[1])];
            for d in 0..2 {
                x[d] += w * corr[d];
                for k in 0..2 {
                    jac[d][k] += dw[k] * corr[d] + w * dcorr[d] * dt[k];
                }
            }
        }
        (x, jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(m: &ElementMap, xi: Point) -> Jacobian {
        let h = 1e-6;
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut p = xi;
            let mut q = xi;
            p[k] += h;
            q[k] -= h;
            let (xp, _) = m.map(p);
            let (xq, _) = m.map(q);
            for d in 0..2 {
                j[d][k] = (xp[d] - xq[d]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn curved_quad_jacobian_matches_finite_differences() {
        let c = Circle {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        let a = 0.3f64;
        let verts = [
            [0.5 * a.cos(), 0.5 * a.sin()],
            [1.0, 0.4],
            [0.9, 0.8],
            [0.5 * (a + 0.4).cos(), 0.5 * (a + 0.4).sin()],
        ];
        // edge 3 runs from vertex 3 to vertex 0, along the circle
        let m = ElementMap::new(Shape::Quad, &verts, &[None, None, None, Some(c)]);
        for xi in [[0.1, -0.3], [-0.7, 0.2], [0.5, 0.5]] {
            let (_, j) = m.map(xi);
            let f = fd_jacobian(&m, xi);
            for d in 0..2 {
                for k in 0..2 {
                    assert!((j[d][k] - f[d][k]).abs() < 1e-8);
                }
            }
        }
        for t in [0.0, 0.25, 0.5, 1.0] {
            let (x, _) = m.map(Shape::Quad.edge_point(3, t));
            assert!((norm(x) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn curved_tri_jacobian_matches_finite_differences() {
        let c = Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let verts = [[1.0, 0.0], [0.0, 1.0], [0.2, 0.1]];
        let m = ElementMap::new(Shape::Tri, &verts, &[Some(c), None, None]);
        for xi in [[0.2, 0.3], [0.6, 0.1], [0.1, 0.1]] {
            let (_, j) = m.map(xi);
            let f = fd_jacobian(&m, xi);
            for d in 0..2 {
                for k in 0..2 {
                    assert!((j[d][k] - f[d][k]).abs() < 1e-8);
                }
            }
        }
        for t in [0.1, 0.5, 0.9] {
            let (x, _) = m.map(Shape::Tri.edge_point(0, t));
            assert!((norm(x) - 1.0).abs() < 1e-14);
        }
        // straight edges stay straight
        let (x, _) = m.map(Shape::Tri.edge_point(1, 0.5));
        assert!((x[0] - 0.1).abs() < 1e-14 && (x[1] - 0.55).abs() < 1e-14);
    }
}
