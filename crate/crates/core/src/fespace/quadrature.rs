//! Gauss rules on the reference segment `[-1,1]`, the unit triangle and `[-1,1]^2`.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules; all weights are positive and all points interior. Rules exist for
//! exactness up to [`MAX_EXACTNESS`].

use crate::error::{Error, Result};
use crate::mesh::{Point, Shape};

pub const MAX_EXACTNESS: usize = 61;

#[derive(Clone, Debug)]
pub struct Rule1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Rule2D {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Rule2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint value P_n'(±1) = (±1)^(n+1) n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule on `[-1,1]`, exact to degree `2n-1`.
pub fn gauss_legendre(n: usize) -> Rule1D {
    assert!(n > 0);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Rule1D { points, weights }
}

fn check(exactness: usize) -> Result<()> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::Capability(format!(
            "quadrature exactness {exactness} exceeds supported maximum {MAX_EXACTNESS}"
        )));
    }
    Ok(())
}

/// Rule on `[-1,1]` exact for polynomials of degree `exactness`.
pub fn segment_rule(exactness: usize) -> Result<Rule1D> {
    check(exactness)?;
    Ok(gauss_legendre(exactness / 2 + 1))
}

/// Rule on the reference element exact for polynomials of total degree
/// `exactness` (triangle) or degree `exactness` in each variable (quad).
pub fn element_rule(shape: Shape, exactness: usize) -> Result<Rule2D> {
    check(exactness)?;
    match shape {
        Shape::Quad => {
            let g = gauss_legendre(exactness / 2 + 1);
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (j, &y) in g.points.iter().enumerate() {
                for (i, &x) in g.points.iter().enumerate() {
                    points.push([x, y]);
                    weights.push(g.weights[i] * g.weights[j]);
                }
            }
            Ok(Rule2D { points, weights })
        }
        Shape::Tri => {
            // (u, v) in [0,1]^2 -> (u (1 - v), v), Jacobian (1 - v)
            let g = gauss_legendre((exactness + 2).div_ceil(2));
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (j, &sv) in g.points.iter().enumerate() {
                let v = 0.5 * (1.0 + sv);
                for (i, &su) in g.points.iter().enumerate() {
                    let u = 0.5 * (1.0 + su);
                    points.push([u * (1.0 - v), v]);
                    weights.push(0.25 * g.weights[i] * g.weights[j] * (1.0 - v));
                }
            }
            Ok(Rule2D { points, weights })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn reference_moments() {
        let t = element_rule(Shape::Tri, 2).unwrap();
        let x2: f64 = t.points.iter().zip(&t.weights).map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((x2 - 1.0 / 12.0).abs() < 1e-14);
        let q = element_rule(Shape::Quad, 0).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        let s = segment_rule(4).unwrap();
        let x4: f64 = s.points.iter().zip(&s.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((x4 - 0.4).abs() < 1e-14);
    }

    #[test]
    fn triangle_rule_is_exact_up_to_its_degree() {
        // int_T x^a y^b = a! b! / (a + b + 2)!
        for p in [1usize, 4, 9, 14, 20] {
            let r = element_rule(Shape::Tri, p).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=p {
                for b in 0..=p - a {
                    let num: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(q, w)| w * q[0].powi(a as i32) * q[1].powi(b as i32))
                        .sum();
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((num - exact).abs() < 1e-14, "p={p} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn segment_rule_exactness() {
        for p in 0..30 {
            let r = segment_rule(p).unwrap();
            let num: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((num - exact).abs() < 1e-13, "{p}");
        }
    }

    #[test]
    fn too_high_exactness_is_a_capability_error() {
        assert!(matches!(
            element_rule(Shape::Tri, MAX_EXACTNESS + 1),
            Err(Error::Capability(_))
        ));
        assert!(segment_rule(14).is_ok());
    }
}
