//! Element matrices against an independent quadrature, and static
//! condensation against explicit dense inversion.

mod common;

use std::sync::Arc;

use common::rng;
use hipdg::assembly::{condense, LocalBlocks};
use hipdg::fespace::quadrature::gauss_legendre;
use hipdg::fespace::{eval_basis, face_basis};
use hipdg::mesh::{classify_boundary, ElementSpec};
use hipdg::{Assembler, EllipticScheme, FeSpace, Mesh, ProblemSpec, Region, Scheme, Shape, StabilizationConfig};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Rule on the unit triangle collapsed onto vertex `(0,0)`, exact well
/// beyond degree 20 and sharing no points with the library's rules.
fn oracle_triangle_rule() -> Vec<([f64; 2], f64)> {
    let g = gauss_legendre(13);
    let mut out = Vec::new();
    for (&a, &wa) in g.points.iter().zip(&g.weights) {
        let r = 0.5 * (1.0 + a);
        for (&b, &wb) in g.points.iter().zip(&g.weights) {
            let s = 0.5 * (1.0 + b);
            out.push(([r * (1.0 - s), r * s], 0.25 * wa * wb * r));
        }
    }
    out
}

#[test]
fn oracle_rule_integrates_monomials() {
    let rule = oracle_triangle_rule();
    // int x^a y^b over the unit triangle = a! b! / (a+b+2)!
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    for a in 0..=10u32 {
        for b in 0..=(20 - a).min(10) {
            let exact = fact(a) * fact(b) / fact(a + b + 2);
            let q: f64 = rule.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
            assert!((q - exact).abs() <= 1e-14 * exact.max(1e-3), "{a} {b}");
        }
    }
}

fn single_triangle(problem: &ProblemSpec) -> Mesh {
    let m = Mesh::new(
        vec![[0.1, 0.2], [0.9, 0.3], [0.3, 0.8]],
        vec![ElementSpec {
            shape: Shape::Tri,
            vertices: vec![0, 1, 2],
            region: Region::Elliptic,
        }],
        &[],
    )
    .unwrap();
    classify_boundary(&m, problem).unwrap()
}

fn oracle_blocks(mesh: &Mesh, asm: &Assembler, k: usize, eps: f64, f: impl Fn([f64; 2]) -> f64) -> LocalBlocks {
    let el = &mesh.elements[0];
    let v: Vec<[f64; 2]> = el.vertices.iter().map(|&i| mesh.vertices[i]).collect();
    let jac = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    // inverse transpose
    let jit = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
    let phys = |r: [f64; 2]| [v[0][0] + jac[0][0] * r[0] + jac[0][1] * r[1], v[0][1] + jac[1][0] * r[0] + jac[1][1] * r[1]];
    let grad = |g: [f64; 2]| [jit[0][0] * g[0] + jit[0][1] * g[1], jit[1][0] * g[0] + jit[1][1] * g[1]];
    let nu = (k + 1) * (k + 2) / 2;
    let k1 = k + 1;
    let nt = 3 * k1;
    let mut b = LocalBlocks {
        a_uu: DMatrix::zeros(nu, nu),
        a_ut: DMatrix::zeros(nu, nt),
        a_tu: DMatrix::zeros(nt, nu),
        a_tt: DMatrix::zeros(nt, nt),
        f_u: DVector::zeros(nu),
        f_t: DVector::zeros(nt),
    };
    let rule = oracle_triangle_rule();
    let pts: Vec<[f64; 2]> = rule.iter().map(|r| r.0).collect();
    let be = eval_basis(Shape::Tri, k, &pts).unwrap();
    for (q, (p, w)) in rule.iter().enumerate() {
        let w = w * det;
        for i in 0..nu {
            let gi = grad(be.grads[q][i]);
            b.f_u[i] += w * f(phys(*p)) * be.values[q][i];
            for j in 0..nu {
                let gj = grad(be.grads[q][j]);
                b.a_uu[(i, j)] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
            }
        }
    }
    let g = gauss_legendre(12);
    for l in 0..3 {
        let f_id = el.faces[l];
        let aligned = mesh.faces[f_id].sides[0].aligned;
        let (a, c) = (v[l], v[(l + 1) % 3]);
        let len = ((c[0] - a[0]).powi(2) + (c[1] - a[1]).powi(2)).sqrt();
        let n = [(c[1] - a[1]) / len, -(c[0] - a[0]) / len];
        let (tau, _) = asm.side_penalties(0, l).unwrap();
        assert!(tau.iter().all(|&t| (t - tau[0]).abs() <= 1e-12 * tau[0]));
        let tau = tau[0];
        let refs: Vec<[f64; 2]> = g
            .points
            .iter()
            .map(|&s| {
                let t = if aligned { 0.5 * (1.0 + s) } else { 0.5 * (1.0 - s) };
                Shape::Tri.edge_point(l, t)
            })
            .collect();
        let bf = eval_basis(Shape::Tri, k, &refs).unwrap();
        for q in 0..g.points.len() {
            let w = 0.5 * g.weights[q] * len;
            let psi = face_basis(k, g.points[q]);
            let phi = &bf.values[q];
            let dn: Vec<f64> = (0..nu)
                .map(|i| {
                    let gi = grad(bf.grads[q][i]);
                    gi[0] * n[0] + gi[1] * n[1]
                })
                .collect();
            for i in 0..nu {
                for j in 0..nu {
                    b.a_uu[(i, j)] += w * (-dn[j] * phi[i] - eps * dn[i] * phi[j] + tau * phi[i] * phi[j]);
                }
                for m in 0..k1 {
                    b.a_ut[(i, l * k1 + m)] += w * (eps * dn[i] - tau * phi[i]) * psi[m];
                    b.a_tu[(l * k1 + m, i)] += w * (dn[i] - tau * phi[i]) * psi[m];
                }
            }
            for m in 0..k1 {
                for j in 0..k1 {
                    b.a_tt[(l * k1 + m, l * k1 + j)] += w * tau * psi[m] * psi[j];
                }
            }
        }
    }
    b
}

#[test]
fn element_blocks_match_independent_quadrature() {
    let mut problem = ProblemSpec::constant("d", [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], 0.0);
    let f = |x: [f64; 2]| 1.0 + x[0] - 2.0 * x[1] * x[1] + x[0] * x[1];
    problem.source = Arc::new(move |x, _| f(x));
    let mesh = single_triangle(&problem);
    for k in [1, 2, 3] {
        let space = FeSpace::new(&mesh, k, 0).unwrap();
        for scheme in [Scheme::Nip, Scheme::Iip, Scheme::Sip] {
            let cfg = StabilizationConfig::new(scheme, EllipticScheme::Additive);
            let asm = Assembler::new(&mesh, &space, &problem, &cfg).unwrap();
            let got = asm.local_blocks(0).unwrap();
            let want = oracle_blocks(&mesh, &asm, k, scheme.epsilon(), f);
            let scale = want.a_uu.amax().max(want.a_tt.amax());
            let pairs = [
                (&got.a_uu, &want.a_uu, "a_uu"),
                (&got.a_ut, &want.a_ut, "a_ut"),
                (&got.a_tu, &want.a_tu, "a_tu"),
                (&got.a_tt, &want.a_tt, "a_tt"),
            ];
            for (g, w, name) in pairs {
                assert_eq!(g.shape(), w.shape());
                let d = (g - w).amax();
                assert!(d <= 1e-12 * scale, "k={k} {scheme:?} {name}: {d:e}");
            }
            assert!((&got.f_u - &want.f_u).amax() <= 1e-12);
            assert!(got.f_t.iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn condensation_matches_dense_inverse() {
    let mut r = rng(3);
    for &(nu, nt) in &[(3, 6), (6, 9), (10, 12), (16, 20)] {
        for _ in 0..20 {
            let m = DMatrix::from_fn(nu, nu, |_, _| r.random_range(-1.0..1.0));
            let a_uu = &m * m.transpose() + DMatrix::identity(nu, nu) * nu as f64;
            let b = LocalBlocks {
                a_uu: a_uu.clone(),
                a_ut: DMatrix::from_fn(nu, nt, |_, _| r.random_range(-1.0..1.0)),
                a_tu: DMatrix::from_fn(nt, nu, |_, _| r.random_range(-1.0..1.0)),
                a_tt: DMatrix::from_fn(nt, nt, |_, _| r.random_range(-1.0..1.0)),
                f_u: DVector::from_fn(nu, |_, _| r.random_range(-1.0..1.0)),
                f_t: DVector::from_fn(nt, |_, _| r.random_range(-1.0..1.0)),
            };
            let c = condense(&b).unwrap();
            let inv = a_uu.try_inverse().unwrap();
            let s = &b.a_tt - &b.a_tu * &inv * &b.a_ut;
            let g = &b.f_t - &b.a_tu * &inv * &b.f_u;
            assert!((&c.s - &s).amax() <= 1e-12 * (1.0 + s.amax()));
            assert!((&c.g - &g).amax() <= 1e-12 * (1.0 + g.amax()));
            // recovery: U = x_f - x_t T solves the first block row
            let t = DVector::from_fn(nt, |_, _| r.random_range(-1.0..1.0));
            let u = &c.x_f - &c.x_t * &t;
            let res = &b.a_uu * &u + &b.a_ut * &t - &b.f_u;
            assert!(res.amax() <= 1e-12 * (1.0 + b.f_u.amax() + t.amax()) * nu as f64);
        }
    }
}

#[test]
fn decoupled_block_condenses_to_trace_block() {
    let b = LocalBlocks {
        a_uu: DMatrix::identity(3, 3) * 2.0,
        a_ut: DMatrix::zeros(3, 6),
        a_tu: DMatrix::zeros(6, 3),
        a_tt: DMatrix::from_fn(6, 6, |i, j| (i * 6 + j) as f64),
        f_u: DVector::from_element(3, 1.0),
        f_t: DVector::from_element(6, 0.5),
    };
    let c = condense(&b).unwrap();
    assert_eq!(c.s, b.a_tt);
    assert_eq!(c.g, b.f_t);
}

#[test]
fn singular_interior_block_is_reported() {
    let b = LocalBlocks {
        a_uu: DMatrix::zeros(3, 3),
        a_ut: DMatrix::zeros(3, 6),
        a_tu: DMatrix::zeros(6, 3),
        a_tt: DMatrix::identity(6, 6),
        f_u: DVector::zeros(3),
        f_t: DVector::zeros(6),
    };
    assert!(matches!(condense(&b), Err(hipdg::Error::LocalSolvability { .. })));
}
