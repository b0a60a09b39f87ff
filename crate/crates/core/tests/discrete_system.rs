//! Properties of the assembled discrete problem: consistency, coercivity,
//! condensation and the structure of the skeleton matrix.

mod common;

use common::*;
use hipdg::assembly::TraceKind;
use hipdg::fespace::{face_basis, face_points};
use hipdg::mesh::BoundaryTag;
use hipdg::model::testcase_b;
use hipdg::postprocess::{energy_norm, energy_parts, eval_element, l2_error};
use hipdg::solver::{solve_direct, SolverMethod, SolverOptions};
use hipdg::study::solve_problem;
use hipdg::{Assembler, EllipticScheme, FeSpace, Mesh, ProblemSpec, Region, Scheme, Shape, StabilizationConfig};

const SCHEMES: [Scheme; 3] = [Scheme::Nip, Scheme::Iip, Scheme::Sip];
const ELLIPTIC: [EllipticScheme; 2] = [EllipticScheme::Additive, EllipticScheme::ScharfetterGummel];

/// Degree-`k` polynomial with all monomials present.
fn poly(k: usize) -> impl Fn([f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) + Copy {
    move |x: [f64; 2]| {
        let (a, b) = (x[0], x[1]);
        match k {
            1 => (0.3 + 1.1 * a - 0.7 * b, [1.1, -0.7], [[0.0; 2]; 2]),
            _ => (
                0.3 + 1.1 * a - 0.7 * b + 0.5 * a * a - 0.9 * a * b + 0.4 * b * b,
                [1.1 + a - 0.9 * b, -0.7 - 0.9 * a + 0.8 * b],
                [[1.0, -0.9], [-0.9, 0.8]],
            ),
        }
    }
}

/// Polynomial whose diffusive flux `k grad u . (1,0)` vanishes on `x = 1/2`
/// for `k = [[1, 0.2], [0.2, 0.5]]`, so it also solves the split problem.
fn interface_poly(k: usize) -> impl Fn([f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) + Copy {
    move |x: [f64; 2]| {
        let (a, b) = (x[0], x[1]);
        match k {
            1 => (0.3 - 0.2 * a + b, [-0.2, 1.0], [[0.0; 2]; 2]),
            _ => (
                0.3 - 0.14 * a - 0.7 * b + 0.3 * a * a - 0.2 * a * b + 0.5 * b * b,
                [-0.14 + 0.6 * a - 0.2 * b, -0.7 - 0.2 * a + b],
                [[0.6, -0.2], [-0.2, 1.0]],
            ),
        }
    }
}

#[test]
fn polynomial_solutions_are_reproduced() {
    let opts = SolverOptions::default();
    for k in [1, 2] {
        for shape in [Shape::Tri, Shape::Quad] {
            let diffusive = ProblemSpec::manufactured("p", [[1.0, 0.3], [0.3, 0.6]], [1.5, -0.5], 0.7, poly(k));
            let advective = ProblemSpec::manufactured("p", [[0.0; 2]; 2], [1.5, 0.5], 0.7, poly(k));
            let split = |beta: [f64; 2]| {
                let mut p = split_problem(beta, 0.7);
                let m = ProblemSpec::manufactured("p", [[1.0, 0.2], [0.2, 0.5]], beta, 0.7, interface_poly(k));
                let mh = ProblemSpec::manufactured("p", [[0.0; 2]; 2], beta, 0.7, interface_poly(k));
                let (se, sh) = (m.source.clone(), mh.source.clone());
                p.source = std::sync::Arc::new(move |x, r| match r {
                    Region::Elliptic => se(x, r),
                    Region::Hyperbolic => sh(x, r),
                });
                p.dirichlet = m.dirichlet.clone();
                p.exact = m.exact.clone();
                p
            };
            // flow leaving and entering the diffusive half
            let (leaving, entering) = (split([1.5, 0.5]), split([-1.5, 0.5]));
            for problem in [&diffusive, &advective, &leaving, &entering] {
                let mesh = square(4, shape, problem);
                for scheme in SCHEMES {
                    for elliptic in ELLIPTIC {
                        let cfg = StabilizationConfig::new(scheme, elliptic);
                        let out = solve_problem(&mesh, problem, k, &cfg, &opts).unwrap();
                        let err = out.l2_error.unwrap();
                        assert!(
                            err <= 1e-10,
                            "k={k} {shape:?} {scheme:?} {elliptic:?} kappa={:?}: {err:e}",
                            (problem.kappa)([0.25, 0.5], Region::Elliptic)
                        );
                    }
                }
            }
        }
    }
}

/// `sum_E sum_F <(tau + beta.n/2) (u - t)^2>_F` with the assembler's own penalties.
fn weighted_jump(asm: &Assembler, mesh: &Mesh, space: &FeSpace, u: &[f64], t: &[f64]) -> f64 {
    let rule = space.face_rule();
    let k1 = space.face_dim();
    let mut s = 0.0;
    for e in 0..mesh.n_elements() {
        for (local, &f) in mesh.elements[e].faces.iter().enumerate() {
            let side = mesh.faces[f]
                .sides
                .iter()
                .position(|x| x.element == e && x.local == local)
                .unwrap();
            let fp = face_points(mesh, f, side, &rule);
            let (tau, bn) = asm.side_penalties(e, local).unwrap();
            let vals = eval_element(mesh, space, u, e, &fp.xi);
            for q in 0..fp.s.len() {
                let psi = face_basis(space.k, fp.s[q]);
                let vt: f64 = (0..k1).map(|m| t[f * k1 + m] * psi[m]).sum();
                s += fp.weight[q] * (tau[q] + 0.5 * bn[q]) * (vals[q] - vt).powi(2);
            }
        }
    }
    s
}

/// For the nonsymmetric variant the quadratic form is known in closed form:
/// `||k^1/2 grad v||^2 + gamma ||v||^2 + 1/2 ||(beta.n)^1/2 vt||^2_out
/// + sum <(tau + beta.n/2)(v - vt)^2>`.
#[test]
fn nonsymmetric_quadratic_form_identity() {
    let cases = [
        (testcase_b(), Shape::Tri, 1.0),
        (split_problem([1.0, 0.5], 0.3), Shape::Quad, 0.3),
        (split_problem([-1.0, 0.5], 0.3), Shape::Tri, 0.3),
    ];
    let mut rng = rng(7);
    for (problem, shape, gamma) in &cases {
        let mesh = square(4, *shape, problem);
        assert!(mesh.faces.iter().any(|f| f.boundary == Some(BoundaryTag::GammaPlus)));
        for k in [1, 2] {
            let space = FeSpace::new(&mesh, k, 0).unwrap();
            for elliptic in ELLIPTIC {
                let cfg = StabilizationConfig::new(Scheme::Nip, elliptic);
                let asm = Assembler::new(&mesh, &space, problem, &cfg).unwrap();
                for _ in 0..20 {
                    let (u, t) = random_composite(&mesh, &space, &mut rng);
                    let a = asm.bilinear_form(&u, &t, &u, &t).unwrap();
                    let p = energy_parts(&mesh, &space, problem, &u, &t, false).unwrap();
                    let expected = p.diffusion + gamma * p.mass + 0.5 * p.outflow
                        + weighted_jump(&asm, &mesh, &space, &u, &t);
                    assert!((a - expected).abs() <= 1e-11 * expected, "{a} vs {expected}");
                    assert!(a > 0.0);
                }
            }
        }
    }
}

#[test]
fn nonsymmetric_form_dominates_energy_norm() {
    // all boundary faces are inflow, so the form bounds the energy norm with constant one
    let problem = ProblemSpec::constant("d", [[1.0, 0.1], [0.1, 0.4]], [1.0, -0.6], 0.2);
    let mut rng = rng(11);
    for shape in [Shape::Tri, Shape::Quad] {
        let mesh = square(4, shape, &problem);
        let space = FeSpace::new(&mesh, 2, 0).unwrap();
        for elliptic in ELLIPTIC {
            let cfg = StabilizationConfig::new(Scheme::Nip, elliptic);
            let asm = Assembler::new(&mesh, &space, &problem, &cfg).unwrap();
            let report = asm.penalty_report().unwrap();
            for _ in 0..100 {
                let (u, t) = random_composite(&mesh, &space, &mut rng);
                let a = asm.bilinear_form(&u, &t, &u, &t).unwrap();
                let e = energy_norm(&mesh, &space, &problem, &report, &u, &t).unwrap();
                assert!(a >= e * e * (1.0 - 1e-10), "{a} < {}", e * e);
            }
        }
    }
}

#[test]
fn symmetric_and_incomplete_forms_are_positive() {
    let problem = split_problem([1.0, 0.5], 0.3);
    let mut rng = rng(13);
    for shape in [Shape::Tri, Shape::Quad] {
        let mesh = square(4, shape, &problem);
        let space = FeSpace::new(&mesh, 2, 0).unwrap();
        for scheme in [Scheme::Iip, Scheme::Sip] {
            let cfg = StabilizationConfig::new(scheme, EllipticScheme::ScharfetterGummel);
            let asm = Assembler::new(&mesh, &space, &problem, &cfg).unwrap();
            let report = asm.penalty_report().unwrap();
            let mut ratio = f64::INFINITY;
            for _ in 0..100 {
                let (u, t) = random_composite(&mesh, &space, &mut rng);
                let a = asm.bilinear_form(&u, &t, &u, &t).unwrap();
                let e = energy_norm(&mesh, &space, &problem, &report, &u, &t).unwrap();
                assert!(a > 0.0);
                ratio = ratio.min(a / (e * e));
            }
            eprintln!("{shape:?} {scheme:?}: smallest a(v,v)/|||v|||^2 = {ratio:.3}");
        }
    }
}

fn condensed_vs_full(mesh: &Mesh, problem: &ProblemSpec, k: usize, cfg: &StabilizationConfig) {
    let space = FeSpace::new(mesh, k, problem.extra_quadrature).unwrap();
    let asm = Assembler::new(mesh, &space, problem, cfg).unwrap();
    let sys = asm.assemble().unwrap();
    let full = asm.assemble_full().unwrap();
    let (x, _) = solve_direct(&full.matrix, &full.rhs).unwrap();
    let (t, _) = solve_direct(&sys.matrix, &sys.rhs).unwrap();
    let nu = full.n_element_dofs;
    let scale = 1.0 + norm(&t);
    assert!(max_abs_diff(&x[nu..], &t) <= 1e-10 * scale);
    let trace = sys.layout.expand(&t);
    let u = sys.recover(mesh, &trace);
    assert!(max_abs_diff(&x[..nu], &u) <= 1e-10 * (1.0 + norm(&u)));
    // the condensed-then-recovered pair satisfies the coupled equations
    let mut xc = u.clone();
    xc.extend_from_slice(&t);
    let r: Vec<f64> = full.matrix.mul_vec(&xc).iter().zip(&full.rhs).map(|(a, b)| a - b).collect();
    assert!(norm(&r) <= 1e-10 * norm(&full.rhs).max(1.0), "residual {:e}", norm(&r));
}

#[test]
fn condensation_matches_the_coupled_system() {
    let diffusion = ProblemSpec::manufactured("d", [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], 0.0, poly(2));
    let sip = StabilizationConfig::new(Scheme::Sip, EllipticScheme::ScharfetterGummel);
    let nip = StabilizationConfig::new(Scheme::Nip, EllipticScheme::Additive);
    condensed_vs_full(&square(1, Shape::Tri, &diffusion), &diffusion, 1, &sip);
    condensed_vs_full(&square(3, Shape::Quad, &diffusion), &diffusion, 2, &nip);
    let split = split_problem([-1.0, 0.5], 0.3);
    condensed_vs_full(&square(4, Shape::Tri, &split), &split, 2, &sip);
    let b = testcase_b();
    condensed_vs_full(&square(4, Shape::Tri, &b), &b, 1, &nip);
}

#[test]
fn coupled_matrix_is_affine_in_the_symmetry_parameter() {
    let problem = split_problem([1.0, 0.5], 0.3);
    for shape in [Shape::Tri, Shape::Quad] {
        let mesh = square(4, shape, &problem);
        let space = FeSpace::new(&mesh, 2, 0).unwrap();
        let dense = |scheme| {
            let cfg = StabilizationConfig::new(scheme, EllipticScheme::ScharfetterGummel);
            Assembler::new(&mesh, &space, &problem, &cfg).unwrap().assemble_full().unwrap().matrix.to_dense()
        };
        let (n, i, s) = (dense(Scheme::Nip), dense(Scheme::Iip), dense(Scheme::Sip));
        let mid = (&s + &n) * 0.5;
        let scale = s.amax();
        assert!((&i - &mid).amax() <= 1e-12 * scale);
    }
}

#[test]
fn symmetric_scheme_on_pure_diffusion_is_symmetric() {
    let problem = ProblemSpec::constant("d", [[2.0, 0.5], [0.5, 1.0]], [0.0, 0.0], 0.0);
    for shape in [Shape::Tri, Shape::Quad] {
        let mesh = square(4, shape, &problem);
        let space = FeSpace::new(&mesh, 2, 0).unwrap();
        let cfg = StabilizationConfig::new(Scheme::Sip, EllipticScheme::Additive);
        let asm = Assembler::new(&mesh, &space, &problem, &cfg).unwrap();
        let s = asm.assemble().unwrap().matrix.to_dense();
        assert!((&s - s.transpose()).norm() <= 1e-10 * s.norm());
        for e in 0..mesh.n_elements() {
            let b = asm.local_blocks(e).unwrap();
            let sc = b.a_uu.amax();
            assert!((&b.a_uu - b.a_uu.transpose()).amax() <= 1e-12 * sc);
            assert!((&b.a_ut - b.a_tu.transpose()).amax() <= 1e-12 * sc);
        }
    }
}

#[test]
fn skeleton_dimension_counts_free_faces() {
    let b = testcase_b();
    let mesh = square(4, Shape::Tri, &b);
    let n_inflow = mesh.faces.iter().filter(|f| f.boundary == Some(BoundaryTag::GammaMinus)).count();
    assert_eq!(mesh.n_faces(), 56);
    assert_eq!(n_inflow, 8);
    let space = FeSpace::new(&mesh, 1, 0).unwrap();
    let cfg = StabilizationConfig::default();
    let sys = Assembler::new(&mesh, &space, &b, &cfg).unwrap().assemble().unwrap();
    assert_eq!(sys.dim(), 96);
    assert_eq!(sys.layout.kind.iter().filter(|k| matches!(k, TraceKind::Free(_))).count(), 48);
}

#[test]
fn outflow_trace_equals_interior_trace() {
    let b = testcase_b();
    let opts = SolverOptions::default();
    for k in [1, 2] {
        let mesh = square(8, Shape::Tri, &b);
        for theta in [1.0, 3.0] {
            let cfg = StabilizationConfig::default().with_theta(theta);
            let out = solve_problem(&mesh, &b, k, &cfg, &opts).unwrap();
            let (mesh, space, sol) = (&out.mesh, &out.space, &out.solution);
            let rule = space.face_rule();
            let k1 = space.face_dim();
            let mut checked = 0;
            for f in 0..mesh.n_faces() {
                if mesh.faces[f].boundary != Some(BoundaryTag::GammaPlus) {
                    continue;
                }
                let fp = face_points(mesh, f, 0, &rule);
                let e = mesh.faces[f].sides[0].element;
                let u = eval_element(mesh, space, &sol.interior, e, &fp.xi);
                for q in 0..fp.s.len() {
                    let psi = face_basis(k, fp.s[q]);
                    let t: f64 = (0..k1).map(|m| sol.trace[f * k1 + m] * psi[m]).sum();
                    assert!((u[q] - t).abs() <= 1e-9, "face {f}: {} vs {t}", u[q]);
                }
                checked += 1;
            }
            assert_eq!(checked, 16);
        }
    }
}

#[test]
fn direct_and_iterative_solutions_agree() {
    let gm = SolverOptions {
        method: SolverMethod::Iterative,
        tol: 1e-12,
        ..SolverOptions::default()
    };
    let direct = SolverOptions::default();
    let a = hipdg::model::testcase_a(0.05).unwrap();
    let b = testcase_b();
    let mut split = split_problem([-1.0, 0.5], 0.3);
    split.dirichlet = std::sync::Arc::new(|x, _| 1.0 + x[1]);
    for (problem, shape, k) in [(&a, Shape::Quad, 2), (&b, Shape::Tri, 1), (&split, Shape::Tri, 2)] {
        let mesh = square(8, shape, problem);
        let cfg = StabilizationConfig::default();
        let x = solve_problem(&mesh, problem, k, &cfg, &direct).unwrap();
        let y = solve_problem(&mesh, problem, k, &cfg, &gm).unwrap();
        // L2 distance of the two discrete solutions via the orthonormal basis
        let mut d = 0.0;
        for e in 0..x.mesh.n_elements() {
            let o = x.space.element_offset(e);
            let n = x.space.element_dim(e);
            let jac = x.mesh.area(e) / x.mesh.elements[e].shape.reference_measure();
            let de: f64 = (o..o + n).map(|i| (x.solution.interior[i] - y.solution.interior[i]).powi(2)).sum();
            d += jac * de;
        }
        assert!(d.sqrt() <= 1e-8, "{}: {:e}", problem.name, d.sqrt());
        assert!(y.solution.report.iterations > 0);
    }
}

#[test]
fn assembly_and_direct_solve_are_deterministic() {
    let a = hipdg::model::testcase_a(0.5).unwrap();
    let mesh = square(8, Shape::Quad, &a);
    let cfg = StabilizationConfig::default();
    let opts = SolverOptions::default();
    let x = solve_problem(&mesh, &a, 2, &cfg, &opts).unwrap();
    let y = solve_problem(&mesh, &a, 2, &cfg, &opts).unwrap();
    assert_eq!(x.solution.trace, y.solution.trace);
    assert_eq!(x.solution.interior, y.solution.interior);
    assert_eq!(
        l2_error(&x.mesh, &x.space, &a, &x.solution.interior).unwrap().to_bits(),
        x.l2_error.unwrap().to_bits()
    );
}

#[test]
fn zero_source_gives_zero_interior_load() {
    let b = testcase_b();
    let mesh = square(2, Shape::Tri, &b);
    let space = FeSpace::new(&mesh, 2, 0).unwrap();
    let asm = Assembler::new(&mesh, &space, &b, &StabilizationConfig::default()).unwrap();
    for e in 0..mesh.n_elements() {
        assert!(asm.local_blocks(e).unwrap().f_u.iter().all(|&v| v == 0.0));
    }
}
