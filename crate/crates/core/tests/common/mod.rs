#![allow(dead_code)]

use std::sync::Arc;

use hipdg::mesh::{classify_boundary, generate_structured, BoundaryTag, Rect};
use hipdg::{FeSpace, Mesh, ProblemSpec, Region, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-square mesh tagged and classified for `problem`.
pub fn square(n: usize, shape: Shape, problem: &ProblemSpec) -> Mesh {
    let mut m = generate_structured(n, n, Rect::UNIT, shape).unwrap();
    problem.assign_regions(&mut m);
    classify_boundary(&m, problem).unwrap()
}

/// Diffusion on `x < 1/2`, none on `x > 1/2`, constant `beta` and `gamma`.
pub fn split_problem(beta: [f64; 2], gamma: f64) -> ProblemSpec {
    let mut p = ProblemSpec::constant("split", [[1.0, 0.0], [0.0, 1.0]], beta, gamma);
    p.kappa = Arc::new(|_, r| match r {
        Region::Elliptic => [[1.0, 0.2], [0.2, 0.5]],
        Region::Hyperbolic => [[0.0; 2]; 2],
    });
    p.region_of = Arc::new(|c| if c[0] < 0.5 { Region::Elliptic } else { Region::Hyperbolic });
    p
}

/// Random composite function: interior coefficients and a trace vector
/// vanishing on inflow Dirichlet faces.
pub fn random_composite(mesh: &Mesh, space: &FeSpace, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let u: Vec<f64> = (0..space.n_element_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let k1 = space.face_dim();
    let mut t: Vec<f64> = (0..space.n_trace_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    for f in 0..mesh.n_faces() {
        if mesh.faces[f].boundary == Some(BoundaryTag::GammaMinus) {
            t[f * k1..(f + 1) * k1].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    (u, t)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
