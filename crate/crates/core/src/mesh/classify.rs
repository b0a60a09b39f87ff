//! Inflow/outflow classification of boundary faces and of the faces on the
//! elliptic/hyperbolic interface.

use super::{BoundaryTag, InterfaceTag, Mesh, Region};
use crate::error::{Error, Result};
use crate::fespace::{face_points, quadrature};
use crate::model::ProblemSpec;

/// `|beta . n| <= BETA_NORMAL_TOL * |beta|` counts as tangential flow.
pub const BETA_NORMAL_TOL: f64 = 1e-12;

const SAMPLE_EXACTNESS: usize = 11;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sign {
    Negative,
    Zero,
    Positive,
}

/// Sign of `beta . n` with tangential snapping.
pub(crate) fn flux_sign(beta: [f64; 2], n: [f64; 2]) -> (f64, bool) {
    let bn = beta[0] * n[0] + beta[1] * n[1];
    let scale = beta[0].hypot(beta[1]);
    if bn.abs() <= BETA_NORMAL_TOL * scale {
        (0.0, true)
    } else {
        (bn, false)
    }
}

fn uniform(signs: &[Sign]) -> Option<Sign> {
    let first = *signs.first()?;
    signs.iter().all(|&s| s == first).then_some(first)
}

/// Tags every boundary face as `GammaMinus` (`n.kappa.n > 0` or inflow) or
/// `GammaPlus` (no diffusion and outflow or tangential flow), and every
/// elliptic/hyperbolic interface face as `IMinus` (flow enters the elliptic
/// side) or `IPlus`. Coefficients are sampled at face quadrature points and
/// must have a uniform sign on each face.
pub fn classify_boundary(mesh: &Mesh, problem: &ProblemSpec) -> Result<Mesh> {
    let mut out = mesh.clone();
    let rule = quadrature::segment_rule(SAMPLE_EXACTNESS)?;
    for f in 0..mesh.n_faces() {
        let face = &mesh.faces[f];
        out.faces[f].boundary = None;
        out.faces[f].interface = InterfaceTag::None;
        let regions: Vec<Region> = face
            .sides
            .iter()
            .map(|s| mesh.elements[s.element].region)
            .collect();
        let side = if face.is_boundary() {
            0
        } else if regions[0] != regions[1] {
            regions.iter().position(|&r| r == Region::Elliptic).unwrap()
        } else {
            continue;
        };
        let region = regions[side];
        let fp = face_points(mesh, f, side, &rule);
        let mut diff = Vec::with_capacity(rule.points.len());
        let mut flow = Vec::with_capacity(rule.points.len());
        for (x, n) in fp.x.iter().zip(&fp.normal) {
            problem.check_domain(*x)?;
            let k = problem.kappa_at(*x, region);
            let kn = [k[0][0] * n[0] + k[0][1] * n[1], k[1][0] * n[0] + k[1][1] * n[1]];
            let nkn = n[0] * kn[0] + n[1] * kn[1];
            let scale = k[0][0].abs() + k[0][1].abs() + k[1][0].abs() + k[1][1].abs();
            diff.push(if nkn > 1e-12 * scale && nkn > 0.0 {
                Sign::Positive
            } else if nkn < -1e-12 * scale {
                Sign::Negative
            } else {
                Sign::Zero
            });
            let (bn, tangential) = flux_sign(problem.beta_at(*x, region), *n);
            flow.push(if tangential {
                Sign::Zero
            } else if bn > 0.0 {
                Sign::Positive
            } else {
                Sign::Negative
            });
        }
        let ambiguous = |what: &str| Error::Classification {
            face: f,
            reason: format!("{what} changes sign along the face"),
        };
        let nonneg = |s: &[Sign]| s.iter().all(|&x| x != Sign::Negative);
        let neg = |s: &[Sign]| s.iter().all(|&x| x == Sign::Negative);
        if diff.contains(&Sign::Negative) {
            return Err(Error::Classification {
                face: f,
                reason: "n.kappa.n is negative".into(),
            });
        }
        if face.is_boundary() {
            let tag = match uniform(&diff) {
                Some(Sign::Positive) => BoundaryTag::GammaMinus,
                Some(_) if neg(&flow) => BoundaryTag::GammaMinus,
                Some(_) if nonneg(&flow) => BoundaryTag::GammaPlus,
                Some(_) => return Err(ambiguous("beta.n")),
                None => return Err(ambiguous("n.kappa.n")),
            };
            out.faces[f].boundary = Some(tag);
        } else {
            // normal points out of the elliptic side
            out.faces[f].interface = if neg(&flow) {
                InterfaceTag::IMinus
            } else if nonneg(&flow) {
                InterfaceTag::IPlus
            } else {
                return Err(ambiguous("beta.n"));
            };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Rect, Shape};
    use crate::model::{testcase_a, testcase_b};

    fn side_of(mesh: &Mesh, f: usize) -> &'static str {
        let m = mesh.face_midpoint(f);
        if m[0] == 0.0 {
            "left"
        } else if m[0] == 1.0 {
            "right"
        } else if m[1] == 0.0 {
            "bottom"
        } else {
            "top"
        }
    }

    #[test]
    fn pure_advection_inflow_is_left_and_bottom() {
        let p = testcase_b();
        let mut m = generate_structured(4, 4, Rect::UNIT, Shape::Tri).unwrap();
        p.assign_regions(&mut m);
        let m = classify_boundary(&m, &p).unwrap();
        for (f, face) in m.faces.iter().enumerate() {
            if !face.is_boundary() {
                continue;
            }
            let want = match side_of(&m, f) {
                "left" | "bottom" => BoundaryTag::GammaMinus,
                _ => BoundaryTag::GammaPlus,
            };
            assert_eq!(face.boundary, Some(want));
        }
    }

    #[test]
    fn diffusion_makes_all_boundary_inflow() {
        let p = testcase_a(0.5).unwrap();
        let m = generate_structured(3, 3, Rect::UNIT, Shape::Quad).unwrap();
        let m = classify_boundary(&m, &p).unwrap();
        assert!(m
            .faces
            .iter()
            .filter(|f| f.is_boundary())
            .all(|f| f.boundary == Some(BoundaryTag::GammaMinus)));
    }

    #[test]
    fn sign_change_on_a_face_is_an_error() {
        // rotational flow around the square's center changes sign on every side
        let mut p = testcase_b();
        p.beta = std::sync::Arc::new(|x, _| [-(x[1] - 0.5), x[0] - 0.5]);
        let m = generate_structured(1, 1, Rect::UNIT, Shape::Quad).unwrap();
        let mut m2 = m.clone();
        p.assign_regions(&mut m2);
        assert!(matches!(
            classify_boundary(&m2, &p),
            Err(Error::Classification { .. })
        ));
    }
}
