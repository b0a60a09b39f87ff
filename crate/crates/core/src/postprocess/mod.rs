//! Error norms, energy norm, convergence rates and tabular output.

mod vtk;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::PenaltyReport;
use crate::error::{Error, Result};
use crate::fespace::{basis, face_points, quadrature, FeSpace};
use crate::mesh::geometry::{det, dot, inv_transpose, mat_vec};
use crate::mesh::{BoundaryTag, Mesh, Point};
use crate::model::{ExactSolution, ProblemSpec};

pub use vtk::{write_fields, write_fields_string};

/// Values of the discrete solution of element `e` at reference points.
pub fn eval_element(mesh: &Mesh, space: &FeSpace, coeffs: &[f64], e: usize, xi: &[Point]) -> Vec<f64> {
    let b = basis::eval_basis(mesh.elements[e].shape, space.k, xi).expect("degree validated");
    let o = space.element_offset(e);
    let n = space.element_dim(e);
    b.values
        .iter()
        .map(|row| (0..n).map(|i| coeffs[o + i] * row[i]).sum())
        .collect()
}

fn exact_of(problem: &ProblemSpec) -> Result<&ExactSolution> {
    problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::Capability(format!("problem {} has no exact solution", problem.name)))
}

/// Squared `L2` error on each element.
pub fn element_l2_errors_sq(mesh: &Mesh, space: &FeSpace, problem: &ProblemSpec, interior: &[f64]) -> Result<Vec<f64>> {
    let exact = exact_of(problem)?;
    let per: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let map = mesh.element_map(e);
            let region = mesh.elements[e].region;
            let rule = quadrature::element_rule(map.shape(), space.error_exactness).expect("bounded");
            let uh = eval_element(mesh, space, interior, e, &rule.points);
            rule.points
                .iter()
                .zip(&rule.weights)
                .zip(&uh)
                .map(|((&xi, &w), &u)| {
                    let (x, jac) = map.map(xi);
                    let d = (exact.value)(x, region) - u;
                    w * det(&jac) * d * d
                })
                .sum()
        })
        .collect();
    Ok(per)
}

/// `L2` norm of `u - u_h` with elevated quadrature.
pub fn l2_error(mesh: &Mesh, space: &FeSpace, problem: &ProblemSpec, interior: &[f64]) -> Result<f64> {
    Ok(element_l2_errors_sq(mesh, space, problem, interior)?.iter().sum::<f64>().sqrt())
}

/// The four squared seminorms making up the energy norm of a composite
/// function: `||k^1/2 grad v||^2`, `||v||^2`, `<beta.n vt, vt>` on outflow
/// boundary faces and `sum_E ||v - vt||^2_{dE}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyParts {
    pub diffusion: f64,
    pub mass: f64,
    pub outflow: f64,
    pub jump: f64,
}

/// Energy parts of the discrete function `(u, t)`, or of the error
/// `(u_exact - u, u_exact - t)` when `against_exact` is set.
pub fn energy_parts(
    mesh: &Mesh,
    space: &FeSpace,
    problem: &ProblemSpec,
    u: &[f64],
    t: &[f64],
    against_exact: bool,
) -> Result<EnergyParts> {
    let exact = if against_exact { Some(exact_of(problem)?) } else { None };
    let k = space.k;
    let k1 = space.face_dim();
    let frule = space.face_rule();
    let psi: Vec<Vec<f64>> = frule.points.iter().map(|&s| basis::face_basis(k, s)).collect();
    let parts: Vec<EnergyParts> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let el = &mesh.elements[e];
            let map = mesh.element_map(e);
            let region = el.region;
            let o = space.element_offset(e);
            let n = space.element_dim(e);
            let rule = quadrature::element_rule(el.shape, space.error_exactness).expect("bounded");
            let b = basis::eval_basis(el.shape, k, &rule.points).expect("degree validated");
            let mut p = EnergyParts::default();
            for q in 0..rule.len() {
                let (x, jac) = map.map(rule.points[q]);
                let w = rule.weights[q] * det(&jac);
                let jit = inv_transpose(&jac);
                let mut v = 0.0;
                let mut g = [0.0; 2];
                for i in 0..n {
                    v += u[o + i] * b.values[q][i];
                    let gi = mat_vec(&jit, b.grads[q][i]);
                    g[0] += u[o + i] * gi[0];
                    g[1] += u[o + i] * gi[1];
                }
                if let Some(ex) = exact {
                    let ge = (ex.gradient)(x, region);
                    v = (ex.value)(x, region) - v;
                    g = [ge[0] - g[0], ge[1] - g[1]];
                }
                let kappa = problem.kappa_at(x, region);
                p.diffusion += w * dot(g, mat_vec(&kappa, g));
                p.mass += w * v * v;
            }
            for (local, &f) in el.faces.iter().enumerate() {
                let side = mesh.faces[f]
                    .sides
                    .iter()
                    .position(|s| s.element == e && s.local == local)
                    .expect("face lists its element");
                let fp = face_points(mesh, f, side, &frule);
                let vals = eval_element(mesh, space, u, e, &fp.xi);
                let outflow = mesh.faces[f].boundary == Some(BoundaryTag::GammaPlus);
                for q in 0..fp.x.len() {
                    let mut vt: f64 = (0..k1).map(|m| t[f * k1 + m] * psi[q][m]).sum();
                    let mut v = vals[q];
                    if let Some(ex) = exact {
                        let ue = (ex.value)(fp.x[q], region);
                        v = ue - v;
                        vt = ue - vt;
                    }
                    p.jump += fp.weight[q] * (v - vt) * (v - vt);
                    if outflow {
                        let bn = dot(problem.beta_at(fp.x[q], region), fp.normal[q]);
                        p.outflow += fp.weight[q] * bn.max(0.0) * vt * vt;
                    }
                }
            }
            p
        })
        .collect();
    Ok(parts.iter().fold(EnergyParts::default(), |a, b| EnergyParts {
        diffusion: a.diffusion + b.diffusion,
        mass: a.mass + b.mass,
        outflow: a.outflow + b.outflow,
        jump: a.jump + b.jump,
    }))
}

/// Energy norm `|||v|||^2 = ||k^1/2 grad v||^2 + mu0 ||v||^2
/// + ||(beta.n)^1/2 vt||^2_{outflow} + tau0 sum_E ||v - vt||^2_{dE}`.
pub fn energy_norm(
    mesh: &Mesh,
    space: &FeSpace,
    problem: &ProblemSpec,
    report: &PenaltyReport,
    u: &[f64],
    t: &[f64],
) -> Result<f64> {
    if !(report.tau0 > 0.0) || !(report.mu0 > 0.0) {
        return Err(Error::Configuration(format!(
            "energy norm needs positive margins, got tau0 = {:.3e}, mu0 = {:.3e}",
            report.tau0, report.mu0
        )));
    }
    let p = energy_parts(mesh, space, problem, u, t, false)?;
    Ok((p.diffusion + report.mu0 * p.mass + p.outflow + report.tau0 * p.jump).sqrt())
}

/// Energy-type error with the margins clamped at zero, so it is defined
/// (as a seminorm) even when `tau0` or `mu0` vanish.
pub fn energy_error(
    mesh: &Mesh,
    space: &FeSpace,
    problem: &ProblemSpec,
    report: &PenaltyReport,
    u: &[f64],
    t: &[f64],
) -> Result<f64> {
    let p = energy_parts(mesh, space, problem, u, t, true)?;
    Ok((p.diffusion + report.mu0.max(0.0) * p.mass + p.outflow + report.tau0.max(0.0) * p.jump).sqrt())
}

/// Estimated convergence rate `log(e1/e2) / log(h1/h2)`.
pub fn ecr(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0 && h_coarse > 0.0 && h_fine > 0.0) || h_fine >= h_coarse {
        return Err(Error::InvalidArgument(format!(
            "rate needs positive errors and h_fine < h_coarse, got ({e_coarse}, {e_fine}, {h_coarse}, {h_fine})"
        )));
    }
    Ok((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

/// One row of a convergence table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub test: String,
    pub scheme: String,
    pub stabilization: String,
    pub k: usize,
    pub level: usize,
    pub h: f64,
    pub h_inv: f64,
    pub l2_error: f64,
    pub ecr: Option<f64>,
    pub energy_error: f64,
    pub dofs: usize,
    pub solve_seconds: f64,
}

pub const CSV_HEADER: &str =
    "test,scheme,stabilization,k,h_inv,l2_error,ecr,energy_error,dofs,solve_seconds";

/// Fills `ecr` from the previous record of the same series (test, scheme,
/// stabilization, k) in list order. Rates are left empty when either error
/// is below `1e-9` (solver floor).
pub fn fill_rates(records: &mut [ConvergenceRecord]) {
    for i in 0..records.len() {
        records[i].ecr = None;
        let prev = (0..i).rev().find(|&j| {
            let (a, b) = (&records[j], &records[i]);
            a.test == b.test && a.scheme == b.scheme && a.stabilization == b.stabilization && a.k == b.k
        });
        if let Some(j) = prev {
            let (a, b) = (&records[j], &records[i]);
            if a.l2_error >= 1e-9 && b.l2_error >= 1e-9 {
                records[i].ecr = ecr(a.l2_error, b.l2_error, a.h, b.h).ok();
            }
        }
    }
}

pub fn csv_string(records: &[ConvergenceRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CSV_HEADER}");
    for r in records {
        let ecr = r.ecr.map(|v| format!("{v:.4}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.6e},{},{:.6e},{},{:.3}",
            r.test, r.scheme, r.stabilization, r.k, r.h_inv, r.l2_error, ecr, r.energy_error, r.dofs, r.solve_seconds
        );
    }
    s
}

pub fn write_csv(records: &[ConvergenceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, csv_string(records)).map_err(|e| Error::io(path, e))
}
