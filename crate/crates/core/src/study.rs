//! End-to-end pipeline: classify, build the space, assemble, solve and
//! measure errors; uniform convergence studies and the adaptive loop.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::assembly::{Assembler, PenaltyReport};
use crate::error::{Error, Result};
use crate::fespace::{face_points, FeSpace};
use crate::mesh::{
    classify_boundary, generate_annulus, generate_structured, read_mesh, refine_adaptive, Mesh, Rect, Shape,
};
use crate::model::ProblemSpec;
use crate::postprocess::{energy_error, eval_element, fill_rates, l2_error, ConvergenceRecord};
use crate::solver::{solve, Solution, SolverOptions};
use crate::stabilization::StabilizationConfig;

/// Result of one discretize-and-solve pass.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Classified mesh the problem was solved on.
    pub mesh: Mesh,
    pub space: FeSpace,
    pub solution: Solution,
    pub report: PenaltyReport,
    /// Skeleton system dimension.
    pub dofs: usize,
    pub l2_error: Option<f64>,
    pub energy_error: Option<f64>,
    /// Wall time of assembly and solve.
    pub solve_seconds: f64,
}

/// Tags regions and boundaries of `mesh` for `problem` and solves with
/// degree `k`.
pub fn solve_problem(
    mesh: &Mesh,
    problem: &ProblemSpec,
    k: usize,
    config: &StabilizationConfig,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    let mut mesh = mesh.clone();
    problem.assign_regions(&mut mesh);
    let mesh = classify_boundary(&mesh, problem)?;
    let space = FeSpace::new(&mesh, k, problem.extra_quadrature)?;
    let start = Instant::now();
    let asm = Assembler::new(&mesh, &space, problem, config)?;
    let system = asm.assemble()?;
    let solution = solve(&system, &mesh, &space, opts)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    let (l2, en) = if problem.exact.is_some() {
        (
            Some(l2_error(&mesh, &space, problem, &solution.interior)?),
            Some(energy_error(
                &mesh,
                &space,
                problem,
                &system.report,
                &solution.interior,
                &solution.trace,
            )?),
        )
    } else {
        (None, None)
    };
    Ok(SolveOutcome {
        report: system.report,
        dofs: system.dim(),
        mesh,
        space,
        solution,
        l2_error: l2,
        energy_error: en,
        solve_seconds,
    })
}

/// A mesh of a refinement study with the mesh size used for rates.
#[derive(Clone, Debug)]
pub struct StudyMesh {
    pub mesh: Mesh,
    pub level: usize,
    pub h: f64,
    pub h_inv: f64,
}

/// Structured `n x n` mesh of the unit square; `h = 1/n`.
pub fn square_mesh(n: usize, shape: Shape) -> Result<StudyMesh> {
    Ok(StudyMesh {
        mesh: generate_structured(n, n, Rect::UNIT, shape)?,
        level: n,
        h: 1.0 / n as f64,
        h_inv: n as f64,
    })
}

/// Annulus mesh of nominal size `1/n`: `2n` angular divisions per block and
/// `n/2` radial layers.
pub fn annulus_mesh(n: usize, shape: Shape) -> Result<Mesh> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "annulus level must be an even number >= 2, got {n}"
        )));
    }
    generate_annulus(2 * n, n / 2, shape)
}

/// File name of the bundled annulus mesh of level `n`.
pub fn annulus_file_name(n: usize) -> String {
    format!("annulus_h{n}.msh2")
}

/// Directory holding the bundled meshes: `HDG_DATA_DIR` if set, otherwise
/// the crate's `data` directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os("HDG_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"))
}

/// Loads a mesh file and reports `h` as the largest element diameter.
pub fn file_mesh(path: &Path, level: usize) -> Result<StudyMesh> {
    let mesh = read_mesh(path)?;
    let h = mesh.max_diameter();
    Ok(StudyMesh {
        mesh,
        level,
        h,
        h_inv: 1.0 / h,
    })
}

/// Bundled annulus mesh of level `n` (`h` reported as `1/n`).
pub fn bundled_annulus(n: usize) -> Result<StudyMesh> {
    let mesh = read_mesh(data_dir().join(annulus_file_name(n)))?;
    Ok(StudyMesh {
        mesh,
        level: n,
        h: 1.0 / n as f64,
        h_inv: n as f64,
    })
}

/// Solves on each mesh in turn and returns one record per mesh with rates
/// filled in.
pub fn convergence_study(
    problem: &ProblemSpec,
    meshes: &[StudyMesh],
    k: usize,
    config: &StabilizationConfig,
    opts: &SolverOptions,
) -> Result<Vec<ConvergenceRecord>> {
    let mut records = Vec::with_capacity(meshes.len());
    for m in meshes {
        let out = solve_problem(&m.mesh, problem, k, config, opts)?;
        records.push(record(problem, config, k, m, &out));
    }
    fill_rates(&mut records);
    Ok(records)
}

pub fn record(
    problem: &ProblemSpec,
    config: &StabilizationConfig,
    k: usize,
    m: &StudyMesh,
    out: &SolveOutcome,
) -> ConvergenceRecord {
    ConvergenceRecord {
        test: problem.name.clone(),
        scheme: config.scheme.label().into(),
        stabilization: config.elliptic.label().into(),
        k,
        level: m.level,
        h: m.h,
        h_inv: m.h_inv,
        l2_error: out.l2_error.unwrap_or(f64::NAN),
        ecr: None,
        energy_error: out.energy_error.unwrap_or(f64::NAN),
        dofs: out.dofs,
        solve_seconds: out.solve_seconds,
    }
}

/// Face-jump indicator `eta_E = sum_F h_F ||u_h - uhat_h||^2_F`.
pub fn jump_indicator(mesh: &Mesh, space: &FeSpace, solution: &Solution) -> Vec<f64> {
    let rule = space.face_rule();
    let k1 = space.face_dim();
    (0..mesh.n_elements())
        .map(|e| {
            let el = &mesh.elements[e];
            let mut eta = 0.0;
            for (local, &f) in el.faces.iter().enumerate() {
                let side = mesh.faces[f]
                    .sides
                    .iter()
                    .position(|s| s.element == e && s.local == local)
                    .expect("face lists its element");
                let fp = face_points(mesh, f, side, &rule);
                let u = eval_element(mesh, space, &solution.interior, e, &fp.xi);
                let mut j = 0.0;
                for q in 0..fp.s.len() {
                    let psi = crate::fespace::face_basis(space.k, fp.s[q]);
                    let t: f64 = (0..k1).map(|m| solution.trace[f * k1 + m] * psi[m]).sum();
                    j += fp.weight[q] * (u[q] - t) * (u[q] - t);
                }
                eta += mesh.face_length(f) * j;
            }
            eta
        })
        .collect()
}

/// One cycle of the adaptive loop.
#[derive(Clone, Debug)]
pub struct AdaptiveStep {
    pub outcome: SolveOutcome,
    pub indicator: Vec<f64>,
}

/// Solve, mark the top `fraction` of elements by the jump indicator, refine;
/// repeated `cycles` times. Returns the `cycles + 1` solves, the last one on
/// the finest mesh.
pub fn adaptive_study(
    mesh: &Mesh,
    problem: &ProblemSpec,
    k: usize,
    config: &StabilizationConfig,
    opts: &SolverOptions,
    cycles: usize,
    fraction: f64,
) -> Result<Vec<AdaptiveStep>> {
    let mut current = mesh.clone();
    let mut steps = Vec::with_capacity(cycles + 1);
    for cycle in 0..=cycles {
        let outcome = solve_problem(&current, problem, k, config, opts)?;
        let indicator = jump_indicator(&outcome.mesh, &outcome.space, &outcome.solution);
        if cycle < cycles {
            current = refine_adaptive(&outcome.mesh, &indicator, fraction)?;
        }
        steps.push(AdaptiveStep { outcome, indicator });
    }
    Ok(steps)
}
