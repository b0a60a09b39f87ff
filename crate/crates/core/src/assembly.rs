//! Element matrices of the hybridized interior-penalty form, static
//! condensation onto the skeleton and global assembly.
//!
//! Per element, with `phi_i` the element basis and `psi_m` the face basis
//! (row = test function, column = trial function):
//!
//! ```text
//! A_uu = (k grad phi_j, grad phi_i) - (beta phi_j, grad phi_i) + (gamma phi_j, phi_i)
//!      + <-(k grad phi_j.n) phi_i - eps (k grad phi_i.n) phi_j + (beta.n + tau) phi_j phi_i>
//! A_ut = < eps (k grad phi_i.n) psi_m - tau psi_m phi_i >
//! A_tu = < (k grad phi_j.n) psi_m - (beta.n + tau) phi_j psi_m >
//! A_tt = < tau psi_l psi_m > + <(beta.n) psi_l psi_m> on outflow boundary faces
//! F_u  = (f, phi_i),  F_t = 0
//! ```
//!
//! Trace unknowns on inflow Dirichlet faces are fixed to the projected datum.
//! Faces that carry neither penalty nor normal flux on any side (pure
//! advection tangential to the face) have zero trace equations; their
//! unknowns are fixed to zero for the solve and reconstructed afterwards.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fespace::{basis, face_points, quadrature, trace_constant_sq, BasisEval, FacePoints, FeSpace};
use crate::mesh::classify::flux_sign;
use crate::mesh::geometry::{det, dot, inv_transpose, mat_vec};
use crate::mesh::{BoundaryTag, InterfaceTag, Mesh, Point, Region, Shape};
use crate::model::{ProblemSpec, Tensor};
use crate::sparse::CsrMatrix;
use crate::stabilization::{tau_kappa, tau_total, StabilizationConfig};

/// Largest accepted 1-norm condition number of an element block `A_uu`.
pub const MAX_LOCAL_CONDITION: f64 = 1e14;

#[derive(Clone, Debug)]
pub struct LocalBlocks {
    pub a_uu: DMatrix<f64>,
    pub a_ut: DMatrix<f64>,
    pub a_tu: DMatrix<f64>,
    pub a_tt: DMatrix<f64>,
    pub f_u: DVector<f64>,
    pub f_t: DVector<f64>,
}

/// Schur complement of one element and the products needed to recover the
/// interior unknowns: `U = x_f - x_t * T`.
#[derive(Clone, Debug)]
pub struct CondensedBlock {
    pub s: DMatrix<f64>,
    pub g: DVector<f64>,
    pub x_f: DVector<f64>,
    pub x_t: DMatrix<f64>,
}

/// Eliminates the interior unknowns of one element.
pub fn condense(blocks: &LocalBlocks) -> Result<CondensedBlock> {
    let inv = checked_inverse(&blocks.a_uu).map_err(|reason| Error::LocalSolvability {
        element: usize::MAX,
        reason,
    })?;
    let x_f = &inv * &blocks.f_u;
    let x_t = &inv * &blocks.a_ut;
    let s = &blocks.a_tt - &blocks.a_tu * &x_t;
    let g = &blocks.f_t - &blocks.a_tu * &x_f;
    Ok(CondensedBlock { s, g, x_f, x_t })
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn checked_inverse(a: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, String> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| "interior block is singular".to_string())?;
    let cond = norm1(a) * norm1(&inv);
    if !cond.is_finite() || cond > MAX_LOCAL_CONDITION {
        return Err(format!("interior block condition number {cond:.3e} too large"));
    }
    Ok(inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    /// Unknown; first system index of the face block.
    Free(usize),
    /// Fixed by the projected Dirichlet datum.
    Dirichlet,
    /// No trace equation; fixed to zero in the solve.
    Inactive,
}

/// Mapping between face trace blocks and skeleton system unknowns.
#[derive(Clone, Debug)]
pub struct TraceLayout {
    pub kind: Vec<TraceKind>,
    /// Fixed trace values over all faces (Dirichlet projections, zero elsewhere).
    pub fixed: Vec<f64>,
    pub n_unknowns: usize,
    pub face_dim: usize,
}

impl TraceLayout {
    pub fn system_index(&self, f: usize, m: usize) -> Option<usize> {
        match self.kind[f] {
            TraceKind::Free(off) => Some(off + m),
            _ => None,
        }
    }

    /// Full trace vector from the skeleton solution.
    pub fn expand(&self, sol: &[f64]) -> Vec<f64> {
        let mut t = self.fixed.clone();
        for (f, kind) in self.kind.iter().enumerate() {
            if let TraceKind::Free(off) = *kind {
                let b = f * self.face_dim;
                t[b..b + self.face_dim].copy_from_slice(&sol[off..off + self.face_dim]);
            }
        }
        t
    }

    pub fn n_inactive(&self) -> usize {
        self.kind.iter().filter(|k| **k == TraceKind::Inactive).count()
    }
}

/// Sampled penalty and reaction margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PenaltyReport {
    /// Minimum of `tau + beta.n/2` over all element faces and quadrature points.
    pub tau0: f64,
    /// Face attaining `tau0`.
    pub tau0_face: usize,
    /// Minimum of `gamma + div(beta)/2` over element quadrature points.
    pub mu0: f64,
    pub alpha0: f64,
}

#[derive(Clone, Debug)]
pub struct CondensedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub layout: TraceLayout,
    pub report: PenaltyReport,
    pub(crate) recovery: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub(crate) element_offsets: Vec<usize>,
}

impl CondensedSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Interior unknowns of all elements from a full trace vector.
    pub fn recover(&self, mesh: &Mesh, trace: &[f64]) -> Vec<f64> {
        let k1 = self.layout.face_dim;
        let n = self.element_offsets.last().copied().unwrap_or(0)
            + self.recovery.last().map_or(0, |r| r.0.len());
        let mut u = vec![0.0; n];
        for (e, (x_f, x_t)) in self.recovery.iter().enumerate() {
            let el = &mesh.elements[e];
            let t = DVector::from_iterator(
                el.faces.len() * k1,
                el.faces
                    .iter()
                    .flat_map(|&f| trace[f * k1..(f + 1) * k1].iter().copied()),
            );
            let ue = x_f - x_t * t;
            let o = self.element_offsets[e];
            u[o..o + ue.len()].copy_from_slice(ue.as_slice());
        }
        u
    }
}

/// Uncondensed system over `(U, T_free)`: element unknowns first, then the
/// skeleton unknowns in [`TraceLayout`] order.
#[derive(Clone, Debug)]
pub struct FullSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_element_dofs: usize,
    pub layout: TraceLayout,
}

struct ShapeTables {
    rule: quadrature::Rule2D,
    basis: BasisEval,
    /// `face[edge][aligned]`: element basis at the face rule points.
    face: Vec<[BasisEval; 2]>,
}

/// Per-point data of one element face.
struct SideData {
    fp: FacePoints,
    bn: Vec<f64>,
    tau: Vec<f64>,
    /// `kappa n`.
    kn: Vec<Point>,
    /// Physical gradients `grads[q][i]`.
    grads: Vec<Vec<Point>>,
}

/// Assembles the discrete problem for one mesh, space, problem and penalty
/// configuration.
pub struct Assembler<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a FeSpace,
    pub problem: &'a ProblemSpec,
    pub config: StabilizationConfig,
    alpha0: f64,
    mu0: f64,
    face_rule: quadrature::Rule1D,
    psi: Vec<Vec<f64>>,
    tables: [Option<ShapeTables>; 2],
    layout: TraceLayout,
}

fn shape_slot(s: Shape) -> usize {
    match s {
        Shape::Tri => 0,
        Shape::Quad => 1,
    }
}

impl<'a> Assembler<'a> {
    pub fn new(
        mesh: &'a Mesh,
        space: &'a FeSpace,
        problem: &'a ProblemSpec,
        config: &StabilizationConfig,
    ) -> Result<Self> {
        if !mesh.is_classified() {
            return Err(Error::InvalidArgument("mesh is not classified".into()));
        }
        let eta0 = mesh.max_faces_per_element();
        config.validate(eta0)?;
        let coeff = problem.check_coefficients(mesh, space.exactness)?;
        let k = space.k;
        let face_rule = space.face_rule();
        let psi = face_rule.points.iter().map(|&s| basis::face_basis(k, s)).collect();
        let mut tables: [Option<ShapeTables>; 2] = [None, None];
        for shape in mesh.shapes() {
            let rule = space.element_rule(shape);
            let b = basis::eval_basis(shape, k, &rule.points)?;
            let mut face = Vec::new();
            for edge in 0..shape.n_vertices() {
                let pts = |aligned: bool| -> Vec<Point> {
                    face_rule
                        .points
                        .iter()
                        .map(|&s| {
                            let t = if aligned { 0.5 * (1.0 + s) } else { 0.5 * (1.0 - s) };
                            shape.edge_point(edge, t)
                        })
                        .collect()
                };
                face.push([
                    basis::eval_basis(shape, k, &pts(false))?,
                    basis::eval_basis(shape, k, &pts(true))?,
                ]);
            }
            tables[shape_slot(shape)] = Some(ShapeTables { rule, basis: b, face });
        }
        let mut asm = Assembler {
            mesh,
            space,
            problem,
            config: *config,
            alpha0: config.alpha0_for(eta0),
            mu0: coeff.mu0,
            face_rule,
            psi,
            tables,
            layout: TraceLayout {
                kind: Vec::new(),
                fixed: Vec::new(),
                n_unknowns: 0,
                face_dim: k + 1,
            },
        };
        asm.layout = asm.build_layout()?;
        Ok(asm)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn layout(&self) -> &TraceLayout {
        &self.layout
    }

    fn build_layout(&self) -> Result<TraceLayout> {
        let k1 = self.space.face_dim();
        let mut kind = Vec::with_capacity(self.mesh.n_faces());
        let mut fixed = vec![0.0; self.space.n_trace_dofs()];
        let mut next = 0;
        for f in 0..self.mesh.n_faces() {
            if self.space.is_constrained(f) {
                let c = self.space.project_dirichlet(self.mesh, f, |x, r| (self.problem.dirichlet)(x, r));
                fixed[f * k1..(f + 1) * k1].copy_from_slice(&c);
                kind.push(TraceKind::Dirichlet);
            } else if self.is_inactive(f)? {
                kind.push(TraceKind::Inactive);
            } else {
                kind.push(TraceKind::Free(next));
                next += k1;
            }
        }
        Ok(TraceLayout {
            kind,
            fixed,
            n_unknowns: next,
            face_dim: k1,
        })
    }

    /// A face is inactive when every side is hyperbolic and the flow is
    /// tangential at every quadrature point, so no penalty or flux acts on it.
    fn is_inactive(&self, f: usize) -> Result<bool> {
        let face = &self.mesh.faces[f];
        for side in 0..face.sides.len() {
            let e = face.sides[side].element;
            let region = self.mesh.elements[e].region;
            if region == Region::Elliptic {
                return Ok(false);
            }
            let fp = face_points(self.mesh, f, side, &self.face_rule);
            for (x, n) in fp.x.iter().zip(&fp.normal) {
                self.problem.check_domain(*x)?;
                if !flux_sign(self.problem.beta_at(*x, region), *n).1 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn tables(&self, shape: Shape) -> &ShapeTables {
        self.tables[shape_slot(shape)]
            .as_ref()
            .expect("tables built for every mesh shape")
    }

    fn side_data(&self, e: usize, local: usize, h: f64, ctr2: f64) -> Result<SideData> {
        let el = &self.mesh.elements[e];
        let f = el.faces[local];
        let side = self.mesh.faces[f]
            .sides
            .iter()
            .position(|s| s.element == e && s.local == local)
            .expect("face lists its element");
        let aligned = self.mesh.faces[f].sides[side].aligned;
        let fp = face_points(self.mesh, f, side, &self.face_rule);
        let fb = &self.tables(el.shape).face[local][aligned as usize];
        let nq = fp.x.len();
        let unpenalized_outflow = el.region == Region::Hyperbolic
            && self.mesh.faces[f].interface == InterfaceTag::IMinus
            && !self.config.penalize_interface_outflow;
        let mut d = SideData {
            bn: Vec::with_capacity(nq),
            tau: Vec::with_capacity(nq),
            kn: Vec::with_capacity(nq),
            grads: Vec::with_capacity(nq),
            fp,
        };
        for q in 0..nq {
            let (x, n) = (d.fp.x[q], d.fp.normal[q]);
            let kappa: Tensor = self.problem.kappa_at(x, el.region);
            let kn = [
                kappa[0][0] * n[0] + kappa[0][1] * n[1],
                kappa[1][0] * n[0] + kappa[1][1] * n[1],
            ];
            let (bn, _) = flux_sign(self.problem.beta_at(x, el.region), n);
            let tk = tau_kappa(self.alpha0, ctr2, dot(n, kn), h)?;
            let tau = if unpenalized_outflow {
                0.0
            } else {
                tau_total(el.region, tk, bn, &self.config)?
            };
            let jit = inv_transpose(&d.fp.jacobian[q]);
            d.grads
                .push(fb.grads[q].iter().map(|&g| mat_vec(&jit, g)).collect());
            d.bn.push(bn);
            d.tau.push(tau);
            d.kn.push(kn);
        }
        Ok(d)
    }

    fn face_basis_of(&self, e: usize, local: usize) -> &BasisEval {
        let el = &self.mesh.elements[e];
        let f = el.faces[local];
        let aligned = self.mesh.faces[f]
            .sides
            .iter()
            .find(|s| s.element == e && s.local == local)
            .expect("face lists its element")
            .aligned;
        &self.tables(el.shape).face[local][aligned as usize]
    }

    /// Element blocks together with the smallest `tau + beta.n/2` seen on the
    /// element's faces and the face attaining it.
    fn blocks_with_margin(&self, e: usize) -> Result<(LocalBlocks, f64, usize)> {
        let mesh = self.mesh;
        let el = &mesh.elements[e];
        let region = el.region;
        let t = self.tables(el.shape);
        let map = mesh.element_map(e);
        let nu = self.space.element_dim(e);
        let k1 = self.space.face_dim();
        let nt = el.faces.len() * k1;
        let eps = self.config.epsilon();
        let p = self.problem;

        let mut a_uu = DMatrix::zeros(nu, nu);
        let mut a_ut = DMatrix::zeros(nu, nt);
        let mut a_tu = DMatrix::zeros(nt, nu);
        let mut a_tt = DMatrix::zeros(nt, nt);
        let mut f_u = DVector::zeros(nu);
        let f_t = DVector::zeros(nt);

        let mut g = vec![[0.0; 2]; nu];
        let mut kg = vec![[0.0; 2]; nu];
        for q in 0..t.rule.len() {
            let (x, jac) = map.map(t.rule.points[q]);
            let dj = det(&jac);
            if dj <= 0.0 {
                return Err(Error::LocalSolvability {
                    element: e,
                    reason: "element map is not orientation preserving".into(),
                });
            }
            p.check_domain(x)?;
            let w = t.rule.weights[q] * dj;
            let jit = inv_transpose(&jac);
            let kappa = p.kappa_at(x, region);
            let beta = p.beta_at(x, region);
            let gamma = (p.gamma)(x, region);
            let src = (p.source)(x, region);
            let phi = &t.basis.values[q];
            for i in 0..nu {
                g[i] = mat_vec(&jit, t.basis.grads[q][i]);
                kg[i] = mat_vec(&kappa, g[i]);
            }
            for i in 0..nu {
                let bgi = dot(beta, g[i]);
                for j in 0..nu {
                    a_uu[(i, j)] += w * (dot(kg[j], g[i]) - phi[j] * bgi + gamma * phi[j] * phi[i]);
                }
                f_u[i] += w * src * phi[i];
            }
        }

        let h = mesh.diameter(e);
        let ctr2 = trace_constant_sq(mesh, e, self.space.k);
        let mut margin = f64::INFINITY;
        let mut margin_face = el.faces[0];
        for local in 0..el.faces.len() {
            let f = el.faces[local];
            let outflow_bc = mesh.faces[f].boundary == Some(BoundaryTag::GammaPlus);
            let sd = self.side_data(e, local, h, ctr2)?;
            let fb = self.face_basis_of(e, local);
            let o = local * k1;
            for q in 0..sd.fp.x.len() {
                let w = sd.fp.weight[q];
                let (bn, tau) = (sd.bn[q], sd.tau[q]);
                if tau + 0.5 * bn < margin {
                    margin = tau + 0.5 * bn;
                    margin_face = f;
                }
                let phi = &fb.values[q];
                let psi = &self.psi[q];
                let dn: Vec<f64> = sd.grads[q].iter().map(|&gi| dot(gi, sd.kn[q])).collect();
                for i in 0..nu {
                    for j in 0..nu {
                        a_uu[(i, j)] += w
                            * (-dn[j] * phi[i] - eps * dn[i] * phi[j] + (bn + tau) * phi[j] * phi[i]);
                    }
                    for m in 0..k1 {
                        a_ut[(i, o + m)] += w * (eps * dn[i] - tau * phi[i]) * psi[m];
                    }
                }
                for m in 0..k1 {
                    for j in 0..nu {
                        a_tu[(o + m, j)] += w * (dn[j] - (bn + tau) * phi[j]) * psi[m];
                    }
                    let diag = if outflow_bc { tau + bn } else { tau };
                    for l in 0..k1 {
                        a_tt[(o + m, o + l)] += w * diag * psi[m] * psi[l];
                    }
                }
            }
        }
        Ok((
            LocalBlocks {
                a_uu,
                a_ut,
                a_tu,
                a_tt,
                f_u,
                f_t,
            },
            margin,
            margin_face,
        ))
    }

    pub fn local_blocks(&self, e: usize) -> Result<LocalBlocks> {
        self.blocks_with_margin(e).map(|(b, _, _)| b)
    }

    /// Local trace values of element `e` taken from a full trace vector.
    fn local_trace(&self, e: usize, trace: &[f64]) -> DVector<f64> {
        let k1 = self.space.face_dim();
        let el = &self.mesh.elements[e];
        DVector::from_iterator(
            el.faces.len() * k1,
            el.faces
                .iter()
                .flat_map(|&f| trace[f * k1..(f + 1) * k1].iter().copied()),
        )
    }

    fn local_index(&self, e: usize) -> Vec<Option<usize>> {
        let k1 = self.space.face_dim();
        self.mesh.elements[e]
            .faces
            .iter()
            .flat_map(|&f| (0..k1).map(move |m| (f, m)))
            .map(|(f, m)| self.layout.system_index(f, m))
            .collect()
    }

    fn margin_report(&self, margins: impl Iterator<Item = (f64, usize)>) -> Result<PenaltyReport> {
        let (tau0, face) = margins.fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
        if tau0 < 0.0 {
            return Err(Error::Configuration(format!(
                "penalty margin tau + beta.n/2 = {tau0:.3e} < 0 on face {face}"
            )));
        }
        Ok(PenaltyReport {
            tau0,
            tau0_face: face,
            mu0: self.mu0,
            alpha0: self.alpha0,
        })
    }

    fn collect<T: Send>(&self, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        let results: Vec<Result<T>> = (0..self.mesh.n_elements()).into_par_iter().map(f).collect();
        let failed = results.iter().filter(|r| r.is_err()).count();
        if failed > 0 {
            let first = results.into_iter().find_map(|r| r.err()).unwrap();
            return Err(Error::Assembly {
                failed,
                first: Box::new(first),
            });
        }
        Ok(results.into_iter().map(|r| r.ok().unwrap()).collect())
    }

    /// Condensed skeleton system.
    pub fn assemble(&self) -> Result<CondensedSystem> {
        let fixed = &self.layout.fixed;
        let parts = self.collect(|e| {
            let (blocks, margin, face) = self.blocks_with_margin(e)?;
            let c = condense(&blocks).map_err(|err| match err {
                Error::LocalSolvability { reason, .. } => Error::LocalSolvability { element: e, reason },
                other => other,
            })?;
            Ok((c, margin, face))
        })?;
        let report = self.margin_report(parts.iter().map(|p| (p.1, p.2)))?;

        let n = self.layout.n_unknowns;
        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; n];
        let mut recovery = Vec::with_capacity(parts.len());
        for (e, (c, _, _)) in parts.into_iter().enumerate() {
            let idx = self.local_index(e);
            let tloc = self.local_trace(e, fixed);
            for (r, ir) in idx.iter().enumerate() {
                let Some(ir) = *ir else { continue };
                let mut g = c.g[r];
                for (col, ic) in idx.iter().enumerate() {
                    match *ic {
                        Some(ic) => triplets.push((ir, ic, c.s[(r, col)])),
                        None => g -= c.s[(r, col)] * tloc[col],
                    }
                }
                rhs[ir] += g;
            }
            recovery.push((c.x_f, c.x_t));
        }
        Ok(CondensedSystem {
            matrix: CsrMatrix::from_triplets(n, n, &triplets),
            rhs,
            layout: self.layout.clone(),
            report,
            recovery,
            element_offsets: (0..self.mesh.n_elements())
                .map(|e| self.space.element_offset(e))
                .collect(),
        })
    }

    /// Coupled system before elimination of the interior unknowns.
    pub fn assemble_full(&self) -> Result<FullSystem> {
        let fixed = &self.layout.fixed;
        let parts = self.collect(|e| self.blocks_with_margin(e))?;
        self.margin_report(parts.iter().map(|p| (p.1, p.2)))?;
        let nu_all = self.space.n_element_dofs();
        let n = nu_all + self.layout.n_unknowns;
        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; n];
        for (e, (b, _, _)) in parts.into_iter().enumerate() {
            let ou = self.space.element_offset(e);
            let nu = b.f_u.len();
            let idx: Vec<Option<usize>> = self.local_index(e).into_iter().map(|i| i.map(|i| i + nu_all)).collect();
            let tloc = self.local_trace(e, fixed);
            for i in 0..nu {
                let mut r = b.f_u[i];
                for j in 0..nu {
                    triplets.push((ou + i, ou + j, b.a_uu[(i, j)]));
                }
                for (c, ic) in idx.iter().enumerate() {
                    match *ic {
                        Some(ic) => triplets.push((ou + i, ic, b.a_ut[(i, c)])),
                        None => r -= b.a_ut[(i, c)] * tloc[c],
                    }
                }
                rhs[ou + i] += r;
            }
            for (m, im) in idx.iter().enumerate() {
                let Some(im) = *im else { continue };
                let mut r = b.f_t[m];
                for j in 0..nu {
                    triplets.push((im, ou + j, b.a_tu[(m, j)]));
                }
                for (c, ic) in idx.iter().enumerate() {
                    match *ic {
                        Some(ic) => triplets.push((im, ic, b.a_tt[(m, c)])),
                        None => r -= b.a_tt[(m, c)] * tloc[c],
                    }
                }
                rhs[im] += r;
            }
        }
        Ok(FullSystem {
            matrix: CsrMatrix::from_triplets(n, n, &triplets),
            rhs,
            n_element_dofs: nu_all,
            layout: self.layout.clone(),
        })
    }

    /// `a_h(v, w)` for composite functions given by element coefficients and
    /// full trace vectors.
    pub fn bilinear_form(&self, v_u: &[f64], v_t: &[f64], w_u: &[f64], w_t: &[f64]) -> Result<f64> {
        let parts = self.collect(|e| {
            let b = self.local_blocks(e)?;
            let o = self.space.element_offset(e);
            let nu = b.f_u.len();
            let vu = DVector::from_column_slice(&v_u[o..o + nu]);
            let wu = DVector::from_column_slice(&w_u[o..o + nu]);
            let vt = self.local_trace(e, v_t);
            let wt = self.local_trace(e, w_t);
            Ok(wu.dot(&(&b.a_uu * &vu + &b.a_ut * &vt)) + wt.dot(&(&b.a_tu * &vu + &b.a_tt * &vt)))
        })?;
        Ok(parts.iter().sum())
    }

    /// Penalty and reaction margins without assembling.
    pub fn penalty_report(&self) -> Result<PenaltyReport> {
        let parts = self.collect(|e| self.blocks_with_margin(e).map(|(_, m, f)| (m, f)))?;
        self.margin_report(parts.into_iter())
    }

    /// Per-side penalties `tau` at the face rule points of local face `local`
    /// of element `e`, with the outward `beta.n` values.
    pub fn side_penalties(&self, e: usize, local: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let h = self.mesh.diameter(e);
        let ctr2 = trace_constant_sq(self.mesh, e, self.space.k);
        let sd = self.side_data(e, local, h, ctr2)?;
        Ok((sd.tau, sd.bn))
    }
}

/// Condensed skeleton system for the given discretization.
pub fn assemble(
    mesh: &Mesh,
    space: &FeSpace,
    problem: &ProblemSpec,
    config: &StabilizationConfig,
) -> Result<CondensedSystem> {
    Assembler::new(mesh, space, problem, config)?.assemble()
}

/// Uncondensed coupled system, used to verify condensation.
pub fn assemble_full(
    mesh: &Mesh,
    space: &FeSpace,
    problem: &ProblemSpec,
    config: &StabilizationConfig,
) -> Result<FullSystem> {
    Assembler::new(mesh, space, problem, config)?.assemble_full()
}
