//! Skeleton solve (sparse LU or restarted GMRES with ILU(0)) and recovery of
//! the interior unknowns.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;
use serde::{Deserialize, Serialize};

use crate::assembly::{CondensedSystem, TraceKind};
use crate::error::{Error, Result};
use crate::fespace::{basis, face_points, FeSpace};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Relative residual target of the iterative solver.
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolverMethod::Direct,
            tol: 1e-10,
            restart: 60,
            max_iterations: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverReport {
    pub method: SolverMethod,
    pub iterations: usize,
    /// Final `||S x - G|| / ||G||` (absolute when `G = 0`).
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Trace coefficients over all faces (Dirichlet faces hold the datum).
    pub trace: Vec<f64>,
    /// Element coefficients.
    pub interior: Vec<f64>,
    pub report: SolverReport,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
}

fn relative(r: f64, b: f64) -> f64 {
    if b > 0.0 {
        r / b
    } else {
        r
    }
}

/// Sparse LU with partial pivoting followed by a few steps of iterative
/// refinement.
pub fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolverReport)> {
    let n = b.len();
    if n == 0 {
        return Ok((
            Vec::new(),
            SolverReport {
                method: SolverMethod::Direct,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let trip: Vec<Triplet<usize, usize, f64>> =
        a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Singular(format!("matrix construction failed: {e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut res = relative(norm(&r), bnorm);
    let mut steps = 0;
    for _ in 0..4 {
        let rc = Col::<f64>::from_fn(n, |i| r[i]);
        let dx = lu.solve(&rc);
        let cand: Vec<f64> = (0..n).map(|i| x[i] + dx[i]).collect();
        let rn = residual(a, &cand, b);
        let cres = relative(norm(&rn), bnorm);
        if !cres.is_finite() {
            return Err(Error::Singular("LU solve produced non-finite values".into()));
        }
        if steps > 0 && cres >= 0.5 * res {
            if cres < res {
                x = cand;
                res = cres;
            }
            break;
        }
        x = cand;
        r = rn;
        res = cres;
        steps += 1;
        if res < 1e-15 {
            break;
        }
    }
    Ok((
        x,
        SolverReport {
            method: SolverMethod::Direct,
            iterations: steps,
            residual: res,
        },
    ))
}

/// Incomplete LU factorization with the sparsity pattern of `a`.
struct Ilu0 {
    pattern: CsrMatrix,
    starts: Vec<usize>,
    diag: Vec<usize>,
    values: Vec<f64>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> Self {
        let n = a.n_rows();
        let mut values: Vec<f64> = a.triplets().map(|t| t.2).collect();
        let mut starts = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for r in 0..n {
            starts.push(acc);
            acc += a.row(r).0.len();
        }
        starts.push(acc);
        let diag: Vec<usize> = (0..n)
            .map(|r| a.row(r).0.binary_search(&r).map_or(usize::MAX, |p| starts[r] + p))
            .collect();
        // zero or missing pivots are replaced by a tiny multiple of the scale
        let floor = 1e-14 * values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let pivot = |values: &[f64], k: usize| {
            let d = if diag[k] == usize::MAX { 0.0 } else { values[diag[k]] };
            if d.abs() < floor {
                floor
            } else {
                d
            }
        };
        for i in 0..n {
            let (cols, _) = a.row(i);
            for (pk, &k) in cols.iter().enumerate() {
                if k >= i {
                    break;
                }
                let lik = values[starts[i] + pk] / pivot(&values, k);
                values[starts[i] + pk] = lik;
                let (kcols, _) = a.row(k);
                for (pj, &j) in cols.iter().enumerate().skip(pk + 1) {
                    if let Ok(q) = kcols.binary_search(&j) {
                        values[starts[i] + pj] -= lik * values[starts[k] + q];
                    }
                }
            }
        }
        for r in 0..n {
            if diag[r] != usize::MAX {
                values[diag[r]] = pivot(&values, r);
            }
        }
        Ilu0 {
            pattern: a.clone(),
            starts,
            diag,
            values,
        }
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let (cols, _) = self.pattern.row(i);
            for (p, &j) in cols.iter().enumerate() {
                if j >= i {
                    break;
                }
                y[i] -= self.values[self.starts[i] + p] * y[j];
            }
        }
        for i in (0..n).rev() {
            let (cols, _) = self.pattern.row(i);
            for (p, &j) in cols.iter().enumerate() {
                if j > i {
                    y[i] -= self.values[self.starts[i] + p] * y[j];
                }
            }
            if self.diag[i] != usize::MAX {
                y[i] /= self.values[self.diag[i]];
            }
        }
        y
    }
}

/// Restarted GMRES, right-preconditioned by ILU(0).
pub fn solve_gmres(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolverReport)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let report = |it, res| SolverReport {
        method: SolverMethod::Iterative,
        iterations: it,
        residual: res,
    };
    if n == 0 || bnorm == 0.0 {
        return Ok((x, report(0, 0.0)));
    }
    let m = Ilu0::new(a);
    let restart = opts.restart.max(1);
    let mut history = Vec::new();
    let mut it = 0;
    loop {
        let r = residual(a, &x, b);
        let beta = norm(&r);
        let rel = beta / bnorm;
        history.push(rel);
        if rel <= opts.tol {
            return Ok((x, report(it, rel)));
        }
        if it >= opts.max_iterations || !rel.is_finite() {
            return Err(Error::Convergence {
                iterations: it,
                residual: rel,
                history,
            });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            if it >= opts.max_iterations {
                break;
            }
            it += 1;
            let zj = m.apply(&v[j]);
            let mut w = a.mul_vec(&zj);
            z.push(zj);
            for i in 0..=j {
                let hij: f64 = w.iter().zip(&v[i]).map(|(a, b)| a * b).sum();
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let wn = norm(&w);
            h[j + 1][j] = wn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = h[j][j].hypot(h[j + 1][j]);
            if d == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            history.push(g[j + 1].abs() / bnorm);
            if g[j + 1].abs() / bnorm <= opts.tol || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wk| wk / wn).collect());
        }
        // back substitution
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z[k]) {
                *xi += yk * zi;
            }
        }
        if used == 0 {
            let rel = norm(&residual(a, &x, b)) / bnorm;
            return Err(Error::Convergence {
                iterations: it,
                residual: rel,
                history,
            });
        }
    }
}

pub fn solve_linear(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolverReport)> {
    match opts.method {
        SolverMethod::Direct => solve_direct(a, b),
        SolverMethod::Iterative => solve_gmres(a, b, opts),
    }
}

/// Solves the skeleton system, recovers the interior unknowns and fills the
/// traces of inactive faces with the projected mean of the adjacent element
/// traces.
pub fn solve(system: &CondensedSystem, mesh: &Mesh, space: &FeSpace, opts: &SolverOptions) -> Result<Solution> {
    let (x, report) = solve_linear(&system.matrix, &system.rhs, opts)?;
    let mut trace = system.layout.expand(&x);
    let interior = system.recover(mesh, &trace);
    if system.layout.n_inactive() > 0 {
        fill_inactive(system, mesh, space, &interior, &mut trace);
    }
    Ok(Solution {
        trace,
        interior,
        report,
    })
}

fn fill_inactive(system: &CondensedSystem, mesh: &Mesh, space: &FeSpace, interior: &[f64], trace: &mut [f64]) {
    let k1 = space.face_dim();
    let rule = space.face_rule();
    for (f, kind) in system.layout.kind.iter().enumerate() {
        if *kind != TraceKind::Inactive {
            continue;
        }
        let sides = mesh.faces[f].sides.len();
        let mut coef = vec![0.0; k1];
        for side in 0..sides {
            let e = mesh.faces[f].sides[side].element;
            let fp = face_points(mesh, f, side, &rule);
            let b = basis::eval_basis(mesh.elements[e].shape, space.k, &fp.xi).expect("degree validated");
            let o = space.element_offset(e);
            let nu = space.element_dim(e);
            let vals: Vec<f64> = (0..fp.xi.len())
                .map(|q| (0..nu).map(|i| interior[o + i] * b.values[q][i]).sum())
                .collect();
            let len: f64 = fp.weight.iter().sum();
            // orthonormal Legendre on [-1,1]: mass = |F|/2 I for constant speed
            for m in 0..k1 {
                let mut c = 0.0;
                for q in 0..fp.xi.len() {
                    c += fp.weight[q] * vals[q] * basis::face_basis(space.k, fp.s[q])[m];
                }
                coef[m] += c / (0.5 * len) / sides as f64;
            }
        }
        trace[f * k1..(f + 1) * k1].copy_from_slice(&coef);
    }
}
