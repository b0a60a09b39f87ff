//! Legacy-VTK ASCII output of the discrete solution.
//!
//! Each element is sampled on its own lattice with `max(k,1)` subdivisions per
//! edge (so `k+1` points per edge), giving a discontinuous field. Point data:
//! `u_h`, and when an exact solution exists, `u_exact` and `abs_error`. Cell
//! data: region (0 elliptic, 1 hyperbolic), parent element id and, with an
//! exact solution, the element `L2` error density `||u - u_h||_E / |E|^1/2`.

use std::fmt::Write as _;
use std::path::Path;

use super::{element_l2_errors_sq, eval_element};
use crate::error::{Error, Result};
use crate::fespace::FeSpace;
use crate::mesh::{Mesh, Point, Region, Shape};
use crate::model::ProblemSpec;

const VTK_TRIANGLE: u8 = 5;
const VTK_QUAD: u8 = 9;

/// Sample lattice of one element: reference points and sub-cells.
fn lattice(shape: Shape, n: usize) -> (Vec<Point>, Vec<Vec<usize>>) {
    let nf = n as f64;
    let mut pts = Vec::new();
    let mut cells = Vec::new();
    match shape {
        Shape::Quad => {
            for j in 0..=n {
                for i in 0..=n {
                    pts.push([-1.0 + 2.0 * i as f64 / nf, -1.0 + 2.0 * j as f64 / nf]);
                }
            }
            let id = |i: usize, j: usize| j * (n + 1) + i;
            for j in 0..n {
                for i in 0..n {
                    cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
        }
        Shape::Tri => {
            let mut index = vec![vec![0usize; n + 1]; n + 1];
            for j in 0..=n {
                for i in 0..=n - j {
                    index[j][i] = pts.len();
                    pts.push([i as f64 / nf, j as f64 / nf]);
                }
            }
            for j in 0..n {
                for i in 0..n - j {
                    cells.push(vec![index[j][i], index[j][i + 1], index[j + 1][i]]);
                    if i + j + 1 < n {
                        cells.push(vec![index[j][i + 1], index[j + 1][i + 1], index[j + 1][i]]);
                    }
                }
            }
        }
    }
    (pts, cells)
}

pub fn write_fields_string(
    mesh: &Mesh,
    space: &FeSpace,
    problem: Option<&ProblemSpec>,
    interior: &[f64],
) -> Result<String> {
    let n = space.k.max(1);
    let exact = problem.and_then(|p| p.exact.as_ref());
    let cell_err = match (problem, exact) {
        (Some(p), Some(_)) => Some(element_l2_errors_sq(mesh, space, p, interior)?),
        _ => None,
    };
    let mut points = Vec::new();
    let mut uh = Vec::new();
    let mut ue = Vec::new();
    let mut cells: Vec<(u8, Vec<usize>, usize)> = Vec::new();
    for e in 0..mesh.n_elements() {
        let el = &mesh.elements[e];
        let (refs, sub) = lattice(el.shape, n);
        let map = mesh.element_map(e);
        let base = points.len();
        let vals = eval_element(mesh, space, interior, e, &refs);
        for (xi, v) in refs.iter().zip(vals) {
            let (x, _) = map.map(*xi);
            if let Some(ex) = exact {
                ue.push((ex.value)(x, el.region));
            }
            points.push(x);
            uh.push(v);
        }
        let kind = match el.shape {
            Shape::Tri => VTK_TRIANGLE,
            Shape::Quad => VTK_QUAD,
        };
        for c in sub {
            cells.push((kind, c.into_iter().map(|i| base + i).collect(), e));
        }
    }

    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "hdg solution k={}", space.k);
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let size: usize = cells.iter().map(|c| c.1.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {}", cells.len(), size);
    for (_, c, _) in &cells {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", c.len(), ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for (t, _, _) in &cells {
        let _ = writeln!(s, "{t}");
    }
    let _ = writeln!(s, "CELL_DATA {}", cells.len());
    let _ = writeln!(s, "SCALARS region int 1\nLOOKUP_TABLE default");
    for (_, _, e) in &cells {
        let r = match mesh.elements[*e].region {
            Region::Elliptic => 0,
            Region::Hyperbolic => 1,
        };
        let _ = writeln!(s, "{r}");
    }
    let _ = writeln!(s, "SCALARS element int 1\nLOOKUP_TABLE default");
    for (_, _, e) in &cells {
        let _ = writeln!(s, "{e}");
    }
    if let Some(err) = &cell_err {
        let _ = writeln!(s, "SCALARS l2_error_density double 1\nLOOKUP_TABLE default");
        for (_, _, e) in &cells {
            let _ = writeln!(s, "{:e}", (err[*e] / mesh.area(*e)).sqrt());
        }
    }
    let _ = writeln!(s, "POINT_DATA {}", points.len());
    let _ = writeln!(s, "SCALARS u_h double 1\nLOOKUP_TABLE default");
    for v in &uh {
        let _ = writeln!(s, "{v:e}");
    }
    if exact.is_some() {
        let _ = writeln!(s, "SCALARS u_exact double 1\nLOOKUP_TABLE default");
        for v in &ue {
            let _ = writeln!(s, "{v:e}");
        }
        let _ = writeln!(s, "SCALARS abs_error double 1\nLOOKUP_TABLE default");
        for (a, b) in uh.iter().zip(&ue) {
            let _ = writeln!(s, "{:e}", (a - b).abs());
        }
    }
    Ok(s)
}

/// Writes the solution as a legacy-VTK unstructured grid.
pub fn write_fields(
    mesh: &Mesh,
    space: &FeSpace,
    problem: Option<&ProblemSpec>,
    interior: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let s = write_fields_string(mesh, space, problem, interior)?;
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
