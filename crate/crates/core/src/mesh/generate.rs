use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::{Circle, ElementSpec, Mesh, Point, Region, Shape};
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
}

/// Structured `nx x ny` grid. Triangles split each cell along its
/// `(+1,+1)` diagonal. All elements are tagged elliptic.
pub fn generate_structured(nx: usize, ny: usize, bbox: Rect, shape: Shape) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid counts must be positive, got {nx} x {ny}"
        )));
    }
    let (w, h) = (bbox.x1 - bbox.x0, bbox.y1 - bbox.y0);
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "degenerate bounding box {bbox:?}"
        )));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                bbox.x0 + w * i as f64 / nx as f64,
                bbox.y0 + h * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let mut push = |vs: Vec<usize>, shape| {
                elements.push(ElementSpec {
                    shape,
                    vertices: vs,
                    region: Region::Elliptic,
                })
            };
            match shape {
                Shape::Quad => push(vec![v00, v10, v11, v01], Shape::Quad),
                Shape::Tri => {
                    push(vec![v00, v10, v11], Shape::Tri);
                    push(vec![v00, v11, v01], Shape::Tri);
                }
            }
        }
    }
    Mesh::new(vertices, elements, &[])
}

/// Square `[-1,1]^2` with the disk of radius 1/2 removed.
///
/// The ring is split into four blocks by the diagonals; each block carries
/// `n_angular` divisions along the hole and `n_radial` divisions outward.
/// `n_angular` must be even so that the lines `y = 0` (for `|x| >= 1/2`) and
/// `x = 0` are mesh lines. Elements above `y = 0` are tagged elliptic, those
/// below hyperbolic. Edges on the hole are curved onto the circle.
pub fn generate_annulus(n_angular: usize, n_radial: usize, shape: Shape) -> Result<Mesh> {
    if n_angular == 0 || n_angular % 2 != 0 || n_radial == 0 {
        return Err(Error::InvalidArgument(format!(
            "annulus needs even positive angular count and positive radial count, got {n_angular}, {n_radial}"
        )));
    }
    let hole = Circle {
        center: [0.0, 0.0],
        radius: 0.5,
    };
    let corners: [Point; 4] = [[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]];
    let ring = 4 * n_angular;
    let node = |ia: usize, j: usize| j * ring + (ia % ring);

    let mut vertices = Vec::with_capacity(ring * (n_radial + 1));
    for j in 0..=n_radial {
        for ia in 0..ring {
            let phi = -FRAC_PI_4 + ia as f64 * FRAC_PI_2 / n_angular as f64;
            let inner = [hole.radius * phi.cos(), hole.radius * phi.sin()];
            let b = ia / n_angular;
            let s = (ia - b * n_angular) as f64 / n_angular as f64;
            let (c0, c1) = (corners[b], corners[(b + 1) % 4]);
            let outer = [c0[0] + s * (c1[0] - c0[0]), c0[1] + s * (c1[1] - c0[1])];
            let t = j as f64 / n_radial as f64;
            let mut p = [
                inner[0] + t * (outer[0] - inner[0]),
                inner[1] + t * (outer[1] - inner[1]),
            ];
            // keep symmetry lines exact
            for c in &mut p {
                if c.abs() < 1e-15 {
                    *c = 0.0;
                }
            }
            vertices.push(p);
        }
    }

    let mut elements = Vec::new();
    let mut curved = Vec::new();
    for j in 0..n_radial {
        for ia in 0..ring {
            let quad = [node(ia, j), node(ia + 1, j), node(ia + 1, j + 1), node(ia, j + 1)];
            let cy: f64 = quad.iter().map(|&v| vertices[v][1]).sum::<f64>();
            let region = if cy > 0.0 {
                Region::Elliptic
            } else {
                Region::Hyperbolic
            };
            match shape {
                Shape::Quad => elements.push(ElementSpec {
                    shape,
                    vertices: quad.to_vec(),
                    region,
                }),
                Shape::Tri => {
                    elements.push(ElementSpec {
                        shape,
                        vertices: vec![quad[0], quad[1], quad[2]],
                        region,
                    });
                    elements.push(ElementSpec {
                        shape,
                        vertices: vec![quad[0], quad[2], quad[3]],
                        region,
                    });
                }
            }
            if j == 0 {
                curved.push((quad[0], quad[1], hole));
            }
        }
    }
    Mesh::new(vertices, elements, &curved)
}
