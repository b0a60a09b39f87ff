//! Hybrid triangle/quadrilateral meshes with skeleton connectivity,
//! elliptic/hyperbolic region tags and inflow/outflow boundary classification.

pub(crate) mod classify;
mod generate;
pub mod geometry;
mod io;
mod refine;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::quadrature;

pub use classify::{classify_boundary, BETA_NORMAL_TOL};
pub use generate::{generate_annulus, generate_structured, Rect};
pub use geometry::{Circle, ElementMap, Point, Shape};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use refine::{refine_adaptive, refine_uniform};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Elliptic,
    Hyperbolic,
}

/// Fichera classification of a boundary face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Nondegenerate inflow: Dirichlet data imposed.
    GammaMinus,
    /// Degenerate outflow or no-flow.
    GammaPlus,
}

/// Classification of an interior face separating the two regions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterfaceTag {
    #[default]
    None,
    /// Flow crosses from the hyperbolic side into the elliptic side.
    IMinus,
    /// Flow leaves the elliptic side (or is tangential).
    IPlus,
}

#[derive(Clone, Debug)]
pub struct Element {
    pub shape: Shape,
    /// Counter-clockwise vertex indices.
    pub vertices: Vec<usize>,
    pub region: Region,
    /// Face index of each local edge.
    pub faces: Vec<usize>,
    /// Circle each local edge is bent onto, if any.
    pub arcs: Vec<Option<Circle>>,
    /// Number of refinement generations since the root mesh.
    pub level: u32,
}

/// One side of a face: the element and the local edge index it appears as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub local: usize,
    /// True when the element traverses the edge from `vertices[0]` to `vertices[1]`.
    pub aligned: bool,
}

#[derive(Clone, Debug)]
pub struct Face {
    /// Endpoints, sorted ascending. The face parameter runs from the first to the second.
    pub vertices: [usize; 2],
    pub arc: Option<Circle>,
    pub sides: Vec<FaceSide>,
    pub boundary: Option<BoundaryTag>,
    pub interface: InterfaceTag,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.sides.len() == 1
    }
}

/// Element description used to build a [`Mesh`].
#[derive(Clone, Debug, PartialEq)]
pub struct ElementSpec {
    pub shape: Shape,
    pub vertices: Vec<usize>,
    pub region: Region,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
}

impl Mesh {
    /// Build a mesh from vertex coordinates and element vertex lists.
    ///
    /// `curved` lists `(v0, v1, circle)` edges that follow a circle.
    /// Clockwise elements are reoriented. Duplicate elements, faces shared by
    /// more than two elements and hanging vertices are rejected.
    pub fn new(
        vertices: Vec<Point>,
        elements: Vec<ElementSpec>,
        curved: &[(usize, usize, Circle)],
    ) -> Result<Self> {
        Self::build(vertices, elements.into_iter().map(|e| (e, 0)).collect(), curved)
    }

    pub(crate) fn build(
        vertices: Vec<Point>,
        elements: Vec<(ElementSpec, u32)>,
        curved: &[(usize, usize, Circle)],
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Validation("mesh has no elements".into()));
        }
        let arc_of: HashMap<[usize; 2], Circle> = curved
            .iter()
            .map(|&(a, b, c)| ([a.min(b), a.max(b)], c))
            .collect();

        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut elems = Vec::with_capacity(elements.len());
        for (idx, (spec, level)) in elements.into_iter().enumerate() {
            let ElementSpec {
                shape,
                vertices: mut vs,
                region,
            } = spec;
            if vs.len() != shape.n_vertices() {
                return Err(Error::Validation(format!(
                    "element {idx}: {:?} needs {} vertices, got {}",
                    shape,
                    shape.n_vertices(),
                    vs.len()
                )));
            }
            if let Some(&v) = vs.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Validation(format!(
                    "element {idx}: vertex {v} out of range"
                )));
            }
            let mut key = vs.clone();
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!(
                    "element {idx}: repeated vertex"
                )));
            }
            if let Some(prev) = seen.insert(key, idx) {
                return Err(Error::Validation(format!(
                    "element {idx} duplicates element {prev}"
                )));
            }
            if signed_area(&vertices, &vs) < 0.0 {
                vs.reverse();
            }
            let n = vs.len();
            let arcs = (0..n)
                .map(|j| {
                    let (a, b) = (vs[j], vs[(j + 1) % n]);
                    arc_of.get(&[a.min(b), a.max(b)]).copied()
                })
                .collect();
            elems.push(Element {
                shape,
                vertices: vs,
                region,
                faces: vec![usize::MAX; n],
                arcs,
                level,
            });
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut face_of: HashMap<[usize; 2], usize> = HashMap::new();
        for (e, el) in elems.iter_mut().enumerate() {
            let n = el.vertices.len();
            for j in 0..n {
                let (a, b) = (el.vertices[j], el.vertices[(j + 1) % n]);
                let key = [a.min(b), a.max(b)];
                let side = FaceSide {
                    element: e,
                    local: j,
                    aligned: a < b,
                };
                let f = *face_of.entry(key).or_insert_with(|| {
                    faces.push(Face {
                        vertices: key,
                        arc: arc_of.get(&key).copied(),
                        sides: Vec::with_capacity(2),
                        boundary: None,
                        interface: InterfaceTag::None,
                    });
                    faces.len() - 1
                });
                if faces[f].sides.len() == 2 {
                    return Err(Error::Validation(format!(
                        "face {:?} is shared by more than two elements",
                        key
                    )));
                }
                if let Some(other) = faces[f].sides.first() {
                    if other.aligned == side.aligned {
                        return Err(Error::Validation(format!(
                            "elements {} and {e} traverse face {:?} in the same direction",
                            other.element, key
                        )));
                    }
                }
                faces[f].sides.push(side);
                el.faces[j] = f;
            }
        }

        let mesh = Mesh {
            vertices,
            elements: elems,
            faces,
        };
        mesh.check_hanging_vertices()?;
        Ok(mesh)
    }

    /// A vertex lying strictly inside a straight boundary face signals a
    /// non-conforming (hanging) vertex.
    fn check_hanging_vertices(&self) -> Result<()> {
        let used: Vec<usize> = {
            let mut u: Vec<usize> = self
                .elements
                .iter()
                .flat_map(|e| e.vertices.iter().copied())
                .collect();
            u.sort_unstable();
            u.dedup();
            u
        };
        for face in self.faces.iter().filter(|f| f.is_boundary() && f.arc.is_none()) {
            let a = self.vertices[face.vertices[0]];
            let b = self.vertices[face.vertices[1]];
            let d = geometry::sub(b, a);
            let len2 = geometry::dot(d, d);
            let (lo_x, hi_x) = (a[0].min(b[0]), a[0].max(b[0]));
            let (lo_y, hi_y) = (a[1].min(b[1]), a[1].max(b[1]));
            let tol = 1e-10 * len2.sqrt();
            for &v in &used {
                if v == face.vertices[0] || v == face.vertices[1] {
                    continue;
                }
                let p = self.vertices[v];
                if p[0] < lo_x - tol || p[0] > hi_x + tol || p[1] < lo_y - tol || p[1] > hi_y + tol
                {
                    continue;
                }
                let w = geometry::sub(p, a);
                let t = geometry::dot(w, d) / len2;
                let cross = (w[0] * d[1] - w[1] * d[0]).abs() / len2.sqrt();
                if t > 1e-10 && t < 1.0 - 1e-10 && cross <= tol {
                    return Err(Error::Validation(format!(
                        "hanging vertex {v} on face {:?}",
                        face.vertices
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.len() - self.n_boundary_faces()
    }

    pub fn element_map(&self, e: usize) -> ElementMap {
        let el = &self.elements[e];
        let pts: Vec<Point> = el.vertices.iter().map(|&v| self.vertices[v]).collect();
        ElementMap::new(el.shape, &pts, &el.arcs)
    }

    /// Element diameter: largest vertex-to-vertex distance.
    pub fn diameter(&self, e: usize) -> f64 {
        let vs = &self.elements[e].vertices;
        let mut h: f64 = 0.0;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                h = h.max(geometry::dist(self.vertices[vs[i]], self.vertices[vs[j]]));
            }
        }
        h
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.diameter(e))
            .fold(0.0, f64::max)
    }

    /// Element area, integrated through the element map.
    pub fn area(&self, e: usize) -> f64 {
        let map = self.element_map(e);
        let order = if map.is_curved() { 12 } else { 2 };
        let rule = quadrature::element_rule(map.shape(), order).expect("low order rule");
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(&p, &w)| w * geometry::det(&map.map(p).1))
            .sum()
    }

    /// Length of a face (arc length for curved faces).
    pub fn face_length(&self, f: usize) -> f64 {
        let face = &self.faces[f];
        let a = self.vertices[face.vertices[0]];
        let b = self.vertices[face.vertices[1]];
        match face.arc {
            None => geometry::dist(a, b),
            Some(c) => {
                let arc = geometry::ArcEdge::new(&c, a, b);
                let rule = quadrature::gauss_legendre(8);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&s, &w)| 0.5 * w * geometry::norm(arc.eval(0.5 * (1.0 + s)).1))
                    .sum()
            }
        }
    }

    /// Physical midpoint of a face (arc midpoint for curved faces).
    pub fn face_midpoint(&self, f: usize) -> Point {
        let face = &self.faces[f];
        let a = self.vertices[face.vertices[0]];
        let b = self.vertices[face.vertices[1]];
        match face.arc {
            None => [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
            Some(c) => geometry::ArcEdge::new(&c, a, b).eval(0.5).0,
        }
    }

    pub fn centroid(&self, e: usize) -> Point {
        let vs = &self.elements[e].vertices;
        let n = vs.len() as f64;
        let mut c = [0.0; 2];
        for &v in vs {
            c[0] += self.vertices[v][0] / n;
            c[1] += self.vertices[v][1] / n;
        }
        c
    }

    /// Largest number of faces per element.
    pub fn max_faces_per_element(&self) -> usize {
        self.elements.iter().map(|e| e.faces.len()).max().unwrap_or(0)
    }

    pub fn is_classified(&self) -> bool {
        self.faces
            .iter()
            .all(|f| !f.is_boundary() || f.boundary.is_some())
    }

    pub fn shapes(&self) -> Vec<Shape> {
        let mut s: Vec<Shape> = self.elements.iter().map(|e| e.shape).collect();
        s.sort_by_key(|s| *s as u8);
        s.dedup();
        s
    }

    /// Checks structural invariants: face/element reciprocity and opposite
    /// orientation on interior faces.
    pub fn validate(&self) -> Result<()> {
        for (f, face) in self.faces.iter().enumerate() {
            if face.sides.is_empty() || face.sides.len() > 2 {
                return Err(Error::Validation(format!(
                    "face {f} has {} sides",
                    face.sides.len()
                )));
            }
            for s in &face.sides {
                let el = &self.elements[s.element];
                if el.faces.iter().filter(|&&g| g == f).count() != 1 || el.faces[s.local] != f {
                    return Err(Error::Validation(format!(
                        "face {f} and element {} disagree",
                        s.element
                    )));
                }
            }
            if face.sides.len() == 2 && face.sides[0].aligned == face.sides[1].aligned {
                return Err(Error::Validation(format!("face {f} orientation")));
            }
        }
        for e in 0..self.n_elements() {
            if self.area(e) <= 0.0 || self.diameter(e) <= 0.0 {
                return Err(Error::Validation(format!("element {e} is degenerate")));
            }
        }
        Ok(())
    }
}

fn signed_area(vertices: &[Point], vs: &[usize]) -> f64 {
    let n = vs.len();
    (0..n)
        .map(|j| {
            let a = vertices[vs[j]];
            let b = vertices[vs[(j + 1) % n]];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![
                ElementSpec {
                    shape: Shape::Tri,
                    vertices: vec![0, 1, 2],
                    region: Region::Elliptic,
                },
                ElementSpec {
                    shape: Shape::Tri,
                    vertices: vec![0, 3, 2],
                    region: Region::Elliptic,
                },
            ],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn two_triangle_square_has_five_faces() {
        let m = two_triangles();
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.n_faces(), 5);
        assert_eq!(m.n_interior_faces(), 1);
        m.validate().unwrap();
        // clockwise input got reoriented
        assert!((m.area(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicate_element_is_rejected() {
        let r = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![
                ElementSpec {
                    shape: Shape::Tri,
                    vertices: vec![0, 1, 2],
                    region: Region::Elliptic,
                },
                ElementSpec {
                    shape: Shape::Tri,
                    vertices: vec![1, 2, 0],
                    region: Region::Elliptic,
                },
            ],
            &[],
        );
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn hanging_vertex_is_rejected() {
        // a quad next to two triangles that split its right edge
        let r = Mesh::new(
            vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [0.0, 1.0],
                [1.0, 0.5],
                [2.0, 0.5],
            ],
            vec![
                ElementSpec {
                    shape: Shape::Quad,
                    vertices: vec![0, 1, 2, 3],
                    region: Region::Elliptic,
                },
                ElementSpec {
                    shape: Shape::Tri,
                    vertices: vec![1, 5, 4],
                    region: Region::Elliptic,
                },
                ElementSpec {
                    shape: Shape::Tri,
                    vertices: vec![4, 5, 2],
                    region: Region::Elliptic,
                },
            ],
            &[],
        );
        assert!(matches!(r, Err(Error::Validation(m)) if m.contains("hanging")));
    }

    #[test]
    fn interior_normals_are_opposite() {
        let m = two_triangles();
        let f = m.faces.iter().position(|f| !f.is_boundary()).unwrap();
        let sides = &m.faces[f].sides;
        assert_ne!(sides[0].aligned, sides[1].aligned);
    }
}
