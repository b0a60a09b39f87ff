//! Discrete spaces: the broken element space `V_h` (degree `k` per element)
//! and the skeleton trace space `M_h` (degree `k` per face), with trace
//! unknowns on inflow Dirichlet faces fixed by the boundary datum.

pub mod basis;
pub mod quadrature;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::geometry::{self, mat_vec, Jacobian};
use crate::mesh::{BoundaryTag, Mesh, Point, Region, Shape};
use quadrature::Rule1D;

pub use basis::{eval_basis, eval_nodal_basis, face_basis, BasisEval};

/// Quadrature data of one face seen from one adjacent element.
#[derive(Clone, Debug)]
pub struct FacePoints {
    /// Reference coordinates in the element.
    pub xi: Vec<Point>,
    /// Physical coordinates.
    pub x: Vec<Point>,
    /// Unit normal pointing out of the element.
    pub normal: Vec<Point>,
    /// Physical quadrature weights (include the arc-length factor).
    pub weight: Vec<f64>,
    /// Face parameter in `[-1,1]`, shared by both sides of the face.
    pub s: Vec<f64>,
    /// Element map Jacobian at each point.
    pub jacobian: Vec<Jacobian>,
}

/// Maps the face rule onto face `f` as seen from its side `side`.
pub fn face_points(mesh: &Mesh, f: usize, side: usize, rule: &Rule1D) -> FacePoints {
    let fs = mesh.faces[f].sides[side];
    let el = &mesh.elements[fs.element];
    let map = mesh.element_map(fs.element);
    let tref = el.shape.edge_tangent(fs.local);
    let n = rule.points.len();
    let mut out = FacePoints {
        xi: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        weight: Vec::with_capacity(n),
        s: rule.points.clone(),
        jacobian: Vec::with_capacity(n),
    };
    for (&s, &w) in rule.points.iter().zip(&rule.weights) {
        let t = if fs.aligned { 0.5 * (1.0 + s) } else { 0.5 * (1.0 - s) };
        let xi = el.shape.edge_point(fs.local, t);
        let (x, jac) = map.map(xi);
        let tan = mat_vec(&jac, tref);
        let len = geometry::norm(tan);
        out.xi.push(xi);
        out.x.push(x);
        out.normal.push([tan[1] / len, -tan[0] / len]);
        out.weight.push(0.5 * w * len);
        out.jacobian.push(jac);
    }
    out
}

/// Squared discrete trace constant of element `e` for degree `k`:
/// `c(k) max_F |F| h_E / |E|` with `c = (k+1)(k+2)/2` on triangles and
/// `(k+1)^2` on quadrilaterals.
pub fn trace_constant_sq(mesh: &Mesh, e: usize, k: usize) -> f64 {
    let el = &mesh.elements[e];
    let c = match el.shape {
        Shape::Tri => ((k + 1) * (k + 2)) as f64 / 2.0,
        Shape::Quad => ((k + 1) * (k + 1)) as f64,
    };
    let fmax = el
        .faces
        .iter()
        .map(|&f| mesh.face_length(f))
        .fold(0.0, f64::max);
    c * fmax * mesh.diameter(e) / mesh.area(e)
}

/// L2 projection of `datum` onto degree-`k` polynomials on face `f`,
/// evaluated from side `side` of the face.
pub fn project_on_face<D>(mesh: &Mesh, f: usize, side: usize, k: usize, rule: &Rule1D, datum: D) -> Vec<f64>
where
    D: Fn(Point, Region) -> f64,
{
    let region = mesh.elements[mesh.faces[f].sides[side].element].region;
    let fp = face_points(mesh, f, side, rule);
    let n = k + 1;
    let mut m = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for q in 0..fp.s.len() {
        let psi = face_basis(k, fp.s[q]);
        let g = datum(fp.x[q], region);
        for l in 0..n {
            b[l] += fp.weight[q] * g * psi[l];
            for j in 0..n {
                m[(l, j)] += fp.weight[q] * psi[l] * psi[j];
            }
        }
    }
    let x = m
        .cholesky()
        .expect("face mass matrix is SPD")
        .solve(&b);
    x.iter().copied().collect()
}

#[derive(Clone, Debug)]
pub struct FeSpace {
    pub k: usize,
    element_offset: Vec<usize>,
    element_dim: Vec<usize>,
    n_element_dofs: usize,
    /// Offset of each face's block in the full trace vector (every face).
    face_offset: Vec<usize>,
    constrained: Vec<bool>,
    /// Quadrature exactness on elements and faces.
    pub exactness: usize,
    /// Exactness used for error integration.
    pub error_exactness: usize,
}

impl FeSpace {
    /// Builds DOF maps on a classified mesh. `extra_quadrature` raises the
    /// default rule exactness `2k+2`.
    pub fn new(mesh: &Mesh, k: usize, extra_quadrature: usize) -> Result<Self> {
        if k == 0 || k > basis::MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "degree must be in 1..={}, got {k}",
                basis::MAX_DEGREE
            )));
        }
        if !mesh.is_classified() {
            return Err(Error::InvalidArgument(
                "mesh boundary faces must be classified before building the space".into(),
            ));
        }
        let mut element_offset = Vec::with_capacity(mesh.n_elements());
        let mut element_dim = Vec::with_capacity(mesh.n_elements());
        let mut off = 0;
        for el in &mesh.elements {
            element_offset.push(off);
            let d = basis::dim(el.shape, k);
            element_dim.push(d);
            off += d;
        }
        let face_offset = (0..mesh.n_faces()).map(|f| f * (k + 1)).collect();
        let constrained = mesh
            .faces
            .iter()
            .map(|f| f.boundary == Some(BoundaryTag::GammaMinus))
            .collect();
        let exactness = 2 * k + 2 + extra_quadrature;
        Ok(FeSpace {
            k,
            element_offset,
            element_dim,
            n_element_dofs: off,
            face_offset,
            constrained,
            exactness,
            error_exactness: (2 * k + 4 + extra_quadrature).max(exactness),
        })
    }

    pub fn element_offset(&self, e: usize) -> usize {
        self.element_offset[e]
    }

    pub fn element_dim(&self, e: usize) -> usize {
        self.element_dim[e]
    }

    pub fn n_element_dofs(&self) -> usize {
        self.n_element_dofs
    }

    pub fn face_dim(&self) -> usize {
        self.k + 1
    }

    pub fn face_offset(&self, f: usize) -> usize {
        self.face_offset[f]
    }

    /// Size of the trace vector over all faces (constrained included).
    pub fn n_trace_dofs(&self) -> usize {
        self.face_offset.len() * (self.k + 1)
    }

    pub fn is_constrained(&self, f: usize) -> bool {
        self.constrained[f]
    }

    pub fn n_constrained_faces(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    pub fn face_rule(&self) -> Rule1D {
        quadrature::segment_rule(self.exactness).expect("exactness bounded by degree")
    }

    pub fn element_rule(&self, shape: Shape) -> quadrature::Rule2D {
        quadrature::element_rule(shape, self.exactness).expect("exactness bounded by degree")
    }

    /// Projection of `datum` onto the trace space of face `f`.
    pub fn project_dirichlet<D>(&self, mesh: &Mesh, f: usize, datum: D) -> Vec<f64>
    where
        D: Fn(Point, Region) -> f64,
    {
        project_on_face(mesh, f, 0, self.k, &self.face_rule(), datum)
    }
}
