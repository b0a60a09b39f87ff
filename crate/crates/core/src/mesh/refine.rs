use super::geometry::{self, ArcEdge};
use super::{ElementSpec, Mesh, Point, Region, Shape};
use crate::error::{Error, Result};

/// Midpoint of a face; curved faces get the point on their circle.
fn face_mid(mesh: &Mesh, f: usize) -> Point {
    let face = &mesh.faces[f];
    let a = mesh.vertices[face.vertices[0]];
    let b = mesh.vertices[face.vertices[1]];
    match face.arc {
        None => [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
        Some(c) => c.project(ArcEdge::new(&c, a, b).eval(0.5).0),
    }
}

struct Builder {
    vertices: Vec<Point>,
    elements: Vec<(ElementSpec, u32)>,
    curved: Vec<(usize, usize, geometry::Circle)>,
}

impl Builder {
    fn new(mesh: &Mesh) -> Self {
        Builder {
            vertices: mesh.vertices.clone(),
            elements: Vec::new(),
            curved: Vec::new(),
        }
    }

    fn tri(&mut self, vs: [usize; 3], region: Region, level: u32) {
        self.elements.push((
            ElementSpec {
                shape: Shape::Tri,
                vertices: vs.to_vec(),
                region,
            },
            level,
        ));
    }

    fn quad(&mut self, vs: [usize; 4], region: Region, level: u32) {
        self.elements.push((
            ElementSpec {
                shape: Shape::Quad,
                vertices: vs.to_vec(),
                region,
            },
            level,
        ));
    }

    /// Adds midpoints for the selected faces; returns the midpoint vertex per face.
    fn midpoints(&mut self, mesh: &Mesh, split: &[bool]) -> Vec<Option<usize>> {
        let mut mids = vec![None; mesh.n_faces()];
        for f in 0..mesh.n_faces() {
            if !split[f] {
                continue;
            }
            let m = self.vertices.len();
            self.vertices.push(face_mid(mesh, f));
            mids[f] = Some(m);
            let face = &mesh.faces[f];
            if let Some(c) = face.arc {
                self.curved.push((face.vertices[0], m, c));
                self.curved.push((m, face.vertices[1], c));
            }
        }
        // curved faces that are kept whole
        for (f, face) in mesh.faces.iter().enumerate() {
            if let (false, Some(c)) = (split[f], face.arc) {
                self.curved.push((face.vertices[0], face.vertices[1], c));
            }
        }
        mids
    }

    fn finish(self, parent: &Mesh, mids: &[Option<usize>]) -> Result<Mesh> {
        let mut mesh = Mesh::build(self.vertices, self.elements, &self.curved)?;
        inherit_face_tags(parent, &mut mesh, mids);
        Ok(mesh)
    }
}

fn inherit_face_tags(parent: &Mesh, child: &mut Mesh, mids: &[Option<usize>]) {
    use std::collections::HashMap;
    let lookup: HashMap<[usize; 2], usize> = child
        .faces
        .iter()
        .enumerate()
        .map(|(i, f)| (f.vertices, i))
        .collect();
    for (f, face) in parent.faces.iter().enumerate() {
        if face.boundary.is_none() && face.interface == super::InterfaceTag::None {
            continue;
        }
        let [a, b] = face.vertices;
        let pieces: Vec<[usize; 2]> = match mids[f] {
            None => vec![[a, b]],
            Some(m) => vec![[a.min(m), a.max(m)], [b.min(m), b.max(m)]],
        };
        for key in pieces {
            if let Some(&g) = lookup.get(&key) {
                child.faces[g].boundary = face.boundary;
                child.faces[g].interface = face.interface;
            }
        }
    }
}

fn red_tri(b: &mut Builder, v: [usize; 3], m: [usize; 3], region: Region, level: u32) {
    // m[j] is the midpoint of edge (v[j], v[j+1])
    b.tri([v[0], m[0], m[2]], region, level);
    b.tri([m[0], v[1], m[1]], region, level);
    b.tri([m[2], m[1], v[2]], region, level);
    b.tri([m[0], m[1], m[2]], region, level);
}

/// Splits every triangle into four and every quadrilateral into four.
/// Midpoints of curved faces are placed on their circle; region tags and
/// face classification tags are inherited.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut b = Builder::new(mesh);
    let mids = b.midpoints(mesh, &vec![true; mesh.n_faces()]);
    for (e, el) in mesh.elements.iter().enumerate() {
        let level = el.level + 1;
        let m: Vec<usize> = el.faces.iter().map(|&f| mids[f].unwrap()).collect();
        let v = &el.vertices;
        match el.shape {
            Shape::Tri => red_tri(&mut b, [v[0], v[1], v[2]], [m[0], m[1], m[2]], el.region, level),
            Shape::Quad => {
                let c = b.vertices.len();
                b.vertices.push(mesh.element_map(e).map([0.0, 0.0]).0);
                b.quad([v[0], m[0], c, m[3]], el.region, level);
                b.quad([m[0], v[1], m[1], c], el.region, level);
                b.quad([c, m[1], v[2], m[2]], el.region, level);
                b.quad([m[3], c, m[2], v[3]], el.region, level);
            }
        }
    }
    b.finish(mesh, &mids)
}

/// Refines the elements carrying the largest `fraction` of indicator values
/// (ties included, zero indicators never marked) and restores conformity by
/// longest-edge closure: any triangle with a split edge also splits its
/// longest edge, and is then bisected (one split edge), split in three (two)
/// or split regularly into four (three). Triangular meshes only.
pub fn refine_adaptive(mesh: &Mesh, indicator: &[f64], fraction: f64) -> Result<Mesh> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "marking fraction must lie in (0,1), got {fraction}"
        )));
    }
    if indicator.len() != mesh.n_elements() {
        return Err(Error::InvalidArgument(format!(
            "indicator has {} entries for {} elements",
            indicator.len(),
            mesh.n_elements()
        )));
    }
    if indicator.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "indicator values must be finite and nonnegative".into(),
        ));
    }
    if mesh.elements.iter().any(|e| e.shape != Shape::Tri) {
        return Err(Error::Capability(
            "adaptive refinement supports triangular meshes only".into(),
        ));
    }

    let mut order: Vec<usize> = (0..mesh.n_elements()).collect();
    order.sort_by(|&a, &b| indicator[b].total_cmp(&indicator[a]).then(a.cmp(&b)));
    let n_mark = ((fraction * mesh.n_elements() as f64).ceil() as usize).max(1);
    let threshold = indicator[order[n_mark - 1]];

    let mut split = vec![false; mesh.n_faces()];
    for (e, el) in mesh.elements.iter().enumerate() {
        if indicator[e] > 0.0 && indicator[e] >= threshold {
            for &f in &el.faces {
                split[f] = true;
            }
        }
    }

    let longest: Vec<usize> = mesh
        .elements
        .iter()
        .map(|el| {
            (0..3)
                .max_by(|&i, &j| {
                    let (fi, fj) = (el.faces[i], el.faces[j]);
                    mesh.face_length(fi)
                        .total_cmp(&mesh.face_length(fj))
                        .then(fj.cmp(&fi))
                })
                .unwrap()
        })
        .collect();
    loop {
        let mut changed = false;
        for (e, el) in mesh.elements.iter().enumerate() {
            let lf = el.faces[longest[e]];
            if !split[lf] && el.faces.iter().any(|&f| split[f]) {
                split[lf] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut b = Builder::new(mesh);
    let mids = b.midpoints(mesh, &split);
    for (e, el) in mesh.elements.iter().enumerate() {
        let v = [el.vertices[0], el.vertices[1], el.vertices[2]];
        let m: Vec<Option<usize>> = el.faces.iter().map(|&f| mids[f]).collect();
        let n_split = m.iter().filter(|x| x.is_some()).count();
        let level = el.level + 1;
        match n_split {
            0 => b.tri(v, el.region, el.level),
            3 => red_tri(
                &mut b,
                v,
                [m[0].unwrap(), m[1].unwrap(), m[2].unwrap()],
                el.region,
                level,
            ),
            _ => {
                let l = longest[e];
                let (vl, vl1, vl2) = (v[l], v[(l + 1) % 3], v[(l + 2) % 3]);
                let ml = m[l].expect("closure splits the longest edge");
                match m[(l + 1) % 3] {
                    None => b.tri([ml, vl1, vl2], el.region, level),
                    Some(m1) => {
                        b.tri([ml, vl1, m1], el.region, level);
                        b.tri([ml, m1, vl2], el.region, level);
                    }
                }
                match m[(l + 2) % 3] {
                    None => b.tri([vl, ml, vl2], el.region, level),
                    Some(m2) => {
                        b.tri([vl, ml, m2], el.region, level);
                        b.tri([ml, vl2, m2], el.region, level);
                    }
                }
            }
        }
    }
    b.finish(mesh, &mids)
}
