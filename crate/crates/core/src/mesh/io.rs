//! Plain-text mesh format.
//!
//! ```text
//! meshfmt 1
//! vertices N
//! x y                      (N lines)
//! elements M
//! tri|quad v0 v1 v2 [v3] ell|hyp     (M lines)
//! curved K                 (optional block)
//! v0 v1 cx cy r            (K lines: edge v0-v1 lies on the circle)
//! ```
//!
//! Blank lines and text after `#` are ignored. Vertex indices are zero based.

use std::fmt::Write as _;
use std::path::Path;

use super::{Circle, ElementSpec, Mesh, Region, Shape};
use crate::error::{Error, Result};

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_mesh_str(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = line.split_whitespace().collect();
            self.last = i + 1;
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens().ok_or_else(|| Error::Parse {
            line: self.last + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} `{tok}`"),
    })
}

fn header<'a>(lines: &mut Lines<'a>, key: &str) -> Result<(usize, usize)> {
    let (ln, toks) = lines.expect(key)?;
    if toks.len() != 2 || toks[0] != key {
        return Err(Error::Parse {
            line: ln,
            message: format!("expected `{key} <count>`"),
        });
    }
    Ok((ln, parse(toks[1], ln, "count")?))
}

pub fn read_mesh_str(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (ln, toks) = lines.expect("header")?;
    if toks != ["meshfmt", "1"] {
        return Err(Error::Parse {
            line: ln,
            message: "expected header `meshfmt 1`".into(),
        });
    }

    let (_, nv) = header(&mut lines, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = lines.expect("vertex")?;
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: ln,
                message: "vertex line needs `x y`".into(),
            });
        }
        vertices.push([
            parse(toks[0], ln, "coordinate")?,
            parse(toks[1], ln, "coordinate")?,
        ]);
    }

    let (_, ne) = header(&mut lines, "elements")?;
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, toks) = lines.expect("element")?;
        let shape = match toks[0] {
            "tri" => Shape::Tri,
            "quad" => Shape::Quad,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("unknown shape `{other}`"),
                })
            }
        };
        let nvert = shape.n_vertices();
        if toks.len() != nvert + 2 {
            return Err(Error::Parse {
                line: ln,
                message: format!("{} element needs {} vertices and a region", toks[0], nvert),
            });
        }
        let mut vs = Vec::with_capacity(nvert);
        for t in &toks[1..=nvert] {
            let v: usize = parse(t, ln, "vertex index")?;
            if v >= nv {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("vertex index {v} out of range"),
                });
            }
            vs.push(v);
        }
        let region = match toks[nvert + 1] {
            "ell" => Region::Elliptic,
            "hyp" => Region::Hyperbolic,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("unknown region `{other}`"),
                })
            }
        };
        elements.push(ElementSpec {
            shape,
            vertices: vs,
            region,
        });
    }

    let mut curved = Vec::new();
    if let Some((ln, toks)) = lines.next_tokens() {
        if toks.len() != 2 || toks[0] != "curved" {
            return Err(Error::Parse {
                line: ln,
                message: "expected `curved <count>` or end of file".into(),
            });
        }
        let nc: usize = parse(toks[1], ln, "count")?;
        for _ in 0..nc {
            let (ln, toks) = lines.expect("curved edge")?;
            if toks.len() != 5 {
                return Err(Error::Parse {
                    line: ln,
                    message: "curved edge needs `v0 v1 cx cy r`".into(),
                });
            }
            let a: usize = parse(toks[0], ln, "vertex index")?;
            let b: usize = parse(toks[1], ln, "vertex index")?;
            if a >= nv || b >= nv {
                return Err(Error::Parse {
                    line: ln,
                    message: "vertex index out of range".into(),
                });
            }
            let circle = Circle {
                center: [parse(toks[2], ln, "center")?, parse(toks[3], ln, "center")?],
                radius: parse(toks[4], ln, "radius")?,
            };
            curved.push((a, b, circle));
        }
        if let Some((ln, _)) = lines.next_tokens() {
            return Err(Error::Parse {
                line: ln,
                message: "trailing content".into(),
            });
        }
    }
    Mesh::new(vertices, elements, &curved)
}

pub fn write_mesh_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "meshfmt 1");
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for e in &mesh.elements {
        let shape = match e.shape {
            Shape::Tri => "tri",
            Shape::Quad => "quad",
        };
        let region = match e.region {
            Region::Elliptic => "ell",
            Region::Hyperbolic => "hyp",
        };
        let vs: Vec<String> = e.vertices.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{shape} {} {region}", vs.join(" "));
    }
    let curved: Vec<_> = mesh.faces.iter().filter(|f| f.arc.is_some()).collect();
    if !curved.is_empty() {
        let _ = writeln!(s, "curved {}", curved.len());
        for f in curved {
            let c = f.arc.unwrap();
            let _ = writeln!(
                s,
                "{} {} {:?} {:?} {:?}",
                f.vertices[0], f.vertices[1], c.center[0], c.center[1], c.radius
            );
        }
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_mesh_string(mesh)).map_err(|e| Error::io(path, e))
}
