//! Coefficient fields, exact solutions and the built-in test problems.
//!
//! Every field takes the evaluation point and the region tag of the element
//! it is evaluated on, so fields that jump across the elliptic/hyperbolic
//! interface are single-valued on each side.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, Region};

pub type Tensor = [[f64; 2]; 2];
pub type ScalarField = Arc<dyn Fn(Point, Region) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point, Region) -> Point + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point, Region) -> Tensor + Send + Sync>;
pub type RegionMap = Arc<dyn Fn(Point) -> Region + Send + Sync>;
pub type DomainCheck = Arc<dyn Fn(Point) -> Result<()> + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub kappa: TensorField,
    pub beta: VectorField,
    pub div_beta: ScalarField,
    pub gamma: ScalarField,
    pub source: ScalarField,
    pub dirichlet: ScalarField,
    pub exact: Option<ExactSolution>,
    /// Region of the element whose centroid is the given point.
    pub region_of: RegionMap,
    /// Rejects points where the coefficients are undefined.
    pub domain: Option<DomainCheck>,
    /// Extra quadrature exactness on top of `2k+2`.
    pub extra_quadrature: usize,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("has_exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

/// Sampled bounds on the coefficients over a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientReport {
    /// Minimum of `gamma + div(beta)/2` over element quadrature points.
    pub mu0: f64,
    /// Largest Frobenius norm of kappa.
    pub kappa_max: f64,
}

fn frob(k: &Tensor) -> f64 {
    (k[0][0].powi(2) + k[0][1].powi(2) + k[1][0].powi(2) + k[1][1].powi(2)).sqrt()
}

/// Eigenvalues of the symmetric part of `k`, ascending.
pub fn sym_eigenvalues(k: &Tensor) -> (f64, f64) {
    let a = k[0][0];
    let d = k[1][1];
    let b = 0.5 * (k[0][1] + k[1][0]);
    let m = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (m - r, m + r)
}

impl ProblemSpec {
    /// Constant coefficients, zero source and zero Dirichlet data. Elements
    /// are tagged elliptic when `kappa` is nonzero and hyperbolic otherwise.
    pub fn constant(name: &str, kappa: Tensor, beta: Point, gamma: f64) -> Self {
        let region = if frob(&kappa) > 0.0 {
            Region::Elliptic
        } else {
            Region::Hyperbolic
        };
        ProblemSpec {
            name: name.to_string(),
            kappa: Arc::new(move |_, _| kappa),
            beta: Arc::new(move |_, _| beta),
            div_beta: Arc::new(|_, _| 0.0),
            gamma: Arc::new(move |_, _| gamma),
            source: Arc::new(|_, _| 0.0),
            dirichlet: Arc::new(|_, _| 0.0),
            exact: None,
            region_of: Arc::new(move |_| region),
            domain: None,
            extra_quadrature: 0,
        }
    }

    /// Constant-coefficient problem whose exact solution is `u`, given as a
    /// closure returning value, gradient and Hessian. The source and the
    /// Dirichlet datum are derived from `u`.
    pub fn manufactured<F>(name: &str, kappa: Tensor, beta: Point, gamma: f64, u: F) -> Self
    where
        F: Fn(Point) -> (f64, Point, Tensor) + Send + Sync + 'static,
    {
        let u = Arc::new(u);
        let mut p = Self::constant(name, kappa, beta, gamma);
        let (u1, u2, u3) = (u.clone(), u.clone(), u.clone());
        p.source = Arc::new(move |x, _| {
            let (v, g, h) = u1(x);
            let div_flux = kappa[0][0] * h[0][0]
                + kappa[0][1] * h[1][0]
                + kappa[1][0] * h[0][1]
                + kappa[1][1] * h[1][1];
            -div_flux + beta[0] * g[0] + beta[1] * g[1] + gamma * v
        });
        p.dirichlet = Arc::new(move |x, _| u2(x).0);
        p.exact = Some(ExactSolution {
            value: Arc::new(move |x, _| u3(x).0),
            gradient: Arc::new(move |x, _| u(x).1),
        });
        p
    }

    pub fn kappa_at(&self, x: Point, r: Region) -> Tensor {
        (self.kappa)(x, r)
    }

    pub fn beta_at(&self, x: Point, r: Region) -> Point {
        (self.beta)(x, r)
    }

    pub fn check_domain(&self, x: Point) -> Result<()> {
        match &self.domain {
            Some(check) => check(x),
            None => Ok(()),
        }
    }

    /// Re-tag every element from [`ProblemSpec::region_of`] at its centroid.
    pub fn assign_regions(&self, mesh: &mut Mesh) {
        for e in 0..mesh.n_elements() {
            let c = mesh.centroid(e);
            mesh.elements[e].region = (self.region_of)(c);
        }
    }

    /// Checks the coefficient invariants at element quadrature points:
    /// kappa symmetric positive semidefinite, zero on hyperbolic elements and
    /// uniformly positive definite on elliptic ones.
    pub fn check_coefficients(&self, mesh: &Mesh, exactness: usize) -> Result<CoefficientReport> {
        let mut mu0 = f64::INFINITY;
        let mut kappa_max: f64 = 0.0;
        for e in 0..mesh.n_elements() {
            let map = mesh.element_map(e);
            let region = mesh.elements[e].region;
            let rule = crate::fespace::quadrature::element_rule(map.shape(), exactness)?;
            for &xi in &rule.points {
                let (x, _) = map.map(xi);
                self.check_domain(x)?;
                let k = self.kappa_at(x, region);
                let nk = frob(&k);
                kappa_max = kappa_max.max(nk);
                if (k[0][1] - k[1][0]).abs() > 1e-12 * nk {
                    return Err(Error::Coefficient(format!(
                        "kappa not symmetric at {x:?} in element {e}"
                    )));
                }
                let (lmin, _) = sym_eigenvalues(&k);
                if lmin < -1e-12 * nk {
                    return Err(Error::Coefficient(format!(
                        "kappa not positive semidefinite at {x:?} in element {e}"
                    )));
                }
                match region {
                    Region::Hyperbolic if nk != 0.0 => {
                        return Err(Error::Coefficient(format!(
                            "kappa nonzero on hyperbolic element {e} at {x:?}"
                        )))
                    }
                    Region::Elliptic if lmin <= 0.0 => {
                        return Err(Error::Coefficient(format!(
                            "kappa not positive definite on elliptic element {e} at {x:?}"
                        )))
                    }
                    _ => {}
                }
                let g = (self.gamma)(x, region);
                if g < 0.0 {
                    return Err(Error::Coefficient(format!(
                        "negative reaction coefficient at {x:?}"
                    )));
                }
                mu0 = mu0.min(g + 0.5 * (self.div_beta)(x, region));
            }
        }
        Ok(CoefficientReport { mu0, kappa_max })
    }
}

/// One factor `X(x) = x + (e^{a x} - 1)/(1 - e^a)` of the boundary-layer
/// solution, evaluated without overflow for large `|a|`.
#[derive(Clone, Copy, Debug)]
struct Layer {
    a: f64,
}

impl Layer {
    /// Value, first and second derivative.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let a = self.a;
        if a == 0.0 {
            // limit a -> 0: x + (a x)/(-a) = 0
            return (0.0, 0.0, 0.0);
        }
        if a > 0.0 {
            // (e^{ax}-1)/(1-e^a) = -(e^{a(x-1)} - e^{-a}) / (1 - e^{-a})
            let den = -(-a).exp_m1();
            let e = (a * (x - 1.0)).exp();
            let v = x - (e - (-a).exp()) / den;
            (v, 1.0 - a * e / den, -a * a * e / den)
        } else {
            let den = -a.exp_m1();
            let e = (a * x).exp();
            let v = x + (a * x).exp_m1() / den;
            (v, 1.0 + a * e / den, a * a * e / den)
        }
    }
}

/// Boundary-layer problem on the unit square with `kappa I`, `beta = (2,1)`,
/// no reaction and homogeneous Dirichlet data.
pub fn testcase_a(kappa: f64) -> Result<ProblemSpec> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "diffusion coefficient must be positive, got {kappa}"
        )));
    }
    let beta = [2.0, 1.0];
    let lx = Layer { a: beta[0] / kappa };
    let ly = Layer { a: beta[1] / kappa };
    let u = move |p: Point| -> (f64, Point, Tensor) {
        let (x, dx, ddx) = lx.eval(p[0]);
        let (y, dy, ddy) = ly.eval(p[1]);
        (x * y, [dx * y, x * dy], [[ddx * y, dx * dy], [dx * dy, x * ddy]])
    };
    let k = [[kappa, 0.0], [0.0, kappa]];
    let mut p = ProblemSpec::manufactured("A", k, beta, 0.0, u);
    p.dirichlet = Arc::new(|_, _| 0.0);
    Ok(p)
}

fn heaviside(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Pure advection-reaction with a discontinuous inflow datum transported
/// along `beta = (2,1)`.
pub fn testcase_b() -> ProblemSpec {
    let mut p = ProblemSpec::constant("B", [[0.0; 2]; 2], [2.0, 1.0], 1.0);
    let u = |x: Point| heaviside(-x[0] + 2.0 * x[1] - 1.0);
    p.dirichlet = Arc::new(move |x, _| u(x));
    p.exact = Some(ExactSolution {
        value: Arc::new(move |x, _| u(x)),
        gradient: Arc::new(|_, _| [0.0, 0.0]),
    });
    p
}

/// Polar angle in `(0, 2pi]`, with the branch on `y = 0` chosen by region:
/// elliptic elements live in `y >= 0`, hyperbolic ones in `y <= 0`.
pub fn annulus_angle(x: Point, region: Region) -> f64 {
    match region {
        Region::Elliptic => x[1].max(0.0).atan2(x[0]),
        Region::Hyperbolic => {
            let t = x[1].min(0.0).atan2(x[0]);
            if t <= 0.0 {
                t + 2.0 * PI
            } else {
                t
            }
        }
    }
}

/// Locally degenerate problem on the square with a circular hole: diffusion
/// `pi I` above `y = 0`, none below, azimuthal advection `e_theta / r`.
pub fn testcase_c() -> ProblemSpec {
    const GAMMA: f64 = 1e-6;
    let value = |x: Point, r: Region| {
        let t = annulus_angle(x, r) - PI;
        match r {
            Region::Elliptic => t * t,
            Region::Hyperbolic => 3.0 * PI * t,
        }
    };
    let gradient = |x: Point, r: Region| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let dtheta = [-x[1] / r2, x[0] / r2];
        let s = match r {
            Region::Elliptic => 2.0 * (annulus_angle(x, r) - PI),
            Region::Hyperbolic => 3.0 * PI,
        };
        [s * dtheta[0], s * dtheta[1]]
    };
    let source = move |x: Point, r: Region| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let t = annulus_angle(x, r) - PI;
        match r {
            Region::Elliptic => -2.0 * PI / r2 + 2.0 * t / r2 + GAMMA * t * t,
            Region::Hyperbolic => 3.0 * PI / r2 + GAMMA * 3.0 * PI * t,
        }
    };
    ProblemSpec {
        name: "C".into(),
        kappa: Arc::new(|_, r| match r {
            Region::Elliptic => [[PI, 0.0], [0.0, PI]],
            Region::Hyperbolic => [[0.0; 2]; 2],
        }),
        beta: Arc::new(|x, _| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [-x[1] / r2, x[0] / r2]
        }),
        div_beta: Arc::new(|_, _| 0.0),
        gamma: Arc::new(|_, _| GAMMA),
        source: Arc::new(source),
        dirichlet: Arc::new(value),
        exact: Some(ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }),
        region_of: Arc::new(|c| {
            if c[1] > 0.0 {
                Region::Elliptic
            } else {
                Region::Hyperbolic
            }
        }),
        domain: Some(Arc::new(|x| {
            if x[0].hypot(x[1]) < 1e-14 {
                Err(Error::Domain(format!("coefficients undefined at {x:?}")))
            } else {
                Ok(())
            }
        })),
        extra_quadrature: 2,
    }
}
