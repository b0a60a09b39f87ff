//! Penalty parameters: diffusive penalty, theta-upwind advective penalty,
//! local Peclet number and the Additive / Scharfetter–Gummel blends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Region;

/// Variant of the symmetry term in the diffusive form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Nonsymmetric, `epsilon = -1`.
    Nip,
    /// Incomplete, `epsilon = 0`.
    Iip,
    /// Symmetric, `epsilon = +1`.
    Sip,
}

impl Scheme {
    pub fn epsilon(self) -> f64 {
        match self {
            Scheme::Nip => -1.0,
            Scheme::Iip => 0.0,
            Scheme::Sip => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Nip => "nip",
            Scheme::Iip => "iip",
            Scheme::Sip => "sip",
        }
    }
}

/// Amplification applied to the diffusive penalty on elliptic elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EllipticScheme {
    #[serde(rename = "add")]
    Additive,
    #[serde(rename = "sg")]
    ScharfetterGummel,
}

impl EllipticScheme {
    pub fn label(self) -> &'static str {
        match self {
            EllipticScheme::Additive => "add",
            EllipticScheme::ScharfetterGummel => "sg",
        }
    }

    pub fn amplification(self, s: f64) -> f64 {
        match self {
            EllipticScheme::Additive => amp_add(s),
            EllipticScheme::ScharfetterGummel => amp_sg(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizationConfig {
    pub scheme: Scheme,
    /// Upwind amount on elliptic elements.
    pub theta_ell: f64,
    /// Upwind amount on hyperbolic elements.
    pub theta_hyp: f64,
    /// Diffusive penalty scale; `None` selects twice the largest number of
    /// faces per element.
    pub alpha0: Option<f64>,
    pub elliptic: EllipticScheme,
    /// Keep the upwind penalty on the hyperbolic side of faces where the flow
    /// enters the elliptic region. Off by default: that side is an outflow
    /// boundary of the hyperbolic part, the exact solution may jump there, and
    /// any positive penalty ties it to the elliptic trace.
    #[serde(default)]
    pub penalize_interface_outflow: bool,
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        StabilizationConfig {
            scheme: Scheme::Sip,
            theta_ell: 1.0,
            theta_hyp: 1.0,
            alpha0: None,
            elliptic: EllipticScheme::ScharfetterGummel,
            penalize_interface_outflow: false,
        }
    }
}

impl StabilizationConfig {
    pub fn new(scheme: Scheme, elliptic: EllipticScheme) -> Self {
        StabilizationConfig {
            scheme,
            elliptic,
            ..Default::default()
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta_ell = theta;
        self.theta_hyp = theta;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.scheme.epsilon()
    }

    pub fn theta(&self, region: Region) -> f64 {
        match region {
            Region::Elliptic => self.theta_ell,
            Region::Hyperbolic => self.theta_hyp,
        }
    }

    /// Effective `alpha0` for a mesh whose elements have at most `eta0` faces.
    pub fn alpha0_for(&self, eta0: usize) -> f64 {
        self.alpha0.unwrap_or(2.0 * eta0 as f64)
    }

    /// Checks `theta > 1/2` (finite) in both regions and `alpha0 > eta0`.
    pub fn validate(&self, eta0: usize) -> Result<()> {
        for (name, t) in [("theta_ell", self.theta_ell), ("theta_hyp", self.theta_hyp)] {
            if !(t.is_finite() && t > 0.5) {
                return Err(Error::Configuration(format!(
                    "{name} must be finite and > 1/2, got {t}"
                )));
            }
        }
        let a = self.alpha0_for(eta0);
        if !(a.is_finite() && a > eta0 as f64) {
            return Err(Error::Configuration(format!(
                "alpha0 must exceed the maximum number of faces per element ({eta0}), got {a}"
            )));
        }
        Ok(())
    }
}

/// Bernoulli function `B(s) = s / (e^s - 1)`, `B(0) = 1`.
pub fn bernoulli(s: f64) -> f64 {
    if s.abs() < 1e-5 {
        1.0 - 0.5 * s + s * s / 12.0
    } else {
        s / s.exp_m1()
    }
}

pub fn amp_add(s: f64) -> f64 {
    1.0 + s.abs()
}

pub fn amp_sg(s: f64) -> f64 {
    bernoulli(-s.abs())
}

/// Diffusive penalty `alpha0 C_tr^2 (n.kappa.n) / h_E`.
pub fn tau_kappa(alpha0: f64, trace_const_sq: f64, nkn: f64, h: f64) -> Result<f64> {
    if nkn < 0.0 {
        return Err(Error::Coefficient(format!("negative normal diffusivity {nkn}")));
    }
    Ok(alpha0 * trace_const_sq * nkn / h)
}

/// Advective penalty `theta |beta.n|`.
pub fn tau_beta(beta_n: f64, theta: f64) -> f64 {
    theta * beta_n.abs()
}

/// Oriented local Peclet number `theta (beta.n) / tau_kappa`.
pub fn peclet(beta_n: f64, theta: f64, tau_k: f64) -> Result<f64> {
    if tau_k <= 0.0 {
        return Err(Error::Regime(
            "Peclet number undefined without diffusive penalty".into(),
        ));
    }
    Ok(theta * beta_n / tau_k)
}

/// Total penalty on one side of a face.
///
/// Elliptic side: `tau_kappa |A|(Pe)`; hyperbolic side: `theta |beta.n|`.
pub fn tau_total(
    region: Region,
    tau_k: f64,
    beta_n: f64,
    config: &StabilizationConfig,
) -> Result<f64> {
    let theta = config.theta(region);
    match region {
        Region::Hyperbolic => Ok(tau_beta(beta_n, theta)),
        Region::Elliptic => {
            let pe = peclet(beta_n, theta, tau_k)?;
            match config.elliptic {
                EllipticScheme::Additive => Ok(tau_k + tau_beta(beta_n, theta)),
                // tau_k B(-|Pe|) = theta |beta.n| / (1 - e^{-|Pe|}), stable as tau_k -> 0
                EllipticScheme::ScharfetterGummel if pe.abs() >= 1e-5 => {
                    Ok(tau_beta(beta_n, theta) / -(-pe.abs()).exp_m1())
                }
                EllipticScheme::ScharfetterGummel => Ok(tau_k * amp_sg(pe)),
            }
        }
    }
}

/// Weights `(omega, alpha, eta)` induced by the two side penalties of a face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceWeights {
    pub omega: [f64; 2],
    pub alpha: f64,
    pub eta: f64,
}

pub fn trace_weights(tau1: f64, tau2: f64) -> Result<TraceWeights> {
    let sum = tau1 + tau2;
    if !(sum > 0.0) {
        return Err(Error::DegenerateFace(format!(
            "penalties sum to {sum}; trace weights undefined"
        )));
    }
    Ok(TraceWeights {
        omega: [tau1 / sum, tau2 / sum],
        alpha: 1.0 / sum,
        eta: tau1 * tau2 / sum,
    })
}
