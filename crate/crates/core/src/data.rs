//! Gaussian-family initial data, specified through their Fourier transforms
//!
//! ```text
//! f̂(ξ) = (P - i M·ξ) e^{-σ|ξ|²}
//! ```
//!
//! so that `f̂(0) = P` (the mean) and `i∇f̂(0) = M` (the first moment) hold
//! exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::DataHat;
use crate::params::PhysicalParams;
use crate::profiles::MomentSet;

fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatumSpec {
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub m: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

impl Default for DatumSpec {
    fn default() -> Self {
        DatumSpec::zero()
    }
}

impl DatumSpec {
    pub fn new(p: f64, m: Vec<f64>, sigma: f64) -> Result<Self> {
        let spec = DatumSpec { p, m, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zero() -> Self {
        DatumSpec {
            p: 0.0,
            m: Vec::new(),
            sigma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "Gaussian width must be positive",
            });
        }
        if !self.p.is_finite() || self.m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "p/m",
                value: f64::NAN,
                reason: "moments must be finite",
            });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.p == 0.0 && self.m.iter().all(|v| *v == 0.0)
    }

    /// First moment padded with zeros or truncated to dimension `n`.
    pub fn moment_in(&self, n: usize) -> Vec<f64> {
        let mut m = self.m.clone();
        m.resize(n, 0.0);
        m
    }

    pub fn moments(&self) -> (f64, &[f64]) {
        (self.p, &self.m)
    }

    pub fn gauss(&self, r: f64) -> f64 {
        (-self.sigma * r * r).exp()
    }

    /// `(P - i M·ξ) e^{-σ|ξ|²}`; components of `M` beyond `ξ.len()` are ignored.
    pub fn hat_value(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        let dot: f64 = xi.iter().zip(&self.m).map(|(x, m)| x * m).sum();
        Complex64::new(self.p, -dot) * (-self.sigma * r2).exp()
    }
}

/// The three Cauchy data `ψ0`, `ψ1`, `ψ2`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatumTriple {
    #[serde(default)]
    pub psi0: DatumSpec,
    #[serde(default)]
    pub psi1: DatumSpec,
    #[serde(default)]
    pub psi2: DatumSpec,
}

impl DatumTriple {
    pub fn new(psi0: DatumSpec, psi1: DatumSpec, psi2: DatumSpec) -> Self {
        DatumTriple { psi0, psi1, psi2 }
    }

    pub fn only_psi2(spec: DatumSpec) -> Self {
        DatumTriple {
            psi2: spec,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.psi0.validate()?;
        self.psi1.validate()?;
        self.psi2.validate()
    }

    pub fn specs(&self) -> [&DatumSpec; 3] {
        [&self.psi0, &self.psi1, &self.psi2]
    }

    pub fn is_zero(&self) -> bool {
        self.specs().iter().all(|s| s.is_zero())
    }

    pub fn hat_at(&self, xi: &[f64]) -> DataHat {
        DataHat::new(
            self.psi0.hat_value(xi),
            self.psi1.hat_value(xi),
            self.psi2.hat_value(xi),
        )
    }

    /// Profile moments in dimension `n`.
    pub fn moment_set(&self, params: &PhysicalParams, n: usize) -> MomentSet {
        MomentSet::new(params, self.psi0.p, self.psi1.p, self.psi2.p, self.psi2.moment_in(n))
    }
}

/// `max |f̂(ξ) - P| / |ξ|` over the grid (the first-order moment control).
pub fn weighted_moment_bound(spec: &DatumSpec, xi_grid: &[Vec<f64>]) -> Result<f64> {
    ratio_over_grid(spec, xi_grid, |spec, xi, r| (spec.hat_value(xi) - spec.p).norm() / r)
}

/// `max |f̂(ξ) - P + i M·ξ| / |ξ|²` over the grid (second-order control).
pub fn second_order_constant(spec: &DatumSpec, xi_grid: &[Vec<f64>]) -> Result<f64> {
    ratio_over_grid(spec, xi_grid, |spec, xi, r| {
        let dot: f64 = xi.iter().zip(&spec.m).map(|(x, m)| x * m).sum();
        (spec.hat_value(xi) - Complex64::new(spec.p, -dot)).norm() / (r * r)
    })
}

fn ratio_over_grid(spec: &DatumSpec, xi_grid: &[Vec<f64>], f: impl Fn(&DatumSpec, &[f64], f64) -> f64) -> Result<f64> {
    let mut best = 0.0f64;
    for xi in xi_grid {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::InvalidGrid("frequency grid contains ξ = 0".into()));
        }
        best = best.max(f(spec, xi, r));
    }
    Ok(best)
}
