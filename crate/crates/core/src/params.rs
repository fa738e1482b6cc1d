//! Physical constants of the rescaled linear model and the coefficients
//! derived from them.
//!
//! The user supplies kinematic viscosity `nu`, Prandtl number, viscosity
//! number `b` and the ratio of specific heats `gamma`. Thermal diffusivity
//! `kappa = nu / Pr` and diffusivity of sound `delta = b nu + (gamma - 1) kappa`
//! are always derived, never set directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `|kappa - b nu|` under which the parameter set is
/// treated as satisfying Becker's assumption.
pub const BECKER_TOL: f64 = 1e-12;

/// `kappa / delta` above this ratio raises the weak-diffusivity warning.
pub const KAPPA_DELTA_WARN_RATIO: f64 = 0.2;

/// The four independent inputs, as they appear in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsInput {
    pub nu: f64,
    pub prandtl: f64,
    pub b: f64,
    pub gamma: f64,
}

impl Default for ParamsInput {
    fn default() -> Self {
        ParamsInput {
            nu: 0.1,
            prandtl: 10.0,
            b: 4.0 / 3.0,
            gamma: 1.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams {
    nu: f64,
    prandtl: f64,
    b: f64,
    gamma: f64,
    kappa: f64,
    delta: f64,
    gamma_tilde: f64,
    delta_hat: f64,
    delta_tilde: f64,
    h0_coeff: f64,
    becker: bool,
    diffusivity_warning: bool,
}

impl PhysicalParams {
    /// Builds a consistent parameter set from the four independent inputs.
    pub fn derive_constants(nu: f64, prandtl: f64, b: f64, gamma: f64) -> Result<Self> {
        positive("nu", nu)?;
        positive("prandtl", prandtl)?;
        positive("b", b)?;
        if !(gamma > 1.0 && gamma <= 5.0 / 3.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must lie in (1, 5/3]",
            });
        }

        let kappa = nu / prandtl;
        let b_nu = b * nu;
        let delta = b_nu + (gamma - 1.0) * kappa;
        if kappa >= delta {
            return Err(Error::InvalidParameter {
                name: "prandtl",
                value: prandtl,
                reason: "thermal diffusivity must stay below the diffusivity of sound",
            });
        }
        let gamma_tilde = gamma * b_nu * kappa;
        let becker = (kappa - b_nu).abs() <= BECKER_TOL * b_nu;
        let delta_hat = if becker {
            0.0
        } else {
            -kappa * kappa * (delta - gamma * b_nu)
        };
        let delta_tilde = (delta * delta + 20.0 * kappa * delta - 8.0 * kappa * kappa - 12.0 * gamma_tilde) / 4.0;
        let h0_coeff = (4.0 * delta_hat - kappa * delta * delta) / (8.0 * kappa);

        Ok(PhysicalParams {
            nu,
            prandtl,
            b,
            gamma,
            kappa,
            delta,
            gamma_tilde,
            delta_hat,
            delta_tilde,
            h0_coeff,
            becker,
            diffusivity_warning: kappa / delta > KAPPA_DELTA_WARN_RATIO,
        })
    }

    pub fn from_input(input: &ParamsInput) -> Result<Self> {
        Self::derive_constants(input.nu, input.prandtl, input.b, input.gamma)
    }

    /// Monatomic perfect gas: vanishing bulk viscosity (`b = 4/3`), `Pr = 3/4`,
    /// `gamma = 5/3`, so that `kappa = b nu`.
    pub fn becker_preset(nu: f64) -> Result<Self> {
        Self::derive_constants(nu, 0.75, 4.0 / 3.0, 5.0 / 3.0)
    }

    pub fn input(&self) -> ParamsInput {
        ParamsInput {
            nu: self.nu,
            prandtl: self.prandtl,
            b: self.b,
            gamma: self.gamma,
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn prandtl(&self) -> f64 {
        self.prandtl
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    /// `gamma b nu kappa`.
    pub fn gamma_tilde(&self) -> f64 {
        self.gamma_tilde
    }
    /// `-kappa^2 (delta - gamma b nu)`, the r^4 coefficient of the heat root.
    pub fn delta_hat(&self) -> f64 {
        self.delta_hat
    }
    /// Quarter of the r^8 coefficient of the discriminant.
    pub fn delta_tilde(&self) -> f64 {
        self.delta_tilde
    }
    /// `(4 delta_hat - kappa delta^2) / (8 kappa)`, the r^3 coefficient of the
    /// imaginary part of the wave roots.
    pub fn h0_coeff(&self) -> f64 {
        self.h0_coeff
    }
    pub fn is_becker(&self) -> bool {
        self.becker
    }
    /// Set when `kappa / delta` is not small.
    pub fn diffusivity_warning(&self) -> bool {
        self.diffusivity_warning
    }

    /// `-kappa^2 (gamma - 1)(kappa - b nu)`, algebraically equal to `delta_hat`.
    pub fn delta_hat_closed_form(&self) -> f64 {
        -self.kappa * self.kappa * (self.gamma - 1.0) * (self.kappa - self.b * self.nu)
    }

    /// Default radius of the small-frequency zone, `0.2 min(1, 1/delta)`.
    pub fn eps0(&self) -> f64 {
        0.2 * (1.0f64).min(1.0 / self.delta)
    }

    /// `(2 kappa - delta) / 2`, weight of `P_psi2` in the combined datum.
    pub fn combined_weight(&self) -> f64 {
        (2.0 * self.kappa - self.delta) / 2.0
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::from_input(&ParamsInput::default()).expect("default parameters are admissible")
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
