//! Model multipliers, the Gamma-function limits of the oscillatory radial
//! integrals, and the split of `‖ψ̂⁽²⁾‖²` used for the lower bounds.

use serde::Serialize;

use super::{
    check_dimension, gamma_fn, integrate, min_heat_rate, sphere_surface, PanelPlan, DEFAULT_NODES, DEFAULT_PANEL_BUDGET,
};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::profiles::{self, MomentSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierKind {
    /// `e^{-c r² t}`
    Heat,
    /// `|sin(rt)| / r · e^{-c r² t}`
    G1Type,
    /// `sin²(rt) / r² · e^{-c r² t}`
    G0Type,
}

impl MultiplierKind {
    pub const ALL: [MultiplierKind; 3] = [MultiplierKind::Heat, MultiplierKind::G1Type, MultiplierKind::G0Type];

    pub fn as_str(&self) -> &'static str {
        match self {
            MultiplierKind::Heat => "heat",
            MultiplierKind::G1Type => "g1-type",
            MultiplierKind::G0Type => "g0-type",
        }
    }
}

/// `sin(r t) / r`, equal to `t` at `r = 0`.
fn sin_over(r: f64, t: f64) -> f64 {
    let x = r * t;
    if x.abs() < 1e-4 {
        t * (1.0 - x * x / 6.0)
    } else {
        x.sin() / r
    }
}

/// Fourier-side norm `(|S^{n-1}| ∫_0^cutoff m(r)² r^{n-1} dr)^{1/2}` of a
/// model multiplier, without the `(2π)^{-n}` Plancherel factor.
pub fn multiplier_norm(kind: MultiplierKind, n: usize, c: f64, t: f64, cutoff: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(t >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "multiplier norms are evaluated for t >= 1",
        });
    }
    if !(c > 0.0) || !(cutoff > 0.0) {
        return Err(Error::InvalidParameter {
            name: "c/cutoff",
            value: c.min(cutoff),
            reason: "decay rate and cutoff must be positive",
        });
    }
    let end = cutoff.min(PanelPlan::truncation_radius(2.0 * c, t));
    let plan = PanelPlan::new(end, t, DEFAULT_NODES, DEFAULT_PANEL_BUDGET, t)?;
    let q = integrate(&plan, |r| {
        let e = (-2.0 * c * r * r * t).exp();
        let m2 = match kind {
            MultiplierKind::Heat => 1.0,
            MultiplierKind::G1Type => sin_over(r, t).powi(2),
            MultiplierKind::G0Type => sin_over(r, t).powi(4),
        };
        Ok(m2 * e * r.powi(n as i32 - 1))
    })?;
    Ok((sphere_surface(n)? * q.value).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaLimit {
    pub value: f64,
    /// `(1/4) δ^{-(e+1)/2} Γ((e+1)/2)` with `e = n + offset`, when finite.
    pub limit: Option<f64>,
    pub rel_err: Option<f64>,
    pub err_est: f64,
}

/// `∫_0^∞ e^{-δ ρ²} sin²(√t ρ) ρ^{n+offset} dρ` and its `t -> ∞` limit.
pub fn gamma_limit_integral(n: usize, delta: f64, t: f64, offset: i32) -> Result<GammaLimit> {
    let e = n as i32 + offset;
    if e < -2 {
        return Err(Error::InvalidParameter {
            name: "offset",
            value: offset as f64,
            reason: "integrand is not integrable at the origin",
        });
    }
    if !(delta > 0.0) || !(t >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "delta/t",
            value: delta.min(t),
            reason: "need delta > 0 and t >= 1",
        });
    }
    let freq = t.sqrt();
    let end = (2.0 * (40.0 + 4.0 * e.max(0) as f64) / delta).sqrt();
    let plan = PanelPlan::new(end, freq, DEFAULT_NODES, DEFAULT_PANEL_BUDGET, t)?;
    let q = integrate(&plan, |rho| {
        Ok((-delta * rho * rho).exp() * sin_over(rho, freq).powi(2) * rho.powi(e + 2))
    })?;
    let limit = if e + 1 > 0 {
        let z = 0.5 * (e + 1) as f64;
        Some(0.25 * delta.powf(-z) * gamma_fn(z)?)
    } else {
        None
    };
    Ok(GammaLimit {
        value: q.value,
        limit,
        rel_err: limit.map(|l| (q.value - l).abs() / l),
        err_est: q.err_est,
    })
}

/// Closed form for `n + offset = 0`:
/// `(1/4) √(π/δ) (1 - e^{-t/δ})`.
pub fn gamma_limit_exact_flat(delta: f64, t: f64) -> f64 {
    0.25 * (std::f64::consts::PI / delta).sqrt() * (-(-t / delta).exp_m1())
}

/// `‖ψ̂⁽²⁾‖² = A1 + A2_1 + A2_2 + A2_3` (Fourier side, no `(2π)^{-n}`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerDecomposition {
    pub a1: f64,
    pub a2_1: f64,
    pub a2_2: f64,
    pub a2_3: f64,
    /// `‖ψ̂⁽²⁾‖²` integrated directly in `r`.
    pub direct: f64,
    /// `(A2_1 + A2_2 + A2_3) t^{n/2 - 1}`
    pub a2_scaled: f64,
    /// `(1/4) δ^{-n/2-1} Γ(n/2-1) |S^{n-1}| (δ P_Ψ + (n/2) P2)²`, `n >= 3`
    pub stated_constant: Option<f64>,
    /// Sum of the three Gamma limits weighted by the moments, `n >= 3`
    pub limit_constant: Option<f64>,
}

impl LowerDecomposition {
    pub fn sum(&self) -> f64 {
        self.a1 + self.a2_1 + self.a2_2 + self.a2_3
    }
}

pub fn psi2_lower_decomposition(
    params: &PhysicalParams,
    n: usize,
    t: f64,
    moments: &MomentSet,
) -> Result<LowerDecomposition> {
    check_dimension(n)?;
    if !(t >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "decomposition is evaluated for t >= 1",
        });
    }
    let nf = n as f64;
    let surface = sphere_surface(n)?;
    let m2 = moments.m2_norm_sq();
    let delta = params.delta();
    let r_max = PanelPlan::truncation_radius(min_heat_rate(params), t);
    let plan = PanelPlan::new(r_max, t, DEFAULT_NODES, DEFAULT_PANEL_BUDGET, t)?;

    let a1_int = integrate(&plan, |r| {
        let g0 = profiles::g0_hat(params, r, t);
        Ok(r * r * g0 * g0 * r.powi(n as i32 - 1))
    })?;
    let a1 = m2 * surface / nf * a1_int.value;

    let direct_int = integrate(&plan, |r| {
        let (s, v) = profiles::psi2_hat_parts(params, r, t, moments);
        Ok((s * s + r * r * m2 * v * v / nf) * r.powi(n as i32 - 1))
    })?;
    let direct = surface * direct_int.value;

    let (pc, p2) = (moments.p_combined, moments.p2_coeff);
    let scale = t.powf(1.0 - nf / 2.0) * surface;
    let piece = |coeff: f64, offset: i32| -> Result<f64> {
        Ok(coeff * scale * gamma_limit_integral(n, delta, t, offset)?.value)
    };
    let a2_1 = piece(pc * pc, -3)?;
    let a2_2 = piece(2.0 * pc * p2, -1)?;
    let a2_3 = piece(p2 * p2, 1)?;
    let a2_scaled = (a2_1 + a2_2 + a2_3) * t.powf(nf / 2.0 - 1.0);

    let (stated_constant, limit_constant) = if n >= 3 {
        let h = nf / 2.0;
        let g = gamma_fn(h - 1.0)?;
        let stated = 0.25 * delta.powf(-h - 1.0) * g * surface * (delta * pc + h * p2).powi(2);
        let limit = 0.25
            * surface
            * (pc * pc * delta.powf(1.0 - h) * g
                + 2.0 * pc * p2 * delta.powf(-h) * gamma_fn(h)?
                + p2 * p2 * delta.powf(-h - 1.0) * gamma_fn(h + 1.0)?);
        (Some(stated), Some(limit))
    } else {
        (None, None)
    };

    Ok(LowerDecomposition {
        a1,
        a2_1,
        a2_2,
        a2_3,
        direct,
        a2_scaled,
        stated_constant,
        limit_constant,
    })
}
