//! Large-time profile symbols and the residual estimates that justify them.
//!
//! ```text
//! Ĝ0 = (e^{-κ r² t} - cos(rt) e^{-δ/2 r² t}) / r²
//! Ĝ1 = sin(rt) / r · e^{-δ/2 r² t}
//! Ĥ0 = h0 · r t sin(rt) e^{-δ/2 r² t},     h0 = (4δ̂ - κδ²) / (8κ)
//! ```
//!
//! The first-order profile is `Ĝ0 P_{ψ2}`; the second-order profile adds
//! `-i (ξ·M_{ψ2}) Ĝ0 + (P_{Ψ} + P2 t r²) Ĝ1` with
//! `P_{Ψ} = P_{ψ1} + (2κ-δ)/2 · P_{ψ2}` and `P2 = h0 · P_{ψ2}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modal::{self, DataHat};
use crate::params::PhysicalParams;
use crate::spectrum::{self, Regime, RootTriple};

/// Moments entering the profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub m2: Vec<f64>,
    pub p_combined: f64,
    pub p2_coeff: f64,
}

impl MomentSet {
    pub fn new(params: &PhysicalParams, p0: f64, p1: f64, p2: f64, m2: Vec<f64>) -> Self {
        MomentSet {
            p0,
            p1,
            p2,
            m2,
            p_combined: p1 + params.combined_weight() * p2,
            p2_coeff: params.h0_coeff() * p2,
        }
    }

    /// Moments chosen through the profile constants directly: `p_combined`
    /// and `p2_coeff` are the given values and `p1`, `p2` are solved for.
    pub fn from_profile_constants(params: &PhysicalParams, p_combined: f64, p2_coeff: f64, m2: Vec<f64>) -> Self {
        let p2 = p2_coeff / params.h0_coeff();
        let p1 = p_combined - params.combined_weight() * p2;
        MomentSet::new(params, 0.0, p1, p2, m2)
    }

    pub fn m2_norm_sq(&self) -> f64 {
        self.m2.iter().map(|m| m * m).sum()
    }
}

/// Ĝ0 with the `r -> 0` cancellation removed. For `|(δ/2-κ) r² t| <= 1`
///
/// ```text
/// Ĝ0 = e^{-δ/2 r² t} (expm1((δ/2-κ) r² t) + 2 sin²(rt/2)) / r²
/// ```
///
/// and the defining formula otherwise. At `r = 0` the limit
/// `t²/2 + (δ/2-κ) t` is returned.
pub fn g0_hat(params: &PhysicalParams, r: f64, t: f64) -> f64 {
    let r2 = r * r;
    let gap = 0.5 * params.delta() - params.kappa();
    if r2 == 0.0 {
        return 0.5 * t * t + gap * t;
    }
    let x = gap * r2 * t;
    if x.abs() <= 1.0 {
        let half = (0.5 * r * t).sin();
        (-0.5 * params.delta() * r2 * t).exp() * (x.exp_m1() + 2.0 * half * half) / r2
    } else {
        ((-params.kappa() * r2 * t).exp() - (r * t).cos() * (-0.5 * params.delta() * r2 * t).exp()) / r2
    }
}

pub fn g1_hat(params: &PhysicalParams, r: f64, t: f64) -> f64 {
    sin_over(r, t) * (-0.5 * params.delta() * r * r * t).exp()
}

pub fn h0_hat(params: &PhysicalParams, r: f64, t: f64) -> f64 {
    params.h0_coeff() * r * t * (r * t).sin() * (-0.5 * params.delta() * r * r * t).exp()
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

fn complex_pair(roots: &RootTriple) -> Result<()> {
    if roots.regime == Regime::ComplexPair {
        Ok(())
    } else {
        Err(Error::DegenerateRoots {
            r: f64::NAN,
            discriminant: roots.discriminant,
        })
    }
}

/// `e^{λ1 t} - cos(λI t) e^{λR t}` without cancellation for small `|u t|`.
fn heat_wave_gap(roots: &RootTriple, t: f64) -> f64 {
    let u = roots.lambda_re - roots.lambda1;
    let e = (roots.lambda_re * t).exp();
    let th = roots.lambda_im * t;
    if (u * t).abs() <= 1.0 {
        let half = (0.5 * th).sin();
        e * ((-u * t).exp_m1() + 2.0 * half * half)
    } else {
        (roots.lambda1 * t).exp() - th.cos() * e
    }
}

fn p0(roots: &RootTriple) -> f64 {
    let u = roots.lambda_re - roots.lambda1;
    u * u + roots.lambda_im * roots.lambda_im
}

/// `Ĵ0 = (e^{λ1 t} - cos(λI t) e^{λR t}) / P0 · ψ̂2` with
/// `P0 = (λR-λ1)² + λI²` (the negated denominator `2λRλ1 - λI² - λR² - λ1²`
/// written as a sum of squares).
pub fn j0_hat(roots: &RootTriple, t: f64, psi2: Complex64) -> Result<Complex64> {
    complex_pair(roots)?;
    Ok(psi2 * (heat_wave_gap(roots, t) / p0(roots)))
}

/// `Ĵ1 = λI sin(λI t) e^{λR t} / P0 · ψ̂1 + (λR-λ1) sin(λI t) e^{λR t} / (λI P0) · ψ̂2`.
pub fn j1_hat(roots: &RootTriple, t: f64, psi1: Complex64, psi2: Complex64) -> Result<Complex64> {
    complex_pair(roots)?;
    let li = roots.lambda_im;
    let u = roots.lambda_re - roots.lambda1;
    let s = (li * t).sin() * (roots.lambda_re * t).exp() / p0(roots);
    Ok(psi1 * (li * s) + psi2 * (u * s / li))
}

/// First-order profile symbol `Ĝ0 P_{ψ2}`.
pub fn psi1_hat(params: &PhysicalParams, r: f64, t: f64, moments: &MomentSet) -> f64 {
    g0_hat(params, r, t) * moments.p2
}

/// Second-order profile split into its radial scalar part
/// `(P_{Ψ} + P2 t r²) Ĝ1` and the coefficient `Ĝ0` of the first-moment term.
///
/// The full symbol is `scalar - i (ξ·M_{ψ2}) vector_coeff`, the sign matching
/// the datum transform `P - i M·ξ`. Its squared modulus averages over
/// directions to `scalar² + r² |M|² vector_coeff² / n`.
pub fn psi2_hat_parts(params: &PhysicalParams, r: f64, t: f64, moments: &MomentSet) -> (f64, f64) {
    let scalar = (moments.p_combined + moments.p2_coeff * t * r * r) * g1_hat(params, r, t);
    (scalar, g0_hat(params, r, t))
}

/// Normalized residual ratios at one `(r, t)`; envelopes use `c = κ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRatios {
    /// `|Ĵ0 - Ĝ0 ψ̂2| / (t^{1/2} e^{-c r² t} |ψ̂2|)`
    pub est01: f64,
    /// `|Ĵ0 - Ĝ0 ψ̂2| / (e^{-c r² t} |ψ̂2|)`
    pub est01_plain: f64,
    /// `|Ĵ0 - (Ĝ0 + Ĥ0) ψ̂2| / (e^{-c r² t} |ψ̂2|)`
    pub est02: f64,
    /// `|Ĵ1 - Ĝ1 Ψ̂| / (e^{-c r² t} (|ψ̂1| + |ψ̂2|))`
    pub est03: f64,
    /// `|ψ̂ - Ĵ0| / (e^{-c r² t} (|ψ̂0| + |sin rt| / r (|ψ̂1| + |ψ̂2|)))`
    pub solution_first: f64,
    /// `|ψ̂ - Ĵ0 - Ĵ1| / (e^{-c r² t} (|ψ̂0| + |ψ̂1|))`
    pub solution_second: f64,
    /// `|Ĵ0 - Ĝ0 ψ̂2|`, unnormalized
    pub j0_err: f64,
}

impl ResidualRatios {
    fn max(self, o: ResidualRatios) -> ResidualRatios {
        ResidualRatios {
            est01: self.est01.max(o.est01),
            est01_plain: self.est01_plain.max(o.est01_plain),
            est02: self.est02.max(o.est02),
            est03: self.est03.max(o.est03),
            solution_first: self.solution_first.max(o.solution_first),
            solution_second: self.solution_second.max(o.solution_second),
            j0_err: self.j0_err.max(o.j0_err),
        }
    }

    fn zero() -> ResidualRatios {
        ResidualRatios {
            est01: 0.0,
            est01_plain: 0.0,
            est02: 0.0,
            est03: 0.0,
            solution_first: 0.0,
            solution_second: 0.0,
            j0_err: 0.0,
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn residual_ratios(params: &PhysicalParams, r: f64, t: f64, data: &DataHat) -> Result<ResidualRatios> {
    let eps0 = params.eps0();
    if !(r > 0.0 && r <= eps0) {
        return Err(Error::OutsideSmallZone { r, eps0 });
    }
    let roots = spectrum::exact_roots(params, r)?;
    let j0 = j0_hat(&roots, t, data.psi2)?;
    let j1 = j1_hat(&roots, t, data.psi1, data.psi2)?;
    let psi = modal::kernels_from_roots(&roots, t).apply(data);
    let g0 = g0_hat(params, r, t);
    let g1 = g1_hat(params, r, t);
    let h0 = h0_hat(params, r, t);
    let combined = data.psi1 + data.psi2 * params.combined_weight();
    let env = (-modal::envelope_rate(params) * r * r * t).exp();
    let (a0, a1, a2) = (data.psi0.norm(), data.psi1.norm(), data.psi2.norm());
    let d01 = (j0 - data.psi2 * g0).norm();
    let d02 = (j0 - data.psi2 * (g0 + h0)).norm();
    let d03 = (j1 - combined * g1).norm();
    let s1 = (psi - j0).norm();
    let s2 = (psi - j0 - j1).norm();
    Ok(ResidualRatios {
        est01: ratio(d01, t.sqrt() * env * a2),
        est01_plain: ratio(d01, env * a2),
        est02: ratio(d02, env * a2),
        est03: ratio(d03, env * (a1 + a2)),
        solution_first: ratio(s1, env * (a0 + (r * t).sin().abs() / r * (a1 + a2))),
        solution_second: ratio(s2, env * (a0 + a1)),
        j0_err: d01,
    })
}

/// Maximal residual ratios over an `r × t` grid.
pub fn residual_order_check(
    params: &PhysicalParams,
    r_grid: &[f64],
    t_grid: &[f64],
    data: &DataHat,
) -> Result<ResidualRatios> {
    let rows: Vec<Result<ResidualRatios>> = r_grid
        .par_iter()
        .map(|&r| {
            let mut acc = ResidualRatios::zero();
            for &t in t_grid {
                acc = acc.max(residual_ratios(params, r, t, data)?);
            }
            Ok(acc)
        })
        .collect();
    let mut acc = ResidualRatios::zero();
    for row in rows {
        acc = acc.max(row?);
    }
    Ok(acc)
}
