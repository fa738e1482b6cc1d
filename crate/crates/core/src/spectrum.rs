//! Characteristic roots of
//!
//! ```text
//! λ³ + (δ+κ) r² λ² + (1 + γ̃ r²) r² λ + κ r⁴ = 0
//! ```
//!
//! at a radial frequency `r = |ξ|`.
//!
//! Two independent exact paths are provided: a Cardano solver in
//! trigonometric/hyperbolic form ([`exact_roots`]) and the eigenvalues of a
//! rescaled companion matrix ([`companion_roots`]). Both finish with one
//! Newton step per root. [`asymptotic_roots`] evaluates the small-frequency
//! expansions truncated after the r⁴ terms.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// `|discriminant| <= DEGENERACY_TOL * scale^6` is treated as a repeated root.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// Coefficients of the monic cubic `λ³ + c2 λ² + c1 λ + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CubicCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        ((x + self.c2) * x + self.c1) * x + self.c0
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        (3.0 * x + 2.0 * self.c2) * x + self.c1
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        ((z + self.c2) * z + self.c1) * z + self.c0
    }

    pub fn eval_deriv_c(&self, z: Complex64) -> Complex64 {
        (3.0 * z + 2.0 * self.c2) * z + self.c1
    }

    /// Typical root magnitude.
    pub fn scale(&self) -> f64 {
        self.c2.abs().max(self.c1.abs().sqrt()).max(self.c0.abs().cbrt())
    }

    /// `-4P³ - 27Q²` of the depressed cubic `y³ + P y + Q`.
    pub fn discriminant(&self) -> f64 {
        let (p, q) = self.depressed();
        -4.0 * p * p * p - 27.0 * q * q
    }

    fn depressed(&self) -> (f64, f64) {
        let a = self.c2;
        let p = self.c1 - a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 - a * self.c1 / 3.0 + self.c0;
        (p, q)
    }

    fn polish(&self, x: f64) -> f64 {
        let d = self.eval_deriv(x);
        if d == 0.0 {
            x
        } else {
            x - self.eval(x) / d
        }
    }

    fn polish_c(&self, z: Complex64) -> Complex64 {
        let d = self.eval_deriv_c(z);
        if d.norm() == 0.0 {
            z
        } else {
            z - self.eval_c(z) / d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// One real root and a complex-conjugate pair (negative discriminant).
    ComplexPair,
    /// Three distinct real roots.
    ThreeReal,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::ComplexPair => "complex-pair",
            Regime::ThreeReal => "three-real",
        }
    }
}

/// The roots `λ1` and `λR ± i λI`.
///
/// In the three-real regime `lambda_im` is zero and the two remaining real
/// roots are `lambda_re ± real_split`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootTriple {
    pub lambda1: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub real_split: f64,
    pub discriminant: f64,
    pub regime: Regime,
}

impl RootTriple {
    pub fn roots(&self) -> [Complex64; 3] {
        match self.regime {
            Regime::ComplexPair => [
                Complex64::new(self.lambda1, 0.0),
                Complex64::new(self.lambda_re, self.lambda_im),
                Complex64::new(self.lambda_re, -self.lambda_im),
            ],
            Regime::ThreeReal => [
                Complex64::new(self.lambda1, 0.0),
                Complex64::new(self.lambda_re + self.real_split, 0.0),
                Complex64::new(self.lambda_re - self.real_split, 0.0),
            ],
        }
    }

    /// `λ2 λ3`.
    pub fn pair_product(&self) -> f64 {
        self.lambda_re * self.lambda_re + self.lambda_im * self.lambda_im - self.real_split * self.real_split
    }

    /// Relative residuals of the three Vieta identities (sum, middle, product).
    pub fn vieta_residuals(&self, c: &CubicCoeffs) -> [f64; 3] {
        let q = self.pair_product();
        let sum = self.lambda1 + 2.0 * self.lambda_re;
        let mid_a = 2.0 * self.lambda1 * self.lambda_re;
        let prod = self.lambda1 * q;
        [
            (sum + c.c2).abs() / c.c2.abs().max(self.lambda1.abs() + 2.0 * self.lambda_re.abs()),
            (mid_a + q - c.c1).abs() / c.c1.abs().max(mid_a.abs() + q.abs()),
            (prod + c.c0).abs() / c.c0.abs().max(prod.abs()),
        ]
    }

    pub fn max_vieta_residual(&self, c: &CubicCoeffs) -> f64 {
        self.vieta_residuals(c).into_iter().fold(0.0, f64::max)
    }
}

pub fn char_poly_coeffs(params: &PhysicalParams, r: f64) -> CubicCoeffs {
    let r2 = r * r;
    CubicCoeffs {
        c2: (params.delta() + params.kappa()) * r2,
        c1: (1.0 + params.gamma_tilde() * r2) * r2,
        c0: params.kappa() * r2 * r2,
    }
}

/// Exact roots through Cardano's formula.
pub fn exact_roots(params: &PhysicalParams, r: f64) -> Result<RootTriple> {
    check_frequency(r)?;
    let c = char_poly_coeffs(params, r);
    solve_cubic(&c, -params.kappa() * r * r).map_err(|d| Error::DegenerateRoots { r, discriminant: d })
}

/// Solves a monic cubic. `anchor` selects the root reported as `lambda1`
/// when all three are real. On a (nearly) repeated root the discriminant is
/// returned as the error.
pub fn solve_cubic(c: &CubicCoeffs, anchor: f64) -> std::result::Result<RootTriple, f64> {
    let (p, q) = c.depressed();
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    let scale = c.scale();
    if disc.abs() <= DEGENERACY_TOL * scale.powi(6) || !disc.is_finite() {
        return Err(disc);
    }
    let shift = c.c2 / 3.0;

    if disc < 0.0 {
        let y = if p > 0.0 {
            let s = (p / 3.0).sqrt();
            -2.0 * s * ((3.0 * q / (2.0 * p) / s).asinh() / 3.0).sinh()
        } else if p < 0.0 {
            let s = (-p / 3.0).sqrt();
            let arg = (-3.0 * q.abs() / (2.0 * p) / s).max(1.0);
            -2.0 * q.signum() * s * (arg.acosh() / 3.0).cosh()
        } else {
            -q.cbrt()
        };
        let lambda1 = c.polish(y - shift);
        let re = -(c.c2 + lambda1) / 2.0;
        let prod = if lambda1 != 0.0 {
            -c.c0 / lambda1
        } else {
            c.c1 - 2.0 * lambda1 * re
        };
        let im = (prod - re * re).max(0.0).sqrt();
        let z = c.polish_c(Complex64::new(re, im));
        Ok(RootTriple {
            lambda1,
            lambda_re: z.re,
            lambda_im: z.im.abs(),
            real_split: 0.0,
            discriminant: disc,
            regime: Regime::ComplexPair,
        })
    } else {
        // three real roots, p < 0 necessarily
        let s = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) / s).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, root) in roots.iter_mut().enumerate() {
            let y = 2.0 * s * (theta - 2.0 * PI * k as f64 / 3.0).cos();
            *root = c.polish(y - shift);
        }
        Ok(three_real(roots, anchor, disc))
    }
}

fn three_real(mut roots: [f64; 3], anchor: f64, disc: f64) -> RootTriple {
    roots.sort_by(|a, b| {
        (a - anchor)
            .abs()
            .partial_cmp(&(b - anchor).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let (u, v) = (roots[1].max(roots[2]), roots[1].min(roots[2]));
    RootTriple {
        lambda1: roots[0],
        lambda_re: 0.5 * (u + v),
        lambda_im: 0.0,
        real_split: 0.5 * (u - v),
        discriminant: disc,
        regime: Regime::ThreeReal,
    }
}

/// Independent root path: eigenvalues of the companion matrix of the cubic
/// rescaled by its root magnitude, followed by one Newton step per root.
pub fn companion_roots(params: &PhysicalParams, r: f64) -> Result<RootTriple> {
    check_frequency(r)?;
    let c = char_poly_coeffs(params, r);
    let s = c.scale();
    let (a, b, d) = (c.c2 / s, c.c1 / (s * s), c.c0 / (s * s * s));
    let m = Matrix3::new(-a, -b, -d, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eig = m.complex_eigenvalues();
    let mut z: Vec<Complex64> = eig
        .iter()
        .map(|e| c.polish_c(Complex64::new(e.re * s, e.im * s)))
        .collect();

    // discriminant from the roots: prod (λi - λj)^2
    let disc_c = ((z[0] - z[1]) * (z[0] - z[2]) * (z[1] - z[2])).powi(2);
    let disc = disc_c.re;
    if disc.abs() <= DEGENERACY_TOL * s.powi(6) {
        return Err(Error::DegenerateRoots { r, discriminant: disc });
    }
    if disc < 0.0 {
        z.sort_by(|x, y| x.im.abs().partial_cmp(&y.im.abs()).unwrap());
        let lambda1 = z[0].re;
        Ok(RootTriple {
            lambda1,
            lambda_re: 0.5 * (z[1].re + z[2].re),
            lambda_im: 0.5 * (z[1].im.abs() + z[2].im.abs()),
            real_split: 0.0,
            discriminant: disc,
            regime: Regime::ComplexPair,
        })
    } else {
        Ok(three_real([z[0].re, z[1].re, z[2].re], -params.kappa() * r * r, disc))
    }
}

/// Small-frequency expansions truncated after the r⁴ terms:
///
/// ```text
/// λ1    = -κ r² + δ̂ r⁴
/// λ2,3  = ± i r - (δ/2) r² ± i h0 r³ - (δ̂/2) r⁴,   h0 = (4δ̂ - κδ²)/(8κ)
/// ```
pub fn asymptotic_roots(params: &PhysicalParams, r: f64) -> Result<RootTriple> {
    let eps0 = params.eps0();
    if !(r > 0.0 && r <= eps0) {
        return Err(Error::OutsideSmallZone { r, eps0 });
    }
    let r2 = r * r;
    let r4 = r2 * r2;
    let dh = params.delta_hat();
    Ok(RootTriple {
        lambda1: -params.kappa() * r2 + dh * r4,
        lambda_re: -0.5 * params.delta() * r2 - 0.5 * dh * r4,
        lambda_im: r + params.h0_coeff() * r2 * r,
        real_split: 0.0,
        discriminant: -4.0 * r4 * r2 + 4.0 * params.delta_tilde() * r4 * r4,
        regime: Regime::ComplexPair,
    })
}

/// Measured orders of the expansion remainders. `None` marks a component
/// whose expansion is exact to rounding on the whole grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionOrder {
    pub s1: Option<f64>,
    pub s23_re: Option<f64>,
    pub s23_im: Option<f64>,
}

/// Relative size below which a remainder counts as rounding noise.
const EXACT_REL_TOL: f64 = 1e-12;

/// `exact - asymptotic` for `λ1`, `Re λ2` and `Im λ2`.
///
/// The remainders fall below `f64` resolution of the roots themselves
/// (relative size ~r⁴), so the exact roots are refined by Newton steps in
/// double-double arithmetic on a double-double copy of the cubic before the
/// expansions are subtracted.
pub fn expansion_remainders(params: &PhysicalParams, r: f64) -> Result<[f64; 3]> {
    let eps0 = params.eps0();
    if !(r > 0.0 && r <= eps0) {
        return Err(Error::OutsideSmallZone { r, eps0 });
    }
    let seed = exact_roots(params, r)?;
    let dd = TwoFloat::from_f64;
    let r2 = TwoFloat::new_mul(r, r);
    let r4 = r2 * r2;
    let c2 = (dd(params.delta()) + params.kappa()) * r2;
    let c1 = r2 + r4 * params.gamma_tilde();
    let c0 = r4 * params.kappa();
    let c = (c2.hi(), c1.hi(), c0.hi());
    let deriv = |x: f64| (3.0 * x + 2.0 * c.0) * x + c.1;

    let mut l1 = dd(seed.lambda1);
    for _ in 0..3 {
        let p = ((l1 + c2) * l1 + c1) * l1 + c0;
        l1 -= p / deriv(l1.hi());
    }

    let (mut x, mut y) = (dd(seed.lambda_re), dd(seed.lambda_im));
    for _ in 0..3 {
        // p(z) = ((z + c2) z + c1) z + c0 with z = x + i y
        let (ax, ay) = (x + c2, y);
        let (bx, by) = (ax * x - ay * y + c1, ax * y + ay * x);
        let (px, py) = (bx * x - by * y + c0, bx * y + by * x);
        let z = Complex64::new(x.hi(), y.hi());
        let d = (3.0 * z + 2.0 * c.0) * z + c.1;
        let inv = 1.0 / d.norm_sqr();
        // (px + i py) / d
        let qx = (px * d.re + py * d.im) * inv;
        let qy = (py * d.re - px * d.im) * inv;
        x -= qx;
        y -= qy;
    }

    let dh = params.delta_hat();
    let a1 = r2 * (-params.kappa()) + r4 * dh;
    let are = r2 * (-0.5 * params.delta()) - r4 * (0.5 * dh);
    let aim = dd(r) + r2 * (params.h0_coeff() * r);
    Ok([(l1 - a1).hi(), (x - are).hi(), (y - aim).hi()])
}

/// Log-log slopes of `|exact - asymptotic|` against `r` for each root
/// component.
pub fn expansion_order(params: &PhysicalParams, r_grid: &[f64]) -> Result<ExpansionOrder> {
    check_geometric(r_grid, 8)?;
    let mut err = [Vec::new(), Vec::new(), Vec::new()];
    let mut scale = [Vec::new(), Vec::new(), Vec::new()];
    for &r in r_grid {
        let rem = expansion_remainders(params, r)?;
        let exact = exact_roots(params, r)?;
        let mags = [exact.lambda1, exact.lambda_re, exact.lambda_im];
        for k in 0..3 {
            err[k].push(rem[k].abs());
            scale[k].push(mags[k].abs());
        }
    }
    let slope = |k: usize| -> Option<f64> {
        let exact = err[k].iter().zip(&scale[k]).all(|(e, s)| *e <= EXACT_REL_TOL * s);
        if exact {
            return None;
        }
        let pts: Vec<(f64, f64)> = r_grid
            .iter()
            .zip(&err[k])
            .filter(|(_, e)| **e > 0.0)
            .map(|(r, e)| (r.ln(), e.ln()))
            .collect();
        crate::rates::ls_slope(&pts)
    };
    Ok(ExpansionOrder {
        s1: slope(0),
        s23_re: slope(1),
        s23_im: slope(2),
    })
}

/// Log-log slope of `|Δ + 4 r⁶|` against `r`.
pub fn discriminant_remainder_slope(params: &PhysicalParams, r_grid: &[f64]) -> Result<f64> {
    check_geometric(r_grid, 4)?;
    let pts: Vec<(f64, f64)> = r_grid
        .iter()
        .map(|&r| {
            let d = char_poly_coeffs(params, r).discriminant();
            (r.ln(), (d + 4.0 * r.powi(6)).abs().ln())
        })
        .collect();
    crate::rates::ls_slope(&pts).ok_or_else(|| Error::InvalidGrid("flat frequency grid".into()))
}

/// `r_max * ratio^-k` for `k = 0..count`.
pub fn geometric_grid_down(r_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r_max * ratio.powi(-(k as i32))).collect()
}

fn check_frequency(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "radial frequency must be positive and finite",
        })
    }
}

fn check_geometric(grid: &[f64], min_len: usize) -> Result<()> {
    if grid.len() < min_len {
        return Err(Error::InvalidGrid(format!(
            "need at least {min_len} points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidGrid("frequencies must be positive".into()));
    }
    let ratio = grid[1] / grid[0];
    let geometric = ratio != 1.0 && grid.windows(2).all(|w| ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(Error::InvalidGrid("frequency grid is not geometric".into()));
    }
    Ok(())
}
