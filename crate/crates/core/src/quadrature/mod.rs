//! L² norms through Plancherel and radial quadrature.
//!
//! Every norm reduces to a one-dimensional integral in `r = |ξ|`:
//! the solution is written as `ψ̂(rω) = S(r) + i ω·V(r)` with a real scalar
//! channel `S` and a real vector channel `V`, and the angular average of
//! `|ψ̂|²` is `S² + |V|²/n`. The radial integral is computed with
//! Gauss–Legendre panels no wider than a quarter period of the fastest
//! oscillation, truncated where the heat factor drops below `1e-16`.

pub mod gauss;
pub mod multipliers;
pub mod special;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::DatumTriple;
use crate::error::{Error, Result};
use crate::modal;
use crate::params::PhysicalParams;
use crate::profiles;

pub use gauss::GaussRule;
pub use multipliers::{
    gamma_limit_integral, multiplier_norm, psi2_lower_decomposition, GammaLimit, LowerDecomposition, MultiplierKind,
};
pub use special::{gamma_fn, sphere_surface};

pub const DEFAULT_NODES: usize = 15;
/// Lower-order companion rule used for the per-panel error estimate.
pub const CHECK_NODES: usize = 8;
pub const DEFAULT_PANEL_BUDGET: usize = 4_000_000;
pub const MAX_DIMENSION: usize = 8;
/// Level below which the Gaussian tail is dropped.
pub const TAIL_LEVEL: f64 = 1e-16;
/// Minimum number of panels on any interval.
const MIN_PANELS: usize = 64;

/// Equal-width panels on `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelPlan {
    pub r_max: f64,
    pub panels: Vec<(f64, f64)>,
    pub nodes: usize,
}

impl PanelPlan {
    /// Panels no wider than `π / (2 freq)` (a quarter period of
    /// `sin(freq r)`) and `r_max / 64`.
    pub fn new(r_max: f64, freq: f64, nodes: usize, budget: usize, t: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("bad truncation radius {r_max}")));
        }
        let width = if freq > 0.0 { PI / (2.0 * freq) } else { f64::INFINITY };
        let count = ((r_max / width).ceil() as usize).max(MIN_PANELS);
        if count > budget {
            return Err(Error::PanelBudget {
                t,
                panels: count,
                budget,
            });
        }
        let h = r_max / count as f64;
        let panels = (0..count)
            .map(|k| {
                let hi = if k + 1 == count { r_max } else { h * (k + 1) as f64 };
                (h * k as f64, hi)
            })
            .collect();
        Ok(PanelPlan { r_max, panels, nodes })
    }

    /// Radius beyond which `e^{-c r² t} < TAIL_LEVEL`.
    pub fn truncation_radius(c: f64, t: f64) -> f64 {
        ((1.0 / TAIL_LEVEL).ln().max(1.0) / (c * t)).sqrt()
    }
}

/// Slowest Gaussian rate on the real line: `min(κ, δ/2) / 2`.
pub fn min_heat_rate(params: &PhysicalParams) -> f64 {
    0.5 * params.kappa().min(0.5 * params.delta())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// `Σ |Q_hi - Q_lo|` over panels.
    pub err_est: f64,
    pub panels: usize,
}

/// Panel sums are formed in parallel and accumulated in panel order with
/// Neumaier compensation, so the result does not depend on the thread count.
pub fn integrate<F>(plan: &PanelPlan, f: F) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let hi_rule = GaussRule::legendre(plan.nodes);
    let lo_rule = GaussRule::legendre(CHECK_NODES.min(plan.nodes.saturating_sub(1)).max(1));
    let sums: Vec<(f64, f64)> = plan
        .panels
        .par_iter()
        .map(|&(a, b)| -> Result<(f64, f64)> {
            let mut hi = 0.0;
            for (x, w) in hi_rule.mapped(a, b) {
                hi += w * f(x)?;
            }
            let mut lo = 0.0;
            for (x, w) in lo_rule.mapped(a, b) {
                lo += w * f(x)?;
            }
            Ok((hi, lo))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = neumaier_sum(sums.iter().map(|s| s.0));
    let err_est = neumaier_sum(sums.iter().map(|s| (s.0 - s.1).abs()));
    Ok(QuadResult {
        value,
        err_est,
        panels: plan.panels.len(),
    })
}

pub fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Which frequencies enter a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZonePolicy {
    FullLine,
    /// Only `r <= ε0`.
    SmallZone,
}

/// Profiles subtracted from the solution; subtraction is cumulative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Subtract {
    None,
    First,
    FirstAndSecond,
}

impl Subtract {
    pub fn from_flags(profile1: bool, profile2: bool) -> Result<Self> {
        match (profile1, profile2) {
            (false, false) => Ok(Subtract::None),
            (true, false) => Ok(Subtract::First),
            (true, true) => Ok(Subtract::FirstAndSecond),
            (false, true) => Err(Error::Config(
                "the second-order profile can only be subtracted together with the first".into(),
            )),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Subtract::None => "none",
            Subtract::First => "profile1",
            Subtract::FirstAndSecond => "profile1+profile2",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormTask<'a> {
    pub params: &'a PhysicalParams,
    pub data: &'a DatumTriple,
    pub t: f64,
    pub n: usize,
    pub subtract: Subtract,
    pub zone: ZonePolicy,
    pub nodes: usize,
    pub panel_budget: usize,
}

impl<'a> NormTask<'a> {
    pub fn new(params: &'a PhysicalParams, data: &'a DatumTriple, t: f64, n: usize) -> Self {
        NormTask {
            params,
            data,
            t,
            n,
            subtract: Subtract::None,
            zone: ZonePolicy::FullLine,
            nodes: DEFAULT_NODES,
            panel_budget: DEFAULT_PANEL_BUDGET,
        }
    }

    pub fn subtract(mut self, s: Subtract) -> Self {
        self.subtract = s;
        self
    }

    pub fn zone(mut self, z: ZonePolicy) -> Self {
        self.zone = z;
        self
    }

    pub fn nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.n)?;
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: self.t,
                reason: "norm time must be positive",
            });
        }
        self.data.validate()
    }

    /// Quadrature plan in `r`.
    pub fn plan(&self) -> Result<PanelPlan> {
        let mut r_max = PanelPlan::truncation_radius(min_heat_rate(self.params), self.t);
        if self.zone == ZonePolicy::SmallZone {
            r_max = r_max.min(self.params.eps0());
        }
        PanelPlan::new(r_max, self.t, self.nodes, self.panel_budget, self.t)
    }
}

pub fn check_dimension(n: usize) -> Result<()> {
    if (1..=MAX_DIMENSION).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "dimension must lie in 1..=8",
        })
    }
}

/// One measured norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSample {
    pub n: usize,
    pub t: f64,
    pub norm: f64,
    pub subtracted: Subtract,
    /// Relative error estimate of the norm.
    pub quad_err_est: f64,
    pub panels_used: usize,
}

/// `S(r)` and `|V(r)|²` of `ψ̂ - (subtracted profiles)`.
pub struct Channels<'a> {
    params: &'a PhysicalParams,
    t: f64,
    subtract: Subtract,
    p: [f64; 3],
    sigma: [f64; 3],
    gram: [[f64; 3]; 3],
    p_psi2: f64,
    p_combined: f64,
    p2_coeff: f64,
}

impl<'a> Channels<'a> {
    pub fn new(params: &'a PhysicalParams, data: &DatumTriple, n: usize, t: f64, subtract: Subtract) -> Self {
        let specs = data.specs();
        let m: Vec<Vec<f64>> = specs.iter().map(|s| s.moment_in(n)).collect();
        let mut gram = [[0.0; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                gram[j][k] = m[j].iter().zip(&m[k]).map(|(a, b)| a * b).sum();
            }
        }
        let moments = data.moment_set(params, n);
        Channels {
            params,
            t,
            subtract,
            p: [specs[0].p, specs[1].p, specs[2].p],
            sigma: [specs[0].sigma, specs[1].sigma, specs[2].sigma],
            gram,
            p_psi2: moments.p2,
            p_combined: moments.p_combined,
            p2_coeff: moments.p2_coeff,
        }
    }

    /// `(S, |V|²)` at radius `r`.
    pub fn at(&self, r: f64) -> Result<(f64, f64)> {
        let k = modal::kernels(self.params, r, self.t)?;
        let kj = [k.k0, k.k1, k.k2];
        let mut s = 0.0;
        let mut a = [0.0; 3];
        for j in 0..3 {
            let g = (-self.sigma[j] * r * r).exp();
            s += kj[j] * self.p[j] * g;
            a[j] = -kj[j] * g;
        }
        if self.subtract != Subtract::None {
            let g0 = profiles::g0_hat(self.params, r, self.t);
            s -= g0 * self.p_psi2;
            if self.subtract == Subtract::FirstAndSecond {
                let g1 = profiles::g1_hat(self.params, r, self.t);
                s -= (self.p_combined + self.p2_coeff * self.t * r * r) * g1;
                // profile vector part is -r Ĝ0 M_{ψ2}
                a[2] += g0;
            }
        }
        let mut v2 = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                v2 += a[j] * a[k] * self.gram[j][k];
            }
        }
        Ok((s, r * r * v2))
    }
}

/// `‖ψ(t) - subtracted profiles‖_{L²}` with `‖f‖² = (2π)^{-n} ‖f̂‖²`.
pub fn solution_error_norm(task: &NormTask) -> Result<NormSample> {
    task.validate()?;
    let n = task.n;
    let ch = Channels::new(task.params, task.data, n, task.t, task.subtract);
    let nf = n as f64;
    let q = integrate(&task.plan()?, |r| {
        let (s, v2) = ch.at(r)?;
        Ok((s * s + v2 / nf) * r.powi(n as i32 - 1))
    })?;
    let scale = sphere_surface(n)? * (2.0 * PI).powi(-(n as i32));
    let sq = scale * q.value;
    let norm = sq.max(0.0).sqrt();
    let quad_err_est = if q.value > 0.0 { 0.5 * q.err_est / q.value } else { 0.0 };
    Ok(NormSample {
        n,
        t: task.t,
        norm,
        subtracted: task.subtract,
        quad_err_est,
        panels_used: q.panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatumSpec;
    use crate::rates::{fit_rate, geometric_grid, RateRef};

    #[test]
    fn neumaier() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(v.into_iter()), 2.0);
    }

    #[test]
    fn gaussian_integral() {
        // ∫_0^∞ e^{-a r²} dr = √(π/a)/2
        let a = 0.3;
        let plan = PanelPlan::new(PanelPlan::truncation_radius(a, 1.0), 1.0, 15, 1000, 1.0).unwrap();
        let q = integrate(&plan, |r| Ok((-a * r * r).exp())).unwrap();
        assert!((q.value - 0.5 * (PI / a).sqrt()).abs() < 1e-14);
        assert!(q.err_est < 1e-12);
    }

    #[test]
    fn two_sided_equals_twice_radial() {
        let f = |r: f64| (-0.2 * r * r).exp() * (3.0 * r).cos().powi(2);
        let plan = PanelPlan::new(15.0, 3.0, 15, 10_000, 1.0).unwrap();
        let radial = integrate(&plan, |r| Ok(f(r))).unwrap().value;
        let neg = integrate(&plan, |r| Ok(f(-r))).unwrap().value;
        assert!(((radial + neg) - 2.0 * radial).abs() < 1e-14 * radial);
    }

    #[test]
    fn subtract_flags() {
        assert_eq!(Subtract::from_flags(false, false).unwrap(), Subtract::None);
        assert_eq!(Subtract::from_flags(true, true).unwrap(), Subtract::FirstAndSecond);
        assert!(Subtract::from_flags(false, true).is_err());
    }

    #[test]
    fn zero_data_has_zero_norm() {
        let p = PhysicalParams::default();
        let d = DatumTriple::default();
        let s = solution_error_norm(&NormTask::new(&p, &d, 100.0, 3)).unwrap();
        assert_eq!(s.norm, 0.0);
    }

    #[test]
    fn rejects_bad_tasks() {
        let p = PhysicalParams::default();
        let d = DatumTriple::default();
        assert!(solution_error_norm(&NormTask::new(&p, &d, 100.0, 0)).is_err());
        assert!(solution_error_norm(&NormTask::new(&p, &d, 100.0, 9)).is_err());
        assert!(solution_error_norm(&NormTask::new(&p, &d, 0.0, 3)).is_err());
        let mut task = NormTask::new(&p, &d, 1e6, 3);
        task.panel_budget = 100;
        assert!(matches!(solution_error_norm(&task), Err(Error::PanelBudget { .. })));
    }

    #[test]
    fn node_refinement() {
        let p = PhysicalParams::default();
        let d = DatumTriple::new(
            DatumSpec::new(0.5, vec![0.3], 0.5).unwrap(),
            DatumSpec::new(-1.0, vec![], 1.0).unwrap(),
            DatumSpec::new(1.0, vec![1.0, -0.5], 0.2).unwrap(),
        );
        for n in [1, 3] {
            for sub in [Subtract::None, Subtract::First, Subtract::FirstAndSecond] {
                let a = solution_error_norm(&NormTask::new(&p, &d, 300.0, n).subtract(sub)).unwrap();
                let b = solution_error_norm(&NormTask::new(&p, &d, 300.0, n).subtract(sub).nodes(30)).unwrap();
                assert!((a.norm - b.norm).abs() <= 1e-8 * b.norm, "{n} {sub:?}");
                assert!(a.quad_err_est <= 1e-8);
            }
        }
    }

    #[test]
    fn growth_in_three_dimensions() {
        let p = PhysicalParams::default();
        let d = DatumTriple::only_psi2(DatumSpec::new(1.0, vec![], 1.0).unwrap());
        let samples: Vec<(f64, f64)> = geometric_grid(1e2, 1e5, 7)
            .unwrap()
            .into_iter()
            .map(|t| (t, solution_error_norm(&NormTask::new(&p, &d, t, 3)).unwrap().norm))
            .collect();
        let f = fit_rate(&samples, RateRef::new(0.5, 0.0), 0.05).unwrap();
        assert!((f.alpha - 0.5).abs() < 0.05, "{f:?}");
    }
}
