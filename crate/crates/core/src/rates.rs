//! Rate fitting against `N(t) ≈ C t^α (ln t)^β` with `β ∈ {0, 1/2}`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default tolerance on the fitted power.
pub const DEFAULT_ALPHA_TOL: f64 = 0.05;

/// Reference `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRef {
    pub alpha: f64,
    pub beta: f64,
}

impl RateRef {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        RateRef { alpha, beta }
    }
}

/// Which family of rate functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFamily {
    /// Governs `‖ψ - ψ⁽¹⁾‖` and the `|ξ|⁻¹ sin` multiplier.
    First,
    /// Governs `‖ψ‖` and the `|ξ|⁻² sin²` multiplier.
    Second,
}

/// Reference rates.
///
/// ```text
/// first:  n = 1: t^{1/2},  n = 2: (ln t)^{1/2},  n ≥ 3: t^{1/2 - n/4}
/// second: n ≤ 3: t^{2 - n/2},  n = 4: (ln t)^{1/2},  n ≥ 5: t^{1 - n/4}
/// ```
pub fn dn_reference(family: RateFamily, n: usize) -> Result<RateRef> {
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "dimension must be at least 1",
        });
    }
    let nf = n as f64;
    Ok(match family {
        RateFamily::First => match n {
            1 => RateRef::new(0.5, 0.0),
            2 => RateRef::new(0.0, 0.5),
            _ => RateRef::new(0.5 - nf / 4.0, 0.0),
        },
        RateFamily::Second => match n {
            1..=3 => RateRef::new(2.0 - nf / 2.0, 0.0),
            4 => RateRef::new(0.0, 0.5),
            _ => RateRef::new(1.0 - nf / 4.0, 0.0),
        },
    })
}

/// Value of the reference rate function at `t`.
pub fn reference_value(r: RateRef, t: f64) -> f64 {
    t.powf(r.alpha) * t.ln().powf(r.beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Matches,
    TooFast,
    TooSlow,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Matches => "matches",
            Verdict::TooFast => "too-fast",
            Verdict::TooSlow => "too-slow",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub alpha: f64,
    pub beta: f64,
    pub log_c: f64,
    pub rms_residual: f64,
    pub verdict: Verdict,
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(pts: &[(f64, f64)]) -> Option<f64> {
    ls_line(pts).map(|(_, b, _)| b)
}

/// Least-squares line `y ≈ a + b x`; returns `(a, b, rms)`.
pub fn ls_line(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some((a, b, rms))
}

fn check_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < 6 {
        return Err(Error::InvalidGrid(format!(
            "rate fit needs at least 6 samples, got {}",
            samples.len()
        )));
    }
    for &(t, v) in samples {
        if !(t > 1.0 && t.is_finite()) {
            return Err(Error::InvalidGrid(format!("sample time {t} must exceed 1")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveNorm { t, value: v });
        }
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidGrid(format!(
            "time grid [{lo}, {hi}] spans less than two decades"
        )));
    }
    Ok(())
}

/// Fits `ln N = ln C + α ln t + β ln ln t` for `β = 0` and `β = 1/2` and keeps
/// the model with the smaller rms residual.
pub fn fit_rate(samples: &[(f64, f64)], reference: RateRef, tol_alpha: f64) -> Result<RateFit> {
    check_samples(samples)?;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for beta in [0.0, 0.5] {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(t, v)| (t.ln(), v.ln() - beta * t.ln().ln()))
            .collect();
        let (a, b, rms) = ls_line(&pts).ok_or_else(|| Error::InvalidGrid("flat time grid".into()))?;
        // ties go to β = 0
        if best.is_none_or(|(_, _, _, r)| rms < r * (1.0 - 1e-9) - 1e-14) {
            best = Some((b, beta, a, rms));
        }
    }
    let (alpha, beta, log_c, rms_residual) = best.unwrap();
    let verdict = classify(alpha, beta, reference, tol_alpha);
    Ok(RateFit {
        alpha,
        beta,
        log_c,
        rms_residual,
        verdict,
    })
}

fn classify(alpha: f64, beta: f64, reference: RateRef, tol: f64) -> Verdict {
    if !alpha.is_finite() {
        return Verdict::Inconclusive;
    }
    let d = alpha - reference.alpha;
    if d.abs() <= tol {
        if beta == reference.beta {
            Verdict::Matches
        } else if beta < reference.beta {
            Verdict::TooFast
        } else {
            Verdict::TooSlow
        }
    } else if d < 0.0 {
        Verdict::TooFast
    } else {
        Verdict::TooSlow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VanishingReport {
    pub vanishes: bool,
    pub final_ratio: f64,
    pub decade_ago_ratio: f64,
    pub monotone: bool,
}

/// Little-o test: the ratio `num / den` must be strictly decreasing over the
/// last decade of samples and its final value at most half its value one
/// decade earlier (interpolated in `ln t`).
pub fn vanishing_ratio_check(samples: &[(f64, f64, f64)]) -> Result<VanishingReport> {
    let flat: Vec<(f64, f64)> = samples.iter().map(|s| (s.0, s.1)).collect();
    check_samples(&flat)?;
    for &(t, _, d) in samples {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::NonPositiveNorm { t, value: d });
        }
    }
    let mut pts: Vec<(f64, f64)> = samples.iter().map(|&(t, a, b)| (t, a / b)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (t_end, final_ratio) = *pts.last().unwrap();
    let t_start = t_end / 10.0;
    let tail: Vec<&(f64, f64)> = pts.iter().filter(|p| p.0 >= t_start * (1.0 - 1e-12)).collect();
    let monotone = tail.len() >= 2 && tail.windows(2).all(|w| w[1].1 < w[0].1);
    let decade_ago_ratio = interpolate_log(&pts, t_start);
    let vanishes = monotone && final_ratio <= 0.5 * decade_ago_ratio;
    Ok(VanishingReport {
        vanishes,
        final_ratio,
        decade_ago_ratio,
        monotone,
    })
}

fn interpolate_log(pts: &[(f64, f64)], t: f64) -> f64 {
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if t >= a.0 * (1.0 - 1e-12) && t <= b.0 * (1.0 + 1e-12) {
            let s = ((t.ln() - a.0.ln()) / (b.0.ln() - a.0.ln())).clamp(0.0, 1.0);
            return (a.1.ln() * (1.0 - s) + b.1.ln() * s).exp();
        }
    }
    pts[0].1
}

/// `count` points spaced geometrically on `[t_min, t_max]`.
pub fn geometric_grid(t_min: f64, t_max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(t_min > 0.0) || !(t_max > t_min) {
        return Err(Error::InvalidGrid(format!(
            "need 0 < t_min < t_max and at least 2 points (got [{t_min}, {t_max}], {count})"
        )));
    }
    let step = (t_max / t_min).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k + 1 == count {
                t_max
            } else {
                t_min * (step * k as f64).exp()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synth(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        geometric_grid(lo, hi, n)
            .unwrap()
            .into_iter()
            .map(|t| (t, f(t)))
            .collect()
    }

    #[test]
    fn reference_tables() {
        use RateFamily::*;
        assert_eq!(dn_reference(First, 3).unwrap(), RateRef::new(-0.25, 0.0));
        assert_eq!(dn_reference(First, 1).unwrap(), RateRef::new(0.5, 0.0));
        assert_eq!(dn_reference(First, 2).unwrap(), RateRef::new(0.0, 0.5));
        assert_eq!(dn_reference(Second, 4).unwrap(), RateRef::new(0.0, 0.5));
        assert_eq!(dn_reference(Second, 1).unwrap(), RateRef::new(1.5, 0.0));
        assert_eq!(dn_reference(Second, 5).unwrap(), RateRef::new(-0.25, 0.0));
        assert!(dn_reference(First, 0).is_err());
    }

    #[test]
    fn synthetic_power_law() {
        let s = synth(|t| 3.0 * t.powf(-0.75), 1e2, 1e6, 13);
        let f = fit_rate(&s, RateRef::new(-0.75, 0.0), DEFAULT_ALPHA_TOL).unwrap();
        assert!((f.alpha + 0.75).abs() < 1e-12);
        assert_eq!(f.beta, 0.0);
        assert!(f.rms_residual < 1e-12);
        assert!((f.log_c - 3f64.ln()).abs() < 1e-10);
        assert_eq!(f.verdict, Verdict::Matches);
    }

    #[test]
    fn synthetic_log_law() {
        let s = synth(|t| t.ln().sqrt(), 1e2, 1e6, 13);
        let f = fit_rate(&s, RateRef::new(0.0, 0.5), DEFAULT_ALPHA_TOL).unwrap();
        assert!(f.alpha.abs() < 1e-12);
        assert_eq!(f.beta, 0.5);
        assert_eq!(f.verdict, Verdict::Matches);
    }

    #[test]
    fn subleading_correction() {
        let s = synth(|t| t.sqrt() * (1.0 + 0.3 * t.powf(-0.25)), 1e2, 1e6, 13);
        let f = fit_rate(&s, RateRef::new(0.5, 0.0), DEFAULT_ALPHA_TOL).unwrap();
        assert!((0.45..=0.55).contains(&f.alpha), "{f:?}");
        assert_eq!(f.verdict, Verdict::Matches);
    }

    #[test]
    fn verdict_directions() {
        let s = synth(|t| t.powf(-0.5), 1e2, 1e6, 13);
        let f = fit_rate(&s, RateRef::new(-0.25, 0.0), DEFAULT_ALPHA_TOL).unwrap();
        assert_eq!(f.verdict, Verdict::TooFast);
        let f = fit_rate(&s, RateRef::new(-1.0, 0.0), DEFAULT_ALPHA_TOL).unwrap();
        assert_eq!(f.verdict, Verdict::TooSlow);
    }

    #[test]
    fn fit_preconditions() {
        let r = RateRef::new(0.0, 0.0);
        assert!(fit_rate(&synth(|t| t, 1e2, 1e6, 5), r, 0.05).is_err());
        assert!(fit_rate(&synth(|t| t, 1e2, 5e3, 8), r, 0.05).is_err());
        assert!(fit_rate(&synth(|_| 0.0, 1e2, 1e6, 8), r, 0.05).is_err());
        assert!(fit_rate(&synth(|t| t, 0.5, 1e3, 8), r, 0.05).is_err());
    }

    #[test]
    fn vanishing() {
        let s: Vec<_> = geometric_grid(1e2, 1e6, 13)
            .unwrap()
            .into_iter()
            .map(|t| (t, t.powf(-0.5), 1.0))
            .collect();
        assert!(vanishing_ratio_check(&s).unwrap().vanishes);
        let c: Vec<_> = s.iter().map(|&(t, _, _)| (t, 2.0, 1.0)).collect();
        assert!(!vanishing_ratio_check(&c).unwrap().vanishes);
        let slow: Vec<_> = s.iter().map(|&(t, _, _)| (t, 1.0 / t.ln(), 1.0)).collect();
        assert!(!vanishing_ratio_check(&slow).unwrap().vanishes);
        // a quarter power only drops by 10^(-1/4) per decade
        let quarter: Vec<_> = s.iter().map(|&(t, _, _)| (t, t.powf(-0.25), 1.0)).collect();
        assert!(!vanishing_ratio_check(&quarter).unwrap().vanishes);
    }

    #[test]
    fn grid_endpoints() {
        let g = geometric_grid(1e2, 1e6, 13).unwrap();
        assert_eq!(g[0], 1e2);
        assert_eq!(g[12], 1e6);
        assert!((g[3] - 1e3).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn recovers_synthetic_laws(alpha in -2.0f64..2.0, half in any::<bool>(), c in 0.01f64..100.0,
                                   n in 8usize..20, lo_exp in 0.5f64..3.0) {
            let beta = if half { 0.5 } else { 0.0 };
            let s = synth(|t| c * t.powf(alpha) * t.ln().powf(beta), 10f64.powf(lo_exp), 10f64.powf(lo_exp + 3.0), n);
            let f = fit_rate(&s, RateRef::new(alpha, beta), 0.05).unwrap();
            prop_assert!((f.alpha - alpha).abs() <= 1e-10);
            prop_assert_eq!(f.beta, beta);
            prop_assert_eq!(f.verdict, Verdict::Matches);
        }

        #[test]
        fn scale_invariance(alpha in -2.0f64..2.0, k in 0.001f64..1000.0) {
            let s = synth(|t| t.powf(alpha) * (1.0 + 1.0 / t.sqrt()), 1e2, 1e6, 13);
            let sk: Vec<_> = s.iter().map(|&(t, v)| (t, k * v)).collect();
            let r = RateRef::new(alpha, 0.0);
            let (a, b) = (fit_rate(&s, r, 0.05).unwrap(), fit_rate(&sk, r, 0.05).unwrap());
            prop_assert!((a.alpha - b.alpha).abs() < 1e-10);
            prop_assert_eq!(a.beta, b.beta);
            prop_assert!((b.log_c - a.log_c - k.ln()).abs() < 1e-9);
        }
    }
}
