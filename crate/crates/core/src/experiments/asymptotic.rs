//! Large-time scenarios: solution and residual norms, their rate fits, the
//! model multipliers and the Gamma-function limits.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use super::config::ScenarioConfig;
use super::{num, opt_num, Check, PlotSpec, Report, Scenario, Table};
use crate::data::{DatumSpec, DatumTriple};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::profiles::MomentSet;
use crate::quadrature::multipliers::{
    gamma_limit_exact_flat, gamma_limit_integral, multiplier_norm, psi2_lower_decomposition, MultiplierKind,
};
use crate::quadrature::{solution_error_norm, NormSample, NormTask, Subtract, ZonePolicy};
use crate::rates::{dn_reference, fit_rate, reference_value, vanishing_ratio_check, RateFamily, RateRef};

const RATE_GRID: (f64, f64, usize) = (1e2, 1e6, 13);
const ALL_DIMS: [usize; 5] = [1, 2, 3, 4, 5];

/// One norm evaluation of a labelled data set.
struct Job<'a> {
    series: &'static str,
    data: &'a DatumTriple,
    subtract: Subtract,
    n: usize,
    t: f64,
}

/// Evaluates all jobs in parallel; results keep the job order.
fn run_jobs(params: &PhysicalParams, zone: ZonePolicy, jobs: &[Job]) -> Result<Vec<NormSample>> {
    jobs.par_iter()
        .map(|j| solution_error_norm(&NormTask::new(params, j.data, j.t, j.n).subtract(j.subtract).zone(zone)))
        .collect()
}

fn series_table(jobs: &[Job], samples: &[NormSample]) -> Table {
    let mut table = Table::new(&["series", "n", "t", "value", "quad_err_est", "panels_used"]);
    for (j, s) in jobs.iter().zip(samples) {
        table.push(vec![
            j.series.to_string(),
            j.n.to_string(),
            num(j.t),
            num(s.norm),
            num(s.quad_err_est),
            s.panels_used.to_string(),
        ]);
    }
    table
}

/// `(t, value)` pairs of one series in one dimension.
fn series(jobs: &[Job], samples: &[NormSample], name: &str, n: usize) -> Vec<(f64, f64)> {
    jobs.iter()
        .zip(samples)
        .filter(|(j, _)| j.series == name && j.n == n)
        .map(|(j, s)| (j.t, s.norm))
        .collect()
}

fn with_psi2_mass(data: &DatumTriple, p: f64) -> DatumTriple {
    let mut d = data.clone();
    d.psi2.p = p;
    d
}

pub(super) fn norms(cfg: &ScenarioConfig) -> Result<Report> {
    let params = cfg.physical()?;
    let data = cfg.data();
    if data.is_zero() {
        return Err(Error::Config("norms needs nonzero data".into()));
    }
    let subtract = cfg.norms.subtract()?;
    let dims = cfg.dimensions(&[3]);
    let t_grid = cfg.t_span(RATE_GRID).geometric()?;
    let mut jobs = Vec::new();
    for &n in &dims {
        for &t in &t_grid {
            jobs.push(Job {
                series: subtract.label(),
                data: &data,
                subtract,
                n,
                t,
            });
        }
    }
    let samples = run_jobs(&params, cfg.norms.zone(), &jobs)?;
    let mut table = Table::new(&["n", "t", "norm", "subtracted", "quad_err_est", "panels_used"]);
    let mut worst = 0.0f64;
    for s in &samples {
        worst = worst.max(s.quad_err_est);
        table.push(vec![
            s.n.to_string(),
            num(s.t),
            num(s.norm),
            s.subtracted.label().to_string(),
            num(s.quad_err_est),
            s.panels_used.to_string(),
        ]);
    }
    Ok(Report {
        scenario: Scenario::Norms,
        table,
        checks: vec![Check::at_most(
            "quadrature-error-estimate",
            None,
            worst,
            cfg.tolerance.quadrature,
        )],
        plot: PlotSpec::new("t", "norm").grouped("n"),
    })
}

#[derive(Debug, Deserialize)]
struct NormRow {
    n: usize,
    t: f64,
    norm: f64,
    subtracted: String,
}

fn subtract_rank(label: &str) -> Result<usize> {
    [Subtract::None, Subtract::First, Subtract::FirstAndSecond]
        .iter()
        .position(|s| s.label() == label)
        .ok_or_else(|| Error::Config(format!("unknown subtracted label `{label}`")))
}

pub(super) fn rates(cfg: &ScenarioConfig, base_dir: &Path) -> Result<Report> {
    let input = cfg
        .rates
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("rates needs [rates] input = <norms csv>".into()))?;
    let path = base_dir.join(input);
    let mut reader =
        csv::Reader::from_path(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut groups: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: NormRow = row?;
        groups
            .entry((subtract_rank(&row.subtracted)?, row.n))
            .or_default()
            .push((row.t, row.norm));
    }
    if groups.is_empty() {
        return Err(Error::Config(format!("{} holds no norm rows", path.display())));
    }
    let labels = ["none", "profile1", "profile1+profile2"];
    let mut table = Table::new(&[
        "n",
        "scenario",
        "alpha_fit",
        "beta_fit",
        "alpha_ref",
        "beta_ref",
        "verdict",
    ]);
    let mut checks = Vec::new();
    for ((rank, n), mut samples) in groups {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let family = if rank == 0 {
            RateFamily::Second
        } else {
            RateFamily::First
        };
        let reference = dn_reference(family, n)?;
        let fit = fit_rate(&samples, reference, cfg.tolerance.alpha)?;
        let check = if rank == 2 {
            let ratios: Vec<(f64, f64, f64)> = samples
                .iter()
                .map(|&(t, v)| (t, v, reference_value(reference, t)))
                .collect();
            Check::vanishing("second-residual-vanishes", n, &vanishing_ratio_check(&ratios)?)
        } else {
            Check::rate(&format!("{}-rate", labels[rank]), n, &fit, reference)
        };
        table.push(vec![
            n.to_string(),
            labels[rank].to_string(),
            num(fit.alpha),
            num(fit.beta),
            num(reference.alpha),
            num(reference.beta),
            check.verdict.clone(),
        ]);
        checks.push(check);
    }
    Ok(Report {
        scenario: Scenario::Rates,
        table,
        checks,
        plot: PlotSpec::new("n", "alpha_fit").grouped("scenario").linear(),
    })
}

pub(super) fn theorem21(cfg: &ScenarioConfig) -> Result<Report> {
    let params = cfg.physical()?;
    let data = cfg.data();
    if cfg.psi2.p == 0.0 {
        return Err(Error::Config("theorem21 needs psi2.p != 0".into()));
    }
    let control = with_psi2_mass(&data, 0.0);
    if control.is_zero() {
        return Err(Error::Config(
            "the control run (psi2.p = 0) needs another nonzero moment".into(),
        ));
    }
    let dims = cfg.dimensions(&ALL_DIMS);
    let t_grid = cfg.t_span(RATE_GRID).geometric()?;
    let mut jobs = Vec::new();
    for &n in &dims {
        for &t in &t_grid {
            for (series, d) in [("solution", &data), ("control", &control)] {
                jobs.push(Job {
                    series,
                    data: d,
                    subtract: Subtract::None,
                    n,
                    t,
                });
            }
        }
    }
    let samples = run_jobs(&params, ZonePolicy::FullLine, &jobs)?;
    let mut checks = Vec::new();
    for &n in &dims {
        let reference = dn_reference(RateFamily::Second, n)?;
        let fit = fit_rate(&series(&jobs, &samples, "solution", n), reference, cfg.tolerance.alpha)?;
        checks.push(Check::rate("solution-rate", n, &fit, reference));
        let fit = fit_rate(&series(&jobs, &samples, "control", n), reference, cfg.tolerance.alpha)?;
        checks.push(Check::rate_below(
            "control-slower",
            n,
            &fit,
            reference,
            reference.alpha - cfg.tolerance.control_gap,
        ));
    }
    Ok(Report {
        scenario: Scenario::Theorem21,
        table: series_table(&jobs, &samples),
        checks,
        plot: PlotSpec::new("t", "value").grouped("series"),
    })
}

/// Data with `M = 0` and `δ P_Ψ + (n/2) P2 = 0`, where `P_Ψ` and `P2` are
/// the constants multiplying `Ĝ1` and `t r² Ĝ1` in the second-order profile.
fn degenerate_data(params: &PhysicalParams, cfg: &ScenarioConfig, n: usize) -> DatumTriple {
    let p2 = if cfg.psi2.p != 0.0 { cfg.psi2.p } else { 1.0 };
    let p2_coeff = params.h0_coeff() * p2;
    let p_combined = -(n as f64) * p2_coeff / (2.0 * params.delta());
    let moments = MomentSet::from_profile_constants(params, p_combined, p2_coeff, Vec::new());
    DatumTriple::new(
        DatumSpec::zero(),
        DatumSpec {
            p: moments.p1,
            m: Vec::new(),
            sigma: cfg.psi1.sigma,
        },
        DatumSpec {
            p: moments.p2,
            m: Vec::new(),
            sigma: cfg.psi2.sigma,
        },
    )
}

pub(super) fn theorem22(cfg: &ScenarioConfig) -> Result<Report> {
    let params = cfg.physical()?;
    let generic = cfg.data();
    if generic.is_zero() {
        return Err(Error::Config("theorem22 needs nonzero data".into()));
    }
    if cfg.psi2.m.iter().all(|m| *m == 0.0) {
        return Err(Error::Config("theorem22 needs a nonzero psi2 first moment m".into()));
    }
    let moment_only = DatumTriple::only_psi2(DatumSpec {
        p: 0.0,
        ..cfg.psi2.clone()
    });
    let mut mass_only = generic.clone();
    mass_only.psi2.m.clear();
    mass_only.psi1.m.clear();
    mass_only.psi0.m.clear();
    let dims = cfg.dimensions(&ALL_DIMS);
    let degenerate: Vec<(usize, DatumTriple)> = dims
        .iter()
        .filter(|&&n| n >= 3)
        .map(|&n| (n, degenerate_data(&params, cfg, n)))
        .collect();
    let t_grid = cfg.t_span(RATE_GRID).geometric()?;

    let mut jobs = Vec::new();
    for &n in &dims {
        for &t in &t_grid {
            let mut add = |series, data, subtract| {
                jobs.push(Job {
                    series,
                    data,
                    subtract,
                    n,
                    t,
                })
            };
            add("first-residual", &generic, Subtract::First);
            add("second-residual", &generic, Subtract::FirstAndSecond);
            add("moment-only", &moment_only, Subtract::First);
            add("mass-only", &mass_only, Subtract::First);
            if let Some((_, d)) = degenerate.iter().find(|(m, _)| *m == n) {
                add("degenerate", d, Subtract::First);
            }
        }
    }
    let samples = run_jobs(&params, ZonePolicy::FullLine, &jobs)?;

    let tol = cfg.tolerance.alpha;
    let mut checks = Vec::new();
    for &n in &dims {
        let reference = dn_reference(RateFamily::First, n)?;
        for name in ["first-residual", "moment-only", "mass-only"] {
            let fit = fit_rate(&series(&jobs, &samples, name, n), reference, tol)?;
            checks.push(Check::rate(&format!("{name}-rate"), n, &fit, reference));
        }
        if n >= 3 {
            let fit = fit_rate(&series(&jobs, &samples, "degenerate", n), reference, tol)?;
            checks.push(Check::rate_below(
                "degenerate-faster",
                n,
                &fit,
                reference,
                reference.alpha - cfg.tolerance.degenerate_gap,
            ));
        }
        let ratios: Vec<(f64, f64, f64)> = series(&jobs, &samples, "second-residual", n)
            .into_iter()
            .map(|(t, v)| (t, v, reference_value(reference, t)))
            .collect();
        checks.push(Check::vanishing(
            "second-residual-vanishes",
            n,
            &vanishing_ratio_check(&ratios)?,
        ));
    }
    Ok(Report {
        scenario: Scenario::Theorem22,
        table: series_table(&jobs, &samples),
        checks,
        plot: PlotSpec::new("t", "value").grouped("series"),
    })
}

fn multiplier_reference(kind: MultiplierKind, n: usize) -> Result<RateRef> {
    match kind {
        MultiplierKind::Heat => Ok(RateRef::new(-(n as f64) / 4.0, 0.0)),
        MultiplierKind::G1Type => dn_reference(RateFamily::First, n),
        MultiplierKind::G0Type => dn_reference(RateFamily::Second, n),
    }
}

pub(super) fn lemma41(cfg: &ScenarioConfig) -> Result<Report> {
    let dims = cfg.dimensions(&ALL_DIMS);
    let t_grid = cfg.t_span(RATE_GRID).geometric()?;
    let (c, cutoff) = (cfg.multipliers.c, cfg.multipliers.cutoff);
    let mut jobs = Vec::new();
    for kind in MultiplierKind::ALL {
        for &n in &dims {
            for &t in &t_grid {
                jobs.push((kind, n, t));
            }
        }
    }
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(kind, n, t)| multiplier_norm(kind, n, c, t, cutoff))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["series", "n", "t", "value"]);
    for (&(kind, n, t), v) in jobs.iter().zip(&values) {
        table.push(vec![kind.as_str().to_string(), n.to_string(), num(t), num(*v)]);
    }
    let mut checks = Vec::new();
    for kind in MultiplierKind::ALL {
        for &n in &dims {
            let samples: Vec<(f64, f64)> = jobs
                .iter()
                .zip(&values)
                .filter(|((k, m, _), _)| *k == kind && *m == n)
                .map(|((_, _, t), v)| (*t, *v))
                .collect();
            let reference = multiplier_reference(kind, n)?;
            let fit = fit_rate(&samples, reference, cfg.tolerance.alpha)?;
            checks.push(Check::rate(&format!("{}-rate", kind.as_str()), n, &fit, reference));
        }
    }
    Ok(Report {
        scenario: Scenario::Lemma41,
        table,
        checks,
        plot: PlotSpec::new("t", "value").grouped("series"),
    })
}

pub(super) fn gamma_limits(cfg: &ScenarioConfig) -> Result<Report> {
    let params = cfg.physical()?;
    let delta = params.delta();
    let dims = cfg.dimensions(&[3, 4, 5]);
    let t_grid = cfg.t_span((1.0, 1e6, 13)).geometric()?;
    let t_last = *t_grid.last().unwrap();
    let offsets = [-3, -1, 1];
    let mut jobs = Vec::new();
    for &n in &dims {
        for off in offsets {
            for &t in &t_grid {
                jobs.push((n, off, t));
            }
        }
    }
    let values: Vec<_> = jobs
        .par_iter()
        .map(|&(n, off, t)| gamma_limit_integral(n, delta, t, off))
        .collect::<Result<_>>()?;

    let mut table = Table::new(&["quantity", "n", "offset", "t", "value", "limit", "rel_err"]);
    let mut checks = Vec::new();
    let mut flat_err: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(n, off, t), g) in jobs.iter().zip(&values) {
        table.push(vec![
            "gamma-integral".into(),
            n.to_string(),
            off.to_string(),
            num(t),
            num(g.value),
            opt_num(g.limit),
            opt_num(g.rel_err),
        ]);
        if n as i32 + off == 0 && t >= 1.0 {
            let exact = gamma_limit_exact_flat(delta, t);
            let e = flat_err.entry(n).or_insert(0.0);
            *e = e.max((g.value - exact).abs() / exact);
        }
        if t == t_last {
            if let Some(rel) = g.rel_err {
                checks.push(Check::at_most(
                    &format!("limit-offset{off}"),
                    Some(n),
                    rel,
                    cfg.tolerance.gamma_limit,
                ));
            }
        }
    }
    for (n, e) in flat_err {
        checks.push(Check::at_most(
            "flat-closed-form",
            Some(n),
            e,
            cfg.tolerance.flat_closed_form,
        ));
    }

    let dec = &cfg.decomposition;
    let t = dec.limit_t;
    for &n in &dims {
        let moments = MomentSet::from_profile_constants(&params, dec.p_combined, dec.p2, dec.m.clone());
        let d = psi2_lower_decomposition(&params, n, t, &moments)?;
        let sum_err = (d.sum() - d.direct).abs() / d.direct;
        table.push(vec![
            "decomposition-sum".into(),
            n.to_string(),
            String::new(),
            num(t),
            num(d.sum()),
            num(d.direct),
            num(sum_err),
        ]);
        checks.push(Check::at_most(
            "decomposition-sum",
            Some(n),
            sum_err,
            cfg.tolerance.decomposition,
        ));
        for (name, constant) in [
            ("scaled-a2-vs-stated-constant", d.stated_constant),
            ("scaled-a2-vs-gamma-limits", d.limit_constant),
        ] {
            if let Some(c) = constant {
                let rel = (d.a2_scaled - c).abs() / c.abs();
                table.push(vec![
                    name.into(),
                    n.to_string(),
                    String::new(),
                    num(t),
                    num(d.a2_scaled),
                    num(c),
                    num(rel),
                ]);
                checks.push(Check::at_most(name, Some(n), rel, cfg.tolerance.limit_constant));
            }
        }
    }
    Ok(Report {
        scenario: Scenario::GammaLimits,
        table,
        checks,
        plot: PlotSpec::new("t", "rel_err").grouped("offset"),
    })
}
