//! Scenario runner: each scenario measures one statement about the model and
//! emits a data table, a verdict table and a gnuplot script.

mod asymptotic;
pub mod config;
mod spectral;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

pub use config::ScenarioConfig;

use crate::error::Result;
use crate::rates::{RateFit, RateRef, VanishingReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Scenario {
    Roots,
    Kernels,
    OracleSweep,
    Profiles,
    Norms,
    GammaLimits,
    Rates,
    Theorem21,
    Theorem22,
    Lemma41,
    Prop31,
    Prop34,
    Becker,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Roots => "roots",
            Scenario::Kernels => "kernels",
            Scenario::OracleSweep => "oracle-sweep",
            Scenario::Profiles => "profiles",
            Scenario::Norms => "norms",
            Scenario::GammaLimits => "gamma-limits",
            Scenario::Rates => "rates",
            Scenario::Theorem21 => "theorem21",
            Scenario::Theorem22 => "theorem22",
            Scenario::Lemma41 => "lemma41",
            Scenario::Prop31 => "prop31",
            Scenario::Prop34 => "prop34",
            Scenario::Becker => "becker",
        }
    }
}

/// Formats a float so that identical values always give identical text.
pub(crate) fn num(x: f64) -> String {
    format!("{x:e}")
}

pub(crate) fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One asserted verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub check: String,
    pub n: Option<usize>,
    pub fit: Option<(f64, f64)>,
    pub reference: Option<RateRef>,
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub verdict: String,
    pub pass: bool,
}

impl Check {
    fn blank(check: &str, n: Option<usize>) -> Self {
        Check {
            check: check.to_string(),
            n,
            fit: None,
            reference: None,
            value: None,
            lower: None,
            upper: None,
            verdict: String::new(),
            pass: false,
        }
    }

    pub fn rate(check: &str, n: usize, fit: &RateFit, reference: RateRef) -> Self {
        Check {
            fit: Some((fit.alpha, fit.beta)),
            reference: Some(reference),
            verdict: fit.verdict.as_str().to_string(),
            pass: fit.verdict == Verdict::Matches,
            ..Check::blank(check, Some(n))
        }
    }

    /// Passes when the fitted exponent stays at or below `upper`.
    pub fn rate_below(check: &str, n: usize, fit: &RateFit, reference: RateRef, upper: f64) -> Self {
        let pass = fit.alpha <= upper;
        Check {
            fit: Some((fit.alpha, fit.beta)),
            reference: Some(reference),
            value: Some(fit.alpha),
            upper: Some(upper),
            verdict: pass_str(pass).to_string(),
            pass,
            ..Check::blank(check, Some(n))
        }
    }

    pub fn vanishing(check: &str, n: usize, report: &VanishingReport) -> Self {
        Check {
            value: Some(report.final_ratio / report.decade_ago_ratio),
            upper: Some(0.5),
            verdict: if report.vanishes { "vanishes" } else { "persists" }.to_string(),
            pass: report.vanishes,
            ..Check::blank(check, Some(n))
        }
    }

    /// `value <= upper`; NaN fails.
    pub fn at_most(check: &str, n: Option<usize>, value: f64, upper: f64) -> Self {
        let pass = value <= upper;
        Check {
            value: Some(value),
            upper: Some(upper),
            verdict: pass_str(pass).to_string(),
            pass,
            ..Check::blank(check, n)
        }
    }

    /// `lower <= value <= upper`.
    pub fn within(check: &str, n: Option<usize>, value: f64, lower: f64, upper: f64) -> Self {
        let pass = (lower..=upper).contains(&value);
        Check {
            value: Some(value),
            lower: Some(lower),
            upper: Some(upper),
            verdict: pass_str(pass).to_string(),
            pass,
            ..Check::blank(check, n)
        }
    }

    pub fn flag(check: &str, n: Option<usize>, value: Option<f64>, pass: bool) -> Self {
        Check {
            value,
            verdict: pass_str(pass).to_string(),
            pass,
            ..Check::blank(check, n)
        }
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.check.clone(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            opt_num(self.fit.map(|f| f.0)),
            opt_num(self.fit.map(|f| f.1)),
            opt_num(self.reference.map(|r| r.alpha)),
            opt_num(self.reference.map(|r| r.beta)),
            opt_num(self.value),
            opt_num(self.lower),
            opt_num(self.upper),
            self.verdict.clone(),
        ]
    }
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

pub const VERDICT_HEADER: [&str; 10] = [
    "check",
    "n",
    "alpha_fit",
    "beta_fit",
    "alpha_ref",
    "beta_ref",
    "value",
    "lower",
    "upper",
    "verdict",
];

/// Gnuplot description of the data table.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: &'static str,
    pub y: &'static str,
    pub group: Option<&'static str>,
    pub log_x: bool,
    pub log_y: bool,
}

impl PlotSpec {
    pub fn new(x: &'static str, y: &'static str) -> Self {
        PlotSpec {
            x,
            y,
            group: None,
            log_x: true,
            log_y: true,
        }
    }

    pub fn grouped(mut self, group: &'static str) -> Self {
        self.group = Some(group);
        self
    }

    pub fn linear(mut self) -> Self {
        self.log_x = false;
        self.log_y = false;
        self
    }

    fn script(&self, csv_name: &str, table: &Table) -> String {
        let col = |name: &str| table.column(name).map(|i| i + 1).unwrap_or(1);
        let (x, y) = (col(self.x), col(self.y));
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set xlabel '{}'", self.x);
        let _ = writeln!(s, "set ylabel '{}'", self.y);
        if self.log_x {
            let _ = writeln!(s, "set logscale x");
        }
        if self.log_y {
            let _ = writeln!(s, "set logscale y");
        }
        match self.group {
            Some(g) => {
                let gi = col(g);
                let mut groups: Vec<&str> = Vec::new();
                for row in &table.rows {
                    let v = row[gi - 1].as_str();
                    if !groups.contains(&v) {
                        groups.push(v);
                    }
                }
                let _ = writeln!(s, "groups = \"{}\"", groups.join(" "));
                let _ = writeln!(
                    s,
                    "plot for [g in groups] '{csv_name}' skip 1 using {x}:(strcol({gi}) eq g ? column({y}) : 1/0) \
                     with linespoints title '{}='.g",
                    g
                );
            }
            None => {
                let _ = writeln!(s, "plot '{csv_name}' skip 1 using {x}:{y} with linespoints notitle");
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: Scenario,
    pub table: Table,
    pub checks: Vec<Check>,
    pub plot: PlotSpec,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn verdict_table(&self) -> Table {
        let mut t = Table::new(&VERDICT_HEADER);
        for c in &self.checks {
            t.push(c.row());
        }
        t
    }

    /// Writes `<scenario>.csv`, `<scenario>.verdicts.csv` and `<scenario>.gp`
    /// into `dir` and returns their paths.
    pub fn write(&self, dir: &Path) -> Result<[PathBuf; 3]> {
        std::fs::create_dir_all(dir)?;
        let name = self.scenario.name();
        let csv_name = format!("{name}.csv");
        let data = dir.join(&csv_name);
        let verdicts = dir.join(format!("{name}.verdicts.csv"));
        let plot = dir.join(format!("{name}.gp"));
        self.table.write_csv(&data)?;
        self.verdict_table().write_csv(&verdicts)?;
        std::fs::write(&plot, self.plot.script(&csv_name, &self.table))?;
        Ok([data, verdicts, plot])
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `[tolerance] alpha`.
    pub tol_alpha: Option<f64>,
    /// Directory that relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

pub fn run(scenario: Scenario, config: &ScenarioConfig, opts: &RunOptions) -> Result<Report> {
    if let Some(id) = &config.scenario {
        if id != scenario.name() {
            return Err(crate::Error::Config(format!(
                "config is for scenario `{id}`, not `{}`",
                scenario.name()
            )));
        }
    }
    let mut config = config.clone();
    if let Some(tol) = opts.tol_alpha {
        if !(tol > 0.0) {
            return Err(crate::Error::Config(format!("--tol-alpha must be positive, got {tol}")));
        }
        config.tolerance.alpha = tol;
    }
    let cfg = &config;
    match scenario {
        Scenario::Roots => spectral::roots(cfg),
        Scenario::Kernels => spectral::kernels(cfg),
        Scenario::OracleSweep => spectral::oracle_sweep(cfg),
        Scenario::Profiles => spectral::profiles(cfg),
        Scenario::Prop31 => spectral::prop31(cfg),
        Scenario::Prop34 => spectral::prop34(cfg),
        Scenario::Becker => spectral::becker(cfg),
        Scenario::Norms => asymptotic::norms(cfg),
        Scenario::GammaLimits => asymptotic::gamma_limits(cfg),
        Scenario::Rates => asymptotic::rates(cfg, &opts.base_dir),
        Scenario::Theorem21 => asymptotic::theorem21(cfg),
        Scenario::Theorem22 => asymptotic::theorem22(cfg),
        Scenario::Lemma41 => asymptotic::lemma41(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::RateFit;

    fn fit(alpha: f64, beta: f64, verdict: Verdict) -> RateFit {
        RateFit {
            alpha,
            beta,
            log_c: 0.0,
            rms_residual: 0.0,
            verdict,
        }
    }

    #[test]
    fn check_verdicts() {
        let r = RateRef::new(0.5, 0.0);
        assert!(Check::rate("a", 3, &fit(0.51, 0.0, Verdict::Matches), r).pass);
        assert!(!Check::rate("a", 3, &fit(0.7, 0.0, Verdict::TooSlow), r).pass);
        assert!(Check::rate_below("b", 3, &fit(0.2, 0.0, Verdict::TooFast), r, 0.4).pass);
        assert!(!Check::at_most("c", None, f64::NAN, 1.0).pass);
        assert!(Check::within("d", None, 5.0, 4.7, 5.3).pass);
        assert!(!Check::within("d", None, 6.0, 4.7, 5.3).pass);
        let row = Check::at_most("c", Some(2), 0.5, 1.0).row();
        assert_eq!(row, vec!["c", "2", "", "", "", "", "5e-1", "", "1e0", "pass"]);
        assert_eq!(row.len(), VERDICT_HEADER.len());
    }

    #[test]
    fn grouped_plot_script() {
        let mut t = Table::new(&["series", "t", "value"]);
        t.push(vec!["a".into(), "1e0".into(), "2e0".into()]);
        t.push(vec!["b".into(), "1e0".into(), "3e0".into()]);
        t.push(vec!["a".into(), "1e1".into(), "4e0".into()]);
        let s = PlotSpec::new("t", "value").grouped("series").script("x.csv", &t);
        assert!(s.contains("groups = \"a b\""));
        assert!(s.contains("using 2:(strcol(1) eq g ? column(3) : 1/0)"));
        assert!(s.contains("set logscale y"));
        let s = PlotSpec::new("t", "value").linear().script("x.csv", &t);
        assert!(!s.contains("logscale"));
    }

    #[test]
    fn scenario_id_must_match() {
        let cfg = ScenarioConfig::from_toml("scenario = \"roots\"").unwrap();
        assert!(run(Scenario::Becker, &cfg, &RunOptions::default()).is_err());
        assert!(run(Scenario::Roots, &cfg, &RunOptions::default()).is_ok());
        let opts = RunOptions {
            tol_alpha: Some(-1.0),
            ..Default::default()
        };
        assert!(run(Scenario::Roots, &cfg, &opts).is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::value_variants() {
            assert_eq!(Scenario::from_str(s.name(), false).unwrap(), *s);
        }
    }
}
