//! TOML scenario configuration.
//!
//! ```toml
//! scenario = "theorem21"        # optional, must match the command line
//!
//! [params]
//! nu = 0.2
//! prandtl = 0.75
//! b = 1.3333333333333333
//! gamma = 1.4
//!
//! [psi2]
//! p = 1.0
//! m = [0.5, -0.3]
//! sigma = 0.01
//!
//! [grid]
//! t_min = 1e2
//! t_max = 1e6
//! points = 13
//! dimensions = [1, 2, 3, 4, 5]
//! ```
//!
//! Every section is optional; missing values fall back to per-scenario
//! defaults.

use std::path::Path;

use serde::Deserialize;

use crate::data::{DatumSpec, DatumTriple};
use crate::error::{Error, Result};
use crate::params::{ParamsInput, PhysicalParams};
use crate::quadrature::{check_dimension, Subtract, ZonePolicy};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<String>,
    pub params: Option<ParamsInput>,
    #[serde(default)]
    pub psi0: DatumSpec,
    #[serde(default)]
    pub psi1: DatumSpec,
    #[serde(default)]
    pub psi2: DatumSpec,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub tolerance: ToleranceSection,
    #[serde(default)]
    pub norms: NormsSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub multipliers: MultipliersSection,
    #[serde(default)]
    pub decomposition: DecompositionSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub points: Option<usize>,
    pub dimensions: Option<Vec<usize>>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub r_points: Option<usize>,
    /// Oracle time step.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub alpha: f64,
    pub oracle: f64,
    pub vieta: f64,
    pub becker_heat: f64,
    pub becker_pair: f64,
    pub gamma_limit: f64,
    pub flat_closed_form: f64,
    pub decomposition: f64,
    pub limit_constant: f64,
    pub refinement: f64,
    pub quadrature: f64,
    pub expansion_slope: [f64; 2],
    /// Required drop of the fitted exponent when the leading moment vanishes.
    pub control_gap: f64,
    /// Required drop below the reference in the degenerate lower-bound case.
    pub degenerate_gap: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection {
            alpha: crate::rates::DEFAULT_ALPHA_TOL,
            oracle: 1e-7,
            vieta: 1e-10,
            becker_heat: 1e-12,
            becker_pair: 1e-10,
            gamma_limit: 0.01,
            flat_closed_form: 1e-8,
            decomposition: 1e-8,
            limit_constant: 0.02,
            refinement: 0.05,
            quadrature: 1e-6,
            expansion_slope: [4.7, 5.3],
            control_gap: 0.1,
            degenerate_gap: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsSection {
    #[serde(default)]
    pub profile1: bool,
    #[serde(default)]
    pub profile2: bool,
    #[serde(default)]
    pub small_zone: bool,
}

impl NormsSection {
    pub fn subtract(&self) -> Result<Subtract> {
        Subtract::from_flags(self.profile1, self.profile2)
    }

    pub fn zone(&self) -> ZonePolicy {
        if self.small_zone {
            ZonePolicy::SmallZone
        } else {
            ZonePolicy::FullLine
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    /// CSV written by the `norms` scenario, relative to the config file.
    pub input: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultipliersSection {
    pub c: f64,
    pub cutoff: f64,
}

impl Default for MultipliersSection {
    fn default() -> Self {
        MultipliersSection { c: 1.0, cutoff: 0.2 }
    }
}

/// Profile constants for the `‖ψ̂⁽²⁾‖²` split.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionSection {
    pub p_combined: f64,
    pub p2: f64,
    pub m: Vec<f64>,
    /// Time at which the scaled A2 is compared with its limit.
    pub limit_t: f64,
}

impl Default for DecompositionSection {
    fn default() -> Self {
        DecompositionSection {
            p_combined: 1.0,
            p2: 0.3,
            m: vec![0.7, -0.2],
            limit_t: 1e4,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// Resolved time or frequency grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Span {
    pub fn geometric(&self) -> Result<Vec<f64>> {
        crate::rates::geometric_grid(self.min, self.max, self.points)
    }

    pub fn linear(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.max > self.min) {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points on [{}, {}]",
                self.min, self.max
            )));
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        let mut g: Vec<f64> = (0..self.points).map(|i| self.min + step * i as f64).collect();
        g[self.points - 1] = self.max;
        Ok(g)
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.data().validate()?;
        if let Some(dims) = &cfg.grid.dimensions {
            for &n in dims {
                check_dimension(n)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parameters from `[params]`, or the library defaults.
    pub fn physical(&self) -> Result<PhysicalParams> {
        PhysicalParams::from_input(&self.params.unwrap_or_default())
    }

    pub fn data(&self) -> DatumTriple {
        DatumTriple::new(self.psi0.clone(), self.psi1.clone(), self.psi2.clone())
    }

    pub fn t_span(&self, default: (f64, f64, usize)) -> Span {
        Span {
            min: self.grid.t_min.unwrap_or(default.0),
            max: self.grid.t_max.unwrap_or(default.1),
            points: self.grid.points.unwrap_or(default.2),
        }
    }

    pub fn r_span(&self, default: (f64, f64, usize)) -> Span {
        Span {
            min: self.grid.r_min.unwrap_or(default.0),
            max: self.grid.r_max.unwrap_or(default.1),
            points: self.grid.r_points.unwrap_or(default.2),
        }
    }

    pub fn dimensions(&self, default: &[usize]) -> Vec<usize> {
        self.grid.dimensions.clone().unwrap_or_else(|| default.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(c.physical().unwrap(), PhysicalParams::default());
        assert!(c.data().is_zero());
        assert_eq!(c.tolerance.alpha, 0.05);
        assert_eq!(c.dimensions(&[3]), vec![3]);
    }

    #[test]
    fn parses_sections() {
        let c = ScenarioConfig::from_toml(
            r#"
            scenario = "norms"
            [params]
            nu = 0.2
            prandtl = 0.75
            b = 1.3333333333333333
            gamma = 1.4
            [psi2]
            p = 1.0
            m = [0.5, -0.3]
            sigma = 0.01
            [grid]
            t_min = 100.0
            dimensions = [2, 4]
            [tolerance]
            alpha = 0.02
            [norms]
            profile1 = true
            "#,
        )
        .unwrap();
        assert_eq!(c.psi2.m, vec![0.5, -0.3]);
        assert_eq!(c.psi0.sigma, 1.0);
        assert_eq!(c.tolerance.alpha, 0.02);
        assert_eq!(c.tolerance.oracle, 1e-7);
        assert_eq!(c.norms.subtract().unwrap(), Subtract::First);
        assert_eq!(c.t_span((1.0, 1e6, 13)).min, 100.0);
        assert!((c.physical().unwrap().kappa() - 0.2 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScenarioConfig::from_toml("[grid]\nbogus = 1").is_err());
        assert!(ScenarioConfig::from_toml("[psi2]\nsigma = -1.0").is_err());
        assert!(ScenarioConfig::from_toml("[grid]\ndimensions = [9]").is_err());
        let c = ScenarioConfig::from_toml("[params]\nnu = 0.1\nprandtl = 0.1\nb = 1.0\ngamma = 1.4").unwrap();
        assert!(c.physical().is_err());
    }

    #[test]
    fn linear_span_hits_endpoints() {
        let g = Span {
            min: 0.0,
            max: 50.0,
            points: 10,
        }
        .linear()
        .unwrap();
        assert_eq!((g[0], g[9]), (0.0, 50.0));
    }
}
