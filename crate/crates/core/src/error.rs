use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("frequency r = {r} lies outside the small-frequency zone (0, {eps0}]")]
    OutsideSmallZone { r: f64, eps0: f64 },

    #[error("characteristic cubic has (nearly) repeated roots at r = {r} (discriminant {discriminant:e})")]
    DegenerateRoots { r: f64, discriminant: f64 },

    #[error("oscillation resolution failed at t = {t}: {panels} panels exceed the budget of {budget}")]
    PanelBudget { t: f64, panels: usize, budget: usize },

    #[error("time stepping would need {steps} steps (limit {limit})")]
    StepBudget { steps: u64, limit: u64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-positive norm {value:e} at t = {t}")]
    NonPositiveNorm { t: f64, value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateRoots { .. }
                | Error::PanelBudget { .. }
                | Error::StepBudget { .. }
                | Error::NonPositiveNorm { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
