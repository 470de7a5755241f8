use std::path::PathBuf;

use lvdyn_core::fitting::FitMode;
use lvdyn_core::sensitivity::check_base_samples;
use serde::Serialize;

use crate::data::{ColumnMapping, SeriesLabels};
use crate::error::{CliError, CliResult, Stage};
use crate::fixtures::Subsystem;

pub const DEFAULT_SOBOL_N: usize = 1024;
pub const DEFAULT_FRACTION: f64 = 0.1;
pub const DEFAULT_GRID_N: usize = 25;
/// Years of free-running map iteration used for the convergence check.
pub const DEFAULT_MAP_STEPS: usize = 200;
pub const DEFAULT_ODE_T_END: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputSource {
    Fixture(Subsystem),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolSettings {
    pub n: usize,
    pub fraction: f64,
    pub seed: u64,
}

impl Default for SobolSettings {
    fn default() -> Self {
        Self { n: DEFAULT_SOBOL_N, fraction: DEFAULT_FRACTION, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub input: InputSource,
    pub mapping: ColumnMapping,
    pub labels: SeriesLabels,
    pub mode: FitMode,
    /// Coefficients with `|b| <= tol` count as zero when classifying.
    pub tol: f64,
    /// Skip the sensitivity stage when absent.
    pub sobol: Option<SobolSettings>,
    /// Use the published continuous parameters instead of fitting.
    pub params_from_paper: Option<Subsystem>,
    pub grid_n: usize,
    pub map_steps: usize,
    pub ode_t_end: f64,
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<ReportFormat>,
}

impl AnalysisConfig {
    /// Defaults for a bundled fixture.
    pub fn for_fixture(s: Subsystem) -> Self {
        Self {
            input: InputSource::Fixture(s),
            mapping: ColumnMapping::for_fixture(s),
            labels: SeriesLabels::for_fixture(s),
            mode: FitMode::OneStepAhead,
            tol: 0.0,
            sobol: Some(SobolSettings::default()),
            params_from_paper: None,
            grid_n: DEFAULT_GRID_N,
            map_steps: DEFAULT_MAP_STEPS,
            ode_t_end: DEFAULT_ODE_T_END,
            out_dir: None,
            formats: vec![ReportFormat::Json],
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::validation(Stage::Config, m));
        if let Some(s) = &self.sobol {
            if check_base_samples(s.n).is_err() {
                return bad(format!("Sobol base sample size {} must be a power of two and at least 64", s.n));
            }
            if !(s.fraction > 0.0 && s.fraction < 1.0) {
                return bad(format!("perturbation fraction {} must lie in (0, 1)", s.fraction));
            }
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return bad(format!("classification tolerance {} must be finite and non-negative", self.tol));
        }
        if self.grid_n < 2 {
            return bad(format!("grid size {} must be at least 2", self.grid_n));
        }
        if !(self.ode_t_end > 0.0 && self.ode_t_end.is_finite()) {
            return bad(format!("integration horizon {} must be positive", self.ode_t_end));
        }
        if self.map_steps == 0 {
            return bad("map iteration count must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        AnalysisConfig::for_fixture(Subsystem::AiLabor).validate().unwrap();
    }

    #[test]
    fn rejects_bad_settings() {
        let mut c = AnalysisConfig::for_fixture(Subsystem::AiPhysical);
        c.sobol = Some(SobolSettings { n: 100, ..Default::default() });
        let e = c.validate().unwrap_err();
        assert!(matches!(e, CliError::Validation { stage: Stage::Config, .. }));
        assert_eq!(e.exit_code(), 2);

        c.sobol = Some(SobolSettings { fraction: 1.0, ..Default::default() });
        assert!(c.validate().is_err());
        c.sobol = None;
        c.validate().unwrap();
        c.tol = -1e-9;
        assert!(c.validate().is_err());
    }
}
