//! Argument parsing and subcommand dispatch. [`run`] returns what the binary
//! prints on stdout so it can be exercised without a process boundary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lvdyn_core::fitting::FitMode;
use serde::Serialize;

use crate::config::{
    AnalysisConfig, InputSource, ReportFormat, SobolSettings, DEFAULT_FRACTION, DEFAULT_GRID_N, DEFAULT_SOBOL_N,
};
use crate::data::{ColumnMapping, SeriesLabels, DEFAULT_UNIT};
use crate::error::{CliError, CliResult, Stage};
use crate::export::{export_layers_csv, export_phase_data, export_sobol_csv};
use crate::fixtures::Subsystem;
use crate::pipeline::{run_pipeline, write_outputs, Analysis};
use crate::report::{round_significant, to_stable_json};

#[derive(Debug, Parser)]
#[command(name = "lvdyn", version, about = "Two-species Lotka-Volterra fitting, stability and sensitivity analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the ratio regression and print the three parameter layers with MAPE.
    Fit(CommonArgs),
    /// Run the full pipeline and print the JSON report.
    Analyze(CommonArgs),
    /// Export nullclines, sign grid, vector field and trajectories as CSV.
    Phase(CommonArgs),
    /// Run only what the sensitivity analysis needs and print its indices.
    Sobol(CommonArgs),
    /// Run the full pipeline and write every output file to --out.
    Report(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    OneStepAhead,
    FreeRunning,
}

impl From<ModeArg> for FitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::OneStepAhead => FitMode::OneStepAhead,
            ModeArg::FreeRunning => FitMode::FreeRunning,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Headered CSV with a year column and two positive series.
    #[arg(long, conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Use a bundled data set instead of --input.
    #[arg(long, value_enum)]
    pub fixture: Option<Subsystem>,
    #[arg(long, default_value = "year")]
    pub year_col: String,
    #[arg(long)]
    pub x_col: Option<String>,
    #[arg(long)]
    pub y_col: Option<String>,
    #[arg(long)]
    pub label_x: Option<String>,
    #[arg(long)]
    pub label_y: Option<String>,
    #[arg(long)]
    pub unit: Option<String>,
    #[arg(long, value_enum, default_value = "one-step-ahead")]
    pub mode: ModeArg,
    /// Sobol' base sample size (power of two, at least 64).
    #[arg(long, default_value_t = DEFAULT_SOBOL_N)]
    pub sobol_n: usize,
    /// Half-width of the sensitivity box relative to each baseline value.
    #[arg(long, default_value_t = DEFAULT_FRACTION)]
    pub fraction: f64,
    #[arg(long, env = "LVDYN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Skip fitting and use the published continuous parameters.
    #[arg(long, value_enum)]
    pub params_from_paper: Option<Subsystem>,
    /// Coefficients at or below this magnitude count as zero when classifying.
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_N)]
    pub grid_n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Vec<ReportFormat>,
}

impl CommonArgs {
    pub fn to_config(&self, with_sobol: bool) -> CliResult<AnalysisConfig> {
        let fixture = self.fixture.or(if self.input.is_none() { self.params_from_paper } else { None });
        let mut cfg = match (&self.input, fixture) {
            (Some(path), _) => {
                let (Some(x), Some(y)) = (&self.x_col, &self.y_col) else {
                    return Err(CliError::validation(Stage::Config, "--input requires --x-col and --y-col"));
                };
                let mut cfg = AnalysisConfig::for_fixture(Subsystem::AiPhysical);
                cfg.input = InputSource::File(path.clone());
                cfg.mapping = ColumnMapping::new(&self.year_col, x, y);
                cfg.labels = SeriesLabels { x: x.clone(), y: y.clone(), unit: DEFAULT_UNIT.into() };
                cfg
            }
            (None, Some(s)) => {
                let mut cfg = AnalysisConfig::for_fixture(s);
                if let Some(x) = &self.x_col {
                    cfg.mapping.x = x.clone();
                }
                if let Some(y) = &self.y_col {
                    cfg.mapping.y = y.clone();
                }
                cfg
            }
            (None, None) => {
                return Err(CliError::validation(
                    Stage::Config,
                    "one of --input, --fixture or --params-from-paper is required",
                ))
            }
        };
        if let Some(l) = &self.label_x {
            cfg.labels.x = l.clone();
        }
        if let Some(l) = &self.label_y {
            cfg.labels.y = l.clone();
        }
        if let Some(u) = &self.unit {
            cfg.labels.unit = u.clone();
        }
        cfg.mode = self.mode.into();
        cfg.tol = self.tol;
        cfg.grid_n = self.grid_n;
        cfg.params_from_paper = self.params_from_paper;
        cfg.sobol = with_sobol.then_some(SobolSettings { n: self.sobol_n, fraction: self.fraction, seed: self.seed });
        cfg.out_dir = self.out.clone();
        cfg.formats = self.format.clone();
        cfg.formats.dedup();
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct FitOutput<'a> {
    series: &'a Option<crate::report::SeriesSummary>,
    parameter_source: &'a Option<crate::report::ParameterSource>,
    layers: &'a Option<crate::report::Layers>,
    fit: &'a Option<crate::report::FitDiagnostics>,
    mape: &'a Option<crate::report::MapeSummary>,
    provenance: &'a crate::report::Provenance,
}

fn temp_csv(write: impl FnOnce(&std::path::Path) -> CliResult<PathBuf>) -> CliResult<String> {
    let dir = std::env::temp_dir().join(format!("lvdyn-{}", std::process::id()));
    let path = write(&dir)?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(Stage::Export, &path, e));
    let _ = std::fs::remove_dir_all(&dir);
    text
}

fn finish(a: Result<Analysis, crate::pipeline::PipelineFailure>) -> CliResult<Analysis> {
    a.map_err(|f| f.error)
}

pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Fit(args) => {
            let cfg = args.to_config(false)?;
            let a = finish(run_pipeline(&cfg))?;
            let r = &a.report;
            if cfg.formats.first() == Some(&ReportFormat::Csv) {
                let layers = r.layers.as_ref().expect("complete report has layers");
                return temp_csv(|d| export_layers_csv(layers, d));
            }
            Ok(to_stable_json(&FitOutput {
                series: &r.series,
                parameter_source: &r.parameter_source,
                layers: &r.layers,
                fit: &r.fit,
                mape: &r.mape,
                provenance: &r.provenance,
            }))
        }
        Command::Analyze(args) => {
            let cfg = args.to_config(true)?;
            Ok(finish(run_pipeline(&cfg))?.report.to_json())
        }
        Command::Phase(args) => {
            let cfg = args.to_config(false)?;
            let out = cfg.out_dir.clone().ok_or_else(|| CliError::validation(Stage::Config, "phase requires --out"))?;
            let mut plain = cfg.clone();
            plain.out_dir = None;
            let a = finish(run_pipeline(&plain))?;
            let pg = a.phase.as_ref().expect("complete run has phase data");
            let files = export_phase_data(pg, &a.trajectories, &out)?;
            let mut s = String::new();
            for f in files {
                s.push_str(&format!("{}\n", f.display()));
            }
            Ok(s)
        }
        Command::Sobol(args) => {
            let cfg = args.to_config(true)?;
            let a = finish(run_pipeline(&cfg))?;
            let sobol = a.report.sobol.as_ref().expect("sensitivity stage ran");
            if cfg.formats.first() == Some(&ReportFormat::Csv) {
                return temp_csv(|d| export_sobol_csv(sobol, d));
            }
            Ok(to_stable_json(sobol))
        }
        Command::Report(args) => {
            let mut cfg = args.to_config(true)?;
            let out = cfg.out_dir.take().ok_or_else(|| CliError::validation(Stage::Config, "report requires --out"))?;
            cfg.formats = vec![ReportFormat::Json, ReportFormat::Csv];
            let result = run_pipeline(&cfg);
            let a = match &result {
                Ok(a) => a,
                Err(f) => &f.analysis,
            };
            write_outputs(&cfg, a, &out)?;
            let a = finish(result)?;
            let eq = a.report.equilibria.and_then(|e| e.interior);
            Ok(match eq {
                Some((x, y)) => format!(
                    "wrote {} (interior equilibrium {}, {})\n",
                    out.display(),
                    round_significant(x),
                    round_significant(y)
                ),
                None => format!("wrote {}\n", out.display()),
            })
        }
    }
}
