//! Stage-by-stage analysis. Each stage fills in its part of the report; on the
//! first failure the report is marked incomplete and returned with the error.

use std::fs;

use lvdyn_core::dynamics::{
    equilibria, integrate_ode, phase_geometry, stability_at, BBox, PhaseGeometry, Point, DEFAULT_DT, STABILITY_TOL,
};
use lvdyn_core::fitting::{fit_report_discrete, fit_zero_intercept, free_run, FitMode, TimeSeries};
use lvdyn_core::params::{
    classify_interaction, continuous_to_discrete, discrete_to_continuous, discrete_to_regression,
    regression_to_discrete,
};
use lvdyn_core::sensitivity::{bounds_from_baseline, equilibrium_sensitivity};
use lvdyn_core::{ContinuousParams, DiscreteParams, RegressionCoeffs};

use crate::config::{AnalysisConfig, InputSource, ReportFormat};
use crate::data::parse_series;
use crate::error::{CliError, CliResult, Stage, StageExt};
use crate::export::{export_layers_csv, export_phase_data, export_sobol_csv, NamedTrajectory};
use crate::report::{
    sha256_hex, Convergence, FitDiagnostics, Incomplete, Layers, MapePair, MapeSummary, NamedStability,
    ParameterSource, PhaseSummary, Report, SeriesSummary, SobolSummary,
};

/// Everything produced by a run, including data too bulky for the report.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: Report,
    pub series: Option<TimeSeries>,
    pub phase: Option<PhaseGeometry>,
    pub trajectories: Vec<NamedTrajectory>,
}

#[derive(Debug)]
pub struct PipelineFailure {
    pub analysis: Box<Analysis>,
    pub error: CliError,
}

/// Run every configured stage without writing files.
pub fn analyze(cfg: &AnalysisConfig) -> Result<Analysis, PipelineFailure> {
    let mut a = Analysis { report: Report::new(cfg.clone()), series: None, phase: None, trajectories: Vec::new() };
    match run_stages(cfg, &mut a) {
        Ok(()) => Ok(a),
        Err(error) => {
            a.report.incomplete = Some(Incomplete { stage: error.stage(), error: error.to_string() });
            Err(PipelineFailure { analysis: Box::new(a), error })
        }
    }
}

/// [`analyze`], then write the configured outputs. Partial reports are
/// written too when the output directory is set.
pub fn run_pipeline(cfg: &AnalysisConfig) -> Result<Analysis, PipelineFailure> {
    let result = analyze(cfg);
    let Some(dir) = &cfg.out_dir else { return result };
    let analysis = match &result {
        Ok(a) => a,
        Err(f) => &f.analysis,
    };
    if let Err(error) = write_outputs(cfg, analysis, dir) {
        let mut analysis = result?;
        analysis.report.incomplete = Some(Incomplete { stage: error.stage(), error: error.to_string() });
        return Err(PipelineFailure { analysis: Box::new(analysis), error });
    }
    result
}

pub fn write_outputs(cfg: &AnalysisConfig, a: &Analysis, dir: &std::path::Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(Stage::Export, dir, e))?;
    if cfg.formats.contains(&ReportFormat::Json) {
        let path = dir.join("report.json");
        fs::write(&path, a.report.to_json()).map_err(|e| CliError::io(Stage::Export, &path, e))?;
    }
    if cfg.formats.contains(&ReportFormat::Csv) {
        if let Some(l) = &a.report.layers {
            export_layers_csv(l, dir)?;
        }
        if let Some(s) = &a.report.sobol {
            export_sobol_csv(s, dir)?;
        }
    }
    if let Some(pg) = &a.phase {
        export_phase_data(pg, &a.trajectories, &dir.join("phase"))?;
    }
    Ok(())
}

fn read_input(cfg: &AnalysisConfig) -> CliResult<(Vec<u8>, String)> {
    match &cfg.input {
        InputSource::Fixture(s) => Ok((s.csv().as_bytes().to_vec(), s.file_name().to_owned())),
        InputSource::File(p) => {
            let bytes = fs::read(p).map_err(|e| CliError::io(Stage::Load, p, e))?;
            Ok((bytes, p.display().to_string()))
        }
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

fn regression_array(r: &RegressionCoeffs) -> [f64; 6] {
    [r.intercept1, r.self1, r.cross1, r.intercept2, r.self2, r.cross2]
}

fn discrete_array(d: &DiscreteParams) -> [f64; 6] {
    [d.alpha1, d.self1, d.cross1, d.alpha2, d.self2, d.cross2]
}

/// Largest relative disagreement among the three layers under the transforms.
fn round_trip_error(r: &RegressionCoeffs, d: &DiscreteParams, c: &ContinuousParams) -> lvdyn_core::Result<f64> {
    let d_from_r = regression_to_discrete(r)?;
    let c_from_d = discrete_to_continuous(d)?;
    let d_from_c = continuous_to_discrete(c)?;
    let r_from_d = discrete_to_regression(d)?;
    Ok([
        max_rel(&discrete_array(&d_from_r), &discrete_array(d)),
        max_rel(&c_from_d.to_array(), &c.to_array()),
        max_rel(&discrete_array(&d_from_c), &discrete_array(d)),
        max_rel(&regression_array(&r_from_d), &regression_array(r)),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

fn rel_distance(p: Point, target: Point) -> f64 {
    ((p.0 - target.0) / target.0).abs().max(((p.1 - target.1) / target.1).abs())
}

/// Box covering the interior point and the data, with margin.
fn phase_box(interior: Option<Point>, ts: &TimeSeries) -> BBox {
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (mut xm, mut ym) = (max(&ts.xs), max(&ts.ys));
    if let Some((x, y)) = interior.filter(|p| p.0 > 0.0 && p.1 > 0.0) {
        xm = xm.max(x);
        ym = ym.max(y);
    }
    BBox::around((xm, ym), 1.5)
}

fn run_stages(cfg: &AnalysisConfig, a: &mut Analysis) -> CliResult<()> {
    cfg.validate()?;

    let (bytes, source_name) = read_input(cfg)?;
    a.report.provenance.input_sha256 = Some(sha256_hex(&bytes));
    let ts = parse_series(bytes.as_slice(), &source_name, &cfg.mapping, &cfg.labels)?;
    a.report.series = Some(SeriesSummary {
        label_x: ts.label_x.clone(),
        label_y: ts.label_y.clone(),
        unit: ts.unit.clone(),
        first_year: ts.years[0],
        last_year: *ts.years.last().unwrap(),
        n: ts.len(),
    });
    a.series = Some(ts.clone());

    let (regression, discrete, continuous) = match cfg.params_from_paper {
        Some(s) => {
            let published = s.published();
            a.report.parameter_source = Some(ParameterSource::Published);
            a.report.published = Some(published);
            let continuous = published.continuous;
            let discrete = continuous_to_discrete(&continuous).at(Stage::Transform)?;
            let regression = discrete_to_regression(&discrete).at(Stage::Transform)?;
            (regression, discrete, continuous)
        }
        None => {
            let fit = fit_zero_intercept(&ts).at(Stage::Fit)?;
            a.report.parameter_source = Some(ParameterSource::Fitted);
            a.report.fit = Some(FitDiagnostics { eq_x: fit.eq_x, eq_y: fit.eq_y });
            let discrete = regression_to_discrete(&fit.coeffs).at(Stage::Transform)?;
            let continuous = discrete_to_continuous(&discrete).at(Stage::Transform)?;
            (fit.coeffs, discrete, continuous)
        }
    };
    let round_trip = round_trip_error(&regression, &discrete, &continuous).at(Stage::Transform)?;
    a.report.layers = Some(Layers { regression, discrete, continuous, round_trip_error: round_trip });

    a.report.interaction = Some(classify_interaction(&continuous, cfg.tol));

    let eq = equilibria(&continuous);
    a.report.equilibria = Some(eq);
    let interior = eq.interior.filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite());

    let named = [("origin", Some(eq.origin)), ("axial_x", eq.axial_x), ("axial_y", eq.axial_y), ("interior", interior)];
    a.report.stability = named
        .into_iter()
        .filter_map(|(name, p)| {
            p.map(|p| NamedStability { equilibrium: name, report: stability_at(&continuous, p, STABILITY_TOL) })
        })
        .collect();

    let pg = phase_geometry(&continuous, phase_box(interior, &ts), cfg.grid_n).at(Stage::Phase)?;
    a.report.phase = Some(PhaseSummary {
        nullcline_x: pg.nullcline_x,
        nullcline_y: pg.nullcline_y,
        bbox: pg.bbox,
        grid_n: pg.grid_n,
        probes: pg.probes.clone(),
    });
    a.phase = Some(pg);

    let one_step = fit_report_discrete(&ts, &regression, &discrete, FitMode::OneStepAhead).at(Stage::Mape)?;
    let free = fit_report_discrete(&ts, &regression, &discrete, FitMode::FreeRunning).at(Stage::Mape)?;
    let selected = if cfg.mode == FitMode::OneStepAhead { &one_step } else { &free };
    a.report.mape = Some(MapeSummary {
        mode: cfg.mode,
        x: selected.mape_x,
        y: selected.mape_y,
        one_step_ahead: MapePair { x: one_step.mape_x, y: one_step.mape_y },
        free_running: MapePair { x: free.mape_x, y: free.mape_y },
    });

    let years: Vec<f64> = (0..ts.len()).map(|k| k as f64).collect();
    a.trajectories.push(NamedTrajectory {
        name: "observed".into(),
        t: years.clone(),
        xs: ts.xs.clone(),
        ys: ts.ys.clone(),
    });
    a.trajectories.push(NamedTrajectory {
        name: "fitted".into(),
        t: years,
        xs: selected.fitted_x.clone(),
        ys: selected.fitted_y.clone(),
    });

    if let Some(target) = interior {
        let start = ts.initial_state();
        let map = free_run(&discrete, start, cfg.map_steps).at(Stage::Convergence)?;
        let ode = integrate_ode(&continuous, start, cfg.ode_t_end, DEFAULT_DT).at(Stage::Convergence)?;
        let map_end = map.last().expect("free run includes the start");
        a.report.convergence = Some(Convergence {
            start,
            target,
            map_steps: cfg.map_steps,
            map_end,
            map_relative_error: rel_distance(map_end, target),
            ode_t_end: cfg.ode_t_end,
            ode_dt: DEFAULT_DT,
            ode_end: ode.last(),
            ode_relative_error: rel_distance(ode.last(), target),
            ode_max_step_error: ode.max_error_estimate,
        });
        a.trajectories.push(NamedTrajectory {
            name: "map".into(),
            t: (0..map.len()).map(|k| k as f64).collect(),
            xs: map.xs,
            ys: map.ys,
        });
        // Every tenth step keeps the export small and still smooth.
        let keep = |i: usize| i.is_multiple_of(10) || i + 1 == ode.ts.len();
        a.trajectories.push(NamedTrajectory {
            name: "ode".into(),
            t: ode.ts.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| *v).collect(),
            xs: ode.xs.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| *v).collect(),
            ys: ode.ys.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| *v).collect(),
        });
    } else {
        log::warn!("no interior equilibrium in the first quadrant; skipping the convergence check");
    }

    if let Some(s) = cfg.sobol {
        let bounds = bounds_from_baseline(&continuous, s.fraction).at(Stage::Sobol)?;
        let result = equilibrium_sensitivity(&bounds, s.n, s.seed).at(Stage::Sobol)?;
        a.report.sobol = Some(SobolSummary::new(bounds, &result));
    }
    Ok(())
}
