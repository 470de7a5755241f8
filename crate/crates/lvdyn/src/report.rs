//! Report model and its byte-stable JSON rendering.

use lvdyn_core::dynamics::{BBox, EquilibriumSet, Line, Point, RegionProbe, StabilityReport};
use lvdyn_core::fitting::{EquationFit, FitMode};
use lvdyn_core::sensitivity::{ParamBounds, SobolResult};
use lvdyn_core::{ContinuousParams, DiscreteParams, Interaction, RegressionCoeffs};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::AnalysisConfig;
use crate::error::Stage;
use crate::fixtures::PublishedEstimates;

/// Significant digits kept for every float in the JSON report.
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: AnalysisConfig,
    pub provenance: Provenance,
    pub series: Option<SeriesSummary>,
    pub parameter_source: Option<ParameterSource>,
    pub layers: Option<Layers>,
    pub fit: Option<FitDiagnostics>,
    /// Published estimates at printed precision, echoed when they were injected.
    pub published: Option<PublishedEstimates>,
    pub interaction: Option<Interaction>,
    pub equilibria: Option<EquilibriumSet>,
    pub stability: Vec<NamedStability>,
    pub phase: Option<PhaseSummary>,
    pub mape: Option<MapeSummary>,
    pub convergence: Option<Convergence>,
    pub sobol: Option<SobolSummary>,
    pub incomplete: Option<Incomplete>,
}

impl Report {
    pub fn new(config: AnalysisConfig) -> Self {
        let seed = config.sobol.map(|s| s.seed);
        Self {
            config,
            provenance: Provenance { input_sha256: None, seed, version: env!("CARGO_PKG_VERSION").to_owned() },
            series: None,
            parameter_source: None,
            layers: None,
            fit: None,
            published: None,
            interaction: None,
            equilibria: None,
            stability: Vec::new(),
            phase: None,
            mape: None,
            convergence: None,
            sobol: None,
            incomplete: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.incomplete.is_none()
    }

    pub fn to_json(&self) -> String {
        to_stable_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub input_sha256: Option<String>,
    pub seed: Option<u64>,
    pub version: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub label_x: String,
    pub label_y: String,
    pub unit: String,
    pub first_year: i32,
    pub last_year: i32,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterSource {
    Fitted,
    Published,
}

/// The three parameter layers. Two of them are always computed from the third.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Layers {
    pub regression: RegressionCoeffs,
    pub discrete: DiscreteParams,
    pub continuous: ContinuousParams,
    /// Largest relative mismatch after transforming each layer to its neighbours.
    pub round_trip_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub eq_x: EquationFit,
    pub eq_y: EquationFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NamedStability {
    pub equilibrium: &'static str,
    #[serde(flatten)]
    pub report: StabilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub nullcline_x: Line,
    pub nullcline_y: Line,
    pub bbox: BBox,
    pub grid_n: usize,
    pub probes: Vec<RegionProbe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapePair {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapeSummary {
    /// Mode selected in the configuration; `x`/`y` are for this mode.
    pub mode: FitMode,
    pub x: f64,
    pub y: f64,
    pub one_step_ahead: MapePair,
    pub free_running: MapePair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    pub start: Point,
    pub target: Point,
    pub map_steps: usize,
    pub map_end: Point,
    /// Larger of the two component-wise relative distances to `target`.
    pub map_relative_error: f64,
    pub ode_t_end: f64,
    pub ode_dt: f64,
    pub ode_end: Point,
    pub ode_relative_error: f64,
    pub ode_max_step_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolOutputView {
    pub output: String,
    pub first_order: Vec<f64>,
    pub total_order: Vec<f64>,
    pub first_order_clipped: Vec<f64>,
    pub total_order_clipped: Vec<f64>,
    pub sum_first_order: f64,
    /// Parameters by decreasing total-order index.
    pub ranking: Vec<String>,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolSummary {
    pub bounds: ParamBounds,
    pub parameters: Vec<String>,
    pub base_samples: usize,
    pub total_rows: usize,
    pub seed: u64,
    pub accepted_rows: usize,
    pub rejected_rows: usize,
    pub retained_blocks: usize,
    pub outputs: Vec<SobolOutputView>,
}

impl SobolSummary {
    pub fn new(bounds: ParamBounds, r: &SobolResult) -> Self {
        let outputs = r
            .outputs
            .iter()
            .map(|o| SobolOutputView {
                output: o.output.clone(),
                first_order: o.first_order.clone(),
                total_order: o.total_order.clone(),
                first_order_clipped: o.first_order_clipped(),
                total_order_clipped: o.total_order_clipped(),
                sum_first_order: o.sum_first_order(),
                ranking: o.ranking().into_iter().map(|i| r.parameters[i].clone()).collect(),
                mean: o.mean,
                variance: o.variance,
            })
            .collect();
        Self {
            bounds,
            parameters: r.parameters.clone(),
            base_samples: r.base_samples,
            total_rows: r.accepted_rows + r.rejected_rows,
            seed: r.seed,
            accepted_rows: r.accepted_rows,
            rejected_rows: r.rejected_rows,
            retained_blocks: r.retained_blocks,
            outputs,
        }
    }

    pub fn output(&self, name: &str) -> Option<&SobolOutputView> {
        self.outputs.iter().find(|o| o.output == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Incomplete {
    pub stage: Stage,
    pub error: String,
}

/// Round to [`SIGNIFICANT_DIGITS`] significant digits.
///
/// The decimal expansion printed by `{:e}` is exact before rounding, so ties
/// only arise for exactly representable halves; those go to even.
pub fn round_significant(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_significant).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys, every float rounded, and a trailing newline.
pub fn to_stable_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize infallibly");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values always render");
    s.push('\n');
    s
}
