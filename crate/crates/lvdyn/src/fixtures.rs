//! Vendored annual data for China, 2016-2023, and the published parameter
//! estimates for the two subsystems.

use std::fmt;
use std::str::FromStr;

use lvdyn_core::{ContinuousParams, DiscreteParams, RegressionCoeffs};
use serde::Serialize;

const AI_PHYSICAL_CSV: &str = include_str!("../fixtures/cn_ai_physical.csv");
const AI_LABOR_CSV: &str = include_str!("../fixtures/cn_ai_labor.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subsystem {
    AiPhysical,
    AiLabor,
}

impl Subsystem {
    pub const ALL: [Subsystem; 2] = [Subsystem::AiPhysical, Subsystem::AiLabor];

    pub fn name(self) -> &'static str {
        match self {
            Subsystem::AiPhysical => "ai-physical",
            Subsystem::AiLabor => "ai-labor",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Subsystem::AiPhysical => "cn_ai_physical.csv",
            Subsystem::AiLabor => "cn_ai_labor.csv",
        }
    }

    pub fn csv(self) -> &'static str {
        match self {
            Subsystem::AiPhysical => AI_PHYSICAL_CSV,
            Subsystem::AiLabor => AI_LABOR_CSV,
        }
    }

    /// `(year, x, y)` column names of the bundled file.
    pub fn columns(self) -> (&'static str, &'static str, &'static str) {
        match self {
            Subsystem::AiPhysical => ("year", "ai_capital", "physical_capital"),
            Subsystem::AiLabor => ("year", "ai_capital", "labor"),
        }
    }

    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Subsystem::AiPhysical => ("AI capital", "physical capital"),
            Subsystem::AiLabor => ("AI capital", "labor"),
        }
    }

    pub fn published(self) -> PublishedEstimates {
        match self {
            Subsystem::AiPhysical => PublishedEstimates {
                regression: RegressionCoeffs {
                    intercept1: 0.021224,
                    self1: 0.001769,
                    cross1: 0.000012,
                    adj_r2_1: Some(0.9908),
                    intercept2: 0.007191,
                    cross2: -0.001578,
                    self2: 0.000025,
                    adj_r2_2: Some(0.9995),
                },
                discrete: DiscreteParams {
                    alpha1: 47.1160,
                    self1: -0.08337,
                    cross1: -0.000578,
                    alpha2: 139.0605,
                    cross2: 0.219529,
                    self2: -0.003539,
                },
                continuous: ContinuousParams::new(3.852613, -0.006965, -0.000048, 4.934909, 0.007846, -0.000126),
                confidence: [
                    (3.35, 4.35),
                    (-8.36e-3, -5.58e-3),
                    (-5.8e-5, -3.8e-5),
                    (4.45, 5.42),
                    (6.30e-3, 9.40e-3),
                    (-1.51e-4, -1.01e-4),
                ],
            },
            Subsystem::AiLabor => PublishedEstimates {
                regression: RegressionCoeffs {
                    intercept1: 0.023710,
                    self1: 0.000246,
                    cross1: 0.000021,
                    adj_r2_1: Some(0.9909),
                    intercept2: 0.011324,
                    cross2: -0.004431,
                    self2: 0.000041,
                    adj_r2_2: Some(0.9989),
                },
                discrete: DiscreteParams {
                    alpha1: 42.1757,
                    self1: -0.010375,
                    cross1: -0.000888,
                    alpha2: 88.3049,
                    cross2: 0.391303,
                    self2: -0.003656,
                },
                continuous: ContinuousParams::new(3.741844, -0.000943, -0.000081, 4.480796, 0.020083, -0.000187),
                confidence: [
                    (3.20, 4.28),
                    (-1.13e-3, -7.54e-4),
                    (-9.7e-5, -6.5e-5),
                    (4.00, 4.96),
                    (1.61e-2, 2.41e-2),
                    (-2.24e-4, -1.50e-4),
                ],
            },
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subsystem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Subsystem::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown subsystem '{s}' (expected ai-physical or ai-labor)"))
    }
}

/// Published estimates at their printed precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedEstimates {
    pub regression: RegressionCoeffs,
    pub discrete: DiscreteParams,
    pub continuous: ContinuousParams,
    /// 95% intervals in `(a1, b11, b12, a2, b21, b22)` order; reference only.
    pub confidence: [(f64, f64); 6],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsystem_names_round_trip() {
        for s in Subsystem::ALL {
            assert_eq!(s.name().parse::<Subsystem>().unwrap(), s);
            assert!(s.csv().starts_with("year,ai_capital,"));
        }
        assert!("ai-land".parse::<Subsystem>().is_err());
    }

    #[test]
    fn confidence_intervals_contain_baselines() {
        for s in Subsystem::ALL {
            let p = s.published();
            for (v, (lo, hi)) in p.continuous.to_array().into_iter().zip(p.confidence) {
                assert!(lo <= v && v <= hi);
            }
        }
    }
}
