//! Parameter layers of the two-species Lotka–Volterra model.
//!
//! The continuous system is
//!
//! ```text
//! dx/dt = x (a1 + b11 x + b12 y)
//! dy/dt = y (a2 + b21 x + b22 y)
//! ```
//!
//! Annual data are fitted through the Leslie discrete map
//!
//! ```text
//! x(k+1) = alpha1 x(k) / (1 - self1 x(k) - cross1 y(k))
//! y(k+1) = alpha2 y(k) / (1 - self2 y(k) - cross2 x(k))
//! ```
//!
//! whose reciprocal is linear in the state and is what the regression sees:
//!
//! ```text
//! x(k) / x(k+1) = alpha1' + self1' x(k) + cross1' y(k)
//! y(k) / y(k+1) = alpha2' + cross2' x(k) + self2' y(k)
//! ```
//!
//! with `alpha' = 1/alpha`, `self' = -self/alpha`, `cross' = -cross/alpha`,
//! `a = ln alpha` and `b = coeff * ln(alpha) / (alpha - 1)`.
//!
//! Coefficients are stored by role (self vs. cross) in every layer, never by
//! Greek letter: letter conventions for the second species differ between
//! sources, roles do not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two interacting stocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    X,
    Y,
}

/// Continuous-time coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParams {
    pub a1: f64,
    pub b11: f64,
    pub b12: f64,
    pub a2: f64,
    pub b21: f64,
    pub b22: f64,
}

impl ContinuousParams {
    /// Parameter names in the canonical `(a1, b11, b12, a2, b21, b22)` order.
    pub const NAMES: [&'static str; 6] = ["a1", "b11", "b12", "a2", "b21", "b22"];

    pub fn new(a1: f64, b11: f64, b12: f64, a2: f64, b21: f64, b22: f64) -> Self {
        Self { a1, b11, b12, a2, b21, b22 }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a1, self.b11, self.b12, self.a2, self.b21, self.b22]
    }

    pub fn from_array(t: [f64; 6]) -> Self {
        Self::new(t[0], t[1], t[2], t[3], t[4], t[5])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Positive growth rates and negative self-limitation for both species.
    pub fn is_logistic(&self) -> bool {
        self.a1 > 0.0 && self.a2 > 0.0 && self.b11 < 0.0 && self.b22 < 0.0
    }

    /// Right-hand side of the ODE.
    pub fn vector_field(&self, x: f64, y: f64) -> (f64, f64) {
        (x * (self.a1 + self.b11 * x + self.b12 * y), y * (self.a2 + self.b21 * x + self.b22 * y))
    }
}

/// Leslie discrete-map coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteParams {
    pub alpha1: f64,
    pub self1: f64,
    pub cross1: f64,
    pub alpha2: f64,
    pub self2: f64,
    pub cross2: f64,
}

impl DiscreteParams {
    /// One application of the map.
    ///
    /// Returns the two denominators alongside the image so callers can
    /// decide what counts as singular.
    pub fn step(&self, x: f64, y: f64) -> ((f64, f64), (f64, f64)) {
        let den_x = 1.0 - self.self1 * x - self.cross1 * y;
        let den_y = 1.0 - self.self2 * y - self.cross2 * x;
        ((self.alpha1 * x / den_x, self.alpha2 * y / den_y), (den_x, den_y))
    }
}

/// Coefficients of the two ratio regressions.
///
/// `adj_r2_*` are fit diagnostics; they are `None` when the layer was derived
/// from another parameterisation instead of estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionCoeffs {
    pub intercept1: f64,
    pub self1: f64,
    pub cross1: f64,
    pub adj_r2_1: Option<f64>,
    pub intercept2: f64,
    pub self2: f64,
    pub cross2: f64,
    pub adj_r2_2: Option<f64>,
}

fn check_alpha(name: &str, alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
        return Err(Error::Domain(format!("{name} = {alpha} must be positive and != 1")));
    }
    Ok(())
}

/// `ln(alpha) / (alpha - 1)`, positive for every admissible alpha.
fn leslie_scale(alpha: f64) -> f64 {
    alpha.ln() / (alpha - 1.0)
}

pub fn regression_to_discrete(rc: &RegressionCoeffs) -> Result<DiscreteParams> {
    check_alpha("intercept1", rc.intercept1)?;
    check_alpha("intercept2", rc.intercept2)?;
    let alpha1 = 1.0 / rc.intercept1;
    let alpha2 = 1.0 / rc.intercept2;
    Ok(DiscreteParams {
        alpha1,
        self1: -rc.self1 * alpha1,
        cross1: -rc.cross1 * alpha1,
        alpha2,
        self2: -rc.self2 * alpha2,
        cross2: -rc.cross2 * alpha2,
    })
}

pub fn discrete_to_regression(dp: &DiscreteParams) -> Result<RegressionCoeffs> {
    check_alpha("alpha1", dp.alpha1)?;
    check_alpha("alpha2", dp.alpha2)?;
    Ok(RegressionCoeffs {
        intercept1: 1.0 / dp.alpha1,
        self1: -dp.self1 / dp.alpha1,
        cross1: -dp.cross1 / dp.alpha1,
        adj_r2_1: None,
        intercept2: 1.0 / dp.alpha2,
        self2: -dp.self2 / dp.alpha2,
        cross2: -dp.cross2 / dp.alpha2,
        adj_r2_2: None,
    })
}

pub fn discrete_to_continuous(dp: &DiscreteParams) -> Result<ContinuousParams> {
    check_alpha("alpha1", dp.alpha1)?;
    check_alpha("alpha2", dp.alpha2)?;
    let s1 = leslie_scale(dp.alpha1);
    let s2 = leslie_scale(dp.alpha2);
    Ok(ContinuousParams {
        a1: dp.alpha1.ln(),
        b11: dp.self1 * s1,
        b12: dp.cross1 * s1,
        a2: dp.alpha2.ln(),
        b21: dp.cross2 * s2,
        b22: dp.self2 * s2,
    })
}

/// Inverse Leslie transform. Requires `a1, a2 != 0` (alpha != 1).
pub fn continuous_to_discrete(cp: &ContinuousParams) -> Result<DiscreteParams> {
    for (name, a) in [("a1", cp.a1), ("a2", cp.a2)] {
        if !a.is_finite() || a == 0.0 {
            return Err(Error::Domain(format!("{name} = {a} maps to alpha = 1")));
        }
    }
    let alpha1 = cp.a1.exp();
    let alpha2 = cp.a2.exp();
    check_alpha("alpha1", alpha1)?;
    check_alpha("alpha2", alpha2)?;
    let s1 = leslie_scale(alpha1);
    let s2 = leslie_scale(alpha2);
    Ok(DiscreteParams {
        alpha1,
        self1: cp.b11 / s1,
        cross1: cp.b12 / s1,
        alpha2,
        self2: cp.b22 / s2,
        cross2: cp.b21 / s2,
    })
}

/// Sign-based interaction categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    PureCompetition,
    Mutualism,
    PredatorPrey,
    Amensalism,
    Commensalism,
    Neutralism,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    /// Set only for [`InteractionKind::PredatorPrey`].
    pub prey: Option<Species>,
}

fn sign_with_tol(v: f64, tol: f64) -> i8 {
    if v.abs() <= tol {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Classify from the signs of `b12` and `b21`.
///
/// The category table follows the classical LV taxonomy literally:
/// `(+,+)` pure competition, `(-,-)` mutualism, opposite signs predator–prey,
/// one positive and one zero amensalism, one negative and one zero
/// commensalism, both zero neutralism. Values with `|b| <= tol` count as zero.
///
/// In the predator–prey case the prey is the species whose incoming cross
/// effect is negative while its outgoing effect is positive.
pub fn classify_interaction(cp: &ContinuousParams, tol: f64) -> Interaction {
    let tol = tol.max(0.0);
    let s12 = sign_with_tol(cp.b12, tol);
    let s21 = sign_with_tol(cp.b21, tol);
    let kind = match (s12, s21) {
        (1, 1) => InteractionKind::PureCompetition,
        (-1, -1) => InteractionKind::Mutualism,
        (1, -1) | (-1, 1) => InteractionKind::PredatorPrey,
        (1, 0) | (0, 1) => InteractionKind::Amensalism,
        (-1, 0) | (0, -1) => InteractionKind::Commensalism,
        _ => InteractionKind::Neutralism,
    };
    let prey = match (s12, s21) {
        // b12 is the effect of y on x: negative incoming for x, positive outgoing.
        (-1, 1) => Some(Species::X),
        (1, -1) => Some(Species::Y),
        _ => None,
    };
    Interaction { kind, prey }
}
