//! Equilibria, linear stability and phase-plane geometry of the continuous system.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ContinuousParams;

pub type Point = (f64, f64);
pub type Matrix2 = [[f64; 2]; 2];

/// Default eigenvalue tolerance for [`classify_stability`].
pub const STABILITY_TOL: f64 = 1e-9;

/// Default RK4 step, in years.
pub const DEFAULT_DT: f64 = 1e-3;

/// Step-doubling relative error above which an RK4 run is aborted.
pub const MAX_LOCAL_ERROR: f64 = 1e-3;

/// States below this are outside the model's domain.
const NEGATIVE_STATE: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub origin: Point,
    /// `(-a1/b11, 0)`, when `b11 != 0`.
    pub axial_x: Option<Point>,
    /// `(0, -a2/b22)`, when `b22 != 0`.
    pub axial_y: Option<Point>,
    /// Intersection of the two non-trivial nullclines, if they are not parallel.
    pub interior: Option<Point>,
}

/// Closed-form intersection of `a1 + b11 x + b12 y = 0` and `a2 + b21 x + b22 y = 0`.
///
/// Returns `None` when the nullclines are parallel, i.e. when
/// `|b12 b21 - b11 b22|` is below `1e-15` times the larger of the two products.
pub fn interior_equilibrium(cp: &ContinuousParams) -> Option<Point> {
    let cross = cp.b12 * cp.b21;
    let own = cp.b11 * cp.b22;
    let den = cross - own;
    let scale = cross.abs().max(own.abs());
    if !(den.abs() >= 1e-15 * scale) || den == 0.0 {
        return None;
    }
    let x = (cp.a1 * cp.b22 - cp.b12 * cp.a2) / den;
    let y = (cp.b11 * cp.a2 - cp.a1 * cp.b21) / den;
    Some((x, y))
}

pub fn equilibria(cp: &ContinuousParams) -> EquilibriumSet {
    EquilibriumSet {
        origin: (0.0, 0.0),
        axial_x: (cp.b11 != 0.0).then(|| (-cp.a1 / cp.b11, 0.0)),
        axial_y: (cp.b22 != 0.0).then(|| (0.0, -cp.a2 / cp.b22)),
        interior: interior_equilibrium(cp),
    }
}

pub fn jacobian_at(cp: &ContinuousParams, (x, y): Point) -> Matrix2 {
    [[cp.a1 + 2.0 * cp.b11 * x + cp.b12 * y, cp.b12 * x], [cp.b21 * y, cp.a2 + cp.b21 * x + 2.0 * cp.b22 * y]]
}

/// Roots of `λ² - tr λ + det`, ordered by real part (descending), then
/// imaginary part (descending).
pub fn eigenvalues(m: &Matrix2) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    // Discriminant from the entries directly; avoids cancellation in tr²/4 - det.
    let disc = 0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[1][0];
    let mut eig = if disc >= 0.0 {
        let root = disc.sqrt();
        let big = half + half.signum() * root;
        let small = if big != 0.0 { det / big } else { half - root };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let root = (-disc).sqrt();
        [Complex64::new(half, root), Complex64::new(half, -root)]
    };
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    eig
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    StableNode,
    UnstableNode,
    Saddle,
    StableFocus,
    UnstableFocus,
    /// Linearly a center; the nonlinear system is not decided by it.
    Center,
    /// Zero or repeated eigenvalues within tolerance; linearization inconclusive.
    Degenerate,
}

pub fn classify_stability(eigs: &[Complex64; 2], tol: f64) -> Stability {
    let tol = tol.max(0.0);
    let [l1, l2] = *eigs;
    if l1.im.abs() > tol || l2.im.abs() > tol {
        let re = 0.5 * (l1.re + l2.re);
        return if re < -tol {
            Stability::StableFocus
        } else if re > tol {
            Stability::UnstableFocus
        } else {
            Stability::Center
        };
    }
    let (r1, r2) = (l1.re, l2.re);
    if r1.abs() <= tol || r2.abs() <= tol || (r1 - r2).abs() <= tol {
        return Stability::Degenerate;
    }
    match (r1 > 0.0, r2 > 0.0) {
        (false, false) => Stability::StableNode,
        (true, true) => Stability::UnstableNode,
        _ => Stability::Saddle,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub point: Point,
    pub jacobian: Matrix2,
    pub eigenvalues: [Complex64; 2],
    pub classification: Stability,
}

pub fn stability_at(cp: &ContinuousParams, p: Point, tol: f64) -> StabilityReport {
    let jacobian = jacobian_at(cp, p);
    let eigenvalues = eigenvalues(&jacobian);
    StabilityReport { point: p, jacobian, eigenvalues, classification: classify_stability(&eigenvalues, tol) }
}

/// `constant + coef_x x + coef_y y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub constant: f64,
    pub coef_x: f64,
    pub coef_y: f64,
}

impl Line {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.constant + self.coef_x * x + self.coef_y * y
    }

    /// `y` on the line at abscissa `x`, if the line is not vertical.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        (self.coef_y != 0.0).then(|| -(self.constant + self.coef_x * x) / self.coef_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn validate(&self) -> Result<()> {
        let all = [self.x_min, self.x_max, self.y_min, self.y_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBBox("non-finite corner".into()));
        }
        if self.x_min <= 0.0 || self.y_min <= 0.0 {
            return Err(Error::InvalidBBox("must lie in the open first quadrant".into()));
        }
        if self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::InvalidBBox("empty extent".into()));
        }
        Ok(())
    }

    /// Box spanning `(0, factor·x*] × (0, factor·y*]` with a small positive floor.
    pub fn around(p: Point, factor: f64) -> Self {
        let (x, y) = (p.0.abs().max(f64::MIN_POSITIVE), p.1.abs().max(f64::MIN_POSITIVE));
        Self { x_min: 1e-3 * x, x_max: factor * x, y_min: 1e-3 * y, y_max: factor * y }
    }
}

/// Quadrant of the `(dx/dt, dy/dt)` sign plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `dx/dt < 0`, `dy/dt > 0`.
    I,
    /// Both decreasing.
    II,
    /// `dx/dt > 0`, `dy/dt < 0`.
    III,
    /// Both increasing.
    IV,
}

impl Region {
    pub fn from_signs(sx: i8, sy: i8) -> Option<Self> {
        match (sx, sy) {
            (-1, 1) => Some(Region::I),
            (-1, -1) => Some(Region::II),
            (1, -1) => Some(Region::III),
            (1, 1) => Some(Region::IV),
            _ => None,
        }
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub dxdt: f64,
    pub dydt: f64,
    pub sign_x: i8,
    pub sign_y: i8,
}

impl FieldSample {
    fn at(cp: &ContinuousParams, x: f64, y: f64) -> Self {
        let (dxdt, dydt) = cp.vector_field(x, y);
        Self { x, y, dxdt, dydt, sign_x: sign(dxdt), sign_y: sign(dydt) }
    }

    pub fn region(&self) -> Option<Region> {
        Region::from_signs(self.sign_x, self.sign_y)
    }
}

/// Sample taken next to the interior equilibrium, one per compass direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionProbe {
    pub direction: Direction,
    pub sample: FieldSample,
    pub region: Option<Region>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Above,
    Left,
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGeometry {
    /// `a1 + b11 x + b12 y = 0`.
    pub nullcline_x: Line,
    /// `a2 + b21 x + b22 y = 0`.
    pub nullcline_y: Line,
    pub bbox: BBox,
    pub grid_n: usize,
    /// Row-major (`y` outer, `x` inner) samples of the vector field and its signs.
    pub grid: Vec<FieldSample>,
    pub probes: Vec<RegionProbe>,
}

/// Relative offset of the region probes from the interior equilibrium.
pub const PROBE_OFFSET: f64 = 0.05;

pub fn phase_geometry(cp: &ContinuousParams, bbox: BBox, grid_n: usize) -> Result<PhaseGeometry> {
    bbox.validate()?;
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!("grid size {grid_n} must be at least 2")));
    }
    let step_x = (bbox.x_max - bbox.x_min) / (grid_n - 1) as f64;
    let step_y = (bbox.y_max - bbox.y_min) / (grid_n - 1) as f64;
    let grid: Vec<FieldSample> = (0..grid_n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let y = bbox.y_min + j as f64 * step_y;
            (0..grid_n).map(move |i| FieldSample::at(cp, bbox.x_min + i as f64 * step_x, y))
        })
        .collect();

    let probes = match interior_equilibrium(cp) {
        Some((xs, ys)) if xs > 0.0 && ys > 0.0 => [
            (Direction::Right, (xs * (1.0 + PROBE_OFFSET), ys)),
            (Direction::Above, (xs, ys * (1.0 + PROBE_OFFSET))),
            (Direction::Left, (xs * (1.0 - PROBE_OFFSET), ys)),
            (Direction::Below, (xs, ys * (1.0 - PROBE_OFFSET))),
        ]
        .into_iter()
        .map(|(direction, (x, y))| {
            let sample = FieldSample::at(cp, x, y);
            RegionProbe { direction, sample, region: sample.region() }
        })
        .collect(),
        _ => Vec::new(),
    };

    Ok(PhaseGeometry {
        nullcline_x: Line { constant: cp.a1, coef_x: cp.b11, coef_y: cp.b12 },
        nullcline_y: Line { constant: cp.a2, coef_x: cp.b21, coef_y: cp.b22 },
        bbox,
        grid_n,
        grid,
        probes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Largest step-doubling relative error estimate seen along the run.
    pub max_error_estimate: f64,
}

impl OdeTrajectory {
    pub fn last(&self) -> Point {
        (*self.xs.last().unwrap(), *self.ys.last().unwrap())
    }
}

fn rk4_step(cp: &ContinuousParams, (x, y): Point, h: f64) -> Point {
    let f = |x: f64, y: f64| cp.vector_field(x, y);
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h * k1.0, y + 0.5 * h * k1.1);
    let k3 = f(x + 0.5 * h * k2.0, y + 0.5 * h * k2.1);
    let k4 = f(x + h * k3.0, y + h * k3.1);
    (x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
}

/// Classical fixed-step RK4 from `start` over `[0, t_end]`.
///
/// Every step is shadowed by two half steps; the relative difference is the
/// local error estimate. The full-step result is what gets recorded.
pub fn integrate_ode(cp: &ContinuousParams, start: Point, t_end: f64, dt: f64) -> Result<OdeTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("end time {t_end} must be non-negative")));
    }
    if !(start.0 >= 0.0 && start.1 >= 0.0) {
        return Err(Error::InvalidArgument("initial state must lie in the closed first quadrant".into()));
    }
    let full_steps = (t_end / dt + 1e-9).floor() as usize;
    let remainder = t_end - full_steps as f64 * dt;
    let mut steps: Vec<f64> = vec![dt; full_steps];
    if remainder > 1e-12 * t_end.max(dt) {
        steps.push(remainder);
    }

    let mut out = OdeTrajectory {
        ts: Vec::with_capacity(steps.len() + 1),
        xs: Vec::with_capacity(steps.len() + 1),
        ys: Vec::with_capacity(steps.len() + 1),
        max_error_estimate: 0.0,
    };
    let mut state = start;
    out.ts.push(0.0);
    out.xs.push(state.0);
    out.ys.push(state.1);
    for (i, h) in steps.into_iter().enumerate() {
        let full = rk4_step(cp, state, h);
        let halves = rk4_step(cp, rk4_step(cp, state, 0.5 * h), 0.5 * h);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
        let estimate = rel(full.0, halves.0).max(rel(full.1, halves.1));
        let t = if i < full_steps { (i + 1) as f64 * dt } else { t_end };
        if !(estimate <= MAX_LOCAL_ERROR) {
            return Err(Error::StepTooLarge { t, estimate });
        }
        out.max_error_estimate = out.max_error_estimate.max(estimate);
        state = full;
        if state.0 < NEGATIVE_STATE || state.1 < NEGATIVE_STATE {
            return Err(Error::NegativeState { t, x: state.0, y: state.1 });
        }
        out.ts.push(t);
        out.xs.push(state.0);
        out.ys.push(state.1);
    }
    Ok(out)
}
