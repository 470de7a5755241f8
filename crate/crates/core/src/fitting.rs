//! Ratio regression on annual data and the trajectories it implies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{regression_to_discrete, DiscreteParams, RegressionCoeffs};

/// Minimum series length: each three-term ratio regression needs one residual
/// degree of freedom on `n - 1` rows.
pub const MIN_OBSERVATIONS: usize = 4;

/// Condition number of the column-equilibrated Gram matrix above which the
/// fit is flagged as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Condition number treated as exact rank deficiency.
const SINGULAR: f64 = 1e15;

/// Map denominators with smaller magnitude are treated as singular.
pub const DENOMINATOR_EPS: f64 = 1e-12;

/// States above this magnitude are reported as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Paired annual observations of two positive stocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label_x: String,
    pub label_y: String,
    pub unit: String,
    pub years: Vec<i32>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        label_x: impl Into<String>,
        label_y: impl Into<String>,
        unit: impl Into<String>,
        years: Vec<i32>,
        xs: Vec<f64>,
        ys: Vec<f64>,
    ) -> Result<Self> {
        let ts = Self { label_x: label_x.into(), label_y: label_y.into(), unit: unit.into(), years, xs, ys };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.years.len();
        for len in [self.xs.len(), self.ys.len()] {
            if len != n {
                return Err(Error::LengthMismatch { left: n, right: len });
            }
        }
        if n < MIN_OBSERVATIONS {
            return Err(Error::InsufficientData { needed: MIN_OBSERVATIONS, got: n });
        }
        for w in self.years.windows(2) {
            if w[1] != w[0] + 1 {
                return Err(Error::NonConsecutiveYears { prev: w[0], next: w[1] });
            }
        }
        for (label, series) in [(&self.label_x, &self.xs), (&self.label_y, &self.ys)] {
            if let Some((index, &value)) = series.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::NonPositiveValue { series: label.clone(), index, value });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn initial_state(&self) -> (f64, f64) {
        (self.xs[0], self.ys[0])
    }
}

/// The two ratio regressions sharing one design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRows {
    /// `(x(k), y(k))` for `k = 0..n-1`.
    pub regressors: Vec<[f64; 2]>,
    /// `x(k) / x(k+1)`.
    pub response_x: Vec<f64>,
    /// `y(k) / y(k+1)`.
    pub response_y: Vec<f64>,
}

pub fn build_ratio_rows(ts: &TimeSeries) -> Result<RatioRows> {
    ts.validate()?;
    let m = ts.len() - 1;
    let mut rows = RatioRows {
        regressors: Vec::with_capacity(m),
        response_x: Vec::with_capacity(m),
        response_y: Vec::with_capacity(m),
    };
    for k in 0..m {
        rows.regressors.push([ts.xs[k], ts.ys[k]]);
        rows.response_x.push(ts.xs[k] / ts.xs[k + 1]);
        rows.response_y.push(ts.ys[k] / ts.ys[k + 1]);
    }
    Ok(rows)
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes relative to the largest entry.
fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= scale * f64::EPSILON * N as f64 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// No-intercept least squares for two regressors via the normal equations.
///
/// Columns are equilibrated to unit norm before forming the Gram matrix; the
/// returned condition number is that of the equilibrated Gram matrix.
pub fn least_squares_no_intercept(regressors: &[[f64; 2]], response: &[f64]) -> Result<([f64; 2], f64)> {
    if regressors.len() != response.len() {
        return Err(Error::LengthMismatch { left: regressors.len(), right: response.len() });
    }
    let norm = |j: usize| regressors.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
    let scale = [norm(0), norm(1)];
    if scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
        return Err(Error::SingularDesign { cond: f64::INFINITY });
    }
    let mut gram = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for (r, &v) in regressors.iter().zip(response) {
        let z = [r[0] / scale[0], r[1] / scale[1]];
        for i in 0..2 {
            rhs[i] += z[i] * v;
            for j in 0..2 {
                gram[i][j] += z[i] * z[j];
            }
        }
    }
    // Symmetric 2x2 eigenvalues in closed form.
    let mean = 0.5 * (gram[0][0] + gram[1][1]);
    let half_gap = (0.25 * (gram[0][0] - gram[1][1]).powi(2) + gram[0][1] * gram[0][1]).sqrt();
    let (hi, lo) = (mean + half_gap, mean - half_gap);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond < SINGULAR) {
        return Err(Error::SingularDesign { cond });
    }
    let z = solve_dense(gram, rhs).ok_or(Error::SingularDesign { cond })?;
    Ok(([z[0] / scale[0], z[1] / scale[1]], cond))
}

/// Per-equation regression diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationFit {
    /// Coefficients on `x(k)` and `y(k)` from the zero-intercept fit.
    pub slope_x: f64,
    pub slope_y: f64,
    /// Mean residual of the slope-only fit.
    pub intercept: f64,
    /// Adjusted R² of the slope-only fit, uncentered (the usual convention
    /// for regression through the origin), `m - 2` residual degrees of freedom.
    pub adj_r2_uncentered: f64,
    /// Adjusted R² of the three-term fitted ratio (post-hoc intercept added),
    /// centered, `m - 3` residual degrees of freedom.
    pub adj_r2_posthoc: f64,
    /// Mean residual of the three-term fit; zero by construction.
    pub residual_mean: f64,
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

fn fit_equation(regressors: &[[f64; 2]], response: &[f64]) -> Result<EquationFit> {
    let ([sx, sy], cond) = least_squares_no_intercept(regressors, response)?;
    let ill_conditioned = cond > ILL_CONDITIONED;
    if ill_conditioned {
        log::warn!("ratio regression is ill-conditioned (condition number {cond:e})");
    }
    let m = response.len() as f64;
    let slope_only: Vec<f64> = regressors.iter().map(|r| sx * r[0] + sy * r[1]).collect();
    let intercept = response.iter().zip(&slope_only).map(|(v, f)| v - f).sum::<f64>() / m;

    let ssr0: f64 = response.iter().zip(&slope_only).map(|(v, f)| (v - f).powi(2)).sum();
    let sst_raw: f64 = response.iter().map(|v| v * v).sum();
    let r2u = 1.0 - ssr0 / sst_raw;
    let adj_r2_uncentered = 1.0 - (1.0 - r2u) * m / (m - 2.0);

    let full: Vec<f64> = slope_only.iter().map(|f| f + intercept).collect();
    let residuals: Vec<f64> = response.iter().zip(&full).map(|(v, f)| v - f).collect();
    let residual_mean = residuals.iter().sum::<f64>() / m;
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_resp = response.iter().sum::<f64>() / m;
    let sst: f64 = response.iter().map(|v| (v - mean_resp).powi(2)).sum();
    let adj_r2_posthoc = if sst > 0.0 && m > 3.0 { 1.0 - (ssr / sst) * (m - 1.0) / (m - 3.0) } else { f64::NAN };

    Ok(EquationFit {
        slope_x: sx,
        slope_y: sy,
        intercept,
        adj_r2_uncentered,
        adj_r2_posthoc,
        residual_mean,
        condition_number: cond,
        ill_conditioned,
    })
}

/// Both equations of the zero-intercept fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroInterceptFit {
    pub coeffs: RegressionCoeffs,
    pub eq_x: EquationFit,
    pub eq_y: EquationFit,
}

/// Zero-intercept ratio regression with a post-hoc intercept.
///
/// Slopes come from least squares through the origin; each intercept is then
/// the mean of `empirical ratio - slope-only fit`. The reported `adj_r2_*`
/// are the uncentered adjusted R² of the slope-only fits; the centered
/// three-term variant is kept in [`EquationFit::adj_r2_posthoc`].
pub fn fit_zero_intercept(ts: &TimeSeries) -> Result<ZeroInterceptFit> {
    let rows = build_ratio_rows(ts)?;
    let eq_x = fit_equation(&rows.regressors, &rows.response_x)?;
    let eq_y = fit_equation(&rows.regressors, &rows.response_y)?;
    let coeffs = RegressionCoeffs {
        intercept1: eq_x.intercept,
        self1: eq_x.slope_x,
        cross1: eq_x.slope_y,
        adj_r2_1: Some(eq_x.adj_r2_uncentered),
        intercept2: eq_y.intercept,
        self2: eq_y.slope_y,
        cross2: eq_y.slope_x,
        adj_r2_2: Some(eq_y.adj_r2_uncentered),
    };
    Ok(ZeroInterceptFit { coeffs, eq_x, eq_y })
}

/// Ordinary least squares of both ratio equations with a free intercept.
///
/// This is the unconstrained counterpart of [`fit_zero_intercept`]; on data
/// generated exactly by the Leslie map it recovers the generating
/// coefficients. Adjusted R² are centered with `m - 3` degrees of freedom.
pub fn fit_ordinary(ts: &TimeSeries) -> Result<RegressionCoeffs> {
    let rows = build_ratio_rows(ts)?;
    let solve = |response: &[f64]| -> Result<([f64; 3], f64)> {
        let mut gram = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for (r, &v) in rows.regressors.iter().zip(response) {
            let z = [1.0, r[0], r[1]];
            for i in 0..3 {
                rhs[i] += z[i] * v;
                for j in 0..3 {
                    gram[i][j] += z[i] * z[j];
                }
            }
        }
        let c = solve_dense(gram, rhs).ok_or(Error::SingularDesign { cond: f64::INFINITY })?;
        let m = response.len() as f64;
        let mean = response.iter().sum::<f64>() / m;
        let (mut ssr, mut sst) = (0.0, 0.0);
        for (r, &v) in rows.regressors.iter().zip(response) {
            ssr += (v - c[0] - c[1] * r[0] - c[2] * r[1]).powi(2);
            sst += (v - mean).powi(2);
        }
        let adj = if sst > 0.0 { 1.0 - (ssr / sst) * (m - 1.0) / (m - 3.0) } else { f64::NAN };
        Ok((c, adj))
    };
    let (cx, adj_x) = solve(&rows.response_x)?;
    let (cy, adj_y) = solve(&rows.response_y)?;
    Ok(RegressionCoeffs {
        intercept1: cx[0],
        self1: cx[1],
        cross1: cx[2],
        adj_r2_1: Some(adj_x),
        intercept2: cy[0],
        self2: cy[2],
        cross2: cy[1],
        adj_r2_2: Some(adj_y),
    })
}

fn checked_step(dp: &DiscreteParams, x: f64, y: f64, step: usize) -> Result<(f64, f64)> {
    let ((nx, ny), (dx, dy)) = dp.step(x, y);
    for den in [dx, dy] {
        if !(den.abs() >= DENOMINATOR_EPS) {
            return Err(Error::DenominatorNearZero { step, value: den });
        }
    }
    if !(nx.abs() <= OVERFLOW_LIMIT && ny.abs() <= OVERFLOW_LIMIT) {
        return Err(Error::Overflow { step });
    }
    Ok((nx, ny))
}

/// A pair of equally long fitted series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.xs.last()?, *self.ys.last()?))
    }
}

/// Map each observed state one year forward. The first entry is the first
/// observation itself.
pub fn one_step_predictions(dp: &DiscreteParams, ts: &TimeSeries) -> Result<Trajectory> {
    let n = ts.len();
    let mut out = Trajectory { xs: Vec::with_capacity(n), ys: Vec::with_capacity(n) };
    out.xs.push(ts.xs[0]);
    out.ys.push(ts.ys[0]);
    for k in 0..n.saturating_sub(1) {
        let (x, y) = checked_step(dp, ts.xs[k], ts.ys[k], k)?;
        out.xs.push(x);
        out.ys.push(y);
    }
    Ok(out)
}

/// Iterate the map from `start`, feeding every output back in.
pub fn free_run(dp: &DiscreteParams, start: (f64, f64), steps: usize) -> Result<Trajectory> {
    let mut out = Trajectory { xs: Vec::with_capacity(steps + 1), ys: Vec::with_capacity(steps + 1) };
    let (mut x, mut y) = start;
    out.xs.push(x);
    out.ys.push(y);
    for step in 0..steps {
        (x, y) = checked_step(dp, x, y, step)?;
        out.xs.push(x);
        out.ys.push(y);
    }
    Ok(out)
}

/// Mean absolute percentage error, in percent.
pub fn mape(observed: &[f64], fitted: &[f64]) -> Result<f64> {
    if observed.len() != fitted.len() {
        return Err(Error::LengthMismatch { left: observed.len(), right: fitted.len() });
    }
    if observed.is_empty() {
        return Err(Error::InvalidArgument("MAPE of an empty series".into()));
    }
    let mut total = 0.0;
    for (i, (&w, &f)) in observed.iter().zip(fitted).enumerate() {
        if w == 0.0 {
            return Err(Error::ZeroObserved(i));
        }
        total += ((w - f) / w).abs();
    }
    Ok(100.0 * total / observed.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    #[default]
    OneStepAhead,
    FreeRunning,
}

/// Fitted trajectories and their accuracy against the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub coeffs: RegressionCoeffs,
    pub mode: FitMode,
    pub fitted_x: Vec<f64>,
    pub fitted_y: Vec<f64>,
    /// MAPE over years 2..n; the first fitted value is the observation itself.
    pub mape_x: f64,
    pub mape_y: f64,
}

pub fn fit_report(ts: &TimeSeries, coeffs: &RegressionCoeffs, mode: FitMode) -> Result<FitReport> {
    let dp = regression_to_discrete(coeffs)?;
    fit_report_discrete(ts, coeffs, &dp, mode)
}

/// Same as [`fit_report`] with the discrete map supplied directly.
pub fn fit_report_discrete(
    ts: &TimeSeries,
    coeffs: &RegressionCoeffs,
    dp: &DiscreteParams,
    mode: FitMode,
) -> Result<FitReport> {
    let traj = match mode {
        FitMode::OneStepAhead => one_step_predictions(dp, ts)?,
        FitMode::FreeRunning => free_run(dp, ts.initial_state(), ts.len() - 1)?,
    };
    Ok(FitReport {
        coeffs: *coeffs,
        mode,
        mape_x: mape(&ts.xs[1..], &traj.xs[1..])?,
        mape_y: mape(&ts.ys[1..], &traj.ys[1..])?,
        fitted_x: traj.xs,
        fitted_y: traj.ys,
    })
}
