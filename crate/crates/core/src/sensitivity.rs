//! Variance-based (Sobol') sensitivity of the interior equilibrium.
//!
//! Inputs are sampled uniformly on a box with the Saltelli design: two base
//! matrices `A` and `B` taken from one `2D`-dimensional Sobol' point each,
//! plus the cross matrices `AB(i)` (`A` with column `i` from `B`) and
//! `BA(i)`. Per base index the rows are laid out as
//!
//! ```text
//! A, AB(1) .. AB(D), BA(1) .. BA(D), B
//! ```
//!
//! giving `N (2D + 2)` rows. First-order indices use
//! `V_i = mean(f(B) (f(AB(i)) - f(A)))` and total-order indices the Jansen
//! form `V_Ti = mean((f(A) - f(AB(i)))²) / 2`, both normalised by the
//! variance of the retained `A ∪ B` outputs. Outputs are centred on the
//! retained mean first, which does not change the estimands but removes the
//! large-mean noise term from the first-order estimator.
//!
//! Rows that are rejected by the model (non-finite or negative equilibria)
//! drop their whole base block, so every retained `A`/`B`/`AB(i)` triple
//! stays aligned.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::interior_equilibrium;
use crate::error::{Error, Result};
use crate::lowdisc::{Sobol, MAX_DIMS};
use crate::params::ContinuousParams;

/// Minimum base sample size.
pub const MIN_BASE_SAMPLES: usize = 64;

/// Fraction of base blocks that must survive rejection.
pub const MIN_RETAINED_FRACTION: f64 = 0.5;

/// Uniform box around the six continuous parameters, in `(a1, b11, b12, a2, b21, b22)` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub ranges: [(f64, f64); 6],
}

impl ParamBounds {
    pub fn new(ranges: [(f64, f64); 6]) -> Result<Self> {
        for (name, (lo, hi)) in ContinuousParams::NAMES.iter().zip(ranges) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("bounds for {name} must satisfy lower < upper")));
            }
        }
        Ok(Self { ranges })
    }
}

/// `[v - |v| f, v + |v| f]` for every parameter.
pub fn bounds_from_baseline(cp: &ContinuousParams, fraction: f64) -> Result<ParamBounds> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("perturbation fraction {fraction} must lie in (0, 1)")));
    }
    let mut ranges = [(0.0, 0.0); 6];
    for ((range, v), name) in ranges.iter_mut().zip(cp.to_array()).zip(ContinuousParams::NAMES) {
        if v == 0.0 {
            return Err(Error::ZeroBaseline(name));
        }
        let half = v.abs() * fraction;
        *range = (v - half, v + half);
    }
    ParamBounds::new(ranges)
}

/// Saltelli sample matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliDesign {
    pub base_samples: usize,
    pub dims: usize,
    pub seed: u64,
    values: Vec<f64>,
}

impl SaltelliDesign {
    /// Rows per base index.
    pub fn block(&self) -> usize {
        2 * self.dims + 2
    }

    pub fn n_rows(&self) -> usize {
        self.base_samples * self.block()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.dims..(r + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dims)
    }

    pub fn a_index(&self, j: usize) -> usize {
        j * self.block()
    }

    pub fn ab_index(&self, j: usize, i: usize) -> usize {
        j * self.block() + 1 + i
    }

    pub fn ba_index(&self, j: usize, i: usize) -> usize {
        j * self.block() + 1 + self.dims + i
    }

    pub fn b_index(&self, j: usize) -> usize {
        j * self.block() + 2 * self.dims + 1
    }
}

pub fn check_base_samples(n: usize) -> Result<()> {
    if n < MIN_BASE_SAMPLES || !n.is_power_of_two() {
        return Err(Error::InvalidN(n));
    }
    Ok(())
}

pub fn saltelli_sample(bounds: &[(f64, f64)], n: usize, seed: u64) -> Result<SaltelliDesign> {
    check_base_samples(n)?;
    let dims = bounds.len();
    if dims == 0 || 2 * dims > MAX_DIMS {
        return Err(Error::InvalidArgument(format!("Saltelli design supports 1..={} inputs", MAX_DIMS / 2)));
    }
    if let Some(i) = bounds.iter().position(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(Error::InvalidArgument(format!("bounds of input {i} must satisfy lower < upper")));
    }
    let scale = |u: f64, (lo, hi): (f64, f64)| lo + u * (hi - lo);
    let mut seq = Sobol::scrambled(2 * dims, seed)?;
    let block = 2 * dims + 2;
    let mut values = Vec::with_capacity(n * block * dims);
    for _ in 0..n {
        let p = seq.next_point();
        let a: Vec<f64> = (0..dims).map(|d| scale(p[d], bounds[d])).collect();
        let b: Vec<f64> = (0..dims).map(|d| scale(p[dims + d], bounds[d])).collect();
        values.extend_from_slice(&a);
        for i in 0..dims {
            values.extend((0..dims).map(|d| if d == i { b[d] } else { a[d] }));
        }
        for i in 0..dims {
            values.extend((0..dims).map(|d| if d == i { a[d] } else { b[d] }));
        }
        values.extend_from_slice(&b);
    }
    Ok(SaltelliDesign { base_samples: n, dims, seed, values })
}

/// Model outputs per design row, with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutputs {
    pub names: Vec<String>,
    /// `values[k][r]` is output `k` at row `r`; invalid rows hold NaN.
    pub values: Vec<Vec<f64>>,
    pub valid: Vec<bool>,
}

/// Evaluate `model` on every design row. Rows are evaluated in parallel and
/// collected in row order, so the result does not depend on thread count.
pub fn evaluate_model<F>(design: &SaltelliDesign, names: &[&str], model: F) -> ModelOutputs
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    let k = names.len();
    let per_row: Vec<Option<Vec<f64>>> = (0..design.n_rows())
        .into_par_iter()
        .map(|r| model(design.row(r)).filter(|out| out.len() == k && out.iter().all(|v| v.is_finite())))
        .collect();
    let mut values = vec![Vec::with_capacity(per_row.len()); k];
    let mut valid = Vec::with_capacity(per_row.len());
    for row in per_row {
        valid.push(row.is_some());
        for (o, column) in values.iter_mut().enumerate() {
            column.push(row.as_ref().map_or(f64::NAN, |v| v[o]));
        }
    }
    ModelOutputs { names: names.iter().map(|s| s.to_string()).collect(), values, valid }
}

/// Interior equilibrium of the row's parameters; rejects rows with no interior
/// point, non-finite values, or a negative component.
pub fn equilibrium_model(theta: &[f64]) -> Option<Vec<f64>> {
    let t: [f64; 6] = theta.try_into().ok()?;
    let (x, y) = interior_equilibrium(&ContinuousParams::from_array(t))?;
    (x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0).then(|| vec![x, y])
}

pub fn evaluate_equilibria(design: &SaltelliDesign) -> ModelOutputs {
    evaluate_model(design, &["x_star", "y_star"], equilibrium_model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputIndices {
    pub output: String,
    /// Raw estimator values, unclipped.
    pub first_order: Vec<f64>,
    pub total_order: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl OutputIndices {
    pub fn sum_first_order(&self) -> f64 {
        self.first_order.iter().sum()
    }

    pub fn first_order_clipped(&self) -> Vec<f64> {
        self.first_order.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }

    pub fn total_order_clipped(&self) -> Vec<f64> {
        self.total_order.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }

    /// Input indices sorted by total-order index, largest first.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.total_order.len()).collect();
        idx.sort_by(|&a, &b| self.total_order[b].total_cmp(&self.total_order[a]));
        idx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    pub parameters: Vec<String>,
    pub outputs: Vec<OutputIndices>,
    pub base_samples: usize,
    pub seed: u64,
    pub accepted_rows: usize,
    pub rejected_rows: usize,
    /// Base blocks used by the estimators.
    pub retained_blocks: usize,
}

impl SobolResult {
    pub fn output(&self, name: &str) -> Option<&OutputIndices> {
        self.outputs.iter().find(|o| o.output == name)
    }
}

pub fn sobol_indices(design: &SaltelliDesign, outputs: &ModelOutputs, parameters: &[&str]) -> Result<SobolResult> {
    let n = design.base_samples;
    let d = design.dims;
    if parameters.len() != d {
        return Err(Error::LengthMismatch { left: parameters.len(), right: d });
    }
    if outputs.valid.len() != design.n_rows() {
        return Err(Error::LengthMismatch { left: outputs.valid.len(), right: design.n_rows() });
    }
    let retained: Vec<usize> = (0..n)
        .filter(|&j| {
            let start = design.a_index(j);
            outputs.valid[start..start + design.block()].iter().all(|&v| v)
        })
        .collect();
    let needed = (MIN_RETAINED_FRACTION * n as f64).ceil() as usize;
    if retained.len() < needed {
        return Err(Error::TooManyRejections { retained: retained.len(), needed });
    }
    let m = retained.len() as f64;
    let accepted_rows = outputs.valid.iter().filter(|&&v| v).count();

    let mut result = Vec::with_capacity(outputs.values.len());
    for (name, f) in outputs.names.iter().zip(&outputs.values) {
        let mean = retained.iter().map(|&j| f[design.a_index(j)] + f[design.b_index(j)]).sum::<f64>() / (2.0 * m);
        let variance = retained
            .iter()
            .map(|&j| (f[design.a_index(j)] - mean).powi(2) + (f[design.b_index(j)] - mean).powi(2))
            .sum::<f64>()
            / (2.0 * m);
        if !(variance > 0.0) {
            return Err(Error::InvalidArgument(format!("output {name} has zero variance over the design")));
        }
        let mut first_order = Vec::with_capacity(d);
        let mut total_order = Vec::with_capacity(d);
        for i in 0..d {
            let (mut vi, mut vti) = (0.0, 0.0);
            for &j in &retained {
                let fa = f[design.a_index(j)] - mean;
                let fb = f[design.b_index(j)] - mean;
                let fab = f[design.ab_index(j, i)] - mean;
                vi += fb * (fab - fa);
                vti += (fa - fab).powi(2);
            }
            first_order.push(vi / m / variance);
            total_order.push(0.5 * vti / m / variance);
        }
        result.push(OutputIndices { output: name.clone(), first_order, total_order, mean, variance });
    }

    Ok(SobolResult {
        parameters: parameters.iter().map(|s| s.to_string()).collect(),
        outputs: result,
        base_samples: n,
        seed: design.seed,
        accepted_rows,
        rejected_rows: outputs.valid.len() - accepted_rows,
        retained_blocks: retained.len(),
    })
}

/// Full pipeline: box, design, equilibria, indices.
pub fn equilibrium_sensitivity(bounds: &ParamBounds, n: usize, seed: u64) -> Result<SobolResult> {
    let design = saltelli_sample(&bounds.ranges, n, seed)?;
    let outputs = evaluate_equilibria(&design);
    sobol_indices(&design, &outputs, &ContinuousParams::NAMES)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn phys() -> ContinuousParams {
        ContinuousParams::new(3.852613, -0.006965, -0.000048, 4.934909, 0.007846, -0.000126)
    }

    fn labor() -> ContinuousParams {
        ContinuousParams::new(3.741844, -0.000943, -0.000081, 4.480796, 0.020083, -0.000187)
    }

    fn indices_of<F>(bounds: &[(f64, f64)], n: usize, seed: u64, f: F) -> OutputIndices
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let design = saltelli_sample(bounds, n, seed).unwrap();
        let outputs = evaluate_model(&design, &["f"], |t| Some(vec![f(t)]));
        let names: Vec<String> = (0..bounds.len()).map(|i| format!("t{i}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        sobol_indices(&design, &outputs, &names).unwrap().outputs.remove(0)
    }

    #[test]
    fn baseline_box() {
        let mut cp = phys();
        cp.a1 = 3.8526;
        cp.b22 = -0.000126;
        let b = bounds_from_baseline(&cp, 0.1).unwrap();
        assert_relative_eq!(b.ranges[0].0, 3.46734, max_relative = 1e-12);
        assert_relative_eq!(b.ranges[0].1, 4.23786, max_relative = 1e-12);
        assert_relative_eq!(b.ranges[5].0, -0.0001386, max_relative = 1e-12);
        assert_relative_eq!(b.ranges[5].1, -0.0001134, max_relative = 1e-12);
        assert!(bounds_from_baseline(&cp, 0.0).is_err());
        assert!(bounds_from_baseline(&cp, 1.0).is_err());
        cp.b12 = 0.0;
        assert_eq!(bounds_from_baseline(&cp, 0.1), Err(Error::ZeroBaseline("b12")));
    }

    #[test]
    fn design_size_and_box() {
        let b = bounds_from_baseline(&phys(), 0.1).unwrap();
        let design = saltelli_sample(&b.ranges, 64, 1).unwrap();
        assert_eq!(design.n_rows(), 896);
        for row in design.rows() {
            for (v, (lo, hi)) in row.iter().zip(b.ranges) {
                assert!(*v >= lo && *v <= hi);
            }
        }
        assert_eq!(saltelli_sample(&b.ranges, 1024, 1).unwrap().n_rows(), 14336);
        for bad in [0, 32, 100, 1000] {
            assert_eq!(saltelli_sample(&b.ranges, bad, 1).unwrap_err(), Error::InvalidN(bad));
        }
    }

    #[test]
    fn cross_rows_swap_exactly_one_column() {
        let design = saltelli_sample(&[(0.0, 1.0); 3], 64, 5).unwrap();
        for j in [0, 17, 63] {
            let a = design.row(design.a_index(j));
            let b = design.row(design.b_index(j));
            for i in 0..3 {
                let ab = design.row(design.ab_index(j, i));
                let ba = design.row(design.ba_index(j, i));
                for d in 0..3 {
                    assert_eq!(ab[d], if d == i { b[d] } else { a[d] });
                    assert_eq!(ba[d], if d == i { a[d] } else { b[d] });
                }
            }
        }
    }

    #[test]
    fn baseline_row_is_a_valid_equilibrium() {
        let out = equilibrium_model(&phys().to_array()).unwrap();
        assert!((out[0] - 198.18).abs() < 0.01 && (out[1] - 51506.42).abs() < 0.01);
        // b12 b21 == b11 b22
        assert_eq!(equilibrium_model(&[1.0, -1.0, -2.0, 1.0, -0.5, -1.0]), None);
        // negative equilibrium
        assert_eq!(equilibrium_model(&[-1.0, -1.0, 0.0, 1.0, 0.0, -1.0]), None);
    }

    #[test]
    fn single_variable_function() {
        let s = indices_of(&[(0.0, 1.0); 6], 1024, 3, |t| t[0]);
        assert!((s.first_order[0] - 1.0).abs() <= 0.02);
        assert!((s.total_order[0] - 1.0).abs() <= 0.02);
        for i in 1..6 {
            assert!(s.first_order[i].abs() <= 0.02 && s.total_order[i].abs() <= 0.02);
        }
    }

    #[test]
    fn additive_function_shares() {
        let s = indices_of(&[(0.0, 1.0); 6], 1024, 11, |t| t.iter().sum());
        for i in 0..6 {
            assert!((s.first_order[i] - 1.0 / 6.0).abs() <= 0.03, "{:?}", s.first_order);
        }
        assert!((s.sum_first_order() - 1.0).abs() <= 0.03);
    }

    #[test]
    fn two_variable_variance_shares() {
        // Var U(0,1) = 1/12, Var U(0,2) = 4/12.
        let s = indices_of(&[(0.0, 1.0), (0.0, 2.0)], 1024, 2, |t| t[0] + t[1]);
        assert!((s.first_order[0] - 0.2).abs() <= 0.02);
        assert!((s.first_order[1] - 0.8).abs() <= 0.02);
    }

    #[test]
    fn rejected_blocks_are_dropped_whole() {
        let design = saltelli_sample(&[(0.0, 1.0); 2], 64, 9).unwrap();
        // reject about a quarter of the A/B space
        let outputs = evaluate_model(&design, &["f"], |t| (t[0] < 0.75).then(|| vec![t[0] + t[1]]));
        let r = sobol_indices(&design, &outputs, &["p", "q"]).unwrap();
        assert!(r.rejected_rows > 0);
        assert_eq!(r.accepted_rows + r.rejected_rows, design.n_rows());
        assert!(r.retained_blocks < 64 && r.retained_blocks >= 32);

        let none = evaluate_model(&design, &["f"], |_| None);
        assert!(matches!(
            sobol_indices(&design, &none, &["p", "q"]),
            Err(Error::TooManyRejections { retained: 0, needed: 32 })
        ));
    }

    #[test]
    fn labor_box_rejection_rate() {
        let b = bounds_from_baseline(&labor(), 0.1).unwrap();
        let r = equilibrium_sensitivity(&b, 256, 0).unwrap();
        assert_eq!(r.accepted_rows + r.rejected_rows, 256 * 14);
        assert!(r.retained_blocks * 14 <= r.accepted_rows);
        assert!(r.retained_blocks >= 128);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn deterministic_and_banded(seed in 0u64..1000, pick in 0usize..2) {
            let cp = if pick == 0 { phys() } else { labor() };
            let b = bounds_from_baseline(&cp, 0.1).unwrap();
            let r1 = equilibrium_sensitivity(&b, 128, seed).unwrap();
            let r2 = equilibrium_sensitivity(&b, 128, seed).unwrap();
            prop_assert_eq!(&r1, &r2);
            for o in &r1.outputs {
                for (s, st) in o.first_order.iter().zip(&o.total_order) {
                    prop_assert!(*st >= s - 0.05);
                    prop_assert!(*s >= -0.05);
                }
            }
        }
    }
}
