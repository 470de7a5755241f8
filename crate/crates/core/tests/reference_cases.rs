use lvdyn_core::dynamics::{eigenvalues, integrate_ode, interior_equilibrium, jacobian_at, stability_at, Stability};
use lvdyn_core::fitting::{fit_report_discrete, fit_zero_intercept, free_run, FitMode, TimeSeries};
use lvdyn_core::params::{classify_interaction, continuous_to_discrete, discrete_to_regression};
use lvdyn_core::sensitivity::{bounds_from_baseline, equilibrium_sensitivity};
use lvdyn_core::{ContinuousParams, InteractionKind, Species};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const YEARS: [i32; 8] = [2016, 2017, 2018, 2019, 2020, 2021, 2022, 2023];
const AI: [f64; 8] = [15.40, 31.80, 59.30, 93.60, 138.90, 162.10, 170.60, 213.70];
const PHYSICAL: [f64; 8] = [37202.10, 39492.60, 41821.50, 43954.10, 45115.50, 47300.30, 49596.60, 50970.80];
const LABOR: [f64; 8] = [22770.0, 25500.0, 28210.0, 31820.0, 34880.0, 39700.0, 42390.0, 44650.0];

fn physical_series() -> TimeSeries {
    TimeSeries::new("ai", "physical", "bn", YEARS.to_vec(), AI.to_vec(), PHYSICAL.to_vec()).unwrap()
}

fn labor_series() -> TimeSeries {
    TimeSeries::new("ai", "labor", "bn", YEARS.to_vec(), AI.to_vec(), LABOR.to_vec()).unwrap()
}

fn physical_params() -> ContinuousParams {
    ContinuousParams::new(3.852613, -0.006965, -0.000048, 4.934909, 0.007846, -0.000126)
}

fn labor_params() -> ContinuousParams {
    ContinuousParams::new(3.741844, -0.000943, -0.000081, 4.480796, 0.020083, -0.000187)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn published_equilibria_and_eigenvalues() {
    for (cp, eq, eig) in
        [(physical_params(), (198.18, 51506.42), (-2.29, -5.57)), (labor_params(), (186.78, 44021.09), (-2.52, -5.89))]
    {
        let p = interior_equilibrium(&cp).unwrap();
        assert!((p.0 - eq.0).abs() < 0.5 && (p.1 - eq.1).abs() < 0.5, "{p:?}");
        let st = stability_at(&cp, p, 1e-9);
        assert_eq!(st.classification, Stability::StableNode);
        assert!((st.eigenvalues[0].re - eig.0).abs() < 0.05);
        assert!((st.eigenvalues[1].re - eig.1).abs() < 0.05);
        let kind = classify_interaction(&cp, 0.0);
        assert_eq!(kind.kind, InteractionKind::PredatorPrey);
        assert_eq!(kind.prey, Some(Species::X));
    }
}

#[test]
fn zero_intercept_slopes_are_close_to_published() {
    let published = [
        (physical_series(), [0.001769, 0.000012, -0.001578, 0.000025]),
        (labor_series(), [0.000246, 0.000021, -0.004431, 0.000041]),
    ];
    for (ts, [b1, g1, b2, g2]) in published {
        let fit = fit_zero_intercept(&ts).unwrap();
        let c = fit.coeffs;
        // The two-significant-figure entries carry up to ~4% rounding on their own.
        assert!(rel(c.self1, b1) < 0.05, "{} vs {b1}", c.self1);
        assert!(rel(c.cross1, g1) < 0.05, "{} vs {g1}", c.cross1);
        assert!(rel(c.cross2, b2) < 0.05, "{} vs {b2}", c.cross2);
        assert!(rel(c.self2, g2) < 0.05, "{} vs {g2}", c.self2);
        assert!(c.adj_r2_1.unwrap() >= 0.98 && c.adj_r2_2.unwrap() >= 0.98);
    }
}

#[test]
fn one_step_mape_near_published() {
    for (ts, cp, (mx, my)) in
        [(physical_series(), physical_params(), (6.15, 1.25)), (labor_series(), labor_params(), (6.33, 1.75))]
    {
        let dp = continuous_to_discrete(&cp).unwrap();
        let rc = discrete_to_regression(&dp).unwrap();
        let r = fit_report_discrete(&ts, &rc, &dp, FitMode::OneStepAhead).unwrap();
        assert!((r.mape_x - mx).abs() <= 1.5, "{} vs {mx}", r.mape_x);
        assert!((r.mape_y - my).abs() <= 1.5, "{} vs {my}", r.mape_y);
    }
}

#[test]
fn both_integrators_converge_to_the_interior_point() {
    for (ts, cp) in [(physical_series(), physical_params()), (labor_series(), labor_params())] {
        let eq = interior_equilibrium(&cp).unwrap();
        let dp = continuous_to_discrete(&cp).unwrap();
        let run = free_run(&dp, ts.initial_state(), 200).unwrap();
        let end = run.last().unwrap();
        assert!(rel(end.0, eq.0) < 0.01 && rel(end.1, eq.1) < 0.01, "{end:?} vs {eq:?}");

        let ode = integrate_ode(&cp, ts.initial_state(), 10.0, 1e-3).unwrap();
        let end = ode.last();
        assert!(rel(end.0, eq.0) < 0.01 && rel(end.1, eq.1) < 0.01, "{end:?} vs {eq:?}");
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let cp = ContinuousParams::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let (x, y) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
        let j = jacobian_at(&cp, (x, y));
        let h = 1e-6;
        let fx = |x: f64, y: f64| cp.vector_field(x, y);
        let dx = ((fx(x + h, y).0 - fx(x - h, y).0) / (2.0 * h), (fx(x + h, y).1 - fx(x - h, y).1) / (2.0 * h));
        let dy = ((fx(x, y + h).0 - fx(x, y - h).0) / (2.0 * h), (fx(x, y + h).1 - fx(x, y - h).1) / (2.0 * h));
        let fd = [[dx.0, dy.0], [dx.1, dy.1]];
        let scale = j.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        for r in 0..2 {
            for c in 0..2 {
                assert!((j[r][c] - fd[r][c]).abs() <= 1e-5 * scale, "{j:?} vs {fd:?}");
            }
        }
        let e = eigenvalues(&j);
        let trace = e[0] + e[1];
        assert!((trace.re - (j[0][0] + j[1][1])).abs() <= 1e-9 * scale.max(1.0));
    }
}

#[test]
fn rk4_reproduces_exponential_growth() {
    let cp = ContinuousParams::new(1.0, 0.0, 0.0, -1.0, 0.0, 0.0);
    let r = integrate_ode(&cp, (1.0, 1.0), 1.0, 1e-3).unwrap();
    let (x, y) = r.last();
    assert!(rel(x, 1f64.exp()) < 1e-6);
    assert!(rel(y, (-1f64).exp()) < 1e-6);
}

#[test]
fn single_point_perturbations() {
    // Closed-form equilibria after a +5% change in a1 and a -10% change in b21.
    let base = interior_equilibrium(&physical_params()).unwrap();
    let mut up = physical_params();
    up.a1 *= 1.05;
    let p = interior_equilibrium(&up).unwrap();
    assert!((p.0 - 217.53).abs() < 0.01 && (p.1 - 52711.5).abs() < 0.1, "{p:?}");
    assert!(p.0 > base.0 && p.1 > base.1);

    let mut down = physical_params();
    down.b21 *= 0.9;
    let p = interior_equilibrium(&down).unwrap();
    assert!((p.0 - 204.31).abs() < 0.01 && (p.1 - 50616.2).abs() < 0.1, "{p:?}");
    assert!(p.0 > base.0 && p.1 < base.1);
}

#[test]
fn sobol_sums_and_bands_on_baseline_boxes() {
    for cp in [physical_params(), labor_params()] {
        let b = bounds_from_baseline(&cp, 0.1).unwrap();
        let r = equilibrium_sensitivity(&b, 1024, 0).unwrap();
        assert_eq!(r.accepted_rows + r.rejected_rows, 14336);
        for o in &r.outputs {
            let s = o.sum_first_order();
            assert!((0.94..=1.04).contains(&s), "{} sum {s}", o.output);
            for (si, sti) in o.first_order.iter().zip(&o.total_order) {
                assert!(*sti >= si - 0.05);
            }
        }
    }
}
