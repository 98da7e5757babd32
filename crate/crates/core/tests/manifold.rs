use std::f64::consts::PI;

use proptest::prelude::*;
use rotman::linalg::Matrix;
use rotman::manifold::{
    fine_row_count, fit_axis, fit_cosine, fourier_init, gen_fine_factors, levenberg_marquardt, params_from_json,
    params_to_json, CosineParams, FitConfig, SinusoidalParams,
};
use rotman::posegen::{AngleRange, Axis};

fn grid() -> Vec<f64> {
    (0..11).map(|k| -50.0 + 10.0 * k as f64).collect()
}

fn params_strategy() -> impl Strategy<Value = CosineParams<f64>> {
    (0.1f64..3.0, 0.01f64..0.1, -PI..PI, -2.0f64..2.0).prop_map(|(a, b, g, f)| CosineParams::new(a, b, g, f))
}

fn phase_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

proptest! {
    #[test]
    fn canonical_form_is_stable_and_preserves_the_curve(
        a in -3.0f64..3.0, b in -0.1f64..0.1, g in -10.0f64..10.0, f in -2.0f64..2.0, w in -90.0f64..90.0,
    ) {
        let p = CosineParams::new(a, b, g, f);
        let c = p.canonical();
        prop_assert!(c.amplitude >= 0.0 && c.frequency >= 0.0);
        prop_assert!((-PI..PI).contains(&c.phase));
        prop_assert_eq!(c.canonical(), c);
        prop_assert!((c.eval(w) - p.eval(w)).abs() < 1e-9);
    }

    #[test]
    fn exact_cosines_are_recovered(truth in params_strategy()) {
        let angles = grid();
        let values: Vec<f64> = angles.iter().map(|&w| truth.eval(w)).collect();
        let init = fourier_init(&values, &angles).unwrap();
        let fit = fit_cosine(&values, &angles, &init, &FitConfig::default()).unwrap();
        let p = fit.params;
        prop_assert!(fit.converged && !fit.degenerate);
        prop_assert!((p.amplitude - truth.amplitude).abs() < 1e-6);
        prop_assert!((p.frequency - truth.frequency).abs() < 1e-6);
        prop_assert!(phase_gap(p.phase, truth.phase) < 1e-6);
        prop_assert!((p.offset - truth.offset).abs() < 1e-6);
        prop_assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn accepted_steps_never_raise_the_cost(truth in params_strategy(), noise in prop::collection::vec(-0.05f64..0.05, 11)) {
        let angles = grid();
        let values: Vec<f64> = angles.iter().zip(&noise).map(|(&w, e)| truth.eval(w) + e).collect();
        let init = fourier_init(&values, &angles).unwrap();
        let rep = levenberg_marquardt(&values, &angles, &init, &FitConfig::default()).unwrap();
        prop_assert!(rep.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fine_rows_are_continuous(truth in params_strategy(), other in params_strategy(), step in 0.01f64..1.0) {
        let angles = grid();
        let m = Matrix::from_fn(11, 2, |i, j| if j == 0 { truth.eval(angles[i]) } else { other.eval(angles[i]) });
        let fit = fit_axis(Axis::Yaw, &m, &angles, &FitConfig::default()).unwrap();
        let range = AngleRange { min: -50.0, max: 50.0 };
        let table = gen_fine_factors(&fit, range, step).unwrap();
        prop_assert_eq!(table.len(), fine_row_count(&range, step));
        let bound = fit
            .dims
            .iter()
            .map(|d| d.params.amplitude * d.params.frequency)
            .fold(0.0, f64::max)
            * step
            + 1e-12;
        for i in 1..table.len() {
            let (a, b) = (table.rows.row(i - 1), table.rows.row(i));
            for j in 0..2 {
                prop_assert!((a[j] - b[j]).abs() <= bound);
            }
        }
    }
}

#[test]
fn documented_init_example_lands_within_thirty_percent() {
    let truth = CosineParams::new(1.5, 0.03, 0.2, 0.5);
    let angles = grid();
    let values: Vec<f64> = angles.iter().map(|&w| truth.eval(w)).collect();
    let init = fourier_init(&values, &angles).unwrap().canonical();
    for (got, want) in init.as_array().iter().zip(truth.as_array()) {
        assert!((got - want).abs() <= 0.3 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn noisy_fit_residual_tracks_the_noise_level() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let truth = CosineParams::new(1.5, 0.03, 0.2, 0.5);
    let angles = grid();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut rms = Vec::new();
    for _ in 0..100 {
        let values: Vec<f64> = angles.iter().map(|&w| truth.eval(w) + noise.sample(&mut rng)).collect();
        let init = fourier_init(&values, &angles).unwrap();
        rms.push(fit_cosine(&values, &angles, &init, &FitConfig::default()).unwrap().residual_rms);
    }
    // 11 points, 4 parameters: E[rms²] = σ²·7/11
    let mean_sq = rms.iter().map(|r| r * r).sum::<f64>() / rms.len() as f64;
    let expected = 0.01f64.powi(2) * 7.0 / 11.0;
    assert!((mean_sq / expected - 1.0).abs() < 0.25, "mean rms² {mean_sq:.3e} vs {expected:.3e}");
}

#[test]
fn yaw_table_at_hundredth_degree() {
    let angles = grid();
    let truth = CosineParams::new(0.3, PI / 180.0, 0.0, 0.1);
    let m = Matrix::from_fn(11, 1, |i, _| truth.eval(angles[i]));
    let fit = fit_axis(Axis::Yaw, &m, &angles, &FitConfig::default()).unwrap();
    let table = gen_fine_factors(&fit, AngleRange { min: -50.0, max: 50.0 }, 0.01).unwrap();
    assert_eq!(table.len(), 10001);
    assert!((table.rows[(5000, 0)] - truth.eval(0.0)).abs() < 1e-9);
}

#[test]
fn params_document_round_trips() {
    let angles = grid();
    let m = Matrix::from_fn(11, 3, |i, j| (0.017 * angles[i] + j as f64).cos() * 0.3 + 0.1 * j as f64);
    let cfg = FitConfig::default();
    let params = SinusoidalParams {
        yaw: fit_axis(Axis::Yaw, &m, &angles, &cfg).unwrap(),
        pitch: fit_axis(Axis::Pitch, &m, &angles, &cfg).unwrap(),
        roll: fit_axis(Axis::Roll, &m, &angles, &cfg).unwrap(),
    };
    let text = params_to_json(&params).unwrap();
    assert_eq!(params_from_json::<f64>(&text).unwrap(), params);
}
