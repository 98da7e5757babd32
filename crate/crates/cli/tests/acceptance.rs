//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Tests are serialized through a lock so the wall-clock budgets are measured
//! without interference from each other.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rotman::evalkit::{interval_errors, mae, maev, DEFAULT_INTERVAL_BINS};
use rotman::linalg::Matrix;
use rotman::manifold::{fit_cosine, fourier_init, CosineParams, FitConfig};
use rotman::multilinear::{hosvd, reconstruct, Tensor};
use rotman::neuralnet::{Activation, DenseNet, NetRole};
use rotman::posegen::{euler_to_matrix, normalize_landmarks, rotate_by, AngleRange, Axis, EulerPose, LandmarkSet};
use rotman_cli::commands::{cmd_bench, cmd_decompose, cmd_generate, run_pipeline};
use rotman_cli::RunConfig;

static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id} [{verdict}] {name}: {detail}");
    let _ = out.flush();
}

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn config_in(dir: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.paths.out_dir = dir.to_path_buf();
    cfg
}

fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(dims, |_| rng.random_range(-1.0..1.0))
}

/// Textbook n-mode product: loops over every output index and sums along `mode`.
fn brute_mode_product(t: &Tensor<f64>, a: &Matrix<f64>, mode: usize) -> Tensor<f64> {
    let m = mode - 1;
    let mut dims = t.dims().to_vec();
    dims[m] = a.rows();
    Tensor::from_fn(&dims, |idx| {
        let mut src = idx.to_vec();
        (0..t.dims()[m])
            .map(|k| {
                src[m] = k;
                a[(idx[m], k)] * t.get(&src)
            })
            .sum()
    })
}

#[test]
fn criterion_1_multilinear_correctness() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut roundtrip_ok = true;
    let mut worst_product = 0.0f64;
    for _ in 0..200 {
        let order = rng.random_range(3..=5);
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(1..=5)).collect();
        let t = random_tensor(&mut rng, &dims);
        for mode in 1..=order {
            let u = t.unfold(mode).unwrap();
            let back = Tensor::fold(&u, mode, &dims).unwrap();
            let again = back.unfold(mode).unwrap();
            roundtrip_ok &= back == t && again == u;
            let a = Matrix::from_fn(rng.random_range(1..=5), dims[mode - 1], |_, _| rng.random_range(-1.0..1.0));
            let fast = t.mode_product(&a, mode).unwrap();
            let slow = brute_mode_product(&t, &a, mode);
            assert_eq!(fast.dims(), slow.dims());
            for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
                worst_product = worst_product.max((x - y).abs());
            }
        }
    }
    let mut worst_hosvd = 0.0f64;
    let dims = [4, 5, 3, 3, 6];
    for _ in 0..10 {
        let t = random_tensor(&mut rng, &dims);
        let fs = hosvd(&t, &dims).unwrap();
        let r = reconstruct(&fs).unwrap();
        worst_hosvd = worst_hosvd.max(r.relative_error(&t).unwrap());
    }
    let elapsed = start.elapsed();
    let pass = roundtrip_ok && worst_product <= 1e-12 && worst_hosvd < 1e-8 && elapsed < Duration::from_secs(10);
    report(
        1,
        "multilinear correctness",
        pass,
        &format!(
            "fold/unfold exact={roundtrip_ok}, mode-product max dev {worst_product:.2e} (≤1e-12), \
             full-rank HOSVD rel err {worst_hosvd:.2e} (<1e-8), {:.2} s (<10 s)",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    euler_to_matrix(&EulerPose::new(
        rng.random_range(-180.0..180.0),
        rng.random_range(-90.0..90.0),
        rng.random_range(-180.0..180.0),
    ))
}

#[test]
fn criterion_2_normalization() {
    let _g = serial();
    let example: LandmarkSet<f64> = LandmarkSet::new(vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]]);
    let n = normalize_landmarks(&example).unwrap();
    let example_ok = (n.scale - 4.0 / 3.0).abs() < 1e-12
        && n.points[0].iter().zip([-0.5, -0.5, 0.0]).all(|(a, b): (&f64, f64)| (a - b).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_idem = 0.0f64;
    let mut worst_sim = 0.0f64;
    let dev = |a: &LandmarkSet<f64>, b: &LandmarkSet<f64>| {
        a.points.iter().flatten().zip(b.points.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    for _ in 0..1000 {
        let pts: Vec<[f64; 3]> =
            (0..30).map(|_| [0; 3].map(|_| rng.random_range(-1.0..1.0))).collect();
        let shape = LandmarkSet::new(pts);
        let base = normalize_landmarks(&shape).unwrap();
        worst_idem = worst_idem.max(dev(&normalize_landmarks(&base).unwrap(), &base));

        // s·R·L + t normalizes to R applied to the normalized shape.
        let s = rng.random_range(0.1..10.0);
        let t = [0; 3].map(|_| rng.random_range(-10.0..10.0));
        let r = random_rotation(&mut rng);
        let moved = rotate_by(&shape, &r);
        let moved = LandmarkSet::new(
            moved.points.iter().map(|p| [s * p[0] + t[0], s * p[1] + t[1], s * p[2] + t[2]]).collect(),
        );
        let lhs = normalize_landmarks(&moved).unwrap();
        let rhs = rotate_by(&base, &r);
        worst_sim = worst_sim.max(dev(&lhs, &rhs));
    }
    let pass = example_ok && worst_idem <= 1e-10 && worst_sim <= 1e-10;
    report(
        2,
        "normalization",
        pass,
        &format!(
            "hand example ok={example_ok}, idempotence dev {worst_idem:.2e}, similarity dev {worst_sim:.2e} (≤1e-10, 1000 shapes)"
        ),
    );
    assert!(pass);
}

fn param_error(fit: &CosineParams<f64>, truth: &CosineParams<f64>) -> f64 {
    let tau = std::f64::consts::TAU;
    let dg = (fit.phase - truth.phase).rem_euclid(tau);
    let dg = dg.min(tau - dg);
    [
        (fit.amplitude - truth.amplitude).abs(),
        (fit.frequency - truth.frequency).abs(),
        dg,
        (fit.offset - truth.offset).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[test]
fn criterion_3_cosine_fit_recovery() {
    let _g = serial();
    let start = Instant::now();
    let angles: Vec<f64> = (0..11).map(|k| -50.0 + 10.0 * k as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let cfg = FitConfig::default();
    let pi = std::f64::consts::PI;
    let mut worst_clean = 0.0f64;
    let mut noisy_errors = Vec::with_capacity(100);
    for _ in 0..100 {
        let truth = CosineParams::new(
            rng.random_range(0.1..3.0),
            rng.random_range(0.01..0.1),
            rng.random_range(-pi..pi),
            rng.random_range(-2.0..2.0),
        );
        let clean: Vec<f64> = angles.iter().map(|&w| truth.eval(w)).collect();
        let init = fourier_init(&clean, &angles).unwrap();
        let fit = fit_cosine(&clean, &angles, &init, &cfg).unwrap();
        worst_clean = worst_clean.max(param_error(&fit.params, &truth));

        let noisy: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let init = fourier_init(&noisy, &angles).unwrap();
        let fit = fit_cosine(&noisy, &angles, &init, &cfg).unwrap();
        noisy_errors.push(param_error(&fit.params, &truth));
    }
    let elapsed = start.elapsed();
    let noisy_within = noisy_errors.iter().filter(|&&e| e <= 0.05).count();
    let worst_noisy = noisy_errors.iter().cloned().fold(0.0, f64::max);
    noisy_errors.sort_by(f64::total_cmp);
    let median_noisy = noisy_errors[50];
    let pass = worst_clean <= 1e-6 && noisy_within == 100 && elapsed < Duration::from_secs(5);
    report(
        3,
        "cosine-fit recovery",
        pass,
        &format!(
            "noise-free max param err {worst_clean:.2e} (≤1e-6); σ=0.01: {noisy_within}/100 draws within 0.05 \
             (median {median_noisy:.3}, worst {worst_noisy:.3}); {:.2} s (<5 s)",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_energy_concentration() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    let start = Instant::now();
    cmd_generate(&cfg).unwrap();
    let d = cmd_decompose(&cfg).unwrap();
    let elapsed = start.elapsed();
    let rotation = &d.energy[1..4];
    let pass = d.ranks[1..4] == [3, 3, 3]
        && rotation.iter().all(|&e| e >= 0.90)
        && elapsed < Duration::from_secs(60);
    report(
        4,
        "energy concentration",
        pass,
        &format!(
            "tensor {:?}, leading-3 energy yaw {:.4} pitch {:.4} roll {:.4} (≥0.90); {:.1} s (<60 s)",
            d.dims,
            rotation[0],
            rotation[1],
            rotation[2],
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_end_to_end_estimation() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    let start = Instant::now();
    let s = run_pipeline(&cfg).unwrap();
    let elapsed = start.elapsed();
    let e = &s.eval;
    let m = &e.fast.mae;
    let oracle = e.oracle.as_ref().expect("oracle subset evaluated");
    let a = &oracle.agreement;
    let pass = s.decompose.train_ids.len() == 14
        && e.fast.samples == 500
        && oracle.samples == 50
        && [m.yaw, m.pitch, m.roll].iter().all(|&v| v <= 5.0)
        && e.fast.maev.mean <= 7.0
        && [a.yaw, a.pitch, a.roll].iter().all(|&v| v <= 2.0)
        && elapsed < Duration::from_secs(600);
    report(
        5,
        "end-to-end estimation",
        pass,
        &format!(
            "MAE yaw {:.2} pitch {:.2} roll {:.2} (≤5), MAEV {:.2} (≤7), fast vs oracle MAE yaw {:.2} pitch {:.2} \
             roll {:.2} on {} samples (≤2); {:.0} s (<600 s)",
            m.yaw,
            m.pitch,
            m.roll,
            e.fast.maev.mean,
            a.yaw,
            a.pitch,
            a.roll,
            oracle.samples,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

/// Loss with one parameter replaced, for central differences.
fn perturbed_loss(net: &DenseNet<f64>, x: &Matrix<f64>, y: &Matrix<f64>, layer: usize, idx: usize, delta: f64) -> f64 {
    let mut n = net.clone();
    let l = &mut n.layers[layer];
    let nw = l.weights.rows() * l.weights.cols();
    if idx < nw {
        l.weights.as_mut_slice()[idx] += delta;
    } else {
        l.bias[idx - nw] += delta;
    }
    n.loss(x, y).unwrap()
}

#[test]
fn criterion_6_gradient_correctness() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let h = 1e-4;
    let mut worst = 0.0f64;
    let acts = [Activation::Relu, Activation::Tanh, Activation::Identity];
    for trial in 0..20 {
        let depth = rng.random_range(2..=4);
        let dims: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=6)).collect();
        let mut layer_acts: Vec<Activation> = (0..depth).map(|_| acts[rng.random_range(0..3)]).collect();
        // Every net mixes all three kinds somewhere across the trials; force the
        // first two trials to contain each explicitly.
        if trial < 2 && depth >= 3 {
            layer_acts[..3].copy_from_slice(&acts);
        }
        let mut net = DenseNet::new(NetRole::Generic, &dims, &layer_acts, 1000 + trial).unwrap();
        for l in &mut net.layers {
            for b in &mut l.bias {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let n = rng.random_range(1..=8);
        let x = Matrix::from_fn(n, dims[0], |_, _| rng.random_range(-1.0..1.0));
        let y = Matrix::from_fn(n, dims[depth], |_, _| rng.random_range(-1.0..1.0));
        let (_, grads) = net.gradients(&x, &y).unwrap();
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for (li, g) in grads.iter().enumerate() {
            let analytic: Vec<f64> = g.weights.as_slice().iter().chain(&g.bias).copied().collect();
            for (idx, &a) in analytic.iter().enumerate() {
                let numeric = (perturbed_loss(&net, &x, &y, li, idx, h) - perturbed_loss(&net, &x, &y, li, idx, -h)) / (2.0 * h);
                diff += (a - numeric).powi(2);
                scale = scale.max(a.abs()).max(numeric.abs());
            }
        }
        if scale > 0.0 {
            worst = worst.max(diff.sqrt() / scale);
        }
    }
    let pass = worst <= 1e-5;
    report(
        6,
        "gradient correctness",
        pass,
        &format!("max relative deviation {worst:.2e} over 20 random nets (≤1e-5, h=1e-4)"),
    );
    assert!(pass);
}

#[test]
fn criterion_7_real_time_bound() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    let t = cmd_bench(&cfg, Some(1404), 1000).unwrap();
    let pass = t.frames >= 1000 && t.median < 0.010;
    report(
        7,
        "real-time bound",
        pass,
        &format!(
            "D_f=1404, {} frames: median {:.3} ms (<10 ms), mean {:.3} ms, p95 {:.3} ms",
            t.frames,
            t.median * 1e3,
            t.mean * 1e3,
            t.p95 * 1e3
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_metric_identities() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let poses: Vec<EulerPose<f64>> = (0..200)
        .map(|_| EulerPose::new(rng.random_range(-50.0..50.0), rng.random_range(-40.0..40.0), rng.random_range(-30.0..30.0)))
        .collect();
    let same = maev(&poses, &poses).unwrap().mean;

    // Frontal truth: a 10° yaw offset turns the left and front columns by 10°
    // and leaves the vertical one, so MAEV = (10 + 0 + 10) / 3.
    let frontal = [EulerPose::new(0.0, 0.0, 0.0)];
    let single = maev(&[EulerPose::new(10.0, 0.0, 0.0)], &frontal).unwrap().mean;
    let level: Vec<EulerPose<f64>> = poses.iter().map(|p| EulerPose::new(p.yaw, 0.0, 0.0)).collect();
    let yawed: Vec<EulerPose<f64>> = level.iter().map(|p| EulerPose::new(p.yaw + 10.0, 0.0, 0.0)).collect();
    let swept = maev(&yawed, &level).unwrap().mean;
    let single_dev = (single - 20.0 / 3.0).abs().max((swept - 20.0 / 3.0).abs());

    let preds: Vec<EulerPose<f64>> = poses
        .iter()
        .map(|p| EulerPose::new(p.yaw + rng.random_range(-5.0..5.0), p.pitch + rng.random_range(-5.0..5.0), p.roll + rng.random_range(-5.0..5.0)))
        .collect();
    let global = mae(&preds, &poses).unwrap();
    let mut agg_dev = 0.0f64;
    for (axis, range, g) in [
        (Axis::Yaw, AngleRange { min: -50.0, max: 50.0 }, global.yaw),
        (Axis::Pitch, AngleRange { min: -40.0, max: 40.0 }, global.pitch),
        (Axis::Roll, AngleRange { min: -30.0, max: 30.0 }, global.roll),
    ] {
        let table = interval_errors(&preds, &poses, axis, range, DEFAULT_INTERVAL_BINS).unwrap();
        agg_dev = agg_dev.max((table.weighted_mae().unwrap() - g).abs());
    }
    let pass = same == 0.0 && single_dev < 1e-9 && agg_dev <= 1e-12;
    report(
        8,
        "metric identities",
        pass,
        &format!(
            "MAEV(identical) {same:.1e}, 10° yaw error MAEV {single:.12} (20/3; level-head sweep dev {single_dev:.1e}), \
             interval aggregation dev {agg_dev:.1e} (≤1e-12)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let _g = serial();
    // Short training keeps the double run cheap; every stage still runs.
    let mut cfg = RunConfig::default();
    cfg.train.encoder.epochs = 2;
    cfg.train.head.epochs = 2;
    cfg.eval.test_poses = 50;
    cfg.eval.oracle_sample = 3;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        cfg.paths.out_dir = d.path().to_path_buf();
        run_pipeline(&cfg).unwrap();
    }
    let p = &cfg.paths;
    let mut mismatched = Vec::new();
    for name in [&p.dataset, &p.tensor, &p.factors, &p.params, &p.bundle] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        if a != b {
            mismatched.push(name.display().to_string());
        }
    }
    let pass = mismatched.is_empty();
    report(
        9,
        "determinism",
        pass,
        &if pass {
            "dataset, tensor, factor set, params and bundle byte-identical across two runs".to_string()
        } else {
            format!("differing artifacts: {}", mismatched.join(", "))
        },
    );
    assert!(pass);
}
