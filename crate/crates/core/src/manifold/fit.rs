use super::params::{AxisFit, CosineParams, DimensionFit};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, lstsq, Matrix};
use crate::posegen::Axis;
use crate::scalar::Scalar;

/// Stopping rule for [`fit_cosine`].
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iterations: 5000 }
    }
}

fn check_samples<T: Scalar>(values: &[T], angles: &[T]) -> Result<()> {
    if values.len() != angles.len() {
        return Err(Error::Shape(format!("{} values for {} angles", values.len(), angles.len())));
    }
    if values.iter().chain(angles).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("curve samples".into()));
    }
    Ok(())
}

/// Spacing of a uniform, strictly increasing angle list.
fn uniform_step<T: Scalar>(angles: &[T]) -> Result<T> {
    let n = angles.len();
    let step = (angles[n - 1] - angles[0]) / T::from_usize_lossy(n - 1);
    if !(step > T::zero()) {
        return Err(Error::InvalidArgument("angles must be strictly increasing".into()));
    }
    let tol = T::lit(1e-9) * step.max(T::one());
    for (k, w) in angles.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > tol {
            return Err(Error::InvalidArgument(format!("non-uniform angle spacing at index {k}")));
        }
    }
    Ok(step)
}

fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len())
}

fn is_constant<T: Scalar>(values: &[T]) -> bool {
    let m = mean(values);
    let spread = values.iter().map(|&v| (v - m).abs()).fold(T::zero(), T::max);
    spread <= T::lit(1e-12) * m.abs().max(T::one())
}

/// Best curve at a fixed frequency: linear least squares on `[cos βω, sin βω, 1]`.
fn fit_at_frequency<T: Scalar>(values: &[T], angles: &[T], beta: T) -> Option<(CosineParams<T>, T)> {
    let design = Matrix::from_fn(angles.len(), 3, |i, j| match j {
        0 => (beta * angles[i]).cos(),
        1 => (beta * angles[i]).sin(),
        _ => T::one(),
    });
    let sol = lstsq(&design, values).ok()?;
    if sol.rank_deficient {
        return None;
    }
    let (a, b, c) = (sol.x[0], sol.x[1], sol.x[2]);
    // a·cos θ + b·sin θ = α·cos(θ − atan2(b, a))
    let params = CosineParams::new(a.hypot(b), beta, -b.atan2(a), c).canonical();
    Some((params, sol.residual_norm))
}

/// Initial curve parameters from the spectrum of uniformly spaced samples.
///
/// The offset starts at the sample mean. The dominant non-DC bin of the DFT of
/// the centered samples gives a first frequency (bin frequency over the sampled
/// span `N·Δ`), amplitude (`2|X_k|/N`) and phase. Windows often hold less than one
/// period, where the coarsest bin overshoots the true frequency, so the estimate is
/// then refined on a sub-bin frequency grid (a least-squares periodogram with a
/// floating offset) and the better of the two is returned.
pub fn fourier_init<T: Scalar>(values: &[T], angles: &[T]) -> Result<CosineParams<T>> {
    check_samples(values, angles)?;
    let n = values.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 samples, got {n}")));
    }
    let step = uniform_step(angles)?;
    let offset = mean(values);
    if is_constant(values) {
        return Ok(CosineParams::constant(offset));
    }
    let centered: Vec<T> = values.iter().map(|&v| v - offset).collect();
    let nf = T::from_usize_lossy(n);
    let bin = T::TAU() / (nf * step);

    // plain DFT, bins 1..=N/2
    let mut best_k = 1;
    let mut best_mag = T::neg_infinity();
    let mut best_x = (T::zero(), T::zero());
    for k in 1..=n / 2 {
        let (mut re, mut im) = (T::zero(), T::zero());
        for (m, &v) in centered.iter().enumerate() {
            let ang = T::TAU() * T::from_usize_lossy(k * m) / nf;
            re += v * ang.cos();
            im -= v * ang.sin();
        }
        let mag = re.hypot(im);
        if mag > best_mag {
            best_mag = mag;
            best_k = k;
            best_x = (re, im);
        }
    }
    let beta_dft = bin * T::from_usize_lossy(best_k);
    let scale = if 2 * best_k == n { T::one() } else { T::lit(2.0) };
    let dft = CosineParams::new(
        scale * best_mag / nf,
        beta_dft,
        best_x.1.atan2(best_x.0) - beta_dft * angles[0],
        offset,
    )
    .canonical();
    let dft_resid = residual_norm(&dft, values, angles);
    let mut best = (dft, dft_resid);
    if let Some(at_bin) = fit_at_frequency(values, angles, beta_dft) {
        if at_bin.1 <= best.1 {
            best = at_bin;
        }
    }

    // sub-bin periodogram from 0.05 bins up to Nyquist, then golden-section polish
    let nyquist = T::PI() / step;
    let fine = bin * T::lit(0.05);
    let mut grid_best: Option<(T, T)> = None;
    let mut beta = fine;
    while beta <= nyquist {
        if let Some((_, r)) = fit_at_frequency(values, angles, beta) {
            if grid_best.is_none_or(|(_, br)| r < br) {
                grid_best = Some((beta, r));
            }
        }
        beta += fine;
    }
    if let Some((b0, _)) = grid_best {
        let lo = (b0 - fine).max(fine * T::lit(0.5));
        let hi = (b0 + fine).min(nyquist);
        let tol = T::lit(1e-12) * (lo.abs() + hi.abs());
        let b = golden_min(lo, hi, tol, |b| {
            fit_at_frequency(values, angles, b).map_or(T::infinity(), |(_, r)| r)
        });
        for cand in [b0, b] {
            if let Some(fit) = fit_at_frequency(values, angles, cand) {
                if fit.1 < best.1 {
                    best = fit;
                }
            }
        }
    }
    Ok(best.0)
}

fn residual_norm<T: Scalar>(p: &CosineParams<T>, values: &[T], angles: &[T]) -> T {
    values.iter().zip(angles).map(|(&v, &w)| (p.eval(w) - v).powi(2)).sum::<T>().sqrt()
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub(crate) fn golden_min<T: Scalar>(mut lo: T, mut hi: T, tol: T, mut f: impl FnMut(T) -> T) -> T {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let tol = tol.max(T::epsilon() * (lo.abs() + hi.abs()));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Trace of one Levenberg–Marquardt run.
#[derive(Debug, Clone)]
pub struct LmReport<T> {
    pub params: CosineParams<T>,
    /// Cost `½‖r‖²` at the start and after every accepted step.
    pub cost_history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Gauss–Newton (Levenberg–Marquardt with Marquardt scaling) on
/// `min Σ_i (f(ω_i) − y_i)²` with the analytic Jacobian.
pub fn levenberg_marquardt<T: Scalar>(
    values: &[T],
    angles: &[T],
    init: &CosineParams<T>,
    cfg: &FitConfig,
) -> Result<LmReport<T>> {
    check_samples(values, angles)?;
    if !init.is_finite() {
        return Err(Error::NonFinite("initial curve parameters".into()));
    }
    let n = values.len();
    let scale2: T = values.iter().map(|&v| v * v).sum::<T>() + T::one();
    let cost_of = |p: &[T; 4]| -> T {
        let c = CosineParams::from_array(*p);
        values.iter().zip(angles).map(|(&v, &w)| (c.eval(w) - v).powi(2)).sum::<T>() * T::lit(0.5)
    };
    let mut p = init.as_array();
    let mut cost = cost_of(&p);
    let mut history = vec![cost];
    let mut lambda = T::lit(1e-3);
    let mut converged = false;
    let mut iterations = 0;
    let exact = T::epsilon() * T::epsilon() * scale2;

    while iterations < cfg.max_iterations {
        if cost <= exact {
            converged = true;
            break;
        }
        iterations += 1;
        let (a, b, g) = (p[0], p[1], p[2]);
        let mut jtj = Matrix::<T>::zeros(4, 4);
        let mut jtr = [T::zero(); 4];
        for i in 0..n {
            let theta = b * angles[i] + g;
            let (s, c) = theta.sin_cos();
            let r = a * c + p[3] - values[i];
            let row = [c, -a * angles[i] * s, -a * s, T::one()];
            for u in 0..4 {
                jtr[u] += row[u] * r;
                for v in 0..4 {
                    jtj[(u, v)] += row[u] * row[v];
                }
            }
        }
        let maxdiag = (0..4).map(|k| jtj[(k, k)]).fold(T::zero(), T::max);
        let floor = maxdiag * T::lit(1e-12) + T::min_positive_value();
        let mut accepted = false;
        while lambda < T::lit(1e16) {
            let mut damped = jtj.clone();
            for k in 0..4 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(floor);
            }
            let rhs = jtr.map(|x| -x);
            let Some(delta) = cholesky_solve(&damped, &rhs) else {
                lambda *= T::lit(10.0);
                continue;
            };
            let trial = [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2], p[3] + delta[3]];
            let trial_cost = cost_of(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel = (cost - trial_cost) / cost;
                p = trial;
                cost = trial_cost;
                history.push(cost);
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-15));
                accepted = true;
                if rel < T::lit(cfg.rel_tol) {
                    converged = true;
                }
                break;
            }
            lambda *= T::lit(10.0);
        }
        if !accepted {
            // no descent direction left at any damping: stationary point
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    Ok(LmReport { params: CosineParams::from_array(p).canonical(), cost_history: history, iterations, converged })
}

/// Least-squares cosine fit of one factor column against its bin angles, starting from `init`.
pub fn fit_cosine<T: Scalar>(
    values: &[T],
    angles: &[T],
    init: &CosineParams<T>,
    cfg: &FitConfig,
) -> Result<DimensionFit<T>> {
    check_samples(values, angles)?;
    if values.is_empty() {
        return Err(Error::Empty("curve samples".into()));
    }
    if is_constant(values) {
        return Ok(DimensionFit {
            params: CosineParams::constant(mean(values)),
            residual_rms: rms_residual(&CosineParams::constant(mean(values)), values, angles),
            degenerate: true,
            converged: true,
            iterations: 0,
        });
    }
    let report = levenberg_marquardt(values, angles, init, cfg)?;
    if !report.converged {
        log::warn!("cosine fit hit the iteration cap ({}) without converging", cfg.max_iterations);
    }
    Ok(DimensionFit {
        params: report.params,
        residual_rms: rms_residual(&report.params, values, angles),
        degenerate: false,
        converged: report.converged,
        iterations: report.iterations,
    })
}

fn rms_residual<T: Scalar>(p: &CosineParams<T>, values: &[T], angles: &[T]) -> T {
    residual_norm(p, values, angles) / T::from_usize_lossy(values.len()).sqrt()
}

/// Fits every column of a `D x J` factor matrix independently against the `D` bin angles.
pub fn fit_axis<T: Scalar>(axis: Axis, factor: &Matrix<T>, angles: &[T], cfg: &FitConfig) -> Result<AxisFit<T>> {
    if factor.rows() != angles.len() {
        return Err(Error::Shape(format!("{} factor rows for {} angles", factor.rows(), angles.len())));
    }
    let dims = (0..factor.cols())
        .map(|j| {
            let col = factor.column(j);
            let init = fourier_init(&col, angles)?;
            fit_cosine(&col, angles, &init, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AxisFit { axis, angles: angles.to_vec(), dims })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..11).map(|k| -50.0 + 10.0 * k as f64).collect()
    }

    fn sample(p: &CosineParams<f64>, angles: &[f64]) -> Vec<f64> {
        angles.iter().map(|&w| p.eval(w)).collect()
    }

    #[test]
    fn init_constant_signal() {
        let init = fourier_init(&[2.0; 6], &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(init.amplitude, 0.0);
        assert_eq!(init.offset, 2.0);
    }

    #[test]
    fn init_argument_errors() {
        assert!(fourier_init(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(fourier_init(&[1.0, 2.0, 3.0, 1.0], &[0.0, 1.0, 2.5, 3.0]).is_err());
        assert!(fourier_init(&[1.0, f64::NAN, 3.0, 1.0], &[0.0, 1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn init_recovers_on_bin_cosine_exactly() {
        // 12 samples, 10° apart: bin 2 has frequency 2·2π/120 rad/deg
        let angles: Vec<f64> = (0..12).map(|k| 10.0 * k as f64).collect();
        let truth = CosineParams::new(0.7, 2.0 * std::f64::consts::TAU / 120.0, 0.4, -0.2);
        let init = fourier_init(&sample(&truth, &angles), &angles).unwrap();
        for (a, b) in init.as_array().iter().zip(truth.as_array()) {
            assert!((a - b).abs() < 1e-9, "{init:?}");
        }
    }

    #[test]
    fn init_close_to_sub_cycle_cosine() {
        let truth = CosineParams::new(1.5, 0.03, 0.2, 0.5);
        let init = fourier_init(&sample(&truth, &grid()), &grid()).unwrap();
        for (a, b) in init.as_array().iter().zip(truth.as_array()) {
            assert!((a - b).abs() <= 0.3 * b.abs(), "{init:?}");
        }
    }

    #[test]
    fn exact_fit_recovery() {
        let truth = CosineParams::new(1.5, 0.03, 0.2, 0.5);
        let values = sample(&truth, &grid());
        let init = fourier_init(&values, &grid()).unwrap();
        let fit = fit_cosine(&values, &grid(), &init, &FitConfig::default()).unwrap();
        assert!(fit.converged && !fit.degenerate);
        for (a, b) in fit.params.as_array().iter().zip(truth.as_array()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn constant_data_is_flagged() {
        let fit = fit_cosine(&[0.25; 11], &grid(), &CosineParams::constant(0.0), &FitConfig::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.params, CosineParams::constant(0.25));
        assert_eq!(fit.params.frequency, std::f64::consts::PI / 180.0);
    }

    #[test]
    fn accepted_steps_never_increase_cost() {
        let truth = CosineParams::new(2.0, 0.05, -1.0, 0.1);
        let values = sample(&truth, &grid());
        let start = CosineParams::new(1.0, 0.02, 0.0, 0.0);
        let rep = levenberg_marquardt(&values, &grid(), &start, &FitConfig::default()).unwrap();
        assert!(rep.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let truth = CosineParams::new(2.0, 0.05, -1.0, 0.1);
        let values = sample(&truth, &grid());
        let start = CosineParams::new(1.0, 0.02, 0.0, 0.0);
        let cfg = FitConfig { rel_tol: 1e-10, max_iterations: 1 };
        let fit = fit_cosine(&values, &grid(), &start, &cfg).unwrap();
        assert!(!fit.converged);
        assert!(fit.params.is_finite());
    }

    #[test]
    fn nan_input_rejected() {
        let mut v = vec![0.0; 11];
        v[3] = f64::NAN;
        assert!(matches!(
            fit_cosine(&v, &grid(), &CosineParams::constant(0.0), &FitConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn columns_fit_independently() {
        let a = CosineParams::new(0.4, 0.0174, 0.3, 0.1);
        let b = CosineParams::new(0.2, 0.0174, -1.3, 0.0);
        let angles = grid();
        let mut m = Matrix::from_fn(11, 2, |i, j| if j == 0 { a.eval(angles[i]) } else { b.eval(angles[i]) });
        let first = fit_axis(Axis::Yaw, &m, &angles, &FitConfig::default()).unwrap();
        for i in 0..11 {
            m[(i, 1)] += 0.05 * (i as f64).sin();
        }
        let second = fit_axis(Axis::Yaw, &m, &angles, &FitConfig::default()).unwrap();
        assert_eq!(first.dims[0], second.dims[0]);
        assert_ne!(first.dims[1], second.dims[1]);
    }
}
