use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::fast::{clamp_pose, PoseEstimate};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, Matrix};
use crate::manifold::{golden_min, SinusoidalParams};
use crate::multilinear::{identity_basis, FactorSet, Tensor};
use crate::neuralnet::PredictedLatents;
use crate::posegen::{Axis, EulerPose};
use crate::scalar::Scalar;

/// Search constants of the reconstruction estimator, degrees where applicable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub coarse_step: f64,
    pub refine_tol: f64,
    pub max_outer: usize,
    pub rel_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { coarse_step: 2.0, refine_tol: 0.05, max_outer: 20, rel_tol: 1e-8 }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.coarse_step > 0.0 && self.refine_tol > 0.0 && self.rel_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("oracle search constants {self:?}")));
        }
        Ok(())
    }
}

/// Identity coefficients for fixed rotation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySolution<T> {
    pub a_id: Vec<T>,
    pub residual: T,
    /// The contracted system was rank deficient; `a_id` is the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Least-squares identity vector: with the three rotation vectors fixed the
/// reconstruction is linear in `a_id`, so this is a plain linear solve.
pub fn solve_identity<T: Scalar>(w: &Tensor<T>, a_y: &[T], a_p: &[T], a_r: &[T], x: &[T]) -> Result<IdentitySolution<T>> {
    let basis = identity_basis(w, a_y, a_p, a_r)?;
    if x.len() != basis.rows() {
        return Err(Error::Shape(format!("feature length {} vs {}", x.len(), basis.rows())));
    }
    let sol = lstsq(&basis, x)?;
    Ok(IdentitySolution { a_id: sol.x, residual: sol.residual_norm, rank_deficient: sol.rank_deficient })
}

/// Contracts the first four modes of `w` with the given vectors except mode
/// `free`, leaving a `D_f x J_free` matrix.
fn contract_except<T: Scalar>(w: &Tensor<T>, vecs: [&[T]; 4], free: usize) -> Matrix<T> {
    let d = w.dims();
    let block: usize = d[..4].iter().product();
    let mut weights = vec![T::zero(); block];
    let mut slot = vec![0usize; block];
    let mut idx = [0usize; 4];
    for (wt, s) in weights.iter_mut().zip(slot.iter_mut()) {
        let mut p = T::one();
        for m in 0..4 {
            if m != free {
                p *= vecs[m][idx[m]];
            }
        }
        *wt = p;
        *s = idx[free];
        for m in 0..4 {
            idx[m] += 1;
            if idx[m] < d[m] {
                break;
            }
            idx[m] = 0;
        }
    }
    let data = w.as_slice();
    let mut out = Matrix::zeros(d[4], d[free]);
    for f in 0..d[4] {
        let src = &data[f * block..(f + 1) * block];
        let row = out.row_mut(f);
        for ((&v, &wt), &s) in src.iter().zip(&weights).zip(&slot) {
            row[s] += wt * v;
        }
    }
    out
}

fn residual_of<T: Scalar>(m: &Matrix<T>, coef: &[T], x: &[T]) -> T {
    let mut acc = T::zero();
    for (i, &xi) in x.iter().enumerate() {
        let r = xi - crate::scalar::dot(m.row(i), coef);
        acc += r * r;
    }
    acc.sqrt()
}

/// Reconstruction-based pose search over the cosine-constrained model.
///
/// Starts from the training-grid cell with the smallest profiled residual, then
/// alternates per-angle searches (coarse grid, golden-section refinement) with
/// the identity fixed and an identity re-solve, until the residual stalls.
pub fn predict_oracle<T: Scalar>(
    fs: &FactorSet<T>,
    params: &SinusoidalParams<T>,
    x: &[T],
    cfg: &OracleConfig,
) -> Result<PoseEstimate<T>> {
    predict_oracle_traced(fs, params, x, cfg).map(|(e, _)| e)
}

/// [`predict_oracle`] plus the residual after initialization and after every outer iteration.
pub fn predict_oracle_traced<T: Scalar>(
    fs: &FactorSet<T>,
    params: &SinusoidalParams<T>,
    x: &[T],
    cfg: &OracleConfig,
) -> Result<(PoseEstimate<T>, Vec<T>)> {
    let start = Instant::now();
    cfg.validate()?;
    let w = &fs.w;
    let d = w.dims();
    if d.len() != 5 {
        return Err(Error::Shape(format!("w must be 5-way, got {d:?}")));
    }
    if x.len() != d[4] {
        return Err(Error::Shape(format!("feature length {} vs {}", x.len(), d[4])));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input features".into()));
    }
    for (k, axis) in Axis::ALL.into_iter().enumerate() {
        if params.axis(axis).dim() != d[k + 1] {
            return Err(Error::Shape(format!(
                "{axis} curves have {} dims, decomposition keeps {}",
                params.axis(axis).dim(),
                d[k + 1]
            )));
        }
    }
    let curve = |axis: Axis, angle: T| params.axis(axis).eval(angle);

    // profiled residual at every training bin combination
    let bins = Axis::ALL.map(|a| params.axis(a).angles.clone());
    let vals: Vec<Vec<Vec<T>>> =
        Axis::ALL.iter().zip(&bins).map(|(&a, b)| b.iter().map(|&w| curve(a, w)).collect()).collect();
    let mut best: Option<(T, [usize; 3], IdentitySolution<T>)> = None;
    for iy in 0..bins[0].len() {
        for ip in 0..bins[1].len() {
            for ir in 0..bins[2].len() {
                let sol = solve_identity(w, &vals[0][iy], &vals[1][ip], &vals[2][ir], x)?;
                if best.as_ref().is_none_or(|(r, _, _)| sol.residual < *r) {
                    best = Some((sol.residual, [iy, ip, ir], sol));
                }
            }
        }
    }
    let (mut residual, cell, mut ident) = best.ok_or_else(|| Error::Empty("fitted angle grid".into()))?;
    let mut pose = EulerPose::new(bins[0][cell[0]], bins[1][cell[1]], bins[2][cell[2]]);
    let mut history = vec![residual];

    let step = T::lit(cfg.coarse_step);
    let tol = T::lit(cfg.refine_tol);
    let mut converged = false;
    for _ in 0..cfg.max_outer {
        let prev = residual;
        for (k, axis) in Axis::ALL.into_iter().enumerate() {
            let coef = Axis::ALL.map(|a| curve(a, pose.get(a)));
            let m = contract_except(w, [&ident.a_id, &coef[0], &coef[1], &coef[2]], k + 1);
            let g = |angle: T| residual_of(&m, &curve(axis, angle), x);
            let fit = params.axis(axis);
            let (lo, hi) = (fit.angle_min(), fit.angle_max());

            let mut best_w = pose.get(axis);
            let mut best_g = g(best_w);
            let mut cand = lo;
            loop {
                let v = g(cand);
                if v < best_g {
                    best_g = v;
                    best_w = cand;
                }
                if cand >= hi {
                    break;
                }
                cand = (cand + step).min(hi);
            }
            let refined = golden_min((best_w - step).max(lo), (best_w + step).min(hi), tol, g);
            if g(refined) < best_g {
                best_w = refined;
            }
            pose.set(axis, best_w);
        }
        let coef = Axis::ALL.map(|a| curve(a, pose.get(a)));
        ident = solve_identity(w, &coef[0], &coef[1], &coef[2], x)?;
        residual = ident.residual;
        history.push(residual);
        let scale = prev.max(T::min_positive_value());
        if (prev - residual).abs() <= T::lit(cfg.rel_tol) * scale {
            converged = true;
            break;
        }
    }

    let (clamped, out_of_range) = clamp_pose(&pose, |a| (params.axis(a).angle_min(), params.axis(a).angle_max()));
    let coef = Axis::ALL.map(|a| curve(a, pose.get(a)));
    let [yaw, pitch, roll] = coef;
    let estimate = PoseEstimate {
        pose: clamped,
        unclamped: pose,
        out_of_range,
        latents: PredictedLatents { yaw, pitch, roll },
        identity: Some(ident.a_id),
        residual: Some(residual),
        converged,
        elapsed: start.elapsed().as_secs_f64(),
    };
    Ok((estimate, history))
}
