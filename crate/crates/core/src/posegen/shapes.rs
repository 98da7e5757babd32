use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::geometry::LandmarkSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed, bilaterally asymmetric, non-coplanar layout of `n` points on the front
/// half of an ellipsoid (golden-angle spiral with a deterministic jitter).
pub fn template_shape<T: Scalar>(n: usize) -> Result<LandmarkSet<T>> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 landmarks, got {n}")));
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let fi = i as f64;
            let t = (fi + 0.5) / n as f64;
            let z = 1.0 - t;
            let r = (1.0 - z * z).sqrt();
            let phi = fi * golden;
            [
                T::lit(0.8 * r * phi.cos() + 0.07 * (2.3 * fi).sin() + 0.05 * z),
                T::lit(r * phi.sin() + 0.05 * (1.7 * fi).cos()),
                T::lit(0.6 * z + 0.03 * (0.9 * fi).sin()),
            ]
        })
        .collect();
    let shape = LandmarkSet::new(points);
    check_non_degenerate(&shape)?;
    Ok(shape)
}

fn check_non_degenerate<T: Scalar>(shape: &LandmarkSet<T>) -> Result<()> {
    let c = shape.mean();
    if !(shape.rms_radius(&c) > T::zero()) {
        return Err(Error::Degenerate("template points coincide".into()));
    }
    Ok(())
}

/// Per-identity random stream: the same `(seed, identity)` always yields the same draws.
pub(crate) fn identity_rng(seed: u64, identity: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(identity as u64 + 1);
    rng
}

/// `n_id` identities: the shared template plus independent Gaussian perturbation of
/// every coordinate with standard deviation `variation`.
pub fn make_identity_shapes<T: Scalar>(
    n_id: usize,
    n_landmarks: usize,
    variation: f64,
    seed: u64,
) -> Result<Vec<LandmarkSet<T>>> {
    if n_id == 0 {
        return Err(Error::InvalidArgument("need at least one identity".into()));
    }
    if !(variation >= 0.0) || !variation.is_finite() {
        return Err(Error::InvalidArgument(format!("variation must be >= 0, got {variation}")));
    }
    let template = template_shape::<T>(n_landmarks)?;
    (0..n_id)
        .map(|id| {
            let mut rng = identity_rng(seed, id);
            let points = template
                .points
                .iter()
                .map(|p| {
                    p.map(|v| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        v + T::lit(variation * g)
                    })
                })
                .collect();
            let shape = LandmarkSet::new(points);
            check_non_degenerate(&shape)?;
            Ok(shape)
        })
        .collect()
}
