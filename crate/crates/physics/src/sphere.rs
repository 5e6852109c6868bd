use rand::Rng;
use rand_distr::StandardNormal;

use crate::Vec3;

/// Draws a direction uniformly distributed on the unit sphere.
///
/// An isotropic Gaussian vector has a rotation-invariant density, so its
/// normalization is uniform on S². A zero draw has probability zero but is
/// rejected anyway.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-300 {
            return v * (1.0 / n);
        }
    }
}
