use rand::Rng;

use crate::{sample_unit_sphere, Vec3};

/// Ordered coordinates of one chain, `segments() + 1` sites starting at the
/// origin. Off-lattice chains use bond-length units; lattice chains store
/// integer-valued coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformation {
    pub positions: Vec<Vec3>,
}

impl Conformation {
    pub fn segments(&self) -> usize {
        self.positions.len().saturating_sub(1)
    }

    pub fn end_to_end(&self) -> Vec3 {
        match (self.positions.first(), self.positions.last()) {
            (Some(&a), Some(&b)) => b - a,
            _ => Vec3::ZERO,
        }
    }

    pub fn end_to_end_sq(&self) -> f64 {
        self.end_to_end().norm_sq()
    }

    pub fn bond_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.windows(2).map(|w| (w[1] - w[0]).norm())
    }

    /// True iff no lattice site is visited twice. Coordinates are rounded to
    /// the nearest integer site first.
    pub fn is_self_avoiding(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.positions.len());
        self.positions.iter().all(|p| {
            seen.insert((
                p.x.round() as i64,
                p.y.round() as i64,
                p.z.round() as i64,
            ))
        })
    }
}

/// Freely jointed chain: `n` bonds of length `b` with independent isotropic
/// directions.
pub fn random_walk_chain<R: Rng + ?Sized>(n: usize, b: f64, rng: &mut R) -> Conformation {
    let mut positions = Vec::with_capacity(n + 1);
    let mut cur = Vec3::ZERO;
    positions.push(cur);
    for _ in 0..n {
        cur += sample_unit_sphere(rng) * b;
        positions.push(cur);
    }
    Conformation { positions }
}

/// Sample mean of R² at one chain length, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub n_segments: usize,
    pub mean_r2: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// Mean and standard error of independent observations.
    pub fn from_independent(n_segments: usize, values: &[f64]) -> Self {
        let k = values.len();
        let mean = values.iter().sum::<f64>() / k as f64;
        let var = if k > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64
        } else {
            0.0
        };
        Self {
            n_segments,
            mean_r2: mean,
            stderr: (var / k as f64).sqrt(),
            samples: k,
        }
    }

    /// Mean with a batch-means standard error, for correlated Markov-chain
    /// output.
    pub fn from_correlated(n_segments: usize, values: &[f64], batches: usize) -> Self {
        let k = values.len();
        let batches = batches.clamp(2, k.max(2));
        let size = k / batches;
        if size == 0 {
            return Self::from_independent(n_segments, values);
        }
        let means: Vec<f64> = values
            .chunks_exact(size)
            .take(batches)
            .map(|c| c.iter().sum::<f64>() / size as f64)
            .collect();
        let batch = Self::from_independent(n_segments, &means);
        Self {
            n_segments,
            mean_r2: values.iter().sum::<f64>() / k as f64,
            stderr: batch.stderr,
            samples: k,
        }
    }
}

/// ⟨R²⟩ over `chains` independent random-walk chains of `n` bonds.
pub fn random_walk_mean_r2<R: Rng + ?Sized>(
    n: usize,
    b: f64,
    chains: usize,
    rng: &mut R,
) -> MeanEstimate {
    let values: Vec<f64> = (0..chains)
        .map(|_| random_walk_chain(n, b, rng).end_to_end_sq())
        .collect();
    MeanEstimate::from_independent(n, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_step_has_r2_b_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let c = random_walk_chain(1, 2.5, &mut rng);
            assert!((c.end_to_end_sq() - 6.25).abs() < 1e-12);
        }
    }

    #[test]
    fn bonds_have_length_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = random_walk_chain(50, 1.5, &mut rng);
        assert_eq!(c.positions.len(), 51);
        assert_eq!(c.positions[0], Vec3::ZERO);
        for l in c.bond_lengths() {
            assert!((l - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = random_walk_chain(20, 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_walk_chain(20, 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn mean_r2_is_n_b_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [10, 100, 1000] {
            let est = random_walk_mean_r2(n, 1.0, 2000, &mut rng);
            assert!(
                (est.mean_r2 - n as f64).abs() <= 3.0 * est.stderr,
                "N={n}: {} ± {}",
                est.mean_r2,
                est.stderr
            );
        }
    }

    #[test]
    fn batch_means_falls_back_for_tiny_input() {
        let e = MeanEstimate::from_correlated(3, &[1.0, 2.0, 3.0], 10);
        assert!((e.mean_r2 - 2.0).abs() < 1e-12);
    }
}
