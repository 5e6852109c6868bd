//! Self-avoiding walks on the simple cubic lattice.
//!
//! Sampling uses the pivot algorithm: pick a pivot site uniformly, apply one
//! of the 47 non-identity cubic lattice symmetries to the part of the walk
//! beyond it, and accept iff the result is still self-avoiding. The proposal
//! is symmetric, so the chain is stationary on the uniform distribution over
//! all walks of the given length. Small lengths are checked against an exact
//! depth-first enumeration.

use std::collections::HashMap;

use num_rational::Ratio;
use rand::Rng;

use crate::{Conformation, MeanEstimate, PhysicsError, Vec3};

type Site = [i32; 3];

const STEPS: [Site; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

/// Largest N accepted by [`enumerate_saw_exact`]; c_6 = 16926 walks.
pub const MAX_ENUMERATION_N: usize = 6;

/// Signed permutation of the coordinate axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSymmetry {
    perm: [usize; 3],
    signs: [i32; 3],
}

impl LatticeSymmetry {
    fn apply(&self, v: Site) -> Site {
        [
            self.signs[0] * v[self.perm[0]],
            self.signs[1] * v[self.perm[1]],
            self.signs[2] * v[self.perm[2]],
        ]
    }

    fn is_identity(&self) -> bool {
        self.perm == [0, 1, 2] && self.signs == [1, 1, 1]
    }

    /// All 48 elements of the cubic point group.
    pub fn all() -> Vec<LatticeSymmetry> {
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut out = Vec::with_capacity(48);
        for perm in PERMS {
            for mask in 0..8 {
                let s = |bit: i32| if mask & (1 << bit) != 0 { -1 } else { 1 };
                out.push(LatticeSymmetry {
                    perm,
                    signs: [s(0), s(1), s(2)],
                });
            }
        }
        out
    }

    pub fn non_identity() -> Vec<LatticeSymmetry> {
        Self::all().into_iter().filter(|g| !g.is_identity()).collect()
    }
}

fn add(a: Site, b: Site) -> Site {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Site, b: Site) -> Site {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn r2(s: Site) -> i64 {
    s.iter().map(|&c| (c as i64) * (c as i64)).sum()
}

/// Markov-chain state for the pivot algorithm.
#[derive(Debug, Clone)]
pub struct PivotChain {
    sites: Vec<Site>,
    occupied: HashMap<Site, usize>,
    symmetries: Vec<LatticeSymmetry>,
    scratch: Vec<Site>,
    attempts: u64,
    accepted: u64,
}

impl PivotChain {
    /// Straight rod of `n` bonds along +x.
    pub fn rod(n: usize) -> Self {
        let sites: Vec<Site> = (0..=n as i32).map(|i| [i, 0, 0]).collect();
        let occupied = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Self {
            sites,
            occupied,
            symmetries: LatticeSymmetry::non_identity(),
            scratch: Vec::with_capacity(n),
            attempts: 0,
            accepted: 0,
        }
    }

    pub fn segments(&self) -> usize {
        self.sites.len() - 1
    }

    /// One pivot attempt; returns whether it was accepted.
    pub fn attempt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        self.attempts += 1;
        let n = self.segments();
        if n == 0 {
            return false;
        }
        let k = rng.random_range(0..n);
        let g = self.symmetries[rng.random_range(0..self.symmetries.len())];
        let pivot = self.sites[k];

        self.scratch.clear();
        for i in (k + 1)..=n {
            let q = add(pivot, g.apply(sub(self.sites[i], pivot)));
            if let Some(&j) = self.occupied.get(&q) {
                if j <= k {
                    return false;
                }
            }
            self.scratch.push(q);
        }

        for i in (k + 1)..=n {
            self.occupied.remove(&self.sites[i]);
        }
        for (offset, &q) in self.scratch.iter().enumerate() {
            let i = k + 1 + offset;
            self.sites[i] = q;
            self.occupied.insert(q, i);
        }
        self.accepted += 1;
        true
    }

    pub fn end_to_end_sq(&self) -> f64 {
        r2(sub(self.sites[self.segments()], self.sites[0])) as f64
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    pub fn conformation(&self) -> Conformation {
        Conformation {
            positions: self
                .sites
                .iter()
                .map(|s| Vec3::new(s[0] as f64, s[1] as f64, s[2] as f64))
                .collect(),
        }
    }
}

/// Runs `n_pivot_steps` pivot attempts from a straight rod and returns the
/// final walk.
pub fn saw_chain_pivot<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    n_pivot_steps: usize,
) -> Conformation {
    let mut chain = PivotChain::rod(n);
    for _ in 0..n_pivot_steps {
        chain.attempt(rng);
    }
    chain.conformation()
}

/// Sampling schedule for [`pivot_mean_r2`].
#[derive(Debug, Clone, Copy)]
pub struct PivotSchedule {
    pub burn_in: usize,
    pub samples: usize,
    /// Pivot attempts between recorded samples.
    pub thinning: usize,
    pub batches: usize,
}

impl PivotSchedule {
    /// Burn-in and thinning scaled with chain length; the pivot algorithm
    /// decorrelates global observables in O(1) accepted moves.
    pub fn for_length(n: usize, samples: usize) -> Self {
        Self {
            burn_in: 20 * n.max(10),
            samples,
            thinning: 10,
            batches: 50,
        }
    }
}

/// ⟨R²⟩ of uniformly weighted SAWs of `n` bonds, estimated from one pivot
/// chain with a batch-means standard error.
pub fn pivot_mean_r2<R: Rng + ?Sized>(
    n: usize,
    schedule: PivotSchedule,
    rng: &mut R,
) -> MeanEstimate {
    let mut chain = PivotChain::rod(n);
    for _ in 0..schedule.burn_in {
        chain.attempt(rng);
    }
    let mut values = Vec::with_capacity(schedule.samples);
    for _ in 0..schedule.samples {
        for _ in 0..schedule.thinning.max(1) {
            chain.attempt(rng);
        }
        values.push(chain.end_to_end_sq());
    }
    MeanEstimate::from_correlated(n, &values, schedule.batches)
}

/// Exact ⟨R²⟩ over every simple-cubic SAW of `n` bonds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactSawMean {
    pub walks: u64,
    pub sum_r2: u64,
}

impl ExactSawMean {
    pub fn mean(&self) -> Ratio<u64> {
        Ratio::new(self.sum_r2, self.walks)
    }

    pub fn mean_f64(&self) -> f64 {
        self.sum_r2 as f64 / self.walks as f64
    }
}

/// Depth-first enumeration of all SAWs of length `n` on the cubic lattice.
pub fn enumerate_saw_exact(n: usize) -> Result<ExactSawMean, PhysicsError> {
    if n > MAX_ENUMERATION_N {
        return Err(PhysicsError::NTooLarge {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    fn dfs(path: &mut Vec<Site>, remaining: usize, acc: &mut ExactSawMean) {
        let head = *path.last().expect("path starts non-empty");
        if remaining == 0 {
            acc.walks += 1;
            acc.sum_r2 += r2(head) as u64;
            return;
        }
        for step in STEPS {
            let next = add(head, step);
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            dfs(path, remaining - 1, acc);
            path.pop();
        }
    }
    let mut acc = ExactSawMean { walks: 0, sum_r2: 0 };
    let mut path = vec![[0, 0, 0]];
    dfs(&mut path, n, &mut acc);
    Ok(acc)
}
