//! Reproducible Brownian increments and Rademacher signs.
//!
//! Every path is generated from a counter-based ChaCha8 stream addressed by
//! `(master_seed, family, purpose)` as the 256-bit key and `path_index` as the
//! stream number, so a path never depends on how work was split across threads.
//!
//! Increments are rounded to the dyadic lattice `2^-40`. Sums of lattice points
//! are exact in `f64` while partial sums stay below `2^13` in magnitude, which
//! makes coarsening associative: aggregating in one pass or through any chain of
//! divisors yields bit-identical coarse increments.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Name of the generator behind every stream; part of the output metadata.
pub const RNG_ALGORITHM: &str = "chacha8-keyed-streams/lattice-2^-40";

const LATTICE_SCALE: f64 = (1u64 << 40) as f64;

const PURPOSE_INCREMENTS: u64 = 0;
const PURPOSE_SIGNS: u64 = 1;
const PURPOSE_AUX: u64 = 2;

/// Stream families keep independent uses of one master seed apart.
pub mod family {
    /// Paths driving schemes and references.
    pub const PATHS: u64 = 0;
    /// Driving paths of the limit-SDE simulator.
    pub const LIMIT_PATHS: u64 = 1;
    /// Source-term paths.
    pub const SOURCE_TERM: u64 = 2;
    /// Self-check sampling of flow times and points.
    pub const FLOW_CHECK: u64 = 3;
    /// MLMC level `l` uses `MLMC_LEVEL_BASE + l`.
    pub const MLMC_LEVEL_BASE: u64 = 1 << 32;
}

/// Key of a family of per-path streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub family: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, family: u64) -> Self {
        StreamKey {
            master_seed,
            family,
        }
    }

    /// Generator for one `(path, purpose)` pair.
    pub fn rng(&self, path_index: u64, purpose: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.family.to_le_bytes());
        seed[16..24].copy_from_slice(&purpose.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(path_index);
        rng
    }

    /// Auxiliary stream of a path, independent of its increments and signs.
    pub fn aux_rng(&self, path_index: u64) -> ChaCha8Rng {
        self.rng(path_index, PURPOSE_AUX)
    }

    pub fn bundle(&self, path_index: u64, n_fine: usize, d: usize, horizon: f64) -> PathBundle {
        assert!(n_fine >= 1, "a bundle needs at least one step");
        assert!(d >= 1, "a bundle needs at least one Brownian coordinate");
        let h = horizon / n_fine as f64;
        let sd = h.sqrt();

        let mut rng = self.rng(path_index, PURPOSE_INCREMENTS);
        let dw = (0..n_fine * d)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                to_lattice(z * sd)
            })
            .collect();

        let mut signs = self.rng(path_index, PURPOSE_SIGNS);
        let mut eta = Vec::with_capacity(n_fine);
        while eta.len() < n_fine {
            let bits = signs.next_u64();
            let take = (n_fine - eta.len()).min(64);
            eta.extend((0..take).map(|b| if (bits >> b) & 1 == 1 { 1i8 } else { -1i8 }));
        }

        PathBundle {
            n_steps: n_fine,
            d,
            horizon,
            dw,
            eta,
        }
    }
}

/// Rounds to the increment lattice.
#[inline]
pub fn to_lattice(v: f64) -> f64 {
    (v * LATTICE_SCALE).round() / LATTICE_SCALE
}

/// Brownian increments and Rademacher signs on a uniform grid of `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    n_steps: usize,
    d: usize,
    horizon: f64,
    /// Row-major `[step][coordinate]`.
    dw: Vec<f64>,
    eta: Vec<i8>,
}

/// Fine bundle of path `path_index` under `master_seed`.
pub fn make_bundle(
    master_seed: u64,
    path_index: u64,
    n_fine: usize,
    d: usize,
    horizon: f64,
) -> PathBundle {
    StreamKey::new(master_seed, family::PATHS).bundle(path_index, n_fine, d, horizon)
}

impl PathBundle {
    /// Builds a bundle from explicit data; `dw` is row-major `[step][coordinate]`.
    pub fn from_parts(horizon: f64, d: usize, dw: Vec<f64>, eta: Vec<i8>) -> Result<Self> {
        if d == 0 || eta.is_empty() || dw.len() != eta.len() * d {
            return Err(Error::invalid(format!(
                "inconsistent bundle: d={d}, {} increments, {} signs",
                dw.len(),
                eta.len()
            )));
        }
        if eta.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::invalid("signs must be +1 or -1"));
        }
        Ok(PathBundle {
            n_steps: eta.len(),
            d,
            horizon,
            dw,
            eta,
        })
    }

    /// Number of steps of this bundle's grid.
    pub fn n_fine(&self) -> usize {
        self.n_steps
    }

    pub fn noise_dim(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Increments of all coordinates over step `k`.
    #[inline]
    pub fn dw(&self, k: usize) -> &[f64] {
        &self.dw[k * self.d..(k + 1) * self.d]
    }

    #[inline]
    pub fn eta(&self, k: usize) -> i8 {
        self.eta[k]
    }

    pub fn etas(&self) -> &[i8] {
        &self.eta
    }

    /// Column of increments of coordinate `j` (0-based).
    pub fn coordinate(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.dw.chunks_exact(self.d).map(move |row| row[j])
    }

    /// `W_T`, per coordinate.
    pub fn terminal(&self) -> Vec<f64> {
        (0..self.d).map(|j| self.coordinate(j).sum()).collect()
    }

    /// Aggregates onto `n_coarse` steps. A coarse increment is the sum of the
    /// fine increments in its block; its sign is the sign of the block's first
    /// fine step.
    pub fn coarsen(&self, n_coarse: usize) -> Result<PathBundle> {
        if n_coarse == 0 || self.n_steps % n_coarse != 0 {
            return Err(Error::invalid(format!(
                "{n_coarse} does not divide {} fine steps",
                self.n_steps
            )));
        }
        let ratio = self.n_steps / n_coarse;
        if ratio == 1 {
            return Ok(self.clone());
        }
        let d = self.d;
        let mut dw = vec![0.0; n_coarse * d];
        for (k, block) in self.dw.chunks_exact(ratio * d).enumerate() {
            let out = &mut dw[k * d..(k + 1) * d];
            for row in block.chunks_exact(d) {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += v;
                }
            }
        }
        let eta = self.eta.iter().step_by(ratio).copied().collect();
        Ok(PathBundle {
            n_steps: n_coarse,
            d,
            horizon: self.horizon,
            dw,
            eta,
        })
    }
}

/// Uniform grid `t_k = k T / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_steps: usize,
    pub horizon: f64,
}

impl GridSpec {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(GridSpec { n_steps, horizon })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    /// Fine steps per grid step, if the grid divides the bundle and both
    /// cover the same horizon.
    pub fn stride_in(&self, bundle: &PathBundle) -> Result<usize> {
        if self.horizon != bundle.horizon() {
            return Err(Error::invalid(format!(
                "grid horizon {} differs from bundle horizon {}",
                self.horizon,
                bundle.horizon()
            )));
        }
        if bundle.n_fine() % self.n_steps != 0 {
            return Err(Error::invalid(format!(
                "grid of {} steps does not divide bundle of {}",
                self.n_steps,
                bundle.n_fine()
            )));
        }
        Ok(bundle.n_fine() / self.n_steps)
    }
}
