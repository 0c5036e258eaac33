//! Seeded truth tensors and direction subsets shared by the sampling commands.
//!
//! Every random quantity is drawn from its own child stream of the run seed,
//! keyed by sample index, so outputs do not depend on thread scheduling.

use rayon::prelude::*;
use velgrad_core::flowfields::{plane_grid, random_ensemble, EnsembleSpec};
use velgrad_core::inversion::{reconstruct, ReconstructOptions, Reconstruction};
use velgrad_core::observation::{add_noise, fibonacci_pool, observe, NoiseMode, ObservationSet};
use velgrad_core::{rng, Tensor3};

use crate::config::{usage, CliError, FlowSource};

const TRUTH_STREAM: u64 = 0;
const DIRECTION_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
pub const ROTATION_STREAM: u64 = 3;

pub struct SampleSpec<'a> {
    pub source: &'a FlowSource,
    pub n_samples: usize,
    pub n_directions: usize,
    pub pool_size: usize,
    pub seed: u64,
}

impl SampleSpec<'_> {
    pub fn validate(&self) -> Result<(), CliError> {
        self.source.validate()?;
        if self.n_samples < 1 {
            return Err(usage("n_samples must be >= 1"));
        }
        if self.n_directions < 1 {
            return Err(usage("n_directions must be >= 1"));
        }
        if self.pool_size < 4 || self.pool_size < self.n_directions {
            return Err(usage(format!(
                "pool_size must be >= max(4, n_directions), got {} for n_directions={}",
                self.pool_size, self.n_directions
            )));
        }
        Ok(())
    }

    pub fn truths(&self) -> Result<Vec<Tensor3>, CliError> {
        match self.source {
            FlowSource::Ensemble { amp_v0, amp_v1, amp_v2 } => Ok(random_ensemble(&EnsembleSpec {
                amp_v0: *amp_v0,
                amp_v1: *amp_v1,
                amp_v2: *amp_v2,
                count: self.n_samples,
                seed: rng::derive_seed(self.seed, TRUTH_STREAM),
            })?),
            FlowSource::Scf { params, z0, nx, ny } => {
                let grid = plane_grid(params, *z0, *nx, *ny)?;
                if self.n_samples > grid.len() {
                    return Err(usage(format!(
                        "n_samples={} exceeds the {} gap points of the {nx}x{ny} grid",
                        self.n_samples,
                        grid.len()
                    )));
                }
                Ok((0..self.n_samples)
                    .map(|i| grid[i * grid.len() / self.n_samples].gradient)
                    .collect())
            }
        }
    }

    /// Noiseless observations of each truth along a random subset of the pool.
    pub fn observations(&self, truths: &[Tensor3]) -> Result<Vec<ObservationSet>, CliError> {
        let pool = fibonacci_pool(self.pool_size)?;
        let dir_seed = rng::derive_seed(self.seed, DIRECTION_STREAM);
        let out: velgrad_core::Result<Vec<_>> = truths
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                let dirs = pool.choose(self.n_directions, &mut rng::stream(dir_seed, i as u64))?;
                let mut obs = observe(a, &dirs)?;
                obs.scheme = Some(pool.scheme);
                Ok(obs)
            })
            .collect();
        Ok(out?)
    }

    /// Per-sample noise seed; the same for every σ so a sweep perturbs along fixed directions.
    pub fn noise_seed(&self, i: usize) -> u64 {
        rng::derive_seed(rng::derive_seed(self.seed, NOISE_STREAM), i as u64)
    }

    pub fn noisy(&self, clean: &[ObservationSet], sigma: f64, mode: NoiseMode) -> Result<Vec<ObservationSet>, CliError> {
        let out: velgrad_core::Result<Vec<_>> = clean
            .par_iter()
            .enumerate()
            .map(|(i, obs)| add_noise(obs, sigma, self.noise_seed(i), mode))
            .collect();
        Ok(out?)
    }
}

pub fn reconstruct_all(obs: &[ObservationSet], options: &ReconstructOptions) -> Result<Vec<Reconstruction>, CliError> {
    let out: velgrad_core::Result<Vec<_>> = obs.par_iter().map(|o| reconstruct(o, options)).collect();
    Ok(out?)
}
