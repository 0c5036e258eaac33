use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use velgrad_core::inversion::{reconstruct, ReconstructOptions, Solver};
use velgrad_core::metrics::{coverr, reference};
use velgrad_core::observation::NoiseMode;
use velgrad_core::{rng, Rotation};

use crate::config::{self, usage, CliError, FlowSource};
use crate::output::OutDir;
use crate::samples::{SampleSpec, ROTATION_STREAM};
use crate::Common;

#[derive(Args, Debug)]
pub struct EquivarianceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, short = 'n')]
    n_directions: Option<usize>,
    /// Number of observation sets audited.
    #[arg(long)]
    n_sets: Option<usize>,
    #[arg(long)]
    n_rotations: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// min_norm | tikhonov
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivarianceConfig {
    pub n_directions: usize,
    pub n_sets: usize,
    pub n_rotations: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub sigma: f64,
    pub noise_mode: NoiseMode,
    pub source: FlowSource,
    pub solver: Solver,
    pub trace_row: bool,
}

impl Default for EquivarianceConfig {
    fn default() -> Self {
        Self {
            n_directions: 4,
            n_sets: 10,
            n_rotations: 100,
            pool_size: 100,
            seed: 0,
            sigma: 0.0,
            noise_mode: NoiseMode::KeepRate,
            source: FlowSource::default(),
            solver: Solver::default(),
            trace_row: true,
        }
    }
}

#[derive(Serialize)]
struct ReferencePoints {
    equivariant_net: f64,
    mlp: f64,
}

#[derive(Serialize)]
struct EquivarianceReport {
    coverr: f64,
    max_set_coverr: f64,
    per_set: Vec<f64>,
    n_sets: usize,
    n_rotations: usize,
    solver: Solver,
    /// Published network values, for context only.
    reference: ReferencePoints,
}

pub fn run(args: EquivarianceArgs) -> Result<(), CliError> {
    let mut cfg: EquivarianceConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.common.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.n_directions {
        cfg.n_directions = v;
    }
    if let Some(v) = args.n_sets {
        cfg.n_sets = v;
    }
    if let Some(v) = args.n_rotations {
        cfg.n_rotations = v;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    cfg.solver = config::override_solver(cfg.solver, args.estimator.as_deref(), args.lambda, args.tol)?;
    config::validate_solver(&cfg.solver)?;
    if cfg.n_rotations < 1 {
        return Err(usage("n_rotations must be >= 1"));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(usage(format!("sigma must be finite and >= 0, got {}", cfg.sigma)));
    }
    let spec = SampleSpec {
        source: &cfg.source,
        n_samples: cfg.n_sets,
        n_directions: cfg.n_directions,
        pool_size: cfg.pool_size,
        seed: cfg.seed,
    };
    spec.validate()?;

    let truths = spec.truths()?;
    let obs = spec.noisy(&spec.observations(&truths)?, cfg.sigma, cfg.noise_mode)?;
    let rot_seed = rng::derive_seed(cfg.seed, ROTATION_STREAM);
    let rotations: Vec<_> = (0..cfg.n_rotations)
        .map(|k| Rotation::random(&mut rng::stream(rot_seed, k as u64)))
        .collect();
    let options = ReconstructOptions {
        trace_row: cfg.trace_row,
        solver: cfg.solver,
    };
    let estimator = |o: &velgrad_core::observation::ObservationSet| Ok(reconstruct(o, &options)?.estimate);
    let per_set: velgrad_core::Result<Vec<f64>> = obs
        .par_iter()
        .map(|o| coverr(estimator, std::slice::from_ref(o), &rotations))
        .collect();
    let per_set = per_set?;
    let report = EquivarianceReport {
        coverr: per_set.iter().sum::<f64>() / per_set.len() as f64,
        max_set_coverr: per_set.iter().copied().fold(0.0, f64::max),
        per_set,
        n_sets: cfg.n_sets,
        n_rotations: cfg.n_rotations,
        solver: cfg.solver,
        reference: ReferencePoints {
            equivariant_net: reference::EQUIVARIANT_NET_COVERR,
            mlp: reference::MLP_COVERR,
        },
    };
    let out = OutDir::create(&args.common.out)?;
    out.write_json("report.json", &report)?;
    out.write_manifest("equivariance", &cfg)
}
