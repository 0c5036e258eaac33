use std::io::Write;

use clap::Args;
use serde::{Deserialize, Serialize};
use velgrad_core::csvfmt;
use velgrad_core::inversion::{ReconstructOptions, Solver};
use velgrad_core::metrics::MetricReport;
use velgrad_core::observation::NoiseMode;

use super::{component_reports, part_rse, tensor_fields, tensor_header, v1_part, v2_part};
use crate::config::{self, usage, CliError, FlowSource};
use crate::output::OutDir;
use crate::samples::{reconstruct_all, SampleSpec};
use crate::Common;

#[derive(Args, Debug)]
pub struct RoundtripArgs {
    #[command(flatten)]
    common: Common,
    /// Directions observed per sample (N).
    #[arg(long, short = 'n')]
    n_directions: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
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
pub struct RoundtripConfig {
    pub n_directions: usize,
    pub n_samples: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub sigma: f64,
    pub noise_mode: NoiseMode,
    pub source: FlowSource,
    pub solver: Solver,
    pub trace_row: bool,
}

impl Default for RoundtripConfig {
    fn default() -> Self {
        Self {
            n_directions: 4,
            n_samples: 100,
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
struct Summary {
    min: usize,
    max: usize,
    mean: f64,
}

impl Summary {
    fn of(v: impl Iterator<Item = usize> + Clone) -> Self {
        let n = v.clone().count().max(1);
        Self {
            min: v.clone().min().unwrap_or(0),
            max: v.clone().max().unwrap_or(0),
            mean: v.sum::<usize>() as f64 / n as f64,
        }
    }
}

#[derive(Serialize)]
struct RoundtripReport {
    n_directions: usize,
    n_samples: usize,
    sigma: f64,
    fraction_rse_below_one: f64,
    median_rse: f64,
    overall: MetricReport,
    v1: Option<MetricReport>,
    v2: Option<MetricReport>,
    rank: Summary,
    kernel_dim: Summary,
}

pub fn run(args: RoundtripArgs) -> Result<(), CliError> {
    let mut cfg: RoundtripConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.common.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.n_directions {
        cfg.n_directions = v;
    }
    if let Some(v) = args.n_samples {
        cfg.n_samples = v;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    cfg.solver = config::override_solver(cfg.solver, args.estimator.as_deref(), args.lambda, args.tol)?;
    config::validate_solver(&cfg.solver)?;
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(usage(format!("sigma must be finite and >= 0, got {}", cfg.sigma)));
    }
    let spec = SampleSpec {
        source: &cfg.source,
        n_samples: cfg.n_samples,
        n_directions: cfg.n_directions,
        pool_size: cfg.pool_size,
        seed: cfg.seed,
    };
    spec.validate()?;

    let truths = spec.truths()?;
    let clean = spec.observations(&truths)?;
    let obs = spec.noisy(&clean, cfg.sigma, cfg.noise_mode)?;
    let options = ReconstructOptions {
        trace_row: cfg.trace_row,
        solver: cfg.solver,
    };
    let recs = reconstruct_all(&obs, &options)?;
    let estimates: Vec<_> = recs.iter().map(|r| r.estimate).collect();

    let overall = MetricReport::from_samples(&estimates, &truths)?;
    let (v1, v2) = component_reports(&estimates, &truths);
    let report = RoundtripReport {
        n_directions: cfg.n_directions,
        n_samples: cfg.n_samples,
        sigma: cfg.sigma,
        fraction_rse_below_one: overall.fraction_below_one(),
        median_rse: overall.median_rse(),
        rank: Summary::of(recs.iter().map(|r| r.rank)),
        kernel_dim: Summary::of(recs.iter().map(|r| r.kernel_dim)),
        overall,
        v1,
        v2,
    };

    let out = OutDir::create(&args.common.out)?;
    out.write_json("report.json", &report)?;
    out.write_with("samples.csv", |w| {
        writeln!(
            w,
            "index,rse,rse_v1,rse_v2,rank,kernel_dim,residual_norm,{},{}",
            tensor_header("t"),
            tensor_header("e")
        )?;
        for (i, (rec, truth)) in recs.iter().zip(&truths).enumerate() {
            let fields = [
                i.to_string(),
                csvfmt::real(report.overall.rse_values[i]),
                csvfmt::real(part_rse(&rec.estimate, truth, v1_part)),
                csvfmt::real(part_rse(&rec.estimate, truth, v2_part)),
                rec.rank.to_string(),
                rec.kernel_dim.to_string(),
                csvfmt::real(rec.residual_norm),
            ]
            .into_iter()
            .chain(tensor_fields(truth))
            .chain(tensor_fields(&rec.estimate));
            w.write_all(csvfmt::line(fields).as_bytes())?;
        }
        Ok(())
    })?;
    out.write_manifest("roundtrip", &cfg)
}
