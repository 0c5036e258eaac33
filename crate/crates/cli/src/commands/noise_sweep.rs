use std::io::Write;

use clap::Args;
use serde::{Deserialize, Serialize};
use velgrad_core::csvfmt;
use velgrad_core::inversion::{ReconstructOptions, Solver};
use velgrad_core::metrics::{decade_edges, fraction_below, histogram, write_histogram_csv, MetricReport};
use velgrad_core::observation::NoiseMode;
use velgrad_core::Tensor3;

use super::{component_reports, part_rse, v1_part, v2_part};
use crate::config::{self, usage, CliError, FlowSource};
use crate::output::OutDir;
use crate::samples::{reconstruct_all, SampleSpec};
use crate::Common;

#[derive(Args, Debug)]
pub struct NoiseSweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, short = 'n')]
    n_directions: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    /// Comma-separated Tikhonov λ values swept at every σ > 0.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// keep_rate | recompute_rate
    #[arg(long)]
    noise_mode: Option<String>,
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
pub struct NoiseSweepConfig {
    pub n_directions: usize,
    pub n_samples: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub sigmas: Vec<f64>,
    pub noise_mode: NoiseMode,
    pub source: FlowSource,
    pub solver: Solver,
    pub trace_row: bool,
    pub lambdas: Vec<f64>,
    /// Histogram decades `10^lo … 10^hi`.
    pub histogram_decades: (i32, i32),
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        Self {
            n_directions: 4,
            n_samples: 1000,
            pool_size: 100,
            seed: 0,
            sigmas: vec![0.0, 1e-4, 1e-3],
            noise_mode: NoiseMode::KeepRate,
            source: FlowSource::default(),
            solver: Solver::default(),
            trace_row: true,
            lambdas: vec![1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3],
            histogram_decades: (-16, 2),
        }
    }
}

#[derive(Serialize)]
struct LambdaBest {
    lambda: f64,
    median_rse: f64,
    baseline_median_rse: f64,
}

#[derive(Serialize)]
struct SigmaReport {
    sigma: f64,
    histogram: String,
    fraction_rse_below_one: f64,
    fraction_v1_rse_below_one: f64,
    fraction_v2_rse_below_one: f64,
    median_rse: f64,
    overall: MetricReport,
    v1: Option<MetricReport>,
    v2: Option<MetricReport>,
    best_lambda: Option<LambdaBest>,
}

fn part_fraction(estimates: &[Tensor3], truths: &[Tensor3], part: fn(&Tensor3) -> Tensor3) -> f64 {
    let v: Vec<f64> = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| part_rse(e, t, part))
        .filter(|x| !x.is_nan())
        .collect();
    fraction_below(&v, 1.0)
}

pub fn run(args: NoiseSweepArgs) -> Result<(), CliError> {
    let mut cfg: NoiseSweepConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.common.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.n_directions {
        cfg.n_directions = v;
    }
    if let Some(v) = args.n_samples {
        cfg.n_samples = v;
    }
    if let Some(v) = args.sigmas {
        cfg.sigmas = v;
    }
    if let Some(v) = args.lambdas {
        cfg.lambdas = v;
    }
    if let Some(m) = args.noise_mode.as_deref() {
        cfg.noise_mode = match m {
            "keep_rate" => NoiseMode::KeepRate,
            "recompute_rate" => NoiseMode::RecomputeRate,
            other => return Err(usage(format!("unknown noise mode '{other}', expected keep_rate or recompute_rate"))),
        };
    }
    cfg.solver = config::override_solver(cfg.solver, args.estimator.as_deref(), args.lambda, args.tol)?;
    config::validate_solver(&cfg.solver)?;
    if cfg.sigmas.is_empty() {
        return Err(usage("sigma list is empty"));
    }
    if cfg.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(usage("sigmas must be finite and >= 0"));
    }
    if cfg.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(usage("lambdas must be finite and > 0"));
    }
    if cfg.histogram_decades.0 > cfg.histogram_decades.1 {
        return Err(usage("histogram_decades must be (lo, hi) with lo <= hi"));
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
    let edges = decade_edges(cfg.histogram_decades.0, cfg.histogram_decades.1);
    let out = OutDir::create(&args.common.out)?;
    let base = ReconstructOptions {
        trace_row: cfg.trace_row,
        solver: cfg.solver,
    };

    let mut reports = Vec::new();
    let mut lambda_rows = Vec::new();
    for (k, &sigma) in cfg.sigmas.iter().enumerate() {
        let obs = spec.noisy(&clean, sigma, cfg.noise_mode)?;
        let estimates: Vec<_> = reconstruct_all(&obs, &base)?.into_iter().map(|r| r.estimate).collect();
        let overall = MetricReport::from_samples(&estimates, &truths)?;
        let (v1, v2) = component_reports(&estimates, &truths);

        let hist_name = format!("rse_hist_{k}.csv");
        let counts = histogram(&overall.rse_values, &edges);
        out.write_with(&hist_name, |w| Ok(write_histogram_csv(&edges, &counts, w)?))?;

        let mut best_lambda = None;
        if sigma > 0.0 && !cfg.lambdas.is_empty() {
            let baseline = overall.median_rse();
            lambda_rows.push((sigma, 0.0, overall.nmse, baseline, overall.fraction_below_one()));
            let mut best: Option<LambdaBest> = None;
            for &lambda in &cfg.lambdas {
                let options = ReconstructOptions {
                    trace_row: cfg.trace_row,
                    solver: Solver::Tikhonov { lambda },
                };
                let est: Vec<_> = reconstruct_all(&obs, &options)?.into_iter().map(|r| r.estimate).collect();
                let rep = MetricReport::from_samples(&est, &truths)?;
                let med = rep.median_rse();
                lambda_rows.push((sigma, lambda, rep.nmse, med, rep.fraction_below_one()));
                if best.as_ref().is_none_or(|b| med < b.median_rse) {
                    best = Some(LambdaBest {
                        lambda,
                        median_rse: med,
                        baseline_median_rse: baseline,
                    });
                }
            }
            best_lambda = best;
        }

        reports.push(SigmaReport {
            sigma,
            histogram: hist_name,
            fraction_rse_below_one: overall.fraction_below_one(),
            fraction_v1_rse_below_one: part_fraction(&estimates, &truths, v1_part),
            fraction_v2_rse_below_one: part_fraction(&estimates, &truths, v2_part),
            median_rse: overall.median_rse(),
            overall,
            v1,
            v2,
            best_lambda,
        });
    }

    out.write_with("summary.csv", |w| {
        writeln!(w, "sigma,nmse,mrse,median_rse,fraction_rse_below_one,fraction_v1_rse_below_one,fraction_v2_rse_below_one")?;
        for r in &reports {
            let fields = [
                r.sigma,
                r.overall.nmse,
                r.overall.mrse,
                r.median_rse,
                r.fraction_rse_below_one,
                r.fraction_v1_rse_below_one,
                r.fraction_v2_rse_below_one,
            ];
            w.write_all(csvfmt::line(fields.map(csvfmt::real)).as_bytes())?;
        }
        Ok(())
    })?;
    if !lambda_rows.is_empty() {
        out.write_with("lambda_sweep.csv", |w| {
            // lambda = 0 rows are the configured estimator.
            writeln!(w, "sigma,lambda,nmse,median_rse,fraction_rse_below_one")?;
            for (s, l, n, m, f) in &lambda_rows {
                w.write_all(csvfmt::line([*s, *l, *n, *m, *f].map(csvfmt::real)).as_bytes())?;
            }
            Ok(())
        })?;
    }
    out.write_json("reports.json", &reports)?;
    out.write_manifest("noise-sweep", &cfg)
}
