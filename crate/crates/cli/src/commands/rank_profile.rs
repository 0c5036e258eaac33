use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use velgrad_core::csvfmt;
use velgrad_core::identifiability::{empirical_profile, kernel_report, max_kernel_overlap};
use velgrad_core::observation::{coplanarity_defect, fibonacci_pool, read_directions, sample_sphere_uniform};
use velgrad_core::{IrrepDecomp, Vec3};

use crate::config::{self, usage, CliError};
use crate::output::OutDir;
use crate::Common;

/// Direction sets with `coplanarity_defect` at or below this are flagged degenerate.
pub const COPLANAR_TOL: f64 = 1e-10;

const DEFAULT_FIBONACCI_POOL: usize = 100;

#[derive(Args, Debug)]
pub struct RankProfileArgs {
    #[command(flatten)]
    common: Common,
    /// fibonacci | random | file
    #[arg(long)]
    directions: Option<String>,
    /// CSV of directions (sx,sy,sz); implies `--directions file`.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionSource {
    /// First `N` points of a Fibonacci lattice of `pool_size` (default 100).
    Fibonacci { pool_size: Option<usize> },
    /// `n_max` uniform random directions.
    Random,
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankProfileConfig {
    pub directions: DirectionSource,
    pub seed: u64,
    pub n_min: usize,
    /// Defaults to 5, or to the file length for file input.
    pub n_max: Option<usize>,
    pub tol: Option<f64>,
}

impl Default for RankProfileConfig {
    fn default() -> Self {
        Self {
            directions: DirectionSource::Random,
            seed: 0,
            n_min: 1,
            n_max: None,
            tol: None,
        }
    }
}

#[derive(Serialize)]
struct KernelEntry {
    n: usize,
    kernel_dim: usize,
    /// Largest projection of a unit kernel vector onto V₀, V₁, V₂.
    max_overlap: [f64; 3],
    kernel: Vec<IrrepDecomp>,
}

fn load_directions(cfg: &RankProfileConfig) -> Result<Vec<Vec3>, CliError> {
    match &cfg.directions {
        DirectionSource::Fibonacci { pool_size } => {
            let n_max = cfg.n_max.unwrap_or(5);
            let m = pool_size.unwrap_or(DEFAULT_FIBONACCI_POOL.max(n_max));
            if m < n_max {
                return Err(usage(format!("fibonacci pool_size {m} is smaller than n_max {n_max}")));
            }
            Ok(fibonacci_pool(m).map_err(|e| usage(e.to_string()))?.directions[..n_max].to_vec())
        }
        DirectionSource::Random => Ok(sample_sphere_uniform(cfg.n_max.unwrap_or(5), cfg.seed)?),
        DirectionSource::File { path } => {
            let file = File::open(path)
                .map_err(|e| CliError::Runtime(format!("cannot read direction file {}: {e}", path.display())))?;
            let dirs = read_directions(file)
                .map_err(|e| CliError::Runtime(format!("bad direction file {}: {e}", path.display())))?;
            let n_max = cfg.n_max.unwrap_or(dirs.len());
            if n_max > dirs.len() {
                return Err(CliError::Runtime(format!(
                    "n_max={n_max} but {} holds {} directions",
                    path.display(),
                    dirs.len()
                )));
            }
            Ok(dirs[..n_max].to_vec())
        }
    }
}

pub fn run(args: RankProfileArgs) -> Result<(), CliError> {
    let mut cfg: RankProfileConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.common.seed {
        cfg.seed = v;
    }
    match (args.directions.as_deref(), args.file) {
        (None | Some("file"), Some(path)) => cfg.directions = DirectionSource::File { path },
        (Some("file"), None) => return Err(usage("--directions file needs --file <csv>")),
        (Some(_), Some(_)) => return Err(usage("--file only applies to --directions file")),
        (Some("fibonacci"), None) => cfg.directions = DirectionSource::Fibonacci { pool_size: None },
        (Some("random"), None) => cfg.directions = DirectionSource::Random,
        (Some(other), None) => {
            return Err(usage(format!("unknown direction source '{other}', expected fibonacci, random or file")))
        }
        (None, None) => {}
    }
    if let Some(v) = args.n_min {
        cfg.n_min = v;
    }
    if let Some(v) = args.n_max {
        cfg.n_max = Some(v);
    }
    if let Some(v) = args.tol {
        cfg.tol = Some(v);
    }
    if cfg.n_min < 1 {
        return Err(usage("n_min must be >= 1"));
    }
    if cfg.n_max.is_some_and(|n| n < cfg.n_min) {
        return Err(usage("n_max must be >= n_min"));
    }
    if cfg.tol.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(usage("tol must be > 0"));
    }

    let dirs = load_directions(&cfg)?;
    if dirs.len() < cfg.n_min {
        return Err(CliError::Runtime(format!("only {} directions available, n_min={}", dirs.len(), cfg.n_min)));
    }
    let out = OutDir::create(&args.common.out)?;
    out.write_with("directions.csv", |w| {
        w.write_all(b"sx,sy,sz\n")?;
        for s in &dirs {
            w.write_all(csvfmt::line(s.to_array().map(csvfmt::real)).as_bytes())?;
        }
        Ok(())
    })?;

    let mut rows = Vec::new();
    let mut kernels = Vec::new();
    for n in cfg.n_min..=dirs.len() {
        let prefix = &dirs[..n];
        let prof = empirical_profile(prefix, cfg.tol)?;
        let kernel = kernel_report(prefix, Some(prof.tol))?;
        let defect = coplanarity_defect(prefix);
        // Four or more directions should pin everything but the trace; three
        // directions on one great circle are enough to break that.
        let degenerate = n >= 4 && (defect <= COPLANAR_TOL || prof.rank < 8);
        let p = prof.profile;
        rows.push(csvfmt::line([
            n.to_string(),
            p.dof_v0.to_string(),
            p.dof_v1.to_string(),
            p.dof_v2.to_string(),
            p.total.to_string(),
            prof.rank.to_string(),
            prof.kernel_dim.to_string(),
            csvfmt::real(defect),
            degenerate.to_string(),
        ]));
        kernels.push(KernelEntry {
            n,
            kernel_dim: kernel.len(),
            max_overlap: [0, 1, 2].map(|k| max_kernel_overlap(&kernel, k)),
            kernel,
        });
    }
    out.write_with("profile.csv", |w| {
        w.write_all(b"N,V0,V1,V2,Total,rank,kernel_dim,coplanarity_defect,degenerate\n")?;
        for r in &rows {
            w.write_all(r.as_bytes())?;
        }
        Ok(())
    })?;
    out.write_json("kernels.json", &kernels)?;
    out.write_manifest("rank-profile", &cfg)
}
