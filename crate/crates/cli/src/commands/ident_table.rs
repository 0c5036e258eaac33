use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};
use velgrad_core::identifiability::{bound_table, write_table_csv, BoundRule};

use crate::config::{self, usage, CliError};
use crate::output::OutDir;
use crate::Common;

#[derive(Args, Debug)]
pub struct IdentTableArgs {
    #[command(flatten)]
    common: Common,
    /// fundamental | direct_sum | expected_vgn_reference
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentTableConfig {
    pub rule: BoundRule,
    pub n_max: usize,
}

impl Default for IdentTableConfig {
    fn default() -> Self {
        Self {
            rule: BoundRule::DirectSum,
            n_max: 5,
        }
    }
}

pub fn run(args: IdentTableArgs) -> Result<(), CliError> {
    let mut cfg: IdentTableConfig = config::load(args.common.config.as_deref())?;
    if let Some(rule) = &args.rule {
        cfg.rule = BoundRule::from_str(rule).map_err(|_| {
            let names: Vec<_> = BoundRule::ALL.iter().map(|r| r.name()).collect();
            usage(format!("invalid rule '{rule}', expected one of {}", names.join(", ")))
        })?;
    }
    if let Some(n) = args.n_max {
        cfg.n_max = n;
    }
    if args.common.seed.is_some() {
        return Err(usage("ident-table takes no seed"));
    }
    let table = bound_table(cfg.rule, cfg.n_max).map_err(|e| usage(e.to_string()))?;
    let out = OutDir::create(&args.common.out)?;
    out.write_with("table.csv", |w| Ok(write_table_csv(&table, w)?))?;
    out.write_manifest("ident-table", &cfg)
}
