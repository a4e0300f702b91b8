//! `selftest`: randomized invariant checks against the brute-force oracles.

use probgsp::oracles::selftest;
use serde::{Deserialize, Serialize};

use crate::config::{impl_common, setup};
use crate::output::write_table;
use crate::{CliError, CliResult, CommonArgs};

fn default_instances() -> usize {
    50
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    /// Random instances per property.
    #[serde(default = "default_instances")]
    pub instances: usize,
    pub seed: Option<u64>,
    pub out: Option<String>,
}
impl_common!(SelftestConfig);

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let fallback = SelftestConfig { instances: default_instances(), seed: None, out: None };
    let (cfg, ctx) = setup::<SelftestConfig>(args, true, Some(fallback))?;
    let results = selftest(ctx.seed()?, cfg.instances)?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {} ({})", r.name, r.detail);
        failed += usize::from(!r.passed);
        rows.push(vec![r.name.to_string(), status.to_string(), r.detail.clone()]);
    }
    write_table(&ctx.output("selftest.csv"), &["property", "status", "detail"], &rows)?;
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} properties failed", results.len())));
    }
    Ok(())
}
