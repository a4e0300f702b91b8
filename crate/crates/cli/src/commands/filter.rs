//! `filter`: apply a convolution filter to signals.

use probgsp::filters::filter_matrix;
use probgsp::Signal;
use serde::{Deserialize, Serialize};

use super::{read_signals, space_from, KernelSpec};
use crate::config::{impl_common, setup};
use crate::output::{write_matrix, write_signals};
use crate::{CliResult, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub space: String,
    /// Signals, one per row.
    pub signals: String,
    pub kernel: KernelSpec,
    /// Also write the n x n filter matrix.
    #[serde(default)]
    pub write_matrix: bool,
    pub seed: Option<u64>,
    pub out: Option<String>,
}
impl_common!(FilterConfig);

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let (cfg, ctx) = setup::<FilterConfig>(args, false, None)?;
    let (_, loaded) = space_from(&ctx, &cfg.space)?;
    let space = &loaded.space;
    let signals = read_signals(&ctx.input(&cfg.signals)?, space.n())?;
    let kernel = cfg.kernel.build(space, &ctx)?;
    let m = filter_matrix(space, &kernel)?;
    let filtered: Vec<Signal> = signals.iter().map(|f| Signal::from_vector(&m * f.as_vector())).collect();
    write_signals(&ctx.output("filtered.csv"), &filtered)?;
    write_matrix(&ctx.output("kernel.csv"), Some(&format!("space: {}", cfg.space)), kernel.values())?;
    if cfg.write_matrix {
        write_matrix(&ctx.output("filter_matrix.csv"), None, &m)?;
    }
    println!("filter: {} signals filtered", filtered.len());
    Ok(())
}
