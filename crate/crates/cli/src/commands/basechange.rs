//! `basechange`: transport measures or filters along `h: Z → X`.
//!
//! The map manifest lists `z -> x [weight]` lines. Measure constructions
//! write the new atom weights and a space manifest that loads them; filter
//! constructions write the n x n filter matrix (and filtered signals when
//! `signals` is given).

use std::fs;

use probgsp::basechange::{pullback_conv_matrix, pullback_measure, pushforward_conv_matrix, pushforward_measure};
use probgsp::{OperatorSpace, Signal};
use serde::{Deserialize, Serialize};

use super::{read_signals, KernelSpec};
use crate::config::{impl_common, setup};
use crate::manifest::{load_space, parse_map, SpaceManifest};
use crate::output::{write_matrix, write_signals};
use crate::{invalid, CliError, CliResult, CommonArgs};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// `h_*(μ_Z)` on X.
    PushforwardMeasure,
    /// `h*(μ_X)` on Z with the map's fiber weights.
    PullbackMeasure,
    /// `F_{h#,Γ}` for a kernel on X.
    PushforwardFilter,
    /// `F_{h*(Γ)}`: convolution on Z with the pulled-back kernel.
    PullbackFilter,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasechangeConfig {
    pub x_space: String,
    pub z_space: String,
    pub map: String,
    pub construction: Construction,
    /// Kernel on X, for the filter constructions.
    pub kernel: Option<KernelSpec>,
    pub signals: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}
impl_common!(BasechangeConfig);

fn emit_space(ctx: &crate::config::Context, manifest: &SpaceManifest, manifest_path: &std::path::Path, space: &OperatorSpace) -> CliResult<()> {
    let w = nalgebra::DMatrix::from_column_slice(space.len(), 1, space.weights());
    write_matrix(&ctx.output("weights.csv"), None, &w)?;
    let base = manifest_path.parent().map(std::path::Path::to_path_buf).unwrap_or_default();
    let relocated = manifest.relocated(&base, Some("weights.csv".into()))?;
    let text = toml::to_string(&relocated).map_err(|e| CliError::Invalid(format!("cannot serialize manifest: {e}")))?;
    fs::write(ctx.output("space.toml"), text).map_err(|e| CliError::Invalid(format!("{}: {e}", ctx.out.display())))
}

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let (cfg, ctx) = setup::<BasechangeConfig>(args, false, None)?;
    if cfg.kernel.is_some() && matches!(cfg.construction, Construction::PushforwardMeasure | Construction::PullbackMeasure) {
        return invalid("`kernel` is only used by the filter constructions");
    }
    let x_path = ctx.input(&cfg.x_space)?;
    let z_path = ctx.input(&cfg.z_space)?;
    let (x_manifest, x) = load_space(&x_path)?;
    let (z_manifest, z) = load_space(&z_path)?;
    let (x, z) = (x.space, z.space);
    let map_path = ctx.input(&cfg.map)?;
    let text = fs::read_to_string(&map_path).map_err(|e| CliError::Invalid(format!("{}: {e}", map_path.display())))?;
    let h = parse_map(&text, z.len(), x.len())?;

    match cfg.construction {
        Construction::PushforwardMeasure => {
            let pushed = pushforward_measure(&h, &z, &x)?;
            emit_space(&ctx, &x_manifest, &x_path, &pushed)?;
        }
        Construction::PullbackMeasure => {
            let pulled = pullback_measure(&h, &z, &x)?;
            emit_space(&ctx, &z_manifest, &z_path, &pulled)?;
        }
        Construction::PushforwardFilter | Construction::PullbackFilter => {
            let spec = cfg.kernel.as_ref().ok_or_else(|| CliError::Invalid("filter constructions need `kernel`".into()))?;
            let kernel = spec.build(&x, &ctx)?;
            let m = if cfg.construction == Construction::PushforwardFilter {
                pushforward_conv_matrix(&h, &z, &x, &kernel)?
            } else {
                pullback_conv_matrix(&h, &z, &x, &kernel)?
            };
            write_matrix(&ctx.output("filter_matrix.csv"), None, &m)?;
            if let Some(p) = &cfg.signals {
                let signals = read_signals(&ctx.input(p)?, x.n())?;
                let filtered: Vec<Signal> = signals.iter().map(|f| Signal::from_vector(&m * f.as_vector())).collect();
                write_signals(&ctx.output("filtered.csv"), &filtered)?;
            }
        }
    }
    println!("basechange: {:?} done (Z has {} atoms, X has {})", cfg.construction, z.len(), x.len());
    Ok(())
}
