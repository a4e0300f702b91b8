//! Subcommand implementations and the config pieces they share.

pub mod basechange;
pub mod denoise;
pub mod filter;
pub mod infect;
pub mod learn;
pub mod sample;
pub mod selftest;
pub mod spectrum;

use std::path::Path;

use probgsp::filters::{frequency_mask_per_atom, MaskParams, SpectralKernel};
use probgsp::io::read_matrix;
use probgsp::{OperatorSpace, Signal};
use serde::{Deserialize, Serialize};

use crate::config::Context;
use crate::manifest::{load_space, LoadedSpace, SpaceManifest};
use crate::{invalid, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSpec {
    pub r1: f64,
    pub r2: f64,
    pub cutoff: usize,
}

impl From<MaskSpec> for MaskParams {
    fn from(m: MaskSpec) -> Self {
        MaskParams { r1: m.r1, r2: m.r2, cutoff: m.cutoff }
    }
}

/// A spectral kernel on a space, as written in a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    /// The same frequency mask on every atom.
    Mask { r1: f64, r2: f64, cutoff: usize },
    /// One mask per atom.
    PerAtomMask { masks: Vec<MaskSpec> },
    /// `Γ(X, i) = λ_{X,i}^k`.
    Power { k: i32 },
    /// A CSV with one row per atom and one column per frequency.
    File { path: String },
}

impl KernelSpec {
    pub fn build(&self, space: &OperatorSpace, ctx: &Context) -> CliResult<SpectralKernel> {
        Ok(match self {
            KernelSpec::Mask { r1, r2, cutoff } => {
                frequency_mask_per_atom(space, &vec![MaskParams { r1: *r1, r2: *r2, cutoff: *cutoff }; space.len()])?
            }
            KernelSpec::PerAtomMask { masks } => {
                frequency_mask_per_atom(space, &masks.iter().map(|&m| m.into()).collect::<Vec<_>>())?
            }
            KernelSpec::Power { k } => SpectralKernel::eigenvalue_power(space, *k)?,
            KernelSpec::File { path } => SpectralKernel::new(space, read_matrix(&ctx.input(path)?)?)?,
        })
    }
}

pub fn space_from(ctx: &Context, manifest: &str) -> CliResult<(SpaceManifest, LoadedSpace)> {
    load_space(&ctx.input(manifest)?)
}

/// Signals stored one per row.
pub fn read_signals(path: &Path, n: usize) -> CliResult<Vec<Signal>> {
    let m = read_matrix(path)?;
    if m.ncols() != n {
        return invalid(format!("{}: signals have {} entries, the space has {n} vertices", path.display(), m.ncols()));
    }
    (0..m.nrows())
        .map(|r| Ok(Signal::new(m.row(r).iter().copied().collect())?))
        .collect()
}

/// A single column or row of numbers.
pub fn read_column(path: &Path) -> CliResult<Vec<f64>> {
    Ok(read_matrix(path)?.iter().copied().collect())
}
