//! Config loading, path resolution and the resolved-config record.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{invalid, CliError, CliResult, CommonArgs};

/// Name of the resolved-config record written into every output directory.
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

/// Keys shared by every subcommand config.
pub trait Common {
    fn seed_mut(&mut self) -> &mut Option<u64>;
    fn out_mut(&mut self) -> &mut Option<String>;
}

macro_rules! impl_common {
    ($($t:ty),* $(,)?) => {$(
        impl $crate::config::Common for $t {
            fn seed_mut(&mut self) -> &mut Option<u64> {
                &mut self.seed
            }
            fn out_mut(&mut self) -> &mut Option<String> {
                &mut self.out
            }
        }
    )*};
}
pub(crate) use impl_common;

/// Where inputs are found and outputs go.
#[derive(Clone, Debug)]
pub struct Context {
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Context {
    /// An input path from the config, resolved against the config's directory.
    /// Missing files are a validation error.
    pub fn input(&self, p: &str) -> CliResult<PathBuf> {
        resolve_existing(&self.base, p)
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::Invalid("this subcommand is stochastic: pass --seed or set `seed` in the config".into()))
    }
}

pub fn resolve_existing(base: &Path, p: &str) -> CliResult<PathBuf> {
    let path = base.join(p);
    if !path.exists() {
        return invalid(format!("referenced path {} does not exist", path.display()));
    }
    Ok(path)
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Parse the config named by `args` (or take `fallback` when there is none),
/// apply the flag overrides, create the output directory and record the
/// resolved config there.
pub fn setup<T>(args: &CommonArgs, stochastic: bool, fallback: Option<T>) -> CliResult<(T, Context)>
where
    T: DeserializeOwned + Serialize + Common,
{
    let (mut cfg, base) = match (&args.config, fallback) {
        (Some(path), _) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (read_toml::<T>(path)?, base)
        }
        (None, Some(cfg)) => (cfg, PathBuf::from(".")),
        (None, None) => return invalid("--config is required"),
    };
    if let Some(seed) = args.seed {
        *cfg.seed_mut() = Some(seed);
    }
    if stochastic && cfg.seed_mut().is_none() {
        return invalid("this subcommand is stochastic: pass --seed or set `seed` in the config");
    }
    let out = match (&args.out, cfg.out_mut().take()) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => return invalid("no output directory: pass --out or set `out` in the config"),
    };
    fs::create_dir_all(&out).map_err(|e| CliError::Invalid(format!("{}: {e}", out.display())))?;
    let text = toml::to_string(&cfg).map_err(|e| CliError::Invalid(format!("cannot serialize resolved config: {e}")))?;
    let seed = *cfg.seed_mut();
    let ctx = Context { base, out, seed };
    fs::write(ctx.output(RESOLVED_CONFIG), text).map_err(|e| CliError::Invalid(format!("{}: {e}", ctx.out.display())))?;
    Ok((cfg, ctx))
}
