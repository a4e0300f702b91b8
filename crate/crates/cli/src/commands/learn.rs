//! `learn`: Gibbs posterior over the atoms of an operator space.
//!
//! `exact` normalizes `exp(−γ θ) μ` over the atoms. `mcmc` runs
//! Metropolis–Hastings on the parameter interval with the manifest's density
//! as prior and bins the samples to the nearest atom.

use probgsp::learning::{
    calibrate_threshold, empirical_risk, gibbs_posterior_exact, metropolis_hastings, nearest_node_theta, GibbsConfig,
    LossSpec,
};
use probgsp::Signal;
use serde::{Deserialize, Serialize};

use super::{read_column, read_signals, space_from};
use crate::config::{impl_common, setup};
use crate::output::{num, write_matrix, write_table};
use crate::{invalid, CliError, CliResult, CommonArgs};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Exact,
    Mcmc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LossConfig {
    /// Energy fraction above the lowest `cutoff` frequencies.
    SpectralCompaction { cutoff: usize },
    /// Thresholded high-pass energy on frequencies `band` against 0/1 labels.
    /// Without `thresholds`, each atom's threshold is the mean high-pass norm
    /// of the label-0 signals.
    ZeroOneDetection { band: Vec<usize>, thresholds: Option<Vec<f64>> },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSection {
    pub gamma: Option<f64>,
    pub chain_length: Option<usize>,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub step_size: Option<f64>,
    pub chains: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub space: String,
    /// Training signals, one per row.
    pub signals: String,
    /// 0/1 labels, one per signal.
    pub labels: Option<String>,
    #[serde(default)]
    pub method: Method,
    pub loss: LossConfig,
    #[serde(default)]
    pub gibbs: GibbsSection,
    pub seed: Option<u64>,
    pub out: Option<String>,
}
impl_common!(LearnConfig);

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let stochastic = {
        // Peek at the method so that only MCMC runs insist on a seed.
        let probe: Option<LearnConfig> = match &args.config {
            Some(p) => Some(crate::config::read_toml(p)?),
            None => None,
        };
        probe.is_some_and(|c| c.method == Method::Mcmc)
    };
    let (cfg, ctx) = setup::<LearnConfig>(args, stochastic, None)?;
    let (_, loaded) = space_from(&ctx, &cfg.space)?;
    let space = &loaded.space;
    let signals = read_signals(&ctx.input(&cfg.signals)?, space.n())?;
    let labels = match &cfg.labels {
        Some(p) => Some(read_column(&ctx.input(p)?)?),
        None => None,
    };
    let loss = match &cfg.loss {
        LossConfig::SpectralCompaction { cutoff } => LossSpec::SpectralCompaction { cutoff: *cutoff },
        LossConfig::ZeroOneDetection { band, thresholds } => {
            let thresholds = match thresholds {
                Some(t) => t.clone(),
                None => {
                    let l = labels.as_ref().ok_or_else(|| CliError::Invalid("zero-one detection needs `labels`".into()))?;
                    if l.len() != signals.len() {
                        return invalid(format!("{} labels for {} signals", l.len(), signals.len()));
                    }
                    if let Some(&i) = band.iter().find(|&&i| i >= space.n()) {
                        return invalid(format!("band frequency {i} out of range"));
                    }
                    let normal: Vec<Signal> = signals.iter().zip(l).filter(|(_, &y)| y == 0.0).map(|(f, _)| f.clone()).collect();
                    space.atoms().iter().map(|op| calibrate_threshold(op, band, &normal)).collect::<probgsp::Result<Vec<_>>>()?
                }
            };
            LossSpec::ZeroOneDetection { band: band.clone(), thresholds }
        }
    };
    let theta = empirical_risk(space, &loss, &signals, labels.as_deref())?;

    let d = GibbsConfig::default();
    let g = &cfg.gibbs;
    let gibbs = GibbsConfig {
        gamma: g.gamma.unwrap_or(d.gamma),
        chain_length: g.chain_length.unwrap_or(d.chain_length),
        burn_in: g.burn_in.unwrap_or(d.burn_in),
        thinning: g.thinning.unwrap_or(d.thinning),
        step_size: g.step_size.unwrap_or(d.step_size),
        chains: g.chains.unwrap_or(d.chains),
        seed: ctx.seed.unwrap_or(0),
    };
    gibbs.validate()?;

    let prior = space.weights().to_vec();
    let mut diagnostics: Vec<(String, String)> = vec![
        ("method".into(), format!("{:?}", cfg.method).to_lowercase()),
        ("gamma".into(), num(gibbs.gamma)),
    ];
    let (weights, counts) = match cfg.method {
        Method::Exact => (gibbs_posterior_exact(&theta, &prior, gibbs.gamma)?, None),
        Method::Mcmc => {
            let params = space.params().ok_or_else(|| CliError::Invalid("mcmc needs a parametrized space".into()))?;
            let density = loaded.density.clone().ok_or_else(|| CliError::Invalid("mcmc needs a prior density".into()))?;
            let result = metropolis_hastings(space, nearest_node_theta(params, &theta), |t| density.eval(t), &gibbs)?;
            diagnostics.push(("seed".into(), gibbs.seed.to_string()));
            diagnostics.push(("acceptance_rate".into(), num(result.acceptance_rate)));
            diagnostics.push(("effective_sample_size".into(), num(result.effective_sample_size)));
            diagnostics.push(("kept_samples".into(), result.samples.len().to_string()));
            diagnostics.push(("warning".into(), result.warning.clone().unwrap_or_default()));
            (result.weights, Some(result.counts))
        }
    };
    let best = probgsp::infection::argmax(&weights);
    diagnostics.push(("argmax_atom".into(), best.to_string()));
    if let Some(p) = space.params() {
        diagnostics.push(("argmax_param".into(), num(p[best])));
    }

    let rows: Vec<Vec<String>> = (0..space.len())
        .map(|j| {
            vec![
                j.to_string(),
                space.params().map_or(String::new(), |p| num(p[j])),
                num(theta[j]),
                num(prior[j]),
                num(weights[j]),
                counts.as_ref().map_or(String::new(), |c| c[j].to_string()),
            ]
        })
        .collect();
    write_table(&ctx.output("posterior.csv"), &["atom", "param", "risk", "prior", "weight", "count"], &rows)?;
    let w = nalgebra::DMatrix::from_column_slice(weights.len(), 1, &weights);
    write_matrix(&ctx.output("weights.csv"), None, &w)?;
    let diag_rows: Vec<Vec<String>> = diagnostics.into_iter().map(|(k, v)| vec![k, v]).collect();
    write_table(&ctx.output("diagnostics.csv"), &["key", "value"], &diag_rows)?;
    println!("learn: posterior mode at atom {best}");
    Ok(())
}
