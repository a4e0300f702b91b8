//! `spectrum`: distributional Fourier coefficients and energy profile.

use probgsp::io::read_signal;
use probgsp::spectral::fourier;
use serde::{Deserialize, Serialize};

use super::space_from;
use crate::config::{impl_common, setup};
use crate::output::{num, write_matrix, write_table};
use crate::{invalid, CliResult, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Space manifest.
    pub space: String,
    /// One signal, as a single row or column.
    pub signal: String,
    pub seed: Option<u64>,
    pub out: Option<String>,
}
impl_common!(SpectrumConfig);

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let (cfg, ctx) = setup::<SpectrumConfig>(args, false, None)?;
    let (_, loaded) = space_from(&ctx, &cfg.space)?;
    let space = &loaded.space;
    let f = read_signal(&ctx.input(&cfg.signal)?)?;
    if f.len() != space.n() {
        return invalid(format!("signal has {} entries, the space has {} vertices", f.len(), space.n()));
    }
    let fhat = fourier(space, &f)?;
    write_matrix(&ctx.output("coefficients.csv"), Some(&format!("space: {}", cfg.space)), fhat.values())?;

    let mut rows = Vec::new();
    let mut total = 0.0;
    for j in 0..space.len() {
        let energy: f64 = fhat.values().row(j).iter().map(|c| c * c).sum();
        let w = space.weights()[j];
        total += w * energy;
        let param = space.params().map_or(String::new(), |p| num(p[j]));
        rows.push(vec![j.to_string(), param, num(w), num(energy), num(w * energy)]);
    }
    let norm2 = f.norm().powi(2);
    rows.push(vec!["sum".into(), String::new(), num(1.0), num(norm2), num(total)]);
    rows.push(vec!["parseval_gap".into(), String::new(), String::new(), String::new(), num((total - norm2).abs())]);
    write_table(&ctx.output("energy.csv"), &["atom", "param", "weight", "energy", "weighted_energy"], &rows)?;
    println!("spectrum: {} atoms x {} frequencies, parseval gap {:.3e}", space.len(), space.n(), (total - norm2).abs());
    Ok(())
}
