//! `denoise`: frequency-mask denoising in three frameworks.
//!
//! `single` filters with one atom's classical GFT, `mixture` with the
//! classical GFT of `L_t = t X_0 + (1 - t) X_1` for a two-atom space, and
//! `distributional` with the convolution filter whose kernel is a (possibly
//! per-atom) mask. With a `[tune]` table the masks (and `t`) are chosen by
//! grid search on the first `samples` signals against the clean signals and
//! scored on the rest.

use nalgebra::DMatrix;
use probgsp::opspace::make_operator;
use probgsp::{OperatorSpace, ShiftOperator, Signal};
use serde::{Deserialize, Serialize};

use super::{read_signals, space_from, MaskSpec};
use crate::config::{impl_common, setup};
use crate::output::{num, write_signals, write_table};
use crate::{invalid, CliResult, CommonArgs};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    Mixture,
    #[default]
    Distributional,
    /// Every single atom, the mixture (two-atom spaces) and the distributional filter.
    All,
}

fn default_samples() -> usize {
    30
}

fn default_t_grid() -> usize {
    19
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSpec {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub cutoff: Vec<usize>,
    /// Number of leading signals used for tuning.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Number of equally spaced `t` values in (0, 1) for the mixture mode.
    #[serde(default = "default_t_grid")]
    pub t_grid: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseConfig {
    pub space: String,
    /// Noisy signals, one per row.
    pub noisy: String,
    /// Clean signals in the same layout; enables MSE, accuracy and tuning.
    pub clean: Option<String>,
    #[serde(default)]
    pub mode: Mode,
    /// Atom for the single mode (default 0).
    pub atom: Option<usize>,
    /// Mixture parameter when not tuning (default 0.5).
    pub t: Option<f64>,
    /// Round outputs to integers and tune for label accuracy.
    #[serde(default)]
    pub round: bool,
    pub mask: Option<MaskSpec>,
    /// Per-atom masks for the distributional mode.
    pub masks: Option<Vec<MaskSpec>>,
    pub tune: Option<TuneSpec>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}
impl_common!(DenoiseConfig);

/// `U_{:, <c} U_{:, <c}ᵀ F` for every cutoff of interest, so that a mask
/// `(r1, r2, c)` acts as `r1 L_c + r2 (F − L_c)`.
struct LowPasses {
    cutoffs: Vec<usize>,
    low: Vec<DMatrix<f64>>,
}

impl LowPasses {
    fn new(op: &ShiftOperator, f: &DMatrix<f64>, cutoffs: &[usize]) -> Self {
        let coeffs = op.eigenvectors().tr_mul(f);
        let mut cutoffs = cutoffs.to_vec();
        cutoffs.sort_unstable();
        cutoffs.dedup();
        let low = cutoffs
            .iter()
            .map(|&c| op.eigenvectors().columns(0, c) * coeffs.rows(0, c))
            .collect();
        LowPasses { cutoffs, low }
    }

    fn apply(&self, f: &DMatrix<f64>, m: MaskSpec) -> DMatrix<f64> {
        let idx = self.cutoffs.binary_search(&m.cutoff).expect("cutoff was precomputed");
        let low = &self.low[idx];
        low * m.r1 + (f - low) * m.r2
    }
}

#[derive(Clone, Copy, Debug)]
struct Score {
    mse: f64,
    accuracy: f64,
}

impl Score {
    fn of(out: &DMatrix<f64>, clean: &DMatrix<f64>) -> Score {
        let count = (out.nrows() * out.ncols()).max(1) as f64;
        let mse = out.iter().zip(clean.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / count;
        let hits = out.iter().zip(clean.iter()).filter(|(a, b)| a.round() == **b).count();
        Score { mse, accuracy: hits as f64 / count }
    }

    fn better_than(&self, other: &Score, by_accuracy: bool) -> bool {
        if by_accuracy && self.accuracy != other.accuracy {
            return self.accuracy > other.accuracy;
        }
        self.mse < other.mse
    }
}

struct Data {
    /// Signals as columns.
    noisy: DMatrix<f64>,
    clean: Option<DMatrix<f64>>,
    /// Number of leading columns used for tuning.
    tune_cols: usize,
}

impl Data {
    fn eval_range(&self) -> (usize, usize) {
        let m = self.noisy.ncols();
        if self.tune_cols < m {
            (self.tune_cols, m - self.tune_cols)
        } else {
            (0, m)
        }
    }
}

fn as_columns(signals: &[Signal], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, signals.len(), |r, c| signals[c].values()[r])
}

fn grid(t: &TuneSpec, n: usize) -> CliResult<Vec<MaskSpec>> {
    if t.r1.is_empty() || t.r2.is_empty() || t.cutoff.is_empty() {
        return invalid("tuning grids must be nonempty");
    }
    if let Some(&c) = t.cutoff.iter().find(|&&c| c < 1 || c > n) {
        return invalid(format!("tuning cutoff {c} outside 1..={n}"));
    }
    if t.r1.iter().chain(&t.r2).any(|r| !(*r >= 0.0)) {
        return invalid("mask scales must be nonnegative");
    }
    let mut out = Vec::new();
    for &cutoff in &t.cutoff {
        for &r1 in &t.r1 {
            for &r2 in &t.r2 {
                out.push(MaskSpec { r1, r2, cutoff });
            }
        }
    }
    Ok(out)
}

fn check_mask(m: &MaskSpec, n: usize) -> CliResult<()> {
    if m.cutoff < 1 || m.cutoff > n {
        return invalid(format!("mask cutoff {} outside 1..={n}", m.cutoff));
    }
    if !(m.r1 >= 0.0 && m.r2 >= 0.0) {
        return invalid("mask scales must be nonnegative");
    }
    Ok(())
}

/// Outcome of one framework.
struct Run {
    label: String,
    atom: Option<usize>,
    t: Option<f64>,
    masks: Vec<MaskSpec>,
    output: DMatrix<f64>,
}

/// Weighted sum of per-atom mask outputs.
fn combine(parts: &[&DMatrix<f64>], weights: &[f64]) -> DMatrix<f64> {
    let mut acc = parts[0] * weights[0];
    for (p, &w) in parts.iter().zip(weights).skip(1) {
        acc += *p * w;
    }
    acc
}

fn tune_single(op: &ShiftOperator, data: &Data, masks: &[MaskSpec], by_accuracy: bool) -> (MaskSpec, Score) {
    let cols = data.tune_cols;
    let f = data.noisy.columns(0, cols).into_owned();
    let clean = data.clean.as_ref().expect("tuning needs clean signals").columns(0, cols).into_owned();
    let cutoffs: Vec<usize> = masks.iter().map(|m| m.cutoff).collect();
    let lp = LowPasses::new(op, &f, &cutoffs);
    let mut best: Option<(MaskSpec, Score)> = None;
    for &m in masks {
        let s = Score::of(&lp.apply(&f, m), &clean);
        if best.as_ref().is_none_or(|(_, b)| s.better_than(b, by_accuracy)) {
            best = Some((m, s));
        }
    }
    best.expect("grid is nonempty")
}

/// Exhaustive search over per-atom masks when the product grid is small,
/// coordinate descent from the best shared mask otherwise.
fn tune_distributional(space: &OperatorSpace, data: &Data, masks: &[MaskSpec], by_accuracy: bool) -> Vec<MaskSpec> {
    let cols = data.tune_cols;
    let f = data.noisy.columns(0, cols).into_owned();
    let clean = data.clean.as_ref().expect("tuning needs clean signals").columns(0, cols).into_owned();
    let cutoffs: Vec<usize> = masks.iter().map(|m| m.cutoff).collect();
    let outputs: Vec<Vec<DMatrix<f64>>> = space
        .atoms()
        .iter()
        .map(|op| {
            let lp = LowPasses::new(op, &f, &cutoffs);
            masks.iter().map(|&m| lp.apply(&f, m)).collect()
        })
        .collect();
    let len = space.len();
    let g = masks.len();
    let score = |choice: &[usize]| {
        let parts: Vec<&DMatrix<f64>> = choice.iter().enumerate().map(|(j, &c)| &outputs[j][c]).collect();
        Score::of(&combine(&parts, space.weights()), &clean)
    };

    let exhaustive = (g as f64).powi(len as i32) <= 200_000.0;
    if exhaustive {
        let mut choice = vec![0usize; len];
        let mut best = (choice.clone(), score(&choice));
        loop {
            let mut j = len;
            loop {
                if j == 0 {
                    return best.0.iter().map(|&c| masks[c]).collect();
                }
                j -= 1;
                choice[j] += 1;
                if choice[j] < g {
                    break;
                }
                choice[j] = 0;
            }
            let s = score(&choice);
            if s.better_than(&best.1, by_accuracy) {
                best = (choice.clone(), s);
            }
        }
    }

    let mut best = (vec![0usize; len], score(&vec![0usize; len]));
    for c in 1..g {
        let choice = vec![c; len];
        let s = score(&choice);
        if s.better_than(&best.1, by_accuracy) {
            best = (choice, s);
        }
    }
    for _ in 0..20 {
        let mut improved = false;
        for j in 0..len {
            for c in 0..g {
                let mut choice = best.0.clone();
                choice[j] = c;
                let s = score(&choice);
                if s.better_than(&best.1, by_accuracy) {
                    best = (choice, s);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    best.0.iter().map(|&c| masks[c]).collect()
}

fn apply_single(op: &ShiftOperator, f: &DMatrix<f64>, m: MaskSpec) -> DMatrix<f64> {
    LowPasses::new(op, f, &[m.cutoff]).apply(f, m)
}

fn apply_distributional(space: &OperatorSpace, f: &DMatrix<f64>, masks: &[MaskSpec]) -> DMatrix<f64> {
    let parts: Vec<DMatrix<f64>> = space.atoms().iter().zip(masks).map(|(op, &m)| apply_single(op, f, m)).collect();
    combine(&parts.iter().collect::<Vec<_>>(), space.weights())
}

fn mixture_operator(space: &OperatorSpace, t: f64) -> CliResult<ShiftOperator> {
    Ok(make_operator(space.atom(0).matrix() * t + space.atom(1).matrix() * (1.0 - t))?)
}

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let (cfg, ctx) = setup::<DenoiseConfig>(args, false, None)?;
    let (_, loaded) = space_from(&ctx, &cfg.space)?;
    let space = &loaded.space;
    let n = space.n();
    let noisy = read_signals(&ctx.input(&cfg.noisy)?, n)?;
    let clean = match &cfg.clean {
        Some(p) => {
            let c = read_signals(&ctx.input(p)?, n)?;
            if c.len() != noisy.len() {
                return invalid(format!("{} clean signals for {} noisy ones", c.len(), noisy.len()));
            }
            Some(as_columns(&c, n))
        }
        None => None,
    };
    if noisy.is_empty() {
        return invalid("no noisy signals");
    }
    let grid = match &cfg.tune {
        Some(t) => {
            if clean.is_none() {
                return invalid("tuning needs `clean`");
            }
            if t.samples == 0 || t.t_grid == 0 {
                return invalid("tuning needs at least one sample and one t value");
            }
            Some(grid(t, n)?)
        }
        None => None,
    };
    for m in cfg.mask.iter().chain(cfg.masks.iter().flatten()) {
        check_mask(m, n)?;
    }
    if let Some(ms) = &cfg.masks {
        if ms.len() != space.len() {
            return invalid(format!("{} masks for {} atoms", ms.len(), space.len()));
        }
    }
    let tune_cols = cfg.tune.as_ref().map_or(0, |t| t.samples.min(noisy.len()));
    let data = Data { noisy: as_columns(&noisy, n), clean, tune_cols };
    let by_accuracy = cfg.round;
    let fixed = |what: &str| -> CliResult<MaskSpec> {
        cfg.mask.ok_or_else(|| crate::CliError::Invalid(format!("{what} needs `mask` or a `[tune]` table")))
    };

    let mut runs = Vec::new();
    let singles: Vec<usize> = match cfg.mode {
        Mode::Single => vec![cfg.atom.unwrap_or(0)],
        Mode::All => (0..space.len()).collect(),
        _ => Vec::new(),
    };
    for j in singles {
        if j >= space.len() {
            return invalid(format!("atom {j} out of range for {} atoms", space.len()));
        }
        let op = space.atom(j);
        let m = match &grid {
            Some(g) => tune_single(op, &data, g, by_accuracy).0,
            None => fixed("single mode")?,
        };
        runs.push(Run { label: format!("single_{j}"), atom: Some(j), t: None, masks: vec![m], output: apply_single(op, &data.noisy, m) });
    }

    let mixture = matches!(cfg.mode, Mode::Mixture) || (matches!(cfg.mode, Mode::All) && space.len() == 2);
    if mixture {
        if space.len() != 2 {
            return invalid("the mixture mode needs a two-atom space");
        }
        let (t, m, op) = match (&grid, &cfg.tune) {
            (Some(g), Some(tune)) => {
                let mut best: Option<(f64, MaskSpec, Score, ShiftOperator)> = None;
                for i in 1..=tune.t_grid {
                    let t = i as f64 / (tune.t_grid + 1) as f64;
                    let op = mixture_operator(space, t)?;
                    let (m, s) = tune_single(&op, &data, g, by_accuracy);
                    if best.as_ref().is_none_or(|b| s.better_than(&b.2, by_accuracy)) {
                        best = Some((t, m, s, op));
                    }
                }
                let (t, m, _, op) = best.expect("t grid is nonempty");
                (t, m, op)
            }
            _ => {
                let t = cfg.t.unwrap_or(0.5);
                if !(0.0..=1.0).contains(&t) {
                    return invalid(format!("mixture parameter t = {t} outside [0, 1]"));
                }
                (t, fixed("mixture mode")?, mixture_operator(space, t)?)
            }
        };
        runs.push(Run { label: "mixture".into(), atom: None, t: Some(t), masks: vec![m], output: apply_single(&op, &data.noisy, m) });
    }

    if matches!(cfg.mode, Mode::Distributional | Mode::All) {
        let masks = match (&grid, &cfg.masks) {
            (Some(g), _) => tune_distributional(space, &data, g, by_accuracy),
            (None, Some(ms)) => ms.clone(),
            (None, None) => vec![fixed("distributional mode")?; space.len()],
        };
        let output = apply_distributional(space, &data.noisy, &masks);
        runs.push(Run { label: "distributional".into(), atom: None, t: None, masks, output });
    }

    let (start, count) = data.eval_range();
    let mut rows = Vec::new();
    for run in &runs {
        let mut out = run.output.clone();
        if cfg.round {
            out.apply(|x| *x = x.round());
        }
        let signals: Vec<Signal> = (0..out.ncols()).map(|c| Signal::from_vec(out.column(c).iter().copied().collect())).collect();
        write_signals(&ctx.output(&format!("denoised_{}.csv", run.label)), &signals)?;
        let masks = run.masks.iter().map(|m| format!("{}:{}:{}", num(m.r1), num(m.r2), m.cutoff)).collect::<Vec<_>>().join(";");
        let (mse, acc) = match &data.clean {
            Some(c) => {
                let s = Score::of(&run.output.columns(start, count).into_owned(), &c.columns(start, count).into_owned());
                (num(s.mse), num(s.accuracy))
            }
            None => (String::new(), String::new()),
        };
        println!("denoise {:<16} mse {:>12} accuracy {:>12}", run.label, mse, acc);
        rows.push(vec![
            run.label.clone(),
            run.atom.map_or(String::new(), |a| a.to_string()),
            run.t.map_or(String::new(), num),
            masks,
            data.tune_cols.to_string(),
            count.to_string(),
            mse,
            acc,
        ]);
    }
    write_table(&ctx.output("summary.csv"), &["mode", "atom", "t", "masks", "tuned_on", "eval_signals", "mse", "accuracy"], &rows)?;
    Ok(())
}
