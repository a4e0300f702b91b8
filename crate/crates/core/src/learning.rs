//! Learning the distribution on an operator space from data.
//!
//! Empirical risk of each atom under a loss, the Gibbs posterior
//! `∝ exp(−γ θ) p0` (exactly on finite spaces, or by Metropolis–Hastings on a
//! parameter interval) and the four posteriors obtained by moving risk and
//! prior along a base change.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basechange::BaseChangeMap;
use crate::error::{Error, Result};
use crate::opspace::{OperatorSpace, ShiftOperator, Signal};
use crate::spectral::check_signal;

/// Loss functions evaluated against one atom and one training signal.
#[derive(Clone, Debug, PartialEq)]
pub enum LossSpec {
    /// `ℓ² = Σ_{i ≥ cutoff} f̂(i)² / ‖f‖²` (0-based frequencies), the energy
    /// fraction outside the lowest `cutoff` frequencies.
    SpectralCompaction { cutoff: usize },
    /// `|1(e > ε_j) − y|` with `e² = Σ_{i ∈ band} ⟨u_i, f⟩²` and one threshold
    /// per atom.
    ZeroOneDetection { band: Vec<usize>, thresholds: Vec<f64> },
}

impl LossSpec {
    pub fn needs_labels(&self) -> bool {
        matches!(self, LossSpec::ZeroOneDetection { .. })
    }

    fn validate(&self, space: &OperatorSpace) -> Result<()> {
        let n = space.n();
        match self {
            LossSpec::SpectralCompaction { cutoff } => {
                if *cutoff < 1 || *cutoff > n {
                    return Err(Error::InvalidArgument(format!("cutoff {cutoff} outside 1..={n}")));
                }
            }
            LossSpec::ZeroOneDetection { band, thresholds } => {
                if let Some(&i) = band.iter().find(|&&i| i >= n) {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                if thresholds.len() != space.len() {
                    return Err(Error::DimensionMismatch { expected: space.len(), got: thresholds.len() });
                }
                if thresholds.iter().any(|t| !(*t >= 0.0)) {
                    return Err(Error::InvalidArgument("thresholds must be nonnegative".into()));
                }
            }
        }
        Ok(())
    }
}

/// `sqrt(Σ_{i ≥ cutoff} f̂(i)² / ‖f‖²)` for the classical GFT of `op`.
pub fn loss_spectral_compaction(op: &ShiftOperator, f: &Signal, cutoff: usize) -> Result<f64> {
    let norm2 = f.as_vector().norm_squared();
    if norm2 == 0.0 {
        return Err(Error::InvalidArgument("spectral compaction loss of the zero signal".into()));
    }
    let fhat = op.eigenvectors().tr_mul(f.as_vector());
    let high: f64 = fhat.iter().skip(cutoff).map(|c| c * c).sum();
    Ok((high / norm2).clamp(0.0, 1.0).sqrt())
}

/// High-pass norm `e = sqrt(Σ_{i ∈ band} ⟨u_i, f⟩²)`.
pub fn highpass_norm(op: &ShiftOperator, f: &Signal, band: &[usize]) -> f64 {
    let u = op.eigenvectors();
    band.iter()
        .map(|&i| u.column(i).dot(f.as_vector()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `|1(e > threshold) − label|`.
pub fn loss_zero_one_detection(op: &ShiftOperator, f: &Signal, band: &[usize], threshold: f64, label: f64) -> f64 {
    let flagged = if highpass_norm(op, f, band) > threshold { 1.0 } else { 0.0 };
    (flagged - label).abs()
}

/// Threshold calibrated as the average high-pass norm over `signals`.
pub fn calibrate_threshold(op: &ShiftOperator, band: &[usize], signals: &[Signal]) -> Result<f64> {
    if signals.is_empty() {
        return Err(Error::InvalidArgument("calibration needs at least one signal".into()));
    }
    Ok(signals.iter().map(|f| highpass_norm(op, f, band)).sum::<f64>() / signals.len() as f64)
}

/// `b_f = E_μ[(e_{f,j} − ε_j) / ε_j]`; `f` is flagged abnormal when positive.
pub fn anomaly_score(space: &OperatorSpace, band: &[usize], thresholds: &[f64], f: &Signal) -> Result<f64> {
    check_signal(space, f)?;
    if thresholds.len() != space.len() {
        return Err(Error::DimensionMismatch { expected: space.len(), got: thresholds.len() });
    }
    if thresholds.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("anomaly thresholds must be positive".into()));
    }
    Ok(space
        .atoms()
        .iter()
        .zip(space.weights())
        .zip(thresholds)
        .map(|((op, w), eps)| w * (highpass_norm(op, f, band) - eps) / eps)
        .sum())
}

/// `θ(X_j) = (1/m) Σ_i ℓ(X_j, f_i [, y_i])`.
pub fn empirical_risk(space: &OperatorSpace, loss: &LossSpec, signals: &[Signal], labels: Option<&[f64]>) -> Result<Vec<f64>> {
    loss.validate(space)?;
    if signals.is_empty() {
        return Err(Error::InvalidArgument("empirical risk needs at least one signal".into()));
    }
    for f in signals {
        check_signal(space, f)?;
    }
    match (loss.needs_labels(), labels) {
        (true, None) => return Err(Error::InvalidArgument("this loss needs labels".into())),
        (false, Some(_)) => return Err(Error::InvalidArgument("this loss takes no labels".into())),
        (true, Some(l)) => {
            if l.len() != signals.len() {
                return Err(Error::DimensionMismatch { expected: signals.len(), got: l.len() });
            }
            if l.iter().any(|&y| y != 0.0 && y != 1.0) {
                return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
            }
        }
        (false, None) => {}
    }
    empirical_risk_with(space.len(), signals.len(), |j, i| {
        let op = space.atom(j);
        let f = &signals[i];
        match loss {
            LossSpec::SpectralCompaction { cutoff } => loss_spectral_compaction(op, f, *cutoff),
            LossSpec::ZeroOneDetection { band, thresholds } => {
                Ok(loss_zero_one_detection(op, f, band, thresholds[j], labels.expect("checked above")[i]))
            }
        }
    })
}

/// Empirical risk for an arbitrary loss `loss(atom, sample)`.
pub fn empirical_risk_with(atoms: usize, samples: usize, mut loss: impl FnMut(usize, usize) -> Result<f64>) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("empirical risk needs at least one sample".into()));
    }
    (0..atoms)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..samples {
                let v = loss(j, i)?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!("loss {v} at atom {j}, sample {i} is not a finite nonnegative value")));
                }
                acc += v;
            }
            Ok(acc / samples as f64)
        })
        .collect()
}

/// Metropolis–Hastings and posterior settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsConfig {
    pub gamma: f64,
    /// Total iterations per chain, burn-in included.
    pub chain_length: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub step_size: f64,
    pub chains: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig { gamma: 10.0, chain_length: 50_000, burn_in: 5_000, thinning: 5, step_size: 0.05, chains: 1, seed: 0 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be finite and nonnegative, got {}", self.gamma)));
        }
        if self.burn_in >= self.chain_length {
            return Err(Error::InvalidArgument("burn-in must be shorter than the chain".into()));
        }
        if self.thinning == 0 || self.chains == 0 {
            return Err(Error::InvalidArgument("thinning and chain count must be positive".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidArgument("step size must be positive".into()));
        }
        Ok(())
    }
}

/// `w_j ∝ exp(−γ θ_j) p0_j`, normalized.
///
/// Atoms with zero prior or infinite risk get weight 0.
pub fn gibbs_posterior_exact(theta: &[f64], prior: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if theta.len() != prior.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: prior.len() });
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be finite and nonnegative, got {gamma}")));
    }
    if prior.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) || theta.iter().any(|t| t.is_nan()) {
        return Err(Error::InvalidArgument("prior must be finite and nonnegative, risk must not be NaN".into()));
    }
    let logs: Vec<f64> = theta
        .iter()
        .zip(prior)
        .map(|(&t, &p)| if p > 0.0 && t.is_finite() { -gamma * t + p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::PosteriorUnderflow);
    }
    let raw: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|w| w / total).collect())
}

/// Piecewise-constant extension of per-node risks: `θ(t)` is the risk of the
/// nearest node (lower index on ties).
pub fn nearest_node_theta<'a>(params: &'a [f64], theta: &'a [f64]) -> impl Fn(f64) -> f64 + 'a {
    move |t| theta[nearest_node(params, t)]
}

/// Index of the node nearest to `t` (lower index on ties).
pub fn nearest_node(params: &[f64], t: f64) -> usize {
    let mut best = 0;
    for (k, &p) in params.iter().enumerate() {
        if (p - t).abs() < (params[best] - t).abs() {
            best = k;
        }
    }
    best
}

/// Lengths of the nearest-node cells of `params` inside `domain`, normalized.
/// This is the prior that a uniform density on the interval induces on the
/// nodes after nearest-node binning.
pub fn voronoi_weights(params: &[f64], domain: (f64, f64)) -> Vec<f64> {
    let k = params.len();
    let width = domain.1 - domain.0;
    (0..k)
        .map(|i| {
            let lo = if i == 0 { domain.0 } else { 0.5 * (params[i - 1] + params[i]) };
            let hi = if i + 1 == k { domain.1 } else { 0.5 * (params[i] + params[i + 1]) };
            (hi - lo) / width
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct McmcResult {
    /// Normalized histogram over the space's nodes.
    pub weights: Vec<f64>,
    pub counts: Vec<usize>,
    /// Kept samples, chain after chain.
    pub samples: Vec<f64>,
    pub acceptance_rate: f64,
    /// Sum of per-chain autocorrelation-based estimates.
    pub effective_sample_size: f64,
    pub warning: Option<String>,
}

fn reflect(mut t: f64, (a, b): (f64, f64)) -> f64 {
    loop {
        if t < a {
            t = 2.0 * a - t;
        } else if t > b {
            t = 2.0 * b - t;
        } else {
            return t;
        }
    }
}

/// Effective sample size from the autocorrelation function, summed up to the
/// first non-positive lag.
pub fn effective_sample_size(samples: &[f64]) -> f64 {
    let m = samples.len();
    if m < 2 {
        return m as f64;
    }
    let mean = samples.iter().sum::<f64>() / m as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
    if var == 0.0 {
        return m as f64;
    }
    let mut tau = 1.0;
    for lag in 1..m {
        let c: f64 = (0..m - lag).map(|i| (samples[i] - mean) * (samples[i + lag] - mean)).sum::<f64>() / (m as f64 * var);
        if c <= 0.0 {
            break;
        }
        tau += 2.0 * c;
    }
    m as f64 / tau
}

/// Random-walk Metropolis–Hastings on the parameter interval of `space`.
///
/// The target density is `exp(−γ θ(t)) p0(t)`. Proposals add a uniform step
/// in `[−step, step]` and reflect at the interval ends, so the proposal is
/// symmetric. Kept samples are binned to the nearest node. Chains start at
/// the middle of the interval; chain `c` uses stream `c` of the seed.
pub fn metropolis_hastings(
    space: &OperatorSpace,
    theta: impl Fn(f64) -> f64,
    prior: impl Fn(f64) -> f64,
    config: &GibbsConfig,
) -> Result<McmcResult> {
    config.validate()?;
    let params = space
        .params()
        .ok_or_else(|| Error::InvalidArgument("Metropolis-Hastings needs a parametrized space".into()))?;
    let domain = space.domain().expect("parametrized spaces carry a domain");
    let log_target = |t: f64| {
        let p = prior(t);
        if p > 0.0 {
            -config.gamma * theta(t) + p.ln()
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut counts = vec![0usize; params.len()];
    let mut samples = Vec::new();
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    let mut ess = 0.0;
    for c in 0..config.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(c as u64);
        let mut t = 0.5 * (domain.0 + domain.1);
        let mut lt = log_target(t);
        if lt == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument("target density vanishes at the starting point".into()));
        }
        let start = samples.len();
        for it in 0..config.chain_length {
            let proposal = reflect(t + rng.random_range(-config.step_size..=config.step_size), domain);
            let lp = log_target(proposal);
            proposals += 1;
            if lp >= lt || rng.random::<f64>() < (lp - lt).exp() {
                t = proposal;
                lt = lp;
                accepted += 1;
            }
            if it >= config.burn_in && (it - config.burn_in).is_multiple_of(config.thinning) {
                samples.push(t);
                counts[nearest_node(params, t)] += 1;
            }
        }
        ess += effective_sample_size(&samples[start..]);
    }
    let kept = samples.len();
    if kept == 0 {
        return Err(Error::InvalidArgument("no samples kept after burn-in and thinning".into()));
    }
    let weights = counts.iter().map(|&c| c as f64 / kept as f64).collect();
    let acceptance_rate = accepted as f64 / proposals as f64;
    let warning = if !(0.05..=0.95).contains(&acceptance_rate) {
        Some(format!("acceptance rate {acceptance_rate:.3} outside [0.05, 0.95]; consider changing the step size"))
    } else {
        None
    };
    Ok(McmcResult { weights, counts, samples, acceptance_rate, effective_sample_size: ess, warning })
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Whether a quantity is used as given on the target space or transported
/// along `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transport {
    Native,
    Transported,
}

/// Which space receives the posterior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    X,
    Z,
}

/// Risks and priors known on either side of `h: Z → X`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PosteriorInputs<'a> {
    pub theta_x: Option<&'a [f64]>,
    pub prior_x: Option<&'a [f64]>,
    pub theta_z: Option<&'a [f64]>,
    pub prior_z: Option<&'a [f64]>,
}

/// `h_*(θ)(X_k)`: fiber-weighted average of the Z-risks over the preimage;
/// `None` for an empty preimage.
pub fn pushforward_risk(h: &BaseChangeMap, theta_z: &[f64]) -> Result<Vec<Option<f64>>> {
    if theta_z.len() != h.z_len() {
        return Err(Error::DimensionMismatch { expected: h.z_len(), got: theta_z.len() });
    }
    Ok((0..h.x_len())
        .map(|k| {
            let fiber = h.fiber(k);
            (!fiber.is_empty()).then(|| fiber.iter().map(|&(j, w)| w * theta_z[j]).sum())
        })
        .collect())
}

/// `h*(θ)(Z_j) = θ(h(Z_j))`.
pub fn pullback_risk(h: &BaseChangeMap, theta_x: &[f64]) -> Result<Vec<f64>> {
    if theta_x.len() != h.x_len() {
        return Err(Error::DimensionMismatch { expected: h.x_len(), got: theta_x.len() });
    }
    Ok(h.target_of().iter().map(|&k| theta_x[k]).collect())
}

fn need<'a>(v: Option<&'a [f64]>, what: &str) -> Result<&'a [f64]> {
    v.ok_or_else(|| Error::InvalidArgument(format!("posterior form needs {what}")))
}

/// Posterior `∝ exp(−γ θ') p0'` on `target`, where `θ'` and `p0'` are each
/// native or transported along `h` as `form` says. On `X` the transports are
/// `h_*`; on `Z` they are `h^*`.
pub fn base_changed_posterior(
    target: Target,
    risk: Transport,
    prior: Transport,
    h: &BaseChangeMap,
    gamma: f64,
    inputs: &PosteriorInputs<'_>,
) -> Result<Vec<f64>> {
    match target {
        Target::X => {
            let theta: Vec<f64> = match risk {
                Transport::Native => need(inputs.theta_x, "theta on X")?.to_vec(),
                Transport::Transported => pushforward_risk(h, need(inputs.theta_z, "theta on Z")?)?
                    .into_iter()
                    .map(|t| t.unwrap_or(f64::INFINITY))
                    .collect(),
            };
            let p0: Vec<f64> = match prior {
                Transport::Native => need(inputs.prior_x, "prior on X")?.to_vec(),
                Transport::Transported => {
                    let pz = need(inputs.prior_z, "prior on Z")?;
                    if pz.len() != h.z_len() {
                        return Err(Error::DimensionMismatch { expected: h.z_len(), got: pz.len() });
                    }
                    let mut w = vec![0.0; h.x_len()];
                    for (j, &k) in h.target_of().iter().enumerate() {
                        w[k] += pz[j];
                    }
                    w
                }
            };
            gibbs_posterior_exact(&theta, &p0, gamma)
        }
        Target::Z => {
            let theta: Vec<f64> = match risk {
                Transport::Native => need(inputs.theta_z, "theta on Z")?.to_vec(),
                Transport::Transported => pullback_risk(h, need(inputs.theta_x, "theta on X")?)?,
            };
            let p0: Vec<f64> = match prior {
                Transport::Native => need(inputs.prior_z, "prior on Z")?.to_vec(),
                Transport::Transported => {
                    let px = need(inputs.prior_x, "prior on X")?;
                    if px.len() != h.x_len() {
                        return Err(Error::DimensionMismatch { expected: h.x_len(), got: px.len() });
                    }
                    let mut w = vec![0.0; h.z_len()];
                    for (k, &p) in px.iter().enumerate() {
                        let fiber = h.fiber(k);
                        if fiber.is_empty() && p > 0.0 {
                            return Err(Error::MissingFiber(k));
                        }
                        for &(j, fw) in fiber {
                            w[j] += p * fw;
                        }
                    }
                    w
                }
            };
            gibbs_posterior_exact(&theta, &p0, gamma)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opspace::{discrete_space, make_operator, uniform_space};
    use nalgebra::DMatrix;

    fn random_op(n: usize, rng: &mut ChaCha8Rng) -> ShiftOperator {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        make_operator((&a + a.transpose()) * 0.5).unwrap()
    }

    fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Signal {
        Signal::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn compaction_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let op = random_op(5, &mut rng);
        let u1 = Signal::from_vector(op.eigenvector(0));
        let un = Signal::from_vector(op.eigenvector(4));
        assert!(loss_spectral_compaction(&op, &u1, 1).unwrap() < 1e-7);
        assert!((loss_spectral_compaction(&op, &un, 4).unwrap() - 1.0).abs() < 1e-12);
        let f = random_signal(5, &mut rng);
        assert_eq!(loss_spectral_compaction(&op, &f, 5).unwrap(), 0.0);
        assert!(loss_spectral_compaction(&op, &Signal::zeros(5), 2).is_err());
    }

    #[test]
    fn zero_one_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let op = random_op(4, &mut rng);
        let f = Signal::from_vector(op.eigenvector(3) * 2.0);
        assert_eq!(loss_zero_one_detection(&op, &f, &[3], 1.0, 1.0), 0.0);
        assert_eq!(loss_zero_one_detection(&op, &f, &[3], 1.0, 0.0), 1.0);
        assert_eq!(loss_zero_one_detection(&op, &f, &[0, 1], 1.0, 0.0), 0.0);
    }

    #[test]
    fn risk_averages_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = discrete_space(vec![random_op(4, &mut rng), random_op(4, &mut rng)], &[0.5, 0.5]).unwrap();
        let data: Vec<Signal> = (0..3).map(|_| random_signal(4, &mut rng)).collect();
        let loss = LossSpec::SpectralCompaction { cutoff: 2 };
        let theta = empirical_risk(&s, &loss, &data, None).unwrap();
        for j in 0..2 {
            let want: f64 = data.iter().map(|f| loss_spectral_compaction(s.atom(j), f, 2).unwrap()).sum::<f64>() / 3.0;
            assert!((theta[j] - want).abs() < 1e-15);
        }
        assert!(empirical_risk(&s, &loss, &data, Some(&[0.0, 1.0, 0.0])).is_err());
        let zo = LossSpec::ZeroOneDetection { band: vec![3], thresholds: vec![0.1, 0.1] };
        assert!(empirical_risk(&s, &zo, &data, None).is_err());
        assert!(empirical_risk(&s, &zo, &data, Some(&[0.0, 1.0, 1.0])).is_ok());
    }

    #[test]
    fn exact_gibbs_closed_forms() {
        let g = 3.0;
        let w = gibbs_posterior_exact(&[0.0, 2f64.ln() / g], &[0.5, 0.5], g).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12 && (w[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(gibbs_posterior_exact(&[1.0, 7.0], &[0.2, 0.8], 0.0).unwrap(), vec![0.2, 0.8]);
        let w = gibbs_posterior_exact(&[0.0, 1.0], &[0.5, 0.5], 5.0).unwrap();
        assert!(w[0] >= 0.99);
        let shifted = gibbs_posterior_exact(&[1000.0, 1001.0], &[0.5, 0.5], 5.0).unwrap();
        assert!((shifted[0] - w[0]).abs() < 1e-12);
        assert!(matches!(gibbs_posterior_exact(&[1.0], &[0.0], 1.0), Err(Error::PosteriorUnderflow)));
    }

    #[test]
    fn voronoi_cells() {
        let w = voronoi_weights(&[0.1, 0.5, 0.6], (0.0, 1.0));
        let want = [0.3, 0.25, 0.45];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(nearest_node(&[0.0, 1.0], 0.5), 0);
    }

    #[test]
    fn reflection_stays_inside() {
        assert!((reflect(-0.2, (0.0, 1.0)) - 0.2).abs() < 1e-15);
        assert!((reflect(1.3, (0.0, 1.0)) - 0.7).abs() < 1e-15);
        assert!((reflect(2.5, (0.0, 1.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mh_is_reproducible_and_tracks_exact_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let op = random_op(3, &mut rng);
        let params = vec![0.25, 0.75];
        let s = uniform_space(vec![op.clone(), op]).unwrap().with_params(params.clone(), (0.0, 1.0)).unwrap();
        let theta = [0.0, 0.1];
        let config = GibbsConfig { gamma: 5.0, chain_length: 60_000, burn_in: 1000, thinning: 2, step_size: 0.3, chains: 2, seed: 9 };
        let a = metropolis_hastings(&s, nearest_node_theta(&params, &theta), |_| 1.0, &config).unwrap();
        let b = metropolis_hastings(&s, nearest_node_theta(&params, &theta), |_| 1.0, &config).unwrap();
        assert_eq!(a, b);
        let exact = gibbs_posterior_exact(&theta, &voronoi_weights(&params, (0.0, 1.0)), 5.0).unwrap();
        let se = (exact[0] * exact[1] / a.effective_sample_size).sqrt();
        assert!((a.weights[0] - exact[0]).abs() < 3.0 * se, "{:?} vs {:?}, se {se}", a.weights, exact);
        assert!(a.acceptance_rate > 0.5 && a.acceptance_rate <= 1.0);
    }

    #[test]
    fn base_changed_forms() {
        let h = BaseChangeMap::new(vec![0, 0, 1], 3).unwrap();
        let theta_z = [1.0, 3.0, 0.5];
        let prior_z = [0.2, 0.3, 0.5];
        let pushed = pushforward_risk(&h, &theta_z).unwrap();
        assert_eq!(pushed, vec![Some(2.0), Some(0.5), None]);
        let inputs = PosteriorInputs { theta_z: Some(&theta_z), prior_z: Some(&prior_z), ..Default::default() };
        let w = base_changed_posterior(Target::X, Transport::Transported, Transport::Transported, &h, 1.0, &inputs).unwrap();
        let a = 0.5 * (-2.0f64).exp();
        let b = 0.5 * (-0.5f64).exp();
        assert!((w[0] - a / (a + b)).abs() < 1e-12 && w[2] == 0.0);

        let id = BaseChangeMap::identity(3);
        let theta_x = [0.3, 0.1, 0.9];
        let prior_x = [0.5, 0.25, 0.25];
        let inputs = PosteriorInputs { theta_x: Some(&theta_x), prior_x: Some(&prior_x), theta_z: Some(&theta_x), prior_z: Some(&prior_x) };
        let direct = gibbs_posterior_exact(&theta_x, &prior_x, 2.0).unwrap();
        for target in [Target::X, Target::Z] {
            for risk in [Transport::Native, Transport::Transported] {
                for prior in [Transport::Native, Transport::Transported] {
                    let w = base_changed_posterior(target, risk, prior, &id, 2.0, &inputs).unwrap();
                    for (p, q) in w.iter().zip(&direct) {
                        assert!((p - q).abs() < 1e-15);
                    }
                }
            }
        }
        let inputs = PosteriorInputs { prior_x: Some(&prior_x), theta_z: Some(&theta_z), ..Default::default() };
        assert!(matches!(
            base_changed_posterior(Target::Z, Transport::Native, Transport::Transported, &h, 1.0, &inputs),
            Err(Error::MissingFiber(2))
        ));
    }

    #[test]
    fn anomaly_score_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = uniform_space(vec![random_op(4, &mut rng)]).unwrap();
        let f = Signal::from_vector(s.atom(0).eigenvector(3) * 2.0);
        assert!((anomaly_score(&s, &[3], &[1.0], &f).unwrap() - 1.0).abs() < 1e-12);
        assert!(anomaly_score(&s, &[3], &[4.0], &f).unwrap() < 0.0);
        let t = calibrate_threshold(s.atom(0), &[3], &[f.clone(), Signal::zeros(4)]).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }
}
