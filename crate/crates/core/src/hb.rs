//! Hierarchical Bayes estimator of pseudo-stratum variances.
//!
//! Model, per pseudo-stratum `g` with `L_g` member strata:
//!
//! * `log s²_g | S²_g, σ² ~ N(log S²_g, σ²)`
//! * `S²_g ~ Half-t(L_g + 1, d)`
//! * `σ⁻² ~ Gamma(L_g, ζ)`
//!
//! `S²_g` is updated by an independence Metropolis–Hastings step with
//! candidate `LogNormal(log s²_g, σ²)`, and `σ²` by an exact inverse-gamma
//! Gibbs draw. The variance estimate plugs posterior means of `S²_g` into
//! the collapsed-strata form.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collapse::{assemble_variance, PseudoStratum};
use crate::error::{Error, Result};
use crate::io::fmt_sig6;
use crate::scalar::{csum, Real};

/// Starting values of `σ²` for successive chains.
pub const SIGMA2_STARTS: [f64; 4] = [1.0, 0.25, 4.0, 16.0];

/// Prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbHyperParams {
    /// Half-t scale `d`.
    pub d: f64,
    /// `ζ = n_hl` while `n_hl <= τ`, otherwise 1.
    #[serde(default = "default_zeta_threshold")]
    pub zeta_threshold: usize,
    /// Hold `σ²` at this value instead of sampling it.
    #[serde(default)]
    pub fixed_sigma2: Option<f64>,
}

fn default_zeta_threshold() -> usize {
    8
}

impl HbHyperParams {
    pub fn new(d: f64) -> Self {
        Self {
            d,
            zeta_threshold: default_zeta_threshold(),
            fixed_sigma2: None,
        }
    }

    pub fn zeta(&self, n: usize) -> f64 {
        if n <= self.zeta_threshold {
            n as f64
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParameter(format!("d must be > 0, got {}", self.d)));
        }
        if let Some(s) = self.fixed_sigma2 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed sigma2 must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Run length, burn-in, thinning and number of chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 200_000,
            burn_in: 2000,
            thin: 200,
            chains: 4,
        }
    }
}

impl McmcConfig {
    /// 25,000 iterations, 500 burn-in, thinning 100, one chain.
    pub fn reduced() -> Self {
        Self {
            iterations: 25_000,
            burn_in: 500,
            thin: 100,
            chains: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin < 1 || self.chains < 1 {
            return Err(Error::InvalidParameter("thin and chains must be >= 1".into()));
        }
        Ok(())
    }

    /// Draws kept per chain.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// `log {1 + (S²/d)² / (L + 1)}^{-(L + 2)/2}`.
#[inline]
pub fn half_t_log_kernel<T: Real>(s2: T, members: usize, d: T) -> T {
    let l = T::from_usize_lossy(members);
    let one = T::one();
    let two = one + one;
    let r = s2 / d;
    -(l + two) / two * (r * r / (l + one)).ln_1p()
}

/// Log density of `LogNormal(mu, sigma2)` at `x`.
#[inline]
pub fn log_normal_density<T: Real>(x: T, mu: T, sigma2: T) -> T {
    let two = T::one() + T::one();
    let lx = x.ln();
    let z = lx - mu;
    -lx - (two * T::from_f64_lossy(std::f64::consts::PI) * sigma2).ln() / two - z * z / (two * sigma2)
}

/// Unnormalized log of the full conditional of `S²_g`:
/// `log S² + log LogNormal(S²; log s², σ²) + log Half-t(S²; L_g + 1, d)`.
pub fn log_target_s2<T: Real>(s2: T, s2_obs: T, sigma2: T, members: usize, d: T) -> Result<T> {
    for (name, v) in [("S2", s2), ("s2", s2_obs), ("sigma2", sigma2), ("d", d)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(s2.ln() + log_normal_density(s2, s2_obs.ln(), sigma2) + half_t_log_kernel(s2, members, d))
}

/// MH log acceptance ratio
/// `log π(S*) + log q(S_t) - log π(S_t) - log q(S*)` with the independence
/// candidate `q = LogNormal(log s², σ²)`, evaluated term by term.
pub fn acceptance_log_ratio<T: Real>(
    current: T,
    candidate: T,
    s2_obs: T,
    sigma2: T,
    members: usize,
    d: T,
) -> Result<T> {
    let mu = s2_obs.ln();
    Ok(log_target_s2(candidate, s2_obs, sigma2, members, d)?
        + log_normal_density(current, mu, sigma2)
        - log_target_s2(current, s2_obs, sigma2, members, d)?
        - log_normal_density(candidate, mu, sigma2))
}

/// Fixed data of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct HbModel<T> {
    /// `log s²_g`.
    pub log_s2: Vec<T>,
    /// `L_g`.
    pub members: Vec<usize>,
    /// Shape of the `σ²` conditional: `G/2 + max L_g`.
    pub shape: T,
    pub zeta: T,
    pub d: T,
    pub fixed_sigma2: Option<T>,
}

impl<T: Real> HbModel<T> {
    pub fn new(pseudo: &[PseudoStratum<T>], hp: &HbHyperParams) -> Result<Self> {
        hp.validate()?;
        if pseudo.is_empty() {
            return Err(Error::InvalidParameter("no pseudo-strata".into()));
        }
        if let Some(p) = pseudo.iter().find(|p| !(p.s2 > T::zero())) {
            return Err(Error::ZeroVariancePseudoStratum { group: p.index });
        }
        let members: Vec<usize> = pseudo.iter().map(PseudoStratum::num_members).collect();
        let max_l = *members.iter().max().expect("non-empty");
        let max_n = pseudo.iter().map(|p| p.n).max().expect("non-empty");
        let half = T::from_f64_lossy(0.5);
        Ok(Self {
            log_s2: pseudo.iter().map(|p| p.s2.ln()).collect(),
            shape: T::from_usize_lossy(pseudo.len()) * half + T::from_usize_lossy(max_l),
            zeta: T::from_f64_lossy(hp.zeta(max_n)),
            d: T::from_f64_lossy(hp.d),
            fixed_sigma2: hp.fixed_sigma2.map(T::from_f64_lossy),
            members,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.log_s2.len()
    }

    /// `(shape, rate)` of the inverse-gamma conditional of `σ²`.
    pub fn sigma2_conditional(&self, s2: &[T]) -> (T, T) {
        let logs: Vec<T> = s2.iter().map(|v| v.ln()).collect();
        self.sigma2_conditional_log(&logs)
    }

    fn sigma2_conditional_log(&self, log_s2: &[T]) -> (T, T) {
        let half = T::from_f64_lossy(0.5);
        let ss = csum(self.log_s2.iter().zip(log_s2).map(|(&a, &b)| {
            let r = a - b;
            r * r
        }));
        (self.shape, self.zeta + half * ss)
    }
}

/// Current point of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct HbChainState<T> {
    pub s2: Vec<T>,
    pub sigma2: T,
    pub iteration: usize,
    pub accepted: Vec<u64>,
    pub proposed: u64,
    log_s2: Vec<T>,
    half_t: Vec<T>,
}

impl<T: Real> HbChainState<T> {
    pub fn new(model: &HbModel<T>, s2: Vec<T>, sigma2: T) -> Result<Self> {
        if s2.len() != model.num_groups() || s2.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::Domain("initial S2 must be positive, one per group".into()));
        }
        if !(sigma2 > T::zero()) {
            return Err(Error::Domain("initial sigma2 must be positive".into()));
        }
        let log_s2 = s2.iter().map(|v| v.ln()).collect();
        let half_t = s2
            .iter()
            .zip(&model.members)
            .map(|(&v, &l)| half_t_log_kernel(v, l, model.d))
            .collect();
        Ok(Self {
            accepted: vec![0; s2.len()],
            s2,
            sigma2,
            iteration: 0,
            proposed: 0,
            log_s2,
            half_t,
        })
    }

    /// Step-2 initialization: every `S²_g` drawn from its candidate
    /// distribution at `σ² = sigma2`.
    pub fn from_candidate<R: Rng + ?Sized>(
        model: &HbModel<T>,
        sigma2: T,
        rng: &mut R,
    ) -> Result<Self> {
        let sd = sigma2.sqrt();
        let s2 = model
            .log_s2
            .iter()
            .map(|&m| (m + sd * T::std_normal(rng)).exp())
            .collect();
        Self::new(model, s2, sigma2)
    }

    pub fn acceptance_rates(&self) -> Vec<T> {
        let p = T::from_f64_lossy(self.proposed.max(1) as f64);
        self.accepted
            .iter()
            .map(|&a| T::from_f64_lossy(a as f64) / p)
            .collect()
    }
}

/// Draw `σ²` from its inverse-gamma full conditional and store it.
pub fn gibbs_step_sigma2<T: Real, R: Rng + ?Sized>(
    state: &mut HbChainState<T>,
    model: &HbModel<T>,
    rng: &mut R,
) -> T {
    let (shape, rate) = model.sigma2_conditional_log(&state.log_s2);
    let precision = T::sample_gamma(shape, rate.recip(), rng);
    state.sigma2 = precision.recip();
    state.sigma2
}

/// One independence MH update of `S²_g`. Returns whether the candidate was
/// accepted.
///
/// With candidate and target sharing the log-normal factor, the acceptance
/// ratio reduces to `log(S*/S_t) + log Half-t(S*) - log Half-t(S_t)`; see
/// [`acceptance_log_ratio`] for the unreduced form.
pub fn mh_step_s2<T: Real, R: Rng + ?Sized>(
    state: &mut HbChainState<T>,
    model: &HbModel<T>,
    g: usize,
    rng: &mut R,
) -> bool {
    let log_cand = model.log_s2[g] + state.sigma2.sqrt() * T::std_normal(rng);
    let cand = log_cand.exp();
    let ht_cand = half_t_log_kernel(cand, model.members[g], model.d);
    let rho = log_cand - state.log_s2[g] + ht_cand - state.half_t[g];
    let u = T::open01(rng);
    let accept = u.ln() < rho && cand > T::zero() && cand.is_finite();
    if accept {
        state.s2[g] = cand;
        state.log_s2[g] = log_cand;
        state.half_t[g] = ht_cand;
        state.accepted[g] += 1;
    }
    accept
}

/// A retained (post burn-in, thinned) draw.
#[derive(Debug, Clone, PartialEq)]
pub struct RetainedDraw<T> {
    pub iteration: usize,
    pub s2: Vec<T>,
    pub sigma2: T,
    pub accepted: Vec<bool>,
}

/// Output of a single chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput<T> {
    pub draws: Vec<RetainedDraw<T>>,
    pub acceptance: Vec<T>,
}

impl<T: Real> ChainOutput<T> {
    /// Retained draws of group `g`.
    pub fn group_draws(&self, g: usize) -> Vec<T> {
        self.draws.iter().map(|d| d.s2[g]).collect()
    }

    pub fn means(&self) -> Vec<T> {
        let groups = self.draws.first().map_or(0, |d| d.s2.len());
        (0..groups)
            .map(|g| csum(self.draws.iter().map(|d| d.s2[g])) / T::from_usize_lossy(self.draws.len()))
            .collect()
    }
}

/// Run one chain of the MH-within-Gibbs sampler from a step-2
/// initialization at `σ² = sigma2_start`.
pub fn run_chain<T: Real, R: Rng + ?Sized>(
    model: &HbModel<T>,
    cfg: &McmcConfig,
    sigma2_start: T,
    rng: &mut R,
) -> Result<ChainOutput<T>> {
    cfg.validate()?;
    let start = model.fixed_sigma2.unwrap_or(sigma2_start);
    let mut state = HbChainState::from_candidate(model, start, rng)?;
    let groups = model.num_groups();
    let mut draws = Vec::with_capacity(cfg.retained());
    let mut flags = vec![false; groups];
    for t in 1..=cfg.iterations {
        for (g, flag) in flags.iter_mut().enumerate() {
            *flag = mh_step_s2(&mut state, model, g, rng);
        }
        state.proposed += 1;
        if model.fixed_sigma2.is_none() {
            gibbs_step_sigma2(&mut state, model, rng);
        }
        state.iteration = t;
        if t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            draws.push(RetainedDraw {
                iteration: t,
                s2: state.s2.clone(),
                sigma2: state.sigma2,
                accepted: flags.clone(),
            });
        }
    }
    Ok(ChainOutput {
        acceptance: state.acceptance_rates(),
        draws,
    })
}

/// Posterior summaries pooled over chains.
#[derive(Debug, Clone, PartialEq)]
pub struct HbPosterior<T> {
    /// Posterior mean `ϱ̂_g` of every `S²_g`.
    pub means: Vec<T>,
    /// Batch-means standard error of each pooled mean, when every chain
    /// kept enough draws.
    pub se: Option<Vec<T>>,
    /// Acceptance rate per group, averaged over chains.
    pub acceptance: Vec<T>,
    pub chains: Vec<ChainOutput<T>>,
}

impl<T: Real> HbPosterior<T> {
    pub fn chain_means(&self) -> Vec<Vec<T>> {
        self.chains.iter().map(ChainOutput::means).collect()
    }

    /// Per-chain batch-means SE of every group's mean.
    pub fn chain_se(&self) -> Result<Vec<Vec<T>>> {
        self.chains
            .iter()
            .map(|c| {
                (0..self.means.len())
                    .map(|g| mcmc_se(&c.group_draws(g)))
                    .collect()
            })
            .collect()
    }

    /// Trace CSV: `chain,iteration,group,S2,sigma2,accepted`.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["chain", "iteration", "group", "S2", "sigma2", "accepted"])?;
        for (c, chain) in self.chains.iter().enumerate() {
            for d in &chain.draws {
                for (g, (&s2, &acc)) in d.s2.iter().zip(&d.accepted).enumerate() {
                    wtr.write_record([
                        c.to_string(),
                        d.iteration.to_string(),
                        g.to_string(),
                        fmt_sig6(s2.to_f64_lossy()),
                        fmt_sig6(d.sigma2.to_f64_lossy()),
                        u8::from(acc).to_string(),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Run `cfg.chains` chains for the given pseudo-strata. Chain `c` uses
/// stream `c` of a ChaCha8 generator seeded with `seed` and starts from
/// `σ² = SIGMA2_STARTS[c % 4]`.
pub fn run_hb_chain<T: Real>(
    pseudo: &[PseudoStratum<T>],
    hp: &HbHyperParams,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<HbPosterior<T>> {
    let model = HbModel::new(pseudo, hp)?;
    let chains = (0..cfg.chains)
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let start = T::from_f64_lossy(SIGMA2_STARTS[c % SIGMA2_STARTS.len()]);
            run_chain(&model, cfg, start, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(chains)
}

fn summarize<T: Real>(chains: Vec<ChainOutput<T>>) -> Result<HbPosterior<T>> {
    let groups = chains
        .first()
        .and_then(|c| c.draws.first())
        .map(|d| d.s2.len())
        .ok_or_else(|| Error::Diagnostics("no retained draws".into()))?;
    let total_draws: usize = chains.iter().map(|c| c.draws.len()).sum();
    let means = (0..groups)
        .map(|g| {
            csum(chains.iter().flat_map(|c| c.draws.iter().map(move |d| d.s2[g])))
                / T::from_usize_lossy(total_draws)
        })
        .collect();
    let k = T::from_usize_lossy(chains.len());
    let acceptance = (0..groups)
        .map(|g| csum(chains.iter().map(|c| c.acceptance[g])) / k)
        .collect();
    let se = (0..groups)
        .map(|g| {
            let var = chains
                .iter()
                .map(|c| mcmc_se(&c.group_draws(g)).map(|s| s * s))
                .collect::<Result<Vec<T>>>()?;
            Ok(csum(var).sqrt() / k)
        })
        .collect::<Result<Vec<T>>>()
        .ok();
    Ok(HbPosterior {
        means,
        se,
        acceptance,
        chains,
    })
}

/// Hierarchical Bayes variance estimator of the HT mean.
pub fn hb_variance<T: Real>(
    posterior: &HbPosterior<T>,
    pseudo: &[PseudoStratum<T>],
    total: usize,
) -> T {
    assemble_variance(pseudo, &posterior.means, total)
}

/// Minimum number of draws accepted by [`mcmc_se`].
pub const MIN_SE_DRAWS: usize = 50;

/// Batch-means standard error of the mean of a chain, with about `√n`
/// batches of equal length (leading draws that do not fill a batch are
/// dropped).
pub fn mcmc_se<T: Real>(draws: &[T]) -> Result<T> {
    let n = draws.len();
    if n < MIN_SE_DRAWS {
        return Err(Error::Diagnostics(format!(
            "need at least {MIN_SE_DRAWS} draws, got {n}"
        )));
    }
    let batches = ((n as f64).sqrt().floor() as usize).max(2);
    let size = n / batches;
    let used = &draws[n - batches * size..];
    let batch_means: Vec<T> = used
        .chunks(size)
        .map(|c| csum(c.iter().copied()) / T::from_usize_lossy(size))
        .collect();
    let grand = csum(batch_means.iter().copied()) / T::from_usize_lossy(batches);
    let ss = csum(batch_means.iter().map(|&m| (m - grand) * (m - grand)));
    let var_batch = ss / T::from_usize_lossy(batches - 1);
    // Var(mean) = size * var_batch / used_len = var_batch / batches
    Ok((var_batch / T::from_usize_lossy(batches)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pseudo(s2: &[f64]) -> Vec<PseudoStratum<f64>> {
        s2.iter()
            .enumerate()
            .map(|(g, &s2)| PseudoStratum {
                index: g,
                members: vec![2 * g, 2 * g + 1],
                n: 2,
                big_n: 120,
                mean: 0.0,
                s2,
            })
            .collect()
    }

    #[test]
    fn half_t_kernel_is_zero_at_origin() {
        assert_eq!(half_t_log_kernel(0.0_f64, 2, 1.0), 0.0);
    }

    #[test]
    fn sigma2_shape_for_fifty_strata() {
        let p = pseudo(&vec![1.0; 25]);
        let m = HbModel::new(&p, &HbHyperParams::new(1.0)).unwrap();
        assert_eq!(m.shape, 14.5);
        assert_eq!(m.zeta, 2.0);
        let (_, rate) = m.sigma2_conditional(&vec![1.0; 25]);
        assert_eq!(rate, 2.0);
    }

    #[test]
    fn zeta_threshold() {
        let hp = HbHyperParams::new(1.0);
        assert_eq!(hp.zeta(2), 2.0);
        assert_eq!(hp.zeta(8), 8.0);
        assert_eq!(hp.zeta(10), 1.0);
    }

    #[test]
    fn zero_variance_group_is_rejected() {
        let p = pseudo(&[1.0, 0.0, 2.0]);
        assert!(matches!(
            HbModel::new(&p, &HbHyperParams::new(1.0)),
            Err(Error::ZeroVariancePseudoStratum { group: 1 })
        ));
    }

    #[test]
    fn log_target_rejects_nonpositive() {
        assert!(matches!(log_target_s2(0.0, 1.0, 1.0, 2, 1.0), Err(Error::Domain(_))));
        assert!(matches!(log_target_s2(1.0, 1.0, -1.0, 2, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn equal_candidate_has_zero_log_ratio() {
        let r = acceptance_log_ratio(0.7, 0.7, 1.3, 2.0, 2, 0.5).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn mcmc_se_edge_cases() {
        assert_eq!(mcmc_se(&[3.0_f64; 100]).unwrap(), 0.0);
        assert!(matches!(mcmc_se(&[1.0_f64; 49]), Err(Error::Diagnostics(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = McmcConfig::reduced();
        assert_eq!(c.retained(), 245);
        assert_eq!(McmcConfig::default().retained(), 990);
        c.burn_in = c.iterations;
        assert!(c.validate().is_err());
    }

    #[test]
    fn chains_are_reproducible() {
        let p = pseudo(&[0.5, 1.5, 0.2, 3.0]);
        let cfg = McmcConfig {
            iterations: 3000,
            burn_in: 100,
            thin: 10,
            chains: 2,
        };
        let hp = HbHyperParams::new(1.0);
        let a = run_hb_chain(&p, &hp, &cfg, 9).unwrap();
        let b = run_hb_chain(&p, &hp, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.means.iter().all(|&m| m > 0.0));
        assert_eq!(a.chains[0].draws.len(), 290);
        let c = run_hb_chain(&p, &hp, &cfg, 10).unwrap();
        assert_ne!(a.means, c.means);
    }

    #[test]
    fn trace_rows() {
        let p = pseudo(&[0.5, 1.5]);
        let cfg = McmcConfig {
            iterations: 30,
            burn_in: 10,
            thin: 10,
            chains: 1,
        };
        let post = run_hb_chain(&p, &HbHyperParams::new(1.0), &cfg, 1).unwrap();
        let mut buf = Vec::new();
        post.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "chain,iteration,group,S2,sigma2,accepted");
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert!(lines[1].starts_with("0,20,0,"));
    }

    #[test]
    fn f32_chain_runs() {
        let p: Vec<PseudoStratum<f32>> = vec![
            PseudoStratum { index: 0, members: vec![0, 1], n: 2, big_n: 10, mean: 0.0, s2: 0.5 },
            PseudoStratum { index: 1, members: vec![2, 3], n: 2, big_n: 10, mean: 0.0, s2: 2.0 },
        ];
        let cfg = McmcConfig { iterations: 2000, burn_in: 100, thin: 10, chains: 1 };
        let post = run_hb_chain(&p, &HbHyperParams::new(1.0), &cfg, 3).unwrap();
        assert!(post.means.iter().all(|m| m.is_finite() && *m > 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = HbModel::new(&p, &HbHyperParams::new(1.0)).unwrap();
        let mut st = HbChainState::from_candidate(&model, 1.0, &mut rng).unwrap();
        let s = gibbs_step_sigma2(&mut st, &model, &mut rng);
        assert!(s > 0.0);
    }
}
