//! Empirical Bayes estimator under a Dirichlet process prior on the
//! pseudo-stratum distributions.
//!
//! The prior mass `M` is estimated from a one-way ANOVA over pseudo-strata
//! (`MSB`, `MSW`), and `μ₀`, `σ₀²` from `Λ`-weighted and `(n - 1)`-weighted
//! pools. When the clamp forces `M̂⁻¹ = 0` the estimator is unavailable.

use crate::collapse::{assemble_variance, PseudoStratum};
use crate::error::{Error, Result};
use crate::scalar::{csum, Real};

/// Plug-in hyperparameters and the ANOVA quantities behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct DpHyperEstimates<T> {
    /// `M̂⁻¹ >= 0`; zero means `M̂ = ∞`.
    pub m_inv: T,
    pub mu0: T,
    pub sigma0sq: T,
    pub msb: T,
    pub msw: T,
    pub g: T,
    /// Number of pseudo-strata used in place of `H`.
    pub groups: usize,
}

impl<T: Real> DpHyperEstimates<T> {
    /// `M̂`, infinite when the clamp is active.
    pub fn m_hat(&self) -> T {
        if self.m_inv > T::zero() {
            self.m_inv.recip()
        } else {
            T::infinity()
        }
    }
}

/// ANOVA-based estimate of `M̂⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MEstimate<T> {
    pub m_inv: T,
    pub msb: T,
    pub msw: T,
    pub g: T,
}

impl<T: Real> MEstimate<T> {
    pub fn m_hat(&self) -> T {
        if self.m_inv > T::zero() {
            self.m_inv.recip()
        } else {
            T::infinity()
        }
    }
}

/// `M̂⁻¹ = max{0, ((G-1) MSB / ((G-3) MSW) - 1) (G-1) / g}` with
/// `g = Σ n - Σ n² / Σ n`, over `G` pseudo-strata.
pub fn estimate_m<T: Real>(pseudo: &[PseudoStratum<T>]) -> Result<MEstimate<T>> {
    let groups = pseudo.len();
    if groups < 4 {
        return Err(Error::InsufficientGroups(format!(
            "need at least 4 pseudo-strata, got {groups}"
        )));
    }
    let n_total: usize = pseudo.iter().map(|p| p.n).sum();
    let sum_n = T::from_usize_lossy(n_total);
    let sum_n2 = csum(pseudo.iter().map(|p| {
        let n = T::from_usize_lossy(p.n);
        n * n
    }));
    let g = sum_n - sum_n2 / sum_n;

    let grand = csum(pseudo.iter().map(|p| T::from_usize_lossy(p.n) * p.mean)) / sum_n;
    let big_g = T::from_usize_lossy(groups);
    let one = T::one();
    let three = T::from_f64_lossy(3.0);
    let msb = csum(pseudo.iter().map(|p| {
        let d = p.mean - grand;
        T::from_usize_lossy(p.n) * d * d
    })) / (big_g - one);
    let msw = csum(
        pseudo
            .iter()
            .map(|p| T::from_usize_lossy(p.n - 1) * p.s2),
    ) / T::from_usize_lossy(n_total - groups);
    if !(msw > T::zero()) {
        return Err(Error::NotAvailable("MSW = 0".into()));
    }
    let ratio = (big_g - one) * msb / ((big_g - three) * msw);
    let m_inv = ((ratio - one) * (big_g - one) / g).max(T::zero());
    Ok(MEstimate { m_inv, msb, msw, g })
}

/// `Λ = M / (M + n)`, written in terms of `M⁻¹` so that `M = ∞` gives 1.
pub fn shrinkage<T: Real>(m_inv: T, n: usize) -> T {
    T::one() / (T::one() + T::from_usize_lossy(n) * m_inv)
}

/// `(μ̂₀, σ̂₀²)`.
pub fn estimate_mu0_sigma0<T: Real>(pseudo: &[PseudoStratum<T>], m_inv: T) -> Result<(T, T)> {
    if !(m_inv > T::zero()) {
        return Err(Error::NotAvailable("M_hat infinite".into()));
    }
    let weights: Vec<T> = pseudo
        .iter()
        .map(|p| T::one() - shrinkage(m_inv, p.n))
        .collect();
    let wsum = csum(weights.iter().copied());
    if !(wsum > T::zero()) {
        return Err(Error::NotAvailable("all shrinkage weights vanish".into()));
    }
    let mu0 = csum(weights.iter().zip(pseudo).map(|(&w, p)| w * p.mean)) / wsum;

    let dof: usize = pseudo.iter().map(|p| p.n - 1).sum();
    if dof == 0 {
        return Err(Error::NotAvailable("no within-group degrees of freedom".into()));
    }
    let pooled = csum(
        pseudo
            .iter()
            .map(|p| T::from_usize_lossy(p.n - 1) * p.s2),
    ) / T::from_usize_lossy(dof);
    // (M + 1) / M = 1 + M⁻¹
    let sigma0sq = (T::one() + m_inv) * pooled;
    Ok((mu0, sigma0sq))
}

/// All plug-in quantities for a set of pseudo-strata.
pub fn estimate_hyper<T: Real>(pseudo: &[PseudoStratum<T>]) -> Result<DpHyperEstimates<T>> {
    let m = estimate_m(pseudo)?;
    let (mu0, sigma0sq) = estimate_mu0_sigma0(pseudo, m.m_inv)?;
    Ok(DpHyperEstimates {
        m_inv: m.m_inv,
        mu0,
        sigma0sq,
        msb: m.msb,
        msw: m.msw,
        g: m.g,
        groups: pseudo.len(),
    })
}

/// Finite-population adjustments of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpcAdjustments<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub lambda: T,
}

pub fn fpc_adjustments<T: Real>(group: &PseudoStratum<T>, m_hat: T) -> Result<FpcAdjustments<T>> {
    if group.big_n < 2 {
        return Err(Error::DegenerateGroup {
            group: group.index,
            reason: "N_hl = 1".into(),
        });
    }
    if !m_hat.is_finite() || m_hat < T::zero() {
        return Err(Error::NotAvailable("M_hat infinite".into()));
    }
    let one = T::one();
    let n = T::from_usize_lossy(group.n);
    let big = T::from_usize_lossy(group.big_n);
    let fpc = one - group.fraction();
    let lambda = m_hat / (m_hat + n);
    let denom = big - one;
    Ok(FpcAdjustments {
        alpha: fpc * (big - lambda) / denom,
        beta: (m_hat + n + one) / denom + fpc * (one + (one - lambda) / denom),
        gamma: fpc * (m_hat + big) / denom,
        lambda,
    })
}

/// Empirical Bayes estimate `ϱ̂` of one group's variance.
pub fn nb_rho<T: Real>(group: &PseudoStratum<T>, hyper: &DpHyperEstimates<T>) -> Result<T> {
    let m_hat = hyper.m_hat();
    let adj = fpc_adjustments(group, m_hat)?;
    let one = T::one();
    let n = T::from_usize_lossy(group.n);
    let lam = adj.lambda;
    let d = group.mean - hyper.mu0;
    let braces = lam * adj.alpha * hyper.sigma0sq
        + (one - lam) * adj.beta * ((n - one) / n) * group.s2
        + lam * (one - lam) * adj.gamma * d * d;
    Ok((m_hat + n) / (m_hat + n + one) * braces)
}

/// Result of the Dirichlet-process estimator with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletEstimate<T> {
    pub variance: T,
    pub rho: Vec<T>,
    pub hyper: DpHyperEstimates<T>,
}

/// Empirical Bayes nonparametric variance estimator of the HT mean.
pub fn nb_variance<T: Real>(
    pseudo: &[PseudoStratum<T>],
    total: usize,
) -> Result<DirichletEstimate<T>> {
    let hyper = estimate_hyper(pseudo)?;
    let rho = pseudo
        .iter()
        .map(|p| nb_rho(p, &hyper))
        .collect::<Result<Vec<_>>>()?;
    Ok(DirichletEstimate {
        variance: assemble_variance(pseudo, &rho, total),
        rho,
        hyper,
    })
}
