//! Kernel-weighted stratum-neighbourhood variance estimator.
//!
//! Each stratum's HT total is compared with an Epanechnikov-weighted average
//! of its neighbours' totals along the collapsing key; the squared residuals
//! are rescaled by the nonrandom constant `C_d`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{csum, Real};
use crate::strata::StratifiedSample;

/// How stratum keys enter the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyMode {
    /// Replace keys by `rank / H` after sorting.
    #[default]
    Rank,
    /// Use the stored keys.
    Raw,
}

impl FromStr for KeyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rank" => Ok(KeyMode::Rank),
            "raw" => Ok(KeyMode::Raw),
            other => Err(Error::InvalidParameter(format!("unknown key mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub bandwidth: f64,
    #[serde(default)]
    pub key_mode: KeyMode,
}

impl KernelConfig {
    pub fn new(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            key_mode: KeyMode::Rank,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be > 0, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }

    /// Whether `1/H < b < 2/H`, the smallest nonempty window on unit-spaced
    /// rank keys.
    pub fn in_guidance_band(&self, strata: usize) -> bool {
        let h = strata as f64;
        self.bandwidth > 1.0 / h && self.bandwidth < 2.0 / h
    }
}

/// `K(u) = 0.75 (1 - u²)` on `|u| <= 1`.
pub fn epanechnikov<T: Real>(u: T) -> T {
    if u.abs() <= T::one() {
        T::from_f64_lossy(0.75) * (T::one() - u * u)
    } else {
        T::zero()
    }
}

/// Keys as seen by the kernel.
pub fn standardize_keys<T: Real>(keys: &[T], mode: KeyMode) -> Vec<T> {
    match mode {
        KeyMode::Raw => keys.to_vec(),
        KeyMode::Rank => {
            let mut order: Vec<usize> = (0..keys.len()).collect();
            order.sort_by(|&a, &b| {
                keys[a]
                    .partial_cmp(&keys[b])
                    .expect("finite keys")
                    .then(a.cmp(&b))
            });
            let h = T::from_usize_lossy(keys.len());
            let mut out = vec![T::zero(); keys.len()];
            for (rank, &i) in order.iter().enumerate() {
                out[i] = T::from_usize_lossy(rank + 1) / h;
            }
            out
        }
    }
}

/// Row-stochastic matrix of kernel weights; `rows[h][l] = d_l(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights<T> {
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> KernelWeights<T> {
    /// `C_d = (1/H) Σ_h (1 - 2 d_h(h) + Σ_l d_l(h)²)`.
    pub fn normalizing_constant(&self) -> T {
        let h = T::from_usize_lossy(self.rows.len());
        csum(self.rows.iter().enumerate().map(|(i, row)| {
            let sq = csum(row.iter().map(|&d| d * d));
            T::one() - (T::one() + T::one()) * row[i] + sq
        })) / h
    }

    /// Residuals `t_h - Σ_l d_l(h) t_l`.
    pub fn residuals(&self, totals: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .zip(totals)
            .map(|(row, &t)| t - csum(row.iter().zip(totals).map(|(&d, &tl)| d * tl)))
            .collect()
    }
}

/// `d_l(h) = K((x_h - x_l)/b) / Σ_l K((x_h - x_l)/b)`.
pub fn kernel_weights<T: Real>(keys: &[T], bandwidth: T) -> Result<KernelWeights<T>> {
    if !(bandwidth > T::zero()) {
        return Err(Error::InvalidParameter("bandwidth must be positive".into()));
    }
    if keys.iter().any(|k| !k.is_finite()) {
        return Err(Error::InvalidParameter("kernel keys must be finite".into()));
    }
    let rows = keys
        .iter()
        .map(|&xh| {
            let raw: Vec<T> = keys
                .iter()
                .map(|&xl| epanechnikov((xh - xl) / bandwidth))
                .collect();
            // The self weight is K(0) = 0.75, so the sum is positive.
            let total = csum(raw.iter().copied());
            raw.into_iter().map(|k| k / total).collect()
        })
        .collect();
    Ok(KernelWeights { rows })
}

/// Kernel-weighted variance estimator of the HT mean. `keys` are the
/// stratum collapsing keys in sample order.
pub fn kernel_variance<T: Real>(
    sample: &StratifiedSample<T>,
    keys: &[T],
    cfg: &KernelConfig,
) -> Result<T> {
    cfg.validate()?;
    if keys.len() != sample.strata.len() {
        return Err(Error::InvalidParameter(format!(
            "{} keys for {} sampled strata",
            keys.len(),
            sample.strata.len()
        )));
    }
    if let Some(s) = sample.strata.iter().find(|s| s.size() == 0) {
        return Err(Error::NotEstimable(format!("stratum {} not sampled", s.stratum)));
    }
    let x = standardize_keys(keys, cfg.key_mode);
    let w = kernel_weights(&x, T::from_f64_lossy(cfg.bandwidth))?;
    let c_d = w.normalizing_constant();
    if c_d <= T::epsilon() * T::from_f64_lossy(16.0) {
        return Err(Error::NotAvailable("C_d = 0".into()));
    }
    let totals: Vec<T> = sample.strata.iter().map(|s| s.ht_total()).collect();
    let ss = csum(w.residuals(&totals).into_iter().map(|r| r * r));
    let n = T::from_usize_lossy(sample.population_total);
    Ok(ss / (n * n * c_d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strata::{Design, StratifiedPopulation};

    #[test]
    fn self_only_window() {
        let keys = [0.1, 0.2, 0.3, 0.4];
        let w = kernel_weights(&keys, 0.05).unwrap();
        for (h, row) in w.rows.iter().enumerate() {
            for (l, &d) in row.iter().enumerate() {
                assert_eq!(d, if h == l { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(w.normalizing_constant(), 0.0);
    }

    #[test]
    fn half_gap_weights() {
        // gap / b = 0.5: K = 0.75 * (1 - 0.25) = 0.5625
        assert_eq!(epanechnikov(0.5_f64), 0.5625);
        let w = kernel_weights(&[0.0_f64, 1.0, 2.0], 2.0).unwrap();
        let row = &w.rows[1];
        let total: f64 = 0.75 + 2.0 * 0.5625;
        assert!((row[1] - 0.75 / total).abs() < 1e-15);
        assert!((row[0] - 0.5625 / total).abs() < 1e-15);
        assert_eq!(row[0], row[2]);
    }

    #[test]
    fn weight_vanishes_at_bandwidth() {
        let w = kernel_weights(&[0.0, 0.5, 1.0], 0.5).unwrap();
        assert_eq!(w.rows[0][1], 0.0);
        assert_eq!(w.rows[1][0], 0.0);
    }

    #[test]
    fn rank_keys() {
        let x = standardize_keys(&[5.0, -1.0, 2.0, 2.0], KeyMode::Rank);
        assert_eq!(x, vec![1.0, 0.25, 0.5, 0.75]);
        assert_eq!(standardize_keys(&[5.0, -1.0], KeyMode::Raw), vec![5.0, -1.0]);
    }

    #[test]
    fn guidance_band() {
        assert!(KernelConfig::new(1.0 / 40.0).in_guidance_band(50));
        assert!(!KernelConfig::new(1.0 / 8.0).in_guidance_band(50));
    }

    #[test]
    fn narrow_window_is_not_available() {
        let p = StratifiedPopulation::from_groups(
            (0..6).map(|h| (h as f64, vec![h as f64, h as f64 + 1.0])),
        )
        .unwrap();
        let s = StratifiedSample::from_indices(&p, Design::Srswor, vec![vec![0]; 6]).unwrap();
        let err = kernel_variance(&s, &p.keys(), &KernelConfig::new(0.01)).unwrap_err();
        assert!(matches!(err, Error::NotAvailable(_)));
        let ok = kernel_variance(&s, &p.keys(), &KernelConfig::new(0.25)).unwrap();
        assert!(ok > 0.0);
    }
}
