//! Stratified finite populations, within-stratum sample selection and
//! Horvitz–Thompson estimation of the population mean and its variance.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{csum, mean_var, Real};

/// One stratum of a finite population.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum<T> {
    /// Dense integer id.
    pub id: usize,
    /// External label (the CSV stratum string).
    pub label: String,
    /// Collapsing index `x_h` used to order strata.
    pub key: T,
    /// Unit values `y_hj` in stored order.
    pub values: Vec<T>,
}

impl<T: Real> Stratum<T> {
    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> T {
        mean_var(&self.values).0
    }

    /// `S²_h` with the `(N_h - 1)` denominator; `None` when `N_h = 1`.
    pub fn variance(&self) -> Option<T> {
        mean_var(&self.values).1
    }

    pub fn total(&self) -> T {
        csum(self.values.iter().copied())
    }
}

/// Finite population partitioned into disjoint strata.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedPopulation<T> {
    strata: Vec<Stratum<T>>,
    total: usize,
}

impl<T: Real> StratifiedPopulation<T> {
    pub fn new(strata: Vec<Stratum<T>>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::InvalidParameter("population has no strata".into()));
        }
        let mut seen = HashSet::new();
        for s in &strata {
            if !seen.insert(s.id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate stratum id {}",
                    s.id
                )));
            }
            if s.values.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "stratum {} is empty",
                    s.label
                )));
            }
            if !s.key.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "stratum {} has a non-finite key",
                    s.label
                )));
            }
        }
        let total = strata.iter().map(|s| s.values.len()).sum();
        Ok(Self { strata, total })
    }

    /// Build from `(key, values)` pairs; ids are assigned densely and labels
    /// are the decimal ids.
    pub fn from_groups<I>(groups: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, Vec<T>)>,
    {
        let strata = groups
            .into_iter()
            .enumerate()
            .map(|(id, (key, values))| Stratum {
                id,
                label: id.to_string(),
                key,
                values,
            })
            .collect();
        Self::new(strata)
    }

    pub fn strata(&self) -> &[Stratum<T>] {
        &self.strata
    }

    /// Number of strata `H`.
    pub fn num_strata(&self) -> usize {
        self.strata.len()
    }

    /// Population size `N`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.strata.iter().map(Stratum::size).collect()
    }

    pub fn keys(&self) -> Vec<T> {
        self.strata.iter().map(|s| s.key).collect()
    }

    /// `W_h = N_h / N`.
    pub fn weights(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.total);
        self.strata
            .iter()
            .map(|s| T::from_usize_lossy(s.size()) / n)
            .collect()
    }

    /// Stratified population mean `Σ W_h ȳ_h`.
    pub fn mean(&self) -> T {
        let n = T::from_usize_lossy(self.total);
        csum(self.strata.iter().map(|s| s.total())) / n
    }

    /// `n_h = min(n, N_h)` for every stratum.
    pub fn capped_allocation(&self, n: usize) -> Vec<usize> {
        self.strata.iter().map(|s| n.min(s.size())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    /// Stratified simple random sampling without replacement.
    Srswor,
    /// Linear systematic selection with integer skip.
    Systematic,
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Design::Srswor => f.write_str("srswor"),
            Design::Systematic => f.write_str("systematic"),
        }
    }
}

impl std::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srswor" | "srs" => Ok(Design::Srswor),
            "systematic" | "sys" => Ok(Design::Systematic),
            other => Err(Error::InvalidParameter(format!("unknown design '{other}'"))),
        }
    }
}

/// Units drawn from one stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumSample<T> {
    /// Position of the stratum in the population.
    pub stratum: usize,
    /// `N_h`.
    pub population_size: usize,
    /// Zero-based positions of the drawn units within the stratum.
    pub indices: Vec<usize>,
    pub values: Vec<T>,
    /// First-order inclusion probability `π_j`, common to the stratum.
    pub inclusion: T,
    /// Joint inclusion probability `π_jk` for two distinct units
    /// (SRSWOR only).
    pub joint_inclusion: Option<T>,
}

impl<T: Real> StratumSample<T> {
    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn fraction(&self) -> T {
        T::from_usize_lossy(self.size()) / T::from_usize_lossy(self.population_size)
    }

    /// HT estimate of the stratum total `Σ y / π`.
    pub fn ht_total(&self) -> T {
        csum(self.values.iter().map(|&y| y / self.inclusion))
    }
}

/// A stratified sample together with its design metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSample<T> {
    pub design: Design,
    pub strata: Vec<StratumSample<T>>,
    /// Population size `N`.
    pub population_total: usize,
}

impl<T: Real> StratifiedSample<T> {
    /// Assemble a sample from explicit within-stratum positions. Inclusion
    /// probabilities follow the design's formulas for the given sizes.
    pub fn from_indices(
        pop: &StratifiedPopulation<T>,
        design: Design,
        indices: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if indices.len() != pop.num_strata() {
            return Err(Error::InvalidDesign(format!(
                "expected {} strata, got {}",
                pop.num_strata(),
                indices.len()
            )));
        }
        let parts = pop
            .strata()
            .iter()
            .zip(indices)
            .map(|(s, idx)| {
                check_size(s, idx.len())?;
                if let Some(&bad) = idx.iter().find(|&&j| j >= s.size()) {
                    return Err(Error::InvalidDesign(format!(
                        "unit {bad} out of range in stratum {}",
                        s.label
                    )));
                }
                let values = idx.iter().map(|&j| s.values[j]).collect();
                Ok((s.size(), idx, values))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(design, parts)
    }

    /// Assemble a sample from `(N_h, unit positions, values)` per stratum,
    /// without the rest of the population.
    pub fn from_parts(design: Design, parts: Vec<(usize, Vec<usize>, Vec<T>)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidDesign("sample has no strata".into()));
        }
        let mut population_total = 0;
        let strata = parts
            .into_iter()
            .enumerate()
            .map(|(h, (big_n, indices, values))| {
                let n = values.len();
                if n != indices.len() {
                    return Err(Error::InvalidDesign(format!(
                        "stratum {h}: {} positions for {n} values",
                        indices.len()
                    )));
                }
                if n < 1 || n > big_n {
                    return Err(Error::InvalidDesign(format!(
                        "stratum {h} has sample size {n} with N_h = {big_n}"
                    )));
                }
                population_total += big_n;
                let (inclusion, joint_inclusion) = match design {
                    Design::Srswor => {
                        let (p, pj) = srswor_probabilities::<T>(big_n, n);
                        (p, Some(pj))
                    }
                    Design::Systematic => (
                        T::from_usize_lossy(n) / T::from_usize_lossy(big_n),
                        None,
                    ),
                };
                Ok(StratumSample {
                    stratum: h,
                    population_size: big_n,
                    indices,
                    values,
                    inclusion,
                    joint_inclusion,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            design,
            strata,
            population_total,
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.strata.iter().map(StratumSample::size).collect()
    }
}

/// `(π_j, π_jk)` under SRSWOR of `n` from `N`.
pub fn srswor_probabilities<T: Real>(population: usize, n: usize) -> (T, T) {
    let big = T::from_usize_lossy(population);
    let small = T::from_usize_lossy(n);
    let pi = small / big;
    let joint = if n < 2 {
        T::zero()
    } else {
        small * (small - T::one()) / (big * (big - T::one()))
    };
    (pi, joint)
}

fn check_size<T>(s: &Stratum<T>, n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidDesign(format!(
            "stratum {} has sample size 0",
            s.label
        )));
    }
    if n > s.values.len() {
        return Err(Error::InvalidDesign(format!(
            "stratum {} has sample size {n} > N_h = {}",
            s.label,
            s.values.len()
        )));
    }
    Ok(())
}

fn check_allocation<T>(pop: &StratifiedPopulation<T>, n_h: &[usize]) -> Result<()> {
    if n_h.len() != pop.strata.len() {
        return Err(Error::InvalidDesign(format!(
            "allocation has {} entries for {} strata",
            n_h.len(),
            pop.strata.len()
        )));
    }
    pop.strata
        .iter()
        .zip(n_h)
        .try_for_each(|(s, &n)| check_size(s, n))
}

/// Stratified SRSWOR: an equiprobable size-`n_h` subset from every stratum.
pub fn draw_srswor<T: Real, R: Rng + ?Sized>(
    pop: &StratifiedPopulation<T>,
    n_h: &[usize],
    rng: &mut R,
) -> Result<StratifiedSample<T>> {
    check_allocation(pop, n_h)?;
    let indices = pop
        .strata
        .iter()
        .zip(n_h)
        .map(|(s, &n)| {
            let mut idx = index::sample(rng, s.size(), n).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect();
    StratifiedSample::from_indices(pop, Design::Srswor, indices)
}

/// Positions `start, start + k, ...` (zero-based) of a linear systematic
/// sample with skip `k = floor(N / n)`.
pub fn systematic_positions(population: usize, n: usize, start: usize) -> Vec<usize> {
    let k = population / n;
    (0..n).map(|i| start + i * k).collect()
}

/// Linear systematic sampling in stored unit order. The random start is
/// uniform on `0..k` with `k = floor(N_h / n_h)`; when `k * n_h < N_h` the
/// trailing units can never be selected.
pub fn draw_systematic<T: Real, R: Rng + ?Sized>(
    pop: &StratifiedPopulation<T>,
    n_h: &[usize],
    rng: &mut R,
) -> Result<StratifiedSample<T>> {
    check_allocation(pop, n_h)?;
    let indices = pop
        .strata
        .iter()
        .zip(n_h)
        .map(|(s, &n)| {
            let k = s.size() / n;
            let start = rng.random_range(0..k);
            systematic_positions(s.size(), n, start)
        })
        .collect();
    StratifiedSample::from_indices(pop, Design::Systematic, indices)
}

pub fn draw<T: Real, R: Rng + ?Sized>(
    pop: &StratifiedPopulation<T>,
    design: Design,
    n_h: &[usize],
    rng: &mut R,
) -> Result<StratifiedSample<T>> {
    match design {
        Design::Srswor => draw_srswor(pop, n_h, rng),
        Design::Systematic => draw_systematic(pop, n_h, rng),
    }
}

/// Horvitz–Thompson estimator of the population mean.
pub fn ht_mean<T: Real>(sample: &StratifiedSample<T>) -> Result<T> {
    if let Some(s) = sample.strata.iter().find(|s| s.inclusion <= T::zero()) {
        return Err(Error::DegenerateDesign(format!(
            "zero inclusion probability in stratum {}",
            s.stratum
        )));
    }
    let n = T::from_usize_lossy(sample.population_total);
    Ok(csum(sample.strata.iter().map(StratumSample::ht_total)) / n)
}

/// Unbiased HT variance estimator of [`ht_mean`] built from the `Δ_jk`
/// double sum. Needs `π_jk > 0`, so every stratum must have `n_h >= 2`
/// under SRSWOR.
pub fn ht_variance<T: Real>(sample: &StratifiedSample<T>) -> Result<T> {
    if sample.design != Design::Srswor {
        return Err(Error::NotEstimable(
            "joint inclusion probabilities vanish under systematic selection".into(),
        ));
    }
    let mut terms = Vec::new();
    for s in &sample.strata {
        let joint = s.joint_inclusion.unwrap_or_else(T::zero);
        if s.size() < 2 || joint <= T::zero() {
            return Err(Error::NotEstimable(format!(
                "stratum {} has n_h = {}; pi_jk = 0",
                s.stratum,
                s.size()
            )));
        }
        let pi = s.inclusion;
        let delta_off = T::one() - pi * pi / joint;
        let delta_diag = T::one() - pi;
        for (j, &yj) in s.values.iter().enumerate() {
            let wj = yj / pi;
            for (k, &yk) in s.values.iter().enumerate() {
                let delta = if j == k { delta_diag } else { delta_off };
                terms.push(delta * wj * (yk / pi));
            }
        }
    }
    let n = T::from_usize_lossy(sample.population_total);
    Ok(csum(terms) / (n * n))
}

/// Closed form of [`ht_variance`] under SRSWOR:
/// `(1/N²) Σ_h N_h² (1 - f_h) s²_h / n_h`.
pub fn ht_variance_srswor<T: Real>(sample: &StratifiedSample<T>) -> Result<T> {
    if sample.design != Design::Srswor {
        return Err(Error::NotEstimable(
            "closed form applies to SRSWOR only".into(),
        ));
    }
    let terms = sample
        .strata
        .iter()
        .map(|s| {
            let s2 = mean_var(&s.values).1.ok_or_else(|| {
                Error::NotEstimable(format!("stratum {} has n_h = 1", s.stratum))
            })?;
            let big = T::from_usize_lossy(s.population_size);
            Ok(big * big * (T::one() - s.fraction()) * s2 / T::from_usize_lossy(s.size()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = T::from_usize_lossy(sample.population_total);
    Ok(csum(terms) / (n * n))
}

/// Design variance of the stratified mean with the strata that could not
/// contribute.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignVariance<T> {
    pub value: T,
    /// Ids of strata with `N_h = 1`, whose `S²_h` is undefined and which
    /// contribute zero.
    pub singleton_strata: Vec<usize>,
}

/// `V(ȳ_st) = Σ_h W_h² (1 - f_h) S²_h / n_h`.
pub fn true_design_variance<T: Real>(
    pop: &StratifiedPopulation<T>,
    n_h: &[usize],
) -> Result<DesignVariance<T>> {
    check_allocation(pop, n_h)?;
    let mut singleton_strata = Vec::new();
    let total = T::from_usize_lossy(pop.total());
    let terms: Vec<T> = pop
        .strata
        .iter()
        .zip(n_h)
        .filter_map(|(s, &n)| match s.variance() {
            Some(s2) => {
                let w = T::from_usize_lossy(s.size()) / total;
                let f = T::from_usize_lossy(n) / T::from_usize_lossy(s.size());
                Some(w * w * (T::one() - f) * s2 / T::from_usize_lossy(n))
            }
            None => {
                singleton_strata.push(s.id);
                None
            }
        })
        .collect();
    Ok(DesignVariance {
        value: csum(terms),
        singleton_strata,
    })
}
