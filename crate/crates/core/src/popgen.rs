//! Synthetic populations: the seven-scenario Gaussian super-population and
//! the gamma (HMT) population stratified on equal totals of `x`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::strata::{StratifiedPopulation, Stratum};

/// Points used to locate the extrema of a mean function on `[0, 1]`.
pub const NORMALIZATION_GRID: usize = 100_000;

/// Shape of the stratum mean function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Line,
    Quad,
    Bump,
    Jump,
    Expo,
    Cycle1,
    Cycle4,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Line,
        Scenario::Quad,
        Scenario::Bump,
        Scenario::Jump,
        Scenario::Expo,
        Scenario::Cycle1,
        Scenario::Cycle4,
    ];

    /// The raw (unnormalized) function `g(x)`.
    pub fn raw(self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            Scenario::Line => 1.0 + 2.0 * (x - 0.5),
            Scenario::Quad => 1.0 + 2.0 * (x - 0.5).powi(2),
            Scenario::Bump => 1.0 + 2.0 * (x - 0.5) + (-200.0 * (x - 0.5).powi(2)).exp(),
            Scenario::Jump => {
                if x <= 0.65 {
                    1.0 + 2.0 * (x - 0.5)
                } else {
                    0.65
                }
            }
            Scenario::Expo => (-8.0 * x).exp(),
            Scenario::Cycle1 => 2.0 + (2.0 * PI * x).sin(),
            Scenario::Cycle4 => 2.0 + (8.0 * PI * x).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Line => "line",
            Scenario::Quad => "quad",
            Scenario::Bump => "bump",
            Scenario::Jump => "jump",
            Scenario::Expo => "expo",
            Scenario::Cycle1 => "cycle1",
            Scenario::Cycle4 => "cycle4",
        }
    }

    /// Mean function rescaled to span `[0, 2]` on the unit interval.
    pub fn mean_function(self) -> MeanFunction {
        MeanFunction::new(self)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario '{s}'")))
    }
}

/// `m*(x) = 2 (g(x) - min g) / (max g - min g)` with the extrema taken over a
/// dense grid.
#[derive(Debug, Clone, Copy)]
pub struct MeanFunction {
    scenario: Scenario,
    min: f64,
    max: f64,
}

impl MeanFunction {
    pub fn new(scenario: Scenario) -> Self {
        let (min, max) = (0..=NORMALIZATION_GRID)
            .map(|i| scenario.raw(i as f64 / NORMALIZATION_GRID as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| {
                (lo.min(g), hi.max(g))
            });
        Self { scenario, min, max }
    }

    pub fn eval(&self, x: f64) -> f64 {
        2.0 * (self.scenario.raw(x) - self.min) / (self.max - self.min)
    }
}

/// Gaussian super-population: `H` strata of `N_h` units with
/// `y = m*(x_h) + e`, `e ~ N(0, φ²)` and `x_h = h / H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianScenario {
    pub scenario: Scenario,
    pub phi: f64,
    pub strata: usize,
    pub stratum_size: usize,
}

impl GaussianScenario {
    pub fn new(scenario: Scenario, phi: f64, strata: usize) -> Self {
        Self {
            scenario,
            phi,
            strata,
            stratum_size: 60,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(Error::InvalidParameter(format!("phi must be > 0, got {}", self.phi)));
        }
        if self.strata < 1 || self.stratum_size < 1 {
            return Err(Error::InvalidParameter(
                "strata and stratum size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Generate a Gaussian-scenario population. The noise stream does not depend
/// on the scenario, so one seed yields the seven survey variables of a
/// single population.
pub fn gen_gaussian<T: Real, R: Rng + ?Sized>(
    sc: &GaussianScenario,
    rng: &mut R,
) -> Result<StratifiedPopulation<T>> {
    sc.validate()?;
    let m = sc.scenario.mean_function();
    let phi = T::from_f64_lossy(sc.phi);
    let groups = (1..=sc.strata).map(|h| {
        let x = h as f64 / sc.strata as f64;
        let mean = T::from_f64_lossy(m.eval(x));
        let values = (0..sc.stratum_size)
            .map(|_| mean + phi * T::std_normal(rng))
            .collect();
        (T::from_f64_lossy(x), values)
    });
    StratifiedPopulation::from_groups(groups)
}

/// Parameters of the gamma population with `E(y | x) = α + βx` and
/// `V(y | x) = σ² x^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmtConfig {
    pub size: usize,
    pub strata: usize,
    pub x_shape: f64,
    pub x_scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma2: f64,
}

impl Default for HmtConfig {
    fn default() -> Self {
        Self {
            size: 2000,
            strata: 20,
            x_shape: 2.0,
            x_scale: 5.0,
            alpha: 1.0,
            beta: 2.0,
            sigma2: 10.0,
        }
    }
}

impl HmtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strata < 2 || self.size < self.strata {
            return Err(Error::InvalidParameter(format!(
                "need N >= H >= 2, got N = {}, H = {}",
                self.size, self.strata
            )));
        }
        for (name, v) in [
            ("x_shape", self.x_shape),
            ("x_scale", self.x_scale),
            ("sigma2", self.sigma2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Gamma `(shape, scale)` of `y | x` from its mean and variance.
    pub fn y_gamma(&self, x: f64) -> Result<(f64, f64)> {
        let mean = self.alpha + self.beta * x;
        let var = self.sigma2 * x.powf(1.5);
        if !(mean > 0.0) || !(var > 0.0) || !mean.is_finite() || !var.is_finite() {
            return Err(Error::Generation(format!(
                "infeasible gamma parameters at x = {x}: mean {mean}, variance {var}"
            )));
        }
        Ok((mean * mean / var, var / mean))
    }
}

/// Units of a gamma population before stratification.
#[derive(Debug, Clone, PartialEq)]
pub struct HmtUnits {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Draw `N` units with gamma `x` and gamma `y | x`.
pub fn gen_hmt_units<R: Rng + ?Sized>(cfg: &HmtConfig, rng: &mut R) -> Result<HmtUnits> {
    cfg.validate()?;
    let mut x = Vec::with_capacity(cfg.size);
    let mut y = Vec::with_capacity(cfg.size);
    for _ in 0..cfg.size {
        let xi = f64::sample_gamma(cfg.x_shape, cfg.x_scale, rng);
        let (shape, scale) = cfg.y_gamma(xi)?;
        x.push(xi);
        y.push(f64::sample_gamma(shape, scale, rng));
    }
    Ok(HmtUnits { x, y })
}

/// Generate the gamma population. Units are sorted by `x` and cut into `H`
/// strata with approximately equal totals of `x`; each stratum's key is
/// `log Σ x_hj` and strata are returned in ascending key order.
pub fn gen_hmt<T: Real, R: Rng + ?Sized>(
    cfg: &HmtConfig,
    rng: &mut R,
) -> Result<StratifiedPopulation<T>> {
    let units = gen_hmt_units(cfg, rng)?;
    stratify_equal_totals(&units, cfg.strata)
}

/// Cut units sorted by `x` into `strata` groups with approximately equal
/// `Σ x`, assigning each unit by the midpoint of its cumulative interval.
pub fn stratify_equal_totals<T: Real>(
    units: &HmtUnits,
    strata: usize,
) -> Result<StratifiedPopulation<T>> {
    let mut order: Vec<usize> = (0..units.x.len()).collect();
    order.sort_by(|&a, &b| units.x[a].total_cmp(&units.x[b]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&i| units.x[i]).sum();
    let share = total / strata as f64;

    let mut groups: Vec<(f64, Vec<T>)> = vec![(0.0, Vec::new()); strata];
    let mut cum = 0.0;
    for &i in &order {
        let mid = cum + units.x[i] / 2.0;
        cum += units.x[i];
        let h = ((mid / share) as usize).min(strata - 1);
        groups[h].0 += units.x[i];
        groups[h].1.push(T::from_f64_lossy(units.y[i]));
    }
    if let Some(h) = groups.iter().position(|g| g.1.is_empty()) {
        return Err(Error::Generation(format!("stratum {h} received no units")));
    }
    let mut strata_vec: Vec<Stratum<T>> = groups
        .into_iter()
        .enumerate()
        .map(|(h, (sum_x, values))| Stratum {
            id: h,
            label: h.to_string(),
            key: T::from_f64_lossy(sum_x.ln()),
            values,
        })
        .collect();
    strata_vec.sort_by(|a, b| a.key.partial_cmp(&b.key).unwrap().then(a.id.cmp(&b.id)));
    for (h, s) in strata_vec.iter_mut().enumerate() {
        s.id = h;
        s.label = h.to_string();
    }
    StratifiedPopulation::new(strata_vec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn line_normalizes_to_identity_times_two() {
        let m = Scenario::Line.mean_function();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((m.eval(x) - 2.0 * x).abs() < 1e-12);
        }
        assert!((m.eval(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expo_endpoints() {
        let m = Scenario::Expo.mean_function();
        assert!(m.eval(1.0).abs() < 1e-12);
        assert!((m.eval(0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jump_is_flat_after_threshold() {
        let m = Scenario::Jump.mean_function();
        let v = m.eval(0.66);
        for x in [0.7, 0.8, 0.95, 1.0] {
            assert_eq!(m.eval(x), v);
        }
    }

    #[test]
    fn every_scenario_spans_zero_to_two() {
        for sc in Scenario::ALL {
            let m = sc.mean_function();
            let vals: Vec<f64> = (0..=NORMALIZATION_GRID)
                .map(|i| m.eval(i as f64 / NORMALIZATION_GRID as f64))
                .collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo.abs() < 1e-6, "{sc}: min {lo}");
            assert!((hi - 2.0).abs() < 1e-6, "{sc}: max {hi}");
        }
    }

    #[test]
    fn scenario_names_roundtrip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("wave".parse::<Scenario>().is_err());
    }

    #[test]
    fn gaussian_layout() {
        let sc = GaussianScenario::new(Scenario::Line, 0.25, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p: StratifiedPopulation<f64> = gen_gaussian(&sc, &mut rng).unwrap();
        assert_eq!(p.num_strata(), 50);
        assert_eq!(p.total(), 3000);
        assert_eq!(p.strata()[0].key, 1.0 / 50.0);
        assert_eq!(p.strata()[49].key, 1.0);
    }

    #[test]
    fn gaussian_rejects_bad_phi() {
        let mut sc = GaussianScenario::new(Scenario::Line, 0.0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_gaussian::<f64, _>(&sc, &mut rng).is_err());
        sc.phi = f64::NAN;
        assert!(gen_gaussian::<f64, _>(&sc, &mut rng).is_err());
    }

    #[test]
    fn infeasible_gamma_is_reported() {
        let cfg = HmtConfig {
            alpha: -100.0,
            ..HmtConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            gen_hmt::<f64, _>(&cfg, &mut rng),
            Err(Error::Generation(_))
        ));
    }

    #[test]
    fn hmt_keys_sorted_and_sizes_sum() {
        let cfg = HmtConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: StratifiedPopulation<f64> = gen_hmt(&cfg, &mut rng).unwrap();
        assert_eq!(p.total(), 2000);
        assert_eq!(p.num_strata(), 20);
        assert!(p.keys().windows(2).all(|w| w[0] < w[1]));
        assert!(p
            .strata()
            .iter()
            .flat_map(|s| s.values.iter())
            .all(|&y| y > 0.0));
    }
}
