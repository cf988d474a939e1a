//! Monte Carlo evaluation of the variance estimators.
//!
//! A finite population is built once per [`SimulationSpec`] and held fixed;
//! each replicate draws a stratified sample on its own random stream, so
//! replicates can run in parallel and still give identical output.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{collapse_sample, collapsed_variance, make_collapse_plan, CollapsePlan};
use crate::dirichlet::nb_variance;
use crate::error::{Error, Result};
use crate::hb::{hb_variance, run_hb_chain, HbHyperParams, McmcConfig};
use crate::io::{fmt_opt, fmt_sig6, population_from_csv};
use crate::kernel::{kernel_variance, KernelConfig};
use crate::popgen::{gen_gaussian, gen_hmt, GaussianScenario, HmtConfig};
use crate::rng::{child_seed, stream, Lane};
use crate::strata::{draw, ht_mean, true_design_variance, Design, StratifiedPopulation, StratifiedSample};

type Population = StratifiedPopulation<f64>;
type Sample = StratifiedSample<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    Coll,
    Ker,
    Dir,
    #[serde(rename = "HB")]
    Hb,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Coll, Estimator::Ker, Estimator::Dir, Estimator::Hb];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Coll => "Coll",
            Estimator::Ker => "Ker",
            Estimator::Dir => "Dir",
            Estimator::Hb => "HB",
        }
    }

    /// Parse a comma-separated list such as `coll,hb`.
    pub fn parse_list(s: &str) -> Result<Vec<Estimator>> {
        let mut out: Vec<Estimator> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let e: Estimator = part.parse()?;
            if !out.contains(&e) {
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter("no estimators given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coll" => Ok(Estimator::Coll),
            "ker" => Ok(Estimator::Ker),
            "dir" => Ok(Estimator::Dir),
            "hb" => Ok(Estimator::Hb),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator '{other}' (expected coll, ker, dir or hb)"
            ))),
        }
    }
}

/// A variance estimate or the reason it is unavailable.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    Value(f64),
    Na(String),
}

impl Estimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            Estimate::Value(v) => Some(*v),
            Estimate::Na(_) => None,
        }
    }

    pub fn na_reason(&self) -> Option<&str> {
        match self {
            Estimate::Value(_) => None,
            Estimate::Na(r) => Some(r),
        }
    }

    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) if v.is_finite() => Estimate::Value(v),
            Ok(v) => Estimate::Na(format!("non-finite estimate {v}")),
            Err(Error::NotAvailable(reason)) => Estimate::Na(reason),
            Err(e) => Estimate::Na(e.to_string()),
        }
    }
}

/// Settings shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub kernel: KernelConfig,
    pub hb: HbHyperParams,
    pub mcmc: McmcConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            kernel: KernelConfig::new(1.0 / 40.0),
            hb: HbHyperParams::new(1.0),
            mcmc: McmcConfig::reduced(),
        }
    }
}

/// Evaluate `estimators` on one sample. `keys` are the stratum collapsing
/// keys in sample order and `seed` drives the MCMC chains.
pub fn estimate_all(
    sample: &Sample,
    plan: &CollapsePlan,
    keys: &[f64],
    estimators: &[Estimator],
    cfg: &EstimatorConfig,
    seed: u64,
) -> Vec<(Estimator, Estimate)> {
    let pseudo = collapse_sample(plan, sample);
    let n = sample.population_total;
    estimators
        .iter()
        .map(|&e| {
            let r = match e {
                Estimator::Ker => kernel_variance(sample, keys, &cfg.kernel),
                _ => match &pseudo {
                    Err(err) => Err(Error::NotAvailable(err.to_string())),
                    Ok(p) => match e {
                        Estimator::Coll => Ok(collapsed_variance(p, n)),
                        Estimator::Dir => nb_variance(p, n).map(|d| d.variance),
                        Estimator::Hb => {
                            run_hb_chain(p, &cfg.hb, &cfg.mcmc, seed).map(|post| hb_variance(&post, p, n))
                        }
                        Estimator::Ker => unreachable!(),
                    },
                },
            };
            (e, Estimate::from_result(r))
        })
        .collect()
}

/// Where the finite population comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationSource {
    Gaussian(GaussianScenario),
    Hmt(HmtConfig),
    Csv(PathBuf),
}

/// One Monte Carlo study.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub population: PopulationSource,
    /// Seed of the population generator; scenarios sharing it share noise.
    pub population_seed: u64,
    /// Units drawn per stratum (capped at `N_h`).
    pub psus: usize,
    pub design: Design,
    pub estimators: Vec<Estimator>,
    pub replicates: usize,
    /// Master seed of the sampling and MCMC streams.
    pub seed: u64,
    pub config: EstimatorConfig,
}

impl SimulationSpec {
    pub fn new(population: PopulationSource, seed: u64) -> Self {
        Self {
            population,
            population_seed: seed,
            psus: 1,
            design: Design::Srswor,
            estimators: Estimator::ALL.to_vec(),
            replicates: 200,
            seed,
            config: EstimatorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("estimator set is empty".into()));
        }
        if !(1..=5).contains(&self.psus) {
            return Err(Error::InvalidParameter(format!(
                "psus must be in 1..=5, got {}",
                self.psus
            )));
        }
        self.config.kernel.validate()?;
        self.config.hb.validate()?;
        self.config.mcmc.validate()
    }

    /// Build (or load) the finite population.
    pub fn resolve_population(&self) -> Result<Population> {
        let mut rng = stream(self.population_seed, 0, Lane::Population);
        match &self.population {
            PopulationSource::Gaussian(g) => gen_gaussian(g, &mut rng),
            PopulationSource::Hmt(h) => gen_hmt(h, &mut rng),
            PopulationSource::Csv(path) => population_from_csv(path),
        }
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub replicate: usize,
    pub ht_mean: f64,
    pub estimates: Vec<(Estimator, Estimate)>,
    pub true_variance: f64,
}

impl EvalRecord {
    pub fn get(&self, e: Estimator) -> Option<&Estimate> {
        self.estimates.iter().find(|(x, _)| *x == e).map(|(_, v)| v)
    }
}

/// The fixed population and derived quantities shared by all replicates.
#[derive(Debug, Clone)]
pub struct Study {
    pub population: Population,
    pub plan: CollapsePlan,
    pub allocation: Vec<usize>,
    pub true_variance: f64,
}

impl Study {
    pub fn new(population: Population, psus: usize) -> Result<Self> {
        let plan = make_collapse_plan(&population)?;
        let allocation = population.capped_allocation(psus);
        let true_variance = true_design_variance(&population, &allocation)?.value;
        Ok(Self {
            population,
            plan,
            allocation,
            true_variance,
        })
    }

    /// Sample of replicate `r` under master seed `seed`.
    pub fn sample(&self, design: Design, seed: u64, r: usize) -> Result<Sample> {
        let mut rng = stream(seed, r as u64, Lane::Sample);
        draw(&self.population, design, &self.allocation, &mut rng)
    }
}

/// Completed simulation.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub records: Vec<EvalRecord>,
    pub true_variance: f64,
    pub estimators: Vec<Estimator>,
}

/// Run every replicate of `spec`. Per-replicate estimator failures become
/// `NA`; only setup failures abort.
pub fn run_simulation(spec: &SimulationSpec) -> Result<SimulationResult> {
    spec.validate()?;
    let study = Study::new(spec.resolve_population()?, spec.psus)?;
    run_study(spec, &study)
}

/// [`run_simulation`] on an already built population.
pub fn run_study(spec: &SimulationSpec, study: &Study) -> Result<SimulationResult> {
    spec.validate()?;
    let keys = study.population.keys();
    let records = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let sample = study.sample(spec.design, spec.seed, r)?;
            let chain_seed = child_seed(spec.seed, r as u64, Lane::Chain(0));
            Ok(EvalRecord {
                replicate: r,
                ht_mean: ht_mean(&sample)?,
                estimates: estimate_all(
                    &sample,
                    &study.plan,
                    &keys,
                    &spec.estimators,
                    &spec.config,
                    chain_seed,
                ),
                true_variance: study.true_variance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationResult {
        records,
        true_variance: study.true_variance,
        estimators: spec.estimators.clone(),
    })
}

/// Relative bias and relative root MSE of one estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rb: f64,
    pub rrmse: f64,
    /// Monte Carlo standard error of the mean relative error.
    pub rb_se: f64,
    pub n_valid: usize,
    pub n_na: usize,
}

/// `RB = |mean(v - V)| / V` and `RRMSE = sqrt(mean((v - V)²)) / V` over the
/// available values; `None` entries are counted as `NA`.
pub fn rb_rrmse(values: &[Option<f64>], true_variance: f64) -> Result<Metrics> {
    if !(true_variance > 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "true variance is {true_variance}"
        )));
    }
    let valid: Vec<f64> = values.iter().flatten().map(|&v| v / true_variance - 1.0).collect();
    let n_na = values.len() - valid.len();
    if valid.is_empty() {
        return Err(Error::UndefinedMetric("no available estimates".into()));
    }
    let k = valid.len() as f64;
    let mean = valid.iter().sum::<f64>() / k;
    let msq = valid.iter().map(|e| e * e).sum::<f64>() / k;
    let spread = if valid.len() > 1 {
        valid.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(Metrics {
        rb: mean.abs(),
        rrmse: msq.sqrt(),
        rb_se: (spread / k).sqrt(),
        n_valid: valid.len(),
        n_na,
    })
}

/// Per-estimator summary row; metrics are `None` when no replicate
/// produced a value.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub metrics: Option<Metrics>,
    pub n_valid: usize,
    pub n_na: usize,
}

pub fn summarize(result: &SimulationResult) -> Result<Vec<SummaryRow>> {
    result
        .estimators
        .iter()
        .map(|&e| {
            let values: Vec<Option<f64>> = result
                .records
                .iter()
                .map(|r| r.get(e).and_then(Estimate::value))
                .collect();
            let n_valid = values.iter().flatten().count();
            let metrics = if n_valid > 0 {
                Some(rb_rrmse(&values, result.true_variance)?)
            } else if result.true_variance > 0.0 {
                None
            } else {
                return Err(Error::UndefinedMetric("true variance is 0".into()));
            };
            Ok(SummaryRow {
                estimator: e,
                metrics,
                n_valid,
                n_na: values.len() - n_valid,
            })
        })
        .collect()
}

/// `replicate,estimator,variance,na_reason,true_variance`.
pub fn write_results_csv<W: Write>(records: &[EvalRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["replicate", "estimator", "variance", "na_reason", "true_variance"])?;
    for r in records {
        for (e, est) in &r.estimates {
            wtr.write_record([
                r.replicate.to_string(),
                e.name().to_string(),
                fmt_opt(est.value()),
                est.na_reason().unwrap_or("").to_string(),
                fmt_sig6(r.true_variance),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// `estimator,RB,RRMSE,n_valid,n_na`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["estimator", "RB", "RRMSE", "n_valid", "n_na"])?;
    for row in rows {
        wtr.write_record([
            row.estimator.name().to_string(),
            fmt_opt(row.metrics.map(|m| m.rb)),
            fmt_opt(row.metrics.map(|m| m.rrmse)),
            row.n_valid.to_string(),
            row.n_na.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// `cv = ȳ_HT / sqrt(var)`; unavailable when the variance is missing or 0.
pub fn cv_estimate(ht_mean: f64, variance: &Estimate) -> Estimate {
    match variance {
        Estimate::Na(r) => Estimate::Na(r.clone()),
        Estimate::Value(v) if *v > 0.0 => Estimate::Value(ht_mean / v.sqrt()),
        Estimate::Value(_) => Estimate::Na("variance = 0".into()),
    }
}

/// cv of every estimate in a record.
pub fn cv_report(record: &EvalRecord) -> Vec<(Estimator, Estimate)> {
    record
        .estimates
        .iter()
        .map(|(e, v)| (*e, cv_estimate(record.ht_mean, v)))
        .collect()
}

/// One grid point of the `d` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DCurvePoint {
    pub d: f64,
    pub metrics: Option<Metrics>,
    pub n_na: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DSelection {
    pub best: f64,
    pub best_index: usize,
    pub curve: Vec<DCurvePoint>,
}

/// Reduced Monte Carlo over a grid of half-t scales. Every grid point sees
/// the same samples and chain seeds; the minimizer of RRMSE wins, with RB
/// breaking ties.
pub fn select_optimal_d(spec: &SimulationSpec, study: &Study, grid: &[f64]) -> Result<DSelection> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("d grid is empty".into()));
    }
    for &d in grid {
        HbHyperParams { d, ..spec.config.hb }.validate()?;
    }
    let rows: Vec<Vec<Option<f64>>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let sample = study.sample(spec.design, spec.seed, r)?;
            let seed = child_seed(spec.seed, r as u64, Lane::Chain(0));
            let pseudo = collapse_sample(&study.plan, &sample).ok();
            Ok(grid
                .iter()
                .map(|&d| {
                    let p = pseudo.as_ref()?;
                    let hp = HbHyperParams { d, ..spec.config.hb };
                    run_hb_chain(p, &hp, &spec.config.mcmc, seed)
                        .ok()
                        .map(|post| hb_variance(&post, p, sample.population_total))
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let curve: Vec<DCurvePoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let values: Vec<Option<f64>> = rows.iter().map(|row| row[i]).collect();
            let n_na = values.iter().filter(|v| v.is_none()).count();
            let metrics = match rb_rrmse(&values, study.true_variance) {
                Ok(m) => Some(m),
                Err(Error::UndefinedMetric(_)) if study.true_variance > 0.0 => None,
                Err(e) => return Err(e),
            };
            Ok(DCurvePoint { d, metrics, n_na })
        })
        .collect::<Result<_>>()?;
    let best_index = curve
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.metrics.map(|m| (i, m)))
        .min_by(|(_, a), (_, b)| a.rrmse.total_cmp(&b.rrmse).then(a.rb.total_cmp(&b.rb)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::UndefinedMetric("no grid point produced an estimate".into()))?;
    Ok(DSelection {
        best: grid[best_index],
        best_index,
        curve,
    })
}

/// `d,RB,RRMSE,n_valid,n_na,selected`.
pub fn write_d_curve_csv<W: Write>(sel: &DSelection, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["d", "RB", "RRMSE", "n_valid", "n_na", "selected"])?;
    for (i, p) in sel.curve.iter().enumerate() {
        wtr.write_record([
            fmt_sig6(p.d),
            fmt_opt(p.metrics.map(|m| m.rb)),
            fmt_opt(p.metrics.map(|m| m.rrmse)),
            p.metrics.map_or(0, |m| m.n_valid).to_string(),
            p.n_na.to_string(),
            u8::from(i == sel.best_index).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_estimates_have_zero_error() {
        let m = rb_rrmse(&[Some(2.0); 5], 2.0).unwrap();
        assert_eq!((m.rb, m.rrmse), (0.0, 0.0));
    }

    #[test]
    fn symmetric_errors() {
        let v = [Some(1.5), Some(2.5), Some(1.5), Some(2.5), None];
        let m = rb_rrmse(&v, 2.0).unwrap();
        assert!(m.rb.abs() < 1e-15);
        assert!((m.rrmse - 0.25).abs() < 1e-15);
        assert_eq!((m.n_valid, m.n_na), (4, 1));
    }

    #[test]
    fn zero_truth_is_undefined() {
        assert!(matches!(rb_rrmse(&[Some(1.0)], 0.0), Err(Error::UndefinedMetric(_))));
        assert!(matches!(rb_rrmse(&[None], 1.0), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn cv_rules() {
        assert_eq!(cv_estimate(3.0, &Estimate::Value(9.0)), Estimate::Value(1.0));
        assert!(matches!(cv_estimate(3.0, &Estimate::Value(0.0)), Estimate::Na(_)));
        assert_eq!(cv_estimate(3.0, &Estimate::Na("x".into())), Estimate::Na("x".into()));
    }

    #[test]
    fn estimator_names() {
        assert_eq!(
            Estimator::parse_list("coll, HB,coll").unwrap(),
            vec![Estimator::Coll, Estimator::Hb]
        );
        assert!(Estimator::parse_list("foo").is_err());
        assert!(Estimator::parse_list("").is_err());
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
    }

    #[test]
    fn spec_validation() {
        let g = GaussianScenario::new(crate::popgen::Scenario::Line, 0.25, 10);
        let mut spec = SimulationSpec::new(PopulationSource::Gaussian(g), 1);
        assert!(spec.validate().is_ok());
        spec.replicates = 0;
        assert!(spec.validate().is_err());
        spec.replicates = 1;
        spec.estimators.clear();
        assert!(spec.validate().is_err());
    }
}
