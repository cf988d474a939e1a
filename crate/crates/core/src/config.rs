//! Simulation spec files.
//!
//! A spec is a flat TOML table. `schema_version` is required and must equal
//! [`SCHEMA_VERSION`]; unknown keys are rejected.
//!
//! ```toml
//! schema_version = 1
//! population = "gaussian"      # gaussian | hmt | csv
//! scenario = "line"
//! phi = 0.25
//! strata = 50
//! replicates = 200
//! seed = 2024
//! estimators = ["coll", "ker", "dir", "hb"]
//! bandwidth = 0.025
//! d = 0.05
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::harness::{Estimator, EstimatorConfig, PopulationSource, SimulationSpec};
use crate::hb::{HbHyperParams, McmcConfig};
use crate::kernel::{KernelConfig, KeyMode};
use crate::popgen::{GaussianScenario, HmtConfig, Scenario};
use crate::strata::Design;

pub const SCHEMA_VERSION: u32 = 1;

/// Raw contents of a spec file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub schema_version: u32,
    pub population: String,

    pub scenario: Option<Scenario>,
    pub phi: Option<f64>,
    pub strata: Option<usize>,
    pub stratum_size: Option<usize>,

    pub hmt_size: Option<usize>,
    pub hmt_x_shape: Option<f64>,
    pub hmt_x_scale: Option<f64>,
    pub hmt_alpha: Option<f64>,
    pub hmt_beta: Option<f64>,
    pub hmt_sigma2: Option<f64>,

    pub path: Option<PathBuf>,

    pub population_seed: Option<u64>,
    pub seed: Option<u64>,
    pub psus: Option<usize>,
    pub design: Option<String>,
    pub estimators: Option<Vec<String>>,
    pub replicates: Option<usize>,

    pub bandwidth: Option<f64>,
    pub key_mode: Option<KeyMode>,
    pub d: Option<f64>,
    pub zeta_threshold: Option<usize>,
    pub mcmc_iterations: Option<usize>,
    pub mcmc_burn_in: Option<usize>,
    pub mcmc_thin: Option<usize>,
    pub mcmc_chains: Option<usize>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SpecFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                spec.schema_version
            )));
        }
        Ok(spec)
    }

    /// Resolve into a validated spec. Relative CSV paths are taken relative
    /// to `base`.
    pub fn into_spec(self, base: Option<&Path>) -> Result<SimulationSpec> {
        let seed = self.seed.unwrap_or(0);
        let gaussian_only = self.scenario.is_some() || self.phi.is_some() || self.stratum_size.is_some();
        let hmt_only = [
            self.hmt_x_shape,
            self.hmt_x_scale,
            self.hmt_alpha,
            self.hmt_beta,
            self.hmt_sigma2,
        ]
        .iter()
        .any(Option::is_some)
            || self.hmt_size.is_some();
        let population = match self.population.as_str() {
            "gaussian" => {
                reject(hmt_only || self.path.is_some(), "gaussian")?;
                let scenario = self
                    .scenario
                    .ok_or_else(|| Error::Config("gaussian population needs 'scenario'".into()))?;
                let phi = self
                    .phi
                    .ok_or_else(|| Error::Config("gaussian population needs 'phi'".into()))?;
                let mut g = GaussianScenario::new(scenario, phi, self.strata.unwrap_or(50));
                if let Some(n) = self.stratum_size {
                    g.stratum_size = n;
                }
                g.validate()?;
                PopulationSource::Gaussian(g)
            }
            "hmt" => {
                reject(gaussian_only || self.path.is_some(), "hmt")?;
                let d = HmtConfig::default();
                let h = HmtConfig {
                    size: self.hmt_size.unwrap_or(d.size),
                    strata: self.strata.unwrap_or(d.strata),
                    x_shape: self.hmt_x_shape.unwrap_or(d.x_shape),
                    x_scale: self.hmt_x_scale.unwrap_or(d.x_scale),
                    alpha: self.hmt_alpha.unwrap_or(d.alpha),
                    beta: self.hmt_beta.unwrap_or(d.beta),
                    sigma2: self.hmt_sigma2.unwrap_or(d.sigma2),
                };
                h.validate()?;
                PopulationSource::Hmt(h)
            }
            "csv" => {
                reject(gaussian_only || hmt_only || self.strata.is_some(), "csv")?;
                let path = self
                    .path
                    .ok_or_else(|| Error::Config("csv population needs 'path'".into()))?;
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path,
                };
                PopulationSource::Csv(path)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown population '{other}' (expected gaussian, hmt or csv)"
                )))
            }
        };

        let defaults = EstimatorConfig::default();
        let reduced = McmcConfig::reduced();
        let config = EstimatorConfig {
            kernel: KernelConfig {
                bandwidth: self.bandwidth.unwrap_or(defaults.kernel.bandwidth),
                key_mode: self.key_mode.unwrap_or_default(),
            },
            hb: HbHyperParams {
                d: self.d.unwrap_or(defaults.hb.d),
                zeta_threshold: self.zeta_threshold.unwrap_or(defaults.hb.zeta_threshold),
                fixed_sigma2: None,
            },
            mcmc: McmcConfig {
                iterations: self.mcmc_iterations.unwrap_or(reduced.iterations),
                burn_in: self.mcmc_burn_in.unwrap_or(reduced.burn_in),
                thin: self.mcmc_thin.unwrap_or(reduced.thin),
                chains: self.mcmc_chains.unwrap_or(reduced.chains),
            },
        };
        let estimators = match self.estimators {
            Some(list) => Estimator::parse_list(&list.join(","))?,
            None => Estimator::ALL.to_vec(),
        };
        let mut spec = SimulationSpec::new(population, seed);
        spec.population_seed = self.population_seed.unwrap_or(seed);
        spec.psus = self.psus.unwrap_or(1);
        spec.design = match self.design {
            Some(d) => d.parse()?,
            None => Design::Srswor,
        };
        spec.estimators = estimators;
        spec.replicates = self.replicates.unwrap_or(200);
        spec.config = config;
        spec.validate()?;
        Ok(spec)
    }
}

fn reject(conflict: bool, population: &str) -> Result<()> {
    if conflict {
        return Err(Error::Config(format!(
            "keys for another population type given with population = \"{population}\""
        )));
    }
    Ok(())
}

/// Read and resolve a spec file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<SimulationSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    SpecFile::parse(&text)?.into_spec(path.parent())
}
