use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use finestrat::collapse::{collapse_sample, collapsed_variance, make_collapse_plan, plan_from_keys, CollapsePlan};
use finestrat::config::SpecFile;
use finestrat::dirichlet::nb_variance;
use finestrat::harness::{
    cv_estimate, run_simulation, select_optimal_d, summarize, write_d_curve_csv, write_results_csv,
    write_summary_csv, Estimate, Estimator, Study,
};
use finestrat::hb::{hb_variance, mcmc_se, run_hb_chain, HbHyperParams, McmcConfig};
use finestrat::io::{
    fmt_opt, fmt_sig6, population_from_csv, sample_from_csv, write_population_csv, write_sample_csv,
};
use finestrat::kernel::{kernel_variance, KernelConfig};
use finestrat::popgen::{gen_gaussian, gen_hmt, GaussianScenario, HmtConfig};
use finestrat::rng::{child_seed, stream, Lane};
use finestrat::strata::{draw, ht_mean};
use finestrat::{Error, Result, Sample, SimulationSpec};
use serde_json::{json, Map, Value};

use crate::args::{
    Cli, Command, DiagnoseArgs, EstimateArgs, GenerateKind, SampleArgs, SelectDArgs, SimulateArgs,
};
use crate::output::{num, nums, sibling, sink};

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate { kind } => generate(kind, seed, out),
        Command::Sample(a) => sample(a, seed, out),
        Command::Estimate(a) => estimate(a, seed, out),
        Command::Simulate(a) => simulate(a, cli.seed, out),
        Command::SelectD(a) => select_d(a, cli.seed, out),
        Command::Diagnose(a) => diagnose(a, out),
    }
}

fn generate(kind: &GenerateKind, seed: u64, out: Option<&Path>) -> Result<()> {
    let mut rng = stream(seed, 0, Lane::Population);
    let pop = match *kind {
        GenerateKind::Gaussian {
            scenario,
            phi,
            strata,
            stratum_size,
        } => {
            let mut g = GaussianScenario::new(scenario, phi, strata);
            g.stratum_size = stratum_size;
            gen_gaussian::<f64, _>(&g, &mut rng)?
        }
        GenerateKind::Hmt {
            size,
            strata,
            alpha,
            beta,
            sigma2,
            x_shape,
            x_scale,
        } => {
            let d = HmtConfig::default();
            let cfg = HmtConfig {
                size,
                strata,
                alpha: alpha.unwrap_or(d.alpha),
                beta: beta.unwrap_or(d.beta),
                sigma2: sigma2.unwrap_or(d.sigma2),
                x_shape: x_shape.unwrap_or(d.x_shape),
                x_scale: x_scale.unwrap_or(d.x_scale),
            };
            gen_hmt::<f64, _>(&cfg, &mut rng)?
        }
    };
    write_population_csv(&pop, sink(out)?)
}

fn sample(a: &SampleArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let pop = population_from_csv::<f64>(&a.population)?;
    let alloc = pop.capped_allocation(a.design.psus);
    let mut rng = stream(seed, 0, Lane::Sample);
    let s = draw(&pop, a.design.design, &alloc, &mut rng)?;
    write_sample_csv(&pop, &s, sink(out)?)
}

struct Loaded {
    sample: Sample,
    keys: Vec<f64>,
    labels: Vec<String>,
    plan: CollapsePlan,
}

fn load_input(a: &EstimateArgs, seed: u64) -> Result<Loaded> {
    if let Some(path) = &a.input.population {
        let pop = population_from_csv::<f64>(path)?;
        let alloc = pop.capped_allocation(a.design.psus);
        let mut rng = stream(seed, 0, Lane::Sample);
        let sample = draw(&pop, a.design.design, &alloc, &mut rng)?;
        Ok(Loaded {
            plan: make_collapse_plan(&pop)?,
            keys: pop.keys(),
            labels: pop.strata().iter().map(|s| s.label.clone()).collect(),
            sample,
        })
    } else {
        let path = a.input.sample.as_ref().expect("clap requires one input");
        let f = sample_from_csv::<f64>(path, a.design.design)?;
        Ok(Loaded {
            plan: plan_from_keys(&f.keys)?,
            keys: f.keys,
            labels: f.labels,
            sample: f.sample,
        })
    }
}

fn na_of(e: Error) -> Estimate {
    match e {
        Error::NotAvailable(r) => Estimate::Na(r),
        other => Estimate::Na(other.to_string()),
    }
}

fn estimate(a: &EstimateArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let ea = &a.estimators;
    let estimators = Estimator::parse_list(&ea.estimators)?;
    let kernel = KernelConfig {
        bandwidth: ea.b,
        key_mode: ea.key_mode,
    };
    kernel.validate()?;
    let hp = HbHyperParams {
        d: ea.d,
        zeta_threshold: ea.zeta_threshold,
        fixed_sigma2: None,
    };
    hp.validate()?;
    let mcmc = McmcConfig {
        iterations: ea.iterations,
        burn_in: ea.burn_in,
        thin: ea.thin,
        chains: ea.chains,
    };
    mcmc.validate()?;

    let input = load_input(a, seed)?;
    let sample = &input.sample;
    let n = sample.population_total;
    let mean = ht_mean(sample)?;
    let pseudo = collapse_sample(&input.plan, sample);
    let chain_seed = child_seed(seed, 0, Lane::Chain(0));

    let mut rows: Vec<(Estimator, Estimate)> = Vec::new();
    let mut diag = Map::new();
    for &e in &estimators {
        let started = Instant::now();
        let mut info = Map::new();
        let est = match (e, &pseudo) {
            (Estimator::Ker, _) => match kernel_variance(sample, &input.keys, &kernel) {
                Ok(v) => Estimate::Value(v),
                Err(err) => na_of(err),
            },
            (_, Err(err)) => Estimate::Na(err.to_string()),
            (Estimator::Coll, Ok(p)) => Estimate::Value(collapsed_variance(p, n)),
            (Estimator::Dir, Ok(p)) => match nb_variance(p, n) {
                Ok(d) => {
                    info.insert("m_inv".into(), num(d.hyper.m_inv));
                    info.insert("mu0".into(), num(d.hyper.mu0));
                    info.insert("sigma0sq".into(), num(d.hyper.sigma0sq));
                    info.insert("rho".into(), nums(&d.rho));
                    Estimate::Value(d.variance)
                }
                Err(err) => na_of(err),
            },
            (Estimator::Hb, Ok(p)) => match run_hb_chain(p, &hp, &mcmc, chain_seed) {
                Ok(post) => {
                    info.insert("d".into(), num(hp.d));
                    info.insert("posterior_means".into(), nums(&post.means));
                    info.insert(
                        "mcmc_se".into(),
                        post.se.as_deref().map_or(Value::Null, nums),
                    );
                    info.insert("acceptance".into(), nums(&post.acceptance));
                    if let Some(path) = &a.trace {
                        post.write_trace_csv(sink(Some(path))?)?;
                    }
                    Estimate::Value(hb_variance(&post, p, n))
                }
                Err(err) => na_of(err),
            },
        };
        if a.timing {
            info.insert("runtime_seconds".into(), num(started.elapsed().as_secs_f64()));
        }
        info.insert("variance".into(), est.value().map_or(Value::Null, num));
        if let Some(r) = est.na_reason() {
            info.insert("na_reason".into(), Value::String(r.to_string()));
        }
        diag.insert(e.name().to_string(), Value::Object(info));
        rows.push((e, est));
    }

    let mut wtr = csv::Writer::from_writer(sink(out)?);
    wtr.write_record(["estimator", "ht_mean", "variance", "cv", "na_reason"])?;
    for (e, est) in &rows {
        let cv = cv_estimate(mean, est);
        wtr.write_record([
            e.name().to_string(),
            fmt_sig6(mean),
            fmt_opt(est.value()),
            fmt_opt(cv.value()),
            est.na_reason().unwrap_or("").to_string(),
        ])?;
    }
    wtr.flush()?;

    let sidecar = a
        .diagnostics
        .clone()
        .or_else(|| out.map(|o| sibling(o, "diagnostics.json")));
    if let Some(path) = sidecar {
        let report = json!({
            "ht_mean": num(mean),
            "strata": input.labels.len(),
            "pseudo_strata": input.plan.num_groups(),
            "sample_size": sample.sizes().iter().sum::<usize>(),
            "population_size": n,
            "estimators": Value::Object(diag),
        });
        let mut f = sink(Some(&path))?;
        serde_json::to_writer_pretty(&mut f, &report).map_err(std::io::Error::from)?;
        writeln!(f)?;
        f.flush()?;
    }
    Ok(())
}

fn load_spec(path: &Path, seed: Option<u64>) -> Result<SimulationSpec> {
    let text = fs::read_to_string(path)?;
    let mut file = SpecFile::parse(&text)?;
    if seed.is_some() {
        file.seed = seed;
    }
    file.into_spec(path.parent())
}

fn simulate(a: &SimulateArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let mut spec = load_spec(&a.spec, seed)?;
    if let Some(r) = a.replicates {
        spec.replicates = r;
    }
    let result = run_simulation(&spec)?;
    if let Some(path) = &a.results {
        write_results_csv(&result.records, sink(Some(path))?)?;
    }
    write_summary_csv(&summarize(&result)?, sink(out)?)
}

/// `start:stop:count` (linear, or geometric with `log`) or `a,b,c`.
pub fn parse_grid(s: &str, log: bool) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("invalid grid '{s}'"));
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 || (log && (start <= 0.0 || stop <= 0.0)) {
            return Err(bad());
        }
        if count == 1 {
            vec![start]
        } else {
            (0..count)
                .map(|i| {
                    let t = i as f64 / (count - 1) as f64;
                    if log {
                        (start.ln() + t * (stop.ln() - start.ln())).exp()
                    } else {
                        start + t * (stop - start)
                    }
                })
                .collect()
        }
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(bad());
    }
    Ok(grid)
}

fn select_d(a: &SelectDArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let mut spec = load_spec(&a.spec, seed)?;
    spec.replicates = a.replicates;
    let grid = parse_grid(&a.grid, a.log)?;
    let study = Study::new(spec.resolve_population()?, spec.psus)?;
    let sel = select_optimal_d(&spec, &study, &grid)?;
    write_d_curve_csv(&sel, sink(out)?)?;
    eprintln!("selected d = {}", fmt_sig6(sel.best));
    Ok(())
}

fn trace_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no .csv trace files in {}",
                path.display()
            )));
        }
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

fn diagnose(a: &DiagnoseArgs, out: Option<&Path>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink(out)?);
    wtr.write_record(["trace", "chain", "group", "draws", "mean", "mcmc_se", "accept_rate"])?;
    for file in trace_files(&a.traces)? {
        let mut rdr = csv::Reader::from_path(&file)?;
        let expected = ["chain", "iteration", "group", "S2", "sigma2", "accepted"];
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(expected) {
            return Err(Error::Parse {
                path: file.clone(),
                line: 1,
                message: format!("expected header '{}'", expected.join(",")),
            });
        }
        let mut series: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| -> Result<&str> {
                record.get(i).ok_or_else(|| Error::Parse {
                    path: file.clone(),
                    line,
                    message: format!("missing {}", expected[i]),
                })
            };
            let parse_err = |i: usize| Error::Parse {
                path: file.clone(),
                line,
                message: format!("invalid {}", expected[i]),
            };
            let chain: usize = field(0)?.parse().map_err(|_| parse_err(0))?;
            let group: usize = field(2)?.parse().map_err(|_| parse_err(2))?;
            let s2: f64 = field(3)?.parse().map_err(|_| parse_err(3))?;
            let accepted: u8 = field(5)?.parse().map_err(|_| parse_err(5))?;
            let entry = series.entry((chain, group)).or_default();
            entry.0.push(s2);
            entry.1 += usize::from(accepted);
        }
        let name = file
            .file_name()
            .map_or_else(|| file.display().to_string(), |n| n.to_string_lossy().into_owned());
        for ((chain, group), (draws, accepted)) in series {
            let k = draws.len() as f64;
            let mean = draws.iter().sum::<f64>() / k;
            wtr.write_record([
                name.clone(),
                chain.to_string(),
                group.to_string(),
                draws.len().to_string(),
                fmt_sig6(mean),
                fmt_opt(mcmc_se(&draws).ok()),
                fmt_sig6(accepted as f64 / k),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1:0.5:5", false).unwrap().len(), 5);
        let g = parse_grid("0.01:1:3", true).unwrap();
        assert!((g[1] - 0.1).abs() < 1e-12);
        assert_eq!(parse_grid("0.2, 0.4", false).unwrap(), vec![0.2, 0.4]);
        assert_eq!(parse_grid("2:9:1", false).unwrap(), vec![2.0]);
        assert!(parse_grid("0:1:3", true).is_err());
        assert!(parse_grid("a:b", false).is_err());
        assert!(parse_grid("-1", false).is_err());
    }
}
