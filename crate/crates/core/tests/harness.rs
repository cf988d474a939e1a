//! Replication engine: determinism, NA accounting and d selection.

use finestrat::harness::{
    estimate_all, run_simulation, run_study, select_optimal_d, summarize, write_results_csv,
    write_summary_csv, Estimate, PopulationSource, SimulationResult, Study,
};
use finestrat::{
    make_collapse_plan, Design, Estimator, GaussianScenario, McmcConfig, Population, Scenario,
    SimulationSpec,
};

fn quick_mcmc() -> McmcConfig {
    McmcConfig {
        iterations: 2000,
        burn_in: 200,
        thin: 20,
        chains: 1,
    }
}

fn line_spec(strata: usize, replicates: usize) -> SimulationSpec {
    let mut spec = SimulationSpec::new(
        PopulationSource::Gaussian(GaussianScenario::new(Scenario::Line, 0.25, strata)),
        17,
    );
    spec.replicates = replicates;
    spec.config.mcmc = quick_mcmc();
    spec.config.hb.d = 0.08;
    spec
}

fn results_bytes(result: &SimulationResult) -> Vec<u8> {
    let mut buf = Vec::new();
    write_results_csv(&result.records, &mut buf).unwrap();
    write_summary_csv(&summarize(result).unwrap(), &mut buf).unwrap();
    buf
}

#[test]
fn same_seed_gives_identical_records() {
    let spec = line_spec(20, 12);
    let a = run_simulation(&spec).unwrap();
    let b = run_simulation(&spec).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(results_bytes(&a), results_bytes(&b));
    let mut other = spec.clone();
    other.seed += 1;
    assert_ne!(run_simulation(&other).unwrap().records, a.records);
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = line_spec(20, 16);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| results_bytes(&run_simulation(&spec).unwrap()))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn every_replicate_is_counted_once() {
    // A 6-stratum population with a narrow kernel window: Ker is always NA.
    let mut spec = line_spec(6, 10);
    spec.config.kernel.bandwidth = 0.01;
    let result = run_simulation(&spec).unwrap();
    for row in summarize(&result).unwrap() {
        assert_eq!(row.n_valid + row.n_na, spec.replicates, "{}", row.estimator);
        if row.estimator == Estimator::Ker {
            assert_eq!(row.n_na, spec.replicates);
            assert!(row.metrics.is_none());
        }
        if let Some(m) = row.metrics {
            assert!(m.rrmse + 1e-12 >= m.rb);
        }
    }
    for r in &result.records {
        assert_eq!(r.true_variance, result.true_variance);
        assert_eq!(r.get(Estimator::Ker).unwrap().na_reason(), Some("C_d = 0"));
    }
    let mut buf = Vec::new();
    write_results_csv(&result.records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("replicate,estimator,variance,na_reason,true_variance\n"));
    assert_eq!(text.lines().count(), 1 + 4 * spec.replicates);
    assert!(text.contains(",NA,C_d = 0,"));
}

#[test]
fn census_design_zeroes_fpc_estimators() {
    let pop = Population::from_groups((0..8).map(|h| {
        let b = h as f64;
        (b, vec![b, b + 1.5])
    }))
    .unwrap();
    let study = Study::new(pop, 2).unwrap();
    assert_eq!(study.true_variance, 0.0);
    let sample = study.sample(Design::Srswor, 0, 0).unwrap();
    let plan = make_collapse_plan(&study.population).unwrap();
    let spec = line_spec(8, 1);
    let out = estimate_all(
        &sample,
        &plan,
        &study.population.keys(),
        &Estimator::ALL,
        &spec.config,
        1,
    );
    for (e, est) in out {
        match (e, est) {
            (Estimator::Coll | Estimator::Hb, Estimate::Value(v)) => assert_eq!(v, 0.0, "{e}"),
            (Estimator::Dir, Estimate::Value(v)) => assert!(v.abs() < 1e-12),
            (Estimator::Ker, Estimate::Value(v)) => assert!(v.is_finite() && v >= 0.0),
            (_, Estimate::Na(_)) => {}
        }
    }
}

#[test]
fn single_point_grid_selects_that_point() {
    let spec = line_spec(20, 4);
    let study = Study::new(spec.resolve_population().unwrap(), 1).unwrap();
    let sel = select_optimal_d(&spec, &study, &[0.3]).unwrap();
    assert_eq!(sel.best, 0.3);
    assert_eq!(sel.curve.len(), 1);
}

#[test]
fn dominant_grid_point_wins() {
    let spec = line_spec(50, 20);
    let study = Study::new(spec.resolve_population().unwrap(), 1).unwrap();
    let sel = select_optimal_d(&spec, &study, &[5.0, 0.08]).unwrap();
    let (a, b) = (sel.curve[0].metrics.unwrap(), sel.curve[1].metrics.unwrap());
    assert!(b.rb < a.rb && b.rrmse < a.rrmse, "{a:?} vs {b:?}");
    assert_eq!(sel.best, 0.08);
    assert_eq!(sel.best_index, 1);
}

#[test]
fn grid_points_share_samples() {
    // Repeating a grid value must reproduce its curve point exactly.
    let spec = line_spec(20, 6);
    let study = Study::new(spec.resolve_population().unwrap(), 1).unwrap();
    let sel = select_optimal_d(&spec, &study, &[0.1, 0.5, 0.1]).unwrap();
    assert_eq!(sel.curve[0].metrics, sel.curve[2].metrics);
}

#[test]
fn run_study_reuses_the_population() {
    let spec = line_spec(20, 5);
    let study = Study::new(spec.resolve_population().unwrap(), spec.psus).unwrap();
    assert_eq!(run_study(&spec, &study).unwrap().records, run_simulation(&spec).unwrap().records);
}
