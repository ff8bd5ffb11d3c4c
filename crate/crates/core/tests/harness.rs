use alphabo::acqopt::SearchBudget;
use alphabo::acquisition::AcquisitionPolicy;
use alphabo::experiment::{self, FailureSummary, SweepConfig};
use alphabo::harness::{
    aggregate, best_trace, initial_design, regret_trace, run_bo, run_seeds, tp_gp_index, ExperimentConfig,
    RegretTrace, RunRecord, SurrogateKind, INDEX_REGRET_FLOOR,
};
use alphabo::objectives::benchmark;
use alphabo::report::{self, ROWS_FILE, ROW_HEADER};

fn quick(task: &str, policy: AcquisitionPolicy, n_init: usize, n_iter: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(task, policy, n_init, n_iter, 3).unwrap();
    c.budget = SearchBudget { n_raw: 256, n_refine: 2, max_local_steps: 60 };
    c.restarts = 2;
    c
}

fn record(n_init: usize, values: &[f64]) -> RunRecord {
    let mut best = Vec::new();
    for v in values {
        best.push(best.last().map_or(*v, |b: &f64| b.max(*v)));
    }
    RunRecord {
        seed: 0,
        n_init,
        points: values.iter().map(|_| vec![0.5, 0.5]).collect(),
        values: values.to_vec(),
        best_so_far: best,
        hyperparam_trace: vec![None; values.len()],
        fallback_steps: Vec::new(),
    }
}

#[test]
fn runs_are_deterministic() {
    for surrogate in [SurrogateKind::Gp, SurrogateKind::Tp] {
        let mut c = quick("himmelblau-2d", AcquisitionPolicy::AlphaP { p: 3.0 }, 3, 4);
        c.surrogate = surrogate;
        let a = run_bo(&c, 1).unwrap();
        let b = run_bo(&c, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        assert!(a.fallback_steps.is_empty());
        assert!(a.hyperparam_trace[3..].iter().all(|f| f.is_some()));
        assert_eq!(a.hyperparam_trace[5].unwrap().nu.is_some(), surrogate == SurrogateKind::Tp);
    }
}

#[test]
fn seeds_are_isolated() {
    let c = quick("toy-f1", AcquisitionPolicy::Ei, 2, 3);
    let mut shifted = c.clone();
    shifted.seed0 = 2;
    assert_eq!(run_bo(&c, 2).unwrap(), run_bo(&shifted, 0).unwrap());
    assert_ne!(run_bo(&c, 0).unwrap().points, run_bo(&c, 1).unwrap().points);
    // worker count does not change results
    let serial: Vec<RunRecord> = run_seeds(&c, 1).unwrap().into_iter().map(Result::unwrap).collect();
    let parallel: Vec<RunRecord> = run_seeds(&c, 3).unwrap().into_iter().map(Result::unwrap).collect();
    assert_eq!(serial, parallel);
}

#[test]
fn initial_design_is_shared_across_policies_and_surrogates() {
    let task = benchmark("hartmann-3d").unwrap();
    let design = initial_design(&task, 4, 7);
    for (policy, surrogate) in [
        (AcquisitionPolicy::Ei, SurrogateKind::Gp),
        (AcquisitionPolicy::AlphaP { p: 6.0 }, SurrogateKind::Tp),
        (AcquisitionPolicy::RandomSearch, SurrogateKind::Gp),
    ] {
        let mut c = quick("hartmann-3d", policy, 4, 1);
        c.surrogate = surrogate;
        c.seed0 = 7;
        assert_eq!(run_bo(&c, 0).unwrap().points[..4], design[..]);
    }
}

#[test]
fn regret_by_hand() {
    let task = benchmark("himmelblau-2d").unwrap();
    let r = record(2, &[-10.0, -4.0, -6.0, -1.0, -3.0]);
    assert_eq!(r.best_so_far, vec![-10.0, -4.0, -4.0, -1.0, -1.0]);
    assert_eq!(regret_trace(&r, &task, false).regret, vec![4.0, 1.0, 1.0]);
    assert_eq!(regret_trace(&r, &task, true).regret, vec![10.0, 4.0, 4.0, 1.0, 1.0]);
    assert_eq!(best_trace(&r, false), vec![-4.0, -1.0, -1.0]);
}

#[test]
fn aggregate_by_hand() {
    let agg = aggregate(&[vec![1.0, 2.0], vec![3.0, 2.0], vec![5.0, 2.0]]).unwrap();
    assert_eq!(agg.mean, vec![3.0, 2.0]);
    assert_eq!(agg.std, vec![2.0, 0.0]);
    assert!((agg.stderr[0] - 2.0 / 3f64.sqrt()).abs() < 1e-15);
    assert!(aggregate(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    assert!(aggregate(&[]).is_err());
}

#[test]
fn index_properties() {
    let a = RegretTrace { regret: vec![3.0, 2.0, 0.5, 0.5] };
    assert_eq!(tp_gp_index(&a, &a, INDEX_REGRET_FLOOR).unwrap(), 0.0);
    let zero = RegretTrace { regret: vec![0.0; 4] };
    assert!(tp_gp_index(&zero, &a, INDEX_REGRET_FLOOR).unwrap().is_finite());
    assert_eq!(tp_gp_index(&zero, &zero, INDEX_REGRET_FLOOR).unwrap(), 0.0);
    let half = RegretTrace { regret: a.regret.iter().map(|r| r / 2.0).collect() };
    assert!((tp_gp_index(&half, &a, INDEX_REGRET_FLOOR).unwrap() + 2f64.ln()).abs() < 1e-15);
    assert!((tp_gp_index(&a, &half, INDEX_REGRET_FLOOR).unwrap() - 2f64.ln()).abs() < 1e-15);
    assert!(tp_gp_index(&a, &RegretTrace { regret: vec![1.0] }, INDEX_REGRET_FLOOR).is_err());
}

fn minimal_config() -> SweepConfig {
    SweepConfig::from_json(
        r#"{
            "tasks": ["himmelblau-2d"],
            "policies": [{"kind": "ei"}],
            "n_init": 3,
            "n_iter": 5,
            "n_seeds": 2,
            "budget": {"n_raw": 256, "n_refine": 2, "max_local_steps": 50},
            "restarts": 2
        }"#,
    )
    .unwrap()
}

#[test]
fn minimal_sweep_writes_one_row_per_evaluation() {
    let config = minimal_config();
    let outcomes = experiment::execute(config.jobs().unwrap(), 2).unwrap();
    assert!(FailureSummary::of(&outcomes).is_clean());
    let dir = tempfile::tempdir().unwrap();
    report::write_sweep(dir.path(), "bench", &config, &outcomes).unwrap();
    let text = std::fs::read_to_string(dir.path().join(ROWS_FILE)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), ROW_HEADER.join(","));
    assert_eq!(
        ROW_HEADER.join(","),
        "task,surrogate,policy,param,seed,eval,step,phase,x,value,best_so_far,regret"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * (3 + 5));
    assert!(rows[0].starts_with("himmelblau-2d,gp,ei,,0,1,0,init,"));
    assert!(rows[3].starts_with("himmelblau-2d,gp,ei,,0,4,1,iter,"));
    assert!(rows[8].starts_with("himmelblau-2d,gp,ei,,1,1,0,init,"));
}

#[test]
fn rerun_is_byte_identical() {
    let config = minimal_config();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, workers) in dirs.iter().zip([1, 3]) {
        let outcomes = experiment::execute(config.jobs().unwrap(), workers).unwrap();
        report::write_sweep(dir.path(), "bench", &config, &outcomes).unwrap();
    }
    for name in [report::ROWS_FILE, report::AGGREGATES_FILE, report::MANIFEST_FILE] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn gp_against_itself_has_zero_index() {
    let mut config = minimal_config();
    config.surrogates = vec![SurrogateKind::Gp, SurrogateKind::Gp];
    config.policies = vec![AcquisitionPolicy::AlphaP { p: 2.0 }];
    let jobs = config.jobs().unwrap();
    assert_eq!(jobs.len(), 2);
    let outcomes = experiment::execute(jobs, 1).unwrap();
    let (rows, summary) = experiment::tp_compare_indices(&config, &outcomes).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.index == 0.0));
    assert_eq!(summary[0].mean, 0.0);
}

#[test]
fn config_validation() {
    assert!(SweepConfig::from_json(r#"{"tasks": ["toy-f1"], "policies": [{"kind": "ei"}], "n_init": 1, "n_iter": 1, "n_seeds": 1, "typo": 3}"#).is_err());
    assert!(SweepConfig::from_json(r#"{"tasks": ["nope"], "policies": [{"kind": "ei"}], "n_init": 1, "n_iter": 1, "n_seeds": 1}"#).is_err());
    assert!(SweepConfig::from_json(r#"{"tasks": ["toy-f1"], "policies": [], "n_init": 1, "n_iter": 1, "n_seeds": 1}"#).is_err());
    assert!(SweepConfig::from_json(r#"{"tasks": ["toy-f1"], "policies": [{"kind": "alpha_p", "p": -2}], "n_init": 1, "n_iter": 1, "n_seeds": 1}"#).is_err());
    let c = minimal_config();
    assert_eq!(SweepConfig::from_json(&c.to_json()).unwrap(), c);
}

#[test]
fn presets() {
    for name in experiment::PRESET_NAMES {
        let p = experiment::preset(name).unwrap();
        p.validate().unwrap();
        assert_eq!(p.n_seeds, 64);
    }
    let bench = experiment::preset("bench-paper").unwrap();
    assert_eq!(bench.policies.len(), 12);
    assert_eq!((bench.n_init, bench.n_iter), (3, 50));
    let toy = experiment::preset("toy-paper").unwrap();
    assert_eq!((toy.n_init, toy.n_iter), (2, 60));
    assert_eq!(experiment::preset("tp-paper").unwrap().surrogates, vec![SurrogateKind::Tp, SurrogateKind::Gp]);
    assert!(experiment::preset("nope").is_err());
}
