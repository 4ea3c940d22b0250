use std::fs;
use std::path::Path;

use bbmlab::experiments::harness::checkpoint_config;
use bbmlab::experiments::{
    read_outcomes_csv, resume_experiment, run_experiment, ExperimentConfig, RunOptions, RunStatus,
};
use bbmlab::Error;

const CONFINED: &str = r#"
mode = "confined"
beta = 1.0
times = [0.5, 1.0]
replicas = 40
step = 0.01
halving = true
kappa = [0.3, 2.0]
seed = 11

[radius]
form = "constant"
r0 = 1.0
"#;

const LD: &str = r#"
mode = "confined"
beta = 2.0
times = [3.0, 4.0, 5.0]
replicas = 24
step = 0.02
kappa = [0.3, 5.0]
estimator = "closure"
seed = 5

[radius]
form = "power"
c = 1.0
alpha = 0.4
"#;

const OBSTACLE: &str = r#"
mode = "obstacle"
beta = 1.0
beta_bar = 0.0
nu = 1.0
times = [1.0, 2.0]
replicas = 30
seed = 2
env_seed = 17
"#;

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

fn opts(workers: usize, chunk: u64) -> RunOptions {
    RunOptions {
        workers,
        chunk_size: chunk,
        ..RunOptions::default()
    }
}

fn complete(status: RunStatus) -> bbmlab::experiments::RunSummary {
    match status {
        RunStatus::Complete(s) => s,
        RunStatus::Interrupted { completed } => panic!("interrupted at {completed}"),
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    for text in [CONFINED, LD, OBSTACLE] {
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("one"), dir.path().join("three"));
        run_experiment(&cfg, &a, &opts(1, 7)).unwrap();
        run_experiment(&cfg, &b, &opts(3, 5)).unwrap();
        assert_eq!(read(&a, "outcomes.csv"), read(&b, "outcomes.csv"));
        assert_eq!(read(&a, "estimates.csv"), read(&b, "estimates.csv"));
    }
}

#[test]
fn outcome_file_round_trips_through_the_reader() {
    let cfg = ExperimentConfig::from_toml_str(CONFINED).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = complete(run_experiment(&cfg, dir.path(), &RunOptions::default()).unwrap());
    let back = read_outcomes_csv(&dir.path().join("outcomes.csv")).unwrap();
    assert_eq!(back, summary.outcomes);
    assert_eq!(back.len(), 80);
    assert!(back.iter().all(|o| o.events.len() == 2 && o.n_t.is_some() && o.n_t_fine.is_some()));
}

#[test]
fn different_seeds_give_different_outcomes() {
    let cfg = ExperimentConfig::from_toml_str(CONFINED).unwrap();
    let mut other = cfg.clone();
    other.seed += 1;
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, &dir.path().join("a"), &RunOptions::default()).unwrap();
    run_experiment(&other, &dir.path().join("b"), &RunOptions::default()).unwrap();
    assert_ne!(read(&dir.path().join("a"), "outcomes.csv"), read(&dir.path().join("b"), "outcomes.csv"));
}

#[test]
fn resume_after_interrupt_is_byte_identical() {
    for text in [CONFINED, LD] {
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let reference = dir.path().join("reference");
        run_experiment(&cfg, &reference, &opts(1, 4)).unwrap();

        let ck = dir.path().join("run.ckpt");
        let resumed = dir.path().join("resumed");
        let interrupted = RunOptions {
            checkpoint: Some(ck.clone()),
            stop_after_chunks: Some(cfg.replicas as usize / 8),
            ..opts(2, 4)
        };
        match run_experiment(&cfg, &resumed, &interrupted).unwrap() {
            RunStatus::Interrupted { completed } => assert_eq!(completed, cfg.replicas / 2),
            RunStatus::Complete(_) => panic!("expected an interrupt"),
        }
        assert!(!resumed.join("outcomes.csv").exists());
        assert_eq!(checkpoint_config(&ck).unwrap(), cfg);

        complete(resume_experiment(Some(&cfg), &ck, &resumed, &opts(1, 4)).unwrap());
        for name in ["outcomes.csv", "estimates.csv"] {
            assert_eq!(read(&reference, name), read(&resumed, name), "{name}");
        }
    }
}

#[test]
fn repeated_interrupts_resume_from_the_embedded_config() {
    let cfg = ExperimentConfig::from_toml_str(CONFINED).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("reference");
    run_experiment(&cfg, &reference, &opts(1, 8)).unwrap();

    let ck = dir.path().join("ckpt.json");
    let out = dir.path().join("out");
    let step = |chunks| RunOptions {
        checkpoint: Some(ck.clone()),
        stop_after_chunks: Some(chunks),
        ..opts(1, 8)
    };
    assert!(matches!(
        run_experiment(&cfg, &out, &step(1)).unwrap(),
        RunStatus::Interrupted { completed: 8 }
    ));
    assert!(matches!(
        resume_experiment(None, &ck, &out, &step(2)).unwrap(),
        RunStatus::Interrupted { completed: 24 }
    ));
    complete(resume_experiment(None, &ck, &out, &step(10)).unwrap());
    assert_eq!(read(&reference, "outcomes.csv"), read(&out, "outcomes.csv"));
    assert_eq!(read(&reference, "estimates.csv"), read(&out, "estimates.csv"));
}

#[test]
fn resume_refuses_an_altered_config() {
    let cfg = ExperimentConfig::from_toml_str(CONFINED).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ckpt.json");
    let interrupted = RunOptions {
        checkpoint: Some(ck.clone()),
        stop_after_chunks: Some(1),
        ..opts(1, 10)
    };
    run_experiment(&cfg, dir.path(), &interrupted).unwrap();
    let mut altered = cfg.clone();
    altered.beta = 1.5;
    match resume_experiment(Some(&altered), &ck, dir.path(), &RunOptions::default()) {
        Err(Error::ConfigHashMismatch { expected, found }) => {
            assert_eq!(expected, altered.hash());
            assert_eq!(found, cfg.hash());
        }
        other => panic!("expected a hash mismatch, got {other:?}"),
    }
}

#[test]
fn quenched_environment_is_written_and_reusable() {
    let cfg = ExperimentConfig::from_toml_str(OBSTACLE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_experiment(&cfg, &first, &RunOptions::default()).unwrap();

    let mut from_file = cfg.clone();
    from_file.env_file = Some(first.join("env.csv"));
    let second = dir.path().join("second");
    run_experiment(&from_file, &second, &RunOptions::default()).unwrap();
    assert_eq!(read(&first, "env.csv"), read(&second, "env.csv"));
    let a = read_outcomes_csv(&first.join("outcomes.csv")).unwrap();
    let b = read_outcomes_csv(&second.join("outcomes.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_record_carries_hash_and_workers() {
    let cfg = ExperimentConfig::from_toml_str(CONFINED).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path(), &opts(2, 16)).unwrap();
    let record: serde_json::Value = serde_json::from_slice(&read(dir.path(), "run.json")).unwrap();
    assert_eq!(record["config_hash"], cfg.hash());
    assert_eq!(record["workers"], 2);
    assert_eq!(record["mode"], "confined");
    assert!(record["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn too_small_environment_is_reported() {
    let mut cfg = ExperimentConfig::from_toml_str(OBSTACLE).unwrap();
    cfg.beta_bar = 1.0;
    cfg.nu = 0.0;
    cfg.times = vec![6.0];
    cfg.box_half_width = Some(40.0);
    cfg.validate().unwrap();
    let small = bbmlab::environment::TrapField::from_atoms(
        1,
        0.0,
        0.5,
        bbmlab::AxisBox::centered_cube(1, 0.6).unwrap(),
        Vec::new(),
        0,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("tiny.csv");
    bbmlab::environment::write_env_file(&small, &env).unwrap();
    cfg.env_file = Some(env);
    match run_experiment(&cfg, dir.path(), &RunOptions::default()) {
        Err(Error::EnvironmentTooSmall { required_half_width, .. }) => {
            let expected = 2f64.sqrt() * 6.0 + 6.0 * 6f64.sqrt();
            assert!((required_half_width - expected).abs() < 1e-12);
        }
        other => panic!("expected EnvironmentTooSmall, got {other:?}"),
    }
}

#[test]
fn lattice_scan_reports_the_smallest_cube_clearing() {
    let text = r#"
mode = "clearing_scan"
dim = 1
nu = 0.8
trap_radius = 0.2
replicas = 12
seed = 3

[clearing]
ell = 2.0
rho = 0.3
resolution = 0.05
"#;
    let single = ExperimentConfig::from_toml_str(text).unwrap();
    let mut lattice = single.clone();
    lattice.clearing.lattice = true;
    lattice.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = complete(run_experiment(&single, &dir.path().join("a"), &RunOptions::default()).unwrap());
    let b = complete(run_experiment(&lattice, &dir.path().join("b"), &RunOptions::default()).unwrap());
    assert_eq!(a.outcomes.len(), b.outcomes.len());
    for o in &b.outcomes {
        let r = o.clearing_radius.unwrap();
        assert!((0.0..=2.0).contains(&r));
        assert_eq!(o.hit, Some(r >= 0.3));
    }
    assert!(b.estimates.iter().any(|e| e.estimand.starts_with("P(every lattice cube")));

    let mut bad = lattice.clone();
    bad.clearing.lattice_power = 1;
    assert!(bad.validate().is_err());
}
