use std::fs;

use epictl_core::gnn::{
    init_params, load_checkpoint, save_checkpoint, CheckpointMeta, ModelConfig, TrunkKind,
    WEIGHTS_FILE,
};
use epictl_core::metrics::{score, EpisodeMetrics, ScoreConfig};
use epictl_core::policy::{run_episode, Baseline, Controller};
use epictl_core::risk::RiskConfig;
use epictl_core::sim::{build_world, InterventionAction};
use epictl_core::{Error, RunConfig, Scenario, WorldConfig};

fn meta(model: ModelConfig) -> CheckpointMeta {
    CheckpointMeta {
        model,
        seed: 3,
        population: 500,
        n_areas: 11,
        scenario: "default".into(),
    }
}

#[test]
fn checkpoint_round_trip() {
    for model in [
        ModelConfig::default(),
        ModelConfig {
            shared_weights: true,
            ..ModelConfig::default()
        },
        ModelConfig {
            trunk: TrunkKind::Perceptron,
            ..ModelConfig::default()
        },
    ] {
        let dir = tempfile::tempdir().unwrap();
        let params = init_params(3, &model).unwrap();
        save_checkpoint(dir.path(), &params, &meta(model)).unwrap();
        let (loaded, m) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(m, meta(model));
        assert_eq!(loaded.config, params.config);
        for ((name, shape, a), (_, shape_b, b)) in
            params.tensors().into_iter().zip(loaded.tensors())
        {
            assert_eq!(shape, shape_b, "{name}");
            for (x, y) in a.iter().zip(b) {
                assert_eq!(*x as f32, *y as f32, "{name}");
            }
        }
        // A second save of the reloaded model is byte-identical.
        let again = tempfile::tempdir().unwrap();
        save_checkpoint(again.path(), &loaded, &m).unwrap();
        assert_eq!(
            fs::read(dir.path().join(WEIGHTS_FILE)).unwrap(),
            fs::read(again.path().join(WEIGHTS_FILE)).unwrap()
        );
    }
}

#[test]
fn incompatible_world_is_a_config_error() {
    let m = meta(ModelConfig::default());
    assert!(m.check_compatible(500, 11, 3).is_ok());
    assert!(matches!(
        m.check_compatible(400, 11, 3),
        Err(Error::Config { .. })
    ));
    assert!(matches!(
        m.check_compatible(500, 98, 3),
        Err(Error::Config { .. })
    ));
    assert!(matches!(
        m.check_compatible(500, 11, 2),
        Err(Error::Config { .. })
    ));
}

#[test]
fn damaged_checkpoints_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let params = init_params(3, &ModelConfig::default()).unwrap();
    save_checkpoint(dir.path(), &params, &meta(ModelConfig::default())).unwrap();
    let path = dir.path().join(WEIGHTS_FILE);
    let bytes = fs::read(&path).unwrap();

    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(
        load_checkpoint(dir.path()),
        Err(Error::Format { .. })
    ));

    let mut extra = bytes.clone();
    extra.push(0);
    fs::write(&path, &extra).unwrap();
    assert!(matches!(
        load_checkpoint(dir.path()),
        Err(Error::Format { .. })
    ));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    fs::write(&path, &magic).unwrap();
    assert!(matches!(
        load_checkpoint(dir.path()),
        Err(Error::Format { .. })
    ));

    let mut nan = bytes;
    let n = nan.len();
    nan[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
    fs::write(&path, &nan).unwrap();
    assert!(load_checkpoint(dir.path()).is_err());

    let missing = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_checkpoint(missing.path()),
        Err(Error::Format { .. })
    ));
}

#[test]
fn daily_csv_round_trip_reproduces_score() {
    let cfg = WorldConfig {
        population: 800,
        rng_seed: 2,
        ..WorldConfig::default()
    };
    for b in [Baseline::NoIntervention, Baseline::DegreeOrder] {
        let r = run_episode(
            &cfg,
            Controller::Baseline(b),
            &RiskConfig::default(),
            &ScoreConfig::default(),
            |_| Ok(()),
        )
        .unwrap();
        let mut buf = Vec::new();
        r.metrics
            .write_daily_csv(&mut buf, &["seed: 2".to_string()])
            .unwrap();
        let back = EpisodeMetrics::read_daily_csv(&buf[..], ScoreConfig::default()).unwrap();
        assert_eq!(back.infections(), r.metrics.infections());
        assert_eq!(back.cost(), r.metrics.cost());
        assert_eq!(back.score(), r.metrics.score());
        assert_eq!(back, r.metrics);
    }
    assert!(EpisodeMetrics::read_daily_csv(&b"day,x\n"[..], ScoreConfig::default()).is_err());
}

#[test]
fn isolating_everyone_costs_half_per_person() {
    let cfg = WorldConfig {
        population: 500,
        ..WorldConfig::default()
    };
    let sc = ScoreConfig::default();
    let mut w = build_world(&cfg).unwrap();
    let mut metrics = EpisodeMetrics::new(sc);
    for _ in 0..8 {
        let out = w.step_day(&vec![InterventionAction::Isolate; 500]).unwrap();
        let q = metrics.accumulate_day(&out);
        let h = out.counts.hospitalized as f64;
        assert_eq!(q, 0.5 * (500.0 - h) + h);
    }
    assert!(metrics.score() > 1.0);
}

#[test]
fn score_formula() {
    assert_eq!(score(0.0, 0.0, 500.0, 10_000.0), 2.0);
    let s = score(500.0, 10_000.0, 500.0, 10_000.0);
    assert!((s - 2.0 * std::f64::consts::E).abs() < 1e-12);
}

#[test]
fn config_file_overrides_and_rejects_unknown_keys() {
    let cfg = RunConfig::from_toml_str(
        Scenario::Larger,
        "population = 300\n[train]\ntotal_steps = 5\n[risk]\nlookback_days = 2\n",
    )
    .unwrap();
    assert_eq!(cfg.world.population, 300);
    assert_eq!(cfg.world.n_areas, 98);
    assert_eq!(cfg.train.total_steps, 5);
    assert_eq!(cfg.risk.lookback_days, 2);
    assert!(RunConfig::from_toml_str(Scenario::Default, "bogus = 1").is_err());
    assert!(matches!(
        RunConfig::from_toml_str(Scenario::Default, "p_s = 2.0"),
        Err(Error::Config { .. })
    ));
}
