//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use epictl_core::gnn::{
    backward, evaluate, init_params, GnnParams, ModelConfig, StateFeatures, TrunkKind, FEATURE_DIM,
};
use epictl_core::metrics::{format_score, score, ScoreConfig, SeedAverage};
use epictl_core::policy::{run_episode, Baseline, Controller, ThresholdMatrix};
use epictl_core::ppo::{train, TrainOutcome};
use epictl_core::risk::{estimate_risk, RiskConfig};
use epictl_core::sim::{
    index_case_secondary_infections, DayVisits, InterventionAction, Observation, SocialGraph,
    VisibleHealth, VisitHistory,
};
use epictl_core::{RunConfig, Scenario, WorldConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed.as_secs_f64() < limit_secs as f64
}

// 1. Score arithmetic against the printed comparison tables.

/// (I, Q, printed Score); `None` marks a ">10000" entry.
const TABLE_ROWS: &[(f64, f64, Option<f64>)] = &[
    (8289.0, 123153.00, None),
    (58.0, 294460.50, None),
    (276.0, 6997.50, Some(3.75)),
    (319.0, 8210.00, Some(4.16)),
    (1108.0, 212940.00, None),
    (3557.0, 120731.00, None),
    (210.0, 6408.21, Some(3.42)),
    (220.0, 7067.01, Some(3.58)),
    (187.0, 5689.79, Some(3.22)),
    (137.0, 3748.58, Some(2.77)),
    (6588.0, 92563.00, None),
    (56.0, 294508.50, None),
    (204.0, 9187.50, Some(4.01)),
    (269.0, 8404.50, Some(4.03)),
    (1212.0, 211146.50, None),
    (2302.0, 92569.50, None),
    (177.0, 4794.87, Some(3.04)),
    (190.0, 5640.15, Some(3.22)),
    (183.0, 4935.03, Some(3.08)),
    (170.0, 4606.17, Some(2.99)),
    (8115.0, 113596.00, None),
    (55.0, 294491.50, None),
    (294.0, 7837.00, Some(3.99)),
    (328.0, 8724.50, Some(4.32)),
    (943.0, 212498.00, None),
    (3133.0, 119958.50, None),
    (193.0, 6091.76, Some(3.31)),
    (205.0, 7899.03, Some(3.71)),
    (187.0, 7112.14, Some(3.49)),
    (153.0, 4068.09, Some(2.86)),
    (8040.0, 119175.00, None),
    (70.0, 274364.50, None),
    (340.0, 8985.50, Some(4.43)),
    (323.0, 8388.00, Some(4.22)),
    (2091.0, 195949.00, None),
    (3331.0, 115858.00, None),
    (304.0, 7808.13, Some(4.02)),
    (291.0, 8193.50, Some(4.06)),
    (270.0, 7197.86, Some(3.77)),
    (193.0, 5061.64, Some(3.13)),
];

fn score_arithmetic() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for &(i, q, printed) in TABLE_ROWS {
        let s = score(i, q, 500.0, 10_000.0);
        match printed {
            Some(p) => {
                worst = worst.max((s - p).abs());
                if (s - p).abs() > 0.01 {
                    bad.push(format!("({i}, {q}) -> {s:.4} vs {p}"));
                }
            }
            None => {
                if format_score(s) != ">10000" {
                    bad.push(format!("({i}, {q}) -> {s} not >10000"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        bad.is_empty() && within(elapsed, 1),
        format!(
            "{} table entries, max |error| {worst:.4}, {:.3}s{}",
            TABLE_ROWS.len(),
            elapsed.as_secs_f64(),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; mismatches: {}", bad.join("; "))
            }
        ),
    )
}

// 2. Risk model against a literal walk over visit records.

struct TinyWorld {
    m: usize,
    n: usize,
    hours: Vec<Vec<Vec<u8>>>,
    health: Vec<VisibleHealth>,
    edges: Vec<(u32, u32)>,
    cfg: RiskConfig,
}

fn random_tiny_world(rng: &mut ChaCha8Rng) -> TinyWorld {
    let m = rng.random_range(1..=5);
    let n = rng.random_range(1..=2);
    let lookback = rng.random_range(1..=3);
    let days = rng.random_range(0..=4);
    let hours = (0..days)
        .map(|_| {
            (0..m)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            if rng.random_bool(0.4) {
                                0
                            } else {
                                rng.random_range(1..=8)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let health = (0..m)
        .map(|_| match rng.random_range(0..3) {
            0 => VisibleHealth::NotDiscovered,
            1 => VisibleHealth::Discovered,
            _ => VisibleHealth::Recovered,
        })
        .collect();
    let edges = (0..rng.random_range(0..=6))
        .map(|_| (rng.random_range(0..m as u32), rng.random_range(0..m as u32)))
        .collect();
    TinyWorld {
        m,
        n,
        hours,
        health,
        edges,
        cfg: RiskConfig {
            lookback_days: lookback,
            p_s: rng.random(),
            p_c: rng.random(),
            count_recovered: rng.random_bool(0.5),
        },
    }
}

fn brute_force_risk(t: &TinyWorld) -> Vec<f64> {
    let first = t.hours.len().saturating_sub(t.cfg.lookback_days);
    let mut records = Vec::new();
    for d in first..t.hours.len() {
        for p in 0..t.m {
            for a in 0..t.n {
                if t.hours[d][p][a] > 0 {
                    records.push((p, a, d));
                }
            }
        }
    }
    let known = |p: usize| match t.health[p] {
        VisibleHealth::Discovered => true,
        VisibleHealth::Recovered => t.cfg.count_recovered,
        VisibleHealth::NotDiscovered => false,
    };
    let acquainted = |i: usize, j: usize| {
        i != j
            && t.edges.iter().any(|&(a, b)| {
                let (a, b) = (a as usize, b as usize);
                (a, b) == (i, j) || (a, b) == (j, i)
            })
    };
    (0..t.m)
        .map(|i| match t.health[i] {
            VisibleHealth::Discovered => 1.0,
            VisibleHealth::Recovered => 0.0,
            VisibleHealth::NotDiscovered => {
                let mut hel = 1.0;
                for &(_, a, d) in records.iter().filter(|r| r.0 == i) {
                    let total = records.iter().filter(|r| (r.1, r.2) == (a, d)).count();
                    let infected = records
                        .iter()
                        .filter(|r| (r.1, r.2) == (a, d) && known(r.0))
                        .count();
                    hel *= 1.0 - t.cfg.p_s * infected as f64 / total as f64;
                }
                if records
                    .iter()
                    .any(|&(j, a, d)| known(j) && acquainted(i, j) && records.contains(&(i, a, d)))
                {
                    hel *= 1.0 - t.cfg.p_c;
                }
                1.0 - hel
            }
        })
        .collect()
}

fn risk_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let worlds = 200;
    for _ in 0..worlds {
        let t = random_tiny_world(&mut rng);
        let mut history = VisitHistory::new(5);
        for (d, day) in t.hours.iter().enumerate() {
            let mut v = DayVisits::new(d as u32, t.m, t.n);
            for (p, row) in day.iter().enumerate() {
                for (a, &h) in row.iter().enumerate() {
                    v.set_hours(p as u32, a as u32, h).unwrap();
                }
            }
            history.push(v);
        }
        let social = SocialGraph::from_edges(t.m, &t.edges).unwrap();
        let obs = Observation {
            day: t.hours.len() as u32,
            weekend: false,
            intervention_active: true,
            n_areas: t.n,
            health: t.health.clone(),
            actions: vec![InterventionAction::NoIntervention; t.m],
            history: &history,
            social: &social,
        };
        let got = estimate_risk(&obs, &t.cfg).unwrap().p_infe;
        for (a, b) in got.iter().zip(brute_force_risk(&t)) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-12 && within(elapsed, 10),
        format!(
            "{worlds} worlds, max |diff| {worst:.2e}, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// 3. GNN gradients against central finite differences.

fn loss(params: &GnnParams, feats: &StateFeatures, d_raw: &Array2<f64>, d_value: f64) -> f64 {
    let e = evaluate(params, feats).unwrap();
    (&e.raw * d_raw).sum() + d_value * e.value
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = ModelConfig {
        layers: 2,
        hidden: 3,
        shared_weights: false,
        trunk: TrunkKind::Graph,
    };
    let (m, n, h) = (4, 2, 1e-5);
    let mut worst: f64 = 0.0;
    let instances = 50;
    for case in 0..instances {
        let mut params = init_params(case, &cfg).unwrap();
        for t in params.tensors_mut() {
            for v in t.iter_mut() {
                *v += rng.random_range(-0.3..0.3);
            }
        }
        let feats = StateFeatures {
            node: Array2::from_shape_fn((m, FEATURE_DIM), |_| rng.random_range(-1.0..1.0)),
            visits: (0..2)
                .map(|_| {
                    Array2::from_shape_fn((m, n), |_| {
                        if rng.random_bool(0.3) {
                            0.0
                        } else {
                            rng.random_range(1..=12) as f64 / 24.0
                        }
                    })
                })
                .collect(),
        };
        let d_raw = Array2::from_shape_fn((m, 4), |_| rng.random_range(-1.0..1.0));
        let d_value: f64 = rng.random_range(-1.0..1.0);
        let e = evaluate(&params, &feats).unwrap();
        let grads = backward(&params, &e.cache, Some(&d_raw), d_value).unwrap();
        for (t, (_, _, analytic)) in grads.tensors().into_iter().enumerate() {
            for (j, &a) in analytic.iter().enumerate() {
                let mut plus = params.clone();
                plus.tensors_mut()[t][j] += h;
                let mut minus = params.clone();
                minus.tensors_mut()[t][j] -= h;
                let numeric = (loss(&plus, &feats, &d_raw, d_value)
                    - loss(&minus, &feats, &d_raw, d_value))
                    / (2.0 * h);
                let scale = a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((a - numeric).abs() / scale);
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-4 && within(elapsed, 30),
        format!(
            "{instances} instances, max relative error {worst:.2e}, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// 4. Threshold ordering and interval masses.

fn threshold_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let count = 100_000;
    let mut violations = 0;
    let mut worst_mass: f64 = 0.0;
    for k in 0..count {
        let scale = [1.0, 10.0, 100.0, 1e3][k % 4];
        let raw = Array2::from_shape_fn((1, 4), |_| rng.random_range(-scale..=scale));
        let thr = ThresholdMatrix::from_values(&raw).unwrap();
        let [p1, p2, p3] = thr.thresholds(0);
        if !(0.0 <= p1 && p1 <= p2 && p2 <= p3 && p3 <= 1.0) {
            violations += 1;
        }
        worst_mass = worst_mass.max((thr.masses(0).sum() - 1.0).abs());
    }
    verdict(
        violations == 0 && worst_mass <= 1e-9,
        format!("{count} logit vectors, {violations} ordering violations, max |mass sum - 1| {worst_mass:.2e}"),
    )
}

// 5. Basic reproduction number of the default world.

fn calibration() -> Verdict {
    let start = Instant::now();
    let runs = 1000u64;
    let mut total = 0usize;
    for seed in 0..runs {
        let cfg = WorldConfig {
            rng_seed: seed,
            ..WorldConfig::default()
        };
        total += index_case_secondary_infections(&cfg).unwrap();
    }
    let r0 = total as f64 / runs as f64;
    let elapsed = start.elapsed();
    verdict(
        (2.0..=2.5).contains(&r0) && within(elapsed, 120),
        format!(
            "mean secondary infections {r0:.3} over {runs} runs at M={}, {:.1}s",
            WorldConfig::default().population,
            elapsed.as_secs_f64()
        ),
    )
}

// 6. Baseline ordering.

fn baseline_average(b: Baseline, seeds: &[u64]) -> SeedAverage {
    let summaries: Vec<_> = seeds
        .iter()
        .map(|&seed| {
            let cfg = WorldConfig {
                rng_seed: seed,
                ..WorldConfig::default()
            };
            run_episode(
                &cfg,
                Controller::Baseline(b),
                &RiskConfig::default(),
                &ScoreConfig::default(),
                |_| Ok(()),
            )
            .unwrap()
            .metrics
            .summary("default", seed, false)
        })
        .collect();
    SeedAverage::of(&summaries)
}

fn baseline_ordering() -> Verdict {
    let start = Instant::now();
    let seeds = [0, 1, 2];
    let avg: BTreeMap<String, SeedAverage> = Baseline::STANDARD
        .iter()
        .map(|&b| (b.to_string(), baseline_average(b, &seeds)))
        .collect();
    let s = |name: &str| avg[name].score;
    let seeds_count = WorldConfig::default().initial_seed_count as f64;
    let expert_max = s("expert(0.01)").max(s("expert(0.015)"));
    let degree_min = s("degree_sample").min(s("degree_order"));
    let checks = [
        ("no_intervention > 10000", s("no_intervention") > 10_000.0),
        ("lockdown > 10000", s("lockdown") > 10_000.0),
        (
            "lockdown I <= seeds + 100",
            avg["lockdown"].infections <= seeds_count + 100.0,
        ),
        (
            "expert(0.01) < no_intervention",
            s("expert(0.01)") < s("no_intervention"),
        ),
        (
            "expert(0.015) < no_intervention",
            s("expert(0.015)") < s("no_intervention"),
        ),
        ("degree > expert", degree_min > expert_max),
    ];
    let elapsed = start.elapsed();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let table: Vec<String> = avg
        .iter()
        .map(|(k, v)| format!("{k}: I={:.1} Score={}", v.infections, format_score(v.score)))
        .collect();
    verdict(
        failed.is_empty() && within(elapsed, 1800),
        format!(
            "{}; {:.1}s{}",
            table.join(", "),
            elapsed.as_secs_f64(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failed.join(", "))
            }
        ),
    )
}

// 7 and 8. Training at smoke scale.

const TRAIN_SEED: u64 = 7;

fn smoke_config(trunk: TrunkKind, guard: bool) -> RunConfig {
    let mut cfg = RunConfig::load(Scenario::Default, None).unwrap();
    cfg.world.population = 500;
    cfg.train.total_steps = 20_000;
    cfg.model.trunk = trunk;
    cfg.train.guard_enabled = guard;
    cfg
}

fn final_score(out: &TrainOutcome) -> f64 {
    out.curve
        .iter()
        .rev()
        .find_map(|r| r.eval)
        .expect("final evaluation")
        .score
}

fn training_smoke(full: &TrainOutcome, elapsed: Duration) -> Verdict {
    let initial = full.initial_eval.score;
    let last = final_score(full);
    let finite = full.updates.iter().all(|u| u.is_finite());
    let ratio = full
        .updates
        .iter()
        .map(|u| u.initial_ratio_error)
        .fold(0.0, f64::max);
    verdict(
        last < initial && finite && ratio < 1e-9 && within(elapsed, 3600),
        format!(
            "random-init Score {initial:.4}, final Score {last:.4}, {} updates, losses finite: {finite}, max |ratio - 1| at first epoch {ratio:.1e}, {:.0}s",
            full.updates.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn ablation_direction(full: &TrainOutcome) -> Verdict {
    let no_graph = train(&smoke_config(TrunkKind::Perceptron, true), TRAIN_SEED).unwrap();
    let no_guard = train(&smoke_config(TrunkKind::Graph, false), TRAIN_SEED).unwrap();
    let (f, g, e) = (
        final_score(full),
        final_score(&no_graph),
        final_score(&no_guard),
    );
    verdict(
        f <= g && f <= e,
        format!(
            "full {f:.4}, no_graph {g:.4}, no_guard {e:.4} (guard fired {} times in full training)",
            full.guard_triggers
        ),
    )
}

// 9. Byte-identical CLI outputs.

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn run_cli(dir: &Path, out: &str, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_epictl"))
        .current_dir(dir)
        .args(args)
        .args(["--config", "smoke.toml", "--out", out])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("smoke.toml"),
        "population = 300\n[train]\ntotal_steps = 200\neval_interval = 1\neval_seeds = [11, 12]\n",
    )
    .unwrap();
    let subcommands: [&[&str]; 6] = [
        &["baseline", "--seeds", "0,1"],
        &["train", "--seeds", "3"],
        &[
            "eval",
            "--seeds",
            "0,1",
            "--checkpoint",
            "CKPT/learned_seed3_checkpoint",
        ],
        &["ablate", "--seeds", "3"],
        &["dump-risk", "--seeds", "0", "--method", "expert(0.01)"],
        &[
            "dump-actions",
            "--seeds",
            "0",
            "--checkpoint",
            "CKPT/learned_seed3_checkpoint",
        ],
    ];
    let mut ok = true;
    for out in ["run_a", "run_b"] {
        for args in subcommands {
            let args: Vec<String> = args.iter().map(|a| a.replace("CKPT", out)).collect();
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            ok &= run_cli(dir.path(), out, &args);
        }
    }
    let a = csv_files(&dir.path().join("run_a"));
    let b = csv_files(&dir.path().join("run_b"));
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    verdict(
        ok && !a.is_empty() && a.len() == b.len() && differing.is_empty(),
        format!(
            "6 subcommands run twice, all exited 0: {ok}, {} CSV files compared, {} differ{}",
            a.len(),
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(
                    ": {}",
                    differing
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            }
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |id: u32, name: &'static str, v: Verdict| {
        println!(
            "[{}] criterion {id} ({name}): {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((id, name, v));
    };
    record(1, "score arithmetic", score_arithmetic());
    record(2, "risk oracle equivalence", risk_oracle());
    record(3, "gnn gradient check", gradient_check());
    record(4, "threshold properties", threshold_properties());
    record(5, "simulator calibration", calibration());
    record(6, "baseline ordering", baseline_ordering());
    let start = Instant::now();
    let full = train(&smoke_config(TrunkKind::Graph, true), TRAIN_SEED).unwrap();
    let elapsed = start.elapsed();
    record(7, "training smoke", training_smoke(&full, elapsed));
    record(8, "ablation direction", ablation_direction(&full));
    record(9, "determinism", determinism());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
