use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use epictl_core::gnn::{
    init_params, load_checkpoint, save_checkpoint, CheckpointMeta, GnnParams, TrunkKind,
};
use epictl_core::metrics::{write_comparison_csv, ComparisonRow, EpisodeSummary, SeedAverage};
use epictl_core::policy::{run_episode, Baseline, Controller, EpisodeResult};
use epictl_core::ppo::{train, CurveRow};
use epictl_core::{Error, Result, RunConfig, Scenario};

#[derive(Parser)]
#[command(
    name = "epictl",
    version,
    about = "City epidemic simulator and intervention policy harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario preset: default, larger, changeable or late.
    #[arg(long, default_value = "default")]
    scenario: String,
    /// Comma-separated episode seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    /// TOML file overriding preset values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Ablations to apply to the learned model.
    #[arg(long, value_enum)]
    ablation: Vec<Ablation>,
    /// Replace the scenario's population.
    #[arg(long)]
    population_override: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ablation {
    NoGraph,
    NoGuard,
}

impl Ablation {
    fn name(self) -> &'static str {
        match self {
            Ablation::NoGraph => "no_graph",
            Ablation::NoGuard => "no_guard",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run rule-based policies and write a comparison table.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Baseline names; all standard baselines when omitted.
        #[arg(long = "method")]
        methods: Vec<String>,
    },
    /// Train the learned policy, one model per seed.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on the given seeds.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train the full model and each ablation with matched seeds and budget.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
    /// Write daily infection probabilities under a baseline policy.
    DumpRisk {
        #[command(flatten)]
        common: Common,
        #[arg(long = "method", default_value = "no_intervention")]
        method: String,
    },
    /// Write daily thresholds and actions of a learned policy.
    DumpActions {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to load; a seed-initialized model when omitted.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

struct Context {
    scenario: Scenario,
    cfg: RunConfig,
    common: Common,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let scenario: Scenario = common.scenario.parse()?;
        let mut cfg = RunConfig::load(scenario, common.config.as_deref())?;
        if let Some(m) = common.population_override {
            cfg.world.population = m;
        }
        for a in &common.ablation {
            match a {
                Ablation::NoGraph => cfg.model.trunk = TrunkKind::Perceptron,
                Ablation::NoGuard => cfg.train.guard_enabled = false,
            }
        }
        cfg.validate()?;
        if common.seeds.is_empty() {
            return Err(Error::Config {
                field: "seeds".into(),
                reason: "at least one seed is required".into(),
            });
        }
        fs::create_dir_all(&common.out)?;
        Ok(Self {
            scenario,
            cfg,
            common: common.clone(),
        })
    }

    fn seed_list(seeds: &[u64]) -> String {
        seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    fn preamble(&self, extra: &[String]) -> Vec<String> {
        let config = self
            .common
            .config
            .as_ref()
            .map_or("(preset)".to_string(), |p| p.display().to_string());
        let ablations: Vec<&str> = self.common.ablation.iter().map(|a| a.name()).collect();
        let mut lines = vec![
            format!("scenario={}", self.scenario),
            format!("seeds={}", Self::seed_list(&self.common.seeds)),
            format!("config={config}"),
            format!("population={}", self.cfg.world.population),
            format!("n_areas={}", self.cfg.world.n_areas),
        ];
        if !ablations.is_empty() {
            lines.push(format!("ablation={}", ablations.join(",")));
        }
        lines.extend_from_slice(extra);
        lines
    }

    fn path(&self, name: &str) -> PathBuf {
        self.common.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<fs::File>> {
        Ok(BufWriter::new(fs::File::create(self.path(name))?))
    }

    fn world_for(&self, seed: u64) -> epictl_core::WorldConfig {
        let mut w = self.cfg.world.clone();
        w.rng_seed = seed;
        w
    }

    fn write_episode(
        &self,
        label: &str,
        seed: u64,
        result: &EpisodeResult,
    ) -> Result<EpisodeSummary> {
        let mut daily = self.create(&format!("{label}_seed{seed}_daily.csv"))?;
        result.metrics.write_daily_csv(
            &mut daily,
            &self.preamble(&[format!("method={label}"), format!("episode_seed={seed}")]),
        )?;
        daily.flush()?;
        let summary = result.metrics.summary(self.scenario.name(), seed, false);
        let json =
            serde_json::to_string_pretty(&summary).map_err(|e| Error::Contract(e.to_string()))?;
        fs::write(
            self.path(&format!("{label}_seed{seed}_summary.json")),
            json + "\n",
        )?;
        Ok(summary)
    }

    fn write_comparison(&self, name: &str, rows: &[ComparisonRow]) -> Result<()> {
        let mut w = self.create(name)?;
        write_comparison_csv(&mut w, rows, &self.preamble(&[]))?;
        w.flush()?;
        Ok(())
    }

    fn checkpoint_meta(&self, params: &GnnParams, seed: u64) -> CheckpointMeta {
        CheckpointMeta {
            model: params.config,
            seed,
            population: self.cfg.world.population,
            n_areas: self.cfg.world.n_areas,
            scenario: self.scenario.name().to_string(),
        }
    }

    fn load_model(&self, dir: &Path) -> Result<GnnParams> {
        let (params, meta) = load_checkpoint(dir)?;
        meta.check_compatible(
            self.cfg.world.population,
            self.cfg.world.n_areas,
            self.cfg.model.layers,
        )?;
        Ok(params)
    }

    fn evaluate(&self, label: &str, params: &GnnParams) -> Result<ComparisonRow> {
        let mut summaries = Vec::new();
        for &seed in &self.common.seeds {
            let r = run_episode(
                &self.world_for(seed),
                Controller::Learned(params),
                &self.cfg.risk,
                &self.cfg.score,
                |_| Ok(()),
            )?;
            summaries.push(self.write_episode(label, seed, &r)?);
        }
        Ok(ComparisonRow {
            method: label.to_string(),
            average: SeedAverage::of(&summaries),
        })
    }

    /// Trains one model per seed under `cfg`; returns the best parameters.
    fn train_variant(&self, label: &str, cfg: &RunConfig) -> Result<Vec<(u64, GnnParams)>> {
        let mut out = Vec::new();
        for &seed in &self.common.seeds {
            eprintln!(
                "training {label} with seed {seed} for {} days",
                cfg.train.total_steps
            );
            let outcome = train(cfg, seed)?;
            let mut w = self.create(&format!("{label}_seed{seed}_curve.csv"))?;
            CurveRow::write_csv(
                &outcome.curve,
                &mut w,
                &self.preamble(&[format!("method={label}"), format!("train_seed={seed}")]),
            )?;
            w.flush()?;
            let dir = self.path(&format!("{label}_seed{seed}_checkpoint"));
            save_checkpoint(
                &dir,
                &outcome.best,
                &self.checkpoint_meta(&outcome.best, seed),
            )?;
            out.push((seed, outcome.best));
        }
        Ok(out)
    }
}

fn run_baseline(ctx: &Context, methods: &[String]) -> Result<()> {
    let baselines: Vec<Baseline> = if methods.is_empty() {
        Baseline::STANDARD.to_vec()
    } else {
        methods.iter().map(|m| m.parse()).collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    for b in baselines {
        let label = b.to_string();
        let mut summaries = Vec::new();
        for &seed in &ctx.common.seeds {
            let r = run_episode(
                &ctx.world_for(seed),
                Controller::Baseline(b),
                &ctx.cfg.risk,
                &ctx.cfg.score,
                |_| Ok(()),
            )?;
            summaries.push(ctx.write_episode(&label, seed, &r)?);
        }
        rows.push(ComparisonRow {
            method: label,
            average: SeedAverage::of(&summaries),
        });
    }
    ctx.write_comparison("baseline_comparison.csv", &rows)
}

fn variant_label(ablations: &[Ablation]) -> String {
    if ablations.is_empty() {
        "learned".to_string()
    } else {
        let names: Vec<&str> = ablations.iter().map(|a| a.name()).collect();
        format!("learned_{}", names.join("_"))
    }
}

fn run_train(ctx: &Context) -> Result<()> {
    ctx.train_variant(&variant_label(&ctx.common.ablation), &ctx.cfg)?;
    Ok(())
}

fn run_eval(ctx: &Context, checkpoint: &Path) -> Result<()> {
    let params = ctx.load_model(checkpoint)?;
    let row = ctx.evaluate("eval", &params)?;
    ctx.write_comparison("eval_comparison.csv", &[row])
}

fn run_ablate(ctx: &Context) -> Result<()> {
    let variants = [
        ("full", vec![]),
        ("no_graph", vec![Ablation::NoGraph]),
        ("no_guard", vec![Ablation::NoGuard]),
    ];
    let mut rows = Vec::new();
    for (label, ablations) in variants {
        let mut cfg = ctx.cfg.clone();
        for a in &ablations {
            match a {
                Ablation::NoGraph => cfg.model.trunk = TrunkKind::Perceptron,
                Ablation::NoGuard => cfg.train.guard_enabled = false,
            }
        }
        let models = ctx.train_variant(label, &cfg)?;
        let mut summaries = Vec::new();
        for (train_seed, params) in &models {
            for &seed in &cfg.train.eval_seeds {
                let r = run_episode(
                    &ctx.world_for(seed),
                    Controller::Learned(params),
                    &cfg.risk,
                    &cfg.score,
                    |_| Ok(()),
                )?;
                let mut s = r.metrics.summary(ctx.scenario.name(), seed, false);
                s.seed = train_seed * 1_000_000 + seed;
                summaries.push(s);
            }
        }
        rows.push(ComparisonRow {
            method: label.to_string(),
            average: SeedAverage::of(&summaries),
        });
    }
    ctx.write_comparison("ablation_comparison.csv", &rows)
}

fn run_dump_risk(ctx: &Context, method: &str) -> Result<()> {
    let b: Baseline = method.parse()?;
    for &seed in &ctx.common.seeds {
        let mut w = ctx.create(&format!("risk_seed{seed}.csv"))?;
        for line in ctx.preamble(&[format!("method={b}"), format!("episode_seed={seed}")]) {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "day,individual_id,p_infe")?;
        run_episode(
            &ctx.world_for(seed),
            Controller::Baseline(b),
            &ctx.cfg.risk,
            &ctx.cfg.score,
            |t| {
                for (i, p) in t.risk.p_infe.iter().enumerate() {
                    writeln!(w, "{},{i},{p}", t.day)?;
                }
                Ok(())
            },
        )?;
        w.flush()?;
    }
    Ok(())
}

fn run_dump_actions(ctx: &Context, checkpoint: Option<&Path>) -> Result<()> {
    for &seed in &ctx.common.seeds {
        let params = match checkpoint {
            Some(dir) => ctx.load_model(dir)?,
            None => init_params(seed, &ctx.cfg.model)?,
        };
        let mut w = ctx.create(&format!("actions_seed{seed}.csv"))?;
        for line in ctx.preamble(&[format!("episode_seed={seed}")]) {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "day,individual_id,p_infe,P1,P2,P3,action")?;
        run_episode(
            &ctx.world_for(seed),
            Controller::Learned(&params),
            &ctx.cfg.risk,
            &ctx.cfg.score,
            |t| {
                let Some(thr) = &t.thresholds else {
                    return Ok(());
                };
                for (i, (p, a)) in t.risk.p_infe.iter().zip(&t.actions).enumerate() {
                    let [p1, p2, p3] = thr.thresholds(i);
                    writeln!(w, "{},{i},{p},{p1},{p2},{p3},{}", t.day, a.name())?;
                }
                Ok(())
            },
        )?;
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Baseline { common, methods } => run_baseline(&Context::new(common)?, methods),
        Command::Train { common } => run_train(&Context::new(common)?),
        Command::Eval { common, checkpoint } => run_eval(&Context::new(common)?, checkpoint),
        Command::Ablate { common } => run_ablate(&Context::new(common)?),
        Command::DumpRisk { common, method } => run_dump_risk(&Context::new(common)?, method),
        Command::DumpActions { common, checkpoint } => {
            run_dump_actions(&Context::new(common)?, checkpoint.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } | Error::Format { .. } | Error::Io(_) => 2,
                Error::Numeric(_) => 3,
                Error::Contract(_) => 1,
            })
        }
    }
}
