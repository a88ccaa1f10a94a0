use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pkmdp::generate::GeneratorSpec;
use pkmdp::harness::{
    config_schema, emit_plot_data, record_schema, run, write_outcome, AuditCriterion, ExperimentConfig,
    ExperimentKind, ModelSource, RunRecord, OUTPUT_DIR_ENV,
};
use pkmdp::learn_q::{ExplorationMode, LearningRateSchedule};
use pkmdp::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_VERDICT: u8 = 3;

#[derive(Parser)]
#[command(name = "pkmdp", version, about = "Solve, perturb and learn tabular MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal discounted values (with --alpha) or optimal gain.
    Solve(RunArgs),
    /// Values of one deterministic policy and its discount sweep.
    Evaluate(RunArgs),
    /// Perturb models and audit the value gap over all policies.
    PerturbAudit(RunArgs),
    /// Episodic explore/exploit run for the average criterion.
    LearnAvg(RunArgs),
    /// Online Q-learning against the exact optimum.
    LearnQ(RunArgs),
    /// Exact spanning-map values against the linear solve.
    VerifyRational(RunArgs),
    /// Replay-process identity and projected-model distances.
    ArpCheck(RunArgs),
    /// Generate a random communicating model.
    GenModel(RunArgs),
    /// Two-column CSV of one series of a record.
    PlotData(PlotArgs),
    /// Print the JSON schema of records or configs.
    Schema {
        #[arg(value_enum)]
        which: SchemaKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaKind {
    Record,
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Discounted,
    Corollary,
    Average,
}

#[derive(Args)]
struct PlotArgs {
    /// A record.json written by a run.
    #[arg(long)]
    record: PathBuf,
    #[arg(long, default_value = "")]
    series: String,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    gen_states: Option<usize>,
    #[arg(long, default_value_t = 2)]
    gen_actions: usize,
    #[arg(long, default_value_t = 0.1)]
    gen_p_min: f64,
    #[arg(long, default_value_t = 3)]
    gen_out_degree: usize,
    #[arg(long, default_value_t = 0.0)]
    gen_reward_min: f64,
    #[arg(long, default_value_t = 1.0)]
    gen_reward_max: f64,
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    start: Option<usize>,
    /// One action per state, comma separated.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    criterion: Option<CriterionArg>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    /// `harmonic`, `poly:<omega>` or `const:<gamma>`.
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<LearningRateSchedule>,
    /// `greedy` or `eps:<c>`.
    #[arg(long, value_parser = parse_exploration)]
    exploration: Option<ExplorationMode>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    reward_bound: Option<f64>,
    #[arg(long)]
    episodes: Option<u32>,
    #[arg(long)]
    base: Option<u64>,
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long)]
    exact: bool,
    /// Also write the trajectory as JSON lines.
    #[arg(long)]
    trajectory: bool,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the record to stdout as well.
    #[arg(long)]
    print: bool,
}

fn parse_schedule(s: &str) -> Result<LearningRateSchedule, String> {
    let number = |x: &str| x.parse::<f64>().map_err(|e| format!("{x}: {e}"));
    let schedule = match s.split_once(':') {
        None if s == "harmonic" => LearningRateSchedule::Harmonic,
        Some(("poly", w)) => LearningRateSchedule::Polynomial { omega: number(w)? },
        Some(("const", g)) => LearningRateSchedule::Constant { gamma: number(g)? },
        _ => return Err(format!("unknown schedule `{s}`")),
    };
    schedule.validate().map_err(|e| e.to_string())?;
    Ok(schedule)
}

fn parse_exploration(s: &str) -> Result<ExplorationMode, String> {
    match s.split_once(':') {
        None if s == "greedy" => Ok(ExplorationMode::Greedy),
        Some(("eps", c)) => c
            .parse()
            .map(|c| ExplorationMode::EpsilonGreedy { c })
            .map_err(|e| format!("{c}: {e}")),
        _ => Err(format!("unknown exploration `{s}`")),
    }
}

impl RunArgs {
    fn into_config(self, kind: ExperimentKind) -> pkmdp::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if c.kind.is_some_and(|k| k != kind) {
            return Err(Error::Config {
                field: "kind".into(),
                detail: "config file names a different experiment".into(),
            });
        }
        c.kind = Some(kind);
        if let Some(p) = self.model {
            c.model = Some(ModelSource::Path(p));
        }
        if let Some(states) = self.gen_states {
            c.model = Some(ModelSource::Generate(GeneratorSpec {
                reward_min: self.gen_reward_min,
                reward_max: self.gen_reward_max,
                ..GeneratorSpec::new(states, self.gen_actions, self.gen_p_min, self.gen_out_degree, self.gen_seed)
            }));
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if self.$field.is_some() { c.$field = self.$field; } )* };
        }
        set!(seed, alpha, eps, delta, start, schedule, exploration, p_min, reward_bound, episodes, base, stride, jobs, steps, trials);
        if self.policy.is_some() {
            c.policy = self.policy;
        }
        if let Some(k) = self.criterion {
            c.criterion = Some(match k {
                CriterionArg::Discounted => AuditCriterion::Discounted,
                CriterionArg::Corollary => AuditCriterion::Corollary,
                CriterionArg::Average => AuditCriterion::Average,
            });
        }
        if self.samples.is_some() {
            c.stochastic_samples = self.samples;
        }
        if self.exact {
            c.exact = Some(true);
        }
        if self.trajectory {
            c.trajectory = Some(true);
        }
        if self.output_dir.is_some() {
            c.output_dir = self.output_dir;
        }
        Ok(c)
    }
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::ModelFile(_) | Error::InvalidModel(_) => {
            ExitCode::from(EXIT_CONFIG)
        }
        _ => ExitCode::FAILURE,
    }
}

fn execute(kind: ExperimentKind, args: RunArgs) -> pkmdp::Result<ExitCode> {
    let print = args.print;
    let config = args.into_config(kind)?;
    let outcome = run(&config)?;
    let dir = config.output_dir();
    write_outcome(&outcome, &dir)?;
    if print {
        println!("{}", outcome.record.to_json()?);
    }
    log::info!("wrote {} in {:.3}s", dir.display(), outcome.elapsed.as_secs_f64());
    match &outcome.record.verdict {
        Some(v) if !v.passed => {
            eprintln!("check failed: {}", v.detail);
            Ok(ExitCode::from(EXIT_VERDICT))
        }
        Some(v) => {
            eprintln!("check passed: {}", v.detail);
            Ok(ExitCode::SUCCESS)
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn plot(args: PlotArgs) -> pkmdp::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.record).map_err(|e| Error::Config {
        field: "record".into(),
        detail: format!("{}: {e}", args.record.display()),
    })?;
    let record = RunRecord::from_json(&text)?;
    let csv = emit_plot_data(&record, &args.series)?;
    match args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => execute(ExperimentKind::Solve, a),
        Command::Evaluate(a) => execute(ExperimentKind::Evaluate, a),
        Command::PerturbAudit(a) => execute(ExperimentKind::PerturbAudit, a),
        Command::LearnAvg(a) => execute(ExperimentKind::LearnAvg, a),
        Command::LearnQ(a) => execute(ExperimentKind::LearnQ, a),
        Command::VerifyRational(a) => execute(ExperimentKind::VerifyRational, a),
        Command::ArpCheck(a) => execute(ExperimentKind::ArpCheck, a),
        Command::GenModel(a) => execute(ExperimentKind::GenModel, a),
        Command::PlotData(a) => plot(a),
        Command::Schema { which } => {
            let schema = match which {
                SchemaKind::Record => record_schema(),
                SchemaKind::Config => config_schema(),
            };
            println!("{}", serde_json::to_string_pretty(&schema).expect("schema serializes"));
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
