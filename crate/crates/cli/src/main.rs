use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msti_cli::config_file::ConfigFile;
use msti_cli::service::{self, MetricsRequest, Prediction, RewardRequest};
use msti_core::dataset::{self, DatasetManifest, SplitRatios};
use msti_core::ftpo_sim::{self, SimConfig, SlotPolicy, GRADCHECK_TOLERANCE};
use msti_core::loss_weights::{weight_mask, WeightRequest};
use msti_core::{parse_response, Sample, Split};
use serde::{Deserialize, Serialize};

const DEFAULT_BIND: &str = "127.0.0.1:8080";
const BIND_ENV: &str = "MSTI_BIND";

#[derive(Parser)]
#[command(name = "msti", version, about = "Sarcasm target identification: parsing, rewards, metrics, datasets")]
struct Cli {
    /// JSON file with optional "reward", "ftpo_sim" and "judge" sections.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse one completion (file or stdin).
    Parse {
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Score groups of completions (same document as POST /v1/reward).
    Score {
        #[arg(long, value_name = "FILE")]
        request: PathBuf,
    },
    /// Evaluate predictions against a reference manifest.
    Metrics {
        /// JSONL of {"id", "completion"}.
        #[arg(long, value_name = "FILE")]
        preds: PathBuf,
        /// JSONL dataset manifest.
        #[arg(long, value_name = "FILE")]
        refs: PathBuf,
    },
    /// Dataset tooling.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// LLM-as-a-judge scoring.
    #[command(subcommand)]
    Judge(JudgeCommand),
    /// Policy-optimization simulator.
    #[command(subcommand, name = "ftpo-sim")]
    FtpoSim(SimCommand),
    /// Per-token loss weights from {"target", "token_spans", "lambda"}.
    LossWeights {
        #[arg(long, value_name = "FILE")]
        request: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        /// Bind address; defaults to $MSTI_BIND or 127.0.0.1:8080.
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Check every record and report warnings.
    Validate { file: PathBuf },
    /// Convert pixel boxes to the 0..1000 space.
    Normalize {
        file: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Add non-sarcastic donor records up to a target ratio per split.
    Rebalance {
        #[arg(long, value_name = "FILE")]
        primary: PathBuf,
        #[arg(long, value_name = "FILE")]
        donors: PathBuf,
        /// Target non-sarcastic fraction for every split.
        #[arg(long, default_value_t = 0.0)]
        ratio: f64,
        /// Per-split override, e.g. `val=0.42`.
        #[arg(long = "split-ratio", value_name = "SPLIT=RATIO", value_parser = parse_split_ratio)]
        split_ratio: Vec<(Split, f64)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Class and modality counts per split.
    Stats { file: PathBuf },
}

#[derive(Subcommand)]
enum JudgeCommand {
    /// Score {"sample", "response"} pairs; the client settings come from the
    /// "judge" section of --config.
    Run {
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Train on the built-in toy task and emit the reward curve as CSV.
    Run {
        #[command(flatten)]
        overrides: SimOverrides,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compare analytic and finite-difference gradients.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        instances: usize,
    },
}

#[derive(Args)]
struct SimOverrides {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beta_kl: Option<f64>,
    #[arg(long)]
    eps_clip: Option<f64>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    random_rationale: bool,
}

fn parse_split_ratio(s: &str) -> Result<(Split, f64), String> {
    let (split, ratio) = s.split_once('=').ok_or("expected SPLIT=RATIO")?;
    Ok((split.parse()?, ratio.parse().map_err(|e| format!("{e}"))?))
}

enum Failure {
    /// Bad input data or configuration.
    Data(String),
    /// A numeric acceptance threshold was missed.
    Threshold(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_file(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Failure> {
    let text = read_file(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Failure::Data(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("outputs serialize"));
}

fn load_relative(path: &Path) -> Result<Vec<Sample>, Failure> {
    let loaded = dataset::load_and_validate(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(loaded.manifest.into_relative()?)
}

struct Ctx {
    config: ConfigFile,
    json: bool,
}

fn cmd_parse(ctx: &Ctx, input: Option<&Path>) -> Outcome {
    let text = match input {
        Some(p) => read_file(p)?,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let r = parse_response(&text);
    if ctx.json {
        print_json(&r);
    } else {
        match &r.failure {
            None => {
                println!("format: ok");
                println!("label: {}", r.answer.label);
                let boxes: Vec<String> = r.answer.boxes.iter().map(|b| b.to_string()).collect();
                println!("boxes: [{}]", boxes.join(", "));
                println!("keywords: {}", r.answer.keywords);
            }
            Some(f) => println!("format: failed ({f})"),
        }
    }
    Ok(())
}

fn cmd_score(ctx: &Ctx, request: &Path) -> Outcome {
    let req: RewardRequest = read_json(request)?;
    let resp = service::handle_reward(&ctx.config.reward, &req).map_err(|e| Failure::Data(e.message))?;
    if ctx.json {
        print_json(&resp);
    } else {
        for (i, item) in resp.items.iter().enumerate() {
            println!("item {i}");
            println!("  {:>3} {:>8} {:>5} {:>5} {:>8} {:>8} {:>8} {:>10}", "#", "total", "fmt", "acc", "box", "txt", "over", "advantage");
            for (j, (v, a)) in item.rewards.iter().zip(&item.advantages).enumerate() {
                println!(
                    "  {j:>3} {:>8.4} {:>5} {:>5} {:>8.4} {:>8.4} {:>8.4} {a:>10.4}",
                    v.total, v.fmt, v.acc, v.box_, v.txt, v.over
                );
            }
        }
    }
    Ok(())
}

fn cmd_metrics(ctx: &Ctx, preds: &Path, refs: &Path) -> Outcome {
    let predictions: Vec<Prediction> = read_jsonl(preds)?;
    let references = load_relative(refs)?;
    let report = service::handle_metrics(&MetricsRequest { predictions, references }).map_err(|e| Failure::Data(e.message))?;
    if ctx.json {
        print_json(&report);
    } else {
        let c = &report.classification;
        println!("samples           {}", report.n_samples);
        println!("format failures   {}", report.format_failures);
        println!("accuracy          {:.4}", c.accuracy);
        println!("precision         {:.4}", c.precision);
        println!("recall            {:.4}", c.recall);
        println!("macro F1          {:.4}", c.macro_f1);
        println!("sarcastic F1      {:.4}", c.positive_f1);
        println!("EM                {:.4}", report.em);
        println!("token F1          {:.4}", report.token_f1);
        println!("AP                {:.4}", report.visual.ap);
        println!("AP50              {:.4}", report.visual.ap50);
        println!("AP75              {:.4}", report.visual.ap75);
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateSummary<'a> {
    records: usize,
    coordinate_space: dataset::CoordinateSpace,
    warnings: &'a [dataset::ValidationWarning],
}

fn cmd_dataset(ctx: &Ctx, cmd: &DatasetCommand) -> Outcome {
    let load = |p: &Path| dataset::load_and_validate(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())));
    match cmd {
        DatasetCommand::Validate { file } => {
            let loaded = load(file)?;
            let summary = ValidateSummary {
                records: loaded.manifest.len(),
                coordinate_space: loaded.manifest.coordinate_space(),
                warnings: &loaded.warnings,
            };
            if ctx.json {
                print_json(&summary);
            } else {
                println!("{} records ({} coordinates), {} warnings", summary.records, summary.coordinate_space, summary.warnings.len());
                for w in &loaded.warnings {
                    eprintln!("line {} ({}): {}", w.line, w.id, w.message);
                }
            }
        }
        DatasetCommand::Normalize { file, out } => {
            let m = dataset::normalize_manifest(load(file)?.manifest)?;
            m.write(out)?;
            if ctx.json {
                print_json(&serde_json::json!({"records": m.len(), "out": out}));
            } else {
                println!("wrote {} records to {}", m.len(), out.display());
            }
        }
        DatasetCommand::Rebalance { primary, donors, ratio, split_ratio, seed, out } => {
            let mut ratios = SplitRatios::uniform(*ratio);
            for &(split, r) in split_ratio {
                ratios = ratios.with(split, r);
            }
            let m = dataset::rebalance(&load(primary)?.manifest, &load(donors)?.manifest, &ratios, *seed)?;
            m.write(out)?;
            let st = dataset::stats(&m)?;
            if ctx.json {
                print_json(&st);
            } else {
                println!("wrote {} records to {}", m.len(), out.display());
                print_stats(&st);
            }
        }
        DatasetCommand::Stats { file } => {
            let m: DatasetManifest = load(file)?.manifest;
            let st = dataset::stats(&m)?;
            if ctx.json {
                print_json(&st);
            } else {
                print_stats(&st);
            }
        }
    }
    Ok(())
}

fn print_stats(st: &dataset::DatasetStats) {
    println!("{:<6} {:>10} {:>14} {:>8}", "split", "sarcastic", "non-sarcastic", "total");
    for (name, c) in [("train", st.train), ("val", st.val), ("test", st.test), ("total", st.total)] {
        println!("{name:<6} {:>10} {:>14} {:>8}", c.sarcastic, c.non_sarcastic, c.total);
    }
    let m = st.modality;
    println!(
        "sarcastic targets: text only {}, visual only {}, both {}, neither {}",
        m.text_only, m.visual_only, m.text_and_visual, m.neither
    );
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgePair {
    sample: Sample,
    response: String,
}

fn cmd_judge(ctx: &Ctx, pairs: &Path, out: Option<&Path>) -> Outcome {
    let cfg = ctx.config.judge.clone().ok_or_else(|| Failure::Data("--config must contain a \"judge\" section".into()))?;
    let pairs: Vec<JudgePair> = read_jsonl(pairs)?;
    let pairs: Vec<(Sample, String)> = pairs.into_iter().map(|p| (p.sample, p.response)).collect();
    let report = msti_judge::evaluate_corpus_blocking(&cfg, &pairs)?;
    if let Some(out) = out {
        std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    if ctx.json {
        print_json(&report);
    } else {
        match &report.means {
            Some(m) => println!("V {:.3}  R {:.3}  C {:.3}", m.v, m.r, m.c),
            None => println!("no sample was scored"),
        }
        println!("scored {}, failed {}, network calls {}", report.scored, report.failures, report.network_calls);
    }
    Ok(())
}

#[derive(Serialize)]
struct SimSummary {
    config: SimConfig,
    baseline_expected_total: f64,
    final_expected_total: f64,
    max_attainable_total: f64,
    curve: Vec<ftpo_sim::StepStats>,
}

fn cmd_sim(ctx: &Ctx, cmd: &SimCommand) -> Outcome {
    match cmd {
        SimCommand::Run { overrides: o, out } => {
            let mut cfg = ctx.config.ftpo_sim.clone();
            cfg.steps = o.steps.unwrap_or(cfg.steps);
            cfg.lr = o.lr.unwrap_or(cfg.lr);
            cfg.seed = o.seed.unwrap_or(cfg.seed);
            cfg.beta_kl = o.beta_kl.unwrap_or(cfg.beta_kl);
            cfg.eps_clip = o.eps_clip.unwrap_or(cfg.eps_clip);
            cfg.group_size = o.group_size.unwrap_or(cfg.group_size);
            cfg.random_rationale |= o.random_rationale;
            let rc = &ctx.config.reward;
            let (gt, tables) = ftpo_sim::toy_task();
            let init = SlotPolicy::uniform(tables)?;
            let outcome = ftpo_sim::train(&init, &gt, &cfg, rc)?;
            if let Some(out) = out {
                std::fs::write(out, outcome.to_csv())?;
            }
            if ctx.json {
                print_json(&SimSummary {
                    baseline_expected_total: ftpo_sim::expected_total(&init, &gt, rc)?,
                    final_expected_total: ftpo_sim::expected_total(&outcome.final_policy, &gt, rc)?,
                    max_attainable_total: ftpo_sim::max_attainable_total(&init, &gt, rc)?,
                    config: cfg,
                    curve: outcome.curve,
                });
            } else if out.is_none() {
                print!("{}", outcome.to_csv());
            }
            Ok(())
        }
        SimCommand::Gradcheck { seed, instances } => {
            let report = ftpo_sim::gradcheck(*seed, *instances)?;
            if ctx.json {
                print_json(&report);
            } else {
                println!(
                    "max relative error {:e} over {} instances (tolerance {GRADCHECK_TOLERANCE:e}): {}",
                    report.max_relative_error,
                    report.instances,
                    if report.passed { "PASS" } else { "FAIL" }
                );
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Threshold(format!("gradient check failed: {:e}", report.max_relative_error)))
            }
        }
    }
}

fn cmd_loss_weights(ctx: &Ctx, request: &Path) -> Outcome {
    let req: WeightRequest = read_json(request)?;
    let mask = weight_mask(&req.target, &req.token_spans, req.lambda)?;
    if ctx.json {
        print_json(&mask);
    } else {
        let w: Vec<String> = mask.weights.iter().map(|w| w.to_string()).collect();
        println!("{}", w.join(" "));
    }
    Ok(())
}

fn cmd_serve(ctx: &Ctx, bind: Option<&str>) -> Outcome {
    let addr = bind.map(str::to_string).or_else(|| std::env::var(BIND_ENV).ok()).unwrap_or_else(|| DEFAULT_BIND.into());
    let addr: SocketAddr = addr.parse().map_err(|e| Failure::Data(format!("bind address `{addr}`: {e}")))?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(addr, ctx.config.reward.clone()))
        .map_err(|e| Failure::Data(format!("cannot serve on {addr}: {e}")))
}

fn run(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p).map_err(Failure::Data)?,
        None => ConfigFile::default(),
    };
    let ctx = Ctx { config, json: cli.json };
    match &cli.command {
        Command::Parse { input } => cmd_parse(&ctx, input.as_deref()),
        Command::Score { request } => cmd_score(&ctx, request),
        Command::Metrics { preds, refs } => cmd_metrics(&ctx, preds, refs),
        Command::Dataset(cmd) => cmd_dataset(&ctx, cmd),
        Command::Judge(JudgeCommand::Run { pairs, out }) => cmd_judge(&ctx, pairs, out.as_deref()),
        Command::FtpoSim(cmd) => cmd_sim(&ctx, cmd),
        Command::LossWeights { request } => cmd_loss_weights(&ctx, request),
        Command::Serve { bind } => cmd_serve(&ctx, bind.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Threshold(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
