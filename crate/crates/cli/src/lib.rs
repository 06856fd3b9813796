//! Command-line surface for the state-tracking benchmark.
//!
//! Subcommands compose into a pipeline over plain files:
//! `ingest` (PGN -> tasks.jsonl), `predict` (tasks -> records.jsonl),
//! `evaluate` (records -> eval.jsonl), `report` (eval -> CSV/JSON), plus
//! `validate` (estimator self-studies) and `perft` (engine self-check).

pub mod report;
pub mod stats;
pub mod validate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use statecheck_core::chess::fen::{format_fen, parse_fen};
use statecheck_core::chess::movegen::perft;
use statecheck_core::chess::pgn::parse_pgn;
use statecheck_core::chess::ChessState;
use statecheck_core::estimators::{EstimatorConfig, EstimatorKind, Resampling};
use statecheck_core::metrics::{EditDistanceFields, MetricConfig};
use statecheck_pipeline::records::read_lines;
use statecheck_pipeline::{
    evaluate_records, ingest_corpus, predict_states, read_tasks, write_tasks, EchoPredictor,
    HttpPredictor, IngestConfig, LlmConfig, PredictError,
};

use report::{emit_report, summarize_groups, EvaluatedLine, ReportConfig, ReportFormat};

/// Reference values observed for GPT-4o on Lichess games, printed next to a
/// live smoke run for orientation; never asserted by tests.
pub const GPT4O_REFERENCE_OVERALL_TAU: f64 = 0.69;
pub const GPT4O_REFERENCE_MEAN_P4_RANGE: (f64, f64) = (0.6, 0.015);

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 network error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Network(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Network(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Network(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> CliError {
        match e {
            PredictError::Prompt(m) => CliError::Usage(m),
            PredictError::Persistence(m) => CliError::Data(m),
            other => CliError::Network(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "statecheck",
    about = "Affordance-based state-tracking benchmark over chess",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EstimatorArg {
    Naive,
    Intermediate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ResamplingArg {
    /// Uniform subsample with weight rescaling.
    Uniform,
    /// Weight-proportional systematic resampling (default).
    Proportional,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EditFieldsArg {
    /// Placement, side, castling, en passant (default).
    FirstFour,
    /// All six FEN fields.
    Full,
}

/// Estimator flags shared by `evaluate` and friends.
#[derive(Args, Clone, Debug)]
struct EstimatorArgs {
    /// Trajectory depth m.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Sample budget N (frontier cap).
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Intermediate)]
    estimator: EstimatorArg,
    #[arg(long, value_enum, default_value_t = ResamplingArg::Proportional)]
    resampling: ResamplingArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EstimatorArgs {
    fn to_config(&self) -> Result<EstimatorConfig, CliError> {
        let config = EstimatorConfig {
            depth_m: self.depth,
            max_frontier: self.samples,
            seed: self.seed,
            estimator_kind: match self.estimator {
                EstimatorArg::Naive => EstimatorKind::Naive,
                EstimatorArg::Intermediate => EstimatorKind::Intermediate,
            },
            resampling: match self.resampling {
                ResamplingArg::Uniform => Resampling::UniformRescale,
                ResamplingArg::Proportional => Resampling::WeightProportional,
            },
        };
        config.validate().map_err(CliError::Usage)?;
        Ok(config)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse PGN games and cut them into length-grouped evaluation tasks.
    Ingest {
        /// PGN file or directory of .pgn files.
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated truncation lengths in plies, one group each.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 15, 25, 35, 50])]
        group_lengths: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        group_size: usize,
        /// Minimum plies a game must exceed its group length by.
        #[arg(long, default_value_t = 1)]
        guard: usize,
        /// Drop exact duplicate move sequences before grouping.
        #[arg(long)]
        dedup: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output tasks file (line-delimited JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Query the model for each task, with caching and retries.
    Predict {
        #[arg(long)]
        tasks: PathBuf,
        /// Records cache, appended to as answers arrive.
        #[arg(long)]
        cache: PathBuf,
        #[arg(long, default_value = "gpt-4o")]
        model: String,
        #[arg(long, default_value = "https://api.openai.com/v1")]
        api_base: String,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        #[arg(long, default_value_t = 3)]
        retries: u32,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
        /// Offline predictor instead of HTTP: `echo` answers the true FEN,
        /// `corrupt:N` relocates N pieces first.
        #[arg(long)]
        mock: Option<String>,
        #[arg(long, default_value_t = 0)]
        mock_seed: u64,
        /// Evaluate only the first N tasks (smoke runs).
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Score records with string and affordance metrics.
    Evaluate {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        estimator: EstimatorArgs,
        /// Edit-distance kernel decay rate.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = EditFieldsArg::FirstFour)]
        edit_fields: EditFieldsArg,
    },
    /// Aggregate evaluated records into group summaries.
    Report {
        #[arg(long)]
        eval: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
        /// Also emit per-record rows.
        #[arg(long)]
        per_record: bool,
        /// Group labels expected in the data; missing ones are counted.
        #[arg(long, value_delimiter = ',')]
        group_lengths: Vec<usize>,
        /// Print the recorded GPT-4o reference values next to the summary.
        #[arg(long)]
        reference: bool,
    },
    /// Run the estimator validation studies and write their CSVs.
    Validate {
        #[arg(long, default_value = "validate-out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Count legal move sequences from a position (engine self-check).
    Perft {
        #[arg(long)]
        fen: Option<String>,
        #[arg(long, default_value_t = 4)]
        depth: u32,
    },
}

fn read_pgn_corpus(path: &PathBuf) -> Result<Vec<statecheck_core::chess::pgn::GameRecord>, CliError> {
    let mut games = Vec::new();
    let mut skipped = 0usize;
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let entry = entry?;
            if entry.path().extension().map(|e| e == "pgn").unwrap_or(false) {
                files.push(entry.path());
            }
        }
        files.sort();
    } else {
        files.push(path.clone());
    }
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "no .pgn files under {}",
            path.display()
        )));
    }
    for file in files {
        let text = std::fs::read_to_string(&file)?;
        let corpus = parse_pgn(&text);
        for skip in &corpus.skipped {
            eprintln!(
                "skipping game {} in {}: {}",
                skip.game_id,
                file.display(),
                skip.reason
            );
        }
        skipped += corpus.skipped.len();
        games.extend(corpus.games);
    }
    eprintln!("parsed {} games ({} skipped)", games.len(), skipped);
    Ok(games)
}

fn parse_mock(spec: &str) -> Result<usize, CliError> {
    if spec == "echo" {
        return Ok(0);
    }
    if let Some(count) = spec.strip_prefix("corrupt:") {
        return count
            .parse()
            .map_err(|_| CliError::Usage(format!("bad mock spec `{spec}`")));
    }
    Err(CliError::Usage(format!(
        "mock must be `echo` or `corrupt:N`, got `{spec}`"
    )))
}

fn run_command(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest {
            corpus,
            group_lengths,
            group_size,
            guard,
            dedup,
            seed,
            out,
        } => {
            let games = read_pgn_corpus(&corpus)?;
            let outcome = ingest_corpus(
                &games,
                &IngestConfig {
                    group_lengths,
                    group_size,
                    min_length_guard: guard,
                    seed,
                    dedup,
                },
            );
            for shortfall in &outcome.shortfalls {
                eprintln!("warning: {shortfall}");
            }
            write_tasks(&out, &outcome.tasks)?;
            println!(
                "wrote {} tasks to {} ({} groups short)",
                outcome.tasks.len(),
                out.display(),
                outcome.shortfalls.len()
            );
            Ok(())
        }
        Command::Predict {
            tasks,
            cache,
            model,
            api_base,
            concurrency,
            temperature,
            retries,
            timeout_secs,
            mock,
            mock_seed,
            limit,
        } => {
            let mut task_list = read_tasks(&tasks).map_err(CliError::Data)?;
            if let Some(limit) = limit {
                task_list.truncate(limit);
            }
            let config = LlmConfig {
                api_base_url: api_base,
                model_name: model,
                temperature,
                max_retries: retries,
                request_timeout: std::time::Duration::from_secs(timeout_secs),
                max_concurrency: concurrency,
                ..LlmConfig::default()
            };
            let records = match mock {
                Some(spec) => {
                    let perturbations = parse_mock(&spec)?;
                    let predictor = EchoPredictor::mock(
                        &task_list,
                        &config.prompt_template_id,
                        perturbations,
                        mock_seed,
                    );
                    predict_states(&task_list, &predictor, &config, &cache)?
                }
                None => {
                    let predictor = HttpPredictor::new(config.clone())?;
                    predict_states(&task_list, &predictor, &config, &cache)?
                }
            };
            let ok = records
                .iter()
                .filter(|r| r.predicted_state.is_some())
                .count();
            println!(
                "{} records ({} parsed ok) cached at {}",
                records.len(),
                ok,
                cache.display()
            );
            Ok(())
        }
        Command::Evaluate {
            records,
            out,
            estimator,
            lambda,
            edit_fields,
        } => {
            let estimator_config = estimator.to_config()?;
            let mut metric_config = MetricConfig::with_lambda(lambda)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            metric_config.edit_distance_fields = match edit_fields {
                EditFieldsArg::FirstFour => EditDistanceFields::FirstFourFields,
                EditFieldsArg::Full => EditDistanceFields::FullFen,
            };
            if !records.exists() {
                return Err(CliError::Data(format!(
                    "records file {} does not exist",
                    records.display()
                )));
            }
            let lines = read_lines(&records).map_err(|e| CliError::Data(e.to_string()))?;
            let mut parsed = Vec::with_capacity(lines.len());
            for line in lines {
                parsed.push(
                    line.into_record()
                        .map_err(|e| CliError::Data(e.to_string()))?,
                );
            }
            let evaluated = evaluate_records(&parsed, &metric_config, &estimator_config);
            let out_lines: Vec<EvaluatedLine> = evaluated
                .iter()
                .map(|e| EvaluatedLine {
                    record_index: e.index,
                    game_id: e.record.task.game_id.clone(),
                    group_label: e.record.task.group_label,
                    truncation_length: e.record.task.truncation_length,
                    parse_status: e.record.parse_status,
                    exact_match: e.bundle.exact_match,
                    edit_distance: e.bundle.edit_distance,
                    edit_kernel: e.bundle.edit_kernel,
                    board_accuracy: e.bundle.board_accuracy,
                    precision_m: e.bundle.precision_m,
                    recall_m: e.bundle.recall_m,
                    depth_m: e.bundle.depth_m,
                })
                .collect();
            write_eval_lines(&out, &out_lines)?;
            println!("evaluated {} records to {}", out_lines.len(), out.display());
            Ok(())
        }
        Command::Report {
            eval,
            format,
            out,
            per_record,
            group_lengths,
            reference,
        } => {
            let lines = read_eval_lines(&eval)?;
            let summaries = summarize_groups(&lines, &group_lengths);
            if summaries.empty_groups_skipped > 0 {
                eprintln!(
                    "warning: {} expected group(s) had no records",
                    summaries.empty_groups_skipped
                );
            }
            let config = ReportConfig {
                output_format: match format {
                    FormatArg::Csv => ReportFormat::Csv,
                    FormatArg::Json => ReportFormat::Json,
                },
                output_path: out,
                include_per_record: per_record,
            };
            let files = emit_report(&summaries, Some(&lines), &config)?;
            for file in &files {
                println!("wrote {}", file.display());
            }
            println!(
                "overall: n={} exact={:.4} mean_p{}={:.4} tau={}",
                summaries.overall.n_records,
                summaries.overall.exact_match_rate,
                lines.first().map(|l| l.depth_m).unwrap_or(0),
                summaries.overall.mean_precision_m,
                summaries
                    .overall
                    .kendall_tau_precision_vs_neg_edit
                    .map(|t| format!("{t:.4}"))
                    .unwrap_or_else(|| "undefined".into()),
            );
            if reference {
                println!(
                    "reference (GPT-4o, Lichess, m=4): overall tau {GPT4O_REFERENCE_OVERALL_TAU}, \
                     mean p_4 from {} down to {} across 5..50-move groups",
                    GPT4O_REFERENCE_MEAN_P4_RANGE.0, GPT4O_REFERENCE_MEAN_P4_RANGE.1
                );
            }
            Ok(())
        }
        Command::Validate {
            out_dir,
            seeds,
            samples,
        } => {
            let summary = validate::run_validate(&validate::ValidateConfig {
                out_dir,
                seeds,
                samples,
            })?;
            println!(
                "fixed pair full-FEN edit distance: {}",
                summary.pair_edit_distance
            );
            for row in summary
                .synthetic
                .iter()
                .filter(|r| r.estimator == EstimatorKind::Intermediate)
            {
                println!(
                    "synthetic m={}: mean {:.6} expected {:.6} (std {:.2e})",
                    row.depth_m,
                    row.mean_p_hat,
                    row.expected.unwrap(),
                    row.std_p_hat
                );
            }
            for file in &summary.files {
                println!("wrote {}", file.display());
            }
            Ok(())
        }
        Command::Perft { fen, depth } => {
            let state = match fen {
                Some(text) => parse_fen(&text).map_err(|e| CliError::Data(e.to_string()))?,
                None => ChessState::initial(),
            };
            println!("position: {}", format_fen(&state));
            for d in 0..=depth {
                let start = std::time::Instant::now();
                let nodes = perft(&state, d);
                println!(
                    "perft({d}) = {nodes}  ({:.3}s)",
                    start.elapsed().as_secs_f64()
                );
            }
            Ok(())
        }
    }
}

fn write_eval_lines(path: &PathBuf, lines: &[EvaluatedLine]) -> Result<(), CliError> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::fs::File::create(path)?;
    for line in lines {
        let text = serde_json::to_string(line).expect("eval lines serialize");
        writeln!(file, "{text}")?;
    }
    Ok(())
}

fn read_eval_lines(path: &PathBuf) -> Result<Vec<EvaluatedLine>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        lines.push(
            serde_json::from_str(line)
                .map_err(|e| CliError::Data(format!("eval line {}: {e}", index + 1)))?,
        );
    }
    Ok(lines)
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
