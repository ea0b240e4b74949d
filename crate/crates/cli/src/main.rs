use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use tracing::{info, warn};
use tracing_subscriber::EnvFilter;

use forge_core::adoption::{analyze, emit_reports, ingest_logs};
use forge_core::config::{validate_config, ForgeConfig};
use forge_core::graph::{generate_spsr_corpus, PathStrategy, SpsrRecord};
use forge_core::metrics::MetricValue;
use forge_core::orchestrate::{run_end_to_end, write_json, write_jsonl, Stage};
use forge_core::pipeline::{read_corpus, read_input, run_pipeline, write_outputs, RawFile};
use forge_core::segment::{
    cut_corpus, greedy_cut_baseline, structural_preservation_rate, FimRecord, FimSample, Segmenter,
};

#[derive(Parser, Debug)]
#[command(
    name = "forge",
    version,
    about = "Structure-aware code corpus builder and completion-metric toolkit"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for FIM granularity sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter, clean and deduplicate a repository into corpus.jsonl.
    Pipeline(PipelineArgs),
    /// Cut AST-aligned fill-in-the-middle samples from a corpus.
    Fim(FimArgs),
    /// Build the code graph and render path-ordered samples.
    Graph(GraphArgs),
    /// Score predictions against references.
    Score(ScoreArgs),
    /// Analyse a completion log against adoption.
    Adoption(AdoptionArgs),
    /// Run pipeline, fim and graph end to end.
    Build(BuildArgs),
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Repository directory or file-list manifest.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FimArgs {
    /// corpus.jsonl from the pipeline stage.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    theta_min: Option<usize>,
    #[arg(long)]
    theta_max: Option<usize>,
    #[arg(long)]
    mask_token: Option<String>,
    /// Also emit the fixed-window baseline with this window and compare
    /// structural preservation.
    #[arg(long)]
    greedy_window: Option<usize>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// corpus.jsonl, a directory holding one, or a raw repository.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Maximum path depth in edges.
    #[arg(short = 'D', long = "depth")]
    depth: Option<usize>,
    /// Successors kept per node.
    #[arg(short = 'k', long = "breadth")]
    breadth: Option<usize>,
    #[arg(long)]
    strategy: Option<PathStrategy>,
    /// Put callees before callers in rendered samples.
    #[arg(long)]
    dependency_first: bool,
    #[arg(long)]
    max_tokens: Option<usize>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Predictions, one per line.
    #[arg(long)]
    pred: PathBuf,
    /// References, one per line.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Treat each line as a JSON string, so entries may contain newlines.
    #[arg(long)]
    jsonl: bool,
}

#[derive(Args, Debug)]
struct AdoptionArgs {
    #[arg(long)]
    logs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    min_daily: Option<usize>,
    #[arg(long)]
    bin_width: Option<f64>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of pipeline,fim,graph.
    #[arg(long, value_delimiter = ',', default_values_t = ["pipeline".to_string(), "fim".to_string(), "graph".to_string()])]
    stages: Vec<String>,
}

/// Exit status classes.
enum Failure {
    Config(anyhow::Error),
    Stage(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Stage(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Stage(e) => e,
        }
    }
}

trait StageResult<T> {
    fn stage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> StageResult<T> for Result<T, E> {
    fn stage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Stage(e.into()))
    }
}

fn load_config(cli: &Cli) -> Result<ForgeConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => validate_config(path).map_err(|e| Failure::Config(e.into()))?,
        None => ForgeConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.fim.seed = seed;
    }
    match &cli.command {
        Command::Fim(a) => {
            if let Some(v) = a.theta_min {
                cfg.fim.theta_min = v;
            }
            if let Some(v) = a.theta_max {
                cfg.fim.theta_max = v;
            }
            if let Some(v) = &a.mask_token {
                cfg.fim.mask_token = v.clone();
            }
        }
        Command::Graph(a) => {
            if let Some(v) = a.depth {
                cfg.graph.depth = v;
            }
            if let Some(v) = a.breadth {
                cfg.graph.breadth = v;
            }
            if let Some(v) = a.strategy {
                cfg.graph.strategy = v;
            }
            if a.dependency_first {
                cfg.graph.dependency_first = true;
            }
            if a.max_tokens.is_some() {
                cfg.graph.max_tokens = a.max_tokens;
            }
        }
        Command::Adoption(a) => {
            if let Some(v) = a.min_daily {
                cfg.adoption.min_daily = v;
            }
            if let Some(v) = a.bin_width {
                cfg.adoption.bin_width = v;
            }
        }
        _ => {}
    }
    cfg.checked().map_err(|e| Failure::Config(e.into()))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .stage()
}

fn cmd_pipeline(a: &PipelineArgs, cfg: &ForgeConfig) -> Result<(), Failure> {
    let files = read_input(&a.input).stage()?;
    let output = run_pipeline(files, &cfg.pipeline);
    write_outputs(&output, &a.out).stage()?;
    info!(
        kept = output.stats.kept,
        seen = output.stats.files_seen,
        "corpus written"
    );
    Ok(())
}

/// Weighted structural preservation over a corpus: per-file rates weighted
/// by sample count.
fn preservation(files: &[RawFile], samples: &[FimSample]) -> f64 {
    let mut by_file: BTreeMap<&str, Vec<FimSample>> = BTreeMap::new();
    for s in samples {
        by_file
            .entry(s.source_file.as_str())
            .or_default()
            .push(s.clone());
    }
    let sources: BTreeMap<&str, &RawFile> = files.iter().map(|f| (f.path.as_str(), f)).collect();
    let groups: Vec<(&RawFile, Vec<FimSample>)> = by_file
        .into_iter()
        .filter_map(|(p, s)| sources.get(p).map(|f| (*f, s)))
        .collect();
    let (kept, total) = groups
        .par_iter()
        .map_init(Segmenter::new, |seg, (file, s)| match seg.parse(file) {
            Ok(tree) => (
                structural_preservation_rate(s, &tree) * s.len() as f64,
                s.len(),
            ),
            Err(_) => (0.0, s.len()),
        })
        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if total == 0 {
        1.0
    } else {
        kept / total as f64
    }
}

fn cmd_fim(a: &FimArgs, cfg: &ForgeConfig) -> Result<(), Failure> {
    let files = read_corpus(&a.input).stage()?;
    create_dir(&a.out)?;
    let cut = cut_corpus(&files, &cfg.fim.options()).stage()?;
    write_jsonl(
        &a.out.join("fim_samples.jsonl"),
        cut.samples.iter().map(FimRecord::from),
    )
    .stage()?;
    info!(
        samples = cut.samples.len(),
        files = cut.files_cut,
        "fim samples written"
    );

    if let Some(window) = a.greedy_window {
        let greedy: Vec<FimSample> = files
            .par_iter()
            .filter_map(|f| greedy_cut_baseline(f, window, &cfg.fim.mask_token).ok())
            .flatten()
            .collect();
        write_jsonl(
            &a.out.join("greedy_samples.jsonl"),
            greedy.iter().map(FimRecord::from),
        )
        .stage()?;
        let report = json!({
            "ast_samples": cut.samples.len(),
            "ast_structural_preservation": preservation(&files, &cut.samples),
            "greedy_window": window,
            "greedy_samples": greedy.len(),
            "greedy_structural_preservation": preservation(&files, &greedy),
        });
        write_json(&a.out.join("fim_report.json"), &report).stage()?;
    }
    Ok(())
}

fn graph_input(input: &Path) -> anyhow::Result<Vec<RawFile>> {
    if input.is_file() && input.extension().is_some_and(|e| e == "jsonl") {
        return Ok(read_corpus(input)?);
    }
    let corpus = input.join("corpus.jsonl");
    if corpus.is_file() {
        return Ok(read_corpus(&corpus)?);
    }
    Ok(read_input(input)?)
}

fn cmd_graph(a: &GraphArgs, cfg: &ForgeConfig) -> Result<(), Failure> {
    let files = graph_input(&a.input).stage()?;
    create_dir(&a.out)?;
    let out = generate_spsr_corpus(&files, &cfg.graph).stage()?;
    write_json(&a.out.join("graph.json"), &out.graph.to_json()).stage()?;
    write_jsonl(
        &a.out.join("spsr_samples.jsonl"),
        out.samples.iter().map(SpsrRecord::from),
    )
    .stage()?;
    info!(
        nodes = out.graph.node_count(),
        edges = out.graph.edge_count(),
        samples = out.samples.len(),
        "graph samples written"
    );
    Ok(())
}

fn read_lines(path: &Path, jsonl: bool) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            if jsonl {
                serde_json::from_str::<String>(l).with_context(|| {
                    format!("{} line {}: expected a JSON string", path.display(), i + 1)
                })
            } else {
                Ok(l.to_string())
            }
        })
        .collect()
}

fn cmd_score(a: &ScoreArgs) -> Result<(), Failure> {
    let preds = read_lines(&a.pred, a.jsonl).stage()?;
    let refs = read_lines(&a.reference, a.jsonl).stage()?;
    if preds.len() != refs.len() {
        return Err(Failure::Stage(anyhow!(
            "{} predictions but {} references",
            preds.len(),
            refs.len()
        )));
    }
    let scored: Vec<_> = preds
        .par_iter()
        .zip(&refs)
        .map(|(s, r)| MetricValue::compute(s, r))
        .collect();
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut w = csv::Writer::from_path(&a.out).stage()?;
    w.write_record([
        "index",
        "lcp",
        "rouge_lcp",
        "lcs",
        "rouge_l",
        "em",
        "bleu",
        "s_ext_len",
    ])
    .stage()?;
    let mut skipped = 0;
    for (i, m) in scored.iter().enumerate() {
        match m {
            Ok(m) => w
                .write_record([
                    i.to_string(),
                    m.lcp.to_string(),
                    m.rouge_lcp.to_string(),
                    m.lcs.to_string(),
                    m.rouge_l.to_string(),
                    u8::from(m.em).to_string(),
                    m.bleu.to_string(),
                    m.s_ext_len.to_string(),
                ])
                .stage()?,
            Err(e) => {
                warn!(index = i, error = %e, "pair not scored");
                skipped += 1;
            }
        }
    }
    w.flush().stage()?;
    info!(pairs = scored.len(), skipped, "metrics written");
    Ok(())
}

fn cmd_adoption(a: &AdoptionArgs, cfg: &ForgeConfig) -> Result<(), Failure> {
    let ingested = ingest_logs(&a.logs).stage()?;
    if ingested.malformed > 0 {
        warn!(
            malformed = ingested.malformed,
            "skipped malformed log lines"
        );
    }
    let report = analyze(&ingested, &cfg.adoption).stage()?;
    if let Some(e) = &report.daily_error {
        warn!("no daily correlation: {e}");
    }
    emit_reports(&report, &a.out).stage()?;
    info!(entries = report.n_entries, "adoption report written");
    Ok(())
}

fn parse_stages(names: &[String]) -> Result<Vec<Stage>, Failure> {
    let mut stages = Vec::new();
    for n in names {
        let s = match n.trim() {
            "pipeline" => Stage::Pipeline,
            "fim" => Stage::Fim,
            "graph" => Stage::Graph,
            other => {
                return Err(Failure::Config(anyhow!(
                    "unknown stage {other:?}; expected pipeline, fim or graph"
                )))
            }
        };
        stages.push(s);
    }
    Ok(stages)
}

fn cmd_build(a: &BuildArgs, cfg: &ForgeConfig) -> Result<(), Failure> {
    let stages = parse_stages(&a.stages)?;
    let m = run_end_to_end(&a.input, &a.out, cfg, &stages).stage()?;
    info!(config_hash = %m.config_hash, "build finished");
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Config(anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    match &cli.command {
        Command::Pipeline(a) => cmd_pipeline(a, &cfg),
        Command::Fim(a) => cmd_fim(a, &cfg),
        Command::Graph(a) => cmd_graph(a, &cfg),
        Command::Score(a) => cmd_score(a),
        Command::Adoption(a) => cmd_adoption(a, &cfg),
        Command::Build(a) => cmd_build(a, &cfg),
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn stage_names() {
        let s = parse_stages(&["graph".into(), "pipeline".into()])
            .ok()
            .unwrap();
        assert_eq!(s, vec![Stage::Graph, Stage::Pipeline]);
        assert!(matches!(
            parse_stages(&["deploy".into()]),
            Err(Failure::Config(_))
        ));
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::parse_from([
            "forge",
            "--seed",
            "9",
            "graph",
            "--in",
            "x",
            "--out",
            "y",
            "-D",
            "2",
            "-k",
            "3",
            "--strategy",
            "field-access",
        ]);
        let cfg = load_config(&cli).ok().unwrap();
        assert_eq!(cfg.fim.seed, 9);
        assert_eq!(cfg.graph.depth, 2);
        assert_eq!(cfg.graph.breadth, 3);
        assert_eq!(cfg.graph.strategy, PathStrategy::FieldAccess);
    }

    #[test]
    fn bad_flag_values_are_config_errors() {
        let cli = Cli::parse_from([
            "forge",
            "fim",
            "--in",
            "c.jsonl",
            "--out",
            "o",
            "--theta-min",
            "9",
            "--theta-max",
            "3",
        ]);
        assert!(matches!(load_config(&cli), Err(Failure::Config(_))));
        if let Err(f) = load_config(&cli) {
            assert_eq!(f.code(), 2);
        }
    }

    #[test]
    fn missing_input_is_stage_failure() {
        let dir = tempfile::tempdir().unwrap();
        let a = ScoreArgs {
            pred: dir.path().join("none.txt"),
            reference: dir.path().join("none.txt"),
            out: dir.path().join("m.csv"),
            jsonl: false,
        };
        let err = cmd_score(&a).err().unwrap();
        assert_eq!(err.code(), 3);
    }
}
