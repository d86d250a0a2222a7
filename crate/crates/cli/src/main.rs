use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use dribble_core::config::Config;
use dribble_core::explain::explain_model;
use dribble_core::features::{extract_match, load_table, save_table, FeatureVector};
use dribble_core::ingest::{normalize_attack_direction, sort_events, MatchBundle, TRACKING_FILE};
use dribble_core::model::{render_report_table, run_ablation, write_report_table, CvOptions, FeatureSet, TrainedModel};
use dribble_core::segment::FilterReport;
use dribble_core::skeleton::SegmentTable;
use dribble_core::synth::{generate_labeled_dataset, write_truth, CorpusOptions, PlantedBeta};

#[derive(Parser)]
#[command(name = "dribble", version, about = "Take-on extraction, success modelling and attribution")]
struct Cli {
    /// TOML file overriding pipeline defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw tracking, events and metadata and write a bundle directory.
    Ingest {
        tracking: PathBuf,
        events: PathBuf,
        meta: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Segment take-ons and write the feature table.
    Extract(ExtractArgs),
    /// Fit one model configuration on a feature table.
    Train {
        features: PathBuf,
        #[arg(long = "features", value_name = "SET", default_value = "2d3d")]
        set: FeatureSet,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Cross-validated ablation over baseline, 2D and 2D+3D.
    Evaluate {
        features: PathBuf,
        #[arg(long)]
        cv: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Per-dribble attributions of a trained model, plus a ranking file.
    Explain {
        model: PathBuf,
        features: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a synthetic corpus with planted label effects.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Bundle directories, or directories containing bundles.
    #[arg(required = true)]
    bundles: Vec<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    /// Per-event pass/fail report.
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Anthropometric segment table (CSV); Winter's table by default.
    #[arg(long)]
    segment_table: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// `speed,lean,stance` or `intercept,speed,lean,stance`.
    #[arg(long, default_value = "0,0.8,-1.5,1.5")]
    planted_beta: PlantedBeta,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    per_match: usize,
    /// Share of dribbles built to break a filter rule.
    #[arg(long, default_value_t = 0.0)]
    violation_rate: f64,
    #[arg(long)]
    no_occlusions: bool,
    #[arg(short, long)]
    output: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else { return Ok(Config::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn bundle_dirs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.join(TRACKING_FILE).is_file() {
            out.push(p.clone());
            continue;
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(p)
            .with_context(|| format!("reading {}", p.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|d| d.join(TRACKING_FILE).is_file())
            .collect();
        if found.is_empty() {
            bail!("{}: no match bundle found", p.display());
        }
        found.sort();
        out.extend(found);
    }
    Ok(out)
}

fn ingest(tracking: &Path, events: &Path, meta: &Path, output: &Path) -> Result<()> {
    let mut bundle = MatchBundle::load(tracking, events, meta)?;
    sort_events(&mut bundle.events);
    for team in bundle.metadata.teams.clone() {
        normalize_attack_direction(bundle.clone(), team)?;
    }
    bundle.save_dir(output)?;
    info!("{}: {} frames, {} events", bundle.metadata.match_id, bundle.frames.len(), bundle.events.len());
    Ok(())
}

fn extract(args: &ExtractArgs, cfg: &Config) -> Result<()> {
    let table = match &args.segment_table {
        Some(p) => SegmentTable::load(p)?,
        None => SegmentTable::winter(),
    };
    let mut rows: Vec<FeatureVector> = Vec::new();
    let mut report = FilterReport::default();
    for dir in bundle_dirs(&args.bundles)? {
        let bundle = MatchBundle::load_dir(&dir).with_context(|| format!("loading {}", dir.display()))?;
        let m = extract_match(&bundle, cfg, &table);
        info!(
            "{}: {} take-ons, {} kept, {} feature failures",
            bundle.metadata.match_id,
            m.report.total,
            m.rows.len(),
            m.failures.len()
        );
        rows.extend(m.rows);
        report.merge(m.report);
    }
    save_table(&args.output, &rows)?;
    if let Some(audit) = &args.audit {
        report.save_audit(audit)?;
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn summary_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("shap");
    output.with_file_name(format!("{stem}_summary.csv"))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let opts = CorpusOptions {
        dribbles_per_match: args.per_match,
        occlusions: !args.no_occlusions,
        violation_rate: args.violation_rate,
    };
    if !(0.0..=1.0).contains(&opts.violation_rate) {
        bail!("--violation-rate must lie in [0, 1]");
    }
    let matches = generate_labeled_dataset(args.n, &args.planted_beta, args.seed, &opts)?;
    std::fs::create_dir_all(&args.output)?;
    let mut truths = Vec::new();
    for (bundle, t) in matches {
        bundle.save_dir(&args.output.join(&bundle.metadata.match_id))?;
        truths.extend(t);
    }
    write_file(&args.output.join("truth.csv"), |w| Ok(write_truth(w, &truths)?))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { tracking, events, meta, output } => ingest(&tracking, &events, &meta, &output),
        Command::Extract(args) => extract(&args, &cfg),
        Command::Train { features, set, lambda, seed, output } => {
            cfg.model.lambda = lambda.or(cfg.model.lambda);
            cfg.model.seed = seed.unwrap_or(cfg.model.seed);
            let rows = load_table(&features)?;
            let model = TrainedModel::fit(&rows, set, &CvOptions::from_config(&cfg.model, cfg.pitch))?;
            model.save(&output)?;
            Ok(())
        }
        Command::Evaluate { features, cv, seed, lambda, output } => {
            cfg.model.cv_folds = cv.unwrap_or(cfg.model.cv_folds);
            cfg.model.seed = seed.unwrap_or(cfg.model.seed);
            cfg.model.lambda = lambda.or(cfg.model.lambda);
            let rows = load_table(&features)?;
            let reports = run_ablation(&rows, &CvOptions::from_config(&cfg.model, cfg.pitch))?;
            write_file(&output, |w| Ok(write_report_table(w, &reports)?))?;
            print!("{}", render_report_table(&reports));
            Ok(())
        }
        Command::Explain { model, features, output } => {
            let model = TrainedModel::load(&model)?;
            let rows = load_table(&features)?;
            let summary = explain_model(&model, &rows)?;
            write_file(&output, |w| Ok(summary.write_values(w)?))?;
            write_file(&summary_path(&output), |w| Ok(summary.write_ranking(w)?))
        }
        Command::Synth(args) => synth(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
