//! `mstl`: generate datasets, train and evaluate multi-class temporal
//! logic classifiers, and run the naval, synthetic and zero-shot experiments.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mstl_core::datasets::{self, Dataset, NavalGeometry};
use mstl_core::ecoc::{self, presets, CodingMatrix};
use mstl_core::loss::{Decode, LossConfig, Mode};
use mstl_core::optim::AdamConfig;
use mstl_core::stl::{parse_formula, print_formula_with, Precision};
use mstl_core::trainer::{self, ArchSpec, BetaSchedule, TrainConfig, TrainedModel};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mstl", version, about = "Multi-class signal temporal logic inference")]
#[command(after_help = "Set MSTL_LOG=info (or debug) for progress logging.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset (signals.csv, labels.csv, manifest.json).
    Generate(GenerateArgs),
    /// Train a model and write model.json, report.json and metrics.csv.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset.
    Eval(EvalArgs),
    /// Print the formulae of a trained model.
    Extract(ExtractArgs),
    /// Stratified k-fold cross-validation.
    Crossval(CrossvalArgs),
    /// Train on observed classes, classify an unseen class by its codeword.
    Zeroshot(ZeroshotArgs),
    /// Paired training runs with and without the margin terms.
    AblateMargin(AblateArgs),
    /// Print, export or validate coding matrices.
    Coding(CodingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Naval,
    Synthetic,
}

#[derive(Args)]
struct GenerateArgs {
    kind: Kind,
    /// Per-class counts, comma separated (naval: three; synthetic: five).
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Samples per class (synthetic).
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodingSource {
    /// Coding-matrix JSON file.
    #[arg(long, conflicts_with = "preset")]
    coding: Option<PathBuf>,
    /// Built-in coding matrix (see `mstl coding --list`).
    #[arg(long)]
    preset: Option<String>,
}

impl CodingSource {
    fn load(&self) -> Result<CodingMatrix> {
        match (&self.coding, &self.preset) {
            (Some(p), _) => CodingMatrix::load(p).with_context(|| format!("reading coding matrix {}", p.display())),
            (None, Some(name)) => Ok(presets::by_name(name)?),
            (None, None) => bail!("one of --coding or --preset is required"),
        }
    }
}

#[derive(Args, Clone)]
struct TrainOpts {
    /// Gradient iterations.
    #[arg(long, default_value_t = 600)]
    iterations: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Margin reward weight.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Drop the margin terms from the loss.
    #[arg(long)]
    no_margin: bool,
    /// Temperature for the first part of training.
    #[arg(long, default_value_t = 1.0)]
    beta_start: f64,
    /// Temperature after the switch.
    #[arg(long, default_value_t = 25.0)]
    beta_end: f64,
    /// Fraction of iterations run at the starting temperature.
    #[arg(long, default_value_t = 0.5)]
    beta_switch: f64,
    /// Disjunction rows per attribute.
    #[arg(long, default_value_t = 3)]
    rows: usize,
    /// Shared sub-formula templates.
    #[arg(long, default_value_t = 8)]
    templates: usize,
    #[arg(long, default_value_t = 5.0)]
    mask_gain: f64,
    /// Learn affine instead of axis-aligned predicates.
    #[arg(long)]
    affine: bool,
    #[arg(long, value_enum, default_value = "attribute")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "loss")]
    decode: DecodeArg,
    /// Final fraction of iterations trained on the binarized matrix.
    #[arg(long, default_value_t = 0.5)]
    finetune: f64,
    /// Independent initializations; the best on the training data is kept.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Attribute,
    Class,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeArg {
    Loss,
    Hamming,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Attribute => Mode::Attribute,
            ModeArg::Class => Mode::Class,
        }
    }
}

impl From<DecodeArg> for Decode {
    fn from(d: DecodeArg) -> Self {
        match d {
            DecodeArg::Loss => Decode::Loss,
            DecodeArg::Hamming => Decode::Hamming,
        }
    }
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            batch_size: self.batch_size,
            optimizer: AdamConfig { learning_rate: self.lr, ..AdamConfig::default() },
            beta: BetaSchedule { start: self.beta_start, end: self.beta_end, switch_at: self.beta_switch },
            loss: LossConfig { delta: self.delta, margin: !self.no_margin },
            mode: self.mode.into(),
            decode: self.decode.into(),
            seed: self.seed,
            arch: ArchSpec { rows: self.rows, templates: self.templates, mask_gain: self.mask_gain, affine: self.affine },
            finetune: self.finetune,
            restarts: self.restarts,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (or manifest path).
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    coding: CodingSource,
    #[command(flatten)]
    opts: TrainOpts,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Decoder for the headline numbers; both are always reported.
    #[arg(long, value_enum)]
    decode: Option<DecodeArg>,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    /// Print constants at full precision.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CrossvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    coding: CodingSource,
    #[command(flatten)]
    opts: TrainOpts,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ZeroshotArgs {
    /// Training data; only the observed classes are used.
    #[arg(long)]
    train: PathBuf,
    /// Test data; only the unseen classes are used.
    #[arg(long)]
    test: PathBuf,
    /// Observed-class coding matrix file.
    #[arg(long, conflicts_with = "observed_preset")]
    observed: Option<PathBuf>,
    #[arg(long, default_value = "zeroshot-obs")]
    observed_preset: String,
    /// Unseen-class codeword file.
    #[arg(long, conflicts_with = "predicted_preset")]
    predicted: Option<PathBuf>,
    #[arg(long, default_value = "zeroshot-pred")]
    predicted_preset: String,
    #[command(flatten)]
    opts: TrainOpts,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    coding: CodingSource,
    #[command(flatten)]
    opts: TrainOpts,
    /// Paired per-epoch curves as CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CodingArgs {
    /// List preset names.
    #[arg(long)]
    list: bool,
    #[arg(long)]
    preset: Option<String>,
    /// Validate a coding-matrix file.
    #[arg(long)]
    validate: Option<PathBuf>,
    /// Write the selected preset to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn maybe_report<T: Serialize>(value: &T, path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) => write_json(value, p),
        None => Ok(()),
    }
}

fn load_data(path: &Path) -> Result<Dataset> {
    datasets::load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let data = match a.kind {
        Kind::Naval => {
            if a.per_class.is_some() {
                bail!("--per-class applies to synthetic data; use --counts n1,n2,n3");
            }
            let c = a.counts.unwrap_or_else(|| vec![1000, 500, 500]);
            let [n1, n2, n3] = c[..] else { bail!("naval needs three counts, got {}", c.len()) };
            datasets::generate_naval([n1, n2, n3], a.seed, &NavalGeometry::default())?
        }
        Kind::Synthetic => match (a.counts, a.per_class) {
            (Some(_), Some(_)) => bail!("give --counts or --per-class, not both"),
            (Some(c), None) if c.len() == 5 => datasets::generate_synthetic_counts(&c, a.seed)?,
            (Some(c), None) => bail!("synthetic needs five counts, got {}", c.len()),
            (None, p) => datasets::generate_synthetic(p.unwrap_or(100), a.seed)?,
        },
    };
    datasets::save_dataset(&data, &a.out)?;
    let counts = data.class_counts();
    println!("wrote {} samples to {}", data.len(), a.out.display());
    for (name, n) in data.classes.iter().zip(&counts) {
        println!("  {name:<10} {n}");
    }
    Ok(())
}

fn print_formulae(names: &[String], formulae: &[String]) {
    let w = names.iter().map(String::len).max().unwrap_or(0);
    for (n, f) in names.iter().zip(formulae) {
        println!("  {n:<w$}  {f}");
    }
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    config: &'a TrainConfig,
    report: &'a trainer::TrainReport,
}

fn train(a: TrainArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let coding = a.coding.load()?;
    let config = a.opts.config();
    let (params, report) = trainer::train(&data, &coding, &config)?;
    let model = TrainedModel::new(params, coding.clone(), config.mode, config.decode)?;
    std::fs::create_dir_all(&a.out)?;
    model.save(a.out.join("model.json"))?;
    write_json(&TrainSummary { config: &config, report: &report }, &a.out.join("report.json"))?;
    report.write_csv(a.out.join("metrics.csv"))?;
    println!("trained {} iterations in {:.2}s, training MCR {:.3}", report.iterations, report.wall_clock_s, report.train_mcr);
    print_formulae(coding.attributes(), &report.formulae);
    println!("wrote model.json, report.json, metrics.csv to {}", a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    decode: Decode,
    class_mcr: f64,
    bit_mcr: f64,
    hamming: trainer::Evaluation,
    loss: trainer::Evaluation,
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let data = load_data(&a.data)?;
    let hard = model.hard()?;
    let run = |rule| trainer::evaluate(&hard, &data, &model.coding, model.mode, rule);
    let (ham, los) = (run(Decode::Hamming)?, run(Decode::Loss)?);
    let rule = a.decode.map(Decode::from).unwrap_or(model.decode);
    let main = if rule == Decode::Hamming { &ham } else { &los };
    println!("samples          {}", data.len());
    println!("class MCR        {:.4}  ({rule:?} decoding)", main.class_mcr);
    println!("attribute-bit MCR {:.4}", main.bit_mcr);
    println!("class MCR by decoder: loss {:.4}, hamming {:.4}", los.class_mcr, ham.class_mcr);
    println!("confusion (rows: true, columns: predicted)");
    let names = model.coding.classes();
    let w = names.iter().map(String::len).max().unwrap_or(0).max(6);
    print!("  {:<w$}", "");
    for n in names {
        print!(" {n:>w$}");
    }
    println!();
    for (n, row) in names.iter().zip(&main.confusion) {
        print!("  {n:<w$}");
        for v in row {
            print!(" {v:>w$}");
        }
        println!();
    }
    maybe_report(&EvalReport { decode: rule, class_mcr: main.class_mcr, bit_mcr: main.bit_mcr, hamming: ham, loss: los }, &a.report)
}

#[derive(Serialize)]
struct ExtractReport<'a> {
    attributes: &'a [String],
    formulae: Vec<String>,
}

fn extract(a: ExtractArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let formulae = model.hard()?.formulae();
    let precision = if a.exact { Precision::Exact } else { Precision::Fixed(1) };
    let text: Vec<String> = formulae.iter().map(|f| print_formula_with(f, precision)).collect();
    for t in &text {
        parse_formula(t).with_context(|| format!("extracted formula does not re-parse: {t}"))?;
    }
    print_formulae(model.coding.attributes(), &text);
    maybe_report(&ExtractReport { attributes: model.coding.attributes(), formulae: text }, &a.report)
}

fn crossval(a: CrossvalArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let coding = a.coding.load()?;
    let cv = trainer::crossvalidate(&data, &coding, &a.opts.config(), a.folds)?;
    println!("{:<6} {:>8} {:>8} {:>10} {:>10} {:>10}", "fold", "train", "test", "time (s)", "test MCR", "bit MCR");
    for f in &cv.folds {
        println!(
            "{:<6} {:>8} {:>8} {:>10.2} {:>10.3} {:>10.3}",
            f.fold, f.train_size, f.test_size, f.train_time_s, f.test.class_mcr, f.test.bit_mcr
        );
    }
    println!("{:<6} {:>8} {:>8} {:>10.2} {:>10.3} {:>10.3}", "mean", "", "", cv.mean_train_time_s, cv.mean_test_mcr, cv.mean_test_bit_mcr);
    maybe_report(&cv, &a.report)
}

fn zeroshot(a: ZeroshotArgs) -> Result<()> {
    let observed = match &a.observed {
        Some(p) => CodingMatrix::load(p)?,
        None => presets::by_name(&a.observed_preset)?,
    };
    let predicted = match &a.predicted {
        Some(p) => CodingMatrix::load(p)?,
        None => presets::by_name(&a.predicted_preset)?,
    };
    let obs: Vec<&str> = observed.classes().iter().map(String::as_str).collect();
    let unseen: Vec<&str> = predicted.classes().iter().map(String::as_str).collect();
    let train_data = load_data(&a.train)?.filter_classes(&obs)?;
    let test_data = load_data(&a.test)?.filter_classes(&unseen)?;
    let mut config = a.opts.config();
    config.mode = Mode::Attribute;
    let r = trainer::zero_shot(&train_data, &observed, &predicted, &test_data, &config)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    println!("trained on {} samples of {} in {:.2}s", train_data.len(), obs.join(","), r.train.wall_clock_s);
    print_formulae(observed.attributes(), &r.train.formulae);
    println!("unseen-class samples {}, MCR {:.3}", r.test_samples, r.mcr);
    for (c, n) in r.decoding_classes.iter().zip(&r.predicted) {
        println!("  decoded as {c:<8} {n}");
    }
    maybe_report(&r, &a.report)
}

fn ablate(a: AblateArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let coding = a.coding.load()?;
    let r = trainer::margin_ablation(&data, &coding, &a.opts.config())?;
    let mut w = String::from("epoch,loss_margin,mcr_margin,abs_r_margin,loss_plain,mcr_plain,abs_r_plain\n");
    for (x, y) in r.with_margin.epochs.iter().zip(&r.without_margin.epochs) {
        w += &format!("{},{:?},{:?},{:?},{:?},{:?},{:?}\n", x.epoch, x.loss, x.mcr, x.mean_abs_robustness, y.loss, y.mcr, y.mean_abs_robustness);
    }
    std::fs::write(&a.out, w).with_context(|| format!("writing {}", a.out.display()))?;
    let last = |t: &trainer::TrainReport| t.epochs.last().map(|e| e.mean_abs_robustness).unwrap_or(0.0);
    println!("{:<16} {:>12} {:>12}", "", "with margin", "without");
    println!("{:<16} {:>12.4} {:>12.4}", "final mean |r|", last(&r.with_margin), last(&r.without_margin));
    println!("{:<16} {:>12.3} {:>12.3}", "training MCR", r.with_margin.train_mcr, r.without_margin.train_mcr);
    println!("wrote curves to {}", a.out.display());
    maybe_report(&r, &a.report)
}

#[derive(Serialize)]
struct CodingReport<'a> {
    matrix: &'a CodingMatrix,
    validation: &'a ecoc::ValidationReport,
}

fn coding(a: CodingArgs) -> Result<()> {
    if a.list {
        for n in presets::NAMES {
            println!("{n}");
        }
        return Ok(());
    }
    let m = match (&a.validate, &a.preset) {
        (Some(p), _) => CodingMatrix::load(p)?,
        (None, Some(n)) => presets::by_name(n)?,
        (None, None) => bail!("give --list, --preset NAME or --validate FILE"),
    };
    let v = ecoc::validate_coding_matrix(&m)?;
    let w = m.classes().iter().map(String::len).max().unwrap_or(0);
    println!("{:<w$}  {}", "", m.attributes().join(" "));
    for (j, c) in m.classes().iter().enumerate() {
        let bits: Vec<&str> = m.row(j).iter().map(|&b| if b > 0 { "+" } else { "-" }).collect();
        println!("{c:<w$}  {}", bits.join(" "));
    }
    for warn in &v.warnings {
        println!("warning: {warn}");
    }
    if let Some(d) = v.min_row_distance {
        println!("minimum codeword distance {d}");
    }
    if let Some(out) = &a.out {
        m.save(out)?;
        println!("wrote {}", out.display());
    }
    maybe_report(&CodingReport { matrix: &m, validation: &v }, &a.report)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Extract(a) => extract(a),
        Command::Crossval(a) => crossval(a),
        Command::Zeroshot(a) => zeroshot(a),
        Command::AblateMargin(a) => ablate(a),
        Command::Coding(a) => coding(a),
    }
}

fn main() -> ExitCode {
    // Exit quietly when stdout is a closed pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MSTL_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
