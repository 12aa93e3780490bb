//! Batched gradient training, misclassification metrics,
//! cross-validation, the margin ablation and zero-shot evaluation.

use crate::datasets::Dataset;
use crate::diffgraph::{GraphError, Tape, Temperature};
use crate::ecoc::{one_hot_named, validate_coding_matrix, CodingMatrix, EcocError};
use crate::loss::{decode, loss, Decode, LossConfig, LossError, Mode};
use crate::network::{
    forward_class, hard_class, init_params, ArchConfig, DataStats, HardNetwork, ModelParams, NetworkError, Relaxation,
};
use crate::optim::{Adam, AdamConfig};
use crate::stl::{parse_formula, print_formula, print_formula_with, robustness, Formula, Precision, RobustnessError, Signal};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("signals differ in shape; expected {len}x{dim}")]
    RaggedDataset { len: usize, dim: usize },
    #[error("diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },
    #[error("class '{class}' has {count} samples, fewer than {folds} folds")]
    TooFewForFolds { class: String, count: usize, folds: usize },
    #[error("class '{0}' is missing from the coding matrix")]
    UnknownClass(String),
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coding(#[from] EcocError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Architecture knobs that do not depend on the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub rows: usize,
    pub templates: usize,
    pub mask_gain: f64,
    pub affine: bool,
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self { rows: 3, templates: 8, mask_gain: 5.0, affine: false }
    }
}

/// Piecewise-constant temperature: `start` for the first `switch_at`
/// fraction of the iterations, `end` afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub start: f64,
    pub end: f64,
    pub switch_at: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 25.0, switch_at: 0.5 }
    }
}

impl BetaSchedule {
    pub fn at(&self, iteration: usize, total: usize) -> f64 {
        if (iteration as f64) < self.switch_at * total as f64 {
            self.start
        } else {
            self.end
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub beta: BetaSchedule,
    pub loss: LossConfig,
    pub mode: Mode,
    pub decode: Decode,
    pub seed: u64,
    pub arch: ArchSpec,
    /// Final fraction of the iterations trained with the matrix fixed at
    /// its binarization, so predicates settle on the extracted structure.
    pub finetune: f64,
    /// Independent initializations; the best on the training data is kept.
    pub restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 600,
            batch_size: 32,
            optimizer: AdamConfig::default(),
            beta: BetaSchedule::default(),
            loss: LossConfig::default(),
            mode: Mode::Attribute,
            decode: Decode::Loss,
            seed: 0,
            arch: ArchSpec::default(),
            finetune: 0.5,
            restarts: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n: usize) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.batch_size == 0 || self.batch_size > n {
            return Err(TrainError::Config(format!("batch size {} outside [1, {n}]", self.batch_size)));
        }
        if !(self.optimizer.learning_rate > 0.0 && self.optimizer.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.finetune) {
            return bad("finetune fraction must lie in [0, 1]");
        }
        if !(self.loss.delta > 0.0 && self.loss.delta.is_finite()) {
            return bad("delta must be positive");
        }
        if !(self.beta.start > 0.0 && self.beta.end > 0.0) || !self.beta.start.is_finite() || !self.beta.end.is_finite() {
            return bad("temperatures must be positive");
        }
        Ok(())
    }

    /// Batch size capped at the dataset size.
    pub fn fit_batch(mut self, n: usize) -> Self {
        self.batch_size = self.batch_size.min(n).max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// Class-level misclassification rate of the relaxed network.
    pub mcr: f64,
    /// Mean absolute output robustness over correctly classified samples.
    pub mean_abs_robustness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub iterations: usize,
    pub wall_clock_s: f64,
    pub formulae: Vec<String>,
    /// Class-level MCR of the extracted formulae on the training data.
    pub train_mcr: f64,
    pub restarts: Vec<RestartSummary>,
    /// Index into `restarts` of the returned run.
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub train_mcr: f64,
    pub final_loss: f64,
}

impl TrainReport {
    /// Everything except timing.
    pub fn same_run(&self, other: &TrainReport) -> bool {
        self.epochs == other.epochs
            && self.formulae == other.formulae
            && self.train_mcr == other.train_mcr
            && self.restarts == other.restarts
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), TrainError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "loss", "mcr", "mean_abs_robustness"])?;
        for e in &self.epochs {
            w.write_record([e.epoch.to_string(), format!("{:?}", e.loss), format!("{:?}", e.mcr), format!("{:?}", e.mean_abs_robustness)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Table the training outputs are scored against: the coding matrix in
/// attribute mode, the one-hot class table in class mode.
pub fn target_table(coding: &CodingMatrix, mode: Mode) -> Result<CodingMatrix, TrainError> {
    Ok(match mode {
        Mode::Attribute => coding.clone(),
        Mode::Class => one_hot_named(coding.classes())?,
    })
}

fn shape_of(data: &Dataset) -> Result<(usize, usize), TrainError> {
    let first = data.samples.first().ok_or(TrainError::EmptyDataset)?;
    let (len, dim) = (first.signal.len(), first.signal.dim());
    if data.samples.iter().any(|s| s.signal.len() != len || s.signal.dim() != dim) {
        return Err(TrainError::RaggedDataset { len, dim });
    }
    Ok((len, dim))
}

fn labels(data: &Dataset, coding: &CodingMatrix) -> Result<Vec<usize>, TrainError> {
    data.classes
        .iter()
        .map(|c| coding.class_index(c).ok_or_else(|| TrainError::UnknownClass(c.clone())))
        .collect::<Result<Vec<_>, _>>()
        .map(|rows| data.samples.iter().map(|s| rows[s.class]).collect())
}

/// Training outputs for one signal under the relaxed network.
fn relaxed_outputs(
    params: &ModelParams,
    signal: &Signal,
    coding: &CodingMatrix,
    mode: Mode,
    beta: Temperature,
    relax: Relaxation,
) -> Result<Vec<f64>, TrainError> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, relax);
    let mut r = params.forward_attribute(&mut tape, &bound, signal, beta)?;
    if mode == Mode::Class {
        r = forward_class(&mut tape, &r, coding, params.effective_beta(beta)?)?;
    }
    Ok(r.into_iter().map(|v| tape.value(v)).collect())
}

/// Seed of restart `r`; restart 0 uses the configured seed itself.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Trains on `data` with coding matrix `coding`.
///
/// Each of `config.restarts` runs starts from its own initialization; the
/// run whose extracted formulae classify the training data best is kept,
/// lower final loss breaking ties.
pub fn train(data: &Dataset, coding: &CodingMatrix, config: &TrainConfig) -> Result<(ModelParams, TrainReport), TrainError> {
    let started = Instant::now();
    let (len, dim) = shape_of(data)?;
    config.validate(data.len())?;
    validate_coding_matrix(coding)?;
    let y = labels(data, coding)?;
    let table = target_table(coding, config.mode)?;
    let stats = DataStats::from_signals(data.signals());
    let arch = ArchConfig {
        attributes: coding.n_attributes(),
        rows: config.arch.rows,
        templates: config.arch.templates,
        dim,
        len,
        mask_gain: config.arch.mask_gain,
        affine: config.arch.affine,
        scale: stats.as_ref().map(DataStats::scale).filter(|s| *s > 0.0).unwrap_or(1.0),
    };
    let ctx = Context { data, coding, config, y: &y, table: &table, stats: stats.as_ref(), arch: &arch };

    let mut best: Option<(ModelParams, Vec<EpochRecord>, Evaluation)> = None;
    let mut runs = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let seed = restart_seed(config.seed, r);
        let (params, epochs) = ctx.run(seed)?;
        let eval = evaluate(&HardNetwork::new(&params)?, data, coding, config.mode, config.decode)?;
        let final_loss = epochs.last().map(|e| e.loss).unwrap_or(f64::INFINITY);
        log::info!("restart {r} (seed {seed}): training MCR {:.4}, final loss {:.4}", eval.class_mcr, final_loss);
        runs.push(RestartSummary { seed, train_mcr: eval.class_mcr, final_loss });
        let better = match &best {
            None => true,
            Some((_, e, b)) => {
                let bl = e.last().map(|x| x.loss).unwrap_or(f64::INFINITY);
                (eval.class_mcr, final_loss) < (b.class_mcr, bl)
            }
        };
        if better {
            best = Some((params, epochs, eval));
        }
    }
    let (params, epochs, eval) = best.expect("at least one restart");
    let formulae = HardNetwork::new(&params)?.formulae();
    let chosen = runs.iter().position(|r| r.train_mcr == eval.class_mcr && Some(r.final_loss) == epochs.last().map(|e| e.loss));
    let report = TrainReport {
        epochs,
        iterations: config.iterations,
        wall_clock_s: started.elapsed().as_secs_f64(),
        formulae: formulae.iter().map(print_formula).collect(),
        train_mcr: eval.class_mcr,
        restarts: runs,
        chosen: chosen.unwrap_or(0),
    };
    Ok((params, report))
}

struct Context<'a> {
    data: &'a Dataset,
    coding: &'a CodingMatrix,
    config: &'a TrainConfig,
    y: &'a [usize],
    table: &'a CodingMatrix,
    stats: Option<&'a DataStats>,
    arch: &'a ArchConfig,
}

impl Context<'_> {
    /// One full training run from the initialization drawn with `seed`.
    fn run(&self, seed: u64) -> Result<(ModelParams, Vec<EpochRecord>), TrainError> {
        let Context { data, coding, config, y, table, stats, arch } = *self;
        let mut params = init_params(arch, seed, stats)?;
        let mut adam = Adam::new(config.optimizer, params.step_scales(stats));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);

        let n = data.len();
        let per_epoch = n.div_ceil(config.batch_size);
        let mut order: Vec<usize> = (0..n).collect();
        let mut epochs = Vec::new();
        let mut epoch_loss = 0.0;
        let mut flat = params.to_flat();
        let mut tape = Tape::new();
        let finetune_from = ((1.0 - config.finetune) * config.iterations as f64).ceil() as usize;

        for it in 0..config.iterations {
            let pos = it % per_epoch;
            if pos == 0 {
                order.shuffle(&mut rng);
            }
            let batch = &order[pos * config.batch_size..((pos + 1) * config.batch_size).min(n)];
            let beta = Temperature::new(config.beta.at(it, config.iterations))?;
            params.beta = beta.get();
            if it == finetune_from {
                for k in params.revive_dead_attributes() {
                    log::warn!("attribute {k} had an all-zero matrix; enabled its strongest entry");
                }
                flat = params.to_flat();
            }
            let relax = if it >= finetune_from { Relaxation::Selected } else { Relaxation::Soft };

            tape.clear();
            let bound = params.bind(&mut tape, relax);
            let mut outputs = Vec::with_capacity(batch.len());
            for &i in batch {
                let mut r = params.forward_attribute(&mut tape, &bound, &data.samples[i].signal, beta)?;
                if config.mode == Mode::Class {
                    r = forward_class(&mut tape, &r, coding, params.effective_beta(beta)?)?;
                }
                outputs.push(r);
            }
            let batch_y: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let l = loss(&mut tape, &outputs, &batch_y, table, &config.loss)?;
            let lv = tape.value(l);
            if !lv.is_finite() {
                return Err(TrainError::Diverged { iteration: it, reason: format!("loss is {lv}") });
            }
            let grads = tape.backward(l)?;
            let g: Vec<f64> = bound.leaves.iter().map(|&v| grads.wrt(v)).collect();
            adam.step(&mut flat, &g);
            params.set_flat(&flat)?;
            params.project();
            flat = params.to_flat();
            if flat.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
                return Err(TrainError::Diverged { iteration: it, reason: "parameter magnitude exceeds 1e6".into() });
            }
            epoch_loss += lv;

            if pos + 1 == per_epoch || it + 1 == config.iterations {
                let (mcr, mean_abs) = relaxed_metrics(&params, data, y, coding, table, config, beta, relax)?;
                let steps = (pos + 1) as f64;
                epochs.push(EpochRecord { epoch: epochs.len(), loss: epoch_loss / steps, mcr, mean_abs_robustness: mean_abs });
                log::debug!("epoch {} loss {:.4} mcr {:.4} |r| {:.4}", epochs.len() - 1, epoch_loss / steps, mcr, mean_abs);
                epoch_loss = 0.0;
            }
        }
        Ok((params, epochs))
    }
}

fn relaxed_metrics(
    params: &ModelParams,
    data: &Dataset,
    y: &[usize],
    coding: &CodingMatrix,
    table: &CodingMatrix,
    config: &TrainConfig,
    beta: Temperature,
    relax: Relaxation,
) -> Result<(f64, f64), TrainError> {
    let mut wrong = 0usize;
    let mut abs_sum = 0.0;
    let mut abs_count = 0usize;
    for (s, &label) in data.samples.iter().zip(y) {
        let r = relaxed_outputs(params, &s.signal, coding, config.mode, beta, relax)?;
        if decode(&r, table, config.decode)? == label {
            abs_sum += r.iter().map(|v| v.abs()).sum::<f64>();
            abs_count += r.len();
        } else {
            wrong += 1;
        }
    }
    let mean_abs = if abs_count == 0 { 0.0 } else { abs_sum / abs_count as f64 };
    Ok((wrong as f64 / data.len() as f64, mean_abs))
}

/// Anything that maps a signal to an attribute vector with exact semantics.
pub trait AttributeModel {
    fn attribute_values(&self, signal: &Signal) -> Result<Vec<f64>, TrainError>;
}

impl AttributeModel for HardNetwork {
    fn attribute_values(&self, signal: &Signal) -> Result<Vec<f64>, TrainError> {
        Ok(HardNetwork::attribute_values(self, signal)?)
    }
}

impl AttributeModel for [Formula] {
    fn attribute_values(&self, signal: &Signal) -> Result<Vec<f64>, TrainError> {
        self.iter().map(|f| Ok(robustness(f, signal, 1)?)).collect()
    }
}

impl AttributeModel for Vec<Formula> {
    fn attribute_values(&self, signal: &Signal) -> Result<Vec<f64>, TrainError> {
        self.as_slice().attribute_values(signal)
    }
}

/// Decoded class (row of `coding`) and the output vector it came from.
pub fn predict<M: AttributeModel + ?Sized>(
    model: &M,
    signal: &Signal,
    coding: &CodingMatrix,
    mode: Mode,
    rule: Decode,
) -> Result<usize, TrainError> {
    let r = model.attribute_values(signal)?;
    Ok(match mode {
        Mode::Attribute => decode(&r, coding, rule)?,
        Mode::Class => decode(&hard_class(&r, coding)?, &one_hot_named(coding.classes())?, rule)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub samples: usize,
    /// Fraction of samples whose decoded class differs from the truth.
    pub class_mcr: f64,
    /// Fraction of samples with at least one output bit of the wrong sign.
    pub bit_mcr: f64,
    /// `confusion[true][predicted]`, indexed by coding-matrix row.
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
}

/// Misclassification rates of `model` on `data`.
pub fn evaluate<M: AttributeModel + ?Sized>(
    model: &M,
    data: &Dataset,
    coding: &CodingMatrix,
    mode: Mode,
    rule: Decode,
) -> Result<Evaluation, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let y = labels(data, coding)?;
    let table = target_table(coding, mode)?;
    let c = coding.n_classes();
    let mut confusion = vec![vec![0; c]; c];
    let mut predictions = Vec::with_capacity(data.len());
    let (mut wrong, mut bit_wrong) = (0usize, 0usize);
    for (s, &label) in data.samples.iter().zip(&y) {
        let r = model.attribute_values(&s.signal)?;
        let out = match mode {
            Mode::Attribute => r,
            Mode::Class => hard_class(&r, coding)?,
        };
        let pred = decode(&out, &table, rule)?;
        if pred != label {
            wrong += 1;
        }
        if out.iter().enumerate().any(|(k, v)| table.get(label, k) as f64 * v <= 0.0) {
            bit_wrong += 1;
        }
        confusion[label][pred] += 1;
        predictions.push(pred);
    }
    let n = data.len() as f64;
    Ok(Evaluation { samples: data.len(), class_mcr: wrong as f64 / n, bit_mcr: bit_wrong as f64 / n, confusion, predictions })
}

/// Class-level MCR of `model` on `data`.
pub fn mcr<M: AttributeModel + ?Sized>(
    model: &M,
    data: &Dataset,
    coding: &CodingMatrix,
    mode: Mode,
    rule: Decode,
) -> Result<f64, TrainError> {
    Ok(evaluate(model, data, coding, mode, rule)?.class_mcr)
}

/// Stratified fold assignment: each class is shuffled and dealt
/// round-robin, continuing the deal across classes so fold sizes differ by
/// at most one.
pub fn stratified_folds(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>, TrainError> {
    if folds < 2 {
        return Err(TrainError::Config("folds must be at least 2".into()));
    }
    if data.len() < folds {
        return Err(TrainError::Config(format!("{} samples cannot fill {folds} folds", data.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut fold_of = vec![0; data.len()];
    let mut deal = 0;
    for (c, name) in data.classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.samples[i].class == c).collect();
        if !members.is_empty() && members.len() < folds {
            return Err(TrainError::TooFewForFolds { class: name.clone(), count: members.len(), folds });
        }
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = deal % folds;
            deal += 1;
        }
    }
    Ok(fold_of)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub train_time_s: f64,
    pub train_mcr: f64,
    pub test: Evaluation,
    pub formulae: Vec<String>,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    pub mean_test_mcr: f64,
    pub mean_test_bit_mcr: f64,
    pub mean_train_time_s: f64,
}

pub fn crossvalidate(
    data: &Dataset,
    coding: &CodingMatrix,
    config: &TrainConfig,
    folds: usize,
) -> Result<CrossValidation, TrainError> {
    let fold_of = stratified_folds(data, folds, config.seed)?;
    let mut results = Vec::with_capacity(folds);
    for f in 0..folds {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] != f).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] == f).collect();
        let (train_set, test_set) = (data.subset(&train_idx), data.subset(&test_idx));
        let cfg = config.clone().fit_batch(train_set.len());
        let (params, report) = train(&train_set, coding, &cfg)?;
        let hard = HardNetwork::new(&params)?;
        let test = evaluate(&hard, &test_set, coding, cfg.mode, cfg.decode)?;
        log::info!("fold {} test mcr {:.4} time {:.2}s", f + 1, test.class_mcr, report.wall_clock_s);
        results.push(FoldResult {
            fold: f + 1,
            train_size: train_set.len(),
            test_size: test_set.len(),
            train_time_s: report.wall_clock_s,
            train_mcr: report.train_mcr,
            test,
            formulae: report.formulae,
            model: TrainedModel::new(params, coding.clone(), cfg.mode, cfg.decode)?,
        });
    }
    let k = results.len() as f64;
    Ok(CrossValidation {
        mean_test_mcr: results.iter().map(|r| r.test.class_mcr).sum::<f64>() / k,
        mean_test_bit_mcr: results.iter().map(|r| r.test.bit_mcr).sum::<f64>() / k,
        mean_train_time_s: results.iter().map(|r| r.train_time_s).sum::<f64>() / k,
        folds: results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginAblation {
    pub with_margin: TrainReport,
    pub without_margin: TrainReport,
    pub models: [TrainedModel; 2],
}

/// Same data and seed, trained once with the margin terms and once without.
pub fn margin_ablation(data: &Dataset, coding: &CodingMatrix, config: &TrainConfig) -> Result<MarginAblation, TrainError> {
    let mut on = config.clone();
    on.loss.margin = true;
    let mut off = config.clone();
    off.loss.margin = false;
    let (p_on, with_margin) = train(data, coding, &on)?;
    let (p_off, without_margin) = train(data, coding, &off)?;
    let models = [
        TrainedModel::new(p_on, coding.clone(), on.mode, on.decode)?,
        TrainedModel::new(p_off, coding.clone(), off.mode, off.decode)?,
    ];
    Ok(MarginAblation { with_margin, without_margin, models })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotReport {
    pub train: TrainReport,
    /// Observed and predicted codewords stacked; decoding runs against it.
    pub decoding_classes: Vec<String>,
    pub test_samples: usize,
    /// Fraction of held-out samples not decoded as their unseen class.
    pub mcr: f64,
    /// Predicted-class counts, in `decoding_classes` order.
    pub predicted: Vec<usize>,
    pub warnings: Vec<String>,
    pub model: TrainedModel,
}

/// Trains attribute formulae on the classes of `observed` only, then
/// decodes `test` (all of one unseen class in `predicted`) against the
/// stacked codewords.
pub fn zero_shot(
    train_data: &Dataset,
    observed: &CodingMatrix,
    predicted: &CodingMatrix,
    test: &Dataset,
    config: &TrainConfig,
) -> Result<ZeroShotReport, TrainError> {
    if predicted.n_attributes() != observed.n_attributes() {
        return Err(TrainError::Config(format!(
            "predicted codewords have {} columns, observed have {}",
            predicted.n_attributes(),
            observed.n_attributes()
        )));
    }
    let mut warnings = Vec::new();
    for j in 0..predicted.n_classes() {
        for i in 0..observed.n_classes() {
            if predicted.row(j) == observed.row(i) {
                let w = format!(
                    "codeword of '{}' equals observed class '{}': not a zero-shot class",
                    predicted.classes()[j],
                    observed.classes()[i]
                );
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }
    let mut cfg = config.clone().fit_batch(train_data.len());
    cfg.mode = Mode::Attribute;
    let (params, report) = train(train_data, observed, &cfg)?;
    let hard = HardNetwork::new(&params)?;
    let stacked = match observed.stack(predicted) {
        Ok(s) => s,
        // A repeated codeword cannot be stacked; decode against the unseen rows alone.
        Err(EcocError::DuplicateCodeword { .. }) => predicted.clone(),
        Err(e) => return Err(e.into()),
    };
    let truth = labels(test, &stacked)?;
    let mut counts = vec![0; stacked.n_classes()];
    let mut wrong = 0;
    for (s, &label) in test.samples.iter().zip(&truth) {
        let p = decode(&AttributeModel::attribute_values(&hard, &s.signal)?, &stacked, cfg.decode)?;
        counts[p] += 1;
        if p != label {
            wrong += 1;
        }
    }
    Ok(ZeroShotReport {
        train: report,
        decoding_classes: stacked.classes().to_vec(),
        test_samples: test.len(),
        mcr: if test.is_empty() { 0.0 } else { wrong as f64 / test.len() as f64 },
        predicted: counts,
        warnings,
        model: TrainedModel::new(params, observed.clone(), cfg.mode, cfg.decode)?,
    })
}

const MODEL_SCHEMA: &str = "mstl-model/1";

/// Parameters plus everything needed to classify: coding matrix, mode,
/// decode rule and the extracted formulae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema: String,
    pub params: ModelParams,
    pub coding: CodingMatrix,
    pub mode: Mode,
    pub decode: Decode,
    /// Extracted formulae at one decimal, for reading.
    pub formulae: Vec<String>,
    /// Extracted formulae with exact constants.
    pub formulae_exact: Vec<String>,
}

impl TrainedModel {
    pub fn new(params: ModelParams, coding: CodingMatrix, mode: Mode, decode: Decode) -> Result<Self, TrainError> {
        let f = HardNetwork::new(&params)?.formulae();
        Ok(Self {
            schema: MODEL_SCHEMA.into(),
            formulae: f.iter().map(print_formula).collect(),
            formulae_exact: f.iter().map(|f| print_formula_with(f, Precision::Exact)).collect(),
            params,
            coding,
            mode,
            decode,
        })
    }

    pub fn hard(&self) -> Result<HardNetwork, TrainError> {
        Ok(HardNetwork::new(&self.params)?)
    }

    /// Formulae parsed back from their exact text.
    pub fn parsed_formulae(&self) -> Result<Vec<Formula>, TrainError> {
        self.formulae_exact
            .iter()
            .map(|s| parse_formula(s).map_err(|e| TrainError::Model(format!("stored formula does not parse: {e}"))))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TrainError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrainError> {
        let m: TrainedModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.schema != MODEL_SCHEMA {
            return Err(TrainError::Model(format!("unsupported schema '{}'", m.schema)));
        }
        if m.params.config.attributes != m.coding.n_attributes() {
            return Err(TrainError::Model("coding matrix does not match the network".into()));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_synthetic, Sample};
    use crate::ecoc::presets;

    fn toy() -> (Dataset, CodingMatrix) {
        // Two 1-D classes: high plateau versus low plateau.
        let mut samples = Vec::new();
        for i in 0..10 {
            let level = if i % 2 == 0 { 2.0 + 0.1 * i as f64 } else { -2.0 - 0.1 * i as f64 };
            samples.push(Sample { signal: Signal::constant(&[level], 8).unwrap(), class: i % 2, attributes: None });
        }
        let data = Dataset {
            classes: vec!["hi".into(), "lo".into()],
            samples,
            provenance: crate::datasets::Provenance { generator: "toy".into(), seed: None, parameters: serde_json::Value::Null },
        };
        let coding = CodingMatrix::from_signs(&["hi", "lo"], &["high"], &["+", "-"]).unwrap();
        (data, coding)
    }

    fn quick() -> TrainConfig {
        TrainConfig { iterations: 60, batch_size: 5, arch: ArchSpec { rows: 2, templates: 4, ..ArchSpec::default() }, ..TrainConfig::default() }
    }

    #[test]
    fn learns_a_separable_toy_problem() {
        let (data, coding) = toy();
        let (params, report) = train(&data, &coding, &quick()).unwrap();
        assert_eq!(report.train_mcr, 0.0);
        assert_eq!(report.epochs.len(), 30);
        let hard = HardNetwork::new(&params).unwrap();
        assert_eq!(mcr(&hard, &data, &coding, Mode::Attribute, Decode::Loss).unwrap(), 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let (data, coding) = toy();
        let (pa, ra) = train(&data, &coding, &quick()).unwrap();
        let (pb, rb) = train(&data, &coding, &quick()).unwrap();
        assert_eq!(pa, pb);
        assert!(ra.same_run(&rb));
    }

    #[test]
    fn rejects_bad_config() {
        let (data, coding) = toy();
        let cfg = TrainConfig { batch_size: 11, ..quick() };
        assert!(matches!(train(&data, &coding, &cfg), Err(TrainError::Config(_))));
        let cfg = TrainConfig { iterations: 0, ..quick() };
        assert!(matches!(train(&data, &coding, &cfg), Err(TrainError::Config(_))));
    }

    #[test]
    fn mcr_counts() {
        let (data, coding) = toy();
        let right = vec![Formula::ge(0, 0.0)];
        assert_eq!(mcr(&right, &data, &coding, Mode::Attribute, Decode::Loss).unwrap(), 0.0);
        let wrong = vec![Formula::le(0, 0.0)];
        assert_eq!(mcr(&wrong, &data, &coding, Mode::Attribute, Decode::Loss).unwrap(), 1.0);
        // Threshold between the two weakest high samples: one of ten wrong.
        let one_off = vec![Formula::ge(0, 2.1)];
        let e = evaluate(&one_off, &data, &coding, Mode::Attribute, Decode::Loss).unwrap();
        assert_eq!(e.class_mcr, 0.1);
        assert_eq!(e.confusion, vec![vec![4, 1], vec![0, 5]]);
    }

    #[test]
    fn perfect_bits_imply_perfect_classes() {
        let e = presets::example4();
        for y in 0..e.n_classes() {
            let r: Vec<f64> = e.row(y).iter().map(|&b| b as f64 * 0.7).collect();
            for rule in [Decode::Hamming, Decode::Loss] {
                assert_eq!(decode(&r, &e, rule).unwrap(), y);
            }
        }
    }

    #[test]
    fn folds_are_stratified_and_seeded() {
        let (data, _) = toy();
        let f = stratified_folds(&data, 2, 3).unwrap();
        assert_eq!(f.iter().filter(|&&x| x == 0).count(), 5);
        for c in 0..2 {
            let per: Vec<usize> = (0..2).map(|k| (0..10).filter(|&i| data.samples[i].class == c && f[i] == k).count()).collect();
            assert!(per.iter().all(|&p| p == 2 || p == 3));
        }
        assert_eq!(f, stratified_folds(&data, 2, 3).unwrap());
        assert!(matches!(stratified_folds(&data, 6, 3), Err(TrainError::TooFewForFolds { .. })));
    }

    #[test]
    fn ablation_shares_its_starting_point() {
        let data = generate_synthetic(4, 2).unwrap();
        let cfg = TrainConfig { iterations: 10, batch_size: 10, ..TrainConfig::default() };
        let a = margin_ablation(&data, &presets::synthetic_class(), &cfg).unwrap();
        assert_eq!(a.with_margin.epochs.len(), a.without_margin.epochs.len());
        assert_ne!(a.with_margin.epochs, a.without_margin.epochs);
    }

    #[test]
    fn model_file_round_trip() {
        let (data, coding) = toy();
        let (params, _) = train(&data, &coding, &quick()).unwrap();
        let model = TrainedModel::new(params, coding, Mode::Attribute, Decode::Loss).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let back = TrainedModel::load(&path).unwrap();
        assert_eq!(back, model);
        let (h1, h2) = (model.hard().unwrap(), back.hard().unwrap());
        for s in data.signals() {
            assert_eq!(h1.attribute_values(s).unwrap(), h2.attribute_values(s).unwrap());
            let parsed = back.parsed_formulae().unwrap();
            assert_eq!(AttributeModel::attribute_values(&parsed, s).unwrap(), h1.attribute_values(s).unwrap());
        }
    }
}
