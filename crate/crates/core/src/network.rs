//! Multi-class formula network.
//!
//! A shared pool of parametric temporal templates `F_I(pred)` / `G_I(pred)`
//! feeds `n` attribute formulae. Attribute `k` owns a `rows x templates`
//! slice of the conjunction-disjunction logits: each row is a soft
//! conjunction over the templates it selects, and the rows are joined by a
//! soft disjunction. Binarizing the logits at 0 (entries at 0.5) and the
//! template time masks at 0.5 yields a disjunctive-normal-form formula per
//! attribute whose exact robustness equals [`HardNetwork`]'s output.

use crate::diffgraph::{sigmoid, GraphError, Tape, Temperature, Var, Weights, WEIGHT_EPS};
use crate::ecoc::CodingMatrix;
use crate::stl::{Cmp, Formula, Interval, Predicate, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid network config: {0}")]
    Config(String),
    #[error("signal is {found_len}x{found_dim}, network expects {len}x{dim}")]
    SignalShape { len: usize, dim: usize, found_len: usize, found_dim: usize },
    #[error("coding matrix has {found} columns, network has {expected} attributes")]
    CodingShape { expected: usize, found: usize },
    #[error("attribute {attribute} has no selected sub-formula after binarization")]
    DeadAttribute { attribute: usize },
    #[error("template {template} has an empty time interval after discretization")]
    EmptyInterval { template: usize },
    #[error("flat parameter vector has length {found}, expected {expected}")]
    FlatLength { expected: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemporalKind {
    Eventually,
    Always,
}

/// Predicate family of a template. Axis predicates learn only the
/// threshold; affine ones also learn the weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredicateShape {
    Axis { var: usize, cmp: Cmp },
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub kind: TemporalKind,
    pub shape: PredicateShape,
    /// Learnable weights; empty for axis predicates.
    pub weights: Vec<f64>,
    pub threshold: f64,
    /// Soft interval endpoints in steps.
    pub start: f64,
    pub end: f64,
}

impl Template {
    /// `u(t) = sigmoid(g (t - start)) * sigmoid(g (end - t))`.
    pub fn mask(&self, t: usize, gain: f64) -> f64 {
        let t = t as f64;
        sigmoid(gain * (t - self.start)) * sigmoid(gain * (self.end - t))
    }

    /// Offsets with `u(t) >= 0.5`, as an interval over `[0, len)`.
    pub fn discrete_interval(&self, len: usize, gain: f64) -> Option<Interval> {
        let on: Vec<usize> = (0..len).filter(|&t| self.mask(t, gain) >= 0.5).collect();
        Interval::new(*on.first()?, *on.last()?)
    }

    pub fn predicate(&self) -> Predicate {
        match self.shape {
            PredicateShape::Axis { var, cmp } => Predicate::axis(var, cmp, self.threshold),
            PredicateShape::Affine => Predicate::affine(self.weights.clone(), Cmp::Ge, self.threshold),
        }
    }

    fn n_params(&self) -> usize {
        self.weights.len() + 3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    /// Number of attribute formulae (coding-matrix columns).
    pub attributes: usize,
    /// Disjunction rows per attribute.
    pub rows: usize,
    /// Size of the shared template pool (conjunction slots per row).
    pub templates: usize,
    pub dim: usize,
    pub len: usize,
    /// Steepness of the soft time mask.
    pub mask_gain: f64,
    /// Learn full affine predicates instead of axis-aligned ones.
    pub affine: bool,
    /// Typical magnitude of robustness values; relaxed operators run at
    /// temperature `beta / scale`.
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl ArchConfig {
    pub fn new(attributes: usize, dim: usize, len: usize) -> Self {
        Self { attributes, rows: 3, templates: 8, dim, len, mask_gain: 5.0, affine: false, scale: 1.0 }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |what: &str| Err(NetworkError::Config(format!("{what} must be at least 1")));
        if self.attributes == 0 {
            return bad("attributes");
        }
        if self.rows == 0 {
            return bad("rows");
        }
        if self.templates == 0 {
            return bad("templates");
        }
        if self.dim == 0 {
            return bad("dim");
        }
        if self.len == 0 {
            return bad("len");
        }
        if !(self.mask_gain > 0.0 && self.mask_gain.is_finite()) {
            return Err(NetworkError::Config("mask_gain must be positive".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(NetworkError::Config("scale must be positive".into()));
        }
        Ok(())
    }

    /// Smallest `end - start` that keeps the discretized interval nonempty:
    /// some integer then sits at least `0.9 / g` inside both endpoints, where
    /// the mask is above 0.5.
    pub fn min_interval_gap(&self) -> f64 {
        1.0 + 2.0 * 0.9 / self.mask_gain
    }
}

/// Per-dimension value range of a dataset, used to place initial
/// thresholds and scale their step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl DataStats {
    pub fn from_signals<'a>(signals: impl IntoIterator<Item = &'a Signal>) -> Option<Self> {
        let mut it = signals.into_iter();
        let first = it.next()?;
        let mut min = first.at(0).to_vec();
        let mut max = min.clone();
        for s in std::iter::once(first).chain(it) {
            for row in s.rows() {
                for (k, &v) in row.iter().enumerate() {
                    min[k] = min[k].min(v);
                    max[k] = max[k].max(v);
                }
            }
        }
        Some(Self { min, max })
    }

    /// Largest per-dimension span.
    pub fn scale(&self) -> f64 {
        (0..self.min.len()).map(|k| self.span(k)).fold(0.0, f64::max)
    }

    pub fn span(&self, k: usize) -> f64 {
        (self.max[k] - self.min[k]).max(1e-9)
    }
}

/// Learnable state of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ArchConfig,
    pub templates: Vec<Template>,
    /// Conjunction-disjunction logits, `attributes x rows x templates`,
    /// row-major.
    pub logits: Vec<f64>,
    /// Temperature the parameters were last trained at.
    pub beta: f64,
}

/// Deterministic initialization.
///
/// Template `i` alternates Eventually/Always, then cycles through
/// comparison direction and variable, so a pool of `4 d` axis templates
/// covers every combination once. Thresholds are drawn uniformly over the
/// data range when `stats` is given (standard normal otherwise), intervals
/// are spread over the signal length, and logits are uniform in
/// `(-0.5, 0.5)`.
pub fn init_params(config: &ArchConfig, seed: u64, stats: Option<&DataStats>) -> Result<ModelParams, NetworkError> {
    config.validate()?;
    if let Some(s) = stats {
        if s.min.len() != config.dim {
            return Err(NetworkError::Config(format!(
                "data statistics have dimension {}, config has {}",
                s.min.len(),
                config.dim
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = config.len as f64;
    let gap = config.min_interval_gap();
    let mut templates = Vec::with_capacity(config.templates);
    for i in 0..config.templates {
        let kind = if i % 2 == 0 { TemporalKind::Eventually } else { TemporalKind::Always };
        let cmp = if (i / 2) % 2 == 0 { Cmp::Ge } else { Cmp::Le };
        let var = (i / 4) % config.dim;
        let (shape, weights) = if config.affine {
            let w: Vec<f64> = (0..config.dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            (PredicateShape::Affine, w.into_iter().map(|x| x / norm).collect())
        } else {
            (PredicateShape::Axis { var, cmp }, Vec::new())
        };
        let threshold = match stats {
            Some(s) if config.affine => {
                let (lo, hi) = weights.iter().enumerate().fold((0.0, 0.0), |(lo, hi), (k, &w)| {
                    let (a, b) = (w * s.min[k], w * s.max[k]);
                    (lo + a.min(b), hi + a.max(b))
                });
                rng.gen_range(lo..=hi)
            }
            Some(s) => rng.gen_range(s.min[var]..=s.max[var]),
            None => rng.sample(StandardNormal),
        };
        let start = rng.gen_range(-0.5..=0.5 * len);
        let end = (start + gap).max(start + rng.gen_range(0.25 * len..=len)).min(len);
        let mut t = Template { kind, shape, weights, threshold, start, end };
        project_interval(&mut t, config);
        templates.push(t);
    }
    let logits = (0..config.attributes * config.rows * config.templates)
        .map(|_| rng.gen_range(-0.5..0.5))
        .collect();
    Ok(ModelParams { config: config.clone(), templates, logits, beta: 1.0 })
}

fn project_interval(t: &mut Template, config: &ArchConfig) {
    let len = config.len as f64;
    let gap = config.min_interval_gap();
    t.start = t.start.clamp(-1.0, (len - 1.0 - gap).max(-1.0));
    t.end = t.end.clamp(t.start + gap, len.max(t.start + gap));
}

/// Logits are kept in this range so relaxed entries never fall below
/// [`WEIGHT_EPS`].
pub const LOGIT_BOUND: f64 = 8.0;

impl ModelParams {
    pub fn n_params(&self) -> usize {
        self.templates.iter().map(Template::n_params).sum::<usize>() + self.logits.len()
    }

    pub fn logit(&self, attribute: usize, row: usize, template: usize) -> f64 {
        let c = &self.config;
        self.logits[(attribute * c.rows + row) * c.templates + template]
    }

    /// Flat layout: per template `[weights.., threshold, start, end]`, then
    /// the logits.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for t in &self.templates {
            out.extend_from_slice(&t.weights);
            out.extend([t.threshold, t.start, t.end]);
        }
        out.extend_from_slice(&self.logits);
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), NetworkError> {
        if flat.len() != self.n_params() {
            return Err(NetworkError::FlatLength { expected: self.n_params(), found: flat.len() });
        }
        let mut i = 0;
        for t in &mut self.templates {
            let w = t.weights.len();
            t.weights.copy_from_slice(&flat[i..i + w]);
            i += w;
            t.threshold = flat[i];
            t.start = flat[i + 1];
            t.end = flat[i + 2];
            i += 3;
        }
        self.logits.copy_from_slice(&flat[i..]);
        Ok(())
    }

    /// Relative step size per flat coordinate: thresholds move in units of
    /// the data span, interval endpoints in units of the signal length.
    pub fn step_scales(&self, stats: Option<&DataStats>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        let len = self.config.len as f64;
        for t in &self.templates {
            out.extend(std::iter::repeat(1.0).take(t.weights.len()));
            let span = match (t.shape, stats) {
                (PredicateShape::Axis { var, .. }, Some(s)) => s.span(var),
                (PredicateShape::Affine, Some(s)) => (0..s.min.len()).map(|k| s.span(k)).fold(0.0, f64::max),
                (_, None) => 1.0,
            };
            out.extend([span, len / 10.0, len / 10.0]);
        }
        out.extend(std::iter::repeat(10.0).take(self.logits.len()));
        out
    }

    /// Restores the constraints gradient steps may break: nonempty
    /// discretized intervals inside the signal and bounded logits.
    pub fn project(&mut self) {
        let config = self.config.clone();
        for t in &mut self.templates {
            project_interval(t, &config);
        }
        for l in &mut self.logits {
            *l = l.clamp(-LOGIT_BOUND, LOGIT_BOUND);
        }
    }

    /// Turns on the strongest matrix entry of every attribute whose
    /// binarized matrix is all zero; returns the revived attributes.
    pub fn revive_dead_attributes(&mut self) -> Vec<usize> {
        let per = self.config.rows * self.config.templates;
        let mut revived = Vec::new();
        for (k, chunk) in self.logits.chunks_mut(per).enumerate() {
            if chunk.iter().all(|&l| l < 0.0) {
                let best = (0..chunk.len()).fold(0, |b, i| if chunk[i] > chunk[b] { i } else { b });
                chunk[best] = 0.0;
                revived.push(k);
            }
        }
        revived
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    fn check_signal(&self, s: &Signal) -> Result<(), NetworkError> {
        let c = &self.config;
        if s.len() != c.len || s.dim() != c.dim {
            return Err(NetworkError::SignalShape { len: c.len, dim: c.dim, found_len: s.len(), found_dim: s.dim() });
        }
        Ok(())
    }
}

/// Whether the relaxed forward uses continuous or 0/1 masks and matrix
/// entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relaxation {
    /// Soft masks, soft matrix.
    Soft,
    /// Soft masks, matrix binarized at 0.5 (no gradient to the logits).
    Selected,
    /// 0/1 masks and matrix.
    Binarized,
}

#[derive(Debug, Clone)]
enum Gate {
    Vars(Vec<Var>),
    Fixed(Vec<f64>),
}

impl Gate {
    fn weights(&self) -> Weights<'_> {
        match self {
            Gate::Vars(v) => Weights::Vars(v),
            Gate::Fixed(w) => Weights::Fixed(w),
        }
    }

    fn live(&self, tape: &Tape) -> bool {
        match self {
            Gate::Vars(v) => v.iter().any(|&x| tape.value(x) > WEIGHT_EPS),
            Gate::Fixed(w) => w.iter().any(|&x| x > WEIGHT_EPS),
        }
    }
}

/// Parameters placed on a tape, with time masks and relaxed matrix entries
/// computed once and shared by every sample of a batch.
#[derive(Debug, Clone)]
pub struct BoundParams {
    /// Leaves in flat-layout order.
    pub leaves: Vec<Var>,
    thresholds: Vec<Var>,
    weights: Vec<Vec<Var>>,
    masks: Vec<Gate>,
    /// One gate per (attribute, row).
    rows: Vec<Gate>,
}

impl ModelParams {
    pub fn bind(&self, tape: &mut Tape, relax: Relaxation) -> BoundParams {
        let c = &self.config;
        let gain = c.mask_gain;
        let leaves: Vec<Var> = self.to_flat().into_iter().map(|v| tape.leaf(v)).collect();
        let mut thresholds = Vec::with_capacity(self.templates.len());
        let mut weights = Vec::with_capacity(self.templates.len());
        let mut masks = Vec::with_capacity(self.templates.len());
        let mut i = 0;
        for t in &self.templates {
            let w = t.weights.len();
            weights.push(leaves[i..i + w].to_vec());
            thresholds.push(leaves[i + w]);
            let (start, end) = (leaves[i + w + 1], leaves[i + w + 2]);
            i += w + 3;
            masks.push(match relax {
                Relaxation::Soft | Relaxation::Selected => Gate::Vars(
                    (0..c.len)
                        .map(|step| {
                            let step = step as f64;
                            let a = tape.linear(&[(start, -gain)], gain * step);
                            let a = tape.sigmoid(a);
                            let b = tape.linear(&[(end, gain)], -gain * step);
                            let b = tape.sigmoid(b);
                            tape.mul(a, b)
                        })
                        .collect(),
                ),
                Relaxation::Binarized => {
                    Gate::Fixed((0..c.len).map(|step| if t.mask(step, gain) >= 0.5 { 1.0 } else { 0.0 }).collect())
                }
            });
        }
        let logit_leaves = &leaves[i..];
        let rows = logit_leaves
            .chunks(c.templates)
            .zip(self.logits.chunks(c.templates))
            .map(|(vars, vals)| match relax {
                Relaxation::Soft => Gate::Vars(vars.iter().map(|&l| tape.sigmoid(l)).collect()),
                Relaxation::Selected | Relaxation::Binarized => {
                    Gate::Fixed(vals.iter().map(|&l| if l >= 0.0 { 1.0 } else { 0.0 }).collect())
                }
            })
            .collect();
        BoundParams { leaves, thresholds, weights, masks, rows }
    }

    /// Relaxed attribute vector as tape nodes.
    ///
    /// Rows whose gates are all below [`WEIGHT_EPS`] are skipped; an
    /// attribute with no live row is an error.
    pub fn forward_attribute(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        signal: &Signal,
        beta: Temperature,
    ) -> Result<Vec<Var>, NetworkError> {
        self.check_signal(signal)?;
        let c = &self.config;
        let beta = self.effective_beta(beta)?;
        let mut template_r = Vec::with_capacity(self.templates.len());
        for (j, t) in self.templates.iter().enumerate() {
            if !bound.masks[j].live(tape) {
                return Err(NetworkError::EmptyInterval { template: j });
            }
            let thr = bound.thresholds[j];
            let values: Vec<Var> = signal
                .rows()
                .map(|x| match t.shape {
                    PredicateShape::Axis { var, cmp: Cmp::Ge } => tape.linear(&[(thr, -1.0)], x[var]),
                    PredicateShape::Axis { var, cmp: Cmp::Le } => tape.linear(&[(thr, 1.0)], -x[var]),
                    PredicateShape::Affine => {
                        let mut terms: Vec<(Var, f64)> = bound.weights[j].iter().zip(x).map(|(&w, &xi)| (w, xi)).collect();
                        terms.push((thr, -1.0));
                        tape.linear(&terms, 0.0)
                    }
                })
                .collect();
            let r = match t.kind {
                TemporalKind::Eventually => tape.softmax(&values, bound.masks[j].weights(), beta)?,
                TemporalKind::Always => tape.softmin(&values, bound.masks[j].weights(), beta)?,
            };
            template_r.push(r);
        }
        let mut out = Vec::with_capacity(c.attributes);
        for k in 0..c.attributes {
            let mut rows = Vec::with_capacity(c.rows);
            for i in 0..c.rows {
                let gate = &bound.rows[k * c.rows + i];
                if gate.live(tape) {
                    rows.push(tape.softmin(&template_r, gate.weights(), beta)?);
                }
            }
            if rows.is_empty() {
                return Err(NetworkError::DeadAttribute { attribute: k });
            }
            out.push(tape.softmax(&rows, Weights::Unit, beta)?);
        }
        Ok(out)
    }

    /// Temperature applied to raw robustness values.
    pub fn effective_beta(&self, beta: Temperature) -> Result<Temperature, NetworkError> {
        Ok(Temperature::new(beta.get() / self.config.scale)?)
    }

    /// Relaxed attribute vector evaluated to numbers.
    pub fn attribute_values(&self, signal: &Signal, beta: Temperature, relax: Relaxation) -> Result<Vec<f64>, NetworkError> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, relax);
        let r = self.forward_attribute(&mut tape, &bound, signal, beta)?;
        Ok(r.into_iter().map(|v| tape.value(v)).collect())
    }
}

/// Relaxed class vector: `r_yj = softmin_k E(j,k) r_ak` with unit weights.
pub fn forward_class(
    tape: &mut Tape,
    attributes: &[Var],
    coding: &CodingMatrix,
    beta: Temperature,
) -> Result<Vec<Var>, NetworkError> {
    if coding.n_attributes() != attributes.len() {
        return Err(NetworkError::CodingShape { expected: attributes.len(), found: coding.n_attributes() });
    }
    (0..coding.n_classes())
        .map(|j| {
            let signed: Vec<Var> = attributes
                .iter()
                .enumerate()
                .map(|(k, &r)| if coding.get(j, k) > 0 { r } else { tape.neg(r) })
                .collect();
            Ok(tape.softmin(&signed, Weights::Unit, beta)?)
        })
        .collect()
}

/// Exact class vector `r_yj = min_k E(j,k) r_ak`.
pub fn hard_class(attributes: &[f64], coding: &CodingMatrix) -> Result<Vec<f64>, NetworkError> {
    if coding.n_attributes() != attributes.len() {
        return Err(NetworkError::CodingShape { expected: attributes.len(), found: coding.n_attributes() });
    }
    Ok((0..coding.n_classes())
        .map(|j| {
            attributes
                .iter()
                .enumerate()
                .map(|(k, &r)| if coding.get(j, k) > 0 { r } else { -r })
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
struct ConcreteTemplate {
    kind: TemporalKind,
    interval: Interval,
    predicate: Predicate,
}

/// Network with binarized matrix, discretized intervals and exact min/max.
#[derive(Debug, Clone, PartialEq)]
pub struct HardNetwork {
    len: usize,
    dim: usize,
    templates: Vec<Option<ConcreteTemplate>>,
    /// Per attribute, the nonempty rows as lists of template indices.
    rows: Vec<Vec<Vec<usize>>>,
}

impl HardNetwork {
    pub fn new(params: &ModelParams) -> Result<Self, NetworkError> {
        let c = &params.config;
        let mut rows = Vec::with_capacity(c.attributes);
        let mut used = vec![false; c.templates];
        for k in 0..c.attributes {
            let mut attr_rows: Vec<Vec<usize>> = Vec::new();
            for i in 0..c.rows {
                let sel: Vec<usize> = (0..c.templates).filter(|&j| params.logit(k, i, j) >= 0.0).collect();
                if !sel.is_empty() && !attr_rows.contains(&sel) {
                    attr_rows.push(sel);
                }
            }
            // Absorption: `a | (a & b)` has the robustness of `a` exactly.
            let absorbed = |r: &Vec<usize>, rows: &[Vec<usize>]| {
                rows.iter().any(|o| o != r && o.iter().all(|j| r.contains(j)))
            };
            let snapshot = attr_rows.clone();
            attr_rows.retain(|r| !absorbed(r, &snapshot));
            attr_rows.iter().flatten().for_each(|&j| used[j] = true);
            if attr_rows.is_empty() {
                return Err(NetworkError::DeadAttribute { attribute: k });
            }
            rows.push(attr_rows);
        }
        let templates = params
            .templates
            .iter()
            .enumerate()
            .map(|(j, t)| {
                if !used[j] {
                    return Ok(None);
                }
                let interval = t.discrete_interval(c.len, c.mask_gain).ok_or(NetworkError::EmptyInterval { template: j })?;
                Ok(Some(ConcreteTemplate { kind: t.kind, interval, predicate: t.predicate() }))
            })
            .collect::<Result<Vec<_>, NetworkError>>()?;
        Ok(Self { len: c.len, dim: c.dim, templates, rows })
    }

    pub fn n_attributes(&self) -> usize {
        self.rows.len()
    }

    pub fn attribute_values(&self, signal: &Signal) -> Result<Vec<f64>, NetworkError> {
        if signal.len() != self.len || signal.dim() != self.dim {
            return Err(NetworkError::SignalShape {
                len: self.len,
                dim: self.dim,
                found_len: signal.len(),
                found_dim: signal.dim(),
            });
        }
        let template_r: Vec<f64> = self
            .templates
            .iter()
            .map(|t| match t {
                None => f64::NAN,
                Some(t) => {
                    let hi = t.interval.end.min(self.len - 1);
                    let vals = (t.interval.start..=hi).map(|step| t.predicate.eval(signal.at(step)));
                    match t.kind {
                        TemporalKind::Eventually => vals.fold(f64::NEG_INFINITY, f64::max),
                        TemporalKind::Always => vals.fold(f64::INFINITY, f64::min),
                    }
                }
            })
            .collect();
        Ok(self
            .rows
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|row| row.iter().map(|&j| template_r[j]).fold(f64::INFINITY, f64::min))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect())
    }

    pub fn class_values(&self, signal: &Signal, coding: &CodingMatrix) -> Result<Vec<f64>, NetworkError> {
        hard_class(&self.attribute_values(signal)?, coding)
    }

    /// One disjunctive-normal-form formula per attribute.
    pub fn formulae(&self) -> Vec<Formula> {
        self.rows
            .iter()
            .map(|rows| {
                Formula::or(
                    rows.iter()
                        .map(|row| {
                            Formula::and(
                                row.iter()
                                    .map(|&j| {
                                        let t = self.templates[j].as_ref().expect("selected template is concrete");
                                        let body = Box::new(Formula::Pred(t.predicate.clone()));
                                        match t.kind {
                                            TemporalKind::Eventually => Formula::Eventually(t.interval, body),
                                            TemporalKind::Always => Formula::Always(t.interval, body),
                                        }
                                    })
                                    .collect(),
                            )
                        })
                        .collect(),
                )
            })
            .collect()
    }
}

/// Binarizes the network and returns one formula per attribute.
pub fn extract_formulae(params: &ModelParams) -> Result<Vec<Formula>, NetworkError> {
    Ok(HardNetwork::new(params)?.formulae())
}
