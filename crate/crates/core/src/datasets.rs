//! Labeled signal collections, the naval and synthetic generators, and the
//! on-disk format.
//!
//! Generators build trajectories constructively from waypoints and accept
//! a sample only if exact robustness confirms its class specification, so
//! labels never depend on generator internals.

use crate::ecoc::CodingMatrix;
use crate::stl::{robustness, Formula, RobustnessError, Signal, SignalError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no valid sample for class {class} after {attempts} attempts")]
    GenerationFailed { class: String, attempts: usize },
    #[error("class counts must be at least 1")]
    BadCounts,
    #[error("unknown class label '{0}'")]
    UnknownClass(String),
    #[error("signal {id}: non-contiguous time index (expected {expected}, found {found})")]
    NonContiguous { id: u64, expected: u64, found: u64 },
    #[error("signal {id}: rows are not sorted by signal id")]
    Unsorted { id: u64 },
    #[error("signal {id}: {msg}")]
    Inconsistent { id: u64, msg: String },
    #[error("malformed file {path}: {msg}")]
    Malformed { path: PathBuf, msg: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub signal: Signal,
    /// Index into [`Dataset::classes`].
    pub class: usize,
    /// Attribute labels, when a coding matrix has been attached.
    pub attributes: Option<Vec<i8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub classes: Vec<String>,
    pub samples: Vec<Sample>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.signal.dim())
    }

    pub fn signal_len(&self) -> Option<usize> {
        self.samples.first().map(|s| s.signal.len())
    }

    pub fn class_name(&self, sample: usize) -> &str {
        &self.classes[self.samples[sample].class]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for s in &self.samples {
            counts[s.class] += 1;
        }
        counts
    }

    /// Row of `coding` for every sample, matched by class name.
    pub fn labels_for(&self, coding: &CodingMatrix) -> Result<Vec<usize>, DatasetError> {
        let rows: Vec<usize> = self
            .classes
            .iter()
            .map(|c| coding.class_index(c).ok_or_else(|| DatasetError::UnknownClass(c.clone())))
            .collect::<Result<_, _>>()?;
        Ok(self.samples.iter().map(|s| rows[s.class]).collect())
    }

    /// Fills every sample's attribute vector with its class codeword.
    pub fn attach_attributes(&mut self, coding: &CodingMatrix) -> Result<(), DatasetError> {
        let labels = self.labels_for(coding)?;
        for (s, y) in self.samples.iter_mut().zip(labels) {
            s.attributes = Some(coding.row(y).to_vec());
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            classes: self.classes.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Samples of the named classes only; the class list is narrowed too.
    pub fn filter_classes(&self, keep: &[&str]) -> Result<Dataset, DatasetError> {
        let mut map = HashMap::new();
        let mut classes = Vec::new();
        for name in keep {
            let old = self.classes.iter().position(|c| c == name).ok_or_else(|| DatasetError::UnknownClass(name.to_string()))?;
            map.insert(old, classes.len());
            classes.push(name.to_string());
        }
        let samples = self
            .samples
            .iter()
            .filter_map(|s| map.get(&s.class).map(|&c| Sample { class: c, ..s.clone() }))
            .collect();
        Ok(Dataset { classes, samples, provenance: self.provenance.clone() })
    }

    pub fn signals(&self) -> impl Iterator<Item = &Signal> {
        self.samples.iter().map(|s| &s.signal)
    }
}

/// A class and the formula its members satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub name: String,
    pub formula: Formula,
    /// Names of the top-level conjuncts, for diagnostics.
    pub conjunct_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub satisfied: bool,
    pub robustness: f64,
    pub conjuncts: Vec<(String, f64)>,
}

/// Exact verdict of `spec` on `signal`, with per-conjunct robustness.
pub fn verify_sample(signal: &Signal, spec: &ClassSpec) -> Result<Verification, DatasetError> {
    let r = robustness(&spec.formula, signal, 1)?;
    let parts: Vec<&Formula> = match &spec.formula {
        Formula::And(cs) => cs.iter().collect(),
        f => vec![f],
    };
    let conjuncts = parts
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let name = spec.conjunct_names.get(i).cloned().unwrap_or_else(|| format!("conjunct{}", i + 1));
            Ok((name, robustness(f, signal, 1)?))
        })
        .collect::<Result<_, DatasetError>>()?;
    Ok(Verification { satisfied: r > 0.0, robustness: r, conjuncts })
}

const MAX_ATTEMPTS: usize = 1000;

/// Waypoint `(step, point)`; consecutive waypoints are joined linearly.
type Waypoint = (f64, [f64; 2]);

fn trace_path(waypoints: &[Waypoint], len: usize, noise: f64, rng: &mut ChaCha8Rng) -> Result<Signal, SignalError> {
    let normal = Normal::new(0.0, noise).expect("noise is finite and nonnegative");
    let mut values = Vec::with_capacity(len * 2);
    for step in 0..len {
        let t = step as f64;
        let seg = waypoints.windows(2).find(|w| t <= w[1].0).unwrap_or(&waypoints[waypoints.len() - 2..]);
        let ((t0, p0), (t1, p1)) = (seg[0], seg[1]);
        let a = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 1.0 };
        for k in 0..2 {
            values.push(p0[k] + a * (p1[k] - p0[k]) + normal.sample(rng));
        }
    }
    Signal::new(2, values)
}

fn point_in(rng: &mut ChaCha8Rng, x: (f64, f64), y: (f64, f64)) -> [f64; 2] {
    [rng.gen_range(x.0..=x.1), rng.gen_range(y.0..=y.1)]
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn generate<F>(
    specs: &[ClassSpec],
    counts: &[usize],
    seed: u64,
    mut propose: F,
) -> Result<Vec<Sample>, DatasetError>
where
    F: FnMut(usize, &mut ChaCha8Rng) -> Result<Signal, SignalError>,
{
    if counts.len() != specs.len() || counts.iter().any(|&c| c == 0) {
        return Err(DatasetError::BadCounts);
    }
    let mut samples = Vec::with_capacity(counts.iter().sum());
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let mut rng = sample_rng(seed, samples.len());
            let mut accepted = None;
            for _ in 0..MAX_ATTEMPTS {
                let s = propose(class, &mut rng)?;
                if is_exclusively(&s, class, specs)? {
                    accepted = Some(s);
                    break;
                }
            }
            let signal = accepted.ok_or_else(|| DatasetError::GenerationFailed {
                class: specs[class].name.clone(),
                attempts: MAX_ATTEMPTS,
            })?;
            samples.push(Sample { signal, class, attributes: None });
        }
    }
    Ok(samples)
}

/// Satisfies its own class specification and no other.
fn is_exclusively(s: &Signal, class: usize, specs: &[ClassSpec]) -> Result<bool, DatasetError> {
    for (j, spec) in specs.iter().enumerate() {
        if (robustness(&spec.formula, s, 1)? > 0.0) != (j == class) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sea-map geometry for the naval scenario, on a `[0, 70]^2` map.
///
/// The harbor lies at low x and high y, the island along the bottom of the
/// map. Class 1 reaches the harbor while staying north of the island,
/// class 2 passes the island before reaching the harbor, and class 3 stays
/// in open sea on the east side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavalGeometry {
    pub len: usize,
    pub noise: f64,
    pub start_x: (f64, f64),
    pub start_y: (f64, f64),
    pub harbor_x: (f64, f64),
    pub harbor_y: (f64, f64),
    pub island_x: (f64, f64),
    pub island_y: (f64, f64),
    /// Open-sea trajectories keep `x` above this.
    pub sea_x: f64,
    /// Non-island trajectories keep `y` above this.
    pub north_y: f64,
}

impl Default for NavalGeometry {
    fn default() -> Self {
        Self {
            len: 60,
            noise: 0.4,
            start_x: (50.0, 66.0),
            start_y: (30.0, 62.0),
            harbor_x: (4.0, 18.0),
            harbor_y: (44.0, 64.0),
            island_x: (28.0, 48.0),
            island_y: (6.0, 16.0),
            sea_x: 42.0,
            north_y: 30.0,
        }
    }
}

impl NavalGeometry {
    pub fn reach_harbor(&self) -> Formula {
        let end = self.len - 1;
        Formula::eventually(0, end, Formula::And(vec![Formula::le(0, self.harbor_x.1 + 2.0), Formula::ge(1, self.harbor_y.0 - 2.0)]))
    }

    pub fn reach_island(&self) -> Formula {
        let end = self.len - 1;
        Formula::eventually(
            0,
            end,
            Formula::And(vec![
                Formula::ge(0, self.island_x.0 - 3.0),
                Formula::le(0, self.island_x.1 + 3.0),
                Formula::le(1, self.island_y.1 + 4.0),
            ]),
        )
    }

    pub fn open_sea(&self) -> Formula {
        Formula::always(0, self.len - 1, Formula::ge(0, self.sea_x - 6.0))
    }

    pub fn class_specs(&self) -> Vec<ClassSpec> {
        let (h, i, sea) = (self.reach_harbor(), self.reach_island(), self.open_sea());
        let spec = |name: &str, parts: Vec<(Formula, &str)>| ClassSpec {
            name: name.to_string(),
            conjunct_names: parts.iter().map(|(_, n)| n.to_string()).collect(),
            formula: Formula::And(parts.into_iter().map(|(f, _)| f).collect()),
        };
        vec![
            spec("class1", vec![(h.clone(), "reach harbor"), (Formula::not(i.clone()), "not reach island")]),
            spec("class2", vec![(h.clone(), "reach harbor"), (i.clone(), "reach island")]),
            spec(
                "class3",
                vec![(sea, "stay in open sea"), (Formula::not(h), "not reach harbor"), (Formula::not(i), "not reach island")],
            ),
        ]
    }

    fn propose(&self, class: usize, rng: &mut ChaCha8Rng) -> Result<Signal, SignalError> {
        let end = (self.len - 1) as f64;
        let start = point_in(rng, self.start_x, self.start_y);
        let harbor = point_in(rng, (self.harbor_x.0 + 1.0, self.harbor_x.1 - 1.0), (self.harbor_y.0 + 1.0, self.harbor_y.1 - 1.0));
        let wps: Vec<Waypoint> = match class {
            0 => {
                let mid = point_in(rng, (28.0, 45.0), (self.north_y + 2.0, 52.0));
                let t_mid = rng.gen_range(0.2..0.37) * end;
                let t_h = rng.gen_range(0.55..0.8) * end;
                vec![(0.0, start), (t_mid, mid), (t_h, harbor), (end, harbor)]
            }
            1 => {
                let island = point_in(rng, (self.island_x.0 + 2.0, self.island_x.1 - 2.0), (self.island_y.0 + 1.0, self.island_y.1 - 1.0));
                let t_i = rng.gen_range(0.24..0.44) * end;
                let t_h = rng.gen_range(0.68..0.92) * end;
                vec![(0.0, start), (t_i, island), (t_h, harbor), (end, harbor)]
            }
            _ => {
                let k = rng.gen_range(2..=3);
                let mut wps = vec![(0.0, start)];
                for i in 1..=k {
                    let p = point_in(rng, (self.sea_x + 1.0, 66.0), (self.north_y + 2.0, 64.0));
                    wps.push((end * i as f64 / k as f64, p));
                }
                wps
            }
        };
        trace_path(&wps, self.len, self.noise, rng)
    }
}

/// Naval trajectories: `counts[c]` samples of class `c + 1`.
pub fn generate_naval(counts: [usize; 3], seed: u64, geometry: &NavalGeometry) -> Result<Dataset, DatasetError> {
    let specs = geometry.class_specs();
    let samples = generate(&specs, &counts, seed, |c, rng| geometry.propose(c, rng))?;
    Ok(Dataset {
        classes: specs.iter().map(|s| s.name.clone()).collect(),
        samples,
        provenance: Provenance {
            generator: "naval".into(),
            seed: Some(seed),
            parameters: serde_json::json!({ "counts": counts, "geometry": geometry }),
        },
    })
}

/// Axis-aligned regions of the synthetic benchmark, `[x_lo, x_hi] x [y_lo, y_hi]`.
pub const SYNTHETIC_REGIONS: [[f64; 4]; 4] = [
    [3.0, 5.0, 4.0, 6.0],
    [-4.0, -2.0, 3.0, 5.0],
    [5.0, 7.0, -5.0, -3.0],
    [-5.0, -3.0, -5.0, -3.0],
];

/// Signals cover offsets 0..=40, the largest time bound in the
/// specifications.
pub const SYNTHETIC_LEN: usize = 41;

fn region_box(r: usize) -> Formula {
    let [x0, x1, y0, y1] = SYNTHETIC_REGIONS[r];
    Formula::boxed(&[(0, x0, x1), (1, y0, y1)])
}

/// The four generating specifications `phi_1 .. phi_4`.
pub fn synthetic_phis() -> [Formula; 4] {
    [
        Formula::eventually(0, 10, region_box(0)),
        Formula::always(30, 40, region_box(1)),
        Formula::eventually(10, 40, region_box(2)),
        Formula::eventually(10, 40, region_box(3)),
    ]
}

/// Which of `phi_1 .. phi_4` each class satisfies.
pub const SYNTHETIC_MEMBERSHIP: [[bool; 4]; 5] = [
    [true, true, false, false],
    [true, false, true, false],
    [false, true, true, false],
    [false, false, false, true],
    [false, true, false, false],
];

pub fn synthetic_specs() -> Vec<ClassSpec> {
    let phis = synthetic_phis();
    SYNTHETIC_MEMBERSHIP
        .iter()
        .enumerate()
        .map(|(c, member)| {
            // Positive conjuncts first, then negations, each in index order.
            let mut parts = Vec::new();
            let mut names = Vec::new();
            for want in [true, false] {
                for (k, &m) in member.iter().enumerate() {
                    if m == want {
                        parts.push(if want { phis[k].clone() } else { Formula::not(phis[k].clone()) });
                        names.push(if want { format!("phi{}", k + 1) } else { format!("!phi{}", k + 1) });
                    }
                }
            }
            ClassSpec { name: format!("c{}", c + 1), formula: Formula::And(parts), conjunct_names: names }
        })
        .collect()
}

fn inner(rng: &mut ChaCha8Rng, r: usize) -> [f64; 2] {
    let [x0, x1, y0, y1] = SYNTHETIC_REGIONS[r];
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    point_in(rng, (cx - 0.6, cx + 0.6), (cy - 0.6, cy + 0.6))
}

fn propose_synthetic(class: usize, rng: &mut ChaCha8Rng) -> Result<Signal, SignalError> {
    let end = (SYNTHETIC_LEN - 1) as f64;
    let start = point_in(rng, (-0.5, 0.5), (-0.5, 0.5));
    let mut wps: Vec<Waypoint> = vec![(0.0, start)];
    let visit = |wps: &mut Vec<Waypoint>, r: usize, t: f64, hold: f64, rng: &mut ChaCha8Rng| {
        let p = inner(rng, r);
        wps.push((t, p));
        if hold > 0.0 {
            wps.push(((t + hold).min(end), p));
        }
    };
    let rest = |rng: &mut ChaCha8Rng, x: (f64, f64), y: (f64, f64)| point_in(rng, x, y);
    match class {
        0 => {
            let t1 = rng.gen_range(4.0..=8.0);
            visit(&mut wps, 0, t1, rng.gen_range(0.0..=2.0), rng);
            visit(&mut wps, 1, rng.gen_range(22.0..=28.0), end, rng);
        }
        1 => {
            let t1 = rng.gen_range(4.0..=8.0);
            visit(&mut wps, 0, t1, rng.gen_range(0.0..=2.0), rng);
            visit(&mut wps, 2, rng.gen_range(16.0..=30.0), rng.gen_range(0.0..=3.0), rng);
            wps.push((end, rest(rng, (0.5, 2.5), (-2.0, 0.0))));
        }
        2 => {
            if rng.gen_bool(0.5) {
                wps.push((rng.gen_range(4.0..=8.0), rest(rng, (-4.0, -1.0), (3.0, 6.0))));
            }
            visit(&mut wps, 2, rng.gen_range(12.0..=20.0), rng.gen_range(0.0..=2.0), rng);
            visit(&mut wps, 1, rng.gen_range(24.0..=28.0), end, rng);
        }
        3 => {
            if rng.gen_bool(0.5) {
                wps.push((rng.gen_range(5.0..=10.0), rest(rng, (-4.0, -1.0), (3.0, 6.0))));
            }
            visit(&mut wps, 3, rng.gen_range(14.0..=30.0), rng.gen_range(0.0..=3.0), rng);
            wps.push((end, rest(rng, (-2.0, 0.0), (-2.0, 0.0))));
        }
        _ => {
            visit(&mut wps, 1, rng.gen_range(18.0..=28.0), end, rng);
        }
    }
    if wps.last().map(|w| w.0) != Some(end) {
        let last = wps.last().unwrap().1;
        wps.push((end, last));
    }
    trace_path(&wps, SYNTHETIC_LEN, 0.1, rng)
}

/// Five-class synthetic trajectories, `per_class` samples each.
pub fn generate_synthetic(per_class: usize, seed: u64) -> Result<Dataset, DatasetError> {
    generate_synthetic_counts(&[per_class; 5], seed)
}

pub fn generate_synthetic_counts(counts: &[usize], seed: u64) -> Result<Dataset, DatasetError> {
    let specs = synthetic_specs();
    let samples = generate(&specs, counts, seed, propose_synthetic)?;
    Ok(Dataset {
        classes: specs.iter().map(|s| s.name.clone()).collect(),
        samples,
        provenance: Provenance {
            generator: "synthetic".into(),
            seed: Some(seed),
            parameters: serde_json::json!({ "counts": counts, "len": SYNTHETIC_LEN }),
        },
    })
}

pub const MANIFEST: &str = "manifest.json";
const SIGNALS: &str = "signals.csv";
const LABELS: &str = "labels.csv";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema: String,
    signals: String,
    labels: String,
    classes: Vec<String>,
    dim: usize,
    samples: usize,
    provenance: Provenance,
}

const DATASET_SCHEMA: &str = "mstl-dataset/1";

/// Writes `signals.csv`, `labels.csv` and `manifest.json` into `dir`.
pub fn save_dataset(data: &Dataset, dir: impl AsRef<Path>) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let dim = data.dim().unwrap_or(0);

    let mut w = csv::Writer::from_path(dir.join(SIGNALS))?;
    let mut header = vec!["signal_id".to_string(), "time".to_string()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (id, s) in data.samples.iter().enumerate() {
        for (t, row) in s.signal.rows().enumerate() {
            let mut rec = vec![(id + 1).to_string(), (t + 1).to_string()];
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;

    let n_attr = data.samples.iter().find_map(|s| s.attributes.as_ref().map(Vec::len));
    let mut w = csv::Writer::from_path(dir.join(LABELS))?;
    let mut header = vec!["signal_id".to_string(), "class".to_string()];
    if let Some(n) = n_attr {
        header.extend((1..=n).map(|k| format!("a{k}")));
    }
    w.write_record(&header)?;
    for (id, s) in data.samples.iter().enumerate() {
        let mut rec = vec![(id + 1).to_string(), data.classes[s.class].clone()];
        if let Some(a) = &s.attributes {
            rec.extend(a.iter().map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;

    let manifest = Manifest {
        schema: DATASET_SCHEMA.into(),
        signals: SIGNALS.into(),
        labels: LABELS.into(),
        classes: data.classes.clone(),
        dim,
        samples: data.len(),
        provenance: data.provenance.clone(),
    };
    std::fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

/// Loads a dataset from a directory holding a manifest, or from a manifest
/// path.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let manifest_path = if path.is_dir() { path.join(MANIFEST) } else { path.to_path_buf() };
    let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    if manifest.schema != DATASET_SCHEMA {
        return Err(DatasetError::Malformed { path: manifest_path, msg: format!("unsupported schema '{}'", manifest.schema) });
    }
    let signals = read_signals(&dir.join(&manifest.signals), manifest.dim)?;
    let labels = read_labels(&dir.join(&manifest.labels))?;
    let class_of: HashMap<&str, usize> = manifest.classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut samples = Vec::with_capacity(signals.len());
    let mut by_id: HashMap<u64, (String, Option<Vec<i8>>)> = labels.into_iter().map(|(id, c, a)| (id, (c, a))).collect();
    for (id, signal) in signals {
        let (class, attributes) =
            by_id.remove(&id).ok_or_else(|| DatasetError::Inconsistent { id, msg: "no label".into() })?;
        let class = *class_of.get(class.as_str()).ok_or(DatasetError::UnknownClass(class))?;
        samples.push(Sample { signal, class, attributes });
    }
    if let Some(id) = by_id.keys().min() {
        return Err(DatasetError::Inconsistent { id: *id, msg: "label without signal".into() });
    }
    if samples.len() != manifest.samples {
        return Err(DatasetError::Malformed {
            path: manifest_path,
            msg: format!("manifest lists {} samples, files hold {}", manifest.samples, samples.len()),
        });
    }
    Ok(Dataset { classes: manifest.classes, samples, provenance: manifest.provenance })
}

fn read_signals(path: &Path, dim: usize) -> Result<Vec<(u64, Signal)>, DatasetError> {
    let malformed = |msg: String| DatasetError::Malformed { path: path.to_path_buf(), msg };
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let mut want = vec!["signal_id".to_string(), "time".to_string()];
    want.extend((1..=dim).map(|k| format!("x{k}")));
    if header.iter().collect::<Vec<_>>() != want.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(malformed(format!("expected header {}", want.join(","))));
    }
    let mut out: Vec<(u64, Signal)> = Vec::new();
    let mut cur: Option<(u64, Vec<f64>, u64)> = None;
    let finish = |cur: Option<(u64, Vec<f64>, u64)>, out: &mut Vec<(u64, Signal)>| -> Result<(), DatasetError> {
        if let Some((id, vals, _)) = cur {
            out.push((id, Signal::new(dim, vals)?));
        }
        Ok(())
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| malformed(format!("row {} is short", line + 2)));
        let id: u64 = field(0)?.trim().parse().map_err(|_| malformed(format!("row {}: bad signal_id", line + 2)))?;
        let time: u64 = field(1)?.trim().parse().map_err(|_| malformed(format!("row {}: bad time", line + 2)))?;
        let mut row = Vec::with_capacity(dim);
        for k in 0..dim {
            row.push(field(2 + k)?.trim().parse::<f64>().map_err(|_| malformed(format!("row {}: bad value", line + 2)))?);
        }
        match &mut cur {
            Some((cid, vals, last)) if *cid == id => {
                if time != *last + 1 {
                    return Err(DatasetError::NonContiguous { id, expected: *last + 1, found: time });
                }
                *last = time;
                vals.extend(row);
            }
            _ => {
                if let Some((cid, _, _)) = &cur {
                    if id < *cid || out.iter().any(|(o, _)| *o == id) {
                        return Err(DatasetError::Unsorted { id });
                    }
                }
                finish(cur.take(), &mut out)?;
                if time != 1 {
                    return Err(DatasetError::NonContiguous { id, expected: 1, found: time });
                }
                cur = Some((id, row, 1));
            }
        }
    }
    finish(cur, &mut out)?;
    Ok(out)
}

type LabelRow = (u64, String, Option<Vec<i8>>);

fn read_labels(path: &Path) -> Result<Vec<LabelRow>, DatasetError> {
    let malformed = |msg: String| DatasetError::Malformed { path: path.to_path_buf(), msg };
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("signal_id") || header.get(1) != Some("class") {
        return Err(malformed("expected header signal_id,class[,a1..an]".into()));
    }
    let n_attr = header.len() - 2;
    for (k, h) in header.iter().skip(2).enumerate() {
        if h != format!("a{}", k + 1) {
            return Err(malformed(format!("unexpected column '{h}'")));
        }
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let id: u64 = rec.get(0).unwrap_or("").trim().parse().map_err(|_| malformed(format!("row {}: bad signal_id", line + 2)))?;
        let class = rec.get(1).unwrap_or("").trim().to_string();
        let attrs = if n_attr > 0 {
            let a = (0..n_attr)
                .map(|k| match rec.get(2 + k).map(str::trim) {
                    Some("1") | Some("+1") => Ok(1),
                    Some("-1") => Ok(-1),
                    _ => Err(malformed(format!("row {}: attribute must be +1 or -1", line + 2))),
                })
                .collect::<Result<Vec<i8>, _>>()?;
            Some(a)
        } else {
            None
        };
        out.push((id, class, attrs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecoc::presets;

    #[test]
    fn naval_labels_are_sound() {
        let g = NavalGeometry::default();
        let d = generate_naval([20, 10, 10], 7, &g).unwrap();
        assert_eq!(d.class_counts(), vec![20, 10, 10]);
        let specs = g.class_specs();
        for s in &d.samples {
            for (j, spec) in specs.iter().enumerate() {
                assert_eq!(verify_sample(&s.signal, spec).unwrap().satisfied, j == s.class);
            }
            assert_eq!(s.signal.len(), 60);
        }
        let open_sea = Formula::always(0, 59, Formula::ge(0, 34.6));
        for s in d.samples.iter().filter(|s| s.class == 2) {
            assert!(crate::stl::satisfies(&open_sea, &s.signal).unwrap());
        }
    }

    #[test]
    fn synthetic_labels_are_sound() {
        let d = generate_synthetic(12, 3).unwrap();
        assert_eq!(d.class_counts(), vec![12; 5]);
        let phis = synthetic_phis();
        for s in &d.samples {
            for (k, phi) in phis.iter().enumerate() {
                let r = robustness(phi, &s.signal, 1).unwrap();
                assert_eq!(r > 0.0, SYNTHETIC_MEMBERSHIP[s.class][k], "class {} phi{}", s.class + 1, k + 1);
            }
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(generate_synthetic(4, 11).unwrap(), generate_synthetic(4, 11).unwrap());
        assert_ne!(generate_synthetic(4, 11).unwrap(), generate_synthetic(4, 12).unwrap());
        assert!(matches!(generate_synthetic(0, 1), Err(DatasetError::BadCounts)));
    }

    #[test]
    fn verify_diagnostics() {
        let specs = synthetic_specs();
        let origin = Signal::constant(&[0.0, 0.0], SYNTHETIC_LEN).unwrap();
        let phi1 = &synthetic_phis()[0];
        assert!(!crate::stl::satisfies(phi1, &origin).unwrap());
        let v = verify_sample(&origin, &specs[4]).unwrap();
        assert!(!v.satisfied);
        assert_eq!(v.conjuncts.len(), 4);
        assert_eq!(v.conjuncts[0].0, "phi2");
        // Sitting on the region boundary has zero robustness: violation.
        let edge = Signal::constant(&[3.0, 5.0], SYNTHETIC_LEN).unwrap();
        assert_eq!(robustness(phi1, &edge, 1).unwrap(), 0.0);
        assert!(!crate::stl::satisfies(phi1, &edge).unwrap());
    }

    #[test]
    fn box_robustness_is_min_of_half_planes() {
        let s = Signal::constant(&[3.5, 5.8], 1).unwrap();
        let b = region_box(0);
        let halves = [3.5 - 3.0, 5.0 - 3.5, 5.8 - 4.0, 6.0 - 5.8];
        assert_eq!(robustness(&b, &s, 1).unwrap(), halves.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = generate_synthetic(3, 5).unwrap();
        d.attach_attributes(&presets::synthetic_class()).unwrap();
        save_dataset(&d, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), d);
        assert_eq!(load_dataset(dir.path().join(MANIFEST)).unwrap(), d);
    }

    #[test]
    fn unknown_class_against_coding() {
        let d = generate_synthetic(1, 5).unwrap();
        assert!(matches!(d.labels_for(&presets::naval_a1()), Err(DatasetError::UnknownClass(_))));
    }

    #[test]
    fn missing_time_step_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_synthetic(1, 5).unwrap();
        save_dataset(&d, dir.path()).unwrap();
        let p = dir.path().join(SIGNALS);
        let text = std::fs::read_to_string(&p).unwrap();
        let pruned: Vec<&str> = text.lines().filter(|l| !l.starts_with("1,3,")).collect();
        std::fs::write(&p, pruned.join("\n") + "\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("non-contiguous time index"), "{err}");
    }

    #[test]
    fn label_not_in_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_synthetic(1, 5).unwrap();
        save_dataset(&d, dir.path()).unwrap();
        let p = dir.path().join(LABELS);
        let text = std::fs::read_to_string(&p).unwrap().replace("\n1,c1", "\n1,c9");
        std::fs::write(&p, text).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(DatasetError::UnknownClass(c)) if c == "c9"));
    }
}
