//! Multi-class margins, the margin-based hinge losses, and decoding.
//!
//! `T` below is either an attribute coding matrix (attribute mode, outputs
//! are attribute vectors) or the one-hot class table (class mode, outputs
//! are class vectors).

use crate::diffgraph::{GraphError, Tape, Var};
use crate::ecoc::CodingMatrix;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("output vector has {found} entries, table has {expected} columns")]
    Shape { expected: usize, found: usize },
    #[error("label {label} outside the table's {rows} rows")]
    Label { label: usize, rows: usize },
    #[error("{outputs} outputs but {labels} labels")]
    BatchMismatch { outputs: usize, labels: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which robustness vector is trained against which table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Attribute vectors against the coding matrix.
    #[default]
    Attribute,
    /// Class vectors against the one-hot class table.
    Class,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "attribute" => Ok(Mode::Attribute),
            "class" => Ok(Mode::Class),
            _ => Err(format!("unknown mode '{s}' (expected attribute|class)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Decode {
    Hamming,
    #[default]
    Loss,
}

impl FromStr for Decode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hamming" => Ok(Decode::Hamming),
            "loss" => Ok(Decode::Loss),
            _ => Err(format!("unknown decoder '{s}' (expected hamming|loss)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the margin reward.
    pub delta: f64,
    /// When false the margins are dropped: hinge at zero, no reward term.
    pub margin: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { delta: 0.05, margin: true }
    }
}

/// Per-coordinate margins with the batch index each one came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginVector {
    pub values: Vec<f64>,
    pub argmin: Vec<usize>,
}

fn check_batch<R: AsRef<[f64]>>(outputs: &[R], labels: &[usize], table: &CodingMatrix) -> Result<(), LossError> {
    if outputs.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    if outputs.len() != labels.len() {
        return Err(LossError::BatchMismatch { outputs: outputs.len(), labels: labels.len() });
    }
    for (r, &y) in outputs.iter().zip(labels) {
        if r.as_ref().len() != table.n_attributes() {
            return Err(LossError::Shape { expected: table.n_attributes(), found: r.as_ref().len() });
        }
        if y >= table.n_classes() {
            return Err(LossError::Label { label: y, rows: table.n_classes() });
        }
    }
    Ok(())
}

/// `m_k = min_i ReLU(T(y_i, k) r_k(s_i))`; ties go to the lowest index.
///
/// Serves both the attribute margin (with `E`) and the class margin (with
/// the class table `C`).
pub fn margins<R: AsRef<[f64]>>(outputs: &[R], labels: &[usize], table: &CodingMatrix) -> Result<MarginVector, LossError> {
    check_batch(outputs, labels, table)?;
    let n = table.n_attributes();
    let mut values = vec![f64::INFINITY; n];
    let mut argmin = vec![0; n];
    for (i, (r, &y)) in outputs.iter().zip(labels).enumerate() {
        for k in 0..n {
            let v = (table.get(y, k) as f64 * r.as_ref()[k]).max(0.0);
            if v < values[k] {
                values[k] = v;
                argmin[k] = i;
            }
        }
    }
    Ok(MarginVector { values, argmin })
}

pub fn margin_attribute<R: AsRef<[f64]>>(outputs: &[R], labels: &[usize], e: &CodingMatrix) -> Result<MarginVector, LossError> {
    margins(outputs, labels, e)
}

pub fn margin_class<R: AsRef<[f64]>>(outputs: &[R], labels: &[usize], c: &CodingMatrix) -> Result<MarginVector, LossError> {
    margins(outputs, labels, c)
}

/// Batch loss on the tape:
/// `sum_k sum_i ReLU(m_k - T(y_i,k) r_ik) - delta m_k`.
///
/// The margin reward sits inside the sum over samples, so it contributes
/// `-N delta sum_k m_k`. Each margin is a routed minimum, so its gradient
/// reaches only the sample that attains it. With `margin` off the loss is
/// `sum_k sum_i ReLU(-T(y_i,k) r_ik)`.
pub fn loss(
    tape: &mut Tape,
    outputs: &[Vec<Var>],
    labels: &[usize],
    table: &CodingMatrix,
    config: &LossConfig,
) -> Result<Var, LossError> {
    if outputs.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    if outputs.len() != labels.len() {
        return Err(LossError::BatchMismatch { outputs: outputs.len(), labels: labels.len() });
    }
    for (r, &y) in outputs.iter().zip(labels) {
        if r.len() != table.n_attributes() {
            return Err(LossError::Shape { expected: table.n_attributes(), found: r.len() });
        }
        if y >= table.n_classes() {
            return Err(LossError::Label { label: y, rows: table.n_classes() });
        }
    }
    let n_batch = outputs.len() as f64;
    let mut terms = Vec::with_capacity(table.n_attributes() * (outputs.len() + 1));
    for k in 0..table.n_attributes() {
        let signed: Vec<Var> = outputs
            .iter()
            .zip(labels)
            .map(|(r, &y)| tape.scale(r[k], table.get(y, k) as f64))
            .collect();
        if config.margin {
            let low = tape.min_routed(&signed)?;
            let m = tape.relu(low);
            for &s in &signed {
                let d = tape.sub(m, s);
                terms.push(tape.relu(d));
            }
            terms.push(tape.scale(m, -config.delta * n_batch));
        } else {
            for &s in &signed {
                let d = tape.neg(s);
                terms.push(tape.relu(d));
            }
        }
    }
    Ok(tape.sum(&terms))
}

/// Attribute-mode loss against the coding matrix.
pub fn loss_attribute(
    tape: &mut Tape,
    outputs: &[Vec<Var>],
    labels: &[usize],
    e: &CodingMatrix,
    config: &LossConfig,
) -> Result<Var, LossError> {
    loss(tape, outputs, labels, e, config)
}

/// Class-mode loss against the one-hot class table.
pub fn loss_class(
    tape: &mut Tape,
    outputs: &[Vec<Var>],
    labels: &[usize],
    c: &CodingMatrix,
    config: &LossConfig,
) -> Result<Var, LossError> {
    loss(tape, outputs, labels, c, config)
}

/// `sum_k (1 - sign(T(j,k) r_k))` with `sign(0) = -1`.
pub fn hamming_distance(r: &[f64], row: &[i8]) -> f64 {
    r.iter()
        .zip(row)
        .map(|(&v, &t)| {
            let p = t as f64 * v;
            if p > 0.0 {
                0.0
            } else {
                2.0
            }
        })
        .sum()
}

/// `sum_k ReLU(-T(j,k) r_k)`.
pub fn loss_distance(r: &[f64], row: &[i8]) -> f64 {
    r.iter().zip(row).map(|(&v, &t)| (-(t as f64) * v).max(0.0)).sum()
}

fn argmin_row(r: &[f64], table: &CodingMatrix, dist: fn(&[f64], &[i8]) -> f64) -> Result<usize, LossError> {
    if r.len() != table.n_attributes() {
        return Err(LossError::Shape { expected: table.n_attributes(), found: r.len() });
    }
    let mut best = (0, f64::INFINITY);
    for j in 0..table.n_classes() {
        let d = dist(r, table.row(j));
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(best.0)
}

/// Nearest row by Hamming distance; ties go to the lowest class index.
pub fn decode_hamming(r: &[f64], table: &CodingMatrix) -> Result<usize, LossError> {
    argmin_row(r, table, hamming_distance)
}

/// Nearest row by loss-based distance; ties go to the lowest class index.
pub fn decode_loss_based(r: &[f64], table: &CodingMatrix) -> Result<usize, LossError> {
    argmin_row(r, table, loss_distance)
}

pub fn decode(r: &[f64], table: &CodingMatrix, rule: Decode) -> Result<usize, LossError> {
    match rule {
        Decode::Hamming => decode_hamming(r, table),
        Decode::Loss => decode_loss_based(r, table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecoc::{one_hot_class_table, presets};

    fn single_bit(signed: &[f64]) -> (Vec<Vec<f64>>, Vec<usize>, CodingMatrix) {
        // One attribute, class 0 codes +1, so signed values pass through.
        let e = CodingMatrix::from_signs(&["pos", "neg"], &["f"], &["+", "-"]).unwrap();
        (signed.iter().map(|&v| vec![v]).collect(), vec![0; signed.len()], e)
    }

    #[test]
    fn margin_is_min_of_positives() {
        let (r, y, e) = single_bit(&[0.5, 1.2, 0.3]);
        let m = margin_attribute(&r, &y, &e).unwrap();
        assert_eq!(m.values, vec![0.3]);
        assert_eq!(m.argmin, vec![2]);
        let (r, y, e) = single_bit(&[0.5, -0.2]);
        assert_eq!(margin_attribute(&r, &y, &e).unwrap().values, vec![0.0]);
        assert!(matches!(margin_attribute::<Vec<f64>>(&[], &[], &e), Err(LossError::EmptyBatch)));
    }

    #[test]
    fn class_margin_single_sample() {
        let c = one_hot_class_table(2).unwrap();
        let m = margin_class(&[vec![0.7, -0.4]], &[0], &c).unwrap();
        assert_eq!(m.values, vec![0.7, 0.4]);
        let m = margin_class(&[vec![0.7, -0.4], vec![0.1, 0.2]], &[0, 0], &c).unwrap();
        assert_eq!(m.values, vec![0.1, 0.0]);
    }

    #[test]
    fn two_sided_margin_is_min_over_sides() {
        // Points on both sides of the axis for psi_1: positives belong to
        // class 0, negatives to the others.
        let c = one_hot_class_table(3).unwrap();
        let r = vec![vec![0.9, -1.0, -1.0], vec![0.6, -1.0, -1.0], vec![-0.4, 1.0, -1.0], vec![-0.8, -1.0, 1.0]];
        let m = margin_class(&r, &[0, 0, 1, 2], &c).unwrap();
        let m_p: f64 = 0.6;
        let m_n: f64 = 0.4;
        assert_eq!(m.values[0], m_p.min(m_n));
    }

    fn loss_value(signed: &[f64], delta: f64, margin: bool) -> (f64, Vec<f64>) {
        let (r, y, e) = single_bit(signed);
        let mut tape = Tape::new();
        let vars: Vec<Vec<Var>> = r.iter().map(|v| vec![tape.leaf(v[0])]).collect();
        let l = loss_attribute(&mut tape, &vars, &y, &e, &LossConfig { delta, margin }).unwrap();
        let g = tape.backward(l).unwrap();
        (tape.value(l), vars.iter().map(|v| g[v[0]]).collect())
    }

    #[test]
    fn separated_batch_closed_form() {
        let v = 0.8;
        let delta = 0.05;
        let (l, _) = loss_value(&[v, v, v, v], delta, true);
        // n = 1 attribute, N = 4 samples.
        assert!((l - (-delta * 4.0 * 1.0 * v)).abs() < 1e-12);
        let (l, _) = loss_value(&[v, v], 1e-12, true);
        assert!(l.abs() < 1e-9);
    }

    #[test]
    fn misclassified_sample_hinge() {
        let (l, g) = loss_value(&[0.5, -0.3, 1.0], 0.1, true);
        // Margin clamps to zero; only the violating sample contributes.
        assert!((l - 0.3).abs() < 1e-12);
        assert_eq!(g, vec![0.0, -1.0, 0.0]);
    }

    #[test]
    fn margin_gradient_reaches_only_argmin() {
        let (_, g) = loss_value(&[0.5, 0.2, 1.0], 0.1, true);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2], 0.0);
        assert!((g[1] - (-0.1 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn no_margin_is_summed_loss_distance() {
        let signed = [0.5, -0.3, 1.0, -2.0];
        let (l, _) = loss_value(&signed, 0.1, false);
        let e = CodingMatrix::from_signs(&["pos", "neg"], &["f"], &["+", "-"]).unwrap();
        let want: f64 = signed.iter().map(|&v| loss_distance(&[v], e.row(0))).sum();
        assert_eq!(l, want);
    }

    #[test]
    fn hamming_examples() {
        let e = presets::example4();
        assert_eq!(decode_hamming(&[-0.2, 0.5, -0.1], &e).unwrap(), 0);
        assert_eq!(hamming_distance(&[-0.2, 0.5, -0.1], e.row(0)), 0.0);
        // All-positive output: distances 4, 4, 4, 2.
        let d: Vec<f64> = (0..4).map(|j| hamming_distance(&[1.0, 1.0, 1.0], e.row(j))).collect();
        assert_eq!(d, vec![4.0, 4.0, 4.0, 2.0]);
        assert_eq!(decode_hamming(&[1.0, 1.0, 1.0], &e).unwrap(), 3);
        // Zero counts as a violated bit.
        assert_eq!(hamming_distance(&[0.0], &[1]), 2.0);
        assert_eq!(hamming_distance(&[0.0], &[-1]), 2.0);
    }

    #[test]
    fn loss_based_examples() {
        let c = one_hot_class_table(4).unwrap();
        assert_eq!(decode_loss_based(&[-0.3, -1.0, 0.2, -0.1], &c).unwrap(), 2);
        assert_eq!(decode_loss_based(&[0.0, 0.0, 0.0, 0.0], &c).unwrap(), 0);
        // Magnitude matters for loss-based decoding but not for Hamming.
        let e = presets::example4();
        let r = [-0.1, 5.0, -0.1];
        let dl: Vec<f64> = (0..4).map(|j| loss_distance(&r, e.row(j))).collect();
        let dh: Vec<f64> = (0..4).map(|j| hamming_distance(&r, e.row(j))).collect();
        assert_eq!(dh, vec![0.0, 4.0, 4.0, 2.0]);
        assert!((dl[0] - 0.0).abs() < 1e-12);
        assert!((dl[1] - 5.1).abs() < 1e-12);
        assert!((dl[2] - 5.1).abs() < 1e-12);
        assert!((dl[3] - 0.1).abs() < 1e-12);
        assert!(decode_loss_based(&[1.0], &c).is_err());
    }

    #[test]
    fn parse_flags() {
        assert_eq!("hamming".parse::<Decode>().unwrap(), Decode::Hamming);
        assert_eq!("class".parse::<Mode>().unwrap(), Mode::Class);
        assert!("soft".parse::<Decode>().is_err());
    }
}
