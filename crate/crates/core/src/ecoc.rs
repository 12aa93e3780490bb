//! Error-correcting output codes: coding matrices, the one-hot class table
//! and class-decoder formulae.

use crate::stl::Formula;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EcocError {
    #[error("duplicate codeword: classes {first} and {second} share the same row")]
    DuplicateCodeword { first: String, second: String },
    #[error("entry ({row}, {col}) is {value}; coding entries must be +1 or -1")]
    BadEntry { row: usize, col: usize, value: i64 },
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("coding matrix has {found} class names for {rows} rows")]
    ClassNames { rows: usize, found: usize },
    #[error("coding matrix has {found} attribute names for {cols} columns")]
    AttributeNames { cols: usize, found: usize },
    #[error("coding matrix needs at least one row and one column")]
    Empty,
    #[error("class table needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("codeword has {codeword} bits but {formulae} formulae were given")]
    LengthMismatch { codeword: usize, formulae: usize },
    #[error("coding matrices disagree on columns: {0}")]
    ColumnMismatch(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed coding matrix file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A `c x n` matrix of +1/-1 codewords, one row per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodingFile", into = "CodingFile")]
pub struct CodingMatrix {
    classes: Vec<String>,
    attributes: Vec<String>,
    entries: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct CodingFile {
    classes: Vec<String>,
    attributes: Vec<String>,
    matrix: Vec<Vec<i64>>,
}

impl TryFrom<CodingFile> for CodingMatrix {
    type Error = EcocError;
    fn try_from(f: CodingFile) -> Result<Self, EcocError> {
        CodingMatrix::from_rows(f.classes, f.attributes, &f.matrix)
    }
}

impl From<CodingMatrix> for CodingFile {
    fn from(m: CodingMatrix) -> Self {
        let matrix = (0..m.n_classes())
            .map(|j| m.row(j).iter().map(|&v| v as i64).collect())
            .collect();
        CodingFile { classes: m.classes, attributes: m.attributes, matrix }
    }
}

impl CodingMatrix {
    /// Builds and checks entries and shape. Duplicate rows are accepted
    /// here and reported by [`validate_coding_matrix`].
    pub fn from_rows<R: AsRef<[i64]>>(
        classes: Vec<String>,
        attributes: Vec<String>,
        rows: &[R],
    ) -> Result<Self, EcocError> {
        let c = rows.len();
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if c == 0 || n == 0 {
            return Err(EcocError::Empty);
        }
        if classes.len() != c {
            return Err(EcocError::ClassNames { rows: c, found: classes.len() });
        }
        if attributes.len() != n {
            return Err(EcocError::AttributeNames { cols: n, found: attributes.len() });
        }
        let mut entries = Vec::with_capacity(c * n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(EcocError::Ragged { row: i, found: r.len(), expected: n });
            }
            for (k, &v) in r.iter().enumerate() {
                if v != 1 && v != -1 {
                    return Err(EcocError::BadEntry { row: i, col: k, value: v });
                }
                entries.push(v as i8);
            }
        }
        Ok(Self { classes, attributes, entries })
    }

    /// Rows given as strings of `+`/`-`, e.g. `["-+-", "--+"]`.
    pub fn from_signs(classes: &[&str], attributes: &[&str], rows: &[&str]) -> Result<Self, EcocError> {
        let parsed: Vec<Vec<i64>> = rows
            .iter()
            .map(|r| r.chars().map(|ch| if ch == '+' { 1 } else if ch == '-' { -1 } else { 0 }).collect())
            .collect();
        Self::from_rows(
            classes.iter().map(|s| s.to_string()).collect(),
            attributes.iter().map(|s| s.to_string()).collect(),
            &parsed,
        )
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn get(&self, class: usize, attr: usize) -> i8 {
        self.entries[class * self.n_attributes() + attr]
    }

    pub fn row(&self, class: usize) -> &[i8] {
        let n = self.n_attributes();
        &self.entries[class * n..(class + 1) * n]
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Rows of `other` appended below this matrix; columns must agree.
    pub fn stack(&self, other: &CodingMatrix) -> Result<CodingMatrix, EcocError> {
        if self.n_attributes() != other.n_attributes() {
            return Err(EcocError::ColumnMismatch(format!(
                "{} vs {} columns",
                self.n_attributes(),
                other.n_attributes()
            )));
        }
        let mut m = self.clone();
        m.classes.extend(other.classes.iter().cloned());
        m.entries.extend_from_slice(&other.entries);
        Ok(m)
    }

    /// Minimum pairwise Hamming distance between rows (`None` with one row).
    pub fn min_row_distance(&self) -> Option<usize> {
        let c = self.n_classes();
        let mut best: Option<usize> = None;
        for a in 0..c {
            for b in a + 1..c {
                let d = self.row(a).iter().zip(self.row(b)).filter(|(x, y)| x != y).count();
                best = Some(best.map_or(d, |m| m.min(d)));
            }
        }
        best
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EcocError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EcocError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Square table with `C(i, j) = +1` iff `i == j`.
pub fn one_hot_class_table(c: usize) -> Result<CodingMatrix, EcocError> {
    one_hot_named(&(1..=c).map(|i| format!("class{i}")).collect::<Vec<_>>())
}

/// One-hot table over the given class names; attribute `k` reads "is class k".
pub fn one_hot_named<S: AsRef<str>>(classes: &[S]) -> Result<CodingMatrix, EcocError> {
    let c = classes.len();
    if c < 2 {
        return Err(EcocError::TooFewClasses(c));
    }
    let rows: Vec<Vec<i64>> = (0..c)
        .map(|i| (0..c).map(|j| if i == j { 1 } else { -1 }).collect())
        .collect();
    CodingMatrix::from_rows(
        classes.iter().map(|s| s.as_ref().to_string()).collect(),
        (1..=c).map(|k| format!("f{k}")).collect(),
        &rows,
    )
}

/// Usable non-trivial columns for a `c`-class code: `2^(c-1) - 1`.
pub fn max_usable_columns(c: usize) -> u64 {
    assert!(c >= 2, "max_usable_columns needs c >= 2");
    (1u64 << (c - 1)) - 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    ConstantColumn { col: usize },
    ComplementaryColumns { a: usize, b: usize },
    ExceedsUsableColumns { n: usize, bound: u64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::ConstantColumn { col } => write!(f, "constant column {col}"),
            Warning::ComplementaryColumns { a, b } => write!(f, "columns {a} and {b} are complementary"),
            Warning::ExceedsUsableColumns { n, bound } => {
                write!(f, "{n} columns exceed the {bound} usable columns for this class count")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub warnings: Vec<Warning>,
    pub usable_bound: Option<u64>,
    pub min_row_distance: Option<usize>,
}

/// Structural check of a coding matrix. Duplicate rows are errors; constant
/// and complementary columns and exceeding `2^(c-1) - 1` columns are
/// warnings.
pub fn validate_coding_matrix(e: &CodingMatrix) -> Result<ValidationReport, EcocError> {
    let (c, n) = (e.n_classes(), e.n_attributes());
    let mut seen: HashMap<&[i8], usize> = HashMap::new();
    for j in 0..c {
        if let Some(&first) = seen.get(e.row(j)) {
            return Err(EcocError::DuplicateCodeword {
                first: e.classes[first].clone(),
                second: e.classes[j].clone(),
            });
        }
        seen.insert(e.row(j), j);
    }
    let column = |k: usize| (0..c).map(|j| e.get(j, k)).collect::<Vec<_>>();
    let mut warnings = Vec::new();
    for k in 0..n {
        let col = column(k);
        if col.iter().all(|&v| v == col[0]) {
            warnings.push(Warning::ConstantColumn { col: k });
        }
    }
    for a in 0..n {
        let ca = column(a);
        for b in a + 1..n {
            if ca.iter().zip(column(b)).all(|(x, y)| *x == -y) {
                warnings.push(Warning::ComplementaryColumns { a, b });
            }
        }
    }
    let usable_bound = (c >= 2).then(|| max_usable_columns(c));
    if let Some(bound) = usable_bound {
        if n as u64 > bound {
            warnings.push(Warning::ExceedsUsableColumns { n, bound });
        }
    }
    Ok(ValidationReport { warnings, usable_bound, min_row_distance: e.min_row_distance() })
}

/// Class decoder: conjunction of `phi_k` for `+1` bits and `!phi_k` for
/// `-1` bits. Its robustness is `min_k E(j,k) r(s, phi_k)`.
pub fn build_class_decoder(codeword: &[i8], phis: &[Formula]) -> Result<Formula, EcocError> {
    if codeword.len() != phis.len() || phis.is_empty() {
        return Err(EcocError::LengthMismatch { codeword: codeword.len(), formulae: phis.len() });
    }
    let parts = codeword
        .iter()
        .zip(phis)
        .map(|(&bit, phi)| if bit > 0 { phi.clone() } else { Formula::not(phi.clone()) })
        .collect();
    Ok(Formula::and(parts))
}

/// Coding matrices used in the experiments.
pub mod presets {
    use super::*;

    pub const NAMES: &[&str] = &[
        "example4", "naval-class", "naval-a1", "naval-a2", "naval-a3", "synthetic-class", "zeroshot-obs",
        "zeroshot-pred",
    ];

    const NAVAL: [&str; 3] = ["class1", "class2", "class3"];

    /// 3-bit code for a 4-class problem.
    pub fn example4() -> CodingMatrix {
        CodingMatrix::from_signs(&["class1", "class2", "class3", "class4"], &["f1", "f2", "f3"], &["-+-", "--+", "+--", "-++"])
            .unwrap()
    }

    /// One column per naval class.
    pub fn naval_class() -> CodingMatrix {
        CodingMatrix::from_signs(&NAVAL, &["f1", "f2", "f3"], &["+--", "-+-", "--+"]).unwrap()
    }

    /// Attributes "reach harbor", "reach island".
    pub fn naval_a1() -> CodingMatrix {
        CodingMatrix::from_signs(&NAVAL, &["reach_harbor", "reach_island"], &["+-", "++", "--"]).unwrap()
    }

    /// Attributes "reach harbor", "reach harbor and not reach island".
    pub fn naval_a2() -> CodingMatrix {
        CodingMatrix::from_signs(&NAVAL, &["reach_harbor", "harbor_not_island"], &["++", "+-", "--"]).unwrap()
    }

    /// Attributes "not reach island", "not reach island and reach harbor".
    pub fn naval_a3() -> CodingMatrix {
        CodingMatrix::from_signs(&NAVAL, &["not_island", "not_island_harbor"], &["++", "--", "+-"]).unwrap()
    }

    pub fn synthetic_class() -> CodingMatrix {
        one_hot_named(&["c1", "c2", "c3", "c4", "c5"]).unwrap()
    }

    /// Observed classes c1..c4 over attributes f1..f4.
    pub fn zeroshot_obs() -> CodingMatrix {
        CodingMatrix::from_signs(&["c1", "c2", "c3", "c4"], &["f1", "f2", "f3", "f4"], &["++--", "+-+-", "-++-", "---+"])
            .unwrap()
    }

    /// Unobserved class c5.
    pub fn zeroshot_pred() -> CodingMatrix {
        CodingMatrix::from_signs(&["c5"], &["f1", "f2", "f3", "f4"], &["-+--"]).unwrap()
    }

    pub fn by_name(name: &str) -> Result<CodingMatrix, EcocError> {
        Ok(match name {
            "example4" => example4(),
            "naval-class" => naval_class(),
            "naval-a1" => naval_a1(),
            "naval-a2" => naval_a2(),
            "naval-a3" => naval_a3(),
            "synthetic-class" => synthetic_class(),
            "zeroshot-obs" => zeroshot_obs(),
            "zeroshot-pred" => zeroshot_pred(),
            other => return Err(EcocError::UnknownPreset(other.to_string())),
        })
    }
}
