//! Mixing matrices: column-stochastic maps from clean classes to weak
//! observations, the per-setting templates, and structural classification.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::label_space::{check_k, display_order, subset_to_row, WeakLabel, WeakLabelSpace};

/// Absolute tolerance on every column sum.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Column sums off by at most this much are renormalized on construction.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-12;

/// A validated, non-negative, column-stochastic matrix of shape
/// `space.cardinality() x space.classes()`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    entries: DMatrix<f64>,
    space: WeakLabelSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseClass {
    Symmetric,
    Asymmetric,
}

/// Named weak supervision settings recognisable from a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    NoisyLabels,
    PartialLabels,
    Superset,
    SemiSupervised,
    PositiveUnlabelled,
    MultipleAnnotators,
    Unified,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::NoisyLabels => "NoisyLabels",
            Setting::PartialLabels => "PartialLabels",
            Setting::Superset => "Superset",
            Setting::SemiSupervised => "SemiSupervised",
            Setting::PositiveUnlabelled => "PositiveUnlabelled",
            Setting::MultipleAnnotators => "MultipleAnnotators",
            Setting::Unified => "Unified",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether weak row `row` may carry mass for clean class `class`.
/// `Err` holds the reason the cell must be zero.
pub(crate) fn admissible(
    space: &WeakLabelSpace,
    row: usize,
    class: usize,
) -> std::result::Result<(), String> {
    match space {
        WeakLabelSpace::Pu => match (row, class) {
            (1, _) => Err("the negative class is never observed".into()),
            (0, 1) => Err("negatives are always unlabelled".into()),
            _ => Ok(()),
        },
        WeakLabelSpace::PartialSet { m, .. } | WeakLabelSpace::SupersetSet { m, .. } => {
            let label = space.label_at(row).map_err(|e| e.to_string())?;
            let WeakLabel::Set(set) = label else {
                unreachable!("set spaces only hold sets")
            };
            if set.len() > *m {
                return Err(format!("{} candidates exceed m = {m}", set.len()));
            }
            if matches!(space, WeakLabelSpace::SupersetSet { .. }) && !set.contains(class) {
                return Err(format!("set {label} does not cover class {class}"));
            }
            Ok(())
        }
        WeakLabelSpace::Unified { m, .. } => {
            let label = space.label_at(row).map_err(|e| e.to_string())?;
            let WeakLabel::Tuple(items) = label else {
                unreachable!("unified spaces only hold tuples")
            };
            for item in &items {
                if let WeakLabel::Set(s) = item {
                    if s.len() > *m {
                        return Err(format!("{} candidates exceed m = {m}", s.len()));
                    }
                }
            }
            Ok(())
        }
        WeakLabelSpace::MultiAnnotator { inner, .. } => {
            let WeakLabel::Tuple(items) = space.label_at(row).map_err(|e| e.to_string())? else {
                unreachable!("annotator spaces only hold tuples")
            };
            for item in &items {
                let r = inner.row_of(item).map_err(|e| e.to_string())?;
                admissible(inner, r, class)?;
            }
            Ok(())
        }
        WeakLabelSpace::Multiclass { .. } | WeakLabelSpace::SemiSup { .. } => Ok(()),
    }
}

fn has_support_constraints(space: &WeakLabelSpace) -> bool {
    match space {
        WeakLabelSpace::Pu | WeakLabelSpace::SupersetSet { .. } => true,
        WeakLabelSpace::PartialSet { k, m } => *m < k - 1,
        WeakLabelSpace::Unified { k, m, .. } => *m < k - 1,
        WeakLabelSpace::MultiAnnotator { inner, .. } => has_support_constraints(inner),
        WeakLabelSpace::Multiclass { .. } | WeakLabelSpace::SemiSup { .. } => false,
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

impl MixingMatrix {
    /// Validates `entries` against `space`: shape, finiteness, non-negativity,
    /// column stochasticity (renormalizing round-off up to 1e-12), and the
    /// support constraints of superset, PU and bounded-candidate spaces.
    pub fn from_dense(entries: DMatrix<f64>, space: WeakLabelSpace) -> Result<Self> {
        space.validate()?;
        let rows = space.cardinality()?;
        let k = space.classes();
        if entries.nrows() != rows || entries.ncols() != k {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_cols: k,
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let mut entries = entries;
        for col in 0..k {
            for row in 0..rows {
                let v = entries[(row, col)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row, col, value: v });
                }
            }
        }

        let sums: Vec<f64> = (0..k)
            .map(|c| compensated_sum(entries.column(c).iter().copied()))
            .collect();
        let (worst, worst_dev) = sums
            .iter()
            .enumerate()
            .map(|(c, s)| (c, (s - 1.0).abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if worst_dev > STOCHASTIC_TOLERANCE {
            return Err(Error::NotStochastic {
                column: worst,
                sum: sums[worst],
                deviation: worst_dev,
            });
        }
        for (c, &s) in sums.iter().enumerate() {
            let dev = (s - 1.0).abs();
            if dev > 0.0 && dev <= RENORMALIZE_TOLERANCE {
                entries.column_mut(c).iter_mut().for_each(|v| *v /= s);
            }
        }

        if has_support_constraints(&space) {
            for col in 0..k {
                for row in 0..rows {
                    let value = entries[(row, col)];
                    if value != 0.0 {
                        if let Err(reason) = admissible(&space, row, col) {
                            return Err(Error::SupportViolation {
                                row,
                                col,
                                value,
                                reason,
                            });
                        }
                    }
                }
            }
        }
        Ok(MixingMatrix { entries, space })
    }

    /// Row-major constructor.
    pub fn from_rows(rows: &[Vec<f64>], space: WeakLabelSpace) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::ShapeMismatch {
                expected_rows: rows.len(),
                expected_cols: ncols,
                rows: rows.len(),
                cols: bad.len(),
            });
        }
        let entries = DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]);
        Self::from_dense(entries, space)
    }

    pub fn identity(k: usize) -> Result<Self> {
        let space = WeakLabelSpace::multiclass(k)?;
        Self::from_dense(DMatrix::identity(k, k), space)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn space(&self) -> &WeakLabelSpace {
        &self.space
    }

    /// Number of clean classes (columns).
    pub fn classes(&self) -> usize {
        self.entries.ncols()
    }

    /// Number of weak outcomes (rows).
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// Probability of observing `label` given clean class `class`.
    pub fn probability(&self, label: &WeakLabel, class: usize) -> Result<f64> {
        Ok(self.entries[(self.space.row_of(label)?, class)])
    }

    pub fn column(&self, class: usize) -> Vec<f64> {
        self.entries.column(class).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|r| self.entries.row(r).iter().copied().collect())
            .collect()
    }

    /// Row labels in canonical order.
    pub fn row_labels(&self) -> Result<Vec<WeakLabel>> {
        self.space.labels()
    }

    /// Plain-text table. Set-valued spaces list rows as bit strings in the
    /// customary display order (`001, 010, 100, 110, ...`); everything else
    /// uses canonical order.
    pub fn render_table(&self) -> String {
        let k = self.classes();
        let mut lines: Vec<(String, usize)> = Vec::new();
        match &self.space {
            WeakLabelSpace::PartialSet { .. } | WeakLabelSpace::SupersetSet { .. } => {
                for set in display_order(k).expect("validated space") {
                    let row = subset_to_row(set, k).expect("proper subset");
                    lines.push((set.bitstring(k), row));
                }
            }
            _ => {
                for (row, label) in self.space.labels().expect("validated space").iter().enumerate() {
                    let name = match label {
                        WeakLabel::Abstain => "na".to_string(),
                        other => other.to_string(),
                    };
                    lines.push((name, row));
                }
            }
        }
        let width = lines.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!("{:width$}", ""));
        for c in 0..k {
            out.push_str(&format!(" {:>10}", c));
        }
        out.push('\n');
        for (name, row) in lines {
            out.push_str(&format!("{name:width$}"));
            for c in 0..k {
                out.push_str(&format!(" {:>10.6}", self.entries[(row, c)]));
            }
            out.push('\n');
        }
        out
    }
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: name.into(),
            value,
        })
    }
}

/// Binary flipping noise: `[[1-g0, g1], [g0, 1-g1]]`.
pub fn template_flip_binary(gamma0: f64, gamma1: f64) -> Result<MixingMatrix> {
    check_probability("gamma0", gamma0)?;
    check_probability("gamma1", gamma1)?;
    MixingMatrix::from_rows(
        &[vec![1.0 - gamma0, gamma1], vec![gamma0, 1.0 - gamma1]],
        WeakLabelSpace::multiclass(2)?,
    )
}

/// Uniform flipping noise over `k` classes: `1 - rho` on the diagonal and
/// `rho / (k - 1)` everywhere else.
pub fn template_flip_symmetric(k: usize, rho: f64) -> Result<MixingMatrix> {
    check_k(k)?;
    check_probability("rho", rho)?;
    let off = rho / (k - 1) as f64;
    let entries = DMatrix::from_fn(k, k, |r, c| if r == c { 1.0 - rho } else { off });
    MixingMatrix::from_dense(entries, WeakLabelSpace::multiclass(k)?)
}

/// Semi-supervised matrix: class `i` is kept with probability `1 - gammas[i]`
/// and replaced by the abstention otherwise.
pub fn template_ssl(k: usize, gammas: &[f64]) -> Result<MixingMatrix> {
    check_k(k)?;
    if gammas.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: gammas.len(),
        });
    }
    for (i, &g) in gammas.iter().enumerate() {
        check_probability(&format!("gamma{i}"), g)?;
    }
    let entries = DMatrix::from_fn(k + 1, k, |r, c| {
        if r == c {
            1.0 - gammas[c]
        } else if r == k {
            gammas[c]
        } else {
            0.0
        }
    });
    MixingMatrix::from_dense(entries, WeakLabelSpace::semi_supervised(k)?)
}

/// Positive-unlabelled: the binary semi-supervised matrix with `gamma1 = 1`.
/// Class 0 is the positive class.
pub fn template_pu(gamma0: f64) -> Result<MixingMatrix> {
    let ssl = template_ssl(2, &[gamma0, 1.0])?;
    MixingMatrix::from_dense(ssl.entries, WeakLabelSpace::Pu)
}

/// Superset labels: column `i` puts `p_exact` on `{i}` and spreads the rest
/// evenly over the other proper subsets that contain `i`.
pub fn template_superset_uniform(k: usize, p_exact: f64) -> Result<MixingMatrix> {
    check_k(k)?;
    check_probability("p_exact", p_exact)?;
    if p_exact == 0.0 {
        return Err(Error::OutOfRange {
            name: "p_exact".into(),
            value: p_exact,
        });
    }
    if k == 2 && p_exact < 1.0 {
        return Err(Error::Degenerate(
            "with 2 classes the singleton is the only proper covering set, so p_exact must be 1"
                .into(),
        ));
    }
    let space = WeakLabelSpace::superset(k, None)?;
    let rows = space.cardinality()?;
    // proper subsets containing a given class
    let covering = (1usize << (k - 1)) - 1;
    let rest = if covering > 1 {
        (1.0 - p_exact) / (covering - 1) as f64
    } else {
        0.0
    };
    let entries = DMatrix::from_fn(rows, k, |r, c| {
        let mask = r as u64 + 1;
        if mask == 1 << c {
            p_exact
        } else if mask & (1 << c) != 0 {
            rest
        } else {
            0.0
        }
    });
    MixingMatrix::from_dense(entries, space)
}

/// Symmetric when, for every clean class, all incorrect outcomes are equally
/// likely (pairwise within `tol`). With two classes each column has a single
/// off-diagonal entry, so the two flip rates are compared instead.
pub fn classify_noise(t: &MixingMatrix, tol: f64) -> Result<NoiseClass> {
    let WeakLabelSpace::Multiclass { k } = *t.space() else {
        return Err(Error::NotSquare);
    };
    let symmetric = if k == 2 {
        (t.get(1, 0) - t.get(0, 1)).abs() <= tol
    } else {
        (0..k).all(|i| {
            let (lo, hi) = (0..k)
                .filter(|&u| u != i)
                .map(|u| t.get(u, i))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            hi - lo <= tol
        })
    };
    Ok(if symmetric {
        NoiseClass::Symmetric
    } else {
        NoiseClass::Asymmetric
    })
}

fn is_pu_pattern(t: &MixingMatrix) -> bool {
    let e = t.entries();
    e.nrows() == 3
        && e.ncols() == 2
        && e[(1, 0)] == 0.0
        && e[(1, 1)] == 0.0
        && e[(0, 1)] == 0.0
        && (e[(2, 1)] - 1.0).abs() <= STOCHASTIC_TOLERANCE
}

fn covers_true_class(t: &MixingMatrix) -> bool {
    let k = t.classes();
    (0..t.rows()).all(|r| {
        let mask = r as u64 + 1;
        (0..k).all(|c| mask & (1 << c) != 0 || t.get(r, c) == 0.0)
    })
}

/// Most specific named setting consistent with the space and zero pattern.
pub fn recognize_setting(t: &MixingMatrix) -> Setting {
    match t.space() {
        WeakLabelSpace::Multiclass { .. } => Setting::NoisyLabels,
        WeakLabelSpace::Pu => Setting::PositiveUnlabelled,
        WeakLabelSpace::SemiSup { k: 2 } if is_pu_pattern(t) => Setting::PositiveUnlabelled,
        WeakLabelSpace::SemiSup { .. } => Setting::SemiSupervised,
        WeakLabelSpace::SupersetSet { .. } => Setting::Superset,
        WeakLabelSpace::PartialSet { .. } if covers_true_class(t) => Setting::Superset,
        WeakLabelSpace::PartialSet { .. } => Setting::PartialLabels,
        WeakLabelSpace::MultiAnnotator { .. } => Setting::MultipleAnnotators,
        WeakLabelSpace::Unified { .. } => Setting::Unified,
    }
}

/// Per-annotator matrices sharing one weak space.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorPool {
    matrices: Vec<MixingMatrix>,
}

impl AnnotatorPool {
    pub fn new(matrices: Vec<MixingMatrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidSpace("an annotator pool needs at least one matrix".into()))?;
        for m in &matrices[1..] {
            if m.space() != first.space() {
                return Err(Error::SpaceMismatch(format!(
                    "{} vs {}",
                    first.space(),
                    m.space()
                )));
            }
        }
        Ok(AnnotatorPool { matrices })
    }

    pub fn matrices(&self) -> &[MixingMatrix] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn space(&self) -> &WeakLabelSpace {
        self.matrices[0].space()
    }

    pub fn classes(&self) -> usize {
        self.matrices[0].classes()
    }

    /// Space of the emitted annotator tuples.
    pub fn tuple_space(&self) -> Result<WeakLabelSpace> {
        WeakLabelSpace::multi_annotator(self.len(), self.space().clone())
    }
}
