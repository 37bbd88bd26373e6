//! Mixing-matrix estimation from paired data, posterior recovery, left-inverse
//! reconstruction and the PU to LLP reduction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::label_space::{CleanLabel, WeakLabel, WeakLabelSpace};
use crate::mixing::{admissible, compensated_sum, MixingMatrix, STOCHASTIC_TOLERANCE};

/// Relative singular-value cutoff for the numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrior {
    probabilities: Vec<f64>,
}

impl ClassPrior {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        crate::label_space::check_k(probabilities.len())?;
        if let Some((i, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidPrior(format!("entry {i} = {p}")));
        }
        let sum = compensated_sum(probabilities.iter().copied());
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::InvalidPrior(format!("entries sum to {sum}")));
        }
        Ok(ClassPrior { probabilities })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        crate::label_space::check_k(k)?;
        Ok(ClassPrior {
            probabilities: vec![1.0 / k as f64; k],
        })
    }

    /// Normalizes non-negative weights with a positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidPrior(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Relative class frequencies.
    pub fn estimate(labels: &[CleanLabel], k: usize) -> Result<Self> {
        crate::label_space::check_k(k)?;
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut counts = vec![0.0; k];
        for (row, y) in labels.iter().enumerate() {
            if y.index() >= k {
                return Err(Error::LabelOutOfRange {
                    row,
                    label: y.index().to_string(),
                    k,
                });
            }
            counts[y.index()] += 1.0;
        }
        Self::from_weights(&counts)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn classes(&self) -> usize {
        self.probabilities.len()
    }
}

/// Frequency estimate of `T` from `(clean, weak)` pairs with additive
/// smoothing `s`. Smoothing mass goes only to cells the space admits, so the
/// estimate respects the same support rules as a hand-written matrix.
pub fn estimate_mixing(
    pairs: &[(CleanLabel, WeakLabel)],
    space: &WeakLabelSpace,
    smoothing: f64,
) -> Result<MixingMatrix> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::OutOfRange {
            name: "smoothing".into(),
            value: smoothing,
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = space.classes();
    let rows = space.cardinality()?;
    let mut counts = DMatrix::<u64>::zeros(rows, k);
    let mut totals = vec![0u64; k];
    for (i, (y, w)) in pairs.iter().enumerate() {
        if y.index() >= k {
            return Err(Error::LabelOutOfRange {
                row: i,
                label: y.index().to_string(),
                k,
            });
        }
        if !space.admits(w) {
            return Err(Error::OutOfSpace(format!("pair {i}: `{w}` under {space}")));
        }
        counts[(space.row_of(w)?, y.index())] += 1;
        totals[y.index()] += 1;
    }
    let mut entries = DMatrix::<f64>::zeros(rows, k);
    for c in 0..k {
        let open: Vec<bool> = (0..rows)
            .map(|r| admissible(space, r, c).is_ok())
            .collect();
        let open_rows = open.iter().filter(|&&o| o).count();
        let denom = totals[c] as f64 + smoothing * open_rows as f64;
        if denom == 0.0 {
            return Err(Error::EmptyColumn { class: c });
        }
        for r in 0..rows {
            let s = if open[r] { smoothing } else { 0.0 };
            entries[(r, c)] = (counts[(r, c)] as f64 + s) / denom;
        }
    }
    MixingMatrix::from_dense(entries, space.clone())
}

/// `P(Y = i | weak = w)` by Bayes' rule.
pub fn clean_posterior(t: &MixingMatrix, prior: &ClassPrior, w: &WeakLabel) -> Result<Vec<f64>> {
    if prior.classes() != t.classes() {
        return Err(Error::LengthMismatch {
            expected: t.classes(),
            actual: prior.classes(),
        });
    }
    let r = t.space().row_of(w)?;
    let joint: Vec<f64> = (0..t.classes())
        .map(|i| t.get(r, i) * prior.probabilities[i])
        .collect();
    let evidence = compensated_sum(joint.iter().copied());
    if evidence <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok(joint.iter().map(|p| p / evidence).collect())
}

/// Distribution of the weak label, `T·π`.
pub fn weak_distribution(t: &MixingMatrix, prior: &ClassPrior) -> Result<Vec<f64>> {
    if prior.classes() != t.classes() {
        return Err(Error::LengthMismatch {
            expected: t.classes(),
            actual: prior.classes(),
        });
    }
    let pi = DVector::from_column_slice(prior.probabilities());
    Ok((t.entries() * pi).iter().copied().collect())
}

/// Moore-Penrose left inverse `R` of a full-column-rank `T` (`R·T = I`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionMatrix {
    entries: DMatrix<f64>,
}

impl ReconstructionMatrix {
    pub fn new(t: &MixingMatrix) -> Result<Self> {
        let k = t.classes();
        let sigma = t.entries().singular_values();
        let largest = sigma.iter().copied().fold(0.0, f64::max);
        let cutoff = RANK_TOLERANCE * largest;
        let rank = sigma.iter().filter(|&&s| s > cutoff).count();
        if rank < k {
            return Err(Error::RankDeficient { rank, required: k });
        }
        // Full column rank, so the pseudo-inverse is R⁻¹Qᵀ. nalgebra's SVD
        // can lose ~1e-9 when singular values nearly coincide; QR does not.
        let qr = t.entries().clone().qr();
        let entries = qr
            .r()
            .solve_upper_triangular(&qr.q().transpose())
            .ok_or(Error::RankDeficient { rank: k - 1, required: k })?;
        Ok(ReconstructionMatrix { entries })
    }

    /// `k × rows` matrix.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Maps a weak-label distribution back to class space.
    pub fn apply(&self, weak: &[f64]) -> Result<Vec<f64>> {
        if weak.len() != self.entries.ncols() {
            return Err(Error::LengthMismatch {
                expected: self.entries.ncols(),
                actual: weak.len(),
            });
        }
        let q = DVector::from_column_slice(weak);
        Ok((&self.entries * q).iter().copied().collect())
    }
}

pub fn reconstruction_matrix(t: &MixingMatrix) -> Result<ReconstructionMatrix> {
    ReconstructionMatrix::new(t)
}

/// Two-bag LLP view of a PU sample: the labelled positives, then the
/// unlabelled set. Counts are `[positive, negative]`; the unlabelled positive
/// count is rounded half-to-even.
pub fn pu_to_llp(positives: u64, unlabelled: u64, alpha_u: f64) -> Result<[[u64; 2]; 2]> {
    if !(0.0..=1.0).contains(&alpha_u) {
        return Err(Error::OutOfRange {
            name: "alpha_u".into(),
            value: alpha_u,
        });
    }
    if positives == 0 || unlabelled == 0 {
        return Err(Error::Degenerate(
            "both the labelled and the unlabelled set need at least one instance".into(),
        ));
    }
    let pos_u = (alpha_u * unlabelled as f64).round_ties_even() as u64;
    Ok([[positives, 0], [pos_u, unlabelled - pos_u]])
}

/// Whether rows of `a` and `b` index the same weak labels. PU is binary
/// semi-supervision with a fixed zero pattern, so the two are compared
/// entry by entry.
fn same_row_labels(a: &WeakLabelSpace, b: &WeakLabelSpace) -> bool {
    let widen = |s: &WeakLabelSpace| match s {
        WeakLabelSpace::Pu => WeakLabelSpace::SemiSup { k: 2 },
        other => other.clone(),
    };
    widen(a) == widen(b)
}

/// L-infinity distance between two matrices over the same space.
pub fn compare_matrices(a: &MixingMatrix, b: &MixingMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.classes() != b.classes() {
        return Err(Error::ShapeMismatch {
            expected_rows: a.rows(),
            expected_cols: a.classes(),
            rows: b.rows(),
            cols: b.classes(),
        });
    }
    if !same_row_labels(a.space(), b.space()) {
        return Err(Error::SpaceMismatch(format!("{} vs {}", a.space(), b.space())));
    }
    Ok(a
        .entries()
        .iter()
        .zip(b.entries().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
