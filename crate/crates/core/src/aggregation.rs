//! Bag-level supervision: grouping instances into bags and summarising each
//! bag's clean labels into a single bag label.

use std::collections::HashMap;

use crate::dataset_io::Dataset;
use crate::error::{Error, Result};
use crate::label_space::CleanLabel;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BagStrategy {
    /// Shuffle (Fisher-Yates driven by SplitMix64 from `seed`), then cut into
    /// consecutive chunks of `bag_size`; the last bag may be smaller.
    RandomPartition { bag_size: usize, seed: u64 },
    /// Rows `[b * bag_size, (b + 1) * bag_size)` form bag `b`.
    Contiguous { bag_size: usize },
    /// One bag per distinct value of `column`, numbered by first appearance.
    ByKey { column: String },
}

/// A partition of instance indices into non-empty bags `0..bags.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagAssignment {
    bag_of: Vec<usize>,
    bags: Vec<Vec<usize>>,
}

impl BagAssignment {
    /// `data` is only needed for [`BagStrategy::ByKey`].
    pub fn build(n: usize, strategy: &BagStrategy, data: Option<&Dataset>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let bag_of = match strategy {
            BagStrategy::RandomPartition { bag_size, seed } => {
                let size = positive_size(*bag_size)?;
                let mut order: Vec<usize> = (0..n).collect();
                let mut rng = SplitMix64::new(*seed);
                for i in (1..n).rev() {
                    order.swap(i, rng.below(i + 1));
                }
                let mut bag_of = vec![0; n];
                for (pos, &inst) in order.iter().enumerate() {
                    bag_of[inst] = pos / size;
                }
                bag_of
            }
            BagStrategy::Contiguous { bag_size } => {
                let size = positive_size(*bag_size)?;
                (0..n).map(|i| i / size).collect()
            }
            BagStrategy::ByKey { column } => {
                let data = data.ok_or_else(|| {
                    Error::schema("strategy.column", "grouping by key needs the dataset")
                })?;
                if data.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        actual: data.len(),
                    });
                }
                let col = data.column_index(column).ok_or_else(|| {
                    Error::schema("strategy.column", format!("no column named `{column}`"))
                })?;
                let mut ids: HashMap<&str, usize> = HashMap::new();
                (0..n)
                    .map(|i| {
                        let next = ids.len();
                        *ids.entry(data.cell(i, col)).or_insert(next)
                    })
                    .collect()
            }
        };
        Self::from_bag_of(bag_of)
    }

    /// From per-instance bag ids; ids must cover `0..B` with no gaps.
    pub fn from_bag_of(bag_of: Vec<usize>) -> Result<Self> {
        if bag_of.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let count = bag_of.iter().max().map_or(0, |m| m + 1);
        let mut bags = vec![Vec::new(); count];
        for (i, &b) in bag_of.iter().enumerate() {
            bags[b].push(i);
        }
        if let Some(bag) = bags.iter().position(Vec::is_empty) {
            return Err(Error::EmptyBag { bag });
        }
        Ok(BagAssignment { bag_of, bags })
    }

    pub fn bag_of(&self) -> &[usize] {
        &self.bag_of
    }

    pub fn bags(&self) -> &[Vec<usize>] {
        &self.bags
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }
}

fn positive_size(bag_size: usize) -> Result<usize> {
    if bag_size == 0 {
        Err(Error::schema("strategy.bag_size", "must be at least 1"))
    } else {
        Ok(bag_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BagLabel {
    Binary(bool),
    Counts(Vec<u64>),
    Proportions(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Positive iff some instance has `positive_class`.
    Mil { k: usize, positive_class: usize },
    /// Positive iff at least `r` instances have `positive_class`.
    Gmil {
        k: usize,
        positive_class: usize,
        r: usize,
    },
    /// Per-class counts, or counts divided by the bag size.
    Llp { k: usize, normalized: bool },
}

impl Aggregation {
    pub fn classes(&self) -> usize {
        match *self {
            Aggregation::Mil { k, .. } | Aggregation::Gmil { k, .. } | Aggregation::Llp { k, .. } => k,
        }
    }

    /// Checks `k`, the positive class and the threshold.
    pub fn validate(&self) -> Result<()> {
        crate::label_space::check_k(self.classes())?;
        match *self {
            Aggregation::Mil { k, positive_class } => check_positive(positive_class, k),
            Aggregation::Gmil {
                k,
                positive_class,
                r,
            } => {
                if r == 0 {
                    return Err(Error::InvalidThreshold(r));
                }
                check_positive(positive_class, k)
            }
            Aggregation::Llp { .. } => Ok(()),
        }
    }

    /// Label of one bag. An empty bag is reported as bag 0; see
    /// [`aggregate_dataset`] for errors carrying the real bag index.
    pub fn apply(&self, bag: &[CleanLabel]) -> Result<BagLabel> {
        match *self {
            Aggregation::Mil { k, positive_class } => {
                aggregate_gmil(bag, k, positive_class, 1).map(BagLabel::Binary)
            }
            Aggregation::Gmil {
                k,
                positive_class,
                r,
            } => aggregate_gmil(bag, k, positive_class, r).map(BagLabel::Binary),
            Aggregation::Llp { k, normalized } => {
                let counts = aggregate_llp(bag, k)?;
                Ok(if normalized {
                    let n = bag.len() as f64;
                    BagLabel::Proportions(counts.iter().map(|&c| c as f64 / n).collect())
                } else {
                    BagLabel::Counts(counts)
                })
            }
        }
    }
}

fn check_bag(bag: &[CleanLabel], k: usize) -> Result<()> {
    crate::label_space::check_k(k)?;
    if bag.is_empty() {
        return Err(Error::EmptyBag { bag: 0 });
    }
    if let Some((row, y)) = bag.iter().enumerate().find(|(_, y)| y.index() >= k) {
        return Err(Error::LabelOutOfRange {
            row,
            label: y.index().to_string(),
            k,
        });
    }
    Ok(())
}

fn check_positive(positive_class: usize, k: usize) -> Result<()> {
    if positive_class >= k {
        return Err(Error::InvalidSpace(format!(
            "positive class {positive_class} is not below k = {k}"
        )));
    }
    Ok(())
}

pub fn aggregate_mil(bag: &[CleanLabel], k: usize, positive_class: usize) -> Result<bool> {
    aggregate_gmil(bag, k, positive_class, 1)
}

pub fn aggregate_gmil(bag: &[CleanLabel], k: usize, positive_class: usize, r: usize) -> Result<bool> {
    if r == 0 {
        return Err(Error::InvalidThreshold(r));
    }
    check_bag(bag, k)?;
    check_positive(positive_class, k)?;
    let hits = bag.iter().filter(|y| y.index() == positive_class).count();
    Ok(hits >= r)
}

pub fn aggregate_llp(bag: &[CleanLabel], k: usize) -> Result<Vec<u64>> {
    check_bag(bag, k)?;
    let mut counts = vec![0u64; k];
    for y in bag {
        counts[y.index()] += 1;
    }
    Ok(counts)
}

/// Bags `data` with `strategy` and labels every bag with `g`. Errors inside a
/// bag come back wrapped in [`Error::InBag`] with row indices of the dataset.
pub fn aggregate_dataset(
    data: &Dataset,
    strategy: &BagStrategy,
    g: &Aggregation,
) -> Result<(BagAssignment, Vec<BagLabel>)> {
    let labels = data.class_labels()?;
    let assignment = BagAssignment::build(labels.len(), strategy, Some(data))?;
    let bag_labels = label_bags(&labels, &assignment, g)?;
    Ok((assignment, bag_labels))
}

pub fn label_bags(
    labels: &[CleanLabel],
    assignment: &BagAssignment,
    g: &Aggregation,
) -> Result<Vec<BagLabel>> {
    if labels.len() != assignment.bag_of.len() {
        return Err(Error::LengthMismatch {
            expected: assignment.bag_of.len(),
            actual: labels.len(),
        });
    }
    g.validate()?;
    assignment
        .bags
        .iter()
        .enumerate()
        .map(|(b, members)| {
            let bag: Vec<CleanLabel> = members.iter().map(|&i| labels[i]).collect();
            g.apply(&bag).map_err(|e| {
                let source = match e {
                    Error::LabelOutOfRange { row, label, k } => Error::LabelOutOfRange {
                        row: members[row],
                        label,
                        k,
                    },
                    other => other,
                };
                Error::InBag {
                    bag: b,
                    source: Box::new(source),
                }
            })
        })
        .collect()
}

/// Instance-level view: each instance paired with its bag's label.
pub fn expand_to_instances<'a>(
    assignment: &BagAssignment,
    labels: &'a [BagLabel],
) -> Vec<&'a BagLabel> {
    assignment.bag_of.iter().map(|&b| &labels[b]).collect()
}
