//! Drawing weak labels from clean ones.
//!
//! Each instance `i` (and annotator `j`) consumes exactly one uniform from the
//! stream keyed by `(seed, i, j)`, so results do not depend on thread count or
//! iteration order.

use rayon::prelude::*;

use crate::dataset_io::{Dataset, WeakDataset};
use crate::error::{Error, Result};
use crate::label_space::{CleanLabel, WeakLabel, WeakLabelSpace};
use crate::mixing::{AnnotatorPool, MixingMatrix};
use crate::rng::RngKey;

/// Per-column cumulative distributions of a mixing matrix.
///
/// Cumulative sums are compensated; every row from the last one with positive
/// mass onwards is pinned to exactly 1 so a draw can never fall off the end.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cumulative: Vec<Vec<f64>>,
    labels: Vec<WeakLabel>,
}

impl CategoricalSampler {
    pub fn new(t: &MixingMatrix) -> Result<Self> {
        let rows = t.rows();
        let cumulative = (0..t.classes())
            .map(|c| {
                let mut out = vec![0.0; rows];
                let last = (0..rows).rev().find(|&r| t.get(r, c) > 0.0).unwrap_or(rows - 1);
                let (mut sum, mut carry) = (0.0f64, 0.0f64);
                for (r, slot) in out.iter_mut().enumerate() {
                    let v = t.get(r, c);
                    let s = sum + v;
                    carry += if sum.abs() >= v.abs() {
                        (sum - s) + v
                    } else {
                        (v - s) + sum
                    };
                    sum = s;
                    *slot = if r >= last { 1.0 } else { sum + carry };
                }
                out
            })
            .collect();
        Ok(CategoricalSampler {
            cumulative,
            labels: t.row_labels()?,
        })
    }

    /// Row index selected by uniform `u` for clean class `class`: the first
    /// row whose cumulative probability exceeds `u`.
    pub fn row_for(&self, class: usize, u: f64) -> usize {
        let cum = &self.cumulative[class];
        cum.iter().position(|&p| p > u).unwrap_or(cum.len() - 1)
    }

    pub fn sample(&self, class: usize, key: RngKey) -> &WeakLabel {
        &self.labels[self.row_for(class, key.uniform())]
    }
}

/// Draws one weak label for clean label `y` from column `y` of `t`.
pub fn sample_weak(t: &MixingMatrix, y: CleanLabel, key: RngKey) -> Result<WeakLabel> {
    if y.index() >= t.classes() {
        return Err(Error::LabelOutOfRange {
            row: key.instance_index as usize,
            label: y.index().to_string(),
            k: t.classes(),
        });
    }
    Ok(CategoricalSampler::new(t)?.sample(y.index(), key).clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Lt => value < threshold,
            Comparison::Le => value <= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Ge => value >= threshold,
        }
    }
}

/// `column op threshold` on a numeric feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub column: String,
    pub op: Comparison,
    pub threshold: f64,
}

/// A conjunction of conditions with its own matrix. No conditions = catch-all.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub conditions: Vec<Condition>,
    pub matrix: MixingMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeakeningMode {
    /// One matrix for every instance.
    Iin(MixingMatrix),
    /// First matching region wins.
    Idn(Vec<Region>),
    /// Independent draws, one per annotator, emitted as a tuple.
    MultiAnnotator(AnnotatorPool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakeningSpec {
    mode: WeakeningMode,
    seed: u64,
}

impl WeakeningSpec {
    pub fn iin(matrix: MixingMatrix, seed: u64) -> Self {
        WeakeningSpec {
            mode: WeakeningMode::Iin(matrix),
            seed,
        }
    }

    /// Regions must be non-empty and share one weak space.
    pub fn idn(regions: Vec<Region>, seed: u64) -> Result<Self> {
        let first = regions
            .first()
            .ok_or_else(|| Error::InvalidSpace("at least one region is required".into()))?;
        for r in &regions[1..] {
            if r.matrix.space() != first.matrix.space() {
                return Err(Error::SpaceMismatch(format!(
                    "{} vs {}",
                    first.matrix.space(),
                    r.matrix.space()
                )));
            }
        }
        Ok(WeakeningSpec {
            mode: WeakeningMode::Idn(regions),
            seed,
        })
    }

    pub fn multi_annotator(pool: AnnotatorPool, seed: u64) -> Self {
        WeakeningSpec {
            mode: WeakeningMode::MultiAnnotator(pool),
            seed,
        }
    }

    pub fn mode(&self) -> &WeakeningMode {
        &self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn classes(&self) -> usize {
        match &self.mode {
            WeakeningMode::Iin(t) => t.classes(),
            WeakeningMode::Idn(regions) => regions[0].matrix.classes(),
            WeakeningMode::MultiAnnotator(pool) => pool.classes(),
        }
    }

    /// Space of the labels this spec emits.
    pub fn output_space(&self) -> Result<WeakLabelSpace> {
        match &self.mode {
            WeakeningMode::Iin(t) => Ok(t.space().clone()),
            WeakeningMode::Idn(regions) => Ok(regions[0].matrix.space().clone()),
            WeakeningMode::MultiAnnotator(pool) => pool.tuple_space(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

pub fn weaken_dataset(data: &Dataset, spec: &WeakeningSpec) -> Result<WeakDataset> {
    weaken_dataset_with(data, spec, Execution::Parallel)
}

/// Weakens every row of `data`. All validation happens before sampling, so the
/// reported error is always the one for the lowest offending row.
pub fn weaken_dataset_with(
    data: &Dataset,
    spec: &WeakeningSpec,
    execution: Execution,
) -> Result<WeakDataset> {
    let k = spec.classes();
    let labels = data.class_labels()?;
    for (row, y) in labels.iter().enumerate() {
        if y.index() >= k {
            return Err(Error::LabelOutOfRange {
                row,
                label: y.index().to_string(),
                k,
            });
        }
    }

    let (samplers, region_of) = match &spec.mode {
        WeakeningMode::Iin(t) => (vec![CategoricalSampler::new(t)?], vec![0; labels.len()]),
        WeakeningMode::Idn(regions) => {
            let samplers = regions
                .iter()
                .map(|r| CategoricalSampler::new(&r.matrix))
                .collect::<Result<Vec<_>>>()?;
            (samplers, assign_regions(data, regions)?)
        }
        WeakeningMode::MultiAnnotator(pool) => (
            pool.matrices()
                .iter()
                .map(CategoricalSampler::new)
                .collect::<Result<Vec<_>>>()?,
            Vec::new(),
        ),
    };

    let seed = spec.seed;
    let draw = |i: usize| -> WeakLabel {
        let y = labels[i].index();
        match &spec.mode {
            WeakeningMode::MultiAnnotator(_) => WeakLabel::Tuple(
                samplers
                    .iter()
                    .enumerate()
                    .map(|(j, s)| s.sample(y, RngKey::new(seed, i as u64, j as u64)).clone())
                    .collect(),
            ),
            _ => samplers[region_of[i]]
                .sample(y, RngKey::new(seed, i as u64, 0))
                .clone(),
        }
    };
    let weak: Vec<WeakLabel> = match execution {
        Execution::Parallel => (0..labels.len()).into_par_iter().map(draw).collect(),
        Execution::Sequential => (0..labels.len()).map(draw).collect(),
    };
    Ok(WeakDataset {
        base: data.clone(),
        space: spec.output_space()?,
        weak,
    })
}

/// Index of the first matching region for each row.
pub fn assign_regions(data: &Dataset, regions: &[Region]) -> Result<Vec<usize>> {
    let mut columns = Vec::new();
    for (ri, region) in regions.iter().enumerate() {
        let idx = region
            .conditions
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                data.column_index(&c.column).ok_or_else(|| {
                    Error::schema(
                        format!("regions[{ri}].when[{ci}].column"),
                        format!("no column named `{}`", c.column),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        columns.push(idx);
    }
    (0..data.len())
        .map(|row| {
            for (ri, region) in regions.iter().enumerate() {
                let mut all = true;
                for (c, &col) in region.conditions.iter().zip(&columns[ri]) {
                    let cell = data.cell(row, col);
                    let v: f64 = cell.trim().parse().map_err(|_| {
                        Error::schema(
                            c.column.clone(),
                            format!("row {row}: `{cell}` is not a number"),
                        )
                    })?;
                    if !c.op.holds(v, c.threshold) {
                        all = false;
                        break;
                    }
                }
                if all {
                    return Ok(ri);
                }
            }
            Err(Error::UnmatchedRegion { row })
        })
        .collect()
}
