//! Datasets and their on-disk formats.
//!
//! * Clean CSV: header row, integer class index in the `label` column
//!   (`|`-joined indices for multi-label targets).
//! * Weak CSV: original columns, then `weak_label`, or `weak_0..weak_{n-1}`
//!   for annotator tuples. Abstentions are `-`.
//! * `bags.csv`: `instance_index,bag_id`; `bag_labels.csv`: `bag_id,label`.
//! * Matrix JSON: `k`, `weak_space`, `row_order`, `entries` (row-major).
//! * Generation config JSON, see [`read_config`].
//!
//! Every writer uses `\n` line endings and locale-independent number
//! formatting; floats are written in shortest round-trip form.

use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use crate::aggregation::{Aggregation, BagAssignment, BagLabel, BagStrategy};
use crate::error::{Error, Result};
use crate::label_space::{
    parse_weak_label, ClassSet, CleanLabel, MultiCleanLabel, WeakLabel, WeakLabelSpace,
};
use crate::mixing::{
    template_flip_binary, template_flip_symmetric, template_pu, template_ssl,
    template_superset_uniform, AnnotatorPool, MixingMatrix,
};
use crate::weakening::{Comparison, Condition, Region, WeakeningSpec};

pub const LABEL_COLUMN: &str = "label";
pub const WEAK_LABEL_COLUMN: &str = "weak_label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrueLabel {
    Class(CleanLabel),
    Multi(MultiCleanLabel),
}

impl TrueLabel {
    pub fn class(&self) -> Option<CleanLabel> {
        match self {
            TrueLabel::Class(c) => Some(*c),
            TrueLabel::Multi(_) => None,
        }
    }
}

/// A rectangular table of string cells with one parsed label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    label_column: usize,
    labels: Vec<TrueLabel>,
    k: usize,
}

fn parse_true_label(cell: &str, k: usize, row: usize) -> Result<TrueLabel> {
    let out_of_range = || Error::LabelOutOfRange {
        row,
        label: cell.to_string(),
        k,
    };
    let parse_index = |s: &str| -> Result<usize> {
        let c: usize = s.trim().parse().map_err(|_| out_of_range())?;
        if c < k {
            Ok(c)
        } else {
            Err(out_of_range())
        }
    };
    if cell.contains('|') {
        let classes = cell.split('|').map(parse_index).collect::<Result<Vec<_>>>()?;
        if classes.len() != ClassSet::from_classes(classes.iter().copied())?.len() {
            return Err(out_of_range());
        }
        let set = ClassSet::from_classes(classes)?;
        Ok(TrueLabel::Multi(
            MultiCleanLabel::new(set, k, k).map_err(|_| out_of_range())?,
        ))
    } else {
        Ok(TrueLabel::Class(CleanLabel::new(parse_index(cell)?, k)?))
    }
}

impl Dataset {
    /// Builds a dataset from raw cells; `columns` must contain `label`.
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>, k: usize) -> Result<Self> {
        crate::label_space::check_k(k)?;
        let label_column = columns
            .iter()
            .position(|c| c == LABEL_COLUMN)
            .ok_or_else(|| Error::schema(LABEL_COLUMN, "missing label column"))?;
        let mut labels = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::LengthMismatch {
                    expected: columns.len(),
                    actual: row.len(),
                });
            }
            labels.push(parse_true_label(&row[label_column], k, i)?);
        }
        Ok(Dataset {
            columns,
            rows,
            label_column,
            labels,
            k,
        })
    }

    /// A dataset holding only a `label` column.
    pub fn from_labels(labels: &[CleanLabel], k: usize) -> Result<Self> {
        let rows = labels.iter().map(|y| vec![y.index().to_string()]).collect();
        Self::new(vec![LABEL_COLUMN.to_string()], rows, k)
    }

    /// Numeric feature columns followed by `label`.
    pub fn from_features(
        names: &[&str],
        features: &[Vec<f64>],
        labels: &[CleanLabel],
        k: usize,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                actual: features.len(),
            });
        }
        let mut columns: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        columns.push(LABEL_COLUMN.to_string());
        let rows = features
            .iter()
            .zip(labels)
            .map(|(f, y)| {
                let mut row: Vec<String> = f.iter().map(|v| v.to_string()).collect();
                row.push(y.index().to_string());
                row
            })
            .collect();
        Self::new(columns, rows, k)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn labels(&self) -> &[TrueLabel] {
        &self.labels
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn cell(&self, row: usize, column: usize) -> &str {
        &self.rows[row][column]
    }

    pub fn label_column(&self) -> usize {
        self.label_column
    }

    /// Single-class labels; fails on the first multi-label row.
    pub fn class_labels(&self) -> Result<Vec<CleanLabel>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(row, l)| l.class().ok_or(Error::MultiLabel { row }))
            .collect()
    }

    /// Per-class counts of single-class labels.
    pub fn histogram(&self) -> Result<Vec<u64>> {
        let mut h = vec![0u64; self.k];
        for y in self.class_labels()? {
            h[y.index()] += 1;
        }
        Ok(h)
    }
}

/// A dataset with one weak label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakDataset {
    pub base: Dataset,
    pub space: WeakLabelSpace,
    pub weak: Vec<WeakLabel>,
}

impl WeakDataset {
    /// Header and cells exactly as written by [`write_weak_csv`].
    pub fn to_records(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let n = match &self.space {
            WeakLabelSpace::MultiAnnotator { n, .. } | WeakLabelSpace::Unified { n, .. } => {
                Some(*n)
            }
            _ => None,
        };
        let mut header = self.base.columns.clone();
        match n {
            Some(n) => header.extend((0..n).map(|j| format!("weak_{j}"))),
            None => header.push(WEAK_LABEL_COLUMN.to_string()),
        }
        let rows = self
            .base
            .rows
            .iter()
            .zip(&self.weak)
            .map(|(row, w)| {
                let mut out = row.clone();
                match w {
                    WeakLabel::Tuple(items) => out.extend(items.iter().map(|i| i.to_string())),
                    other => out.push(other.to_string()),
                }
                out
            })
            .collect();
        (header, rows)
    }
}

fn path_string(path: &Path) -> String {
    path.display().to_string()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let (line, column) = match e.position() {
        Some(p) => (p.line(), 0),
        None => (0, 0),
    };
    Error::File {
        path: path_string(path),
        line,
        column,
        message: e.to_string(),
    }
}

fn file_error(path: &Path, line: u64, column: u64, e: impl ToString) -> Error {
    Error::File {
        path: path_string(path),
        line,
        column,
        message: e.to_string(),
    }
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = File::open(path).map_err(|e| file_error(path, 0, 0, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(BufReader::new(file));
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(file_error(path, 1, 0, "missing header row"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a clean dataset. Label errors are reported with the file line
/// (header is line 1) and the label column.
pub fn read_clean_csv(path: impl AsRef<Path>, k: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let (header, rows) = read_table(path)?;
    let label_col = header
        .iter()
        .position(|c| c == LABEL_COLUMN)
        .ok_or_else(|| file_error(path, 1, 0, "header has no `label` column"))?;
    Dataset::new(header, rows, k).map_err(|e| match e {
        Error::LabelOutOfRange { row, label, k } => file_error(
            path,
            row as u64 + 2,
            label_col as u64 + 1,
            format!("label `{label}` is not a class index below {k}"),
        ),
        other => other,
    })
}

/// Reads a weak CSV (as written by [`write_weak_csv`]) given its clean class
/// count and weak space.
pub fn read_weak_csv(
    path: impl AsRef<Path>,
    k: usize,
    space: &WeakLabelSpace,
) -> Result<WeakDataset> {
    let path = path.as_ref();
    let (header, rows) = read_table(path)?;
    let weak_cols: Vec<usize> = match space {
        WeakLabelSpace::MultiAnnotator { n, .. } | WeakLabelSpace::Unified { n, .. } => (0..*n)
            .map(|j| {
                let name = format!("weak_{j}");
                header
                    .iter()
                    .position(|c| *c == name)
                    .ok_or_else(|| file_error(path, 1, 0, format!("missing column `{name}`")))
            })
            .collect::<Result<_>>()?,
        _ => vec![header
            .iter()
            .position(|c| c == WEAK_LABEL_COLUMN)
            .ok_or_else(|| file_error(path, 1, 0, "missing column `weak_label`"))?],
    };
    let mut weak = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let text = weak_cols
            .iter()
            .map(|&c| row[c].as_str())
            .collect::<Vec<_>>()
            .join(";");
        let label = parse_weak_label(&text, space).map_err(|e| {
            let column = match &e {
                Error::Parse { offset, .. } => {
                    // map the byte offset back to the annotator column
                    let mut acc = 0;
                    let mut col = weak_cols[0];
                    for &c in &weak_cols {
                        if *offset < acc + row[c].len() + 1 {
                            col = c;
                            break;
                        }
                        acc += row[c].len() + 1;
                    }
                    col
                }
                _ => weak_cols[0],
            };
            file_error(path, i as u64 + 2, column as u64 + 1, e)
        })?;
        weak.push(label);
    }
    let keep: Vec<usize> = (0..header.len()).filter(|c| !weak_cols.contains(c)).collect();
    let base_header = keep.iter().map(|&c| header[c].clone()).collect();
    let base_rows = rows
        .iter()
        .map(|r| keep.iter().map(|&c| r[c].clone()).collect())
        .collect();
    let base = Dataset::new(base_header, base_rows, k)?;
    Ok(WeakDataset {
        base,
        space: space.clone(),
        weak,
    })
}

pub fn write_weak_csv(path: impl AsRef<Path>, data: &WeakDataset) -> Result<()> {
    let (header, rows) = data.to_records();
    write_table(path.as_ref(), &header, &rows)
}

pub fn write_clean_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_table(path.as_ref(), &data.columns, &data.rows)
}

pub fn write_bags_csv(path: impl AsRef<Path>, assignment: &BagAssignment) -> Result<()> {
    let header = ["instance_index".to_string(), "bag_id".to_string()];
    let rows: Vec<Vec<String>> = assignment
        .bag_of()
        .iter()
        .enumerate()
        .map(|(i, b)| vec![i.to_string(), b.to_string()])
        .collect();
    write_table(path.as_ref(), &header, &rows)
}

pub fn read_bags_csv(path: impl AsRef<Path>) -> Result<BagAssignment> {
    let path = path.as_ref();
    let (header, rows) = read_table(path)?;
    if header != ["instance_index", "bag_id"] {
        return Err(file_error(path, 1, 0, "expected header `instance_index,bag_id`"));
    }
    let mut bag_of = vec![None; rows.len()];
    for (i, row) in rows.iter().enumerate() {
        let parse = |c: usize| -> Result<usize> {
            row[c]
                .parse()
                .map_err(|_| file_error(path, i as u64 + 2, c as u64 + 1, "expected an integer"))
        };
        let (inst, bag) = (parse(0)?, parse(1)?);
        if inst >= rows.len() || bag_of[inst].is_some() {
            return Err(file_error(
                path,
                i as u64 + 2,
                1,
                format!("instance {inst} is out of range or repeated"),
            ));
        }
        bag_of[inst] = Some(bag);
    }
    let bag_of = bag_of.into_iter().map(|b| b.expect("every slot filled")).collect();
    BagAssignment::from_bag_of(bag_of)
}

pub fn format_bag_label(label: &BagLabel) -> String {
    match label {
        BagLabel::Binary(v) => u8::from(*v).to_string(),
        BagLabel::Counts(c) => join(c.iter()),
        BagLabel::Proportions(p) => join(p.iter()),
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join("|")
}

/// Parses a bag label cell. `1|2|1` is read as counts unless a component has
/// a decimal point or exponent; a bare `0`/`1` is binary.
pub fn parse_bag_label(text: &str) -> Result<BagLabel> {
    let bad = |offset: usize| Error::Parse {
        offset,
        message: format!("invalid bag label `{text}`"),
    };
    if text == "0" || text == "1" {
        return Ok(BagLabel::Binary(text == "1"));
    }
    let parts: Vec<&str> = text.split('|').collect();
    if parts.iter().any(|p| p.contains(['.', 'e', 'E'])) {
        let values = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| bad(0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BagLabel::Proportions(values))
    } else {
        let values = parts
            .iter()
            .map(|p| p.parse::<u64>().map_err(|_| bad(0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BagLabel::Counts(values))
    }
}

pub fn write_bag_labels_csv(path: impl AsRef<Path>, labels: &[BagLabel]) -> Result<()> {
    let header = ["bag_id".to_string(), "label".to_string()];
    let rows: Vec<Vec<String>> = labels
        .iter()
        .enumerate()
        .map(|(b, l)| vec![b.to_string(), format_bag_label(l)])
        .collect();
    write_table(path.as_ref(), &header, &rows)
}

pub fn read_bag_labels_csv(path: impl AsRef<Path>) -> Result<Vec<BagLabel>> {
    let path = path.as_ref();
    let (header, rows) = read_table(path)?;
    if header != ["bag_id", "label"] {
        return Err(file_error(path, 1, 0, "expected header `bag_id,label`"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row[0] != i.to_string() {
                return Err(file_error(path, i as u64 + 2, 1, "bag ids must be 0, 1, 2, ..."));
            }
            parse_bag_label(&row[1]).map_err(|e| file_error(path, i as u64 + 2, 2, e))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// JSON

/// Tagged JSON descriptor of a weak space.
pub fn space_to_json(space: &WeakLabelSpace) -> Value {
    match space {
        WeakLabelSpace::Multiclass { k } => json!({"kind": "multiclass", "k": k}),
        WeakLabelSpace::PartialSet { k, m } => json!({"kind": "partial_set", "k": k, "m": m}),
        WeakLabelSpace::SupersetSet { k, m } => json!({"kind": "superset_set", "k": k, "m": m}),
        WeakLabelSpace::SemiSup { k } => json!({"kind": "semi_sup", "k": k}),
        WeakLabelSpace::Pu => json!({"kind": "pu"}),
        WeakLabelSpace::MultiAnnotator { n, inner } => {
            json!({"kind": "multi_annotator", "n": n, "inner": space_to_json(inner)})
        }
        WeakLabelSpace::Unified {
            n,
            k,
            m,
            allow_abstain,
        } => json!({"kind": "unified", "n": n, "k": k, "m": m, "allow_abstain": allow_abstain}),
    }
}

/// Strict accessor over a JSON object that names the full key path in errors.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(value: &'a Value, path: &str) -> Result<Self> {
        match value {
            Value::Object(map) => Ok(Obj {
                map,
                path: path.to_string(),
            }),
            _ => Err(Error::schema(display_path(path), "expected an object")),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn allow_only(&self, keys: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::schema(self.key(k), "unknown key"));
            }
        }
        Ok(())
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.map.get(k)
    }

    fn req(&self, k: &str) -> Result<&'a Value> {
        self.map
            .get(k)
            .ok_or_else(|| Error::schema(self.key(k), "missing required key"))
    }

    fn usize(&self, k: &str) -> Result<usize> {
        self.req(k)?
            .as_u64()
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| Error::schema(self.key(k), "expected a non-negative integer"))
    }

    fn opt_usize(&self, k: &str) -> Result<Option<usize>> {
        match self.get(k) {
            None => Ok(None),
            Some(_) => self.usize(k).map(Some),
        }
    }

    fn u64(&self, k: &str) -> Result<u64> {
        self.req(k)?
            .as_u64()
            .ok_or_else(|| Error::schema(self.key(k), "expected an unsigned 64-bit integer"))
    }

    fn f64(&self, k: &str) -> Result<f64> {
        self.req(k)?
            .as_f64()
            .ok_or_else(|| Error::schema(self.key(k), "expected a number"))
    }

    fn str(&self, k: &str) -> Result<&'a str> {
        self.req(k)?
            .as_str()
            .ok_or_else(|| Error::schema(self.key(k), "expected a string"))
    }

    fn bool(&self, k: &str) -> Result<bool> {
        self.req(k)?
            .as_bool()
            .ok_or_else(|| Error::schema(self.key(k), "expected a boolean"))
    }

    fn array(&self, k: &str) -> Result<&'a Vec<Value>> {
        self.req(k)?
            .as_array()
            .ok_or_else(|| Error::schema(self.key(k), "expected an array"))
    }

    fn child(&self, k: &str) -> Result<Obj<'a>> {
        Obj::new(self.req(k)?, &self.key(k))
    }
}

fn display_path(path: &str) -> String {
    if path.is_empty() {
        "<root>".into()
    } else {
        path.to_string()
    }
}

fn with_key(key: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Schema { .. } => e,
        other => Error::schema(key, other.to_string()),
    }
}

pub fn space_from_json(value: &Value) -> Result<WeakLabelSpace> {
    space_from_obj(&Obj::new(value, "weak_space")?)
}

fn space_from_obj(o: &Obj<'_>) -> Result<WeakLabelSpace> {
    let kind = o.str("kind")?;
    let space = match kind {
        "multiclass" => {
            o.allow_only(&["kind", "k"])?;
            WeakLabelSpace::multiclass(o.usize("k")?)
        }
        "partial_set" => {
            o.allow_only(&["kind", "k", "m"])?;
            WeakLabelSpace::partial(o.usize("k")?, o.opt_usize("m")?)
        }
        "superset_set" => {
            o.allow_only(&["kind", "k", "m"])?;
            WeakLabelSpace::superset(o.usize("k")?, o.opt_usize("m")?)
        }
        "semi_sup" => {
            o.allow_only(&["kind", "k"])?;
            WeakLabelSpace::semi_supervised(o.usize("k")?)
        }
        "pu" => {
            o.allow_only(&["kind"])?;
            Ok(WeakLabelSpace::Pu)
        }
        "multi_annotator" => {
            o.allow_only(&["kind", "n", "inner"])?;
            let inner = space_from_obj(&o.child("inner")?)?;
            WeakLabelSpace::multi_annotator(o.usize("n")?, inner)
        }
        "unified" => {
            o.allow_only(&["kind", "n", "k", "m", "allow_abstain"])?;
            WeakLabelSpace::unified(
                o.usize("n")?,
                o.usize("k")?,
                o.opt_usize("m")?,
                o.bool("allow_abstain")?,
            )
        }
        other => {
            return Err(Error::schema(
                o.key("kind"),
                format!("unknown space kind `{other}`"),
            ))
        }
    };
    space.map_err(with_key(o.path.clone()))
}

pub fn matrix_to_json(t: &MixingMatrix) -> Value {
    json!({
        "k": t.classes(),
        "weak_space": space_to_json(t.space()),
        "row_order": t.space().row_order(),
        "entries": t.to_rows(),
    })
}

/// Parses a matrix object. Besides the full form, a template form is accepted:
/// `{"template": "flip_binary", "gamma0": .., "gamma1": ..}`,
/// `{"template": "flip_symmetric", "k": .., "rho": ..}`,
/// `{"template": "ssl", "gammas": [..]}`, `{"template": "pu", "gamma0": ..}`,
/// `{"template": "superset_uniform", "k": .., "p_exact": ..}`.
pub fn matrix_from_json(value: &Value) -> Result<MixingMatrix> {
    matrix_from_obj(&Obj::new(value, "")?)
}

fn matrix_from_obj(o: &Obj<'_>) -> Result<MixingMatrix> {
    if o.get("template").is_some() {
        return template_from_obj(o);
    }
    o.allow_only(&["k", "weak_space", "row_order", "entries"])?;
    let k = o.usize("k")?;
    let space = space_from_obj(&o.child("weak_space")?)?;
    if space.classes() != k {
        return Err(Error::schema(
            o.key("k"),
            format!("k = {k} but the weak space has {} classes", space.classes()),
        ));
    }
    let order = o.str("row_order")?;
    if !["canonical-bitmask", "classes-then-abstain"].contains(&order) {
        return Err(Error::schema(
            o.key("row_order"),
            format!("unknown row order `{order}`"),
        ));
    }
    if order != space.row_order() {
        return Err(Error::schema(
            o.key("row_order"),
            format!("{} uses `{}`, not `{order}`", space, space.row_order()),
        ));
    }
    let entries_key = o.key("entries");
    let rows = o.array("entries")?;
    let mut data = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::schema(format!("{entries_key}[{r}]"), "expected an array"))?;
        let values = row
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.as_f64().ok_or_else(|| {
                    Error::schema(format!("{entries_key}[{r}][{c}]"), "expected a number")
                })
            })
            .collect::<Result<Vec<_>>>()?;
        data.push(values);
    }
    let expected = space.cardinality()?;
    if data.len() != expected || data.iter().any(|r| r.len() != k) {
        return Err(Error::ShapeMismatch {
            expected_rows: expected,
            expected_cols: k,
            rows: data.len(),
            cols: data.iter().map(Vec::len).find(|&l| l != k).unwrap_or(k),
        });
    }
    let entries = DMatrix::from_fn(expected, k, |r, c| data[r][c]);
    MixingMatrix::from_dense(entries, space)
}

fn template_from_obj(o: &Obj<'_>) -> Result<MixingMatrix> {
    let name = o.str("template")?;
    let t = match name {
        "flip_binary" => {
            o.allow_only(&["template", "gamma0", "gamma1"])?;
            template_flip_binary(o.f64("gamma0")?, o.f64("gamma1")?)
        }
        "flip_symmetric" => {
            o.allow_only(&["template", "k", "rho"])?;
            template_flip_symmetric(o.usize("k")?, o.f64("rho")?)
        }
        "ssl" => {
            o.allow_only(&["template", "gammas"])?;
            let key = o.key("gammas");
            let gammas = o
                .array("gammas")?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| Error::schema(key.clone(), "expected numbers")))
                .collect::<Result<Vec<_>>>()?;
            template_ssl(gammas.len(), &gammas)
        }
        "pu" => {
            o.allow_only(&["template", "gamma0"])?;
            template_pu(o.f64("gamma0")?)
        }
        "superset_uniform" => {
            o.allow_only(&["template", "k", "p_exact"])?;
            template_superset_uniform(o.usize("k")?, o.f64("p_exact")?)
        }
        other => {
            return Err(Error::schema(
                o.key("template"),
                format!("unknown template `{other}`"),
            ))
        }
    };
    t.map_err(with_key(display_path(&o.path)))
}

fn read_json(path: &Path) -> Result<Value> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| file_error(path, 0, 0, e))?;
    serde_json::from_str(&text)
        .map_err(|e| file_error(path, e.line() as u64, e.column() as u64, e))
}

fn in_file(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        Error::File { .. } => e,
        other => file_error(path, 0, 0, other),
    }
}

/// Matrix JSON text with keys in schema order and one matrix row per line.
pub fn matrix_json_text(t: &MixingMatrix) -> String {
    let compact = |v: &Value| serde_json::to_string(v).expect("JSON values always serialize");
    let rows: Vec<String> = t
        .to_rows()
        .iter()
        .map(|r| format!("    {}", compact(&json!(r))))
        .collect();
    format!(
        "{{\n  \"k\": {},\n  \"weak_space\": {},\n  \"row_order\": {},\n  \"entries\": [\n{}\n  ]\n}}\n",
        t.classes(),
        compact(&space_to_json(t.space())),
        compact(&json!(t.space().row_order())),
        rows.join(",\n")
    )
}

pub fn write_matrix_json(path: impl AsRef<Path>, t: &MixingMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_json_text(t)).map_err(|e| file_error(path, 0, 0, e))
}

/// Reads a matrix file. Errors keep their kind (e.g. `NotStochastic`) so
/// callers can report them; file-level problems become [`Error::File`].
pub fn read_matrix_json(path: impl AsRef<Path>) -> Result<MixingMatrix> {
    let path = path.as_ref();
    matrix_from_json(&read_json(path)?)
}

/// What a config asks for: a weakening run, an aggregation run, or both.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub weakening: Option<WeakeningSpec>,
    pub aggregation: Option<AggregationPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationPlan {
    pub strategy: BagStrategy,
    pub aggregation: Aggregation,
}

/// Reads a generation config.
///
/// ```json
/// {
///   "seed": 42,
///   "mode": "iin" | "idn" | "multi_annotator",
///   "matrix": {...},                       // iin
///   "regions": [{"when": [{"column": "x0", "op": "<", "value": 0}],
///                "matrix": {...}}, ...],    // idn, last region has "when": []
///   "annotators": [{...}, ...],            // multi_annotator
///   "aggregation": {
///     "strategy": {"kind": "random_partition", "bag_size": 10, "seed": 7}
///               | {"kind": "contiguous", "bag_size": 10}
///               | {"kind": "by_key", "column": "group"},
///     "g": {"kind": "mil", "k": 2, "positive_class": 1}
///        | {"kind": "gmil", "k": 2, "positive_class": 1, "r": 2}
///        | {"kind": "llp", "k": 3, "normalized": false}
///   }
/// }
/// ```
///
/// A matrix may also be given as a string path, resolved relative to the
/// config file.
pub fn read_config(path: impl AsRef<Path>) -> Result<RunPlan> {
    let path = path.as_ref();
    let value = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&value, base).map_err(in_file(path))
}

pub fn parse_config(value: &Value, base_dir: &Path) -> Result<RunPlan> {
    let o = Obj::new(value, "")?;
    o.allow_only(&[
        "seed",
        "mode",
        "matrix",
        "regions",
        "annotators",
        "aggregation",
    ])?;
    let load_matrix = |v: &Value, key: String| -> Result<MixingMatrix> {
        match v {
            Value::String(p) => read_matrix_json(base_dir.join(p)).map_err(with_key(key)),
            _ => matrix_from_obj(&Obj::new(v, &key)?).map_err(with_key(key)),
        }
    };

    let weakening = match o.get("mode") {
        None => {
            for key in ["matrix", "regions", "annotators"] {
                if o.get(key).is_some() {
                    return Err(Error::schema(key, "given without `mode`"));
                }
            }
            None
        }
        Some(_) => {
            let seed = o.u64("seed")?;
            let mode = o.str("mode")?;
            let forbid = |keys: &[&str]| -> Result<()> {
                for k in keys {
                    if o.get(k).is_some() {
                        return Err(Error::schema(*k, format!("not used by mode `{mode}`")));
                    }
                }
                Ok(())
            };
            Some(match mode {
                "iin" => {
                    forbid(&["regions", "annotators"])?;
                    WeakeningSpec::iin(load_matrix(o.req("matrix")?, "matrix".into())?, seed)
                }
                "idn" => {
                    forbid(&["matrix", "annotators"])?;
                    let regions = o.array("regions")?;
                    let mut parsed = Vec::with_capacity(regions.len());
                    for (i, r) in regions.iter().enumerate() {
                        let key = format!("regions[{i}]");
                        let ro = Obj::new(r, &key)?;
                        ro.allow_only(&["when", "matrix"])?;
                        let mut conditions = Vec::new();
                        for (j, c) in ro.array("when")?.iter().enumerate() {
                            let co = Obj::new(c, &format!("{key}.when[{j}]"))?;
                            co.allow_only(&["column", "op", "value"])?;
                            let op = match co.str("op")? {
                                "<" => Comparison::Lt,
                                "<=" => Comparison::Le,
                                ">" => Comparison::Gt,
                                ">=" => Comparison::Ge,
                                other => {
                                    return Err(Error::schema(
                                        co.key("op"),
                                        format!("unknown comparison `{other}`"),
                                    ))
                                }
                            };
                            conditions.push(Condition {
                                column: co.str("column")?.to_string(),
                                op,
                                threshold: co.f64("value")?,
                            });
                        }
                        parsed.push(Region {
                            conditions,
                            matrix: load_matrix(ro.req("matrix")?, ro.key("matrix"))?,
                        });
                    }
                    if parsed.last().is_some_and(|r| !r.conditions.is_empty()) {
                        return Err(Error::schema(
                            format!("regions[{}].when", parsed.len() - 1),
                            "the last region must be a catch-all (empty `when`)",
                        ));
                    }
                    WeakeningSpec::idn(parsed, seed).map_err(with_key("regions".into()))?
                }
                "multi_annotator" => {
                    forbid(&["matrix", "regions"])?;
                    let matrices = o
                        .array("annotators")?
                        .iter()
                        .enumerate()
                        .map(|(j, v)| load_matrix(v, format!("annotators[{j}]")))
                        .collect::<Result<Vec<_>>>()?;
                    let pool = AnnotatorPool::new(matrices).map_err(with_key("annotators".into()))?;
                    WeakeningSpec::multi_annotator(pool, seed)
                }
                other => {
                    return Err(Error::schema(
                        "mode",
                        format!("expected iin, idn or multi_annotator, got `{other}`"),
                    ))
                }
            })
        }
    };

    let aggregation = match o.get("aggregation") {
        None => None,
        Some(_) => Some(parse_aggregation(&o.child("aggregation")?)?),
    };
    if weakening.is_none() && aggregation.is_none() {
        return Err(Error::schema("mode", "config needs `mode` or `aggregation`"));
    }
    Ok(RunPlan {
        weakening,
        aggregation,
    })
}

fn parse_aggregation(o: &Obj<'_>) -> Result<AggregationPlan> {
    o.allow_only(&["strategy", "g"])?;
    let s = o.child("strategy")?;
    let strategy = match s.str("kind")? {
        "random_partition" => {
            s.allow_only(&["kind", "bag_size", "seed"])?;
            BagStrategy::RandomPartition {
                bag_size: s.usize("bag_size")?,
                seed: s.u64("seed")?,
            }
        }
        "contiguous" => {
            s.allow_only(&["kind", "bag_size"])?;
            BagStrategy::Contiguous {
                bag_size: s.usize("bag_size")?,
            }
        }
        "by_key" => {
            s.allow_only(&["kind", "column"])?;
            BagStrategy::ByKey {
                column: s.str("column")?.to_string(),
            }
        }
        other => {
            return Err(Error::schema(
                s.key("kind"),
                format!("unknown strategy `{other}`"),
            ))
        }
    };
    if let BagStrategy::RandomPartition { bag_size: 0, .. } | BagStrategy::Contiguous { bag_size: 0 } =
        strategy
    {
        return Err(Error::schema(s.key("bag_size"), "must be at least 1"));
    }
    let g = o.child("g")?;
    let k = g.usize("k")?;
    crate::label_space::check_k(k).map_err(with_key(g.key("k")))?;
    let aggregation = match g.str("kind")? {
        "mil" => {
            g.allow_only(&["kind", "k", "positive_class"])?;
            Aggregation::Mil {
                k,
                positive_class: g.usize("positive_class")?,
            }
        }
        "gmil" => {
            g.allow_only(&["kind", "k", "positive_class", "r"])?;
            let r = g.usize("r")?;
            if r == 0 {
                return Err(Error::schema(g.key("r"), "must be at least 1"));
            }
            Aggregation::Gmil {
                k,
                positive_class: g.usize("positive_class")?,
                r,
            }
        }
        "llp" => {
            g.allow_only(&["kind", "k", "normalized"])?;
            Aggregation::Llp {
                k,
                normalized: g.bool("normalized")?,
            }
        }
        other => {
            return Err(Error::schema(
                g.key("kind"),
                format!("unknown aggregation `{other}`"),
            ))
        }
    };
    if let Aggregation::Mil { positive_class, .. } | Aggregation::Gmil { positive_class, .. } =
        aggregation
    {
        if positive_class >= k {
            return Err(Error::schema(g.key("positive_class"), "must be below k"));
        }
    }
    Ok(AggregationPlan {
        strategy,
        aggregation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::compare_matrices;
    use std::fs;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        let t = template_flip_binary(0.1, 0.2).unwrap();
        write_matrix_json(&p, &t).unwrap();
        let back = read_matrix_json(&p).unwrap();
        assert_eq!(compare_matrices(&t, &back).unwrap(), 0.0);

        let awkward = template_flip_symmetric(7, 1.0 / 3.0).unwrap();
        write_matrix_json(&p, &awkward).unwrap();
        assert_eq!(read_matrix_json(&p).unwrap(), awkward);
    }

    #[test]
    fn matrix_json_layout() {
        let v = matrix_to_json(&template_pu(0.4).unwrap());
        assert_eq!(
            v,
            json!({
                "k": 2,
                "weak_space": {"kind": "pu"},
                "row_order": "classes-then-abstain",
                "entries": [[0.6, 0.0], [0.0, 0.0], [0.4, 1.0]],
            })
        );
    }

    #[test]
    fn matrix_schema_errors_name_the_key() {
        let v = json!({"k": 2, "weak_space": {"kind": "multiclass", "k": 2},
                       "row_order": "canonical-bitmask", "entries": [[1, 0], [0, 1]]});
        assert!(matches!(matrix_from_json(&v), Err(Error::Schema { key, .. }) if key == "row_order"));
        let v = json!({"k": 2, "weak_space": {"kind": "multiclass", "k": 2}, "entries": []});
        assert!(matches!(matrix_from_json(&v), Err(Error::Schema { key, .. }) if key == "row_order"));
        let v = json!({"k": 2, "weak_space": {"kind": "multiclass", "k": 2, "x": 1},
                       "row_order": "classes-then-abstain", "entries": [[1, 0], [0, 1]]});
        assert!(matches!(matrix_from_json(&v), Err(Error::Schema { key, .. }) if key == "weak_space.x"));
        let v = json!({"k": 2, "weak_space": {"kind": "multiclass", "k": 2},
                       "row_order": "classes-then-abstain", "entries": [[1, 0], [0, "a"]]});
        assert!(matches!(matrix_from_json(&v), Err(Error::Schema { key, .. }) if key == "entries[1][1]"));
        let v = json!({"k": 2, "weak_space": {"kind": "multiclass", "k": 2},
                       "row_order": "classes-then-abstain", "entries": [[1, 0.5], [0, 0.48]]});
        assert!(matches!(matrix_from_json(&v), Err(Error::NotStochastic { column: 1, .. })));
    }

    #[test]
    fn templates_in_json() {
        let v = json!({"template": "ssl", "gammas": [0.2, 0.5, 0.8]});
        assert_eq!(matrix_from_json(&v).unwrap(), template_ssl(3, &[0.2, 0.5, 0.8]).unwrap());
        let v = json!({"template": "flip_binary", "gamma0": 0.1});
        assert!(matches!(matrix_from_json(&v), Err(Error::Schema { key, .. }) if key == "gamma1"));
        let v = json!({"template": "pu", "gamma0": 2.0});
        assert!(matches!(matrix_from_json(&v), Err(Error::Schema { .. })));
    }

    #[test]
    fn clean_csv_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("clean.csv");
        fs::write(&p, "x,color,label\n3.5,red,2\n1.0,blue,0|1\n").unwrap();
        let d = read_clean_csv(&p, 3).unwrap();
        assert_eq!(d.labels()[0], TrueLabel::Class(CleanLabel::new(2, 3).unwrap()));
        assert!(matches!(d.labels()[1], TrueLabel::Multi(_)));
        assert!(matches!(d.class_labels(), Err(Error::MultiLabel { row: 1 })));

        fs::write(&p, "x,label\n1,0\n2,5\n").unwrap();
        match read_clean_csv(&p, 3) {
            Err(Error::File { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&p, "x,y\n1,0\n").unwrap();
        assert!(matches!(read_clean_csv(&p, 3), Err(Error::File { line: 1, .. })));
        fs::write(&p, "x,label\n1,0\n2\n").unwrap();
        assert!(matches!(read_clean_csv(&p, 3), Err(Error::File { line: 3, .. })));
    }

    #[test]
    fn weak_csv_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("weak.csv");
        let labels: Vec<CleanLabel> = (0..3).map(|c| CleanLabel::new(c, 3).unwrap()).collect();
        let base = Dataset::from_labels(&labels, 3).unwrap();
        let space = WeakLabelSpace::unified(1, 3, None, true).unwrap();
        let single = WeakLabelSpace::partial(3, None).unwrap();
        let weak = WeakDataset {
            base: base.clone(),
            space: single.clone(),
            weak: vec![
                WeakLabel::classes([0, 2]).unwrap(),
                WeakLabel::class(1),
                WeakLabel::classes([1, 2]).unwrap(),
            ],
        };
        write_weak_csv(&p, &weak).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "label,weak_label\n0,0|2\n1,1\n2,1|2\n"
        );
        assert_eq!(read_weak_csv(&p, 3, &single).unwrap(), weak);

        let tuples = WeakDataset {
            base,
            space: space.clone(),
            weak: vec![
                WeakLabel::Tuple(vec![WeakLabel::Abstain]),
                WeakLabel::Tuple(vec![WeakLabel::class(1)]),
                WeakLabel::Tuple(vec![WeakLabel::classes([0, 1]).unwrap()]),
            ],
        };
        write_weak_csv(&p, &tuples).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "label,weak_0\n0,-\n1,1\n2,0|1\n");
        assert_eq!(read_weak_csv(&p, 3, &space).unwrap(), tuples);
    }

    #[test]
    fn bag_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = BagAssignment::build(5, &BagStrategy::Contiguous { bag_size: 2 }, None).unwrap();
        let p = dir.path().join("bags.csv");
        write_bags_csv(&p, &a).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "instance_index,bag_id\n0,0\n1,0\n2,1\n3,1\n4,2\n"
        );
        assert_eq!(read_bags_csv(&p).unwrap(), a);

        let labels = vec![
            BagLabel::Binary(true),
            BagLabel::Counts(vec![1, 2, 1]),
            BagLabel::Proportions(vec![0.25, 0.5, 0.25]),
        ];
        let p = dir.path().join("bag_labels.csv");
        write_bag_labels_csv(&p, &labels).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "bag_id,label\n0,1\n1,1|2|1\n2,0.25|0.5|0.25\n"
        );
        assert_eq!(read_bag_labels_csv(&p).unwrap(), labels);
    }

    #[test]
    fn config_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("flip.json");
        write_matrix_json(&m, &template_flip_binary(0.1, 0.2).unwrap()).unwrap();
        let cfg = json!({
            "seed": 42,
            "mode": "idn",
            "regions": [
                {"when": [{"column": "x0", "op": "<", "value": 0.0}], "matrix": "flip.json"},
                {"when": [], "matrix": {"template": "flip_binary", "gamma0": 0.0, "gamma1": 0.0}}
            ],
            "aggregation": {
                "strategy": {"kind": "contiguous", "bag_size": 3},
                "g": {"kind": "llp", "k": 2, "normalized": true}
            }
        });
        let plan = parse_config(&cfg, dir.path()).unwrap();
        assert_eq!(plan.weakening.unwrap().seed(), 42);
        assert_eq!(
            plan.aggregation.unwrap().aggregation,
            Aggregation::Llp { k: 2, normalized: true }
        );

        let missing_catch_all = json!({
            "seed": 1, "mode": "idn",
            "regions": [{"when": [{"column": "x0", "op": "<", "value": 0.0}],
                         "matrix": {"template": "pu", "gamma0": 0.5}}]
        });
        assert!(matches!(parse_config(&missing_catch_all, dir.path()),
                         Err(Error::Schema { key, .. }) if key == "regions[0].when"));

        let no_seed = json!({"mode": "iin", "matrix": {"template": "pu", "gamma0": 0.5}});
        assert!(matches!(parse_config(&no_seed, dir.path()),
                         Err(Error::Schema { key, .. }) if key == "seed"));
        let unknown = json!({"seed": 1, "mode": "iin", "matrix": {"template": "pu", "gamma0": 0.5}, "extra": 1});
        assert!(matches!(parse_config(&unknown, dir.path()),
                         Err(Error::Schema { key, .. }) if key == "extra"));
        let bad_op = json!({"seed": 1, "mode": "idn", "regions": [
            {"when": [{"column": "x", "op": "~", "value": 1}], "matrix": {"template": "pu", "gamma0": 0.5}},
            {"when": [], "matrix": {"template": "pu", "gamma0": 0.5}}]});
        assert!(matches!(parse_config(&bad_op, dir.path()),
                         Err(Error::Schema { key, .. }) if key == "regions[0].when[0].op"));
        let bad_prob = json!({"seed": 1, "mode": "iin", "matrix": {"template": "pu", "gamma0": 1.5}});
        assert!(matches!(parse_config(&bad_prob, dir.path()),
                         Err(Error::Schema { key, .. }) if key == "matrix"));
        let r0 = json!({"aggregation": {"strategy": {"kind": "contiguous", "bag_size": 2},
                        "g": {"kind": "gmil", "k": 2, "positive_class": 1, "r": 0}}});
        assert!(matches!(parse_config(&r0, dir.path()),
                         Err(Error::Schema { key, .. }) if key == "aggregation.g.r"));
        assert!(parse_config(&json!({}), dir.path()).is_err());
    }

    #[test]
    fn json_syntax_errors_report_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, "{\n  \"k\": 2,\n  oops\n}").unwrap();
        assert!(matches!(read_matrix_json(&p), Err(Error::File { line: 3, .. })));
    }
}
