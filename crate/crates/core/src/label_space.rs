//! Clean and weak label spaces.
//!
//! Set-valued weak labels are bitmasks with bit `c` standing for class `c`.
//! Every weak space has a canonical row order used by mixing matrices:
//!
//! * multiclass: row `c` is the singleton `{c}`;
//! * semi-supervised / PU: classes `0..k`, then the abstention as the last row;
//! * partial / superset sets: row = bitmask - 1, so `{0}` is row 0 and the
//!   full set (bitmask `2^k - 1`) has no row;
//! * annotator tuples: mixed radix over the per-annotator rows, annotator 0
//!   most significant.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported class count. Bitmasks are `u64`, and `2^k - 2` must fit.
pub const MAX_CLASSES: usize = 63;

pub(crate) fn check_k(k: usize) -> Result<()> {
    if (2..=MAX_CLASSES).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidClassCount { k, max: MAX_CLASSES })
    }
}

fn full_mask(k: usize) -> u64 {
    (1u64 << k) - 1
}

/// A single true class, `0 <= class < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CleanLabel(usize);

impl CleanLabel {
    pub fn new(class: usize, k: usize) -> Result<Self> {
        check_k(k)?;
        if class < k {
            Ok(CleanLabel(class))
        } else {
            Err(Error::OutOfSpace(format!("class {class} with k = {k}")))
        }
    }

    /// Builds a label without a range check; callers validate against `k` later.
    pub fn unchecked(class: usize) -> Self {
        CleanLabel(class)
    }

    pub fn index(self) -> usize {
        self.0
    }

    /// One-hot encoding over `k` classes.
    pub fn one_hot(self, k: usize) -> Vec<u8> {
        (0..k).map(|c| u8::from(c == self.0)).collect()
    }
}

/// A non-empty set of classes stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassSet(u64);

impl ClassSet {
    pub fn from_mask(mask: u64) -> Result<Self> {
        if mask == 0 {
            Err(Error::OutOfSpace("empty class set".into()))
        } else {
            Ok(ClassSet(mask))
        }
    }

    pub fn singleton(class: usize) -> Self {
        assert!(class < 64, "class index {class} exceeds bitmask width");
        ClassSet(1 << class)
    }

    pub fn from_classes<I: IntoIterator<Item = usize>>(classes: I) -> Result<Self> {
        let mut mask = 0u64;
        for c in classes {
            if c >= MAX_CLASSES {
                return Err(Error::OutOfSpace(format!("class {c}")));
            }
            mask |= 1 << c;
        }
        Self::from_mask(mask)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn contains(self, class: usize) -> bool {
        class < 64 && self.0 & (1 << class) != 0
    }

    /// Highest class index present.
    pub fn max_class(self) -> usize {
        63 - self.0.leading_zeros() as usize
    }

    /// Member classes in ascending order.
    pub fn classes(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..64).filter(move |c| mask & (1 << c) != 0)
    }

    /// Bit string of length `k` with character `j` set when class `j` is a member.
    pub fn bitstring(self, k: usize) -> String {
        (0..k)
            .map(|c| if self.contains(c) { '1' } else { '0' })
            .collect()
    }
}

/// A clean multi-label target: `1 <= |set| <= m <= k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiCleanLabel {
    set: ClassSet,
}

impl MultiCleanLabel {
    pub fn new(set: ClassSet, k: usize, m: usize) -> Result<Self> {
        check_k(k)?;
        if m == 0 || m > k {
            return Err(Error::InvalidSpace(format!("m = {m} must lie in [1, {k}]")));
        }
        if set.mask() > full_mask(k) {
            return Err(Error::OutOfSpace(format!("class {} with k = {k}", set.max_class())));
        }
        if set.len() > m {
            return Err(Error::OutOfSpace(format!(
                "{} classes exceed m = {m}",
                set.len()
            )));
        }
        Ok(MultiCleanLabel { set })
    }

    pub fn set(&self) -> ClassSet {
        self.set
    }
}

/// An observed annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WeakLabel {
    Set(ClassSet),
    Abstain,
    Tuple(Vec<WeakLabel>),
}

impl WeakLabel {
    pub fn class(class: usize) -> Self {
        WeakLabel::Set(ClassSet::singleton(class))
    }

    pub fn classes<I: IntoIterator<Item = usize>>(classes: I) -> Result<Self> {
        ClassSet::from_classes(classes).map(WeakLabel::Set)
    }
}

impl From<CleanLabel> for WeakLabel {
    fn from(y: CleanLabel) -> Self {
        WeakLabel::class(y.index())
    }
}

impl fmt::Display for WeakLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeakLabel::Set(s) => {
                for (i, c) in s.classes().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            WeakLabel::Abstain => f.write_str("-"),
            WeakLabel::Tuple(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
        }
    }
}

/// Description of a weak observation space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WeakLabelSpace {
    Multiclass { k: usize },
    PartialSet { k: usize, m: usize },
    SupersetSet { k: usize, m: usize },
    SemiSup { k: usize },
    Pu,
    MultiAnnotator { n: usize, inner: Box<WeakLabelSpace> },
    Unified { n: usize, k: usize, m: usize, allow_abstain: bool },
}

/// Maps a class subset to its canonical row: `bitmask - 1`.
pub fn subset_to_row(set: ClassSet, k: usize) -> Result<usize> {
    check_k(k)?;
    let mask = set.mask();
    if mask >= full_mask(k) {
        return Err(Error::OutOfSpace(format!(
            "bitmask {mask} is not a proper subset of {k} classes"
        )));
    }
    Ok((mask - 1) as usize)
}

pub fn row_to_subset(row: usize, k: usize) -> Result<ClassSet> {
    check_k(k)?;
    let rows = full_mask(k) - 1;
    if row as u64 >= rows {
        return Err(Error::OutOfSpace(format!("row {row} >= {rows}")));
    }
    ClassSet::from_mask(row as u64 + 1)
}

/// Set-valued rows listed the way they are usually displayed: by size, with
/// singletons ordered by their bit string and each size above `k/2` listed as
/// complements of the matching smaller size. For `k = 3` this is
/// `001, 010, 100, 110, 101, 011`.
pub fn display_order(k: usize) -> Result<Vec<ClassSet>> {
    check_k(k)?;
    let full = full_mask(k);
    // bit string value with class 0 as the most significant character
    let string_value = |mask: u64| -> u64 {
        (0..k)
            .filter(|c| mask & (1 << c) != 0)
            .map(|c| 1u64 << (k - 1 - c))
            .sum()
    };
    let by_size = |p: u32| -> Vec<u64> {
        let mut v: Vec<u64> = (1..full).filter(|m| m.count_ones() == p).collect();
        v.sort_by_key(|&m| string_value(m));
        v
    };
    let mut out = Vec::with_capacity(full as usize - 1);
    for p in 1..k as u32 {
        let masks = if 2 * p as usize <= k {
            by_size(p)
        } else {
            by_size(k as u32 - p).into_iter().map(|m| full ^ m).collect()
        };
        out.extend(masks.into_iter().map(ClassSet));
    }
    Ok(out)
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or(Error::Overflow)
}

impl WeakLabelSpace {
    pub fn multiclass(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(WeakLabelSpace::Multiclass { k })
    }

    /// Partial-label space; `m` defaults to `k - 1`.
    pub fn partial(k: usize, m: Option<usize>) -> Result<Self> {
        let m = Self::resolve_m(k, m)?;
        Ok(WeakLabelSpace::PartialSet { k, m })
    }

    pub fn superset(k: usize, m: Option<usize>) -> Result<Self> {
        let m = Self::resolve_m(k, m)?;
        Ok(WeakLabelSpace::SupersetSet { k, m })
    }

    pub fn semi_supervised(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(WeakLabelSpace::SemiSup { k })
    }

    pub fn multi_annotator(n: usize, inner: WeakLabelSpace) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("at least one annotator is required".into()));
        }
        if matches!(
            inner,
            WeakLabelSpace::MultiAnnotator { .. } | WeakLabelSpace::Unified { .. }
        ) {
            return Err(Error::InvalidSpace(
                "annotator tuples cannot nest".into(),
            ));
        }
        inner.validate()?;
        Ok(WeakLabelSpace::MultiAnnotator {
            n,
            inner: Box::new(inner),
        })
    }

    /// `m` is shared by all annotators and defaults to `k - 1`.
    pub fn unified(n: usize, k: usize, m: Option<usize>, allow_abstain: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("at least one annotator is required".into()));
        }
        let m = Self::resolve_m(k, m)?;
        Ok(WeakLabelSpace::Unified {
            n,
            k,
            m,
            allow_abstain,
        })
    }

    fn resolve_m(k: usize, m: Option<usize>) -> Result<usize> {
        check_k(k)?;
        let m = m.unwrap_or(k - 1);
        if m == 0 || m > k {
            return Err(Error::InvalidSpace(format!("m = {m} must lie in [1, {k}]")));
        }
        Ok(m)
    }

    /// Re-checks the parameter constraints of a descriptor built by hand.
    pub fn validate(&self) -> Result<()> {
        match self {
            WeakLabelSpace::Multiclass { k } | WeakLabelSpace::SemiSup { k } => check_k(*k),
            WeakLabelSpace::PartialSet { k, m } | WeakLabelSpace::SupersetSet { k, m } => {
                Self::resolve_m(*k, Some(*m)).map(|_| ())
            }
            WeakLabelSpace::Pu => Ok(()),
            WeakLabelSpace::MultiAnnotator { n, inner } => {
                Self::multi_annotator(*n, (**inner).clone()).map(|_| ())
            }
            WeakLabelSpace::Unified {
                n,
                k,
                m,
                allow_abstain,
            } => Self::unified(*n, *k, Some(*m), *allow_abstain).map(|_| ()),
        }
    }

    /// Number of clean classes the space is defined over.
    pub fn classes(&self) -> usize {
        match self {
            WeakLabelSpace::Multiclass { k }
            | WeakLabelSpace::PartialSet { k, .. }
            | WeakLabelSpace::SupersetSet { k, .. }
            | WeakLabelSpace::SemiSup { k }
            | WeakLabelSpace::Unified { k, .. } => *k,
            WeakLabelSpace::Pu => 2,
            WeakLabelSpace::MultiAnnotator { inner, .. } => inner.classes(),
        }
    }

    /// Number of annotators (1 for single-annotator spaces).
    pub fn annotators(&self) -> usize {
        match self {
            WeakLabelSpace::MultiAnnotator { n, .. } | WeakLabelSpace::Unified { n, .. } => *n,
            _ => 1,
        }
    }

    /// Maximum candidate-set size, where the space has one.
    pub fn max_candidates(&self) -> Option<usize> {
        match self {
            WeakLabelSpace::PartialSet { m, .. }
            | WeakLabelSpace::SupersetSet { m, .. }
            | WeakLabelSpace::Unified { m, .. } => Some(*m),
            WeakLabelSpace::MultiAnnotator { inner, .. } => inner.max_candidates(),
            _ => None,
        }
    }

    /// Number of rows of a mixing matrix over this space.
    pub fn cardinality(&self) -> Result<usize> {
        match self {
            WeakLabelSpace::Multiclass { k } => Ok(*k),
            WeakLabelSpace::PartialSet { k, .. } | WeakLabelSpace::SupersetSet { k, .. } => {
                check_k(*k)?;
                usize::try_from(full_mask(*k) - 1).map_err(|_| Error::Overflow)
            }
            WeakLabelSpace::SemiSup { k } => Ok(k + 1),
            WeakLabelSpace::Pu => Ok(3),
            WeakLabelSpace::MultiAnnotator { n, inner } => checked_pow(inner.cardinality()?, *n),
            WeakLabelSpace::Unified { n, .. } => checked_pow(self.unified_per_annotator()?, *n),
        }
    }

    fn unified_per_annotator(&self) -> Result<usize> {
        match self {
            WeakLabelSpace::Unified {
                k, allow_abstain, ..
            } => {
                check_k(*k)?;
                let sets = usize::try_from(full_mask(*k) - 1).map_err(|_| Error::Overflow)?;
                sets.checked_add(usize::from(*allow_abstain))
                    .ok_or(Error::Overflow)
            }
            _ => unreachable!("only called on unified spaces"),
        }
    }

    /// Name of the canonical row order, as recorded in matrix files.
    pub fn row_order(&self) -> &'static str {
        match self {
            WeakLabelSpace::Multiclass { .. }
            | WeakLabelSpace::SemiSup { .. }
            | WeakLabelSpace::Pu => "classes-then-abstain",
            WeakLabelSpace::MultiAnnotator { inner, .. } => inner.row_order(),
            _ => "canonical-bitmask",
        }
    }

    /// Canonical row of a label. Checks shape and index ranges but not the
    /// candidate-count bound `m` or superset coverage.
    pub fn row_of(&self, label: &WeakLabel) -> Result<usize> {
        let out = |what: &str| Error::OutOfSpace(format!("{label} in {self}: {what}"));
        match (self, label) {
            (WeakLabelSpace::Multiclass { k }, WeakLabel::Set(s)) => {
                if s.len() == 1 && s.max_class() < *k {
                    Ok(s.max_class())
                } else {
                    Err(out("expected a single class"))
                }
            }
            (
                WeakLabelSpace::PartialSet { k, .. } | WeakLabelSpace::SupersetSet { k, .. },
                WeakLabel::Set(s),
            ) => subset_to_row(*s, *k),
            (WeakLabelSpace::SemiSup { k }, WeakLabel::Set(s)) => {
                if s.len() == 1 && s.max_class() < *k {
                    Ok(s.max_class())
                } else {
                    Err(out("expected a single class"))
                }
            }
            (WeakLabelSpace::SemiSup { k }, WeakLabel::Abstain) => Ok(*k),
            (WeakLabelSpace::Pu, _) => WeakLabelSpace::SemiSup { k: 2 }.row_of(label),
            (WeakLabelSpace::MultiAnnotator { n, inner }, WeakLabel::Tuple(items)) => {
                if items.len() != *n {
                    return Err(out("wrong number of annotators"));
                }
                let base = inner.cardinality()?;
                let mut row = 0usize;
                for item in items {
                    if matches!(item, WeakLabel::Tuple(_)) {
                        return Err(out("nested tuple"));
                    }
                    row = row * base + inner.row_of(item)?;
                }
                Ok(row)
            }
            (
                WeakLabelSpace::Unified {
                    n,
                    k,
                    allow_abstain,
                    ..
                },
                WeakLabel::Tuple(items),
            ) => {
                if items.len() != *n {
                    return Err(out("wrong number of annotators"));
                }
                let base = self.unified_per_annotator()?;
                let abstain_row = base - 1;
                let mut row = 0usize;
                for item in items {
                    let r = match item {
                        WeakLabel::Set(s) => subset_to_row(*s, *k)?,
                        WeakLabel::Abstain if *allow_abstain => abstain_row,
                        WeakLabel::Abstain => return Err(out("abstention not allowed")),
                        WeakLabel::Tuple(_) => return Err(out("nested tuple")),
                    };
                    row = row * base + r;
                }
                Ok(row)
            }
            _ => Err(out("label kind does not belong to this space")),
        }
    }

    /// Inverse of [`row_of`](Self::row_of).
    pub fn label_at(&self, row: usize) -> Result<WeakLabel> {
        let rows = self.cardinality()?;
        if row >= rows {
            return Err(Error::OutOfSpace(format!("row {row} >= {rows} in {self}")));
        }
        Ok(match self {
            WeakLabelSpace::Multiclass { .. } => WeakLabel::class(row),
            WeakLabelSpace::PartialSet { k, .. } | WeakLabelSpace::SupersetSet { k, .. } => {
                WeakLabel::Set(row_to_subset(row, *k)?)
            }
            WeakLabelSpace::SemiSup { k } => {
                if row == *k {
                    WeakLabel::Abstain
                } else {
                    WeakLabel::class(row)
                }
            }
            WeakLabelSpace::Pu => WeakLabelSpace::SemiSup { k: 2 }.label_at(row)?,
            WeakLabelSpace::MultiAnnotator { n, inner } => {
                let base = inner.cardinality()?;
                let mut digits = vec![0; *n];
                let mut rest = row;
                for d in digits.iter_mut().rev() {
                    *d = rest % base;
                    rest /= base;
                }
                WeakLabel::Tuple(
                    digits
                        .into_iter()
                        .map(|d| inner.label_at(d))
                        .collect::<Result<_>>()?,
                )
            }
            WeakLabelSpace::Unified { n, k, .. } => {
                let base = self.unified_per_annotator()?;
                let sets = base - usize::from(self.allows_abstain());
                let mut items = vec![WeakLabel::Abstain; *n];
                let mut rest = row;
                for item in items.iter_mut().rev() {
                    let d = rest % base;
                    rest /= base;
                    if d < sets {
                        *item = WeakLabel::Set(row_to_subset(d, *k)?);
                    }
                }
                WeakLabel::Tuple(items)
            }
        })
    }

    fn allows_abstain(&self) -> bool {
        match self {
            WeakLabelSpace::SemiSup { .. } | WeakLabelSpace::Pu => true,
            WeakLabelSpace::Unified { allow_abstain, .. } => *allow_abstain,
            WeakLabelSpace::MultiAnnotator { inner, .. } => inner.allows_abstain(),
            _ => false,
        }
    }

    /// All labels of the space in canonical row order.
    pub fn labels(&self) -> Result<Vec<WeakLabel>> {
        (0..self.cardinality()?).map(|r| self.label_at(r)).collect()
    }

    /// Membership without the superset coverage condition.
    pub fn admits(&self, label: &WeakLabel) -> bool {
        if self.row_of(label).is_err() {
            return false;
        }
        match self.max_candidates() {
            Some(m) => set_sizes(label).all(|size| size <= m),
            None => true,
        }
    }

    /// Full membership test. Superset spaces (directly or per annotator) need
    /// the true label and additionally require every set to cover it.
    pub fn validate_membership(
        &self,
        label: &WeakLabel,
        true_label: Option<CleanLabel>,
    ) -> Result<bool> {
        let needs_truth = match self {
            WeakLabelSpace::SupersetSet { .. } => true,
            WeakLabelSpace::MultiAnnotator { inner, .. } => {
                matches!(**inner, WeakLabelSpace::SupersetSet { .. })
            }
            _ => false,
        };
        if !needs_truth {
            return Ok(self.admits(label));
        }
        let y = true_label.ok_or(Error::MissingTrueLabel)?;
        if !self.admits(label) {
            return Ok(false);
        }
        Ok(sets_of(label).all(|s| s.contains(y.index())))
    }
}

fn sets_of(label: &WeakLabel) -> Box<dyn Iterator<Item = ClassSet> + '_> {
    match label {
        WeakLabel::Set(s) => Box::new(std::iter::once(*s)),
        WeakLabel::Abstain => Box::new(std::iter::empty()),
        WeakLabel::Tuple(items) => Box::new(items.iter().flat_map(sets_of)),
    }
}

fn set_sizes(label: &WeakLabel) -> impl Iterator<Item = usize> + '_ {
    sets_of(label).map(ClassSet::len)
}

impl fmt::Display for WeakLabelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeakLabelSpace::Multiclass { k } => write!(f, "multiclass:{k}"),
            WeakLabelSpace::PartialSet { k, m } => write!(f, "partial:{k}:{m}"),
            WeakLabelSpace::SupersetSet { k, m } => write!(f, "superset:{k}:{m}"),
            WeakLabelSpace::SemiSup { k } => write!(f, "semisup:{k}"),
            WeakLabelSpace::Pu => f.write_str("pu"),
            WeakLabelSpace::MultiAnnotator { n, inner } => write!(f, "multi:{n}:{inner}"),
            WeakLabelSpace::Unified {
                n,
                k,
                m,
                allow_abstain,
            } => {
                write!(f, "unified:{n}:{k}:{m}")?;
                if *allow_abstain {
                    f.write_str(":abstain")?;
                }
                Ok(())
            }
        }
    }
}

/// Compact textual form used on the command line, e.g. `partial:3`,
/// `superset:4:2`, `semisup:3`, `pu`, `multi:2:multiclass:3`,
/// `unified:3:4:2:abstain`.
impl FromStr for WeakLabelSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            offset: 0,
            message: format!("space `{s}`: {msg}"),
        };
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad("expected an integer"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["multiclass", k] => Self::multiclass(num(k)?),
            ["partial", k] => Self::partial(num(k)?, None),
            ["partial", k, m] => Self::partial(num(k)?, Some(num(m)?)),
            ["superset", k] => Self::superset(num(k)?, None),
            ["superset", k, m] => Self::superset(num(k)?, Some(num(m)?)),
            ["semisup", k] => Self::semi_supervised(num(k)?),
            ["pu"] => Ok(WeakLabelSpace::Pu),
            ["multi", n, rest @ ..] if !rest.is_empty() => {
                Self::multi_annotator(num(n)?, rest.join(":").parse()?)
            }
            ["unified", n, k, m] => Self::unified(num(n)?, num(k)?, Some(num(m)?), false),
            ["unified", n, k, m, "abstain"] => {
                Self::unified(num(n)?, num(k)?, Some(num(m)?), true)
            }
            _ => Err(bad("unrecognised form")),
        }
    }
}

/// Formats a weak label for CSV cells: classes joined by `|`, `-` for an
/// abstention, annotators joined by `;`.
pub fn format_weak_label(label: &WeakLabel) -> String {
    label.to_string()
}

/// Parses the textual form produced by [`format_weak_label`] and checks it
/// against `space` (superset coverage excepted, since the true label is not
/// known here).
pub fn parse_weak_label(text: &str, space: &WeakLabelSpace) -> Result<WeakLabel> {
    let tuple_space = matches!(
        space,
        WeakLabelSpace::Unified { .. } | WeakLabelSpace::MultiAnnotator { .. }
    );
    let label = if tuple_space {
        let mut items = Vec::new();
        let mut offset = 0;
        for part in text.split(';') {
            items.push(parse_single(part, offset)?);
            offset += part.len() + 1;
        }
        WeakLabel::Tuple(items)
    } else {
        parse_single(text, 0)?
    };
    if space.admits(&label) {
        Ok(label)
    } else {
        Err(Error::OutOfSpace(format!("`{text}` is not in {space}")))
    }
}

fn parse_single(text: &str, base: usize) -> Result<WeakLabel> {
    if text == "-" {
        return Ok(WeakLabel::Abstain);
    }
    if text.is_empty() {
        return Err(Error::Parse {
            offset: base,
            message: "empty label".into(),
        });
    }
    let mut mask = 0u64;
    let mut offset = base;
    for part in text.split('|') {
        let class: usize = if !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()) {
            part.parse().map_err(|_| Error::Parse {
                offset,
                message: format!("class index `{part}` is too large"),
            })?
        } else {
            let bad = part
                .bytes()
                .position(|b| !b.is_ascii_digit())
                .unwrap_or(0);
            return Err(Error::Parse {
                offset: offset + bad,
                message: format!("expected a class index, found `{part}`"),
            });
        };
        if class >= MAX_CLASSES {
            return Err(Error::Parse {
                offset,
                message: format!("class index {class} exceeds {}", MAX_CLASSES - 1),
            });
        }
        if mask & (1 << class) != 0 {
            return Err(Error::Parse {
                offset,
                message: format!("class {class} repeated"),
            });
        }
        mask |= 1 << class;
        offset += part.len() + 1;
    }
    Ok(WeakLabel::Set(ClassSet(mask)))
}
