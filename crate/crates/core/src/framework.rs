//! Describing an annotation process along the nine framework dimensions and
//! mapping it to named weak supervision settings.
//!
//! Rejected combinations (first dimension, second dimension):
//!
//! | first                     | second                    | reason                                         |
//! |---------------------------|---------------------------|------------------------------------------------|
//! | `aggregation=yes`         | `candidate_classes>1`     | bag labels summarise clean labels, not sets    |
//! | `aggregation=yes`         | `annotators>1`            | one bag label per bag, no per-annotator view   |
//! | `aggregation=yes`         | `unsupervised=yes`        | every bag receives a label                     |
//! | `classes=binary`          | `candidate_classes>1`     | the only multi-class set would be `{0, 1}`     |
//! | `multi_label=yes`         | `candidate_classes>1`     | candidate sets assume one true class           |
//! | `bag_label=...`           | `aggregation=no`          | bag label kinds only apply to bags             |
//! | `no_negatives=yes`        | `unsupervised=no`         | unobserved negatives must be left unlabelled   |
//! | `no_negatives=yes`        | `classes=multiclass`      | positive/negative split needs two classes      |

use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::label_space::WeakLabelSpace;
use crate::mixing::Setting;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BagLabelKind {
    /// One presence bit per bag.
    Binary,
    /// Class counts or proportions per bag.
    Proportions,
}

/// Answers to the framework questions plus two optional refinements
/// (`bag_label`, `no_negatives`) that narrow the matching settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameworkDescriptor {
    pub classes: usize,
    pub multi_label: bool,
    pub unsupervised: bool,
    pub soft_labels: bool,
    pub annotators: usize,
    pub candidate_sets: bool,
    pub aggregation: bool,
    pub class_dependent: bool,
    pub instance_dependent: bool,
    pub bag_label: Option<BagLabelKind>,
    pub no_negatives: bool,
}

impl Default for FrameworkDescriptor {
    fn default() -> Self {
        FrameworkDescriptor {
            classes: 2,
            multi_label: false,
            unsupervised: false,
            soft_labels: false,
            annotators: 1,
            candidate_sets: false,
            aggregation: false,
            class_dependent: false,
            instance_dependent: false,
            bag_label: None,
            no_negatives: false,
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl FrameworkDescriptor {
    fn class_answer(&self) -> String {
        if self.classes == 2 {
            "binary".into()
        } else {
            format!("multiclass (k = {})", self.classes)
        }
    }

    fn class_tag(&self) -> &'static str {
        if self.classes == 2 {
            "classes=binary"
        } else {
            "classes=multiclass"
        }
    }

    /// Rejects unsupported combinations, reporting the first conflicting pair.
    pub fn validate(&self) -> Result<()> {
        crate::label_space::check_k(self.classes)?;
        if self.annotators == 0 {
            return Err(Error::InvalidSpace("at least one annotator is required".into()));
        }
        let conflict = |a: &str, b: &str| {
            Err(Error::IncompatibleDimensions {
                first: a.into(),
                second: b.into(),
            })
        };
        if self.aggregation {
            if self.candidate_sets {
                return conflict("aggregation=yes", "candidate_classes>1");
            }
            if self.annotators > 1 {
                return conflict("aggregation=yes", "annotators>1");
            }
            if self.unsupervised {
                return conflict("aggregation=yes", "unsupervised=yes");
            }
        }
        if self.candidate_sets && self.classes == 2 {
            return conflict("classes=binary", "candidate_classes>1");
        }
        if self.multi_label && self.candidate_sets {
            return conflict("multi_label=yes", "candidate_classes>1");
        }
        if self.bag_label.is_some() && !self.aggregation {
            return conflict("bag_label", "aggregation=no");
        }
        if self.no_negatives {
            if !self.unsupervised {
                return conflict("no_negatives=yes", "unsupervised=no");
            }
            if self.classes != 2 {
                return conflict("no_negatives=yes", self.class_tag());
            }
        }
        Ok(())
    }

    /// `(dimension, answer)` pairs in framework order.
    pub fn dimensions(&self) -> Vec<(&'static str, String)> {
        vec![
            ("number of classes", self.class_answer()),
            ("multi-label", yes_no(self.multi_label).into()),
            ("unsupervised", yes_no(self.unsupervised).into()),
            ("soft labels", yes_no(self.soft_labels).into()),
            ("number of annotators", self.annotators.to_string()),
            (
                "candidate classes",
                if self.candidate_sets { ">1" } else { "1" }.into(),
            ),
            ("aggregation", yes_no(self.aggregation).into()),
            ("class dependent", yes_no(self.class_dependent).into()),
            ("instance dependent", yes_no(self.instance_dependent).into()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NamedSetting {
    NoisyLabels,
    PartialLabels,
    SupersetLearning,
    ComplementaryLabels,
    SemiSupervised,
    PositiveUnlabelled,
    MultiPositiveUnlabelled,
    MultipleAnnotators,
    Unified,
    MultipleInstance,
    LabelProportions,
}

impl NamedSetting {
    pub const ALL: [NamedSetting; 11] = [
        NamedSetting::NoisyLabels,
        NamedSetting::PartialLabels,
        NamedSetting::SupersetLearning,
        NamedSetting::ComplementaryLabels,
        NamedSetting::SemiSupervised,
        NamedSetting::PositiveUnlabelled,
        NamedSetting::MultiPositiveUnlabelled,
        NamedSetting::MultipleAnnotators,
        NamedSetting::Unified,
        NamedSetting::MultipleInstance,
        NamedSetting::LabelProportions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedSetting::NoisyLabels => "Noisy Labels",
            NamedSetting::PartialLabels => "Partial Labels",
            NamedSetting::SupersetLearning => "Superset Learning",
            NamedSetting::ComplementaryLabels => "Complementary Labels",
            NamedSetting::SemiSupervised => "Semi-supervised Learning",
            NamedSetting::PositiveUnlabelled => "Positive-Unlabelled",
            NamedSetting::MultiPositiveUnlabelled => "Multi-Positive and Unlabelled",
            NamedSetting::MultipleAnnotators => "Multiple Annotators",
            NamedSetting::Unified => "Unified (annotators with sets or abstentions)",
            NamedSetting::MultipleInstance => "Multiple Instance Learning",
            NamedSetting::LabelProportions => "Learning from Label Proportions",
        }
    }
}

impl fmt::Display for NamedSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<Setting> for NamedSetting {
    fn from(s: Setting) -> Self {
        match s {
            Setting::NoisyLabels => NamedSetting::NoisyLabels,
            Setting::PartialLabels => NamedSetting::PartialLabels,
            Setting::Superset => NamedSetting::SupersetLearning,
            Setting::SemiSupervised => NamedSetting::SemiSupervised,
            Setting::PositiveUnlabelled => NamedSetting::PositiveUnlabelled,
            Setting::MultipleAnnotators => NamedSetting::MultipleAnnotators,
            Setting::Unified => NamedSetting::Unified,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub descriptor: FrameworkDescriptor,
    pub settings: Vec<NamedSetting>,
    /// Weak space in compact syntax; `None` for bag-level supervision.
    pub weak_space: Option<String>,
    /// Number of weak outcomes per instance; `None` if bag-level or too large.
    pub cardinality: Option<usize>,
    pub matrix_shape: String,
    pub noise: Option<String>,
    pub notes: Vec<String>,
}

/// Maps a descriptor to settings, weak space and matrix shape.
pub fn describe(d: &FrameworkDescriptor) -> Result<Report> {
    d.validate()?;
    let k = d.classes;
    let mut settings = Vec::new();
    let mut notes = Vec::new();
    let mut weak_space = None;
    let mut cardinality = None;
    let matrix_shape;

    if d.aggregation {
        match d.bag_label {
            Some(BagLabelKind::Binary) => settings.push(NamedSetting::MultipleInstance),
            Some(BagLabelKind::Proportions) => settings.push(NamedSetting::LabelProportions),
            None => {
                settings.push(NamedSetting::MultipleInstance);
                settings.push(NamedSetting::LabelProportions);
            }
        }
        matrix_shape = "none (one label per bag)".to_string();
        if settings.contains(&NamedSetting::MultipleInstance) && k > 2 {
            notes.push("bag presence is computed for one positive class at a time".into());
        }
    } else {
        let single = if d.candidate_sets {
            settings.extend([
                NamedSetting::PartialLabels,
                NamedSetting::SupersetLearning,
                NamedSetting::ComplementaryLabels,
            ]);
            WeakLabelSpace::partial(k, None)?
        } else if d.unsupervised {
            if k == 2 {
                if !d.no_negatives {
                    settings.push(NamedSetting::SemiSupervised);
                }
                settings.push(NamedSetting::PositiveUnlabelled);
            } else {
                settings.extend([
                    NamedSetting::SemiSupervised,
                    NamedSetting::MultiPositiveUnlabelled,
                ]);
            }
            if d.no_negatives {
                WeakLabelSpace::Pu
            } else {
                WeakLabelSpace::semi_supervised(k)?
            }
        } else {
            settings.push(NamedSetting::NoisyLabels);
            WeakLabelSpace::multiclass(k)?
        };
        let space = if d.annotators == 1 {
            single
        } else if d.candidate_sets {
            settings = vec![NamedSetting::Unified, NamedSetting::MultipleAnnotators];
            WeakLabelSpace::unified(d.annotators, k, None, d.unsupervised)?
        } else {
            if d.unsupervised {
                settings = vec![NamedSetting::Unified];
            } else {
                settings = vec![NamedSetting::NoisyLabels];
            }
            settings.push(NamedSetting::MultipleAnnotators);
            WeakLabelSpace::multi_annotator(d.annotators, single)?
        };
        let rows_per_annotator = match &space {
            WeakLabelSpace::MultiAnnotator { inner, .. } => inner.cardinality().ok(),
            other => other.cardinality().ok(),
        };
        matrix_shape = match (&space, rows_per_annotator) {
            (WeakLabelSpace::MultiAnnotator { n, .. }, Some(r)) => {
                format!("{n} matrices of {r}x{k}, one per annotator")
            }
            (_, Some(r)) => format!("{r}x{k}"),
            (_, None) => format!("too many rows to enumerate x{k}"),
        };
        cardinality = space.cardinality().ok();
        weak_space = Some(space.to_string());
    }

    let noise = if d.aggregation && !d.class_dependent && !d.instance_dependent {
        None
    } else {
        let symmetry = if d.class_dependent { "ASN" } else { "SN" };
        let dependence = if d.instance_dependent { "ID" } else { "II" };
        Some(format!("{dependence}-{symmetry}"))
    };
    if d.multi_label {
        notes.push("true labels are class sets; generation only supports one class per instance".into());
    }
    if d.soft_labels {
        notes.push("soft labels: metadata only, generation unsupported".into());
    }
    if d.instance_dependent && !d.aggregation {
        notes.push("instance dependence is generated with per-region matrices".into());
    }
    Ok(Report {
        descriptor: d.clone(),
        settings,
        weak_space,
        cardinality,
        matrix_shape,
        noise,
        notes,
    })
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut out = String::from("dimensions:\n");
        for (name, answer) in self.descriptor.dimensions() {
            out.push_str(&format!("  {name}: {answer}\n"));
        }
        out.push_str("settings:\n");
        for s in &self.settings {
            out.push_str(&format!("  {s}\n"));
        }
        if let Some(space) = &self.weak_space {
            out.push_str(&format!("weak space: {space}\n"));
        }
        match self.cardinality {
            Some(c) => out.push_str(&format!("weak space cardinality: {c}\n")),
            None if self.weak_space.is_some() => {
                out.push_str("weak space cardinality: too large to represent\n")
            }
            None => {}
        }
        out.push_str(&format!("mixing matrix shape: {}\n", self.matrix_shape));
        if let Some(n) = &self.noise {
            out.push_str(&format!("noise model: {n}\n"));
        }
        for note in &self.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let dims: serde_json::Map<String, Value> = self
            .descriptor
            .dimensions()
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::String(v)))
            .collect();
        json!({
            "dimensions": dims,
            "settings": self.settings.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "weak_space": self.weak_space,
            "cardinality": self.cardinality,
            "matrix_shape": self.matrix_shape,
            "noise": self.noise,
            "notes": self.notes,
        })
    }
}
