use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use weaklab::aggregation::aggregate_dataset;
use weaklab::analysis::{clean_posterior, compare_matrices, estimate_mixing, ClassPrior};
use weaklab::dataset_io::{
    read_clean_csv, read_config, read_matrix_json, read_weak_csv,
    write_bag_labels_csv, write_bags_csv, write_matrix_json, write_weak_csv, RunPlan,
};
use weaklab::framework::{describe, BagLabelKind, FrameworkDescriptor};
use weaklab::label_space::parse_weak_label;
use weaklab::mixing::{classify_noise, recognize_setting, STOCHASTIC_TOLERANCE};
use weaklab::weakening::{weaken_dataset_with, Execution, WeakeningMode};
use weaklab::{Error, MixingMatrix, WeakLabel, WeakLabelSpace};

#[derive(Parser)]
#[command(name = "weaklab", version, about = "Synthesize and analyze weakly supervised datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a matrix file is column-stochastic and respects its space
    Validate {
        matrix: PathBuf,
        /// Print the matrix with labelled rows
        #[arg(long)]
        show: bool,
    },
    /// Draw weak labels for a clean CSV as described by a config
    Weaken {
        config: PathBuf,
        input: PathBuf,
        output: PathBuf,
        /// Sample on one thread (output is identical either way)
        #[arg(long)]
        sequential: bool,
    },
    /// Group a clean CSV into bags and write bag labels
    Aggregate {
        config: PathBuf,
        input: PathBuf,
        bags: PathBuf,
        bag_labels: PathBuf,
    },
    /// Estimate a mixing matrix from a clean CSV and its weak counterpart
    Estimate(EstimateArgs),
    /// Clean-class posterior for one weak label
    Posterior {
        matrix: PathBuf,
        /// Comma-separated class probabilities, or `uniform`
        prior: String,
        /// Weak label, e.g. `2`, `0|2`, `-`, or `1;-` for annotator tuples
        #[arg(allow_hyphen_values = true)]
        weak_label: String,
    },
    /// Map answers to the framework questions onto named settings
    #[command(after_help = DESCRIBE_HELP)]
    Describe(DescribeArgs),
}

const DESCRIBE_HELP: &str = "\
Rejected combinations:
  --aggregation with --candidate-sets
  --aggregation with --annotators > 1
  --aggregation with --unsupervised
  --classes 2 with --candidate-sets
  --multi-label with --candidate-sets
  --bag-label without --aggregation
  --no-negatives without --unsupervised, or with --classes > 2";

#[derive(Args)]
struct EstimateArgs {
    clean: PathBuf,
    weak: PathBuf,
    output: PathBuf,
    /// Weak space in compact form, e.g. `multiclass:3`, `superset:4`, `multi:2:pu`
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    space: Option<WeakLabelSpace>,
    /// Take the weak space (and the reference matrix) from a generation config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Additive smoothing constant
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
    /// For annotator tuples, estimate the matrix of this annotator only
    #[arg(long)]
    annotator: Option<usize>,
    /// Matrix to compare the estimate against
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Where to write the deviation report (default: standard error)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BagLabelArg {
    Binary,
    Proportions,
}

#[derive(Args)]
struct DescribeArgs {
    /// Number of classes (2 = binary)
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long)]
    multi_label: bool,
    /// Annotators may leave instances unlabelled
    #[arg(long)]
    unsupervised: bool,
    #[arg(long)]
    soft_labels: bool,
    #[arg(long, default_value_t = 1)]
    annotators: usize,
    /// Annotations may cover more than one class
    #[arg(long)]
    candidate_sets: bool,
    /// Instances are labelled as groups
    #[arg(long)]
    aggregation: bool,
    #[arg(long)]
    class_dependent: bool,
    #[arg(long)]
    instance_dependent: bool,
    /// Kind of bag label (with --aggregation)
    #[arg(long, value_enum)]
    bag_label: Option<BagLabelArg>,
    /// Negatives are never labelled (binary, with --unsupervised)
    #[arg(long)]
    no_negatives: bool,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

/// Failure of a subcommand: `Usage` maps to exit code 2, `Failed` to 1.
enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Failed(render_error(&e))
    }
}

fn render_error(e: &Error) -> String {
    match e {
        Error::InBag { bag, source } => format!("bag {bag}: {}", render_error(source)),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { matrix, show } => validate(&matrix, show),
        Command::Weaken {
            config,
            input,
            output,
            sequential,
        } => weaken(&config, &input, &output, sequential),
        Command::Aggregate {
            config,
            input,
            bags,
            bag_labels,
        } => aggregate(&config, &input, &bags, &bag_labels),
        Command::Estimate(args) => estimate(&args),
        Command::Posterior {
            matrix,
            prior,
            weak_label,
        } => posterior(&matrix, &prior, &weak_label),
        Command::Describe(args) => describe_cmd(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn validate(path: &Path, show: bool) -> Result<(), Failure> {
    let t = read_matrix_json(path).map_err(|e| Failure::Failed(format!("{}: {}", path.display(), e)))?;
    let mut out = format!(
        "ok: {} x {} over {}; setting {}",
        t.rows(),
        t.classes(),
        t.space(),
        recognize_setting(&t)
    );
    if let Ok(noise) = classify_noise(&t, STOCHASTIC_TOLERANCE) {
        out.push_str(&format!("; noise {noise:?}").to_lowercase());
    }
    println!("{out}");
    if show {
        print!("{}", t.render_table());
    }
    Ok(())
}

fn load_plan(path: &Path) -> Result<RunPlan, Failure> {
    Ok(read_config(path)?)
}

fn weaken(config: &Path, input: &Path, output: &Path, sequential: bool) -> Result<(), Failure> {
    let plan = load_plan(config)?;
    let spec = plan
        .weakening
        .ok_or_else(|| Failure::Failed(format!("{}: config has no `mode`", config.display())))?;
    let data = read_clean_csv(input, spec.classes())?;
    let execution = if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let weak = weaken_dataset_with(&data, &spec, execution)
        .map_err(|e| Failure::Failed(format!("{}: {}", input.display(), e)))?;
    write_weak_csv(output, &weak)?;
    Ok(())
}

fn aggregate(config: &Path, input: &Path, bags: &Path, bag_labels: &Path) -> Result<(), Failure> {
    let plan = load_plan(config)?;
    let agg = plan.aggregation.ok_or_else(|| {
        Failure::Failed(format!("{}: config has no `aggregation`", config.display()))
    })?;
    let data = read_clean_csv(input, agg.aggregation.classes())?;
    let (assignment, labels) = aggregate_dataset(&data, &agg.strategy, &agg.aggregation)
        .map_err(|e| Failure::Failed(format!("{}: {}", input.display(), render_error(&e))))?;
    write_bags_csv(bags, &assignment)?;
    write_bag_labels_csv(bag_labels, &labels)?;
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let mut reference: Option<MixingMatrix> = None;
    let space = match (&args.space, &args.config) {
        (Some(space), None) => space.clone(),
        (None, Some(cfg)) => {
            let spec = load_plan(cfg)?.weakening.ok_or_else(|| {
                Failure::Failed(format!("{}: config has no `mode`", cfg.display()))
            })?;
            reference = match (spec.mode(), args.annotator) {
                (WeakeningMode::Iin(t), None) => Some(t.clone()),
                (WeakeningMode::MultiAnnotator(pool), Some(j)) => pool.matrices().get(j).cloned(),
                _ => None,
            };
            spec.output_space()?
        }
        _ => return Err(Failure::Usage("give exactly one of --space or --config".into())),
    };
    if let Some(path) = &args.reference {
        reference = Some(read_matrix_json(path)?);
    }
    let k = space.classes();
    let clean = read_clean_csv(&args.clean, k)?;
    let weak = read_weak_csv(&args.weak, k, &space)?;
    if clean.len() != weak.weak.len() {
        return Err(Failure::Failed(format!(
            "{} has {} rows but {} has {}",
            args.clean.display(),
            clean.len(),
            args.weak.display(),
            weak.weak.len()
        )));
    }
    let labels = clean.class_labels()?;
    let (pairs, target_space) = match args.annotator {
        None => (
            labels.into_iter().zip(weak.weak).collect::<Vec<_>>(),
            space,
        ),
        Some(j) => {
            let inner = match &space {
                WeakLabelSpace::MultiAnnotator { n, inner } if j < *n => (**inner).clone(),
                WeakLabelSpace::MultiAnnotator { n, .. } => {
                    return Err(Failure::Usage(format!("--annotator {j} but only {n} annotators")))
                }
                _ => return Err(Failure::Usage("--annotator needs an annotator-tuple space".into())),
            };
            let pairs = labels
                .into_iter()
                .zip(weak.weak)
                .map(|(y, w)| match w {
                    WeakLabel::Tuple(mut items) => (y, items.swap_remove(j)),
                    other => (y, other),
                })
                .collect();
            (pairs, inner)
        }
    };
    let estimated = estimate_mixing(&pairs, &target_space, args.smoothing)?;
    write_matrix_json(&args.output, &estimated)?;

    if let Some(reference) = reference {
        let report = deviation_report(&estimated, &reference, pairs.len())?;
        match &args.report {
            Some(path) => fs::write(path, report)
                .map_err(|e| Failure::Failed(format!("{}: {e}", path.display())))?,
            None => eprint!("{report}"),
        }
    }
    Ok(())
}

fn deviation_report(est: &MixingMatrix, reference: &MixingMatrix, n: usize) -> Result<String, Failure> {
    let linf = compare_matrices(est, reference)?;
    let mut out = format!("pairs: {n}\nmax abs deviation: {linf}\n");
    for c in 0..est.classes() {
        let col = est
            .column(c)
            .iter()
            .zip(reference.column(c))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.push_str(&format!("class {c}: {col}\n"));
    }
    Ok(out)
}

fn parse_prior(text: &str, k: usize) -> Result<ClassPrior, Failure> {
    if text == "uniform" {
        return Ok(ClassPrior::uniform(k)?);
    }
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::Usage(format!("prior `{text}` is not `uniform` or a list of decimals")))?;
    if values.len() != k {
        return Err(Failure::Usage(format!(
            "prior has {} entries but the matrix has {k} classes",
            values.len()
        )));
    }
    Ok(ClassPrior::new(values)?)
}

fn posterior(matrix: &Path, prior: &str, weak_label: &str) -> Result<(), Failure> {
    let t = read_matrix_json(matrix)
        .map_err(|e| Failure::Failed(format!("{}: {}", matrix.display(), e)))?;
    let prior = parse_prior(prior, t.classes())?;
    let w = parse_weak_label(weak_label, t.space())?;
    let p = clean_posterior(&t, &prior, &w)?;
    let line = p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    println!("{line}");
    Ok(())
}

fn describe_cmd(args: &DescribeArgs) -> Result<(), Failure> {
    let d = FrameworkDescriptor {
        classes: args.classes,
        multi_label: args.multi_label,
        unsupervised: args.unsupervised,
        soft_labels: args.soft_labels,
        annotators: args.annotators,
        candidate_sets: args.candidate_sets,
        aggregation: args.aggregation,
        class_dependent: args.class_dependent,
        instance_dependent: args.instance_dependent,
        bag_label: args.bag_label.map(|b| match b {
            BagLabelArg::Binary => BagLabelKind::Binary,
            BagLabelArg::Proportions => BagLabelKind::Proportions,
        }),
        no_negatives: args.no_negatives,
    };
    let report = describe(&d)?;
    if args.json {
        let text = serde_json::to_string_pretty(&report.to_json()).expect("JSON values always serialize");
        println!("{text}");
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}
