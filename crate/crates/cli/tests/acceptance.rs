//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::fs;
use std::io::Write as _;
use std::process::{Command, Output};
use std::time::Instant;

use weaklab::aggregation::{
    aggregate_gmil, aggregate_mil, label_bags, Aggregation, BagAssignment, BagLabel, BagStrategy,
};
use weaklab::analysis::{
    clean_posterior, compare_matrices, estimate_mixing, pu_to_llp, reconstruction_matrix,
    weak_distribution, ClassPrior,
};
use weaklab::dataset_io::{write_matrix_json, Dataset};
use weaklab::framework::NamedSetting;
use weaklab::label_space::{row_to_subset, subset_to_row};
use weaklab::mixing::{
    classify_noise, template_flip_binary, template_flip_symmetric, template_pu, template_ssl,
    template_superset_uniform, STOCHASTIC_TOLERANCE,
};
use weaklab::rng::{RngKey, SplitMix64};
use weaklab::weakening::{weaken_dataset, CategoricalSampler, WeakeningSpec};
use weaklab::{ClassSet, CleanLabel, Error, MixingMatrix, NoiseClass, WeakLabel, WeakLabelSpace};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fidelity_templates() -> Vec<MixingMatrix> {
    vec![
        template_flip_binary(0.1, 0.2).unwrap(),
        template_flip_symmetric(4, 0.3).unwrap(),
        template_ssl(3, &[0.2, 0.5, 0.8]).unwrap(),
        template_superset_uniform(3, 0.4).unwrap(),
    ]
}

fn grid_templates() -> Result<Vec<MixingMatrix>, String> {
    let mut out = Vec::new();
    let err = |what: String| move |e: Error| format!("{what}: {e}");
    for &a in &GRID {
        for &b in &GRID {
            out.push(template_flip_binary(a, b).map_err(err(format!("flip_binary({a}, {b})")))?);
            out.push(template_ssl(2, &[a, b]).map_err(err(format!("ssl(2, [{a}, {b}])")))?);
            for &c in &GRID {
                out.push(template_ssl(3, &[a, b, c]).map_err(err(format!("ssl(3, [{a}, {b}, {c}])")))?);
            }
        }
        out.push(template_pu(a).map_err(err(format!("pu({a})")))?);
        for k in 2..=6 {
            out.push(template_flip_symmetric(k, a).map_err(err(format!("flip_symmetric({k}, {a})")))?);
        }
        // p_exact = 0 and k = 2 with p_exact < 1 are rejected by design
        if a > 0.0 {
            for k in 3..=6 {
                out.push(
                    template_superset_uniform(k, a)
                        .map_err(err(format!("superset_uniform({k}, {a})")))?,
                );
            }
        }
    }
    out.push(template_superset_uniform(2, 1.0).map_err(|e| e.to_string())?);
    Ok(out)
}

fn ac1_stochasticity() -> Outcome {
    let templates = grid_templates()?;
    for t in &templates {
        for c in 0..t.classes() {
            let s: f64 = t.column(c).iter().sum();
            ensure((s - 1.0).abs() <= STOCHASTIC_TOLERANCE, || {
                format!("{} column {c} sums to {s}", t.space())
            })?;
        }
        MixingMatrix::from_rows(&t.to_rows(), t.space().clone())
            .map_err(|e| format!("revalidating {}: {e}", t.space()))?;
    }

    let mut corrupted: Vec<(String, Vec<Vec<f64>>, WeakLabelSpace, &str)> = Vec::new();
    let bases = [
        template_flip_binary(0.1, 0.2).unwrap(),
        template_flip_symmetric(3, 0.3).unwrap(),
        template_flip_symmetric(5, 0.5).unwrap(),
        template_ssl(3, &[0.2, 0.5, 0.8]).unwrap(),
        template_pu(0.4).unwrap(),
        template_superset_uniform(3, 0.4).unwrap(),
        template_superset_uniform(4, 0.25).unwrap(),
    ];
    for t in &bases {
        // negative entry balanced by its column so the sum stays 1
        let mut rows = t.to_rows();
        let c = t.classes() - 1;
        let r = (0..rows.len()).rev().find(|&r| rows[r][c] > 0.0).unwrap();
        let shift = rows[r][c] + 0.1;
        rows[r][c] -= shift;
        let other = (0..rows.len()).find(|&o| o != r && rows[o][c] > 0.0).unwrap_or((r + 1) % rows.len());
        rows[other][c] += shift;
        corrupted.push((format!("negative entry in {}", t.space()), rows, t.space().clone(), "negative"));

        let mut rows = t.to_rows();
        for row in rows.iter_mut() {
            row[0] *= 0.98;
        }
        corrupted.push((format!("column sum 0.98 in {}", t.space()), rows, t.space().clone(), "sum"));
    }
    let sup3 = template_superset_uniform(3, 0.4).unwrap();
    let mut rows = sup3.to_rows();
    // move mass of class 0 onto {1, 2}, which does not contain it
    let bad = subset_to_row(ClassSet::from_classes([1, 2]).unwrap(), 3).unwrap();
    rows[0][0] -= 0.1;
    rows[bad][0] += 0.1;
    corrupted.push(("superset set missing the class".into(), rows, sup3.space().clone(), "support"));
    let pu = template_pu(0.4).unwrap();
    let mut rows = pu.to_rows();
    rows[2][1] = 0.9;
    rows[0][1] = 0.1;
    corrupted.push(("PU negative labelled positive".into(), rows, WeakLabelSpace::Pu, "support"));
    let mut rows = pu.to_rows();
    rows[2][0] = 0.3;
    rows[1][0] = 0.1;
    corrupted.push(("PU negative observed".into(), rows, WeakLabelSpace::Pu, "support"));
    let sup4 = template_superset_uniform(4, 0.25).unwrap();
    let mut rows = sup4.to_rows();
    let bad = subset_to_row(ClassSet::from_classes([0, 1, 2]).unwrap(), 4).unwrap();
    rows[bad][3] = rows[bad][0];
    let ok_row = subset_to_row(ClassSet::singleton(3), 4).unwrap();
    rows[ok_row][3] -= rows[bad][3];
    corrupted.push(("superset k=4 set missing class 3".into(), rows, sup4.space().clone(), "support"));
    let m1 = WeakLabelSpace::partial(3, Some(1)).unwrap();
    let mut rows = vec![vec![0.0; 3]; 6];
    for c in 0..3 {
        rows[subset_to_row(ClassSet::singleton(c), 3).unwrap()][c] = 0.8;
        rows[subset_to_row(ClassSet::from_classes([c, (c + 1) % 3]).unwrap(), 3).unwrap()][c] = 0.2;
    }
    corrupted.push(("pair under m = 1".into(), rows, m1, "support"));
    let multi = WeakLabelSpace::multi_annotator(2, WeakLabelSpace::Pu).unwrap();
    let mut rows = vec![vec![0.0; 2]; 9];
    rows[0][0] = 1.0; // (0;0) for the positive class
    rows[1][1] = 1.0; // (0;1) puts an observed negative in the tuple
    corrupted.push(("annotator tuple with an observed negative".into(), rows, multi, "support"));

    ensure(corrupted.len() == 20, || format!("{} corrupted cases", corrupted.len()))?;
    for (name, rows, space, kind) in &corrupted {
        let got = MixingMatrix::from_rows(rows, space.clone());
        let ok = matches!(
            (kind, &got),
            (&"negative", Err(Error::NegativeEntry { .. }))
                | (&"sum", Err(Error::NotStochastic { column: 0, .. }))
                | (&"support", Err(Error::SupportViolation { .. }))
        );
        ensure(ok, || format!("{name}: expected {kind} error, got {got:?}"))?;
    }
    Ok(format!("{} templates valid, 20 corruptions rejected", templates.len()))
}

fn ac2_bijection() -> Outcome {
    for k in 2..=12usize {
        let space = WeakLabelSpace::partial(k, None).map_err(|e| e.to_string())?;
        let expected = (1usize << k) - 2;
        let card = space.cardinality().map_err(|e| e.to_string())?;
        ensure(card == expected, || format!("k={k}: cardinality {card}"))?;
        for row in 0..expected {
            let set = row_to_subset(row, k).map_err(|e| e.to_string())?;
            let back = subset_to_row(set, k).map_err(|e| e.to_string())?;
            ensure(back == row, || format!("k={k}: row {row} -> {back}"))?;
            let label = space.label_at(row).map_err(|e| e.to_string())?;
            ensure(space.row_of(&label) == Ok(row), || format!("k={k}: label row {row}"))?;
        }
        for mask in 1..(1u64 << k) - 1 {
            let set = ClassSet::from_mask(mask).unwrap();
            let row = subset_to_row(set, k).map_err(|e| e.to_string())?;
            ensure(row_to_subset(row, k) == Ok(set), || format!("k={k}: mask {mask}"))?;
        }
    }
    Ok("k = 2..12 exhaustive".into())
}

fn ac3_sampling() -> Outcome {
    let n = 100_000u64;
    let mut worst = 0.0f64;
    for t in fidelity_templates() {
        let sampler = CategoricalSampler::new(&t).map_err(|e| e.to_string())?;
        for c in 0..t.classes() {
            let mut counts = vec![0u64; t.rows()];
            for i in 0..n {
                counts[sampler.row_for(c, RngKey::new(42, i, 0).uniform())] += 1;
            }
            for (r, &cnt) in counts.iter().enumerate() {
                let d = (cnt as f64 / n as f64 - t.get(r, c)).abs();
                worst = worst.max(d);
                ensure(d <= 0.01, || format!("{} class {c} row {r}: deviation {d}", t.space()))?;
            }
        }
    }
    Ok(format!("max deviation {worst:.5}"))
}

fn ac4_coverage() -> Outcome {
    let t = template_superset_uniform(4, 0.3).unwrap();
    let sampler = CategoricalSampler::new(&t).map_err(|e| e.to_string())?;
    let mut misses = 0u64;
    for i in 0..100_000u64 {
        let y = (i % 4) as usize;
        match sampler.sample(y, RngKey::new(42, i, 0)) {
            WeakLabel::Set(s) if s.contains(y) => {}
            _ => misses += 1,
        }
    }
    ensure(misses == 0, || format!("{misses} draws missed the clean label"))?;
    Ok("100000 draws, 0 exceptions".into())
}

fn ac5_estimation() -> Outcome {
    let n = 100_000usize;
    let mut templates = fidelity_templates();
    templates.push(template_pu(0.4).unwrap());
    let mut worst = 0.0f64;
    for t in templates {
        let k = t.classes();
        let ys: Vec<CleanLabel> = (0..n).map(|i| CleanLabel::new(i % k, k).unwrap()).collect();
        let data = Dataset::from_labels(&ys, k).map_err(|e| e.to_string())?;
        let weak = weaken_dataset(&data, &WeakeningSpec::iin(t.clone(), 42)).map_err(|e| e.to_string())?;
        let pairs: Vec<_> = ys.into_iter().zip(weak.weak).collect();
        let est = estimate_mixing(&pairs, t.space(), 0.0).map_err(|e| e.to_string())?;
        let d = compare_matrices(&est, &t).map_err(|e| e.to_string())?;
        worst = worst.max(d);
        ensure(d <= 0.02, || format!("{}: L-inf {d}", t.space()))?;
    }
    Ok(format!("max L-inf {worst:.5}"))
}

fn ac6_posterior() -> Outcome {
    let mut templates = fidelity_templates();
    templates.push(template_pu(0.4).unwrap());
    templates.push(template_superset_uniform(4, 0.25).unwrap());
    templates.push(template_ssl(4, &[0.1, 0.2, 0.3, 0.4]).unwrap());
    let mut checked = 0;
    for t in &templates {
        let k = t.classes();
        let mut priors = vec![ClassPrior::uniform(k).unwrap()];
        if k == 2 {
            priors.push(ClassPrior::new(vec![0.9, 0.1]).unwrap());
        }
        for prior in &priors {
            let labels = t.space().labels().map_err(|e| e.to_string())?;
            // joint table P(Y = i, W = w), enumerated label by label
            for w in &labels {
                let joint: Vec<f64> = (0..k)
                    .map(|i| t.probability(w, i).unwrap() * prior.probabilities()[i])
                    .collect();
                let marginal: f64 = joint.iter().sum();
                match clean_posterior(t, prior, w) {
                    Ok(p) => {
                        for i in 0..k {
                            let d = (p[i] - joint[i] / marginal).abs();
                            ensure(d <= 1e-12, || format!("{} w={w} class {i}: {d}", t.space()))?;
                        }
                    }
                    Err(Error::ZeroEvidence) => {
                        ensure(marginal == 0.0, || format!("{} w={w}: spurious ZeroEvidence", t.space()))?
                    }
                    Err(e) => return Err(format!("{} w={w}: {e}", t.space())),
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (template, prior, weak label) cases"))
}

fn ac7_reconstruction() -> Outcome {
    let mut templates = fidelity_templates();
    templates.push(template_pu(0.4).unwrap());
    templates.push(MixingMatrix::identity(3).unwrap());
    for t in &templates {
        let k = t.classes();
        let r = reconstruction_matrix(t).map_err(|e| format!("{}: {e}", t.space()))?;
        let rt = r.entries() * t.entries();
        for i in 0..k {
            for j in 0..k {
                let e = if i == j { 1.0 } else { 0.0 };
                ensure((rt[(i, j)] - e).abs() <= 1e-9, || {
                    format!("{}: (RT)[{i},{j}] = {}", t.space(), rt[(i, j)])
                })?;
            }
        }
        let weights: Vec<f64> = (1..=k).map(|i| i as f64).collect();
        let prior = ClassPrior::from_weights(&weights).unwrap();
        let back = r
            .apply(&weak_distribution(t, &prior).unwrap())
            .map_err(|e| e.to_string())?;
        for (b, p) in back.iter().zip(prior.probabilities()) {
            ensure((b - p).abs() <= 1e-9, || format!("{}: recovered {b} vs {p}", t.space()))?;
        }
    }
    let deficient = template_flip_binary(0.5, 0.5).unwrap();
    match reconstruction_matrix(&deficient) {
        Err(Error::RankDeficient { rank: 1, required: 2 }) => {}
        other => return Err(format!("flip(0.5, 0.5): {other:?}")),
    }
    Ok(format!("{} full-rank templates, rank deficiency detected", templates.len()))
}

fn ac8_reductions() -> Outcome {
    for g in [0.0, 0.3, 1.0] {
        let pu = template_pu(g).unwrap();
        let ssl = template_ssl(2, &[g, 1.0]).unwrap();
        let d = compare_matrices(&pu, &ssl).map_err(|e| format!("pu({g}): {e}"))?;
        ensure(d == 0.0, || format!("pu({g}) vs ssl(2, [{g}, 1]): {d}"))?;
    }
    let bags = pu_to_llp(5, 10, 0.3).map_err(|e| e.to_string())?;
    ensure(bags == [[5, 0], [3, 7]], || format!("pu_to_llp: {bags:?}"))?;
    for size in 1..=8usize {
        for mask in 0u32..(1 << size) {
            let bag: Vec<CleanLabel> = (0..size)
                .map(|i| CleanLabel::new(((mask >> i) & 1) as usize, 2).unwrap())
                .collect();
            let a = aggregate_mil(&bag, 2, 1).map_err(|e| e.to_string())?;
            let b = aggregate_gmil(&bag, 2, 1, 1).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("bag {mask:b}: MIL {a} vs GMIL {b}"))?;
        }
    }
    Ok("PU = SSL(g, 1), two-bag LLP, MIL = GMIL(r=1)".into())
}

fn ac9_conservation() -> Outcome {
    let n = 10_000;
    let k = 4;
    let mut rng = SplitMix64::new(42);
    let rows: Vec<Vec<String>> = (0..n)
        .map(|_| {
            let key = format!("g{}", rng.below(37));
            vec![key, rng.below(k).to_string()]
        })
        .collect();
    let data = Dataset::new(vec!["group".into(), "label".into()], rows, k).map_err(|e| e.to_string())?;
    let labels = data.class_labels().map_err(|e| e.to_string())?;
    let histogram = data.histogram().map_err(|e| e.to_string())?;
    for strategy in [
        BagStrategy::RandomPartition { bag_size: 17, seed: 42 },
        BagStrategy::Contiguous { bag_size: 23 },
        BagStrategy::ByKey { column: "group".into() },
    ] {
        let a = BagAssignment::build(n, &strategy, Some(&data)).map_err(|e| e.to_string())?;
        let out = label_bags(&labels, &a, &Aggregation::Llp { k, normalized: false })
            .map_err(|e| e.to_string())?;
        let mut total = vec![0u64; k];
        for l in &out {
            let BagLabel::Counts(c) = l else { return Err("expected counts".into()) };
            for (t, v) in total.iter_mut().zip(c) {
                *t += v;
            }
        }
        ensure(total == histogram, || format!("{strategy:?}: {total:?} vs {histogram:?}"))?;
    }
    Ok("random_partition, contiguous, by_key".into())
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weaklab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ac10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut csv = String::from("x0,label\n");
    let mut rng = SplitMix64::new(7);
    for i in 0..20_000 {
        csv.push_str(&format!("{},{}\n", rng.next_f64(), i % 3));
    }
    fs::write(d.join("clean.csv"), csv).map_err(|e| e.to_string())?;
    write_matrix_json(d.join("t.json"), &template_superset_uniform(3, 0.4).unwrap())
        .map_err(|e| e.to_string())?;
    fs::write(
        d.join("config.json"),
        r#"{"seed": 42, "mode": "iin", "matrix": "t.json"}"#,
    )
    .map_err(|e| e.to_string())?;
    let p = |name: &str| d.join(name).to_string_lossy().into_owned();
    let mut outputs = Vec::new();
    for (out, extra) in [("a.csv", None), ("b.csv", None), ("c.csv", Some("--sequential"))] {
        let mut args = vec!["weaken".to_string(), p("config.json"), p("clean.csv"), p(out)];
        args.extend(extra.map(String::from));
        let o = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
        outputs.push(fs::read(d.join(out)).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], || "two parallel runs differ".into())?;
    ensure(outputs[0] == outputs[2], || "parallel and sequential runs differ".into())?;
    Ok(format!("{} identical bytes x3", outputs[0].len()))
}

fn ac11_symmetry() -> Outcome {
    for k in 2..=6 {
        for rho in GRID {
            let t = template_flip_symmetric(k, rho).unwrap();
            let c = classify_noise(&t, STOCHASTIC_TOLERANCE).map_err(|e| e.to_string())?;
            ensure(c == NoiseClass::Symmetric, || format!("flip_symmetric({k}, {rho}): {c:?}"))?;
        }
    }
    let asym = classify_noise(&template_flip_binary(0.1, 0.2).unwrap(), STOCHASTIC_TOLERANCE);
    ensure(asym == Ok(NoiseClass::Asymmetric), || format!("flip(0.1, 0.2): {asym:?}"))?;
    // off-diagonal entries 0 and 1e-9 differ by exactly the tolerance
    let edge2 = template_flip_binary(0.0, 1e-9).unwrap();
    let space3 = WeakLabelSpace::multiclass(3).unwrap();
    let edge3 = MixingMatrix::from_rows(
        &[
            vec![1.0 - 1e-9, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1e-9, 0.0, 1.0],
        ],
        space3,
    )
    .map_err(|e| e.to_string())?;
    for (name, t) in [("binary", edge2), ("k=3", edge3)] {
        let c = classify_noise(&t, STOCHASTIC_TOLERANCE);
        ensure(c == Ok(NoiseClass::Symmetric), || format!("{name} boundary: {c:?}"))?;
    }
    Ok("k = 2..6 symmetric, flip(0.1, 0.2) asymmetric, boundary symmetric".into())
}

fn ac12_describe() -> Outcome {
    let combos: &[&[&str]] = &[
        &[],
        &["--classes", "3", "--candidate-sets"],
        &["--unsupervised"],
        &["--classes", "3", "--unsupervised"],
        &["--annotators", "3"],
        &["--annotators", "2", "--unsupervised"],
        &["--aggregation"],
    ];
    let mut seen = String::new();
    for flags in combos {
        let mut args = vec!["describe", "--json"];
        args.extend_from_slice(flags);
        let o = run(&args);
        ensure(o.status.success(), || format!("{flags:?}: {}", String::from_utf8_lossy(&o.stderr)))?;
        seen.push_str(&String::from_utf8_lossy(&o.stdout));
    }
    for s in NamedSetting::ALL {
        ensure(seen.contains(&format!("\"{}\"", s.name())), || format!("{} unreachable", s.name()))?;
    }
    let o = run(&["describe", "--classes", "3", "--aggregation", "--candidate-sets"]);
    let err = String::from_utf8_lossy(&o.stderr);
    ensure(o.status.code() == Some(1) && err.contains("incompatible"), || {
        format!("incompatible pair: status {:?}, stderr {err}", o.status.code())
    })?;
    Ok(format!("{} settings reached, incompatible pair rejected", NamedSetting::ALL.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("AC-1", "stochasticity suite", ac1_stochasticity),
        ("AC-2", "subset-index bijection", ac2_bijection),
        ("AC-3", "sampling fidelity", ac3_sampling),
        ("AC-4", "superset coverage", ac4_coverage),
        ("AC-5", "estimator recovery", ac5_estimation),
        ("AC-6", "posterior oracle equivalence", ac6_posterior),
        ("AC-7", "reconstruction", ac7_reconstruction),
        ("AC-8", "reductions", ac8_reductions),
        ("AC-9", "aggregation conservation", ac9_conservation),
        ("AC-10", "determinism", ac10_determinism),
        ("AC-11", "symmetry classifier", ac11_symmetry),
        ("AC-12", "describe coverage", ac12_describe),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let start = Instant::now();
    let mut failed = 0;
    let mut stdout = std::io::stdout();
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let line = match outcome {
            Ok(detail) => format!("[PASS] {id} {name}: {detail} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                format!("[FAIL] {id} {name}: {why} ({secs:.2}s)")
            }
        };
        writeln!(stdout, "{line}").unwrap();
    }
    writeln!(
        stdout,
        "acceptance: {} failed, total {:.2}s",
        failed,
        start.elapsed().as_secs_f64()
    )
    .unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
