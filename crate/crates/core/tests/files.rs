use std::fs;

use weaklab::aggregation::{aggregate_dataset, Aggregation, BagStrategy};
use weaklab::dataset_io::{
    read_bag_labels_csv, read_bags_csv, read_clean_csv, read_matrix_json, read_weak_csv,
    write_bag_labels_csv, write_bags_csv, write_matrix_json, write_weak_csv, Dataset,
};
use weaklab::mixing::{template_flip_symmetric, template_pu, template_ssl, template_superset_uniform};
use weaklab::weakening::{weaken_dataset, WeakeningSpec};
use weaklab::{AnnotatorPool, CleanLabel, MixingMatrix, WeakLabelSpace};

fn labels(n: usize, k: usize) -> Vec<CleanLabel> {
    (0..n).map(|i| CleanLabel::new((i * 7 + 3) % k, k).unwrap()).collect()
}

#[test]
fn weak_files_round_trip_for_every_space() {
    let dir = tempfile::tempdir().unwrap();
    let unified = MixingMatrix::from_rows(
        &{
            let space = WeakLabelSpace::unified(2, 3, Some(1), true).unwrap();
            let labels = space.labels().unwrap();
            // every annotator reports the truth or abstains with equal odds
            labels
                .iter()
                .map(|w| {
                    (0..3)
                        .map(|c| {
                            let weaklab::WeakLabel::Tuple(items) = w else { unreachable!() };
                            items
                                .iter()
                                .map(|i| match i {
                                    weaklab::WeakLabel::Abstain => 0.5,
                                    weaklab::WeakLabel::Set(s) if s.len() == 1 && s.contains(c) => 0.5,
                                    _ => 0.0,
                                })
                                .product::<f64>()
                        })
                        .collect()
                })
                .collect::<Vec<Vec<f64>>>()
        },
        WeakLabelSpace::unified(2, 3, Some(1), true).unwrap(),
    )
    .unwrap();
    let specs = vec![
        WeakeningSpec::iin(template_flip_symmetric(3, 0.4).unwrap(), 1),
        WeakeningSpec::iin(template_superset_uniform(3, 0.3).unwrap(), 2),
        WeakeningSpec::iin(template_ssl(3, &[0.2, 0.4, 0.6]).unwrap(), 3),
        WeakeningSpec::multi_annotator(
            AnnotatorPool::new(vec![
                template_ssl(3, &[0.5, 0.5, 0.5]).unwrap(),
                template_ssl(3, &[0.1, 0.9, 0.3]).unwrap(),
            ])
            .unwrap(),
            4,
        ),
        WeakeningSpec::iin(unified, 5),
    ];
    let data = Dataset::from_labels(&labels(200, 3), 3).unwrap();
    for spec in specs {
        let weak = weaken_dataset(&data, &spec).unwrap();
        let path = dir.path().join("weak.csv");
        write_weak_csv(&path, &weak).unwrap();
        let first = fs::read(&path).unwrap();
        let back = read_weak_csv(&path, 3, &weak.space).unwrap();
        assert_eq!(back, weak);
        write_weak_csv(&path, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }
}

#[test]
fn pu_weak_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = Dataset::from_labels(&labels(50, 2), 2).unwrap();
    let weak = weaken_dataset(&data, &WeakeningSpec::iin(template_pu(0.5).unwrap(), 7)).unwrap();
    let path = dir.path().join("weak.csv");
    write_weak_csv(&path, &weak).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0") || l.ends_with(",-")));
    assert_eq!(read_weak_csv(&path, 2, &WeakLabelSpace::Pu).unwrap(), weak);
}

#[test]
fn matrices_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    for t in [
        template_flip_symmetric(6, 0.1).unwrap(),
        template_superset_uniform(4, 1.0 / 7.0).unwrap(),
        template_ssl(2, &[0.3, 1.0]).unwrap(),
    ] {
        write_matrix_json(&path, &t).unwrap();
        assert_eq!(read_matrix_json(&path).unwrap(), t);
    }
}

#[test]
fn bags_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.csv");
    let mut text = String::from("group,label\n");
    for (i, y) in labels(30, 3).iter().enumerate() {
        text.push_str(&format!("g{},{}\n", i % 4, y.index()));
    }
    fs::write(&clean, text).unwrap();
    let data = read_clean_csv(&clean, 3).unwrap();
    for g in [
        Aggregation::Mil { k: 3, positive_class: 2 },
        Aggregation::Gmil { k: 3, positive_class: 0, r: 3 },
        Aggregation::Llp { k: 3, normalized: false },
        Aggregation::Llp { k: 3, normalized: true },
    ] {
        let (assignment, bag_labels) =
            aggregate_dataset(&data, &BagStrategy::ByKey { column: "group".into() }, &g).unwrap();
        assert_eq!(assignment.len(), 4);
        let bags = dir.path().join("bags.csv");
        let out = dir.path().join("bag_labels.csv");
        write_bags_csv(&bags, &assignment).unwrap();
        write_bag_labels_csv(&out, &bag_labels).unwrap();
        assert_eq!(read_bags_csv(&bags).unwrap(), assignment);
        assert_eq!(read_bag_labels_csv(&out).unwrap(), bag_labels);
    }
}
