use weaklab::dataset_io::Dataset;
use weaklab::mixing::{
    template_flip_binary, template_flip_symmetric, template_pu, template_ssl,
    template_superset_uniform,
};
use weaklab::rng::{RngKey, SplitMix64};
use weaklab::weakening::{
    weaken_dataset, CategoricalSampler, Comparison, Condition, Region, WeakeningSpec,
};
use weaklab::{AnnotatorPool, CleanLabel, MixingMatrix, WeakLabel};

fn column_frequencies(t: &MixingMatrix, class: usize, n: u64, seed: u64) -> Vec<f64> {
    let sampler = CategoricalSampler::new(t).unwrap();
    let mut counts = vec![0u64; t.rows()];
    for i in 0..n {
        let u = RngKey::new(seed, i, 0).uniform();
        counts[sampler.row_for(class, u)] += 1;
    }
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

#[test]
fn empirical_columns_match_templates() {
    let templates = [
        template_flip_binary(0.1, 0.2).unwrap(),
        template_flip_symmetric(4, 0.3).unwrap(),
        template_ssl(3, &[0.2, 0.5, 0.8]).unwrap(),
        template_superset_uniform(3, 0.4).unwrap(),
        template_pu(0.35).unwrap(),
    ];
    for t in &templates {
        for c in 0..t.classes() {
            let freq = column_frequencies(t, c, 100_000, 42);
            for (r, f) in freq.iter().enumerate() {
                assert!(
                    (f - t.get(r, c)).abs() <= 0.01,
                    "{} column {c} row {r}: {f} vs {}",
                    t.space(),
                    t.get(r, c)
                );
                if t.get(r, c) == 0.0 {
                    assert_eq!(*f, 0.0);
                }
            }
        }
    }
}

#[test]
fn regions_follow_their_own_matrices() {
    let left = template_flip_binary(0.3, 0.1).unwrap();
    let right = template_flip_binary(0.05, 0.4).unwrap();
    let mut rng = SplitMix64::new(5);
    let n = 20_000;
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.next_f64() * 2.0 - 1.0]).collect();
    let ys: Vec<CleanLabel> = (0..n)
        .map(|i| CleanLabel::new(i % 2, 2).unwrap())
        .collect();
    let data = Dataset::from_features(&["x0"], &xs, &ys, 2).unwrap();
    let spec = WeakeningSpec::idn(
        vec![
            Region {
                conditions: vec![Condition {
                    column: "x0".into(),
                    op: Comparison::Lt,
                    threshold: 0.0,
                }],
                matrix: left.clone(),
            },
            Region {
                conditions: vec![],
                matrix: right.clone(),
            },
        ],
        8,
    )
    .unwrap();
    let out = weaken_dataset(&data, &spec).unwrap();
    // flip counts per (region, class)
    let mut flips = [[0u64; 2]; 2];
    let mut totals = [[0u64; 2]; 2];
    for i in 0..n {
        let region = usize::from(xs[i][0] >= 0.0);
        let y = ys[i].index();
        totals[region][y] += 1;
        flips[region][y] += u64::from(out.weak[i] != WeakLabel::class(y));
    }
    for (region, t) in [(0, &left), (1, &right)] {
        for y in 0..2 {
            let rate = flips[region][y] as f64 / totals[region][y] as f64;
            let expected = t.get(1 - y, y);
            assert!((rate - expected).abs() <= 0.02, "region {region} class {y}: {rate}");
        }
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn annotators_are_conditionally_independent() {
    let a = template_flip_binary(0.2, 0.1).unwrap();
    let b = template_flip_binary(0.3, 0.25).unwrap();
    let pool = AnnotatorPool::new(vec![a.clone(), b.clone()]).unwrap();
    let n = 40_000;
    let ys: Vec<CleanLabel> = (0..n).map(|i| CleanLabel::new(i % 2, 2).unwrap()).collect();
    let data = Dataset::from_labels(&ys, 2).unwrap();
    let out = weaken_dataset(&data, &WeakeningSpec::multi_annotator(pool, 99)).unwrap();
    let mut joint = [[[0u64; 2]; 2]; 2];
    for (w, y) in out.weak.iter().zip(&ys) {
        let WeakLabel::Tuple(items) = w else { panic!("expected a tuple") };
        let idx = |l: &WeakLabel| usize::from(*l == WeakLabel::class(1));
        joint[y.index()][idx(&items[0])][idx(&items[1])] += 1;
    }
    for y in 0..2 {
        let total: u64 = joint[y].iter().flatten().sum();
        for u in 0..2 {
            for v in 0..2 {
                let p = joint[y][u][v] as f64 / total as f64;
                let expected = a.get(u, y) * b.get(v, y);
                assert!((p - expected).abs() <= 0.02, "y={y} ({u},{v}): {p} vs {expected}");
            }
        }
    }
}

#[test]
fn superset_draws_always_cover() {
    let t = template_superset_uniform(5, 0.2).unwrap();
    let sampler = CategoricalSampler::new(&t).unwrap();
    for i in 0..50_000u64 {
        let y = (i % 5) as usize;
        let WeakLabel::Set(s) = sampler.sample(y, RngKey::new(1, i, 0)) else {
            panic!("superset rows are sets")
        };
        assert!(s.contains(y));
    }
}

#[test]
fn outputs_depend_only_on_seed_and_index() {
    let t = template_flip_symmetric(3, 0.6).unwrap();
    let ys: Vec<CleanLabel> = (0..300).map(|i| CleanLabel::new(i % 3, 3).unwrap()).collect();
    let full = weaken_dataset(&Dataset::from_labels(&ys, 3).unwrap(), &WeakeningSpec::iin(t.clone(), 4)).unwrap();
    let prefix = weaken_dataset(
        &Dataset::from_labels(&ys[..100], 3).unwrap(),
        &WeakeningSpec::iin(t, 4),
    )
    .unwrap();
    assert_eq!(&full.weak[..100], &prefix.weak[..]);
}
