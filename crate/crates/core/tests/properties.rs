use proptest::prelude::*;

use rlpp::baselines::{run_baseline, BaselineConfig};
use rlpp::bayes::{bayes_partition, partition_errors};
use rlpp::gaussian::{
    partition_probs, posterior_label_probs, LabelPrior, NiwLabel, NiwModel, PointSet,
};
use rlpp::granulometry::{opening_area_sweep, BinaryImage, Direction};
use rlpp::io::{
    parse_partition, parse_points_csv, partition_to_line, partition_to_structured, points_to_csv,
};
use rlpp::partition::natural_cost;
use rlpp::{Method, Partition};

fn labels(n: std::ops::RangeInclusive<usize>, l: usize) -> impl Strategy<Value = Vec<usize>> {
    n.prop_flat_map(move |n| prop::collection::vec(0..l, n))
}

fn triple() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>)> {
    (1usize..=10).prop_flat_map(|n| {
        let v = || prop::collection::vec(0usize..4, n);
        (v(), v(), v())
    })
}

fn image() -> impl Strategy<Value = BinaryImage> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<bool>(), w * h).prop_map(move |bits| {
            let mut img = BinaryImage::new(w, h).unwrap();
            for (i, b) in bits.into_iter().enumerate() {
                img.set(i % w, i / w, b);
            }
            img
        })
    })
}

proptest! {
    #[test]
    fn natural_cost_is_a_metric((a, b, c) in triple()) {
        let (p, q, r) = (Partition::from_labels(&a), Partition::from_labels(&b), Partition::from_labels(&c));
        let pq = natural_cost(&p, &q, 4).unwrap();
        prop_assert_eq!(pq, natural_cost(&q, &p, 4).unwrap());
        prop_assert_eq!(pq == 0.0, p == q);
        prop_assert!((0.0..1.0).contains(&pq));
        let pr = natural_cost(&p, &r, 4).unwrap();
        let rq = natural_cost(&r, &q, 4).unwrap();
        prop_assert!(pq <= pr + rq + 1e-12);
    }

    #[test]
    fn natural_cost_ignores_label_names(a in labels(1..=10, 4), b in labels(1..=10, 4), shift in 1usize..4) {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let renamed: Vec<usize> = a.iter().map(|y| (y + shift) % 4).collect();
        let p = Partition::from_labels(a);
        let q = Partition::from_labels(b);
        prop_assert_eq!(p.clone(), Partition::from_labels(&renamed));
        let perm: Vec<usize> = (0..n).rev().collect();
        prop_assert_eq!(
            natural_cost(&p, &q, 4).unwrap(),
            natural_cost(&p.permute_points(&perm), &q.permute_points(&perm), 4).unwrap()
        );
    }

    #[test]
    fn partition_text_round_trips(a in labels(1..=15, 5)) {
        let p = Partition::from_labels(&a);
        prop_assert_eq!(parse_partition(&partition_to_line(&p)).unwrap(), p.clone());
        prop_assert_eq!(parse_partition(&partition_to_structured(&p)).unwrap(), p);
    }

    #[test]
    fn points_csv_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..20)) {
        let pts = PointSet::new(rows).unwrap();
        prop_assert_eq!(parse_points_csv(&points_to_csv(&pts)).unwrap(), pts);
    }

    #[test]
    fn opening_sweep_is_monotone_and_exact(img in image(), vertical in any::<bool>()) {
        let dir = if vertical { Direction::Vertical } else { Direction::Horizontal };
        let omega = opening_area_sweep(&img, dir, 12);
        prop_assert_eq!(omega[0], img.area());
        prop_assert!(omega.windows(2).all(|w| w[1] <= w[0]));
        for t in [1usize, 3, 6] {
            let opened = img.open(dir, t + 1);
            prop_assert!(opened.is_subset_of(&img));
            prop_assert_eq!(opened.open(dir, t + 1), opened.clone());
            prop_assert_eq!(opened.area(), omega[t]);
        }
    }

    #[test]
    fn random_baseline_respects_sizes(seed in any::<u64>(), a in 1usize..6, b in 1usize..6) {
        let pts = PointSet::new((0..a + b).map(|i| vec![i as f64]).collect()).unwrap();
        let mut cfg = BaselineConfig::new(Method::Random, 2, seed);
        cfg.sizes = Some(vec![a, b]);
        let r = run_baseline(&pts, &cfg).unwrap();
        let mut sizes = r.partition.block_sizes();
        sizes.sort();
        let mut want = vec![a, b];
        want.sort();
        prop_assert_eq!(sizes, want);
    }
}

fn small_problem() -> impl Strategy<Value = (PointSet, usize)> {
    (2usize..=7)
        .prop_flat_map(|n| (prop::collection::vec(-3.0f64..3.0, n), 1..n))
        .prop_map(|(xs, n1)| {
            (
                PointSet::new(xs.into_iter().map(|x| vec![x]).collect()).unwrap(),
                n1,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_is_normalized_and_bayes_is_optimal((pts, n1) in small_problem()) {
        let n = pts.len();
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 0.5, 3.0, 1.0)).unwrap();
        let prior = LabelPrior::SizeMultiset(vec![n1, n - n1]);
        let post = posterior_label_probs(&pts, &prior, &model).unwrap();
        prop_assert!((post.total() - 1.0).abs() < 1e-9);
        let pmf = partition_probs(&pts, &prior, &model).unwrap();
        prop_assert!((pmf.total() - 1.0).abs() < 1e-9);
        let (cands, errors, _) = partition_errors(&pts, &prior, &model).unwrap();
        let best = bayes_partition(&pts, &prior, &model).unwrap();
        let i = cands.iter().position(|c| *c == best.partition).unwrap();
        prop_assert!(errors.iter().all(|&e| errors[i] <= e));
        prop_assert!((best.score - errors[i]).abs() < 1e-12);
    }

    #[test]
    fn mirrored_points_give_mirrored_partition((pts, n1) in small_problem()) {
        let n = pts.len();
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 0.5, 3.0, 1.0)).unwrap();
        let prior = LabelPrior::SizeMultiset(vec![n1, n - n1]);
        let perm: Vec<usize> = (0..n).rev().collect();
        let reversed = PointSet::new((0..n).map(|i| pts.point(n - 1 - i).to_vec()).collect()).unwrap();
        let (cands, errors, _) = partition_errors(&pts, &prior, &model).unwrap();
        let (rc, re, _) = partition_errors(&reversed, &prior, &model).unwrap();
        for (c, e) in cands.iter().zip(&errors) {
            let j = rc.iter().position(|r| *r == c.permute_points(&perm)).unwrap();
            prop_assert!((re[j] - e).abs() < 1e-9);
        }
    }
}
