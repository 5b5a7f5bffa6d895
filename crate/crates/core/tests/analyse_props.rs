use std::collections::HashSet;

use proptest::prelude::*;
use wecstore::analyse::{heatmap_csv, parse_heatmap_csv};
use wecstore::retrieve::{Hits, UnitResult, WecResult};
use wecstore::{
    average_vector, cosine_distance, pairwise_distances, similarity_matrix, Metric, RetrievalResult,
};

mod common;

const DIMS: usize = 4;

fn vector() -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-5.0f32..5.0, DIMS)
}

fn unit() -> impl Strategy<Value = UnitResult> {
    prop::collection::vec(("[a-e]{1,3}", vector()), 1..5).prop_map(|pairs| UnitResult {
        raw: pairs
            .iter()
            .map(|p| p.0.as_str())
            .collect::<Vec<_>>()
            .join(" "),
        tokens: pairs.iter().map(|p| p.0.clone()).collect(),
        hits: Hits::Pairs(pairs),
        missing: vec![],
    })
}

fn result(units: Vec<UnitResult>) -> RetrievalResult {
    RetrievalResult {
        per_wec: vec![WecResult {
            identifier: "algo:a;dataset:d;dims:4;fold:0;unit:token".into(),
            units,
        }],
    }
}

fn scaled(u: &UnitResult, c: f32) -> UnitResult {
    let pairs = u
        .pairs()
        .iter()
        .map(|(w, v)| (w.clone(), v.iter().map(|x| x * c).collect()))
        .collect();
    UnitResult {
        hits: Hits::Pairs(pairs),
        ..u.clone()
    }
}

proptest! {
    #[test]
    fn cosine_matches_reference(a in vector(), b in vector()) {
        if let Ok(d) = cosine_distance(&a, &b) {
            prop_assert!((d - common::ref_cosine_distance(&a, &b)).abs() < 1e-6);
            prop_assert!((0.0..=2.0).contains(&d));
        }
    }

    #[test]
    fn matrix_is_symmetric(u1 in unit(), u2 in unit()) {
        let m12 = similarity_matrix(&u1, &u2, &Metric::CosineSimilarity).unwrap();
        let m21 = similarity_matrix(&u2, &u1, &Metric::CosineSimilarity).unwrap().transpose();
        prop_assert_eq!(&m12.rows, &m21.rows);
        for (r1, r2) in m12.values.iter().zip(&m21.values) {
            for (x, y) in r1.iter().zip(r2) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ranking_is_sorted_permutation(pairs in prop::collection::vec((unit(), unit()), 1..12), reverse in any::<bool>()) {
        let (left, right): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let stop = HashSet::new();
        let r = pairwise_distances(&result(left.clone()), &result(right.clone()), &Metric::CosineDistance, reverse, &stop).unwrap();
        let ranking = &r.per_wec[0];
        let mut expected = Vec::new();
        for (i, (a, b)) in left.iter().zip(&right).enumerate() {
            let va = average_vector(a.pairs(), &stop).unwrap();
            let vb = average_vector(b.pairs(), &stop).unwrap();
            match cosine_distance(&va.vector, &vb.vector) {
                Ok(d) => expected.push((d, a.text(), b.text())),
                Err(_) => prop_assert!(ranking.undefined_pairs.contains(&i)),
            }
        }
        prop_assert_eq!(ranking.ranked.len() + ranking.undefined_pairs.len(), left.len());
        let mut got: Vec<_> = ranking.ranked.iter().map(|p| (p.distance, p.sentence1.clone(), p.sentence2.clone())).collect();
        for w in got.windows(2) {
            let sorted = if reverse { w[0].0 >= w[1].0 } else { w[0].0 <= w[1].0 };
            prop_assert!(sorted);
        }
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn scaling_keeps_order(pairs in prop::collection::vec((unit(), unit()), 1..10), c in 0.1f32..10.0) {
        let (left, right): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let stop = HashSet::new();
        let base = pairwise_distances(&result(left.clone()), &result(right.clone()), &Metric::CosineDistance, false, &stop).unwrap();
        let left_c: Vec<_> = left.iter().map(|u| scaled(u, c)).collect();
        let right_c: Vec<_> = right.iter().map(|u| scaled(u, c)).collect();
        let after = pairwise_distances(&result(left_c), &result(right_c), &Metric::CosineDistance, false, &stop).unwrap();
        let (b, a) = (&base.per_wec[0].ranked, &after.per_wec[0].ranked);
        prop_assert_eq!(b.len(), a.len());
        for (x, y) in b.iter().zip(a) {
            prop_assert!((x.distance - y.distance).abs() < 1e-5);
        }
        // Order can only differ inside groups of near-equal distances.
        for (i, (x, y)) in b.iter().zip(a).enumerate() {
            if (x.sentence1.as_str(), x.sentence2.as_str()) != (y.sentence1.as_str(), y.sentence2.as_str()) {
                let near = |j: usize| (b[j].distance - x.distance).abs() < 1e-5;
                prop_assert!((0..b.len()).filter(|&j| j != i).any(near));
            }
        }
    }

    #[test]
    fn duplicating_pairs_keeps_average(u in unit()) {
        let stop = HashSet::new();
        let once = average_vector(u.pairs(), &stop).unwrap();
        let doubled: Vec<_> = u.pairs().iter().chain(u.pairs()).cloned().collect();
        let twice = average_vector(&doubled, &stop).unwrap();
        for (x, y) in once.vector.iter().zip(&twice.vector) {
            prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0));
        }
    }

    #[test]
    fn heatmap_csv_round_trip(u1 in unit(), u2 in unit()) {
        let m = similarity_matrix(&u1, &u2, &Metric::CosineSimilarity).unwrap();
        let back = parse_heatmap_csv(&heatmap_csv(&m.values, &m.rows, &m.cols).unwrap()).unwrap();
        prop_assert_eq!(&back.rows, &m.rows);
        prop_assert_eq!(&back.cols, &m.cols);
        for (r1, r2) in m.values.iter().zip(&back.values) {
            for (x, y) in r1.iter().zip(r2) {
                prop_assert!((x - y).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn stopwords_and_oov_are_excluded() {
    let u = UnitResult {
        raw: "the net qq".into(),
        tokens: common::toks("the net qq"),
        hits: Hits::Pairs(vec![
            ("the".into(), vec![5.0, 5.0]),
            ("net".into(), vec![1.0, 0.0]),
        ]),
        missing: vec!["qq".into()],
    };
    let stop: HashSet<String> = ["the".to_string()].into();
    let sv = wecstore::analyse::unit_average(&u, &stop).unwrap();
    assert_eq!(sv.vector, vec![1.0, 0.0]);
    assert_eq!(sv.used_tokens, ["net"]);
    assert_eq!(sv.excluded, ["the", "qq"]);
}
