use std::collections::BTreeMap;

use proptest::prelude::*;
use wecstore::{normalize, parse_identifier, parse_query};

fn value() -> impl Strategy<Value = String> {
    "[A-Za-z0-9._/+-]{1,8}"
}

fn user_pairs() -> impl Strategy<Value = BTreeMap<String, String>> {
    prop::collection::btree_map("[a-z][a-z0-9_-]{0,6}", value(), 0..4).prop_map(|mut m| {
        for k in ["algo", "dims", "dataset", "unit", "fold"] {
            m.remove(k);
        }
        m
    })
}

fn identifier_pairs() -> impl Strategy<Value = Vec<(String, String)>> {
    (
        value(),
        value(),
        1u32..2000,
        0u8..2,
        prop_oneof![Just("token".to_string()), Just("stem".to_string()), value()],
        user_pairs(),
    )
        .prop_map(|(algo, dataset, dims, fold, unit, user)| {
            let mut pairs = vec![
                ("algo".to_string(), algo),
                ("dataset".to_string(), dataset),
                ("dims".to_string(), dims.to_string()),
                ("fold".to_string(), fold.to_string()),
                ("unit".to_string(), unit),
            ];
            pairs.extend(user);
            pairs
        })
}

fn render(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect::<Vec<_>>()
        .join(";")
}

proptest! {
    #[test]
    fn normalize_round_trips(pairs in identifier_pairs()) {
        let id = parse_identifier(&render(&pairs)).unwrap();
        let again = parse_identifier(&normalize(&id)).unwrap();
        prop_assert_eq!(&again, &id);
        prop_assert_eq!(normalize(&again), normalize(&id));
    }

    #[test]
    fn order_does_not_matter(pairs in identifier_pairs(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = normalize(&parse_identifier(&render(&pairs)).unwrap());
        let b = normalize(&parse_identifier(&render(&shuffled)).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn expansion_count_is_product(
        sets in prop::collection::vec(prop::collection::btree_set(1u32..500, 1..4), 1..3),
        folds in prop::collection::btree_set(0u8..2, 1..3),
        specs in 1usize..3,
    ) {
        let dims: Vec<String> = sets[0].iter().map(u32::to_string).collect();
        let extra = sets.get(1).map(|s| s.iter().map(|v| format!("v{v}")).collect::<Vec<_>>());
        let fold: Vec<String> = folds.iter().map(u8::to_string).collect();
        let mut per_spec = dims.len() * fold.len();
        let mut spec = format!("algo:a;dataset:d;dims:{{{}}};fold:{{{}}};unit:token", dims.join(","), fold.join(","));
        if let Some(extra) = &extra {
            per_spec *= extra.len();
            spec.push_str(&format!(";x:{{{}}}", extra.join(",")));
        }
        // Distinct specs differ in algo so expansions never collide.
        let query = (0..specs)
            .map(|i| spec.replacen("algo:a", &format!("algo:a{i}"), 1))
            .collect::<Vec<_>>()
            .join("&");
        let q = parse_query(&query).unwrap();
        prop_assert_eq!(q.len(), per_spec * specs);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..80)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_identifier(&text);
        let _ = parse_query(&text);
    }

    #[test]
    fn grammar_shaped_noise_never_panics(text in "[a-z:;&{},0-9 ]{0,60}") {
        if let Ok(id) = parse_identifier(&text) {
            prop_assert_eq!(parse_identifier(&normalize(&id)).unwrap(), id);
        }
        let _ = parse_query(&text);
    }
}

#[test]
fn expansion_keeps_supplied_order() {
    let q = parse_query("algo:glove;dataset:6b;dims:{50,100,200,300};fold:1;unit:token").unwrap();
    let dims: Vec<usize> = q.iter().map(|id| id.dims()).collect();
    assert_eq!(dims, [50, 100, 200, 300]);
}

#[test]
fn rejects_reserved_characters() {
    for bad in [
        "algo:a b;dataset:d;dims:1;fold:0;unit:token",
        "algo:a;dataset:d;dims:0;fold:0;unit:token",
        "algo:a;dataset:d;dims:1;fold:2;unit:token",
        "algo:a;dataset:d;dims:1;fold:0",
        "Algo:a;dataset:d;dims:1;fold:0;unit:token",
        "algo:a;algo:b;dataset:d;dims:1;fold:0;unit:token",
    ] {
        assert!(parse_identifier(bad).is_err(), "{bad}");
    }
}
