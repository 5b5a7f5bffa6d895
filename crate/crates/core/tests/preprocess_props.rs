use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;
use wecstore::preprocess::{
    apply_phrases_model, apply_phrases_vocab, run_pipeline, train_phrase_model, PhraseModel,
    PhraseParams, PipelineDescriptor, PipelineOptions, PreprocessCache, StopwordList,
    TokenizerRules,
};

mod common;

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]),
        0..12,
    )
    .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(sentence(), 1..10)
        .prop_filter("non-empty", |c| c.iter().any(|s| !s.is_empty()))
}

fn flatten(tokens: &[String]) -> Vec<String> {
    tokens
        .iter()
        .flat_map(|t| t.split('_'))
        .map(str::to_string)
        .collect()
}

proptest! {
    #[test]
    fn model_matches_brute_force(
        corpus in corpus(),
        probe in sentence(),
        discount in 0.0f64..2.0,
        threshold in 0.0f64..6.0,
        passes in 1usize..3,
    ) {
        let params = PhraseParams { discount, threshold, passes };
        let model = train_phrase_model(&corpus, params).unwrap();
        for s in corpus.iter().chain(std::iter::once(&probe)) {
            let want = common::brute_phrases(&corpus, s, discount, threshold, passes);
            prop_assert_eq!(apply_phrases_model(&model, s), want);
        }
    }

    #[test]
    fn model_joining_keeps_material(corpus in corpus(), probe in sentence(), passes in 1usize..4) {
        let params = PhraseParams { discount: 0.0, threshold: 0.5, passes };
        let model = train_phrase_model(&corpus, params).unwrap();
        prop_assert_eq!(flatten(&apply_phrases_model(&model, &probe)), probe);
    }

    #[test]
    fn model_text_round_trip(corpus in corpus(), passes in 1usize..3) {
        let params = PhraseParams { discount: 0.5, threshold: 1.0, passes };
        let model = train_phrase_model(&corpus, params).unwrap();
        let back = PhraseModel::from_text(&model.to_text()).unwrap();
        prop_assert_eq!(back.hash(), model.hash());
        prop_assert_eq!(back, model);
    }

    #[test]
    fn vocab_joining_keeps_material(
        vocab in prop::collection::hash_set("[a-d](_[a-d]){1,3}", 0..12),
        probe in sentence(),
        max_len in 1usize..5,
    ) {
        let out = apply_phrases_vocab(&vocab, &probe, max_len);
        prop_assert_eq!(flatten(&out), probe);
        for t in out.iter().filter(|t| t.contains('_')) {
            prop_assert!(vocab.contains(t));
            prop_assert!(t.split('_').count() <= max_len);
        }
    }

    #[test]
    fn descriptor_text_keeps_hash(
        fold in any::<bool>(),
        stem in any::<bool>(),
        strip in any::<bool>(),
        stop in any::<bool>(),
        whitespace in any::<bool>(),
    ) {
        let id = common::id(&format!(
            "algo:a;dataset:d;dims:3;fold:{};unit:{}",
            u8::from(fold),
            if stem { "stem" } else { "token" }
        ));
        let list = Arc::new(StopwordList::new("custom", ["the", "of"]));
        let options = PipelineOptions {
            tokenizer: if whitespace { TokenizerRules::Whitespace } else { TokenizerRules::Default },
            stopwords: stop.then(|| list.clone()),
            strip_special: strip,
            external: None,
        };
        let p = PipelineDescriptor::for_identifier(&id, options);
        p.check_identifier(&id).unwrap();
        let lines = p.to_lines();
        let back = PipelineDescriptor::from_lines(lines.iter().map(String::as_str), |_, hash: &str| {
            (hash == list.hash()).then(|| list.clone())
        })
        .unwrap();
        prop_assert_eq!(back.hash(), p.hash());
    }

    #[test]
    fn cache_is_transparent(lines in prop::collection::vec("[A-Za-z ,.!]{0,30}", 1..20)) {
        let id = common::id("algo:a;dataset:d;dims:3;fold:1;unit:stem");
        let p = PipelineDescriptor::for_identifier(&id, PipelineOptions::default());
        let cache = PreprocessCache::new();
        for line in lines.iter().chain(lines.iter()) {
            let cold = run_pipeline(&p, line, None).unwrap();
            prop_assert_eq!(run_pipeline(&p, line, Some(&cache)).unwrap(), cold);
        }
        prop_assert!(cache.hits() >= lines.len() as u64);
    }
}

#[test]
fn petri_net_vocabulary_join() {
    let with: HashSet<String> = ["petri_net", "petri", "net"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let without: HashSet<String> = ["petri", "net"].iter().map(|s| s.to_string()).collect();
    let t = common::toks("petri net");
    assert_eq!(apply_phrases_vocab(&with, &t, 4), ["petri_net"]);
    assert_eq!(apply_phrases_vocab(&without, &t, 4), t);
}

#[test]
fn stem_and_fold_pipelines() {
    let folded = PipelineDescriptor::for_identifier(
        &common::id("algo:a;dataset:d;dims:3;fold:1;unit:token"),
        PipelineOptions::default(),
    );
    let cased = PipelineDescriptor::for_identifier(
        &common::id("algo:a;dataset:d;dims:3;fold:0;unit:token"),
        PipelineOptions::default(),
    );
    let stemmed = PipelineDescriptor::for_identifier(
        &common::id("algo:a;dataset:d;dims:3;fold:1;unit:stem"),
        PipelineOptions::default(),
    );
    assert_eq!(run_pipeline(&folded, "Theory", None).unwrap(), ["theory"]);
    assert_eq!(run_pipeline(&cased, "Theory", None).unwrap(), ["Theory"]);
    assert_eq!(
        run_pipeline(&stemmed, "Connected networks", None).unwrap(),
        ["connect", "network"]
    );
    assert_ne!(folded.hash(), cased.hash());
}
