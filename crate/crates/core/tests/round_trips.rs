use esnli::corpus::{
    build_vocab, decode, encode, make_batches, parse_reader, synthetic, tokenize, write_canonical, ExampleRecord,
    Label, ParseOptions, Schema, Split,
};
use esnli::models::{load_checkpoint, save_checkpoint, Model, ModelConfig, ModelError, Trainer, Variant};
use proptest::prelude::*;

const WORDS: [&str; 12] = ["a", "man", "dog", "is", "sleeping", "the", "park", "won't", "near", "two", "red", "ball"];

fn sentence() -> impl Strategy<Value = String> {
    (prop::collection::vec(0..WORDS.len(), 1..8), any::<bool>()).prop_map(|(ix, period)| {
        let mut s = ix.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" ");
        if period {
            s.push('.');
        }
        s
    })
}

fn record() -> impl Strategy<Value = ExampleRecord> {
    let explanations = prop_oneof![prop::collection::vec(sentence(), 1), prop::collection::vec(sentence(), 3)];
    (sentence(), sentence(), 0..3usize, explanations, any::<u64>()).prop_map(
        |(p, h, label, expl, bits)| {
            let split = if expl.len() == 1 { Split::Train } else { Split::Test };
            let expl: Vec<&str> = expl.iter().map(String::as_str).collect();
            let r = ExampleRecord::new(format!("id-{bits}"), split, &p, &h, Label::from_index(label).unwrap(), &expl);
            let (np, nh) = (r.premise.len(), r.hypothesis.len());
            let pick = |n: usize, shift: u32| (0..n).filter(|&i| bits >> ((i as u32 + shift) % 64) & 1 == 1).collect::<Vec<_>>();
            r.with_highlights(pick(np, 0), pick(nh, 32))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_write_then_parse_is_identity(test_split in any::<bool>(), records in prop::collection::vec(record(), 1..6)) {
        let split = if test_split { Split::Test } else { Split::Train };
        let mut records: Vec<ExampleRecord> = records.into_iter().filter(|r| r.split == split).collect();
        for (i, r) in records.iter_mut().enumerate() {
            r.pair_id = format!("id-{i}");
        }
        let mut buf = Vec::new();
        write_canonical(&mut buf, &records).unwrap();
        let back = parse_reader(buf.as_slice(), &Schema::canonical(), ParseOptions::new(split)).unwrap();
        prop_assert!(back.rejects.is_empty(), "{:?}", back.rejects);
        prop_assert_eq!(back.records, records);
    }

    #[test]
    fn known_tokens_survive_encode_decode(s in sentence()) {
        let recs = vec![ExampleRecord::new("x", Split::Train, &s, "a", Label::Neutral, &[])];
        let vocab = build_vocab(&[&recs], 1).unwrap();
        let toks = tokenize(&s);
        prop_assert_eq!(decode(&vocab, &encode(&vocab, &toks)), toks);
    }
}

#[test]
fn checkpoint_reload_reproduces_predictions() {
    let recs = synthetic::overfit_corpus(12, 2);
    let vocab = build_vocab(&[&recs], 1).unwrap();
    let mut cfg = ModelConfig::tiny(Variant::PredictAndExplain);
    cfg.training.max_epochs = 2;
    let (model, mut store) = Model::new(&cfg, vocab.len()).unwrap();
    Trainer::new(&model, &vocab).train(&mut store, &recs, &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&path, &cfg, &store).unwrap();

    let (reloaded, restored) = load_checkpoint(&path, &cfg, vocab.len()).unwrap();
    assert_eq!(reloaded, model);
    let batch = &make_batches(&recs, 12, &vocab)[0];
    assert_eq!(reloaded.predict(&restored, batch).unwrap(), model.predict(&store, batch).unwrap());

    let mut other = cfg.clone();
    other.alpha = 0.3;
    assert!(matches!(load_checkpoint(&path, &other, vocab.len()), Err(ModelError::ConfigMismatch { .. })));
}
