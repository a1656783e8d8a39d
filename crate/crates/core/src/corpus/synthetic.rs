//! Small generated corpora with known structure, for tests and examples.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExampleRecord, Label, Split};
use crate::quality::{match_template, MatchOptions, TemplateSet};

const SUBJECTS: [(&str, &str); 8] = [
    ("man", "person"),
    ("woman", "person"),
    ("boy", "child"),
    ("girl", "child"),
    ("dog", "animal"),
    ("cat", "animal"),
    ("chef", "cook"),
    ("singer", "performer"),
];
const ACTIVITIES: [&str; 8] = [
    "running", "sleeping", "eating", "singing", "dancing", "reading", "swimming", "painting",
];
const PLACES: [&str; 6] = ["park", "beach", "street", "kitchen", "garden", "station"];
const REASONS: [&str; 4] = ["with a friend", "for a contest", "after work", "to relax"];

struct Pair {
    premise: String,
    hypothesis: String,
    explanation: String,
    premise_highlights: Vec<usize>,
    hypothesis_highlights: Vec<usize>,
}

impl Pair {
    fn record(&self, id: String, label: Label) -> ExampleRecord {
        ExampleRecord::new(id, Split::Train, &self.premise, &self.hypothesis, label, &[&self.explanation])
            .with_highlights(self.premise_highlights.clone(), self.hypothesis_highlights.clone())
    }
}

/// A premise/hypothesis/explanation triple whose label, explanation and
/// highlights are fixed functions of the sampled slots.
fn sample_pair(rng: &mut impl Rng, label: Label) -> Pair {
    let &(subj, hyper) = SUBJECTS.choose(rng).unwrap();
    let act = *ACTIVITIES.choose(rng).unwrap();
    let place = *PLACES.choose(rng).unwrap();
    let premise = format!("a {subj} is {act} in the {place} .");
    match label {
        Label::Entailment => Pair {
            premise,
            hypothesis: format!("a {hyper} is {act} outside the house ."),
            explanation: format!("every {subj} is a {hyper} and the {place} is outside"),
            premise_highlights: vec![1, 6],
            hypothesis_highlights: vec![1, 4],
        },
        Label::Neutral => {
            let reason = *REASONS.choose(rng).unwrap();
            let words = reason.split(' ').count();
            Pair {
                premise,
                hypothesis: format!("a {subj} is {act} in the {place} {reason} ."),
                explanation: format!("not every {subj} {act} is doing it {reason}"),
                premise_highlights: vec![],
                hypothesis_highlights: (7..7 + words).collect(),
            }
        }
        Label::Contradiction => {
            let other = loop {
                let a = *ACTIVITIES.choose(rng).unwrap();
                if a != act {
                    break a;
                }
            };
            Pair {
                premise,
                hypothesis: format!("the {subj} is {other} in the {place} ."),
                explanation: format!("one can not be {act} and {other} at once"),
                premise_highlights: vec![3],
                hypothesis_highlights: vec![3],
            }
        }
    }
}

/// `n` distinct training pairs with labels cycling through the three
/// classes, each with one explanation determined by its pair.
pub fn overfit_corpus(n: usize, seed: u64) -> Vec<ExampleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let label = Label::ALL[out.len() % 3];
        let pair = sample_pair(&mut rng, label);
        if !seen.insert((pair.premise.clone(), pair.hypothesis.clone())) {
            continue;
        }
        out.push(pair.record(format!("syn-{}", out.len()), label));
    }
    out
}

/// Two short pairs with one-word explanations, small enough for
/// finite-difference checks over every parameter of a model.
pub fn gradient_fixture() -> Vec<ExampleRecord> {
    vec![
        ExampleRecord::new("grad-0", Split::Train, "a man sleeps", "a person rests", Label::Entailment, &["person"]),
        ExampleRecord::new("grad-1", Split::Train, "dog runs", "cat sleeps", Label::Contradiction, &["not"]),
    ]
}

/// The word that reveals each label in [`keyword_corpus`] explanations.
pub fn label_keyword(label: Label) -> &'static str {
    match label {
        Label::Entailment => "implies",
        Label::Neutral => "perhaps",
        Label::Contradiction => "cannot",
    }
}

const FILLER: [&str; 16] = [
    "the", "a", "man", "dog", "park", "is", "outside", "running", "woman", "child", "near", "water",
    "two", "people", "street", "music",
];

/// Records whose explanation is filler plus exactly one label keyword at a
/// random position, so the label is recoverable from the keyword alone.
pub fn keyword_corpus(n: usize, seed: u64, split: Split) -> Vec<ExampleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = Label::ALL[i % 3];
            let len = rng.random_range(3..8);
            let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(&mut rng).unwrap()).collect();
            let at = rng.random_range(0..=words.len());
            words.insert(at, label_keyword(label));
            let e = words.join(" ");
            ExampleRecord::new(format!("kw-{i}"), split, "a scene .", "a claim .", label, &[&e])
        })
        .collect()
}

/// A corpus where a known subset of explanations are exact template
/// instances and the rest are far from every applicable template.
#[derive(Debug, Clone)]
pub struct SeededCorpus {
    pub records: Vec<ExampleRecord>,
    pub seeded: BTreeSet<String>,
}

/// `n` records of which `round(fraction * n)` carry a template instance.
/// Informative explanations are resampled until no applicable template is
/// within `opts.threshold`.
pub fn template_seeded_corpus(
    n: usize,
    fraction: f64,
    seed: u64,
    templates: &TemplateSet,
    opts: &MatchOptions,
) -> SeededCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_seeded = (fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let seeded_idx: BTreeSet<usize> = order[..n_seeded.min(n)].iter().copied().collect();
    let mut records = Vec::with_capacity(n);
    let mut seeded = BTreeSet::new();
    for i in 0..n {
        let label = Label::ALL[rng.random_range(0..3)];
        let id = format!("tpl-{i}");
        if seeded_idx.contains(&i) {
            let mut pair = sample_pair(&mut rng, label);
            let choices: Vec<_> = templates.applicable(label).map(|(_, t)| t.clone()).collect();
            let t = choices.choose(&mut rng).expect("template set has an applicable template");
            pair.explanation = t.instantiate(&pair.premise, &pair.hypothesis);
            seeded.insert(id.clone());
            records.push(pair.record(id, label));
        } else {
            let pair = loop {
                let pair = sample_pair(&mut rng, label);
                if match_template(&pair.explanation, &pair.premise, &pair.hypothesis, label, templates, opts).is_none() {
                    break pair;
                }
            };
            records.push(pair.record(id, label));
        }
    }
    SeededCorpus { records, seeded }
}
