use crate::autodiff::ParameterStore;
use crate::corpus::{Batch, Label, PaddedIds, Vocabulary};

use super::config::Variant;
use super::model::{Model, Prediction};
use super::ModelError;

/// A generator paired with a separately trained explanation classifier.
pub struct ExplainThenPredict<'a> {
    pub generator: &'a Model,
    pub generator_params: &'a ParameterStore,
    pub classifier: &'a Model,
    pub classifier_params: &'a ParameterStore,
}

/// Generated explanation and the label read from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelinePrediction {
    pub generated: Prediction,
    pub label: Label,
    pub distribution: [f64; 3],
    /// The generator produced no words, so the classifier saw only EOS.
    pub empty_explanation: bool,
}

impl<'a> ExplainThenPredict<'a> {
    pub fn new(
        generator: &'a Model,
        generator_params: &'a ParameterStore,
        classifier: &'a Model,
        classifier_params: &'a ParameterStore,
    ) -> Result<Self, ModelError> {
        if !matches!(generator.variant(), Variant::ExplainSeq2seq | Variant::ExplainAttention) {
            return Err(ModelError::Config(format!("{} cannot act as an explanation generator", generator.variant())));
        }
        if classifier.variant() != Variant::ExplanationToLabel {
            return Err(ModelError::Config(format!("{} cannot classify explanations", classifier.variant())));
        }
        Ok(Self { generator, generator_params, classifier, classifier_params })
    }

    /// Generates explanations for the batch, then classifies them.
    pub fn predict(&self, batch: &Batch) -> Result<Vec<PipelinePrediction>, ModelError> {
        let generated = self.generator.predict(self.generator_params, batch)?;
        let mut seqs = Vec::with_capacity(generated.len());
        let mut empty = Vec::with_capacity(generated.len());
        for p in &generated {
            empty.push(p.explanation.is_empty());
            seqs.push(if p.explanation.is_empty() { vec![Vocabulary::EOS] } else { p.explanation.clone() });
        }
        let classify_batch = Batch {
            pair_ids: batch.pair_ids.clone(),
            premise: batch.premise.clone(),
            hypothesis: batch.hypothesis.clone(),
            explanation: Some(PaddedIds::from_sequences(seqs)),
            labels: batch.labels.clone(),
        };
        let labels = self.classifier.predict(self.classifier_params, &classify_batch)?;
        Ok(generated
            .into_iter()
            .zip(labels)
            .zip(empty)
            .map(|((generated, l), empty_explanation)| PipelinePrediction {
                generated,
                label: l.label.expect("classifier predicts a label"),
                distribution: l.distribution.expect("classifier predicts a distribution"),
                empty_explanation,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, synthetic, ExampleRecord};
    use crate::models::ModelConfig;

    #[test]
    fn deterministic_and_typed() {
        let recs = synthetic::overfit_corpus(4, 1);
        let vocab = build_vocab(&[&recs], 1).unwrap();
        let (gen, gp) = Model::new(&ModelConfig::tiny(Variant::ExplainAttention), vocab.len()).unwrap();
        let (cls, cp) = Model::new(&ModelConfig::tiny(Variant::ExplanationToLabel), vocab.len()).unwrap();
        let pipe = ExplainThenPredict::new(&gen, &gp, &cls, &cp).unwrap();
        let refs: Vec<&ExampleRecord> = recs.iter().collect();
        let batch = Batch::from_records(&refs, &vocab);
        let a = pipe.predict(&batch).unwrap();
        assert_eq!(a, pipe.predict(&batch).unwrap());
        assert_eq!(a.len(), 4);
        assert!(ExplainThenPredict::new(&cls, &cp, &gen, &gp).is_err());
    }
}
