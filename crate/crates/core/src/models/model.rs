use crate::autodiff::{Graph, NodeId, ParameterStore, Tensor};
use crate::corpus::{Batch, Label, PaddedIds, Vocabulary};
use crate::layers::{
    feature_vector, BiLstmEncoder, Decoder, DecoderState, DualAttention, Embedding, Mlp, PreparedSide,
};

use super::config::{ModelConfig, Variant};
use super::loss::{total_loss, LossBreakdown};
use super::ModelError;

/// Parameter handles of one model; the values live in a [`ParameterStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab_size: usize,
    pub embedding: Embedding,
    pub encoder: BiLstmEncoder,
    pub classifier: Option<Mlp>,
    pub decoder: Option<Decoder>,
    pub attention: Option<DualAttention>,
}

/// Loss nodes for one batch.
#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    /// Mean label NLL per example.
    pub label: NodeId,
    /// Mean summed token NLL per example.
    pub explanation: NodeId,
    pub total: NodeId,
    /// Summed token NLL over the batch, EOS included.
    pub token_nll: NodeId,
    pub tokens: usize,
    /// `[batch, 3]` label distribution, for variants with a classifier.
    pub label_distribution: Option<NodeId>,
}

impl LossNodes {
    pub fn breakdown(&self, g: &Graph<'_>) -> LossBreakdown {
        LossBreakdown {
            label: g.value(self.label).item(),
            explanation: g.value(self.explanation).item(),
            total: g.value(self.total).item(),
        }
    }
}

/// Output of inference for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub pair_id: String,
    pub label: Option<Label>,
    pub distribution: Option<[f64; 3]>,
    /// Token fed to the decoder before the first word.
    pub prefix: Option<usize>,
    /// Generated ids, EOS excluded.
    pub explanation: Vec<usize>,
    /// Log-probability of each generated id, followed by that of EOS when
    /// generation stopped on it.
    pub token_logprobs: Vec<f64>,
    pub reached_eos: bool,
}

impl Prediction {
    pub fn explanation_tokens(&self, vocab: &Vocabulary) -> Vec<String> {
        crate::corpus::decode(vocab, &self.explanation)
    }

    pub fn logprob_sum(&self) -> f64 {
        self.token_logprobs.iter().sum()
    }
}

enum Conditioning {
    /// `context` is already projected onto the decoder gates.
    Fixed { init: Option<NodeId>, context: NodeId },
    Attention(Box<(PreparedSide, PreparedSide)>),
}

impl Model {
    /// Builds the model in a fresh store seeded from the config.
    pub fn new(config: &ModelConfig, vocab_size: usize) -> Result<(Self, ParameterStore), ModelError> {
        let mut store = ParameterStore::new(config.seed);
        let model = Self::build(config, vocab_size, &mut store)?;
        Ok((model, store))
    }

    pub fn build(config: &ModelConfig, vocab_size: usize, store: &mut ParameterStore) -> Result<Self, ModelError> {
        config.validate()?;
        if vocab_size <= Vocabulary::label_token(Label::Contradiction) {
            return Err(ModelError::Config(format!("vocabulary of {vocab_size} lacks the special tokens")));
        }
        let c = config;
        let embedding = Embedding::new(store, "embedding", vocab_size, c.embed_dim)?;
        let encoder = BiLstmEncoder::new(store, "encoder", c.embed_dim, c.encoder_hidden)?;
        let sent = encoder.output_dim();
        let feat = 4 * sent;
        let classifier = match c.variant {
            Variant::PredictAndExplain => Some(Mlp::new(store, "classifier", feat, c.classifier_hidden, 3)?),
            Variant::ExplanationToLabel => Some(Mlp::new(store, "classifier", sent, c.classifier_hidden, 3)?),
            _ => None,
        };
        let attention = match c.variant {
            Variant::ExplainAttention => Some(DualAttention::new(
                store,
                "attention",
                sent,
                c.decoder_hidden,
                c.attention_dim,
                c.decoder_hidden,
                c.max_attended,
            )?),
            _ => None,
        };
        let (context_dim, init_dim) = match c.variant {
            Variant::PremiseAgnostic => (sent, Some(sent)),
            Variant::PredictAndExplain | Variant::ExplainSeq2seq => (feat, Some(feat)),
            Variant::ExplainAttention => (attention.as_ref().map_or(0, DualAttention::context_dim), None),
            Variant::ExplanationToLabel => (0, None),
        };
        let decoder = if c.variant.generates() {
            Some(Decoder::new(store, "decoder", c.embed_dim, context_dim, c.decoder_hidden, vocab_size, init_dim)?)
        } else {
            None
        };
        Ok(Self { config: c.clone(), vocab_size, embedding, encoder, classifier, decoder, attention })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    fn encode(&self, g: &mut Graph<'_>, ids: &PaddedIds) -> Result<crate::layers::EncoderOutput, ModelError> {
        if ids.rows() == 0 || ids.lengths.contains(&0) {
            return Err(ModelError::EmptySentence);
        }
        Ok(self.encoder.encode(g, &self.embedding, ids)?)
    }

    /// Max-pooled encoder vectors, one `2·hidden` row per sequence.
    pub fn sentence_embeddings(&self, store: &ParameterStore, ids: &PaddedIds) -> Result<Tensor, ModelError> {
        let mut g = Graph::new(store);
        let out = self.encode(&mut g, ids)?;
        Ok(g.value(out.pooled).clone())
    }

    /// Encodes what the variant reads and returns the decoder conditioning
    /// plus classifier logits where applicable.
    fn condition(&self, g: &mut Graph<'_>, batch: &Batch) -> Result<(Option<Conditioning>, Option<NodeId>), ModelError> {
        match self.variant() {
            Variant::PremiseAgnostic => {
                let v = self.encode(g, &batch.hypothesis)?.pooled;
                let context = self.decoder_ref().project_context(g, v)?;
                Ok((Some(Conditioning::Fixed { init: Some(v), context }), None))
            }
            Variant::PredictAndExplain | Variant::ExplainSeq2seq => {
                let u = self.encode(g, &batch.premise)?.pooled;
                let v = self.encode(g, &batch.hypothesis)?.pooled;
                let f = feature_vector(g, u, v)?;
                let logits = match &self.classifier {
                    Some(mlp) => Some(mlp.logits(g, f)?),
                    None => None,
                };
                let context = self.decoder_ref().project_context(g, f)?;
                Ok((Some(Conditioning::Fixed { init: Some(f), context }), logits))
            }
            Variant::ExplainAttention => {
                let p = self.encode(g, &batch.premise)?;
                let h = self.encode(g, &batch.hypothesis)?;
                let att = self.attention.as_ref().expect("attention variant has attention");
                let prepared = att.prepare(g, &p, &h)?;
                Ok((Some(Conditioning::Attention(Box::new(prepared))), None))
            }
            Variant::ExplanationToLabel => {
                let e = batch.explanation.as_ref().ok_or(ModelError::MissingExplanation)?;
                let u = self.encode(g, e)?.pooled;
                let mlp = self.classifier.as_ref().expect("classifier variant has classifier");
                Ok((None, Some(mlp.logits(g, u)?)))
            }
        }
    }

    fn decoder_ref(&self) -> &Decoder {
        self.decoder.as_ref().expect("generating variant has decoder")
    }

    fn decode_step(
        &self,
        g: &mut Graph<'_>,
        cond: &Conditioning,
        state: DecoderState,
        prev: &[usize],
    ) -> Result<(DecoderState, NodeId), ModelError> {
        let dec = self.decoder_ref();
        let emb = self.embedding.lookup(g, prev)?;
        match cond {
            Conditioning::Fixed { context, .. } => Ok(dec.step_projected(g, emb, *context, state)?),
            Conditioning::Attention(prepared) => {
                let att = self.attention.as_ref().expect("attention variant has attention");
                let s = att.step(g, prepared, state.h)?;
                let context = g.concat(&[s.premise_summary, s.hypothesis_summary], 1)?;
                Ok(dec.step(g, emb, context, state)?)
            }
        }
    }

    fn initial_state(&self, g: &mut Graph<'_>, cond: &Conditioning, batch: usize) -> Result<DecoderState, ModelError> {
        let dec = self.decoder_ref();
        let init = match cond {
            Conditioning::Fixed { init, .. } => *init,
            Conditioning::Attention(_) => None,
        };
        Ok(dec.initial_state(g, init, batch)?)
    }

    fn prefix_tokens(&self, labels: &[Label]) -> Vec<usize> {
        if self.config.label_conditioned() {
            labels.iter().map(|&l| Vocabulary::label_token(l)).collect()
        } else {
            vec![Vocabulary::SOS; labels.len()]
        }
    }

    /// Teacher-forced summed token NLL of `[prefix, w1..wn] → [w1..wn, EOS]`.
    fn teacher_forced(
        &self,
        g: &mut Graph<'_>,
        cond: &Conditioning,
        prefix: &[usize],
        target: &PaddedIds,
    ) -> Result<(NodeId, usize), ModelError> {
        let batch = prefix.len();
        let mut state = self.initial_state(g, cond, batch)?;
        let mut total: Option<NodeId> = None;
        let mut tokens = 0;
        for step in 0..=target.width() {
            let prev = if step == 0 { prefix.to_vec() } else { target.column(step - 1) };
            let targets: Vec<Option<usize>> = (0..batch)
                .map(|r| match step.cmp(&target.lengths[r]) {
                    std::cmp::Ordering::Less => Some(target.ids[r][step]),
                    std::cmp::Ordering::Equal => Some(Vocabulary::EOS),
                    std::cmp::Ordering::Greater => None,
                })
                .collect();
            if targets.iter().all(Option::is_none) {
                break;
            }
            let (next, logits) = self.decode_step(g, cond, state, &prev)?;
            state = next;
            let lp = g.log_softmax(logits)?;
            let nll = g.nll(lp, &targets)?;
            tokens += targets.iter().flatten().count();
            total = Some(match total {
                None => nll,
                Some(acc) => g.add(acc, nll)?,
            });
        }
        Ok((total.expect("at least the EOS step"), tokens))
    }

    /// Builds the training objective for a batch.
    pub fn loss(&self, g: &mut Graph<'_>, batch: &Batch) -> Result<LossNodes, ModelError> {
        let n = batch.len();
        if n == 0 {
            return Err(ModelError::EmptyBatch);
        }
        let inv = 1.0 / n as f64;
        let (cond, logits) = self.condition(g, batch)?;
        let (label, label_distribution) = match logits {
            Some(z) => {
                let lp = g.log_softmax(z)?;
                let gold: Vec<Option<usize>> = batch.labels.iter().map(|l| Some(l.index())).collect();
                let nll = g.nll(lp, &gold)?;
                let dist = g.softmax(z, 1, None)?;
                (g.scale(nll, inv), Some(dist))
            }
            None => (g.input(Tensor::scalar(0.0)), None),
        };
        let (explanation, token_nll, tokens) = match &cond {
            Some(cond) => {
                let target = batch.explanation.as_ref().ok_or(ModelError::MissingExplanation)?;
                let prefix = self.prefix_tokens(&batch.labels);
                let (sum, tokens) = self.teacher_forced(g, cond, &prefix, target)?;
                (g.scale(sum, inv), sum, tokens)
            }
            None => {
                let z = g.input(Tensor::scalar(0.0));
                (z, z, 0)
            }
        };
        let alpha = self.config.effective_alpha();
        let a = g.scale(label, alpha);
        let b = g.scale(explanation, 1.0 - alpha);
        let total = g.add(a, b)?;
        Ok(LossNodes { label, explanation, total, token_nll, tokens, label_distribution })
    }

    /// Loss values only, checked against the weighted-sum definition.
    pub fn loss_values(&self, store: &ParameterStore, batch: &Batch) -> Result<LossBreakdown, ModelError> {
        let mut g = Graph::new(store);
        let nodes = self.loss(&mut g, batch)?;
        let b = nodes.breakdown(&g);
        total_loss(self.config.effective_alpha(), b.label, b.explanation)?;
        Ok(b)
    }

    /// Labels and greedy explanations for a batch. For
    /// `explanation_to_label` the batch's explanations are classified and
    /// nothing is generated.
    pub fn predict(&self, store: &ParameterStore, batch: &Batch) -> Result<Vec<Prediction>, ModelError> {
        self.predict_with_len(store, batch, self.config.max_decode_len)
    }

    pub fn predict_with_len(
        &self,
        store: &ParameterStore,
        batch: &Batch,
        max_len: usize,
    ) -> Result<Vec<Prediction>, ModelError> {
        let n = batch.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut g = Graph::new(store);
        let (cond, logits) = self.condition(&mut g, batch)?;
        let mut out: Vec<Prediction> = batch
            .pair_ids
            .iter()
            .map(|id| Prediction {
                pair_id: id.clone(),
                label: None,
                distribution: None,
                prefix: None,
                explanation: Vec::new(),
                token_logprobs: Vec::new(),
                reached_eos: false,
            })
            .collect();
        let mut predicted = Vec::new();
        if let Some(z) = logits {
            let dist = g.softmax(z, 1, None)?;
            let d = g.value(dist);
            for (r, p) in out.iter_mut().enumerate() {
                let label = Label::from_index(d.argmax_row(r)).expect("three classes");
                p.label = Some(label);
                p.distribution = Some([d.get(r, 0), d.get(r, 1), d.get(r, 2)]);
                predicted.push(label);
            }
        }
        let Some(cond) = cond else {
            return Ok(out);
        };
        let prefix = if self.config.label_conditioned() {
            self.prefix_tokens(&predicted)
        } else {
            vec![Vocabulary::SOS; n]
        };
        let mut state = self.initial_state(&mut g, &cond, n)?;
        let mut prev = prefix.clone();
        let mut done = vec![false; n];
        for (p, &t) in out.iter_mut().zip(&prefix) {
            p.prefix = Some(t);
        }
        for _ in 0..max_len.max(1) {
            let (next, logits) = self.decode_step(&mut g, &cond, state, &prev)?;
            state = next;
            let lp = g.log_softmax(logits)?;
            let lp = g.value(lp);
            for r in 0..n {
                if done[r] {
                    continue;
                }
                let tok = lp.argmax_row(r);
                out[r].token_logprobs.push(lp.get(r, tok));
                if tok == Vocabulary::EOS {
                    done[r] = true;
                    out[r].reached_eos = true;
                } else {
                    out[r].explanation.push(tok);
                }
                prev[r] = tok;
            }
            if done.iter().all(|&d| d) {
                break;
            }
        }
        Ok(out)
    }
}
