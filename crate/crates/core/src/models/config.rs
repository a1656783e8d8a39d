use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ModelError;
use crate::layers::DEFAULT_MAX_ATTENDED;

/// The five systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Generates an explanation from the hypothesis alone.
    PremiseAgnostic,
    /// Classifies and generates jointly from premise and hypothesis.
    PredictAndExplain,
    /// Generates from the feature vector, without a classifier.
    ExplainSeq2seq,
    /// Generates with attention over premise and hypothesis tokens.
    ExplainAttention,
    /// Classifies from an explanation alone.
    ExplanationToLabel,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::PremiseAgnostic,
        Variant::PredictAndExplain,
        Variant::ExplainSeq2seq,
        Variant::ExplainAttention,
        Variant::ExplanationToLabel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::PremiseAgnostic => "premise_agnostic",
            Variant::PredictAndExplain => "predict_and_explain",
            Variant::ExplainSeq2seq => "explain_seq2seq",
            Variant::ExplainAttention => "explain_attention",
            Variant::ExplanationToLabel => "explanation_to_label",
        }
    }

    pub fn predicts_label(self) -> bool {
        matches!(self, Variant::PredictAndExplain | Variant::ExplanationToLabel)
    }

    pub fn generates(self) -> bool {
        self != Variant::ExplanationToLabel
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().replace('-', "_").to_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == key)
            .ok_or_else(|| ModelError::Config(format!("unknown variant {s:?}")))
    }
}

/// Optimization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// Multiplier applied after every epoch.
    pub decay: f64,
    /// Divisor applied when the validation metric does not improve.
    pub shrink: f64,
    /// Training stops once the rate falls below this.
    pub min_learning_rate: f64,
    /// Global gradient-norm clip; `0` disables clipping.
    pub max_grad_norm: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            max_epochs: 20,
            learning_rate: 0.1,
            decay: 0.99,
            shrink: 5.0,
            min_learning_rate: 1e-5,
            max_grad_norm: 5.0,
        }
    }
}

/// Architecture, objective weight and seed of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Weight of the label loss; the explanation loss gets `1 − alpha`.
    pub alpha: f64,
    pub embed_dim: usize,
    pub encoder_hidden: usize,
    pub decoder_hidden: usize,
    pub classifier_hidden: usize,
    pub attention_dim: usize,
    pub max_attended: usize,
    pub max_decode_len: usize,
    /// Prefix the explanation with the label word. Defaults to on for
    /// `predict_and_explain` and must be off otherwise.
    pub label_conditioning: Option<bool>,
    pub seed: u64,
    pub training: TrainingConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::PredictAndExplain,
            alpha: 0.6,
            embed_dim: 64,
            encoder_hidden: 128,
            decoder_hidden: 128,
            classifier_hidden: 512,
            attention_dim: 128,
            max_attended: DEFAULT_MAX_ATTENDED,
            max_decode_len: 40,
            label_conditioning: None,
            seed: 1234,
            training: TrainingConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        Self { variant, ..Self::default() }
    }

    /// Sizes used in the original large-scale experiments.
    pub fn paper_scale(variant: Variant) -> Self {
        Self {
            variant,
            embed_dim: 300,
            encoder_hidden: 2048,
            decoder_hidden: 512,
            classifier_hidden: 512,
            attention_dim: 512,
            ..Self::default()
        }
    }

    /// Tiny sizes for gradient checks and tests.
    pub fn tiny(variant: Variant) -> Self {
        Self {
            variant,
            embed_dim: 4,
            encoder_hidden: 3,
            decoder_hidden: 5,
            classifier_hidden: 6,
            attention_dim: 4,
            max_decode_len: 8,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ModelError::Alpha(self.alpha));
        }
        let dims = [
            ("embed_dim", self.embed_dim),
            ("encoder_hidden", self.encoder_hidden),
            ("decoder_hidden", self.decoder_hidden),
            ("classifier_hidden", self.classifier_hidden),
            ("attention_dim", self.attention_dim),
            ("max_attended", self.max_attended),
            ("max_decode_len", self.max_decode_len),
            ("training.batch_size", self.training.batch_size),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, d)| *d == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.label_conditioning == Some(true) && self.variant != Variant::PredictAndExplain {
            return Err(ModelError::Config(format!(
                "label conditioning is only available for predict_and_explain, not {}",
                self.variant
            )));
        }
        Ok(())
    }

    /// The weight actually used: generation-only variants train with 0,
    /// the explanation classifier with 1.
    pub fn effective_alpha(&self) -> f64 {
        match self.variant {
            Variant::PredictAndExplain => self.alpha,
            Variant::ExplanationToLabel => 1.0,
            _ => 0.0,
        }
    }

    pub fn label_conditioned(&self) -> bool {
        self.variant == Variant::PredictAndExplain && self.label_conditioning.unwrap_or(true)
    }

    /// Hex SHA-256 of the canonical JSON form, identifying the architecture
    /// and hyper-parameters a checkpoint belongs to.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = ModelConfig::new(Variant::ExplainAttention);
        c.seed = 9;
        c.training.max_epochs = 3;
        let back = ModelConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c = ModelConfig::from_toml("variant = \"explain_seq2seq\"\n[training]\nbatch_size = 8\n").unwrap();
        assert_eq!(c.variant, Variant::ExplainSeq2seq);
        assert_eq!(c.training.batch_size, 8);
        assert_eq!(c.decoder_hidden, 128);
        assert!(ModelConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn alpha_rules() {
        let mut c = ModelConfig::new(Variant::PredictAndExplain);
        c.alpha = 1.5;
        assert!(c.validate().is_err());
        c.alpha = 0.3;
        assert_eq!(c.effective_alpha(), 0.3);
        for v in [Variant::ExplainSeq2seq, Variant::ExplainAttention, Variant::PremiseAgnostic] {
            assert_eq!(ModelConfig { variant: v, ..c.clone() }.effective_alpha(), 0.0);
        }
        assert_eq!(ModelConfig::new(Variant::ExplanationToLabel).effective_alpha(), 1.0);
    }

    #[test]
    fn label_conditioning_rules() {
        assert!(ModelConfig::new(Variant::PredictAndExplain).label_conditioned());
        let mut c = ModelConfig::new(Variant::ExplainSeq2seq);
        assert!(!c.label_conditioned());
        c.label_conditioning = Some(true);
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_changes_with_config() {
        let a = ModelConfig::default();
        let b = ModelConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!("explain-attention".parse::<Variant>().unwrap(), Variant::ExplainAttention);
    }
}
