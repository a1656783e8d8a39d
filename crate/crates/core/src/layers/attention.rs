use crate::autodiff::{AutodiffError, Graph, NodeId, ParameterStore};

use super::basic::Linear;
use super::lstm::EncoderOutput;

/// Upper bound on attended positions per sentence.
pub const DEFAULT_MAX_ATTENDED: usize = 84;

/// One sentence's attention: token projection, query projection and value
/// projection, each affine followed by tanh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionSide {
    pub token_proj: Linear,
    pub query_proj: Linear,
    pub value_proj: Linear,
}

/// The token-dependent half of an attention side, computed once per batch.
#[derive(Debug, Clone)]
pub struct PreparedSide {
    pub keys: Vec<NodeId>,
    pub values: Vec<NodeId>,
    /// Row-major `[batch, steps]`, true where position is attended.
    pub mask: Vec<bool>,
    pub batch: usize,
}

impl AttentionSide {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        state_dim: usize,
        query_dim: usize,
        attention_dim: usize,
        value_dim: usize,
    ) -> Result<Self, AutodiffError> {
        Ok(Self {
            token_proj: Linear::new(store, &format!("{name}.token"), state_dim, attention_dim)?,
            query_proj: Linear::new(store, &format!("{name}.query"), query_dim, attention_dim)?,
            value_proj: Linear::new(store, &format!("{name}.value"), state_dim, value_dim)?,
        })
    }

    /// Projects the first `min(width, max_attended)` token states.
    pub fn prepare(
        &self,
        g: &mut Graph<'_>,
        encoded: &EncoderOutput,
        max_attended: usize,
    ) -> Result<PreparedSide, AutodiffError> {
        let steps = encoded.states.len().min(max_attended);
        let batch = encoded.lengths.len();
        let mut keys = Vec::with_capacity(steps);
        let mut values = Vec::with_capacity(steps);
        for &s in &encoded.states[..steps] {
            keys.push(self.token_proj.forward_tanh(g, s)?);
            values.push(self.value_proj.forward_tanh(g, s)?);
        }
        let mask = (0..batch)
            .flat_map(|b| (0..steps).map(move |t| (b, t)))
            .map(|(b, t)| t < encoded.lengths[b])
            .collect();
        Ok(PreparedSide { keys, values, mask, batch })
    }

    /// Returns `(summary [batch, value_dim], weights [batch, steps])`.
    pub fn attend(
        &self,
        g: &mut Graph<'_>,
        prepared: &PreparedSide,
        query: NodeId,
    ) -> Result<(NodeId, NodeId), AutodiffError> {
        let q = self.query_proj.forward_tanh(g, query)?;
        let scores = prepared
            .keys
            .iter()
            .map(|&k| g.row_dot(q, k))
            .collect::<Result<Vec<_>, _>>()?;
        let scores = g.concat(&scores, 1)?;
        let weights = g.softmax(scores, 1, Some(prepared.mask.clone()))?;
        let summary = g.weighted_sum(weights, &prepared.values, &prepared.mask)?;
        Ok((summary, weights))
    }
}

/// Separate attention modules over premise and hypothesis tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualAttention {
    pub premise: AttentionSide,
    pub hypothesis: AttentionSide,
    pub max_attended: usize,
}

/// Output of one attention step.
#[derive(Debug, Clone, Copy)]
pub struct AttentionStep {
    pub premise_summary: NodeId,
    pub hypothesis_summary: NodeId,
    pub premise_weights: NodeId,
    pub hypothesis_weights: NodeId,
}

impl DualAttention {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        state_dim: usize,
        query_dim: usize,
        attention_dim: usize,
        value_dim: usize,
        max_attended: usize,
    ) -> Result<Self, AutodiffError> {
        Ok(Self {
            premise: AttentionSide::new(store, &format!("{name}.premise"), state_dim, query_dim, attention_dim, value_dim)?,
            hypothesis: AttentionSide::new(store, &format!("{name}.hypothesis"), state_dim, query_dim, attention_dim, value_dim)?,
            max_attended,
        })
    }

    /// Width of `[premise summary, hypothesis summary]`.
    pub fn context_dim(&self) -> usize {
        self.premise.value_proj.output + self.hypothesis.value_proj.output
    }

    pub fn prepare(
        &self,
        g: &mut Graph<'_>,
        premise: &EncoderOutput,
        hypothesis: &EncoderOutput,
    ) -> Result<(PreparedSide, PreparedSide), AutodiffError> {
        Ok((
            self.premise.prepare(g, premise, self.max_attended)?,
            self.hypothesis.prepare(g, hypothesis, self.max_attended)?,
        ))
    }

    pub fn step(
        &self,
        g: &mut Graph<'_>,
        prepared: &(PreparedSide, PreparedSide),
        query: NodeId,
    ) -> Result<AttentionStep, AutodiffError> {
        let (premise_summary, premise_weights) = self.premise.attend(g, &prepared.0, query)?;
        let (hypothesis_summary, hypothesis_weights) = self.hypothesis.attend(g, &prepared.1, query)?;
        Ok(AttentionStep { premise_summary, hypothesis_summary, premise_weights, hypothesis_weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use crate::layers::test_util::{probe_loss, random_input};

    fn encoded(g: &mut Graph<'_>, lengths: &[usize], width: usize, dim: usize, seed: u64) -> EncoderOutput {
        let states = (0..width).map(|t| random_input(g, lengths.len(), dim, seed + t as u64)).collect();
        let pooled = random_input(g, lengths.len(), dim, seed + 99);
        EncoderOutput { states, pooled, lengths: lengths.to_vec() }
    }

    #[test]
    fn identical_states_give_uniform_weights() {
        let mut store = ParameterStore::new(1);
        let side = AttentionSide::new(&mut store, "a", 4, 3, 5, 2).unwrap();
        let mut g = Graph::new(&store);
        let s = random_input(&mut g, 2, 4, 7);
        let enc = EncoderOutput { states: vec![s; 5], pooled: s, lengths: vec![5, 3] };
        let prep = side.prepare(&mut g, &enc, DEFAULT_MAX_ATTENDED).unwrap();
        let q = random_input(&mut g, 2, 3, 8);
        let (_, w) = side.attend(&mut g, &prep, q).unwrap();
        let w = g.value(w);
        for t in 0..5 {
            assert!((w.get(0, t) - 0.2).abs() < 1e-15);
            let expect = if t < 3 { 1.0 / 3.0 } else { 0.0 };
            assert!((w.get(1, t) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn single_token_takes_all_weight() {
        let mut store = ParameterStore::new(2);
        let side = AttentionSide::new(&mut store, "a", 4, 3, 5, 2).unwrap();
        let mut g = Graph::new(&store);
        let enc = encoded(&mut g, &[1], 4, 4, 3);
        let prep = side.prepare(&mut g, &enc, DEFAULT_MAX_ATTENDED).unwrap();
        let q = random_input(&mut g, 1, 3, 8);
        let (summary, w) = side.attend(&mut g, &prep, q).unwrap();
        assert_eq!(g.value(w).data(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(g.value(summary), g.value(prep.values[0]));
    }

    #[test]
    fn max_attended_truncates() {
        let mut store = ParameterStore::new(3);
        let side = AttentionSide::new(&mut store, "a", 4, 3, 5, 2).unwrap();
        let mut g = Graph::new(&store);
        let enc = encoded(&mut g, &[6, 2], 6, 4, 3);
        let prep = side.prepare(&mut g, &enc, 4).unwrap();
        assert_eq!(prep.keys.len(), 4);
        let q = random_input(&mut g, 2, 3, 8);
        let (_, w) = side.attend(&mut g, &prep, q).unwrap();
        assert_eq!(g.value(w).shape(), [2, 4]);
        let row: f64 = g.value(w).row_slice(0).iter().sum();
        assert!((row - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sides_are_parameter_disjoint() {
        let mut store = ParameterStore::new(4);
        let att = DualAttention::new(&mut store, "att", 4, 3, 5, 2, 84).unwrap();
        let run = |store: &ParameterStore| {
            let mut g = Graph::new(store);
            let p = encoded(&mut g, &[3, 2], 3, 4, 10);
            let h = encoded(&mut g, &[2, 2], 2, 4, 20);
            let prep = att.prepare(&mut g, &p, &h).unwrap();
            let q = random_input(&mut g, 2, 3, 30);
            let s = att.step(&mut g, &prep, q).unwrap();
            (g.value(s.premise_summary).clone(), g.value(s.hypothesis_summary).clone())
        };
        let (p0, h0) = run(&store);
        let w = att.premise.query_proj.weight;
        let bumped = store.get(w).map(|x| x + 0.5);
        store.set(w, bumped).unwrap();
        let (p1, h1) = run(&store);
        assert_ne!(p0, p1);
        assert_eq!(h0, h1);
        assert_eq!(att.context_dim(), 4);
    }

    #[test]
    fn gradients() {
        for seed in 0..5 {
            let mut store = ParameterStore::new(seed);
            let att = DualAttention::new(&mut store, "att", 4, 3, 5, 2, 84).unwrap();
            let report = grad_check(&mut store, 1e-5, 1e-4, |g| {
                let p = encoded(g, &[3, 1], 3, 4, seed);
                let h = encoded(g, &[2, 2], 2, 4, seed + 50);
                let prep = att.prepare(g, &p, &h)?;
                let q = random_input(g, 2, 3, seed + 80);
                let s = att.step(g, &prep, q)?;
                let both = g.concat(&[s.premise_summary, s.hypothesis_summary], 1)?;
                probe_loss(g, both, seed)
            })
            .unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }
}
