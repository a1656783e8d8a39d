use crate::autodiff::{AutodiffError, Graph, NodeId, ParamId, ParameterStore, Tensor};
use crate::corpus::PaddedIds;

use super::basic::Embedding;

/// A single LSTM cell with fused gate weights ordered input, forget,
/// candidate, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmCell {
    pub input_weight: ParamId,
    pub hidden_weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(store: &mut ParameterStore, name: &str, input: usize, hidden: usize) -> Result<Self, AutodiffError> {
        let bound = 1.0 / (hidden.max(1) as f64).sqrt();
        Ok(Self {
            input_weight: store.add_uniform(&format!("{name}.wx"), &[input, 4 * hidden], bound)?,
            hidden_weight: store.add_uniform(&format!("{name}.wh"), &[hidden, 4 * hidden], bound)?,
            bias: store.add_zeros(&format!("{name}.b"), &[1, 4 * hidden])?,
            input,
            hidden,
        })
    }

    /// Zero `(h, c)` for a batch.
    pub fn zero_state(&self, g: &mut Graph<'_>, batch: usize) -> (NodeId, NodeId) {
        let h = g.input(Tensor::zeros(&[batch, self.hidden]));
        let c = g.input(Tensor::zeros(&[batch, self.hidden]));
        (h, c)
    }

    /// One step: returns the new `(h, c)`.
    pub fn step(
        &self,
        g: &mut Graph<'_>,
        x: NodeId,
        h: NodeId,
        c: NodeId,
    ) -> Result<(NodeId, NodeId), AutodiffError> {
        let wx = g.param(self.input_weight);
        let xw = g.matmul(x, wx)?;
        self.step_from_input_term(g, xw, h, c)
    }

    /// One step given the precomputed `[batch, 4·hidden]` input term `x·Wx`.
    pub fn step_from_input_term(
        &self,
        g: &mut Graph<'_>,
        xw: NodeId,
        h: NodeId,
        c: NodeId,
    ) -> Result<(NodeId, NodeId), AutodiffError> {
        let wh = g.param(self.hidden_weight);
        let b = g.param(self.bias);
        let hw = g.matmul(h, wh)?;
        let pre = g.add(xw, hw)?;
        let pre = g.add(pre, b)?;
        let n = self.hidden;
        let gate = |g: &mut Graph<'_>, k: usize| g.slice(pre, 1, k * n, n);
        let (i, f, cand, o) = (gate(g, 0)?, gate(g, 1)?, gate(g, 2)?, gate(g, 3)?);
        let i = g.sigmoid(i);
        let f = g.sigmoid(f);
        let cand = g.tanh(cand);
        let o = g.sigmoid(o);
        let keep = g.mul(f, c)?;
        let write = g.mul(i, cand)?;
        let c_new = g.add(keep, write)?;
        let squashed = g.tanh(c_new);
        let h_new = g.mul(o, squashed)?;
        Ok((h_new, c_new))
    }
}

/// Per-token states and the max-pooled sentence vector of a batch.
#[derive(Debug, Clone)]
pub struct EncoderOutput {
    /// `[batch, 2·hidden]` per time step: forward state then backward state.
    pub states: Vec<NodeId>,
    /// `[batch, 2·hidden]`, max over the first `lengths[b]` steps.
    pub pooled: NodeId,
    pub lengths: Vec<usize>,
}

/// Bidirectional single-layer LSTM followed by max-pooling over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLstmEncoder {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl BiLstmEncoder {
    pub fn new(store: &mut ParameterStore, name: &str, input: usize, hidden: usize) -> Result<Self, AutodiffError> {
        Ok(Self {
            forward: LstmCell::new(store, &format!("{name}.fwd"), input, hidden)?,
            backward: LstmCell::new(store, &format!("{name}.bwd"), input, hidden)?,
        })
    }

    pub fn output_dim(&self) -> usize {
        2 * self.forward.hidden
    }

    /// Encodes a padded batch of token ids.
    ///
    /// The backward pass holds its initial state until it reaches each row's
    /// last real token, so neither direction sees padding before a real token.
    pub fn encode(
        &self,
        g: &mut Graph<'_>,
        embedding: &Embedding,
        ids: &PaddedIds,
    ) -> Result<EncoderOutput, AutodiffError> {
        let width = ids.width();
        let batch = ids.rows();
        if width == 0 || ids.lengths.contains(&0) {
            return Err(AutodiffError::EmptyAxis("encode"));
        }
        let inputs = (0..width)
            .map(|t| embedding.lookup(g, &ids.column(t)))
            .collect::<Result<Vec<_>, _>>()?;
        self.encode_embedded(g, &inputs, &ids.lengths, batch)
    }

    /// As [`BiLstmEncoder::encode`] over precomputed `[batch, input]` rows.
    pub fn encode_embedded(
        &self,
        g: &mut Graph<'_>,
        inputs: &[NodeId],
        lengths: &[usize],
        batch: usize,
    ) -> Result<EncoderOutput, AutodiffError> {
        let width = inputs.len();
        if width == 0 || lengths.contains(&0) {
            return Err(AutodiffError::EmptyAxis("encode"));
        }
        let (mut h, mut c) = self.forward.zero_state(g, batch);
        let mut fwd = Vec::with_capacity(width);
        for &x in inputs {
            (h, c) = self.forward.step(g, x, h, c)?;
            fwd.push(h);
        }
        let (h0, c0) = self.backward.zero_state(g, batch);
        let (mut h, mut c) = (h0, c0);
        let mut bwd = vec![h0; width];
        for t in (0..width).rev() {
            let (hn, cn) = self.backward.step(g, inputs[t], h, c)?;
            let live: Vec<bool> = lengths.iter().map(|&l| t < l).collect();
            if live.iter().all(|&x| x) {
                (h, c) = (hn, cn);
            } else {
                h = g.select_rows(&live, hn, h)?;
                c = g.select_rows(&live, cn, c)?;
            }
            bwd[t] = h;
        }
        let states = fwd
            .into_iter()
            .zip(bwd)
            .map(|(f, b)| g.concat(&[f, b], 1))
            .collect::<Result<Vec<_>, _>>()?;
        let pooled = g.max_pool_seq(&states, lengths)?;
        Ok(EncoderOutput { states, pooled, lengths: lengths.to_vec() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use crate::layers::test_util::{probe_loss, random_input};

    #[test]
    fn zero_cell_gives_zero_state() {
        let mut store = ParameterStore::new(0);
        let cell = LstmCell::new(&mut store, "c", 3, 2).unwrap();
        store.set(cell.input_weight, Tensor::zeros(&[3, 8])).unwrap();
        store.set(cell.hidden_weight, Tensor::zeros(&[2, 8])).unwrap();
        let mut g = Graph::new(&store);
        let x = random_input(&mut g, 2, 3, 1);
        let (h, c) = cell.zero_state(&mut g, 2);
        let (h, c) = cell.step(&mut g, x, h, c).unwrap();
        assert!(g.value(h).data().iter().all(|&v| v == 0.0));
        assert!(g.value(c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let mut store = ParameterStore::new(0);
        let cell = LstmCell::new(&mut store, "c", 3, 2).unwrap();
        store.set(cell.input_weight, Tensor::zeros(&[3, 8])).unwrap();
        store.set(cell.hidden_weight, Tensor::zeros(&[2, 8])).unwrap();
        // input gate −∞-ish, forget gate +∞-ish
        let bias = [-800.0, -800.0, 800.0, 800.0, 0.0, 0.0, 0.0, 0.0];
        store.set(cell.bias, Tensor::row(&bias)).unwrap();
        let mut g = Graph::new(&store);
        let x = random_input(&mut g, 1, 3, 1);
        let h = g.input(Tensor::row(&[0.3, -0.2]));
        let c = g.input(Tensor::row(&[0.7, -1.5]));
        let (_, c2) = cell.step(&mut g, x, h, c).unwrap();
        assert_eq!(g.value(c2).data(), [0.7, -1.5]);
    }

    #[test]
    fn cell_gradients() {
        for seed in 0..5 {
            let mut store = ParameterStore::new(seed);
            let cell = LstmCell::new(&mut store, "c", 4, 3).unwrap();
            let report = grad_check(&mut store, 1e-5, 1e-4, |g| {
                let (mut h, mut c) = cell.zero_state(g, 2);
                for t in 0..3 {
                    let x = random_input(g, 2, 4, seed * 10 + t);
                    (h, c) = cell.step(g, x, h, c)?;
                }
                probe_loss(g, h, seed)
            })
            .unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }

    fn setup(seed: u64) -> (ParameterStore, Embedding, BiLstmEncoder) {
        let mut store = ParameterStore::new(seed);
        let emb = Embedding::new(&mut store, "emb", 10, 4).unwrap();
        let enc = BiLstmEncoder::new(&mut store, "enc", 4, 3).unwrap();
        (store, emb, enc)
    }

    #[test]
    fn single_token_pools_to_its_state() {
        let (store, emb, enc) = setup(3);
        let mut g = Graph::new(&store);
        let out = enc.encode(&mut g, &emb, &PaddedIds::from_sequences(vec![vec![7]])).unwrap();
        assert_eq!(g.value(out.pooled), g.value(out.states[0]));
        assert_eq!(g.value(out.pooled).cols(), 6);
    }

    #[test]
    fn padding_leaves_outputs_bit_identical() {
        let (store, emb, enc) = setup(4);
        let run = |extra: usize| {
            let mut g = Graph::new(&store);
            let mut ids = PaddedIds::from_sequences(vec![vec![5, 8, 6]]);
            ids.pad_extra(extra);
            let out = enc.encode(&mut g, &emb, &ids).unwrap();
            let states: Vec<Vec<u64>> = out.states[..3]
                .iter()
                .map(|&s| g.value(s).data().iter().map(|x| x.to_bits()).collect())
                .collect();
            let pooled: Vec<u64> = g.value(out.pooled).data().iter().map(|x| x.to_bits()).collect();
            (states, pooled)
        };
        let base = run(0);
        for extra in 1..=10 {
            assert_eq!(run(extra), base);
        }
    }

    #[test]
    fn order_matters() {
        let (store, emb, enc) = setup(5);
        let mut g = Graph::new(&store);
        let a = enc.encode(&mut g, &emb, &PaddedIds::from_sequences(vec![vec![5, 8]])).unwrap();
        let b = enc.encode(&mut g, &emb, &PaddedIds::from_sequences(vec![vec![8, 5]])).unwrap();
        assert_ne!(g.value(a.states[0]), g.value(b.states[1]));
    }

    #[test]
    fn rejects_empty() {
        let (store, emb, enc) = setup(6);
        let mut g = Graph::new(&store);
        let ids = PaddedIds::from_sequences(vec![vec![5], vec![]]);
        assert!(enc.encode(&mut g, &emb, &ids).is_err());
    }

    #[test]
    fn encoder_gradients_with_ragged_batch() {
        for seed in 0..5 {
            let (mut store, emb, enc) = setup(seed);
            let ids = PaddedIds::from_sequences(vec![vec![1, 2, 3], vec![4, 5], vec![6]]);
            let report = grad_check(&mut store, 1e-5, 1e-4, |g| {
                let out = enc.encode(g, &emb, &ids)?;
                let s = probe_loss(g, out.states[1], seed)?;
                let p = probe_loss(g, out.pooled, seed + 1)?;
                g.add(s, p)
            })
            .unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }
}
