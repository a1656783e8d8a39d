use crate::autodiff::{AutodiffError, Graph, NodeId, ParameterStore};

use super::basic::Linear;
use super::lstm::LstmCell;

/// Hidden and cell state of the decoder LSTM.
#[derive(Debug, Clone, Copy)]
pub struct DecoderState {
    pub h: NodeId,
    pub c: NodeId,
}

/// An LSTM language model whose input at each step is the previous word's
/// embedding concatenated with a fixed-width context vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoder {
    pub cell: LstmCell,
    pub output: Linear,
    /// Maps an initializing vector to the hidden size when widths differ.
    pub init: Option<Linear>,
    pub embed_dim: usize,
    pub context_dim: usize,
}

impl Decoder {
    /// `init_dim` is the width of the vector used as the initial hidden
    /// state, or `None` for a zero initial state.
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        embed_dim: usize,
        context_dim: usize,
        hidden: usize,
        vocab: usize,
        init_dim: Option<usize>,
    ) -> Result<Self, AutodiffError> {
        let cell = LstmCell::new(store, &format!("{name}.cell"), embed_dim + context_dim, hidden)?;
        let output = Linear::new(store, &format!("{name}.out"), hidden, vocab)?;
        let init = match init_dim {
            Some(d) if d != hidden => Some(Linear::new(store, &format!("{name}.init"), d, hidden)?),
            _ => None,
        };
        Ok(Self { cell, output, init, embed_dim, context_dim })
    }

    pub fn hidden(&self) -> usize {
        self.cell.hidden
    }

    /// Initial state from `vector` (projected if needed), or zeros; the cell
    /// state always starts at zero.
    pub fn initial_state(
        &self,
        g: &mut Graph<'_>,
        vector: Option<NodeId>,
        batch: usize,
    ) -> Result<DecoderState, AutodiffError> {
        let (zero_h, c) = self.cell.zero_state(g, batch);
        let h = match (vector, &self.init) {
            (None, _) => zero_h,
            (Some(v), Some(proj)) => proj.forward(g, v)?,
            (Some(v), None) => {
                if g.value(v).shape() != [batch, self.hidden()] {
                    return Err(AutodiffError::ShapeMismatch {
                        op: "decoder_init",
                        detail: format!("{:?} for hidden {}", g.value(v).shape(), self.hidden()),
                    });
                }
                v
            }
        };
        Ok(DecoderState { h, c })
    }

    /// Gate contribution of a context that is fed at every step, so it can
    /// be multiplied once per sequence.
    pub fn project_context(&self, g: &mut Graph<'_>, context: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_context(g, context)?;
        let wx = g.param(self.cell.input_weight);
        let wc = g.slice(wx, 0, self.embed_dim, self.context_dim)?;
        g.matmul(context, wc)
    }

    /// Same as [`Decoder::step`] with the context already passed through
    /// [`Decoder::project_context`].
    pub fn step_projected(
        &self,
        g: &mut Graph<'_>,
        prev_embedding: NodeId,
        projected_context: NodeId,
        state: DecoderState,
    ) -> Result<(DecoderState, NodeId), AutodiffError> {
        let wx = g.param(self.cell.input_weight);
        let we = g.slice(wx, 0, 0, self.embed_dim)?;
        let ew = g.matmul(prev_embedding, we)?;
        let xw = g.add(ew, projected_context)?;
        let (h, c) = self.cell.step_from_input_term(g, xw, state.h, state.c)?;
        let logits = self.output.forward(g, h)?;
        Ok((DecoderState { h, c }, logits))
    }

    fn check_context(&self, g: &Graph<'_>, context: NodeId) -> Result<(), AutodiffError> {
        let width = g.value(context).cols();
        if width != self.context_dim {
            return Err(AutodiffError::ShapeMismatch {
                op: "decoder_step",
                detail: format!("context width {width}, expected {}", self.context_dim),
            });
        }
        Ok(())
    }

    /// One step: returns the new state and `[batch, vocab]` logits.
    pub fn step(
        &self,
        g: &mut Graph<'_>,
        prev_embedding: NodeId,
        context: NodeId,
        state: DecoderState,
    ) -> Result<(DecoderState, NodeId), AutodiffError> {
        self.check_context(g, context)?;
        let x = g.concat(&[prev_embedding, context], 1)?;
        let (h, c) = self.cell.step(g, x, state.h, state.c)?;
        let logits = self.output.forward(g, h)?;
        Ok((DecoderState { h, c }, logits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use crate::layers::test_util::{probe_loss, random_input};

    #[test]
    fn input_width_is_embedding_plus_context() {
        let mut store = ParameterStore::new(0);
        let d = Decoder::new(&mut store, "dec", 3, 8, 4, 11, Some(8)).unwrap();
        assert_eq!(d.cell.input, 11);
        assert!(d.init.is_some());
        let same = Decoder::new(&mut store, "dec2", 3, 8, 4, 11, Some(4)).unwrap();
        assert!(same.init.is_none());
    }

    #[test]
    fn rejects_wrong_context() {
        let mut store = ParameterStore::new(0);
        let d = Decoder::new(&mut store, "dec", 3, 8, 4, 11, None).unwrap();
        let mut g = Graph::new(&store);
        let e = random_input(&mut g, 2, 3, 1);
        let ctx = random_input(&mut g, 2, 7, 2);
        let s = d.initial_state(&mut g, None, 2).unwrap();
        assert!(d.step(&mut g, e, ctx, s).is_err());
    }

    #[test]
    fn projected_step_matches_concatenated_input() {
        let mut store = ParameterStore::new(3);
        let d = Decoder::new(&mut store, "dec", 3, 5, 4, 6, Some(5)).unwrap();
        let mut g = Graph::new(&store);
        let ctx = random_input(&mut g, 2, 5, 1);
        let projected = d.project_context(&mut g, ctx).unwrap();
        let mut plain = d.initial_state(&mut g, Some(ctx), 2).unwrap();
        let mut fast = plain;
        for t in 0..3 {
            let e = random_input(&mut g, 2, 3, 20 + t);
            let (p, lp) = d.step(&mut g, e, ctx, plain).unwrap();
            let (f, lf) = d.step_projected(&mut g, e, projected, fast).unwrap();
            for (a, b) in g.value(lp).data().iter().zip(g.value(lf).data()) {
                assert!((a - b).abs() < 1e-12);
            }
            (plain, fast) = (p, f);
        }
    }

    #[test]
    fn gradients() {
        for seed in 0..5 {
            let mut store = ParameterStore::new(seed);
            let d = Decoder::new(&mut store, "dec", 3, 5, 4, 6, Some(5)).unwrap();
            let report = grad_check(&mut store, 1e-5, 1e-4, |g| {
                let ctx = random_input(g, 2, 5, seed);
                let mut s = d.initial_state(g, Some(ctx), 2)?;
                let mut total = None;
                for t in 0..3 {
                    let e = random_input(g, 2, 3, seed + 10 + t);
                    let (next, logits) = d.step(g, e, ctx, s)?;
                    s = next;
                    let lp = g.log_softmax(logits)?;
                    let l = g.nll(lp, &[Some(t as usize), Some(5 - t as usize)])?;
                    total = Some(match total {
                        None => l,
                        Some(acc) => g.add(acc, l)?,
                    });
                }
                let extra = probe_loss(g, s.c, seed)?;
                g.add(total.unwrap(), extra)
            })
            .unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }
}
