//! Neural building blocks over the [`crate::autodiff`] graph.
//!
//! Every layer owns [`ParamId`](crate::autodiff::ParamId)s in a shared
//! [`ParameterStore`](crate::autodiff::ParameterStore) and exposes a
//! forward function that appends nodes to a [`Graph`](crate::autodiff::Graph).
//! Batches are `[batch, dim]` tensors, one per time step.

mod attention;
mod basic;
mod decoder;
mod lstm;

pub use attention::{AttentionSide, AttentionStep, DualAttention, PreparedSide, DEFAULT_MAX_ATTENDED};
pub use basic::{feature_vector, Embedding, Linear, Mlp};
pub use decoder::{Decoder, DecoderState};
pub use lstm::{BiLstmEncoder, EncoderOutput, LstmCell};

#[cfg(test)]
pub(crate) mod test_util {
    use crate::autodiff::{AutodiffError, Graph, NodeId, Tensor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_input(g: &mut Graph<'_>, rows: usize, cols: usize, seed: u64) -> NodeId {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        g.input(Tensor::new(vec![rows, cols], data).unwrap())
    }

    /// A scalar that depends on every entry with distinct weights.
    pub fn probe_loss(g: &mut Graph<'_>, x: NodeId, seed: u64) -> Result<NodeId, AutodiffError> {
        let (r, c) = (g.value(x).rows(), g.value(x).cols());
        let w = random_input(g, r, c, seed ^ 0x5eed);
        let m = g.mul(x, w)?;
        Ok(g.sum(m))
    }
}
