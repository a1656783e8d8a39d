use crate::autodiff::{AutodiffError, Graph, NodeId, ParamId, ParameterStore};

/// Affine map `x · W + b` with `W: [in, out]`, `b: [1, out]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    /// Weights uniform in `±1/√in`, zero bias.
    pub fn new(store: &mut ParameterStore, name: &str, input: usize, output: usize) -> Result<Self, AutodiffError> {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let weight = store.add_uniform(&format!("{name}.weight"), &[input, output], bound)?;
        let bias = store.add_zeros(&format!("{name}.bias"), &[1, output])?;
        Ok(Self { weight, bias, input, output })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: NodeId) -> Result<NodeId, AutodiffError> {
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        let xw = g.matmul(x, w)?;
        g.add(xw, b)
    }

    /// `tanh(x · W + b)`.
    pub fn forward_tanh(&self, g: &mut Graph<'_>, x: NodeId) -> Result<NodeId, AutodiffError> {
        let a = self.forward(g, x)?;
        Ok(g.tanh(a))
    }
}

/// Trainable token embeddings, `[vocab, dim]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParameterStore, name: &str, vocab: usize, dim: usize) -> Result<Self, AutodiffError> {
        let table = store.add_uniform(&format!("{name}.table"), &[vocab, dim], 0.1)?;
        Ok(Self { table, vocab, dim })
    }

    /// `[ids.len(), dim]` rows of the table.
    pub fn lookup(&self, g: &mut Graph<'_>, ids: &[usize]) -> Result<NodeId, AutodiffError> {
        let t = g.param(self.table);
        g.gather(t, ids)
    }
}

/// `[u, v, |u − v|, u ⊙ v]` along the feature axis.
pub fn feature_vector(g: &mut Graph<'_>, u: NodeId, v: NodeId) -> Result<NodeId, AutodiffError> {
    if g.value(u).shape() != g.value(v).shape() {
        return Err(AutodiffError::ShapeMismatch {
            op: "feature_vector",
            detail: format!("{:?} vs {:?}", g.value(u).shape(), g.value(v).shape()),
        });
    }
    let diff = g.sub(u, v)?;
    let abs = g.abs(diff);
    let prod = g.mul(u, v)?;
    g.concat(&[u, v, abs, prod], 1)
}

/// Three stacked affine layers with no nonlinearity between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mlp {
    pub layers: [Linear; 3],
}

impl Mlp {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        input: usize,
        hidden: usize,
        output: usize,
    ) -> Result<Self, AutodiffError> {
        Ok(Self {
            layers: [
                Linear::new(store, &format!("{name}.0"), input, hidden)?,
                Linear::new(store, &format!("{name}.1"), hidden, hidden)?,
                Linear::new(store, &format!("{name}.2"), hidden, output)?,
            ],
        })
    }

    pub fn logits(&self, g: &mut Graph<'_>, x: NodeId) -> Result<NodeId, AutodiffError> {
        let mut h = x;
        for l in &self.layers {
            h = l.forward(g, h)?;
        }
        Ok(h)
    }

    /// Row-wise class distribution.
    pub fn classify(&self, g: &mut Graph<'_>, x: NodeId) -> Result<NodeId, AutodiffError> {
        let z = self.logits(g, x)?;
        g.softmax(z, 1, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check, Tensor};
    use crate::layers::test_util::{probe_loss, random_input};

    #[test]
    fn feature_vector_layout() {
        let store = ParameterStore::new(0);
        let mut g = Graph::new(&store);
        let u = g.input(Tensor::row(&[1.0, 2.0]));
        let v = g.input(Tensor::row(&[3.0, 1.0]));
        let f = feature_vector(&mut g, u, v).unwrap();
        assert_eq!(g.value(f).data(), [1.0, 2.0, 3.0, 1.0, 2.0, 1.0, 3.0, 2.0]);
        let same = feature_vector(&mut g, u, u).unwrap();
        assert_eq!(&g.value(same).data()[4..], [0.0, 0.0, 1.0, 4.0]);
        let w = g.input(Tensor::row(&[1.0]));
        assert!(feature_vector(&mut g, u, w).is_err());
    }

    #[test]
    fn zero_mlp_is_uniform() {
        let mut store = ParameterStore::new(1);
        let mlp = Mlp::new(&mut store, "mlp", 4, 5, 3).unwrap();
        for l in &mlp.layers {
            store.set(l.weight, Tensor::zeros(&[l.input, l.output])).unwrap();
        }
        let mut g = Graph::new(&store);
        let x = random_input(&mut g, 2, 4, 3);
        let p = mlp.classify(&mut g, x).unwrap();
        for &v in g.value(p).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn logit_shift_keeps_distribution() {
        let mut store = ParameterStore::new(2);
        let mlp = Mlp::new(&mut store, "mlp", 4, 5, 3).unwrap();
        let eval = |store: &ParameterStore| {
            let mut g = Graph::new(store);
            let x = random_input(&mut g, 2, 4, 3);
            let p = mlp.classify(&mut g, x).unwrap();
            let z = mlp.logits(&mut g, x).unwrap();
            (g.value(p).clone(), g.value(z).clone())
        };
        let (before, z) = eval(&store);
        for r in 0..2 {
            assert_eq!(before.argmax_row(r), z.argmax_row(r));
            assert!((before.row_slice(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let b = mlp.layers[2].bias;
        let shifted = store.get(b).map(|x| x + 7.0);
        store.set(b, shifted).unwrap();
        let (after, _) = eval(&store);
        for (x, y) in before.data().iter().zip(after.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients() {
        for seed in 0..5 {
            let mut store = ParameterStore::new(seed);
            let emb = Embedding::new(&mut store, "emb", 6, 3).unwrap();
            let mlp = Mlp::new(&mut store, "mlp", 12, 5, 3).unwrap();
            let report = grad_check(&mut store, 1e-5, 1e-4, |g| {
                let u = emb.lookup(g, &[1, 4])?;
                let v = emb.lookup(g, &[2, 2])?;
                let f = feature_vector(g, u, v)?;
                let p = mlp.classify(g, f)?;
                let lp = g.log(p);
                g.nll(lp, &[Some(0), Some(2)])
            })
            .unwrap();
            assert!(report.passed(), "{report:?}");
            let mut store = ParameterStore::new(seed);
            let lin = Linear::new(&mut store, "lin", 4, 3).unwrap();
            let report = grad_check(&mut store, 1e-5, 1e-4, |g| {
                let x = random_input(g, 3, 4, seed);
                let y = lin.forward_tanh(g, x)?;
                probe_loss(g, y, seed)
            })
            .unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }
}
