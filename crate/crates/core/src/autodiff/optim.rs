use serde::{Deserialize, Serialize};

use super::{AutodiffError, Gradients, ParameterStore};

/// Plain SGD: `p ← p − lr·g` for every parameter with a gradient.
///
/// The whole step is rejected, leaving the store untouched, if any gradient
/// entry is non-finite.
pub fn sgd_step(
    store: &mut ParameterStore,
    grads: &Gradients,
    learning_rate: f64,
) -> Result<(), AutodiffError> {
    for (id, g) in grads.params_iter() {
        if g.shape() != store.get(id).shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "sgd_step",
                detail: format!("gradient {:?} for parameter {:?}", g.shape(), store.get(id).shape()),
            });
        }
        if !g.is_finite() {
            return Err(AutodiffError::NonFiniteGradient(store.name(id).to_string()));
        }
    }
    if learning_rate == 0.0 {
        return Ok(());
    }
    for (id, g) in grads.params_iter() {
        let p = store.get_mut(id);
        for (x, d) in p.data_mut().iter_mut().zip(g.data()) {
            *x -= learning_rate * d;
        }
    }
    Ok(())
}

/// Learning-rate schedule: multiplicative decay each epoch, and a division
/// whenever the validation metric fails to improve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
    pub shrink: f64,
    pub min_lr: f64,
    current: f64,
    best_metric: Option<f64>,
}

impl LrSchedule {
    pub fn new(initial: f64, decay: f64, shrink: f64, min_lr: f64) -> Self {
        Self {
            initial,
            decay,
            shrink,
            min_lr,
            current: initial,
            best_metric: None,
        }
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn end_epoch(&mut self) {
        self.current *= self.decay;
    }

    /// Feeds a higher-is-better validation metric. Returns `true` when the
    /// rate was shrunk.
    pub fn on_validation(&mut self, metric: f64) -> bool {
        match self.best_metric {
            Some(best) if metric <= best => {
                self.current /= self.shrink;
                true
            }
            _ => {
                self.best_metric = Some(metric);
                false
            }
        }
    }

    /// True once the rate has fallen under `min_lr`.
    pub fn exhausted(&self) -> bool {
        self.current < self.min_lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Graph, Tensor};

    fn step_scalar(p0: f64, g: f64, lr: f64) -> f64 {
        // loss = g·p, so dloss/dp = g
        let mut store = ParameterStore::new(0);
        let p = store.insert("p", Tensor::scalar(p0)).unwrap();
        let grads = {
            let mut graph = Graph::new(&store);
            let pn = graph.param(p);
            let loss = graph.scale(pn, g);
            graph.backward(loss).unwrap()
        };
        sgd_step(&mut store, &grads, lr).unwrap();
        store.get(p).item()
    }

    #[test]
    fn single_step_matches_update_rule() {
        assert!((step_scalar(1.0, 2.0, 0.1) - 0.8).abs() < 1e-15);
        assert_eq!(step_scalar(1.0, 2.0, 0.0), 1.0);
    }

    #[test]
    fn quadratic_bowl_converges_geometrically() {
        // f(p) = Σ (p - a)², grad 2(p - a), so p_k - a = (1 - 2·lr)^k (p_0 - a).
        let target = [1.5, -2.0, 0.25];
        let mut store = ParameterStore::new(0);
        let p = store.insert("p", Tensor::row(&[0.0, 0.0, 0.0])).unwrap();
        let lr = 0.1;
        for _ in 0..100 {
            let grads = {
                let mut g = Graph::new(&store);
                let pn = g.param(p);
                let a = g.input(Tensor::row(&target));
                let d = g.sub(pn, a).unwrap();
                let sq = g.mul(d, d).unwrap();
                let loss = g.sum(sq);
                g.backward(loss).unwrap()
            };
            sgd_step(&mut store, &grads, lr).unwrap();
        }
        let factor = (1.0f64 - 2.0 * lr).powi(100);
        for (i, &a) in target.iter().enumerate() {
            let got = store.get(p).data()[i];
            let closed_form = a + factor * (0.0 - a);
            assert!((got - a).abs() < 1e-3);
            assert!((got - closed_form).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_gradient_rejects_step() {
        let mut store = ParameterStore::new(0);
        let p = store.insert("p", Tensor::scalar(0.0)).unwrap();
        let grads = {
            let mut g = Graph::new(&store);
            let pn = g.param(p);
            let l = g.log(pn); // d/dp ln p at 0 = inf
            g.backward(l).unwrap()
        };
        let err = sgd_step(&mut store, &grads, 0.1).unwrap_err();
        assert!(matches!(err, AutodiffError::NonFiniteGradient(_)));
        assert_eq!(store.get(p).item(), 0.0);
    }

    #[test]
    fn schedule_decays_and_shrinks() {
        let mut s = LrSchedule::new(0.1, 0.99, 5.0, 1e-5);
        s.end_epoch();
        assert!((s.current() - 0.099).abs() < 1e-15);
        assert!(!s.on_validation(0.5));
        assert!(!s.on_validation(0.6));
        assert!(s.on_validation(0.55));
        assert!((s.current() - 0.099 / 5.0).abs() < 1e-15);
    }
}
