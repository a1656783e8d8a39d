use super::{AutodiffError, Graph, NodeId, ParameterStore};

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central difference `(f(x+ε) − f(x−ε)) / 2ε` of a scalar function.
pub fn numeric_gradient(f: impl Fn(f64) -> f64, x: f64, eps: f64) -> Result<f64, AutodiffError> {
    let (hi, lo) = (f(x + eps), f(x - eps));
    if !hi.is_finite() {
        return Err(AutodiffError::NonFiniteObjective(hi));
    }
    if !lo.is_finite() {
        return Err(AutodiffError::NonFiniteObjective(lo));
    }
    Ok((hi - lo) / (2.0 * eps))
}

/// Checks every entry of every parameter in `store`.
///
/// `loss` builds a scalar objective on a fresh graph; it is evaluated once
/// for the analytic gradient and twice per parameter entry for the numeric
/// one. The store is restored entry by entry as it goes.
pub fn grad_check<E, F>(
    store: &mut ParameterStore,
    eps: f64,
    tolerance: f64,
    loss: F,
) -> Result<GradCheckReport, E>
where
    E: From<AutodiffError>,
    F: Fn(&mut Graph<'_>) -> Result<NodeId, E>,
{
    let eval = |store: &ParameterStore| -> Result<f64, E> {
        let mut g = Graph::new(store);
        let root = loss(&mut g)?;
        let v = g.value(root).item();
        if !v.is_finite() {
            return Err(AutodiffError::NonFiniteObjective(v).into());
        }
        Ok(v)
    };

    let analytic: Vec<_> = {
        let mut g = Graph::new(store);
        let root = loss(&mut g)?;
        let grads = g.backward(root)?;
        store.ids().map(|id| grads.param_or_zeros(id, store)).collect()
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: 0,
        tolerance,
    };
    let ids: Vec<_> = store.ids().collect();
    for (id, analytic) in ids.into_iter().zip(analytic) {
        for k in 0..analytic.len() {
            let orig = store.get(id).data()[k];
            store.get_mut(id).data_mut()[k] = orig + eps;
            let hi = eval(store);
            store.get_mut(id).data_mut()[k] = orig - eps;
            let lo = eval(store);
            store.get_mut(id).data_mut()[k] = orig;
            let numeric = (hi? - lo?) / (2.0 * eps);
            let err = relative_error(analytic.data()[k], numeric);
            report.entries_checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((store.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}
