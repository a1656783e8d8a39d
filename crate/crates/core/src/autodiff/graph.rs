use std::collections::HashMap;

use super::tensor::{matmul_at_acc, matmul_bt_acc, matmul_into};
use super::{AutodiffError, ParamId, ParameterStore, Tensor};
#[cfg(test)]
use super::grad_check;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Concat { inputs: Vec<NodeId>, axis: usize },
    Slice { input: NodeId, axis: usize, start: usize },
    Tanh(NodeId),
    Sigmoid(NodeId),
    Abs(NodeId),
    Log(NodeId),
    Softmax { input: NodeId, axis: usize, mask: Option<Vec<bool>> },
    LogSoftmax(NodeId),
    MaxAxis { input: NodeId, axis: usize, argmax: Vec<usize> },
    MaxPoolSeq { inputs: Vec<NodeId>, argmax: Vec<usize> },
    Gather { table: NodeId, ids: Vec<usize> },
    Nll { input: NodeId, targets: Vec<Option<usize>> },
    Sum(NodeId),
    Select { mask: Vec<bool>, a: NodeId, b: NodeId },
    WeightedSum { weights: NodeId, values: Vec<NodeId>, mask: Vec<bool> },
    RowDot(NodeId, NodeId),
}

#[derive(Debug)]
struct Node {
    op: Op,
    // `None` only for parameter nodes, whose value lives in the store.
    value: Option<Tensor>,
}

/// A tape of tensor operations over a borrowed [`ParameterStore`].
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and the reverse pass walks it backwards.
pub struct Graph<'s> {
    store: &'s ParameterStore,
    nodes: Vec<Node>,
    params: HashMap<ParamId, NodeId>,
}

/// Gradients produced by [`Graph::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    params: Vec<Option<Tensor>>,
    nodes: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of a parameter, `None` when the root does not depend on it.
    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(id.0).and_then(Option::as_ref)
    }

    /// Gradient of a parameter, zero-filled to the parameter's shape when unreached.
    pub fn param_or_zeros(&self, id: ParamId, store: &ParameterStore) -> Tensor {
        self.param(id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(store.get(id).shape()))
    }

    pub fn node(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes.get(id.0).and_then(Option::as_ref)
    }

    pub fn global_norm(&self) -> f64 {
        self.params
            .iter()
            .flatten()
            .map(Tensor::squared_norm)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales every parameter gradient so the global L2 norm is at most `max_norm`.
    /// Returns the norm measured before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm.is_finite() {
            let factor = max_norm / norm;
            for g in self.params.iter_mut().flatten() {
                for v in g.data_mut() {
                    *v *= factor;
                }
            }
        }
        norm
    }

    pub(crate) fn params_iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.params
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }
}

fn mismatch(op: &'static str, detail: String) -> AutodiffError {
    AutodiffError::ShapeMismatch { op, detail }
}

/// Output shape for 2-D broadcasting where each dimension matches or is 1.
fn broadcast_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(usize, usize), AutodiffError> {
    let (ar, ac) = a.expect_2d(op)?;
    let (br, bc) = b.expect_2d(op)?;
    let dim = |x: usize, y: usize| -> Option<usize> {
        if x == y {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else if y == 1 {
            Some(x)
        } else {
            None
        }
    };
    match (dim(ar, br), dim(ac, bc)) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(mismatch(op, format!("cannot broadcast {:?} with {:?}", a.shape(), b.shape()))),
    }
}

#[inline]
fn bidx(t: &Tensor, r: usize, c: usize) -> usize {
    let (tr, tc) = (t.shape()[0], t.shape()[1]);
    let r = if tr == 1 { 0 } else { r };
    let c = if tc == 1 { 0 } else { c };
    r * tc + c
}

fn broadcast_binary(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor, AutodiffError> {
    if a.shape() == b.shape() {
        let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
        return Tensor::new(a.shape().to_vec(), data);
    }
    let (r, c) = broadcast_shape(op, a, b)?;
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            data.push(f(a.data()[bidx(a, i, j)], b.data()[bidx(b, i, j)]));
        }
    }
    Tensor::new(vec![r, c], data)
}

/// Sums a broadcast gradient back down to `target`'s shape.
fn reduce_to(grad: &Tensor, target: &[usize]) -> Tensor {
    if grad.shape() == target {
        return grad.clone();
    }
    let mut out = Tensor::zeros(target);
    let (r, c) = (grad.shape()[0], grad.shape()[1]);
    for i in 0..r {
        for j in 0..c {
            let k = bidx(&out, i, j);
            out.data_mut()[k] += grad.data()[i * c + j];
        }
    }
    out
}

/// Start offset, stride and length of every lane along `axis` of a 2-D tensor.
fn lanes(rows: usize, cols: usize, axis: usize) -> (usize, usize, usize, usize) {
    // (lane count, lane start step, element stride, lane length)
    if axis == 0 {
        (cols, 1, cols, rows)
    } else {
        (rows, cols, 1, cols)
    }
}

fn check_axis(op: &'static str, axis: usize) -> Result<(), AutodiffError> {
    if axis > 1 {
        return Err(mismatch(op, format!("axis {axis} out of range for a 2-D tensor")));
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'s> Graph<'s> {
    pub fn new(store: &'s ParameterStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    pub fn store(&self) -> &'s ParameterStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            op,
            value: Some(value),
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(p)) => self.store.get(*p),
            (None, _) => unreachable!("only parameter nodes borrow their value"),
        }
    }

    /// Winner indices recorded by `max_axis` or `max_pool_seq`.
    pub fn argmax(&self, id: NodeId) -> Option<&[usize]> {
        match &self.nodes[id.0].op {
            Op::MaxAxis { argmax, .. } | Op::MaxPoolSeq { argmax, .. } => Some(argmax),
            _ => None,
        }
    }

    /// A constant leaf.
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, value)
    }

    /// The node for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(&n) = self.params.get(&id) {
            return n;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
        });
        let n = NodeId(self.nodes.len() - 1);
        self.params.insert(id, n);
        n
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k) = av.expect_2d("matmul")?;
        let (k2, n) = bv.expect_2d("matmul")?;
        if k != k2 {
            return Err(mismatch(
                "matmul",
                format!("{:?} · {:?}", av.shape(), bv.shape()),
            ));
        }
        let mut out = vec![0.0; m * n];
        matmul_into(av.data(), bv.data(), &mut out, m, k, n);
        let t = Tensor::new(vec![m, n], out)?;
        Ok(self.push(Op::MatMul(a, b), t))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let t = broadcast_binary("add", self.value(a), self.value(b), |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), t))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let t = broadcast_binary("sub", self.value(a), self.value(b), |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), t))
    }

    /// Elementwise (Hadamard) product with 2-D broadcasting.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let t = broadcast_binary("mul", self.value(a), self.value(b), |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), t))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let t = self.value(a).map(|x| x * factor);
        self.push(Op::Scale(a, factor), t)
    }

    pub fn concat(&mut self, inputs: &[NodeId], axis: usize) -> Result<NodeId, AutodiffError> {
        check_axis("concat", axis)?;
        let first = inputs
            .first()
            .ok_or_else(|| mismatch("concat", "no inputs".into()))?;
        let (r0, c0) = self.value(*first).expect_2d("concat")?;
        let mut total = 0;
        for &i in inputs {
            let (r, c) = self.value(i).expect_2d("concat")?;
            if (axis == 1 && r != r0) || (axis == 0 && c != c0) {
                return Err(mismatch(
                    "concat",
                    format!("{:?} vs {:?} on axis {axis}", self.value(*first).shape(), [r, c]),
                ));
            }
            total += if axis == 1 { c } else { r };
        }
        let t = if axis == 1 {
            let mut data = Vec::with_capacity(r0 * total);
            for row in 0..r0 {
                for &i in inputs {
                    data.extend_from_slice(self.value(i).row_slice(row));
                }
            }
            Tensor::new(vec![r0, total], data)?
        } else {
            let mut data = Vec::with_capacity(total * c0);
            for &i in inputs {
                data.extend_from_slice(self.value(i).data());
            }
            Tensor::new(vec![total, c0], data)?
        };
        Ok(self.push(
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            t,
        ))
    }

    pub fn slice(
        &mut self,
        input: NodeId,
        axis: usize,
        start: usize,
        len: usize,
    ) -> Result<NodeId, AutodiffError> {
        check_axis("slice", axis)?;
        let v = self.value(input);
        let (r, c) = v.expect_2d("slice")?;
        let extent = if axis == 1 { c } else { r };
        if start + len > extent {
            return Err(mismatch(
                "slice",
                format!("range {start}..{} exceeds axis length {extent}", start + len),
            ));
        }
        let t = if axis == 1 {
            let mut data = Vec::with_capacity(r * len);
            for row in 0..r {
                data.extend_from_slice(&v.row_slice(row)[start..start + len]);
            }
            Tensor::new(vec![r, len], data)?
        } else {
            Tensor::new(vec![len, c], v.data()[start * c..(start + len) * c].to_vec())?
        };
        Ok(self.push(Op::Slice { input, axis, start }, t))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), t)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), t)
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a).map(f64::abs);
        self.push(Op::Abs(a), t)
    }

    /// Natural logarithm; non-positive entries give `-inf`/NaN as in IEEE arithmetic.
    pub fn log(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a).map(f64::ln);
        self.push(Op::Log(a), t)
    }

    /// Softmax along `axis` of a 2-D tensor. Entries whose `mask` flag is
    /// `false` are excluded and come out as exactly zero.
    pub fn softmax(
        &mut self,
        input: NodeId,
        axis: usize,
        mask: Option<Vec<bool>>,
    ) -> Result<NodeId, AutodiffError> {
        check_axis("softmax", axis)?;
        let v = self.value(input);
        let (r, c) = v.expect_2d("softmax")?;
        if let Some(m) = &mask {
            if m.len() != r * c {
                return Err(mismatch("softmax", format!("mask of {} for {r}x{c}", m.len())));
            }
        }
        let (count, step, stride, len) = lanes(r, c, axis);
        if len == 0 {
            return Err(AutodiffError::EmptyAxis("softmax"));
        }
        let keep = |i: usize| mask.as_ref().is_none_or(|m| m[i]);
        let mut out = vec![0.0; r * c];
        for lane in 0..count {
            let base = lane * step;
            let idx = |j: usize| base + j * stride;
            let mut max = f64::NEG_INFINITY;
            let mut any = false;
            for j in 0..len {
                if keep(idx(j)) {
                    any = true;
                    max = max.max(v.data()[idx(j)]);
                }
            }
            if !any {
                return Err(AutodiffError::AllMasked);
            }
            let mut total = 0.0;
            for j in 0..len {
                if keep(idx(j)) {
                    let e = (v.data()[idx(j)] - max).exp();
                    out[idx(j)] = e;
                    total += e;
                }
            }
            for j in 0..len {
                if keep(idx(j)) {
                    out[idx(j)] /= total;
                }
            }
        }
        let t = Tensor::new(vec![r, c], out)?;
        Ok(self.push(Op::Softmax { input, axis, mask }, t))
    }

    /// Row-wise log-softmax of a 2-D tensor.
    pub fn log_softmax(&mut self, input: NodeId) -> Result<NodeId, AutodiffError> {
        let v = self.value(input);
        let (r, c) = v.expect_2d("log_softmax")?;
        if c == 0 {
            return Err(AutodiffError::EmptyAxis("log_softmax"));
        }
        let mut out = Vec::with_capacity(r * c);
        for row in 0..r {
            let xs = v.row_slice(row);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
            out.extend(xs.iter().map(|x| x - lse));
        }
        let t = Tensor::new(vec![r, c], out)?;
        Ok(self.push(Op::LogSoftmax(input), t))
    }

    /// Maximum along `axis`, recording the winning index of each lane (first wins ties).
    pub fn max_axis(&mut self, input: NodeId, axis: usize) -> Result<NodeId, AutodiffError> {
        check_axis("max_axis", axis)?;
        let v = self.value(input);
        let (r, c) = v.expect_2d("max_axis")?;
        let (count, step, stride, len) = lanes(r, c, axis);
        if len == 0 {
            return Err(AutodiffError::EmptyAxis("max_axis"));
        }
        let mut values = Vec::with_capacity(count);
        let mut argmax = Vec::with_capacity(count);
        for lane in 0..count {
            let base = lane * step;
            let mut best = 0;
            for j in 1..len {
                if v.data()[base + j * stride] > v.data()[base + best * stride] {
                    best = j;
                }
            }
            values.push(v.data()[base + best * stride]);
            argmax.push(best);
        }
        let shape = if axis == 0 { vec![1, c] } else { vec![r, 1] };
        let t = Tensor::new(shape, values)?;
        Ok(self.push(Op::MaxAxis { input, axis, argmax }, t))
    }

    /// Max-pooling over time. `states[t]` is the `[batch, dim]` state at step
    /// `t`; row `b` pools only steps `t < lengths[b]`, so positions past the
    /// true length behave as if masked to `-inf`.
    pub fn max_pool_seq(
        &mut self,
        states: &[NodeId],
        lengths: &[usize],
    ) -> Result<NodeId, AutodiffError> {
        let first = states
            .first()
            .ok_or(AutodiffError::EmptyAxis("max_pool_seq"))?;
        let (b, d) = self.value(*first).expect_2d("max_pool_seq")?;
        if lengths.len() != b {
            return Err(mismatch(
                "max_pool_seq",
                format!("{} lengths for batch of {b}", lengths.len()),
            ));
        }
        for &s in states {
            if self.value(s).shape() != [b, d] {
                return Err(mismatch("max_pool_seq", "states differ in shape".into()));
            }
        }
        let mut values = vec![0.0; b * d];
        let mut argmax = vec![0; b * d];
        for (row, &len) in lengths.iter().enumerate() {
            if len == 0 {
                return Err(AutodiffError::EmptyAxis("max_pool_seq"));
            }
            if len > states.len() {
                return Err(mismatch(
                    "max_pool_seq",
                    format!("length {len} exceeds {} steps", states.len()),
                ));
            }
            for col in 0..d {
                let k = row * d + col;
                let mut best = 0;
                let mut best_v = self.value(states[0]).data()[k];
                for (t, &s) in states.iter().enumerate().take(len).skip(1) {
                    let x = self.value(s).data()[k];
                    if x > best_v {
                        best = t;
                        best_v = x;
                    }
                }
                values[k] = best_v;
                argmax[k] = best;
            }
        }
        let t = Tensor::new(vec![b, d], values)?;
        Ok(self.push(
            Op::MaxPoolSeq {
                inputs: states.to_vec(),
                argmax,
            },
            t,
        ))
    }

    /// Row lookup: `out[i] = table[ids[i]]`.
    pub fn gather(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId, AutodiffError> {
        let tv = self.value(table);
        let (rows, cols) = tv.expect_2d("gather")?;
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            if id >= rows {
                return Err(AutodiffError::IndexOutOfRange { index: id, len: rows });
            }
            data.extend_from_slice(tv.row_slice(id));
        }
        let t = Tensor::new(vec![ids.len(), cols], data)?;
        Ok(self.push(
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
            t,
        ))
    }

    /// Negative log-likelihood: `-Σ_r input[r, targets[r]]` over rows with a target.
    pub fn nll(&mut self, input: NodeId, targets: &[Option<usize>]) -> Result<NodeId, AutodiffError> {
        let v = self.value(input);
        let (r, c) = v.expect_2d("nll")?;
        if targets.len() != r {
            return Err(mismatch("nll", format!("{} targets for {r} rows", targets.len())));
        }
        let mut total = 0.0;
        for (row, t) in targets.iter().enumerate() {
            if let Some(t) = *t {
                if t >= c {
                    return Err(AutodiffError::IndexOutOfRange { index: t, len: c });
                }
                total -= v.get(row, t);
            }
        }
        let t = Tensor::scalar(total);
        Ok(self.push(
            Op::Nll {
                input,
                targets: targets.to_vec(),
            },
            t,
        ))
    }

    /// Sum of all entries as a `[1, 1]` scalar.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let t = Tensor::scalar(self.value(a).sum());
        self.push(Op::Sum(a), t)
    }

    /// Row-wise choice: row `r` of the output is row `r` of `a` when
    /// `mask[r]`, otherwise row `r` of `b`. Values are copied bit-for-bit.
    pub fn select_rows(&mut self, mask: &[bool], a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch("select_rows", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let (r, _) = av.expect_2d("select_rows")?;
        if mask.len() != r {
            return Err(mismatch("select_rows", format!("mask of {} for {r} rows", mask.len())));
        }
        let mut data = Vec::with_capacity(av.len());
        for (row, &m) in mask.iter().enumerate() {
            data.extend_from_slice(if m { av.row_slice(row) } else { bv.row_slice(row) });
        }
        let t = Tensor::new(av.shape().to_vec(), data)?;
        Ok(self.push(
            Op::Select {
                mask: mask.to_vec(),
                a,
                b,
            },
            t,
        ))
    }

    /// `out[b] = Σ_t weights[b, t] · values[t][b]`, summing only over
    /// positions where `mask[b * T + t]` holds.
    pub fn weighted_sum(
        &mut self,
        weights: NodeId,
        values: &[NodeId],
        mask: &[bool],
    ) -> Result<NodeId, AutodiffError> {
        let w = self.value(weights);
        let (b, steps) = w.expect_2d("weighted_sum")?;
        if steps != values.len() || mask.len() != b * steps {
            return Err(mismatch(
                "weighted_sum",
                format!("weights {:?}, {} values, mask {}", w.shape(), values.len(), mask.len()),
            ));
        }
        let d = match values.first() {
            Some(&v) => self.value(v).expect_2d("weighted_sum")?.1,
            None => return Err(AutodiffError::EmptyAxis("weighted_sum")),
        };
        for &v in values {
            if self.value(v).shape() != [b, d] {
                return Err(mismatch("weighted_sum", "value shapes differ".into()));
            }
        }
        let mut out = vec![0.0; b * d];
        for row in 0..b {
            let o = &mut out[row * d..(row + 1) * d];
            for (t, &v) in values.iter().enumerate() {
                if !mask[row * steps + t] {
                    continue;
                }
                let wt = w.get(row, t);
                for (x, &y) in o.iter_mut().zip(self.value(v).row_slice(row)) {
                    *x += wt * y;
                }
            }
        }
        let t = Tensor::new(vec![b, d], out)?;
        Ok(self.push(
            Op::WeightedSum {
                weights,
                values: values.to_vec(),
                mask: mask.to_vec(),
            },
            t,
        ))
    }

    /// Row-wise inner product of two `[batch, dim]` tensors, giving `[batch, 1]`.
    pub fn row_dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch("row_dot", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let (r, _) = av.expect_2d("row_dot")?;
        let data = (0..r)
            .map(|i| {
                av.row_slice(i)
                    .iter()
                    .zip(bv.row_slice(i))
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect();
        let t = Tensor::new(vec![r, 1], data)?;
        Ok(self.push(Op::RowDot(a, b), t))
    }

    /// Reverse pass from a scalar root.
    ///
    /// Gradients accumulate over every path to a node. Parameters the root
    /// does not depend on get no entry; see [`Gradients::param_or_zeros`].
    pub fn backward(&self, root: NodeId) -> Result<Gradients, AutodiffError> {
        let rv = self.value(root);
        if rv.len() != 1 {
            return Err(AutodiffError::NonScalarRoot(rv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Tensor::filled(rv.shape(), 1.0));
        let mut params: Vec<Option<Tensor>> = vec![None; self.store.len()];

        fn acc(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
            match &mut grads[id.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }
        fn acc_with(grads: &mut [Option<Tensor>], id: NodeId, shape: &[usize], f: impl FnOnce(&mut Tensor)) {
            let slot = grads[id.0].get_or_insert_with(|| Tensor::zeros(shape));
            f(slot);
        }

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let out = self.value(NodeId(i));
            match &node.op {
                Op::Input => {}
                Op::Param(p) => {
                    match &mut params[p.0] {
                        Some(existing) => existing.add_assign(&g),
                        slot @ None => *slot = Some(g.clone()),
                    }
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k) = (av.shape()[0], av.shape()[1]);
                    let n = bv.shape()[1];
                    acc_with(&mut grads, *a, av.shape(), |ga| {
                        matmul_bt_acc(g.data(), bv.data(), ga.data_mut(), m, k, n)
                    });
                    acc_with(&mut grads, *b, bv.shape(), |gb| {
                        matmul_at_acc(av.data(), g.data(), gb.data_mut(), m, k, n)
                    });
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, reduce_to(&g, self.value(*a).shape()));
                    acc(&mut grads, *b, reduce_to(&g, self.value(*b).shape()));
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *a, reduce_to(&g, self.value(*a).shape()));
                    let neg = g.map(|x| -x);
                    acc(&mut grads, *b, reduce_to(&neg, self.value(*b).shape()));
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = broadcast_binary("mul", &g, bv, |x, y| x * y)?;
                    let gb = broadcast_binary("mul", &g, av, |x, y| x * y)?;
                    acc(&mut grads, *a, reduce_to(&ga, av.shape()));
                    acc(&mut grads, *b, reduce_to(&gb, bv.shape()));
                }
                Op::Scale(a, f) => acc(&mut grads, *a, g.map(|x| x * f)),
                Op::Concat { inputs, axis } => {
                    let (r, c) = (g.shape()[0], g.shape()[1]);
                    let mut offset = 0;
                    for &inp in inputs {
                        let shape = self.value(inp).shape().to_vec();
                        let part = if *axis == 1 {
                            let w = shape[1];
                            let mut data = Vec::with_capacity(r * w);
                            for row in 0..r {
                                data.extend_from_slice(&g.row_slice(row)[offset..offset + w]);
                            }
                            offset += w;
                            Tensor::new(shape, data)?
                        } else {
                            let h = shape[0];
                            let data = g.data()[offset * c..(offset + h) * c].to_vec();
                            offset += h;
                            Tensor::new(shape, data)?
                        };
                        acc(&mut grads, inp, part);
                    }
                }
                Op::Slice { input, axis, start } => {
                    let shape = self.value(*input).shape().to_vec();
                    let (r, len) = (g.shape()[0], g.shape()[1]);
                    acc_with(&mut grads, *input, &shape, |gi| {
                        if *axis == 1 {
                            let c = shape[1];
                            for row in 0..r {
                                for j in 0..len {
                                    gi.data_mut()[row * c + start + j] += g.data()[row * len + j];
                                }
                            }
                        } else {
                            let c = shape[1];
                            for (k, &x) in g.data().iter().enumerate() {
                                gi.data_mut()[start * c + k] += x;
                            }
                        }
                    });
                }
                Op::Tanh(a) => {
                    let d = g.data().iter().zip(out.data()).map(|(g, y)| g * (1.0 - y * y)).collect();
                    acc(&mut grads, *a, Tensor::new(g.shape().to_vec(), d)?);
                }
                Op::Sigmoid(a) => {
                    let d = g.data().iter().zip(out.data()).map(|(g, y)| g * y * (1.0 - y)).collect();
                    acc(&mut grads, *a, Tensor::new(g.shape().to_vec(), d)?);
                }
                Op::Abs(a) => {
                    let x = self.value(*a);
                    let d = g
                        .data()
                        .iter()
                        .zip(x.data())
                        .map(|(g, x)| if *x > 0.0 { *g } else if *x < 0.0 { -g } else { 0.0 })
                        .collect();
                    acc(&mut grads, *a, Tensor::new(g.shape().to_vec(), d)?);
                }
                Op::Log(a) => {
                    let x = self.value(*a);
                    let d = g.data().iter().zip(x.data()).map(|(g, x)| g / x).collect();
                    acc(&mut grads, *a, Tensor::new(g.shape().to_vec(), d)?);
                }
                Op::Softmax { input, axis, mask } => {
                    let (r, c) = (out.shape()[0], out.shape()[1]);
                    let (count, step, stride, len) = lanes(r, c, *axis);
                    let keep = |i: usize| mask.as_ref().is_none_or(|m| m[i]);
                    let mut d = vec![0.0; r * c];
                    for lane in 0..count {
                        let base = lane * step;
                        let mut dot = 0.0;
                        for j in 0..len {
                            let k = base + j * stride;
                            if keep(k) {
                                dot += g.data()[k] * out.data()[k];
                            }
                        }
                        for j in 0..len {
                            let k = base + j * stride;
                            if keep(k) {
                                d[k] = out.data()[k] * (g.data()[k] - dot);
                            }
                        }
                    }
                    acc(&mut grads, *input, Tensor::new(vec![r, c], d)?);
                }
                Op::LogSoftmax(input) => {
                    let (r, c) = (out.shape()[0], out.shape()[1]);
                    let mut d = Vec::with_capacity(r * c);
                    for row in 0..r {
                        let gs = g.row_slice(row);
                        let total: f64 = gs.iter().sum();
                        for (gj, yj) in gs.iter().zip(out.row_slice(row)) {
                            d.push(gj - yj.exp() * total);
                        }
                    }
                    acc(&mut grads, *input, Tensor::new(vec![r, c], d)?);
                }
                Op::MaxAxis { input, axis, argmax } => {
                    let shape = self.value(*input).shape().to_vec();
                    let (r, c) = (shape[0], shape[1]);
                    let (_, step, stride, _) = lanes(r, c, *axis);
                    acc_with(&mut grads, *input, &shape, |gi| {
                        for (lane, &j) in argmax.iter().enumerate() {
                            gi.data_mut()[lane * step + j * stride] += g.data()[lane];
                        }
                    });
                }
                Op::MaxPoolSeq { inputs, argmax } => {
                    let shape = g.shape().to_vec();
                    for (k, &t) in argmax.iter().enumerate() {
                        let gv = g.data()[k];
                        acc_with(&mut grads, inputs[t], &shape, |gi| gi.data_mut()[k] += gv);
                    }
                }
                Op::Gather { table, ids } => {
                    let shape = self.value(*table).shape().to_vec();
                    let cols = shape[1];
                    acc_with(&mut grads, *table, &shape, |gt| {
                        for (row, &id) in ids.iter().enumerate() {
                            let dst = &mut gt.data_mut()[id * cols..(id + 1) * cols];
                            for (x, y) in dst.iter_mut().zip(g.row_slice(row)) {
                                *x += y;
                            }
                        }
                    });
                }
                Op::Nll { input, targets } => {
                    let shape = self.value(*input).shape().to_vec();
                    let cols = shape[1];
                    let gv = g.item();
                    acc_with(&mut grads, *input, &shape, |gi| {
                        for (row, t) in targets.iter().enumerate() {
                            if let Some(t) = *t {
                                gi.data_mut()[row * cols + t] -= gv;
                            }
                        }
                    });
                }
                Op::Sum(a) => {
                    let shape = self.value(*a).shape().to_vec();
                    acc(&mut grads, *a, Tensor::filled(&shape, g.item()));
                }
                Op::Select { mask, a, b } => {
                    let shape = g.shape().to_vec();
                    let mut ga = Tensor::zeros(&shape);
                    let mut gb = Tensor::zeros(&shape);
                    let c = shape[1];
                    for (row, &m) in mask.iter().enumerate() {
                        let dst = if m { &mut ga } else { &mut gb };
                        dst.data_mut()[row * c..(row + 1) * c].copy_from_slice(g.row_slice(row));
                    }
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::WeightedSum { weights, values, mask } => {
                    let w = self.value(*weights);
                    let (b, steps) = (w.shape()[0], w.shape()[1]);
                    let d = g.shape()[1];
                    let mut gw = Tensor::zeros(&[b, steps]);
                    for (t, &v) in values.iter().enumerate() {
                        let vv = self.value(v);
                        let mut gv = Tensor::zeros(&[b, d]);
                        let mut touched = false;
                        for row in 0..b {
                            if !mask[row * steps + t] {
                                continue;
                            }
                            touched = true;
                            let grow = g.row_slice(row);
                            gw.data_mut()[row * steps + t] =
                                grow.iter().zip(vv.row_slice(row)).map(|(x, y)| x * y).sum();
                            let wt = w.get(row, t);
                            for (dst, gx) in gv.data_mut()[row * d..(row + 1) * d].iter_mut().zip(grow) {
                                *dst = wt * gx;
                            }
                        }
                        if touched {
                            acc(&mut grads, v, gv);
                        }
                    }
                    acc(&mut grads, *weights, gw);
                }
                Op::RowDot(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (r, c) = (av.shape()[0], av.shape()[1]);
                    let mut ga = Vec::with_capacity(r * c);
                    let mut gb = Vec::with_capacity(r * c);
                    for row in 0..r {
                        let gr = g.data()[row];
                        ga.extend(bv.row_slice(row).iter().map(|y| gr * y));
                        gb.extend(av.row_slice(row).iter().map(|x| gr * x));
                    }
                    acc(&mut grads, *a, Tensor::new(vec![r, c], ga)?);
                    acc(&mut grads, *b, Tensor::new(vec![r, c], gb)?);
                }
            }
            grads[i] = Some(g);
        }
        Ok(Gradients {
            params,
            nodes: grads,
        })
    }
}

#[cfg(test)]
#[path = "graph_tests.rs"]
mod tests;
