use super::*;

fn store_with(values: &[(&str, Tensor)]) -> (ParameterStore, Vec<ParamId>) {
    let mut s = ParameterStore::new(0);
    let ids = values
        .iter()
        .map(|(n, t)| s.insert(n, t.clone()).unwrap())
        .collect();
    (s, ids)
}

#[test]
fn softmax_of_zeros_is_uniform() {
    let s = ParameterStore::new(0);
    let mut g = Graph::new(&s);
    let x = g.input(Tensor::row(&[0.0, 0.0, 0.0]));
    let y = g.softmax(x, 1, None).unwrap();
    for &v in g.value(y).data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    assert!((g.value(y).sum() - 1.0).abs() < 1e-12);
}

#[test]
fn softmax_masks_positions_to_exact_zero() {
    let s = ParameterStore::new(0);
    let mut g = Graph::new(&s);
    let x = g.input(Tensor::from_rows(&[vec![3.0, -1.0, 2.0], vec![0.5, 9.0, 0.1]]).unwrap());
    let y = g
        .softmax(x, 1, Some(vec![true, false, true, false, true, true]))
        .unwrap();
    let v = g.value(y);
    assert_eq!(v.get(0, 1), 0.0);
    assert_eq!(v.get(1, 0), 0.0);
    assert!((v.row_slice(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((v.row_slice(1).iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn softmax_errors() {
    let s = ParameterStore::new(0);
    let mut g = Graph::new(&s);
    let x = g.input(Tensor::row(&[1.0, 2.0]));
    assert!(matches!(
        g.softmax(x, 1, Some(vec![false, false])),
        Err(AutodiffError::AllMasked)
    ));
    let empty = g.input(Tensor::zeros(&[2, 0]));
    assert!(matches!(g.softmax(empty, 1, None), Err(AutodiffError::EmptyAxis(_))));
}

#[test]
fn matmul_identity() {
    let s = ParameterStore::new(0);
    let mut g = Graph::new(&s);
    let a = Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    let i = g.input(Tensor::identity(2));
    let an = g.input(a.clone());
    let y = g.matmul(i, an).unwrap();
    assert_eq!(g.value(y), &a);
    let bad = g.input(Tensor::identity(3));
    assert!(g.matmul(bad, an).is_err());
}

#[test]
fn max_axis_records_winners() {
    let s = ParameterStore::new(0);
    let mut g = Graph::new(&s);
    let x = g.input(Tensor::from_rows(&[vec![1.0, 5.0], vec![7.0, 2.0]]).unwrap());
    let m = g.max_axis(x, 0).unwrap();
    assert_eq!(g.value(m).data(), &[7.0, 5.0]);
    assert_eq!(g.argmax(m).unwrap(), &[1, 0]);
    let m1 = g.max_axis(x, 1).unwrap();
    assert_eq!(g.value(m1).data(), &[5.0, 7.0]);
    assert_eq!(g.argmax(m1).unwrap(), &[1, 0]);
}

#[test]
fn sum_of_squares_gradient() {
    let (s, ids) = store_with(&[("x", Tensor::row(&[1.0, 2.0, 3.0]))]);
    let mut g = Graph::new(&s);
    let x = g.param(ids[0]);
    let sq = g.mul(x, x).unwrap();
    let root = g.sum(sq);
    let grads = g.backward(root).unwrap();
    assert_eq!(grads.param(ids[0]).unwrap().data(), &[2.0, 4.0, 6.0]);
}

#[test]
fn unreached_parameter_has_zero_gradient() {
    let (s, ids) = store_with(&[("x", Tensor::row(&[1.0])), ("p", Tensor::row(&[4.0, 5.0]))]);
    let mut g = Graph::new(&s);
    let x = g.param(ids[0]);
    let root = g.scale(x, 3.0);
    let grads = g.backward(root).unwrap();
    assert!(grads.param(ids[1]).is_none());
    assert_eq!(grads.param_or_zeros(ids[1], &s).data(), &[0.0, 0.0]);
}

#[test]
fn shared_subexpressions_accumulate() {
    // y = (2x) * (2x) summed → dy/dx = 8x
    let (s, ids) = store_with(&[("x", Tensor::row(&[1.5, -0.5]))]);
    let mut g = Graph::new(&s);
    let x = g.param(ids[0]);
    let d = g.scale(x, 2.0);
    let p = g.mul(d, d).unwrap();
    let r = g.sum(p);
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.param(ids[0]).unwrap().data(), &[12.0, -4.0]);
}

#[test]
fn backward_requires_scalar_root() {
    let (s, ids) = store_with(&[("x", Tensor::row(&[1.0, 2.0]))]);
    let mut g = Graph::new(&s);
    let x = g.param(ids[0]);
    let y = g.tanh(x);
    assert!(matches!(g.backward(y), Err(AutodiffError::NonScalarRoot(_))));
}

#[test]
fn max_pool_routes_gradient_to_winners_only() {
    let (s, ids) = store_with(&[
        ("t0", Tensor::from_rows(&[vec![1.0, 9.0]]).unwrap()),
        ("t1", Tensor::from_rows(&[vec![4.0, 2.0]]).unwrap()),
        ("pad", Tensor::from_rows(&[vec![100.0, 100.0]]).unwrap()),
    ]);
    let mut g = Graph::new(&s);
    let states: Vec<_> = ids.iter().map(|&p| g.param(p)).collect();
    let pooled = g.max_pool_seq(&states, &[2]).unwrap();
    assert_eq!(g.value(pooled).data(), &[4.0, 9.0]);
    let r = g.sum(pooled);
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.param(ids[0]).unwrap().data(), &[0.0, 1.0]);
    assert_eq!(grads.param(ids[1]).unwrap().data(), &[1.0, 0.0]);
    assert!(grads.param(ids[2]).is_none());
}

#[test]
fn broadcast_bias_gradient_sums_over_rows() {
    let (s, ids) = store_with(&[
        ("x", Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap()),
        ("b", Tensor::row(&[0.5, -0.5])),
    ]);
    let mut g = Graph::new(&s);
    let x = g.param(ids[0]);
    let b = g.param(ids[1]);
    let y = g.add(x, b).unwrap();
    let r = g.sum(y);
    let grads = g.backward(r).unwrap();
    assert_eq!(grads.param(ids[1]).unwrap().data(), &[3.0, 3.0]);
}

#[test]
fn select_rows_copies_bits() {
    let s = ParameterStore::new(0);
    let mut g = Graph::new(&s);
    let a = g.input(Tensor::from_rows(&[vec![1.0], vec![2.0]]).unwrap());
    let b = g.input(Tensor::from_rows(&[vec![-0.0], vec![3.0]]).unwrap());
    let y = g.select_rows(&[false, true], a, b).unwrap();
    assert_eq!(g.value(y).data()[0].to_bits(), (-0.0f64).to_bits());
    assert_eq!(g.value(y).data()[1], 2.0);
}

#[test]
fn every_primitive_passes_grad_check() {
    use rand::{Rng, SeedableRng};
    for seed in 0..5u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rand_t = |r: usize, c: usize| {
            let d = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
            Tensor::new(vec![r, c], d).unwrap()
        };
        let mut store = ParameterStore::new(seed);
        let a = store.insert("a", rand_t(3, 4)).unwrap();
        let b = store.insert("b", rand_t(4, 5)).unwrap();
        let bias = store.insert("bias", rand_t(1, 5)).unwrap();
        let table = store.insert("table", rand_t(6, 4)).unwrap();
        let pos = store.insert("pos", rand_t(3, 4).map(|x| x.abs() + 0.5)).unwrap();
        let probe = store.insert("probe", rand_t(3, 5)).unwrap();

        let report = grad_check::<AutodiffError, _>(&mut store, 1e-5, 1e-4, |g| {
            let (a, b, bias, table, pos, probe) =
                (g.param(a), g.param(b), g.param(bias), g.param(table), g.param(pos), g.param(probe));
            let mm = g.matmul(a, b)?;
            let z = g.add(mm, bias)?;
            let t = g.tanh(z);
            let sg = g.sigmoid(z);
            let prod = g.mul(t, sg)?;
            let rows = g.gather(table, &[1, 4, 1])?;
            let diff = g.sub(rows, a)?;
            let ab = g.abs(diff);
            let lg = g.log(pos);
            let cat = g.concat(&[ab, lg], 1)?;
            let sl = g.slice(cat, 1, 2, 5)?;
            let mixed = g.add(sl, prod)?;
            let sm = g.softmax(mixed, 1, Some(vec![
                true, true, false, true, true, true, true, true, true, false, true, true, true, true, true,
            ]))?;
            let lsm = g.log_softmax(mixed)?;
            let nll = g.nll(lsm, &[Some(0), None, Some(3)])?;
            let mx = g.max_axis(mixed, 0)?;
            let dots = g.row_dot(sm, probe)?;
            let steps: Vec<_> = (0..3).map(|i| g.slice(mixed, 0, i, 1)).collect::<Result<_, _>>()?;
            let step_stack = g.concat(&steps, 0)?;
            let pooled = g.max_pool_seq(&[sm, step_stack, prod], &[3, 1, 2])?;
            let w = g.softmax(probe, 1, None)?;
            let w3 = g.slice(w, 1, 0, 3)?;
            let wsum = g.weighted_sum(
                w3,
                &[sm, prod, pooled],
                &[true, true, false, true, true, true, false, true, true],
            )?;
            let sel = g.select_rows(&[true, false, true], wsum, pooled)?;
            let parts = [g.sum(dots), g.sum(mx), g.sum(sel)];
            let mut total = nll;
            for p in parts {
                total = g.add(total, p)?;
            }
            Ok(total)
        })
        .unwrap();
        assert!(report.passed(), "seed {seed}: {report:?}");
    }
}

