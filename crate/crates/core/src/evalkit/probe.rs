//! Multinomial logistic regression on frozen sentence features.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::autodiff::{sgd_step, Graph, ParameterStore, Tensor};
use crate::corpus::Split;

use super::EvalError;

/// Feature rows with integer class labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledFeatures {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledFeatures {
    pub fn push(&mut self, features: Vec<f64>, label: usize) {
        self.features.push(features);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeSplits {
    pub train: LabeledFeatures,
    pub validation: LabeledFeatures,
    pub test: LabeledFeatures,
    /// Class names by index.
    pub classes: Vec<String>,
}

impl ProbeSplits {
    /// Reads `split<TAB>label<TAB>f1<TAB>…` lines. Class names are indexed
    /// in sorted order.
    pub fn read_tsv(r: impl BufRead) -> Result<Self, EvalError> {
        let mut rows = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| EvalError::Format { line: i + 1, message: m.to_string() };
            let mut cells = line.split('\t');
            let split: Split = cells.next().unwrap_or("").parse().map_err(|e: String| bad(&e))?;
            let label = cells.next().ok_or_else(|| bad("missing label"))?.to_string();
            let features = cells
                .map(|c| c.trim().parse::<f64>().map_err(|_| bad("non-numeric feature")))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push((split, label, features));
        }
        let names: BTreeMap<String, usize> = rows
            .iter()
            .map(|(_, l, _)| (l.clone(), 0))
            .collect::<BTreeMap<_, _>>()
            .into_keys()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        let mut out = ProbeSplits {
            classes: names.keys().cloned().collect(),
            ..Self::default()
        };
        for (split, label, features) in rows {
            let target = match split {
                Split::Train => &mut out.train,
                Split::Validation => &mut out.validation,
                Split::Test => &mut out.test,
            };
            target.push(features, names[&label]);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub l2_grid: Vec<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            l2_grid: vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1],
            epochs: 300,
            learning_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub l2: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    /// Validation accuracy for every grid point, in grid order.
    pub grid: Vec<(f64, f64)>,
}

/// Per-dimension mean and scale of the training features.
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 { var.sqrt() } else { 1.0 }
            })
            .collect();
        Self { mean, scale }
    }

    fn matrix(&self, rows: &[Vec<f64>]) -> Result<Tensor, EvalError> {
        let d = self.mean.len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(EvalError::LengthMismatch { left: r.len(), right: d });
            }
            data.extend(r.iter().enumerate().map(|(j, x)| (x - self.mean[j]) / self.scale[j]));
        }
        Ok(Tensor::new(vec![rows.len(), d], data)?)
    }
}

struct Classifier {
    store: ParameterStore,
}

impl Classifier {
    fn fit(x: &Tensor, labels: &[usize], classes: usize, l2: f64, opts: &ProbeOptions) -> Result<Self, EvalError> {
        let mut store = ParameterStore::new(0);
        let w = store.add_zeros("weight", &[x.shape()[1], classes])?;
        let b = store.add_zeros("bias", &[1, classes])?;
        let targets: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
        let inv = 1.0 / labels.len() as f64;
        for _ in 0..opts.epochs {
            let grads = {
                let mut g = Graph::new(&store);
                let xs = g.input(x.clone());
                let wn = g.param(w);
                let bn = g.param(b);
                let z = g.matmul(xs, wn)?;
                let z = g.add(z, bn)?;
                let lp = g.log_softmax(z)?;
                let nll = g.nll(lp, &targets)?;
                let mut loss = g.scale(nll, inv);
                if l2 > 0.0 {
                    let sq = g.mul(wn, wn)?;
                    let sq = g.sum(sq);
                    let pen = g.scale(sq, 0.5 * l2);
                    loss = g.add(loss, pen)?;
                }
                g.backward(loss)?
            };
            sgd_step(&mut store, &grads, opts.learning_rate)?;
        }
        Ok(Self { store })
    }

    fn predict(&self, x: &Tensor) -> Result<Vec<usize>, EvalError> {
        let mut g = Graph::new(&self.store);
        let xs = g.input(x.clone());
        let w = g.param(self.store.id("weight").expect("weight"));
        let b = g.param(self.store.id("bias").expect("bias"));
        let z = g.matmul(xs, w)?;
        let z = g.add(z, b)?;
        let v = g.value(z);
        Ok((0..x.shape()[0]).map(|r| v.argmax_row(r)).collect())
    }
}

fn accuracy_of(pred: &[usize], gold: &[usize]) -> f64 {
    pred.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / gold.len().max(1) as f64
}

/// Trains one classifier per L2 strength, keeps the one with the best
/// validation accuracy (the smaller strength on ties) and reports its test
/// accuracy. Features are standardized with training statistics.
pub fn probe(splits: &ProbeSplits, opts: &ProbeOptions) -> Result<ProbeResult, EvalError> {
    let ProbeSplits { train, validation, test, .. } = splits;
    for (name, s) in [("probe train split", train), ("probe validation split", validation), ("probe test split", test)] {
        if s.is_empty() {
            return Err(EvalError::Empty(name));
        }
    }
    if opts.l2_grid.is_empty() {
        return Err(EvalError::Empty("l2 grid"));
    }
    let first = train.labels[0];
    if train.labels.iter().all(|&l| l == first) {
        return Err(EvalError::SingleClass);
    }
    let classes = 1 + [train, validation, test].iter().flat_map(|s| s.labels.iter()).max().copied().unwrap_or(0);
    let std = Standardizer::fit(&train.features);
    let (xt, xv, xs) = (std.matrix(&train.features)?, std.matrix(&validation.features)?, std.matrix(&test.features)?);
    let mut grid = Vec::new();
    let mut best: Option<(f64, f64, Classifier)> = None;
    for &l2 in &opts.l2_grid {
        let clf = Classifier::fit(&xt, &train.labels, classes, l2, opts)?;
        let acc = accuracy_of(&clf.predict(&xv)?, &validation.labels);
        grid.push((l2, acc));
        if best.as_ref().is_none_or(|(_, a, _)| acc > *a) {
            best = Some((l2, acc, clf));
        }
    }
    let (l2, validation_accuracy, clf) = best.expect("non-empty grid");
    let test_accuracy = accuracy_of(&clf.predict(&xs)?, &test.labels);
    Ok(ProbeResult { l2, validation_accuracy, test_accuracy, grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(n: usize, seed: u64) -> LabeledFeatures {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = LabeledFeatures::default();
        for i in 0..n {
            let c = i % 2;
            let centre = if c == 0 { -2.0 } else { 2.0 };
            out.push(vec![centre + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], c);
        }
        out
    }

    #[test]
    fn separable_blobs() {
        let splits = ProbeSplits { train: blobs(40, 1), validation: blobs(20, 2), test: blobs(20, 3), classes: vec![] };
        let r = probe(&splits, &ProbeOptions::default()).unwrap();
        assert_eq!(r.test_accuracy, 1.0);
        assert_eq!(r.grid.len(), 5);
    }

    #[test]
    fn identical_features_give_class_prior() {
        let make = |labels: &[usize]| LabeledFeatures {
            features: vec![vec![0.3, -1.0]; labels.len()],
            labels: labels.to_vec(),
        };
        let splits = ProbeSplits {
            train: make(&[0, 0, 0, 1, 1]),
            validation: make(&[0, 1, 0]),
            test: make(&[0, 0, 0, 1]),
            classes: vec![],
        };
        let r = probe(&splits, &ProbeOptions::default()).unwrap();
        assert_eq!(r.test_accuracy, 0.75);
    }

    #[test]
    fn permuted_labels_fall_to_majority_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut make = |n: usize| {
            let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i % 3 == 0)).collect();
            labels.shuffle(&mut rng);
            LabeledFeatures {
                features: (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
                labels,
            }
        };
        let splits = ProbeSplits { train: make(300), validation: make(150), test: make(300), classes: vec![] };
        let majority = splits.test.labels.iter().filter(|&&l| l == 0).count() as f64 / 300.0;
        let r = probe(&splits, &ProbeOptions::default()).unwrap();
        assert!((r.test_accuracy - majority).abs() < 0.08, "{} vs {majority}", r.test_accuracy);
    }

    #[test]
    fn single_class_is_rejected() {
        let one = LabeledFeatures { features: vec![vec![1.0]; 3], labels: vec![2; 3] };
        let splits = ProbeSplits { train: one.clone(), validation: one.clone(), test: one, classes: vec![] };
        assert!(matches!(probe(&splits, &ProbeOptions::default()), Err(EvalError::SingleClass)));
    }

    #[test]
    fn reads_tsv() {
        let text = "train\tpos\t1\t2\ntrain\tneg\t-1\t0\ndev\tpos\t3\t1\ntest\tneg\t0\t0\n";
        let s = ProbeSplits::read_tsv(text.as_bytes()).unwrap();
        assert_eq!(s.classes, ["neg", "pos"]);
        assert_eq!(s.train.labels, [1, 0]);
        assert_eq!(s.validation.features, [vec![3.0, 1.0]]);
        assert!(ProbeSplits::read_tsv("train\tx\tabc\n".as_bytes()).is_err());
    }
}
