//! Single-hidden-layer built-up classifier with weight decay, stratified
//! k-fold cross validation and grid search over (hidden units, lambda).

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::{Dataset, Label};
use crate::math;
use crate::nn::{Activation, LayerSpec, Mlp, TrainConfig};
use crate::rng::{derive_indexed, derive_seed, rng_from_seed};
use crate::stats::{ConfusionMatrix, EvalReport};
use crate::{Error, Result};

/// A feature row with its class.
pub type Example = (Vec<f64>, Label);

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ClassifierConfig {
    pub hidden_units_grid: Vec<usize>,
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    /// `weight_decay_lambda` is ignored here; lambda comes from the grid.
    pub train: TrainConfig,
}

/// Large enough that every training set in the protocol is one batch.
pub const FULL_BATCH: usize = 4096;

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden_units_grid: vec![1, 2, 3, 4, 5],
            lambda_grid: vec![0.1, 0.2, 0.3, 0.4],
            folds: 10,
            train: TrainConfig {
                learning_rate: 0.05,
                batch_size: FULL_BATCH,
                epochs: 2000,
                weight_decay_lambda: 0.0,
                seed: 0,
            },
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::Config("grid search needs non-empty grids".to_string()));
        }
        if self.hidden_units_grid.contains(&0) {
            return Err(Error::Config("hidden units must be >= 1".to_string()));
        }
        if self.lambda_grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::Config("lambda values must be finite and >= 0".to_string()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        self.train.validate()
    }

    /// Every `(hidden_units, lambda)` pair in grid order.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.hidden_units_grid
            .iter()
            .flat_map(|&h| self.lambda_grid.iter().map(move |&l| (h, l)))
            .collect()
    }
}

/// Cross-validated accuracy of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridCell {
    pub hidden_units: usize,
    pub lambda: f64,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: Mlp,
    pub chosen_hidden_units: usize,
    pub chosen_lambda: f64,
    pub cv_accuracy: f64,
    pub cells: Vec<GridCell>,
}

/// `dim -> hidden (sigmoid) -> 1 (sigmoid)`.
pub fn architecture(dim: usize, hidden_units: usize) -> [LayerSpec; 2] {
    [
        LayerSpec::new(dim, hidden_units, Activation::Sigmoid),
        LayerSpec::new(hidden_units, 1, Activation::Sigmoid),
    ]
}

/// Network output is the probability of BuiltUp.
fn target(label: Label) -> f64 {
    match label {
        Label::BuiltUp => 1.0,
        Label::NonBuiltUp => 0.0,
    }
}

fn feature_dim(data: &[Example]) -> Result<usize> {
    let dim = data
        .first()
        .map(|(x, _)| x.len())
        .ok_or_else(|| Error::Data("no training examples".to_string()))?;
    if let Some((x, _)) = data.iter().find(|(x, _)| x.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            got: x.len(),
        });
    }
    Ok(dim)
}

fn require_both_classes<'a, I: IntoIterator<Item = &'a Label>>(labels: I) -> Result<()> {
    let (mut pos, mut neg) = (false, false);
    for l in labels {
        match l {
            Label::BuiltUp => pos = true,
            Label::NonBuiltUp => neg = true,
        }
    }
    if pos && neg {
        Ok(())
    } else {
        Err(Error::Data("data must contain both classes".to_string()))
    }
}

/// Trains one network by gradient descent on the summed cross-entropy plus
/// `lambda * sum(w^2)` (biases are not decayed).
///
/// Each step descends the mean cross-entropy of its batch plus
/// `(lambda / n) * sum(w^2)`, which for full batches is the objective above
/// divided by the training-set size `n`.
pub fn fit(
    data: &[Example],
    hidden_units: usize,
    lambda: f64,
    train: &TrainConfig,
    seed: u64,
) -> Result<Mlp> {
    let dim = feature_dim(data)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Argument(format!("weight decay must be finite and >= 0, got {lambda}")));
    }
    let mut net = Mlp::init_seeded(&architecture(dim, hidden_units), seed)?;
    let mut params = Shallow::from_mlp(&net, dim);
    let xs: Vec<f64> = data.iter().flat_map(|(x, _)| x.iter().copied()).collect();
    let ts: Vec<f64> = data.iter().map(|(_, l)| target(*l)).collect();
    let decay = lambda / data.len() as f64;
    let mut grads = params.zeros();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = rng_from_seed(derive_seed(seed, "fit/batches"));
    let batch = train.batch_size.max(1);
    for epoch in 0..train.epochs {
        if batch < data.len() {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            params.gradient(&xs, &ts, chunk, decay, &mut grads);
            params.step(&grads, train.learning_rate);
            if !params.is_finite() {
                return Err(Error::Numeric(format!("epoch {epoch}: non-finite weights")));
            }
        }
    }
    params.store(&mut net);
    Ok(net)
}

/// Flat parameters of a `dim -> hidden (sigmoid) -> 1 (sigmoid)` network.
#[derive(Debug, Clone, PartialEq)]
struct Shallow {
    dim: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Shallow {
    fn from_mlp(net: &Mlp, dim: usize) -> Self {
        let [hidden, out] = net.layers() else {
            unreachable!("classifier networks have two layers")
        };
        Shallow {
            dim,
            w1: hidden.weights().to_vec(),
            b1: hidden.biases().to_vec(),
            w2: out.weights().to_vec(),
            b2: out.biases()[0],
        }
    }

    fn store(&self, net: &mut Mlp) {
        let layers = net.layers_mut();
        layers[0].weights_mut().copy_from_slice(&self.w1);
        layers[0].biases_mut().copy_from_slice(&self.b1);
        layers[1].weights_mut().copy_from_slice(&self.w2);
        layers[1].biases_mut()[0] = self.b2;
    }

    fn zeros(&self) -> Self {
        Shallow {
            dim: self.dim,
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: 0.0,
        }
    }

    /// Mean cross-entropy gradient over `rows` plus the decay term.
    fn gradient(&self, xs: &[f64], ts: &[f64], rows: &[usize], decay: f64, g: &mut Shallow) {
        let dim = self.dim;
        let hidden = self.b1.len();
        g.w1.iter_mut().for_each(|v| *v = 0.0);
        g.b1.iter_mut().for_each(|v| *v = 0.0);
        g.w2.iter_mut().for_each(|v| *v = 0.0);
        g.b2 = 0.0;
        let mut a = vec![0.0; hidden];
        for &i in rows {
            let x = &xs[i * dim..(i + 1) * dim];
            let mut z2 = self.b2;
            for j in 0..hidden {
                let row = &self.w1[j * dim..(j + 1) * dim];
                let z = row.iter().zip(x).fold(self.b1[j], |acc, (w, v)| acc + w * v);
                a[j] = math::sigmoid(z);
                z2 += self.w2[j] * a[j];
            }
            let d = math::sigmoid(z2) - ts[i];
            g.b2 += d;
            for j in 0..hidden {
                g.w2[j] += d * a[j];
                let dj = d * self.w2[j] * a[j] * (1.0 - a[j]);
                g.b1[j] += dj;
                for (gw, v) in g.w1[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                    *gw += dj * v;
                }
            }
        }
        let inv = 1.0 / rows.len() as f64;
        for (gw, w) in g.w1.iter_mut().zip(&self.w1) {
            *gw = *gw * inv + 2.0 * decay * w;
        }
        for (gw, w) in g.w2.iter_mut().zip(&self.w2) {
            *gw = *gw * inv + 2.0 * decay * w;
        }
        g.b1.iter_mut().for_each(|v| *v *= inv);
        g.b2 *= inv;
    }

    fn step(&mut self, g: &Shallow, lr: f64) {
        for (w, d) in self.w1.iter_mut().zip(&g.w1).chain(self.w2.iter_mut().zip(&g.w2)) {
            *w -= lr * d;
        }
        for (b, d) in self.b1.iter_mut().zip(&g.b1) {
            *b -= lr * d;
        }
        self.b2 -= lr * g.b2;
    }

    fn is_finite(&self) -> bool {
        self.b2.is_finite() && self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite())
    }
}

/// Fold index for every example, stratified by class.
///
/// Each class is shuffled and dealt round-robin; the dealing position
/// carries over from one class to the next so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > labels.len() {
        return Err(Error::Config(format!(
            "folds must be in [2, {}], got {folds}",
            labels.len()
        )));
    }
    require_both_classes(labels)?;
    let mut rng = rng_from_seed(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut dealt = 0usize;
    for class in [Label::BuiltUp, Label::NonBuiltUp] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = dealt % folds;
            dealt += 1;
        }
    }
    Ok(assignment)
}

/// Mean held-out accuracy over stratified folds.
pub fn cross_validate(
    data: &[Example],
    hidden_units: usize,
    lambda: f64,
    folds: usize,
    train: &TrainConfig,
) -> Result<f64> {
    let labels: Vec<Label> = data.iter().map(|(_, l)| *l).collect();
    let assignment = stratified_folds(&labels, folds, derive_seed(train.seed, "cv/folds"))?;
    let init = derive_seed(train.seed, "cv/init");
    let mut total = 0.0;
    for fold in 0..folds {
        let (held, kept): (Vec<_>, Vec<_>) = data
            .iter()
            .zip(&assignment)
            .partition(|(_, &f)| f == fold);
        let kept: Vec<Example> = kept.into_iter().map(|(e, _)| e.clone()).collect();
        let model = fit(&kept, hidden_units, lambda, train, derive_indexed(init, fold as u64))?;
        let mut correct = 0usize;
        for ((x, label), _) in &held {
            if predict_one(&model, x, 0.5)?.0 == *label {
                correct += 1;
            }
        }
        total += correct as f64 / held.len() as f64;
    }
    Ok(total / folds as f64)
}

/// Highest cv accuracy; ties go to fewer hidden units, then larger lambda.
pub fn select_best(cells: &[GridCell]) -> Option<GridCell> {
    cells.iter().copied().reduce(|best, c| {
        let better = c.cv_accuracy > best.cv_accuracy
            || (c.cv_accuracy == best.cv_accuracy
                && (c.hidden_units < best.hidden_units
                    || (c.hidden_units == best.hidden_units && c.lambda > best.lambda)));
        if better {
            c
        } else {
            best
        }
    })
}

/// Refits the chosen cell on the whole training set.
pub fn refit(data: &[Example], config: &ClassifierConfig, cells: Vec<GridCell>) -> Result<FitResult> {
    let best = select_best(&cells).ok_or_else(|| Error::Config("empty grid".to_string()))?;
    let model = fit(
        data,
        best.hidden_units,
        best.lambda,
        &config.train,
        derive_seed(config.train.seed, "refit"),
    )?;
    Ok(FitResult {
        model,
        chosen_hidden_units: best.hidden_units,
        chosen_lambda: best.lambda,
        cv_accuracy: best.cv_accuracy,
        cells,
    })
}

/// Cross-validates one grid cell.
pub fn evaluate_cell(
    data: &[Example],
    config: &ClassifierConfig,
    hidden_units: usize,
    lambda: f64,
) -> Result<GridCell> {
    Ok(GridCell {
        hidden_units,
        lambda,
        cv_accuracy: cross_validate(data, hidden_units, lambda, config.folds, &config.train)?,
    })
}

pub fn grid_search(data: &[Example], config: &ClassifierConfig) -> Result<FitResult> {
    config.validate()?;
    let cells = config
        .cells()
        .into_iter()
        .map(|(h, l)| evaluate_cell(data, config, h, l))
        .collect::<Result<Vec<_>>>()?;
    refit(data, config, cells)
}

/// Label (BuiltUp iff probability >= threshold) and probability of BuiltUp.
pub fn predict_one(model: &Mlp, x: &[f64], threshold: f64) -> Result<(Label, f64)> {
    let p = model.forward(x)?[0];
    let label = if p >= threshold {
        Label::BuiltUp
    } else {
        Label::NonBuiltUp
    };
    Ok((label, p))
}

pub fn predict<R: AsRef<[f64]>>(model: &Mlp, rows: &[R], threshold: f64) -> Result<Vec<(Label, f64)>> {
    rows.iter()
        .map(|r| predict_one(model, r.as_ref(), threshold))
        .collect()
}

/// Confusion matrix against `test` with `positive_label` as the positive
/// class, and every metric derived from it.
pub fn evaluate(
    model: &Mlp,
    test: &[Example],
    threshold: f64,
    positive_label: Label,
) -> Result<EvalReport> {
    require_both_classes(test.iter().map(|(_, l)| l))?;
    let pairs = test
        .iter()
        .map(|(x, truth)| predict_one(model, x, threshold).map(|(pred, _)| (*truth, pred)))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_confusion(ConfusionMatrix::from_labels(pairs, positive_label))
}

/// `(bands, label)` pairs of a labeled dataset; unlabeled samples are an error.
pub fn examples(dataset: &Dataset) -> Result<Vec<Example>> {
    dataset
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.label
                .map(|l| (s.bands.to_vec(), l))
                .ok_or_else(|| Error::Data(format!("sample {i} has no label")))
        })
        .collect()
}
