//! Dense layers, the dressed hybrid classifier, the classical baseline and
//! minibatch Adam training.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::ConfigDescriptor;
use crate::error::{Error, Result};
use crate::vqc::CircuitSpec;

const LOSS_FLOOR: f64 = 1e-12;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const THETA_INIT_STD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }
}

/// `phi(W x + b)` with `W` stored as `n_out` rows of length `n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseRepr")]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Deserialize)]
struct DenseRepr {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

impl TryFrom<DenseRepr> for DenseLayer {
    type Error = Error;

    fn try_from(r: DenseRepr) -> Result<Self> {
        DenseLayer::new(r.weights, r.bias, r.activation)
    }
}

impl DenseLayer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.len() != bias.len() {
            return Err(Error::dim("bias length", weights.len(), bias.len()));
        }
        let n_in = weights.first().map_or(0, Vec::len);
        if n_in == 0 {
            return Err(Error::Empty("dense layer weights"));
        }
        if let Some(row) = weights.iter().find(|r| r.len() != n_in) {
            return Err(Error::dim("weight row", n_in, row.len()));
        }
        if weights
            .iter()
            .flatten()
            .chain(&bias)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite layer parameter".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Self {
            weights: vec![vec![0.0; n_in]; n_out],
            bias: vec![0.0; n_out],
            activation,
        }
    }

    /// Glorot-uniform weights in `+-sqrt(6 / (n_in + n_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        n_in: usize,
        n_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        Self {
            weights: (0..n_out)
                .map(|_| (0..n_in).map(|_| dist.sample(rng)).collect())
                .collect(),
            bias: vec![0.0; n_out],
            activation,
        }
    }

    pub fn n_in(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn n_out(&self) -> usize {
        self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_in() {
            return Err(Error::dim("dense input", self.n_in(), x.len()));
        }
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let s: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
                self.activation.apply(s + b)
            })
            .collect()
    }

    fn n_params(&self) -> usize {
        self.n_out() * (self.n_in() + 1)
    }

    fn push_params(&self, out: &mut Vec<f64>) {
        for row in &self.weights {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.bias);
    }

    fn load_params(&mut self, p: &[f64]) -> usize {
        let mut k = 0;
        for row in &mut self.weights {
            let n = row.len();
            row.copy_from_slice(&p[k..k + n]);
            k += n;
        }
        let n = self.bias.len();
        self.bias.copy_from_slice(&p[k..k + n]);
        k + n
    }

    /// Accumulates the gradient of a linear map given the upstream gradient
    /// with respect to its pre-activation output.
    fn push_grad(upstream: &[f64], input: &[f64], out: &mut Vec<f64>) {
        for g in upstream {
            out.extend(input.iter().map(|x| g * x));
        }
        out.extend_from_slice(upstream);
    }

    /// `W^T g`.
    fn backprop(&self, upstream: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.n_in()];
        for (row, g) in self.weights.iter().zip(upstream) {
            for (di, w) in d.iter_mut().zip(row) {
                *di += w * g;
            }
        }
        d
    }
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln(max(p[label], 1e-12))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs.get(label).ok_or(Error::LabelOutOfRange {
        label,
        n_classes: probs.len(),
    })?;
    Ok(-p.max(LOSS_FLOOR).ln())
}

/// Index of the largest value; ties go to the lower index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Prediction {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let probs = softmax(&logits);
        Self { logits, probs }
    }

    pub fn class(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Common surface of the trainable models. Parameters are exposed as one
/// flat vector so the optimizer does not care about model structure.
pub trait Classifier: Clone + Send + Sync {
    fn n_in(&self) -> usize;
    fn n_out(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<Prediction>;
    /// Cross-entropy loss and its gradient with respect to [`Self::parameters`].
    fn loss_and_gradient(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)>;
    fn parameters(&self) -> Vec<f64>;
    fn set_parameters(&mut self, params: &[f64]) -> Result<()>;
    fn theta(&self) -> Option<&[f64]> {
        None
    }
}

fn check_label(label: usize, n_out: usize) -> Result<()> {
    if label >= n_out {
        Err(Error::LabelOutOfRange {
            label,
            n_classes: n_out,
        })
    } else {
        Ok(())
    }
}

fn logit_grad(probs: &[f64], label: usize) -> Vec<f64> {
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    g
}

/// Input layer (tanh) -> variational circuit -> output layer (logits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DressedRepr", into = "DressedRepr")]
pub struct DressedNet {
    input: DenseLayer,
    theta: Vec<f64>,
    entanglement: ConfigDescriptor,
    circuit: CircuitSpec,
    output: DenseLayer,
}

#[derive(Serialize, Deserialize)]
struct DressedRepr {
    input: DenseLayer,
    theta: Vec<f64>,
    entanglement: ConfigDescriptor,
    output: DenseLayer,
}

impl TryFrom<DressedRepr> for DressedNet {
    type Error = Error;

    fn try_from(r: DressedRepr) -> Result<Self> {
        DressedNet::new(r.input, r.theta, r.entanglement, r.output)
    }
}

impl From<DressedNet> for DressedRepr {
    fn from(n: DressedNet) -> Self {
        DressedRepr {
            input: n.input,
            theta: n.theta,
            entanglement: n.entanglement,
            output: n.output,
        }
    }
}

impl DressedNet {
    pub fn new(
        input: DenseLayer,
        theta: Vec<f64>,
        entanglement: ConfigDescriptor,
        output: DenseLayer,
    ) -> Result<Self> {
        let circuit = CircuitSpec::new(entanglement.matrix()?)?;
        let n_q = circuit.n_q();
        if input.n_out() != n_q {
            return Err(Error::dim("input layer width", n_q, input.n_out()));
        }
        if theta.len() != n_q {
            return Err(Error::dim("theta length", n_q, theta.len()));
        }
        if output.n_in() != n_q {
            return Err(Error::dim("output layer fan-in", n_q, output.n_in()));
        }
        Ok(Self {
            input,
            theta,
            entanglement,
            circuit,
            output,
        })
    }

    /// Glorot layers, zero biases, `theta ~ N(0, 0.1^2)`.
    pub fn random<R: Rng + ?Sized>(
        n_in: usize,
        n_out: usize,
        entanglement: ConfigDescriptor,
        rng: &mut R,
    ) -> Result<Self> {
        let n_q = entanglement.n_q;
        let input = DenseLayer::glorot(n_in, n_q, Activation::Tanh, rng);
        let normal = Normal::new(0.0, THETA_INIT_STD).expect("positive std");
        let theta = (0..n_q).map(|_| normal.sample(rng)).collect();
        let output = DenseLayer::glorot(n_q, n_out, Activation::Identity, rng);
        Self::new(input, theta, entanglement, output)
    }

    pub fn n_q(&self) -> usize {
        self.circuit.n_q()
    }

    pub fn input(&self) -> &DenseLayer {
        &self.input
    }

    pub fn output(&self) -> &DenseLayer {
        &self.output
    }

    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }

    pub fn entanglement(&self) -> &ConfigDescriptor {
        &self.entanglement
    }
}

impl Classifier for DressedNet {
    fn n_in(&self) -> usize {
        self.input.n_in()
    }

    fn n_out(&self) -> usize {
        self.output.n_out()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let f = self.input.forward(x)?;
        let z = self.circuit.forward(&f, &self.theta)?.z;
        Ok(Prediction::from_logits(self.output.forward_unchecked(&z)))
    }

    fn loss_and_gradient(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        check_label(label, self.n_out())?;
        let f = self.input.forward(x)?;
        let z = self.circuit.forward(&f, &self.theta)?.z;
        let qg = self.circuit.gradients(&f, &self.theta)?;
        let pred = Prediction::from_logits(self.output.forward_unchecked(&z));
        let loss = cross_entropy(&pred.probs, label)?;

        let g_logits = logit_grad(&pred.probs, label);
        let g_z = self.output.backprop(&g_logits);
        let contract = |jac: &[Vec<f64>]| -> Vec<f64> {
            jac.iter()
                .map(|row| row.iter().zip(&g_z).map(|(d, g)| d * g).sum())
                .collect()
        };
        let g_theta = contract(&qg.d_theta);
        let g_pre: Vec<f64> = contract(&qg.d_f)
            .iter()
            .zip(&f)
            .map(|(g, fi)| g * (1.0 - fi * fi))
            .collect();

        let mut grad = Vec::with_capacity(self.parameters_len());
        DenseLayer::push_grad(&g_pre, x, &mut grad);
        grad.extend_from_slice(&g_theta);
        DenseLayer::push_grad(&g_logits, &z, &mut grad);
        Ok((loss, grad))
    }

    fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameters_len());
        self.input.push_params(&mut p);
        p.extend_from_slice(&self.theta);
        self.output.push_params(&mut p);
        p
    }

    fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.parameters_len() {
            return Err(Error::dim(
                "parameter vector",
                self.parameters_len(),
                p.len(),
            ));
        }
        let mut k = self.input.load_params(p);
        let n = self.theta.len();
        self.theta.copy_from_slice(&p[k..k + n]);
        k += n;
        self.output.load_params(&p[k..]);
        Ok(())
    }

    fn theta(&self) -> Option<&[f64]> {
        Some(&self.theta)
    }
}

impl DressedNet {
    fn parameters_len(&self) -> usize {
        self.input.n_params() + self.theta.len() + self.output.n_params()
    }
}

/// The dressed net with the circuit removed: two dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BaselineRepr")]
pub struct ClassicalBaseline {
    input: DenseLayer,
    output: DenseLayer,
}

#[derive(Deserialize)]
struct BaselineRepr {
    input: DenseLayer,
    output: DenseLayer,
}

impl TryFrom<BaselineRepr> for ClassicalBaseline {
    type Error = Error;

    fn try_from(r: BaselineRepr) -> Result<Self> {
        ClassicalBaseline::new(r.input, r.output)
    }
}

impl ClassicalBaseline {
    pub fn new(input: DenseLayer, output: DenseLayer) -> Result<Self> {
        if input.n_out() != output.n_in() {
            return Err(Error::dim("hidden width", input.n_out(), output.n_in()));
        }
        Ok(Self { input, output })
    }

    pub fn random<R: Rng + ?Sized>(n_in: usize, hidden: usize, n_out: usize, rng: &mut R) -> Self {
        Self {
            input: DenseLayer::glorot(n_in, hidden, Activation::Tanh, rng),
            output: DenseLayer::glorot(hidden, n_out, Activation::Identity, rng),
        }
    }

    pub fn input(&self) -> &DenseLayer {
        &self.input
    }

    pub fn output(&self) -> &DenseLayer {
        &self.output
    }
}

impl Classifier for ClassicalBaseline {
    fn n_in(&self) -> usize {
        self.input.n_in()
    }

    fn n_out(&self) -> usize {
        self.output.n_out()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let h = self.input.forward(x)?;
        Ok(Prediction::from_logits(self.output.forward_unchecked(&h)))
    }

    fn loss_and_gradient(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        check_label(label, self.n_out())?;
        let h = self.input.forward(x)?;
        let pred = Prediction::from_logits(self.output.forward_unchecked(&h));
        let loss = cross_entropy(&pred.probs, label)?;
        let g_logits = logit_grad(&pred.probs, label);
        let g_pre: Vec<f64> = self
            .output
            .backprop(&g_logits)
            .iter()
            .zip(&h)
            .map(|(g, hi)| g * (1.0 - hi * hi))
            .collect();
        let mut grad = Vec::with_capacity(self.input.n_params() + self.output.n_params());
        DenseLayer::push_grad(&g_pre, x, &mut grad);
        DenseLayer::push_grad(&g_logits, &h, &mut grad);
        Ok((loss, grad))
    }

    fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::new();
        self.input.push_params(&mut p);
        self.output.push_params(&mut p);
        p
    }

    fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        let n = self.input.n_params() + self.output.n_params();
        if p.len() != n {
            return Err(Error::dim("parameter vector", n, p.len()));
        }
        let k = self.input.load_params(p);
        self.output.load_params(&p[k..]);
        Ok(())
    }
}

/// Either kind of model, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Dressed(DressedNet),
    Baseline(ClassicalBaseline),
}

impl Classifier for Model {
    fn n_in(&self) -> usize {
        match self {
            Model::Dressed(m) => m.n_in(),
            Model::Baseline(m) => m.n_in(),
        }
    }

    fn n_out(&self) -> usize {
        match self {
            Model::Dressed(m) => m.n_out(),
            Model::Baseline(m) => m.n_out(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            Model::Dressed(m) => m.predict(x),
            Model::Baseline(m) => m.predict(x),
        }
    }

    fn loss_and_gradient(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        match self {
            Model::Dressed(m) => m.loss_and_gradient(x, label),
            Model::Baseline(m) => m.loss_and_gradient(x, label),
        }
    }

    fn parameters(&self) -> Vec<f64> {
        match self {
            Model::Dressed(m) => m.parameters(),
            Model::Baseline(m) => m.parameters(),
        }
    }

    fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        match self {
            Model::Dressed(m) => m.set_parameters(p),
            Model::Baseline(m) => m.set_parameters(p),
        }
    }

    fn theta(&self) -> Option<&[f64]> {
        match self {
            Model::Dressed(m) => m.theta(),
            Model::Baseline(_) => None,
        }
    }
}

/// Feature rows with integer class labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl LabeledSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::dim("label count", x.len(), y.len()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay_gamma: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 70,
            learning_rate: 0.00043,
            decay_gamma: 0.6,
            decay_every: 10,
            batch_size: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.decay_gamma > 0.0 && self.decay_gamma <= 1.0) {
            return bad("decay_gamma must be in (0, 1]");
        }
        if self.decay_every == 0 {
            return bad("decay_every must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        Ok(())
    }

    /// Step-decayed rate for 0-based `epoch`.
    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay_gamma.powi((epoch / self.decay_every) as i32)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub learning_rate: Vec<f64>,
    /// `theta` at the end of every epoch; empty for classical models.
    pub theta: Vec<Vec<f64>>,
    /// 0-based epoch whose weights were kept.
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub history: History,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// RNG used for minibatch shuffling. Stream 2 of the run seed, so it never
/// overlaps the initialization stream handed to model constructors.
pub fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

/// RNG used for model initialization (stream 1 of the run seed).
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn check_set<M: Classifier>(model: &M, set: &LabeledSet, what: &'static str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::Empty(what));
    }
    for (x, &y) in set.x.iter().zip(&set.y) {
        if x.len() != model.n_in() {
            return Err(Error::dim("feature width", model.n_in(), x.len()));
        }
        check_label(y, model.n_out())?;
    }
    Ok(())
}

/// Minibatch Adam on mean cross-entropy with a staircase learning-rate decay.
/// Returns the weights of the epoch with the best validation accuracy
/// (earliest on ties).
pub fn train<M: Classifier>(
    mut model: M,
    train_set: &LabeledSet,
    val_set: &LabeledSet,
    cfg: &TrainConfig,
) -> Result<Trained<M>> {
    cfg.check()?;
    check_set(&model, train_set, "training split")?;
    check_set(&model, val_set, "validation split")?;

    let mut rng = shuffle_rng(cfg.seed);
    let mut params = model.parameters();
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 0..cfg.epochs {
        let lr = cfg.rate_at(epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let per_sample = batch
                .par_iter()
                .map(|&i| model.loss_and_gradient(&train_set.x[i], train_set.y[i]))
                .collect::<Result<Vec<_>>>()?;
            let scale = 1.0 / batch.len() as f64;
            let mut grad = vec![0.0; params.len()];
            for (loss, g) in &per_sample {
                epoch_loss += loss;
                for (acc, gi) in grad.iter_mut().zip(g) {
                    *acc += gi * scale;
                }
            }
            adam.step(&mut params, &grad, lr);
            model.set_parameters(&params)?;
        }
        epoch_loss /= train_set.len() as f64;
        if !epoch_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }

        let train_acc = evaluate(&model, train_set)?;
        let val_acc = evaluate(&model, val_set)?;
        history.train_loss.push(epoch_loss);
        history.train_accuracy.push(train_acc);
        history.val_accuracy.push(val_acc);
        history.learning_rate.push(lr);
        if let Some(theta) = model.theta() {
            history.theta.push(theta.to_vec());
        }
        if best.as_ref().is_none_or(|(acc, _)| val_acc > *acc) {
            best = Some((val_acc, params.clone()));
            history.best_epoch = epoch;
        }
    }

    if let Some((_, p)) = best {
        model.set_parameters(&p)?;
    }
    Ok(Trained { model, history })
}

pub fn predict_all<M: Classifier>(model: &M, set: &LabeledSet) -> Result<Vec<Prediction>> {
    set.x.par_iter().map(|x| model.predict(x)).collect()
}

/// Fraction of rows whose argmax class equals the label.
pub fn evaluate<M: Classifier>(model: &M, set: &LabeledSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    let preds = predict_all(model, set)?;
    let correct = preds
        .iter()
        .zip(&set.y)
        .filter(|(p, &y)| p.class() == y)
        .count();
    Ok(correct as f64 / set.len() as f64)
}
